//! Quantum Fisher information with respect to the coupling `g`.
//!
//! Two trajectories are integrated at `g + delta/2` and `g - delta/2`. At each
//! output time the derivative is the central difference `(rho+ - rho-)/delta`
//! and the midpoint `(rho+ + rho-)/2` is diagonalized block by block:
//!
//! ```text
//! F = 2 sum_{a,b} |<a| d_g rho |b>|^2 / (lambda_a + lambda_b)
//! ```
//!
//! Eigenvalues below `10 |min lambda|` are zeroed first (only when the spectrum
//! has a negative tail) and pairs with `lambda_a + lambda_b <= 1e-8` are skipped.
//! Degeneracy factors of the collective basis cancel in the sum, so the value
//! equals the QFI of the full permutation-invariant state.
//!
//! Blocks are diagonalized through their real symmetric embedding (see
//! [`crate::blocks::hermitian_frame`]); the doubled eigenvectors are summed over
//! and the result divided by four.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::blocks::{hermitian_frame, BlockPlan, MatrixStructure};
use crate::error::{Error, Result};
use crate::evolve::{check_times, diagonal_slots, min_eigenvalue, trace_of, DensityState};
use crate::integrator::{Dop853, IntegratorConfig};
use crate::operators::{assemble_rhs, dimensionless_rescale, SimParams};
use crate::probes::ProbeSpec;
use crate::superop::SuperOp;

/// Finite-difference step and eigenvalue thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiConfig {
    /// Central-difference step in `g`.
    pub delta: f64,
    /// Eigenvalues below `err_multiplier * |min eigenvalue|` are set to zero.
    pub err_multiplier: f64,
    /// Pairs with `lambda_a + lambda_b` at or below this are skipped.
    pub pair_floor: f64,
}

impl Default for QfiConfig {
    fn default() -> Self {
        QfiConfig { delta: 1e-3, err_multiplier: 10.0, pair_floor: 1e-8 }
    }
}

impl QfiConfig {
    pub fn with_delta(delta: f64) -> Self {
        QfiConfig { delta, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.delta > 0.0
            && self.delta.is_finite()
            && self.err_multiplier >= 0.0
            && self.pair_floor >= 0.0;
        if !ok {
            return Err(Error::InvalidParameter(format!("QFI config {self:?}")));
        }
        Ok(())
    }
}

/// QFI value together with the smallest eigenvalue of the midpoint state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiEval {
    pub value: f64,
    pub min_eigenvalue: f64,
}

/// QFI from support-local values of `rho+` and `rho-` laid out according to `plan`.
pub fn qfi_from_plan(
    plan: &BlockPlan,
    plus: &[Complex64],
    minus: &[Complex64],
    cfg: &QfiConfig,
) -> Result<QfiEval> {
    let half = Complex64::new(0.5, 0.0);
    let inv = Complex64::new(1.0 / cfg.delta, 0.0);
    let mut spectra = Vec::with_capacity(plan.blocks.len());
    let mut min = f64::INFINITY;
    for block in &plan.blocks {
        let mid = block.gather_with(|s| (plus[s] + minus[s]) * half);
        let eig = hermitian_frame(&mid);
        let (vals, vecs) = (eig.values, eig.frame);
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("eigenvalue of the midpoint state".into()));
        }
        min = vals.iter().copied().fold(min, f64::min);
        spectra.push((vals, vecs));
    }
    let eps = if min < 0.0 { -min } else { 0.0 };
    let cut = cfg.err_multiplier * eps;
    let mut f = 0.0;
    for (block, (vals, vecs)) in plan.blocks.iter().zip(spectra) {
        let lam: Vec<f64> = vals.iter().map(|&v| if v < cut { 0.0 } else { v }).collect();
        if lam.iter().all(|&v| v == 0.0) {
            continue;
        }
        let d = block.gather_with(|s| (plus[s] - minus[s]) * inv);
        let rot = vecs.adjoint() * d * &vecs;
        for a in 0..lam.len() {
            for b in 0..lam.len() {
                let s = lam[a] + lam[b];
                if s > cfg.pair_floor {
                    f += 2.0 * rot[(a, b)].norm_sqr() / s;
                }
            }
        }
    }
    // the frame counts every eigenvector twice on each side
    let f = f / 4.0;
    if !f.is_finite() {
        return Err(Error::NonFinite("QFI sum".into()));
    }
    Ok(QfiEval { value: f, min_eigenvalue: if plan.blocks.is_empty() { 0.0 } else { min } })
}

/// QFI from two states evaluated at `g + delta/2` and `g - delta/2`.
pub fn qfi_at(rho_plus: &DensityState, rho_minus: &DensityState, cfg: &QfiConfig) -> Result<f64> {
    cfg.validate()?;
    if rho_plus.layout() != rho_minus.layout() {
        return Err(Error::LayoutMismatch);
    }
    let mut support = rho_plus.support();
    support.extend(rho_minus.support());
    support.sort_unstable();
    support.dedup();
    let plan = BlockPlan::new(rho_plus.layout().as_ref(), &support);
    let gather = |s: &DensityState| -> Vec<Complex64> { support.iter().map(|&g| s.as_slice()[g]).collect() };
    Ok(qfi_from_plan(&plan, &gather(rho_plus), &gather(rho_minus), cfg)?.value)
}

/// Invariant checks accumulated along a trajectory pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// Largest `|tr rho(t) - tr rho(0)|` over both trajectories.
    pub max_trace_drift: f64,
    /// Largest Hermiticity residual over both trajectories.
    pub max_hermiticity: f64,
    /// Smallest eigenvalue seen (midpoint state, plus both trajectories when tracked).
    pub min_eigenvalue: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            max_trace_drift: 0.0,
            max_hermiticity: 0.0,
            min_eigenvalue: f64::INFINITY,
            accepted_steps: 0,
            rejected_steps: 0,
        }
    }
}

impl Diagnostics {
    pub fn merge(&mut self, other: &Diagnostics) {
        self.max_trace_drift = self.max_trace_drift.max(other.max_trace_drift);
        self.max_hermiticity = self.max_hermiticity.max(other.max_hermiticity);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.accepted_steps += other.accepted_steps;
        self.rejected_steps += other.rejected_steps;
    }
}

/// State of both trajectories at one time, enough to restart integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
    /// Step size to resume with.
    pub step: f64,
}

/// A trajectory pair at `g +- delta/2` advanced in lockstep, on the component
/// set reachable from the initial state.
pub struct QfiPipeline {
    ops: [Arc<SuperOp>; 2],
    support: Vec<usize>,
    plan: BlockPlan,
    diagonal: Vec<usize>,
    conj: Vec<u32>,
    trace0: Complex64,
    steppers: [Dop853<Arc<SuperOp>>; 2],
    qfi: QfiConfig,
    integrator: IntegratorConfig,
    track_eigenvalues: bool,
    diagnostics: Diagnostics,
    // step counts of replaced steppers, minus counts present at the last reset
    retired: [isize; 2],
}

impl QfiPipeline {
    /// Builds the pair from full generators at `g + delta/2` and `g - delta/2`
    /// and a full initial vector laid out according to `structure`.
    pub fn new<S: MatrixStructure + ?Sized>(
        structure: &S,
        plus_op: &SuperOp,
        minus_op: &SuperOp,
        rho0: &[Complex64],
        qfi: QfiConfig,
        integrator: IntegratorConfig,
    ) -> Result<Self> {
        qfi.validate()?;
        integrator.validate()?;
        let n = structure.components();
        if plus_op.dim() != n || minus_op.dim() != n || rho0.len() != n {
            return Err(Error::LayoutMismatch);
        }
        let seeds: Vec<usize> =
            (0..n).filter(|&i| rho0[i] != Complex64::new(0.0, 0.0)).collect();
        let mut support = plus_op.reachable(&seeds);
        support.extend(minus_op.reachable(&seeds));
        support.sort_unstable();
        support.dedup();
        let mut local = alloc::collections::BTreeMap::new();
        for (p, &g) in support.iter().enumerate() {
            local.insert(g, p as u32);
        }
        let conj = support
            .iter()
            .map(|&g| local.get(&structure.conjugate(g)).copied().unwrap_or(u32::MAX))
            .collect();
        let plan = BlockPlan::new(structure, &support);
        let diagonal = diagonal_slots(structure, &support);
        let y0: Vec<Complex64> = support.iter().map(|&g| rho0[g]).collect();
        let trace0 = trace_of(&y0, &diagonal);
        let ops = [Arc::new(plus_op.restrict(&support)), Arc::new(minus_op.restrict(&support))];
        let steppers = [
            Dop853::new(ops[0].clone(), 0.0, y0.clone(), integrator)?,
            Dop853::new(ops[1].clone(), 0.0, y0, integrator)?,
        ];
        Ok(QfiPipeline {
            ops,
            support,
            plan,
            diagonal,
            conj,
            trace0,
            steppers,
            qfi,
            integrator,
            track_eigenvalues: false,
            diagnostics: Diagnostics::default(),
            retired: [0, 0],
        })
    }

    /// Pair for a probe in the symmetric basis at the given (possibly dimensionful) parameters.
    pub fn for_probe(
        probe: &ProbeSpec,
        params: &SimParams,
        qfi: QfiConfig,
        integrator: IntegratorConfig,
    ) -> Result<Self> {
        params.validate()?;
        qfi.validate()?;
        if params.qubits != probe.qubits {
            return Err(Error::InvalidParameter(format!(
                "probe has N = {} but parameters have N = {}",
                probe.qubits, params.qubits
            )));
        }
        if params.g - qfi.delta / 2.0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "g - delta/2 must be >= 0 (g = {}, delta = {})",
                params.g, qfi.delta
            )));
        }
        let rho0 = probe.state()?;
        let layout = rho0.layout().clone();
        let plus = assemble_rhs(&params.with_g(params.g + qfi.delta / 2.0), &layout)?;
        let minus = assemble_rhs(&params.with_g(params.g - qfi.delta / 2.0), &layout)?;
        QfiPipeline::new(layout.as_ref(), &plus, &minus, rho0.as_slice(), qfi, integrator)
    }

    /// Also track the smallest eigenvalue of each trajectory (roughly triples eigen work).
    pub fn track_eigenvalues(mut self, on: bool) -> Self {
        self.track_eigenvalues = on;
        self
    }

    pub fn t(&self) -> f64 {
        self.steppers[0].t()
    }

    /// Global component indices integrated by the pair.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn plan(&self) -> &BlockPlan {
        &self.plan
    }

    /// Support-local values of `rho+` and `rho-`.
    pub fn states(&self) -> (&[Complex64], &[Complex64]) {
        (self.steppers[0].y(), self.steppers[1].y())
    }

    fn step_counts(&self) -> [isize; 2] {
        [
            self.steppers.iter().map(|s| s.accepted_steps() as isize).sum(),
            self.steppers.iter().map(|s| s.rejected_steps() as isize).sum(),
        ]
    }

    /// Diagnostics accumulated since construction or the last reset.
    pub fn diagnostics(&self) -> Diagnostics {
        let mut d = self.diagnostics;
        let c = self.step_counts();
        d.accepted_steps = (self.retired[0] + c[0]) as usize;
        d.rejected_steps = (self.retired[1] + c[1]) as usize;
        d
    }

    pub fn reset_diagnostics(&mut self) {
        self.diagnostics = Diagnostics::default();
        let c = self.step_counts();
        self.retired = [-c[0], -c[1]];
    }

    /// Integrates both trajectories to `t` and returns the QFI there.
    pub fn advance_to(&mut self, t: f64) -> Result<f64> {
        for s in &mut self.steppers {
            s.advance_to(t)?;
        }
        self.check_invariants()?;
        self.qfi_now()
    }

    /// QFI at the current time.
    pub fn qfi_now(&mut self) -> Result<f64> {
        let (p, m) = self.states();
        let eval = qfi_from_plan(&self.plan, p, m, &self.qfi)?;
        self.diagnostics.min_eigenvalue = self.diagnostics.min_eigenvalue.min(eval.min_eigenvalue);
        Ok(eval.value)
    }

    fn check_invariants(&mut self) -> Result<()> {
        let t = self.t();
        let limit = 100.0 * self.integrator.rtol.max(self.integrator.atol);
        for s in &self.steppers {
            let y = s.y();
            let drift = (trace_of(y, &self.diagonal) - self.trace0).norm();
            if !(drift <= limit) {
                return Err(Error::InvariantViolation { t, what: format!("trace drift {drift:e}") });
            }
            let herm = self
                .conj
                .iter()
                .enumerate()
                .map(|(p, &c)| {
                    let other = if c == u32::MAX { Complex64::new(0.0, 0.0) } else { y[c as usize] };
                    (y[p] - other.conj()).norm()
                })
                .fold(0.0, f64::max);
            self.diagnostics.max_trace_drift = self.diagnostics.max_trace_drift.max(drift);
            self.diagnostics.max_hermiticity = self.diagnostics.max_hermiticity.max(herm);
            if self.track_eigenvalues {
                let min = min_eigenvalue(&self.plan, y);
                self.diagnostics.min_eigenvalue = self.diagnostics.min_eigenvalue.min(min);
            }
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let (p, m) = self.states();
        Checkpoint {
            t: self.t(),
            plus: p.to_vec(),
            minus: m.to_vec(),
            step: self.steppers[0].step_size().min(self.steppers[1].step_size()),
        }
    }

    /// Restarts both trajectories from a checkpoint taken on this pipeline.
    pub fn restore(&mut self, cp: &Checkpoint) -> Result<()> {
        if cp.plus.len() != self.support.len() || cp.minus.len() != self.support.len() {
            return Err(Error::LayoutMismatch);
        }
        let cfg = IntegratorConfig { initial_step: Some(cp.step), ..self.integrator };
        let c = self.step_counts();
        self.retired = [self.retired[0] + c[0], self.retired[1] + c[1]];
        self.steppers = [
            Dop853::new(self.ops[0].clone(), cp.t, cp.plus.clone(), cfg)?,
            Dop853::new(self.ops[1].clone(), cp.t, cp.minus.clone(), cfg)?,
        ];
        Ok(())
    }
}

/// QFI time series on a grid of dimensionless times `gt`.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiSeries {
    pub probe: Option<ProbeSpec>,
    pub params: Option<SimParams>,
    /// Dimensionless times `gt`.
    pub times: Vec<f64>,
    /// `F(g, t)`.
    pub f: Vec<f64>,
    /// `F g^2`, the dimensionless QFI.
    pub f_scaled: Vec<f64>,
    /// `F / t`, stored as 0 at `t = 0`.
    pub f_over_t: Vec<f64>,
    /// Grid argmax of `f_scaled`.
    pub peak_time: f64,
    pub peak_value: f64,
}

impl QfiSeries {
    /// Builds a series from the dimensionless QFI `F g^2` sampled at times `gt`.
    pub fn from_scaled(times: Vec<f64>, f_scaled: Vec<f64>, g: f64) -> Result<Self> {
        if times.len() != f_scaled.len() || times.is_empty() {
            return Err(Error::InvalidParameter("series length mismatch".into()));
        }
        if !(g > 0.0) {
            return Err(Error::InvalidParameter(format!("g = {g} must be > 0")));
        }
        let f = f_scaled.iter().map(|v| v / (g * g)).collect();
        let f_over_t = times
            .iter()
            .zip(&f_scaled)
            .map(|(&gt, &v)| if gt > 0.0 { v / (g * gt) } else { 0.0 })
            .collect();
        let (peak_index, _) = f_scaled
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        Ok(QfiSeries {
            probe: None,
            params: None,
            peak_time: times[peak_index],
            peak_value: f_scaled[peak_index],
            times,
            f,
            f_scaled,
            f_over_t,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Runs a pipeline over `times` and returns the QFI at each point.
pub fn sample_pipeline(pipeline: &mut QfiPipeline, times: &[f64]) -> Result<Vec<f64>> {
    check_times(times)?;
    times.iter().map(|&t| pipeline.advance_to(t)).collect()
}

/// QFI series in dimensionless form: the parameters are rescaled to `g = 1`,
/// `times` are `gt`, and `delta` is a step in `g/g`.
pub fn qfi_series(
    probe: &ProbeSpec,
    params: &SimParams,
    times: &[f64],
    qfi: &QfiConfig,
    integrator: &IntegratorConfig,
) -> Result<QfiSeries> {
    let scaled = dimensionless_rescale(params)?;
    let mut pipeline = QfiPipeline::for_probe(probe, &scaled, *qfi, *integrator)?;
    let values = sample_pipeline(&mut pipeline, times)?;
    let mut series = QfiSeries::from_scaled(times.to_vec(), values, params.g)?;
    series.probe = Some(*probe);
    series.params = Some(*params);
    Ok(series)
}

/// QFI series integrated directly at the given coupling, with physical times
/// `t` and a finite-difference step `delta` in units of `g`. The returned
/// series stores `gt` like [`qfi_series`].
pub fn qfi_series_physical(
    probe: &ProbeSpec,
    params: &SimParams,
    times: &[f64],
    qfi: &QfiConfig,
    integrator: &IntegratorConfig,
) -> Result<QfiSeries> {
    if !(params.g > 0.0) {
        return Err(Error::InvalidParameter(format!("g = {} must be > 0", params.g)));
    }
    let mut pipeline = QfiPipeline::for_probe(probe, params, *qfi, *integrator)?;
    let values = sample_pipeline(&mut pipeline, times)?;
    let g = params.g;
    let scaled: Vec<f64> = values.iter().map(|f| f * g * g).collect();
    let mut series = QfiSeries::from_scaled(times.iter().map(|t| t * g).collect(), scaled, g)?;
    series.probe = Some(*probe);
    series.params = Some(*params);
    Ok(series)
}
