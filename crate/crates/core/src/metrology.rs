//! Time-optimized QFI, power-law fits and parameter scans.
//!
//! All scans run in dimensionless units (`g = 1`, times `gt`, rates `kappa/g`,
//! `gamma/g`), so reported QFI values are `F g^2`.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::fisher::{Checkpoint, Diagnostics, QfiConfig, QfiPipeline, QfiSeries};
use crate::integrator::IntegratorConfig;
use crate::math::{abs, ln, pow};
use crate::operators::{dimensionless_rescale, SimParams};
use crate::probes::{ProbeFamily, ProbeSpec};

/// Figure of merit maximized over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// `F`
    Qfi,
    /// `F / t`, for a fixed total measurement time.
    QfiPerTime,
}

impl Objective {
    /// Objective value from the dimensionless QFI at time `gt`.
    pub fn value(self, gt: f64, f_scaled: f64) -> f64 {
        match self {
            Objective::Qfi => f_scaled,
            Objective::QfiPerTime if gt > 0.0 => f_scaled / gt,
            Objective::QfiPerTime => 0.0,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Qfi => "qfi",
            Objective::QfiPerTime => "qfi-per-time",
        })
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qfi" | "F" => Ok(Objective::Qfi),
            "qfi-per-time" | "F/t" => Ok(Objective::QfiPerTime),
            _ => Err(Error::InvalidParameter(format!("unknown objective `{s}`"))),
        }
    }
}

/// Local refinement settings for peak search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakConfig {
    pub refine: bool,
    /// Golden-section stopping width in `gt`.
    pub time_tol: f64,
    pub max_evals: usize,
}

impl Default for PeakConfig {
    fn default() -> Self {
        PeakConfig { refine: true, time_tol: 1e-4, max_evals: 64 }
    }
}

/// Location and value of the time optimum of one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakResult {
    pub probe: Option<ProbeSpec>,
    pub params: Option<SimParams>,
    pub objective: Objective,
    /// `gt` of the optimum.
    pub peak_time: f64,
    /// Objective value at the optimum (`F g^2`, or `F g^2 / gt`).
    pub peak_value: f64,
    /// Index of the coarse grid maximum.
    pub grid_index: usize,
    /// Set when golden-section refinement ran.
    pub refined: bool,
    /// Set when the coarse maximum sits on the first or last usable grid point.
    pub boundary: bool,
}

fn objective_values(series: &QfiSeries, objective: Objective) -> Vec<f64> {
    series.times.iter().zip(&series.f_scaled).map(|(&t, &f)| objective.value(t, f)).collect()
}

fn first_usable(times: &[f64], objective: Objective) -> Option<usize> {
    match objective {
        Objective::Qfi => (!times.is_empty()).then_some(0),
        Objective::QfiPerTime => times.iter().position(|&t| t > 0.0),
    }
}

fn coarse_peak(times: &[f64], values: &[f64], objective: Objective) -> Result<(usize, bool)> {
    let first = first_usable(times, objective)
        .ok_or_else(|| Error::InvalidParameter("no usable grid points for the objective".into()))?;
    let mut best = first;
    for i in first + 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    Ok((best, best == first || best + 1 == values.len()))
}

/// Coarse grid maximum of the series, without refinement.
pub fn find_peak(series: &QfiSeries, objective: Objective) -> Result<PeakResult> {
    let values = objective_values(series, objective);
    let (i, boundary) = coarse_peak(&series.times, &values, objective)?;
    Ok(PeakResult {
        probe: series.probe,
        params: series.params,
        objective,
        peak_time: series.times[i],
        peak_value: values[i],
        grid_index: i,
        refined: false,
        boundary,
    })
}

/// Grid maximum refined by golden-section search over `+-2` grid steps, where
/// `eval(gt)` recomputes the dimensionless QFI at an arbitrary time.
pub fn find_peak_refined(
    series: &QfiSeries,
    objective: Objective,
    cfg: &PeakConfig,
    mut eval: impl FnMut(f64) -> Result<f64>,
) -> Result<PeakResult> {
    let mut peak = find_peak(series, objective)?;
    if peak.boundary || !cfg.refine {
        return Ok(peak);
    }
    let i = peak.grid_index;
    let lo = series.times[i.saturating_sub(2)];
    let hi = series.times[(i + 2).min(series.len() - 1)];
    let (t, v) = golden_section_max(|t| Ok(objective.value(t, eval(t)?)), lo, hi, cfg.time_tol, cfg.max_evals)?;
    peak.refined = true;
    if v > peak.peak_value {
        peak.peak_time = t;
        peak.peak_value = v;
    }
    Ok(peak)
}

/// Maximizes a unimodal function on `[a, b]`; returns the best point evaluated.
pub fn golden_section_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_evals: usize,
) -> Result<(f64, f64)> {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evals = 2;
    while b - a > tol && evals < max_evals {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        evals += 1;
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// QFI series of one probe with refined optima for both objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScan {
    pub series: QfiSeries,
    pub peak: PeakResult,
    pub peak_per_time: PeakResult,
    pub diagnostics: Diagnostics,
}

impl TimeScan {
    pub fn peak_for(&self, objective: Objective) -> &PeakResult {
        match objective {
            Objective::Qfi => &self.peak,
            Objective::QfiPerTime => &self.peak_per_time,
        }
    }
}

/// Settings shared by every scan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanConfig {
    /// Dimensionless output times `gt`.
    pub times: Vec<f64>,
    pub qfi: QfiConfig,
    pub integrator: IntegratorConfig,
    pub peak: PeakConfig,
    /// Track per-trajectory eigenvalues in the diagnostics.
    pub track_eigenvalues: bool,
}

impl ScanConfig {
    /// Uniform grid of `points` samples over `[0, t_max]`.
    pub fn uniform(t_max: f64, points: usize) -> Self {
        ScanConfig { times: linspace(0.0, t_max, points), ..Default::default() }
    }
}

/// `points` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => alloc::vec![start],
        _ => {
            let step = (end - start) / (points - 1) as f64;
            (0..points).map(|i| if i + 1 == points { end } else { start + step * i as f64 }).collect()
        }
    }
}

/// Grid pass of a time scan: QFI samples on the grid plus, per objective,
/// the state two grid steps before its grid optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSweep {
    /// Dimensionless times `gt`.
    pub times: Vec<f64>,
    /// `F g^2` at each time.
    pub values: Vec<f64>,
    pub diagnostics: Diagnostics,
    /// Restart points for [`Objective::Qfi`] and [`Objective::QfiPerTime`].
    pub restarts: [Option<Checkpoint>; 2],
}

const OBJECTIVES: [Objective; 2] = [Objective::Qfi, Objective::QfiPerTime];

/// Pipeline for a probe at dimensionless parameters.
pub fn scan_pipeline(probe: &ProbeSpec, params: &SimParams, cfg: &ScanConfig) -> Result<QfiPipeline> {
    let scaled = dimensionless_rescale(params)?;
    Ok(QfiPipeline::for_probe(probe, &scaled, cfg.qfi, cfg.integrator)?.track_eigenvalues(cfg.track_eigenvalues))
}

/// Integrates a fresh pipeline once over `times`, tracking the running optimum
/// of both objectives with a restart point two grid steps before it.
pub fn sweep_grid(pipeline: &mut QfiPipeline, times: &[f64]) -> Result<GridSweep> {
    crate::evolve::check_times(times)?;
    let mut best = [(f64::NEG_INFINITY, None::<Checkpoint>), (f64::NEG_INFINITY, None)];
    let mut ring: VecDeque<(usize, Checkpoint)> = VecDeque::with_capacity(3);
    let mut values = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let f = pipeline.advance_to(t)?;
        values.push(f);
        if ring.len() == 3 {
            ring.pop_front();
        }
        ring.push_back((i, pipeline.checkpoint()));
        for (obj, b) in OBJECTIVES.iter().zip(best.iter_mut()) {
            if *obj == Objective::QfiPerTime && t <= 0.0 {
                continue;
            }
            let v = obj.value(t, f);
            if v > b.0 {
                let want = i.saturating_sub(2);
                b.0 = v;
                b.1 = ring.iter().find(|(j, _)| *j == want).map(|(_, cp)| cp.clone());
            }
        }
    }
    let [(_, r0), (_, r1)] = best;
    Ok(GridSweep { times: times.to_vec(), values, diagnostics: pipeline.diagnostics(), restarts: [r0, r1] })
}

/// Turns a grid pass into a [`TimeScan`], refining interior optima by
/// re-integrating from the stored restart points. `pipeline` may be the one
/// that produced `sweep`; otherwise one is built when refinement needs it.
/// Either way the result is identical.
pub fn finish_scan(
    probe: &ProbeSpec,
    params: &SimParams,
    cfg: &ScanConfig,
    sweep: &GridSweep,
    pipeline: Option<&mut QfiPipeline>,
) -> Result<TimeScan> {
    let mut series = QfiSeries::from_scaled(sweep.times.clone(), sweep.values.clone(), 1.0)?;
    series.probe = Some(*probe);
    series.params = Some(*params);
    let mut peaks = [find_peak(&series, Objective::Qfi)?, find_peak(&series, Objective::QfiPerTime)?];
    let mut diagnostics = sweep.diagnostics;
    let mut owned = None;
    let mut pipeline = pipeline;
    let mut reset = false;
    for (peak, restart) in peaks.iter_mut().zip(&sweep.restarts) {
        let Some(cp) = restart.as_ref().filter(|_| cfg.peak.refine && !peak.boundary) else {
            continue;
        };
        let p: &mut QfiPipeline = match pipeline.as_deref_mut() {
            Some(p) => p,
            None => {
                if owned.is_none() {
                    owned = Some(scan_pipeline(probe, params, cfg)?);
                }
                owned.as_mut().unwrap()
            }
        };
        if !reset {
            p.reset_diagnostics();
            reset = true;
        }
        p.restore(cp)?;
        *peak = find_peak_refined(&series, peak.objective, &cfg.peak, |t| {
            if t < p.t() {
                p.restore(cp)?;
            }
            p.advance_to(t)
        })?;
    }
    if reset {
        let p: &QfiPipeline = match pipeline.as_deref() {
            Some(p) => p,
            None => owned.as_ref().unwrap(),
        };
        diagnostics.merge(&p.diagnostics());
    }
    let [peak, peak_per_time] = peaks;
    Ok(TimeScan { series, peak, peak_per_time, diagnostics })
}

/// QFI series of a probe with both optima refined.
pub fn time_scan(probe: &ProbeSpec, params: &SimParams, cfg: &ScanConfig) -> Result<TimeScan> {
    let mut pipeline = scan_pipeline(probe, params, cfg)?;
    let sweep = sweep_grid(&mut pipeline, &cfg.times)?;
    finish_scan(probe, params, cfg, &sweep, Some(&mut pipeline))
}

/// Fit of `y(N) = a N^b + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Euclidean norm of the residuals.
    pub residual_norm: f64,
    /// Largest gradient component of the (normalized) cost at the solution.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub n_values: Vec<f64>,
}

impl ScalingFit {
    pub fn predict(&self, n: f64) -> f64 {
        self.a * pow(n, self.b) + self.c
    }
}

const FIT_STARTS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];
const FIT_GRADIENT_TOL: f64 = 1e-10;
const FIT_MAX_ITER: usize = 2000;

/// Least-squares fit of `y = a N^b + c`.
///
/// Inputs are normalized (`N / N_max`, `y / max|y|`) before fitting. Every start
/// value of `b` (the log-log slope of `y - min y` and 0.5, 1, ..., 2.5) gets
/// `a`, `c` from a linear solve and is then polished by Levenberg-Marquardt;
/// the converged start with the smallest residual wins.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateData(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|&(n, y)| !(n > 0.0) || !n.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateData("N must be positive and all values finite".into()));
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateData("N values must be distinct".into()));
    }
    let n_max = ns[ns.len() - 1];
    let y_scale = points.iter().map(|p| abs(p.1)).fold(0.0, f64::max);
    let y_min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if y_scale == 0.0 || y_max - y_min <= 1e-12 * y_scale {
        return Err(Error::DegenerateData("values do not depend on N".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0 / n_max).collect();
    let z: Vec<f64> = points.iter().map(|p| p.1 / y_scale).collect();

    let mut starts: Vec<f64> = Vec::with_capacity(6);
    if let Some(s) = loglog_slope(&x, &z) {
        starts.push(s);
    }
    starts.extend(FIT_STARTS);

    let mut best: Option<(f64, [f64; 3], usize, f64)> = None;
    let mut last_err = None;
    for &b0 in &starts {
        let (a0, c0) = linear_ac(&x, &z, b0);
        match levenberg_marquardt(&x, &z, [a0, b0, c0]) {
            Ok((p, iters, grad)) => {
                let cost = cost(&x, &z, &p);
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, p, iters, grad));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (cost, [a, b, c], iterations, gradient_norm) = best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::FitNotConverged("no start converged".into()))
    })?;
    Ok(ScalingFit {
        a: a * y_scale / pow(n_max, b),
        b,
        c: c * y_scale,
        residual_norm: libm::sqrt(2.0 * cost) * y_scale,
        gradient_norm,
        iterations,
        n_values: points.iter().map(|p| p.0).collect(),
    })
}

fn loglog_slope(x: &[f64], z: &[f64]) -> Option<f64> {
    let z_min = z.iter().copied().fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(z)
        .filter(|(_, &v)| v - z_min > 0.0)
        .map(|(&xi, &v)| (ln(xi), ln(v - z_min)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let s = sxy / sxx;
    (s.is_finite() && sxx > 0.0).then_some(s)
}

/// Best `a`, `c` for fixed `b`.
fn linear_ac(x: &[f64], z: &[f64], b: f64) -> (f64, f64) {
    let n = x.len() as f64;
    let (mut su, mut suu, mut sz, mut suz) = (0.0, 0.0, 0.0, 0.0);
    for (&xi, &zi) in x.iter().zip(z) {
        let u = pow(xi, b);
        su += u;
        suu += u * u;
        sz += zi;
        suz += u * zi;
    }
    let det = suu * n - su * su;
    if abs(det) <= 1e-14 * suu * n {
        return (0.0, sz / n);
    }
    ((suz * n - su * sz) / det, (suu * sz - su * suz) / det)
}

fn cost(x: &[f64], z: &[f64], p: &[f64; 3]) -> f64 {
    x.iter().zip(z).map(|(&xi, &zi)| {
        let r = p[0] * pow(xi, p[1]) + p[2] - zi;
        r * r
    }).sum::<f64>() / 2.0
}

fn levenberg_marquardt(x: &[f64], z: &[f64], mut p: [f64; 3]) -> Result<([f64; 3], usize, f64)> {
    let mut lambda = 1e-3;
    let mut current = cost(x, z, &p);
    for iter in 0..FIT_MAX_ITER {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut grad = Vector3::<f64>::zeros();
        for (&xi, &zi) in x.iter().zip(z) {
            let u = pow(xi, p[1]);
            let r = p[0] * u + p[2] - zi;
            let row = Vector3::new(u, p[0] * u * ln(xi), 1.0);
            jtj += row * row.transpose();
            grad += row * r;
        }
        let gnorm = grad.amax();
        if !gnorm.is_finite() {
            return Err(Error::FitNotConverged("non-finite gradient".into()));
        }
        if gnorm < FIT_GRADIENT_TOL {
            return Ok((p, iter, gnorm));
        }
        let diag_floor = 1e-12 * jtj.diagonal().max();
        let mut improved = false;
        while lambda < 1e16 {
            let mut m = jtj;
            for k in 0..3 {
                m[(k, k)] += lambda * jtj[(k, k)].max(diag_floor);
            }
            let Some(step) = m.lu().solve(&(-grad)) else {
                lambda *= 4.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let c = cost(x, z, &trial);
            if c.is_finite() && c <= current {
                let stalled = trial == p;
                p = trial;
                current = c;
                lambda = (lambda / 3.0).max(1e-15);
                improved = !stalled;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            return Err(Error::FitNotConverged(format!(
                "stalled with gradient {gnorm:e} after {iter} iterations"
            )));
        }
    }
    Err(Error::FitNotConverged(format!("no convergence in {FIT_MAX_ITER} iterations")))
}

/// Time-optimized QFI of Dicke probes with different excitation numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationScan {
    pub qubits: u32,
    pub params: SimParams,
    pub n_values: Vec<u32>,
    pub peaks: Vec<PeakResult>,
    pub peaks_per_time: Vec<PeakResult>,
}

impl ExcitationScan {
    /// Excitation number with the largest optimum; ties go to the smaller `n`.
    pub fn argmax(&self, objective: Objective) -> Option<u32> {
        let peaks = match objective {
            Objective::Qfi => &self.peaks,
            Objective::QfiPerTime => &self.peaks_per_time,
        };
        let mut best: Option<(u32, f64)> = None;
        for (&n, p) in self.n_values.iter().zip(peaks) {
            if best.is_none_or(|b| p.peak_value > b.1) {
                best = Some((n, p.peak_value));
            }
        }
        best.map(|b| b.0)
    }
}

/// Runs [`time_scan`] for every Dicke excitation number in `n_values`.
pub fn dicke_excitation_scan(params: &SimParams, n_values: &[u32], cfg: &ScanConfig) -> Result<ExcitationScan> {
    let mut peaks = Vec::with_capacity(n_values.len());
    let mut peaks_per_time = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let probe = ProbeSpec::new(ProbeFamily::Dicke(n), params.qubits)?;
        let scan = time_scan(&probe, params, cfg)?;
        peaks.push(scan.peak);
        peaks_per_time.push(scan.peak_per_time);
    }
    Ok(ExcitationScan { qubits: params.qubits, params: *params, n_values: n_values.to_vec(), peaks, peaks_per_time })
}

/// Per-`N` optima and fits of one `(kappa/g, gamma/g)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentCell {
    pub kappa: f64,
    pub gamma: f64,
    /// Qubit counts for which the probe is defined.
    pub qubits: Vec<u32>,
    pub peaks: Vec<PeakResult>,
    pub peaks_per_time: Vec<PeakResult>,
    pub diagnostics: Diagnostics,
    pub fit: core::result::Result<ScalingFit, Error>,
    pub fit_per_time: core::result::Result<ScalingFit, Error>,
}

impl ExponentCell {
    pub fn fit_for(&self, objective: Objective) -> &core::result::Result<ScalingFit, Error> {
        match objective {
            Objective::Qfi => &self.fit,
            Objective::QfiPerTime => &self.fit_per_time,
        }
    }

    /// Fitted exponent, if the cell is valid for `objective`.
    pub fn exponent(&self, objective: Objective) -> Option<f64> {
        self.fit_for(objective).as_ref().ok().map(|f| f.b)
    }
}

fn fit_peaks(qubits: &[u32], peaks: &[PeakResult]) -> core::result::Result<ScalingFit, Error> {
    if let Some((&q, _)) = qubits.iter().zip(peaks).find(|(_, p)| p.boundary) {
        return Err(Error::BoundaryPeak { qubits: q });
    }
    let points: Vec<(f64, f64)> = qubits.iter().zip(peaks).map(|(&q, p)| (q as f64, p.peak_value)).collect();
    scaling_fit(&points)
}

/// Assembles a cell from time scans already computed for each qubit count.
pub fn exponent_cell_from_scans(kappa: f64, gamma: f64, qubits: &[u32], scans: &[TimeScan]) -> ExponentCell {
    let peaks: Vec<PeakResult> = scans.iter().map(|s| s.peak).collect();
    let peaks_per_time: Vec<PeakResult> = scans.iter().map(|s| s.peak_per_time).collect();
    let mut diagnostics = Diagnostics::default();
    for s in scans {
        diagnostics.merge(&s.diagnostics);
    }
    ExponentCell {
        kappa,
        gamma,
        qubits: qubits.to_vec(),
        fit: fit_peaks(qubits, &peaks),
        fit_per_time: fit_peaks(qubits, &peaks_per_time),
        peaks,
        peaks_per_time,
        diagnostics,
    }
}

/// Qubit counts from `n_list` for which `family` is defined.
pub fn valid_qubits(family: ProbeFamily, n_list: &[u32]) -> Vec<u32> {
    n_list.iter().copied().filter(|&q| family.supports(q)).collect()
}

/// Scans every valid `N` of one cell and fits both objectives. Integration
/// errors abort the cell; fit failures are stored in the cell.
pub fn exponent_cell(
    family: ProbeFamily,
    kappa: f64,
    gamma: f64,
    n_list: &[u32],
    cfg: &ScanConfig,
) -> Result<ExponentCell> {
    let qubits = valid_qubits(family, n_list);
    let mut scans = Vec::with_capacity(qubits.len());
    for &q in &qubits {
        let probe = family.at(q)?;
        scans.push(time_scan(&probe, &SimParams::dimensionless(q, kappa, gamma), cfg)?);
    }
    Ok(exponent_cell_from_scans(kappa, gamma, &qubits, &scans))
}

/// Fitted exponents over a `(kappa/g, gamma/g)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentMap {
    pub family: ProbeFamily,
    pub kappa_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub n_list: Vec<u32>,
    /// Row-major: one row per `gamma`, one column per `kappa`.
    pub cells: Vec<core::result::Result<ExponentCell, Error>>,
}

impl ExponentMap {
    pub fn cell(&self, gamma_index: usize, kappa_index: usize) -> &core::result::Result<ExponentCell, Error> {
        &self.cells[gamma_index * self.kappa_grid.len() + kappa_index]
    }

    /// Exponents as rows over `gamma`, columns over `kappa`; invalid cells are `None`.
    pub fn exponents(&self, objective: Objective) -> Vec<Vec<Option<f64>>> {
        self.cells
            .chunks(self.kappa_grid.len().max(1))
            .map(|row| row.iter().map(|c| c.as_ref().ok().and_then(|c| c.exponent(objective))).collect())
            .collect()
    }
}

/// Serial exponent map; failing cells are recorded and the sweep continues.
pub fn exponent_map(
    family: ProbeFamily,
    kappa_grid: &[f64],
    gamma_grid: &[f64],
    n_list: &[u32],
    cfg: &ScanConfig,
) -> Result<ExponentMap> {
    if kappa_grid.is_empty() || gamma_grid.is_empty() {
        return Err(Error::InvalidParameter("empty rate grid".into()));
    }
    let mut cells = Vec::with_capacity(kappa_grid.len() * gamma_grid.len());
    for &gamma in gamma_grid {
        for &kappa in kappa_grid {
            cells.push(exponent_cell(family, kappa, gamma, n_list, cfg));
        }
    }
    Ok(ExponentMap {
        family,
        kappa_grid: kappa_grid.to_vec(),
        gamma_grid: gamma_grid.to_vec(),
        n_list: n_list.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_peak() {
        let f = |t: f64| t * libm::exp(-t);
        let times = linspace(0.0, 5.0, 26);
        let series = QfiSeries::from_scaled(times.clone(), times.iter().map(|&t| f(t)).collect(), 1.0).unwrap();
        let p = find_peak_refined(&series, Objective::Qfi, &PeakConfig::default(), |t| Ok(f(t))).unwrap();
        assert!(p.refined && !p.boundary);
        assert!((p.peak_time - 1.0).abs() < 1e-4);
        assert!((p.peak_value - libm::exp(-1.0)).abs() < 1e-4);
    }

    #[test]
    fn monotone_series_flags_boundary() {
        let times = linspace(0.0, 3.0, 10);
        let series = QfiSeries::from_scaled(times.clone(), times.iter().map(|t| 4.0 * t * t).collect(), 1.0).unwrap();
        let p = find_peak(&series, Objective::Qfi).unwrap();
        assert!(p.boundary);
        assert_eq!(p.grid_index, 9);
        let p = find_peak(&series, Objective::QfiPerTime).unwrap();
        assert!(p.boundary);
    }

    #[test]
    fn per_time_skips_origin() {
        let times = [0.0, 1.0, 2.0, 3.0, 4.0];
        let series = QfiSeries::from_scaled(times.to_vec(), vec![0.0, 1.0, 3.0, 4.0, 4.2], 1.0).unwrap();
        let p = find_peak(&series, Objective::QfiPerTime).unwrap();
        assert_eq!(p.grid_index, 2);
        assert_eq!(p.peak_value, 1.5);
    }

    #[test]
    fn exact_power_laws() {
        for (a, b, c) in [(3.0, 2.0, 1.0), (2.0, 1.0, 7.0), (1.5, 0.5, -2.0), (0.7, 1.5, 0.0)] {
            let pts: Vec<(f64, f64)> = (5..=30).map(|n| (n as f64, a * libm::pow(n as f64, b) + c)).collect();
            let fit = scaling_fit(&pts).unwrap();
            assert!((fit.b - b).abs() < 1e-6, "b = {b}: {fit:?}");
            assert!((fit.a - a).abs() < 1e-5 * a && (fit.c - c).abs() < 1e-4);
        }
    }

    #[test]
    fn fit_rejects_bad_input() {
        let flat: Vec<(f64, f64)> = (1..=6).map(|n| (n as f64, 2.5)).collect();
        assert!(matches!(scaling_fit(&flat), Err(Error::DegenerateData(_))));
        assert!(scaling_fit(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).is_err());
        assert!(scaling_fit(&[(1.0, 1.0), (1.0, 2.0), (3.0, 3.0), (4.0, 5.0)]).is_err());
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 12.0, 16.0, 20.0]
            .iter()
            .map(|&n| (n, 0.3 * libm::pow(n, 1.7) + 2.0 + 0.1 * libm::sin(n)))
            .collect();
        let base = scaling_fit(&pts).unwrap();
        let s = 37.5;
        let scaled = scaling_fit(&pts.iter().map(|&(n, y)| (n, s * y)).collect::<Vec<_>>()).unwrap();
        assert!((scaled.b - base.b).abs() < 1e-8);
        assert!((scaled.a - s * base.a).abs() < 1e-8 * s * base.a.abs());
        assert!((scaled.c - s * base.c).abs() < 1e-8 * s * base.c.abs().max(1.0));
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.0, 20.0, 400);
        assert_eq!(g.len(), 400);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[399], 20.0);
    }
}
