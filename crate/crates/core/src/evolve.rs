//! Density states in the flattened basis and their time evolution.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{BasisLayout, SectorWeights, SpinTriple};
use crate::blocks::{hermitian_eigenvalues, BlockPlan, MatrixStructure};
use crate::error::{Error, Result};
use crate::integrator::Dop853;
pub use crate::integrator::IntegratorConfig;
use crate::superop::SuperOp;

/// Flattened symmetric-basis density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    layout: Arc<BasisLayout>,
    data: Vec<Complex64>,
}

impl DensityState {
    pub fn zeros(layout: Arc<BasisLayout>) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); layout.total_dim()];
        DensityState { layout, data }
    }

    pub fn from_vec(layout: Arc<BasisLayout>, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != layout.total_dim() {
            return Err(Error::LayoutMismatch);
        }
        Ok(DensityState { layout, data })
    }

    /// Scatters support-local values into a full state.
    pub fn from_support(layout: Arc<BasisLayout>, support: &[usize], values: &[Complex64]) -> Self {
        let mut s = DensityState::zeros(layout);
        for (&g, &v) in support.iter().zip(values) {
            s.data[g] = v;
        }
        s
    }

    pub fn layout(&self) -> &Arc<BasisLayout> {
        &self.layout
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, t: SpinTriple, l: usize, k: usize) -> Complex64 {
        self.layout
            .component(t, l, k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.data[i])
    }

    pub fn set(&mut self, t: SpinTriple, l: usize, k: usize, v: Complex64) {
        let i = self.layout.component(t, l, k).expect("component outside the layout");
        self.data[i] = v;
    }

    /// Indices of nonzero components.
    pub fn support(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, v)| (*v != Complex64::new(0.0, 0.0)).then_some(i))
            .collect()
    }

    pub fn trace(&self) -> Complex64 {
        let levels = self.layout.boson_levels();
        let mut tr = Complex64::new(0.0, 0.0);
        for (i, t) in (0..self.layout.spin_dim()).map(|i| (i, self.layout.flat_to_triple(i).unwrap())) {
            if t.n2 != t.m2 {
                continue;
            }
            for l in 0..levels {
                tr += self.data[self.layout.index(i, l, l)];
            }
        }
        tr
    }

    /// `max |rho_(J,n,m),l,k - conj(rho_(J,m,n),k,l)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        (0..self.data.len())
            .map(|i| (self.data[i] - self.data[self.layout.conjugate_index(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Dense `(2J+1)(cutoff+1)` matrix of sector `sector_index`, rows `(n, l)`, columns `(m, k)`.
    pub fn block(&self, sector_index: usize) -> DMatrix<Complex64> {
        let sector = self.layout.sectors()[sector_index];
        let dim = self.layout.block_dim(&sector);
        let mut m = DMatrix::zeros(dim, dim);
        let spin_end = sector.offset + sector.width() * sector.width();
        let levels = self.layout.boson_levels();
        for i in sector.offset..spin_end {
            for l in 0..levels {
                for k in 0..levels {
                    let idx = self.layout.index(i, l, k);
                    let (_, r, c) = self.layout.locate(idx);
                    m[(r, c)] = self.data[idx];
                }
            }
        }
        m
    }

    /// Physical purity `tr(rho^2) = sum_J tr(rho_J^2) / d_N^J`.
    pub fn purity(&self) -> f64 {
        let weights = SectorWeights::new(self.layout.qubits()).unwrap();
        let mut p = 0.0;
        for (s, sector) in self.layout.sectors().iter().enumerate() {
            let b = self.block(s);
            let tr: Complex64 = (&b * &b).trace();
            p += tr.re / weights.degeneracy(sector.j2) as f64;
        }
        p
    }

    /// Smallest eigenvalue over all structural blocks.
    pub fn min_block_eigenvalue(&self) -> f64 {
        let support = self.support();
        let plan = BlockPlan::new(self.layout.as_ref(), &support);
        let values: Vec<Complex64> = support.iter().map(|&g| self.data[g]).collect();
        min_eigenvalue(&plan, &values)
    }

    /// Population with `m = n = J - q` excitations removed from the top, summed
    /// over sectors and boson numbers: the probability of `excitations` excited qubits.
    pub fn qubit_excitation_population(&self, excitations: u32) -> f64 {
        let qubits = self.layout.qubits() as i32;
        let m2 = 2 * excitations as i32 - qubits;
        let levels = self.layout.boson_levels();
        let mut p = 0.0;
        for sector in self.layout.sectors() {
            if let Some(t) = SpinTriple::new(sector.j2, m2, m2) {
                for l in 0..levels {
                    p += self.get(t, l, l).re;
                }
            }
        }
        p
    }

    /// Mean number of excited qubits, `N/2 + <S_z>`.
    pub fn mean_excited_qubits(&self) -> f64 {
        (0..=self.layout.qubits()).map(|e| e as f64 * self.qubit_excitation_population(e)).sum()
    }
}

pub(crate) fn min_eigenvalue(plan: &BlockPlan, values: &[Complex64]) -> f64 {
    plan.blocks
        .iter()
        .flat_map(|b| hermitian_eigenvalues(&b.gather(values)))
        .fold(f64::INFINITY, f64::min)
}

/// Snapshots of a trajectory, stored on the set of components the dynamics can reach.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    layout: Arc<BasisLayout>,
    support: Vec<usize>,
    times: Vec<f64>,
    snapshots: Vec<Vec<Complex64>>,
}

impl Trajectory {
    pub fn new(
        layout: Arc<BasisLayout>,
        support: Vec<usize>,
        times: Vec<f64>,
        snapshots: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let ok = times.len() == snapshots.len()
            && snapshots.iter().all(|s| s.len() == support.len())
            && support.iter().all(|&g| g < layout.total_dim())
            && times.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidParameter("inconsistent trajectory data".into()));
        }
        Ok(Trajectory { layout, support, times, snapshots })
    }

    pub fn layout(&self) -> &Arc<BasisLayout> {
        &self.layout
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Raw support-local snapshot values.
    pub fn snapshot(&self, i: usize) -> &[Complex64] {
        &self.snapshots[i]
    }

    pub fn state(&self, i: usize) -> DensityState {
        DensityState::from_support(self.layout.clone(), &self.support, &self.snapshots[i])
    }
}

/// Support-restricted generator plus the bookkeeping needed to check invariants.
pub(crate) struct Reduced {
    pub support: Vec<usize>,
    pub op: SuperOp,
    pub diagonal: Vec<usize>,
}

impl Reduced {
    pub fn new<S: MatrixStructure + ?Sized>(structure: &S, full: &SuperOp, seeds: &[usize]) -> Self {
        let support = full.reachable(seeds);
        let op = full.restrict(&support);
        let diagonal = diagonal_slots(structure, &support);
        Reduced { support, op, diagonal }
    }
}

pub(crate) fn diagonal_slots<S: MatrixStructure + ?Sized>(structure: &S, support: &[usize]) -> Vec<usize> {
    support
        .iter()
        .enumerate()
        .filter_map(|(p, &g)| {
            let (_, r, c) = structure.locate(g);
            (r == c).then_some(p)
        })
        .collect()
}

pub(crate) fn trace_of(values: &[Complex64], diagonal: &[usize]) -> Complex64 {
    diagonal.iter().map(|&p| values[p]).sum()
}

/// Integrates `d rho/dt = rhs(rho)` from `t = 0` and records snapshots at `times`.
///
/// Only components reachable from the support of `rho0` are integrated; all
/// others stay exactly zero. Integration aborts if the trace drifts by more than
/// `100 * max(rtol, atol)`.
pub fn evolve(
    rho0: &DensityState,
    rhs: &SuperOp,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if rhs.dim() != rho0.layout.total_dim() {
        return Err(Error::LayoutMismatch);
    }
    check_times(times)?;
    let reduced = Reduced::new(rho0.layout.as_ref(), rhs, &rho0.support());
    let y0: Vec<Complex64> = reduced.support.iter().map(|&g| rho0.data[g]).collect();
    let tr0 = trace_of(&y0, &reduced.diagonal);
    let limit = 100.0 * cfg.rtol.max(cfg.atol);
    let mut stepper = Dop853::new(&reduced.op, 0.0, y0, *cfg)?;
    let mut snapshots = Vec::with_capacity(times.len());
    for &t in times {
        stepper.advance_to(t)?;
        let drift = (trace_of(stepper.y(), &reduced.diagonal) - tr0).norm();
        if drift > limit {
            return Err(Error::InvariantViolation { t, what: format!("trace drift {drift:e}") });
        }
        snapshots.push(stepper.y().to_vec());
    }
    let Reduced { support, .. } = reduced;
    Trajectory::new(rho0.layout.clone(), support, times.to_vec(), snapshots)
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("time grid must be finite and start at t >= 0".into()));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    Ok(())
}
