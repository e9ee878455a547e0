//! Brute-force reference: the full `2^N (N+1)`-dimensional qubit-resonator
//! space, for `N <= 5`.
//!
//! Product states are indexed `s (N+1) + l`, where bit `j` of `s` is set when
//! qubit `j` is excited and `l` is the photon number (cut off at `N`, as in the
//! symmetric basis). Density matrices are stored row-major.
//!
//! [`OracleBasis`] relates the two representations. For every spin length `J`
//! it holds `d_N^J` orthonormal copies of the multiplet `|J,m>`, obtained from
//! the highest-weight vectors by repeated `S_-`. A symmetric-basis component
//! `x` of `|J,n><J,m| (x) |l><k|` expands to `x / d_N^J sum_c |J,n,c><J,m,c| (x) |l><k|`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{BasisLayout, SectorWeights};
use crate::blocks::DenseSquare;
use crate::error::{Error, Result};
use crate::evolve::DensityState;
use crate::fisher::{sample_pipeline, QfiConfig, QfiPipeline, QfiSeries};
use crate::integrator::IntegratorConfig;
use crate::math::sqrt;
use crate::operators::{dimensionless_rescale, SimParams};
use crate::probes::ProbeSpec;
use crate::superop::SuperOp;

pub const MAX_ORACLE_QUBITS: u32 = 5;

fn check_size(qubits: u32) -> Result<()> {
    match qubits {
        0 => Err(Error::InvalidQubitCount(0)),
        q if q > MAX_ORACLE_QUBITS => Err(Error::OracleTooLarge(q)),
        _ => Ok(()),
    }
}

/// Dimension `2^N (N+1)` of the full space.
pub fn full_dim(qubits: u32) -> usize {
    (1usize << qubits) * (qubits as usize + 1)
}

/// Real sparse matrix stored by rows.
#[derive(Debug, Clone)]
struct SparseReal {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseReal {
    fn new(dim: usize) -> Self {
        SparseReal { rows: vec![Vec::new(); dim] }
    }

    fn add(&mut self, r: usize, c: usize, v: f64) {
        if let Some(e) = self.rows[r].iter_mut().find(|e| e.0 == c) {
            e.1 += v;
        } else {
            self.rows[r].push((c, v));
        }
    }

    /// `M^T M`.
    fn gram(&self) -> SparseReal {
        let mut out = SparseReal::new(self.rows.len());
        for row in &self.rows {
            for &(a, va) in row {
                for &(b, vb) in row {
                    out.add(a, b, va * vb);
                }
            }
        }
        out
    }
}

struct FullOperators {
    hamiltonian: SparseReal,
    jumps: Vec<SparseReal>,
}

fn full_operators(params: &SimParams) -> Result<FullOperators> {
    params.validate()?;
    let q = params.qubits;
    check_size(q)?;
    let levels = q as usize + 1;
    let dim = full_dim(q);
    let idx = |s: usize, l: usize| s * levels + l;
    let mut h = SparseReal::new(dim);
    let mut cavity = SparseReal::new(dim);
    let mut sites: Vec<SparseReal> = (0..q).map(|_| SparseReal::new(dim)).collect();
    let (sk, sg) = (sqrt(params.kappa), sqrt(params.gamma));
    for s in 0..1usize << q {
        for l in 0..levels {
            let src = idx(s, l);
            let sz = s.count_ones() as f64 - q as f64 / 2.0;
            h.add(src, src, params.omega_q * sz + params.omega_c * l as f64);
            for j in 0..q as usize {
                let bit = 1usize << j;
                if s & bit != 0 {
                    // a^dag sigma_-^(j)
                    if l + 1 < levels {
                        h.add(idx(s ^ bit, l + 1), src, params.g * sqrt((l + 1) as f64));
                    }
                    sites[j].add(idx(s ^ bit, l), src, sg);
                } else if l >= 1 {
                    // a sigma_+^(j)
                    h.add(idx(s | bit, l - 1), src, params.g * sqrt(l as f64));
                }
            }
            if l >= 1 {
                cavity.add(idx(s, l - 1), src, sk * sqrt(l as f64));
            }
        }
    }
    let mut jumps = vec![cavity];
    jumps.extend(sites);
    Ok(FullOperators { hamiltonian: h, jumps })
}

/// Generator of the master equation on vectorized full density matrices
/// (`rho[r][c]` at `r D + c`).
pub fn full_rhs(params: &SimParams) -> Result<SuperOp> {
    let ops = full_operators(params)?;
    let dim = full_dim(params.qubits);
    let mut k = SparseReal::new(dim);
    for l in &ops.jumps {
        for (r, row) in l.gram().rows.into_iter().enumerate() {
            for (c, v) in row {
                k.add(r, c, v);
            }
        }
    }
    let h = &ops.hamiltonian;
    let i = Complex64::new(0.0, 1.0);
    Ok(SuperOp::from_rows(dim * dim, |dest, sink| {
        let (r, c) = (dest / dim, dest % dim);
        // H is real symmetric, so H_sc = H_cs
        for &(s, v) in &h.rows[r] {
            sink.push(s * dim + c, -i * v);
        }
        for &(s, v) in &h.rows[c] {
            sink.push(r * dim + s, i * v);
        }
        for l in &ops.jumps {
            for &(s, a) in &l.rows[r] {
                for &(u, b) in &l.rows[c] {
                    sink.push(s * dim + u, Complex64::new(a * b, 0.0));
                }
            }
        }
        for &(s, v) in &k.rows[r] {
            sink.push(s * dim + c, Complex64::new(-0.5 * v, 0.0));
        }
        for &(s, v) in &k.rows[c] {
            sink.push(r * dim + s, Complex64::new(-0.5 * v, 0.0));
        }
    }))
}

/// Full density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    qubits: u32,
    dim: usize,
    data: Vec<Complex64>,
}

impl FullState {
    pub fn from_vec(qubits: u32, data: Vec<Complex64>) -> Result<Self> {
        check_size(qubits)?;
        let dim = full_dim(qubits);
        if data.len() != dim * dim {
            return Err(Error::LayoutMismatch);
        }
        Ok(FullState { qubits, dim, data })
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Probability that exactly `excitations` qubits are excited.
    pub fn qubit_excitation_population(&self, excitations: u32) -> f64 {
        let levels = self.qubits as usize + 1;
        (0..self.dim)
            .filter(|&i| (i / levels).count_ones() == excitations)
            .map(|i| self.get(i, i).re)
            .sum()
    }

    /// Largest `|P rho P - rho|` over transpositions of neighbouring qubits.
    pub fn permutation_distance(&self) -> f64 {
        let levels = self.qubits as usize + 1;
        let mut worst = 0.0f64;
        for j in 0..self.qubits.saturating_sub(1) as usize {
            let swap = |i: usize| {
                let (s, l) = (i / levels, i % levels);
                let (a, b) = ((s >> j) & 1, (s >> (j + 1)) & 1);
                let s2 = if a != b { s ^ (0b11 << j) } else { s };
                s2 * levels + l
            };
            for r in 0..self.dim {
                for c in 0..self.dim {
                    worst = worst.max((self.get(swap(r), swap(c)) - self.get(r, c)).norm());
                }
            }
        }
        worst
    }
}

/// Copies of every collective multiplet inside the `2^N`-dimensional spin space.
#[derive(Debug, Clone)]
pub struct OracleBasis {
    layout: Arc<BasisLayout>,
    weights: SectorWeights,
    /// `[sector][m index][copy]`, each a real vector of length `2^N`.
    multiplets: Vec<Vec<Vec<Vec<f64>>>>,
}

fn lower(v: &[f64], qubits: u32) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (s, &a) in v.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for j in 0..qubits {
            let bit = 1usize << j;
            if s & bit != 0 {
                out[s ^ bit] += a;
            }
        }
    }
    out
}

fn normalize(v: &mut [f64]) {
    let n = sqrt(v.iter().map(|x| x * x).sum());
    v.iter_mut().for_each(|x| *x /= n);
}

impl OracleBasis {
    pub fn new(qubits: u32) -> Result<Self> {
        check_size(qubits)?;
        let layout = Arc::new(BasisLayout::new(qubits)?);
        let weights = SectorWeights::new(qubits)?;
        let spin = 1usize << qubits;
        let mut multiplets = Vec::new();
        for sector in layout.sectors() {
            let j2 = sector.j2;
            // highest weight: popcount N/2 + J and annihilated by S_+
            let ones = (qubits + j2) / 2;
            let states: Vec<usize> = (0..spin).filter(|s| s.count_ones() == ones).collect();
            let raised: Vec<Vec<(usize, f64)>> = states
                .iter()
                .map(|&s| (0..qubits).filter(|j| s & (1 << j) == 0).map(|j| (s | (1 << j), 1.0)).collect())
                .collect();
            let gram = DMatrix::from_fn(states.len(), states.len(), |a, b| {
                raised[a]
                    .iter()
                    .map(|&(x, va)| raised[b].iter().filter(|e| e.0 == x).map(|e| va * e.1).sum::<f64>())
                    .sum::<f64>()
            });
            let eig = gram.symmetric_eigen();
            let copies = weights.degeneracy(j2) as usize;
            let mut tops: Vec<Vec<f64>> = Vec::new();
            for (col, &val) in eig.eigenvalues.iter().enumerate() {
                // nonzero eigenvalues of S_- S_+ here are at least 2J + 2
                if val.abs() < 0.5 {
                    let mut v = vec![0.0; spin];
                    for (a, &s) in states.iter().enumerate() {
                        v[s] = eig.eigenvectors[(a, col)];
                    }
                    tops.push(v);
                }
            }
            if tops.len() != copies {
                return Err(Error::InvariantViolation {
                    t: 0.0,
                    what: format!("found {} highest-weight vectors for 2J = {j2}, expected {copies}", tops.len()),
                });
            }
            let mut ladder = vec![tops];
            for _ in 0..j2 {
                let next = ladder
                    .last()
                    .unwrap()
                    .iter()
                    .map(|v| {
                        let mut w = lower(v, qubits);
                        normalize(&mut w);
                        w
                    })
                    .collect();
                ladder.push(next);
            }
            multiplets.push(ladder);
        }
        Ok(OracleBasis { layout, weights, multiplets })
    }

    pub fn layout(&self) -> &Arc<BasisLayout> {
        &self.layout
    }

    pub fn qubits(&self) -> u32 {
        self.layout.qubits()
    }

    /// `P(s, s') = sum_c <s|J,n,c> <J,m,c|s'>` as a dense `2^N x 2^N` array.
    fn projector(&self, sector: usize, n_idx: usize, m_idx: usize) -> Vec<f64> {
        let spin = 1usize << self.qubits();
        let mut p = vec![0.0; spin * spin];
        let ladder = &self.multiplets[sector];
        for (vn, vm) in ladder[n_idx].iter().zip(&ladder[m_idx]) {
            for (s, &a) in vn.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (s2, &b) in vm.iter().enumerate() {
                    p[s * spin + s2] += a * b;
                }
            }
        }
        p
    }

    /// Visits every `(flat spin index, sector, n index, m index)`.
    fn spin_entries(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        self.layout.sectors().iter().enumerate().flat_map(|(si, sec)| {
            let w = sec.width();
            (0..w * w).map(move |p| (sec.offset + p, si, p / w, p % w))
        })
    }

    /// Full density matrix of a symmetric-basis state.
    pub fn expand(&self, sym: &DensityState) -> Result<FullState> {
        if sym.layout().as_ref() != self.layout.as_ref() {
            return Err(Error::LayoutMismatch);
        }
        let q = self.qubits();
        let levels = q as usize + 1;
        let spin = 1usize << q;
        let dim = full_dim(q);
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        let x = sym.as_slice();
        for (i, si, ni, mi) in self.spin_entries() {
            let block: Vec<(usize, usize, Complex64)> = (0..levels)
                .flat_map(|l| (0..levels).map(move |k| (l, k)))
                .map(|(l, k)| (l, k, x[self.layout.index(i, l, k)]))
                .filter(|e| e.2 != Complex64::new(0.0, 0.0))
                .collect();
            if block.is_empty() {
                continue;
            }
            let d = self.weights.degeneracy(self.layout.sectors()[si].j2) as f64;
            let p = self.projector(si, ni, mi);
            for s in 0..spin {
                for s2 in 0..spin {
                    let w = p[s * spin + s2] / d;
                    if w == 0.0 {
                        continue;
                    }
                    for &(l, k, v) in &block {
                        data[(s * levels + l) * dim + s2 * levels + k] += v * w;
                    }
                }
            }
        }
        FullState::from_vec(q, data)
    }

    /// Symmetric-basis components of a permutation-invariant full state.
    pub fn symmetrize(&self, full: &FullState) -> Result<DensityState> {
        if full.qubits() != self.qubits() {
            return Err(Error::LayoutMismatch);
        }
        let dist = full.permutation_distance();
        if !(dist < 1e-10) {
            return Err(Error::NotSymmetric(dist));
        }
        Ok(self.project(full))
    }

    /// Symmetric-basis components without the invariance check.
    pub fn project(&self, full: &FullState) -> DensityState {
        let q = self.qubits();
        let levels = q as usize + 1;
        let spin = 1usize << q;
        let dim = full.dim();
        let mut sym = DensityState::zeros(self.layout.clone());
        let data = full.as_slice();
        for (i, si, ni, mi) in self.spin_entries() {
            let p = self.projector(si, ni, mi);
            for l in 0..levels {
                for k in 0..levels {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for s in 0..spin {
                        for s2 in 0..spin {
                            let w = p[s * spin + s2];
                            if w != 0.0 {
                                acc += data[(s * levels + l) * dim + s2 * levels + k] * w;
                            }
                        }
                    }
                    sym.as_mut_slice()[self.layout.index(i, l, k)] = acc;
                }
            }
        }
        sym
    }
}

/// Full-space initial state of a probe.
pub fn probe_full_state(probe: &ProbeSpec) -> Result<FullState> {
    check_size(probe.qubits)?;
    OracleBasis::new(probe.qubits)?.expand(&probe.state()?)
}

/// Trajectory pair in the full space, sharing the symmetric pipeline's
/// integrator and QFI code.
pub fn oracle_pipeline(
    probe: &ProbeSpec,
    params: &SimParams,
    qfi: QfiConfig,
    integrator: IntegratorConfig,
) -> Result<QfiPipeline> {
    params.validate()?;
    check_size(params.qubits)?;
    if params.qubits != probe.qubits {
        return Err(Error::InvalidParameter("probe and parameter qubit counts differ".into()));
    }
    let rho0 = probe_full_state(probe)?;
    let plus = full_rhs(&params.with_g(params.g + qfi.delta / 2.0))?;
    let minus = full_rhs(&params.with_g(params.g - qfi.delta / 2.0))?;
    QfiPipeline::new(&DenseSquare { dim: rho0.dim() }, &plus, &minus, rho0.as_slice(), qfi, integrator)
}

/// Full-space counterpart of [`crate::fisher::qfi_series`].
pub fn oracle_qfi_series(
    probe: &ProbeSpec,
    params: &SimParams,
    times: &[f64],
    qfi: &QfiConfig,
    integrator: &IntegratorConfig,
) -> Result<QfiSeries> {
    let scaled = dimensionless_rescale(params)?;
    let mut pipeline = oracle_pipeline(probe, &scaled, *qfi, *integrator)?;
    let values = sample_pipeline(&mut pipeline, times)?;
    let mut series = QfiSeries::from_scaled(times.to_vec(), values, params.g)?;
    series.probe = Some(*probe);
    series.params = Some(*params);
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probes::{dicke_state, ProbeFamily};

    #[test]
    fn size_guard() {
        assert!(matches!(OracleBasis::new(6), Err(Error::OracleTooLarge(6))));
        assert!(full_rhs(&SimParams::new(6, 1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn w_state_expansion() {
        let basis = OracleBasis::new(3).unwrap();
        let full = basis.expand(&dicke_state(3, 1).unwrap()).unwrap();
        let levels = 4;
        for s in [1usize, 2, 4] {
            for s2 in [1usize, 2, 4] {
                let v = full.get(s * levels, s2 * levels);
                assert!((v.re - 1.0 / 3.0).abs() < 1e-14 && v.im.abs() < 1e-14);
            }
        }
        assert!((full.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ghz_expansion() {
        let full = probe_full_state(&ProbeFamily::Ghz.at(2).unwrap()).unwrap();
        let levels = 3;
        for s in [0usize, 3] {
            for s2 in [0usize, 3] {
                assert!((full.get(s * levels, s2 * levels).re - 0.5).abs() < 1e-14);
            }
        }
        assert!((full.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singlet_appears_once() {
        // populate the J = 0 sector of two qubits
        let basis = OracleBasis::new(2).unwrap();
        let mut sym = DensityState::zeros(basis.layout().clone());
        sym.set(crate::basis::SpinTriple::new(0, 0, 0).unwrap(), 0, 0, Complex64::new(1.0, 0.0));
        let full = basis.expand(&sym).unwrap();
        let eig = full.matrix().symmetric_eigen();
        let ones = eig.eigenvalues.iter().filter(|v| (*v - 1.0).abs() < 1e-12).count();
        assert_eq!(ones, 1);
    }

    #[test]
    fn single_qubit_decay() {
        let params = SimParams::new(3, 0.0, 0.0, 0.4);
        let rhs = full_rhs(&params).unwrap();
        let rho0 = probe_full_state(&ProbeFamily::Dicke(3).at(3).unwrap()).unwrap();
        let mut st = crate::integrator::Dop853::new(&rhs, 0.0, rho0.as_slice().to_vec(), IntegratorConfig::default())
            .unwrap();
        st.advance_to(1.5).unwrap();
        let full = FullState::from_vec(3, st.y().to_vec()).unwrap();
        let p = libm::exp(-0.4 * 1.5);
        assert!((full.qubit_excitation_population(3) - p * p * p).abs() < 1e-9);
    }
}
