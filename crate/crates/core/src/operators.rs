//! Generator of the master equation in the flattened symmetric basis.
//!
//! ```text
//! d rho/dt = -i[H, rho] + kappa D[a](rho) + gamma sum_j D[sigma_-^(j)](rho)
//! H = omega_q S_z + omega_c a^dag a + g (a^dag S_- + a S_+)
//! ```
//!
//! Every builder works in the "pull" direction: for each destination component
//! it lists the source components that feed it. Left-acting operators touch the
//! bra labels `(n, l)`, right-acting ones the ket labels `(m, k)`.
//!
//! The local-decay term is expressed through collective quantities. Its jump
//! part routes `|J,n><J,m|` into `J`, `J-1` and `J+1` with the Chase-Geremia
//! branch coefficients; its no-jump part uses `sum_j sigma_+^(j) sigma_-^(j) = N/2 + S_z`,
//! i.e. `-1/2 {N/2 + S_z, rho}`, which keeps the generator trace preserving.

use crate::basis::{BasisLayout, SectorWeights, SpinTriple};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::superop::{RowSink, SuperOp};
use alloc::format;
use num_complex::Complex64;

/// Physical parameters of the qubit-resonator model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub qubits: u32,
    /// Qubit-cavity coupling (rad/time).
    pub g: f64,
    /// Resonator decay rate.
    pub kappa: f64,
    /// Per-qubit decay rate.
    pub gamma: f64,
    pub omega_q: f64,
    pub omega_c: f64,
}

impl SimParams {
    /// Resonant, rotating-frame parameters (`omega_q = omega_c = 0`).
    pub fn new(qubits: u32, g: f64, kappa: f64, gamma: f64) -> Self {
        SimParams { qubits, g, kappa, gamma, omega_q: 0.0, omega_c: 0.0 }
    }

    /// Dimensionless parameters with `g = 1`: rates are given as `kappa/g` and `gamma/g`.
    pub fn dimensionless(qubits: u32, kappa_over_g: f64, gamma_over_g: f64) -> Self {
        SimParams::new(qubits, 1.0, kappa_over_g, gamma_over_g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 {
            return Err(Error::InvalidQubitCount(0));
        }
        let finite = [self.g, self.kappa, self.gamma, self.omega_q, self.omega_c];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite parameter in {self:?}")));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParameter(format!("coupling g = {} must be >= 0", self.g)));
        }
        if self.kappa < 0.0 || self.gamma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "decay rates must be >= 0 (kappa = {}, gamma = {})",
                self.kappa, self.gamma
            )));
        }
        Ok(())
    }

    /// Same parameters with the coupling replaced.
    pub fn with_g(&self, g: f64) -> Self {
        SimParams { g, ..*self }
    }
}

/// Rescales to `g = 1` with `kappa/g`, `gamma/g` (and frequencies over `g`).
/// Times convert as `t~ = g t` and the QFI as `F(g) g^2 = F(g~)|_{g~=1}`.
pub fn dimensionless_rescale(params: &SimParams) -> Result<SimParams> {
    params.validate()?;
    if params.g <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cannot rescale with coupling g = {}",
            params.g
        )));
    }
    let g = params.g;
    Ok(SimParams {
        qubits: params.qubits,
        g: 1.0,
        kappa: params.kappa / g,
        gamma: params.gamma / g,
        omega_q: params.omega_q / g,
        omega_c: params.omega_c / g,
    })
}

/// `S_+|J,m> = s_plus(J,m) |J,m+1>`; zero at the top of the multiplet.
pub fn s_plus(j2: u32, m2: i32) -> f64 {
    if m2 + 2 > j2 as i32 || m2 < -(j2 as i32) {
        return 0.0;
    }
    let j = j2 as f64 / 2.0;
    let m = m2 as f64 / 2.0;
    sqrt(j * (j + 1.0) - m * (m + 1.0))
}

/// `S_-|J,m> = s_minus(J,m) |J,m-1>`; zero at the bottom of the multiplet.
pub fn s_minus(j2: u32, m2: i32) -> f64 {
    if m2 - 2 < -(j2 as i32) || m2 > j2 as i32 {
        return 0.0;
    }
    let j = j2 as f64 / 2.0;
    let m = m2 as f64 / 2.0;
    sqrt(j * (j + 1.0) - m * (m - 1.0))
}

/// Collective spin matrix elements of one sector, indexed by projection in
/// descending order (`m = J, J-1, ..., -J`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinTables {
    pub j2: u32,
    pub sz: alloc::vec::Vec<f64>,
    /// `S_+` coefficient acting on each projection (zero for `m = J`).
    pub s_plus: alloc::vec::Vec<f64>,
    /// `S_-` coefficient acting on each projection (zero for `m = -J`).
    pub s_minus: alloc::vec::Vec<f64>,
}

pub fn spin_matrix_elements(j2: u32) -> SpinTables {
    let projections = || (-(j2 as i32)..=j2 as i32).rev().step_by(2);
    SpinTables {
        j2,
        sz: projections().map(|m2| m2 as f64 / 2.0).collect(),
        s_plus: projections().map(|m2| s_plus(j2, m2)).collect(),
        s_minus: projections().map(|m2| s_minus(j2, m2)).collect(),
    }
}

/// Left- and right-acting boson ladders on the flattened vector:
/// `a_l = a rho`, `a_l_dag = a^dag rho`, `a_r = rho a`, `a_r_dag = rho a^dag`.
/// Raising variants truncate at the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonLadders {
    pub a_l: SuperOp,
    pub a_l_dag: SuperOp,
    pub a_r: SuperOp,
    pub a_r_dag: SuperOp,
}

pub fn boson_left_right(layout: &BasisLayout) -> BosonLadders {
    let top = layout.boson_cutoff() as usize;
    let dim = layout.total_dim();
    // each closure: destination (l, k) -> source (l', k') and weight
    let build = |f: &dyn Fn(usize, usize) -> Option<(usize, usize, f64)>| {
        SuperOp::from_rows(dim, |dest, sink| {
            let (i, l, k) = layout.split(dest);
            if let Some((ls, ks, w)) = f(l, k) {
                sink.push(layout.index(i, ls, ks), Complex64::new(w, 0.0));
            }
        })
    };
    BosonLadders {
        // a rho: (l+1, k) -> (l, k) with sqrt(l+1)
        a_l: build(&|l, k| (l < top).then(|| (l + 1, k, sqrt((l + 1) as f64)))),
        // a^dag rho: (l-1, k) -> (l, k) with sqrt(l)
        a_l_dag: build(&|l, k| (l > 0).then(|| (l - 1, k, sqrt(l as f64)))),
        // rho a: (l, k-1) -> (l, k) with sqrt(k)
        a_r: build(&|l, k| (k > 0).then(|| (l, k - 1, sqrt(k as f64)))),
        // rho a^dag: (l, k+1) -> (l, k) with sqrt(k+1)
        a_r_dag: build(&|l, k| (k < top).then(|| (l, k + 1, sqrt((k + 1) as f64)))),
    }
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn real(w: f64) -> Complex64 {
    Complex64::new(w, 0.0)
}

/// `-i(H rho - rho H)` for one destination row.
fn emit_hamiltonian(params: &SimParams, layout: &BasisLayout, dest: usize, sink: &mut RowSink) {
    let (i, l, k) = layout.split(dest);
    let t = layout.flat_to_triple(i).unwrap();
    let top = layout.boson_cutoff() as usize;
    let g = params.g;

    let diag = params.omega_q * (t.n() - t.m()) + params.omega_c * (l as f64 - k as f64);
    sink.push(dest, -I * diag);
    if g == 0.0 {
        return;
    }
    let at = |n2: i32, m2: i32, ls: usize, ks: usize| {
        layout.component(SpinTriple { j2: t.j2, n2, m2 }, ls, ks)
    };
    // H rho, term a^dag S_-: source (n+1, l-1)
    if l > 0 {
        let w = g * sqrt(l as f64) * s_minus(t.j2, t.n2 + 2);
        if let Some(s) = at(t.n2 + 2, t.m2, l - 1, k) {
            sink.push(s, -I * w);
        }
    }
    // H rho, term a S_+: source (n-1, l+1)
    if l < top {
        let w = g * sqrt((l + 1) as f64) * s_plus(t.j2, t.n2 - 2);
        if let Some(s) = at(t.n2 - 2, t.m2, l + 1, k) {
            sink.push(s, -I * w);
        }
    }
    // rho H, term a^dag S_-: source (m-1, k+1)
    if k < top {
        let w = g * sqrt((k + 1) as f64) * s_minus(t.j2, t.m2);
        if let Some(s) = at(t.n2, t.m2 - 2, l, k + 1) {
            sink.push(s, I * w);
        }
    }
    // rho H, term a S_+: source (m+1, k-1)
    if k > 0 {
        let w = g * sqrt(k as f64) * s_plus(t.j2, t.m2);
        if let Some(s) = at(t.n2, t.m2 + 2, l, k - 1) {
            sink.push(s, I * w);
        }
    }
}

fn emit_cavity(kappa: f64, layout: &BasisLayout, dest: usize, sink: &mut RowSink) {
    if kappa == 0.0 {
        return;
    }
    let (i, l, k) = layout.split(dest);
    let top = layout.boson_cutoff() as usize;
    if l < top && k < top {
        let w = kappa * sqrt(((l + 1) * (k + 1)) as f64);
        sink.push(layout.index(i, l + 1, k + 1), real(w));
    }
    sink.push(dest, real(-0.5 * kappa * (l + k) as f64));
}

/// Branch prefactors of the collective local-decay jump for sector `j2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPrefactors {
    /// `J -> J`
    pub keep: f64,
    /// `J -> J-1`
    pub lower: f64,
    /// `J -> J+1`
    pub raise: f64,
}

pub fn branch_prefactors(weights: &SectorWeights, j2: u32) -> BranchPrefactors {
    let j = j2 as f64 / 2.0;
    let d = weights.degeneracy(j2) as f64;
    let alpha = weights.alpha(j2) as f64;
    let alpha_up = weights.alpha(j2 + 2) as f64;
    let raise = alpha_up / (2.0 * (j + 1.0) * d);
    if j2 == 0 {
        // the keep and lower branches carry A_- and B_- factors that vanish at J = 0
        return BranchPrefactors { keep: 0.0, lower: 0.0, raise };
    }
    BranchPrefactors {
        keep: (1.0 + alpha_up / d * (2.0 * j + 1.0) / (j + 1.0)) / (2.0 * j),
        lower: alpha / (2.0 * j * d),
        raise,
    }
}

/// `A_-^{J,x} = sqrt((J+x)(J-x+1))`.
pub fn coeff_keep(j2: u32, x2: i32) -> f64 {
    let (j, x) = (j2 as f64 / 2.0, x2 as f64 / 2.0);
    sqrt(((j + x) * (j - x + 1.0)).max(0.0))
}

/// `B_-^{J,x} = -sqrt((J+x)(J+x-1))`.
pub fn coeff_lower(j2: u32, x2: i32) -> f64 {
    let (j, x) = (j2 as f64 / 2.0, x2 as f64 / 2.0);
    -sqrt(((j + x) * (j + x - 1.0)).max(0.0))
}

/// `D_-^{J,x} = sqrt((J-x+1)(J-x+2))`.
pub fn coeff_raise(j2: u32, x2: i32) -> f64 {
    let (j, x) = (j2 as f64 / 2.0, x2 as f64 / 2.0);
    sqrt(((j - x + 1.0) * (j - x + 2.0)).max(0.0))
}

fn emit_local_decay(
    gamma: f64,
    layout: &BasisLayout,
    weights: &SectorWeights,
    dest: usize,
    sink: &mut RowSink,
) {
    if gamma == 0.0 {
        return;
    }
    let (i, l, k) = layout.split(dest);
    let t = layout.flat_to_triple(i).unwrap();
    let qubits = layout.qubits() as f64;
    let (n2, m2) = (t.n2 + 2, t.m2 + 2);

    // jump from J (same sector)
    if let Some(s) = layout.component(SpinTriple { j2: t.j2, n2, m2 }, l, k) {
        let p = branch_prefactors(weights, t.j2).keep;
        let w = p * coeff_keep(t.j2, n2) * coeff_keep(t.j2, m2);
        sink.push(s, real(gamma * w));
    }
    // jump from J+1 down to J
    let up = t.j2 + 2;
    if let Some(s) = layout.component(SpinTriple { j2: up, n2, m2 }, l, k) {
        let p = branch_prefactors(weights, up).lower;
        let w = p * coeff_lower(up, n2) * coeff_lower(up, m2);
        sink.push(s, real(gamma * w));
    }
    // jump from J-1 up to J
    if t.j2 >= 2 {
        let down = t.j2 - 2;
        if let Some(s) = layout.component(SpinTriple { j2: down, n2, m2 }, l, k) {
            let p = branch_prefactors(weights, down).raise;
            let w = p * coeff_raise(down, n2) * coeff_raise(down, m2);
            sink.push(s, real(gamma * w));
        }
    }
    // -1/2 {N/2 + S_z, rho}
    sink.push(dest, real(-0.5 * gamma * (qubits + t.n() + t.m())));
}

/// `rho -> -i[H, rho]`.
pub fn hamiltonian_commutator(params: &SimParams, layout: &BasisLayout) -> Result<SuperOp> {
    params.validate()?;
    check_layout(params, layout)?;
    Ok(SuperOp::from_rows(layout.total_dim(), |dest, sink| {
        emit_hamiltonian(params, layout, dest, sink)
    }))
}

/// `rho -> kappa D[a](rho)`.
pub fn cavity_dissipator(kappa: f64, layout: &BasisLayout) -> Result<SuperOp> {
    check_rate("kappa", kappa)?;
    Ok(SuperOp::from_rows(layout.total_dim(), |dest, sink| emit_cavity(kappa, layout, dest, sink)))
}

/// `rho -> gamma sum_j D[sigma_-^(j)](rho)` in collective form.
pub fn local_qubit_dissipator(
    gamma: f64,
    layout: &BasisLayout,
    weights: &SectorWeights,
) -> Result<SuperOp> {
    check_rate("gamma", gamma)?;
    if weights.qubits() != layout.qubits() {
        return Err(Error::LayoutMismatch);
    }
    Ok(SuperOp::from_rows(layout.total_dim(), |dest, sink| {
        emit_local_decay(gamma, layout, weights, dest, sink)
    }))
}

/// The full generator, fused into a single sparse table.
pub fn assemble_rhs(params: &SimParams, layout: &BasisLayout) -> Result<SuperOp> {
    params.validate()?;
    check_layout(params, layout)?;
    let weights = SectorWeights::new(layout.qubits())?;
    Ok(SuperOp::from_rows(layout.total_dim(), |dest, sink| {
        emit_hamiltonian(params, layout, dest, sink);
        emit_cavity(params.kappa, layout, dest, sink);
        emit_local_decay(params.gamma, layout, &weights, dest, sink);
    }))
}

fn check_layout(params: &SimParams, layout: &BasisLayout) -> Result<()> {
    if params.qubits != layout.qubits() {
        return Err(Error::LayoutMismatch);
    }
    Ok(())
}

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::InvalidParameter(format!("{name} = {rate} must be finite and >= 0")));
    }
    Ok(())
}
