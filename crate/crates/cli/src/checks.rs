//! Equivalence suites between the symmetric-basis code and the full-space
//! reference simulator, for `N <= 4`.

use std::sync::Arc;

use dicke_qfi_core::blocks::MatrixStructure;
use dicke_qfi_core::evolve::DensityState;
use dicke_qfi_core::fisher::{sample_pipeline, Diagnostics, QfiConfig, QfiPipeline};
use dicke_qfi_core::metrology::linspace;
use dicke_qfi_core::operators::assemble_rhs;
use dicke_qfi_core::oracle::{full_rhs, oracle_pipeline, FullState, OracleBasis};
use dicke_qfi_core::{BasisLayout, Complex64, Error, IntegratorConfig, ProbeFamily, SimParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub const RHS_TOL: f64 = 1e-10;
pub const ROUND_TRIP_TOL: f64 = 1e-12;
pub const QFI_REL_TOL: f64 = 1e-6;
/// QFI values at or below this are compared absolutely, not relatively.
pub const QFI_FLOOR: f64 = 1e-6;
pub const TRACE_DRIFT_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const MIN_EIGENVALUE_TOL: f64 = -1e-8;
pub const QFI_T_MAX: f64 = 10.0;
pub const RATES: [f64; 3] = [0.0, 0.2, 1.0];

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteReport {
    fn new(name: &'static str, cases: usize, max_deviation: f64, tolerance: f64) -> Self {
        SuiteReport { name, cases, max_deviation, tolerance, passed: max_deviation <= tolerance }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} cases, max deviation {:.3e} (tolerance {:.0e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_deviation,
            self.tolerance
        )
    }
}

/// Invariants along every trajectory of the QFI suite.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Conservation {
    pub trajectories: usize,
    pub max_trace_drift: f64,
    pub max_hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl Conservation {
    pub fn passed(&self) -> bool {
        self.max_trace_drift < TRACE_DRIFT_TOL
            && self.max_hermiticity < HERMITICITY_TOL
            && self.min_eigenvalue > MIN_EIGENVALUE_TOL
    }

    pub fn line(&self) -> String {
        format!(
            "{} conservation: {} trajectories, trace drift {:.3e} (< {:.0e}), hermiticity {:.3e} (< {:.0e}), min eigenvalue {:.3e} (> {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.trajectories,
            self.max_trace_drift,
            TRACE_DRIFT_TOL,
            self.max_hermiticity,
            HERMITICITY_TOL,
            self.min_eigenvalue,
            MIN_EIGENVALUE_TOL
        )
    }
}

/// One QFI comparison.
#[derive(Debug, Clone, Serialize)]
pub struct QfiCase {
    pub probe: String,
    pub qubits: u32,
    pub kappa: f64,
    pub gamma: f64,
    pub max_relative: f64,
    pub peak_symmetric: f64,
    pub peak_oracle: f64,
    pub diagnostics_symmetric: CaseDiagnostics,
    pub diagnostics_oracle: CaseDiagnostics,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CaseDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl From<Diagnostics> for CaseDiagnostics {
    fn from(d: Diagnostics) -> Self {
        CaseDiagnostics {
            max_trace_drift: d.max_trace_drift,
            max_hermiticity: d.max_hermiticity,
            min_eigenvalue: d.min_eigenvalue,
        }
    }
}

/// Random positive trace-one state with every sector populated.
pub fn random_state(rng: &mut impl Rng, layout: Arc<BasisLayout>) -> DensityState {
    let blocks: Vec<DMatrix<Complex64>> = layout
        .block_dims()
        .iter()
        .map(|&d| {
            let a = DMatrix::from_fn(d, d, |_, _| {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            });
            &a * a.adjoint()
        })
        .collect();
    let total: f64 = blocks.iter().map(|b| b.trace().re).sum();
    let mut rho = DensityState::zeros(layout.clone());
    for idx in 0..layout.total_dim() {
        let (b, r, c) = layout.locate(idx);
        rho.as_mut_slice()[idx] = blocks[b][(r, c)] / total;
    }
    rho
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Symmetric-basis RHS against the projected full-space RHS on random states
/// and random parameters.
pub fn rhs_suite(seed: u64) -> Result<SuiteReport, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut cases, mut worst) = (0, 0.0f64);
    for q in 2..=4u32 {
        let basis = OracleBasis::new(q)?;
        for _ in 0..5 {
            let params = SimParams {
                omega_q: rng.random_range(-0.5..0.5),
                omega_c: rng.random_range(-0.5..0.5),
                ..SimParams::new(q, rng.random_range(0.1..2.0), rng.random_range(0.0..1.5), rng.random_range(0.0..1.5))
            };
            let sym = random_state(&mut rng, basis.layout().clone());
            let full = basis.expand(&sym)?;
            let mut d_sym = vec![Complex64::new(0.0, 0.0); sym.as_slice().len()];
            assemble_rhs(&params, basis.layout())?.apply(sym.as_slice(), &mut d_sym);
            let mut d_full = vec![Complex64::new(0.0, 0.0); full.as_slice().len()];
            full_rhs(&params)?.apply(full.as_slice(), &mut d_full);
            let projected = basis.symmetrize(&FullState::from_vec(q, d_full)?)?;
            worst = worst.max(max_diff(&d_sym, projected.as_slice()));
            cases += 1;
        }
    }
    Ok(SuiteReport::new("rhs", cases, worst, RHS_TOL))
}

/// `symmetrize(expand(rho)) = rho` on random states.
pub fn round_trip_suite(seed: u64) -> Result<SuiteReport, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (mut cases, mut worst) = (0, 0.0f64);
    for q in 1..=4u32 {
        let basis = OracleBasis::new(q)?;
        for _ in 0..5 {
            let sym = random_state(&mut rng, basis.layout().clone());
            let full = basis.expand(&sym)?;
            worst = worst.max((full.trace() - sym.trace()).norm());
            worst = worst.max(max_diff(basis.symmetrize(&full)?.as_slice(), sym.as_slice()));
            cases += 1;
        }
    }
    Ok(SuiteReport::new("round-trip", cases, worst, ROUND_TRIP_TOL))
}

/// Probe families compared at `N`; Dicke-floor(N/2) is skipped where it equals Dicke-1.
pub fn suite_probes(q: u32) -> Vec<ProbeFamily> {
    let mut v = vec![ProbeFamily::Dicke(1)];
    if q / 2 != 1 {
        v.push(ProbeFamily::DickeHalf);
    }
    v.extend([ProbeFamily::XPolarized, ProbeFamily::Ghz]);
    v
}

/// Relative deviation, or absolute when both values are at or below the floor.
pub fn qfi_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale <= QFI_FLOOR {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Pair floor for the QFI comparison. The production floor acts on block
/// eigenvalues, which in the full space are split over `d_J` copies and so
/// scaled by `1/d_J`; the two representations then keep different pairs near
/// the floor. A floor well below the eigenvalue noise removes that effect.
pub const ORACLE_PAIR_FLOOR: f64 = 1e-12;

/// Results of one pass of the QFI comparison.
#[derive(Debug, Clone, Serialize)]
pub struct QfiComparison {
    pub report: SuiteReport,
    /// Symmetric-basis trajectories.
    pub conservation: Conservation,
    /// Full-space trajectories.
    pub conservation_oracle: Conservation,
    pub cases: Vec<QfiCase>,
}

fn conservation(trajectories: usize, d: &Diagnostics) -> Conservation {
    Conservation {
        trajectories,
        max_trace_drift: d.max_trace_drift,
        max_hermiticity: d.max_hermiticity,
        min_eigenvalue: d.min_eigenvalue,
    }
}

/// F(t) in both representations for every probe, `N` in 2..=4 and rate pair.
pub fn qfi_suite(
    name: &'static str,
    points: usize,
    qfi: &QfiConfig,
    integrator: &IntegratorConfig,
) -> Result<QfiComparison, Error> {
    let times = linspace(0.0, QFI_T_MAX, points);
    let (mut diag_sym, mut diag_full) = (Diagnostics::default(), Diagnostics::default());
    let mut pairs = 0;
    let mut cases = Vec::new();
    for q in 2..=4u32 {
        for family in suite_probes(q) {
            let probe = family.at(q)?;
            for &kappa in &RATES {
                for &gamma in &RATES {
                    let params = SimParams::dimensionless(q, kappa, gamma);
                    let mut sym = QfiPipeline::for_probe(&probe, &params, *qfi, *integrator)?.track_eigenvalues(true);
                    let a = sample_pipeline(&mut sym, &times)?;
                    let mut full = oracle_pipeline(&probe, &params, *qfi, *integrator)?.track_eigenvalues(true);
                    let b = sample_pipeline(&mut full, &times)?;
                    diag_sym.merge(&sym.diagnostics());
                    diag_full.merge(&full.diagnostics());
                    pairs += 1;
                    let max_relative = a.iter().zip(&b).map(|(&x, &y)| qfi_deviation(x, y)).fold(0.0, f64::max);
                    cases.push(QfiCase {
                        probe: family.to_string(),
                        qubits: q,
                        kappa,
                        gamma,
                        max_relative,
                        peak_symmetric: a.iter().copied().fold(0.0, f64::max),
                        peak_oracle: b.iter().copied().fold(0.0, f64::max),
                        diagnostics_symmetric: sym.diagnostics().into(),
                        diagnostics_oracle: full.diagnostics().into(),
                    });
                }
            }
        }
    }
    let worst = cases.iter().map(|c| c.max_relative).fold(0.0, f64::max);
    Ok(QfiComparison {
        report: SuiteReport::new(name, cases.len(), worst, QFI_REL_TOL),
        conservation: conservation(2 * pairs, &diag_sym),
        conservation_oracle: conservation(2 * pairs, &diag_full),
        cases,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub rhs: SuiteReport,
    pub round_trip: SuiteReport,
    /// Comparison at [`ORACLE_PAIR_FLOOR`]; decides pass or fail.
    pub qfi: QfiComparison,
    /// Same comparison at the configured pair floor, for information.
    pub qfi_configured_floor: QfiComparison,
    pub qfi_configured_floor_value: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.rhs.passed && self.round_trip.passed && self.qfi.report.passed && self.qfi.conservation.passed()
    }

    pub fn lines(&self) -> Vec<String> {
        let info = &self.qfi_configured_floor;
        vec![
            self.rhs.line(),
            self.round_trip.line(),
            self.qfi.report.line(),
            self.qfi.conservation.line(),
            format!(
                "INFO full-space trajectories: trace drift {:.3e}, hermiticity {:.3e}, min eigenvalue {:.3e}",
                self.qfi.conservation_oracle.max_trace_drift,
                self.qfi.conservation_oracle.max_hermiticity,
                self.qfi.conservation_oracle.min_eigenvalue
            ),
            format!(
                "INFO qfi at pair floor {:.0e}: max deviation {:.3e}",
                self.qfi_configured_floor_value, info.report.max_deviation
            ),
        ]
    }
}

pub fn run_all(seed: u64, points: usize, qfi: &QfiConfig, integrator: &IntegratorConfig) -> Result<OracleReport, Error> {
    let strict = QfiConfig { pair_floor: ORACLE_PAIR_FLOOR, ..*qfi };
    Ok(OracleReport {
        rhs: rhs_suite(seed)?,
        round_trip: round_trip_suite(seed)?,
        qfi: qfi_suite("qfi", points, &strict, integrator)?,
        qfi_configured_floor: qfi_suite("qfi-configured-floor", points, qfi, integrator)?,
        qfi_configured_floor_value: qfi.pair_floor,
    })
}
