//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 6, 8 and 9 take from minutes to tens of minutes on one core and
//! are skipped unless `DICKE_QFI_SLOW=1`. The process exits non-zero when any
//! executed criterion fails.

use std::fmt::Write as _;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use dicke_qfi::checks::{self, ORACLE_PAIR_FLOOR};
use dicke_qfi_core::fisher::{qfi_series, QfiConfig};
use dicke_qfi_core::integrator::IntegratorConfig;
use dicke_qfi_core::metrology::{
    dicke_excitation_scan, exponent_cell, scaling_fit, time_scan, ExcitationScan, Objective, ScanConfig,
};
use dicke_qfi_core::{ProbeFamily, SimParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

// criterion 1
const C1_DELTA: f64 = 1e-4;
const C1_INFO_DELTA: f64 = 1e-3;
const C1_REL_TOL: f64 = 1e-6;
const C1_SECONDS: f64 = 1.0;
// criteria 2 and 3
const C2_POINTS: usize = 50;
const C2_SECONDS: f64 = 600.0;
// criterion 4
const C4_N: [u32; 5] = [4, 8, 12, 16, 20];
const C4_SECONDS: f64 = 1800.0;
// criterion 5
const C5_N: std::ops::RangeInclusive<u32> = 4..=14;
const C5_FROM: u32 = 8;
const C5_T_MAX: f64 = 10.0;
const C5_POINTS: usize = 200;
// criterion 6 and 9
const C6_QUBITS: u32 = 20;
const C6_GAMMA: f64 = 0.2;
const C6_KAPPA: [f64; 3] = [0.1, 0.5, 1.0];
const C6_TIES: usize = 1;
// criterion 7
const C7_B: [f64; 4] = [0.5, 1.0, 1.5, 2.0];
const C7_A: f64 = 2.0;
const C7_C: f64 = 1.0;
const C7_N: [f64; 5] = [4.0, 8.0, 12.0, 16.0, 20.0];
const C7_EXACT_TOL: f64 = 1e-6;
const C7_NOISE: f64 = 0.01;
const C7_SEEDS: u64 = 10;
const C7_NOISY_TOL: f64 = 0.15;
const C7_SECONDS: f64 = 10.0;
// criterion 8
const C8_RATE: f64 = 0.1;
const C8_N: [u32; 5] = [4, 8, 12, 16, 20];
const C8_MIN_B: f64 = 1.3;
// time grid for the scans of criteria 4, 6, 8, 9
const T_MAX: f64 = 20.0;
const POINTS: usize = 400;

#[derive(Default)]
struct Report {
    results: Vec<bool>,
}

impl Report {
    fn check(&mut self, id: u32, passed: bool, text: String) {
        println!("{} criterion {id}: {text}", if passed { "PASS" } else { "FAIL" });
        self.results.push(passed);
    }

    fn skip(&mut self, id: u32, why: &str) {
        println!("SKIP criterion {id}: {why}");
    }

    fn failed(&self) -> usize {
        self.results.iter().filter(|&&p| !p).count()
    }
}

static RERUN: AtomicBool = AtomicBool::new(false);

fn info(text: String) {
    if !RERUN.load(Ordering::Relaxed) {
        println!("INFO {text}");
    }
}

fn scan_config() -> ScanConfig {
    ScanConfig::uniform(T_MAX, POINTS)
}

/// Shortest round-trip text of every number a criterion produced, used for
/// the determinism check.
type Artifact = String;

fn criterion_1() -> (bool, String, Artifact) {
    let start = Instant::now();
    let times: Vec<f64> = (1..=20).map(|i| 0.15 * i as f64).collect();
    let probe = ProbeFamily::Dicke(1).at(1).unwrap();
    let params = SimParams::dimensionless(1, 0.0, 0.0);
    let worst = |delta: f64| {
        let s = qfi_series(&probe, &params, &times, &QfiConfig::with_delta(delta), &IntegratorConfig::default()).unwrap();
        let dev = times.iter().zip(&s.f_scaled).map(|(t, f)| (f / (4.0 * t * t) - 1.0).abs()).fold(0.0, f64::max);
        (dev, s.f_scaled)
    };
    let (dev, values) = worst(C1_DELTA);
    let seconds = start.elapsed().as_secs_f64();
    let (dev_info, _) = worst(C1_INFO_DELTA);
    info(format!("criterion 1 at delta {C1_INFO_DELTA:e}: max relative deviation {dev_info:.3e}"));
    let passed = dev < C1_REL_TOL && seconds < C1_SECONDS;
    let text = format!(
        "F = 4t^2 at 20 points, delta {C1_DELTA:e}: max relative deviation {dev:.3e} (< {C1_REL_TOL:e}), {seconds:.2}s (< {C1_SECONDS}s)"
    );
    (passed, text, format!("{values:?}"))
}

struct OracleOutcome {
    c2: (bool, String),
    c3: (bool, String),
    artifact: Artifact,
}

fn criteria_2_3() -> OracleOutcome {
    let start = Instant::now();
    let strict = QfiConfig { pair_floor: ORACLE_PAIR_FLOOR, ..QfiConfig::default() };
    let cmp = checks::qfi_suite("qfi", C2_POINTS, &strict, &IntegratorConfig::default()).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let configured = checks::qfi_suite("qfi", C2_POINTS, &QfiConfig::default(), &IntegratorConfig::default()).unwrap();
    info(format!(
        "criterion 2 at pair floor {:e}: max relative deviation {:.3e}",
        QfiConfig::default().pair_floor,
        configured.report.max_deviation
    ));
    let o = &cmp.conservation_oracle;
    info(format!(
        "criterion 3 full-space trajectories: trace drift {:.3e}, hermiticity {:.3e}, min eigenvalue {:.3e}",
        o.max_trace_drift, o.max_hermiticity, o.min_eigenvalue
    ));
    let r = &cmp.report;
    let c2 = (
        r.passed && seconds < C2_SECONDS,
        format!(
            "{} cases at pair floor {ORACLE_PAIR_FLOOR:e}: max relative deviation {:.3e} (< {:e}), {seconds:.1}s (< {C2_SECONDS}s)",
            r.cases, r.max_deviation, r.tolerance
        ),
    );
    let c = &cmp.conservation;
    let c3 = (c.passed(), c.line().trim_start_matches("PASS ").trim_start_matches("FAIL ").to_string());
    let mut artifact = String::new();
    for case in &cmp.cases {
        writeln!(artifact, "{} {} {:?} {:?} {:?} {:?}", case.probe, case.qubits, case.kappa, case.gamma, case.max_relative, case.peak_symmetric).unwrap();
    }
    writeln!(artifact, "{:?}", cmp.conservation).unwrap();
    OracleOutcome { c2, c3, artifact }
}

fn criterion_4() -> (bool, String, Artifact) {
    let start = Instant::now();
    let cfg = scan_config();
    let mut peaks = Vec::new();
    for &n in &C4_N {
        let probe = ProbeFamily::Dicke(1).at(n).unwrap();
        let s = time_scan(&probe, &SimParams::dimensionless(n, 0.2, 0.6), &cfg).unwrap();
        peaks.push(s.peak);
    }
    let seconds = start.elapsed().as_secs_f64();
    let interior = peaks.iter().all(|p| !p.boundary && p.peak_value.is_finite());
    let increasing = peaks.windows(2).all(|w| w[1].peak_value > w[0].peak_value);
    let values: Vec<String> = peaks.iter().map(|p| format!("{:.2}@{:.2}", p.peak_value, p.peak_time)).collect();
    let text = format!(
        "Dicke-1 peaks F g^2 @ gt for N {C4_N:?}: {} (interior {interior}, increasing {increasing}), {seconds:.1}s (< {C4_SECONDS}s)",
        values.join(", ")
    );
    let artifact = format!("{:?}", peaks.iter().map(|p| (p.peak_time, p.peak_value)).collect::<Vec<_>>());
    (interior && increasing && seconds < C4_SECONDS, text, artifact)
}

fn criterion_5() -> (bool, String, Artifact) {
    let cfg = ScanConfig::uniform(C5_T_MAX, C5_POINTS);
    let families = [ProbeFamily::Ghz, ProbeFamily::Dicke(1), ProbeFamily::XPolarized];
    let mut worst_margin = f64::INFINITY;
    let mut artifact = String::new();
    let mut passed = true;
    for n in C5_N {
        let params = SimParams::dimensionless(n, 1.0, 1.0);
        let peaks: Vec<f64> = families
            .iter()
            .map(|f| time_scan(&f.at(n).unwrap(), &params, &cfg).unwrap().peak.peak_value)
            .collect();
        writeln!(artifact, "{n} {peaks:?}").unwrap();
        if n >= C5_FROM {
            let margin = peaks[1].min(peaks[2]) / peaks[0];
            worst_margin = worst_margin.min(margin);
            passed &= peaks[0] < peaks[1] && peaks[0] < peaks[2];
        }
    }
    let text = format!(
        "kappa = gamma = 1, N {}..={}, gt <= {C5_T_MAX}: GHZ lowest for N >= {C5_FROM}, smallest ratio of the next probe to GHZ {worst_margin:.3}",
        C5_N.start(),
        C5_N.end()
    );
    (passed, text, artifact)
}

fn criterion_6_scans() -> Vec<ExcitationScan> {
    let cfg = scan_config();
    let n_values: Vec<u32> = (1..=C6_QUBITS).collect();
    C6_KAPPA
        .iter()
        .map(|&k| dicke_excitation_scan(&SimParams::dimensionless(C6_QUBITS, k, C6_GAMMA), &n_values, &cfg).unwrap())
        .collect()
}

fn argmax_profile(scans: &[ExcitationScan], objective: Objective) -> (Vec<u32>, bool, usize) {
    let stars: Vec<u32> = scans.iter().map(|s| s.argmax(objective).unwrap()).collect();
    let interior = stars.iter().all(|&n| 1 < n && n < C6_QUBITS);
    let ties = stars.windows(2).filter(|w| w[0] == w[1]).count();
    (stars, interior, ties)
}

fn criterion_6(scans: &[ExcitationScan]) -> (bool, String, Artifact) {
    let (stars, interior, ties) = argmax_profile(scans, Objective::Qfi);
    let nondecreasing = stars.windows(2).all(|w| w[1] >= w[0]);
    let text = format!(
        "N = {C6_QUBITS}, gamma = {C6_GAMMA}, kappa {C6_KAPPA:?}: n* = {stars:?} (interior {interior}, nondecreasing {nondecreasing}, ties {ties} <= {C6_TIES})"
    );
    let artifact = format!("{:?}", scans.iter().map(|s| s.peaks.iter().map(|p| p.peak_value).collect::<Vec<_>>()).collect::<Vec<_>>());
    (interior && nondecreasing && ties <= C6_TIES, text, artifact)
}

fn criterion_9(scans: &[ExcitationScan]) -> (bool, String) {
    let (stars, interior, _) = argmax_profile(scans, Objective::QfiPerTime);
    let (f_stars, _, _) = argmax_profile(scans, Objective::Qfi);
    let nondecreasing = stars.windows(2).all(|w| w[1] >= w[0]);
    info(format!("criterion 9 F/t argmax nondecreasing in kappa: {nondecreasing}"));
    let text = format!("F/t argmax n* = {stars:?} against F argmax {f_stars:?}: interior {interior}");
    (interior, text)
}

fn noisy(y: f64, rng: &mut ChaCha8Rng) -> f64 {
    let xi: f64 = StandardNormal.sample(rng);
    y * (1.0 + C7_NOISE * xi)
}

fn criterion_7() -> (bool, String, Artifact) {
    let start = Instant::now();
    let mut artifact = String::new();
    let mut exact_dev = 0.0f64;
    let mut noisy_dev = 0.0f64;
    for &b in &C7_B {
        let clean: Vec<(f64, f64)> = C7_N.iter().map(|&n| (n, C7_A * n.powf(b) + C7_C)).collect();
        let fit = scaling_fit(&clean).unwrap();
        exact_dev = exact_dev.max((fit.b - b).abs());
        writeln!(artifact, "{b:?} {:?}", fit.b).unwrap();
        for seed in 0..C7_SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<(f64, f64)> = clean.iter().map(|&(n, y)| (n, noisy(y, &mut rng))).collect();
            let fit = scaling_fit(&points).unwrap();
            noisy_dev = noisy_dev.max((fit.b - b).abs());
            writeln!(artifact, "{b:?} {seed} {:?}", fit.b).unwrap();
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let passed = exact_dev < C7_EXACT_TOL && noisy_dev <= C7_NOISY_TOL && seconds < C7_SECONDS;
    let text = format!(
        "b in {C7_B:?}: noiseless max |b - b0| {exact_dev:.2e} (< {C7_EXACT_TOL:e}), {noise_pct}% noise over {C7_SEEDS} seeds max |b - b0| {noisy_dev:.3} (<= {C7_NOISY_TOL}), {seconds:.2}s (< {C7_SECONDS}s)",
        noise_pct = C7_NOISE * 100.0
    );
    (passed, text, artifact)
}

fn criterion_8() -> (bool, String) {
    let cfg = scan_config();
    let cell = |family| exponent_cell(family, C8_RATE, C8_RATE, &C8_N, &cfg).unwrap();
    let dicke = cell(ProbeFamily::DickeHalf);
    let x = cell(ProbeFamily::XPolarized);
    let show = |r: &Result<dicke_qfi_core::metrology::ScalingFit, dicke_qfi_core::Error>| match r {
        Ok(f) => format!("{:.3}", f.b),
        Err(e) => format!("no fit ({e})"),
    };
    let peaks = |c: &dicke_qfi_core::metrology::ExponentCell| {
        c.peaks.iter().map(|p| format!("{:.1}", p.peak_value)).collect::<Vec<_>>().join(", ")
    };
    info(format!("criterion 8 Dicke-half peaks: {}", peaks(&dicke)));
    info(format!("criterion 8 X-polarized peaks: {}", peaks(&x)));
    let (bd, bx) = (dicke.exponent(Objective::Qfi), x.exponent(Objective::Qfi));
    let passed = matches!((bd, bx), (Some(d), Some(x)) if d > C8_MIN_B && x < d);
    let text = format!(
        "kappa = gamma = {C8_RATE}, N {C8_N:?}: Dicke-half b = {} (> {C8_MIN_B}), X-polarized b = {} (< Dicke-half)",
        show(&dicke.fit),
        show(&x.fit)
    );
    (passed, text)
}

fn main() -> ExitCode {
    let slow = std::env::var("DICKE_QFI_SLOW").is_ok_and(|v| v == "1");
    let mut report = Report::default();

    let first = |slow: bool| {
        let c1 = criterion_1();
        let oracle = criteria_2_3();
        let c4 = criterion_4();
        let c5 = criterion_5();
        let c6 = slow.then(criterion_6_scans);
        let c7 = criterion_7();
        (c1, oracle, c4, c5, c6, c7)
    };

    let (c1, oracle, c4, c5, c6_scans, c7) = first(slow);
    report.check(1, c1.0, c1.1.clone());
    report.check(2, oracle.c2.0, oracle.c2.1.clone());
    report.check(3, oracle.c3.0, oracle.c3.1.clone());
    report.check(4, c4.0, c4.1.clone());
    report.check(5, c5.0, c5.1.clone());
    let c6 = c6_scans.as_deref().map(criterion_6);
    match &c6 {
        Some(c6) => report.check(6, c6.0, c6.1.clone()),
        None => report.skip(6, "slow; set DICKE_QFI_SLOW=1"),
    }
    report.check(7, c7.0, c7.1.clone());
    if slow {
        let (passed, text) = criterion_8();
        report.check(8, passed, text);
    } else {
        report.skip(8, "slow; set DICKE_QFI_SLOW=1");
    }
    match c6_scans.as_deref() {
        Some(scans) => {
            let (passed, text) = criterion_9(scans);
            report.check(9, passed, text);
        }
        None => report.skip(9, "slow; set DICKE_QFI_SLOW=1"),
    }

    let artifacts = |c1: &Artifact, oracle: &Artifact, c4: &Artifact, c5: &Artifact, c6: Option<&Artifact>, c7: &Artifact| {
        [c1, oracle, c4, c5, c6.unwrap_or(&String::new()), c7].map(|s| s.as_bytes().to_vec())
    };
    let before = artifacts(&c1.2, &oracle.artifact, &c4.2, &c5.2, c6.as_ref().map(|c| &c.2), &c7.2);
    RERUN.store(true, Ordering::Relaxed);
    let (r1, roracle, r4, r5, r6_scans, r7) = first(slow);
    let r6 = r6_scans.as_deref().map(criterion_6);
    let after = artifacts(&r1.2, &roracle.artifact, &r4.2, &r5.2, r6.as_ref().map(|c| &c.2), &r7.2);
    let differing: Vec<u32> = [1, 2, 4, 5, 6, 7].into_iter().zip(before.iter().zip(&after)).filter(|(_, (a, b))| a != b).map(|(i, _)| i).collect();
    let covered = if slow { "1-7" } else { "1-5, 7" };
    report.check(
        10,
        differing.is_empty(),
        format!("second run of criteria {covered} byte-identical; differing: {differing:?}"),
    );

    let failed = report.failed();
    println!("{} criteria executed, {failed} failed", report.results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
