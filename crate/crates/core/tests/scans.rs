use dicke_qfi_core::fisher::{qfi_series, qfi_series_physical, QfiConfig};
use dicke_qfi_core::metrology::{
    dicke_excitation_scan, finish_scan, scan_pipeline, sweep_grid, time_scan, Objective, ScanConfig,
};
use dicke_qfi_core::probes::ProbeFamily;
use dicke_qfi_core::{IntegratorConfig, SimParams};

fn scan_cfg(t_max: f64, points: usize) -> ScanConfig {
    ScanConfig::uniform(t_max, points)
}

#[test]
fn replayed_scan_matches_direct_scan() {
    let probe = ProbeFamily::Dicke(1).at(3).unwrap();
    let params = SimParams::dimensionless(3, 0.2, 0.6);
    let cfg = scan_cfg(8.0, 41);
    let direct = time_scan(&probe, &params, &cfg).unwrap();

    let mut p = scan_pipeline(&probe, &params, &cfg).unwrap();
    let sweep = sweep_grid(&mut p, &cfg.times).unwrap();
    drop(p);
    let replay = finish_scan(&probe, &params, &cfg, &sweep, None).unwrap();
    assert_eq!(direct, replay);
    assert!(direct.peak.refined && !direct.peak.boundary);
    assert!(direct.peak.peak_value >= direct.series.f_scaled[direct.peak.grid_index]);
    assert!(direct.peak_per_time.peak_value * direct.peak_per_time.peak_time <= direct.peak.peak_value);
}

#[test]
fn dimensionful_and_rescaled_qfi_agree() {
    // F(g = 2, t = 1) g^2 against F(g = 1, gt = 2), delta scaled with g
    let probe = ProbeFamily::Dicke(1).at(3).unwrap();
    let phys = SimParams::new(3, 2.0, 0.4, 1.2);
    let a = qfi_series_physical(&probe, &phys, &[0.0, 1.0], &QfiConfig::with_delta(2e-3), &IntegratorConfig::default())
        .unwrap();
    let b = qfi_series(&probe, &SimParams::dimensionless(3, 0.2, 0.6), &[0.0, 2.0], &QfiConfig::default(), &IntegratorConfig::default())
        .unwrap();
    let (fa, fb) = (a.f[1] * 4.0, b.f_scaled[1]);
    assert!((fa - fb).abs() <= 1e-6 * fb, "{fa} vs {fb}");
}

#[test]
fn peak_is_robust_to_delta_and_tolerances() {
    let probe = ProbeFamily::Dicke(2).at(5).unwrap();
    let params = SimParams::dimensionless(5, 0.2, 0.6);
    let base = scan_cfg(8.0, 81);
    let reference = time_scan(&probe, &params, &base).unwrap().peak;
    assert!(!reference.boundary);

    let half_delta = ScanConfig { qfi: QfiConfig::with_delta(5e-4), ..base.clone() };
    let p = time_scan(&probe, &params, &half_delta).unwrap().peak;
    let rel = (p.peak_value - reference.peak_value).abs() / reference.peak_value;
    assert!(rel < 1e-3, "delta: {rel:e}");

    let tight = IntegratorConfig { rtol: 5e-11, atol: 5e-11, ..IntegratorConfig::default() };
    let half_tol = ScanConfig { integrator: tight, ..base };
    let p = time_scan(&probe, &params, &half_tol).unwrap().peak;
    let rel = (p.peak_value - reference.peak_value).abs() / reference.peak_value;
    assert!(rel < 1e-6, "tolerance: {rel:e}");
}

#[test]
fn ground_state_has_no_information() {
    let params = SimParams::dimensionless(4, 0.2, 0.6);
    let scan = dicke_excitation_scan(&params, &[0, 1, 2], &scan_cfg(10.0, 51)).unwrap();
    assert!(scan.peaks[0].peak_value.abs() < 1e-12);
    assert!(scan.peaks[1].peak_value > 0.0);
    assert_ne!(scan.argmax(Objective::Qfi), Some(0));
}

#[test]
fn closed_system_peak_sits_on_boundary() {
    let probe = ProbeFamily::Dicke(1).at(2).unwrap();
    let scan = time_scan(&probe, &SimParams::dimensionless(2, 0.0, 0.0), &scan_cfg(3.0, 31)).unwrap();
    assert!(scan.peak.boundary);
}
