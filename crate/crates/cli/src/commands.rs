use std::path::{Path, PathBuf};
use std::time::Instant;

use dicke_qfi_core::fisher::{Diagnostics, QfiSeries};
use dicke_qfi_core::metrology::{exponent_cell_from_scans, valid_qubits, Objective, PeakResult, ScalingFit, TimeScan};
use dicke_qfi_core::{Error, ProbeFamily, SimParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{DickeScanArgs, ExponentMapArgs, OracleCheckArgs, TimeScanArgs};
use crate::cache::CODE_VERSION;
use crate::checks;
use crate::config::{self, Numerics, RunSettings, DEFAULT_N_LIST};
use crate::grid::{parse_floats, parse_integers, ListSpec};
use crate::output::{csv_bytes, exponent_file, json_bytes, num, time_file, write_atomic};
use crate::runner::{run_scans, ScanJob, ScanOutcome};
use crate::CliError;

#[derive(Serialize)]
struct Manifest<'a, I: Serialize> {
    tool: &'static str,
    version: &'static str,
    code_version: &'static str,
    command: &'static str,
    numerics: &'a Numerics,
    run: &'a RunSettings,
    inputs: I,
    outputs: Vec<String>,
    cells: Vec<Value>,
    failures: usize,
    wall_seconds: f64,
}

#[derive(Serialize)]
pub struct DiagnosticsView {
    pub max_trace_drift: f64,
    pub max_hermiticity: f64,
    /// `None` when no eigenvalue was computed.
    pub min_eigenvalue: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl From<&Diagnostics> for DiagnosticsView {
    fn from(d: &Diagnostics) -> Self {
        DiagnosticsView {
            max_trace_drift: d.max_trace_drift,
            max_hermiticity: d.max_hermiticity,
            min_eigenvalue: d.min_eigenvalue.is_finite().then_some(d.min_eigenvalue),
            accepted_steps: d.accepted_steps,
            rejected_steps: d.rejected_steps,
        }
    }
}

/// A peak in both dimensionless and dimensionful units.
#[derive(Serialize)]
struct PeakView {
    objective: String,
    gt: f64,
    /// `F g^2`, or `F g^2 / gt` for the per-time objective.
    value_scaled: f64,
    t: f64,
    /// `F`, or `F / t`.
    value: f64,
    grid_index: usize,
    refined: bool,
    boundary: bool,
}

/// Dimensionful value of an objective given in `g = 1` units.
fn physical(objective: Objective, scaled: f64, g: f64) -> f64 {
    match objective {
        Objective::Qfi => scaled / (g * g),
        Objective::QfiPerTime => scaled / g,
    }
}

fn peak_view(p: &PeakResult, g: f64) -> PeakView {
    PeakView {
        objective: p.objective.to_string(),
        gt: p.peak_time,
        value_scaled: p.peak_value,
        t: p.peak_time / g,
        value: physical(p.objective, p.peak_value, g),
        grid_index: p.grid_index,
        refined: p.refined,
        boundary: p.boundary,
    }
}

#[derive(Serialize)]
struct FitView<'a> {
    a: f64,
    b: f64,
    c: f64,
    residual_norm: f64,
    gradient_norm: f64,
    iterations: usize,
    n_values: &'a [f64],
}

fn fit_json(fit: &Result<ScalingFit, Error>) -> Value {
    match fit {
        Ok(f) => json!(FitView {
            a: f.a,
            b: f.b,
            c: f.c,
            residual_norm: f.residual_norm,
            gradient_norm: f.gradient_norm,
            iterations: f.iterations,
            n_values: &f.n_values,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn scan_json(o: &ScanOutcome, g: f64) -> Value {
    let mut v = json!({
        "probe": o.job.probe.family.to_string(),
        "qubits": o.job.probe.qubits,
        "kappa": o.job.params.kappa,
        "gamma": o.job.params.gamma,
        "cache": o.cache,
        "seconds": o.seconds,
    });
    match &o.scan {
        Ok(s) => {
            v["peak"] = json!(peak_view(&s.peak, g));
            v["peak_per_time"] = json!(peak_view(&s.peak_per_time, g));
            v["diagnostics"] = json!(DiagnosticsView::from(&s.diagnostics));
        }
        Err(e) => v["error"] = json!(e.to_string()),
    }
    v
}

const PEAK_COLUMNS: [&str; 8] =
    ["peak_gt", "peak_F_g2", "peak_F", "boundary", "peak_gt_per_time", "peak_F_over_t", "boundary_per_time", "refined"];

fn peak_cells(s: &TimeScan, g: f64) -> Vec<String> {
    let (p, q) = (&s.peak, &s.peak_per_time);
    vec![
        num(p.peak_time),
        num(p.peak_value),
        num(physical(Objective::Qfi, p.peak_value, g)),
        p.boundary.to_string(),
        num(q.peak_time),
        num(physical(Objective::QfiPerTime, q.peak_value, g)),
        q.boundary.to_string(),
        (p.refined && q.refined).to_string(),
    ]
}

/// Series CSV: `gt, F, F_g2, F_over_t` with `F` and `F/t` in units set by `g`.
pub fn series_csv(series: &QfiSeries, g: f64) -> Result<Vec<u8>, CliError> {
    let s = QfiSeries::from_scaled(series.times.clone(), series.f_scaled.clone(), g).map_err(numerical)?;
    let rows: Vec<Vec<String>> = (0..s.len())
        .map(|i| vec![num(s.times[i]), num(s.f[i]), num(s.f_scaled[i]), num(s.f_over_t[i])])
        .collect();
    csv_bytes(&["gt", "F", "F_g2", "F_over_t"], &rows)
}

fn numerical(e: Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn parse_probe(s: Option<&String>) -> Result<ProbeFamily, CliError> {
    let Some(s) = s else { return usage("missing --probe") };
    s.parse().map_err(|e: Error| CliError::Usage(e.to_string()))
}

fn write_manifest<I: Serialize>(run: &RunSettings, name: &str, m: &Manifest<'_, I>) -> Result<PathBuf, CliError> {
    let path = run.out.join(name);
    write_atomic(&path, &json_bytes(m)?)?;
    Ok(path)
}

fn out_name(dir: &Path, name: &str) -> (PathBuf, String) {
    (dir.join(name), name.to_string())
}

fn finish(failures: usize, what: &str) -> Result<(), CliError> {
    if failures > 0 {
        return Err(CliError::Numerical(format!("{failures} {what} failed; see the manifest")));
    }
    Ok(())
}

#[derive(Serialize)]
struct TimeScanInputs {
    probe: String,
    kappa: f64,
    gamma: f64,
    n: Vec<u32>,
}

pub fn time_scan(a: &TimeScanArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let file = config::load(a.common.config.as_deref())?;
    let (numerics, run) = config::resolve_common(&file, &a.common)?;
    let f = &file.time_scan;
    let family = parse_probe(a.probe.as_ref().or(f.probe.as_ref()))?;
    let kappa = config::rate("kappa", a.kappa, f.kappa)?;
    let gamma = config::rate("gamma", a.gamma, f.gamma)?;
    let n = match (&a.n, &f.n) {
        (Some(s), _) => parse_integers(s)?,
        (None, Some(l)) => l.integers()?,
        (None, None) => return usage("missing --n"),
    };
    if n.is_empty() {
        return usage("empty N list");
    }
    let mut jobs = Vec::new();
    for &q in &n {
        let probe = family.at(q).map_err(|e| CliError::Usage(e.to_string()))?;
        jobs.push(ScanJob { probe, params: SimParams::dimensionless(q, kappa, gamma) });
    }
    let cfg = numerics.scan_config();
    let outcomes = run_scans(&jobs, &cfg, &run)?;

    let mut outputs = Vec::new();
    let mut peak_rows = Vec::new();
    for o in &outcomes {
        if let Ok(s) = &o.scan {
            let (path, name) = out_name(&run.out, &time_file(&family.to_string(), kappa, gamma, o.job.probe.qubits));
            write_atomic(&path, &series_csv(&s.series, run.g)?)?;
            outputs.push(name);
            let mut row = vec![o.job.probe.qubits.to_string()];
            row.extend(peak_cells(s, run.g));
            peak_rows.push(row);
        }
    }
    let mut header = vec!["N"];
    header.extend(PEAK_COLUMNS);
    let name = format!("peaks_{family}_k{}_g{}.csv", num(kappa), num(gamma));
    write_atomic(&run.out.join(&name), &csv_bytes(&header, &peak_rows)?)?;
    outputs.push(name);

    let failures = outcomes.iter().filter(|o| o.scan.is_err()).count();
    let m = Manifest {
        tool: "dicke-qfi",
        version: env!("CARGO_PKG_VERSION"),
        code_version: CODE_VERSION,
        command: "time-scan",
        numerics: &numerics,
        run: &run,
        inputs: TimeScanInputs { probe: family.to_string(), kappa, gamma, n },
        outputs,
        cells: outcomes.iter().map(|o| scan_json(o, run.g)).collect(),
        failures,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_manifest(&run, "manifest_time-scan.json", &m)?;
    finish(failures, "scans")
}

#[derive(Serialize)]
struct DickeInputs {
    n: u32,
    gamma: f64,
    kappa: Vec<f64>,
    n_values: Vec<u32>,
}

pub fn dicke_scan(a: &DickeScanArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let file = config::load(a.common.config.as_deref())?;
    let (numerics, run) = config::resolve_common(&file, &a.common)?;
    let f = &file.dicke_scan;
    let Some(qubits) = a.n.or(f.n) else { return usage("missing --n") };
    if qubits == 0 {
        return usage("N must be at least 1");
    }
    let gamma = config::rate("gamma", a.gamma, f.gamma)?;
    let kappas = match (&a.kappa, &f.kappa) {
        (Some(s), _) => parse_floats(s)?,
        (None, Some(l)) => l.floats()?,
        (None, None) => return usage("missing --kappa"),
    };
    for &k in &kappas {
        config::rate("kappa", Some(k), None)?;
    }
    let n_values = match (&a.n_values, &f.n_values) {
        (Some(s), _) => parse_integers(s)?,
        (None, Some(l)) => l.integers()?,
        (None, None) => (1..=qubits).collect(),
    };
    if n_values.is_empty() {
        return usage("empty excitation list");
    }
    if let Some(&bad) = n_values.iter().find(|&&n| n > qubits) {
        return usage(format!("excitation number {bad} exceeds N = {qubits}"));
    }
    let objective = run.objective();
    let mut jobs = Vec::new();
    for &k in &kappas {
        for &n in &n_values {
            let probe = ProbeFamily::Dicke(n).at(qubits).map_err(|e| CliError::Usage(e.to_string()))?;
            jobs.push(ScanJob { probe, params: SimParams::dimensionless(qubits, k, gamma) });
        }
    }
    let outcomes = run_scans(&jobs, &numerics.scan_config(), &run)?;

    let mut rows = Vec::new();
    let mut argmax_rows = Vec::new();
    for (ki, &k) in kappas.iter().enumerate() {
        let chunk = &outcomes[ki * n_values.len()..(ki + 1) * n_values.len()];
        let mut best: Option<(u32, f64)> = None;
        let mut complete = true;
        for (o, &n) in chunk.iter().zip(&n_values) {
            let Ok(s) = &o.scan else {
                complete = false;
                continue;
            };
            let mut row = vec![num(k), n.to_string()];
            row.extend(peak_cells(s, run.g));
            rows.push(row);
            let v = s.peak_for(objective).peak_value;
            // ties go to the smaller n
            if best.is_none_or(|b| v > b.1) {
                best = Some((n, v));
            }
        }
        let (n_star, v) = match best.filter(|_| complete) {
            Some((n, v)) => (n.to_string(), num(physical(objective, v, run.g))),
            None => ("NaN".into(), "NaN".into()),
        };
        argmax_rows.push(vec![num(k), n_star, v]);
    }
    let mut header = vec!["kappa", "n"];
    header.extend(PEAK_COLUMNS);
    let table = format!("dicke_N{qubits}_g{}.csv", num(gamma));
    write_atomic(&run.out.join(&table), &csv_bytes(&header, &rows)?)?;
    let suffix = if objective == Objective::QfiPerTime { "_per_time" } else { "" };
    let argmax = format!("dicke_argmax_N{qubits}_g{}{suffix}.csv", num(gamma));
    let value_col = if objective == Objective::QfiPerTime { "peak_F_over_t" } else { "peak_F" };
    write_atomic(&run.out.join(&argmax), &csv_bytes(&["kappa", "n_star", value_col], &argmax_rows)?)?;

    let failures = outcomes.iter().filter(|o| o.scan.is_err()).count();
    let m = Manifest {
        tool: "dicke-qfi",
        version: env!("CARGO_PKG_VERSION"),
        code_version: CODE_VERSION,
        command: "dicke-scan",
        numerics: &numerics,
        run: &run,
        inputs: DickeInputs { n: qubits, gamma, kappa: kappas, n_values },
        outputs: vec![table, argmax],
        cells: outcomes.iter().map(|o| scan_json(o, run.g)).collect(),
        failures,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_manifest(&run, "manifest_dicke-scan.json", &m)?;
    finish(failures, "scans")
}

#[derive(Serialize)]
struct ExponentInputs {
    probe: String,
    kappa_grid: Vec<f64>,
    gamma_grid: Vec<f64>,
    n_list: Vec<u32>,
    /// Entries of `n_list` for which the probe is defined.
    qubits: Vec<u32>,
}

fn grid_values(name: &str, flag: &Option<String>, file: &Option<ListSpec>) -> Result<Vec<f64>, CliError> {
    let v = match (flag, file) {
        (Some(s), _) => parse_floats(s)?,
        (None, Some(l)) => l.floats()?,
        (None, None) => return usage(format!("missing --{name}")),
    };
    for &x in &v {
        config::rate(name, Some(x), None)?;
    }
    Ok(v)
}

pub fn exponent_map(a: &ExponentMapArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let file = config::load(a.common.config.as_deref())?;
    let (numerics, run) = config::resolve_common(&file, &a.common)?;
    let f = &file.exponent_map;
    let family = parse_probe(a.probe.as_ref().or(f.probe.as_ref()))?;
    let kappas = grid_values("kappa-grid", &a.kappa_grid, &f.kappa_grid)?;
    let gammas = grid_values("gamma-grid", &a.gamma_grid, &f.gamma_grid)?;
    let n_list = match (&a.n_list, &f.n_list) {
        (Some(s), _) => parse_integers(s)?,
        (None, Some(l)) => l.integers()?,
        (None, None) => DEFAULT_N_LIST.to_vec(),
    };
    let qubits = valid_qubits(family, &n_list);
    if qubits.len() < 4 {
        return usage(format!("{family} is defined for only {} of the requested N; a fit needs 4", qubits.len()));
    }
    let objective = run.objective();
    let mut jobs = Vec::new();
    for &gm in &gammas {
        for &k in &kappas {
            for &q in &qubits {
                let probe = family.at(q).map_err(|e| CliError::Usage(e.to_string()))?;
                jobs.push(ScanJob { probe, params: SimParams::dimensionless(q, k, gm) });
            }
        }
    }
    let outcomes = run_scans(&jobs, &numerics.scan_config(), &run)?;

    let mut cells = Vec::new();
    let mut rows = Vec::new();
    let mut failures = 0;
    let per_cell = qubits.len();
    for (gi, &gm) in gammas.iter().enumerate() {
        let mut row = vec![num(gm)];
        for (ki, &k) in kappas.iter().enumerate() {
            let chunk = &outcomes[(gi * kappas.len() + ki) * per_cell..][..per_cell];
            let scans: Result<Vec<TimeScan>, &Error> = chunk.iter().map(|o| o.scan.as_ref().cloned()).collect();
            let mut v = json!({ "kappa": k, "gamma": gm, "scans": chunk.iter().map(|o| scan_json(o, run.g)).collect::<Vec<_>>() });
            match scans {
                Ok(scans) => {
                    let cell = exponent_cell_from_scans(k, gm, &qubits, &scans);
                    row.push(cell.exponent(objective).map_or("NaN".into(), num));
                    v["fit"] = fit_json(&cell.fit);
                    v["fit_per_time"] = fit_json(&cell.fit_per_time);
                    v["diagnostics"] = json!(DiagnosticsView::from(&cell.diagnostics));
                }
                Err(e) => {
                    failures += 1;
                    row.push("NaN".into());
                    v["error"] = json!(e.to_string());
                }
            }
            cells.push(v);
        }
        rows.push(row);
    }
    let kappa_header: Vec<String> = kappas.iter().map(|&k| num(k)).collect();
    let mut header = vec!["gamma"];
    header.extend(kappa_header.iter().map(String::as_str));
    let name = exponent_file(&family.to_string(), objective == Objective::QfiPerTime);
    write_atomic(&run.out.join(&name), &csv_bytes(&header, &rows)?)?;

    let m = Manifest {
        tool: "dicke-qfi",
        version: env!("CARGO_PKG_VERSION"),
        code_version: CODE_VERSION,
        command: "exponent-map",
        numerics: &numerics,
        run: &run,
        inputs: ExponentInputs { probe: family.to_string(), kappa_grid: kappas, gamma_grid: gammas, n_list, qubits },
        outputs: vec![name],
        cells,
        failures,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_manifest(&run, "manifest_exponent-map.json", &m)?;
    finish(failures, "cells")
}

pub fn oracle_check(a: &OracleCheckArgs) -> Result<(), CliError> {
    let file = config::load(a.common.config.as_deref())?;
    let (numerics, run) = config::resolve_common(&file, &a.common)?;
    if a.qfi_points < 2 {
        return usage("need at least 2 QFI grid points");
    }
    let cfg = numerics.scan_config();
    let report = checks::run_all(a.seed, a.qfi_points, &cfg.qfi, &cfg.integrator).map_err(numerical)?;
    for line in report.lines() {
        println!("{line}");
    }
    write_atomic(&run.out.join("oracle_check.json"), &json_bytes(&report)?)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Numerical("oracle check failed".into()))
    }
}
