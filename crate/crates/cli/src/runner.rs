//! Parallel execution of time scans with the grid-pass cache.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use dicke_qfi_core::metrology::{finish_scan, scan_pipeline, sweep_grid, ScanConfig, TimeScan};
use dicke_qfi_core::{Error, ProbeSpec, SimParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{self, SweepCache};
use crate::config::RunSettings;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheStatus {
    Off,
    Hit,
    Miss,
    /// Entry unreadable or not writable; the scan was computed anyway.
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct ScanJob {
    pub probe: ProbeSpec,
    pub params: SimParams,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub job: ScanJob,
    pub scan: Result<TimeScan, Error>,
    pub cache: CacheStatus,
    pub seconds: f64,
}

/// Runs one scan, reusing a cached grid pass when one exists.
pub fn run_scan(job: &ScanJob, cfg: &ScanConfig, cache: Option<&SweepCache>) -> (Result<TimeScan, Error>, CacheStatus) {
    let Some(cache) = cache else {
        return (dicke_qfi_core::metrology::time_scan(&job.probe, &job.params, cfg), CacheStatus::Off);
    };
    let key = cache::key(&job.probe, &job.params, cfg);
    let mut status = CacheStatus::Miss;
    match cache.load(&key) {
        Ok(Some(sweep)) => return (finish_scan(&job.probe, &job.params, cfg, &sweep, None), CacheStatus::Hit),
        Ok(None) => {}
        Err(e) => status = CacheStatus::Failed(format!("read: {e}")),
    }
    let result = (|| {
        let mut pipeline = scan_pipeline(&job.probe, &job.params, cfg)?;
        let sweep = sweep_grid(&mut pipeline, &cfg.times)?;
        if let Err(e) = cache.store(&key, &sweep) {
            status = CacheStatus::Failed(format!("write: {e}"));
        }
        finish_scan(&job.probe, &job.params, cfg, &sweep, Some(&mut pipeline))
    })();
    (result, status)
}

/// Runs every job on a pool of `run.workers` threads. Results come back in
/// job order whatever the scheduling.
pub fn run_scans(jobs: &[ScanJob], cfg: &ScanConfig, run: &RunSettings) -> Result<Vec<ScanOutcome>, CliError> {
    let cache = cache::open(run.cache.as_deref()).map_err(|e| CliError::Io(format!("cache directory: {e}")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    // biggest systems first so the tail of the queue is short
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(jobs[i].probe.qubits));
    let done = AtomicUsize::new(0);
    let total = jobs.len();
    let mut results: Vec<(usize, ScanOutcome)> = pool.install(|| {
        order
            .par_iter()
            .map(|&i| {
                let job = &jobs[i];
                let start = Instant::now();
                let (scan, status) = run_scan(job, cfg, cache.as_ref());
                let seconds = start.elapsed().as_secs_f64();
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if !run.quiet {
                    let what = match &scan {
                        Ok(s) => format!("peak F g^2 = {:.6} at gt = {:.4}", s.peak.peak_value, s.peak.peak_time),
                        Err(e) => format!("failed: {e}"),
                    };
                    let hit = if status == CacheStatus::Hit { ", cached" } else { "" };
                    eprintln!(
                        "[{k}/{total}] {} N={} kappa/g={} gamma/g={}: {what} ({seconds:.1}s{hit})",
                        job.probe.family, job.probe.qubits, job.params.kappa, job.params.gamma
                    );
                }
                (i, ScanOutcome { job: job.clone(), scan, cache: status, seconds })
            })
            .collect()
    });
    results.sort_by_key(|(i, _)| *i);
    Ok(results.into_iter().map(|(_, o)| o).collect())
}
