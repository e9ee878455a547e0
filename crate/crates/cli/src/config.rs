//! Layered run configuration: defaults, then a TOML file, then flags.
//!
//! ```toml
//! [grid]
//! t_max = 20.0
//! points = 400
//!
//! [integrator]
//! rtol = 1e-10
//! atol = 1e-10
//!
//! [qfi]
//! delta = 1e-3
//!
//! [peak]
//! refine = true
//!
//! [run]
//! workers = 8
//! out = "out"
//! cache = "cache"
//! g = 1.0
//! objective = "qfi"        # or "qfi-per-time"
//!
//! [time_scan]
//! probe = "dicke-1"
//! kappa = 0.2
//! gamma = 0.6
//! n = [4, 8, 12, 16, 20]
//!
//! [dicke_scan]
//! n = 20
//! gamma = 0.2
//! kappa = "0.1,0.5,1.0"
//!
//! [exponent_map]
//! probe = "dicke-5"
//! kappa_grid = "0.1:1.0:5"
//! gamma_grid = "0.1:1.0:5"
//! n_list = [4, 8, 12, 16, 20]
//! ```

use std::path::{Path, PathBuf};

use dicke_qfi_core::fisher::QfiConfig;
use dicke_qfi_core::metrology::{linspace, Objective, PeakConfig, ScanConfig};
use dicke_qfi_core::IntegratorConfig;
use serde::{Deserialize, Serialize};

use crate::args::Common;
use crate::grid::ListSpec;
use crate::CliError;

pub const DEFAULT_T_MAX: f64 = 20.0;
pub const DEFAULT_POINTS: usize = 400;
pub const DEFAULT_N_LIST: [u32; 5] = [4, 8, 12, 16, 20];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub grid: GridFile,
    #[serde(default)]
    pub integrator: IntegratorFile,
    #[serde(default)]
    pub qfi: QfiFile,
    #[serde(default)]
    pub peak: PeakFile,
    #[serde(default)]
    pub run: RunFile,
    #[serde(default)]
    pub time_scan: TimeScanFile,
    #[serde(default)]
    pub dicke_scan: DickeScanFile,
    #[serde(default)]
    pub exponent_map: ExponentMapFile,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub t_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorFile {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfiFile {
    pub delta: Option<f64>,
    pub err_multiplier: Option<f64>,
    pub pair_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakFile {
    pub refine: Option<bool>,
    pub time_tol: Option<f64>,
    pub max_evals: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub g: Option<f64>,
    pub objective: Option<String>,
    pub track_eigenvalues: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeScanFile {
    pub probe: Option<String>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub n: Option<ListSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DickeScanFile {
    pub n: Option<u32>,
    pub gamma: Option<f64>,
    pub kappa: Option<ListSpec>,
    pub n_values: Option<ListSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentMapFile {
    pub probe: Option<String>,
    pub kappa_grid: Option<ListSpec>,
    pub gamma_grid: Option<ListSpec>,
    pub n_list: Option<ListSpec>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

/// Numerical settings shared by every command, fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Numerics {
    pub t_max: f64,
    pub points: usize,
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    pub delta: f64,
    pub err_multiplier: f64,
    pub pair_floor: f64,
    pub refine: bool,
    pub time_tol: f64,
    pub max_evals: usize,
    pub track_eigenvalues: bool,
}

impl Numerics {
    pub fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            times: linspace(0.0, self.t_max, self.points),
            qfi: QfiConfig { delta: self.delta, err_multiplier: self.err_multiplier, pair_floor: self.pair_floor },
            integrator: IntegratorConfig {
                rtol: self.rtol,
                atol: self.atol,
                initial_step: self.initial_step,
                max_step: self.max_step,
                ..IntegratorConfig::default()
            },
            peak: PeakConfig { refine: self.refine, time_tol: self.time_tol, max_evals: self.max_evals },
            track_eigenvalues: self.track_eigenvalues,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let cfg = self.scan_config();
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(CliError::Usage(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.points < 5 {
            return Err(CliError::Usage(format!("need at least 5 grid points, got {}", self.points)));
        }
        cfg.qfi.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        cfg.integrator.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if !(self.time_tol > 0.0) || self.max_evals == 0 {
            return Err(CliError::Usage("peak refinement needs time_tol > 0 and max_evals > 0".into()));
        }
        Ok(())
    }
}

/// Run-level settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub workers: usize,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
    pub g: f64,
    pub objective: String,
    #[serde(skip)]
    pub quiet: bool,
}

impl RunSettings {
    pub fn objective(&self) -> Objective {
        self.objective.parse().expect("validated at resolution")
    }
}

pub fn resolve_common(file: &FileConfig, c: &Common) -> Result<(Numerics, RunSettings), CliError> {
    let qfi = QfiConfig::default();
    let peak = PeakConfig::default();
    let integ = IntegratorConfig::default();
    let n = Numerics {
        t_max: c.t_max.or(file.grid.t_max).unwrap_or(DEFAULT_T_MAX),
        points: c.points.or(file.grid.points).unwrap_or(DEFAULT_POINTS),
        rtol: c.rtol.or(file.integrator.rtol).unwrap_or(integ.rtol),
        atol: c.atol.or(file.integrator.atol).unwrap_or(integ.atol),
        initial_step: file.integrator.initial_step,
        max_step: file.integrator.max_step,
        delta: c.delta.or(file.qfi.delta).unwrap_or(qfi.delta),
        err_multiplier: file.qfi.err_multiplier.unwrap_or(qfi.err_multiplier),
        pair_floor: file.qfi.pair_floor.unwrap_or(qfi.pair_floor),
        refine: !c.no_refine && file.peak.refine.unwrap_or(peak.refine),
        time_tol: file.peak.time_tol.unwrap_or(peak.time_tol),
        max_evals: file.peak.max_evals.unwrap_or(peak.max_evals),
        track_eigenvalues: c.track_eigenvalues || file.run.track_eigenvalues.unwrap_or(false),
    };
    n.validate()?;

    let workers = c
        .workers
        .or(file.run.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if workers == 0 {
        return Err(CliError::Usage("workers must be at least 1".into()));
    }
    let objective = if c.per_time {
        Objective::QfiPerTime
    } else {
        match &file.run.objective {
            Some(s) => s.parse().map_err(|e: dicke_qfi_core::Error| CliError::Usage(e.to_string()))?,
            None => Objective::Qfi,
        }
    };
    let g = c.g.or(file.run.g).unwrap_or(1.0);
    if !(g > 0.0 && g.is_finite()) {
        return Err(CliError::Usage(format!("g must be positive, got {g}")));
    }
    let cache = if c.no_cache { None } else { c.cache.clone().or_else(|| file.run.cache.clone()) };
    let run = RunSettings {
        workers,
        out: c.out.clone().or_else(|| file.run.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        cache,
        g,
        objective: objective.to_string(),
        quiet: c.quiet,
    };
    Ok((n, run))
}

/// Rate given on the command line or in the file; required.
pub fn rate(name: &str, flag: Option<f64>, file: Option<f64>) -> Result<f64, CliError> {
    let v = flag.or(file).ok_or_else(|| CliError::Usage(format!("missing --{name}")))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(CliError::Usage(format!("{name} must be >= 0, got {v}")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str(
            "[grid]\nt_max = 10.0\npoints = 50\n[run]\nobjective = \"qfi-per-time\"\nworkers = 3\n",
        )
        .unwrap();
        let c = Common { points: Some(20), ..Default::default() };
        let (n, run) = resolve_common(&file, &c).unwrap();
        assert_eq!(n.t_max, 10.0);
        assert_eq!(n.points, 20);
        assert_eq!(run.workers, 3);
        assert_eq!(run.objective(), Objective::QfiPerTime);
        assert_eq!(n.delta, 1e-3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[grid]\ntmax = 3\n").is_err());
    }

    #[test]
    fn list_specs_accept_arrays_and_strings() {
        let file: FileConfig =
            toml::from_str("[exponent_map]\nkappa_grid = \"0.1:1.0:5\"\nn_list = [4, 8]\n").unwrap();
        assert_eq!(file.exponent_map.kappa_grid.unwrap().floats().unwrap().len(), 5);
        assert_eq!(file.exponent_map.n_list.unwrap().integers().unwrap(), vec![4, 8]);
    }
}
