//! On-disk cache of grid passes, keyed by everything that determines them.
//!
//! A grid pass holds the QFI samples plus the two restart states used for peak
//! refinement, so a warm run only re-integrates a few grid steps and gives
//! exactly the cold-run result.
//!
//! File layout (little endian): magic `DQFISWP\0`, `u32` format version, the
//! 32-byte key, `u64` sample count, times, values, diagnostics (three `f64`
//! and two `u64`), then per objective a flag byte and, when set, `t`, `step`,
//! `u64` length and the `rho+` and `rho-` vectors as `(re, im)` pairs.

use std::fs;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use dicke_qfi_core::fisher::{Checkpoint, Diagnostics};
use dicke_qfi_core::metrology::{GridSweep, ScanConfig};
use dicke_qfi_core::{Complex64, ProbeSpec, SimParams};
use serde::Serialize;
use sha2::{Digest, Sha256};

const MAGIC: &[u8; 8] = b"DQFISWP\0";
const FORMAT: u32 = 1;

/// Bumped whenever a change alters numerical results.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+sweep1");

#[derive(Serialize)]
struct KeyInput<'a> {
    code: &'a str,
    probe: String,
    qubits: u32,
    // bit patterns, so keys never depend on float formatting
    kappa: u64,
    gamma: u64,
    omega_q: u64,
    omega_c: u64,
    g: u64,
    times: Vec<u64>,
    delta: u64,
    err_multiplier: u64,
    pair_floor: u64,
    rtol: u64,
    atol: u64,
    initial_step: Option<u64>,
    max_step: Option<u64>,
    safety: u64,
    min_factor: u64,
    max_factor: u64,
    max_steps: usize,
    track_eigenvalues: bool,
}

pub type Key = [u8; 32];

pub fn key(probe: &ProbeSpec, params: &SimParams, cfg: &ScanConfig) -> Key {
    let i = &cfg.integrator;
    let input = KeyInput {
        code: CODE_VERSION,
        probe: probe.family.to_string(),
        qubits: probe.qubits,
        kappa: params.kappa.to_bits(),
        gamma: params.gamma.to_bits(),
        omega_q: params.omega_q.to_bits(),
        omega_c: params.omega_c.to_bits(),
        g: params.g.to_bits(),
        times: cfg.times.iter().map(|t| t.to_bits()).collect(),
        delta: cfg.qfi.delta.to_bits(),
        err_multiplier: cfg.qfi.err_multiplier.to_bits(),
        pair_floor: cfg.qfi.pair_floor.to_bits(),
        rtol: i.rtol.to_bits(),
        atol: i.atol.to_bits(),
        initial_step: i.initial_step.map(f64::to_bits),
        max_step: i.max_step.map(f64::to_bits),
        safety: i.safety.to_bits(),
        min_factor: i.min_factor.to_bits(),
        max_factor: i.max_factor.to_bits(),
        max_steps: i.max_steps,
        track_eigenvalues: cfg.track_eigenvalues,
    };
    let json = serde_json::to_vec(&input).expect("key input serializes");
    Sha256::digest(&json).into()
}

pub fn hex(key: &Key) -> String {
    key.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct SweepCache {
    dir: PathBuf,
}

impl SweepCache {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SweepCache { dir })
    }

    pub fn path(&self, key: &Key) -> PathBuf {
        self.dir.join(format!("{}.sweep", hex(key)))
    }

    /// `Ok(None)` on a miss; errors for unreadable or corrupt entries.
    pub fn load(&self, key: &Key) -> io::Result<Option<GridSweep>> {
        let path = self.path(key);
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        read_sweep(&mut BufReader::new(file), key).map(Some)
    }

    pub fn store(&self, key: &Key, sweep: &GridSweep) -> io::Result<()> {
        let tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            write_sweep(&mut w, key, sweep)?;
            w.flush()?;
        }
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

fn put_f64s(w: &mut impl Write, xs: &[f64]) -> io::Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn put_complex(w: &mut impl Write, xs: &[Complex64]) -> io::Result<()> {
    for z in xs {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_sweep(w: &mut impl Write, key: &Key, s: &GridSweep) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT.to_le_bytes())?;
    w.write_all(key)?;
    w.write_all(&(s.times.len() as u64).to_le_bytes())?;
    put_f64s(w, &s.times)?;
    put_f64s(w, &s.values)?;
    let d = &s.diagnostics;
    put_f64s(w, &[d.max_trace_drift, d.max_hermiticity, d.min_eigenvalue])?;
    w.write_all(&(d.accepted_steps as u64).to_le_bytes())?;
    w.write_all(&(d.rejected_steps as u64).to_le_bytes())?;
    for r in &s.restarts {
        match r {
            None => w.write_all(&[0])?,
            Some(cp) => {
                w.write_all(&[1])?;
                put_f64s(w, &[cp.t, cp.step])?;
                w.write_all(&(cp.plus.len() as u64).to_le_bytes())?;
                put_complex(w, &cp.plus)?;
                put_complex(w, &cp.minus)?;
            }
        }
    }
    Ok(())
}

fn corrupt(what: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("cache entry: {what}"))
}

fn get_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> io::Result<f64> {
    get_u64(r).map(f64::from_bits)
}

fn get_len(r: &mut impl Read) -> io::Result<usize> {
    let n = get_u64(r)?;
    // no grid or support comes near this
    if n > 1 << 32 {
        return Err(corrupt("implausible length"));
    }
    Ok(n as usize)
}

fn get_f64s(r: &mut impl Read, n: usize) -> io::Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}

fn get_complex(r: &mut impl Read, n: usize) -> io::Result<Vec<Complex64>> {
    (0..n).map(|_| Ok(Complex64::new(get_f64(r)?, get_f64(r)?))).collect()
}

pub fn read_sweep(r: &mut impl Read, key: &Key) -> io::Result<GridSweep> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    if u32::from_le_bytes(v) != FORMAT {
        return Err(corrupt("unsupported format version"));
    }
    let mut k = [0u8; 32];
    r.read_exact(&mut k)?;
    if &k != key {
        return Err(corrupt("key mismatch"));
    }
    let n = get_len(r)?;
    let times = get_f64s(r, n)?;
    let values = get_f64s(r, n)?;
    let diagnostics = Diagnostics {
        max_trace_drift: get_f64(r)?,
        max_hermiticity: get_f64(r)?,
        min_eigenvalue: get_f64(r)?,
        accepted_steps: get_u64(r)? as usize,
        rejected_steps: get_u64(r)? as usize,
    };
    let mut restarts = [None, None];
    for slot in &mut restarts {
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        *slot = match flag[0] {
            0 => None,
            1 => {
                let (t, step) = (get_f64(r)?, get_f64(r)?);
                let len = get_len(r)?;
                let plus = get_complex(r, len)?;
                let minus = get_complex(r, len)?;
                Some(Checkpoint { t, plus, minus, step })
            }
            _ => return Err(corrupt("bad restart flag")),
        };
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok(GridSweep { times, values, diagnostics, restarts })
}

/// Cache directory helper for callers that only hold a path.
pub fn open(dir: Option<&Path>) -> io::Result<Option<SweepCache>> {
    dir.map(SweepCache::new).transpose()
}
