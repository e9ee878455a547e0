//! Parsing of numeric lists: `0.2`, `0.1,0.5,1.0`, `0.1:1.0:5` (five evenly
//! spaced values) and, for integers, `1:20` (every integer in between).

use dicke_qfi_core::metrology::linspace;
use serde::Deserialize;

use crate::CliError;

/// A list given either as a TOML array, a single number or a string in the
/// syntax above.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ListSpec {
    Values(Vec<f64>),
    One(f64),
    Text(String),
}

impl ListSpec {
    pub fn floats(&self) -> Result<Vec<f64>, CliError> {
        match self {
            ListSpec::Values(v) => Ok(v.clone()),
            ListSpec::One(v) => Ok(vec![*v]),
            ListSpec::Text(s) => parse_floats(s),
        }
    }

    pub fn integers(&self) -> Result<Vec<u32>, CliError> {
        match self {
            ListSpec::Text(s) => parse_integers(s),
            _ => self.floats()?.into_iter().map(to_integer).collect(),
        }
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn number(s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| usage(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(usage(format!("not a finite number: {s:?}")));
    }
    Ok(v)
}

fn to_integer(v: f64) -> Result<u32, CliError> {
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(usage(format!("expected a nonnegative integer, got {v}")));
    }
    Ok(v as u32)
}

/// Rounds to 12 significant digits so `0.1:1.0:5` gives `0.325`, not
/// `0.32499999999999996`.
fn tidy(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

pub fn parse_floats(s: &str) -> Result<Vec<f64>, CliError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(usage("empty list".into()));
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(usage(format!("range {s:?} must be start:end:count")));
        };
        let n: usize = n.trim().parse().map_err(|_| usage(format!("bad count in {s:?}")))?;
        if n == 0 {
            return Err(usage(format!("range {s:?} has no points")));
        }
        let (a, b) = (number(a)?, number(b)?);
        if n > 1 && b <= a {
            return Err(usage(format!("range {s:?} must increase")));
        }
        return Ok(linspace(a, b, n).into_iter().map(tidy).collect());
    }
    s.split(',').map(number).collect()
}

pub fn parse_integers(s: &str) -> Result<Vec<u32>, CliError> {
    let t = s.trim();
    let parts: Vec<&str> = t.split(':').collect();
    if parts.len() == 2 {
        let (a, b) = (to_integer(number(parts[0])?)?, to_integer(number(parts[1])?)?);
        if b < a {
            return Err(usage(format!("range {s:?} must increase")));
        }
        return Ok((a..=b).collect());
    }
    parse_floats(t)?.into_iter().map(to_integer).collect()
}
