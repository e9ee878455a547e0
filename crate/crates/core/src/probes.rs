//! Initial states: Dicke, X-polarized and GHZ probes with the resonator in vacuum.
//!
//! All probes live in the fully symmetric sector `J = N/2` at `l = k = 0`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::basis::{BasisLayout, SpinTriple};
use crate::error::{Error, Result};
use crate::evolve::DensityState;
use crate::math::{binomial, sqrt};

/// Probe family, independent of the qubit count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProbeFamily {
    /// Dicke state with a fixed number of excitations.
    Dicke(u32),
    /// Dicke state with `floor(N/2)` excitations.
    DickeHalf,
    XPolarized,
    Ghz,
}

impl ProbeFamily {
    /// Resolves the family for a given qubit count.
    pub fn at(self, qubits: u32) -> Result<ProbeSpec> {
        ProbeSpec::new(self, qubits)
    }

    /// Whether the family is defined for `qubits`.
    pub fn supports(self, qubits: u32) -> bool {
        match self {
            ProbeFamily::Dicke(n) => qubits >= 1 && n <= qubits,
            ProbeFamily::Ghz => qubits >= 2,
            _ => qubits >= 1,
        }
    }
}

impl fmt::Display for ProbeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeFamily::Dicke(n) => write!(f, "dicke-{n}"),
            ProbeFamily::DickeHalf => f.write_str("dicke-half"),
            ProbeFamily::XPolarized => f.write_str("x-polarized"),
            ProbeFamily::Ghz => f.write_str("ghz"),
        }
    }
}

impl FromStr for ProbeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "x-polarized" | "x" => Ok(ProbeFamily::XPolarized),
            "ghz" => Ok(ProbeFamily::Ghz),
            "dicke-half" => Ok(ProbeFamily::DickeHalf),
            _ => lower
                .strip_prefix("dicke-")
                .and_then(|n| n.parse().ok())
                .map(ProbeFamily::Dicke)
                .ok_or_else(|| Error::ProbeParse(String::from(s))),
        }
    }
}

/// A probe family at a definite qubit count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProbeSpec {
    pub family: ProbeFamily,
    pub qubits: u32,
}

impl ProbeSpec {
    pub fn new(family: ProbeFamily, qubits: u32) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::InvalidQubitCount(0));
        }
        if let ProbeFamily::Dicke(n) = family {
            if n > qubits {
                return Err(Error::ExcitationOutOfRange { n, qubits });
            }
        }
        if family == ProbeFamily::Ghz && qubits < 2 {
            return Err(Error::InvalidParameter(format!("GHZ probe needs N >= 2, got {qubits}")));
        }
        Ok(ProbeSpec { family, qubits })
    }

    /// Excitation number for Dicke probes.
    pub fn excitations(&self) -> Option<u32> {
        match self.family {
            ProbeFamily::Dicke(n) => Some(n),
            ProbeFamily::DickeHalf => Some(self.qubits / 2),
            _ => None,
        }
    }

    pub fn state(&self) -> Result<DensityState> {
        match self.family {
            ProbeFamily::Dicke(_) | ProbeFamily::DickeHalf => {
                dicke_state(self.qubits, self.excitations().unwrap())
            }
            ProbeFamily::XPolarized => x_polarized_state(self.qubits),
            ProbeFamily::Ghz => ghz_state(self.qubits),
        }
    }

    /// Amplitudes on `|N/2, m>` in descending `m` order.
    pub fn amplitudes(&self) -> Result<Vec<f64>> {
        let q = self.qubits;
        let mut amps = alloc::vec![0.0; q as usize + 1];
        match self.family {
            ProbeFamily::Dicke(_) | ProbeFamily::DickeHalf => {
                let n = self.excitations().unwrap();
                amps[(q - n) as usize] = 1.0;
            }
            ProbeFamily::XPolarized => {
                let total = libm::pow(2.0, q as f64);
                for (i, a) in amps.iter_mut().enumerate() {
                    *a = sqrt(binomial(q, (q as usize - i) as i64) as f64 / total);
                }
            }
            ProbeFamily::Ghz => {
                let r = sqrt(0.5);
                amps[0] = r;
                amps[q as usize] = r;
            }
        }
        Ok(amps)
    }
}

impl fmt::Display for ProbeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (N={})", self.family, self.qubits)
    }
}

fn pure_symmetric(qubits: u32, amps: &[f64]) -> Result<DensityState> {
    let layout = Arc::new(BasisLayout::new(qubits)?);
    let mut rho = DensityState::zeros(layout);
    let j2 = qubits;
    for (a, &ca) in amps.iter().enumerate() {
        for (b, &cb) in amps.iter().enumerate() {
            let v = ca * cb;
            if v != 0.0 {
                let t = SpinTriple { j2, n2: j2 as i32 - 2 * a as i32, m2: j2 as i32 - 2 * b as i32 };
                rho.set(t, 0, 0, Complex64::new(v, 0.0));
            }
        }
    }
    Ok(rho)
}

/// `|N/2, n - N/2> (x) |0>`.
pub fn dicke_state(qubits: u32, n: u32) -> Result<DensityState> {
    let spec = ProbeSpec::new(ProbeFamily::Dicke(n), qubits)?;
    pure_symmetric(qubits, &spec.amplitudes()?)
}

/// `((|0> + |1>)/sqrt 2)^(x)N (x) |0>`, amplitudes `sqrt(C(N, N/2+m) / 2^N)`.
pub fn x_polarized_state(qubits: u32) -> Result<DensityState> {
    let spec = ProbeSpec::new(ProbeFamily::XPolarized, qubits)?;
    pure_symmetric(qubits, &spec.amplitudes()?)
}

/// `(|N/2,N/2> + |N/2,-N/2>)/sqrt 2 (x) |0>`, for `N >= 2`.
pub fn ghz_state(qubits: u32) -> Result<DensityState> {
    let spec = ProbeSpec::new(ProbeFamily::Ghz, qubits)?;
    pure_symmetric(qubits, &spec.amplitudes()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn dicke_single_component() {
        let rho = dicke_state(4, 1).unwrap();
        assert_eq!(rho.support().len(), 1);
        let t = SpinTriple::new(4, -2, -2).unwrap();
        assert_eq!(rho.get(t, 0, 0), Complex64::new(1.0, 0.0));
        let rho = dicke_state(2, 2).unwrap();
        assert_eq!(rho.get(SpinTriple::new(2, 2, 2).unwrap(), 0, 0).re, 1.0);
        assert!(dicke_state(2, 3).is_err());
    }

    #[test]
    fn x_polarized_amplitudes() {
        let a = ProbeFamily::XPolarized.at(1).unwrap().amplitudes().unwrap();
        assert!(close(a[0], sqrt(0.5)) && close(a[1], sqrt(0.5)));
        let a = ProbeFamily::XPolarized.at(2).unwrap().amplitudes().unwrap();
        assert!(close(a[0], 0.5) && close(a[1], sqrt(0.5)) && close(a[2], 0.5));
        for q in 1..=30 {
            let a = ProbeFamily::XPolarized.at(q).unwrap().amplitudes().unwrap();
            let norm: f64 = a.iter().map(|c| c * c).sum();
            assert!((norm - 1.0).abs() < 1e-13, "N = {q}");
        }
    }

    #[test]
    fn ghz_components() {
        let rho = ghz_state(2).unwrap();
        assert_eq!(rho.support().len(), 4);
        for n2 in [2, -2] {
            for m2 in [2, -2] {
                assert!(close(rho.get(SpinTriple::new(2, n2, m2).unwrap(), 0, 0).re, 0.5));
            }
        }
        assert!(ghz_state(1).is_err());
    }

    #[test]
    fn probes_are_pure_and_normalized() {
        for q in 2..=6 {
            for fam in [ProbeFamily::Dicke(1), ProbeFamily::DickeHalf, ProbeFamily::XPolarized, ProbeFamily::Ghz] {
                let rho = fam.at(q).unwrap().state().unwrap();
                assert!((rho.trace().re - 1.0).abs() < 1e-13);
                assert!((rho.purity() - 1.0).abs() < 1e-13);
                let top = rho.layout().sectors()[0];
                let end = top.offset + top.width() * top.width();
                for g in rho.support() {
                    let (i, l, k) = rho.layout().split(g);
                    assert!(i < end && l == 0 && k == 0);
                }
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in ["dicke-0", "dicke-5", "dicke-half", "x-polarized", "ghz"] {
            let f: ProbeFamily = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert_eq!("GHZ".parse::<ProbeFamily>().unwrap(), ProbeFamily::Ghz);
        assert!("dicke-".parse::<ProbeFamily>().is_err());
        assert!("w".parse::<ProbeFamily>().is_err());
    }
}
