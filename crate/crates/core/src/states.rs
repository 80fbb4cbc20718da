//! Named density operators: ground, number, thermal and coherent states.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{ln_factorials, BasisConfig};
use crate::error::{Error, Result};
use crate::operator::TruncatedOperator;
use crate::phase_space::PhasePoint;

/// |0⟩⟨0| on every mode.
pub fn ground(cfg: BasisConfig) -> TruncatedOperator {
    let zero = vec![0; cfg.modes];
    TruncatedOperator::basis_element(cfg, &zero, &zero)
}

/// |n⟩⟨n| with n on every mode.
pub fn number(cfg: BasisConfig, n: usize) -> Result<TruncatedOperator> {
    if n > cfg.cutoff {
        return Err(Error::InvalidArgument(format!(
            "level {n} exceeds cutoff {}",
            cfg.cutoff
        )));
    }
    let a = vec![n; cfg.modes];
    Ok(TruncatedOperator::basis_element(cfg, &a, &a))
}

/// diag((1−λ)λ^n) per mode, truncated at the cutoff without renormalising.
pub fn thermal(cfg: BasisConfig, lambda: f64) -> Result<TruncatedOperator> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "thermal parameter {lambda} outside [0, 1)"
        )));
    }
    Ok(TruncatedOperator::diagonal(cfg, |a| {
        a.iter().map(|&k| (1.0 - lambda) * lambda.powi(k as i32)).product()
    }))
}

/// Amplitudes of W(x)|0⟩ = ⊗ e^{−|a|²/2} a^n/√n!, a = (q + ip)/√2.
pub fn coherent_vector(cfg: &BasisConfig, x: &PhasePoint) -> Vec<Complex64> {
    let lf = ln_factorials(cfg.cutoff);
    let per_mode: Vec<Vec<Complex64>> = (0..cfg.modes)
        .map(|i| {
            let a = Complex64::new(x.q[i], x.p[i]) / std::f64::consts::SQRT_2;
            let r = a.norm();
            (0..=cfg.cutoff)
                .map(|n| {
                    if r == 0.0 {
                        return Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
                    }
                    let mag = (-0.5 * r * r + n as f64 * r.ln() - 0.5 * lf[n]).exp();
                    Complex64::from_polar(mag, n as f64 * a.arg())
                })
                .collect()
        })
        .collect();
    (0..cfg.dim())
        .map(|k| {
            cfg.unflatten(k)
                .iter()
                .enumerate()
                .map(|(i, &n)| per_mode[i][n])
                .product()
        })
        .collect()
}

/// W(x)|0⟩⟨0|W(x)†, truncated at the cutoff.
pub fn coherent(cfg: BasisConfig, x: &PhasePoint) -> Result<TruncatedOperator> {
    if x.modes() != cfg.modes {
        return Err(Error::BasisMismatch(format!(
            "point has {} modes, basis {}",
            x.modes(),
            cfg.modes
        )));
    }
    let v = coherent_vector(&cfg, x);
    Ok(TruncatedOperator::rank_one(cfg, &v, &v))
}

/// Textual state selector: `ground`, `number:3`, `thermal:0.5`, `coherent:1,0.5`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NamedState {
    Ground,
    Number(usize),
    Thermal(f64),
    Coherent(f64, f64),
}

impl NamedState {
    pub fn build(&self, cfg: BasisConfig) -> Result<TruncatedOperator> {
        match *self {
            NamedState::Ground => Ok(ground(cfg)),
            NamedState::Number(n) => number(cfg, n),
            NamedState::Thermal(l) => thermal(cfg, l),
            NamedState::Coherent(q, p) => coherent(cfg, &PhasePoint::new(vec![q; cfg.modes], vec![p; cfg.modes])),
        }
    }
}

impl FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::InvalidArgument(format!("cannot parse state '{s}'"));
        let float = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        match name.trim() {
            "ground" if arg.is_empty() => Ok(NamedState::Ground),
            "number" => arg.trim().parse().map(NamedState::Number).map_err(|_| bad()),
            "thermal" => Ok(NamedState::Thermal(float(arg)?)),
            "coherent" => {
                let (q, p) = arg.split_once(',').ok_or_else(bad)?;
                Ok(NamedState::Coherent(float(q)?, float(p)?))
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for NamedState {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NamedState> for String {
    fn from(s: NamedState) -> String {
        s.to_string()
    }
}

impl fmt::Display for NamedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedState::Ground => write!(f, "ground"),
            NamedState::Number(n) => write!(f, "number:{n}"),
            NamedState::Thermal(l) => write!(f, "thermal:{l}"),
            NamedState::Coherent(q, p) => write!(f, "coherent:{q},{p}"),
        }
    }
}
