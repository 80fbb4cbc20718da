//! Number basis: multi-indices, Hermite functions, Gauss–Hermite rules and
//! the ladder, position, momentum and oscillator matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::TruncatedOperator;

/// π^{-1/4}, the value of h_0 at the origin.
pub const PI_M14: f64 = 0.751_125_544_464_942_5;

/// Per-mode non-negative orders.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// |α| = Σ α_i.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// α∨β.
    pub fn join(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    /// Inverse of `join` for the first `n` entries.
    pub fn split(&self, n: usize) -> (MultiIndex, MultiIndex) {
        (MultiIndex(self.0[..n].to_vec()), MultiIndex(self.0[n..].to_vec()))
    }

    /// All multi-indices of length `n` with |α| ≤ d, in graded lexicographic order.
    pub fn all_up_to(n: usize, d: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in 0..=d {
            let mut cur = vec![0; n];
            fill_compositions(&mut cur, 0, total, &mut out);
        }
        out
    }
}

fn fill_compositions(cur: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    if cur.is_empty() {
        if left == 0 {
            out.push(MultiIndex(vec![]));
        }
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        fill_compositions(cur, pos + 1, left - k, out);
    }
}

/// Truncated N-mode Fock space with levels 0..=cutoff per mode.
///
/// Multi-indices are flattened row-major with mode 0 slowest:
/// `idx = Σ_i α_i (cutoff+1)^{N-1-i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisConfig {
    pub modes: usize,
    pub cutoff: usize,
}

impl BasisConfig {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("modes must be at least 1".into()));
        }
        if cutoff == 0 {
            return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
        }
        Ok(BasisConfig { modes, cutoff })
    }

    /// Same number of modes with a different cutoff. A box with cutoff 0 is
    /// allowed here since it is used for operator supports.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        BasisConfig {
            modes: self.modes,
            cutoff,
        }
    }

    pub fn levels(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.levels().pow(self.modes as u32)
    }

    pub fn flatten(&self, alpha: &[usize]) -> usize {
        let l = self.levels();
        alpha.iter().fold(0, |acc, &a| acc * l + a)
    }

    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let l = self.levels();
        let mut out = vec![0; self.modes];
        for i in (0..self.modes).rev() {
            out[i] = idx % l;
            idx /= l;
        }
        out
    }

    /// Whether a multi-index (of any length-N box) lies in this box.
    pub fn contains(&self, alpha: &[usize]) -> bool {
        alpha.iter().all(|&a| a <= self.cutoff)
    }

    /// Degree guard used by polynomial operations: n_max / 4.
    pub fn degree_guard(&self) -> usize {
        (self.cutoff / 4).max(1)
    }

    pub fn single_mode(&self, what: &str) -> Result<()> {
        if self.modes != 1 {
            return Err(Error::Unsupported(format!("{what} needs a single mode")));
        }
        Ok(())
    }

    pub fn check_degree(&self, degree: usize) -> Result<()> {
        let guard = self.degree_guard();
        if degree > guard {
            return Err(Error::DegreeGuard {
                degree,
                guard,
                cutoff: self.cutoff,
            });
        }
        Ok(())
    }
}

/// Normalized Hermite function h_n(q).
pub fn hermite_eval(n: usize, q: f64) -> f64 {
    let mut out = 0.0;
    hermite_scan(n, q, |k, v| {
        if k == n {
            out = v;
        }
    });
    out
}

/// h_0(q), …, h_n(q).
pub fn hermite_table(n: usize, q: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    hermite_scan(n, q, |k, v| out[k] = v);
    out
}

// Runs the normalized recurrence with a floating exponent, so that h_0 may
// underflow while high orders stay representable.
fn hermite_scan(n: usize, q: f64, mut emit: impl FnMut(usize, f64)) {
    const BIG: f64 = 1e150;
    let mut log_scale = -0.5 * q * q + PI_M14.ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    emit(0, scaled(cur, log_scale));
    for k in 0..n {
        let kf = k as f64;
        let next = q * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
        }
        emit(k + 1, scaled(cur, log_scale));
    }
}

fn scaled(v: f64, log_scale: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v * log_scale.exp()
    }
}

/// Product h_α(q) = Π_i h_{α_i}(q_i) for every α in the box of `cfg`, flattened.
pub fn hermite_multi(cfg: &BasisConfig, q: &[f64]) -> Vec<f64> {
    assert_eq!(q.len(), cfg.modes);
    let tables: Vec<Vec<f64>> = q.iter().map(|&qi| hermite_table(cfg.cutoff, qi)).collect();
    (0..cfg.dim())
        .map(|idx| {
            cfg.unflatten(idx)
                .iter()
                .enumerate()
                .map(|(i, &a)| tables[i][a])
                .product()
        })
        .collect()
}

/// Gauss–Hermite rule for ∫ g(q) e^{-q²} dq, nodes ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Weights w_k e^{q_k²} for integrating ∫ g(q) dq; evaluated as
    /// 1/(K h_{K-1}(q_k)²) to avoid overflow of e^{q²}.
    pub fn scaled_weights(&self) -> Vec<f64> {
        let k = self.nodes.len();
        self.nodes
            .iter()
            .map(|&x| {
                let h = hermite_eval(k - 1, x);
                1.0 / (k as f64 * h * h)
            })
            .collect()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// K-point Gauss–Hermite rule by Newton iteration on the orthonormal
/// Hermite polynomials.
pub fn gauss_hermite(k: usize) -> Result<QuadratureRule> {
    if k == 0 {
        return Err(Error::InvalidArgument("rule needs at least one node".into()));
    }
    let n = k;
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut converged = false;
        let mut pp = 0.0;
        for _ in 0..100 {
            let (p, dp) = orthonormal_hermite(n, z);
            pp = dp;
            let z1 = z;
            z = z1 - p / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence(i));
        }
        let (_, dp) = orthonormal_hermite(n, z);
        pp = if dp != 0.0 { dp } else { pp };
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[m - 1] = 0.0;
    }
    let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(QuadratureRule { nodes, weights })
}

// Orthonormal Hermite polynomial p_n (weight e^{-q²}) and its derivative
// √(2n) p_{n-1}.
fn orthonormal_hermite(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI_M14;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Annihilation and creation matrices per mode.
pub fn ladder_matrices(cfg: &BasisConfig) -> Vec<(TruncatedOperator, TruncatedOperator)> {
    (0..cfg.modes)
        .map(|i| {
            let a = TruncatedOperator::from_fn(*cfg, |row, col| {
                let (r, c) = (cfg.unflatten(row), cfg.unflatten(col));
                lowered_by(&r, &c, i)
                    .map(|k| Complex64::new((k as f64).sqrt(), 0.0))
                    .unwrap_or_default()
            });
            let ad = a.adjoint();
            (a, ad)
        })
        .collect()
}

// Some(c_i) when r = c - e_i and c_i ≥ 1.
fn lowered_by(r: &[usize], c: &[usize], i: usize) -> Option<usize> {
    if c[i] == 0 || r[i] + 1 != c[i] {
        return None;
    }
    let same = r.iter().zip(c).enumerate().all(|(j, (a, b))| j == i || a == b);
    same.then_some(c[i])
}

/// Position matrices Q_i = (A_i + A_i†)/√2.
pub fn position_matrices(cfg: &BasisConfig) -> Vec<TruncatedOperator> {
    ladder_matrices(cfg)
        .into_iter()
        .map(|(a, ad)| (&a + &ad).scale(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)))
        .collect()
}

/// Momentum matrices P_i = (A_i − A_i†)/(i√2).
pub fn momentum_matrices(cfg: &BasisConfig) -> Vec<TruncatedOperator> {
    ladder_matrices(cfg)
        .into_iter()
        .map(|(a, ad)| (&a - &ad).scale(Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2)))
        .collect()
}

/// Number operators A_i†A_i (diagonal α_i).
pub fn number_matrices(cfg: &BasisConfig) -> Vec<TruncatedOperator> {
    (0..cfg.modes)
        .map(|i| TruncatedOperator::diagonal(*cfg, |a| a[i] as f64))
        .collect()
}

/// Oscillator Hamiltonians H_i (diagonal α_i + ½) and H_tot = Σ H_i.
pub fn hamiltonian_matrices(cfg: &BasisConfig) -> (Vec<TruncatedOperator>, TruncatedOperator) {
    let per_mode = (0..cfg.modes)
        .map(|i| TruncatedOperator::diagonal(*cfg, |a| a[i] as f64 + 0.5))
        .collect();
    let total = TruncatedOperator::diagonal(*cfg, |a| a.iter().map(|&k| k as f64 + 0.5).sum::<f64>());
    (per_mode, total)
}

/// Diagonal Π_i (α_i + ½)^{-s}, the matrix of H^{-s} for H = Π_i H_i.
pub fn inverse_h_power(cfg: &BasisConfig, s: i32) -> TruncatedOperator {
    TruncatedOperator::diagonal(*cfg, |a| a.iter().map(|&k| (k as f64 + 0.5).powi(-s)).product())
}

/// Natural logarithms of 0!, 1!, …, n!.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Upper bound on |h_n(q)| over all n and q.
pub const HERMITE_SUP: f64 = 1.086_435 * PI_M14;
