//! Collective-spin fluctuation operators embedded in the number basis, and
//! the convergence of their moments and spectral measures.
//!
//! The symmetric subspace of M spins is identified with span{|0⟩, …, |M⟩},
//! so the ladder operator becomes A_M = ω_M(N)·A with ω_M(n) = √(1 − n/M)
//! on 0 ≤ n ≤ M and 0 otherwise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{hermite_table, ladder_matrices, BasisConfig};
use crate::error::{Error, Result};
use crate::io::{num, table_csv};
use crate::operator::{CMatrix, TruncatedOperator};
use crate::par::map_indexed;
use crate::poly::OperatorPolynomial;

/// Interval endpoints are matched with this slack.
pub const INTERVAL_TOL: f64 = 1e-12;

/// Default rescaled-projection schedule: widths 3·2^{−k}, M_k = 2^{k+4}.
pub const DEFAULT_WIDTH: f64 = 3.0;

pub fn omega(m: usize, n: i64) -> f64 {
    if n < 0 || n as usize > m {
        0.0
    } else {
        (1.0 - n as f64 / m as f64).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct FluctuationSystem {
    pub m: usize,
    pub cfg: BasisConfig,
    /// ω_M(n) for n = 0..=cutoff.
    pub omega: Vec<f64>,
    pub a: TruncatedOperator,
    pub a_dag: TruncatedOperator,
    pub q: TruncatedOperator,
    pub p: TruncatedOperator,
}

fn omega_diag(cfg: BasisConfig, m: usize, shift: i64) -> TruncatedOperator {
    TruncatedOperator::diagonal(cfg, |a| omega(m, a[0] as i64 + shift))
}

pub fn build(m: usize, cfg: BasisConfig) -> Result<FluctuationSystem> {
    cfg.single_mode("fluctuation system")?;
    if m == 0 || m > cfg.cutoff {
        return Err(Error::InvalidArgument(format!(
            "spin count {m} must lie in 1..={}",
            cfg.cutoff
        )));
    }
    let (a, _) = ladder_matrices(&cfg).remove(0);
    let a_m = &omega_diag(cfg, m, 0) * &a;
    let a_dag = a_m.adjoint();
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let q = (&a_m + &a_dag).scale(s);
    let p = (&a_m - &a_dag).scale(Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2));
    Ok(FluctuationSystem {
        m,
        cfg,
        omega: (0..=cfg.cutoff).map(|n| omega(m, n as i64)).collect(),
        a: a_m,
        a_dag,
        q,
        p,
    })
}

impl FluctuationSystem {
    /// Largest entrywise deviation between ω(N)A, A ω(N−1), and between
    /// A†ω(N), ω(N−1)A†.
    pub fn factorization_residual(&self) -> f64 {
        let (a, ad) = ladder_matrices(&self.cfg).remove(0);
        let max_diff = |x: &TruncatedOperator, y: &TruncatedOperator| {
            x.mat
                .iter()
                .zip(y.mat.iter())
                .map(|(u, v)| (u - v).norm())
                .fold(0.0, f64::max)
        };
        let w = |s| omega_diag(self.cfg, self.m, s);
        let left = &w(0) * &a;
        let right = &a * &w(-1);
        let left_dag = &ad * &w(0);
        let right_dag = &w(-1) * &ad;
        [
            max_diff(&left, &right),
            max_diff(&left, &self.a),
            max_diff(&left_dag, &right_dag),
            max_diff(&left_dag, &self.a_dag),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn block(&self, t: &TruncatedOperator) -> CMatrix {
        let d = self.m + 1;
        CMatrix::from_fn(d, d, |r, c| t.mat[(r, c)])
    }

    /// Eigenvalues (ascending) and eigenvectors of Q_M on span{|0⟩..|M⟩}.
    pub fn position_spectrum(&self) -> (Vec<f64>, CMatrix) {
        let eig = self.block(&self.q).symmetric_eigen();
        let mut order: Vec<usize> = (0..=self.m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = CMatrix::from_fn(self.m + 1, self.m + 1, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vecs)
    }

    /// w_k(T) = ⟨v_k|T|v_k⟩ for the eigenvectors v_k of Q_M.
    pub fn spectral_measure(&self, t: &TruncatedOperator) -> Result<SpectralMeasureApprox> {
        if t.cfg.modes != 1 {
            return Err(Error::BasisMismatch("fluctuation systems are single mode".into()));
        }
        let t = t.resized(t.cfg.cutoff.max(self.m));
        let (eigenvalues, v) = self.position_spectrum();
        let tb = self.block(&t);
        let weights = (0..=self.m)
            .map(|k| {
                let col = v.column(k);
                (col.adjoint() * &tb * col)[(0, 0)].re
            })
            .collect();
        Ok(SpectralMeasureApprox {
            m: self.m,
            eigenvalues,
            weights,
        })
    }
}

fn system_for(t: &TruncatedOperator, m: usize) -> Result<(FluctuationSystem, TruncatedOperator)> {
    let cfg = t.cfg.with_cutoff(t.cfg.cutoff.max(m));
    Ok((build(m, cfg)?, t.resized(cfg.cutoff)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasureApprox {
    pub m: usize,
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralMeasureApprox {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Σ w_k over eigenvalues in the closed interval [a, b].
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.mass_where(|q| q >= a - INTERVAL_TOL && q <= b + INTERVAL_TOL)
    }

    fn mass_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .filter(|(q, _)| keep(**q))
            .map(|(_, w)| w)
            .sum()
    }

    /// Σ f(q_k) w_k.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.eigenvalues.iter().zip(&self.weights).map(|(q, w)| f(*q) * w).sum()
    }
}

/// Report for |1 − ω_M(n)| ≤ √(n/M).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub m: usize,
    pub violations: usize,
    /// min_n (√(n/M) − |1 − ω_M(n)|) over 0 ≤ n ≤ M.
    pub min_slack: f64,
    /// sup_n (1 − ω_M(n))/(n + ½) over all n ≥ 0.
    pub sup_ratio: f64,
}

pub fn omega_bound_check(m: usize) -> OmegaReport {
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    let mut sup_ratio: f64 = 0.0;
    for n in 0..=m {
        let gap = (1.0 - omega(m, n as i64)).abs();
        let bound = (n as f64 / m as f64).sqrt();
        if gap > bound + 1e-15 {
            violations += 1;
        }
        min_slack = min_slack.min(bound - gap);
        sup_ratio = sup_ratio.max(gap / (n as f64 + 0.5));
    }
    // Past M the ratio is 1/(n + ½), largest at n = M + 1.
    sup_ratio = sup_ratio.max(1.0 / (m as f64 + 1.5));
    OmegaReport {
        m,
        violations,
        min_slack,
        sup_ratio,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub value: f64,
    pub reference: f64,
    pub abs_gap: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    fn from_values(ms: &[usize], values: Vec<f64>, references: Vec<f64>) -> Self {
        let rows = ms
            .iter()
            .zip(values.into_iter().zip(references))
            .map(|(&m, (value, reference))| ConvergenceRow {
                m,
                value,
                reference,
                abs_gap: (value - reference).abs(),
            })
            .collect();
        ConvergenceTable { rows }
    }

    /// Gaps non-increasing along the rows, with plateaus allowed within 1e−12.
    pub fn gaps_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].abs_gap <= w[0].abs_gap + 1e-12)
    }

    pub fn last_gap(&self) -> Option<f64> {
        self.rows.last().map(|r| r.abs_gap)
    }

    /// Columns M, value, reference, abs_gap.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| vec![r.m.to_string(), num(r.value), num(r.reference), num(r.abs_gap)])
            .collect();
        table_csv(&["M", "value", "reference", "abs_gap"], &rows)
    }
}

/// Tr(f(Q_M, P_M) T) against Tr(f(Q, P) T). Only the real part is tabulated;
/// the imaginary gap is folded into abs_gap.
pub fn moment_convergence(f: &OperatorPolynomial, t: &TruncatedOperator, ms: &[usize]) -> Result<ConvergenceTable> {
    t.cfg.single_mode("fluctuation system")?;
    if f.modes != 1 {
        return Err(Error::BasisMismatch("polynomial must be single mode".into()));
    }
    let reference = f.trace_against(t);
    let values: Vec<Result<Complex64>> = map_indexed(ms.len(), |i| {
        let (sys, t) = system_for(t, ms[i])?;
        let fm = f.substitute(std::slice::from_ref(&sys.q.mat), std::slice::from_ref(&sys.p.mat));
        Ok(crate::operator::trace_product(&fm, &t.mat))
    });
    let mut table = ConvergenceTable::default();
    for (&m, v) in ms.iter().zip(values) {
        let v = v?;
        table.rows.push(ConvergenceRow {
            m,
            value: v.re,
            reference: reference.re,
            abs_gap: (v - reference).norm(),
        });
    }
    Ok(table)
}

/// K^T(q, q) for a single-mode operator.
pub fn diagonal_kernel(t: &TruncatedOperator, q: f64) -> f64 {
    let s = t.support_cutoff();
    let h = hermite_table(s, q);
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..=s {
        for c in 0..=s {
            acc += t.mat[(r, c)] * h[r] * h[c];
        }
    }
    acc.re
}

fn simpson(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = (((b - a) / 2e-3).ceil() as usize).max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Window outside which K^T(q, q) is below e^{−64} relative to its peak.
fn kernel_window(t: &TruncatedOperator) -> f64 {
    (2.0 * t.support_cutoff() as f64 + 1.0).sqrt() + 8.0
}

/// Tr[E(Δ)T] = ∫_Δ K^T(q, q) dq by composite Simpson.
pub fn position_probability(t: &TruncatedOperator, a: f64, b: f64) -> Result<f64> {
    t.cfg.single_mode("fluctuation system")?;
    let r = kernel_window(t);
    Ok(simpson(a.max(-r), b.min(r), |q| diagonal_kernel(t, q)))
}

/// ∫ f(q) K^T(q, q) dq.
pub fn position_expectation(t: &TruncatedOperator, f: impl Fn(f64) -> f64) -> Result<f64> {
    t.cfg.single_mode("fluctuation system")?;
    let r = kernel_window(t);
    Ok(simpson(-r, r, |q| f(q) * diagonal_kernel(t, q)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinWeight {
    pub a: f64,
    pub b: f64,
    /// Tr[T E_M(Δ)].
    pub value: f64,
    /// Tr[T E(Δ)].
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralWeights {
    pub measure: SpectralMeasureApprox,
    pub bins: Vec<BinWeight>,
}

/// Bins [e_i, e_{i+1}) of a partition, the last one closed.
pub fn spectral_weights(sys: &FluctuationSystem, t: &TruncatedOperator, edges: &[f64]) -> Result<SpectralWeights> {
    if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "partition edges must be strictly increasing".into(),
        ));
    }
    let measure = sys.spectral_measure(t)?;
    let last = edges.len() - 2;
    let bins = edges
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (a, b) = (w[0], w[1]);
            let value = if i == last {
                measure.mass(a, b)
            } else {
                measure.mass_where(|q| q >= a - INTERVAL_TOL && q < b - INTERVAL_TOL)
            };
            Ok(BinWeight {
                a,
                b,
                value,
                reference: position_probability(t, a, b)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpectralWeights { measure, bins })
}

/// Tr[T E_M([a, b])] along `ms` against Tr[T E([a, b])].
pub fn spectral_convergence(t: &TruncatedOperator, ms: &[usize], a: f64, b: f64) -> Result<ConvergenceTable> {
    let reference = position_probability(t, a, b)?;
    let values = map_indexed(ms.len(), |i| -> Result<f64> {
        let (sys, t) = system_for(t, ms[i])?;
        Ok(sys.spectral_measure(&t)?.mass(a, b))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::from_values(ms, values, vec![reference; ms.len()]))
}

/// Σ f(q_k) w_k along `ms` against ∫ f(q) K^T(q, q) dq.
pub fn weak_convergence(
    t: &TruncatedOperator,
    ms: &[usize],
    f: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<ConvergenceTable> {
    let reference = position_expectation(t, f)?;
    let values = map_indexed(ms.len(), |i| -> Result<f64> {
        let (sys, t) = system_for(t, ms[i])?;
        Ok(sys.spectral_measure(&t)?.integrate(f))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::from_values(ms, values, vec![reference; ms.len()]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    #[serde(rename = "M")]
    pub m: usize,
    pub a: f64,
    pub b: f64,
}

/// I_k = [q − w_k/2, q + w_k/2] with w_k = 3·2^{−k}, M_k = 2^{k+4}.
pub fn default_schedule(q: f64, steps: usize) -> Vec<ScheduleStep> {
    (0..steps)
        .map(|k| {
            let half = 0.5 * DEFAULT_WIDTH / (1u64 << k) as f64;
            ScheduleStep {
                m: 1 << (k + 4),
                a: q - half,
                b: q + half,
            }
        })
        .collect()
}

/// Tr[E_{M_k}(I_k)T]/(b_k − a_k) against K^T(q, q). The intervals must
/// contain q and be nested with strictly shrinking width.
pub fn rescaled_projection_sequence(
    t: &TruncatedOperator,
    q: f64,
    schedule: &[ScheduleStep],
) -> Result<ConvergenceTable> {
    t.cfg.single_mode("fluctuation system")?;
    for (k, s) in schedule.iter().enumerate() {
        if !(s.a <= q && q <= s.b && s.a < s.b) {
            return Err(Error::InvalidArgument(format!(
                "step {k}: interval [{}, {}] does not contain {q}",
                s.a, s.b
            )));
        }
        if k > 0 {
            let prev = schedule[k - 1];
            let nested = s.a >= prev.a - INTERVAL_TOL && s.b <= prev.b + INTERVAL_TOL;
            if !nested || s.b - s.a >= prev.b - prev.a {
                return Err(Error::InvalidArgument(format!(
                    "step {k}: intervals are not nested and shrinking"
                )));
            }
        }
    }
    let ms: Vec<usize> = schedule.iter().map(|s| s.m).collect();
    let values = map_indexed(schedule.len(), |i| -> Result<f64> {
        let s = schedule[i];
        let (sys, t) = system_for(t, s.m)?;
        Ok(sys.spectral_measure(&t)?.mass(s.a, s.b) / (s.b - s.a))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let reference = diagonal_kernel(t, q);
    Ok(ConvergenceTable::from_values(&ms, values, vec![reference; ms.len()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{Letter, Word};
    use crate::states::{ground, thermal};
    use crate::testutil::random_psd;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn cfg(n: usize) -> BasisConfig {
        BasisConfig::new(1, n).unwrap()
    }

    fn binom(m: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, j| acc * (m - j) as f64 / (j + 1) as f64)
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega(10, 0), 1.0);
        assert_eq!(omega(10, 10), 0.0);
        assert_eq!(omega(10, 11), 0.0);
        assert_eq!(omega(10, -1), 0.0);
        assert!((omega(10, 5) - 0.5f64.sqrt()).abs() < 1e-15);
        let r = omega_bound_check(10);
        assert_eq!(r.violations, 0);
        assert!(r.min_slack >= 0.0);
        let ratios: Vec<f64> = [8, 16, 32, 64, 128]
            .iter()
            .map(|&m| omega_bound_check(m).sup_ratio)
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    }

    #[test]
    fn build_checks() {
        assert!(build(17, cfg(16)).is_err());
        assert!(build(0, cfg(16)).is_err());
        assert!(build(4, BasisConfig::new(2, 8).unwrap()).is_err());
        let s = build(16, cfg(16)).unwrap();
        assert!(s.factorization_residual() < 1e-12);
        assert!(s.q.is_hermitian(0.0) && s.p.is_hermitian(0.0));
        assert!(s.q.support_cutoff() <= 16);
    }

    #[test]
    fn matrix_elements_are_spin_ladder_elements() {
        // ⟨n|A_M|n+1⟩ = √((n+1)(M−n))/√M, from L_+ on spin M/2.
        let m = 12;
        let s = build(m, cfg(20)).unwrap();
        for n in 0..20 {
            let expect = if n < m {
                (((n + 1) * (m - n)) as f64 / m as f64).sqrt()
            } else {
                0.0
            };
            assert!((s.a.mat[(n, n + 1)].re - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn position_spectrum_is_spin_spectrum() {
        // L_1 on spin M/2 has eigenvalues −M/2..M/2, so Q_M has √(2/M)·m.
        for m in [1, 4, 9, 16] {
            let (vals, _) = build(m, cfg(20)).unwrap().position_spectrum();
            for (k, v) in vals.iter().enumerate() {
                let expect = (2.0 / m as f64).sqrt() * (k as f64 - m as f64 / 2.0);
                assert!((v - expect).abs() < 1e-12, "M={m}");
            }
        }
    }

    #[test]
    fn ground_state_weights_are_binomial() {
        // |0⟩ is a spin coherent state, whose L_1 distribution is Binomial(M, ½).
        let m = 20;
        let s = build(m, cfg(m)).unwrap();
        let mu = s.spectral_measure(&ground(cfg(m))).unwrap();
        for k in 0..=m {
            assert!((mu.weights[k] - binom(m, k) / 2f64.powi(m as i32)).abs() < 1e-12);
        }
        assert!((mu.total() - 1.0).abs() < 1e-12);
        assert!((mu.mass(f64::NEG_INFINITY, f64::INFINITY) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_squared_on_ground_is_exact() {
        let q2 = OperatorPolynomial::monomial(1, Word(vec![Letter::Q(0), Letter::Q(0)]));
        let t = ground(cfg(8));
        let table = moment_convergence(&q2, &t, &[8, 16, 32, 64]).unwrap();
        for r in &table.rows {
            assert!((r.reference - 0.5).abs() < 1e-15);
            assert!(r.abs_gap < 1e-12);
        }
        assert!(table.gaps_decreasing());
        let one = OperatorPolynomial::identity(1);
        let table = moment_convergence(&one, &t, &[4, 8]).unwrap();
        assert!(table.rows.iter().all(|r| (r.value - 1.0).abs() < 1e-15));
    }

    #[test]
    fn symmetric_product_on_ground() {
        let qp = OperatorPolynomial::monomial(1, Word(vec![Letter::Q(0), Letter::P(0)]));
        let pq = OperatorPolynomial::monomial(1, Word(vec![Letter::P(0), Letter::Q(0)]));
        let f = qp.plus(&pq);
        let table = moment_convergence(&f, &ground(cfg(8)), &[8, 16, 32, 64]).unwrap();
        assert!(table.rows.iter().all(|r| r.reference.abs() < 1e-15));
        assert!(table.gaps_decreasing());
        // Q⁴ on the ground state: ⟨Q_M⁴⟩ = ¾ − 1/(2M) from the ladder elements.
        let q4 = OperatorPolynomial::monomial(1, Word(vec![Letter::Q(0); 4]));
        let table = moment_convergence(&q4, &ground(cfg(8)), &[8, 16, 32, 64]).unwrap();
        for r in &table.rows {
            assert!((r.value - (0.75 - 0.5 / r.m as f64)).abs() < 1e-12, "{r:?}");
        }
        assert!(table.gaps_decreasing());
    }

    #[test]
    fn corollary_reference_is_erf() {
        let t = ground(cfg(8));
        let p = position_probability(&t, -1.0, 1.0).unwrap();
        assert!((p - libm::erf(1.0)).abs() < 1e-10);
        assert!((position_probability(&t, f64::NEG_INFINITY, f64::INFINITY).unwrap() - 1.0).abs() < 1e-10);
        assert!((diagonal_kernel(&t, 0.0) - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((diagonal_kernel(&t, 1.0) - (-1.0f64).exp() / PI.sqrt()).abs() < 1e-15);
        let g = position_expectation(&t, |q| (-q * q).exp()).unwrap();
        assert!((g - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn spectral_gaps_decrease_on_doubling() {
        let t = ground(cfg(8));
        let table = spectral_convergence(&t, &[8, 16, 32, 64], -1.0, 1.0).unwrap();
        assert!(table.gaps_decreasing(), "{table:?}");
        // Binomial tail sums, with eigenvalues ±1 included at M = 8 and 32.
        let direct = |m: usize| {
            let r = (m as f64 / 2.0).sqrt();
            (0..=m)
                .filter(|&k| (k as f64 - m as f64 / 2.0).abs() <= r + 1e-9)
                .map(|k| binom(m, k))
                .sum::<f64>()
                / 2f64.powi(m as i32)
        };
        for r in &table.rows {
            assert!((r.value - direct(r.m)).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_convergence_gaussian_and_zero() {
        let t = ground(cfg(8));
        let table = weak_convergence(&t, &[8, 16, 32, 64], &|q: f64| (-q * q).exp()).unwrap();
        assert!(table.gaps_decreasing(), "{table:?}");
        assert!((table.rows[0].reference - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        let zero = weak_convergence(&t, &[8, 16], &|_| 0.0).unwrap();
        assert!(zero.rows.iter().all(|r| r.value == 0.0 && r.reference == 0.0));
    }

    #[test]
    fn smoothed_indicator_matches_sharp_bins() {
        let t = ground(cfg(8));
        let s = build(32, cfg(32)).unwrap();
        let w = spectral_weights(&s, &t, &[-1.0, 1.0]).unwrap();
        // Logistic ramps far steeper than the eigenvalue spacing, centred off the eigenvalues.
        let ramp = |x: f64| 1.0 / (1.0 + (-x * 1e4).exp());
        let f = |q: f64| ramp(q + 1.1) * ramp(1.1 - q);
        let sharp = spectral_weights(&s, &t, &[-1.1, 1.1]).unwrap().bins[0].value;
        assert!((w.measure.integrate(f) - sharp).abs() < 1e-10);
        assert!((w.bins[0].reference - libm::erf(1.0)).abs() < 1e-10);
    }

    #[test]
    fn partition_bins_sum_to_total() {
        let t = ground(cfg(8));
        let s = build(16, cfg(16)).unwrap();
        let edges: Vec<f64> = (0..=12).map(|k| -6.0 + k as f64).collect();
        let w = spectral_weights(&s, &t, &edges).unwrap();
        let total: f64 = w.bins.iter().map(|b| b.value).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let reference: f64 = w.bins.iter().map(|b| b.reference).sum();
        assert!((reference - 1.0).abs() < 1e-8);
        assert!(spectral_weights(&s, &t, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn rescaled_projections_toward_density() {
        let t = ground(cfg(8));
        let table = rescaled_projection_sequence(&t, 0.0, &default_schedule(0.0, 4)).unwrap();
        assert_eq!(table.rows.last().unwrap().m, 128);
        assert!(table.last_gap().unwrap() <= 0.05, "{table:?}");
        assert!((table.rows[0].reference - 1.0 / PI.sqrt()).abs() < 1e-15);
        let at_one = rescaled_projection_sequence(&t, 1.0, &default_schedule(1.0, 4)).unwrap();
        assert!((at_one.rows[0].reference - (-1.0f64).exp() / PI.sqrt()).abs() < 1e-15);
        // Fixed interval, growing M: the mean of the kernel over I.
        let fixed = [
            ScheduleStep { m: 16, a: -0.5, b: 0.5 },
            ScheduleStep { m: 64, a: -0.5, b: 0.5 },
        ];
        assert!(rescaled_projection_sequence(&t, 0.0, &fixed).is_err());
        let mean = position_probability(&t, -0.5, 0.5).unwrap();
        let big = build(512, cfg(512))
            .unwrap()
            .spectral_measure(&t)
            .unwrap()
            .mass(-0.5, 0.5);
        assert!((big - mean).abs() < 0.03);
        let off = [ScheduleStep { m: 16, a: 0.5, b: 1.0 }];
        assert!(rescaled_projection_sequence(&t, 0.0, &off).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = ground(cfg(8));
        let table = spectral_convergence(&t, &[8], -1.0, 1.0).unwrap();
        let csv = table.to_csv();
        assert!(csv.starts_with("M,value,reference,abs_gap\n8,"));
    }

    #[test]
    fn thermal_weights_track_reference() {
        let t = thermal(cfg(40), 0.3).unwrap();
        // M = 2k² keeps ±1 in the spectrum, so every step sees the same edge effect.
        let table = spectral_convergence(&t, &[32, 128, 512], -1.0, 1.0).unwrap();
        assert!(table.gaps_decreasing(), "{table:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn system_invariants(m in 1usize..40, extra in 0usize..8) {
            let s = build(m, cfg(m + extra)).unwrap();
            prop_assert!(s.q.is_hermitian(1e-15));
            prop_assert!(s.p.is_hermitian(1e-15));
            prop_assert!(s.factorization_residual() < 1e-12);
            prop_assert!(s.q.support_cutoff() <= m && s.p.support_cutoff() <= m);
            let (vals, _) = s.position_spectrum();
            prop_assert_eq!(vals.len(), m + 1);
            prop_assert_eq!(omega_bound_check(m).violations, 0);
        }

        #[test]
        fn weights_nonnegative_and_sum_to_block_trace(seed in 0u64..1000, m in 2usize..24) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let t = random_psd(&mut rng, cfg(24), 10);
            let s = build(m, cfg(24)).unwrap();
            let mu = s.spectral_measure(&t).unwrap();
            prop_assert!(mu.weights.iter().all(|&w| w >= -1e-10));
            let block: f64 = (0..=m).map(|k| t.mat[(k, k)].re).sum();
            prop_assert!((mu.total() - block).abs() < 1e-12);
        }
    }
}
