//! Dense operators on the truncated number basis.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{hermite_table, BasisConfig, MultiIndex};
use crate::error::{Error, Result};
use crate::phase_space::{Axis, GridFunction, PhaseSpaceGrid};
use crate::poly::{Letter, OperatorPolynomial, Word};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Matrix ⟨α|T|α'⟩ over the box of `cfg`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "OperatorJson", try_from = "OperatorJson")]
pub struct TruncatedOperator {
    pub cfg: BasisConfig,
    pub mat: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    modes: usize,
    cutoff: usize,
    entries: Vec<[f64; 2]>,
}

impl From<TruncatedOperator> for OperatorJson {
    fn from(t: TruncatedOperator) -> Self {
        let d = t.cfg.dim();
        let mut entries = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                let z = t.mat[(r, c)];
                entries.push([z.re, z.im]);
            }
        }
        OperatorJson {
            modes: t.cfg.modes,
            cutoff: t.cfg.cutoff,
            entries,
        }
    }
}

impl TryFrom<OperatorJson> for TruncatedOperator {
    type Error = Error;

    fn try_from(j: OperatorJson) -> Result<Self> {
        let cfg = BasisConfig::new(j.modes, j.cutoff)?;
        let d = cfg.dim();
        if j.entries.len() != d * d {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries, found {}",
                d * d,
                j.entries.len()
            )));
        }
        let mat = CMatrix::from_fn(d, d, |r, c| {
            let [re, im] = j.entries[r * d + c];
            Complex64::new(re, im)
        });
        Ok(TruncatedOperator { cfg, mat })
    }
}

/// Schatten exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schatten {
    One,
    Two,
    Infinity,
}

/// Singular values with fall-off diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularSpectrum {
    /// Descending.
    pub values: Vec<f64>,
    /// Σ_k c_k^{1/(2n)} for n = 1..=n_report.
    pub partial_sums: Vec<f64>,
    /// log c_k is concave in log k over the resolved part of the spectrum,
    /// the signature of faster-than-polynomial decay. Reported only.
    pub superpolynomial: bool,
}

/// Which seminorm family a report holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeminormFamily {
    /// ‖Q^α P^β T P^{β'} Q^{α'}‖, keyed by (α∨β, α'∨β').
    OperatorNorm,
    /// ‖(H+½)^β T (H+½)^{β'}‖₂, keyed by (β, β').
    Sequence,
    /// ‖H^β T H^{β'}‖₂, keyed by (β, β').
    HPower,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeminormReport {
    pub family: SeminormFamily,
    pub values: BTreeMap<(MultiIndex, MultiIndex), f64>,
}

impl TruncatedOperator {
    pub fn new(cfg: BasisConfig, mat: CMatrix) -> Result<Self> {
        let d = cfg.dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::BasisMismatch(format!(
                "matrix is {}x{}, basis has dimension {d}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(TruncatedOperator { cfg, mat })
    }

    pub fn zeros(cfg: BasisConfig) -> Self {
        let d = cfg.dim();
        TruncatedOperator {
            cfg,
            mat: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(cfg: BasisConfig) -> Self {
        let d = cfg.dim();
        TruncatedOperator {
            cfg,
            mat: CMatrix::identity(d, d),
        }
    }

    pub fn from_fn(cfg: BasisConfig, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let d = cfg.dim();
        TruncatedOperator {
            cfg,
            mat: CMatrix::from_fn(d, d, f),
        }
    }

    pub fn diagonal(cfg: BasisConfig, f: impl Fn(&[usize]) -> f64) -> Self {
        let d = cfg.dim();
        let mut mat = CMatrix::zeros(d, d);
        for i in 0..d {
            mat[(i, i)] = Complex64::new(f(&cfg.unflatten(i)), 0.0);
        }
        TruncatedOperator { cfg, mat }
    }

    /// E_{α∨α'} = |α⟩⟨α'|.
    pub fn basis_element(cfg: BasisConfig, alpha: &[usize], alpha_p: &[usize]) -> Self {
        let mut t = Self::zeros(cfg);
        t.mat[(cfg.flatten(alpha), cfg.flatten(alpha_p))] = Complex64::new(1.0, 0.0);
        t
    }

    /// |ψ⟩⟨φ|.
    pub fn rank_one(cfg: BasisConfig, psi: &[Complex64], phi: &[Complex64]) -> Self {
        Self::from_fn(cfg, |r, c| psi[r] * phi[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.cfg.dim()
    }

    fn check(&self, other: &TruncatedOperator) -> Result<()> {
        if self.cfg != other.cfg {
            return Err(Error::BasisMismatch(format!("{:?} vs {:?}", self.cfg, other.cfg)));
        }
        Ok(())
    }

    pub fn compose(&self, other: &TruncatedOperator) -> Result<TruncatedOperator> {
        self.check(other)?;
        Ok(TruncatedOperator {
            cfg: self.cfg,
            mat: &self.mat * &other.mat,
        })
    }

    pub fn adjoint(&self) -> TruncatedOperator {
        TruncatedOperator {
            cfg: self.cfg,
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diagonal().iter().sum()
    }

    /// tr[S†T].
    pub fn hs_inner(&self, other: &TruncatedOperator) -> Result<Complex64> {
        self.check(other)?;
        Ok(self.mat.iter().zip(other.mat.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// tr[S T] without forming the product.
    pub fn trace_product(&self, other: &TruncatedOperator) -> Result<Complex64> {
        self.check(other)?;
        Ok(trace_product(&self.mat, &other.mat))
    }

    pub fn scale(&self, s: Complex64) -> TruncatedOperator {
        TruncatedOperator {
            cfg: self.cfg,
            mat: &self.mat * s,
        }
    }

    pub fn hs_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.mat.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn op_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    pub fn schatten_norm(&self, p: Schatten) -> f64 {
        let s = self.singular_values();
        match p {
            Schatten::One => s.iter().sum(),
            Schatten::Two => s.iter().map(|c| c * c).sum::<f64>().sqrt(),
            Schatten::Infinity => s.first().copied().unwrap_or(0.0),
        }
    }

    pub fn singular_spectrum(&self, n_report: usize) -> SingularSpectrum {
        let values = self.singular_values();
        let partial_sums = (1..=n_report)
            .map(|n| {
                let e = 1.0 / (2.0 * n as f64);
                values.iter().map(|c| c.powf(e)).sum()
            })
            .collect();
        let superpolynomial = concave_log_log(&values);
        SingularSpectrum {
            values,
            partial_sums,
            superpolynomial,
        }
    }

    /// Largest per-mode level carrying a nonzero entry.
    pub fn support_cutoff(&self) -> usize {
        let d = self.dim();
        let mut top = 0;
        for r in 0..d {
            for c in 0..d {
                if self.mat[(r, c)] != ZERO {
                    let m = self
                        .cfg
                        .unflatten(r)
                        .into_iter()
                        .chain(self.cfg.unflatten(c))
                        .max()
                        .unwrap_or(0);
                    top = top.max(m);
                }
            }
        }
        top
    }

    /// Crops or zero-pads to another cutoff with the same number of modes.
    pub fn resized(&self, cutoff: usize) -> TruncatedOperator {
        let to = self.cfg.with_cutoff(cutoff);
        TruncatedOperator {
            cfg: to,
            mat: rebox(&self.mat, &self.cfg, &self.cfg, &to, &to),
        }
    }

    /// T_− = ΠTΠ.
    pub fn parity_conjugate(&self) -> TruncatedOperator {
        let cfg = self.cfg;
        let sign: Vec<f64> = (0..cfg.dim())
            .map(|i| {
                if cfg.unflatten(i).iter().sum::<usize>() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        TruncatedOperator::from_fn(cfg, |r, c| self.mat[(r, c)] * (sign[r] * sign[c]))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|r| (0..d).all(|c| (self.mat[(r, c)] - self.mat[(c, r)].conj()).norm() <= tol))
    }

    /// K^T(q, q') = Σ T_{α∨α'} h_α(q) h_{α'}(q').
    pub fn kernel_at(&self, q: &[f64], qp: &[f64]) -> Complex64 {
        let hq = crate::basis::hermite_multi(&self.cfg, q);
        let hqp = crate::basis::hermite_multi(&self.cfg, qp);
        let d = self.dim();
        let mut s = ZERO;
        for r in 0..d {
            if hq[r] == 0.0 {
                continue;
            }
            let mut row = ZERO;
            for c in 0..d {
                row += self.mat[(r, c)] * hqp[c];
            }
            s += row * hq[r];
        }
        s
    }

    /// Samples of the kernel on a (q, q') grid. Single mode only.
    pub fn kernel_of(&self, grid: &PhaseSpaceGrid) -> Result<GridFunction> {
        self.require_single_mode("kernel_of")?;
        let n = self.cfg.cutoff;
        let hq: Vec<Vec<f64>> = grid.q.nodes.iter().map(|&x| hermite_table(n, x)).collect();
        let hp: Vec<Vec<f64>> = grid.p.nodes.iter().map(|&x| hermite_table(n, x)).collect();
        // Row a of K = h(q_a)^T T H', with H'[:, b] = h(q'_b).
        let hp_mat = DMatrix::from_fn(n + 1, hp.len(), |m, b| Complex64::new(hp[b][m], 0.0));
        let th = &self.mat * hp_mat;
        let rows = crate::par::map_indexed(hq.len(), |a| {
            (0..hp.len())
                .map(|b| (0..=n).map(|m| th[(m, b)] * hq[a][m]).sum::<Complex64>())
                .collect::<Vec<_>>()
        });
        Ok(GridFunction::new(grid.clone(), rows.concat()))
    }

    /// Inverse of `kernel_of` by product quadrature on the kernel grid.
    pub fn matrix_of_kernel(k: &GridFunction, cfg: BasisConfig) -> Result<TruncatedOperator> {
        if cfg.modes != 1 {
            return Err(Error::Unsupported("matrix_of_kernel is single-mode".into()));
        }
        let n = cfg.cutoff;
        let (qa, pa) = (&k.grid.q, &k.grid.p);
        if qa.nodes.len() < n + 1 || pa.nodes.len() < n + 1 {
            return Err(Error::InvalidArgument(format!(
                "kernel grid has {}x{} nodes, cutoff {n} needs at least {} per axis",
                qa.nodes.len(),
                pa.nodes.len(),
                n + 1
            )));
        }
        let left = weighted_hermite(qa, n);
        let right = weighted_hermite(pa, n);
        let kmat = DMatrix::from_fn(qa.nodes.len(), pa.nodes.len(), |a, b| k.at(a, b));
        let mat = left.transpose() * kmat * right;
        TruncatedOperator::new(cfg, mat)
    }

    /// ‖(H+½)^β T (H+½)^{β'}‖₂ from the coefficient sequence.
    pub fn seminorm_h(&self, beta: &MultiIndex, beta_p: &MultiIndex) -> f64 {
        let cfg = self.cfg;
        let d = self.dim();
        let w = |alpha: &[usize], b: &MultiIndex| -> f64 {
            alpha
                .iter()
                .zip(&b.0)
                .map(|(&a, &e)| ((a + 1) as f64).powi(2 * e as i32))
                .product()
        };
        let wl: Vec<f64> = (0..d).map(|i| w(&cfg.unflatten(i), beta)).collect();
        let wr: Vec<f64> = (0..d).map(|i| w(&cfg.unflatten(i), beta_p)).collect();
        let mut s = 0.0;
        for r in 0..d {
            for c in 0..d {
                s += wl[r] * wr[c] * self.mat[(r, c)].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// The same seminorm through the diagonal matrices (H+½)^β.
    pub fn seminorm_h_matrix(&self, beta: &MultiIndex, beta_p: &MultiIndex) -> f64 {
        let l = shifted_h_power(&self.cfg, beta, 1.0);
        let r = shifted_h_power(&self.cfg, beta_p, 1.0);
        (&l.mat * &self.mat * &r.mat)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// ‖Q^α P^β T P^{β'} Q^{α'}‖ evaluated exactly on the enlarged box that
    /// contains the range and co-range of the product.
    pub fn seminorm_qp(
        &self,
        alpha: &MultiIndex,
        alpha_p: &MultiIndex,
        beta: &MultiIndex,
        beta_p: &MultiIndex,
    ) -> Result<f64> {
        let n = self.cfg.modes;
        for m in [alpha, alpha_p, beta, beta_p] {
            if m.len() != n {
                return Err(Error::InvalidArgument("multi-index length must equal modes".into()));
            }
        }
        let dl = alpha.order() + beta.order();
        let dr = alpha_p.order() + beta_p.order();
        self.cfg.check_degree(dl + dr)?;
        let left = OperatorPolynomial::monomial(n, Word::qp_monomial(alpha, beta));
        let mut right_letters = Word::qp_monomial(alpha_p, beta_p).0;
        right_letters.reverse();
        let right = OperatorPolynomial::monomial(n, Word(right_letters));
        let c = self.cfg.cutoff;
        let lm = left.matrix_rect(c + dl, c);
        let rm = right.matrix_rect(c, c + dr);
        let prod = lm * &self.mat * rm;
        Ok(prod.singular_values().iter().copied().fold(0.0, f64::max))
    }

    /// Square root of a positive semidefinite operator by eigendecomposition;
    /// eigenvalues in [−1e−10·‖T‖, 0) are clipped to zero.
    pub fn sqrt_psd(&self) -> Result<TruncatedOperator> {
        let herm = (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let norm = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-10 * norm;
        let mut roots = DVector::<Complex64>::zeros(eig.eigenvalues.len());
        for (i, &v) in eig.eigenvalues.iter().enumerate() {
            if v < -tol {
                return Err(Error::NotPsd(v));
            }
            roots[i] = Complex64::new(v.max(0.0).sqrt(), 0.0);
        }
        let u = &eig.eigenvectors;
        let mat = u * CMatrix::from_diagonal(&roots) * u.adjoint();
        Ok(TruncatedOperator { cfg: self.cfg, mat })
    }

    /// |T| = √(T†T).
    pub fn abs_op(&self) -> TruncatedOperator {
        let tt = TruncatedOperator {
            cfg: self.cfg,
            mat: self.mat.adjoint() * &self.mat,
        };
        tt.sqrt_psd().expect("T†T is positive")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn seminorm_report(&self, family: SeminormFamily, order: usize) -> Result<SeminormReport> {
        let n = self.cfg.modes;
        let mut values = BTreeMap::new();
        match family {
            SeminormFamily::OperatorNorm => {
                let idx = MultiIndex::all_up_to(2 * n, order);
                for l in &idx {
                    for r in &idx {
                        if l.order() + r.order() > order {
                            continue;
                        }
                        let (a, b) = l.split(n);
                        let (ap, bp) = r.split(n);
                        values.insert((l.clone(), r.clone()), self.seminorm_qp(&a, &ap, &b, &bp)?);
                    }
                }
            }
            SeminormFamily::Sequence | SeminormFamily::HPower => {
                let idx = MultiIndex::all_up_to(n, order);
                let shift = if family == SeminormFamily::Sequence { 1.0 } else { 0.5 };
                for b in &idx {
                    for bp in &idx {
                        let v = if shift == 1.0 {
                            self.seminorm_h(b, bp)
                        } else {
                            let l = shifted_h_power(&self.cfg, b, 0.5);
                            let r = shifted_h_power(&self.cfg, bp, 0.5);
                            (&l.mat * &self.mat * &r.mat)
                                .iter()
                                .map(|z| z.norm_sqr())
                                .sum::<f64>()
                                .sqrt()
                        };
                        values.insert((b.clone(), bp.clone()), v);
                    }
                }
            }
        }
        Ok(SeminormReport { family, values })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("operator serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub(crate) fn require_single_mode(&self, what: &str) -> Result<()> {
        if self.cfg.modes != 1 {
            return Err(Error::Unsupported(format!("{what} on a grid is single-mode")));
        }
        Ok(())
    }
}

/// Diagonal Π_i (α_i + s)^{β_i}; s = 1 gives (H+½)^β, s = ½ gives H^β.
pub fn shifted_h_power(cfg: &BasisConfig, beta: &MultiIndex, s: f64) -> TruncatedOperator {
    TruncatedOperator::diagonal(*cfg, |a| {
        a.iter()
            .zip(&beta.0)
            .map(|(&k, &e)| (k as f64 + s).powi(e as i32))
            .product()
    })
}

/// tr[A B] for square matrices of equal size.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let d = a.nrows();
    let mut s = ZERO;
    for i in 0..d {
        for j in 0..d {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// Copies the entries of `m` (rows indexed by box `from_r`, columns by
/// `from_c`) into a matrix indexed by boxes `to_r`, `to_c`, dropping entries
/// outside and zero-filling the rest.
pub fn rebox(
    m: &CMatrix,
    from_r: &BasisConfig,
    from_c: &BasisConfig,
    to_r: &BasisConfig,
    to_c: &BasisConfig,
) -> CMatrix {
    let rows: Vec<Option<usize>> = (0..to_r.dim())
        .map(|i| {
            let a = to_r.unflatten(i);
            from_r.contains(&a).then(|| from_r.flatten(&a))
        })
        .collect();
    let cols: Vec<Option<usize>> = (0..to_c.dim())
        .map(|i| {
            let a = to_c.unflatten(i);
            from_c.contains(&a).then(|| from_c.flatten(&a))
        })
        .collect();
    CMatrix::from_fn(to_r.dim(), to_c.dim(), |r, c| match (rows[r], cols[c]) {
        (Some(i), Some(j)) => m[(i, j)],
        _ => ZERO,
    })
}

fn weighted_hermite(axis: &Axis, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(axis.nodes.len(), n + 1);
    for (a, (&x, &w)) in axis.nodes.iter().zip(&axis.weights).enumerate() {
        let h = hermite_table(n, x);
        for k in 0..=n {
            m[(a, k)] = Complex64::new(w * h[k], 0.0);
        }
    }
    m
}

fn concave_log_log(values: &[f64]) -> bool {
    let top = values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return false;
    }
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 1e-13 * top)
        .map(|(k, &c)| (((k + 1) as f64).ln(), c.ln()))
        .collect();
    if pts.len() < 4 {
        return true;
    }
    let mut concave = 0usize;
    let mut total = 0usize;
    for w in pts.windows(3) {
        let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
        total += 1;
        if s2 <= s1 {
            concave += 1;
        }
    }
    2 * concave > total
}

impl Add for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn add(self, rhs: &TruncatedOperator) -> TruncatedOperator {
        assert_eq!(self.cfg, rhs.cfg, "basis mismatch in addition");
        TruncatedOperator {
            cfg: self.cfg,
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn sub(self, rhs: &TruncatedOperator) -> TruncatedOperator {
        assert_eq!(self.cfg, rhs.cfg, "basis mismatch in subtraction");
        TruncatedOperator {
            cfg: self.cfg,
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &TruncatedOperator {
    type Output = TruncatedOperator;
    fn mul(self, rhs: &TruncatedOperator) -> TruncatedOperator {
        self.compose(rhs).expect("basis mismatch in product")
    }
}

/// Matrix of a single canonical operator Q_i or P_i on the box.
pub fn letter_matrix(cfg: &BasisConfig, letter: Letter) -> TruncatedOperator {
    let m = OperatorPolynomial::monomial(cfg.modes, Word(vec![letter])).matrix_rect(cfg.cutoff, cfg.cutoff);
    TruncatedOperator { cfg: *cfg, mat: m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::gauss_hermite;
    use crate::testutil::{random_operator, random_psd};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basic_algebra() {
        let cfg = BasisConfig::new(1, 5).unwrap();
        let t0 = TruncatedOperator::basis_element(cfg, &[0], &[0]);
        assert_eq!(t0.trace(), c(1.0));
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..10 {
            let t = random_operator(&mut rng, cfg, 5);
            let (inf, two, one) = (
                t.schatten_norm(Schatten::Infinity),
                t.schatten_norm(Schatten::Two),
                t.schatten_norm(Schatten::One),
            );
            assert!(inf <= two * (1.0 + 1e-12) && two <= one * (1.0 + 1e-12));
            assert!((two - t.hs_norm()).abs() < 1e-12 * two);
            assert_eq!(t.adjoint().adjoint(), t);
        }
        let e = |a: usize, b: usize| TruncatedOperator::basis_element(cfg, &[a], &[b]);
        assert_eq!(e(1, 2).hs_inner(&e(1, 2)).unwrap(), c(1.0));
        assert_eq!(e(1, 2).hs_inner(&e(2, 1)).unwrap(), c(0.0));
        assert!(e(0, 0)
            .compose(&TruncatedOperator::zeros(BasisConfig::new(1, 4).unwrap()))
            .is_err());
    }

    #[test]
    fn gaussian_kernel() {
        let cfg = BasisConfig::new(1, 30).unwrap();
        let t0 = TruncatedOperator::basis_element(cfg, &[0], &[0]);
        let grid = PhaseSpaceGrid::kernel_uniform(4.0, 40);
        let k = t0.kernel_of(&grid).unwrap();
        for (a, &q) in grid.q.nodes.iter().enumerate() {
            for (b, &qp) in grid.p.nodes.iter().enumerate() {
                let want = (-(q * q + qp * qp) / 2.0).exp() / std::f64::consts::PI.sqrt();
                assert!((k.at(a, b).re - want).abs() < 1e-14);
            }
        }
        let e01 = TruncatedOperator::basis_element(cfg, &[0], &[1]);
        let v = e01.kernel_at(&[0.4], &[-0.7]);
        let want = crate::basis::hermite_eval(0, 0.4) * crate::basis::hermite_eval(1, -0.7);
        assert!((v.re - want).abs() < 1e-15);
    }

    #[test]
    fn kernel_round_trip_on_gauss_hermite_grid() {
        let cfg = BasisConfig::new(1, 24).unwrap();
        let grid = PhaseSpaceGrid::kernel_gauss_hermite(&gauss_hermite(60).unwrap());
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..3 {
            let t = random_operator(&mut rng, cfg, 12);
            let k = t.kernel_of(&grid).unwrap();
            let back = TruncatedOperator::matrix_of_kernel(&k, cfg).unwrap();
            assert!((&back - &t).hs_norm() <= 1e-8 * t.hs_norm());
            // Parseval against the kernel.
            let kk = k.values.iter().enumerate().map(|(i, z)| {
                let (a, b) = (i / grid.p.nodes.len(), i % grid.p.nodes.len());
                grid.q.weights[a] * grid.p.weights[b] * z.norm_sqr()
            });
            let k2: f64 = kk.sum();
            assert!((k2 - t.hs_norm().powi(2)).abs() < 1e-8 * k2);
        }
        let t25 = TruncatedOperator::basis_element(cfg, &[2], &[5]);
        let back = TruncatedOperator::matrix_of_kernel(&t25.kernel_of(&grid).unwrap(), cfg).unwrap();
        assert!((&back - &t25).hs_norm() < 1e-10);
        let small = PhaseSpaceGrid::kernel_gauss_hermite(&gauss_hermite(10).unwrap());
        let k = t25.resized(24).kernel_of(&small).unwrap();
        assert!(TruncatedOperator::matrix_of_kernel(&k, cfg).is_err());
    }

    #[test]
    fn sequence_seminorms() {
        let cfg = BasisConfig::new(1, 6).unwrap();
        let t0 = TruncatedOperator::basis_element(cfg, &[0], &[0]);
        let b = MultiIndex(vec![3]);
        assert!((t0.seminorm_h(&b, &b) - 1.0).abs() < 1e-15);
        let e10 = TruncatedOperator::basis_element(cfg, &[1], &[0]);
        assert!((e10.seminorm_h(&MultiIndex(vec![1]), &MultiIndex(vec![0])) - 2.0).abs() < 1e-15);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let t = random_operator(&mut rng, cfg, 6);
        for (b, bp) in [(vec![1], vec![2]), (vec![0], vec![3]), (vec![2], vec![2])] {
            let (b, bp) = (MultiIndex(b), MultiIndex(bp));
            let s = t.seminorm_h(&b, &bp);
            assert!((s - t.seminorm_h_matrix(&b, &bp)).abs() < 1e-12 * s);
        }
    }

    #[test]
    fn qp_seminorms() {
        let cfg = BasisConfig::new(1, 16).unwrap();
        let t0 = TruncatedOperator::basis_element(cfg, &[0], &[0]);
        let z = MultiIndex(vec![0]);
        let one = MultiIndex(vec![1]);
        assert!((t0.seminorm_qp(&z, &z, &z, &z).unwrap() - 1.0).abs() < 1e-14);
        let v = t0.seminorm_qp(&one, &z, &z, &z).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!(t0
            .seminorm_qp(&MultiIndex(vec![3]), &z, &MultiIndex(vec![2]), &z)
            .is_err());
    }

    #[test]
    fn qp_seminorm_matches_sup_over_vectors() {
        // The operator norm bounds |⟨u, X v⟩| for unit vectors and is attained
        // by the top singular pair.
        let cfg = BasisConfig::new(1, 12).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let t = random_operator(&mut rng, cfg, 4);
        let (a, b) = (MultiIndex(vec![1]), MultiIndex(vec![1]));
        let z = MultiIndex(vec![0]);
        let norm = t.seminorm_qp(&a, &z, &b, &z).unwrap();
        let x = OperatorPolynomial::monomial(1, Word::qp_monomial(&a, &b)).matrix_rect(14, 12) * &t.mat;
        use rand::Rng;
        let mut best: f64 = 0.0;
        for _ in 0..200 {
            let u = DVector::from_fn(15, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let v = DVector::from_fn(13, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let val = (u.adjoint() * &x * &v)[(0, 0)].norm() / (u.norm() * v.norm());
            assert!(val <= norm * (1.0 + 1e-12));
            best = best.max(val);
        }
        assert!(best > 0.1 * norm);
    }

    #[test]
    fn roots_and_absolute_values() {
        let cfg = BasisConfig::new(1, 4).unwrap();
        let t0 = TruncatedOperator::basis_element(cfg, &[0], &[0]);
        assert!((&t0.sqrt_psd().unwrap() - &t0).hs_norm() < 1e-14);
        let four = TruncatedOperator::basis_element(cfg, &[1], &[1]).scale(c(4.0));
        let two = TruncatedOperator::basis_element(cfg, &[1], &[1]).scale(c(2.0));
        assert!((&four.sqrt_psd().unwrap() - &two).hs_norm() < 1e-14);
        assert!(t0.scale(c(-1.0)).sqrt_psd().is_err());
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let t = random_psd(&mut rng, cfg, 4);
        let r = t.sqrt_psd().unwrap();
        assert!((&(&r * &r) - &t).hs_norm() < 1e-8);
    }

    #[test]
    fn spectra() {
        let cfg = BasisConfig::new(1, 20).unwrap();
        let th = TruncatedOperator::diagonal(cfg, |a| (-(a[0] as f64)).exp());
        let s = th.singular_spectrum(3);
        for (k, v) in s.values.iter().enumerate() {
            assert!((v - (-(k as f64)).exp()).abs() < 1e-14);
        }
        assert!(s.superpolynomial);
        assert_eq!(s.partial_sums.len(), 3);
        let t0 = TruncatedOperator::basis_element(cfg, &[0], &[0]);
        let s0 = t0.singular_spectrum(1);
        assert!((s0.values[0] - 1.0).abs() < 1e-15 && s0.values[1].abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let cfg = BasisConfig::new(2, 2).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        let t = random_operator(&mut rng, cfg, 2);
        let back = TruncatedOperator::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert!(TruncatedOperator::from_json(r#"{"modes":1,"cutoff":1,"entries":[[1,0]]}"#).is_err());
    }

    proptest! {
        #[test]
        fn seminorm_adjoint_symmetry(seed in 0u64..500, a in 0usize..2, ap in 0usize..2, b in 0usize..2, bp in 0usize..2) {
            let cfg = BasisConfig::new(1, 16).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let t = random_operator(&mut rng, cfg, 6);
            let m = |k| MultiIndex(vec![k]);
            let x = t.seminorm_qp(&m(a), &m(ap), &m(b), &m(bp)).unwrap();
            let y = t.adjoint().seminorm_qp(&m(ap), &m(a), &m(bp), &m(b)).unwrap();
            prop_assert!((x - y).abs() <= 1e-10 * x.max(1.0));
        }

        #[test]
        fn seminorm_cauchy_schwarz(seed in 0u64..500, b in 0usize..3, bp in 0usize..3) {
            let cfg = BasisConfig::new(1, 8).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let t = random_operator(&mut rng, cfg, 8);
            let z = MultiIndex(vec![0]);
            let lhs = t.seminorm_h(&MultiIndex(vec![b]), &MultiIndex(vec![bp]));
            let rhs = 0.5 * (t.seminorm_h(&MultiIndex(vec![2 * b]), &z) + t.seminorm_h(&z, &MultiIndex(vec![2 * bp])));
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn abs_op_shares_singular_values(seed in 0u64..500) {
            let cfg = BasisConfig::new(1, 6).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let t = random_operator(&mut rng, cfg, 6);
            let a = t.abs_op();
            prop_assert!(a.min_eigenvalue() >= -1e-10);
            let (s1, s2) = (t.singular_values(), a.singular_values());
            for (x, y) in s1.iter().zip(&s2) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn sqrt_of_projection_is_itself(seed in 0u64..200) {
            let cfg = BasisConfig::new(1, 5).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let u = random_operator(&mut rng, cfg, 5);
            let v: Vec<Complex64> = (0..6).map(|i| u.mat[(i, 0)]).collect();
            let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let v: Vec<Complex64> = v.iter().map(|z| z / nrm).collect();
            let p = TruncatedOperator::rank_one(cfg, &v, &v);
            // Eigenvalues at roundoff level 1e−16 have square roots near 1e−8.
            prop_assert!((&p.sqrt_psd().unwrap() - &p).hs_norm() < 1e-7);
        }
    }
}
