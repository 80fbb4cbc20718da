//! Words and polynomials in the canonical operators Q_i, P_i.
//!
//! Matrix elements are computed by applying letters to basis vectors in a
//! box large enough that no letter ever reaches its edge, so every returned
//! entry equals the entry of the untruncated operator.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisConfig, MultiIndex};
use crate::operator::{CMatrix, TruncatedOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One of R_1..R_{2N} = Q_1..Q_N, P_1..P_N (modes counted from 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    Q(usize),
    P(usize),
}

impl Letter {
    pub fn mode(&self) -> usize {
        match *self {
            Letter::Q(i) | Letter::P(i) => i,
        }
    }

    /// R_j for j in 0..2N.
    pub fn from_index(j: usize, modes: usize) -> Letter {
        if j < modes {
            Letter::Q(j)
        } else {
            Letter::P(j - modes)
        }
    }

    pub fn index(&self, modes: usize) -> usize {
        match *self {
            Letter::Q(i) => i,
            Letter::P(i) => modes + i,
        }
    }

    fn order_key(&self) -> (u8, usize) {
        match *self {
            Letter::Q(i) => (0, i),
            Letter::P(i) => (1, i),
        }
    }
}

/// Product R_{A_1} R_{A_2} ⋯ R_{A_n}, leftmost letter applied last.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Ā: reversed letters, so that (R^A)* = R^{Ā}.
    pub fn conjugate(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// A∨B as words: the letters of `self` followed by those of `other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Q^α P^β = Q_1^{α_1}⋯Q_N^{α_N} P_1^{β_1}⋯P_N^{β_N}.
    pub fn qp_monomial(alpha: &MultiIndex, beta: &MultiIndex) -> Word {
        let mut v = Vec::new();
        for (i, &a) in alpha.0.iter().enumerate() {
            v.extend(std::iter::repeat_n(Letter::Q(i), a));
        }
        for (i, &b) in beta.0.iter().enumerate() {
            v.extend(std::iter::repeat_n(Letter::P(i), b));
        }
        Word(v)
    }

    /// All Q left of all P, each group with ascending modes.
    pub fn is_normal(&self) -> bool {
        self.0.windows(2).all(|w| w[0].order_key() <= w[1].order_key())
    }

    /// Normal-ordered form Σ c_{αβ} Q^α P^β using [Q_i, P_j] = iδ_{ij}.
    pub fn reduce(&self, modes: usize) -> NormalForm {
        let mut pending: Vec<(Complex64, Vec<Letter>)> = vec![(Complex64::new(1.0, 0.0), self.0.clone())];
        let mut out: BTreeMap<(MultiIndex, MultiIndex), Complex64> = BTreeMap::new();
        while let Some((c, mut w)) = pending.pop() {
            let pos = w.windows(2).position(|p| p[0].order_key() > p[1].order_key());
            match pos {
                None => {
                    let mut alpha = vec![0; modes];
                    let mut beta = vec![0; modes];
                    for l in &w {
                        match *l {
                            Letter::Q(i) => alpha[i] += 1,
                            Letter::P(i) => beta[i] += 1,
                        }
                    }
                    *out.entry((MultiIndex(alpha), MultiIndex(beta))).or_insert(ZERO) += c;
                }
                Some(k) => {
                    let (x, y) = (w[k], w[k + 1]);
                    if let (Letter::P(i), Letter::Q(j)) = (x, y) {
                        if i == j {
                            // P_i Q_i = Q_i P_i − i
                            let mut shorter = w.clone();
                            shorter.drain(k..k + 2);
                            pending.push((c * Complex64::new(0.0, -1.0), shorter));
                        }
                    }
                    w.swap(k, k + 1);
                    pending.push((c, w));
                }
            }
        }
        out.retain(|_, v| *v != ZERO);
        NormalForm { modes, terms: out }
    }
}

/// Linear combination of normal-ordered monomials Q^α P^β.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalForm {
    pub modes: usize,
    pub terms: BTreeMap<(MultiIndex, MultiIndex), Complex64>,
}

impl NormalForm {
    pub fn to_polynomial(&self) -> OperatorPolynomial {
        OperatorPolynomial {
            modes: self.modes,
            terms: self
                .terms
                .iter()
                .map(|((a, b), &c)| (c, Word::qp_monomial(a, b)))
                .collect(),
        }
    }
}

/// Σ_k c_k R^{A_k}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorPolynomial {
    pub modes: usize,
    pub terms: Vec<(Complex64, Word)>,
}

impl OperatorPolynomial {
    pub fn identity(modes: usize) -> Self {
        Self::monomial(modes, Word(vec![]))
    }

    pub fn monomial(modes: usize, word: Word) -> Self {
        OperatorPolynomial {
            modes,
            terms: vec![(Complex64::new(1.0, 0.0), word)],
        }
    }

    pub fn letter(modes: usize, l: Letter) -> Self {
        Self::monomial(modes, Word(vec![l]))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        OperatorPolynomial {
            modes: self.modes,
            terms: self.terms.iter().map(|(c, w)| (c * s, w.clone())).collect(),
        }
    }

    pub fn plus(&self, other: &OperatorPolynomial) -> Self {
        assert_eq!(self.modes, other.modes);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        OperatorPolynomial {
            modes: self.modes,
            terms,
        }
    }

    /// Product in operator order `self · other`.
    pub fn times(&self, other: &OperatorPolynomial) -> Self {
        assert_eq!(self.modes, other.modes);
        let mut terms = Vec::new();
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                terms.push((a * b, u.concat(v)));
            }
        }
        OperatorPolynomial {
            modes: self.modes,
            terms,
        }
    }

    pub fn adjoint(&self) -> Self {
        OperatorPolynomial {
            modes: self.modes,
            terms: self.terms.iter().map(|(c, w)| (c.conj(), w.conjugate())).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.len()).max().unwrap_or(0)
    }

    /// H_tot^m = (Σ_i (Q_i² + P_i²)/2)^m.
    pub fn total_hamiltonian_power(modes: usize, m: usize) -> Self {
        let mut h = OperatorPolynomial { modes, terms: vec![] };
        for i in 0..modes {
            h.terms
                .push((Complex64::new(0.5, 0.0), Word(vec![Letter::Q(i), Letter::Q(i)])));
            h.terms
                .push((Complex64::new(0.5, 0.0), Word(vec![Letter::P(i), Letter::P(i)])));
        }
        let mut out = Self::identity(modes);
        for _ in 0..m {
            out = out.times(&h);
        }
        out
    }

    /// Exact entries ⟨α|poly|α'⟩ for α in the box with per-mode cutoff
    /// `row_cut` and α' in the box with cutoff `col_cut`.
    pub fn matrix_rect(&self, row_cut: usize, col_cut: usize) -> CMatrix {
        let n = self.modes;
        let rows = BasisConfig {
            modes: n,
            cutoff: row_cut,
        };
        let cols = BasisConfig {
            modes: n,
            cutoff: col_cut,
        };
        let ext = BasisConfig {
            modes: n,
            cutoff: col_cut + self.degree(),
        };
        let mut out = CMatrix::zeros(rows.dim(), cols.dim());
        let row_map: Vec<Option<usize>> = (0..ext.dim())
            .map(|i| {
                let a = ext.unflatten(i);
                rows.contains(&a).then(|| rows.flatten(&a))
            })
            .collect();
        for c in 0..cols.dim() {
            let start = ext.flatten(&cols.unflatten(c));
            for (coef, word) in &self.terms {
                let mut v = vec![ZERO; ext.dim()];
                v[start] = *coef;
                for l in word.0.iter().rev() {
                    v = apply_letter(*l, &v, &ext);
                }
                for (i, z) in v.iter().enumerate() {
                    if *z != ZERO {
                        if let Some(r) = row_map[i] {
                            out[(r, c)] += *z;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn matrix(&self, cfg: &BasisConfig) -> TruncatedOperator {
        TruncatedOperator {
            cfg: *cfg,
            mat: self.matrix_rect(cfg.cutoff, cfg.cutoff),
        }
    }

    /// Evaluates the polynomial with letters replaced by the given matrices.
    pub fn substitute(&self, q: &[CMatrix], p: &[CMatrix]) -> CMatrix {
        let d = q[0].nrows();
        let mut out = CMatrix::zeros(d, d);
        for (c, w) in &self.terms {
            let mut m = CMatrix::identity(d, d);
            for l in &w.0 {
                m = match *l {
                    Letter::Q(i) => m * &q[i],
                    Letter::P(i) => m * &p[i],
                };
            }
            out += m * *c;
        }
        out
    }

    /// tr[poly · T], exact for any truncated T.
    pub fn trace_against(&self, t: &TruncatedOperator) -> Complex64 {
        let c = t.cfg.cutoff;
        crate::operator::trace_product(&self.matrix_rect(c, c), &t.mat)
    }

    /// Parses sums of products such as `Q^2`, `QP + PQ`, `0.5*Q0^2 - 2*P1`
    /// or `1`. A letter without a mode index refers to mode 0.
    pub fn parse(src: &str, modes: usize) -> crate::error::Result<Self> {
        let bad = |why: &str| crate::error::Error::InvalidArgument(format!("polynomial '{src}': {why}"));
        let chars: Vec<char> = src.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.is_empty() {
            return Err(bad("empty"));
        }
        let mut out = OperatorPolynomial { modes, terms: vec![] };
        let mut i = 0;
        while i < chars.len() {
            let mut sign = 1.0;
            while i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                if chars[i] == '-' {
                    sign = -sign;
                }
                i += 1;
            }
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == 'e') {
                i += 1;
            }
            let mut coef = 1.0;
            if i > start {
                let text: String = chars[start..i].iter().collect();
                coef = text.parse().map_err(|_| bad("bad coefficient"))?;
                if i < chars.len() && chars[i] == '*' {
                    i += 1;
                }
            }
            let mut letters = Vec::new();
            while i < chars.len() && (chars[i] == 'Q' || chars[i] == 'P') {
                let is_q = chars[i] == 'Q';
                i += 1;
                let mut mode = 0;
                let ms = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i > ms {
                    mode = chars[ms..i]
                        .iter()
                        .collect::<String>()
                        .parse()
                        .map_err(|_| bad("bad mode"))?;
                }
                if mode >= modes {
                    return Err(bad("mode index out of range"));
                }
                let mut power = 1;
                if i < chars.len() && chars[i] == '^' {
                    i += 1;
                    let ps = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    power = chars[ps..i]
                        .iter()
                        .collect::<String>()
                        .parse()
                        .map_err(|_| bad("bad power"))?;
                }
                let l = if is_q { Letter::Q(mode) } else { Letter::P(mode) };
                letters.extend(std::iter::repeat_n(l, power));
                if i < chars.len() && chars[i] == '*' {
                    i += 1;
                }
            }
            if i == start {
                return Err(bad(&format!("unexpected '{}'", chars[i])));
            }
            if i < chars.len() && chars[i] != '+' && chars[i] != '-' {
                return Err(bad(&format!("unexpected '{}'", chars[i])));
            }
            out.terms.push((Complex64::new(sign * coef, 0.0), Word(letters)));
        }
        Ok(out)
    }
}

/// Applies one letter to a vector on a box; the caller guarantees that the
/// vector vanishes on the top level whenever a raising part could reach it.
pub(crate) fn apply_letter(l: Letter, v: &[Complex64], b: &BasisConfig) -> Vec<Complex64> {
    let levels = b.levels();
    let j = l.mode();
    let stride = levels.pow((b.modes - 1 - j) as u32);
    let mut out = vec![ZERO; v.len()];
    let (lower, raise) = match l {
        Letter::Q(_) => (Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)),
        Letter::P(_) => (Complex64::new(0.0, -FRAC_1_SQRT_2), Complex64::new(0.0, FRAC_1_SQRT_2)),
    };
    for (i, &z) in v.iter().enumerate() {
        if z == ZERO {
            continue;
        }
        let a = (i / stride) % levels;
        if a > 0 {
            out[i - stride] += lower * (a as f64).sqrt() * z;
        }
        if a + 1 < levels {
            out[i + stride] += raise * ((a + 1) as f64).sqrt() * z;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{momentum_matrices, position_matrices};

    #[test]
    fn parse_polynomials() {
        let p = OperatorPolynomial::parse("QP + PQ", 1).unwrap();
        assert_eq!(p.terms.len(), 2);
        assert_eq!(p.terms[1].1, Word(vec![Letter::P(0), Letter::Q(0)]));
        let h = OperatorPolynomial::parse("0.5*Q^2 + 0.5 P^2", 1).unwrap();
        let cfg = BasisConfig::new(1, 6).unwrap();
        let m = h.matrix(&cfg);
        for k in 0..=6 {
            assert!((m.mat[(k, k)].re - (k as f64 + 0.5)).abs() < 1e-12);
        }
        let one = OperatorPolynomial::parse("1", 1).unwrap();
        assert_eq!(one.terms, vec![(Complex64::new(1.0, 0.0), Word(vec![]))]);
        let two = OperatorPolynomial::parse("-2*Q1^3P0", 2).unwrap();
        assert_eq!(two.terms[0].0, Complex64::new(-2.0, 0.0));
        assert_eq!(two.terms[0].1.len(), 4);
        assert!(OperatorPolynomial::parse("Q1", 1).is_err());
        assert!(OperatorPolynomial::parse("X", 1).is_err());
        assert!(OperatorPolynomial::parse("", 1).is_err());
    }

    #[test]
    fn single_commutator_reduction() {
        let nf = Word(vec![Letter::P(0), Letter::Q(0)]).reduce(1);
        let one = MultiIndex(vec![1]);
        let zero = MultiIndex(vec![0]);
        assert_eq!(nf.terms.len(), 2);
        assert_eq!(nf.terms[&(one.clone(), one)], Complex64::new(1.0, 0.0));
        assert_eq!(nf.terms[&(zero.clone(), zero)], Complex64::new(0.0, -1.0));
    }

    #[test]
    fn normal_words_are_fixed_points() {
        let w = Word(vec![
            Letter::Q(0),
            Letter::Q(1),
            Letter::P(0),
            Letter::P(0),
            Letter::P(1),
        ]);
        assert!(w.is_normal());
        let nf = w.reduce(2);
        assert_eq!(nf.terms.len(), 1);
        assert_eq!(nf.to_polynomial().terms[0].1, w);
        assert!(!Word(vec![Letter::Q(1), Letter::Q(0)]).is_normal());
    }

    #[test]
    fn exact_entries_match_large_truncation() {
        // Entries near the edge of a cutoff-8 box, computed exactly, equal
        // the products of truncated matrices at cutoff 20.
        let poly = OperatorPolynomial::monomial(1, Word(vec![Letter::P(0), Letter::Q(0), Letter::Q(0), Letter::P(0)]));
        let m = poly.matrix_rect(8, 8);
        let big = BasisConfig::new(1, 20).unwrap();
        let q = position_matrices(&big).remove(0).mat;
        let p = momentum_matrices(&big).remove(0).mat;
        let prod = &p * &q * &q * &p;
        for r in 0..=8 {
            for c in 0..=8 {
                assert!((m[(r, c)] - prod[(r, c)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn substitution_agrees_with_exact_matrix_in_interior() {
        let cfg = BasisConfig::new(1, 12).unwrap();
        let q = position_matrices(&cfg).remove(0).mat;
        let p = momentum_matrices(&cfg).remove(0).mat;
        let poly = OperatorPolynomial::monomial(1, Word(vec![Letter::Q(0), Letter::P(0)]))
            .plus(&OperatorPolynomial::identity(1).scaled(Complex64::new(0.0, 0.5)));
        let s = poly.substitute(&[q], &[p]);
        let e = poly.matrix(&cfg);
        for r in 0..11 {
            for c in 0..11 {
                assert!((s[(r, c)] - e.mat[(r, c)]).norm() < 1e-13);
            }
        }
    }
}
