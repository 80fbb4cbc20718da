//! Operator moments, word moments, analyticity certificates and
//! purification.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{ln_factorials, momentum_matrices, position_matrices, BasisConfig, MultiIndex};
use crate::error::{Error, Result};
use crate::io::{index_label, num, table_csv};
use crate::operator::{rebox, trace_product, CMatrix, TruncatedOperator};
use crate::phase_space::{weyl_operator, PhasePoint};
use crate::poly::{apply_letter, Letter, NormalForm, OperatorPolynomial, Word};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// m_{α,β} = tr(Q^α P^β T) for |α| + |β| ≤ degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub modes: usize,
    pub degree: usize,
    pub entries: Vec<(MultiIndex, MultiIndex, Complex64)>,
}

impl MomentTable {
    pub fn get(&self, alpha: &[usize], beta: &[usize]) -> Option<Complex64> {
        self.entries
            .iter()
            .find(|(a, b, _)| a.0 == alpha && b.0 == beta)
            .map(|(_, _, m)| *m)
    }

    /// Columns alpha, beta, re, im.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|(a, b, m)| vec![index_label(&a.0), index_label(&b.0), num(m.re), num(m.im)])
            .collect();
        table_csv(&["alpha", "beta", "re", "im"], &rows)
    }
}

fn crop(t: &TruncatedOperator) -> (BasisConfig, CMatrix) {
    let sb = t.cfg.with_cutoff(t.support_cutoff());
    let m = rebox(&t.mat, &t.cfg, &t.cfg, &sb, &sb);
    (sb, m)
}

pub fn moment_table(t: &TruncatedOperator, degree: usize) -> Result<MomentTable> {
    t.cfg.check_degree(degree)?;
    let n = t.cfg.modes;
    let (sb, m) = crop(t);
    let entries = MultiIndex::all_up_to(2 * n, degree)
        .into_iter()
        .map(|g| {
            let (a, b) = g.split(n);
            let poly = OperatorPolynomial::monomial(n, Word::qp_monomial(&a, &b));
            let v = trace_product(&poly.matrix_rect(sb.cutoff, sb.cutoff), &m);
            (a, b, v)
        })
        .collect();
    Ok(MomentTable {
        modes: n,
        degree,
        entries,
    })
}

/// Normal-ordered form of a word.
pub fn reduce_word(word: &Word, modes: usize) -> NormalForm {
    word.reduce(modes)
}

/// m_A computed both by a product of truncated Q, P matrices on a box
/// padded by |A| and through the normal-ordered reduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WordMoment {
    pub direct: Complex64,
    pub reduced: Complex64,
}

impl WordMoment {
    pub fn discrepancy(&self) -> f64 {
        (self.direct - self.reduced).norm()
    }
}

pub fn word_moment(t: &TruncatedOperator, word: &Word) -> Result<WordMoment> {
    t.cfg.check_degree(word.len())?;
    let n = t.cfg.modes;
    let (sb, m) = crop(t);
    let ext = t.cfg.with_cutoff(sb.cutoff + word.len());
    let qs: Vec<CMatrix> = position_matrices(&ext).into_iter().map(|x| x.mat).collect();
    let ps: Vec<CMatrix> = momentum_matrices(&ext).into_iter().map(|x| x.mat).collect();
    let mut prod = CMatrix::identity(ext.dim(), ext.dim());
    for l in &word.0 {
        prod = match *l {
            Letter::Q(i) => prod * &qs[i],
            Letter::P(i) => prod * &ps[i],
        };
    }
    let direct = trace_product(&rebox(&prod, &ext, &ext, &sb, &sb), &m);
    let mut reduced = ZERO;
    for ((a, b), c) in &word.reduce(n).terms {
        let poly = OperatorPolynomial::monomial(n, Word::qp_monomial(a, b));
        reduced += c * trace_product(&poly.matrix_rect(sb.cutoff, sb.cutoff), &m);
    }
    Ok(WordMoment { direct, reduced })
}

/// All words of length `len` over R_1..R_{2N}, lexicographic in letter index.
pub fn words_of_length(modes: usize, len: usize) -> Vec<Word> {
    let k = 2 * modes;
    let total = k.pow(len as u32);
    (0..total)
        .map(|mut idx| {
            let mut v = vec![Letter::Q(0); len];
            for slot in (0..len).rev() {
                v[slot] = Letter::from_index(idx % k, modes);
                idx /= k;
            }
            Word(v)
        })
        .collect()
}

/// ‖R^A √T‖₂ and m_{Ā∨A} for one word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordNorm {
    pub word: Word,
    pub norm: f64,
    /// m_{Ā∨A} = tr(R^{Ā} R^A T), equal to norm² for T ≥ 0.
    pub moment: Complex64,
    /// ln ‖R^A√T‖₂ − ln(C K^{|A|} |A|!), ≤ 0 when the bound holds.
    pub residual: f64,
}

/// Fitted bound ‖R^A √T‖₂ ≤ C K^{|A|} |A|! over all words up to a length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityCertificate {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub max_length: usize,
    /// max_{|A| = ℓ} ‖R^A √T‖₂ for ℓ = 0..=L.
    pub per_length: Vec<f64>,
    pub words: Vec<WordNorm>,
}

impl AnalyticityCertificate {
    pub fn violations(&self) -> usize {
        self.words.iter().filter(|w| w.residual > 1e-12).count()
    }
}

fn apply_letter_columns(l: Letter, m: &CMatrix, b: &BasisConfig) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for c in 0..m.ncols() {
        let col: Vec<Complex64> = m.column(c).iter().copied().collect();
        let v = apply_letter(l, &col, b);
        for (r, z) in v.into_iter().enumerate() {
            out[(r, c)] = z;
        }
    }
    out
}

/// Certificate for T ≥ 0 over all words with |A| ≤ `max_length`. The word
/// moments m_{Ā∨A} have degree 2|A|, which must respect the degree guard.
pub fn analyticity_certificate(t: &TruncatedOperator, max_length: usize) -> Result<AnalyticityCertificate> {
    t.cfg.check_degree(2 * max_length)?;
    let n = t.cfg.modes;
    let root = t.sqrt_psd()?;
    let (sb, m) = crop(&root);
    let ext = t.cfg.with_cutoff(sb.cutoff + max_length);
    let start = rebox(&m, &sb, &sb, &ext, &sb);
    let tm = rebox(&t.mat, &t.cfg, &t.cfg, &ext, &ext);

    // Depth-first over words, prepending letters: R^{lA} √T = R_l (R^A √T).
    let mut found: Vec<(Word, f64, Complex64)> = Vec::new();
    let mut stack: Vec<(Vec<Letter>, CMatrix)> = vec![(vec![], start)];
    while let Some((letters, mat)) = stack.pop() {
        let norm = mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let word = Word(letters.clone());
        let poly = OperatorPolynomial::monomial(n, word.conjugate().concat(&word));
        let moment = trace_product(&poly.matrix_rect(ext.cutoff, ext.cutoff), &tm);
        found.push((word, norm, moment));
        if letters.len() < max_length {
            for j in (0..2 * n).rev() {
                let l = Letter::from_index(j, n);
                let mut next = vec![l];
                next.extend_from_slice(&letters);
                stack.push((next, apply_letter_columns(l, &mat, &ext)));
            }
        }
    }
    found.sort_by(|a, b| (a.0.len(), a.0.clone()).cmp(&(b.0.len(), b.0.clone())));

    let lf = ln_factorials(max_length);
    let mut per_length = vec![0.0f64; max_length + 1];
    for (w, norm, _) in &found {
        per_length[w.len()] = per_length[w.len()].max(*norm);
    }
    // Least-squares slope of ln(max_ℓ / ℓ!) against ℓ.
    let pts: Vec<(f64, f64)> = per_length
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(l, &v)| (l as f64, v.ln() - lf[l]))
        .collect();
    let k = if pts.len() >= 2 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxy / sxx).exp()
    } else {
        1.0
    };
    let ln_c = found
        .iter()
        .filter(|(_, v, _)| *v > 0.0)
        .map(|(w, v, _)| v.ln() - w.len() as f64 * k.ln() - lf[w.len()])
        .fold(f64::NEG_INFINITY, f64::max);
    let ln_c = if ln_c.is_finite() { ln_c } else { 0.0 };
    let words = found
        .into_iter()
        .map(|(word, norm, moment)| {
            let bound = ln_c + word.len() as f64 * k.ln() + lf[word.len()];
            let residual = if norm > 0.0 {
                norm.ln() - bound
            } else {
                f64::NEG_INFINITY
            };
            WordNorm {
                word,
                norm,
                moment,
                residual,
            }
        })
        .collect();
    Ok(AnalyticityCertificate {
        c: ln_c.exp(),
        k,
        max_length,
        per_length,
        words,
    })
}

/// Ω = √T read as a vector in H ⊗ H, with its Schmidt decomposition
/// Ω = Σ λ_n u_n ⊗ v_n.
#[derive(Clone, Debug, PartialEq)]
pub struct Purification {
    pub omega: TruncatedOperator,
    pub schmidt_values: Vec<f64>,
    pub left: Vec<Vec<Complex64>>,
    pub right: Vec<Vec<Complex64>>,
    /// max over the check operators A of |tr(TA) − ⟨Ω, (A⊗𝟙) Ω⟩|.
    pub identity_residual: f64,
}

impl Purification {
    /// ⟨Ω, (A ⊗ 𝟙) Ω⟩ = Σ conj(Ω_{ij}) A_{ik} Ω_{kj}.
    pub fn expectation(&self, a: &TruncatedOperator) -> Complex64 {
        let o = &self.omega.mat;
        let d = o.nrows();
        let mut s = ZERO;
        for i in 0..d {
            for k in 0..d {
                let aik = a.mat[(i, k)];
                if aik == ZERO {
                    continue;
                }
                for j in 0..d {
                    s += o[(i, j)].conj() * aik * o[(k, j)];
                }
            }
        }
        s
    }

    /// Tr₂ |Ω⟩⟨Ω|.
    pub fn reduced_state(&self) -> TruncatedOperator {
        let o = &self.omega;
        o * &o.adjoint()
    }
}

/// Ten fixed bounded test operators: Weyl operators at spread-out points.
fn check_operators(cfg: &BasisConfig) -> Result<Vec<TruncatedOperator>> {
    (0..10)
        .map(|k| {
            let phase = k as f64 * 0.7;
            let r = 0.3 + 0.15 * k as f64;
            let x = PhasePoint::new(vec![r * phase.cos(); cfg.modes], vec![r * phase.sin(); cfg.modes]);
            weyl_operator(&x, cfg)
        })
        .collect()
}

pub fn purify(t: &TruncatedOperator) -> Result<Purification> {
    let omega = t.sqrt_psd()?;
    let svd = omega.mat.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left vectors requested");
    let vt = svd.v_t.as_ref().expect("right vectors requested");
    let top = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let mut order: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > 1e-12 * top.max(f64::MIN_POSITIVE))
        .collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let schmidt_values = order.iter().map(|&k| svd.singular_values[k]).collect();
    // Ω_{ij} = Σ λ_k U_{ik} (V^T)_{kj}, so v_k has components (V^T)_{kj}.
    let left = order.iter().map(|&k| u.column(k).iter().copied().collect()).collect();
    let right = order.iter().map(|&k| vt.row(k).iter().copied().collect()).collect();
    let mut p = Purification {
        omega,
        schmidt_values,
        left,
        right,
        identity_residual: 0.0,
    };
    let mut worst: f64 = 0.0;
    for a in check_operators(&t.cfg)? {
        worst = worst.max(((&a * t).trace() - p.expectation(&a)).norm());
    }
    p.identity_residual = worst;
    Ok(p)
}

/// Finite-order comparison of two moment tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentMatch {
    pub degree: usize,
    pub max_difference: f64,
    pub worst: Option<(MultiIndex, MultiIndex)>,
    pub hs_distance: f64,
}

pub fn moment_match(t1: &TruncatedOperator, t2: &TruncatedOperator, degree: usize) -> Result<MomentMatch> {
    if t1.cfg != t2.cfg {
        return Err(Error::BasisMismatch("moment comparison needs a common basis".into()));
    }
    let a = moment_table(t1, degree)?;
    let b = moment_table(t2, degree)?;
    let mut by_key: BTreeMap<(MultiIndex, MultiIndex), Complex64> = BTreeMap::new();
    for (x, y, m) in b.entries {
        by_key.insert((x, y), m);
    }
    let mut max_difference = 0.0;
    let mut worst = None;
    for (x, y, m) in a.entries {
        let d = (m - by_key[&(x.clone(), y.clone())]).norm();
        if d > max_difference {
            max_difference = d;
            worst = Some((x, y));
        }
    }
    Ok(MomentMatch {
        degree,
        max_difference,
        worst,
        hs_distance: (t1 - t2).hs_norm(),
    })
}
