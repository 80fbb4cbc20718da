//! Operator-valued tempered distributions.
//!
//! A distribution Φ is stored as a rule that produces its coefficient matrix
//! Φ_{α∨α'} on any requested index box; the pairing with a truncated operator
//! is Φ(T) = Σ Φ_{α∨α'} ⟨α'|T|α⟩ = tr[Φ T]. Rules built from polynomials are
//! exact on every box, because letters act as band shifts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{hermite_multi, BasisConfig, MultiIndex, HERMITE_SUP};
use crate::error::{Error, Result};
use crate::operator::{rebox, shifted_h_power, trace_product, CMatrix, TruncatedOperator};
use crate::phase_space::{
    inverse_weyl, weyl_block, weyl_quantize, weyl_transform_at, wigner_at, GridFunction, PhasePoint, PhaseSpaceGrid,
};
use crate::poly::{Letter, OperatorPolynomial, Word};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// |Φ_{α∨α'}| ≤ C Π_i (α_i+1)^{β_i} (α'_i+1)^{β'_i}; `exponents` holds β then β'.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    #[serde(rename = "C")]
    pub c: f64,
    pub exponents: Vec<f64>,
}

impl GrowthCertificate {
    pub fn flat(modes: usize, c: f64) -> Self {
        GrowthCertificate {
            c,
            exponents: vec![0.0; 2 * modes],
        }
    }

    pub fn modes(&self) -> usize {
        self.exponents.len() / 2
    }

    /// Exponents rounded up to integers, β∨β'.
    pub fn integer_exponents(&self) -> MultiIndex {
        MultiIndex(
            self.exponents
                .iter()
                .map(|e| (e - 1e-12).ceil().max(0.0) as usize)
                .collect(),
        )
    }

    pub fn weight(&self, alpha: &[usize], alpha_p: &[usize]) -> f64 {
        let n = self.modes();
        let mut w = self.c;
        for i in 0..n {
            w *= (alpha[i] as f64 + 1.0).powf(self.exponents[i]);
            w *= (alpha_p[i] as f64 + 1.0).powf(self.exponents[n + i]);
        }
        w
    }

    /// max |Φ_{α∨α'}| / bound over a coefficient block; ≤ 1 when the
    /// certificate holds.
    pub fn max_ratio(&self, coeffs: &CMatrix, rows: &BasisConfig, cols: &BasisConfig) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..rows.dim() {
            let a = rows.unflatten(r);
            for c in 0..cols.dim() {
                let v = coeffs[(r, c)].norm();
                if v > 0.0 {
                    worst = worst.max(v / self.weight(&a, &cols.unflatten(c)));
                }
            }
        }
        worst
    }

    fn combine_max(&self, other: &GrowthCertificate) -> GrowthCertificate {
        GrowthCertificate {
            c: self.c + other.c,
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    // One letter acting on the row index (X·Φ) or the column index (Φ·X).
    fn letter_on_rows(&mut self, l: Letter) {
        let i = l.mode();
        self.c *= std::f64::consts::SQRT_2 * 2f64.powf(self.exponents[i]);
        self.exponents[i] += 0.5;
    }

    fn letter_on_cols(&mut self, l: Letter) {
        let j = self.modes() + l.mode();
        self.c *= std::f64::consts::SQRT_2 * 2f64.powf(self.exponents[j]);
        self.exponents[j] += 0.5;
    }
}

/// Coefficient rules. `Operator` is zero outside its box; `Explicit` is
/// undefined there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CoefficientRule {
    Identity,
    Polynomial {
        poly: OperatorPolynomial,
    },
    Operator {
        op: TruncatedOperator,
    },
    Explicit {
        cutoff: usize,
        entries: Vec<Complex64>,
    },
    EpsilonQ {
        q: Vec<f64>,
    },
    Parity,
    /// 2^N W(a)ΠW(a)* = 2^N W(2a)Π.
    DisplacedParity {
        a: PhasePoint,
    },
    Commutator {
        letter: Letter,
        inner: Box<CoefficientRule>,
    },
    /// Φ ↦ AΦ with (AΦ)(T) = Φ(AT): coefficients Φ·A.
    LeftMul {
        poly: OperatorPolynomial,
        inner: Box<CoefficientRule>,
    },
    /// Φ ↦ ΦB with (ΦB)(T) = Φ(TB): coefficients B·Φ.
    RightMul {
        poly: OperatorPolynomial,
        inner: Box<CoefficientRule>,
    },
    Scaled {
        factor: Complex64,
        inner: Box<CoefficientRule>,
    },
    Sum {
        terms: Vec<CoefficientRule>,
    },
    /// P_n Φ P_n for the sharp cutoff P_n onto per-mode levels ≤ `level`.
    Truncated {
        level: usize,
        inner: Box<CoefficientRule>,
    },
}

fn boxed(modes: usize, cutoff: usize) -> BasisConfig {
    BasisConfig { modes, cutoff }
}

impl CoefficientRule {
    /// Φ_{α∨α'} for α in the box of cutoff `r` and α' in the box of cutoff `c`.
    pub fn coeffs_rect(&self, modes: usize, r: usize, c: usize) -> Result<CMatrix> {
        let rb = boxed(modes, r);
        let cb = boxed(modes, c);
        Ok(match self {
            CoefficientRule::Identity => CMatrix::from_fn(rb.dim(), cb.dim(), |i, j| {
                if rb.unflatten(i) == cb.unflatten(j) {
                    ONE
                } else {
                    ZERO
                }
            }),
            CoefficientRule::Polynomial { poly } => poly.matrix_rect(r, c),
            CoefficientRule::Operator { op } => {
                if op.cfg.modes != modes {
                    return Err(Error::BasisMismatch("operator rule has a different mode count".into()));
                }
                rebox(&op.mat, &op.cfg, &op.cfg, &rb, &cb)
            }
            CoefficientRule::Explicit { cutoff, entries } => {
                if r > *cutoff || c > *cutoff {
                    return Err(Error::MissingCoefficients(format!(
                        "explicit coefficients end at level {cutoff}, requested {}",
                        r.max(c)
                    )));
                }
                let own = boxed(modes, *cutoff);
                if entries.len() != own.dim() * own.dim() {
                    return Err(Error::InvalidArgument(
                        "explicit coefficient count does not match the box".into(),
                    ));
                }
                let m = CMatrix::from_row_slice(own.dim(), own.dim(), entries);
                rebox(&m, &own, &own, &rb, &cb)
            }
            CoefficientRule::EpsilonQ { q } => {
                if q.len() != modes {
                    return Err(Error::BasisMismatch("ε_q point has the wrong dimension".into()));
                }
                let hr = hermite_multi(&rb, q);
                let hc = hermite_multi(&cb, q);
                CMatrix::from_fn(rb.dim(), cb.dim(), |i, j| Complex64::new(hr[i] * hc[j], 0.0))
            }
            CoefficientRule::Parity => CMatrix::from_fn(rb.dim(), cb.dim(), |i, j| {
                let a = rb.unflatten(i);
                if a == cb.unflatten(j) {
                    parity_sign(&a)
                } else {
                    ZERO
                }
            }),
            CoefficientRule::DisplacedParity { a } => {
                if a.modes() != modes {
                    return Err(Error::BasisMismatch("displacement has the wrong dimension".into()));
                }
                let w = weyl_block(&a.scaled(2.0), r, c);
                let scale = 2f64.powi(modes as i32);
                CMatrix::from_fn(rb.dim(), cb.dim(), |i, j| {
                    w[(i, j)] * parity_sign(&cb.unflatten(j)) * scale
                })
            }
            CoefficientRule::Commutator { letter, inner } => {
                let x = OperatorPolynomial::letter(modes, *letter);
                let left = x.matrix_rect(r, r + 1) * inner.coeffs_rect(modes, r + 1, c)?;
                let right = inner.coeffs_rect(modes, r, c + 1)? * x.matrix_rect(c + 1, c);
                left - right
            }
            CoefficientRule::LeftMul { poly, inner } => {
                let d = poly.degree();
                inner.coeffs_rect(modes, r, c + d)? * poly.matrix_rect(c + d, c)
            }
            CoefficientRule::RightMul { poly, inner } => {
                let d = poly.degree();
                poly.matrix_rect(r, r + d) * inner.coeffs_rect(modes, r + d, c)?
            }
            CoefficientRule::Scaled { factor, inner } => inner.coeffs_rect(modes, r, c)? * *factor,
            CoefficientRule::Sum { terms } => {
                let mut acc = CMatrix::zeros(rb.dim(), cb.dim());
                for t in terms {
                    acc += t.coeffs_rect(modes, r, c)?;
                }
                acc
            }
            CoefficientRule::Truncated { level, inner } => {
                let m = inner.coeffs_rect(modes, r, c)?;
                CMatrix::from_fn(rb.dim(), cb.dim(), |i, j| {
                    let keep = rb
                        .unflatten(i)
                        .iter()
                        .chain(cb.unflatten(j).iter())
                        .all(|&k| k <= *level);
                    if keep {
                        m[(i, j)]
                    } else {
                        ZERO
                    }
                })
            }
        })
    }

    /// Growth certificate derived from the rule structure.
    pub fn certificate(&self, modes: usize) -> GrowthCertificate {
        match self {
            CoefficientRule::Identity | CoefficientRule::Parity => GrowthCertificate::flat(modes, 1.0),
            CoefficientRule::Polynomial { poly } => poly_balanced(poly, modes),
            CoefficientRule::Operator { op } => GrowthCertificate::flat(modes, positive(max_abs(&op.mat))),
            CoefficientRule::Explicit { entries, .. } => {
                GrowthCertificate::flat(modes, positive(entries.iter().fold(0.0, |m, z| m.max(z.norm()))))
            }
            CoefficientRule::EpsilonQ { .. } => GrowthCertificate::flat(modes, HERMITE_SUP.powi(2 * modes as i32)),
            CoefficientRule::DisplacedParity { .. } => GrowthCertificate::flat(modes, 2f64.powi(modes as i32)),
            CoefficientRule::Commutator { letter, inner } => {
                let g = inner.certificate(modes);
                let (i, j) = (letter.mode(), modes + letter.mode());
                let mut out = g.clone();
                out.c = std::f64::consts::SQRT_2 * g.c * (2f64.powf(g.exponents[i]) + 2f64.powf(g.exponents[j]));
                out.exponents[i] += 0.5;
                out.exponents[j] += 0.5;
                out
            }
            CoefficientRule::LeftMul { poly, inner } => poly_on_cols(poly, inner.certificate(modes)),
            CoefficientRule::RightMul { poly, inner } => poly_on_rows(poly, inner.certificate(modes)),
            CoefficientRule::Scaled { factor, inner } => {
                let mut g = inner.certificate(modes);
                g.c = positive(g.c * factor.norm());
                g
            }
            CoefficientRule::Sum { terms } => terms
                .iter()
                .map(|t| t.certificate(modes))
                .reduce(|a, b| a.combine_max(&b))
                .unwrap_or_else(|| GrowthCertificate::flat(modes, 1.0)),
            CoefficientRule::Truncated { inner, .. } => inner.certificate(modes),
        }
    }
}

fn parity_sign(a: &[usize]) -> Complex64 {
    if a.iter().sum::<usize>() % 2 == 0 {
        ONE
    } else {
        -ONE
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn positive(c: f64) -> f64 {
    if c > 0.0 {
        c
    } else {
        1.0
    }
}

// Bound for Φ·A with A = Σ c_k w_k: letters of each word act on columns
// left to right.
fn poly_on_cols(poly: &OperatorPolynomial, g: GrowthCertificate) -> GrowthCertificate {
    let mut out: Option<GrowthCertificate> = None;
    for (coef, w) in &poly.terms {
        let mut t = g.clone();
        for &l in &w.0 {
            t.letter_on_cols(l);
        }
        t.c *= coef.norm();
        out = Some(match out {
            None => t,
            Some(o) => o.combine_max(&t),
        });
    }
    let mut out = out.unwrap_or(g);
    out.c = positive(out.c);
    out
}

// Bound for ⟨α|w|α'⟩ = ⟨u†α|vα'⟩ with w = uv split at the middle, so even
// words get equal row and column exponents.
fn poly_balanced(poly: &OperatorPolynomial, modes: usize) -> GrowthCertificate {
    let mut out: Option<GrowthCertificate> = None;
    for (coef, w) in &poly.terms {
        let mut t = GrowthCertificate::flat(modes, 1.0);
        let (u, v) = w.0.split_at(w.len() / 2);
        for &l in u.iter().rev() {
            t.letter_on_rows(l);
        }
        for &l in v {
            t.letter_on_cols(l);
        }
        t.c *= coef.norm();
        out = Some(match out {
            None => t,
            Some(o) => o.combine_max(&t),
        });
    }
    let mut out = out.unwrap_or_else(|| GrowthCertificate::flat(modes, 1.0));
    out.c = positive(out.c);
    out
}

// Bound for B·Φ: letters act on rows right to left.
fn poly_on_rows(poly: &OperatorPolynomial, g: GrowthCertificate) -> GrowthCertificate {
    let mut out: Option<GrowthCertificate> = None;
    for (coef, w) in &poly.terms {
        let mut t = g.clone();
        for &l in w.0.iter().rev() {
            t.letter_on_rows(l);
        }
        t.c *= coef.norm();
        out = Some(match out {
            None => t,
            Some(o) => o.combine_max(&t),
        });
    }
    let mut out = out.unwrap_or(g);
    out.c = positive(out.c);
    out
}

/// Smallest uniform half-integer exponent whose constant, fitted on levels
/// ≤ 2n, still bounds every coefficient on levels ≤ 4n.
pub fn fit_certificate(rule: &CoefficientRule, modes: usize, n: usize) -> Result<GrowthCertificate> {
    let small = boxed(modes, 2 * n);
    let large = boxed(modes, 4 * n);
    let fit = rule.coeffs_rect(modes, 2 * n, 2 * n)?;
    let check = rule.coeffs_rect(modes, 4 * n, 4 * n)?;
    for k in 0..=32 {
        let e = 0.5 * k as f64;
        let unit = GrowthCertificate {
            c: 1.0,
            exponents: vec![e; 2 * modes],
        };
        let c = positive(unit.max_ratio(&fit, &small, &small));
        let cert = GrowthCertificate {
            c,
            exponents: unit.exponents,
        };
        if cert.max_ratio(&check, &large, &large) <= 1.0 + 1e-9 {
            return Ok(cert);
        }
    }
    Err(Error::InvalidArgument(
        "no polynomial growth bound with exponent ≤ 16".into(),
    ))
}

/// A distribution on Schwartz operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDistribution {
    pub modes: usize,
    #[serde(flatten)]
    pub rule: CoefficientRule,
    pub growth: Option<GrowthCertificate>,
}

fn crop_to_support(t: &TruncatedOperator) -> (usize, CMatrix) {
    let s = t.support_cutoff();
    let sb = t.cfg.with_cutoff(s);
    (s, rebox(&t.mat, &t.cfg, &t.cfg, &sb, &sb))
}

impl OperatorDistribution {
    pub fn from_rule(modes: usize, rule: CoefficientRule) -> Self {
        let growth = Some(rule.certificate(modes));
        OperatorDistribution { modes, rule, growth }
    }

    /// Φ_𝟙, the trace.
    pub fn identity(modes: usize) -> Self {
        Self::from_rule(modes, CoefficientRule::Identity)
    }

    /// Φ_S(T) = tr[S T] for a truncated S.
    pub fn from_operator(s: &TruncatedOperator) -> Self {
        Self::from_rule(s.cfg.modes, CoefficientRule::Operator { op: s.clone() })
    }

    /// Φ_A(T) = tr[A T] for a polynomial in Q and P.
    pub fn from_polynomial(poly: &OperatorPolynomial) -> Self {
        Self::from_rule(poly.modes, CoefficientRule::Polynomial { poly: poly.clone() })
    }

    /// ε_q(T) = K^T(q, q).
    pub fn epsilon_q(q: &[f64]) -> Self {
        Self::from_rule(q.len(), CoefficientRule::EpsilonQ { q: q.to_vec() })
    }

    pub fn parity(modes: usize) -> Self {
        Self::from_rule(modes, CoefficientRule::Parity)
    }

    /// wq δ_a = 2^N Φ_{W(a)ΠW(a)*}.
    pub fn quantized_delta(a: &PhasePoint) -> Self {
        Self::from_rule(a.modes(), CoefficientRule::DisplacedParity { a: a.clone() })
    }

    fn wrap(&self, rule: CoefficientRule) -> Self {
        Self::from_rule(self.modes, rule)
    }

    /// Coefficient block on the box of `cfg`, as an operator.
    pub fn coeffs(&self, cfg: &BasisConfig) -> Result<TruncatedOperator> {
        if cfg.modes != self.modes {
            return Err(Error::BasisMismatch("distribution and basis differ in modes".into()));
        }
        TruncatedOperator::new(*cfg, self.rule.coeffs_rect(self.modes, cfg.cutoff, cfg.cutoff)?)
    }

    /// Φ(T) = Σ Φ_{α∨α'} ⟨α'|T|α⟩.
    pub fn pair(&self, t: &TruncatedOperator) -> Result<Complex64> {
        if t.cfg.modes != self.modes {
            return Err(Error::BasisMismatch("distribution and operator differ in modes".into()));
        }
        let (s, m) = crop_to_support(t);
        let phi = self.rule.coeffs_rect(self.modes, s, s)?;
        Ok(trace_product(&phi, &m))
    }

    /// B(φ, ψ) = Φ(|ψ⟩⟨φ|).
    pub fn quadratic_form(&self, cfg: &BasisConfig, phi: &[Complex64], psi: &[Complex64]) -> Result<Complex64> {
        self.pair(&TruncatedOperator::rank_one(*cfg, psi, phi))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        self.wrap(CoefficientRule::Scaled {
            factor: s,
            inner: Box::new(self.rule.clone()),
        })
    }

    pub fn plus(&self, other: &OperatorDistribution) -> Self {
        self.wrap(CoefficientRule::Sum {
            terms: vec![self.rule.clone(), other.rule.clone()],
        })
    }

    /// 𝓛_X Φ with (𝓛_X Φ)(T) = −Φ([X, T]); on Φ_B this is Φ_{[X, B]}.
    pub fn commutator(&self, letter: Letter) -> Self {
        self.wrap(CoefficientRule::Commutator {
            letter,
            inner: Box::new(self.rule.clone()),
        })
    }

    /// D^{α∨β}Φ = (−i)^{|α|} i^{|β|} 𝓛_P^α 𝓛_Q^β Φ, so that
    /// (D^γΦ)(T) = (−1)^{|γ|} Φ(D^γ T).
    ///
    /// With this expansion D^γ T is (−1)^{|γ|} ∂_y^γ of W(−y) T W(−y)*, and
    /// wq(D^γ δ₀) = (−1)^{|γ|} 2^N Φ_{D^γ Π}.
    pub fn derivative(&self, gamma: &MultiIndex) -> Result<Self> {
        let n = self.modes;
        if gamma.len() != 2 * n {
            return Err(Error::InvalidArgument(format!(
                "derivative order needs {} entries",
                2 * n
            )));
        }
        let (alpha, beta) = gamma.split(n);
        let mut rule = self.rule.clone();
        for (i, &b) in beta.0.iter().enumerate() {
            for _ in 0..b {
                rule = CoefficientRule::Commutator {
                    letter: Letter::Q(i),
                    inner: Box::new(rule),
                };
            }
        }
        for (i, &a) in alpha.0.iter().enumerate() {
            for _ in 0..a {
                rule = CoefficientRule::Commutator {
                    letter: Letter::P(i),
                    inner: Box::new(rule),
                };
            }
        }
        let phase = Complex64::new(0.0, -1.0).powu(alpha.order() as u32) * Complex64::i().powu(beta.order() as u32);
        if phase != ONE {
            rule = CoefficientRule::Scaled {
                factor: phase,
                inner: Box::new(rule),
            };
        }
        Ok(self.wrap(rule))
    }

    /// AΦ: T ↦ Φ(AT).
    pub fn left_multiply(&self, a: &OperatorPolynomial) -> Self {
        self.wrap(CoefficientRule::LeftMul {
            poly: a.clone(),
            inner: Box::new(self.rule.clone()),
        })
    }

    /// ΦB: T ↦ Φ(TB).
    pub fn right_multiply(&self, b: &OperatorPolynomial) -> Self {
        self.wrap(CoefficientRule::RightMul {
            poly: b.clone(),
            inner: Box::new(self.rule.clone()),
        })
    }

    pub fn truncated(&self, level: usize) -> Self {
        self.wrap(CoefficientRule::Truncated {
            level,
            inner: Box::new(self.rule.clone()),
        })
    }

    /// Largest coefficient-to-bound ratio on the box of `cfg`.
    pub fn verify_growth(&self, cfg: &BasisConfig) -> Result<f64> {
        let g = self
            .growth
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("distribution has no growth certificate".into()))?;
        let m = self.coeffs(cfg)?;
        Ok(g.max_ratio(&m.mat, cfg, cfg))
    }

    /// a_{α∨α'} = Φ_{α∨α'} / ((α+1)^{β+1} (α'+1)^{β'+1}) on the box of `cfg`,
    /// with β∨β' the certificate exponents rounded up.
    pub fn regularity_decompose(&self, cfg: &BasisConfig) -> Result<RegularityDecomposition> {
        let g = self
            .growth
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("regularity decomposition needs a growth certificate".into()))?;
        let n = self.modes;
        let e = g.integer_exponents();
        let (beta, beta_p) = e.split(n);
        let row_powers = MultiIndex(beta.0.iter().map(|b| b + 1).collect());
        let col_powers = MultiIndex(beta_p.0.iter().map(|b| b + 1).collect());
        let phi = self.coeffs(cfg)?;
        let a = TruncatedOperator::from_fn(*cfg, |r, c| {
            let ar = cfg.unflatten(r);
            let ac = cfg.unflatten(c);
            let mut w = 1.0;
            for i in 0..n {
                w *= (ar[i] as f64 + 1.0).powi(row_powers.0[i] as i32);
                w *= (ac[i] as f64 + 1.0).powi(col_powers.0[i] as i32);
            }
            phi.mat[(r, c)] / w
        });
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        Ok(RegularityDecomposition {
            hs_norm: a.hs_norm(),
            hs_bound: g.c * zeta2.powi(n as i32),
            a,
            row_powers,
            col_powers,
        })
    }
}

/// Φ(T) = tr[A (H+½)^{β'+1} T (H+½)^{β+1}] with A Hilbert–Schmidt.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityDecomposition {
    pub a: TruncatedOperator,
    /// β + 1, the powers attached to the row index α.
    pub row_powers: MultiIndex,
    /// β' + 1, the powers attached to the column index α'.
    pub col_powers: MultiIndex,
    pub hs_norm: f64,
    /// C · ζ(2)^N ≥ ‖A‖₂.
    pub hs_bound: f64,
}

impl RegularityDecomposition {
    pub fn reconstruct(&self, t: &TruncatedOperator) -> Result<Complex64> {
        if t.cfg != self.a.cfg {
            return Err(Error::BasisMismatch(
                "decomposition and operator live on different boxes".into(),
            ));
        }
        let left = shifted_h_power(&t.cfg, &self.col_powers, 1.0);
        let right = shifted_h_power(&t.cfg, &self.row_powers, 1.0);
        let x = &(&(&self.a * &left) * t) * &right;
        Ok(x.trace())
    }
}

/// D^γ T = (−i)^{|α|} i^{|β|} 𝓛_P^α 𝓛_Q^β (T), exact when the support of T
/// plus |γ| fits in the box.
pub fn derivative_of_operator(t: &TruncatedOperator, gamma: &MultiIndex) -> Result<TruncatedOperator> {
    OperatorDistribution::from_operator(t).derivative(gamma)?.coeffs(&t.cfg)
}

/// One step of a finite-rank approximation Φ^{(n)} = P_n Φ P_n.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRankStep {
    pub level: usize,
    pub distribution: OperatorDistribution,
    /// ‖(P_n − 𝟙) H_tot^{-1}‖ = 1/(n + 1 + N/2).
    pub cutoff_norm: f64,
}

pub fn finite_rank_approx(phi: &OperatorDistribution, levels: &[usize]) -> Result<Vec<FiniteRankStep>> {
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "cutoff levels must increase so that ‖(P_n − 𝟙)H⁻¹‖ → 0".into(),
        ));
    }
    Ok(levels
        .iter()
        .map(|&n| FiniteRankStep {
            level: n,
            distribution: phi.truncated(n),
            cutoff_norm: 1.0 / (n as f64 + 1.0 + phi.modes as f64 / 2.0),
        })
        .collect())
}

/// Weyl-symmetrized Π_i Sym(P_i^{α_i} Q_i^{β_i}) times (−i)^{|α|} i^{|β|}:
/// the inverse Weyl transform of D^{α∨β}δ₀.
pub fn delta_derivative_inverse_weyl(gamma: &MultiIndex) -> Result<OperatorPolynomial> {
    if gamma.len() % 2 != 0 || gamma.is_empty() {
        return Err(Error::InvalidArgument("derivative order needs 2N entries".into()));
    }
    let n = gamma.len() / 2;
    let (alpha, beta) = gamma.split(n);
    let mut out = OperatorPolynomial::identity(n);
    for i in 0..n {
        out = out.times(&symmetrized(n, i, alpha.0[i], beta.0[i]));
    }
    let phase = Complex64::new(0.0, -1.0).powu(alpha.order() as u32) * Complex64::i().powu(beta.order() as u32);
    Ok(out.scaled(phase))
}

// Average over all orderings of a P_i's and b Q_i's.
fn symmetrized(modes: usize, i: usize, a: usize, b: usize) -> OperatorPolynomial {
    let total = a + b;
    let mut words = Vec::new();
    for mask in 0u64..(1u64 << total) {
        if mask.count_ones() as usize == a {
            let w = (0..total)
                .map(|k| if mask >> k & 1 == 1 { Letter::P(i) } else { Letter::Q(i) })
                .collect();
            words.push(Word(w));
        }
    }
    let weight = Complex64::new(1.0 / words.len() as f64, 0.0);
    OperatorPolynomial {
        modes,
        terms: words.into_iter().map(|w| (weight, w)).collect(),
    }
}

/// Distributions on phase-space test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseDistribution {
    Delta {
        a: PhasePoint,
    },
    /// D^γ δ_a with γ over (q_1..q_N, p_1..p_N): f ↦ (−1)^{|γ|} (D^γ f)(a).
    DeltaDerivative {
        a: PhasePoint,
        order: MultiIndex,
    },
    /// φ_1(f) = ∫ f dx over the grid.
    One {
        grid: PhaseSpaceGrid,
    },
    /// φ_g(f) = ∫ g f dx.
    Density {
        samples: GridFunction,
    },
}

/// Step of the nested central differences used for derivatives of δ.
pub const FD_STEP: f64 = 0.02;
const FD8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

fn nested_derivative(
    f: &dyn Fn(&PhasePoint) -> Complex64,
    a: &PhasePoint,
    order: &mut Vec<usize>,
    h: f64,
) -> Complex64 {
    let Some(j) = order.iter().position(|&k| k > 0) else {
        return f(a);
    };
    order[j] -= 1;
    let mut acc = ZERO;
    for (k, w) in FD8.iter().enumerate() {
        let s = (k + 1) as f64 * h;
        let plus = a.with_component(j, a.component(j) + s);
        let minus = a.with_component(j, a.component(j) - s);
        acc += (nested_derivative(f, &plus, order, h) - nested_derivative(f, &minus, order, h)) * *w;
    }
    order[j] += 1;
    acc / h
}

impl PhaseDistribution {
    pub fn pair(&self, f: &dyn Fn(&PhasePoint) -> Complex64) -> Complex64 {
        match self {
            PhaseDistribution::Delta { a } => f(a),
            PhaseDistribution::DeltaDerivative { a, order } => {
                let sign = if order.order() % 2 == 0 { 1.0 } else { -1.0 };
                nested_derivative(f, a, &mut order.0.clone(), FD_STEP) * sign
            }
            PhaseDistribution::One { grid } => {
                let mut acc = ZERO;
                for i in 0..grid.q.len() {
                    for j in 0..grid.p.len() {
                        acc += f(&grid.point(i, j)) * grid.weight(i, j);
                    }
                }
                acc
            }
            PhaseDistribution::Density { samples } => {
                let g = &samples.grid;
                let mut acc = ZERO;
                for i in 0..g.q.len() {
                    for j in 0..g.p.len() {
                        let s = samples.at(i, j);
                        if s != ZERO {
                            acc += s * f(&g.point(i, j)) * g.weight(i, j);
                        }
                    }
                }
                acc
            }
        }
    }

    /// D^γ φ for φ a delta or delta derivative.
    pub fn derivative(&self, gamma: &MultiIndex) -> Result<Self> {
        match self {
            PhaseDistribution::Delta { a } => Ok(PhaseDistribution::DeltaDerivative {
                a: a.clone(),
                order: gamma.clone(),
            }),
            PhaseDistribution::DeltaDerivative { a, order } => Ok(PhaseDistribution::DeltaDerivative {
                a: a.clone(),
                order: MultiIndex(order.0.iter().zip(&gamma.0).map(|(x, y)| x + y).collect()),
            }),
            _ => Err(Error::Unsupported("derivatives of grid densities".into())),
        }
    }
}

/// (wq φ)(T) = φ(W_T).
pub fn pair_weyl_quantization(phi: &PhaseDistribution, t: &TruncatedOperator) -> Complex64 {
    phi.pair(&|x: &PhasePoint| wigner_at(t, x))
}

/// φ̌(T) = φ(T̂_−).
pub fn pair_inverse_weyl(phi: &PhaseDistribution, t: &TruncatedOperator) -> Complex64 {
    phi.pair(&|x: &PhasePoint| weyl_transform_at(t, &x.scaled(-1.0)))
}

/// Φ̂(f) = Φ(f̌_−), with f̌ computed on the box of `cfg`.
pub fn pair_weyl_transform(phi: &OperatorDistribution, f: &GridFunction, cfg: &BasisConfig) -> Result<Complex64> {
    phi.pair(&inverse_weyl(&f.reflected(), cfg)?)
}

/// W_Φ(f) = Φ(wq f), with wq f computed on the box of `cfg`.
pub fn pair_wigner(phi: &OperatorDistribution, f: &GridFunction, cfg: &BasisConfig) -> Result<Complex64> {
    phi.pair(&weyl_quantize(f, cfg)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::{ground_projector, translate};
    use crate::phase_space::wigner_function;
    use crate::testutil::{random_operator, random_psd};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn q1() -> OperatorPolynomial {
        OperatorPolynomial::letter(1, Letter::Q(0))
    }

    fn p1() -> OperatorPolynomial {
        OperatorPolynomial::letter(1, Letter::P(0))
    }

    fn close(a: &TruncatedOperator, b: &TruncatedOperator, inner: usize) -> f64 {
        (&a.resized(inner) - &b.resized(inner))
            .mat
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    #[test]
    fn pairings_of_basic_distributions() {
        let cfg = BasisConfig::new(1, 20).unwrap();
        let t0 = ground_projector(&cfg);
        assert!((OperatorDistribution::identity(1).pair(&t0).unwrap() - c(1.0)).norm() < 1e-15);
        let e0 = OperatorDistribution::epsilon_q(&[0.0]).pair(&t0).unwrap();
        assert!((e0 - c(std::f64::consts::PI.powf(-0.5))).norm() < 1e-14);
        let eq = OperatorDistribution::epsilon_q(&[0.7]).pair(&t0).unwrap();
        assert!((eq - c(std::f64::consts::PI.powf(-0.5) * (-0.49f64).exp())).norm() < 1e-14);
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        let s = random_operator(&mut rng, cfg, 6);
        let t = random_operator(&mut rng, cfg, 6);
        let lhs = OperatorDistribution::from_operator(&s).pair(&t).unwrap();
        assert!((lhs - (&s * &t).trace()).norm() < 1e-10);
    }

    #[test]
    fn explicit_rule_reports_missing_coefficients() {
        let phi = OperatorDistribution::from_rule(
            1,
            CoefficientRule::Explicit {
                cutoff: 2,
                entries: vec![c(1.0); 9],
            },
        );
        let cfg = BasisConfig::new(1, 8).unwrap();
        let t = TruncatedOperator::basis_element(cfg, &[5], &[5]);
        assert!(matches!(phi.pair(&t), Err(Error::MissingCoefficients(_))));
        let inside = TruncatedOperator::basis_element(cfg, &[1], &[2]);
        assert_eq!(phi.pair(&inside).unwrap(), c(1.0));
    }

    #[test]
    fn polynomial_coefficients() {
        let cfg = BasisConfig::new(1, 12).unwrap();
        let q = OperatorDistribution::from_polynomial(&q1()).coeffs(&cfg).unwrap();
        for n in 0..12 {
            assert!((q.mat[(n, n + 1)] - c(((n + 1) as f64 / 2.0).sqrt())).norm() < 1e-15);
        }
        let h2 = OperatorPolynomial::total_hamiltonian_power(2, 2);
        let cfg2 = BasisConfig::new(2, 5).unwrap();
        let m = OperatorDistribution::from_polynomial(&h2).coeffs(&cfg2).unwrap();
        for i in 0..cfg2.dim() {
            let a = cfg2.unflatten(i);
            let e = (a[0] + a[1]) as f64 + 1.0;
            assert!((m.mat[(i, i)] - c(e * e)).norm() < 1e-12);
        }
        assert!(m.is_hermitian(1e-14));
    }

    #[test]
    fn derivative_table() {
        let cfg = BasisConfig::new(1, 16).unwrap();
        let one = OperatorDistribution::identity(1).coeffs(&cfg).unwrap();
        let p = OperatorDistribution::from_polynomial(&p1()).coeffs(&cfg).unwrap();
        let q = OperatorDistribution::from_polynomial(&q1()).coeffs(&cfg).unwrap();
        let dq = OperatorDistribution::from_polynomial(&q1());
        let d10 = dq
            .derivative(&MultiIndex::new(vec![1, 0]))
            .unwrap()
            .coeffs(&cfg)
            .unwrap();
        assert!(close(&d10, &one.scale(c(-1.0)), 16) < 1e-12);
        let d01 = dq
            .derivative(&MultiIndex::new(vec![0, 1]))
            .unwrap()
            .coeffs(&cfg)
            .unwrap();
        assert!(d01.hs_norm() < 1e-12);
        let qp = OperatorDistribution::from_polynomial(&q1().times(&p1()));
        let d = qp
            .derivative(&MultiIndex::new(vec![1, 0]))
            .unwrap()
            .coeffs(&cfg)
            .unwrap();
        assert!(close(&d, &p.scale(c(-1.0)), 16) < 1e-12);
        let d = qp
            .derivative(&MultiIndex::new(vec![0, 1]))
            .unwrap()
            .coeffs(&cfg)
            .unwrap();
        assert!(close(&d, &q.scale(c(-1.0)), 16) < 1e-12);
        let dp = OperatorDistribution::from_polynomial(&p1());
        let d = dp
            .derivative(&MultiIndex::new(vec![0, 1]))
            .unwrap()
            .coeffs(&cfg)
            .unwrap();
        assert!(close(&d, &one.scale(c(-1.0)), 16) < 1e-12);
    }

    #[test]
    fn operator_derivative_matches_translation_derivative() {
        // D^γ T = (−1)^{|γ|} ∂_y^γ W(−y) T W(−y)* at y = 0.
        let mut rng = rand::rngs::StdRng::seed_from_u64(12);
        let cfg = BasisConfig::new(1, 30).unwrap();
        let t = random_operator(&mut rng, cfg, 4);
        let h = 1e-3;
        for (gamma, dir) in [(vec![1, 0], (1.0, 0.0)), (vec![0, 1], (0.0, 1.0))] {
            let plus = translate(&t, &PhasePoint::single(h * dir.0, h * dir.1)).unwrap();
            let minus = translate(&t, &PhasePoint::single(-h * dir.0, -h * dir.1)).unwrap();
            let fd = (&plus - &minus).scale(c(1.0 / (2.0 * h)));
            let exact = derivative_of_operator(&t, &MultiIndex::new(gamma)).unwrap();
            assert!(close(&fd, &exact, 10) < 1e-5, "{}", close(&fd, &exact, 10));
        }
    }

    #[test]
    fn multiplication_duality() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(6);
        let cfg = BasisConfig::new(1, 24).unwrap();
        let t = random_operator(&mut rng, cfg, 5);
        let s = random_operator(&mut rng, cfg, 5);
        let a = q1().times(&p1()).plus(&q1().scaled(c(0.5)));
        let phi = OperatorDistribution::from_operator(&s);
        let at = &a.matrix(&cfg) * &t;
        let ta = &t * &a.matrix(&cfg);
        let lhs = phi.left_multiply(&a).pair(&t).unwrap();
        assert!((lhs - phi.pair(&at).unwrap()).norm() < 1e-10);
        let rhs = phi.right_multiply(&a).pair(&t).unwrap();
        assert!((rhs - phi.pair(&ta).unwrap()).norm() < 1e-10);
        let one = OperatorDistribution::identity(1);
        assert!((one.left_multiply(&OperatorPolynomial::identity(1)).pair(&t).unwrap() - t.trace()).norm() < 1e-12);
        let qp = q1().times(&p1());
        let l = one.left_multiply(&qp).pair(&t).unwrap();
        let r = one.right_multiply(&qp).pair(&t).unwrap();
        assert!((l - (&qp.matrix(&cfg) * &t).trace()).norm() < 1e-10);
        assert!((r - (&t * &qp.matrix(&cfg)).trace()).norm() < 1e-10);
    }

    #[test]
    fn epsilon_q_eigen_relation() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let cfg = BasisConfig::new(1, 20).unwrap();
        for &q in &[0.0, 0.4, -1.3] {
            let e = OperatorDistribution::epsilon_q(&[q]);
            let t = random_operator(&mut rng, cfg, 6);
            let base = e.pair(&t).unwrap();
            assert!((base - t.kernel_at(&[q], &[q])).norm() < 1e-12);
            let left = e.left_multiply(&q1()).pair(&t).unwrap();
            let right = e.right_multiply(&q1()).pair(&t).unwrap();
            assert!((left - base * q).norm() < 1e-8);
            assert!((right - base * q).norm() < 1e-8);
        }
    }

    #[test]
    fn quantized_delta_matches_wigner() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(10);
        let cfg = BasisConfig::new(1, 16).unwrap();
        let t = random_operator(&mut rng, cfg, 5);
        let grid = PhaseSpaceGrid::phase_space(2.0, 4);
        let w = wigner_function(&t, &grid).unwrap();
        for i in 0..grid.q.len() {
            for j in 0..grid.p.len() {
                let a = grid.point(i, j);
                let via_phi = OperatorDistribution::quantized_delta(&a).pair(&t).unwrap();
                let via_phase = pair_weyl_quantization(&PhaseDistribution::Delta { a: a.clone() }, &t);
                assert!((via_phi - w.at(i, j)).norm() < 1e-10);
                assert!((via_phase - w.at(i, j)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn inverse_weyl_of_delta_derivatives() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let cfg = BasisConfig::new(1, 20).unwrap();
        let d0 = PhaseDistribution::Delta {
            a: PhasePoint::origin(1),
        };
        for _ in 0..4 {
            let t = random_operator(&mut rng, cfg, 4);
            assert!((pair_inverse_weyl(&d0, &t) - t.trace()).norm() < 1e-12);
            for gamma in [vec![1, 0], vec![0, 1], vec![1, 1], vec![2, 0], vec![1, 2]] {
                let g = MultiIndex::new(gamma.clone());
                let lhs = pair_inverse_weyl(&d0.derivative(&g).unwrap(), &t);
                let poly = delta_derivative_inverse_weyl(&g).unwrap();
                let rhs = poly.trace_against(&t);
                assert!((lhs - rhs).norm() < 1e-6, "{gamma:?}: {lhs} vs {rhs}");
            }
            let p = p1().scaled(Complex64::new(0.0, -1.0)).trace_against(&t);
            let g = MultiIndex::new(vec![1, 0]);
            assert!((pair_inverse_weyl(&d0.derivative(&g).unwrap(), &t) - p).norm() < 1e-6);
            let pq = p1()
                .times(&q1())
                .plus(&OperatorPolynomial::identity(1).scaled(Complex64::new(0.0, 0.5)));
            let g = MultiIndex::new(vec![1, 1]);
            assert!((pair_inverse_weyl(&d0.derivative(&g).unwrap(), &t) - pq.trace_against(&t)).norm() < 1e-6);
        }
    }

    #[test]
    fn quantized_delta_derivatives_are_signed_parity_derivatives() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(13);
        let cfg = BasisConfig::new(1, 20).unwrap();
        let d0 = PhaseDistribution::Delta {
            a: PhasePoint::origin(1),
        };
        let parity = OperatorDistribution::parity(1).scaled(c(2.0));
        for _ in 0..3 {
            let t = random_operator(&mut rng, cfg, 4);
            for gamma in [vec![1, 0], vec![0, 1], vec![1, 1]] {
                let g = MultiIndex::new(gamma);
                let lhs = pair_weyl_quantization(&d0.derivative(&g).unwrap(), &t);
                let sign = if g.order() % 2 == 0 { 1.0 } else { -1.0 };
                let rhs = parity.derivative(&g).unwrap().pair(&t).unwrap() * sign;
                assert!((lhs - rhs).norm() < 1e-6, "{lhs} {rhs}");
            }
        }
    }

    #[test]
    fn phase_side_adapters() {
        let cfg = BasisConfig::new(1, 40).unwrap();
        let grid = PhaseSpaceGrid::phase_space(9.0, 96);
        let f = GridFunction::from_real(&grid, |q, p| (1.0 + 0.3 * q) * (-(q * q + 2.0 * p * p) / 2.0).exp());
        let one = OperatorDistribution::identity(1);
        let w = pair_wigner(&one, &f, &cfg).unwrap();
        assert!((w - f.integral()).norm() < 1e-8);
        // Φ̂_𝟙 = δ₀: f̌_−'s trace is f(0).
        let hat = pair_weyl_transform(&one, &f, &cfg).unwrap();
        assert!((hat - c(1.0)).norm() < 1e-6, "{hat}");
        let phi_one = PhaseDistribution::One { grid: grid.clone() };
        let t0 = ground_projector(&cfg);
        let v = pair_weyl_quantization(&phi_one, &t0);
        assert!((v - c(1.0)).norm() < 1e-8);
    }

    #[test]
    fn regularity_reconstruction() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(15);
        let cfg = BasisConfig::new(1, 24).unwrap();
        let h = OperatorDistribution::from_polynomial(&OperatorPolynomial::total_hamiltonian_power(1, 1));
        for phi in [
            OperatorDistribution::identity(1),
            OperatorDistribution::epsilon_q(&[0.0]),
            h,
        ] {
            let dec = phi.regularity_decompose(&cfg).unwrap();
            assert!(dec.hs_norm <= dec.hs_bound);
            for _ in 0..3 {
                let t = random_operator(&mut rng, cfg, 8);
                let lhs = phi.pair(&t).unwrap();
                assert!((dec.reconstruct(&t).unwrap() - lhs).norm() < 1e-8 * (1.0 + lhs.norm()));
            }
        }
    }

    #[test]
    fn finite_rank_convergence() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(16);
        let cfg = BasisConfig::new(1, 40).unwrap();
        let e0 = OperatorDistribution::epsilon_q(&[0.0]);
        let coh = crate::phase_space::weyl_operator(&PhasePoint::single(1.0, 0.5), &cfg).unwrap();
        let t = &(&coh * &ground_projector(&cfg)) * &coh.adjoint();
        let target = e0.pair(&t).unwrap();
        let steps = finite_rank_approx(&e0, &[2, 4, 8, 16, 32]).unwrap();
        let errs: Vec<f64> = steps
            .iter()
            .map(|s| (s.distribution.pair(&t).unwrap() - target).norm())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!((steps[0].cutoff_norm - 1.0 / 3.5).abs() < 1e-15);
        assert!(finite_rank_approx(&e0, &[4, 2]).is_err());
        let s = random_psd(&mut rng, cfg, 5);
        let id = finite_rank_approx(&OperatorDistribution::identity(1), &[8]).unwrap();
        assert!((id[0].distribution.pair(&s).unwrap() - s.trace()).norm() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let phi = OperatorDistribution::epsilon_q(&[0.5])
            .derivative(&MultiIndex::new(vec![1, 0]))
            .unwrap()
            .left_multiply(&q1());
        let s = serde_json::to_string(&phi).unwrap();
        let back: OperatorDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, phi);
        assert!(s.contains("\"rule\""));
    }

    #[test]
    fn fitted_certificate() {
        let rule = CoefficientRule::Polynomial {
            poly: q1().times(&q1()),
        };
        let g = fit_certificate(&rule, 1, 8).unwrap();
        let cfg = BasisConfig::new(1, 32).unwrap();
        let m = rule.coeffs_rect(1, 32, 32).unwrap();
        assert!(g.max_ratio(&m, &cfg, &cfg) <= 1.0 + 1e-9);
        assert!(g.exponents[0] <= 1.0);
    }

    fn rule_strategy() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..6, 0..4)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn certificates_survive_operations(ops in rule_strategy(), base in 0u8..3, q in -2.0f64..2.0) {
            let mut phi = match base {
                0 => OperatorDistribution::identity(1),
                1 => OperatorDistribution::epsilon_q(&[q]),
                _ => OperatorDistribution::quantized_delta(&PhasePoint::single(q, 0.5)),
            };
            for op in ops {
                phi = match op {
                    0 => phi.commutator(Letter::Q(0)),
                    1 => phi.commutator(Letter::P(0)),
                    2 => phi.left_multiply(&q1()),
                    3 => phi.right_multiply(&p1()),
                    4 => phi.derivative(&MultiIndex::new(vec![1, 0])).unwrap(),
                    _ => phi.scaled(Complex64::new(0.0, 2.0)),
                };
            }
            let cfg = BasisConfig::new(1, 30).unwrap();
            prop_assert!(phi.verify_growth(&cfg).unwrap() <= 1.0 + 1e-9);
        }

        #[test]
        fn weak_star_partial_sums(support in 1usize..10) {
            let cfg = BasisConfig::new(1, 14).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(support as u64);
            let t = random_operator(&mut rng, cfg, support);
            let e = OperatorDistribution::epsilon_q(&[0.3]);
            let full = e.pair(&t).unwrap();
            let errs: Vec<f64> = (0..=support + 2)
                .map(|n| (e.truncated(n).pair(&t).unwrap() - full).norm())
                .collect();
            prop_assert!(errs[support] < 1e-13 && errs[support + 2] < 1e-13);
            prop_assert!(errs[..support].iter().any(|&x| x > 0.0));
        }
    }
}
