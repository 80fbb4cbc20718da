//! Convolutions between phase-space functions and operators, the Husimi
//! map, coherent-state quantization and approximate identities.
//!
//! All quadratures run over the grid of the function argument and are
//! single-mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisConfig;
use crate::error::{Error, Result};
use crate::operator::{rebox, CMatrix, TruncatedOperator};
use crate::phase_space::{weyl_block, GridFunction, PhasePoint, PhaseSpaceGrid, BOUNDARY_TOL};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const CHUNKS: usize = 16;

/// Default ε-schedule for approximate identities.
pub const DEFAULT_SCHEDULE: [f64; 5] = [1.0, 0.7, 0.5, 0.35, 0.25];

/// Output of a convolution with its quadrature diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionResult<T> {
    pub value: T,
    /// |Tr[f*T] − (∫f)·Tr[T]| for fn*op, |∫S*T − Tr S·Tr T| for op*op.
    pub residual: f64,
    pub warning: Option<String>,
}

fn crop(t: &TruncatedOperator) -> (usize, CMatrix) {
    let s = t.support_cutoff();
    let sb = t.cfg.with_cutoff(s);
    (s, rebox(&t.mat, &t.cfg, &t.cfg, &sb, &sb))
}

fn decay_warning(f: &GridFunction) -> Option<String> {
    let r = f.boundary_ratio();
    (r > BOUNDARY_TOL).then(|| format!("input does not decay at the grid boundary (ratio {r:.3e})"))
}

/// f*T = ∫ f(x) W(x) T W(x)* dx on the cutoff of T.
///
/// Its Weyl transform is f̂(−x)·T̂(x); for even f this is f̂·T̂.
pub fn conv_fn_op(f: &GridFunction, t: &TruncatedOperator) -> Result<ConvolutionResult<TruncatedOperator>> {
    t.require_single_mode("conv_fn_op")?;
    let g = &f.grid;
    let n = t.cfg.cutoff;
    let (s, ts) = crop(t);
    let (nq, np) = (g.q.len(), g.p.len());
    let top = f.max_abs();
    let per = nq.div_ceil(CHUNKS);
    let parts = crate::par::map_indexed(CHUNKS, |ch| {
        let mut acc = CMatrix::zeros(n + 1, n + 1);
        for a in (ch * per)..((ch + 1) * per).min(nq) {
            for b in 0..np {
                let v = f.at(a, b);
                if v.norm() <= 1e-17 * top {
                    continue;
                }
                let w = weyl_block(&g.point(a, b), n, s);
                acc += (&w * &ts * w.adjoint()) * (v * g.weight(a, b));
            }
        }
        acc
    });
    let mut mat = CMatrix::zeros(n + 1, n + 1);
    for p in parts {
        mat += p;
    }
    let value = TruncatedOperator::new(t.cfg, mat)?;
    let residual = (value.trace() - f.integral() * t.trace()).norm();
    Ok(ConvolutionResult {
        value,
        residual,
        warning: decay_warning(f),
    })
}

/// (S*T)(x) = tr[S W(x) T_− W(x)*] sampled on `grid`.
///
/// Its symplectic Fourier transform is Ŝ(−x)·T̂(−x).
pub fn conv_op_op(
    s: &TruncatedOperator,
    t: &TruncatedOperator,
    grid: &PhaseSpaceGrid,
) -> Result<ConvolutionResult<GridFunction>> {
    if s.cfg != t.cfg {
        return Err(Error::BasisMismatch(
            "convolution of operators on different bases".into(),
        ));
    }
    t.require_single_mode("conv_op_op")?;
    let (ss, sm) = crop(s);
    let (st, tm) = crop(t);
    let tm = CMatrix::from_fn(
        st + 1,
        st + 1,
        |r, c| if (r + c) % 2 == 0 { tm[(r, c)] } else { -tm[(r, c)] },
    );
    let np = grid.p.len();
    let rows = crate::par::map_indexed(grid.q.len(), |a| {
        (0..np)
            .map(|b| {
                let w = weyl_block(&grid.point(a, b), ss, st);
                crate::operator::trace_product(&sm, &(&w * &tm * w.adjoint()))
            })
            .collect::<Vec<_>>()
    });
    let value = GridFunction::new(grid.clone(), rows.concat());
    let residual = (value.integral() - s.trace() * t.trace()).norm();
    let warning = decay_warning(&value);
    Ok(ConvolutionResult {
        value,
        residual,
        warning,
    })
}

/// (f*g)(x) = ∫ f(y) g(x − y) dy on a common uniform grid symmetric about
/// the origin; samples of g outside the grid count as zero.
pub fn conv_fn_fn(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if f.grid != g.grid {
        return Err(Error::BasisMismatch(
            "convolution of functions on different grids".into(),
        ));
    }
    let grid = &f.grid;
    if grid.q.spacing().is_none() || grid.p.spacing().is_none() {
        return Err(Error::InvalidArgument(
            "function convolution needs a symmetric uniform grid".into(),
        ));
    }
    let (nq, np) = (grid.q.len() as i64, grid.p.len() as i64);
    let (cq, cp) = ((nq - 1) / 2, (np - 1) / 2);
    let rows = crate::par::map_indexed(nq as usize, |i| {
        let i = i as i64;
        (0..np)
            .map(|j| {
                let mut acc = ZERO;
                for k in 0..nq {
                    let a = i - k + cq;
                    if a < 0 || a >= nq {
                        continue;
                    }
                    for l in 0..np {
                        let b = j - l + cp;
                        if b < 0 || b >= np {
                            continue;
                        }
                        let fv = f.at(k as usize, l as usize);
                        if fv != ZERO {
                            acc += fv * g.at(a as usize, b as usize) * grid.weight(k as usize, l as usize);
                        }
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
    });
    Ok(GridFunction::new(grid.clone(), rows.concat()))
}

/// |0⟩⟨0| on `cfg`.
pub fn ground_projector(cfg: &BasisConfig) -> TruncatedOperator {
    let zero = vec![0; cfg.modes];
    TruncatedOperator::basis_element(*cfg, &zero, &zero)
}

/// Husimi function T*|0⟩⟨0|, which is ⟨x|T|x⟩ for the coherent states
/// |x⟩ = W(x)|0⟩.
pub fn husimi(t: &TruncatedOperator, grid: &PhaseSpaceGrid) -> Result<GridFunction> {
    t.require_single_mode("husimi")?;
    let (s, m) = crop(t);
    let np = grid.p.len();
    let rows = crate::par::map_indexed(grid.q.len(), |a| {
        (0..np)
            .map(|b| {
                let v = weyl_block(&grid.point(a, b), s, 0);
                (v.adjoint() * &m * &v)[(0, 0)]
            })
            .collect::<Vec<_>>()
    });
    Ok(GridFunction::new(grid.clone(), rows.concat()))
}

/// Coherent-state quantization f*|0⟩⟨0| = ∫ f(x) |x⟩⟨x| dx.
pub fn coherent_quantize(f: &GridFunction, cfg: &BasisConfig) -> Result<ConvolutionResult<TruncatedOperator>> {
    conv_fn_op(f, &ground_projector(cfg))
}

/// One member g_ε(x) = ε^{-2N} g(x/ε) of an approximate identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityStep {
    pub epsilon: f64,
    pub samples: GridFunction,
}

/// g(x) = 2 e^{-(q²+p²)}, the Wigner function of the ground state.
pub fn gaussian_profile(q: f64, p: f64) -> f64 {
    2.0 * (-(q * q + p * p)).exp()
}

/// Samples g_ε along `schedule`. The profile must integrate to 1 on the grid.
pub fn approximate_identity(
    g: impl Fn(f64, f64) -> f64,
    grid: &PhaseSpaceGrid,
    schedule: &[f64],
) -> Result<Vec<IdentityStep>> {
    let norm = GridFunction::from_real(grid, &g).integral();
    if (norm - 1.0).norm() > 1e-8 {
        return Err(Error::Normalization(norm.re));
    }
    schedule
        .iter()
        .map(|&eps| {
            if !(eps > 0.0) {
                return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
            }
            let scale = eps.powi(-2);
            Ok(IdentityStep {
                epsilon: eps,
                samples: GridFunction::from_real(grid, |q, p| scale * g(q / eps, p / eps)),
            })
        })
        .collect()
}

/// Translates T by the phase-space vector a: W(a) T W(a)*.
pub fn translate(t: &TruncatedOperator, a: &PhasePoint) -> Result<TruncatedOperator> {
    let w = crate::phase_space::weyl_operator(a, &t.cfg)?;
    Ok(&(&w * t) * &w.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{symplectic_fourier, weyl_quantize, weyl_transform};
    use crate::testutil::{random_operator, random_psd};
    use rand::SeedableRng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    // Normalized Gaussian of variance σ² per coordinate for dx = dq dp/2π.
    fn gaussian(grid: &PhaseSpaceGrid, sigma: f64, shift: (f64, f64)) -> GridFunction {
        GridFunction::from_real(grid, |q, p| {
            let r2 = (q - shift.0).powi(2) + (p - shift.1).powi(2);
            (-r2 / (2.0 * sigma * sigma)).exp() / (sigma * sigma)
        })
    }

    #[test]
    fn fn_op_fourier_identity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let cfg = BasisConfig::new(1, 40).unwrap();
        let t = random_operator(&mut rng, cfg, 3);
        let grid = PhaseSpaceGrid::phase_space(8.0, 64);
        let f = gaussian(&grid, 0.8, (0.3, -0.2));
        let conv = conv_fn_op(&f, &t).unwrap();
        assert!(conv.warning.is_none());
        assert!(conv.residual < 1e-6, "{}", conv.residual);
        let lhs = weyl_transform(&conv.value, &grid).unwrap();
        let fh = symplectic_fourier(&f).unwrap().value;
        let th = weyl_transform(&t, &grid).unwrap();
        // W(y)*W(x)W(y) = e^{iσ(x,y)}W(x), so the symbol enters reflected.
        let rhs = fh.reflected().zip_with(&th, |a, b| a * b);
        assert!(lhs.max_abs_diff(&rhs) < 1e-5, "{}", lhs.max_abs_diff(&rhs));
    }

    #[test]
    fn op_op_fourier_identity_and_symmetry() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let cfg = BasisConfig::new(1, 24).unwrap();
        let s = random_operator(&mut rng, cfg, 3);
        let t = random_operator(&mut rng, cfg, 2);
        let grid = PhaseSpaceGrid::phase_space(9.0, 72);
        let st = conv_op_op(&s, &t, &grid).unwrap();
        let ts = conv_op_op(&t, &s, &grid).unwrap();
        assert!(st.value.max_abs_diff(&ts.value) < 1e-8);
        assert!(st.residual < 1e-6, "{}", st.residual);
        let lhs = symplectic_fourier(&st.value).unwrap().value;
        let sh = weyl_transform(&s, &grid).unwrap();
        let th = weyl_transform(&t, &grid).unwrap();
        let rhs = sh.zip_with(&th, |a, b| a * b).reflected();
        assert!(lhs.max_abs_diff(&rhs) < 1e-5, "{}", lhs.max_abs_diff(&rhs));
    }

    #[test]
    fn associativity_through_function_convolution() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let cfg = BasisConfig::new(1, 40).unwrap();
        let s = random_operator(&mut rng, cfg, 2);
        let t = random_operator(&mut rng, cfg, 2);
        let grid = PhaseSpaceGrid::phase_space(9.0, 48);
        let f = gaussian(&grid, 0.7, (0.0, 0.0));
        // (f*S)*T = f*(S*T)
        let fs = conv_fn_op(&f, &s).unwrap().value;
        let lhs = conv_op_op(&fs, &t, &grid).unwrap().value;
        let st = conv_op_op(&s, &t, &grid).unwrap().value;
        let rhs = conv_fn_fn(&f, &st).unwrap();
        let d = lhs.max_abs_diff(&rhs);
        assert!(d < 1e-5, "{d}");
    }

    #[test]
    fn fn_op_preserves_positivity_and_trace() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        let cfg = BasisConfig::new(1, 32).unwrap();
        let t = random_psd(&mut rng, cfg, 3);
        let grid = PhaseSpaceGrid::phase_space(8.0, 48);
        let f = gaussian(&grid, 0.6, (0.5, 0.0));
        let out = conv_fn_op(&f, &t).unwrap();
        assert!(out.value.min_eigenvalue() >= -1e-10);
        assert!((out.value.trace() - f.integral() * t.trace()).norm() < 1e-6);
    }

    #[test]
    fn narrow_gaussian_approaches_identity() {
        let cfg = BasisConfig::new(1, 24).unwrap();
        let t0 = ground_projector(&cfg);
        let grid = PhaseSpaceGrid::phase_space(3.0, 120);
        let errs: Vec<f64> = [0.4, 0.2, 0.1]
            .iter()
            .map(|&w| (&conv_fn_op(&gaussian(&grid, w, (0.0, 0.0)), &t0).unwrap().value - &t0).hs_norm())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn translation_covariance() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        let cfg = BasisConfig::new(1, 40).unwrap();
        let t = random_operator(&mut rng, cfg, 2);
        let grid = PhaseSpaceGrid::phase_space(8.0, 64);
        let a = 4.0 * grid.q.spacing().unwrap();
        let shifted = gaussian(&grid, 0.6, (a, 0.0));
        let lhs = conv_fn_op(&shifted, &t).unwrap().value;
        let base = conv_fn_op(&gaussian(&grid, 0.6, (0.0, 0.0)), &t).unwrap().value;
        let rhs = translate(&base, &PhasePoint::single(a, 0.0)).unwrap();
        let inner = cfg.with_cutoff(20);
        let d = (&lhs.resized(20) - &rhs.resized(20)).hs_norm();
        assert!(d < 1e-7, "{d} on {inner:?}");
    }

    #[test]
    fn husimi_of_ground_state() {
        let cfg = BasisConfig::new(1, 16).unwrap();
        let t0 = ground_projector(&cfg);
        let grid = PhaseSpaceGrid::phase_space(8.0, 64);
        let h = husimi(&t0, &grid).unwrap();
        let via_conv = conv_op_op(&t0, &t0, &grid).unwrap().value;
        assert!(h.max_abs_diff(&via_conv) < 1e-12);
        let fh = symplectic_fourier(&h).unwrap().value;
        let expect = GridFunction::from_real(&grid, |q, p| (-(q * q + p * p) / 2.0).exp());
        assert!(fh.max_abs_diff(&expect) < 1e-8, "{}", fh.max_abs_diff(&expect));
    }

    #[test]
    fn husimi_is_nonnegative_for_states() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        let cfg = BasisConfig::new(1, 12).unwrap();
        let s = random_psd(&mut rng, cfg, 4);
        let t = random_psd(&mut rng, cfg, 4);
        let grid = PhaseSpaceGrid::phase_space(6.0, 24);
        let h = conv_op_op(&s, &t, &grid).unwrap().value;
        assert!(h.values.iter().all(|z| z.re >= -1e-9 && z.im.abs() < 1e-9));
    }

    #[test]
    fn coherent_quantization_traces() {
        let cfg = BasisConfig::new(1, 40).unwrap();
        let grid = PhaseSpaceGrid::phase_space(9.0, 64);
        let zero = GridFunction::zeros(grid.clone());
        assert_eq!(coherent_quantize(&zero, &cfg).unwrap().value.hs_norm(), 0.0);
        let f = GridFunction::from_real(&grid, |q, p| (1.0 + q) * (-(q * q + p * p) / 3.0).exp());
        let out = coherent_quantize(&f, &cfg).unwrap();
        assert!((out.value.trace() - f.integral()).norm() < 1e-6);
    }

    #[test]
    fn approximate_identity_quantizations() {
        let cfg = BasisConfig::new(1, 48).unwrap();
        let grid = PhaseSpaceGrid::phase_space(8.0, 160);
        let steps = approximate_identity(gaussian_profile, &grid, &[1.0, 0.5]).unwrap();
        let t0 = ground_projector(&cfg);
        let q1 = weyl_quantize(&steps[0].samples, &cfg).unwrap().value;
        assert!((&q1 - &t0).hs_norm() < 1e-8);
        let q2 = weyl_quantize(&steps[1].samples, &cfg).unwrap().value;
        assert!((q2.trace() - c(1.0)).norm() < 1e-8);
        assert!(q2.hs_norm() > q1.hs_norm());
    }

    #[test]
    fn approximate_identity_rejects_unnormalized() {
        let grid = PhaseSpaceGrid::phase_space(8.0, 64);
        let r = approximate_identity(|q, p| 3.0 * gaussian_profile(q, p), &grid, &[1.0]);
        assert!(matches!(r, Err(Error::Normalization(_))));
    }
}
