//! Random test operators shared by unit tests.

use num_complex::Complex64;
use rand::Rng;

use crate::basis::BasisConfig;
use crate::operator::TruncatedOperator;

/// Random complex entries on the box of per-mode levels ≤ `support`.
pub fn random_operator<R: Rng>(rng: &mut R, cfg: BasisConfig, support: usize) -> TruncatedOperator {
    let mut t = TruncatedOperator::zeros(cfg);
    for r in 0..cfg.dim() {
        for c in 0..cfg.dim() {
            let inside = cfg
                .unflatten(r)
                .iter()
                .chain(cfg.unflatten(c).iter())
                .all(|&k| k <= support);
            if inside {
                t.mat[(r, c)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    t
}

/// Random density matrix supported on levels ≤ `support`.
pub fn random_psd<R: Rng>(rng: &mut R, cfg: BasisConfig, support: usize) -> TruncatedOperator {
    let a = random_operator(rng, cfg, support);
    let p = &a * &a.adjoint();
    let tr = p.trace().re;
    p.scale(Complex64::new(1.0 / tr, 0.0))
}
