//! Browser bindings: phase-space maps of named states and the spectral
//! measure of the fluctuation position operator.

use wasm_bindgen::prelude::*;

use schwartz::correspondence::husimi;
use schwartz::fluctuations::{self, SpectralMeasureApprox};
use schwartz::phase_space::wigner_function;
use schwartz::states::NamedState;
use schwartz::{BasisConfig, GridFunction, PhaseSpaceGrid, TruncatedOperator};

fn js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn state(spec: &str, cutoff: usize) -> Result<TruncatedOperator, JsValue> {
    let s: NamedState = spec.parse().map_err(js)?;
    s.build(BasisConfig::new(1, cutoff).map_err(js)?).map_err(js)
}

fn grid(extent: f64, cells: usize) -> Result<PhaseSpaceGrid, JsValue> {
    if !(extent > 0.0) || cells < 2 || cells % 2 != 0 || cells > 512 {
        return Err(js("grid needs extent > 0 and an even cell count in 2..=512"));
    }
    Ok(PhaseSpaceGrid::phase_space(extent, cells))
}

// Real parts, q-major: value (q_i, p_j) at index i·(cells+1) + j.
fn real_parts(f: &GridFunction) -> Vec<f64> {
    f.values.iter().map(|z| z.re).collect()
}

/// Wigner function of a named state on [−extent, extent]², `cells` per axis.
#[wasm_bindgen]
pub fn wigner(spec: &str, cutoff: usize, extent: f64, cells: usize) -> Result<Vec<f64>, JsValue> {
    let t = state(spec, cutoff)?;
    Ok(real_parts(&wigner_function(&t, &grid(extent, cells)?).map_err(js)?))
}

/// Husimi function ⟨x|T|x⟩ on the same layout as `wigner`.
#[wasm_bindgen(js_name = husimi)]
pub fn husimi_map(spec: &str, cutoff: usize, extent: f64, cells: usize) -> Result<Vec<f64>, JsValue> {
    let t = state(spec, cutoff)?;
    Ok(real_parts(&husimi(&t, &grid(extent, cells)?).map_err(js)?))
}

/// Eigenvalues of Q_M with the weights Tr[T E_M({λ})].
#[wasm_bindgen]
pub struct Spectrum {
    measure: SpectralMeasureApprox,
    state: TruncatedOperator,
}

#[wasm_bindgen]
impl Spectrum {
    #[wasm_bindgen(constructor)]
    pub fn new(spec: &str, cutoff: usize, m: usize) -> Result<Spectrum, JsValue> {
        if m == 0 || m > 1024 {
            return Err(js("M must be in 1..=1024"));
        }
        let t = state(spec, cutoff)?;
        let sys = fluctuations::build(m, t.cfg.with_cutoff(cutoff.max(m))).map_err(js)?;
        let measure = sys.spectral_measure(&t).map_err(js)?;
        Ok(Spectrum { measure, state: t })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.measure.eigenvalues.clone()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.measure.weights.clone()
    }

    /// Tr[T E_M([a, b])].
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.measure.mass(a, b)
    }

    /// The limit ∫_a^b K^T(q, q) dq.
    pub fn limit(&self, a: f64, b: f64) -> Result<f64, JsValue> {
        fluctuations::position_probability(&self.state, a, b).map_err(js)
    }

    /// K^T(q, q), for drawing the limiting density.
    pub fn density(&self, q: f64) -> f64 {
        fluctuations::diagonal_kernel(&self.state, q)
    }
}
