//! Weyl operators, Weyl transform, symplectic Fourier transform, Wigner
//! functions and Weyl quantization.
//!
//! Grids are two-dimensional, so grid-valued operations are single-mode;
//! pointwise evaluations accept any number of modes.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{hermite_table, ln_factorials, BasisConfig};
use crate::error::{Error, Result};
use crate::operator::{rebox, CMatrix, TruncatedOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative boundary magnitude above which a grid function counts as not
/// decayed.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// x = (q, p) ∈ ℝ^{2N}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(q.len(), p.len());
        PhasePoint { q, p }
    }

    pub fn single(q: f64, p: f64) -> Self {
        PhasePoint { q: vec![q], p: vec![p] }
    }

    pub fn origin(modes: usize) -> Self {
        PhasePoint {
            q: vec![0.0; modes],
            p: vec![0.0; modes],
        }
    }

    pub fn modes(&self) -> usize {
        self.q.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        PhasePoint {
            q: self.q.iter().map(|v| v * s).collect(),
            p: self.p.iter().map(|v| v * s).collect(),
        }
    }

    pub fn plus(&self, o: &PhasePoint) -> Self {
        PhasePoint {
            q: self.q.iter().zip(&o.q).map(|(a, b)| a + b).collect(),
            p: self.p.iter().zip(&o.p).map(|(a, b)| a + b).collect(),
        }
    }

    /// Component j of the flattened (q_1..q_N, p_1..p_N).
    pub fn component(&self, j: usize) -> f64 {
        let n = self.modes();
        if j < n {
            self.q[j]
        } else {
            self.p[j - n]
        }
    }

    pub fn with_component(&self, j: usize, v: f64) -> Self {
        let mut out = self.clone();
        let n = self.modes();
        if j < n {
            out.q[j] = v;
        } else {
            out.p[j - n] = v;
        }
        out
    }
}

/// σ(x, y) = q'·p − q·p' for x = (q, p), y = (q', p').
pub fn symplectic_form(x: &PhasePoint, y: &PhasePoint) -> f64 {
    x.p.iter().zip(&y.q).map(|(p, qp)| qp * p).sum::<f64>() - x.q.iter().zip(&y.p).map(|(q, pp)| q * pp).sum::<f64>()
}

/// Quadrature nodes and weights along one axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    /// `cells + 1` equally spaced nodes on [−L, L], each with weight 2L/cells.
    pub fn uniform(extent: f64, cells: usize) -> Axis {
        let h = 2.0 * extent / cells as f64;
        let nodes = (0..=cells).map(|j| -extent + j as f64 * h).collect();
        Axis {
            nodes,
            weights: vec![h; cells + 1],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> Option<f64> {
        let n = self.nodes.len();
        if n < 2 {
            return None;
        }
        let h = self.nodes[1] - self.nodes[0];
        let uniform = self.nodes.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
            && self.weights.iter().all(|&w| (w - h).abs() <= 1e-9 * h)
            && (self.nodes[0] + self.nodes[n - 1]).abs() <= 1e-9 * h;
        uniform.then_some(h)
    }

    pub fn extent(&self) -> f64 {
        self.nodes.last().copied().unwrap_or(0.0)
    }
}

/// Product grid with a global measure factor: (2π)^{-1} on phase space,
/// 1 for kernel grids over (q, q').
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub q: Axis,
    pub p: Axis,
    pub measure: f64,
}

impl PhaseSpaceGrid {
    /// Symmetric square phase-space grid with `cells` intervals per axis.
    pub fn phase_space(extent: f64, cells: usize) -> Self {
        Self::phase_space_rect(extent, cells, extent, cells)
    }

    pub fn phase_space_rect(q_extent: f64, q_cells: usize, p_extent: f64, p_cells: usize) -> Self {
        PhaseSpaceGrid {
            q: Axis::uniform(q_extent, q_cells),
            p: Axis::uniform(p_extent, p_cells),
            measure: 1.0 / (2.0 * PI),
        }
    }

    /// L = √(2 n_max + 1) + 4 with 256 intervals per axis.
    pub fn default_for(cutoff: usize) -> Self {
        Self::phase_space(default_extent(cutoff), 256)
    }

    pub fn kernel_uniform(extent: f64, cells: usize) -> Self {
        PhaseSpaceGrid {
            q: Axis::uniform(extent, cells),
            p: Axis::uniform(extent, cells),
            measure: 1.0,
        }
    }

    /// Product Gauss–Hermite grid for ∫∫ g(q, q') dq dq'.
    pub fn kernel_gauss_hermite(rule: &crate::basis::QuadratureRule) -> Self {
        let axis = Axis {
            nodes: rule.nodes.clone(),
            weights: rule.scaled_weights(),
        };
        PhaseSpaceGrid {
            q: axis.clone(),
            p: axis,
            measure: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len() * self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.q.weights[a] * self.p.weights[b] * self.measure
    }

    pub fn point(&self, a: usize, b: usize) -> PhasePoint {
        PhasePoint::single(self.q.nodes[a], self.p.nodes[b])
    }

    fn spacings(&self) -> Result<(f64, f64)> {
        match (self.q.spacing(), self.p.spacing()) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::InvalidArgument(
                "operation needs a uniform grid symmetric about the origin".into(),
            )),
        }
    }
}

pub fn default_extent(cutoff: usize) -> f64 {
    (2.0 * cutoff as f64 + 1.0).sqrt() + 4.0
}

/// Complex samples on a grid, row-major with q slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: PhaseSpaceGrid, values: Vec<Complex64>) -> Self {
        assert_eq!(grid.len(), values.len());
        GridFunction { grid, values }
    }

    pub fn zeros(grid: PhaseSpaceGrid) -> Self {
        let n = grid.len();
        GridFunction {
            grid,
            values: vec![ZERO; n],
        }
    }

    pub fn from_fn(grid: &PhaseSpaceGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &q in &grid.q.nodes {
            for &p in &grid.p.nodes {
                values.push(f(q, p));
            }
        }
        GridFunction {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_real(grid: &PhaseSpaceGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |q, p| Complex64::new(f(q, p), 0.0))
    }

    pub fn at(&self, a: usize, b: usize) -> Complex64 {
        self.values[a * self.grid.p.len() + b]
    }

    /// ∫ f dx with the grid measure.
    pub fn integral(&self) -> Complex64 {
        let np = self.grid.p.len();
        self.values
            .iter()
            .enumerate()
            .map(|(i, z)| z * self.grid.weight(i / np, i % np))
            .sum()
    }

    /// (∫ |f|² dx)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        let np = self.grid.p.len();
        self.values
            .iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * self.grid.weight(i / np, i % np))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Largest boundary sample relative to the largest sample.
    pub fn boundary_ratio(&self) -> f64 {
        let (nq, np) = (self.grid.q.len(), self.grid.p.len());
        let top = self.max_abs();
        if top == 0.0 {
            return 0.0;
        }
        let mut edge: f64 = 0.0;
        for a in 0..nq {
            for b in 0..np {
                if a == 0 || b == 0 || a + 1 == nq || b + 1 == np {
                    edge = edge.max(self.at(a, b).norm());
                }
            }
        }
        edge / top
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> GridFunction {
        assert_eq!(self.values.len(), other.values.len());
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// f_−(x) = f(−x); exact index reversal on a symmetric grid.
    pub fn reflected(&self) -> GridFunction {
        let mut values = self.values.clone();
        values.reverse();
        GridFunction {
            grid: self.grid.clone(),
            values,
        }
    }
}

/// A result with an optional numerical warning.
#[derive(Clone, Debug, PartialEq)]
pub struct Checked<T> {
    pub value: T,
    pub warning: Option<String>,
}

fn decay_warning(f: &GridFunction) -> Option<String> {
    let r = f.boundary_ratio();
    (r > BOUNDARY_TOL).then(|| format!("input does not decay at the grid boundary (ratio {r:.3e})"))
}

/// ⟨m|D(α)|n⟩ for m < rows, n < cols, from the associated-Laguerre closed form.
pub fn displacement_block(alpha: Complex64, rows: usize, cols: usize) -> CMatrix {
    let x = alpha.norm_sqr();
    let theta = alpha.arg();
    let lnf = ln_factorials(rows.max(cols) + 1);
    let mut out = CMatrix::zeros(rows, cols);
    // m ≥ n: ℓ_n(k) e^{ikθ}, k = m − n.
    for k in 0..rows {
        let count = cols.min(rows - k);
        if count == 0 {
            continue;
        }
        let vals = laguerre_diagonal(k, x, count, &lnf);
        let phase = Complex64::from_polar(1.0, k as f64 * theta);
        for (n, v) in vals.into_iter().enumerate() {
            out[(n + k, n)] = phase * v;
        }
    }
    // m < n: ℓ_m(k) (−1)^k e^{−ikθ}, k = n − m.
    for k in 1..cols {
        let count = rows.min(cols - k);
        if count == 0 {
            continue;
        }
        let vals = laguerre_diagonal(k, x, count, &lnf);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let phase = Complex64::from_polar(sign, -(k as f64) * theta);
        for (m, v) in vals.into_iter().enumerate() {
            out[(m, m + k)] = phase * v;
        }
    }
    out
}

// ℓ_n = √(n!/(n+k)!) x^{k/2} e^{−x/2} L_n^{(k)}(x) for n < count, by the
// normalized three-term recurrence with a floating exponent.
fn laguerre_diagonal(k: usize, x: f64, count: usize, lnf: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if x == 0.0 {
        if k == 0 {
            out.iter_mut().for_each(|v| *v = 1.0);
        }
        return out;
    }
    const BIG: f64 = 1e150;
    let kf = k as f64;
    let mut log_s = 0.5 * kf * x.ln() - 0.5 * x - 0.5 * lnf[k];
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = log_s.exp();
    for n in 0..count - 1 {
        let nf = n as f64;
        let next =
            ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev) / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_s += BIG.ln();
        }
        out[n + 1] = if cur == 0.0 { 0.0 } else { cur * log_s.exp() };
    }
    out
}

/// α_i = (q_i + i p_i)/√2, so that W(x) = ⊗_i D(α_i).
pub fn alpha_of(q: f64, p: f64) -> Complex64 {
    Complex64::new(q, p) * FRAC_1_SQRT_2
}

/// Entries of W(x) with row multi-indices in the box of cutoff `row_cut` and
/// columns in the box of cutoff `col_cut`.
pub fn weyl_block(x: &PhasePoint, row_cut: usize, col_cut: usize) -> CMatrix {
    let mut out: Option<CMatrix> = None;
    for i in 0..x.modes() {
        let b = displacement_block(alpha_of(x.q[i], x.p[i]), row_cut + 1, col_cut + 1);
        out = Some(match out {
            None => b,
            Some(m) => m.kronecker(&b),
        });
    }
    out.expect("at least one mode")
}

/// Matrix of W(x) = exp(i(p·Q − q·P)).
pub fn weyl_operator(x: &PhasePoint, cfg: &BasisConfig) -> Result<TruncatedOperator> {
    if x.modes() != cfg.modes {
        return Err(Error::BasisMismatch("phase point and basis differ in modes".into()));
    }
    TruncatedOperator::new(*cfg, weyl_block(x, cfg.cutoff, cfg.cutoff))
}

/// Π with entries (−1)^{|α|}.
pub fn parity(cfg: &BasisConfig) -> TruncatedOperator {
    TruncatedOperator::diagonal(*cfg, |a| if a.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 })
}

// T cropped to its support box.
fn support_matrix(t: &TruncatedOperator) -> (usize, CMatrix) {
    let s = t.support_cutoff();
    let sb = t.cfg.with_cutoff(s);
    (s, rebox(&t.mat, &t.cfg, &t.cfg, &sb, &sb))
}

fn trace_of_product(w: &CMatrix, t: &CMatrix) -> Complex64 {
    crate::operator::trace_product(w, t)
}

/// T̂(x) = tr[W(x) T].
pub fn weyl_transform_at(t: &TruncatedOperator, x: &PhasePoint) -> Complex64 {
    let (s, m) = support_matrix(t);
    trace_of_product(&weyl_block(x, s, s), &m)
}

/// W_T(x) = 2^N tr[W(2x) Π T], which equals 2^N tr[W(x)ΠW(x)*T].
pub fn wigner_at(t: &TruncatedOperator, x: &PhasePoint) -> Complex64 {
    let (s, m) = support_matrix(t);
    let pm = parity_rows(&m, &t.cfg.with_cutoff(s));
    trace_of_product(&weyl_block(&x.scaled(2.0), s, s), &pm) * 2f64.powi(t.cfg.modes as i32)
}

fn parity_rows(m: &CMatrix, b: &BasisConfig) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        if b.unflatten(r).iter().sum::<usize>() % 2 == 0 {
            m[(r, c)]
        } else {
            -m[(r, c)]
        }
    })
}

fn sample_rows(grid: &PhaseSpaceGrid, f: impl Fn(f64, f64) -> Complex64 + Sync + Send) -> GridFunction {
    let np = grid.p.len();
    let rows = crate::par::map_indexed(grid.q.len(), |a| {
        let q = grid.q.nodes[a];
        (0..np).map(|b| f(q, grid.p.nodes[b])).collect::<Vec<_>>()
    });
    GridFunction::new(grid.clone(), rows.concat())
}

/// Weyl transform sampled by the trace formula.
pub fn weyl_transform(t: &TruncatedOperator, grid: &PhaseSpaceGrid) -> Result<GridFunction> {
    t.require_single_mode("weyl_transform")?;
    let (s, m) = support_matrix(t);
    Ok(sample_rows(grid, |q, p| {
        let w = displacement_block(alpha_of(q, p), s + 1, s + 1);
        trace_of_product(&w, &m)
    }))
}

/// Weyl transform through the kernel: T̂(q, p) = ∫ du e^{ipu} K^T(u − q/2, u + q/2).
pub fn weyl_transform_kernel_path(t: &TruncatedOperator, grid: &PhaseSpaceGrid) -> Result<GridFunction> {
    t.require_single_mode("weyl_transform_kernel_path")?;
    let (s, m) = support_matrix(t);
    let kh = (2.0 * s as f64 + 1.0).sqrt();
    let reach = kh + 7.0;
    let p_max = grid.p.nodes.iter().fold(0.0f64, |a, &p| a.max(p.abs()));
    let du = 2.0 * PI / (p_max + 2.0 * kh + 16.0);
    Ok(sample_rows(grid, |q, p| {
        let half = reach - q.abs() / 2.0;
        if half <= 0.0 {
            return ZERO;
        }
        let nu = (half / du).floor() as i64;
        let mut acc = ZERO;
        for j in -nu..=nu {
            let u = j as f64 * du;
            let a = hermite_table(s, u - q / 2.0);
            let b = hermite_table(s, u + q / 2.0);
            let mut k = ZERO;
            for r in 0..=s {
                if a[r] == 0.0 {
                    continue;
                }
                let mut row = ZERO;
                for c in 0..=s {
                    row += m[(r, c)] * b[c];
                }
                k += row * a[r];
            }
            acc += Complex64::from_polar(1.0, p * u) * k;
        }
        acc * du
    }))
}

/// Wigner function sampled as 2^N tr[W(x)ΠW(x)*T].
pub fn wigner_function(t: &TruncatedOperator, grid: &PhaseSpaceGrid) -> Result<GridFunction> {
    t.require_single_mode("wigner_function")?;
    let (s, m) = support_matrix(t);
    let pm = parity_rows(&m, &t.cfg.with_cutoff(s));
    Ok(sample_rows(grid, |q, p| {
        let w = displacement_block(alpha_of(2.0 * q, 2.0 * p), s + 1, s + 1);
        trace_of_product(&w, &pm) * 2.0
    }))
}

/// f̂(x) = ∫ e^{−iσ(x,y)} f(y) dy on the same grid, by two dense DFT products.
pub fn symplectic_fourier(f: &GridFunction) -> Result<Checked<GridFunction>> {
    let g = &f.grid;
    let (dq, dp) = g.spacings()?;
    let (nq, np) = (g.q.len(), g.p.len());
    let w = dq * dp * g.measure;
    let x = DMatrix::from_fn(nq, np, |i, b| Complex64::from_polar(1.0, g.q.nodes[i] * g.p.nodes[b]));
    let y = DMatrix::from_fn(nq, np, |a, j| Complex64::from_polar(w, -g.q.nodes[a] * g.p.nodes[j]));
    let ft = DMatrix::from_fn(np, nq, |b, a| f.at(a, b));
    let out = x * (ft * y);
    let values = (0..nq)
        .flat_map(|i| (0..np).map(move |j| (i, j)))
        .map(|(i, j)| out[(i, j)])
        .collect();
    Ok(Checked {
        value: GridFunction::new(g.clone(), values),
        warning: decay_warning(f),
    })
}

/// Weyl quantization through the kernel
/// K(q, q') = (2π)^{-1} ∫ dp f((q+q')/2, p) e^{i(q−q')p}.
///
/// With s = (q+q')/2 on the grid's q nodes and t = q − q' on the same
/// spacing, q and q' fall on a half-step lattice where the Hermite functions
/// are tabulated once; T_{mn} = Σ_{s,t} h_m(s+t/2) h_n(s−t/2) G(s,t) Δs Δt.
pub fn weyl_quantize(f: &GridFunction, cfg: &BasisConfig) -> Result<Checked<TruncatedOperator>> {
    if cfg.modes != 1 {
        return Err(Error::Unsupported("weyl_quantize on a grid is single-mode".into()));
    }
    let g = &f.grid;
    let (dq, dp) = g.spacings()?;
    let n = cfg.cutoff;
    let nq = g.q.len();
    let np = g.p.len();
    let l = g.q.extent();
    let reach = (2.0 * n as f64 + 1.0).sqrt() + 6.0;
    let c_max = (2.0 * reach / dq).ceil() as i64;
    let nt = (2 * c_max + 1) as usize;

    // G(a, c) = (2π)^{-1} Σ_b f(a, b) e^{i t_c p_b} Δp
    let fm = DMatrix::from_fn(nq, np, |a, b| f.at(a, b));
    let e = DMatrix::from_fn(np, nt, |b, ci| {
        let t = (ci as i64 - c_max) as f64 * dq;
        Complex64::from_polar(dp / (2.0 * PI), t * g.p.nodes[b])
    });
    let gm = fm * e;
    let g_top = gm.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let thr = 1e-17 * g_top;

    // Half-step lattice x_j = −L + j dq/2, j ∈ [−c_max, 2(nq−1) + c_max].
    let j_min = -c_max;
    let j_count = (2 * (nq as i64 - 1) + 2 * c_max + 1) as usize;
    let table: Vec<Vec<f64>> =
        crate::par::map_indexed(j_count, |j| hermite_table(n, -l + (j as i64 + j_min) as f64 * dq / 2.0));

    const CHUNKS: usize = 16;
    let per = nq.div_ceil(CHUNKS);
    let parts = crate::par::map_indexed(CHUNKS, |ch| {
        let mut re = DMatrix::<f64>::zeros(n + 1, n + 1);
        let mut im = DMatrix::<f64>::zeros(n + 1, n + 1);
        for a in (ch * per)..((ch + 1) * per).min(nq) {
            let cols: Vec<usize> = (0..nt).filter(|&ci| gm[(a, ci)].norm() > thr).collect();
            if cols.is_empty() {
                continue;
            }
            let k = cols.len();
            let mut ur = DMatrix::<f64>::zeros(n + 1, k);
            let mut ui = DMatrix::<f64>::zeros(n + 1, k);
            let mut v = DMatrix::<f64>::zeros(n + 1, k);
            for (idx, &ci) in cols.iter().enumerate() {
                let c = ci as i64 - c_max;
                let jp = (2 * a as i64 + c - j_min) as usize;
                let jm = (2 * a as i64 - c - j_min) as usize;
                let gv = gm[(a, ci)];
                for m in 0..=n {
                    let h = table[jp][m];
                    ur[(m, idx)] = h * gv.re;
                    ui[(m, idx)] = h * gv.im;
                    v[(m, idx)] = table[jm][m];
                }
            }
            re += &ur * v.transpose();
            im += &ui * v.transpose();
        }
        (re, im)
    });
    let mut re = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut im = DMatrix::<f64>::zeros(n + 1, n + 1);
    for (r, i) in parts {
        re += r;
        im += i;
    }
    let w = dq * dq;
    let mat = CMatrix::from_fn(n + 1, n + 1, |r, c| Complex64::new(re[(r, c)], im[(r, c)]) * w);
    Ok(Checked {
        value: TruncatedOperator::new(*cfg, mat)?,
        warning: decay_warning(f),
    })
}

/// f̌ = ∫ W(−y) f(y) dy by direct quadrature over the grid.
pub fn inverse_weyl(f: &GridFunction, cfg: &BasisConfig) -> Result<TruncatedOperator> {
    if cfg.modes != 1 {
        return Err(Error::Unsupported("inverse_weyl on a grid is single-mode".into()));
    }
    let g = &f.grid;
    let n = cfg.cutoff;
    let (nq, np) = (g.q.len(), g.p.len());
    const CHUNKS: usize = 16;
    let per = nq.div_ceil(CHUNKS);
    let parts = crate::par::map_indexed(CHUNKS, |ch| {
        let mut acc = CMatrix::zeros(n + 1, n + 1);
        for a in (ch * per)..((ch + 1) * per).min(nq) {
            for b in 0..np {
                let v = f.at(a, b);
                if v == ZERO {
                    continue;
                }
                let w = displacement_block(alpha_of(-g.q.nodes[a], -g.p.nodes[b]), n + 1, n + 1);
                acc += w * (v * g.weight(a, b));
            }
        }
        acc
    });
    let mut mat = CMatrix::zeros(n + 1, n + 1);
    for p in parts {
        mat += p;
    }
    TruncatedOperator::new(*cfg, mat)
}
