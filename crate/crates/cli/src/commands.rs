//! Subcommand parameters and their library calls.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use schwartz::correspondence::{
    approximate_identity, conv_fn_op, conv_op_op, gaussian_profile, husimi, ConvolutionResult,
};
use schwartz::distributions::{
    delta_derivative_inverse_weyl, pair_inverse_weyl, OperatorDistribution, PhaseDistribution,
};
use schwartz::fluctuations::{
    default_schedule, moment_convergence, rescaled_projection_sequence, spectral_convergence,
};
use schwartz::io::{grid_csv, index_label, num, operator_csv, table_csv};
use schwartz::moments::{analyticity_certificate, moment_table, purify};
use schwartz::operator::SeminormFamily;
use schwartz::phase_space::{weyl_quantize, weyl_transform, wigner_at, wigner_function};
use schwartz::states::NamedState;
use schwartz::{BasisConfig, Complex64, GridFunction, MultiIndex, OperatorPolynomial, PhasePoint, PhaseSpaceGrid};

use crate::artifact::Artifact;

pub trait Run {
    fn validate(&self) -> Result<(), String> {
        Ok(())
    }
    fn run(&self) -> schwartz::Result<Artifact>;
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

fn at_least(name: &str, v: usize, lo: usize) -> Result<(), String> {
    if v >= lo {
        Ok(())
    } else {
        Err(format!("{name} must be at least {lo}, got {v}"))
    }
}

fn single(cutoff: usize) -> schwartz::Result<BasisConfig> {
    BasisConfig::new(1, cutoff)
}

/// Phase-space sampling shared by the grid-valued commands.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct GridArgs {
    /// Per-mode number-basis cutoff n_max.
    #[arg(long, default_value_t = 64)]
    pub cutoff: usize,
    /// Cells per axis; the grid has cells + 1 nodes including the origin.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Half-width of the square grid.
    #[arg(long = "L", default_value_t = 6.0)]
    #[serde(rename = "L")]
    pub extent: f64,
}

impl GridArgs {
    fn check(&self) -> Result<(), String> {
        at_least("cutoff", self.cutoff, 1)?;
        at_least("grid", self.grid, 2)?;
        if self.grid % 2 != 0 {
            return Err("grid must be even so the origin is a node".into());
        }
        positive("L", self.extent)
    }

    fn phase_space(&self) -> PhaseSpaceGrid {
        PhaseSpaceGrid::phase_space(self.extent, self.grid)
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct StateGrid {
    /// ground, number:n, thermal:λ or coherent:q,p.
    #[arg(long, default_value = "ground")]
    pub state: NamedState,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

pub struct Wigner<'a>(pub &'a StateGrid);
pub struct Weyl<'a>(pub &'a StateGrid);
pub struct Husimi<'a>(pub &'a StateGrid);

impl Run for Wigner<'_> {
    fn validate(&self) -> Result<(), String> {
        self.0.grid.check()
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let a = self.0;
        let t = a.state.build(single(a.grid.cutoff)?)?;
        Ok(Artifact::new(grid_csv(&wigner_function(&t, &a.grid.phase_space())?)))
    }
}

impl Run for Weyl<'_> {
    fn validate(&self) -> Result<(), String> {
        self.0.grid.check()
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let a = self.0;
        let t = a.state.build(single(a.grid.cutoff)?)?;
        Ok(Artifact::new(grid_csv(&weyl_transform(&t, &a.grid.phase_space())?)))
    }
}

impl Run for Husimi<'_> {
    fn validate(&self) -> Result<(), String> {
        self.0.grid.check()
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let a = self.0;
        let t = a.state.build(single(a.grid.cutoff)?)?;
        Ok(Artifact::new(grid_csv(&husimi(&t, &a.grid.phase_space())?)))
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Quantize {
    /// gaussian (2e^{-(q²+p²)}), gaussian:ε (the rescaled g_ε) or wigner:<state>.
    #[arg(long, default_value = "gaussian")]
    pub symbol: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

fn sample_symbol(symbol: &str, grid: &PhaseSpaceGrid, cutoff: usize) -> schwartz::Result<GridFunction> {
    let (name, arg) = symbol.split_once(':').unwrap_or((symbol, ""));
    match name {
        "gaussian" if arg.is_empty() => Ok(GridFunction::from_real(grid, gaussian_profile)),
        "gaussian" => {
            let eps: f64 = arg
                .parse()
                .map_err(|_| schwartz::Error::InvalidArgument(format!("bad width '{arg}'")))?;
            Ok(approximate_identity(gaussian_profile, grid, &[eps])?.remove(0).samples)
        }
        "wigner" => {
            let state: NamedState = arg.parse()?;
            wigner_function(&state.build(single(cutoff)?)?, grid)
        }
        _ => Err(schwartz::Error::InvalidArgument(format!("unknown symbol '{symbol}'"))),
    }
}

impl Run for Quantize {
    fn validate(&self) -> Result<(), String> {
        self.grid.check()?;
        let name = self.symbol.split(':').next().unwrap_or("");
        if !["gaussian", "wigner"].contains(&name) {
            return Err(format!("unknown symbol '{}'", self.symbol));
        }
        Ok(())
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let grid = self.grid.phase_space();
        let f = sample_symbol(&self.symbol, &grid, self.grid.cutoff)?;
        let out = weyl_quantize(&f, &single(self.grid.cutoff)?)?;
        let t = out.value;
        let mut a = Artifact::new(operator_csv(&t))
            .note("trace", num(t.trace().re))
            .note("hs_norm", num(t.hs_norm()));
        if let Some(w) = out.warning {
            a = a.note("warning", w);
        }
        Ok(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ConvKind {
    FnOp,
    OpOp,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Convolve {
    #[arg(long, value_enum, default_value_t = ConvKind::FnOp)]
    pub kind: ConvKind,
    #[arg(long, default_value = "ground")]
    pub state: NamedState,
    /// Second operator for op-op.
    #[arg(long, default_value = "ground")]
    pub other: NamedState,
    /// Width ε of the normalised Gaussian g_ε used by fn-op.
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

impl Run for Convolve {
    fn validate(&self) -> Result<(), String> {
        self.grid.check()?;
        positive("width", self.width)
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let cfg = single(self.grid.cutoff)?;
        let grid = self.grid.phase_space();
        let t = self.state.build(cfg)?;
        let notes = |a: Artifact, r: f64, w: Option<String>| {
            let a = a.note("residual", num(r));
            match w {
                Some(w) => a.note("warning", w),
                None => a,
            }
        };
        match self.kind {
            ConvKind::FnOp => {
                let f = approximate_identity(gaussian_profile, &grid, &[self.width])?
                    .remove(0)
                    .samples;
                let ConvolutionResult {
                    value,
                    residual,
                    warning,
                } = conv_fn_op(&f, &t)?;
                Ok(notes(Artifact::new(operator_csv(&value)), residual, warning))
            }
            ConvKind::OpOp => {
                let s = self.other.build(cfg)?;
                let ConvolutionResult {
                    value,
                    residual,
                    warning,
                } = conv_op_op(&t, &s, &grid)?;
                Ok(notes(Artifact::new(grid_csv(&value)), residual, warning))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    OperatorNorm,
    Sequence,
    HPower,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Seminorms {
    #[arg(long, default_value = "ground")]
    pub state: NamedState,
    #[arg(long, value_enum, default_value_t = Family::Sequence)]
    pub family: Family,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    #[arg(long, default_value_t = 32)]
    pub cutoff: usize,
}

impl Run for Seminorms {
    fn validate(&self) -> Result<(), String> {
        at_least("modes", self.modes, 1)?;
        at_least("cutoff", self.cutoff, 1)
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let t = self.state.build(BasisConfig::new(self.modes, self.cutoff)?)?;
        let family = match self.family {
            Family::OperatorNorm => SeminormFamily::OperatorNorm,
            Family::Sequence => SeminormFamily::Sequence,
            Family::HPower => SeminormFamily::HPower,
        };
        let report = t.seminorm_report(family, self.order)?;
        let rows: Vec<Vec<String>> = report
            .values
            .iter()
            .map(|((l, r), v)| vec![index_label(&l.0), index_label(&r.0), num(*v)])
            .collect();
        Ok(Artifact::new(table_csv(&["left", "right", "value"], &rows)))
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Moments {
    #[arg(long, default_value = "ground")]
    pub state: NamedState,
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    #[arg(long, default_value_t = 64)]
    pub cutoff: usize,
}

impl Run for Moments {
    fn validate(&self) -> Result<(), String> {
        at_least("modes", self.modes, 1)
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let t = self.state.build(BasisConfig::new(self.modes, self.cutoff)?)?;
        Ok(Artifact::new(moment_table(&t, self.degree)?.to_csv()))
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Analyticity {
    #[arg(long, default_value = "ground")]
    pub state: NamedState,
    /// Longest word length L.
    #[arg(long, default_value_t = 4)]
    pub length: usize,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    #[arg(long, default_value_t = 64)]
    pub cutoff: usize,
}

impl Run for Analyticity {
    fn validate(&self) -> Result<(), String> {
        at_least("modes", self.modes, 1)
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let t = self.state.build(BasisConfig::new(self.modes, self.cutoff)?)?;
        let cert = analyticity_certificate(&t, self.length)?;
        let rows: Vec<Vec<String>> = cert
            .words
            .iter()
            .map(|w| {
                let label: Vec<String> = w.word.0.iter().map(|l| l.index(self.modes).to_string()).collect();
                vec![
                    label.join(";"),
                    w.word.len().to_string(),
                    num(w.norm),
                    num(w.moment.re),
                    num(w.moment.im),
                    num(w.residual),
                ]
            })
            .collect();
        Ok(Artifact::new(table_csv(
            &["word", "length", "norm", "moment_re", "moment_im", "residual"],
            &rows,
        ))
        .note("C", num(cert.c))
        .note("K", num(cert.k))
        .note("violations", cert.violations()))
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Purify {
    #[arg(long, default_value = "thermal:0.5")]
    pub state: NamedState,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    #[arg(long, default_value_t = 32)]
    pub cutoff: usize,
}

impl Run for Purify {
    fn validate(&self) -> Result<(), String> {
        at_least("modes", self.modes, 1)
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let t = self.state.build(BasisConfig::new(self.modes, self.cutoff)?)?;
        let p = purify(&t)?;
        let rows: Vec<Vec<String>> = p
            .schmidt_values
            .iter()
            .enumerate()
            .map(|(k, s)| vec![k.to_string(), num(*s)])
            .collect();
        let partial = (&p.reduced_state() - &t).hs_norm();
        Ok(Artifact::new(table_csv(&["k", "schmidt_value"], &rows))
            .note("identity_residual", num(p.identity_residual))
            .note("partial_trace_error", num(partial)))
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct DeltaQuantize {
    #[arg(long, default_value = "coherent:0.5,-0.3")]
    pub state: NamedState,
    /// Points a for wq(δ_a), as q,p pairs separated by ';'.
    #[arg(long, default_value = "0,0;1,0.5")]
    pub points: String,
    #[arg(long, default_value_t = 40)]
    pub cutoff: usize,
}

fn parse_points(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(';')
        .map(|pt| {
            let (q, p) = pt.split_once(',').ok_or_else(|| format!("bad point '{pt}'"))?;
            let q = q.trim().parse().map_err(|_| format!("bad point '{pt}'"))?;
            let p = p.trim().parse().map_err(|_| format!("bad point '{pt}'"))?;
            Ok((q, p))
        })
        .collect()
}

impl Run for DeltaQuantize {
    fn validate(&self) -> Result<(), String> {
        parse_points(&self.points).map(|_| ())
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let t = self.state.build(single(self.cutoff)?)?;
        let mut rows = Vec::new();
        let mut push = |check: String, v: Complex64, r: Complex64| {
            rows.push(vec![
                check,
                num(v.re),
                num(v.im),
                num(r.re),
                num(r.im),
                num((v - r).norm()),
            ]);
        };
        for (q, p) in parse_points(&self.points).map_err(schwartz::Error::InvalidArgument)? {
            let a = PhasePoint::single(q, p);
            let v = OperatorDistribution::quantized_delta(&a).pair(&t)?;
            push(format!("delta@{};{}", num(q), num(p)), v, wigner_at(&t, &a));
        }
        for order in [vec![1, 0], vec![1, 1]] {
            let gamma = MultiIndex::new(order);
            let phi = PhaseDistribution::DeltaDerivative {
                a: PhasePoint::origin(1),
                order: gamma.clone(),
            };
            let closed = delta_derivative_inverse_weyl(&gamma)?;
            push(
                format!("inverse-delta-derivative@{}", index_label(&gamma.0)),
                pair_inverse_weyl(&phi, &t),
                closed.trace_against(&t),
            );
        }
        Ok(Artifact::new(table_csv(
            &["check", "re", "im", "reference_re", "reference_im", "abs_diff"],
            &rows,
        )))
    }
}

/// Options shared by the convergence studies along a list of spin counts.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct FluctArgs {
    #[arg(long, default_value = "ground")]
    pub state: NamedState,
    /// Cutoff for the test state; each system enlarges it to M.
    #[arg(long, default_value_t = 16)]
    pub cutoff: usize,
    #[arg(long = "M", value_delimiter = ',', default_values_t = [8, 16, 32, 64])]
    #[serde(rename = "M")]
    pub m: Vec<usize>,
}

impl FluctArgs {
    fn check(&self) -> Result<(), String> {
        if self.m.is_empty() || self.m.contains(&0) {
            return Err("M must be a non-empty list of positive spin counts".into());
        }
        at_least("cutoff", self.cutoff, 1)
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct FluctMoments {
    /// Polynomial in Q, P such as Q^2 or QP+PQ.
    #[arg(long, default_value = "Q^2")]
    pub poly: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub fluct: FluctArgs,
}

impl Run for FluctMoments {
    fn validate(&self) -> Result<(), String> {
        self.fluct.check()?;
        OperatorPolynomial::parse(&self.poly, 1)
            .map(|_| ())
            .map_err(|e| e.to_string())
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let t = self.fluct.state.build(single(self.fluct.cutoff)?)?;
        let f = OperatorPolynomial::parse(&self.poly, 1)?;
        let table = moment_convergence(&f, &t, &self.fluct.m)?;
        Ok(Artifact::new(table.to_csv()).note("gaps_decreasing", table.gaps_decreasing()))
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct FluctSpectral {
    /// Closed interval a,b.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, 1.0])]
    pub interval: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub fluct: FluctArgs,
}

impl Run for FluctSpectral {
    fn validate(&self) -> Result<(), String> {
        self.fluct.check()?;
        match self.interval[..] {
            [a, b] if a < b => Ok(()),
            _ => Err("interval must be a,b with a < b".into()),
        }
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let t = self.fluct.state.build(single(self.fluct.cutoff)?)?;
        let table = spectral_convergence(&t, &self.fluct.m, self.interval[0], self.interval[1])?;
        Ok(Artifact::new(table.to_csv()).note("gaps_decreasing", table.gaps_decreasing()))
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct RescaledProjections {
    #[arg(long, default_value = "ground")]
    pub state: NamedState,
    #[arg(long, default_value_t = 16)]
    pub cutoff: usize,
    /// Point q at which the spectral density is approached.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub q: f64,
    /// Schedule length; step k uses M = 2^{k+4} and width 3·2^{−k}.
    #[arg(long, default_value_t = 4)]
    pub steps: usize,
}

impl Run for RescaledProjections {
    fn validate(&self) -> Result<(), String> {
        at_least("steps", self.steps, 1)?;
        if self.steps > 8 {
            return Err("steps above 8 need M > 2048".into());
        }
        Ok(())
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let t = self.state.build(single(self.cutoff)?)?;
        let schedule = default_schedule(self.q, self.steps);
        let table = rescaled_projection_sequence(&t, self.q, &schedule)?;
        let rows: Vec<Vec<String>> = schedule
            .iter()
            .zip(&table.rows)
            .map(|(s, r)| {
                vec![
                    r.m.to_string(),
                    num(s.a),
                    num(s.b),
                    num(r.value),
                    num(r.reference),
                    num(r.abs_gap),
                ]
            })
            .collect();
        Ok(Artifact::new(table_csv(
            &["M", "a", "b", "value", "reference", "abs_gap"],
            &rows,
        )))
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct DeltaApprox {
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.5, 0.25])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 160)]
    pub cutoff: usize,
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    #[arg(long = "L", default_value_t = 10.0)]
    #[serde(rename = "L")]
    pub extent: f64,
}

impl Run for DeltaApprox {
    fn validate(&self) -> Result<(), String> {
        GridArgs {
            cutoff: self.cutoff,
            grid: self.grid,
            extent: self.extent,
        }
        .check()?;
        if self.eps.is_empty() {
            return Err("eps must not be empty".into());
        }
        self.eps.iter().try_for_each(|&e| positive("eps", e))
    }
    fn run(&self) -> schwartz::Result<Artifact> {
        let cfg = single(self.cutoff)?;
        let grid = PhaseSpaceGrid::phase_space(self.extent, self.grid);
        let mut rows = Vec::new();
        for step in approximate_identity(gaussian_profile, &grid, &self.eps)? {
            let t = weyl_quantize(&step.samples, &cfg)?.value;
            let sv = t.singular_values();
            let tr = t.trace();
            rows.push(vec![
                num(step.epsilon),
                num(tr.re),
                num(tr.im),
                num(t.hs_norm()),
                num(sv.get(1).copied().unwrap_or(0.0)),
            ]);
        }
        Ok(Artifact::new(table_csv(
            &["epsilon", "trace_re", "trace_im", "hs_norm", "second_singular_value"],
            &rows,
        )))
    }
}
