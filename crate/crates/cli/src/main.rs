//! Batch driver for the schwartz library. Every subcommand writes one
//! artifact (CSV or JSON) whose header records the version and a SHA-256 of
//! the effective configuration.
//!
//! Exit codes: 2 usage, 3 invalid configuration, 4 file I/O, 5 computation.

mod artifact;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use artifact::{render, write, Artifact, Format};
use commands::*;

const OUT_DIR_ENV: &str = "SCHWARTZ_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "schwartz",
    version,
    about = "Schwartz-operator experiments at finite truncation"
)]
struct Cli {
    /// JSON object whose keys override the subcommand flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to $SCHWARTZ_OUT_DIR, then the working directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Artifact file name; defaults to <subcommand>.<format>.
    #[arg(long, global = true)]
    output: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Wigner function W_T on a phase-space grid.
    Wigner(StateGrid),
    /// Weyl transform T̂(x) = tr[W(x)T] on a grid.
    Weyl(StateGrid),
    /// Weyl quantization of a sampled symbol.
    Quantize(Quantize),
    /// Husimi function ⟨x|T|x⟩.
    Husimi(StateGrid),
    /// Function–operator or operator–operator convolution.
    Convolve(Convolve),
    /// Seminorm table of a state.
    Seminorms(Seminorms),
    /// Moments tr(Q^α P^β T).
    Moments(Moments),
    /// Word norms ‖R^A √T‖₂ and the fitted bound C K^{|A|} |A|!.
    Analyticity(Analyticity),
    /// Schmidt decomposition of the purification √T.
    Purify(Purify),
    /// Quantized delta and delta-derivative checks.
    DeltaQuantize(DeltaQuantize),
    /// Tr(f(Q_M, P_M) T) along a list of spin counts.
    FluctMoments(FluctMoments),
    /// Spectral weights Tr[T E_M([a, b])] along a list of spin counts.
    FluctSpectral(FluctSpectral),
    /// Rescaled spectral projections approaching K^T(q, q).
    RescaledProjections(RescaledProjections),
    /// Quantized approximate identity g_ε along a list of widths.
    DeltaApprox(DeltaApprox),
}

enum Failure {
    Config(String),
    Io(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 3,
            Failure::Io(_) => 4,
            Failure::Compute(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Compute(m) => m,
        }
    }
}

struct Settings {
    format: Format,
    output: Option<String>,
}

/// Applies config-file keys over the flag values. `format` and `output` are
/// global; every other key must name a subcommand parameter.
fn merge<T: Serialize + DeserializeOwned>(
    flags: &T,
    overrides: Option<Map<String, Value>>,
    settings: &mut Settings,
) -> Result<(T, Value), Failure> {
    let mut value = serde_json::to_value(flags).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(map) = overrides {
        let target = value.as_object_mut().expect("parameters serialize to an object");
        for (k, v) in map {
            match k.as_str() {
                "format" => {
                    settings.format = serde_json::from_value(v).map_err(|e| Failure::Config(format!("format: {e}")))?;
                }
                "output" => {
                    settings.output = Some(
                        v.as_str()
                            .ok_or_else(|| Failure::Config("output must be a string".into()))?
                            .to_string(),
                    );
                }
                _ if target.contains_key(&k) => {
                    target.insert(k, v);
                }
                _ => return Err(Failure::Config(format!("unknown configuration key '{k}'"))),
            }
        }
    }
    let params: T = serde_json::from_value(value).map_err(|e| Failure::Config(e.to_string()))?;
    let echoed = serde_json::to_value(&params).map_err(|e| Failure::Config(e.to_string()))?;
    Ok((params, echoed))
}

fn read_config(path: &Option<PathBuf>) -> Result<Option<Map<String, Value>>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => Ok(Some(m)),
        Ok(_) => Err(Failure::Config("configuration must be a JSON object".into())),
        Err(e) => Err(Failure::Config(format!("{}: {e}", path.display()))),
    }
}

fn perform(runner: impl Run) -> Result<Artifact, Failure> {
    runner.validate().map_err(Failure::Config)?;
    runner.run().map_err(|e| match e {
        schwartz::Error::InvalidArgument(m) => Failure::Config(m),
        e => Failure::Compute(e.to_string()),
    })
}

fn execute<T>(
    name: &str,
    flags: &T,
    act: impl Fn(&T) -> Result<Artifact, Failure>,
    cli: &Cli,
) -> Result<PathBuf, Failure>
where
    T: Serialize + DeserializeOwned,
{
    let mut settings = Settings {
        format: cli.format,
        output: cli.output.clone(),
    };
    let (params, echoed) = merge(flags, read_config(&cli.config)?, &mut settings)?;
    let artifact = act(&params)?;
    let mut config = Map::new();
    config.insert("command".into(), Value::String(name.into()));
    config.insert(
        "format".into(),
        serde_json::to_value(settings.format).expect("format serializes"),
    );
    config.insert("params".into(), echoed);
    let config = Value::Object(config);
    let body = render(&artifact, name, &config, settings.format);
    let dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let file = settings
        .output
        .unwrap_or_else(|| format!("{name}.{}", settings.format.extension()));
    write(&dir, &file, &body).map_err(|e| Failure::Io(format!("{}: {e}", dir.join(&file).display())))
}

fn dispatch(cli: &Cli) -> Result<PathBuf, Failure> {
    match &cli.command {
        Command::Wigner(a) => execute("wigner", a, |p| perform(Wigner(p)), cli),
        Command::Weyl(a) => execute("weyl", a, |p| perform(Weyl(p)), cli),
        Command::Husimi(a) => execute("husimi", a, |p| perform(Husimi(p)), cli),
        Command::Quantize(a) => execute("quantize", a, |p| perform(p.clone()), cli),
        Command::Convolve(a) => execute("convolve", a, |p| perform(p.clone()), cli),
        Command::Seminorms(a) => execute("seminorms", a, |p| perform(p.clone()), cli),
        Command::Moments(a) => execute("moments", a, |p| perform(p.clone()), cli),
        Command::Analyticity(a) => execute("analyticity", a, |p| perform(p.clone()), cli),
        Command::Purify(a) => execute("purify", a, |p| perform(p.clone()), cli),
        Command::DeltaQuantize(a) => execute("delta-quantize", a, |p| perform(p.clone()), cli),
        Command::FluctMoments(a) => execute("fluct-moments", a, |p| perform(p.clone()), cli),
        Command::FluctSpectral(a) => execute("fluct-spectral", a, |p| perform(p.clone()), cli),
        Command::RescaledProjections(a) => execute("rescaled-projections", a, |p| perform(p.clone()), cli),
        Command::DeltaApprox(a) => execute("delta-approx", a, |p| perform(p.clone()), cli),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
