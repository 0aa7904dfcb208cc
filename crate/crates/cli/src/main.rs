use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sharp_tails::dist::{b_ratio, moment_profile};
use sharp_tails::oracle::{exact_tail, mc_tail, tilted_mc_tail, TailEstimate};
use sharp_tails::sharp::{
    corollary22_interval, corollary23_upper, default_theorem21_b, theorem21_interval,
    theorem22_upper, theorem23_interval, theorem31_interval, BesseenConstants,
};
use sharp_tails::sweep::{
    bounds_csv, bounds_table, figure1, figure1_csv, parse_grid, rate_csv, rate_table,
    verify_model, BoundSel, SweepConfig, SCHEMA_VERSION,
};
use sharp_tails::{Error, SumModel};

const EXIT_PARSE: u8 = 2;
const EXIT_HYPOTHESIS: u8 = 3;
const EXIT_VERIFY: u8 = 4;

/// Sharp tail bounds for sums of bounded independent random variables.
#[derive(Parser)]
#[command(name = "sharp-tails", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical and sharp bounds on P(S_n > x sigma) over an x grid.
    Bounds(BoundsArgs),
    /// The ratio R(x, n) for Rademacher sums.
    Figure1(Figure1Args),
    /// Lemma suite, condition (A), Berry-Esseen under tilt and exact-tail containment.
    Verify(VerifyArgs),
    /// The finite-n rate function over a y grid.
    Rate(RateArgs),
    /// Monte Carlo estimate of one tail probability.
    Mc(McArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ModelArg {
    /// JSON model file, or `rademacher:N` / `eta:V:N`.
    #[arg(long, value_name = "FILE")]
    model: String,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Sidecar JSON with run metadata (version, arguments, time).
    #[arg(long, value_name = "FILE")]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct ConstantArgs {
    /// Berry-Esseen constant C_3 for delta = 1.
    #[arg(long, value_name = "VALUE")]
    c3: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// C_{2+delta}; required when delta < 1.
    #[arg(long = "c-2plusdelta", value_name = "VALUE")]
    c_2plusdelta: Option<f64>,
}

impl ConstantArgs {
    fn constants(&self) -> BesseenConstants {
        let mut c = BesseenConstants::default();
        if let Some(v) = self.c3 {
            c.c3_universal = v;
        }
        c.c_2plusdelta = self.c_2plusdelta;
        c
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long = "x-grid", value_name = "A:B:STEPS")]
    x_grid: String,
    /// Comma-separated subset of: classical, theorem21, theorem31,
    /// corollary22, corollary23, theorem22, theorem23, exact.
    #[arg(long, value_delimiter = ',')]
    bounds: Option<Vec<String>>,
    #[command(flatten)]
    constants: ConstantArgs,
    /// Exact column as P(S_n > x sigma) (the default).
    #[arg(long, conflicts_with = "nonstrict")]
    strict: bool,
    /// Exact column as P(S_n >= x sigma).
    #[arg(long)]
    nonstrict: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct Figure1Args {
    /// Comma-separated list of n.
    #[arg(long, value_delimiter = ',', default_value = "100,400,2500,10000")]
    n: Vec<u64>,
    #[arg(long = "x-max", default_value_t = 8.0)]
    x_max: f64,
    #[arg(long, default_value_t = 161)]
    points: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArg,
    /// B for the lemma suite; defaults to max(B_ratio, B_abs, max ess sup xi).
    #[arg(long)]
    b: Option<f64>,
    #[command(flatten)]
    constants: ConstantArgs,
    /// Lambda grid; defaults to 50 points in [0, min(1/B, 5)].
    #[arg(long = "lambda-grid", value_name = "A:B:STEPS")]
    lambda_grid: Option<String>,
    /// x grid for the containment checks.
    #[arg(long = "x-grid", value_name = "A:B:STEPS", default_value = "0:3:31")]
    x_grid: String,
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long = "y-grid", value_name = "A:B:STEPS")]
    y_grid: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Mc,
    Tilted,
    Exact,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Threshold in units of sigma.
    #[arg(long)]
    x: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "tilted")]
    method: Method,
    #[arg(long, conflicts_with = "nonstrict")]
    strict: bool,
    #[arg(long)]
    nonstrict: bool,
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
}

fn load_model(arg: &str) -> anyhow::Result<SumModel> {
    let parts: Vec<&str> = arg.split(':').collect();
    let bad = || Error::Parse(format!("cannot read model shorthand {arg:?}"));
    let model = match parts.as_slice() {
        ["rademacher", n] => SumModel::rademacher(n.parse().map_err(|_| bad())?)?,
        ["eta", v, n] => {
            SumModel::eta(v.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?)?
        }
        _ => {
            let text = fs::read_to_string(arg)
                .map_err(|e| Error::Parse(format!("cannot read {arg}: {e}")))?;
            SumModel::from_json(&text)?
        }
    };
    Ok(model)
}

fn emit(text: &str, path: Option<&Path>) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn write_meta(path: Option<&Path>, command: &str) -> anyhow::Result<()> {
    let Some(path) = path else { return Ok(()) };
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "sharp-tails",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "args": std::env::args().skip(1).collect::<Vec<_>>(),
        "unix_time": secs,
    });
    fs::write(path, to_json(&meta)).with_context(|| format!("writing {}", path.display()))
}

fn parse_bounds(list: &[String]) -> anyhow::Result<Vec<BoundSel>> {
    let mut out = Vec::new();
    for name in list {
        let b: BoundSel = name.parse()?;
        if !out.contains(&b) {
            out.push(b);
        }
    }
    out.sort();
    Ok(out)
}

/// Fails with a hypothesis error when an explicitly requested bound cannot
/// apply to the model at all.
fn check_requested(model: &SumModel, bounds: &[BoundSel], c: &BesseenConstants, delta: f64) -> anyhow::Result<()> {
    let cst = c.constant(delta)?;
    for &b in bounds {
        let r = match b {
            BoundSel::Theorem21 => {
                theorem21_interval(model, 0.0, default_theorem21_b(model, delta)?, delta, cst).map(|_| ())
            }
            BoundSel::Theorem31 => theorem31_interval(model, 0.0, delta, cst).map(|_| ()),
            BoundSel::Corollary22 => corollary22_interval(model, 0.0, None).map(|_| ()),
            BoundSel::Corollary23 => corollary23_upper(model, 0.0, None).map(|_| ()),
            BoundSel::Theorem22 => theorem22_upper(model, 0.0, c.c3_universal, None).map(|_| ()),
            BoundSel::Theorem23 => theorem23_interval(model, 0.0).map(|_| ()),
            BoundSel::Classical | BoundSel::Exact => Ok(()),
        };
        if let Err(e @ Error::HypothesisViolation(_)) = r {
            return Err(anyhow::Error::new(e).context(format!("bound {}", b.name())));
        }
    }
    Ok(())
}

fn model_summary(model: &SumModel) -> serde_json::Value {
    json!({
        "n": model.n(),
        "sigma2": model.sigma2(),
        "a_max": model.a_max(),
        "b_ratio": b_ratio(model),
    })
}

fn cmd_bounds(a: &BoundsArgs) -> anyhow::Result<u8> {
    let model = load_model(&a.model.model)?;
    let xs = parse_grid(&a.x_grid)?;
    let explicit = a.bounds.is_some();
    let bounds = match &a.bounds {
        Some(list) => parse_bounds(list)?,
        None => BoundSel::ALL.to_vec(),
    };
    let config = SweepConfig {
        bounds,
        constants: a.constants.constants(),
        delta: a.constants.delta,
        strict: !a.nonstrict,
    };
    config.constants.constant(config.delta)?;
    if explicit {
        check_requested(&model, &config.bounds, &config.constants, config.delta)?;
    }
    let rows = bounds_table(&model, &xs, &config)?;
    let text = match a.out.format {
        Format::Csv => bounds_csv(&rows, &config.bounds),
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "model": model_summary(&model),
            "config": config,
            "rows": rows,
        })),
    };
    emit(&text, a.out.output.as_deref())?;
    write_meta(a.out.meta.as_deref(), "bounds")?;
    Ok(0)
}

fn cmd_figure1(a: &Figure1Args) -> anyhow::Result<u8> {
    let rows = figure1(&a.n, a.x_max, a.points)?;
    let text = match a.out.format {
        Format::Csv => figure1_csv(&rows),
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "strict": false,
            "rows": rows,
        })),
    };
    emit(&text, a.out.output.as_deref())?;
    write_meta(a.out.meta.as_deref(), "figure1")?;
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<u8> {
    let model = load_model(&a.model.model)?;
    let delta = a.constants.delta;
    let b = match a.b {
        Some(b) => b,
        None => default_theorem21_b(&model, delta)?,
    };
    let lambda_grid = match &a.lambda_grid {
        Some(g) => parse_grid(g)?,
        None => {
            let top = (1.0 / b).min(5.0);
            (0..50).map(|k| top * k as f64 / 49.0).collect()
        }
    };
    let xs = parse_grid(&a.x_grid)?;
    let report = verify_model(&model, b, delta, &lambda_grid, &xs, &a.constants.constants())?;
    let profile = moment_profile(&model, delta)?;
    let text = to_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "model": model_summary(&model),
        "moments": profile,
        "report": report,
    }));
    emit(&text, a.output.as_deref())?;
    Ok(if report.passed { 0 } else { EXIT_VERIFY })
}

fn cmd_rate(a: &RateArgs) -> anyhow::Result<u8> {
    let model = load_model(&a.model.model)?;
    let ys = parse_grid(&a.y_grid)?;
    let rows = rate_table(&model, &ys);
    let text = match a.out.format {
        Format::Csv => rate_csv(&rows),
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "model": model_summary(&model),
            "rows": rows,
        })),
    };
    emit(&text, a.out.output.as_deref())?;
    write_meta(a.out.meta.as_deref(), "rate")?;
    Ok(0)
}

#[derive(Serialize)]
struct McReport {
    schema_version: u32,
    x: f64,
    #[serde(flatten)]
    estimate: TailEstimate,
    relative_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn cmd_mc(a: &McArgs) -> anyhow::Result<u8> {
    let model = load_model(&a.model.model)?;
    if !(a.x.is_finite()) {
        bail!(Error::Parse(format!("x must be finite, got {}", a.x)));
    }
    let threshold = a.x * model.sigma();
    let strict = !a.nonstrict;
    let est = match a.method {
        Method::Mc => mc_tail(&model, threshold, strict, a.samples, a.seed)?,
        Method::Tilted => tilted_mc_tail(&model, threshold, strict, a.samples, a.seed)?,
        Method::Exact => exact_tail(&model, threshold, strict)?,
    };
    let note = (est.hits == Some(0)).then(|| {
        format!(
            "no draws landed in the tail; a one-sided 95% upper bound on p is 3/N = {:e}",
            3.0 / a.samples as f64
        )
    });
    let report = McReport {
        schema_version: SCHEMA_VERSION,
        x: a.x,
        relative_stderr: (est.p > 0.0).then(|| est.relative_stderr()),
        estimate: est,
        note,
    };
    emit(&to_json(&report), a.output.as_deref())?;
    Ok(0)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Parse(_) | Error::InvalidModel { .. }) => EXIT_PARSE,
        Some(Error::HypothesisViolation(_)) => EXIT_HYPOTHESIS,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Figure1(a) => cmd_figure1(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Rate(a) => cmd_rate(a),
        Command::Mc(a) => cmd_mc(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
