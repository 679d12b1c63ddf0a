mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use bmo_core::approximation::Scheme;
use bmo_core::geometry::{Cube, OpenSet};
use bmo_core::oscillation::AverageMode;
use bmo_core::scenarios::LengthRule;
use bmo_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "bmo", version, about = "Local BMO experiments on planar domains")]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// JSON file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct Common {
    /// Preset (square, disk, half-plane, l-shape), inline JSON, or JSON file.
    #[arg(long)]
    domain: Option<String>,
    /// Test function: preset `name[:arg]`, inline JSON, or JSON file.
    #[arg(long)]
    function: Option<String>,
    /// Grid spacing h.
    #[arg(long)]
    resolution: Option<f64>,
    /// Scale λ separating small from large cubes (default 0.25).
    #[arg(long)]
    lambda: Option<f64>,
    /// Sampling window as `x,y,side`.
    #[arg(long, value_parser = parse_window)]
    window: Option<Cube<2>>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random pairs and random test functions.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Whitney decomposition of the interior or exterior, with an SVG.
    Whitney {
        #[command(flatten)]
        common: Common,
        /// Which open set to decompose.
        #[arg(long, value_enum, default_value_t = OpenArg::Exterior)]
        open: OpenArg,
    },
    /// Local bmo norm of a test function.
    Norm {
        #[command(flatten)]
        common: Common,
        /// Large-cube family: sides at least λ or exactly λ.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Modulus of mean oscillation at several t.
    Omega {
        #[command(flatten)]
        common: Common,
        /// Comma-separated t values (default λ/4, λ/2, λ).
        #[arg(long, value_delimiter = ',')]
        ts: Option<Vec<f64>>,
    },
    /// Norm restricted to cubes far from the origin.
    Gamma {
        #[command(flatten)]
        common: Common,
        /// Comma-separated distances from the origin.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
    },
    /// Extension of a test function to the whole window.
    Extend {
        #[command(flatten)]
        common: Common,
        /// Also run the smoothing stage.
        #[arg(long)]
        smooth: Option<bool>,
        /// Averaging radius factor of the smoothing stage.
        #[arg(long = "cn")]
        c_n: Option<f64>,
    },
    /// Error curve of an approximation scheme.
    Approximate {
        #[command(flatten)]
        common: Common,
        /// Approximation scheme (default lipschitz).
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        /// Number of approximants (default 5).
        #[arg(long)]
        steps: Option<usize>,
        /// First scheme parameter.
        #[arg(long)]
        start: Option<f64>,
    },
    /// Random-pair check of the (ε, δ) condition.
    CheckEpsDelta {
        #[command(flatten)]
        common: Common,
        /// ε (default 0.1).
        #[arg(long)]
        eps: Option<f64>,
        /// δ (default 2).
        #[arg(long)]
        delta: Option<f64>,
        /// Number of random pairs (default 64).
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// The two strip-domain pipelines.
    Example {
        #[command(flatten)]
        common: Common,
        /// 1: strip growth probe, 2: scale dependence.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        which: Option<u8>,
        /// Strip lengths for the first pipeline.
        #[arg(long = "ln", alias = "Ln", value_enum)]
        ln: Option<LnArg>,
        /// Strips probed at scale 1/(2n).
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
    },
    /// Exhaustive supremum against the sampled families.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        /// Functional to maximise (default bmo-norm).
        #[arg(long, value_parser = ["bmo-norm", "omega"])]
        functional: Option<String>,
        /// t for the omega functional (default λ).
        #[arg(long)]
        t: Option<f64>,
        /// Refuse to enumerate more cubes than this.
        #[arg(long)]
        max_cubes: Option<u64>,
        /// Large-cube family: sides at least λ or exactly λ.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OpenArg {
    Interior,
    Exterior,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    AtLeast,
    Exactly,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SchemeArg {
    Boundary,
    Infinity,
    Bounded,
    Lipschitz,
    Compact,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LnArg {
    Constant,
    Log,
}

fn parse_window(s: &str) -> Result<Cube<2>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, side] => Cube::new([x, y], side).map_err(|e| e.to_string()),
        _ => Err("expected `x,y,side`".into()),
    }
}

impl From<ModeArg> for AverageMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::AtLeast => AverageMode::AtLeast,
            ModeArg::Exactly => AverageMode::Exactly,
        }
    }
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Boundary => Scheme::Boundary,
            SchemeArg::Infinity => Scheme::Infinity,
            SchemeArg::Bounded => Scheme::Bounded,
            SchemeArg::Lipschitz => Scheme::Lipschitz,
            SchemeArg::Compact => Scheme::Compact,
        }
    }
}

impl From<LnArg> for LengthRule {
    fn from(l: LnArg) -> Self {
        match l {
            LnArg::Constant => LengthRule::Constant,
            LnArg::Log => LengthRule::Logarithmic,
        }
    }
}

impl From<OpenArg> for OpenSet {
    fn from(o: OpenArg) -> Self {
        match o {
            OpenArg::Interior => OpenSet::Interior,
            OpenArg::Exterior => OpenSet::Exterior,
        }
    }
}

/// Flag values as a config layer.
fn flag_layer(cli: &Cli) -> (ExperimentConfig, Option<OpenSet>) {
    let mut open = None;
    let c = match &cli.command {
        Command::Whitney { common, open: o } => {
            open = Some((*o).into());
            common.clone()
        }
        Command::Norm { common, .. }
        | Command::Omega { common, .. }
        | Command::Gamma { common, .. }
        | Command::Extend { common, .. }
        | Command::Approximate { common, .. }
        | Command::CheckEpsDelta { common, .. }
        | Command::Example { common, .. }
        | Command::OracleCompare { common, .. } => common.clone(),
    };
    let mut cfg = ExperimentConfig {
        domain: c.domain.map(Value::String),
        function: c.function.map(Value::String),
        resolution: c.resolution,
        lambda: c.lambda,
        window: c.window,
        out: c.out,
        seed: c.seed,
        workers: cli.workers,
        ..Default::default()
    };
    match &cli.command {
        Command::Whitney { .. } => {}
        Command::Norm { mode, .. } => cfg.mode = mode.map(Into::into),
        Command::Omega { ts, .. } => cfg.ts = ts.clone(),
        Command::Gamma { betas, .. } => cfg.betas = betas.clone(),
        Command::Extend { smooth, c_n, .. } => {
            cfg.smooth = *smooth;
            cfg.c_n = *c_n;
        }
        Command::Approximate { scheme, steps, start, .. } => {
            cfg.scheme = scheme.map(Into::into);
            cfg.steps = *steps;
            cfg.start = *start;
        }
        Command::CheckEpsDelta { eps, delta, pairs, .. } => {
            cfg.eps = *eps;
            cfg.delta = *delta;
            cfg.pairs = *pairs;
        }
        Command::Example { which, ln, ns, .. } => {
            cfg.which = *which;
            cfg.ln = ln.map(Into::into);
            cfg.ns = ns.clone();
        }
        Command::OracleCompare { functional, t, max_cubes, mode, .. } => {
            cfg.functional = functional.clone();
            cfg.t = *t;
            cfg.max_cubes = *max_cubes;
            cfg.mode = mode.map(Into::into);
        }
    }
    (cfg, open)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation { .. } => 2,
        Error::Resolution { .. } => 3,
        Error::NotEvaluable(_) | Error::EmptyFamily(_) => 4,
        _ => 1,
    }
}

fn error_document(e: &Error) -> Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string() });
    match e {
        Error::Validation { field, .. } => v["field"] = json!(field),
        Error::Resolution { suggested_spacing: Some(s), .. } => v["suggested_spacing"] = json!(s),
        _ => {}
    }
    v
}

fn run(cli: &Cli) -> bmo_core::Result<()> {
    let (flags, open) = flag_layer(cli);
    let file = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let cfg = file.overlay(&flags);
    if let Some(n) = cfg.workers {
        if n == 0 {
            return Err(Error::validation("workers", "must be at least 1"));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out)?;
    let mut echoed = cfg.clone();
    // Thread count does not affect results; keep it out of the echoed config.
    echoed.workers = None;
    output::write_json(&out.join("config.json"), &echoed)?;

    match &cli.command {
        Command::Whitney { .. } => commands::whitney(&cfg, open.unwrap_or(OpenSet::Exterior), &out),
        Command::Norm { .. } => commands::norm(&cfg, &out),
        Command::Omega { .. } => commands::omega(&cfg, &out),
        Command::Gamma { .. } => commands::gamma(&cfg, &out),
        Command::Extend { .. } => commands::extend(&cfg, &out),
        Command::Approximate { .. } => commands::approximate(&cfg, &out),
        Command::CheckEpsDelta { .. } => commands::check_eps_delta(&cfg, &out),
        Command::Example { .. } => commands::example(&cfg, &out),
        Command::OracleCompare { .. } => commands::oracle_compare(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let doc = json!({ "error": "validation", "message": e.kind().to_string(), "detail": e.to_string() });
            eprintln!("{doc}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_document(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
