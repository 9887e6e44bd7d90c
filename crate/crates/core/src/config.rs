//! Run configuration for the `lemons` driver.
//!
//! Values are layered: built-in defaults, then a `key=value` file given with
//! `--config`, then command-line flags. File keys are the long flag names
//! without dashes (`alpha`, `burn-in`, `beta-grid`, ...). `lambda` may be
//! given directly or through `A` and `B`; giving all three requires
//! `lambda = B/A`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::markov::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::model::{ModelParams, Quality};
use crate::sim::default_burn_in;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LEMONS_OUT_DIR";

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 10.0;
pub const DEFAULT_KAPPA: u32 = 1000;
pub const DEFAULT_SELLERS: u32 = 1000;
pub const DEFAULT_BUYERS: u32 = 1000;
pub const DEFAULT_ROUNDS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BETA_GRID: &str = "0.32,0.5,0.9,1.0";
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Parser)]
#[command(
    name = "lemons",
    version,
    about = "Markovian lemons market: exact solver, simulator, sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Simulate,
    Sweep,
    Critical,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary law, class structure and analytical observables at one beta.
    Solve(ConfigArgs),
    /// Agent-based run compared against the analytical curves.
    Simulate(ConfigArgs),
    /// Summary observables over a grid of beta values.
    Sweep(ConfigArgs),
    /// Critical information degree and the viable lambda interval.
    Critical(ConfigArgs),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Solve(_) => CommandKind::Solve,
            Command::Simulate(_) => CommandKind::Simulate,
            Command::Sweep(_) => CommandKind::Sweep,
            Command::Critical(_) => CommandKind::Critical,
        }
    }

    pub fn args(&self) -> &ConfigArgs {
        match self {
            Command::Solve(a) | Command::Simulate(a) | Command::Sweep(a) | Command::Critical(a) => {
                a
            }
        }
    }
}

/// Raw flags. Everything is a string here so flags and file values share one validation path.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigArgs {
    /// key=value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// Buyer willingness-to-pay rate
    #[arg(long = "A")]
    pub a: Option<String>,
    /// Seller monetary scale
    #[arg(long = "B")]
    pub b: Option<String>,
    #[arg(long)]
    pub kappa: Option<String>,
    #[arg(long)]
    pub sellers: Option<String>,
    #[arg(long)]
    pub buyers: Option<String>,
    #[arg(long)]
    pub rounds: Option<String>,
    #[arg(long = "burn-in")]
    pub burn_in: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<String>,
    /// uniform | point:K | stationary
    #[arg(long)]
    pub init: Option<String>,
    /// a:b:step or a comma-separated list
    #[arg(long = "beta-grid")]
    pub beta_grid: Option<String>,
    /// Output directory (default: $LEMONS_OUT_DIR, then ./out)
    #[arg(long)]
    pub out: Option<String>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// Write every attempt of a simulation as JSON lines to this file
    #[arg(long = "trade-log")]
    pub trade_log: Option<String>,
    /// Also write the transition matrix as (row, col, value) triplets
    #[arg(long = "export-matrix")]
    pub export_matrix: bool,
    /// Run the simulator at every sweep point as well
    #[arg(long = "with-sim")]
    pub with_sim: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitSpec {
    Uniform,
    Point(Quality),
    /// Sample buyers from the analytical stationary law.
    Stationary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub rounds: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: u64,
    pub init: InitSpec,
    pub beta_grid: Vec<f64>,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub trade_log: Option<PathBuf>,
    pub export_matrix: bool,
    pub with_sim: bool,
}

const KEYS: &[&str] = &[
    "alpha",
    "beta",
    "lambda",
    "A",
    "B",
    "kappa",
    "sellers",
    "buyers",
    "rounds",
    "burn-in",
    "seed",
    "tol",
    "max-iter",
    "init",
    "beta-grid",
    "out",
    "format",
    "trade-log",
    "export-matrix",
    "with-sim",
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    location: String,
}

type Layer = BTreeMap<String, Entry>;

fn located(err: Error, location: &str) -> Error {
    match err {
        Error::Parse { field, message, .. } => Error::Parse {
            location: location.to_string(),
            field,
            message,
        },
        Error::Domain {
            field,
            value,
            reason,
        } => Error::Parse {
            location: location.to_string(),
            field: field.to_string(),
            message: format!("{value} is out of domain: {reason}"),
        },
        other => other,
    }
}

fn parse_layer(text: &str, source: &str) -> Result<Layer> {
    let mut layer = Layer::new();
    for (lineno, raw) in text.lines().enumerate() {
        let location = format!("{source}:{}: ", lineno + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| located(Error::parse(line, "expected key=value"), &location))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(located(Error::parse(key, "unknown key"), &location));
        }
        layer.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                location,
            },
        );
    }
    Ok(layer)
}

fn flag_layer(args: &ConfigArgs) -> Layer {
    let pairs: [(&str, &Option<String>); 18] = [
        ("alpha", &args.alpha),
        ("beta", &args.beta),
        ("lambda", &args.lambda),
        ("A", &args.a),
        ("B", &args.b),
        ("kappa", &args.kappa),
        ("sellers", &args.sellers),
        ("buyers", &args.buyers),
        ("rounds", &args.rounds),
        ("burn-in", &args.burn_in),
        ("seed", &args.seed),
        ("tol", &args.tol),
        ("max-iter", &args.max_iter),
        ("init", &args.init),
        ("beta-grid", &args.beta_grid),
        ("out", &args.out),
        ("format", &args.format),
        ("trade-log", &args.trade_log),
    ];
    let mut layer: Layer = pairs
        .into_iter()
        .filter_map(|(k, v)| {
            v.as_ref().map(|v| {
                (
                    k.to_string(),
                    Entry {
                        value: v.clone(),
                        location: format!("--{k} "),
                    },
                )
            })
        })
        .collect();
    for (key, set) in [
        ("export-matrix", args.export_matrix),
        ("with-sim", args.with_sim),
    ] {
        if set {
            layer.insert(
                key.to_string(),
                Entry {
                    value: "true".into(),
                    location: format!("--{key} "),
                },
            );
        }
    }
    layer
}

struct Resolver {
    values: Layer,
}

impl Resolver {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| Error::Parse {
                location: e.location.clone(),
                field: key.to_string(),
                message: format!("cannot parse {:?}", e.value),
            }),
        }
    }

    fn location(&self, key: &str) -> String {
        self.values
            .get(key)
            .map(|e| e.location.clone())
            .unwrap_or_default()
    }

    fn fail(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            location: self.location(key),
            field: key.to_string(),
            message: message.into(),
        }
    }
}

impl RunConfig {
    /// Resolves defaults, the optional `--config` file, and flags.
    pub fn from_args(args: &ConfigArgs) -> Result<Self> {
        let mut values = Layer::new();
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            values.extend(parse_layer(&text, &path.display().to_string())?);
        }
        values.extend(flag_layer(args));
        Self::resolve(Resolver { values })
    }

    /// Parses a configuration written in the `key=value` file format.
    pub fn from_config_str(text: &str) -> Result<Self> {
        Self::resolve(Resolver {
            values: parse_layer(text, "<config>")?,
        })
    }

    fn resolve(r: Resolver) -> Result<Self> {
        let alpha = r.get::<f64>("alpha")?.unwrap_or(DEFAULT_ALPHA);
        let beta = r.get::<f64>("beta")?.unwrap_or(DEFAULT_BETA);
        let kappa = r.get::<u32>("kappa")?.unwrap_or(DEFAULT_KAPPA);
        let sellers = r.get::<u32>("sellers")?.unwrap_or(DEFAULT_SELLERS);
        let buyers = r.get::<u32>("buyers")?.unwrap_or(DEFAULT_BUYERS);

        let lambda = r.get::<f64>("lambda")?;
        let a = r.get::<f64>("A")?;
        let b = r.get::<f64>("B")?;
        let (a, b) = match (lambda, a, b) {
            (None, None, None) => (1.0, DEFAULT_LAMBDA),
            (Some(l), None, None) => (1.0, l),
            (None, a, b) => (a.unwrap_or(1.0), b.unwrap_or(DEFAULT_LAMBDA)),
            (Some(l), Some(a), None) => (a, l * a),
            (Some(l), None, Some(b)) => (b / l, b),
            (Some(l), Some(a), Some(b)) => {
                if ((b / a) - l).abs() > 1e-12 * l.abs().max(1.0) {
                    return Err(r.fail("lambda", format!("conflicts with B/A = {}", b / a)));
                }
                (a, b)
            }
        };

        let model =
            ModelParams::from_scales(alpha, beta, a, b, kappa, sellers, buyers).map_err(|e| {
                match &e {
                    Error::Domain { field, .. } => {
                        let key = *field;
                        located(e, &r.location(key))
                    }
                    Error::Configuration(msg) => r.fail("sellers", msg.clone()),
                    _ => e,
                }
            })?;

        let rounds = r.get::<u64>("rounds")?.unwrap_or(DEFAULT_ROUNDS);
        if rounds == 0 {
            return Err(r.fail("rounds", "must be >= 1"));
        }
        let burn_in = r
            .get::<u64>("burn-in")?
            .unwrap_or_else(|| default_burn_in(rounds));
        if burn_in >= rounds {
            return Err(r.fail("burn-in", format!("must be smaller than rounds ({rounds})")));
        }
        let seed = r.get::<u64>("seed")?.unwrap_or(DEFAULT_SEED);
        let tol = r.get::<f64>("tol")?.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(r.fail("tol", "must be a positive number"));
        }
        let max_iter = r.get::<u64>("max-iter")?.unwrap_or(DEFAULT_MAX_ITER);

        let init = match r.values.get("init") {
            None => InitSpec::Uniform,
            Some(e) => parse_init(&e.value, kappa).map_err(|m| r.fail("init", m))?,
        };
        let grid_text = r
            .values
            .get("beta-grid")
            .map(|e| e.value.clone())
            .unwrap_or_else(|| DEFAULT_BETA_GRID.to_string());
        let beta_grid = parse_beta_grid(&grid_text).map_err(|m| r.fail("beta-grid", m))?;

        let out_dir = PathBuf::from(
            r.values
                .get("out")
                .map(|e| e.value.clone())
                .or_else(|| std::env::var(OUT_DIR_ENV).ok())
                .unwrap_or_else(|| DEFAULT_OUT_DIR.to_string()),
        );
        let format = match r.values.get("format").map(|e| e.value.as_str()) {
            None | Some("csv") => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            Some(other) => {
                return Err(r.fail("format", format!("expected csv or json, got {other:?}")))
            }
        };
        let trade_log = r.values.get("trade-log").map(|e| PathBuf::from(&e.value));
        let export_matrix = r.get::<bool>("export-matrix")?.unwrap_or(false);
        let with_sim = r.get::<bool>("with-sim")?.unwrap_or(false);

        Ok(Self {
            model,
            rounds,
            burn_in,
            seed,
            tol,
            max_iter,
            init,
            beta_grid,
            out_dir,
            format,
            trade_log,
            export_matrix,
            with_sim,
        })
    }

    /// Serializes to the `key=value` file format; [`Self::from_config_str`] reads it back unchanged.
    pub fn to_config_string(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let _ = writeln!(s, "alpha={:?}", m.alpha());
        let _ = writeln!(s, "beta={:?}", m.beta());
        let _ = writeln!(s, "A={:?}", m.a());
        let _ = writeln!(s, "B={:?}", m.b());
        let _ = writeln!(s, "kappa={}", m.kappa());
        let _ = writeln!(s, "sellers={}", m.n_sellers());
        let _ = writeln!(s, "buyers={}", m.n_buyers());
        let _ = writeln!(s, "rounds={}", self.rounds);
        let _ = writeln!(s, "burn-in={}", self.burn_in);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "tol={:?}", self.tol);
        let _ = writeln!(s, "max-iter={}", self.max_iter);
        let init = match self.init {
            InitSpec::Uniform => "uniform".to_string(),
            InitSpec::Point(k) => format!("point:{k}"),
            InitSpec::Stationary => "stationary".to_string(),
        };
        let _ = writeln!(s, "init={init}");
        let grid: Vec<String> = self.beta_grid.iter().map(|b| format!("{b:?}")).collect();
        let _ = writeln!(s, "beta-grid={}", grid.join(","));
        let _ = writeln!(s, "out={}", self.out_dir.display());
        let format = match self.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let _ = writeln!(s, "format={format}");
        if let Some(path) = &self.trade_log {
            let _ = writeln!(s, "trade-log={}", path.display());
        }
        let _ = writeln!(s, "export-matrix={}", self.export_matrix);
        let _ = writeln!(s, "with-sim={}", self.with_sim);
        s
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }
}

/// Parses a full command line (program name first).
pub fn parse_config<I, T>(argv: I) -> Result<(CommandKind, RunConfig)>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::parse("argv", e.to_string()))?;
    let config = RunConfig::from_args(cli.command.args())?;
    Ok((cli.command.kind(), config))
}

fn parse_init(text: &str, kappa: u32) -> std::result::Result<InitSpec, String> {
    match text {
        "uniform" => Ok(InitSpec::Uniform),
        "stationary" => Ok(InitSpec::Stationary),
        other => {
            let k = other
                .strip_prefix("point:")
                .ok_or_else(|| format!("expected uniform, point:K or stationary, got {other:?}"))?
                .parse::<Quality>()
                .map_err(|_| format!("bad point quality in {other:?}"))?;
            if k == 0 || k > kappa {
                return Err(format!("point quality {k} outside 1..={kappa}"));
            }
            Ok(InitSpec::Point(k))
        }
    }
}

/// `a:b:step` (inclusive of `b` up to rounding) or `x,y,z`.
pub fn parse_beta_grid(text: &str) -> std::result::Result<Vec<f64>, String> {
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("cannot parse {s:?}"))
    };
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err("range form is start:stop:step".into());
        }
        let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if step.is_nan() || step <= 0.0 {
            return Err("step must be positive".into());
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Err("stop must not precede start".into());
        }
        (0..=count as usize)
            .map(|i| start + i as f64 * step)
            .collect()
    } else {
        text.split(',')
            .map(parse)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err("empty grid".into());
    }
    if let Some(b) = grid.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(format!("value {b} outside [0, 1]"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err("values must be strictly increasing".into());
    }
    Ok(grid)
}
