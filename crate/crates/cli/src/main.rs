//! `infoprice`: spot, futures and option prices under an information-based
//! commodity model, with simulation, verification and calibration commands.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use infoprice_core::market::simulate_joint_with;
use infoprice_core::num::map_paths;
use infoprice_core::{
    call_surface, derivatives::write_surface_csv, fmt_num, implied_initials, ou_fit, price_option, run_suite,
    spot_path, spot_price, spot_price_general, spot_price_inhom, underlying_law, OptionSpec, SuiteSettings,
    SurfaceSpec, TimeGrid, Underlying,
};
use serde::Serialize;

use crate::config::ModelConfig;

#[derive(Parser)]
#[command(name = "infoprice", version, about = "Information-based commodity pricing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Model configuration JSON; defaults to κ=0.15 θ=0.5 ψ=0.15 σ=0.25 r=0.05 x0=0.6
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<ModelConfig> {
        match &self.config {
            Some(p) => ModelConfig::load(p),
            None => Ok(ModelConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Spot price at time t given the dividend level and information value
    Price {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Dividend level X_t (defaults to x0)
        #[arg(long, allow_negative_numbers = true)]
        x: Option<f64>,
        /// Information value ξ_t
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        xi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate joint paths to CSV `path_id,t,X,B,G,xi,omega,S`
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Grid `start:end:step`
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Call prices on the spot or on a futures contract
    Option {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum, default_value_t = Kind::Spot)]
        kind: Kind,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        strike: f64,
        /// Option maturities; repeat the flag or separate with commas
        #[arg(long, value_delimiter = ',', required = true)]
        maturity: Vec<f64>,
        #[arg(long)]
        futures_maturity: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Call price surface over (θ, T) to CSV `S0,theta,T,call_price`
    Surface {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        strike: f64,
        #[arg(long, default_value_t = 0.3)]
        theta_min: f64,
        #[arg(long, default_value_t = 0.8)]
        theta_max: f64,
        #[arg(long, default_value_t = 10)]
        theta_steps: usize,
        #[arg(long, default_value_t = 3.0)]
        t_max: f64,
        #[arg(long, default_value_t = 30)]
        t_steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run Monte Carlo verification suites; exit 1 if any check fails
    Verify {
        #[command(flatten)]
        config: ConfigArg,
        /// moments, bridge, projection, spot_law, sde, martingale, futures, options or all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 200_000)]
        paths: usize,
        #[arg(long)]
        seed: u64,
        /// Grid for path-based suites
        #[arg(long, default_value = "0:1:0.0001")]
        grid: String,
        #[arg(long, default_value_t = 1_000)]
        sde_paths: usize,
        #[arg(long, default_value_t = 0.01)]
        sde_start: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        strike: f64,
        /// Option and futures maturities
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        maturity: Vec<f64>,
        /// Times for the projection regression
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 1.0, 2.0])]
        projection_times: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
        /// Record wall-clock runtime in the report (makes it non-reproducible)
        #[arg(long)]
        timing: bool,
        /// Report path; the report is printed when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective model configuration as JSON
    Config {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit OU parameters to a level series, or invert price levels for θ and x0
    Calibrate {
        #[command(flatten)]
        config: ConfigArg,
        /// CSV of dividend levels, one observation per row
        #[arg(long, conflicts_with_all = ["s0", "s_inf"])]
        input: Option<PathBuf>,
        /// Column holding the levels; defaults to the last column
        #[arg(long, requires = "input")]
        column: Option<String>,
        /// Observation spacing
        #[arg(long, requires = "input")]
        dt: Option<f64>,
        /// Current spot price
        #[arg(long, requires = "s_inf")]
        s0: Option<f64>,
        /// Long-run spot price
        #[arg(long, requires = "s0")]
        s_inf: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Spot,
    Futures,
}

/// Failures that map to a nonzero exit code other than the usage code.
enum Outcome {
    Ok,
    ChecksFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Price { config, t, x, xi, out } => cmd_price(&config.load()?, t, x, xi, out.as_deref()),
        Command::Simulate {
            config,
            grid,
            paths,
            seed,
            out,
        } => cmd_simulate(&config.load()?, &grid, paths, seed, &out),
        Command::Option {
            config,
            kind,
            strike,
            maturity,
            futures_maturity,
            out,
        } => cmd_option(&config.load()?, kind, strike, &maturity, futures_maturity, out.as_deref()),
        Command::Surface {
            config,
            strike,
            theta_min,
            theta_max,
            theta_steps,
            t_max,
            t_steps,
            out,
        } => {
            let spec = SurfaceSpec {
                strike,
                theta_min,
                theta_max,
                theta_steps,
                t_max,
                t_steps,
            };
            cmd_surface(&config.load()?, &spec, &out)
        }
        Command::Verify {
            config,
            suite,
            paths,
            seed,
            grid,
            sde_paths,
            sde_start,
            strike,
            maturity,
            projection_times,
            tolerance_scale,
            timing,
            out,
        } => {
            let settings = SuiteSettings {
                seed,
                paths,
                grid: TimeGrid::parse_spec(&grid)?,
                sde_paths,
                sde_start,
                strike,
                maturities: maturity,
                projection_times,
                tolerance_scale,
            };
            cmd_verify(&config.load()?, &suite, &settings, timing, out.as_deref())
        }
        Command::Config { config, out } => {
            emit(&config.load()?.to_json(), out.as_deref())?;
            Ok(Outcome::Ok)
        }
        Command::Calibrate {
            config,
            input,
            column,
            dt,
            s0,
            s_inf,
            out,
        } => {
            let cfg = config.load()?;
            let json = match (input, s0.zip(s_inf)) {
                (Some(path), None) => {
                    let dt = dt.ok_or_else(|| anyhow!("--dt is required with --input"))?;
                    let series = read_series(&path, column.as_deref())?;
                    serde_json::to_string_pretty(&ou_fit(&series, dt)?)?
                }
                (None, Some((s0, s_inf))) => {
                    serde_json::to_string_pretty(&implied_initials(s0, s_inf, cfg.r, cfg.kappa)?)?
                }
                _ => bail!("calibrate needs either --input with --dt, or --s0 with --s-inf"),
            };
            emit(&json, out.as_deref())?;
            Ok(Outcome::Ok)
        }
    }
}

/// Writes `text` plus a newline to `out`, or to stdout.
fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

#[derive(Serialize)]
struct PriceOutput {
    t: f64,
    x: f64,
    xi: f64,
    price: f64,
    annuity_term: f64,
    info_term: f64,
    negative: bool,
}

fn cmd_price(cfg: &ModelConfig, t: f64, x: Option<f64>, xi: f64, out: Option<&Path>) -> Result<Outcome> {
    let x = x.unwrap_or(cfg.x0);
    let quote = if cfg.has_term_structure() {
        let (schedule, curve) = cfg.term_structure()?;
        if cfg.schedule.is_some() {
            spot_price_inhom(&schedule, &curve, cfg.sigma, t, x, xi)?
        } else {
            spot_price_general(&cfg.market()?.ou, cfg.sigma, &curve, t, x, xi)?
        }
    } else {
        spot_price(&cfg.market()?, t, x, xi)?
    };
    if quote.is_negative() {
        eprintln!("warning: negative spot price {}", fmt_num(quote.price));
    }
    let output = PriceOutput {
        t,
        x,
        xi,
        price: quote.price,
        annuity_term: quote.annuity_term,
        info_term: quote.info_term,
        negative: quote.is_negative(),
    };
    emit(&serde_json::to_string_pretty(&output)?, out)?;
    Ok(Outcome::Ok)
}

const SIMULATE_CSV_HEADER: &str = "path_id,t,X,B,G,xi,omega,S";

fn cmd_simulate(cfg: &ModelConfig, grid: &str, paths: usize, seed: u64, out: &Path) -> Result<Outcome> {
    let mp = cfg.constant_market("simulate")?;
    let grid = TimeGrid::parse_spec(grid)?;
    if paths == 0 {
        bail!("--paths must be at least 1");
    }
    let bundles = map_paths(seed, paths, |rng| simulate_joint_with(&mp, &grid, rng));
    let mut w = create(out)?;
    writeln!(w, "{SIMULATE_CSV_HEADER}")?;
    for (id, bundle) in bundles.into_iter().enumerate() {
        let bundle = bundle?;
        let quotes = spot_path(&bundle, &mp);
        for (j, &t) in bundle.times().iter().enumerate() {
            writeln!(
                w,
                "{id},{},{},{},{},{},{},{}",
                fmt_num(t),
                fmt_num(bundle.x[j]),
                fmt_num(bundle.b[j]),
                fmt_num(bundle.g[j]),
                fmt_num(bundle.xi[j]),
                fmt_num(bundle.omega[j]),
                fmt_num(quotes[j].price)
            )?;
        }
    }
    w.flush()?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct OptionOutput {
    kind: &'static str,
    strike: f64,
    maturity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    futures_maturity: Option<f64>,
    price: f64,
    underlying_mean: f64,
    underlying_variance: f64,
}

fn cmd_option(
    cfg: &ModelConfig,
    kind: Kind,
    strike: f64,
    maturities: &[f64],
    futures_maturity: Option<f64>,
    out: Option<&Path>,
) -> Result<Outcome> {
    let mp = cfg.constant_market("option")?;
    let underlying = match (kind, futures_maturity) {
        (Kind::Spot, None) => Underlying::Spot,
        (Kind::Spot, Some(_)) => bail!("--futures-maturity only applies to --kind futures"),
        (Kind::Futures, Some(fm)) => Underlying::Futures { futures_maturity: fm },
        (Kind::Futures, None) => bail!("--kind futures needs --futures-maturity"),
    };
    let mut rows = Vec::with_capacity(maturities.len());
    for &maturity in maturities {
        let spec = OptionSpec {
            strike,
            maturity,
            underlying,
        };
        let law = underlying_law(&mp, &spec)?;
        rows.push(OptionOutput {
            kind: if kind == Kind::Spot { "spot" } else { "futures" },
            strike,
            maturity,
            futures_maturity,
            price: price_option(&mp, &spec)?,
            underlying_mean: law.mean,
            underlying_variance: law.variance,
        });
    }
    emit(&serde_json::to_string_pretty(&rows)?, out)?;
    Ok(Outcome::Ok)
}

fn cmd_surface(cfg: &ModelConfig, spec: &SurfaceSpec, out: &Path) -> Result<Outcome> {
    let mp = cfg.constant_market("surface")?;
    let points = call_surface(&mp, spec)?;
    let mut w = create(out)?;
    write_surface_csv(&points, &mut w)?;
    w.flush()?;
    Ok(Outcome::Ok)
}

fn cmd_verify(
    cfg: &ModelConfig,
    suite: &str,
    settings: &SuiteSettings,
    timing: bool,
    out: Option<&Path>,
) -> Result<Outcome> {
    let mp = cfg.constant_market("verify")?;
    let start = Instant::now();
    let mut report = run_suite(suite, &mp, settings)?;
    if timing {
        report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    }
    match out {
        Some(p) => {
            emit(&report.to_json(), Some(p))?;
            let stderr = io::stderr();
            let mut e = stderr.lock();
            for c in &report.checks {
                writeln!(
                    e,
                    "{} {}: statistic {} expected {} tolerance {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    fmt_num(c.statistic),
                    fmt_num(c.expected),
                    fmt_num(c.tolerance)
                )?;
            }
        }
        None => emit(&report.to_json(), None)?,
    }
    Ok(if report.all_pass() {
        Outcome::Ok
    } else {
        Outcome::ChecksFailed
    })
}

/// Reads one numeric column from a headed CSV file.
fn read_series(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let idx = match column {
        Some(name) => headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| anyhow!("column `{name}` not found in {}", path.display()))?,
        None => headers.len().checked_sub(1).ok_or_else(|| anyhow!("empty header"))?,
    };
    let mut series = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = record.get(idx).ok_or_else(|| anyhow!("row {} is short", line + 2))?;
        let v: f64 = field
            .trim()
            .parse()
            .with_context(|| format!("row {}: `{field}` is not a number", line + 2))?;
        series.push(v);
    }
    Ok(series)
}
