//! Experiment command line: single runs and sweeps, the attack suite, and
//! plot-ready pivots of the results file.
//!
//! Exit codes: 0 success, 1 configuration error, 2 attack-suite failure,
//! 3 partial runs.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use icn_sim::attacks;
use icn_sim::{SchemeKind, SimConfig, Weaken};
use sdpc_cli::plotdata::{self, Figure};
use sdpc_cli::results::{self, ResultRow};

/// Default output directory; flags override it.
const OUT_DIR_ENV: &str = "SDPC_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "sdpc-sim",
    about = "Protected-content distribution experiments on a deterministic NDN simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured run, or the cartesian sweep when sweep lists
    /// are present, and append rows to the results file.
    Run(RunArgs),
    /// Run the adversary suite against the configured scheme, plus the
    /// weakened controls; non-zero exit when the protections fail.
    Attacks(AttackArgs),
    /// Pivot a results file into a tidy (x, series, seed, y) table for one
    /// figure.
    Plotdata(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep one key over comma-separated values
    /// (key in: scheme, seed, cache_bytes, churn_rate, h_fraction).
    /// Repeatable; the cartesian product runs in parallel.
    #[arg(long, value_name = "key=v1,v2,...")]
    sweep: Vec<String>,
    /// Results file to append to.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for optional per-run artifacts (metrics + per-router
    /// counters CSVs).
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    /// Experiment configuration (TOML); the scheme is forced to sdpc.
    #[arg(long)]
    config: PathBuf,
    /// Weaken one protection and expect the matching attacks to succeed.
    #[arg(long)]
    weaken: Option<String>,
    /// Attack report CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fake subscription interests for the flooding attack.
    #[arg(long, default_value_t = 10_000)]
    ddos_fakes: u32,
    /// Forged name probes for the cache-timing attack.
    #[arg(long, default_value_t = 10_000)]
    probes: u32,
}

#[derive(Args)]
struct PlotArgs {
    /// Figure to pivot: fig5, fig6, fig7, or fig8.
    #[arg(long)]
    fig: String,
    /// Results file produced by `run`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_path(explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let dir = std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| ".".to_string());
        PathBuf::from(dir).join(default_name)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Attacks(args) => cmd_attacks(args),
        Command::Plotdata(args) => cmd_plotdata(args),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// One point of the sweep grid.
#[derive(Clone, Debug)]
struct SweepPoint {
    scheme: SchemeKind,
    seed: u64,
    cache_bytes: u64,
    churn_rate: f64,
    h_fraction: f64,
}

fn parse_sweep_flag(flag: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = flag
        .split_once('=')
        .ok_or_else(|| anyhow!("--sweep expects key=v1,v2,... (got {flag:?})"))?;
    Ok((
        key.to_string(),
        values.split(',').map(|s| s.trim().to_string()).collect(),
    ))
}

fn sweep_grid(cfg: &SimConfig, flags: &[String]) -> Result<Vec<SweepPoint>> {
    let mut schemes = vec![cfg.scheme];
    let mut seeds = if cfg.sweep.seeds.is_empty() {
        vec![cfg.seed]
    } else {
        cfg.sweep.seeds.clone()
    };
    let mut caches = if cfg.sweep.cache_bytes.is_empty() {
        vec![cfg.cache.capacity_bytes]
    } else {
        cfg.sweep.cache_bytes.clone()
    };
    let mut churns = if cfg.sweep.churn_rates.is_empty() {
        vec![cfg.scheme_params.churn_rate]
    } else {
        cfg.sweep.churn_rates.clone()
    };
    let mut hs = if cfg.sweep.h_fractions.is_empty() {
        vec![cfg.scheme_params.h_fraction]
    } else {
        cfg.sweep.h_fractions.clone()
    };
    if !cfg.sweep.schemes.is_empty() {
        schemes = cfg
            .sweep
            .schemes
            .iter()
            .map(|s| SchemeKind::parse(s).ok_or_else(|| anyhow!("unknown scheme {s:?}")))
            .collect::<Result<_>>()?;
    }
    for flag in flags {
        let (key, values) = parse_sweep_flag(flag)?;
        match key.as_str() {
            "scheme" => {
                schemes = values
                    .iter()
                    .map(|s| SchemeKind::parse(s).ok_or_else(|| anyhow!("unknown scheme {s:?}")))
                    .collect::<Result<_>>()?;
            }
            "seed" => seeds = parse_all(&values)?,
            "cache_bytes" => caches = parse_all(&values)?,
            "churn_rate" => churns = parse_all(&values)?,
            "h_fraction" => hs = parse_all(&values)?,
            other => bail!("unknown sweep key {other:?} (field path: sweep.{other})"),
        }
    }
    let mut grid = Vec::new();
    for &scheme in &schemes {
        for &seed in &seeds {
            for &cache_bytes in &caches {
                for &churn_rate in &churns {
                    for &h_fraction in &hs {
                        grid.push(SweepPoint {
                            scheme,
                            seed,
                            cache_bytes,
                            churn_rate,
                            h_fraction,
                        });
                    }
                }
            }
        }
    }
    Ok(grid)
}

fn parse_all<T: std::str::FromStr>(values: &[String]) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    values
        .iter()
        .map(|v| v.parse::<T>().map_err(|e| anyhow!("bad value {v:?}: {e}")))
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut base = SimConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        base.seed = seed;
    }
    let grid = sweep_grid(&base, &args.sweep)?;
    println!("running {} point(s) on {} threads", grid.len(), rayon::current_num_threads());

    let runs: Vec<(SimConfig, ResultRow)> = grid
        .par_iter()
        .map(|point| {
            let mut cfg = base.clone();
            cfg.scheme = point.scheme;
            cfg.seed = point.seed;
            cfg.cache.capacity_bytes = point.cache_bytes;
            cfg.scheme_params.churn_rate = point.churn_rate;
            cfg.scheme_params.h_fraction = point.h_fraction;
            cfg.validate().map_err(|e| anyhow!("{e}"))?;
            let started = Instant::now();
            let out = icn_sim::run(cfg.clone());
            let row = ResultRow::new(&cfg, &out.metrics, started.elapsed().as_secs_f64());
            Ok::<_, anyhow::Error>((cfg, row, out))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|(cfg, row, out)| {
            if let Some(dir) = &args.trace_dir {
                let tag = format!(
                    "{}-{}-c{}-s{}",
                    out.metrics.scheme, out.metrics.weaken, cfg.cache.capacity_bytes, cfg.seed
                );
                let _ = std::fs::create_dir_all(dir);
                let _ = std::fs::write(
                    dir.join(format!("metrics-{tag}.csv")),
                    format!(
                        "{}\n{}\n",
                        icn_sim::RunMetrics::metrics_csv_header(),
                        out.metrics.metrics_csv_row()
                    ),
                );
                let _ = std::fs::write(
                    dir.join(format!("routers-{tag}.csv")),
                    out.metrics.router_csv(),
                );
            }
            (cfg, row)
        })
        .collect();

    let rows: Vec<ResultRow> = runs.iter().map(|(_, r)| r.clone()).collect();
    let out = out_path(args.out, "results.csv");
    results::append_rows(&out, &rows)?;

    println!(
        "{:<13} {:>12} {:>6} {:>6} {:>10} {:>9} {:>8} {:>8}",
        "scheme", "cache_bytes", "churn", "h", "seed", "dl_s", "load%", "to%"
    );
    let mut partial = false;
    for row in &rows {
        partial |= row.partial;
        println!(
            "{:<13} {:>12} {:>6} {:>6} {:>10} {:>9.3} {:>8.2} {:>8.2}{}",
            row.scheme,
            row.cache_bytes,
            row.churn_rate,
            row.h_fraction,
            row.seed,
            row.avg_download_time_s,
            row.publisher_load_pct,
            row.timeout_ratio_pct,
            if row.partial { "  [partial]" } else { "" }
        );
    }
    println!("appended {} row(s) to {}", rows.len(), out.display());
    Ok(if partial { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn cmd_attacks(args: AttackArgs) -> Result<ExitCode> {
    let mut cfg = SimConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    cfg.scheme = SchemeKind::Sdpc;
    if let Some(weaken) = &args.weaken {
        cfg.weaken = Weaken::parse(weaken)
            .ok_or_else(|| anyhow!("unknown weaken knob {weaken:?} (field path: weaken)"))?;
    }
    let report = attacks::run_attack_suite(&cfg, args.ddos_fakes, args.probes);
    println!("{}", attacks::AttackOutcome::csv_header());
    for row in &report.rows {
        println!("{}", row.csv_row());
    }
    let out = out_path(args.out, "attack-report.csv");
    std::fs::write(&out, report.to_csv())?;
    println!("report written to {}", out.display());

    let failed = if cfg.weaken == Weaken::None {
        // Hardened run: no attack may succeed, every control must.
        report.target_successes > 0 || report.broken_controls > 0
    } else {
        // Weakened run: the point is that attacks now succeed.
        report.target_successes > 0
    };
    if cfg.weaken == Weaken::None {
        println!(
            "sdpc attacks succeeded: {}; broken controls: {}",
            report.target_successes, report.broken_controls
        );
        Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
    } else {
        println!(
            "attacks against weakened scheme succeeded: {}",
            report.target_successes
        );
        // Per contract: a successful attack run exits non-zero.
        Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
    }
}

fn cmd_plotdata(args: PlotArgs) -> Result<ExitCode> {
    let fig = Figure::parse(&args.fig)
        .ok_or_else(|| anyhow!("unknown figure {:?} (use fig5..fig8)", args.fig))?;
    let rows = results::read_rows(&args.input)?;
    let table = plotdata::pivot(fig, &rows)?;
    match args.out {
        Some(path) => std::fs::write(&path, &table)?,
        None => print!("{table}"),
    }
    Ok(ExitCode::SUCCESS)
}
