use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use cogarch_lab::experiment::{
    g_grid_csv, gap_csv, identity_gap_scan, log_grid, lr_csv, lr_text, run_diagnostics, run_tables, thinning_check,
    thinning_csv, wilcoxon_csv, wilcoxon_text, write_output, ExperimentConfig,
};
use cogarch_lab::processes::simulate_skeleton;
use cogarch_lab::rng::substream;
use cogarch_lab::{Error, JumpLaw, Model, PathSkeleton, Theta};

#[derive(Parser)]
#[command(name = "cogarch-lab", version, about = "COGARCH / MCOGARCH likelihood-ratio experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample sizes (comma separated); the largest is simulated.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<usize>>,
    /// Jump law, e.g. `normal`, `cauchy:a=1`, `mixture`, `gengamma:a=1,b=2,c=1`. Repeatable.
    #[arg(long)]
    law: Vec<String>,
    /// Same seed for the COGARCH and MCOGARCH batches of a cell.
    #[arg(long)]
    share_seed: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump simulated skeletons as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "COGARCH")]
        model: Model,
        /// `h0,beta,alpha,lambda`; defaults to theta0.
        #[arg(long)]
        theta: Option<Theta>,
    },
    /// Quantiles of likelihood-ratio batches.
    LrTable(Common),
    /// Wilcoxon comparison of COGARCH and MCOGARCH ratio batches.
    WilcoxonTable {
        #[command(flatten)]
        common: Common,
        /// Model whose batch is the first sample.
        #[arg(long, default_value = "COGARCH")]
        first: Model,
    },
    /// g-grids and single-jump identity gaps.
    HellingerGap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        zeta: Option<f64>,
    },
    /// Jump-count law of the thinned innovations against Poisson.
    ThinningCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000, 1_000_000])]
        n: Vec<usize>,
    },
    /// Run every invariant suite.
    Diagnostics(Common),
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(samples) = &common.samples {
        cfg.sample_sizes = samples.clone();
    }
    if !common.law.is_empty() {
        cfg.laws = common
            .law
            .iter()
            .map(|s| s.parse::<JumpLaw>().map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<_, _>>()?;
    }
    if common.share_seed {
        cfg.share_seed = true;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig, name: &str, contents: &str) -> Result<(), Error> {
    let path = write_output(&cfg.output_dir, name, contents)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Outcome of a command: `Ok(true)` when every invariant held.
fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Simulate { common, model, theta } => {
            let cfg = load(&common)?;
            let theta = theta.unwrap_or(cfg.theta0);
            theta.validate().map_err(|e| Error::Config(e.to_string()))?;
            let law = &cfg.laws[0];
            let count = cfg.max_sample_size();
            let records = (0..count as u64)
                .into_par_iter()
                .map(|i| {
                    let s = simulate_skeleton(model, &theta, cfg.gamma, law, &mut substream(cfg.master_seed, i))?;
                    Ok(s.to_csv_record(i))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let mut body = String::from(PathSkeleton::csv_header());
            body.push('\n');
            for r in records {
                body.push_str(&r);
                body.push('\n');
            }
            if common.out.is_some() {
                emit(&cfg, "skeletons.csv", &body)?;
            } else {
                io::stdout().write_all(body.as_bytes())?;
            }
            Ok(true)
        }
        Command::LrTable(common) => {
            let cfg = load(&common)?;
            let t = run_tables(&cfg, true, false)?;
            emit(&cfg, "lr_table.csv", &lr_csv(&t.lr))?;
            let text = lr_text(&t.lr);
            emit(&cfg, "lr_table.txt", &text)?;
            print!("{text}");
            Ok(true)
        }
        Command::WilcoxonTable { common, first } => {
            let mut cfg = load(&common)?;
            cfg.wilcoxon_first = first;
            let t = run_tables(&cfg, false, true)?;
            emit(&cfg, "wilcoxon_table.csv", &wilcoxon_csv(&t.wilcoxon))?;
            let text = wilcoxon_text(&t.wilcoxon);
            emit(&cfg, "wilcoxon_table.txt", &text)?;
            print!("{text}");
            Ok(true)
        }
        Command::HellingerGap { common, zeta } => {
            let mut cfg = load(&common)?;
            if let Some(z) = zeta {
                cfg.zeta = z;
                cfg.validate()?;
            }
            let rows = identity_gap_scan(&cfg)?;
            let csv = gap_csv(&rows);
            emit(&cfg, "identity_gap.csv", &csv)?;
            let zetas: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
            for (i, law) in cfg.laws.iter().enumerate() {
                emit(&cfg, &format!("g_grid_{i}.csv"), &g_grid_csv(law, &zetas, &log_grid(0.1, 10.0, 41))?)?;
            }
            print!("{csv}");
            Ok(true)
        }
        Command::ThinningCheck { common, n } => {
            let cfg = load(&common)?;
            let reps = common.samples.as_ref().map_or(cfg.thinning_replications, |_| cfg.max_sample_size());
            let rows = thinning_check(&n, cfg.gamma, reps, cfg.master_seed)?;
            let csv = thinning_csv(&rows);
            emit(&cfg, "thinning.csv", &csv)?;
            print!("{csv}");
            Ok(rows.iter().all(|r| r.within_bound()))
        }
        Command::Diagnostics(common) => {
            let cfg = load(&common)?;
            let report = run_diagnostics(&cfg)?;
            let text = report.to_text();
            emit(&cfg, "diagnostics.txt", &text)?;
            print!("{text}");
            Ok(report.all_passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Config(_) | Error::Parse(_) | Error::InvalidParameter(_))) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
