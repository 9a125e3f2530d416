#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rvcv_core::experiments::{
    generate_ergm_data, generate_ising_data, generate_sir_data, run_experiment, ExperimentConfig,
    ExperimentReport,
};
use rvcv_core::grf::io::{format_adjacency, format_lattice, read_lattice};
use rvcv_core::grf::ising::ising_posterior_mean_grid_with;
use rvcv_core::sde::io::format_observations;
use rvcv_core::{Error, Result};

#[derive(Parser)]
#[command(name = "rvcv", version, about = "Reduced-variance control variate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads for forward simulation.
        #[arg(long)]
        cores: Option<usize>,
        /// Output directory for table.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset.
    GenData {
        #[arg(long, value_enum)]
        experiment: DataKind,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Optional experiment file whose model section supplies the
        /// generating parameters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Exact grid-quadrature posterior summary.
    Oracle {
        #[arg(long, value_enum)]
        experiment: OracleKind,
        /// `a:b:n` for `n` equally spaced points on `[a, b]`.
        #[arg(long, value_parser = parse_grid)]
        theta_grid: Grid,
        /// Lattice file; defaults to the generated 16x16 data.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        prior_sd: f64,
        /// Seed for generated data when no file is given.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Ising,
    Sir,
    Ergm,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Ising,
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn parse_grid(text: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err("expected a:b:n".into());
    };
    let a: f64 = a.parse().map_err(|_| format!("bad lower bound '{a}'"))?;
    let b: f64 = b.parse().map_err(|_| format!("bad upper bound '{b}'"))?;
    let n: usize = n.parse().map_err(|_| format!("bad point count '{n}'"))?;
    if n < 3 || !(b > a) {
        return Err("need a < b and at least three points".into());
    }
    Ok(Grid(
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    ))
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config" => 3,
        "parse" => 4,
        "io" => 5,
        "invalid-argument" => 6,
        "degenerate-design" => 7,
        "numerical" => 8,
        "simulation" => 9,
        "resource" => 10,
        _ => 1,
    }
}

fn print_summary(report: &ExperimentReport, table: &Path, summary: &Path) {
    println!(
        "{}: {} rows, {} replicates, {} workers, sampling {:.1}s",
        report.experiment.name(),
        report.rows.len(),
        report.replicates,
        report.workers,
        report.sampling_seconds
    );
    for row in &report.rows {
        let parts: Vec<String> = row
            .targets
            .iter()
            .map(|t| {
                format!(
                    "{} mu={:.6} (uncontrolled {:.6}) R={:.3}",
                    t.target, t.mu_controlled, t.mu_uncontrolled, t.r
                )
            })
            .collect();
        println!("  I={} K={} deg={}: {}", row.iterations, row.k, row.degree, parts.join("; "));
    }
    for fit in &report.rho_fits {
        println!(
            "  rho fit deg={} {}: rho_inf={:.4} C={:.4} residual={:.4} rho(1)/rho_inf={:.3}",
            fit.degree, fit.target, fit.fit.rho_inf, fit.fit.c, fit.fit.residual, fit.rho1_ratio
        );
    }
    for a in &report.allocations {
        println!("  K0={} argmin r(K) over 1..={} is K={}", a.cores, a.k_max, a.argmin);
    }
    if let Some(o) = &report.oracle {
        println!("  exact posterior mean {:.6} (sd {:.6})", o.mean, o.sd);
    }
    println!("wrote {} and {}", table.display(), summary.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, cores, out } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if cores.is_some() {
                cfg.cores = cores;
            }
            let dir = out
                .or_else(|| cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results").join(cfg.experiment.name()));
            let report = run_experiment(&cfg)?;
            let (table, summary) = report.write(&dir)?;
            print_summary(&report, &table, &summary);
        }
        Command::GenData {
            experiment,
            seed,
            out,
            config,
        } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::from_path(path)?,
                None => ExperimentConfig::from_toml("experiment = \"sir\"\nseed = 0\niterations = [4]\nk = [1]\n")?,
            };
            let text = match experiment {
                DataKind::Ising => {
                    cfg.ising.data_seed = seed;
                    format_lattice(&generate_ising_data(&cfg.ising)?)
                }
                DataKind::Ergm => {
                    cfg.ergm.data_seed = seed;
                    format_adjacency(&generate_ergm_data(&cfg.ergm)?)
                }
                DataKind::Sir => {
                    cfg.sir.data_seed = seed;
                    format_observations(&generate_sir_data(&cfg.sir)?)
                }
            };
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&out, text)?;
            println!("wrote {}", out.display());
        }
        Command::Oracle {
            experiment: OracleKind::Ising,
            theta_grid,
            data,
            prior_sd,
            seed,
        } => {
            let mut cfg = ExperimentConfig::from_toml("experiment = \"ising\"\nseed = 0\niterations = [4]\nk = [1]\n")?;
            cfg.ising.data_seed = seed;
            let lattice = match &data {
                Some(path) => read_lattice(path)?.lattice,
                None => generate_ising_data(&cfg.ising)?,
            };
            let post = ising_posterior_mean_grid_with(&lattice, cfg.ising.counting, prior_sd, &theta_grid.0)?;
            let json = serde_json::to_string_pretty(&post).map_err(|e| Error::Config(e.to_string()))?;
            println!("{json}");
            if post.truncated {
                eprintln!("warning: posterior mass reaches the grid ends; widen the grid");
            }
            if post.coarse {
                eprintln!("warning: trapezoid and Simpson means disagree; refine the grid");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
