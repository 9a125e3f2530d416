//! Configuration-driven experiments and their reports.
//!
//! Every replicate runs one chain of the largest configured length with the
//! largest configured `K`. Shorter chains are prefixes of it and smaller
//! `K` use the first `K` of the stored simulations, so every grid cell of
//! a replicate shares one sampling run.

pub mod config;
pub mod report;

use std::time::Instant;

use crate::cv::{
    argmin_r, cost_normalized_ratio, fit_rho_curve, monomial_map, rv_estimate, MonomialVector,
    PolynomialSpec,
};
use crate::error::{Error, Result};
use crate::grf::{
    ergm_gibbs_forward, ising_posterior_mean_grid_with, ErgmModel, ExponentialModel, Graph,
    GridPosterior, GrfModel, IsingExactSampler, IsingLattice, IsingModel, PairCounting,
};
use crate::parallel::{available_workers, derive_seed, rng_from_seed, Executor};
use crate::prior::Prior;
use crate::samplers::{
    exchange_chain, latent_chain, rwm_chain, type1_scores, ChainConfig, ExchangeOptions,
    GaussianWalk, LatentOptions,
};
use crate::score::{score_type1, score_type2};
use crate::sde::{simulate_sir, SdePath, SirParams};
use crate::stats;

pub use config::{
    ErgmSection, ExperimentConfig, ExperimentKind, ExponentialSection, IsingSection,
    KAllocationSection, SirSection,
};
pub use report::{
    Allocation, ExperimentReport, ReportRow, RhoFitEntry, TargetStats, ZeroMeanCheck,
};

/// Relative tolerance on `1/R = 1 − ρ²` before a row is flagged.
const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Master seed of replicate `r`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    derive_seed(derive_seed(seed, 0, 3), r as u64, 0)
}

/// Exact draw of the Ising data at the section's `data_theta`.
pub fn generate_ising_data(section: &IsingSection) -> Result<IsingLattice> {
    let sampler = IsingExactSampler::new(section.data_theta, section.rows, section.cols, section.counting)?;
    Ok(sampler.draw(&mut rng_from_seed(section.data_seed)))
}

/// A graph from a long dyad-toggle Gibbs run at `data_theta`.
pub fn generate_ergm_data(section: &ErgmSection) -> Result<Graph> {
    let n = section.nodes;
    let dyads = n * n.saturating_sub(1) / 2;
    let mut graphs = ergm_gibbs_forward(section.data_theta, n, 1000 * dyads.max(1), 0, 1, section.data_seed)?;
    Ok(graphs.pop().expect("one graph"))
}

/// Euler–Maruyama path on a fine mesh, observed every `data_substeps`
/// steps at `n_obs` equally spaced times in `[0, t_end]`.
pub fn generate_sir_data(section: &SirSection) -> Result<SdePath> {
    if section.n_obs < 2 || section.data_substeps == 0 {
        return Err(Error::invalid("need at least two observations and one substep"));
    }
    let params = SirParams::new(section.data_theta, section.population)?;
    let gap = section.t_end / (section.n_obs - 1) as f64;
    let dt = gap / section.data_substeps as f64;
    simulate_sir(&params, section.x0, section.t_end, dt, section.data_seed)?.subsample(section.data_substeps)
}

/// Grid posterior for the Ising model: a coarse pass over `[-2, 2]`
/// locates the mass, then a fine uniform grid spans `±12` posterior sd.
pub fn ising_oracle(data: &IsingLattice, counting: PairCounting, prior_sd: f64) -> Result<GridPosterior> {
    let lin = |a: f64, b: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    };
    let coarse = ising_posterior_mean_grid_with(data, counting, prior_sd, &lin(-2.0, 2.0, 81))?;
    let half = 12.0 * coarse.sd.max(0.02);
    ising_posterior_mean_grid_with(
        data,
        counting,
        prior_sd,
        &lin(coarse.mean - half, coarse.mean + half, 241),
    )
}

/// Per-iterate simulation output from which `û` is rebuilt for any `K`.
enum Scores {
    /// Forward-simulated statistics: `û = s(y) − mean s(Yₖ) + ∇ log p(θ)`.
    Type1 {
        s_obs: Vec<f64>,
        grad_prior: Vec<Vec<f64>>,
        sims: Vec<Vec<Vec<f64>>>,
    },
    /// Per-draw complete-data scores: `û = mean uₖ`.
    Type2 { draws: Vec<Vec<Vec<f64>>> },
}

struct ReplicateRun {
    thetas: Vec<Vec<f64>>,
    scores: Scores,
    chain_seconds: f64,
    sim_seconds: f64,
    acceptance: f64,
    notes: Vec<String>,
}

impl ReplicateRun {
    fn u_hats(&self, k: usize) -> Result<Vec<Vec<f64>>> {
        self.thetas
            .iter()
            .enumerate()
            .map(|(i, theta)| {
                let est = match &self.scores {
                    Scores::Type1 {
                        s_obs,
                        grad_prior,
                        sims,
                    } => score_type1(theta, s_obs, &sims[i][..k], &grad_prior[i])?,
                    Scores::Type2 { draws } => score_type2(theta, &draws[i][..k])?,
                };
                Ok(est.u_hat)
            })
            .collect()
    }
}

enum Prepared {
    Exponential(ExponentialModel),
    Ising { model: IsingModel, prior: Prior },
    Ergm { model: ErgmModel, prior: Prior },
    Sir { observations: SdePath },
}

fn prepare(config: &ExperimentConfig, notes: &mut Vec<String>) -> Result<(Prepared, Option<GridPosterior>)> {
    Ok(match config.experiment {
        ExperimentKind::Exponential | ExperimentKind::RhoCurve | ExperimentKind::KAllocation => {
            let model = ExponentialModel::new(config.exponential.y)?;
            let y = model.y();
            let oracle = GridPosterior {
                mean: model.posterior_mean(),
                sd: 2f64.sqrt() / y,
                simpson_mean: None,
                coarse: false,
                truncated: false,
            };
            (Prepared::Exponential(model), Some(oracle))
        }
        ExperimentKind::Ising => {
            let s = &config.ising;
            let data = match &s.data {
                Some(path) => {
                    let parsed = crate::grf::io::read_lattice(path)?;
                    if parsed.mapped_binary {
                        notes.push("lattice values 0/1 were mapped to -1/+1".into());
                    }
                    parsed.lattice
                }
                None => generate_ising_data(s)?,
            };
            let oracle = if s.oracle {
                Some(ising_oracle(&data, s.counting, s.prior_sd)?)
            } else {
                None
            };
            let model = IsingModel::new(data, s.counting, s.simulator);
            let prior = Prior::Normal {
                mean: 0.0,
                sd: s.prior_sd,
            };
            (Prepared::Ising { model, prior }, oracle)
        }
        ExperimentKind::Ergm => {
            let s = &config.ergm;
            let data = match &s.data {
                Some(path) => crate::grf::io::read_graph(path, None)?,
                None => generate_ergm_data(s)?,
            };
            let model = ErgmModel::new(data, s.sim)?;
            notes.push(format!("observed statistics {:?}", model.observed_stats()));
            (Prepared::Ergm { model, prior: s.prior }, None)
        }
        ExperimentKind::Sir => {
            let s = &config.sir;
            let observations = match &s.observations {
                Some(path) => crate::sde::io::read_observations(path)?,
                None => generate_sir_data(s)?,
            };
            (Prepared::Sir { observations }, None)
        }
    })
}

fn run_replicate(
    prepared: &Prepared,
    config: &ExperimentConfig,
    seed: u64,
    executor: &Executor,
) -> Result<ReplicateRun> {
    let iterations = config.max_iterations();
    let k = config.max_k();
    let exchange = |model: &dyn GrfModel, prior: &Prior, sd: Vec<f64>, init: Vec<f64>, count: bool| {
        let chain = ChainConfig::new(iterations, sd.clone(), init, seed).with_burn_in(config.burn_in);
        let options = ExchangeOptions {
            score_sims: k,
            count_exchange_draw: count,
        };
        let start = Instant::now();
        let out = exchange_chain(model, prior, &GaussianWalk { sd }, &chain, &options, executor)?;
        let total = start.elapsed().as_secs_f64();
        let grad_prior = out.thetas.iter().map(|t| prior.grad_log_density(t)).collect();
        Ok::<_, Error>(ReplicateRun {
            scores: Scores::Type1 {
                s_obs: model.observed_stats().to_vec(),
                grad_prior,
                sims: out.aux_stats,
            },
            thetas: out.thetas,
            chain_seconds: total / (k + 1) as f64,
            sim_seconds: total * k as f64 / (k + 1) as f64,
            acceptance: out.acceptance_rate,
            notes: out.metadata.notes,
        })
    };
    match prepared {
        Prepared::Exponential(model) => {
            let e = &config.exponential;
            let chain = ChainConfig::new(iterations, vec![e.proposal_sd], vec![e.initial_theta], seed)
                .with_burn_in(config.burn_in);
            let start = Instant::now();
            let out = rwm_chain(|t| model.log_posterior(t[0]), &chain)?;
            let chain_seconds = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let prior = Prior::FlatPositive;
            let (_, sims) = type1_scores(model, &prior, &out.thetas, k, seed, executor)?;
            let sim_seconds = start.elapsed().as_secs_f64();
            Ok(ReplicateRun {
                scores: Scores::Type1 {
                    s_obs: model.observed_stats().to_vec(),
                    grad_prior: out.thetas.iter().map(|t| prior.grad_log_density(t)).collect(),
                    sims,
                },
                thetas: out.thetas,
                chain_seconds,
                sim_seconds,
                acceptance: out.acceptance_rate,
                notes: out.metadata.notes,
            })
        }
        Prepared::Ising { model, prior } => {
            let s = &config.ising;
            exchange(model, prior, vec![s.proposal_sd], vec![s.initial_theta], s.count_exchange_draw)
        }
        Prepared::Ergm { model, prior } => {
            let s = &config.ergm;
            exchange(
                model,
                prior,
                s.proposal_sd.to_vec(),
                s.initial_theta.to_vec(),
                s.count_exchange_draw,
            )
        }
        Prepared::Sir { observations } => {
            let s = &config.sir;
            let chain = ChainConfig::new(iterations, s.proposal_sd.to_vec(), s.initial_theta.to_vec(), seed)
                .with_burn_in(config.burn_in);
            let options = LatentOptions {
                score_draws: k,
                inner_burn_in: s.inner_burn_in,
                path_sweeps: s.path_sweeps,
            };
            let start = Instant::now();
            let out = latent_chain(
                observations,
                s.population,
                s.latent_per_gap,
                &s.prior,
                &chain,
                &options,
                executor,
            )?;
            let total = start.elapsed().as_secs_f64();
            Ok(ReplicateRun {
                scores: Scores::Type2 {
                    draws: out.aux_stats,
                },
                thetas: out.thetas,
                chain_seconds: total / (k + 1) as f64,
                sim_seconds: total * k as f64 / (k + 1) as f64,
                acceptance: out.acceptance_rate,
                notes: out.metadata.notes,
            })
        }
    }
}

/// Per-replicate estimates for one target in one grid cell.
#[derive(Debug, Clone, Copy)]
struct CellEstimate {
    mu_unc: f64,
    mu_ctrl: f64,
    naive_unc: f64,
    naive_ctrl: f64,
    bm_unc: f64,
    bm_ctrl: f64,
    inv_r: f64,
    rho: f64,
    perfect: bool,
}

struct Cell {
    /// `estimates[target]` over replicates.
    estimates: Vec<Vec<CellEstimate>>,
    cv_seconds: f64,
    flags: Vec<String>,
}

fn mean_with_se(xs: &[f64]) -> (f64, f64) {
    match xs.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (xs[0], f64::NAN),
        _ => (stats::mean(xs), stats::naive_se(xs)),
    }
}

fn spread(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        f64::NAN
    } else {
        stats::variance(xs).sqrt()
    }
}

fn summarise(target: String, est: &[CellEstimate], iterations: usize, k: usize) -> TargetStats {
    let pick = |f: fn(&CellEstimate) -> f64| -> Vec<f64> { est.iter().map(f).collect() };
    let mean_or_nan = |xs: &[f64]| if xs.is_empty() { f64::NAN } else { stats::mean(xs) };
    let unc = pick(|e| e.mu_unc);
    let ctrl = pick(|e| e.mu_ctrl);
    let (std_unc, std_unc_se) = mean_with_se(&pick(|e| e.naive_unc));
    let (std_ctrl, std_ctrl_se) = mean_with_se(&pick(|e| e.naive_ctrl));
    let inv_r = mean_or_nan(&pick(|e| e.inv_r));
    let rho_sq = mean_or_nan(&pick(|e| e.rho * e.rho));
    let sign = mean_or_nan(&pick(|e| e.rho)).signum();
    let (spread_unc, spread_ctrl) = (spread(&unc), spread(&ctrl));
    TargetStats {
        target,
        mu_uncontrolled: mean_or_nan(&unc),
        mu_controlled: mean_or_nan(&ctrl),
        std_uncontrolled: std_unc,
        std_uncontrolled_se: std_unc_se,
        std_controlled: std_ctrl,
        std_controlled_se: std_ctrl_se,
        sqrt_ik_std: ((iterations * k) as f64).sqrt() * std_ctrl,
        bm_se_uncontrolled: mean_or_nan(&pick(|e| e.bm_unc)),
        bm_se_controlled: mean_or_nan(&pick(|e| e.bm_ctrl)),
        spread_uncontrolled: spread_unc,
        spread_controlled: spread_ctrl,
        r: 1.0 / inv_r,
        rho: sign * rho_sq.sqrt(),
        r_between: (spread_unc / spread_ctrl).powi(2),
        perfect: est.iter().any(|e| e.perfect),
    }
}

/// Runs the experiment with the configured worker count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let workers = config.cores.unwrap_or_else(available_workers);
    run_experiment_on(config, &Executor::new(workers)?)
}

pub fn run_experiment_on(config: &ExperimentConfig, executor: &Executor) -> Result<ExperimentReport> {
    config.validate()?;
    let mut notes = Vec::new();
    let (prepared, oracle) = prepare(config, &mut notes)?;

    let i_grid = &config.iterations;
    let k_grid = &config.k;
    let degrees = &config.degrees;
    let i_max = config.max_iterations();
    let k_max = config.max_k();
    let mut cells: Vec<Cell> = (0..i_grid.len() * k_grid.len() * degrees.len())
        .map(|_| Cell {
            estimates: Vec::new(),
            cv_seconds: 0.0,
            flags: Vec::new(),
        })
        .collect();
    let cell_index = |ii: usize, ki: usize, di: usize| (ii * k_grid.len() + ki) * degrees.len() + di;
    let mut runtime_base = vec![0.0; i_grid.len() * k_grid.len()];
    let mut zero_mean = Vec::new();
    let mut acceptance_rates = Vec::with_capacity(config.replicates);
    let mut sampling_seconds = 0.0;
    let mut dim = 0;

    for r in 0..config.replicates {
        let run = run_replicate(&prepared, config, replicate_seed(config.seed, r), executor)?;
        dim = run.thetas[0].len();
        sampling_seconds += run.chain_seconds + run.sim_seconds;
        acceptance_rates.push(run.acceptance);
        notes.extend(run.notes.iter().map(|n| format!("replicate {r}: {n}")));
        for (ii, &i) in i_grid.iter().enumerate() {
            for (ki, &k) in k_grid.iter().enumerate() {
                runtime_base[ii * k_grid.len() + ki] += run.chain_seconds * i as f64 / i_max as f64
                    + run.sim_seconds * (i * k) as f64 / (i_max * k_max) as f64;
            }
        }
        for (ki, &k) in k_grid.iter().enumerate() {
            let u_hats = run.u_hats(k)?;
            for (di, &degree) in degrees.iter().enumerate() {
                let spec = PolynomialSpec::new(dim, degree)?;
                let ms: Vec<MonomialVector> = run
                    .thetas
                    .iter()
                    .zip(&u_hats)
                    .map(|(t, u)| monomial_map(t, u, &spec))
                    .collect::<Result<_>>()?;
                if r == 0 && k == k_max {
                    for (c, label) in spec.labels().into_iter().enumerate() {
                        let values: Vec<f64> = ms.iter().map(|m| m.values()[c]).collect();
                        zero_mean.push(ZeroMeanCheck {
                            degree,
                            k,
                            component: label,
                            mean: stats::mean(&values),
                            se: stats::batch_means_se(&values),
                        });
                    }
                }
                for (ii, &i) in i_grid.iter().enumerate() {
                    let start = Instant::now();
                    let cell = &mut cells[cell_index(ii, ki, di)];
                    if cell.estimates.is_empty() {
                        cell.estimates = vec![Vec::new(); dim];
                    }
                    for j in 0..dim {
                        let g: Vec<f64> = run.thetas[..i].iter().map(|t| t[j]).collect();
                        match rv_estimate(&g, &ms[..i], &config.cv) {
                            Ok(est) => {
                                let d = &est.diagnostics;
                                let inv_r = if d.perfect { 0.0 } else { 1.0 / d.r };
                                if (inv_r - (1.0 - d.rho * d.rho)).abs() > IDENTITY_TOLERANCE * inv_r.max(1e-300)
                                    && !d.perfect
                                {
                                    cell.flags.push(format!("replicate {r} target {j}: 1/R != 1-rho^2"));
                                }
                                let g_eval = &g[g.len() - est.controlled.len()..];
                                cell.estimates[j].push(CellEstimate {
                                    mu_unc: est.mu_uncontrolled,
                                    mu_ctrl: est.mu_controlled,
                                    naive_unc: stats::naive_se(g_eval),
                                    naive_ctrl: stats::naive_se(&est.controlled),
                                    bm_unc: stats::batch_means_se(g_eval),
                                    bm_ctrl: stats::batch_means_se(&est.controlled),
                                    inv_r,
                                    rho: d.rho,
                                    perfect: d.perfect,
                                });
                            }
                            Err(e) => cell.flags.push(format!("replicate {r} target {j}: {e}")),
                        }
                    }
                    cell.cv_seconds += start.elapsed().as_secs_f64();
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(cells.len());
    for (ii, &i) in i_grid.iter().enumerate() {
        for (ki, &k) in k_grid.iter().enumerate() {
            for (di, &degree) in degrees.iter().enumerate() {
                let cell = &cells[cell_index(ii, ki, di)];
                let targets: Vec<TargetStats> = cell
                    .estimates
                    .iter()
                    .enumerate()
                    .map(|(j, est)| summarise(format!("theta{}", j + 1), est, i, k))
                    .collect();
                let mut flags = cell.flags.clone();
                if config.replicates < 2 {
                    flags.push("single-replicate".into());
                }
                if targets.iter().any(|t| t.perfect) {
                    flags.push("zero-variance".into());
                }
                rows.push(ReportRow {
                    iterations: i,
                    k,
                    degree,
                    targets,
                    runtime_s: runtime_base[ii * k_grid.len() + ki] + cell.cv_seconds,
                    flags,
                });
            }
        }
    }

    let rho_fits = fit_rho_curves(&rows, k_grid, degrees, i_max, dim, &mut notes);
    let allocations = if config.experiment == ExperimentKind::KAllocation {
        let fit = rho_fits
            .first()
            .ok_or_else(|| Error::Config("no rho curve could be fitted for the allocation".into()))?;
        allocate(&config.k_allocation, fit)?
    } else {
        Vec::new()
    };

    Ok(ExperimentReport {
        experiment: config.experiment,
        seed: config.seed,
        replicates: config.replicates,
        workers: executor.workers(),
        rows,
        rho_fits,
        allocations,
        zero_mean,
        oracle,
        acceptance_rates,
        notes,
        sampling_seconds,
    })
}

/// Fits the `ρ(K)` law per degree and target at the longest chain when the
/// grid has at least two distinct `K`.
fn fit_rho_curves(
    rows: &[ReportRow],
    k_grid: &[usize],
    degrees: &[u8],
    i_max: usize,
    dim: usize,
    notes: &mut Vec<String>,
) -> Vec<RhoFitEntry> {
    let mut distinct = k_grid.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Vec::new();
    }
    let mut fits = Vec::new();
    for &degree in degrees {
        for j in 0..dim {
            let mut ks = Vec::new();
            let mut rhos = Vec::new();
            for row in rows.iter().filter(|r| r.iterations == i_max && r.degree == degree) {
                if let Some(t) = row.targets.get(j) {
                    ks.push(row.k);
                    rhos.push(t.rho.abs());
                }
            }
            match fit_rho_curve(&ks, &rhos) {
                Ok(fit) => fits.push(RhoFitEntry {
                    degree,
                    target: format!("theta{}", j + 1),
                    iterations: i_max,
                    rho1_ratio: fit.rho(1.0) / fit.rho_inf,
                    k: ks,
                    rho: rhos,
                    fit,
                }),
                Err(e) => notes.push(format!("rho curve for degree {degree}, theta{}: {e}", j + 1)),
            }
        }
    }
    fits
}

fn allocate(section: &KAllocationSection, fit: &RhoFitEntry) -> Result<Vec<Allocation>> {
    section
        .cores
        .iter()
        .map(|&k0| {
            let k_max = section.k_max_factor * k0;
            let (rho_inf, c) = (fit.fit.rho_inf, fit.fit.c);
            let ratios = (1..=k_max)
                .map(|k| cost_normalized_ratio(k, k0, section.budget, rho_inf, c))
                .collect::<Result<Vec<_>>>()?;
            Ok(Allocation {
                cores: k0,
                k_max,
                argmin: argmin_r(k_max, k0, section.budget, rho_inf, c)?,
                ratios,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: &str, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            "experiment = \"{kind}\"\nseed = 9\nreplicates = 3\niterations = [200, 400]\nk = [1, 5]\ndegrees = [1, 2]\nburn_in = 100\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn exponential_report_shape_and_identity() {
        let report = run_experiment_on(&small("exponential", ""), &Executor::serial()).unwrap();
        assert_eq!(report.rows.len(), 2 * 2 * 2);
        for row in &report.rows {
            assert!(row.flags.is_empty(), "{:?}", row.flags);
            let t = &row.targets[0];
            assert!((1.0 / t.r - (1.0 - t.rho * t.rho)).abs() < 1e-10);
            assert!(t.std_controlled.is_finite() && t.std_uncontrolled.is_finite());
            assert!(t.spread_controlled.is_finite() && t.std_controlled_se.is_finite());
        }
        assert_eq!(report.zero_mean.len(), 1 + 2);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + report.rows.len());
        assert!(csv.starts_with("experiment,i,k,degree,mu_uncontrolled_theta1"));
        assert_eq!(report.rho_fits.len(), 2);
    }

    #[test]
    fn prefix_rows_match_a_direct_run() {
        let full = run_experiment_on(&small("exponential", ""), &Executor::serial()).unwrap();
        let mut direct = small("exponential", "");
        direct.iterations = vec![400];
        direct.k = vec![5];
        direct.degrees = vec![2];
        let single = run_experiment_on(&direct, &Executor::new(3).unwrap()).unwrap();
        assert_eq!(full.row(400, 5, 2).unwrap().targets, single.rows[0].targets);
        let parallel = run_experiment_on(&small("exponential", ""), &Executor::new(4).unwrap()).unwrap();
        assert_eq!(full.fingerprint(), parallel.fingerprint());
    }

    #[test]
    fn k_allocation_reports_argmin() {
        let cfg = small("k-allocation", "[k_allocation]\ncores = [1, 2, 4]\n");
        let report = run_experiment_on(&cfg, &Executor::serial()).unwrap();
        assert_eq!(report.allocations.len(), 3);
        for a in &report.allocations {
            assert_eq!(a.argmin, a.cores);
            assert_eq!(a.ratios.len(), a.k_max);
        }
    }

    #[test]
    fn small_ising_and_ergm_and_sir_run() {
        let mut ising = small("ising", "[ising]\nrows = 4\ncols = 4\nproposal_sd = 0.2\n");
        ising.replicates = 1;
        let report = run_experiment_on(&ising, &Executor::serial()).unwrap();
        assert!(report.oracle.is_some());
        assert!(report.rows.iter().all(|r| r.flags.contains(&"single-replicate".to_string())));

        let mut ergm = small("ergm", "[ergm]\nnodes = 6\nsim = { burn_in = 100, lag = 50 }\n");
        ergm.replicates = 1;
        let report = run_experiment_on(&ergm, &Executor::serial()).unwrap();
        assert_eq!(report.rows[0].targets.len(), 2);

        let mut sir = small("sir", "[sir]\nn_obs = 4\nt_end = 12.0\nlatent_per_gap = 2\ninner_burn_in = 5\n");
        sir.replicates = 1;
        sir.iterations = vec![50];
        sir.burn_in = 20;
        let report = run_experiment_on(&sir, &Executor::serial()).unwrap();
        assert_eq!(report.rows.len(), 2 * 2);
    }
}
