//! Experiment reports: one CSV table plus a JSON summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentKind;
use crate::cv::RhoCurveFit;
use crate::error::{Error, Result};
use crate::grf::GridPosterior;

/// Estimator summary for one target `g(θ) = θⱼ` within a report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetStats {
    pub target: String,
    /// Replicate mean of the uncontrolled chain average.
    pub mu_uncontrolled: f64,
    pub mu_controlled: f64,
    /// `std[μ̂]`: the naive standard error `sd/√I` of each chain average,
    /// averaged over replicates, with the standard error of that average.
    pub std_uncontrolled: f64,
    pub std_uncontrolled_se: f64,
    pub std_controlled: f64,
    pub std_controlled_se: f64,
    /// `√(IK) · std[μ̂]` for the controlled estimator.
    pub sqrt_ik_std: f64,
    /// Replicate mean of the batch-means standard error, which accounts
    /// for autocorrelation along the chain.
    pub bm_se_uncontrolled: f64,
    pub bm_se_controlled: f64,
    /// Standard deviation of `μ̂` across replicates.
    pub spread_uncontrolled: f64,
    pub spread_controlled: f64,
    /// Within-chain variance reduction `1 / mean(1 − ρ²)` over replicates.
    pub r: f64,
    /// Signed root of the replicate mean of `ρ²`.
    pub rho: f64,
    /// `(spread_uncontrolled / spread_controlled)²`.
    pub r_between: f64,
    /// Some replicate reached numerically zero controlled variance.
    pub perfect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub iterations: usize,
    pub k: usize,
    pub degree: u8,
    pub targets: Vec<TargetStats>,
    /// Wall time attributed to this row: the share of sampling time for a
    /// chain of length `I` with `K` simulations plus the estimation time.
    pub runtime_s: f64,
    pub flags: Vec<String>,
}

/// Chain average of one monomial component; each has posterior mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroMeanCheck {
    pub degree: u8,
    pub k: usize,
    pub component: String,
    pub mean: f64,
    pub se: f64,
}

impl ZeroMeanCheck {
    pub fn within(&self, n_se: f64) -> bool {
        self.mean.abs() <= n_se * self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoFitEntry {
    pub degree: u8,
    pub target: String,
    pub iterations: usize,
    pub k: Vec<usize>,
    pub rho: Vec<f64>,
    pub fit: RhoCurveFit,
    /// `ρ(1) / ρ∞` on the fitted curve.
    pub rho1_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub cores: usize,
    pub k_max: usize,
    pub argmin: usize,
    /// `r(K)` for `K = 1..=k_max`.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub replicates: usize,
    pub workers: usize,
    pub rows: Vec<ReportRow>,
    pub rho_fits: Vec<RhoFitEntry>,
    pub allocations: Vec<Allocation>,
    pub zero_mean: Vec<ZeroMeanCheck>,
    /// Exact posterior summary where one is available.
    pub oracle: Option<GridPosterior>,
    pub acceptance_rates: Vec<f64>,
    pub notes: Vec<String>,
    pub sampling_seconds: f64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else {
        v.to_string()
    }
}

impl ExperimentReport {
    pub fn row(&self, iterations: usize, k: usize, degree: u8) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.iterations == iterations && r.k == k && r.degree == degree)
    }

    /// Hash of every result except wall-clock timings and the worker
    /// count; equal across runs that are numerically identical.
    pub fn fingerprint(&self) -> u64 {
        let mut copy = self.clone();
        copy.workers = 0;
        copy.sampling_seconds = 0.0;
        copy.rows.iter_mut().for_each(|r| r.runtime_s = 0.0);
        let json = serde_json::to_vec(&copy).expect("report serialises");
        fnv1a(&json)
    }

    /// One row per `(I, K, degree)` with per-target column groups.
    pub fn to_csv(&self) -> String {
        let targets: Vec<&str> = self
            .rows
            .first()
            .map(|r| r.targets.iter().map(|t| t.target.as_str()).collect())
            .unwrap_or_default();
        let fields = [
            "mu_uncontrolled",
            "mu_controlled",
            "std_uncontrolled",
            "std_uncontrolled_se",
            "std_controlled",
            "std_controlled_se",
            "sqrt_ik_std",
            "bm_se_uncontrolled",
            "bm_se_controlled",
            "spread_uncontrolled",
            "spread_controlled",
            "r",
            "rho",
            "r_between",
        ];
        let mut header = vec!["experiment".to_string(), "i".into(), "k".into(), "degree".into()];
        for t in &targets {
            header.extend(fields.iter().map(|f| format!("{f}_{t}")));
        }
        header.extend(["runtime_s".to_string(), "flags".into()]);
        let mut out = header.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![
                self.experiment.name().to_string(),
                row.iterations.to_string(),
                row.k.to_string(),
                row.degree.to_string(),
            ];
            for t in &row.targets {
                cells.extend(
                    [
                        t.mu_uncontrolled,
                        t.mu_controlled,
                        t.std_uncontrolled,
                        t.std_uncontrolled_se,
                        t.std_controlled,
                        t.std_controlled_se,
                        t.sqrt_ik_std,
                        t.bm_se_uncontrolled,
                        t.bm_se_controlled,
                        t.spread_uncontrolled,
                        t.spread_controlled,
                        t.r,
                        t.rho,
                        t.r_between,
                    ]
                    .map(cell),
                );
            }
            cells.push(format!("{:.3}", row.runtime_s));
            cells.push(row.flags.join(";"));
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        value["fingerprint"] = serde_json::Value::String(format!("{:016x}", self.fingerprint()));
        serde_json::to_string_pretty(&value).map_err(|e| Error::Config(e.to_string()))
    }

    /// Writes `table.csv` and `summary.json` into `dir`, creating it if
    /// needed, and returns the two paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let table = dir.join("table.csv");
        let summary = dir.join("summary.json");
        std::fs::write(&table, self.to_csv())?;
        std::fs::write(&summary, self.to_json()?)?;
        Ok((table, summary))
    }
}
