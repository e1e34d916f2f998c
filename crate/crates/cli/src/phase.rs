//! Monte-Carlo phase runs: sample the prior, run an estimator, aggregate.

use std::fmt::Write as _;

use ldgap_core::estimators::{
    bikmeans, cluster_project_hc, exact_kmeans, lloyd_multi, sparse_exhaustive_it, sparse_two_step, BiMode,
    EstimatorConfig, LowDimBackend,
};
use ldgap_core::ldbounds::threshold_point;
use ldgap_core::metrics::{clustering_error, separation_of};
use ldgap_core::model::sample_prior;
use ldgap_core::rng::{derive_seed, trial_seed};
use ldgap_core::{ModelKind, PartitionPair, Result as CoreResult};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{EstimatorName, ExperimentConfig, GridPoint, OutputFormat};
use crate::error::HarnessResult;

pub const SCHEMA_LINE: &str = "#schema=1";
pub const CSV_HEADER: &str = "model,n,p,K,L,s,delta2_target,delta2_realized_mean,estimator,trials,mean_err,std_err,exact_recovery_rate,comp_threshold,stat_threshold,seed";

/// One aggregated grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub model: ModelKind,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub l: usize,
    pub s: usize,
    pub delta2_target: f64,
    pub delta2_realized_mean: f64,
    pub estimator: EstimatorName,
    pub trials: usize,
    pub mean_err: f64,
    pub std_err: f64,
    pub exact_recovery_rate: f64,
    pub comp_threshold: f64,
    pub stat_threshold: f64,
    pub seed: u64,
}

/// A row plus the error that voided its statistics, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRecord {
    pub point: usize,
    pub row: ResultRow,
    pub error: Option<String>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        [
            self.model.name().to_string(),
            self.n.to_string(),
            self.p.to_string(),
            self.k.to_string(),
            self.l.to_string(),
            self.s.to_string(),
            real(self.delta2_target),
            real(self.delta2_realized_mean),
            self.estimator.name().to_string(),
            self.trials.to_string(),
            real(self.mean_err),
            real(self.std_err),
            real(self.exact_recovery_rate),
            real(self.comp_threshold),
            real(self.stat_threshold),
            self.seed.to_string(),
        ]
        .join(",")
    }

    pub fn to_json(&self) -> Value {
        let num = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
        json!({
            "model": self.model.name(),
            "n": self.n,
            "p": self.p,
            "K": self.k,
            "L": self.l,
            "s": self.s,
            "delta2_target": num(self.delta2_target),
            "delta2_realized_mean": num(self.delta2_realized_mean),
            "estimator": self.estimator.name(),
            "trials": self.trials,
            "mean_err": num(self.mean_err),
            "std_err": num(self.std_err),
            "exact_recovery_rate": num(self.exact_recovery_rate),
            "comp_threshold": num(self.comp_threshold),
            "stat_threshold": num(self.stat_threshold),
            "seed": self.seed,
        })
    }
}

struct TrialOutcome {
    err: f64,
    exact: bool,
    realized: Option<f64>,
}

fn estimate(
    cfg: &ExperimentConfig,
    point: &GridPoint,
    y: &ldgap_core::DMatrix<f64>,
    seed: u64,
) -> CoreResult<PartitionPair> {
    let spec = &point.spec;
    let k = spec.refined_k();
    let l = spec.refined_l().unwrap_or(2);
    let budget = cfg.budget.unwrap_or(point.s).min(spec.p);
    let mut ec = EstimatorConfig::new(k)
        .with_seed(derive_seed(seed, 1))
        .with_backend(cfg.backend)
        .with_sigma2(spec.sigma2)
        .with_s(budget)
        .with_l(l);
    ec.exhaustive_guard = cfg.guard;
    let restarts = match cfg.backend {
        LowDimBackend::LloydMulti { restarts } => restarts,
        LowDimBackend::SingleLinkage => 5,
    };
    match cfg.estimator {
        EstimatorName::ExactKmeans => exact_kmeans(y, k, cfg.guard),
        EstimatorName::Lloyd => lloyd_multi(y, k, restarts, ec.split_seed),
        EstimatorName::ProjectHc => cluster_project_hc(y, k, &ec),
        EstimatorName::SparseTwoStep => sparse_two_step(y, k, &ec).map(|r| r.0),
        EstimatorName::SparseExhaustive => sparse_exhaustive_it(y, k, &ec).map(|r| r.partition),
        EstimatorName::BikmeansExhaustive => bikmeans(y, k, l, BiMode::Exhaustive, &ec).map(|r| r.partition),
        EstimatorName::BikmeansAlternating => {
            bikmeans(y, k, l, BiMode::Alternating { restarts }, &ec).map(|r| r.partition)
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, point: &GridPoint, seed: u64) -> CoreResult<TrialOutcome> {
    let spec = &point.spec;
    let (_, obs, truth) = sample_prior(spec, seed)?;
    let got = estimate(cfg, point, &obs.y, seed)?;
    let kk = got.rows.k().max(truth.rows.k());
    let err = clustering_error(&got.rows.padded(kk), &truth.rows.padded(kk))?;
    let mut exact = err == 0.0;
    if let (Some(gc), Some(tc)) = (&got.cols, &truth.cols) {
        let ll = gc.k().max(tc.k());
        exact &= clustering_error(&gc.padded(ll), &tc.padded(ll))? == 0.0;
    }
    let realized = separation_of(&obs.x, &truth.rows, spec.sigma2).ok();
    Ok(TrialOutcome { err, exact, realized })
}

fn aggregate(cfg: &ExperimentConfig, point: &GridPoint, outcomes: Vec<CoreResult<TrialOutcome>>) -> PhaseRecord {
    let spec = &point.spec;
    let th = threshold_point(spec);
    let mut row = ResultRow {
        model: spec.kind,
        n: spec.n,
        p: spec.p,
        k: spec.k,
        l: spec.l,
        s: point.s,
        delta2_target: point.delta2,
        delta2_realized_mean: f64::NAN,
        estimator: cfg.estimator,
        trials: cfg.trials,
        mean_err: f64::NAN,
        std_err: f64::NAN,
        exact_recovery_rate: f64::NAN,
        comp_threshold: th.computational,
        stat_threshold: th.statistical,
        seed: cfg.seed,
    };
    let mut ok = Vec::with_capacity(outcomes.len());
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => ok.push(v),
            Err(e) => {
                return PhaseRecord {
                    point: point.index,
                    row,
                    error: Some(format!("trial {t}: {e}")),
                }
            }
        }
    }
    let m = ok.len() as f64;
    let mean = ok.iter().map(|o| o.err).sum::<f64>() / m;
    let var = if ok.len() > 1 {
        ok.iter().map(|o| (o.err - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let realized: Vec<f64> = ok.iter().filter_map(|o| o.realized).collect();
    row.mean_err = mean;
    row.std_err = (var / m).sqrt();
    row.exact_recovery_rate = ok.iter().filter(|o| o.exact).count() as f64 / m;
    if !realized.is_empty() {
        row.delta2_realized_mean = realized.iter().sum::<f64>() / realized.len() as f64;
    }
    PhaseRecord {
        point: point.index,
        row,
        error: None,
    }
}

/// Runs every grid point; trials of a point run in parallel and are reduced
/// in trial order, so the output depends only on the config and seed.
pub fn run_phase(cfg: &ExperimentConfig) -> HarnessResult<Vec<PhaseRecord>> {
    let grid = cfg.grid()?;
    Ok(grid
        .iter()
        .map(|point| {
            let outcomes: Vec<_> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(cfg, point, trial_seed(cfg.seed, point.index as u64, t as u64)))
                .collect();
            aggregate(cfg, point, outcomes)
        })
        .collect())
}

pub fn render_csv(records: &[PhaseRecord]) -> String {
    let mut out = String::new();
    out.push_str(SCHEMA_LINE);
    out.push('\n');
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        if let Some(e) = &r.error {
            let _ = writeln!(out, "# error point={}: {}", r.point, e.replace('\n', " "));
        }
        out.push_str(&r.row.csv_line());
        out.push('\n');
    }
    out
}

pub fn render_json_lines(records: &[PhaseRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let mut v = r.row.to_json();
        if let Some(e) = &r.error {
            v["error"] = json!(e);
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

pub fn render(records: &[PhaseRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(records),
        OutputFormat::JsonLines => render_json_lines(records),
    }
}
