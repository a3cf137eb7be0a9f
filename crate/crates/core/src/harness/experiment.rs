use std::time::Instant;

use rayon::prelude::*;

use crate::estimators::{estimate, EstimationInput, EstimatorKind};
use crate::models::ModelFamily;
use crate::numerics::{mix_seed, RandomSource, Vector, SEED_MIX_DESCRIPTION};
use crate::preferences::{generate_both, Channel, Dataset};

use super::config::{ExperimentConfig, ThetaStarSpec};
use super::table::{Audits, ResultRow, ResultTable};
use super::HarnessError;

/// Slack allowed in the DP-versus-SO audit.
pub const DOMINANCE_TOL: f64 = 1e-7;
/// Tolerance of the θ* ∈ C_n audit.
pub const FEASIBILITY_TOL: f64 = 1e-12;

pub const SUBSTREAM_DESCRIPTION: &str = "run_seed = mix(base_seed, run_id); theta_star = derive(run_seed, 0); \
data = derive(run_seed, 1); estimator j at checkpoint k = derive(mix(run_seed, 2 + j), k)";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Record wall time per estimator call. Off by default so output is reproducible.
    pub timing: bool,
}

struct RunOutput {
    rows: Vec<ResultRow>,
    failures: Vec<String>,
    audits: Audits,
}

pub fn draw_theta_star(cfg: &ExperimentConfig, run_seed: u64) -> Vector {
    match &cfg.theta_star {
        ThetaStarSpec::Fixed(t) => t.clone(),
        ThetaStarSpec::Uniform { lo, hi } => {
            let mut rng = RandomSource::derive(run_seed, 0);
            Vector::from_fn(cfg.family.dim(), |_, _| rng.uniform_range(*lo, *hi))
        }
    }
}

fn run_one(cfg: &ExperimentConfig, run_id: usize, timing: bool) -> RunOutput {
    let run_seed = mix_seed(cfg.base_seed, run_id as u64);
    let theta_star = draw_theta_star(cfg, run_seed);
    let family = &cfg.family;
    let mut out = RunOutput {
        rows: Vec::with_capacity(cfg.checkpoints.len() * cfg.estimators.len()),
        failures: Vec::new(),
        audits: Audits {
            dominance_max_gap: f64::NEG_INFINITY,
            ..Audits::default()
        },
    };
    let data = generate_both(family, &theta_star, cfg.n_max, &mut RandomSource::derive(run_seed, 1));
    let (det, sto): (Dataset, Dataset) = match data {
        Ok(d) => d,
        Err(e) => {
            for &n in &cfg.checkpoints {
                for spec in &cfg.estimators {
                    out.rows.push(nan_row(run_id, n, spec.kind));
                    out.failures.push(format!("run {run_id}: data generation failed: {e}"));
                }
            }
            return out;
        }
    };
    let audit_dominance = matches!(family, ModelFamily::Gaussian(_));
    let last = cfg.checkpoints.len() - 1;
    for (k, &n) in cfg.checkpoints.iter().enumerate() {
        let det_in = EstimationInput::new(family, det.prefix(n), &cfg.bounds).with_truth(&theta_star);
        let sto_in = EstimationInput::new(family, sto.prefix(n), &cfg.bounds).with_truth(&theta_star);
        let mut so_det = None;
        let mut dp = None;
        for (j, spec) in cfg.estimators.iter().enumerate() {
            let input = match spec.channel {
                Channel::Deterministic => &det_in,
                Channel::Stochastic => &sto_in,
            };
            let mut rng = RandomSource::derive(mix_seed(run_seed, 2 + j as u64), k as u64);
            let start = timing.then(Instant::now);
            let result = estimate(spec.kind, input, &mut rng);
            let wall = start.map_or(0.0, |s| s.elapsed().as_secs_f64());
            let errors = result.map_err(|e| e.to_string()).and_then(|rec| {
                let diff = &rec.theta - &theta_star;
                let err = family.family_norm(&diff).map_err(|e| e.to_string())?;
                Ok((err, diff.norm()))
            });
            match errors {
                Ok((err, l2)) => {
                    if spec.kind == EstimatorKind::So && spec.channel == Channel::Deterministic {
                        so_det = Some(err);
                    }
                    if spec.kind == EstimatorKind::Dp {
                        dp = Some(err);
                    }
                    out.rows.push(ResultRow {
                        run_id,
                        n,
                        estimator: spec.kind.to_string(),
                        error: err,
                        l2_error: Some(l2),
                        wall_seconds: wall,
                    });
                }
                Err(msg) => {
                    out.failures.push(format!("run {run_id}, n {n}, {}: {msg}", spec.kind));
                    let mut row = nan_row(run_id, n, spec.kind);
                    row.wall_seconds = wall;
                    out.rows.push(row);
                }
            }
        }
        if audit_dominance {
            if let (Some(so), Some(dp)) = (so_det, dp) {
                out.audits.dominance_checks += 1;
                out.audits.dominance_max_gap = out.audits.dominance_max_gap.max(dp - so);
                if dp > so + DOMINANCE_TOL {
                    out.audits.dominance_violations += 1;
                }
            }
        }
        if k == last {
            out.audits.feasibility_checks += 1;
            let inside = det_in
                .polytope()
                .ok()
                .and_then(|p| p.contains(&theta_star, FEASIBILITY_TOL).ok())
                .unwrap_or(false);
            if !inside {
                out.audits.feasibility_violations += 1;
            }
        }
    }
    out
}

fn nan_row(run_id: usize, n: usize, kind: EstimatorKind) -> ResultRow {
    ResultRow {
        run_id,
        n,
        estimator: kind.to_string(),
        error: f64::NAN,
        l2_error: None,
        wall_seconds: 0.0,
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    run_experiment_with(cfg, &RunOptions::default())
}

/// Runs every seeded replicate and collects rows in run order. Estimator failures become
/// NaN rows; only thread-pool setup can fail.
pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ResultTable, HarnessError> {
    let work = || -> Vec<RunOutput> {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| run_one(cfg, r, opts.timing))
            .collect()
    };
    let outputs = match opts.jobs {
        None => work(),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
            .install(work),
    };
    let mut table = ResultTable::default();
    let mut audits = Audits {
        dominance_max_gap: f64::NEG_INFINITY,
        ..Audits::default()
    };
    for o in outputs {
        table.rows.extend(o.rows);
        table.failures.extend(o.failures);
        audits.dominance_checks += o.audits.dominance_checks;
        audits.dominance_violations += o.audits.dominance_violations;
        audits.dominance_max_gap = audits.dominance_max_gap.max(o.audits.dominance_max_gap);
        audits.feasibility_checks += o.audits.feasibility_checks;
        audits.feasibility_violations += o.audits.feasibility_violations;
    }
    table.audits = audits;
    table.metadata = vec![
        ("library".into(), format!("prefest {}", env!("CARGO_PKG_VERSION"))),
        ("config".into(), cfg.to_json().to_string()),
        ("seed_mixing".into(), SEED_MIX_DESCRIPTION.into()),
        ("substreams".into(), SUBSTREAM_DESCRIPTION.into()),
        ("error_norm".into(), error_norm_label(&cfg.family).into()),
        (
            "audit_dominance".into(),
            format!("checks={} violations={}", audits.dominance_checks, audits.dominance_violations),
        ),
        (
            "audit_feasibility".into(),
            format!(
                "checks={} violations={}",
                audits.feasibility_checks, audits.feasibility_violations
            ),
        ),
        ("failures".into(), table.failure_count().to_string()),
    ];
    Ok(table)
}

fn error_norm_label(family: &ModelFamily) -> &'static str {
    match family {
        ModelFamily::Gaussian(_) => "sigma",
        _ => "abs",
    }
}
