//! Seeded Monte Carlo experiments: configuration, parallel execution, result tables,
//! aggregation and log-log rate fits.

mod config;
mod experiment;
mod table;

use thiserror::Error;

pub use config::{
    geometric_checkpoints, EstimatorSpec, ExperimentConfig, ThetaStarSpec, DEFAULT_CHECKPOINTS, MIN_N,
};
pub use experiment::{
    draw_theta_star, run_experiment, run_experiment_with, RunOptions, DOMINANCE_TOL, FEASIBILITY_TOL,
    SUBSTREAM_DESCRIPTION,
};
pub use table::{
    aggregate, fit_rate, write_summary_csv, Audits, ResultRow, ResultTable, SummaryRow, CSV_HEADER,
    MIN_FIT_POINTS, SUMMARY_HEADER,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("malformed result table: {0}")]
    Table(String),
    #[error("need at least {needed} checkpoints in the tail window, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("estimator {0:?} does not appear in the table")]
    UnknownEstimator(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ResultTable {
    /// Writes `<out>`, `<out>.summary.csv` and, when `with_l2`, `<out>.l2.csv`.
    pub fn write_files(&self, out: &std::path::Path, with_l2: bool) -> Result<Vec<std::path::PathBuf>, HarnessError> {
        let sibling = |suffix: &str| {
            let mut s = out.as_os_str().to_owned();
            s.push(suffix);
            std::path::PathBuf::from(s)
        };
        let io = |path: &std::path::Path| {
            let p = path.display().to_string();
            move |source| HarnessError::Io { path: p, source }
        };
        let mut written = Vec::new();
        let mut emit = |path: std::path::PathBuf, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| {
            let mut buf = Vec::new();
            f(&mut buf).map_err(io(&path))?;
            std::fs::write(&path, buf).map_err(io(&path))?;
            written.push(path);
            Ok::<(), HarnessError>(())
        };
        emit(out.to_path_buf(), &|b| self.write_csv(b))?;
        let summary = aggregate(self);
        emit(sibling(".summary.csv"), &|b| write_summary_csv(&summary, b))?;
        if with_l2 {
            emit(sibling(".l2.csv"), &|b| self.write_l2_csv(b))?;
        }
        Ok(written)
    }
}
