//! Verification suites, inequality traces and exponent scans.

mod scan;
mod suites;
mod trace;

use std::time::Duration;

use serde::Serialize;

pub use scan::{
    abc_quality, exponent_scan, fit_slope, theorem2_corpus, AbcRow, CorpusSummary, ScanRecord,
    Thm2Instance,
};
pub use suites::{gcd_sum_sides, run_suite, SuiteName, SuiteParams, SUITE_NAMES};
pub use trace::{iteration_trace, MRow, RRow, TraceReport, TraceSummary, URow};

/// One evaluated instance of a suite property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub inputs: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Outcome of [`run_suite`]. `runtime` is not serialized so that reports
/// from identical runs are byte-identical.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: u64,
    pub seed: u64,
    pub threshold: f64,
    pub max_ratio: f64,
    pub pass: bool,
    pub skipped: u64,
    pub records: Vec<TrialRecord>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl SuiteReport {
    fn assemble(
        suite: SuiteName,
        params: &SuiteParams,
        threshold: f64,
        mut records: Vec<TrialRecord>,
        skipped: u64,
        runtime: Duration,
    ) -> Self {
        records.sort_by_key(|r| r.trial);
        let max_ratio = records.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
        let pass = records.iter().all(|r| r.ratio <= threshold);
        SuiteReport {
            suite: suite.as_str().to_string(),
            trials: params.trials,
            seed: params.seed,
            threshold,
            max_ratio,
            pass,
            skipped,
            records,
            runtime,
        }
    }
}
