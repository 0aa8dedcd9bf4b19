//! Statistical and deterministic checks of the structural results: the
//! invariance construction, the cutoff bounds, alternating-moment freeness,
//! moment predictions, and Gaussian propagation of hidden units.

mod cutoff;
mod gaussian;
mod invariance;
mod prediction;
mod words;

pub use cutoff::{cutoff_orthogonal_approx, cutoff_trace_check, cutoff_projection, OrthogonalApprox, TraceCutoff};
pub use gaussian::{gaussian_propagation_test, KS_THRESHOLD};
pub use invariance::{
    build_invariance, invariance_statistical_test, InvarianceArtifacts, InvarianceMode, PROBE_NAMES,
};
pub use prediction::{
    freeness_moment_prediction_test, MomentRow, PredictionOutcome, PredictionTarget, MAX_PREDICTION_ORDER,
    RELATIVE_TOLERANCE,
};
pub use words::{alternating_freeness_test, Letter, Word, CONTROL_FLOOR, FREENESS_TOLERANCE};

use serde::{Deserialize, Serialize};

/// Reported standard errors never drop below this.
pub const SE_FLOOR: f64 = 1e-300;

/// One compared quantity of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub n: usize,
    pub statistic: f64,
    pub standard_error: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(label: impl Into<String>, n: usize, statistic: f64, standard_error: f64, threshold: f64, pass: bool) -> Self {
        ReportRow {
            label: label.into(),
            n,
            statistic,
            standard_error: standard_error.max(SE_FLOOR),
            threshold,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreenessReport {
    pub test_name: String,
    pub n_values: Vec<usize>,
    pub words: Vec<String>,
    pub trials: usize,
    pub rows: Vec<ReportRow>,
    /// Human-readable reasons for failure, empty when `pass`.
    pub failures: Vec<String>,
    pub pass: bool,
}

impl FreenessReport {
    pub fn new(test_name: impl Into<String>, n_values: Vec<usize>, words: Vec<String>, trials: usize) -> Self {
        FreenessReport {
            test_name: test_name.into(),
            n_values,
            words,
            trials,
            rows: Vec::new(),
            failures: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    /// Records a failed condition; the report no longer passes.
    pub fn fail(&mut self, reason: impl Into<String>) {
        self.failures.push(reason.into());
        self.pass = false;
    }

    pub fn rows_for<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.label == label)
    }
}
