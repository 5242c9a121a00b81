//! Classification metrics, the replicated cross-validation protocol, and
//! cohort statistics.

mod metrics;
mod protocol;
mod stats;

use thiserror::Error;

pub use metrics::{confusion, f_beta, metrics, ConfusionMatrix, MetricName, Metrics, MetricsRow};
pub use protocol::{
    average_difference, average_metric, cross_validate, make_testing_sets, run_protocol, Bnc,
    EvalParams, Knn, Lda, ModelKind, SetResults, TestingSet, WeeklyClassifier, WeeklyResult,
};
pub use stats::{
    descriptive_stats, pearson, AttendanceCorrelation, DescriptiveReport, ATTENDANCE_THRESHOLD,
};

use crate::baselines::BaselineError;
use crate::course::CourseError;
use crate::record::RecordError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("student `{0}` is missing on one side")]
    IdMismatch(String),
    #[error("cohort of {size} is smaller than {folds} folds")]
    CohortTooSmall { size: usize, folds: usize },
    #[error("need at least two folds, got {0}")]
    TooFewFolds(usize),
    #[error("cohort has only one outcome class")]
    SingleClass,
    #[error("cohort has {cohort} students but the testing set assigns {set}")]
    CohortSetMismatch { cohort: usize, set: usize },
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("the two result sets share no testing set")]
    NoCommonSets,
    #[error("unknown model `{0}` (expected bnc, knn or lda)")]
    UnknownModel(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error(transparent)]
    Course(#[from] CourseError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Record(#[from] RecordError),
}
