//! Comparison classifiers working on numeric encodings of the same weekly
//! predictors the Bayesian network sees.

mod features;
mod knn;
mod lda;

use thiserror::Error;

pub use features::{encode_features, FeatureVector, MinMaxScaler};
pub use knn::{knn_classify, Distance};
pub use lda::{lda_classify, lda_fit, LdaModel, Regularization};

/// Neighbours used by the kNN baseline.
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error("k must be in 1..={n}, got {k}")]
    InvalidK { k: usize, n: usize },
    #[error("{0} training vectors but {1} labels")]
    LabelCount(usize, usize),
    #[error("vector has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("class {0:?} has no training members")]
    MissingClass(crate::record::Outcome),
    #[error("pooled covariance is singular; use a positive regularization")]
    SingularCovariance,
    #[error("regularization must be finite and nonnegative, got {0}")]
    InvalidRegularization(f64),
}

fn check_training(
    vectors: &[Vec<f64>],
    labels: &[crate::record::Outcome],
) -> Result<usize, BaselineError> {
    if vectors.len() != labels.len() {
        return Err(BaselineError::LabelCount(vectors.len(), labels.len()));
    }
    let first = vectors.first().ok_or(BaselineError::EmptyTraining)?;
    let dim = first.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(BaselineError::Dimension {
            expected: dim,
            found: v.len(),
        });
    }
    Ok(dim)
}
