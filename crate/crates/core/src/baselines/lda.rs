use nalgebra::{DMatrix, DVector};

use crate::record::Outcome;

use super::{check_training, BaselineError};

/// Ridge added to the pooled covariance diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Regularization {
    /// `1e-6 * trace / d`, or `1e-6` when the trace is zero.
    #[default]
    Auto,
    Fixed(f64),
}

/// Two-class linear discriminant with a shared covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// Class means indexed by [`Outcome::label`].
    pub means: [Vec<f64>; 2],
    /// Pooled within-class covariance including the ridge.
    pub covariance: DMatrix<f64>,
    pub priors: [f64; 2],
    pub epsilon: f64,
    weights: [DVector<f64>; 2],
    offsets: [f64; 2],
}

impl LdaModel {
    pub fn dimension(&self) -> usize {
        self.means[0].len()
    }

    /// Discriminant `x' S^-1 m_c - m_c' S^-1 m_c / 2 + ln prior_c` per class.
    pub fn scores(&self, query: &[f64]) -> Result<[f64; 2], BaselineError> {
        if query.len() != self.dimension() {
            return Err(BaselineError::Dimension {
                expected: self.dimension(),
                found: query.len(),
            });
        }
        let x = DVector::from_column_slice(query);
        Ok([0, 1].map(|c| x.dot(&self.weights[c]) + self.offsets[c]))
    }
}

/// Fits class means, class-frequency priors, and the pooled covariance
/// `sum_c sum_i (x_i - m_c)(x_i - m_c)' / n` plus the ridge.
pub fn lda_fit(
    vectors: &[Vec<f64>],
    labels: &[Outcome],
    regularization: Regularization,
) -> Result<LdaModel, BaselineError> {
    let dim = check_training(vectors, labels)?;
    let n = vectors.len() as f64;

    let mut counts = [0usize; 2];
    let mut sums = [DVector::zeros(dim), DVector::zeros(dim)];
    for (v, l) in vectors.iter().zip(labels) {
        let c = l.label() as usize;
        counts[c] += 1;
        sums[c] += DVector::from_column_slice(v);
    }
    for outcome in [Outcome::Fail, Outcome::Pass] {
        if counts[outcome.label() as usize] == 0 {
            return Err(BaselineError::MissingClass(outcome));
        }
    }
    let means = [0, 1].map(|c| &sums[c] / counts[c] as f64);

    let mut scatter = DMatrix::<f64>::zeros(dim, dim);
    for (v, l) in vectors.iter().zip(labels) {
        let d = DVector::from_column_slice(v) - &means[l.label() as usize];
        scatter += &d * d.transpose();
    }
    let pooled = scatter / n;

    let epsilon = match regularization {
        Regularization::Fixed(e) if e.is_finite() && e >= 0.0 => e,
        Regularization::Fixed(e) => return Err(BaselineError::InvalidRegularization(e)),
        Regularization::Auto => {
            let e = 1e-6 * pooled.trace() / dim.max(1) as f64;
            if e > 0.0 {
                e
            } else {
                1e-6
            }
        }
    };
    let covariance = pooled + DMatrix::<f64>::identity(dim, dim) * epsilon;
    let cholesky = covariance
        .clone()
        .cholesky()
        .ok_or(BaselineError::SingularCovariance)?;

    let priors = [0, 1].map(|c| counts[c] as f64 / n);
    let weights = [0, 1].map(|c| cholesky.solve(&means[c]));
    let offsets = [0, 1].map(|c| -0.5 * means[c].dot(&weights[c]) + priors[c].ln());
    Ok(LdaModel {
        means: means.map(|m| m.iter().copied().collect()),
        covariance,
        priors,
        epsilon,
        weights,
        offsets,
    })
}

/// Class with the larger discriminant; equal scores go to [`Outcome::Fail`].
pub fn lda_classify(model: &LdaModel, query: &[f64]) -> Result<Outcome, BaselineError> {
    let [fail, pass] = model.scores(query)?;
    Ok(if pass > fail {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}
