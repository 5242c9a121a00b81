use crate::record::Outcome;

use super::{check_training, BaselineError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distance {
    #[default]
    Euclidean,
    Manhattan,
}

impl Distance {
    pub fn between(self, a: &[f64], b: &[f64]) -> f64 {
        let pairs = a.iter().zip(b);
        match self {
            Distance::Euclidean => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Distance::Manhattan => pairs.map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

/// Majority label among the `k` nearest training vectors.
///
/// Equal distances keep training order; a split vote goes to
/// [`Outcome::Fail`].
pub fn knn_classify(
    vectors: &[Vec<f64>],
    labels: &[Outcome],
    query: &[f64],
    k: usize,
    distance: Distance,
) -> Result<Outcome, BaselineError> {
    let dim = check_training(vectors, labels)?;
    if query.len() != dim {
        return Err(BaselineError::Dimension {
            expected: dim,
            found: query.len(),
        });
    }
    if k == 0 || k > vectors.len() {
        return Err(BaselineError::InvalidK { k, n: vectors.len() });
    }
    let mut ranked: Vec<(f64, usize)> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| (distance.between(v, query), i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let fails = ranked[..k]
        .iter()
        .filter(|(_, i)| labels[*i] == Outcome::Fail)
        .count();
    Ok(if 2 * fails >= k {
        Outcome::Fail
    } else {
        Outcome::Pass
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Outcome::{Fail, Pass};

    fn line() -> (Vec<Vec<f64>>, Vec<Outcome>) {
        (
            vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0]],
            vec![Fail, Fail, Pass, Pass],
        )
    }

    #[test]
    fn majority_of_three() {
        let (x, y) = line();
        assert_eq!(knn_classify(&x, &y, &[0.9], 3, Distance::Euclidean).unwrap(), Fail);
        assert_eq!(knn_classify(&x, &y, &[9.0], 3, Distance::Euclidean).unwrap(), Pass);
    }

    #[test]
    fn exact_match_with_one_neighbour() {
        let (x, y) = line();
        for (v, l) in x.iter().zip(&y) {
            assert_eq!(knn_classify(&x, &y, v, 1, Distance::Euclidean).unwrap(), *l);
        }
    }

    #[test]
    fn split_vote_favours_fail() {
        let x = vec![vec![0.0], vec![2.0]];
        let y = vec![Pass, Fail];
        assert_eq!(knn_classify(&x, &y, &[1.0], 2, Distance::Euclidean).unwrap(), Fail);
    }

    #[test]
    fn equal_distances_keep_training_order() {
        let x = vec![vec![1.0], vec![-1.0], vec![1.0]];
        let y = vec![Pass, Fail, Fail];
        assert_eq!(knn_classify(&x, &y, &[0.0], 1, Distance::Euclidean).unwrap(), Pass);
    }

    #[test]
    fn argument_errors() {
        let (x, y) = line();
        assert_eq!(
            knn_classify(&[], &[], &[0.0], 1, Distance::Euclidean),
            Err(BaselineError::EmptyTraining)
        );
        assert!(matches!(
            knn_classify(&x, &y, &[0.0], 0, Distance::Euclidean),
            Err(BaselineError::InvalidK { .. })
        ));
        assert!(matches!(
            knn_classify(&x, &y, &[0.0], 5, Distance::Euclidean),
            Err(BaselineError::InvalidK { .. })
        ));
        assert!(matches!(
            knn_classify(&x, &y, &[0.0, 1.0], 1, Distance::Euclidean),
            Err(BaselineError::Dimension { .. })
        ));
    }

    #[test]
    fn manhattan_distance() {
        assert_eq!(Distance::Manhattan.between(&[0.0, 0.0], &[3.0, -4.0]), 7.0);
        assert_eq!(Distance::Euclidean.between(&[0.0, 0.0], &[3.0, -4.0]), 5.0);
    }
}
