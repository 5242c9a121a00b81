use atrisk_core::baselines::{knn_classify, lda_classify, lda_fit, Distance, Regularization};
use atrisk_core::Outcome;
use proptest::prelude::*;
use proptest::sample::SizeRange;

fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![Just(Outcome::Fail), Just(Outcome::Pass)]
}

/// `n` labelled vectors of dimension `d`, plus a query.
fn dataset(n: impl Into<SizeRange>, d: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Outcome>, Vec<f64>)> {
    prop::collection::vec((prop::collection::vec(-10.0f64..10.0, d), outcome()), n).prop_flat_map(
        move |rows| {
            let (x, y): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            (Just(x), Just(y), prop::collection::vec(-10.0f64..10.0, d))
        },
    )
}

fn permute(v: &[f64], order: &[usize]) -> Vec<f64> {
    order.iter().map(|&i| v[i]).collect()
}

proptest! {
    #[test]
    fn knn_ignores_feature_order(
        (x, y, q) in dataset(3..30, 4),
        order in Just((0..4).collect::<Vec<usize>>()).prop_shuffle(),
        k in 1usize..=3,
    ) {
        let px: Vec<Vec<f64>> = x.iter().map(|v| permute(v, &order)).collect();
        prop_assert_eq!(
            knn_classify(&x, &y, &q, k, Distance::Euclidean).unwrap(),
            knn_classify(&px, &y, &permute(&q, &order), k, Distance::Euclidean).unwrap()
        );
    }

    #[test]
    fn knn_with_everyone_is_the_majority((x, y, q) in dataset(1..30, 3)) {
        let fails = y.iter().filter(|&&l| l == Outcome::Fail).count();
        // A split vote goes to the at-risk side.
        let majority = if 2 * fails >= y.len() { Outcome::Fail } else { Outcome::Pass };
        prop_assert_eq!(knn_classify(&x, &y, &q, x.len(), Distance::Euclidean).unwrap(), majority);
    }

    #[test]
    fn lda_decisions_survive_scaling(
        (x, y, q) in dataset(12..40, 3),
        scale in 0.01f64..100.0,
    ) {
        prop_assume!(y.contains(&Outcome::Fail) && y.contains(&Outcome::Pass));
        let Ok(model) = lda_fit(&x, &y, Regularization::Fixed(0.0)) else {
            return Ok(());
        };
        let scores = model.scores(&q).unwrap();
        // Skip queries sitting on the boundary, where rounding decides.
        prop_assume!((scores[0] - scores[1]).abs() > 1e-6 * (1.0 + scores[0].abs()));
        let sx: Vec<Vec<f64>> = x.iter().map(|v| v.iter().map(|a| a * scale).collect()).collect();
        let sq: Vec<f64> = q.iter().map(|a| a * scale).collect();
        let scaled = lda_fit(&sx, &y, Regularization::Fixed(0.0)).unwrap();
        prop_assert_eq!(lda_classify(&model, &q).unwrap(), lda_classify(&scaled, &sq).unwrap());
    }

    // Unit-width classes three units apart: the pooled variance is at most
    // 1/4, so the prior shift of the boundary stays inside the gap for any
    // class ratio up to 25.
    #[test]
    fn lda_separates_one_dimensional_classes(
        fails in prop::collection::vec(0.0f64..1.0, 2..=50),
        passes in prop::collection::vec(0.0f64..1.0, 2..=50),
        offset in -5.0f64..5.0,
    ) {
        let mut x: Vec<Vec<f64>> = fails.iter().map(|v| vec![v + offset]).collect();
        x.extend(passes.iter().map(|v| vec![v + 4.0 + offset]));
        let mut y = vec![Outcome::Fail; fails.len()];
        y.extend(vec![Outcome::Pass; passes.len()]);
        let model = lda_fit(&x, &y, Regularization::Fixed(1e-9)).unwrap();
        for (v, l) in x.iter().zip(&y) {
            prop_assert_eq!(lda_classify(&model, v).unwrap(), *l);
        }
    }

    #[test]
    fn lda_is_unchanged_by_duplicating_the_data((x, y, q) in dataset(6..20, 2)) {
        prop_assume!(y.contains(&Outcome::Fail) && y.contains(&Outcome::Pass));
        let once = lda_fit(&x, &y, Regularization::Fixed(1e-3)).unwrap();
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<Outcome> = y.iter().chain(&y).copied().collect();
        let twice = lda_fit(&x2, &y2, Regularization::Fixed(1e-3)).unwrap();
        let (a, b) = (once.scores(&q).unwrap(), twice.scores(&q).unwrap());
        for c in 0..2 {
            prop_assert!((a[c] - b[c]).abs() <= 1e-6 * (1.0 + a[c].abs()));
        }
    }
}
