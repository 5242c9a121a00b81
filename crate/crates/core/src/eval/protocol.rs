//! Replicated stratified cross-validation over the semester weeks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{
    encode_features, knn_classify, lda_classify, lda_fit, Distance, MinMaxScaler, Regularization,
    DEFAULT_K,
};
use crate::course::{classify_cohort, CourseSchema};
use crate::record::{Outcome, StudentRecord};

use super::metrics::{metrics, ConfusionMatrix, MetricName, MetricsRow};
use super::EvalError;

/// One random re-partition of the cohort into stratified folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestingSet {
    /// 1-based set number; also the RNG stream used to draw it.
    pub index: usize,
    pub master_seed: u64,
    pub folds: usize,
    /// Student id to 1-based fold.
    pub assignment: BTreeMap<String, usize>,
}

impl TestingSet {
    pub fn fold_members(&self, fold: usize) -> impl Iterator<Item = &str> {
        self.assignment
            .iter()
            .filter(move |(_, f)| **f == fold)
            .map(|(id, _)| id.as_str())
    }
}

/// Draws `n` independent stratified fold assignments.
///
/// Each class is shuffled separately and dealt round-robin, continuing the
/// rotation across classes, so fold sizes and per-fold failure counts each
/// differ by at most one. Set `i` uses ChaCha stream `i` of the master seed.
pub fn make_testing_sets(
    cohort: &[StudentRecord],
    n: usize,
    folds: usize,
    master_seed: u64,
) -> Result<Vec<TestingSet>, EvalError> {
    if folds < 2 {
        return Err(EvalError::TooFewFolds(folds));
    }
    if cohort.len() < folds {
        return Err(EvalError::CohortTooSmall {
            size: cohort.len(),
            folds,
        });
    }
    let mut by_class: [Vec<&str>; 2] = [Vec::new(), Vec::new()];
    for r in cohort {
        by_class[r.outcome().label() as usize].push(r.id.as_str());
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(EvalError::SingleClass);
    }
    for ids in &mut by_class {
        ids.sort_unstable();
    }

    Ok((1..=n)
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(index as u64);
            let mut assignment = BTreeMap::new();
            let mut slot = 0;
            for ids in &by_class {
                let mut shuffled = ids.clone();
                shuffled.shuffle(&mut rng);
                for id in shuffled {
                    assignment.insert(id.to_string(), slot % folds + 1);
                    slot += 1;
                }
            }
            TestingSet {
                index,
                master_seed,
                folds,
                assignment,
            }
        })
        .collect())
}

/// A model that can be retrained and queried week by week.
pub trait WeeklyClassifier: Sync {
    fn name(&self) -> String;

    /// Predicted outcomes for `test`, in order, after training on `training`.
    fn predict(
        &self,
        schema: &CourseSchema,
        training: &[StudentRecord],
        test: &[StudentRecord],
        week: u32,
    ) -> Result<Vec<Outcome>, EvalError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Bnc,
    Knn,
    Lda,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Bnc, ModelKind::Knn, ModelKind::Lda];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Bnc => "BNC",
            ModelKind::Knn => "kNN",
            ModelKind::Lda => "LDA",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bnc" => Ok(ModelKind::Bnc),
            "knn" => Ok(ModelKind::Knn),
            "lda" => Ok(ModelKind::Lda),
            other => Err(EvalError::UnknownModel(other.to_string())),
        }
    }
}

/// Knobs shared by every model in an evaluation run. The BNC cutoff comes
/// from the schema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub beta: f64,
    pub k: usize,
    pub regularization: Regularization,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            beta: 2.0,
            k: DEFAULT_K,
            regularization: Regularization::Auto,
        }
    }
}

impl EvalParams {
    pub fn classifier(&self, kind: ModelKind) -> Box<dyn WeeklyClassifier> {
        match kind {
            ModelKind::Bnc => Box::new(Bnc),
            ModelKind::Knn => Box::new(Knn { k: self.k }),
            ModelKind::Lda => Box::new(Lda {
                regularization: self.regularization,
            }),
        }
    }
}

pub struct Bnc;

impl WeeklyClassifier for Bnc {
    fn name(&self) -> String {
        ModelKind::Bnc.to_string()
    }

    fn predict(
        &self,
        schema: &CourseSchema,
        training: &[StudentRecord],
        test: &[StudentRecord],
        week: u32,
    ) -> Result<Vec<Outcome>, EvalError> {
        Ok(classify_cohort(schema, training, test, week)?
            .into_iter()
            .map(|v| if v.at_risk { Outcome::Fail } else { Outcome::Pass })
            .collect())
    }
}

/// Scaled training vectors, their labels, and scaled test vectors.
type ScaledSplit = (Vec<Vec<f64>>, Vec<Outcome>, Vec<Vec<f64>>);

/// Scaled features for a train/test split; the scaler sees training rows only.
fn scaled_features(
    schema: &CourseSchema,
    training: &[StudentRecord],
    test: &[StudentRecord],
    week: u32,
) -> Result<ScaledSplit, EvalError> {
    let encode = |rs: &[StudentRecord]| {
        rs.iter()
            .map(|r| encode_features(schema, r, week).map(|f| f.values))
            .collect::<Result<Vec<_>, _>>()
    };
    let train = encode(training)?;
    let scaler = MinMaxScaler::fit(&train);
    let train = train.iter().map(|v| scaler.transform(v)).collect();
    let test = encode(test)?.iter().map(|v| scaler.transform(v)).collect();
    let labels = training.iter().map(StudentRecord::outcome).collect();
    Ok((train, labels, test))
}

pub struct Knn {
    pub k: usize,
}

impl WeeklyClassifier for Knn {
    fn name(&self) -> String {
        ModelKind::Knn.to_string()
    }

    fn predict(
        &self,
        schema: &CourseSchema,
        training: &[StudentRecord],
        test: &[StudentRecord],
        week: u32,
    ) -> Result<Vec<Outcome>, EvalError> {
        let (x, y, queries) = scaled_features(schema, training, test, week)?;
        Ok(queries
            .iter()
            .map(|q| knn_classify(&x, &y, q, self.k, Distance::Euclidean))
            .collect::<Result<_, _>>()?)
    }
}

pub struct Lda {
    pub regularization: Regularization,
}

impl WeeklyClassifier for Lda {
    fn name(&self) -> String {
        ModelKind::Lda.to_string()
    }

    fn predict(
        &self,
        schema: &CourseSchema,
        training: &[StudentRecord],
        test: &[StudentRecord],
        week: u32,
    ) -> Result<Vec<Outcome>, EvalError> {
        let (x, y, queries) = scaled_features(schema, training, test, week)?;
        let model = lda_fit(&x, &y, self.regularization)?;
        Ok(queries
            .iter()
            .map(|q| lda_classify(&model, q))
            .collect::<Result<_, _>>()?)
    }
}

/// Pooled confusion matrix and metrics for one week.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyResult {
    pub confusion: ConfusionMatrix,
    pub row: MetricsRow,
}

/// Runs one testing set: for every fold, train on the other folds and predict
/// the held-out fold in each week; fold matrices are summed per week before
/// the metrics are computed.
pub fn cross_validate(
    schema: &CourseSchema,
    cohort: &[StudentRecord],
    set: &TestingSet,
    model: &dyn WeeklyClassifier,
    beta: f64,
) -> Result<Vec<WeeklyResult>, EvalError> {
    schema.validate()?;
    if let Some(r) = cohort.iter().find(|r| !set.assignment.contains_key(&r.id)) {
        return Err(EvalError::IdMismatch(r.id.clone()));
    }
    if cohort.len() != set.assignment.len() {
        return Err(EvalError::CohortSetMismatch {
            cohort: cohort.len(),
            set: set.assignment.len(),
        });
    }
    let weeks = schema.semester_weeks();
    let mut pooled = vec![ConfusionMatrix::default(); weeks as usize];
    for fold in 1..=set.folds {
        let (test, training): (Vec<StudentRecord>, Vec<StudentRecord>) = cohort
            .iter()
            .cloned()
            .partition(|r| set.assignment[&r.id] == fold);
        if test.is_empty() {
            continue;
        }
        for week in 1..=weeks {
            let predicted = model.predict(schema, &training, &test, week)?;
            pooled[week as usize - 1] = pooled[week as usize - 1]
                + ConfusionMatrix::from_pairs(
                    predicted.into_iter().zip(test.iter().map(StudentRecord::outcome)),
                );
        }
    }
    let name = model.name();
    pooled
        .into_iter()
        .zip(1..)
        .map(|(confusion, week)| {
            Ok(WeeklyResult {
                confusion,
                row: MetricsRow {
                    week,
                    model: name.clone(),
                    metrics: metrics(&confusion, beta)?,
                },
            })
        })
        .collect()
}

/// Weekly results keyed by testing-set index.
pub type SetResults = BTreeMap<usize, Vec<WeeklyResult>>;

/// Evaluates every model on every testing set. Sets run concurrently when the
/// `parallel` feature is on; the result does not depend on scheduling.
pub fn run_protocol(
    schema: &CourseSchema,
    cohort: &[StudentRecord],
    sets: &[TestingSet],
    models: &[ModelKind],
    params: &EvalParams,
) -> Result<BTreeMap<ModelKind, SetResults>, EvalError> {
    let jobs: Vec<(ModelKind, &TestingSet)> = models
        .iter()
        .flat_map(|&m| sets.iter().map(move |s| (m, s)))
        .collect();
    let run = |&(kind, set): &(ModelKind, &TestingSet)| {
        let model = params.classifier(kind);
        cross_validate(schema, cohort, set, model.as_ref(), params.beta)
            .map(|weekly| (kind, set.index, weekly))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = jobs.iter().map(run).collect::<Result<_, _>>()?;

    let mut out: BTreeMap<ModelKind, SetResults> = BTreeMap::new();
    for (kind, index, weekly) in results {
        out.entry(kind).or_default().insert(index, weekly);
    }
    Ok(out)
}

fn weekly_values(results: &[WeeklyResult], metric: MetricName) -> BTreeMap<u32, Option<f64>> {
    results
        .iter()
        .map(|r| (r.row.week, r.row.metrics.get(metric)))
        .collect()
}

/// Per week, the mean over shared testing sets of `a - b`. Pairs where either
/// side is undefined are skipped; a week with no usable pair is `None`.
pub fn average_difference(
    a: &SetResults,
    b: &SetResults,
    metric: MetricName,
) -> Result<Vec<(u32, Option<f64>)>, EvalError> {
    let shared: Vec<usize> = a.keys().filter(|k| b.contains_key(k)).copied().collect();
    if shared.is_empty() {
        return Err(EvalError::NoCommonSets);
    }
    let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for index in shared {
        let (va, vb) = (weekly_values(&a[&index], metric), weekly_values(&b[&index], metric));
        for (week, x) in va {
            let entry = sums.entry(week).or_insert((0.0, 0));
            if let (Some(x), Some(Some(y))) = (x, vb.get(&week)) {
                entry.0 += x - y;
                entry.1 += 1;
            }
        }
    }
    Ok(sums
        .into_iter()
        .map(|(week, (s, n))| (week, (n > 0).then(|| s / n as f64)))
        .collect())
}

/// Per week, the mean of a metric over all testing sets with a defined value.
pub fn average_metric(results: &SetResults, metric: MetricName) -> Vec<(u32, Option<f64>)> {
    let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for weekly in results.values() {
        for (week, v) in weekly_values(weekly, metric) {
            let entry = sums.entry(week).or_insert((0.0, 0));
            if let Some(v) = v {
                entry.0 += v;
                entry.1 += 1;
            }
        }
    }
    sums.into_iter()
        .map(|(week, (s, n))| (week, (n > 0).then(|| s / n as f64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{CourseLayout, Grade};

    fn cohort(n: usize, fails: usize) -> Vec<StudentRecord> {
        let layout = CourseLayout::default();
        (0..n)
            .map(|i| {
                let mut r = StudentRecord::blank(format!("s{i:03}"), &layout);
                r.final_grade = if i < fails { Grade::Two } else { Grade::Four };
                r
            })
            .collect()
    }

    #[test]
    fn fifteen_sets_deterministic() {
        let c = cohort(129, 50);
        let a = make_testing_sets(&c, 15, 5, 42).unwrap();
        let b = make_testing_sets(&c, 15, 5, 42).unwrap();
        assert_eq!(a.len(), 15);
        assert_eq!(a, b);
        assert_ne!(a[0].assignment, a[1].assignment);
        assert_ne!(a, make_testing_sets(&c, 15, 5, 43).unwrap());
    }

    #[test]
    fn folds_are_balanced_and_stratified() {
        let c = cohort(129, 50);
        for set in make_testing_sets(&c, 15, 5, 7).unwrap() {
            let mut sizes: Vec<usize> = (1..=5).map(|f| set.fold_members(f).count()).collect();
            sizes.sort_unstable();
            assert_eq!(sizes, vec![25, 26, 26, 26, 26]);
            let fails: Vec<usize> = (1..=5)
                .map(|f| set.fold_members(f).filter(|id| id[1..].parse::<usize>().unwrap() < 50).count())
                .collect();
            assert!(fails.iter().max().unwrap() - fails.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn input_order_does_not_matter() {
        let c = cohort(40, 12);
        let mut reversed = c.clone();
        reversed.reverse();
        assert_eq!(
            make_testing_sets(&c, 3, 4, 1).unwrap(),
            make_testing_sets(&reversed, 3, 4, 1).unwrap()
        );
    }

    #[test]
    fn set_errors() {
        assert!(matches!(
            make_testing_sets(&cohort(3, 1), 1, 5, 0),
            Err(EvalError::CohortTooSmall { .. })
        ));
        assert!(matches!(
            make_testing_sets(&cohort(10, 0), 1, 5, 0),
            Err(EvalError::SingleClass)
        ));
        assert!(matches!(
            make_testing_sets(&cohort(10, 3), 1, 1, 0),
            Err(EvalError::TooFewFolds(1))
        ));
    }

    #[test]
    fn model_names_parse() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.as_str().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
