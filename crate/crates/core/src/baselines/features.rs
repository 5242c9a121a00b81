use crate::course::{CourseError, CourseSchema, PredictorKind};
use crate::record::{Grade, StudentRecord};

/// Numeric encoding of one student's available predictors in a given week.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub student_id: String,
    pub week: u32,
    pub values: Vec<f64>,
}

/// Encodes the predictors available in `week`, in schema order.
///
/// Attendance and plus points are cumulative counts, quiz grades their
/// numeric value, e-test scores a fraction of the test maximum, persistence
/// the attempt count. Missing grades and scores encode as 0.
pub fn encode_features(
    schema: &CourseSchema,
    record: &StudentRecord,
    week: u32,
) -> Result<FeatureVector, CourseError> {
    schema.check_week(week)?;
    record.validate(&schema.layout)?;
    let values = schema
        .available(week)
        .map(|p| {
            let item = p.item.map_or(0, |i| i - 1);
            match p.kind {
                PredictorKind::LectureCount => f64::from(record.lectures_through(week)),
                PredictorKind::PracticumCount => f64::from(record.practicums_through(week)),
                PredictorKind::PlusPoints => f64::from(record.plus_points_through(week)),
                PredictorKind::Quiz => match record.quizzes[item] {
                    Grade::NotAvailable => 0.0,
                    g => g.points(),
                },
                PredictorKind::Etest => record.etest_scores[item]
                    .map_or(0.0, |s| s / schema.layout.etest_max_score[item]),
                PredictorKind::Persistence => f64::from(record.etest_attempts[item]),
            }
        })
        .collect();
    Ok(FeatureVector {
        student_id: record.id.clone(),
        week,
        values,
    })
}

/// Per-dimension min-max scaling fitted on a training split. Constant
/// dimensions map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(vectors: &[Vec<f64>]) -> Self {
        let dim = vectors.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for v in vectors {
            for (i, &x) in v.iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        Self { min, max }
    }

    pub fn transform(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_quiz_encodes_as_zero() {
        let schema = CourseSchema::default();
        let mut r = StudentRecord::blank("s", &schema.layout);
        let v = encode_features(&schema, &r, 6).unwrap();
        let quiz = schema.available(6).position(|p| p.name == "Quiz_1").unwrap();
        assert_eq!(v.values[quiz], 0.0);
        r.quizzes[0] = Grade::Four;
        assert_eq!(encode_features(&schema, &r, 6).unwrap().values[quiz], 4.0);
    }

    #[test]
    fn blank_record_is_zero_vector() {
        let schema = CourseSchema::default();
        let r = StudentRecord::blank("s", &schema.layout);
        let v = encode_features(&schema, &r, 1).unwrap();
        assert_eq!(v.values, vec![0.0; 3]);
        assert_eq!(encode_features(&schema, &r, 17).unwrap().values.len(), 38);
    }

    #[test]
    fn scaler_maps_training_range_to_unit_interval() {
        let data = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, -2.0], vec![2.0, 5.0, 0.0]];
        let s = MinMaxScaler::fit(&data);
        assert_eq!(s.transform(&data[0]), vec![0.0, 0.0, 1.0]);
        assert_eq!(s.transform(&data[1]), vec![1.0, 0.0, 0.0]);
        assert_eq!(s.transform(&data[2]), vec![0.5, 0.0, 0.5]);
    }
}
