//! Course layer: which predictors exist, when they become observable, how raw
//! values are binned, and how the weekly networks are wired.

mod classifier;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{BnError, Evidence};
use crate::record::{CourseLayout, Grade, RecordError, StudentRecord, MAX_ATTEMPTS};

pub use classifier::{
    build_week_network, classify_cohort, classify_student, week_dag, write_verdicts, AtRiskVerdict,
};

/// Name of the response node.
pub const EXAM: &str = "Exam";
/// Response categories: failed (or not awarded) and passed.
pub const EXAM_CATEGORIES: [&str; 2] = ["0", "1"];

#[derive(Debug, Error)]
pub enum CourseError {
    #[error("invalid course schema: {0}")]
    Schema(String),
    #[error("week {week} outside 1..={weeks}")]
    WeekOutOfRange { week: u32, weeks: u32 },
    #[error("cutoff must lie strictly inside (0, 1), got {0}")]
    InvalidCutoff(f64),
    #[error("no training records")]
    NoTrainingRecords,
    #[error("student `{0}` appears in both training and test data")]
    OverlappingIds(String),
    #[error("predictor `{predictor}` cannot discretize {value}")]
    KindMismatch { predictor: String, value: String },
    #[error("predictor `{predictor}`: negative count {value}")]
    NegativeCount { predictor: String, value: i64 },
    #[error("predictor `{predictor}`: count {value} exceeds the {week} weeks elapsed")]
    CountExceedsWeeks {
        predictor: String,
        value: i64,
        week: u32,
    },
    #[error("predictor `{predictor}`: score {score} outside [0, {max}]")]
    ScoreOutOfRange {
        predictor: String,
        score: f64,
        max: f64,
    },
    #[error("attempt count {0} outside 0..={MAX_ATTEMPTS}")]
    AttemptsOutOfRange(i64),
    #[error("snapshot for week {have} cannot be projected to week {want}")]
    Projection { have: u32, want: u32 },
    #[error("evidence names `{0}`, which is not in the network")]
    UnknownEvidenceNode(String),
    #[error(transparent)]
    Bn(#[from] BnError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("schema config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    LectureCount,
    PracticumCount,
    PlusPoints,
    Quiz,
    Etest,
    Persistence,
}

/// Binning rule from a raw value to a category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Discretization {
    /// Attendance count over weeks elapsed: `low` up to `low_max`, `mid` up
    /// to `mid_max`, `high` above.
    AttendanceRatio { low_max: f64, mid_max: f64 },
    /// Cumulative points: `none` at zero, `low` up to `low_max`, `high` above.
    PlusPoints { low_max: u32 },
    /// The grade itself, with `na` for a missing grade.
    Grade,
    /// Score over the test maximum in thirds, `na` when not taken.
    ScoreThirds { max_score: f64 },
    /// Attempt count: `none` at zero, `low` up to `low_max`, `high` above.
    Attempts { low_max: u32 },
}

impl Discretization {
    pub fn categories(&self) -> &'static [&'static str] {
        match self {
            Discretization::AttendanceRatio { .. } => &["low", "mid", "high"],
            Discretization::PlusPoints { .. } | Discretization::Attempts { .. } => {
                &["none", "low", "high"]
            }
            Discretization::Grade => &["2", "3", "4", "5", "na"],
            Discretization::ScoreThirds { .. } => &["na", "low", "mid", "high"],
        }
    }
}

/// Raw observation fed to [`discretize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawValue {
    Count(i64),
    Grade(Grade),
    Score(Option<f64>),
    Attempts(i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub name: String,
    pub kind: PredictorKind,
    /// 1-based quiz or e-test number for item-level predictors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<usize>,
    pub available_from_week: u32,
    pub discretization: Discretization,
    /// E-test predictor this persistence node depends on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linked_etest: Option<String>,
}

impl PredictorSpec {
    /// Pulls this predictor's raw value out of a record as of `week`.
    pub fn raw_value(&self, record: &StudentRecord, week: u32) -> RawValue {
        let item = self.item.map_or(0, |i| i - 1);
        match self.kind {
            PredictorKind::LectureCount => RawValue::Count(record.lectures_through(week).into()),
            PredictorKind::PracticumCount => {
                RawValue::Count(record.practicums_through(week).into())
            }
            PredictorKind::PlusPoints => RawValue::Count(record.plus_points_through(week).into()),
            PredictorKind::Quiz => RawValue::Grade(record.quizzes[item]),
            PredictorKind::Etest => RawValue::Score(record.etest_scores[item]),
            PredictorKind::Persistence => RawValue::Attempts(record.etest_attempts[item].into()),
        }
    }
}

/// Edge policy for the weekly networks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StructureRule {
    /// Exam is a parent of every predictor; each persistence node also has
    /// its linked e-test as a parent.
    #[default]
    ExamRooted,
    /// Fixed edge list. Each week keeps the edges whose endpoints both exist.
    Explicit { edges: Vec<[String; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseSchema {
    pub cutoff: f64,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    #[serde(default)]
    pub structure: StructureRule,
    pub layout: CourseLayout,
    pub predictors: Vec<PredictorSpec>,
}

fn default_smoothing() -> f64 {
    1.0
}

impl Default for CourseSchema {
    fn default() -> Self {
        Self::for_layout(CourseLayout::default())
    }
}

impl CourseSchema {
    /// Default predictor set for a layout: attendance, plus points, one node
    /// per quiz, and an e-test plus persistence node per e-test.
    pub fn for_layout(layout: CourseLayout) -> Self {
        let attendance = Discretization::AttendanceRatio {
            low_max: 0.5,
            mid_max: 0.8,
        };
        let mut predictors = vec![
            PredictorSpec {
                name: "Lec".into(),
                kind: PredictorKind::LectureCount,
                item: None,
                available_from_week: 1,
                discretization: attendance.clone(),
                linked_etest: None,
            },
            PredictorSpec {
                name: "Prac".into(),
                kind: PredictorKind::PracticumCount,
                item: None,
                available_from_week: 1,
                discretization: attendance,
                linked_etest: None,
            },
            PredictorSpec {
                name: "Plus".into(),
                kind: PredictorKind::PlusPoints,
                item: None,
                available_from_week: 1,
                discretization: Discretization::PlusPoints { low_max: 2 },
                linked_etest: None,
            },
        ];
        for (i, &week) in layout.quiz_weeks.iter().enumerate() {
            predictors.push(PredictorSpec {
                name: format!("Quiz_{}", i + 1),
                kind: PredictorKind::Quiz,
                item: Some(i + 1),
                available_from_week: week,
                discretization: Discretization::Grade,
                linked_etest: None,
            });
        }
        for (i, &week) in layout.etest_weeks.iter().enumerate() {
            let etest = format!("e-test_{}", i + 1);
            predictors.push(PredictorSpec {
                name: etest.clone(),
                kind: PredictorKind::Etest,
                item: Some(i + 1),
                available_from_week: week,
                discretization: Discretization::ScoreThirds {
                    max_score: layout.etest_max_score[i],
                },
                linked_etest: None,
            });
            predictors.push(PredictorSpec {
                name: format!("Persist_{}", i + 1),
                kind: PredictorKind::Persistence,
                item: Some(i + 1),
                available_from_week: week,
                discretization: Discretization::Attempts { low_max: 2 },
                linked_etest: Some(etest),
            });
        }
        Self {
            cutoff: 0.5,
            smoothing: 1.0,
            structure: StructureRule::ExamRooted,
            layout,
            predictors,
        }
    }

    pub fn semester_weeks(&self) -> u32 {
        self.layout.semester_weeks
    }

    pub fn from_toml(text: &str) -> Result<Self, CourseError> {
        let schema: Self = toml::from_str(text).map_err(|e| CourseError::Config(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_toml(&self) -> Result<String, CourseError> {
        toml::to_string(self).map_err(|e| CourseError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CourseError> {
        let bad = |msg: String| Err(CourseError::Schema(msg));
        self.layout.validate()?;
        check_cutoff(self.cutoff)?;
        if !self.smoothing.is_finite() || self.smoothing < 0.0 {
            return bad(format!("smoothing {} must be nonnegative", self.smoothing));
        }
        let mut names = HashSet::from([EXAM]);
        for p in &self.predictors {
            if !names.insert(p.name.as_str()) {
                return bad(format!("predictor name `{}` is not unique", p.name));
            }
            if !(1..=self.semester_weeks()).contains(&p.available_from_week) {
                return bad(format!(
                    "`{}` becomes available in week {}, outside the semester",
                    p.name, p.available_from_week
                ));
            }
            let items = match p.kind {
                PredictorKind::Quiz => Some(self.layout.quizzes()),
                PredictorKind::Etest | PredictorKind::Persistence => Some(self.layout.etests()),
                _ => None,
            };
            match (items, p.item) {
                (Some(n), Some(i)) if (1..=n).contains(&i) => {}
                (Some(n), _) => return bad(format!("`{}` needs an item number in 1..={n}", p.name)),
                (None, Some(_)) => return bad(format!("`{}` takes no item number", p.name)),
                (None, None) => {}
            }
            let compatible = matches!(
                (p.kind, &p.discretization),
                (
                    PredictorKind::LectureCount | PredictorKind::PracticumCount,
                    Discretization::AttendanceRatio { .. }
                ) | (PredictorKind::PlusPoints, Discretization::PlusPoints { .. })
                    | (PredictorKind::Quiz, Discretization::Grade)
                    | (PredictorKind::Etest, Discretization::ScoreThirds { .. })
                    | (PredictorKind::Persistence, Discretization::Attempts { .. })
            );
            if !compatible {
                return bad(format!("`{}` has a binning rule unsuited to its kind", p.name));
            }
            if let Discretization::ScoreThirds { max_score } = p.discretization {
                if !(max_score.is_finite() && max_score > 0.0) {
                    return bad(format!("`{}` needs a positive maximum score", p.name));
                }
            }
            if let Discretization::AttendanceRatio { low_max, mid_max } = p.discretization {
                if !(0.0..=1.0).contains(&low_max) || !(low_max..=1.0).contains(&mid_max) {
                    return bad(format!("`{}` has unordered attendance bins", p.name));
                }
            }
        }
        for p in &self.predictors {
            match (p.kind, &p.linked_etest) {
                (PredictorKind::Persistence, Some(link)) => {
                    let target = self
                        .predictors
                        .iter()
                        .find(|q| &q.name == link && q.kind == PredictorKind::Etest);
                    match target {
                        None => return bad(format!("`{}` links unknown e-test `{link}`", p.name)),
                        Some(t) if t.available_from_week > p.available_from_week => {
                            return bad(format!(
                                "`{}` becomes available before its e-test `{link}`",
                                p.name
                            ))
                        }
                        Some(_) => {}
                    }
                }
                (PredictorKind::Persistence, None) => {
                    return bad(format!("`{}` must name its e-test", p.name))
                }
                (_, Some(_)) => return bad(format!("only persistence nodes link an e-test (`{}`)", p.name)),
                (_, None) => {}
            }
        }
        if let StructureRule::Explicit { edges } = &self.structure {
            for [a, b] in edges {
                for n in [a, b] {
                    if !names.contains(n.as_str()) {
                        return bad(format!("structure edge names unknown node `{n}`"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn check_week(&self, week: u32) -> Result<(), CourseError> {
        if (1..=self.semester_weeks()).contains(&week) {
            Ok(())
        } else {
            Err(CourseError::WeekOutOfRange {
                week,
                weeks: self.semester_weeks(),
            })
        }
    }

    /// Predictors observable by `week`, in schema order.
    pub fn available(&self, week: u32) -> impl Iterator<Item = &PredictorSpec> {
        self.predictors
            .iter()
            .filter(move |p| p.available_from_week <= week)
    }

    pub fn predictor(&self, name: &str) -> Option<&PredictorSpec> {
        self.predictors.iter().find(|p| p.name == name)
    }
}

pub(crate) fn check_cutoff(p: f64) -> Result<(), CourseError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(CourseError::InvalidCutoff(p))
    }
}

/// Maps a raw value onto one of the predictor's category labels.
pub fn discretize(spec: &PredictorSpec, raw: RawValue, week: u32) -> Result<&'static str, CourseError> {
    let mismatch = || CourseError::KindMismatch {
        predictor: spec.name.clone(),
        value: format!("{raw:?}"),
    };
    let count = |value: i64| {
        if value < 0 {
            Err(CourseError::NegativeCount {
                predictor: spec.name.clone(),
                value,
            })
        } else {
            Ok(value as u64)
        }
    };
    match (&spec.discretization, raw) {
        (Discretization::AttendanceRatio { low_max, mid_max }, RawValue::Count(v)) => {
            let attended = count(v)?;
            if week == 0 || attended > u64::from(week) {
                return Err(CourseError::CountExceedsWeeks {
                    predictor: spec.name.clone(),
                    value: v,
                    week,
                });
            }
            let ratio = attended as f64 / f64::from(week);
            Ok(if ratio <= *low_max {
                "low"
            } else if ratio <= *mid_max {
                "mid"
            } else {
                "high"
            })
        }
        (Discretization::PlusPoints { low_max }, RawValue::Count(v)) => {
            Ok(three_level(count(v)?, u64::from(*low_max)))
        }
        (Discretization::Grade, RawValue::Grade(g)) => Ok(match g {
            Grade::NotAvailable => "na",
            Grade::Two => "2",
            Grade::Three => "3",
            Grade::Four => "4",
            Grade::Five => "5",
        }),
        (Discretization::ScoreThirds { max_score }, RawValue::Score(score)) => {
            let Some(s) = score else { return Ok("na") };
            if !(0.0..=*max_score).contains(&s) {
                return Err(CourseError::ScoreOutOfRange {
                    predictor: spec.name.clone(),
                    score: s,
                    max: *max_score,
                });
            }
            Ok(if s <= max_score / 3.0 {
                "low"
            } else if s <= 2.0 * max_score / 3.0 {
                "mid"
            } else {
                "high"
            })
        }
        (Discretization::Attempts { low_max }, RawValue::Attempts(a)) => {
            if !(0..=i64::from(MAX_ATTEMPTS)).contains(&a) {
                return Err(CourseError::AttemptsOutOfRange(a));
            }
            Ok(three_level(a as u64, u64::from(*low_max)))
        }
        _ => Err(mismatch()),
    }
}

fn three_level(value: u64, low_max: u64) -> &'static str {
    if value == 0 {
        "none"
    } else if value <= low_max {
        "low"
    } else {
        "high"
    }
}

/// Default persistence rule: no attempts, one or two, three or more.
pub fn persistence_indicator(attempts: i64) -> Result<&'static str, CourseError> {
    if !(0..=i64::from(MAX_ATTEMPTS)).contains(&attempts) {
        return Err(CourseError::AttemptsOutOfRange(attempts));
    }
    Ok(three_level(attempts as u64, 2))
}

/// Evidence for one student restricted to what is observable in a week.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklySnapshot {
    pub student_id: String,
    pub week: u32,
    pub evidence: Evidence,
}

impl WeeklySnapshot {
    pub fn from_record(
        schema: &CourseSchema,
        record: &StudentRecord,
        week: u32,
    ) -> Result<Self, CourseError> {
        schema.check_week(week)?;
        let mut evidence = Evidence::new();
        for p in schema.available(week) {
            evidence.insert(p.name.clone(), discretize(p, p.raw_value(record, week), week)?);
        }
        Ok(Self {
            student_id: record.id.clone(),
            week,
            evidence,
        })
    }

    /// Drops predictors that are not yet available in an earlier `week`.
    pub fn project(&self, schema: &CourseSchema, week: u32) -> Result<Self, CourseError> {
        if week > self.week {
            return Err(CourseError::Projection {
                have: self.week,
                want: week,
            });
        }
        schema.check_week(week)?;
        let mut evidence = self.evidence.clone();
        evidence.retain(|name, _| {
            schema
                .predictor(name)
                .is_some_and(|p| p.available_from_week <= week)
        });
        Ok(Self {
            student_id: self.student_id.clone(),
            week,
            evidence,
        })
    }
}
