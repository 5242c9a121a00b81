//! Raw per-student semester data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest attempt limit any e-test may have.
pub const MAX_ATTEMPTS: u32 = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("unknown grade label `{0}`")]
    UnknownGrade(String),
    #[error("student `{id}`: {field} has {found} entries, expected {expected}")]
    Length {
        id: String,
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("student `{id}`: e-test {test} has {attempts} attempts, limit is {limit}")]
    Attempts {
        id: String,
        test: usize,
        attempts: u32,
        limit: u32,
    },
    #[error("student `{id}`: e-test {test} score {score} outside [0, {max}]")]
    Score {
        id: String,
        test: usize,
        score: f64,
        max: f64,
    },
    #[error("invalid course layout: {0}")]
    Layout(String),
}

/// Five-level grade scale with a "not available" marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Grade {
    #[serde(rename = "n/a")]
    NotAvailable,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
    #[serde(rename = "4")]
    Four,
    #[serde(rename = "5")]
    Five,
}

impl Grade {
    pub const ALL: [Grade; 5] = [
        Grade::NotAvailable,
        Grade::Two,
        Grade::Three,
        Grade::Four,
        Grade::Five,
    ];

    /// Numeric value with n/a as 0.
    pub fn points(self) -> f64 {
        match self {
            Grade::NotAvailable => 0.0,
            Grade::Two => 2.0,
            Grade::Three => 3.0,
            Grade::Four => 4.0,
            Grade::Five => 5.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Grade::NotAvailable => "n/a",
            Grade::Two => "2",
            Grade::Three => "3",
            Grade::Four => "4",
            Grade::Five => "5",
        }
    }

    pub fn is_passing(self) -> bool {
        matches!(self, Grade::Three | Grade::Four | Grade::Five)
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Grade {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "n/a" => Ok(Grade::NotAvailable),
            "2" => Ok(Grade::Two),
            "3" => Ok(Grade::Three),
            "4" => Ok(Grade::Four),
            "5" => Ok(Grade::Five),
            other => Err(RecordError::UnknownGrade(other.to_string())),
        }
    }
}

/// Exam outcome. `Fail` is the positive (at-risk) class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Fail = 0,
    Pass = 1,
}

impl Outcome {
    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Outcome::Fail),
            1 => Some(Outcome::Pass),
            _ => None,
        }
    }
}

/// Passing the final exam means a grade of 3, 4 or 5; a 2 or a missing
/// grade counts as failure.
pub fn label_outcome(record: &StudentRecord) -> Outcome {
    if record.final_grade.is_passing() {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

/// Semester calendar and assessment limits shared by records, CSV files and
/// the generator. Weeks are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseLayout {
    pub semester_weeks: u32,
    pub quiz_weeks: Vec<u32>,
    pub etest_weeks: Vec<u32>,
    pub etest_max_attempts: Vec<u32>,
    pub etest_max_score: Vec<f64>,
}

impl Default for CourseLayout {
    fn default() -> Self {
        let etests = 16;
        Self {
            semester_weeks: 17,
            quiz_weeks: vec![6, 13, 17],
            etest_weeks: (2..=17).collect(),
            etest_max_attempts: (0..etests).map(|i| 4 + (i % 4)).collect(),
            etest_max_score: vec![10.0; etests as usize],
        }
    }
}

impl CourseLayout {
    pub fn quizzes(&self) -> usize {
        self.quiz_weeks.len()
    }

    pub fn etests(&self) -> usize {
        self.etest_weeks.len()
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        let bad = |msg: String| Err(RecordError::Layout(msg));
        if self.semester_weeks == 0 {
            return bad("semester must have at least one week".into());
        }
        let in_range = |w: &u32| (1..=self.semester_weeks).contains(w);
        if !self.quiz_weeks.iter().all(in_range) || !self.etest_weeks.iter().all(in_range) {
            return bad(format!(
                "assessment weeks must lie in 1..={}",
                self.semester_weeks
            ));
        }
        if self.etest_max_attempts.len() != self.etests()
            || self.etest_max_score.len() != self.etests()
        {
            return bad("e-test limits must have one entry per e-test".into());
        }
        if let Some(a) = self
            .etest_max_attempts
            .iter()
            .find(|&&a| a == 0 || a > MAX_ATTEMPTS)
        {
            return bad(format!("attempt limit {a} outside 1..={MAX_ATTEMPTS}"));
        }
        if let Some(s) = self
            .etest_max_score
            .iter()
            .find(|s| !(s.is_finite() && **s > 0.0))
        {
            return bad(format!("e-test maximum score {s} must be positive"));
        }
        Ok(())
    }
}

/// One student's semester. Week-indexed vectors hold one entry per week;
/// e-test vectors one entry per test.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentRecord {
    pub id: String,
    pub lectures: Vec<bool>,
    pub practicums: Vec<bool>,
    pub plus_points: Vec<u32>,
    pub quizzes: Vec<Grade>,
    pub etest_scores: Vec<Option<f64>>,
    pub etest_attempts: Vec<u32>,
    pub final_grade: Grade,
}

impl StudentRecord {
    /// A record with no attendance, no points, and every assessment missing.
    pub fn blank(id: impl Into<String>, layout: &CourseLayout) -> Self {
        let weeks = layout.semester_weeks as usize;
        Self {
            id: id.into(),
            lectures: vec![false; weeks],
            practicums: vec![false; weeks],
            plus_points: vec![0; weeks],
            quizzes: vec![Grade::NotAvailable; layout.quizzes()],
            etest_scores: vec![None; layout.etests()],
            etest_attempts: vec![0; layout.etests()],
            final_grade: Grade::NotAvailable,
        }
    }

    pub fn validate(&self, layout: &CourseLayout) -> Result<(), RecordError> {
        let weeks = layout.semester_weeks as usize;
        let check = |field: &'static str, found: usize, expected: usize| {
            if found == expected {
                Ok(())
            } else {
                Err(RecordError::Length {
                    id: self.id.clone(),
                    field,
                    expected,
                    found,
                })
            }
        };
        check("lectures", self.lectures.len(), weeks)?;
        check("practicums", self.practicums.len(), weeks)?;
        check("plus_points", self.plus_points.len(), weeks)?;
        check("quizzes", self.quizzes.len(), layout.quizzes())?;
        check("etest_scores", self.etest_scores.len(), layout.etests())?;
        check("etest_attempts", self.etest_attempts.len(), layout.etests())?;
        for (t, (&attempts, &limit)) in self
            .etest_attempts
            .iter()
            .zip(&layout.etest_max_attempts)
            .enumerate()
        {
            if attempts > limit {
                return Err(RecordError::Attempts {
                    id: self.id.clone(),
                    test: t + 1,
                    attempts,
                    limit,
                });
            }
        }
        for (t, (score, &max)) in self
            .etest_scores
            .iter()
            .zip(&layout.etest_max_score)
            .enumerate()
        {
            if let Some(s) = *score {
                if !(0.0..=max).contains(&s) {
                    return Err(RecordError::Score {
                        id: self.id.clone(),
                        test: t + 1,
                        score: s,
                        max,
                    });
                }
            }
        }
        Ok(())
    }

    /// Lectures attended in weeks `1..=week`.
    pub fn lectures_through(&self, week: u32) -> u32 {
        count_through(&self.lectures, week)
    }

    pub fn practicums_through(&self, week: u32) -> u32 {
        count_through(&self.practicums, week)
    }

    pub fn plus_points_through(&self, week: u32) -> u32 {
        self.plus_points.iter().take(week as usize).sum()
    }

    pub fn outcome(&self) -> Outcome {
        label_outcome(self)
    }
}

fn count_through(flags: &[bool], week: u32) -> u32 {
    flags.iter().take(week as usize).filter(|&&b| b).count() as u32
}
