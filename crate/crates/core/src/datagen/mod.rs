//! Synthetic cohorts and the wide CSV format for student records.
//!
//! Every student draws a latent ability `a ~ N(0, 1)`. Each observed
//! quantity is a monotone function of a mix `rho * a + sqrt(1 - rho^2) * e`
//! with independent noise `e`. The final grade uses a fixed mix set by
//! `final_noise`; the quiz, attendance and e-test mixes are calibrated so
//! that their Pearson correlation with the final grade hits the requested
//! targets. Calibration bisects on `rho` over a fixed calibration cohort
//! drawn with common random numbers, so the measured correlation is a
//! deterministic function of `rho`.

mod csv;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::eval::pearson;
use crate::record::{CourseLayout, Grade, RecordError, StudentRecord};

pub use self::csv::{export_csv, ingest_csv, read_csv_file, write_csv_file, IngestError, RowError};

/// Smallest cohort the generator produces: two students per default fold.
pub const MIN_COHORT_SIZE: usize = 10;
/// Students in the calibration cohort.
pub const CALIBRATION_SIZE: usize = 6000;
const CALIBRATION_SEED: u64 = 0x5eed_ca11_b8a7_e000;
const BISECTION_STEPS: usize = 40;
/// Slack allowed when a target sits just above the strongest achievable link.
const FEASIBILITY_SLACK: f64 = 0.02;

const ATTENDANCE_BASE: [f64; 2] = [0.55, 0.65];
const ATTENDANCE_SPREAD: f64 = 1.1;
const ETEST_MISSING_SHARE: f64 = 0.12;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
    #[error("{item} correlation target {target} is unreachable (at most {max:.3})")]
    Infeasible {
        item: &'static str,
        target: f64,
        max: f64,
    },
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// Target Pearson correlations with the final grade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTargets {
    pub quiz: f64,
    pub attendance: f64,
    pub etest: f64,
}

impl Default for CorrelationTargets {
    fn default() -> Self {
        Self {
            quiz: 0.78,
            attendance: 0.72,
            etest: 0.40,
        }
    }
}

/// Shape of the five-level grade scale, used for final grades and quizzes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeShape {
    /// Share of failing students whose grade is missing rather than a 2.
    pub missing_share_of_fails: f64,
    /// Shares of 3, 4 and 5 among passing students.
    pub passing_shares: [f64; 3],
}

impl Default for GradeShape {
    fn default() -> Self {
        Self {
            missing_share_of_fails: 0.3,
            passing_shares: [0.45, 0.35, 0.20],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub size: usize,
    pub pass_rate: f64,
    pub targets: CorrelationTargets,
    /// Noise standard deviation between ability and the final grade.
    pub final_noise: f64,
    pub grade_shape: GradeShape,
    pub layout: CourseLayout,
    pub seed: u64,
    /// Prefix of the generated student ids, e.g. `S` gives `S001`.
    pub id_prefix: String,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            size: 129,
            pass_rate: 0.6,
            targets: CorrelationTargets::default(),
            final_noise: 0.3,
            grade_shape: GradeShape::default(),
            layout: CourseLayout::default(),
            seed: 0,
            id_prefix: "S".to_string(),
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |msg: String| Err(DatagenError::InvalidSpec(msg));
        if self.size < MIN_COHORT_SIZE {
            return bad(format!("size {} below {MIN_COHORT_SIZE}", self.size));
        }
        if !(self.pass_rate > 0.0 && self.pass_rate < 1.0) {
            return bad(format!("pass rate {} outside (0, 1)", self.pass_rate));
        }
        let t = self.targets;
        for (name, v) in [("quiz", t.quiz), ("attendance", t.attendance), ("etest", t.etest)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} target {v} outside [0, 1]"));
            }
        }
        if !(self.final_noise.is_finite() && self.final_noise >= 0.0) {
            return bad(format!("final noise {} must be nonnegative", self.final_noise));
        }
        let shape = self.grade_shape;
        if !(0.0..=1.0).contains(&shape.missing_share_of_fails)
            || shape.passing_shares.iter().any(|s| s.is_nan() || *s < 0.0)
            || (shape.passing_shares.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("grade shape shares must be probabilities summing to one".into());
        }
        if self.id_prefix.chars().any(char::is_whitespace) {
            return bad(format!("id prefix `{}` contains whitespace", self.id_prefix));
        }
        self.layout.validate()?;
        Ok(())
    }
}

/// Realized link strengths after calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub quiz: f64,
    pub attendance: f64,
    pub etest: f64,
}

/// Cut points on a standard normal score for the grades n/a < 2 < 3 < 4 < 5.
#[derive(Debug, Clone, Copy)]
struct GradeCuts([f64; 4]);

impl GradeCuts {
    fn new(pass_rate: f64, shape: &GradeShape) -> Self {
        let normal = Normal::standard();
        let fail = 1.0 - pass_rate;
        let [s3, s4, _] = shape.passing_shares;
        let quantiles = [
            fail * shape.missing_share_of_fails,
            fail,
            fail + pass_rate * s3,
            fail + pass_rate * (s3 + s4),
        ];
        Self(quantiles.map(|q| normal.inverse_cdf(q.clamp(0.0, 1.0))))
    }

    fn grade(&self, score: f64) -> Grade {
        let above = self.0.iter().filter(|&&c| score >= c).count();
        Grade::ALL[above]
    }
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn mix(rho: f64, ability: f64, noise: f64) -> f64 {
    rho * ability + (1.0 - rho * rho).max(0.0).sqrt() * noise
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const STREAM_LATENT: u64 = 1;
const STREAM_QUIZ: u64 = 2;
const STREAM_ATTENDANCE: u64 = 3;
const STREAM_ETEST: u64 = 4;

struct Latent {
    ability: Vec<f64>,
    finals: Vec<Grade>,
}

fn draw_latent(spec: &CohortSpec, n: usize, seed: u64) -> Latent {
    let mut rng = stream(seed, STREAM_LATENT);
    let cuts = GradeCuts::new(spec.pass_rate, &spec.grade_shape);
    let scale = (1.0 + spec.final_noise * spec.final_noise).sqrt();
    let mut ability = Vec::with_capacity(n);
    let mut finals = Vec::with_capacity(n);
    for _ in 0..n {
        let a = std_normal(&mut rng);
        let e = std_normal(&mut rng);
        ability.push(a);
        finals.push(cuts.grade((a + spec.final_noise * e) / scale));
    }
    Latent { ability, finals }
}

fn draw_quizzes(spec: &CohortSpec, latent: &Latent, rho: f64, seed: u64) -> Vec<Vec<Grade>> {
    let mut rng = stream(seed, STREAM_QUIZ);
    let cuts = GradeCuts::new(spec.pass_rate, &spec.grade_shape);
    latent
        .ability
        .iter()
        .map(|&a| {
            (0..spec.layout.quizzes())
                .map(|_| cuts.grade(mix(rho, a, std_normal(&mut rng))))
                .collect()
        })
        .collect()
}

struct Attendance {
    lectures: Vec<Vec<bool>>,
    practicums: Vec<Vec<bool>>,
    plus_points: Vec<Vec<u32>>,
}

fn draw_attendance(spec: &CohortSpec, latent: &Latent, rho: f64, seed: u64) -> Attendance {
    let mut rng = stream(seed, STREAM_ATTENDANCE);
    let normal = Normal::standard();
    let weeks = spec.layout.semester_weeks as usize;
    let mut out = Attendance {
        lectures: Vec::with_capacity(latent.ability.len()),
        practicums: Vec::with_capacity(latent.ability.len()),
        plus_points: Vec::with_capacity(latent.ability.len()),
    };
    for &a in &latent.ability {
        let propensity = [0, 1].map(|k| {
            let z = mix(rho, a, std_normal(&mut rng));
            normal.cdf(ATTENDANCE_BASE[k] + ATTENDANCE_SPREAD * z)
        });
        let active = normal.cdf(-0.8 + 0.8 * mix(rho, a, std_normal(&mut rng)));
        let mut lec = Vec::with_capacity(weeks);
        let mut prac = Vec::with_capacity(weeks);
        let mut plus = Vec::with_capacity(weeks);
        for _ in 0..weeks {
            let (u_lec, u_prac, u_plus): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            let attended = u_prac < propensity[1];
            lec.push(u_lec < propensity[0]);
            prac.push(attended);
            plus.push(u32::from(attended && u_plus < active));
        }
        out.lectures.push(lec);
        out.practicums.push(prac);
        out.plus_points.push(plus);
    }
    out
}

struct Etests {
    scores: Vec<Vec<Option<f64>>>,
    attempts: Vec<Vec<u32>>,
}

fn draw_etests(spec: &CohortSpec, latent: &Latent, rho: f64, seed: u64) -> Etests {
    let mut rng = stream(seed, STREAM_ETEST);
    let normal = Normal::standard();
    let missing_cut = normal.inverse_cdf(ETEST_MISSING_SHARE);
    let layout = &spec.layout;
    let mut out = Etests {
        scores: Vec::with_capacity(latent.ability.len()),
        attempts: Vec::with_capacity(latent.ability.len()),
    };
    for &a in &latent.ability {
        let mut scores = Vec::with_capacity(layout.etests());
        let mut attempts = Vec::with_capacity(layout.etests());
        for t in 0..layout.etests() {
            let z = mix(rho, a, std_normal(&mut rng));
            let (u_try, u_extra): (f64, f64) = (rng.random(), rng.random());
            let max_attempts = layout.etest_max_attempts[t];
            let max_score = layout.etest_max_score[t];
            if z < missing_cut {
                scores.push(None);
                // Some students try and never get a score recorded.
                let tried = if u_try < 0.3 {
                    1 + (u_extra * f64::from(max_attempts)) as u32
                } else {
                    0
                };
                attempts.push(tried.min(max_attempts));
            } else {
                let score = (max_score * normal.cdf(0.6 + z)).round().clamp(0.0, max_score);
                scores.push(Some(score));
                // Extra attempts are geometric with a retry probability that
                // falls with ability; most students need one or two.
                let retry = normal.cdf(-0.6 - 0.5 * z);
                let extra = (u_extra.max(f64::MIN_POSITIVE).ln() / retry.ln()).floor();
                attempts.push((1.0 + extra).min(f64::from(max_attempts)) as u32);
            }
        }
        out.scores.push(scores);
        out.attempts.push(attempts);
    }
    out
}

fn final_points(latent: &Latent) -> Vec<f64> {
    latent.finals.iter().map(|g| g.points()).collect()
}

fn mean_correlation(columns: impl Iterator<Item = Vec<f64>>, finals: &[f64]) -> f64 {
    let values: Vec<f64> = columns.map(|c| pearson(&c, finals).unwrap_or(0.0)).collect();
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

/// Largest `rho` in [0, 1] whose measured correlation does not exceed the
/// target, by bisection.
fn solve_rho(
    item: &'static str,
    target: f64,
    measure: impl Fn(f64) -> f64,
) -> Result<f64, DatagenError> {
    if target == 0.0 {
        return Ok(0.0);
    }
    let max = measure(1.0);
    if max <= target {
        if max + FEASIBILITY_SLACK < target {
            return Err(DatagenError::Infeasible { item, target, max });
        }
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if measure(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves the quiz, attendance and e-test link strengths for `spec`.
pub fn calibrate(spec: &CohortSpec) -> Result<Calibration, DatagenError> {
    spec.validate()?;
    let latent = draw_latent(spec, CALIBRATION_SIZE, CALIBRATION_SEED);
    let finals = final_points(&latent);
    let quiz = solve_rho("quiz", spec.targets.quiz, |rho| {
        let q = draw_quizzes(spec, &latent, rho, CALIBRATION_SEED);
        mean_correlation(
            (0..spec.layout.quizzes()).map(|k| q.iter().map(|s| s[k].points()).collect()),
            &finals,
        )
    })?;
    let weeks = spec.layout.semester_weeks as usize;
    let attendance = solve_rho("attendance", spec.targets.attendance, |rho| {
        let att = draw_attendance(spec, &latent, rho, CALIBRATION_SEED);
        let total = |rows: &[Vec<bool>]| {
            rows.iter()
                .map(|r| r[..weeks].iter().filter(|&&b| b).count() as f64)
                .collect::<Vec<_>>()
        };
        mean_correlation([total(&att.lectures), total(&att.practicums)].into_iter(), &finals)
    })?;
    let etest = solve_rho("etest", spec.targets.etest, |rho| {
        let e = draw_etests(spec, &latent, rho, CALIBRATION_SEED);
        mean_correlation(
            (0..spec.layout.etests()).map(|t| e.scores.iter().map(|s| s[t].unwrap_or(0.0)).collect()),
            &finals,
        )
    })?;
    Ok(Calibration {
        quiz,
        attendance,
        etest,
    })
}

/// Generates a cohort; identical specs give identical cohorts.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<StudentRecord>, DatagenError> {
    let calibration = calibrate(spec)?;
    generate_with(spec, &calibration)
}

/// Generates a cohort from already-solved link strengths.
pub fn generate_with(
    spec: &CohortSpec,
    calibration: &Calibration,
) -> Result<Vec<StudentRecord>, DatagenError> {
    spec.validate()?;
    let latent = draw_latent(spec, spec.size, spec.seed);
    let quizzes = draw_quizzes(spec, &latent, calibration.quiz, spec.seed);
    let attendance = draw_attendance(spec, &latent, calibration.attendance, spec.seed);
    let etests = draw_etests(spec, &latent, calibration.etest, spec.seed);
    let width = spec.size.to_string().len().max(3);
    let records: Vec<StudentRecord> = (0..spec.size)
        .map(|i| StudentRecord {
            id: format!("{}{:0width$}", spec.id_prefix, i + 1),
            lectures: attendance.lectures[i].clone(),
            practicums: attendance.practicums[i].clone(),
            plus_points: attendance.plus_points[i].clone(),
            quizzes: quizzes[i].clone(),
            etest_scores: etests.scores[i].clone(),
            etest_attempts: etests.attempts[i].clone(),
            final_grade: latent.finals[i],
        })
        .collect();
    for r in &records {
        r.validate(&spec.layout)?;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grade_cuts_follow_shape() {
        let cuts = GradeCuts::new(0.6, &GradeShape::default());
        // 40% fail, 30% of those missing: cut at the 12th percentile.
        assert!((Normal::standard().cdf(cuts.0[0]) - 0.12).abs() < 1e-9);
        assert!((Normal::standard().cdf(cuts.0[1]) - 0.40).abs() < 1e-9);
        assert_eq!(cuts.grade(-5.0), Grade::NotAvailable);
        assert_eq!(cuts.grade(5.0), Grade::Five);
    }

    #[test]
    fn spec_validation() {
        let mut spec = CohortSpec::default();
        spec.validate().unwrap();
        spec.size = 5;
        assert!(spec.validate().is_err());
        let mut spec = CohortSpec::default();
        spec.targets.quiz = 1.2;
        assert!(spec.validate().is_err());
        let spec = CohortSpec {
            pass_rate: 1.0,
            ..CohortSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn bisection_finds_crossing() {
        let rho = solve_rho("x", 0.5, |r| r * r).unwrap();
        assert!((rho - 0.5f64.sqrt()).abs() < 1e-9);
        assert_eq!(solve_rho("x", 0.0, |r| r).unwrap(), 0.0);
        assert!(matches!(
            solve_rho("x", 0.9, |r| 0.5 * r),
            Err(DatagenError::Infeasible { .. })
        ));
    }

    #[test]
    fn infeasible_target_is_reported() {
        let spec = CohortSpec {
            final_noise: 3.0,
            targets: CorrelationTargets {
                quiz: 0.95,
                ..CorrelationTargets::default()
            },
            ..CohortSpec::default()
        };
        assert!(matches!(
            generate_cohort(&spec),
            Err(DatagenError::Infeasible { item: "quiz", .. })
        ));
    }

    #[test]
    fn attempts_stay_within_limits() {
        let spec = CohortSpec {
            size: 300,
            ..CohortSpec::default()
        };
        let cal = Calibration {
            quiz: 0.8,
            attendance: 0.8,
            etest: 0.5,
        };
        let cohort = generate_with(&spec, &cal).unwrap();
        let taken: Vec<u32> = cohort
            .iter()
            .flat_map(|r| r.etest_scores.iter().zip(&r.etest_attempts))
            .filter(|(s, _)| s.is_some())
            .map(|(_, &a)| a)
            .collect();
        assert!(taken.iter().all(|&a| a >= 1));
        let small = taken.iter().filter(|&&a| a <= 2).count() as f64 / taken.len() as f64;
        assert!(small > 0.7, "share of 1-2 attempts {small}");
    }
}
