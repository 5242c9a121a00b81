//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string. The `*_json` functions hold the logic
//! and are plain Rust so they can be tested natively.

use std::sync::OnceLock;

use atrisk_core::course::{classify_cohort, CourseSchema};
use atrisk_core::datagen::{calibrate, generate_with, Calibration, CohortSpec, CorrelationTargets};
use atrisk_core::eval::{
    average_metric, descriptive_stats, make_testing_sets, run_protocol, EvalParams, MetricName,
    ModelKind,
};
use atrisk_core::{Outcome, StudentRecord};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Current students classified against the training cohort.
const CURRENT_STUDENTS: usize = 60;
const MAX_SETS: u32 = 15;

fn default_calibration() -> Result<&'static Calibration, String> {
    static CAL: OnceLock<Calibration> = OnceLock::new();
    if let Some(c) = CAL.get() {
        return Ok(c);
    }
    let c = calibrate(&CohortSpec::default()).map_err(|e| e.to_string())?;
    Ok(CAL.get_or_init(|| c))
}

fn cohort(seed: u32, size: usize, prefix: &str) -> Result<Vec<StudentRecord>, String> {
    let spec = CohortSpec {
        size,
        seed: u64::from(seed),
        id_prefix: prefix.to_string(),
        ..CohortSpec::default()
    };
    generate_with(&spec, default_calibration()?).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct StudentPosterior {
    id: String,
    p_fail: f64,
    failed: bool,
}

#[derive(Serialize)]
struct WeekPosteriors {
    week: u32,
    training_size: usize,
    students: Vec<StudentPosterior>,
}

/// Posterior failure probability of each current student in `week`, with the
/// outcome they went on to have. The page applies the cutoff itself.
pub fn week_posteriors_json(seed: u32, week: u32) -> Result<String, String> {
    let schema = CourseSchema::default();
    schema.check_week(week).map_err(|e| e.to_string())?;
    let training = cohort(seed, CohortSpec::default().size, "S")?;
    let current = cohort(seed.wrapping_add(1), CURRENT_STUDENTS, "N")?;
    let verdicts = classify_cohort(&schema, &training, &current, week).map_err(|e| e.to_string())?;
    let students = verdicts
        .into_iter()
        .zip(&current)
        .map(|(v, r)| StudentPosterior {
            id: v.student_id,
            p_fail: v.p_fail,
            failed: r.outcome() == Outcome::Fail,
        })
        .collect();
    serde_json::to_string(&WeekPosteriors {
        week,
        training_size: training.len(),
        students,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    sets: u32,
    weeks: Vec<u32>,
    series: Vec<(String, Vec<Option<f64>>)>,
}

/// Average BNC metrics per week over `sets` testing sets of 5 folds.
pub fn bnc_curve_json(seed: u32, sets: u32, cutoff: f64) -> Result<String, String> {
    if !(1..=MAX_SETS).contains(&sets) {
        return Err(format!("sets must be in 1..={MAX_SETS}"));
    }
    let schema = CourseSchema {
        cutoff,
        ..CourseSchema::default()
    };
    schema.validate().map_err(|e| e.to_string())?;
    let records = cohort(seed, CohortSpec::default().size, "S")?;
    let testing = make_testing_sets(&records, sets as usize, 5, u64::from(seed)).map_err(|e| e.to_string())?;
    let results = run_protocol(&schema, &records, &testing, &[ModelKind::Bnc], &EvalParams::default())
        .map_err(|e| e.to_string())?;
    let bnc = &results[&ModelKind::Bnc];
    let weeks = (1..=schema.semester_weeks()).collect();
    let series = MetricName::ALL
        .iter()
        .map(|&m| (m.to_string(), average_metric(bnc, m).into_iter().map(|(_, v)| v).collect()))
        .collect();
    serde_json::to_string(&Curve { sets, weeks, series }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Correlations {
    size: usize,
    pass_rate: f64,
    quiz: Vec<Option<f64>>,
    etest: Vec<Option<f64>>,
    attendance_weeks: Vec<u32>,
    lectures: Vec<Option<f64>>,
    practicums: Vec<Option<f64>>,
}

/// Generates a cohort for the given correlation targets and reports the
/// correlations it actually realizes.
pub fn cohort_correlations_json(
    seed: u32,
    size: usize,
    quiz: f64,
    attendance: f64,
    etest: f64,
) -> Result<String, String> {
    let spec = CohortSpec {
        size,
        seed: u64::from(seed),
        targets: CorrelationTargets {
            quiz,
            attendance,
            etest,
        },
        ..CohortSpec::default()
    };
    let calibration = calibrate(&spec).map_err(|e| e.to_string())?;
    let records = generate_with(&spec, &calibration).map_err(|e| e.to_string())?;
    let weeks = vec![4, 8, 12, 17];
    let report = descriptive_stats(&records, &spec.layout, &weeks).map_err(|e| e.to_string())?;
    serde_json::to_string(&Correlations {
        size,
        pass_rate: report.pass_rate,
        quiz: report.quiz_correlations,
        etest: report.etest_correlations,
        lectures: report.attendance_correlations.iter().map(|a| a.lectures).collect(),
        practicums: report.attendance_correlations.iter().map(|a| a.practicums).collect(),
        attendance_weeks: weeks,
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = weekPosteriors)]
pub fn week_posteriors(seed: u32, week: u32) -> Result<String, JsError> {
    week_posteriors_json(seed, week).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = bncCurve)]
pub fn bnc_curve(seed: u32, sets: u32, cutoff: f64) -> Result<String, JsError> {
    bnc_curve_json(seed, sets, cutoff).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = cohortCorrelations)]
pub fn cohort_correlations(
    seed: u32,
    size: usize,
    quiz: f64,
    attendance: f64,
    etest: f64,
) -> Result<String, JsError> {
    cohort_correlations_json(seed, size, quiz, attendance, etest).map_err(|e| JsError::new(&e))
}
