//! Early warning for students at risk of failing a course.
//!
//! Each week of the semester a discrete Bayesian network is fitted on past
//! students, with the final exam outcome as the root and the predictors
//! observed so far (attendance, plus points, quiz grades, e-test scores and
//! attempt counts) as its children. A current student is flagged as at risk
//! when the posterior probability of failing the exam exceeds a cutoff.
//!
//! - [`bn`]: generic discrete Bayesian networks with exact inference.
//! - [`course`]: predictor schema, weekly networks, and at-risk verdicts.
//! - [`baselines`]: kNN and LDA on numeric encodings of the same predictors.
//! - [`eval`]: metrics, replicated stratified cross-validation, statistics.
//! - [`datagen`]: calibrated synthetic cohorts and the CSV record format.
//! - [`report`]: CSV tables and SVG charts for evaluation runs.

pub mod baselines;
pub mod bn;
pub mod course;
pub mod datagen;
pub mod eval;
pub mod record;
pub mod report;

pub use record::{label_outcome, CourseLayout, Grade, Outcome, StudentRecord};
