//! Descriptive statistics of a cohort: grade distribution, correlations of
//! each assessment with the final grade, and attendance shares.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::record::{CourseLayout, Grade, StudentRecord};

use super::EvalError;

/// Attendance count a student must exceed to count as a regular attender.
pub const ATTENDANCE_THRESHOLD: u32 = 10;

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson needs paired samples");
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttendanceCorrelation {
    pub week: u32,
    pub lectures: Option<f64>,
    pub practicums: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveReport {
    pub students: usize,
    pub grade_counts: BTreeMap<Grade, usize>,
    pub pass_rate: f64,
    pub quiz_correlations: Vec<Option<f64>>,
    pub etest_correlations: Vec<Option<f64>>,
    pub attendance_correlations: Vec<AttendanceCorrelation>,
    /// Share attending more than [`ATTENDANCE_THRESHOLD`] lectures.
    pub lecture_share: f64,
    pub practicum_share: f64,
}

/// Summarizes a cohort. Grades are numeric with n/a as 0; attendance
/// correlations use cumulative counts at each of `attendance_weeks`.
pub fn descriptive_stats(
    cohort: &[StudentRecord],
    layout: &CourseLayout,
    attendance_weeks: &[u32],
) -> Result<DescriptiveReport, EvalError> {
    if cohort.is_empty() {
        return Err(EvalError::EmptyCohort);
    }
    for r in cohort {
        r.validate(layout)?;
    }
    if let Some(&w) = attendance_weeks
        .iter()
        .find(|&&w| w == 0 || w > layout.semester_weeks)
    {
        return Err(EvalError::Course(crate::course::CourseError::WeekOutOfRange {
            week: w,
            weeks: layout.semester_weeks,
        }));
    }
    let n = cohort.len();
    let finals: Vec<f64> = cohort.iter().map(|r| r.final_grade.points()).collect();
    let column = |f: &dyn Fn(&StudentRecord) -> f64| -> Vec<f64> { cohort.iter().map(f).collect() };

    let mut grade_counts: BTreeMap<Grade, usize> = Grade::ALL.iter().map(|&g| (g, 0)).collect();
    for r in cohort {
        *grade_counts.get_mut(&r.final_grade).expect("all grades present") += 1;
    }
    let passed = cohort.iter().filter(|r| r.final_grade.is_passing()).count();

    let quiz_correlations = (0..layout.quizzes())
        .map(|q| pearson(&column(&|r| r.quizzes[q].points()), &finals))
        .collect();
    let etest_correlations = (0..layout.etests())
        .map(|t| pearson(&column(&|r| r.etest_scores[t].unwrap_or(0.0)), &finals))
        .collect();
    let attendance_correlations = attendance_weeks
        .iter()
        .map(|&week| AttendanceCorrelation {
            week,
            lectures: pearson(&column(&|r| r.lectures_through(week).into()), &finals),
            practicums: pearson(&column(&|r| r.practicums_through(week).into()), &finals),
        })
        .collect();
    let share = |count: &dyn Fn(&StudentRecord) -> u32| {
        cohort
            .iter()
            .filter(|r| count(r) > ATTENDANCE_THRESHOLD)
            .count() as f64
            / n as f64
    };
    let weeks = layout.semester_weeks;

    Ok(DescriptiveReport {
        students: n,
        grade_counts,
        pass_rate: passed as f64 / n as f64,
        quiz_correlations,
        etest_correlations,
        attendance_correlations,
        lecture_share: share(&|r| r.lectures_through(weeks)),
        practicum_share: share(&|r| r.practicums_through(weeks)),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "—".to_string(), |x| format!("{x:.4}"))
}

impl DescriptiveReport {
    /// Long-format CSV: `statistic,item,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["statistic", "item", "value"])?;
        out.write_record(["students", "", &self.students.to_string()])?;
        for (g, c) in &self.grade_counts {
            out.write_record(["final_grade_count", g.label(), &c.to_string()])?;
        }
        out.write_record(["pass_rate", "", &format!("{:.4}", self.pass_rate)])?;
        for (i, c) in self.quiz_correlations.iter().enumerate() {
            out.write_record(["corr_quiz_final", &format!("quiz_{}", i + 1), &cell(*c)])?;
        }
        for (i, c) in self.etest_correlations.iter().enumerate() {
            out.write_record(["corr_etest_final", &format!("etest_{}", i + 1), &cell(*c)])?;
        }
        for a in &self.attendance_correlations {
            let week = format!("week_{}", a.week);
            out.write_record(["corr_lectures_final", &week, &cell(a.lectures)])?;
            out.write_record(["corr_practicums_final", &week, &cell(a.practicums)])?;
        }
        let t = ATTENDANCE_THRESHOLD;
        out.write_record(["share_lectures_above", &t.to_string(), &format!("{:.4}", self.lecture_share)])?;
        out.write_record([
            "share_practicums_above",
            &t.to_string(),
            &format!("{:.4}", self.practicum_share),
        ])?;
        out.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let pct = |v: Option<f64>| v.map_or_else(|| "—".to_string(), |x| format!("{:.0}%", 100.0 * x));
        let _ = writeln!(s, "Students: {}", self.students);
        let _ = writeln!(s, "Final grades:");
        for (g, c) in &self.grade_counts {
            let _ = writeln!(s, "  {:>3}: {c}", g.label());
        }
        let _ = writeln!(s, "Pass rate: {:.1}%", 100.0 * self.pass_rate);
        let quizzes: Vec<String> = self.quiz_correlations.iter().map(|c| pct(*c)).collect();
        let _ = writeln!(s, "Quiz/final correlations: {}", quizzes.join(", "));
        let defined: Vec<f64> = self.etest_correlations.iter().flatten().copied().collect();
        if let (Some(lo), Some(hi)) = (
            defined.iter().copied().reduce(f64::min),
            defined.iter().copied().reduce(f64::max),
        ) {
            let _ = writeln!(
                s,
                "E-test/final correlations: {} to {}",
                pct(Some(lo)),
                pct(Some(hi))
            );
        }
        for a in &self.attendance_correlations {
            let _ = writeln!(
                s,
                "Attendance/final correlation at week {}: lectures {}, practicums {}",
                a.week,
                pct(a.lectures),
                pct(a.practicums)
            );
        }
        let _ = writeln!(
            s,
            "Attended more than {ATTENDANCE_THRESHOLD}: lectures {:.0}%, practicums {:.0}%",
            100.0 * self.lecture_share,
            100.0 * self.practicum_share
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &[2.0, 4.0, 6.0, 8.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &[8.0, 6.0, 4.0, 2.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&x, &[1.0; 4]), None);
        assert_eq!(pearson(&[1.0], &[2.0]), None);
    }

    fn cohort() -> (CourseLayout, Vec<StudentRecord>) {
        let layout = CourseLayout::default();
        let grades = [Grade::Two, Grade::Three, Grade::Four, Grade::Five, Grade::NotAvailable];
        let records = grades
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let mut r = StudentRecord::blank(format!("s{i}"), &layout);
                r.final_grade = g;
                r.quizzes = vec![g; 3];
                for w in 0..(3 * i + 2) {
                    r.lectures[w] = true;
                }
                r
            })
            .collect();
        (layout, records)
    }

    #[test]
    fn quiz_equal_to_final_correlates_perfectly() {
        let (layout, records) = cohort();
        let report = descriptive_stats(&records, &layout, &[4, 17]).unwrap();
        for c in &report.quiz_correlations {
            assert!((c.unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(report.etest_correlations, vec![None; 16]);
        assert_eq!(report.grade_counts[&Grade::NotAvailable], 1);
        assert!((report.pass_rate - 0.6).abs() < 1e-12);
        assert!((report.lecture_share - 0.4).abs() < 1e-12);
        assert_eq!(report.attendance_correlations[1].practicums, None);
    }

    #[test]
    fn constant_final_grades_leave_correlations_undefined() {
        let (layout, mut records) = cohort();
        for r in &mut records {
            r.final_grade = Grade::Four;
        }
        let report = descriptive_stats(&records, &layout, &[17]).unwrap();
        assert!(report.quiz_correlations.iter().all(Option::is_none));
        assert!(report.attendance_correlations[0].lectures.is_none());
    }

    #[test]
    fn empty_cohort_is_an_error() {
        assert!(matches!(
            descriptive_stats(&[], &CourseLayout::default(), &[17]),
            Err(EvalError::EmptyCohort)
        ));
    }

    #[test]
    fn report_renders() {
        let (layout, records) = cohort();
        let report = descriptive_stats(&records, &layout, &[17]).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert!(csv.contains("corr_quiz_final,quiz_1,1.0000"));
        assert!(report.to_text().contains("Quiz/final correlations: 100%, 100%, 100%"));
    }
}
