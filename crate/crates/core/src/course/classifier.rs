use std::collections::HashSet;
use std::io::Write;

use crate::bn::{fit_cpts, posterior, Dag, DiscreteBayesNet, NodeSpec};
use crate::record::{Outcome, StudentRecord};

use super::{
    check_cutoff, discretize, CourseError, CourseSchema, PredictorKind, StructureRule,
    WeeklySnapshot, EXAM, EXAM_CATEGORIES,
};

/// Result of checking one student in one week.
#[derive(Debug, Clone, PartialEq)]
pub struct AtRiskVerdict {
    pub student_id: String,
    pub week: u32,
    pub p_fail: f64,
    pub at_risk: bool,
}

/// Structure of the week-`week` network: `Exam` followed by the available
/// predictors in schema order.
pub fn week_dag(schema: &CourseSchema, week: u32) -> Result<Dag, CourseError> {
    schema.check_week(week)?;
    let available: Vec<_> = schema.available(week).collect();
    let mut nodes = vec![NodeSpec::new(EXAM, EXAM_CATEGORIES)];
    nodes.extend(
        available
            .iter()
            .map(|p| NodeSpec::new(p.name.clone(), p.discretization.categories().iter().copied())),
    );
    let present: HashSet<&str> = nodes.iter().map(|n| n.name.as_str()).collect();
    let edges = match &schema.structure {
        StructureRule::ExamRooted => {
            let mut edges = Vec::new();
            for p in &available {
                edges.push((EXAM.to_string(), p.name.clone()));
                if p.kind == PredictorKind::Persistence {
                    if let Some(link) = p.linked_etest.as_ref().filter(|l| present.contains(l.as_str())) {
                        edges.push((link.clone(), p.name.clone()));
                    }
                }
            }
            edges
        }
        StructureRule::Explicit { edges } => edges
            .iter()
            .filter(|[a, b]| present.contains(a.as_str()) && present.contains(b.as_str()))
            .map(|[a, b]| (a.clone(), b.clone()))
            .collect(),
    };
    let dag = Dag::new(nodes, edges);
    dag.validate()?;
    Ok(dag)
}

fn exam_label(outcome: Outcome) -> &'static str {
    EXAM_CATEGORIES[outcome.label() as usize]
}

/// Fits the week-`week` network on discretized training records.
pub fn build_week_network(
    schema: &CourseSchema,
    training: &[StudentRecord],
    week: u32,
) -> Result<DiscreteBayesNet, CourseError> {
    let dag = week_dag(schema, week)?;
    if training.is_empty() {
        return Err(CourseError::NoTrainingRecords);
    }
    let available: Vec<_> = schema.available(week).collect();
    let rows = training
        .iter()
        .map(|r| {
            std::iter::once(Ok(exam_label(r.outcome())))
                .chain(
                    available
                        .iter()
                        .map(|p| discretize(p, p.raw_value(r, week), week)),
                )
                .collect::<Result<Vec<&str>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(fit_cpts(&dag, &rows, schema.smoothing)?)
}

/// Posterior probability of failing the exam, flagged when it exceeds `cutoff`.
pub fn classify_student(
    net: &DiscreteBayesNet,
    snapshot: &WeeklySnapshot,
    cutoff: f64,
) -> Result<AtRiskVerdict, CourseError> {
    check_cutoff(cutoff)?;
    if let Some((name, _)) = snapshot
        .evidence
        .iter()
        .find(|(name, _)| net.node_index(name).is_none())
    {
        return Err(CourseError::UnknownEvidenceNode(name.to_string()));
    }
    let dist = posterior(net, &snapshot.evidence, EXAM)?;
    let p_fail = dist.probability(Outcome::Fail.label() as usize);
    Ok(AtRiskVerdict {
        student_id: snapshot.student_id.clone(),
        week: snapshot.week,
        p_fail,
        at_risk: p_fail > cutoff,
    })
}

/// Trains the week network on `training` and classifies every `test` record
/// with the schema's cutoff. Verdicts follow the order of `test`.
pub fn classify_cohort(
    schema: &CourseSchema,
    training: &[StudentRecord],
    test: &[StudentRecord],
    week: u32,
) -> Result<Vec<AtRiskVerdict>, CourseError> {
    let train_ids: HashSet<&str> = training.iter().map(|r| r.id.as_str()).collect();
    if let Some(r) = test.iter().find(|r| train_ids.contains(r.id.as_str())) {
        return Err(CourseError::OverlappingIds(r.id.clone()));
    }
    let net = build_week_network(schema, training, week)?;
    let classify = |r: &StudentRecord| {
        let snapshot = WeeklySnapshot::from_record(schema, r, week)?;
        classify_student(&net, &snapshot, schema.cutoff)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        test.par_iter().map(classify).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        test.iter().map(classify).collect()
    }
}

/// Writes verdicts as `student_id,week,p_fail,at_risk`.
pub fn write_verdicts<W: Write>(writer: W, verdicts: &[AtRiskVerdict]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["student_id", "week", "p_fail", "at_risk"])?;
    for v in verdicts {
        out.write_record([
            v.student_id.clone(),
            v.week.to_string(),
            v.p_fail.to_string(),
            u8::from(v.at_risk).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::Evidence;
    use crate::record::{CourseLayout, Grade};

    fn schema() -> CourseSchema {
        CourseSchema::default()
    }

    fn names(dag: &Dag) -> Vec<&str> {
        dag.nodes.iter().map(|n| n.name.as_str()).collect()
    }

    #[test]
    fn week_one_has_no_quiz() {
        let dag = week_dag(&schema(), 1).unwrap();
        assert_eq!(names(&dag), vec!["Exam", "Lec", "Prac", "Plus"]);
    }

    #[test]
    fn week_six_adds_first_quiz() {
        let dag = week_dag(&schema(), 6).unwrap();
        assert!(names(&dag).contains(&"Quiz_1"));
        assert!(!names(&dag).contains(&"Quiz_2"));
        assert_eq!(dag.parents("Persist_3"), vec!["Exam", "e-test_3"]);
    }

    #[test]
    fn final_week_has_every_node() {
        let dag = week_dag(&schema(), 17).unwrap();
        let n = names(&dag);
        assert_eq!(n.iter().filter(|s| s.starts_with("Quiz_")).count(), 3);
        assert_eq!(n.iter().filter(|s| s.starts_with("e-test_")).count(), 16);
        assert_eq!(n.iter().filter(|s| s.starts_with("Persist_")).count(), 16);
        assert!(week_dag(&schema(), 18).is_err());
        assert!(week_dag(&schema(), 0).is_err());
    }

    #[test]
    fn explicit_structure_drops_unavailable_edges() {
        let mut s = schema();
        s.structure = StructureRule::Explicit {
            edges: vec![
                ["Exam".into(), "Quiz_1".into()],
                ["Quiz_1".into(), "Quiz_2".into()],
                ["Exam".into(), "Lec".into()],
            ],
        };
        s.validate().unwrap();
        let dag = week_dag(&s, 6).unwrap();
        assert_eq!(dag.edges.len(), 2);
        assert_eq!(week_dag(&s, 13).unwrap().edges.len(), 3);
    }

    fn student(id: &str, grade: Grade, attend: bool, layout: &CourseLayout) -> StudentRecord {
        let mut r = StudentRecord::blank(id, layout);
        r.lectures = vec![attend; layout.semester_weeks as usize];
        r.practicums = vec![attend; layout.semester_weeks as usize];
        r.final_grade = grade;
        r
    }

    #[test]
    fn cutoff_is_strict() {
        let s = schema();
        let training = [
            student("a", Grade::Two, false, &s.layout),
            student("b", Grade::Five, true, &s.layout),
        ];
        let net = build_week_network(&s, &training, 1).unwrap();
        let snap = WeeklySnapshot {
            student_id: "x".into(),
            week: 1,
            evidence: Evidence::new(),
        };
        let prior = classify_student(&net, &snap, 0.3).unwrap().p_fail;
        assert!((prior - 0.5).abs() < 1e-12);
        assert!(!classify_student(&net, &snap, 0.5).unwrap().at_risk);
        assert!(classify_student(&net, &snap, 0.49).unwrap().at_risk);
        assert!(matches!(
            classify_student(&net, &snap, 0.0),
            Err(CourseError::InvalidCutoff(_))
        ));
    }

    #[test]
    fn empty_evidence_gives_smoothed_training_prior() {
        let s = schema();
        let training: Vec<_> = (0..10)
            .map(|i| {
                let grade = if i < 3 { Grade::NotAvailable } else { Grade::Four };
                student(&format!("s{i}"), grade, i % 2 == 0, &s.layout)
            })
            .collect();
        let net = build_week_network(&s, &training, 4).unwrap();
        let snap = WeeklySnapshot {
            student_id: "q".into(),
            week: 4,
            evidence: Evidence::new(),
        };
        let v = classify_student(&net, &snap, 0.5).unwrap();
        // Laplace prior with alpha = 1: (3 + 1) / (10 + 2).
        assert!((v.p_fail - 4.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn cohort_errors() {
        let s = schema();
        let a = student("a", Grade::Two, false, &s.layout);
        assert!(matches!(
            classify_cohort(&s, &[], std::slice::from_ref(&a), 1),
            Err(CourseError::NoTrainingRecords)
        ));
        assert!(matches!(
            classify_cohort(&s, std::slice::from_ref(&a), std::slice::from_ref(&a), 1),
            Err(CourseError::OverlappingIds(_))
        ));
        assert!(classify_cohort(&s, &[a], &[], 3).unwrap().is_empty());
    }

    #[test]
    fn verdict_csv_layout() {
        let mut buf = Vec::new();
        write_verdicts(
            &mut buf,
            &[AtRiskVerdict {
                student_id: "s1".into(),
                week: 3,
                p_fail: 0.75,
                at_risk: true,
            }],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "student_id,week,p_fail,at_risk\ns1,3,0.75,1\n");
    }
}
