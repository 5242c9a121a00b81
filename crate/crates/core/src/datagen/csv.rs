//! Wide CSV layout, one student per row:
//! `student_id, lec_w1.., prac_w1.., plus_w1.., quiz_1.., etest_1.., att_1.., final_grade`.
//! Attendance is `0`/`1`; missing grades and scores are the literal `n/a`.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::record::{CourseLayout, Grade, StudentRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the file, header included.
    pub line: usize,
    pub column: String,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column `{}`: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("csv: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("{} invalid value(s):\n{}", .0.len(), .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Rows(Vec<RowError>),
}

fn columns(weeks: usize, quizzes: usize, etests: usize) -> Vec<String> {
    let weeks = 1..=weeks;
    let mut cols = vec!["student_id".to_string()];
    cols.extend(weeks.clone().map(|w| format!("lec_w{w}")));
    cols.extend(weeks.clone().map(|w| format!("prac_w{w}")));
    cols.extend(weeks.map(|w| format!("plus_w{w}")));
    cols.extend((1..=quizzes).map(|q| format!("quiz_{q}")));
    cols.extend((1..=etests).map(|t| format!("etest_{t}")));
    cols.extend((1..=etests).map(|t| format!("att_{t}")));
    cols.push("final_grade".to_string());
    cols
}

/// Writes records sorted by student id.
pub fn export_csv<W: Write>(writer: W, records: &[StudentRecord]) -> Result<(), IngestError> {
    let shape = |r: &StudentRecord| (r.lectures.len(), r.quizzes.len(), r.etest_scores.len());
    let mut out = ::csv::Writer::from_writer(writer);
    let (weeks, quizzes, etests) = match records.first() {
        Some(first) => shape(first),
        None => {
            let layout = CourseLayout::default();
            (layout.semester_weeks as usize, layout.quizzes(), layout.etests())
        }
    };
    out.write_record(columns(weeks, quizzes, etests))?;

    let mut sorted: Vec<&StudentRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for r in sorted {
        if shape(r) != (weeks, quizzes, etests) {
            return Err(IngestError::Rows(vec![RowError {
                line: 0,
                column: "student_id".into(),
                message: format!("record `{}` has a different course layout", r.id),
            }]));
        }
        let flag = |b: &bool| if *b { "1" } else { "0" }.to_string();
        let mut row = vec![r.id.clone()];
        row.extend(r.lectures.iter().map(flag));
        row.extend(r.practicums.iter().map(flag));
        row.extend(r.plus_points.iter().map(u32::to_string));
        row.extend(r.quizzes.iter().map(|g| g.label().to_string()));
        row.extend(
            r.etest_scores
                .iter()
                .map(|s| s.map_or_else(|| "n/a".to_string(), |v| v.to_string())),
        );
        row.extend(r.etest_attempts.iter().map(u32::to_string));
        row.push(r.final_grade.label().to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses and validates every row, reporting all bad cells at once.
pub fn ingest_csv<R: Read>(reader: R, layout: &CourseLayout) -> Result<Vec<StudentRecord>, IngestError> {
    let mut input = ::csv::ReaderBuilder::new().trim(::csv::Trim::All).from_reader(reader);
    let header: HashMap<String, usize> = input
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_string(), i))
        .collect();
    let expected = columns(layout.semester_weeks as usize, layout.quizzes(), layout.etests());
    let missing: Vec<String> = expected
        .iter()
        .filter(|c| !header.contains_key(*c))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingColumns(missing));
    }

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, row) in input.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let cell = |col: &str| row.get(header[col]).unwrap_or("").to_string();
        let mut fail = |col: &str, message: String| {
            errors.push(RowError {
                line,
                column: col.to_string(),
                message,
            })
        };

        let id = cell("student_id");
        if id.is_empty() {
            fail("student_id", "empty student id".into());
        }
        let mut record = StudentRecord::blank(id, layout);
        for w in 0..layout.semester_weeks as usize {
            for (prefix, target) in [("lec", &mut record.lectures), ("prac", &mut record.practicums)] {
                let col = format!("{prefix}_w{}", w + 1);
                match cell(&col).as_str() {
                    "0" => target[w] = false,
                    "1" => target[w] = true,
                    other => fail(&col, format!("expected 0 or 1, got `{other}`")),
                }
            }
            let col = format!("plus_w{}", w + 1);
            match cell(&col).parse::<u32>() {
                Ok(v) => record.plus_points[w] = v,
                Err(_) => fail(&col, format!("expected a nonnegative integer, got `{}`", cell(&col))),
            }
        }
        for q in 0..layout.quizzes() {
            let col = format!("quiz_{}", q + 1);
            match cell(&col).parse::<Grade>() {
                Ok(g) => record.quizzes[q] = g,
                Err(e) => fail(&col, e.to_string()),
            }
        }
        for t in 0..layout.etests() {
            let col = format!("etest_{}", t + 1);
            let raw = cell(&col);
            let max = layout.etest_max_score[t];
            if raw != "n/a" {
                match raw.parse::<f64>() {
                    Ok(v) if (0.0..=max).contains(&v) => record.etest_scores[t] = Some(v),
                    Ok(v) => fail(&col, format!("score {v} outside [0, {max}]")),
                    Err(_) => fail(&col, format!("expected a score or n/a, got `{raw}`")),
                }
            }
            let col = format!("att_{}", t + 1);
            let limit = layout.etest_max_attempts[t];
            match cell(&col).parse::<u32>() {
                Ok(v) if v <= limit => record.etest_attempts[t] = v,
                Ok(v) => fail(&col, format!("{v} attempts exceed the limit of {limit}")),
                Err(_) => fail(&col, format!("expected an attempt count, got `{}`", cell(&col))),
            }
        }
        match cell("final_grade").parse::<Grade>() {
            Ok(g) => record.final_grade = g,
            Err(e) => fail("final_grade", e.to_string()),
        }
        records.push(record);
    }

    let mut seen = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(first) = seen.insert(r.id.clone(), i + 2) {
            errors.push(RowError {
                line: i + 2,
                column: "student_id".into(),
                message: format!("duplicate id `{}` (first on line {first})", r.id),
            });
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(IngestError::Rows(errors))
    }
}

pub fn read_csv_file(path: &Path, layout: &CourseLayout) -> Result<Vec<StudentRecord>, IngestError> {
    ingest_csv(BufReader::new(File::open(path)?), layout)
}

pub fn write_csv_file(path: &Path, records: &[StudentRecord]) -> Result<(), IngestError> {
    let mut w = BufWriter::new(File::create(path)?);
    export_csv(&mut w, records)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(layout: &CourseLayout) -> Vec<StudentRecord> {
        let mut a = StudentRecord::blank("b2", layout);
        a.lectures[0] = true;
        a.plus_points[3] = 2;
        a.quizzes[1] = Grade::Four;
        a.etest_scores[0] = Some(7.5);
        a.etest_attempts[0] = 2;
        a.final_grade = Grade::Three;
        let b = StudentRecord::blank("a1", layout);
        vec![a, b]
    }

    #[test]
    fn round_trip_sorts_by_id() {
        let layout = CourseLayout::default();
        let records = sample(&layout);
        let mut buf = Vec::new();
        export_csv(&mut buf, &records).unwrap();
        let back = ingest_csv(buf.as_slice(), &layout).unwrap();
        assert_eq!(back, vec![records[1].clone(), records[0].clone()]);
        let mut again = Vec::new();
        export_csv(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn header_only_is_empty_cohort() {
        let layout = CourseLayout::default();
        let mut buf = Vec::new();
        export_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 1);
        assert!(ingest_csv(buf.as_slice(), &layout).unwrap().is_empty());
    }

    #[test]
    fn bad_cells_are_collected() {
        let layout = CourseLayout::default();
        let mut buf = Vec::new();
        export_csv(&mut buf, &sample(&layout)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let header: Vec<&str> = lines[0].split(',').collect();
        let grade_col = header.iter().position(|h| *h == "final_grade").unwrap();
        let att_col = header.iter().position(|h| *h == "att_1").unwrap();
        let mut cells: Vec<String> = lines[2].split(',').map(String::from).collect();
        cells[grade_col] = "6".into();
        cells[att_col] = "9".into();
        lines[2] = cells.join(",");
        let err = ingest_csv(lines.join("\n").as_bytes(), &layout).unwrap_err();
        let IngestError::Rows(rows) = err else {
            panic!("expected row errors");
        };
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.line == 3));
        assert!(rows.iter().any(|r| r.column == "final_grade"));
        assert!(rows.iter().any(|r| r.column == "att_1"));
    }

    #[test]
    fn missing_column_is_named() {
        let err = ingest_csv("student_id,final_grade\n".as_bytes(), &CourseLayout::default()).unwrap_err();
        let IngestError::MissingColumns(cols) = err else {
            panic!("expected missing columns");
        };
        assert!(cols.contains(&"lec_w1".to_string()));
        assert!(!cols.contains(&"final_grade".to_string()));
    }
}
