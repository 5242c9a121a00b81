//! Tabular and SVG output for evaluation runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::eval::{average_difference, average_metric, EvalError, MetricName, ModelKind, SetResults};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A named weekly series; `None` marks an undefined week.
pub type WeeklySeries = (String, Vec<(u32, Option<f64>)>);
type Series = Vec<WeeklySeries>;

/// Placeholder for an undefined metric.
pub const UNDEFINED: &str = "—";

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| format!("{x:.4}"))
}

/// One row per (model, testing set, week) with the pooled counts and every
/// metric.
pub fn write_long_metrics<W: Write>(
    writer: W,
    results: &BTreeMap<ModelKind, SetResults>,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["model", "set", "week", "tp", "fp", "fn", "tn"];
    header.extend(MetricName::ALL.iter().map(|m| m.as_str()));
    out.write_record(&header)?;
    for (model, sets) in results {
        for (index, weekly) in sets {
            for r in weekly {
                let cm = r.confusion;
                let mut row = vec![
                    model.to_string(),
                    index.to_string(),
                    r.row.week.to_string(),
                    cm.tp.to_string(),
                    cm.fp.to_string(),
                    cm.fn_.to_string(),
                    cm.tn.to_string(),
                ];
                row.extend(MetricName::ALL.iter().map(|m| fmt_value(r.row.metrics.get(*m))));
                out.write_record(&row)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Wide table of one metric: a row per week, a column per (set, model). The
/// best model of each set and week is marked with `*`.
pub fn write_metric_table<W: Write>(
    writer: W,
    metric: MetricName,
    results: &BTreeMap<ModelKind, SetResults>,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let models: Vec<ModelKind> = results.keys().copied().collect();
    let sets: Vec<usize> = results
        .values()
        .flat_map(|s| s.keys().copied())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut header = vec!["week".to_string()];
    for s in &sets {
        header.extend(models.iter().map(|m| format!("set{s}_{m}")));
    }
    out.write_record(&header)?;

    let weeks: std::collections::BTreeSet<u32> = results
        .values()
        .flat_map(|s| s.values().flatten().map(|r| r.row.week))
        .collect();
    for week in weeks {
        let mut row = vec![week.to_string()];
        for s in &sets {
            let values: Vec<Option<f64>> = models
                .iter()
                .map(|m| {
                    results[m]
                        .get(s)
                        .and_then(|w| w.iter().find(|r| r.row.week == week))
                        .and_then(|r| r.row.metrics.get(metric))
                })
                .collect();
            let best = values.iter().flatten().copied().reduce(f64::max);
            row.extend(values.iter().map(|v| {
                let text = fmt_value(*v);
                if models.len() > 1 && v.is_some() && *v == best {
                    format!("{text}*")
                } else {
                    text
                }
            }));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Weekly series as columns: `week,<name>...`.
pub fn write_series<W: Write>(
    writer: W,
    series: &[WeeklySeries],
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["week".to_string()];
    header.extend(series.iter().map(|(name, _)| name.clone()));
    out.write_record(&header)?;
    let weeks: std::collections::BTreeSet<u32> = series
        .iter()
        .flat_map(|(_, s)| s.iter().map(|(w, _)| *w))
        .collect();
    for week in weeks {
        let mut row = vec![week.to_string()];
        row.extend(series.iter().map(|(_, s)| {
            fmt_value(s.iter().find(|(w, _)| *w == week).and_then(|(_, v)| *v))
        }));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}


/// Writes every evaluation artifact into `dir` and returns the paths in
/// write order:
///
/// - `metrics_long.csv`, one row per model, set and week;
/// - `table_<metric>.csv` for each metric;
/// - with BNC present, `bnc_average.{csv,svg}` and, for each other model,
///   `diff_bnc_<model>.{csv,svg}` holding the per-week average differences.
pub fn write_evaluation(
    dir: &Path,
    results: &BTreeMap<ModelKind, SetResults>,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    written.push(csv_file(dir, "metrics_long.csv", |w| write_long_metrics(w, results))?);
    for metric in MetricName::ALL {
        written.push(csv_file(dir, &format!("table_{metric}.csv"), |w| {
            write_metric_table(w, metric, results)
        })?);
    }

    let mut charts: Vec<(String, String, String, Series)> = Vec::new();
    if let Some(bnc) = results.get(&ModelKind::Bnc) {
        let series: Series = MetricName::ALL
            .iter()
            .map(|&m| (m.to_string(), average_metric(bnc, m)))
            .collect();
        charts.push((
            "bnc_average".into(),
            "Average BNC performance over testing sets".into(),
            "Metric".into(),
            series,
        ));
        for (&other, other_results) in results.iter().filter(|(k, _)| **k != ModelKind::Bnc) {
            let series = MetricName::ALL
                .iter()
                .map(|&m| Ok((m.to_string(), average_difference(bnc, other_results, m)?)))
                .collect::<Result<Series, EvalError>>()?;
            charts.push((
                format!("diff_bnc_{}", other.as_str().to_lowercase()),
                format!("Average difference BNC - {other}"),
                "Difference".into(),
                series,
            ));
        }
    }
    for (stem, title, y_label, series) in &charts {
        written.push(csv_file(dir, &format!("{stem}.csv"), |w| write_series(w, series))?);
        let path = dir.join(format!("{stem}.svg"));
        fs::write(&path, line_chart_svg(title, y_label, series))?;
        written.push(path);
    }
    Ok(written)
}

fn csv_file(
    dir: &Path,
    name: &str,
    write: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>,
) -> Result<PathBuf, ReportError> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(path)
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"];

/// Line chart of weekly series. Undefined points break the line.
pub fn line_chart_svg(title: &str, y_label: &str, series: &[WeeklySeries]) -> String {
    let (width, height) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 150.0, 40.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let weeks: Vec<u32> = series.iter().flat_map(|(_, s)| s.iter().map(|p| p.0)).collect();
    let x_min = f64::from(weeks.iter().copied().min().unwrap_or(1));
    let x_max = f64::from(weeks.iter().copied().max().unwrap_or(1)).max(x_min + 1.0);
    let values: Vec<f64> = series
        .iter()
        .flat_map(|(_, s)| s.iter().filter_map(|p| p.1))
        .collect();
    let mut y_min = values.iter().copied().fold(0.0f64, f64::min);
    let mut y_max = values.iter().copied().fold(1.0f64, f64::max);
    if y_min < 0.0 {
        y_min = (y_min * 10.0).floor() / 10.0;
        y_max = (y_max * 10.0).ceil() / 10.0;
    }
    let sx = |x: f64| left + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| top + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        left + plot_w / 2.0,
        escape(title)
    );
    // Horizontal grid at tenths of the range.
    for i in 0..=10 {
        let y = y_min + (y_max - y_min) * f64::from(i) / 10.0;
        let py = sy(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#e0e0e0"/><text x="{:.1}" y="{:.1}" text-anchor="end">{y:.1}</text>"##,
            left + plot_w,
            left - 6.0,
            py + 4.0
        );
    }
    if y_min < 0.0 && y_max > 0.0 {
        let _ = writeln!(
            svg,
            r#"<line x1="{left}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="black" stroke-dasharray="4 3"/>"#,
            sy(0.0),
            left + plot_w
        );
    }
    for w in x_min as u32..=x_max as u32 {
        let px = sx(f64::from(w));
        let _ = writeln!(
            svg,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{w}</text>"#,
            top + plot_h + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Week</text>"#,
        left + plot_w / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0:.1}" text-anchor="middle" transform="rotate(-90 16 {0:.1})">{1}</text>"#,
        top + plot_h / 2.0,
        escape(y_label)
    );

    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(w, v) in points {
            match v {
                Some(v) => segments.last_mut().expect("segment").push((sx(f64::from(w)), sy(v))),
                None => segments.push(Vec::new()),
            }
        }
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            let coords: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                coords.join(" ")
            );
            for (x, y) in seg {
                let _ = writeln!(svg, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}"/>"#);
            }
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_csv_marks_undefined() {
        let mut buf = Vec::new();
        write_series(
            &mut buf,
            &[
                ("a".into(), vec![(1, Some(0.5)), (2, None)]),
                ("b".into(), vec![(1, Some(-0.25)), (2, Some(1.0))]),
            ],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "week,a,b\n1,0.5000,-0.2500\n2,—,1.0000\n"
        );
    }

    #[test]
    fn chart_breaks_line_at_gaps() {
        let svg = line_chart_svg(
            "t <1>",
            "y",
            &[("s".into(), vec![(1, Some(0.1)), (2, Some(0.2)), (3, None), (4, Some(0.3))])],
        );
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("t &lt;1&gt;"));
    }
}
