//! Classification metrics and wall-clock benchmarking.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Label, PointCloud};
use crate::pipeline::ClassificationResult;

/// Binary confusion counts with Ground as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(predicted: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} truth labels",
            predicted.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in predicted.iter().zip(truth) {
        match (p.is_ground(), t.is_ground()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Quality metrics of one confusion matrix. Ratios whose denominator is zero
/// are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub iou: Option<f64>,
    pub percent_correct: f64,
    pub percent_error: f64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Accuracy, precision, recall, F-measure (weighted by `epsilon`) and IoU.
pub fn metrics(cm: &ConfusionMatrix, epsilon: f64) -> Result<MetricReport> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::InvalidInput("empty confusion matrix".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    let correct = cm.tp + cm.tn;
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let e2 = epsilon * epsilon;
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if e2 * p + r > 0.0 => Some((1.0 + e2) * p * r / (e2 * p + r)),
        _ => None,
    };
    let percent_correct = 100.0 * correct as f64 / n as f64;
    Ok(MetricReport {
        accuracy: correct as f64 / n as f64,
        precision,
        recall,
        f_measure,
        iou: ratio(cm.tp, cm.tp + cm.fp + cm.fn_),
        percent_correct,
        percent_error: 100.0 * (n - correct) as f64 / n as f64,
    })
}

fn cell(v: Option<f64>, scale: f64, decimals: usize) -> String {
    match v {
        Some(v) => format!("{:.*}", decimals, v * scale),
        None => "—".to_string(),
    }
}

/// Left-aligned first column, right-aligned rest; widths count characters.
fn render_rows(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (c, s) in r.iter().enumerate() {
            let pad = widths[c] - s.chars().count();
            if c == 0 {
                line.push_str(s);
                line.extend(std::iter::repeat_n(' ', pad));
            } else {
                line.push_str("  ");
                line.extend(std::iter::repeat_n(' ', pad));
                line.push_str(s);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Aligned text table, one row per named report. Percentages use two
/// decimals, ratios four.
pub fn render_metrics_table(reports: &[(&str, MetricReport)]) -> String {
    let mut rows = vec![[
        "method", "accuracy", "precision", "recall", "f_measure", "iou", "%C", "%E",
    ]
    .map(String::from)
    .to_vec()];
    for (name, m) in reports {
        rows.push(vec![
            name.to_string(),
            cell(Some(m.accuracy), 1.0, 4),
            cell(m.precision, 1.0, 4),
            cell(m.recall, 1.0, 4),
            cell(m.f_measure, 1.0, 4),
            cell(m.iou, 1.0, 4),
            format!("{:.2}", m.percent_correct),
            format!("{:.2}", m.percent_error),
        ]);
    }
    render_rows(&rows)
}

/// Confusion counts as a two-by-two text block.
pub fn render_confusion(cm: &ConfusionMatrix) -> String {
    render_rows(&[
        vec!["".into(), "truth ground".into(), "truth non-ground".into()],
        vec!["pred ground".into(), cm.tp.to_string(), cm.fp.to_string()],
        vec!["pred non-ground".into(), cm.fn_.to_string(), cm.tn.to_string()],
    ])
}

/// A named pipeline for [`benchmark`].
pub type Runnable<'a> = &'a (dyn Fn(&PointCloud) -> Result<ClassificationResult> + Sync);

/// Median timings of one pipeline on one section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub section: String,
    pub pipeline: String,
    pub repetitions: usize,
    /// Median wall-clock seconds of the whole run.
    pub total_secs: Option<f64>,
    /// Median seconds per stage, in execution order.
    pub stages: Vec<(String, f64)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Times each pipeline on `cloud`: one discarded warm-up run, then the
/// median of `repetitions` runs. A failing pipeline yields a row with
/// `error` set.
pub fn benchmark(
    cloud: &PointCloud,
    pipelines: &[(&str, Runnable<'_>)],
    repetitions: usize,
) -> Result<TimingReport> {
    benchmark_sections(&[("", cloud)], pipelines, repetitions)
}

/// [`benchmark`] over several named clouds.
pub fn benchmark_sections(
    sections: &[(&str, &PointCloud)],
    pipelines: &[(&str, Runnable<'_>)],
    repetitions: usize,
) -> Result<TimingReport> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
    }
    let mut report = TimingReport::default();
    for &(section, cloud) in sections {
        for &(name, run) in pipelines {
            report.rows.push(time_one(section, name, cloud, run, repetitions));
        }
    }
    Ok(report)
}

fn time_one(
    section: &str,
    name: &str,
    cloud: &PointCloud,
    run: Runnable<'_>,
    repetitions: usize,
) -> TimingRow {
    let mut row = TimingRow {
        section: section.to_string(),
        pipeline: name.to_string(),
        repetitions,
        total_secs: None,
        stages: Vec::new(),
        error: None,
    };
    if let Err(e) = run(cloud) {
        row.error = Some(e.to_string());
        return row;
    }
    let mut totals = Vec::with_capacity(repetitions);
    let mut per_stage: Vec<(&'static str, Vec<f64>)> = Vec::new();
    for _ in 0..repetitions {
        let t0 = Instant::now();
        let out = match run(cloud) {
            Ok(out) => out,
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        };
        totals.push(t0.elapsed().as_secs_f64());
        for (i, &(stage, d)) in out.timings.iter().enumerate() {
            match per_stage.get_mut(i) {
                Some((s, v)) if *s == stage => v.push(d.as_secs_f64()),
                _ => per_stage.insert(i, (stage, vec![d.as_secs_f64()])),
            }
        }
    }
    row.total_secs = Some(median(totals));
    row.stages = per_stage
        .into_iter()
        .map(|(s, v)| (s.to_string(), median(v)))
        .collect();
    row
}

fn format_secs(secs: f64) -> String {
    if secs >= 60.0 {
        format!("{:.4} min", secs / 60.0)
    } else {
        format!("{:.3} s", secs)
    }
}

impl TimingReport {
    pub fn total(&self, section: &str, pipeline: &str) -> Option<Duration> {
        self.rows
            .iter()
            .find(|r| r.section == section && r.pipeline == pipeline)
            .and_then(|r| r.total_secs)
            .map(Duration::from_secs_f64)
    }

    fn names(&self) -> (Vec<&str>, Vec<&str>) {
        let mut sections: Vec<&str> = Vec::new();
        let mut pipelines: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !sections.contains(&r.section.as_str()) {
                sections.push(&r.section);
            }
            if !pipelines.contains(&r.pipeline.as_str()) {
                pipelines.push(&r.pipeline);
            }
        }
        (sections, pipelines)
    }

    /// Sections as rows, pipelines as columns, plus an average row over the
    /// sections where each pipeline succeeded.
    pub fn render_table(&self) -> String {
        let (sections, pipelines) = self.names();
        if pipelines.is_empty() {
            return String::new();
        }
        let mut rows = vec![std::iter::once("section".to_string())
            .chain(pipelines.iter().map(|p| p.to_string()))
            .collect::<Vec<_>>()];
        let mut sums = vec![(0.0, 0usize); pipelines.len()];
        for s in &sections {
            let mut line = vec![if s.is_empty() { "-".to_string() } else { s.to_string() }];
            for (c, p) in pipelines.iter().enumerate() {
                let r = self.rows.iter().find(|r| &r.section == s && &r.pipeline == p);
                line.push(match r {
                    Some(TimingRow { total_secs: Some(t), .. }) => {
                        sums[c].0 += t;
                        sums[c].1 += 1;
                        format_secs(*t)
                    }
                    Some(TimingRow { error: Some(_), .. }) => "failed".to_string(),
                    _ => "—".to_string(),
                });
            }
            rows.push(line);
        }
        let mut avg = vec!["average".to_string()];
        avg.extend(sums.iter().map(|&(s, n)| {
            if n == 0 {
                "—".to_string()
            } else {
                format_secs(s / n as f64)
            }
        }));
        rows.push(avg);
        let mut out = render_rows(&rows);
        for r in self.rows.iter().filter(|r| r.error.is_some()) {
            let _ = writeln!(out, "{} / {}: {}", r.section, r.pipeline, r.error.as_deref().unwrap_or(""));
        }
        out
    }

    /// Per-stage medians of every row.
    pub fn render_stages(&self) -> String {
        let mut rows = vec![vec!["section".into(), "pipeline".into(), "stage".into(), "median".into()]];
        for r in &self.rows {
            for (stage, secs) in &r.stages {
                rows.push(vec![r.section.clone(), r.pipeline.clone(), stage.clone(), format_secs(*secs)]);
            }
        }
        render_rows(&rows)
    }
}
