use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PisaError, Result};

use super::dataset::DatasetEntry;
use super::metrics::{
    adaptive_threshold, average_precision, f_measure, mae, mean_curve, pr_curve, precision_recall_at, PrPoint, BETA_SQ,
};

/// Metrics of one image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageRecord {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub adaptive_threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mae: f64,
    pub average_precision: f64,
    #[serde(skip)]
    pub pr: Vec<PrPoint>,
    /// Wall-clock of producing the map, in milliseconds.
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub images: usize,
    pub failed: usize,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f_measure: f64,
    pub mean_mae: f64,
    /// Mean of the per-image areas.
    pub mean_average_precision: f64,
    /// Area under the mean curve.
    pub average_precision: f64,
    pub mean_millis: f64,
    #[serde(skip)]
    pub pr: Vec<PrPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub label: String,
    pub records: Vec<ImageRecord>,
    pub failures: Vec<String>,
    pub aggregate: Aggregate,
}

/// Scores an 8-bit saliency map against a binary mask.
pub fn evaluate_map(name: &str, width: usize, height: usize, gray: &[u8], mask: &[bool]) -> Result<ImageRecord> {
    let pr = pr_curve(gray, mask)?;
    let t = adaptive_threshold(gray);
    let at = precision_recall_at(gray, mask, t)?;
    let unit: Vec<f64> = gray.iter().map(|&v| v as f64 / 255.0).collect();
    Ok(ImageRecord {
        name: name.to_string(),
        width,
        height,
        adaptive_threshold: t,
        precision: at.precision,
        recall: at.recall,
        f_measure: f_measure(at.precision, at.recall, BETA_SQ),
        mae: mae(&unit, mask)?,
        average_precision: average_precision(&pr),
        pr,
        millis: 0.0,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl Aggregate {
    pub fn of(records: &[ImageRecord], failed: usize) -> Self {
        let pr = mean_curve(records.iter().map(|r| r.pr.as_slice()));
        Self {
            images: records.len(),
            failed,
            mean_precision: mean(records.iter().map(|r| r.precision)),
            mean_recall: mean(records.iter().map(|r| r.recall)),
            mean_f_measure: mean(records.iter().map(|r| r.f_measure)),
            mean_mae: mean(records.iter().map(|r| r.mae)),
            mean_average_precision: mean(records.iter().map(|r| r.average_precision)),
            average_precision: if records.is_empty() {
                0.0
            } else {
                average_precision(&pr)
            },
            mean_millis: mean(records.iter().map(|r| r.millis)),
            pr,
        }
    }
}

/// Runs `detector` on every entry in parallel (on the current rayon pool) and scores
/// the returned 8-bit maps. Output order follows the entry order; failing entries are
/// logged and listed in the report.
pub fn evaluate_dataset<F>(label: &str, entries: &[DatasetEntry], detector: F) -> EvalReport
where
    F: Fn(&DatasetEntry) -> Result<Vec<u8>> + Sync,
{
    let results: Vec<Result<ImageRecord>> = entries
        .par_iter()
        .map(|entry| {
            let start = Instant::now();
            let gray = detector(entry)?;
            let millis = start.elapsed().as_secs_f64() * 1e3;
            let mut rec = evaluate_map(&entry.name, entry.width, entry.height, &gray, &entry.mask)?;
            rec.millis = millis;
            Ok(rec)
        })
        .collect();
    let mut records = Vec::with_capacity(entries.len());
    let mut failures = Vec::new();
    for (entry, r) in entries.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                warn!("{}: {e}", entry.name);
                failures.push(entry.name.clone());
            }
        }
    }
    let aggregate = Aggregate::of(&records, failures.len());
    EvalReport {
        label: label.to_string(),
        records,
        failures,
        aggregate,
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    name: &'a str,
    width: usize,
    height: usize,
    adaptive_threshold: f64,
    precision: f64,
    recall: f64,
    f_measure: f64,
    mae: f64,
    average_precision: f64,
}

#[derive(Serialize)]
struct PrRow {
    threshold: usize,
    precision: f64,
    recall: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PisaError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> PisaError {
    PisaError::io(path, std::io::Error::other(e))
}

impl EvalReport {
    /// Per-image metrics. Timings are left out so identical runs give identical files.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_writer(create(path)?);
        for r in &self.records {
            w.serialize(CsvRow {
                name: &r.name,
                width: r.width,
                height: r.height,
                adaptive_threshold: r.adaptive_threshold,
                precision: r.precision,
                recall: r.recall,
                f_measure: r.f_measure,
                mae: r.mae,
                average_precision: r.average_precision,
            })
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| PisaError::io(path, e))
    }

    /// Mean precision and recall per threshold, 256 rows.
    pub fn write_pr_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_writer(create(path)?);
        for (t, p) in self.aggregate.pr.iter().enumerate() {
            w.serialize(PrRow {
                threshold: t,
                precision: p.precision,
                recall: p.recall,
            })
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| PisaError::io(path, e))
    }

    /// Full report including timings.
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| PisaError::io(path, e.into()))?;
        w.write_all(b"\n")
            .and_then(|_| w.flush())
            .map_err(|e| PisaError::io(path, e))
    }
}
