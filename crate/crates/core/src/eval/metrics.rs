use serde::Serialize;

use crate::error::{PisaError, Result};

/// Weight of precision in the F-measure.
pub const BETA_SQ: f64 = 0.3;

/// Number of thresholds on an 8-bit map.
pub const THRESHOLDS: usize = 256;

/// Linear stretch of `[min, max]` onto `[0, 255]`; a constant map becomes all zeros.
pub fn max_min_normalize(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !(hi > lo) {
        return vec![0; values.len()];
    }
    let scale = 255.0 / (hi - lo);
    values
        .iter()
        .map(|&v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Mask pixels at or above 128 are foreground.
pub fn binarize_mask(mask: &[u8]) -> Vec<bool> {
    mask.iter().map(|&v| v >= 128).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub precision: f64,
    pub recall: f64,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(PisaError::invalid(format!("map has {a} pixels but mask has {b}")));
    }
    Ok(())
}

fn positives(mask: &[bool]) -> Result<usize> {
    let n = mask.iter().filter(|&&m| m).count();
    if n == 0 {
        return Err(PisaError::invalid("ground-truth mask is empty"));
    }
    Ok(n)
}

fn pr_from_counts(tp: usize, fp: usize, total_pos: usize) -> PrPoint {
    let predicted = tp + fp;
    PrPoint {
        precision: if predicted == 0 {
            1.0
        } else {
            tp as f64 / predicted as f64
        },
        recall: tp as f64 / total_pos as f64,
    }
}

/// Precision and recall for every threshold `t = 0..=255`, predicting salient where
/// `map >= t`. Entry `t` of the result belongs to threshold `t`.
pub fn pr_curve(map: &[u8], mask: &[bool]) -> Result<Vec<PrPoint>> {
    check_lengths(map.len(), mask.len())?;
    let total_pos = positives(mask)?;
    let mut pos = [0usize; THRESHOLDS];
    let mut neg = [0usize; THRESHOLDS];
    for (&v, &m) in map.iter().zip(mask) {
        if m {
            pos[v as usize] += 1;
        } else {
            neg[v as usize] += 1;
        }
    }
    let mut curve = vec![
        PrPoint {
            precision: 0.0,
            recall: 0.0
        };
        THRESHOLDS
    ];
    let (mut tp, mut fp) = (0, 0);
    for t in (0..THRESHOLDS).rev() {
        tp += pos[t];
        fp += neg[t];
        curve[t] = pr_from_counts(tp, fp, total_pos);
    }
    Ok(curve)
}

/// Twice the mean map value, capped at 255.
pub fn adaptive_threshold(map: &[u8]) -> f64 {
    if map.is_empty() {
        return 0.0;
    }
    let mean = map.iter().map(|&v| v as f64).sum::<f64>() / map.len() as f64;
    (2.0 * mean).min(255.0)
}

/// Precision and recall with salient pixels `map >= threshold`.
pub fn precision_recall_at(map: &[u8], mask: &[bool], threshold: f64) -> Result<PrPoint> {
    check_lengths(map.len(), mask.len())?;
    let total_pos = positives(mask)?;
    let (mut tp, mut fp) = (0, 0);
    for (&v, &m) in map.iter().zip(mask) {
        if v as f64 >= threshold {
            if m {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    Ok(pr_from_counts(tp, fp, total_pos))
}

/// `(1 + b) P R / (b P + R)`, zero when both are zero.
pub fn f_measure(precision: f64, recall: f64, beta_sq: f64) -> f64 {
    let den = beta_sq * precision + recall;
    if den <= 0.0 {
        return 0.0;
    }
    (1.0 + beta_sq) * precision * recall / den
}

/// Mean absolute difference between a `[0, 1]` map and a binary mask.
pub fn mae(map: &[f64], mask: &[bool]) -> Result<f64> {
    check_lengths(map.len(), mask.len())?;
    let reference: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    mean_abs_difference(map, &reference)
}

/// Mean absolute difference of two equally sized maps.
pub fn mean_abs_difference(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a.len(), b.len())?;
    if a.is_empty() {
        return Err(PisaError::invalid("empty map"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Trapezoidal area under precision as a function of recall. Points are sorted by
/// recall (ties by decreasing precision) and the curve is extended to zero recall at
/// the precision of its lowest-recall point.
pub fn average_precision(curve: &[PrPoint]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    let mut pts: Vec<PrPoint> = curve.to_vec();
    pts.sort_by(|a, b| a.recall.total_cmp(&b.recall).then(b.precision.total_cmp(&a.precision)));
    let mut area = 0.0;
    let mut prev = PrPoint {
        precision: pts[0].precision,
        recall: 0.0,
    };
    for p in pts {
        area += (p.recall - prev.recall) * (p.precision + prev.precision) / 2.0;
        prev = p;
    }
    area
}

/// Per-threshold mean of several curves.
pub fn mean_curve<'a>(curves: impl IntoIterator<Item = &'a [PrPoint]>) -> Vec<PrPoint> {
    let mut sum = vec![
        PrPoint {
            precision: 0.0,
            recall: 0.0
        };
        THRESHOLDS
    ];
    let mut n = 0usize;
    for c in curves {
        for (s, p) in sum.iter_mut().zip(c) {
            s.precision += p.precision;
            s.recall += p.recall;
        }
        n += 1;
    }
    if n > 0 {
        for s in &mut sum {
            s.precision /= n as f64;
            s.recall /= n as f64;
        }
    }
    sum
}
