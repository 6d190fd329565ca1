use crate::config::Normalization;
use crate::cross::{CrossField, RegionAggregator};
use crate::error::{PisaError, Result};

use super::LevelMap;

/// `uc * dc + ug * dg`, elementwise.
pub fn aggregate_confidence(uc: &[f64], dc: &[f64], ug: &[f64], dg: &[f64]) -> Result<Vec<f64>> {
    let n = uc.len();
    if dc.len() != n || ug.len() != n || dg.len() != n {
        return Err(PisaError::invalid("confidence inputs differ in length"));
    }
    Ok((0..n).map(|i| uc[i] * dc[i] + ug[i] * dg[i]).collect())
}

/// Maps raw confidence onto `{0, .., levels - 1}`. Every method is monotone
/// non-decreasing; a constant input maps to the middle level.
pub fn normalize_confidence(raw: &[f64], levels: usize, method: Normalization) -> Result<Vec<u16>> {
    if levels < 2 || levels > u16::MAX as usize + 1 {
        return Err(PisaError::invalid(format!("level count {levels} out of range")));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(PisaError::invalid("non-finite confidence"));
    }
    let top = (levels - 1) as f64;
    let quantize = |t: f64| t.round().clamp(0.0, top) as u16;
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi == lo {
        return Ok(vec![quantize(top / 2.0); raw.len()]);
    }

    let unit = |v: f64| (v - lo) / (hi - lo);
    let out = match method {
        Normalization::Sigmoid => {
            let n = raw.len() as f64;
            let mean = raw.iter().sum::<f64>() / n;
            let var = raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            if std == 0.0 {
                return Ok(vec![quantize(top / 2.0); raw.len()]);
            }
            raw.iter()
                .map(|&v| quantize(top / (1.0 + (-(v - mean) / std).exp())))
                .collect()
        }
        Normalization::MaxMin => raw.iter().map(|&v| quantize(unit(v) * top)).collect(),
        Normalization::Log => raw
            .iter()
            .map(|&v| quantize((1.0 + 9.0 * unit(v)).log10() * top))
            .collect(),
        Normalization::Exp => raw
            .iter()
            .map(|&v| quantize((10f64.powf(unit(v)) - 1.0) / 9.0 * top))
            .collect(),
    };
    Ok(out)
}

/// Per-pixel, per-level costs stored level-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    data: Vec<f64>,
}

impl CostVolume {
    pub fn from_data(width: usize, height: usize, levels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * levels);
        Self {
            width,
            height,
            levels,
            data,
        }
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Costs of one level over all pixels.
    pub fn slice(&self, level: usize) -> &[f64] {
        let n = self.pixels();
        &self.data[level * n..(level + 1) * n]
    }

    #[inline]
    pub fn get(&self, pixel: usize, level: usize) -> f64 {
        self.data[level * self.pixels() + pixel]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// `V[p, s] = (s - f(p))^2`.
pub fn build_cost_volume(f: &LevelMap) -> Result<CostVolume> {
    if f.levels.iter().any(|&l| l as usize >= f.num_levels) {
        return Err(PisaError::invalid("level outside the level range"));
    }
    let n = f.width * f.height;
    let mut data = Vec::with_capacity(n * f.num_levels);
    for s in 0..f.num_levels {
        data.extend(f.levels.iter().map(|&l| {
            let d = s as f64 - l as f64;
            d * d
        }));
    }
    Ok(CostVolume::from_data(f.width, f.height, f.num_levels, data))
}

/// Weighted average of costs over each pixel's support region, with neighbor `k`
/// weighted by its own region size `sizes[k]`.
pub fn filter_cost_volume(volume: &CostVolume, cross: &CrossField, sizes: &[u32]) -> Result<CostVolume> {
    let n = volume.pixels();
    if (cross.width(), cross.height()) != (volume.width, volume.height) || sizes.len() != n {
        return Err(PisaError::invalid(
            "cost volume, cross field and sizes disagree in shape",
        ));
    }
    let weights: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let norm = RegionAggregator::new(cross, &weights).sums();
    let mut data = Vec::with_capacity(volume.data.len());
    let mut weighted = vec![0.0; n];
    for s in 0..volume.levels {
        for ((o, &w), &v) in weighted.iter_mut().zip(&weights).zip(volume.slice(s)) {
            *o = w * v;
        }
        let agg = RegionAggregator::new(cross, &weighted);
        let (w, h) = (volume.width, volume.height);
        for y in 0..h {
            for x in 0..w {
                data.push(agg.sum_at(x, y) / norm[y * w + x]);
            }
        }
    }
    Ok(CostVolume::from_data(volume.width, volume.height, volume.levels, data))
}

/// Lowest-cost level per pixel; ties go to the lower level.
pub fn wta_select(volume: &CostVolume) -> LevelMap {
    let n = volume.pixels();
    let mut best = vec![0u16; n];
    let mut best_cost = volume.slice(0).to_vec();
    for s in 1..volume.levels {
        for (p, &c) in volume.slice(s).iter().enumerate() {
            if c < best_cost[p] {
                best_cost[p] = c;
                best[p] = s as u16;
            }
        }
    }
    LevelMap {
        width: volume.width,
        height: volume.height,
        num_levels: volume.levels,
        levels: best,
    }
}
