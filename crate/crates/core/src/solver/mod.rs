//! Confidence aggregation, level normalization, cost-volume labeling and the two
//! end-to-end pipelines.

mod pipeline;
mod sparse;
mod volume;

pub use pipeline::{detect, run_fpisa, run_pisa, CueMaps, Detection, StageTimings};
pub use sparse::{subsample_max_gradient, upsample_saliency, SparseSample};
pub use volume::{
    aggregate_confidence, build_cost_volume, filter_cost_volume, normalize_confidence, wta_select, CostVolume,
};

/// Discrete saliency levels on a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelMap {
    pub width: usize,
    pub height: usize,
    pub num_levels: usize,
    pub levels: Vec<u16>,
}

/// Real-valued saliency on the full image grid, in level units `[0, num_levels - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub width: usize,
    pub height: usize,
    pub num_levels: usize,
    pub values: Vec<f64>,
}

impl From<&LevelMap> for SaliencyMap {
    fn from(m: &LevelMap) -> Self {
        SaliencyMap {
            width: m.width,
            height: m.height,
            num_levels: m.num_levels,
            values: m.levels.iter().map(|&l| l as f64).collect(),
        }
    }
}

impl SaliencyMap {
    /// Max-min stretched 8-bit export form.
    pub fn to_gray(&self) -> Vec<u8> {
        crate::eval::max_min_normalize(&self.values)
    }

    /// Max-min stretched to `[0, 1]` (8-bit quantized, as exported).
    pub fn to_unit(&self) -> Vec<f64> {
        self.to_gray().iter().map(|&v| v as f64 / 255.0).collect()
    }
}
