use std::time::{Duration, Instant};

use crate::config::{RunConfig, Variant};
use crate::cross::{build_cross_field, support_region_size, CrossField};
use crate::error::{Result, StageContext};
use crate::features::{
    cluster_features, color_histograms_at, contrast_measure, default_neighbor_count, om_histograms_at,
    smooth_cluster_saliency, ClusterParams, ClusterSaliency, FeatureClusterModel, HistogramSet,
};
use crate::imaging::{compute_gradients, median_filter_3x3, rgb_to_lab, GradientField, LabImage, RgbImage};
use crate::prior::{modulate_prior, raw_spatial_prior, PriorFrame, SpatialPriorParams};

use super::sparse::{subsample_max_gradient, upsample_saliency, SparseSample};
use super::volume::{aggregate_confidence, build_cost_volume, filter_cost_volume, normalize_confidence, wta_select};
use super::{LevelMap, SaliencyMap};

/// Wall-clock time of each pipeline stage, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimings {
    pub stages: Vec<(&'static str, Duration)>,
    pub total: Duration,
}

impl StageTimings {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().stage(stage)?;
        self.stages.push((stage, start.elapsed()));
        Ok(out)
    }

    pub fn get(&self, stage: &str) -> Option<Duration> {
        self.stages.iter().find(|(s, _)| *s == stage).map(|&(_, d)| d)
    }
}

/// Per-cluster quantities of one feature cue.
#[derive(Debug, Clone)]
pub struct CueMaps {
    pub model: FeatureClusterModel,
    /// Contrast before neighbor smoothing.
    pub raw_contrast: Vec<f64>,
    pub contrast: ClusterSaliency,
    /// Raw spatial prior before modulation.
    pub raw_prior: Vec<f64>,
    pub prior: Vec<f64>,
}

/// Everything one detection run produces.
#[derive(Debug, Clone)]
pub struct Detection {
    pub variant: Variant,
    pub width: usize,
    pub height: usize,
    pub saliency: SaliencyMap,
    /// Confidence before normalization, one value per analysis point.
    pub confidence: Vec<f64>,
    /// Normalized confidence levels on the analysis grid (full image or sparse grid).
    pub normalized: LevelMap,
    /// Labels chosen on the analysis grid.
    pub labels: LevelMap,
    pub color: Option<CueMaps>,
    pub structure: Option<CueMaps>,
    pub sparse: Option<SparseSample>,
    pub timings: StageTimings,
}

/// Runs the variant selected in `config`.
pub fn detect(img: &RgbImage, config: &RunConfig) -> Result<Detection> {
    match config.variant {
        Variant::Pisa => run_pisa(img, config),
        Variant::Fpisa => run_fpisa(img, config),
    }
}

struct Prepared {
    lab: LabImage,
    grad: GradientField,
    cross: CrossField,
    smoothed: RgbImage,
}

fn prepare(img: &RgbImage, config: &RunConfig, timings: &mut StageTimings) -> Result<Prepared> {
    config.validate()?;
    img.ensure_pipeline_size().stage("input")?;
    let smoothed = timings.time("median", || median_filter_3x3(img))?;
    let lab = timings.time("lab", || rgb_to_lab(&smoothed))?;
    let grad = timings.time("gradients", || Ok(compute_gradients(&smoothed)))?;
    let cross = timings.time("cross", || Ok(build_cross_field(&smoothed, config.tau, config.max_arm)))?;
    Ok(Prepared {
        lab,
        grad,
        cross,
        smoothed,
    })
}

fn cue(
    features: &HistogramSet,
    anchor_lab: Option<&[[f64; 3]]>,
    params: &ClusterParams,
    frame: &PriorFrame,
    prior: &SpatialPriorParams,
) -> Result<CueMaps> {
    let model = cluster_features(features, anchor_lab, params)?;
    let raw = contrast_measure(&model);
    let raw_contrast = raw.values.clone();
    let contrast = smooth_cluster_saliency(&model, &raw, default_neighbor_count(model.num_clusters()));
    let raw_prior = raw_spatial_prior(&model, frame, prior);
    let prior = modulate_prior(&raw_prior, prior);
    Ok(CueMaps {
        model,
        raw_contrast,
        contrast,
        raw_prior,
        prior,
    })
}

/// Per-point `U` and `D` of a cue, or zeros when it is disabled.
fn cue_fields(cue: Option<&CueMaps>, n: usize) -> (Vec<f64>, Vec<f64>) {
    match cue {
        Some(c) => (c.model.broadcast(&c.contrast.values), c.model.broadcast(&c.prior)),
        None => (vec![0.0; n], vec![0.0; n]),
    }
}

fn analyse(
    prep: &Prepared,
    anchors: &[(usize, usize)],
    frame: &PriorFrame,
    config: &RunConfig,
    timings: &mut StageTimings,
) -> Result<(Option<CueMaps>, Option<CueMaps>, Vec<f64>)> {
    let prior = config.prior_params();
    let color = if config.color_contrast {
        let hist = timings.time("color-histograms", || {
            Ok(color_histograms_at(&prep.lab, &prep.cross, anchors.to_vec()))
        })?;
        let lab: Vec<[f64; 3]> = anchors
            .iter()
            .map(|&(x, y)| {
                let p = prep.lab.pixel(x, y);
                [p[0], p[1], p[2]]
            })
            .collect();
        Some(timings.time("color-contrast", || {
            cue(&hist, Some(&lab), &config.color_cluster_params(), frame, &prior)
        })?)
    } else {
        None
    };
    let structure = if config.structure_contrast {
        let hist = timings.time("om-histograms", || {
            Ok(om_histograms_at(&prep.grad, config.max_arm, anchors.to_vec()))
        })?;
        Some(timings.time("structure-contrast", || {
            cue(&hist, None, &config.om_cluster_params(), frame, &prior)
        })?)
    } else {
        None
    };
    let n = anchors.len();
    let (uc, dc) = cue_fields(color.as_ref(), n);
    let (ug, dg) = cue_fields(structure.as_ref(), n);
    let confidence = timings.time("confidence", || aggregate_confidence(&uc, &dc, &ug, &dg))?;
    Ok((color, structure, confidence))
}

fn label(
    confidence: &[f64],
    width: usize,
    height: usize,
    cross: &CrossField,
    config: &RunConfig,
    timings: &mut StageTimings,
) -> Result<(LevelMap, LevelMap)> {
    let normalized = timings.time("normalize", || {
        Ok(LevelMap {
            width,
            height,
            num_levels: config.levels,
            levels: normalize_confidence(confidence, config.levels, config.normalization)?,
        })
    })?;
    let labels = timings.time("labeling", || {
        let volume = build_cost_volume(&normalized)?;
        let filtered = filter_cost_volume(&volume, cross, &support_region_size(cross))?;
        Ok(wta_select(&filtered))
    })?;
    Ok((normalized, labels))
}

/// Dense pipeline: every pixel is an analysis point.
pub fn run_pisa(img: &RgbImage, config: &RunConfig) -> Result<Detection> {
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let prep = prepare(img, config, &mut timings)?;
    let (w, h) = (img.width(), img.height());
    let anchors: Vec<(usize, usize)> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).collect();
    let frame = PriorFrame::dense(w, h, config.border_width);
    let (color, structure, confidence) = analyse(&prep, &anchors, &frame, config, &mut timings)?;
    let (normalized, labels) = label(&confidence, w, h, &prep.cross, config, &mut timings)?;
    let saliency = SaliencyMap::from(&labels);
    timings.total = start.elapsed();
    Ok(Detection {
        variant: Variant::Pisa,
        width: w,
        height: h,
        saliency,
        confidence,
        normalized,
        labels,
        color,
        structure,
        sparse: None,
        timings,
    })
}

/// Fast path: analysis and labeling on one pixel per 3x3 tile, then upsampling.
pub fn run_fpisa(img: &RgbImage, config: &RunConfig) -> Result<Detection> {
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let prep = prepare(img, config, &mut timings)?;
    let (w, h) = (img.width(), img.height());
    let sample = timings.time("subsample", || subsample_max_gradient(&prep.smoothed, &prep.grad))?;
    let frame = PriorFrame::sampled(w, h, config.border_width, &sample.positions);
    let (color, structure, confidence) = analyse(&prep, &sample.positions, &frame, config, &mut timings)?;
    let grid_cross = timings.time("grid-cross", || {
        Ok(build_cross_field(&sample.image, config.tau, config.max_arm))
    })?;
    let (normalized, labels) = label(
        &confidence,
        sample.grid_width,
        sample.grid_height,
        &grid_cross,
        config,
        &mut timings,
    )?;
    let values: Vec<f64> = labels.levels.iter().map(|&l| l as f64).collect();
    let saliency = timings.time("upsample", || {
        upsample_saliency(
            &sample.positions,
            &values,
            &prep.cross,
            config.sigma_for(w, h),
            config.upsampling,
            config.levels,
        )
    })?;
    timings.total = start.elapsed();
    Ok(Detection {
        variant: Variant::Fpisa,
        width: w,
        height: h,
        saliency,
        confidence,
        normalized,
        labels,
        color,
        structure,
        sparse: Some(sample),
        timings,
    })
}
