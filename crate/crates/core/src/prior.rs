//! Center-preference and boundary-exclusion priors, evaluated per cluster.
//!
//! For a cluster with member positions `x_l` (l = 1..n):
//!
//! ```text
//! raw = s * sum_l ||x_l - c||^2 / n  +  lambda * #{x_l in border} / |border|
//! D   = exp(-kappa * raw)  if raw <= cutoff, else 0
//! ```
//!
//! `c` is the image center and `s = 100 / half_diagonal^2`, so the center term spans
//! `[0, 100]` whatever the image size. `|border|` counts the sample positions that fall
//! in the border frame, so sparse sample sets use the same formula.

use crate::features::FeatureClusterModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialPriorParams {
    /// Boundary-exclusion weight.
    pub lambda: f64,
    /// Exponential fall-off rate.
    pub kappa: f64,
    /// Cut-off on the raw prior.
    pub cutoff: f64,
    /// Width in pixels of the frame along all four image edges.
    pub border_width: usize,
    pub center_preference: bool,
    pub boundary_exclusion: bool,
}

impl Default for SpatialPriorParams {
    fn default() -> Self {
        Self {
            lambda: 2.5e4,
            kappa: 0.006,
            cutoff: 30.0,
            border_width: 10,
            center_preference: true,
            boundary_exclusion: true,
        }
    }
}

/// Geometry the priors are evaluated in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorFrame {
    pub width: usize,
    pub height: usize,
    pub border_width: usize,
    /// Number of sample positions inside the border frame.
    pub border_count: usize,
}

impl PriorFrame {
    /// Frame for a dense grid, where every pixel is a sample.
    pub fn dense(width: usize, height: usize, border_width: usize) -> Self {
        let bw = border_width;
        let inner_w = width.saturating_sub(2 * bw);
        let inner_h = height.saturating_sub(2 * bw);
        Self {
            width,
            height,
            border_width,
            border_count: width * height - inner_w * inner_h,
        }
    }

    /// Frame for an arbitrary set of sample positions.
    pub fn sampled(width: usize, height: usize, border_width: usize, samples: &[(usize, usize)]) -> Self {
        let mut frame = Self {
            width,
            height,
            border_width,
            border_count: 0,
        };
        frame.border_count = samples.iter().filter(|&&(x, y)| frame.in_border(x, y)).count();
        frame
    }

    #[inline]
    pub fn in_border(&self, x: usize, y: usize) -> bool {
        let bw = self.border_width;
        x < bw || y < bw || x + bw >= self.width || y + bw >= self.height
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0)
    }

    /// Scale taking squared pixel distances to `[0, 100]`.
    pub fn distance_scale(&self) -> f64 {
        let (cx, cy) = self.center();
        let half_diag_sq = cx * cx + cy * cy;
        if half_diag_sq > 0.0 {
            100.0 / half_diag_sq
        } else {
            0.0
        }
    }

    /// Scaled mean squared distance of `positions` to the image center.
    pub fn center_term(&self, positions: &[(usize, usize)]) -> f64 {
        if positions.is_empty() {
            return 0.0;
        }
        let (cx, cy) = self.center();
        let sum: f64 = positions
            .iter()
            .map(|&(x, y)| {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                dx * dx + dy * dy
            })
            .sum();
        sum / positions.len() as f64 * self.distance_scale()
    }

    /// Fraction of the border frame covered by `positions`.
    pub fn border_term(&self, positions: &[(usize, usize)]) -> f64 {
        if self.border_count == 0 {
            return 0.0;
        }
        let inside = positions.iter().filter(|&&(x, y)| self.in_border(x, y)).count();
        inside as f64 / self.border_count as f64
    }
}

/// Raw prior of one set of positions.
pub fn raw_prior_of(positions: &[(usize, usize)], frame: &PriorFrame, params: &SpatialPriorParams) -> f64 {
    let mut raw = 0.0;
    if params.center_preference {
        raw += frame.center_term(positions);
    }
    if params.boundary_exclusion {
        raw += params.lambda * frame.border_term(positions);
    }
    raw
}

/// Raw prior of every cluster.
pub fn raw_spatial_prior(model: &FeatureClusterModel, frame: &PriorFrame, params: &SpatialPriorParams) -> Vec<f64> {
    (0..model.num_clusters())
        .map(|k| raw_prior_of(model.positions(k), frame, params))
        .collect()
}

/// `exp(-kappa * raw)` up to the cut-off, zero beyond it.
pub fn modulate_prior(raw: &[f64], params: &SpatialPriorParams) -> Vec<f64> {
    raw.iter()
        .map(|&r| {
            if r <= params.cutoff {
                (-params.kappa * r).exp()
            } else {
                0.0
            }
        })
        .collect()
}
