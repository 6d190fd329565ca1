use std::f64::consts::PI;

use crate::cross::{CrossField, RegionAggregator};
use crate::imaging::{GradientField, LabImage};

pub const COLOR_BINS_PER_CHANNEL: usize = 12;
pub const OM_BINS_PER_COMPONENT: usize = 8;

const LAB_RANGES: [(f64, f64); 3] = [(0.0, 100.0), (-128.0, 127.0), (-128.0, 127.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramKind {
    /// Three Lab channels with 12 uniform bins each, concatenated.
    Color36,
    /// 8 orientation bins followed by 8 magnitude bins.
    Om16,
}

impl HistogramKind {
    pub fn dim(self) -> usize {
        match self {
            HistogramKind::Color36 => 3 * COLOR_BINS_PER_CHANNEL,
            HistogramKind::Om16 => 2 * OM_BINS_PER_COMPONENT,
        }
    }
}

/// One histogram per anchor, stored contiguously. Every histogram sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSet {
    kind: HistogramKind,
    anchors: Vec<(usize, usize)>,
    data: Vec<f64>,
}

/// Borrowed view of a single anchor's histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureHistogram<'a> {
    pub kind: HistogramKind,
    pub anchor: (usize, usize),
    pub bins: &'a [f64],
}

impl HistogramSet {
    pub fn from_parts(kind: HistogramKind, anchors: Vec<(usize, usize)>, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), anchors.len() * kind.dim());
        Self { kind, anchors, data }
    }

    pub fn kind(&self) -> HistogramKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn anchors(&self) -> &[(usize, usize)] {
        &self.anchors
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn bins(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize) -> FeatureHistogram<'_> {
        FeatureHistogram {
            kind: self.kind,
            anchor: self.anchors[i],
            bins: self.bins(i),
        }
    }
}

fn uniform_bin(v: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = ((v - lo) / (hi - lo) * bins as f64).floor();
    if t.is_nan() || t < 0.0 {
        0
    } else {
        (t as usize).min(bins - 1)
    }
}

/// Lab bin of each channel, in the concatenated 36-d layout.
pub(crate) fn lab_bins(lab: [f64; 3]) -> [usize; 3] {
    let mut out = [0; 3];
    for c in 0..3 {
        let (lo, hi) = LAB_RANGES[c];
        out[c] = c * COLOR_BINS_PER_CHANNEL + uniform_bin(lab[c], lo, hi, COLOR_BINS_PER_CHANNEL);
    }
    out
}

fn all_anchors(width: usize, height: usize) -> Vec<(usize, usize)> {
    (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).collect()
}

/// 36-d Lab histogram over the support region of every pixel.
pub fn color_histograms(lab: &LabImage, cross: &CrossField) -> HistogramSet {
    color_histograms_at(lab, cross, all_anchors(lab.width(), lab.height()))
}

/// 36-d Lab histogram over the support region of each listed anchor.
pub fn color_histograms_at(lab: &LabImage, cross: &CrossField, anchors: Vec<(usize, usize)>) -> HistogramSet {
    assert_eq!((lab.width(), lab.height()), (cross.width(), cross.height()));
    let kind = HistogramKind::Color36;
    let dim = kind.dim();
    let n = lab.len();

    let pixel_bins: Vec<[usize; 3]> = lab
        .data()
        .chunks_exact(3)
        .map(|p| lab_bins([p[0], p[1], p[2]]))
        .collect();
    let mut occupied = vec![false; dim];
    for bins in &pixel_bins {
        for &b in bins {
            occupied[b] = true;
        }
    }

    // Sparse anchors: counting their regions directly beats one pass per bin.
    let direct_cost = anchors.len() * (2 * cross.max_arm() + 1).pow(2);
    if direct_cost < occupied.iter().filter(|&&o| o).count() * n {
        let w = lab.width();
        let mut data = vec![0.0; anchors.len() * dim];
        let mut counts = vec![0u32; dim];
        for (i, &(x, y)) in anchors.iter().enumerate() {
            counts.fill(0);
            let mut size = 0usize;
            for (row, x0, x1) in cross.region(x, y).rows() {
                for bins in &pixel_bins[row * w + x0..=row * w + x1] {
                    for &b in bins {
                        counts[b] += 1;
                    }
                }
                size += x1 - x0 + 1;
            }
            let scale = 3.0 * size as f64;
            for (d, &c) in data[i * dim..(i + 1) * dim].iter_mut().zip(&counts) {
                *d = c as f64 / scale;
            }
        }
        return HistogramSet { kind, anchors, data };
    }

    let sizes: Vec<f64> = {
        let ones = vec![1.0; n];
        let agg = RegionAggregator::new(cross, &ones);
        anchors.iter().map(|&(x, y)| agg.sum_at(x, y)).collect()
    };

    let mut data = vec![0.0; anchors.len() * dim];
    let mut indicator = vec![0.0; n];
    for bin in (0..dim).filter(|&b| occupied[b]) {
        let channel = bin / COLOR_BINS_PER_CHANNEL;
        for (v, bins) in indicator.iter_mut().zip(&pixel_bins) {
            *v = if bins[channel] == bin { 1.0 } else { 0.0 };
        }
        let agg = RegionAggregator::new(cross, &indicator);
        for (i, &(x, y)) in anchors.iter().enumerate() {
            data[i * dim + bin] = agg.sum_at(x, y) / (3.0 * sizes[i]);
        }
    }
    HistogramSet { kind, anchors, data }
}

/// Orientation and magnitude bin of every pixel. Magnitude bins span
/// `[0, max magnitude]`; an all-zero field puts everything in bin 0.
pub(crate) fn om_bins(grad: &GradientField) -> Vec<(usize, usize)> {
    let max = grad.max_magnitude();
    grad.orientation
        .iter()
        .zip(&grad.magnitude)
        .map(|(&theta, &mag)| {
            let o = uniform_bin(theta, 0.0, PI, OM_BINS_PER_COMPONENT);
            let m = if max > 0.0 {
                uniform_bin(mag, 0.0, max, OM_BINS_PER_COMPONENT)
            } else {
                0
            };
            (o, m)
        })
        .collect()
}

/// 16-d orientation/magnitude histogram over the `(2r+1)^2` box around every pixel.
pub fn om_histograms(grad: &GradientField, radius: usize) -> HistogramSet {
    om_histograms_at(grad, radius, all_anchors(grad.width, grad.height))
}

/// 16-d orientation/magnitude histogram over the `(2r+1)^2` box around each anchor,
/// with replicated borders.
pub fn om_histograms_at(grad: &GradientField, radius: usize, anchors: Vec<(usize, usize)>) -> HistogramSet {
    let kind = HistogramKind::Om16;
    let dim = kind.dim();
    let (w, h) = (grad.width, grad.height);
    let bins = om_bins(grad);

    // Integral images over the replicated, padded grid.
    let (pw, ph) = (w + 2 * radius, h + 2 * radius);
    let stride = pw + 1;
    let mut integral = vec![0u32; dim * stride * (ph + 1)];
    for py in 0..ph {
        let sy = py.saturating_sub(radius).min(h - 1);
        let mut running = [0u32; 2 * OM_BINS_PER_COMPONENT];
        for px in 0..pw {
            let sx = px.saturating_sub(radius).min(w - 1);
            let (o, m) = bins[sy * w + sx];
            running[o] += 1;
            running[OM_BINS_PER_COMPONENT + m] += 1;
            for (b, &r) in running.iter().enumerate() {
                let base = b * stride * (ph + 1);
                integral[base + (py + 1) * stride + px + 1] = integral[base + py * stride + px + 1] + r;
            }
        }
    }

    let side = 2 * radius + 1;
    let area = (side * side) as f64;
    let mut data = vec![0.0; anchors.len() * dim];
    for (i, &(x, y)) in anchors.iter().enumerate() {
        // Padded coordinates of the box are [x, x + 2r] x [y, y + 2r].
        let (x0, x1, y0, y1) = (x, x + side, y, y + side);
        for b in 0..dim {
            let base = b * stride * (ph + 1);
            let at = |r: usize, c: usize| integral[base + r * stride + c] as i64;
            let count = at(y1, x1) - at(y0, x1) - at(y1, x0) + at(y0, x0);
            data[i * dim + b] = 0.5 * count as f64 / area;
        }
    }
    HistogramSet { kind, anchors, data }
}
