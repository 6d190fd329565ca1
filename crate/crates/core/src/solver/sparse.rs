//! Gradient-driven subsampling and cross-guided upsampling.

use crate::config::Upsampling;
use crate::cross::CrossField;
use crate::error::{PisaError, Result};
use crate::imaging::{GradientField, RgbImage};

use super::SaliencyMap;

const TILE: usize = 3;

/// One selected pixel per 3x3 tile, laid out as a small image in tile order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSample {
    pub grid_width: usize,
    pub grid_height: usize,
    /// Full-resolution coordinates of the selected pixels, tile-row-major.
    pub positions: Vec<(usize, usize)>,
    /// Colors of the selected pixels as a `grid_width x grid_height` image.
    pub image: RgbImage,
}

/// Picks the largest-gradient pixel of every 3x3 tile (ragged edge tiles allowed);
/// ties go to the first pixel in row-major order.
pub fn subsample_max_gradient(img: &RgbImage, grad: &GradientField) -> Result<SparseSample> {
    img.ensure_pipeline_size()?;
    let (w, h) = (img.width(), img.height());
    if (grad.width, grad.height) != (w, h) {
        return Err(PisaError::invalid("gradient field does not match image"));
    }
    let gw = w.div_ceil(TILE);
    let gh = h.div_ceil(TILE);
    let mut positions = Vec::with_capacity(gw * gh);
    let mut data = Vec::with_capacity(gw * gh * 3);
    for ty in 0..gh {
        for tx in 0..gw {
            let mut best = (TILE * tx, TILE * ty);
            let mut best_mag = f64::NEG_INFINITY;
            for y in TILE * ty..(TILE * ty + TILE).min(h) {
                for x in TILE * tx..(TILE * tx + TILE).min(w) {
                    let m = grad.magnitude[y * w + x];
                    if m > best_mag {
                        best_mag = m;
                        best = (x, y);
                    }
                }
            }
            positions.push(best);
            data.extend_from_slice(img.pixel(best.0, best.1));
        }
    }
    Ok(SparseSample {
        grid_width: gw,
        grid_height: gh,
        positions,
        image: RgbImage::from_rgb(gw, gh, data)?,
    })
}

/// Spreads sparse values over the support regions of their pixels.
///
/// Each full-resolution pixel `p` collects every selected pixel `k` whose region
/// contains it, weighted by `exp(-||p - k|| / sigma)`. `Literal` divides the weighted
/// sum by the number of contributors, `Normalized` by the weight total. Pixels no
/// region reaches take the value of the nearest selected pixel.
pub fn upsample_saliency(
    positions: &[(usize, usize)],
    values: &[f64],
    cross: &CrossField,
    sigma: f64,
    mode: Upsampling,
    num_levels: usize,
) -> Result<SaliencyMap> {
    if positions.is_empty() || values.is_empty() {
        return Err(PisaError::invalid("no sparse values to upsample"));
    }
    if positions.len() != values.len() {
        return Err(PisaError::invalid("sparse positions and values differ in length"));
    }
    if !(sigma > 0.0) {
        return Err(PisaError::invalid("sigma must be positive"));
    }
    let (w, h) = (cross.width(), cross.height());
    let n = w * h;
    // Weighted deviations from the first contributor keep equal inputs exact.
    let mut base = vec![0.0; n];
    let mut weighted = vec![0.0; n];
    let mut weight_total = vec![0.0; n];
    let mut contributors = vec![0u32; n];
    let weight = |dx: usize, dy: usize| {
        if sigma.is_infinite() {
            1.0
        } else {
            (-((dx as f64).hypot(dy as f64)) / sigma).exp()
        }
    };
    let r = cross.max_arm();
    let table: Vec<f64> = (0..=r)
        .flat_map(|dy| (0..=r).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| weight(dx, dy))
        .collect();
    for (&(kx, ky), &v) in positions.iter().zip(values) {
        for (qy, x0, x1) in cross.region(kx, ky).rows() {
            let dy = qy.abs_diff(ky);
            for qx in x0..=x1 {
                let dx = qx.abs_diff(kx);
                let wgt = if dx <= r && dy <= r {
                    table[dy * (r + 1) + dx]
                } else {
                    weight(dx, dy)
                };
                let i = qy * w + qx;
                if contributors[i] == 0 {
                    base[i] = v;
                }
                weighted[i] += wgt * (v - base[i]);
                weight_total[i] += wgt;
                contributors[i] += 1;
            }
        }
    }

    let nearest = NearestSample::new(positions, w, h);
    let mut out = Vec::with_capacity(n);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let value = if contributors[i] == 0 {
                values[nearest.find(x, y)]
            } else {
                match mode {
                    Upsampling::Literal => (base[i] * weight_total[i] + weighted[i]) / contributors[i] as f64,
                    Upsampling::Normalized => base[i] + weighted[i] / weight_total[i],
                }
            };
            out.push(value);
        }
    }
    Ok(SaliencyMap {
        width: w,
        height: h,
        num_levels,
        values: out,
    })
}

/// Nearest selected pixel lookup. Uses the tile layout when the samples come from
/// [`subsample_max_gradient`], and a linear scan otherwise.
struct NearestSample<'a> {
    positions: &'a [(usize, usize)],
    tiled: bool,
    grid_width: usize,
    grid_height: usize,
}

impl<'a> NearestSample<'a> {
    fn new(positions: &'a [(usize, usize)], w: usize, h: usize) -> Self {
        let gw = w.div_ceil(TILE);
        let gh = h.div_ceil(TILE);
        let tiled = positions.len() == gw * gh
            && positions
                .iter()
                .enumerate()
                .all(|(i, &(x, y))| x / TILE == i % gw && y / TILE == i / gw);
        Self {
            positions,
            tiled,
            grid_width: gw,
            grid_height: gh,
        }
    }

    fn find(&self, x: usize, y: usize) -> usize {
        let dist = |i: usize| {
            let (px, py) = self.positions[i];
            let dx = px as i64 - x as i64;
            let dy = py as i64 - y as i64;
            dx * dx + dy * dy
        };
        let mut best = usize::MAX;
        let mut best_d = i64::MAX;
        let mut consider = |i: usize| {
            let d = dist(i);
            if d < best_d || (d == best_d && i < best) {
                best_d = d;
                best = i;
            }
        };
        if self.tiled {
            // Every pixel lies within 2 * sqrt(2) of its own tile's sample, so
            // samples more than one tile away can never be nearer.
            let (tx, ty) = (x / TILE, y / TILE);
            for gy in ty.saturating_sub(1)..=(ty + 1).min(self.grid_height - 1) {
                for gx in tx.saturating_sub(1)..=(tx + 1).min(self.grid_width - 1) {
                    consider(gy * self.grid_width + gx);
                }
            }
        } else {
            (0..self.positions.len()).for_each(consider);
        }
        best
    }
}
