//! Pixelwise adaptive crosses and the shape-adaptive support regions built from them.
//!
//! Each pixel `p` gets four arms bounded by a color tolerance and a maximum length.
//! Its support region is the union of the horizontal segments of every pixel on its
//! vertical arm, so a region is a vertical spine with one horizontal run per row.
//! Membership is not symmetric: `q` in the region of `p` does not imply the converse.
//!
//! Because the horizontal runs of a region occupy distinct rows, a region sum splits
//! into a per-row interval sum followed by a per-column interval sum. Both are O(1)
//! lookups into prefix sums, which [`RegionAggregator`] precomputes.

use crate::imaging::RgbImage;

/// Arm lengths for every pixel, in pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossField {
    width: usize,
    height: usize,
    tau: u8,
    max_arm: usize,
    left: Vec<u16>,
    right: Vec<u16>,
    up: Vec<u16>,
    down: Vec<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arms {
    pub left: usize,
    pub right: usize,
    pub up: usize,
    pub down: usize,
}

#[inline]
fn similar(a: &[u8], b: &[u8], tau: u8) -> bool {
    a.iter().zip(b).all(|(&u, &v)| u.abs_diff(v) <= tau)
}

/// Builds the cross of every pixel: each arm extends until the first pixel whose
/// largest per-channel difference to the anchor exceeds `tau`, or until `max_arm`
/// or the image border is reached.
pub fn build_cross_field(img: &RgbImage, tau: u8, max_arm: usize) -> CrossField {
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    let cap = max_arm.min(u16::MAX as usize);
    let mut left = vec![0u16; n];
    let mut right = vec![0u16; n];
    let mut up = vec![0u16; n];
    let mut down = vec![0u16; n];

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let anchor = img.pixel(x, y);
            let span = |limit: usize, step: &dyn Fn(usize) -> (usize, usize)| -> u16 {
                let mut len = 0;
                while len < limit.min(cap) {
                    let (qx, qy) = step(len + 1);
                    if !similar(img.pixel(qx, qy), anchor, tau) {
                        break;
                    }
                    len += 1;
                }
                len as u16
            };
            left[i] = span(x, &|d| (x - d, y));
            right[i] = span(w - 1 - x, &|d| (x + d, y));
            up[i] = span(y, &|d| (x, y - d));
            down[i] = span(h - 1 - y, &|d| (x, y + d));
        }
    }

    CrossField {
        width: w,
        height: h,
        tau,
        max_arm: cap,
        left,
        right,
        up,
        down,
    }
}

impl CrossField {
    /// Builds a field from explicit arms; panics if an arm leaves the grid.
    pub fn from_arms(width: usize, height: usize, arms: &[Arms]) -> Self {
        assert_eq!(arms.len(), width * height);
        let mut field = CrossField {
            width,
            height,
            tau: 0,
            max_arm: 0,
            left: Vec::with_capacity(arms.len()),
            right: Vec::with_capacity(arms.len()),
            up: Vec::with_capacity(arms.len()),
            down: Vec::with_capacity(arms.len()),
        };
        for (i, a) in arms.iter().enumerate() {
            let (x, y) = (i % width, i / width);
            assert!(a.left <= x && x + a.right < width, "horizontal arm leaves grid");
            assert!(a.up <= y && y + a.down < height, "vertical arm leaves grid");
            field.left.push(a.left as u16);
            field.right.push(a.right as u16);
            field.up.push(a.up as u16);
            field.down.push(a.down as u16);
            field.max_arm = field.max_arm.max(a.left.max(a.right).max(a.up).max(a.down));
        }
        field
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tau(&self) -> u8 {
        self.tau
    }

    pub fn max_arm(&self) -> usize {
        self.max_arm
    }

    #[inline]
    pub fn arms(&self, x: usize, y: usize) -> Arms {
        let i = y * self.width + x;
        Arms {
            left: self.left[i] as usize,
            right: self.right[i] as usize,
            up: self.up[i] as usize,
            down: self.down[i] as usize,
        }
    }

    pub fn region(&self, x: usize, y: usize) -> SupportRegion<'_> {
        SupportRegion { cross: self, x, y }
    }
}

/// The support region of one anchor, represented implicitly by the cross field.
#[derive(Debug, Clone, Copy)]
pub struct SupportRegion<'a> {
    cross: &'a CrossField,
    x: usize,
    y: usize,
}

impl<'a> SupportRegion<'a> {
    pub fn anchor(&self) -> (usize, usize) {
        (self.x, self.y)
    }

    /// Horizontal runs `(row, x_start, x_end_inclusive)` along the vertical spine.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, usize)> + 'a {
        let cross = self.cross;
        let x = self.x;
        let a = cross.arms(self.x, self.y);
        (self.y - a.up..=self.y + a.down).map(move |qy| {
            let q = cross.arms(x, qy);
            (qy, x - q.left, x + q.right)
        })
    }

    pub fn members(&self) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.rows().flat_map(|(qy, x0, x1)| (x0..=x1).map(move |qx| (qx, qy)))
    }

    pub fn len(&self) -> usize {
        self.rows().map(|(_, x0, x1)| x1 - x0 + 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, px: usize, py: usize) -> bool {
        let a = self.cross.arms(self.x, self.y);
        if py + a.up < self.y || py > self.y + a.down {
            return false;
        }
        let q = self.cross.arms(self.x, py);
        px + q.left >= self.x && px <= self.x + q.right
    }
}

/// `|region(p)|` for every pixel.
pub fn support_region_size(cross: &CrossField) -> Vec<u32> {
    let (w, h) = (cross.width, cross.height);
    // Per-pixel horizontal run length, then column prefix sums.
    let mut colsum = vec![0u32; (h + 1) * w];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let run = cross.left[i] as u32 + cross.right[i] as u32 + 1;
            colsum[(y + 1) * w + x] = colsum[y * w + x] + run;
        }
    }
    let mut sizes = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let top = y - cross.up[i] as usize;
            let bottom = y + cross.down[i] as usize;
            sizes.push(colsum[(bottom + 1) * w + x] - colsum[top * w + x]);
        }
    }
    sizes
}

/// Region sums of one per-pixel field, answerable in O(1) per anchor.
#[derive(Debug, Clone)]
pub struct RegionAggregator<'a> {
    cross: &'a CrossField,
    // (height + 1) x width column prefix sums of the per-pixel horizontal run sums.
    column_prefix: Vec<f64>,
}

impl<'a> RegionAggregator<'a> {
    pub fn new(cross: &'a CrossField, values: &[f64]) -> Self {
        let (w, h) = (cross.width, cross.height);
        assert_eq!(values.len(), w * h, "values must cover the cross field");

        let mut row_prefix = vec![0.0; w + 1];
        let mut column_prefix = vec![0.0; (h + 1) * w];
        for y in 0..h {
            let row = &values[y * w..(y + 1) * w];
            for (x, &v) in row.iter().enumerate() {
                row_prefix[x + 1] = row_prefix[x] + v;
            }
            for x in 0..w {
                let i = y * w + x;
                let x0 = x - cross.left[i] as usize;
                let x1 = x + cross.right[i] as usize;
                let run = row_prefix[x1 + 1] - row_prefix[x0];
                column_prefix[(y + 1) * w + x] = column_prefix[y * w + x] + run;
            }
        }
        Self { cross, column_prefix }
    }

    #[inline]
    pub fn sum_at(&self, x: usize, y: usize) -> f64 {
        let w = self.cross.width;
        let i = y * w + x;
        let top = y - self.cross.up[i] as usize;
        let bottom = y + self.cross.down[i] as usize;
        self.column_prefix[(bottom + 1) * w + x] - self.column_prefix[top * w + x]
    }

    pub fn sums(&self) -> Vec<f64> {
        let (w, h) = (self.cross.width, self.cross.height);
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                out.push(self.sum_at(x, y));
            }
        }
        out
    }
}

/// `sum over region(p) of values` for every pixel `p`.
pub fn aggregate_over_regions(values: &[f64], cross: &CrossField) -> Vec<f64> {
    RegionAggregator::new(cross, values).sums()
}
