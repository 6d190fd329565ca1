//! Raster containers, color conversion, median pre-smoothing and gradients.
//!
//! Borders are handled by edge replication everywhere in this module.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{PisaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    Rgb,
    Lab,
    Scalar,
}

/// Dense row-major pixel grid with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage<T> {
    width: usize,
    height: usize,
    channels: usize,
    color_space: ColorSpace,
    data: Vec<T>,
}

pub type RgbImage = RasterImage<u8>;
pub type LabImage = RasterImage<f64>;

impl<T: Copy> RasterImage<T> {
    pub fn from_vec(
        width: usize,
        height: usize,
        channels: usize,
        color_space: ColorSpace,
        data: Vec<T>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(PisaError::invalid(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(PisaError::invalid(format!(
                "buffer of {} values does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            color_space,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, color_space: ColorSpace, pixel: &[T]) -> Self {
        let channels = pixel.len();
        assert!(channels == 1 || channels == 3, "1 or 3 channels");
        let mut data = Vec::with_capacity(width * height * channels);
        for _ in 0..width * height {
            data.extend_from_slice(pixel);
        }
        Self {
            width,
            height,
            channels,
            color_space,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn color_space(&self) -> ColorSpace {
        self.color_space
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// All channels of pixel `(x, y)`.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[T] {
        let i = self.index(x, y) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_at(&self, idx: usize) -> &[T] {
        let i = idx * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> T {
        self.data[self.index(x, y) * self.channels + c]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, value: &[T]) {
        let i = self.index(x, y) * self.channels;
        self.data[i..i + self.channels].copy_from_slice(value);
    }
}

impl RgbImage {
    pub fn from_rgb(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::from_vec(width, height, 3, ColorSpace::Rgb, data)
    }

    /// Fails unless the image is at least 3x3, the minimum every pipeline entry point needs.
    pub fn ensure_pipeline_size(&self) -> Result<()> {
        if self.width < 3 || self.height < 3 {
            return Err(PisaError::invalid(format!(
                "image is {}x{}, pipeline requires at least 3x3",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// Decodes a PNG/PPM/JPEG/BMP file into 8-bit RGB.
pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| PisaError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    RgbImage::from_rgb(w as usize, h as usize, rgb.into_raw())
}

/// Decodes any image as 8-bit luminance.
pub fn load_gray(path: impl AsRef<Path>) -> Result<RasterImage<u8>> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| PisaError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    RasterImage::from_vec(w as usize, h as usize, 1, ColorSpace::Scalar, gray.into_raw())
}

pub fn save_gray_png(path: impl AsRef<Path>, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer_with_format(
        path,
        data,
        width as u32,
        height as u32,
        image::ExtendedColorType::L8,
        image::ImageFormat::Png,
    )
    .map_err(|source| PisaError::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_rgb_png(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer_with_format(
        path,
        img.data(),
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::Rgb8,
        image::ImageFormat::Png,
    )
    .map_err(|source| PisaError::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// 3x3 median per channel with replicated borders.
pub fn median_filter_3x3(img: &RasterImage<u8>) -> Result<RasterImage<u8>> {
    if img.is_empty() {
        return Err(PisaError::invalid("median filter needs at least a 1x1 image"));
    }
    let (w, h, ch) = (img.width, img.height, img.channels);
    let mut out = Vec::with_capacity(img.data.len());
    let mut window = [0u8; 9];
    for y in 0..h {
        let rows = [y.saturating_sub(1), y, (y + 1).min(h - 1)];
        for x in 0..w {
            let cols = [x.saturating_sub(1), x, (x + 1).min(w - 1)];
            for c in 0..ch {
                let mut n = 0;
                for &yy in &rows {
                    for &xx in &cols {
                        window[n] = img.data[(yy * w + xx) * ch + c];
                        n += 1;
                    }
                }
                out.push(median9(&mut window));
            }
        }
    }
    RasterImage::from_vec(w, h, ch, img.color_space, out)
}

/// Median of nine values by a fixed exchange network.
#[inline]
fn median9(p: &mut [u8; 9]) -> u8 {
    #[inline(always)]
    fn sort2(p: &mut [u8; 9], a: usize, b: usize) {
        let (x, y) = (p[a], p[b]);
        p[a] = x.min(y);
        p[b] = x.max(y);
    }
    for (a, b) in [
        (1, 2),
        (4, 5),
        (7, 8),
        (0, 1),
        (3, 4),
        (6, 7),
        (1, 2),
        (4, 5),
        (7, 8),
        (0, 3),
        (5, 8),
        (4, 7),
        (3, 6),
        (1, 4),
        (2, 5),
        (4, 7),
        (4, 2),
        (6, 4),
        (4, 2),
    ] {
        sort2(p, a, b);
    }
    p[4]
}

const WHITE_X: f64 = 0.95047;
const WHITE_Y: f64 = 1.0;
const WHITE_Z: f64 = 1.08883;

fn srgb_to_linear(v: u8) -> f64 {
    let c = v as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// CIELAB of one sRGB (D65) pixel.
pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    linear_to_lab(srgb_to_linear(rgb[0]), srgb_to_linear(rgb[1]), srgb_to_linear(rgb[2]))
}

fn linear_to_lab(r: f64, g: f64, b: f64) -> [f64; 3] {
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let fx = lab_f(x / WHITE_X);
    let fy = lab_f(y / WHITE_Y);
    let fz = lab_f(z / WHITE_Z);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn rgb_to_lab(img: &RgbImage) -> Result<LabImage> {
    if img.channels != 3 || img.color_space != ColorSpace::Rgb {
        return Err(PisaError::invalid("rgb_to_lab expects a 3-channel RGB image"));
    }
    let lut: Vec<f64> = (0..=255u8).map(srgb_to_linear).collect();
    let mut data = Vec::with_capacity(img.data.len());
    for px in img.data.chunks_exact(3) {
        let lin = |v: u8| lut[v as usize];
        data.extend_from_slice(&linear_to_lab(lin(px[0]), lin(px[1]), lin(px[2])));
    }
    RasterImage::from_vec(img.width, img.height, 3, ColorSpace::Lab, data)
}

/// 0.299 R + 0.587 G + 0.114 B.
pub fn luminance(img: &RgbImage) -> RasterImage<f64> {
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect();
    RasterImage {
        width: img.width,
        height: img.height,
        channels: 1,
        color_space: ColorSpace::Scalar,
        data,
    }
}

/// Per-pixel unsigned gradient orientation in `[0, pi)` and magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub orientation: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl GradientField {
    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }
}

/// Central differences over a scalar plane; zero-magnitude pixels carry orientation 0.
pub fn gradients_of_plane(plane: &RasterImage<f64>) -> GradientField {
    assert_eq!(plane.channels, 1, "gradients need a scalar plane");
    let (w, h) = (plane.width, plane.height);
    let at = |x: usize, y: usize| plane.data[y * w + x];
    let mut orientation = Vec::with_capacity(w * h);
    let mut magnitude = Vec::with_capacity(w * h);
    for y in 0..h {
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let gx = (at(xr, y) - at(xl, y)) / 2.0;
            let gy = (at(x, yd) - at(x, yu)) / 2.0;
            let mag = gx.hypot(gy);
            let theta = if mag == 0.0 {
                0.0
            } else {
                let mut t = gy.atan2(gx);
                if t < 0.0 {
                    t += PI;
                }
                if t >= PI {
                    t -= PI;
                }
                t
            };
            orientation.push(theta);
            magnitude.push(mag);
        }
    }
    GradientField {
        width: w,
        height: h,
        orientation,
        magnitude,
    }
}

/// Gradients of the luminance of an RGB image.
pub fn compute_gradients(img: &RgbImage) -> GradientField {
    gradients_of_plane(&luminance(img))
}
