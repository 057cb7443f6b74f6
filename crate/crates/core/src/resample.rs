//! Separable Lanczos3 resampling.
//!
//! Output pixel centers are mapped into source space, kernel weights are
//! sampled at the source-space distances and normalized to sum to one. When
//! shrinking, the kernel is stretched by the inverse factor so it also acts as
//! the antialiasing filter. Out-of-range taps clamp to the nearest edge pixel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::RasterImage;

pub const LANCZOS_LOBES: f64 = 3.0;
pub const STORAGE_SCALE: u32 = 4;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// `sinc(x) * sinc(x / 3)` inside `|x| < 3`, zero outside.
pub fn lanczos3_kernel(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= LANCZOS_LOBES {
        0.0
    } else if ax.fract() == 0.0 && ax != 0.0 {
        // exact zeros at the nonzero integers
        0.0
    } else {
        sinc(ax) * sinc(ax / LANCZOS_LOBES)
    }
}

/// Resampling by a positive rational factor; output sides are `round(side * factor)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResampleSpec {
    numerator: u32,
    denominator: u32,
}

impl ResampleSpec {
    pub fn new(numerator: u32, denominator: u32) -> Result<Self> {
        if numerator == 0 || denominator == 0 {
            return Err(Error::InvalidConfig(format!(
                "resample factor must be positive, got {numerator}/{denominator}"
            )));
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    pub fn factor(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn output_len(&self, len: u32) -> u32 {
        let exact = len as u64 * self.numerator as u64;
        let den = self.denominator as u64;
        // round half away from zero
        ((2 * exact + den) / (2 * den)) as u32
    }
}

/// Normalized taps for one output sample: (first source index, weights).
#[derive(Debug, Clone)]
struct Taps {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

fn axis_taps(in_len: usize, out_len: usize, factor: f64, pad: f64) -> Vec<Taps> {
    let stretch = if factor < 1.0 { 1.0 / factor } else { 1.0 };
    let radius = LANCZOS_LOBES * stretch;
    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) / factor - 0.5 - pad;
            let lo = (center - radius).floor() as i64;
            let hi = (center + radius).ceil() as i64;
            let mut indices = Vec::with_capacity((hi - lo + 1) as usize);
            let mut weights = Vec::with_capacity((hi - lo + 1) as usize);
            for j in lo..=hi {
                let w = lanczos3_kernel((j as f64 - center) / stretch);
                if w == 0.0 {
                    continue;
                }
                let idx = j.clamp(0, in_len as i64 - 1) as usize;
                indices.push(idx);
                weights.push(w);
            }
            let sum: f64 = weights.iter().sum();
            if sum != 0.0 {
                for w in &mut weights {
                    *w /= sum;
                }
            } else {
                // degenerate support: fall back to the nearest edge sample
                indices = vec![center.round().clamp(0.0, in_len as f64 - 1.0) as usize];
                weights = vec![1.0];
            }
            Taps { indices, weights }
        })
        .collect()
}

/// Final quantization: snap away floating-point noise, round half away from zero, clamp.
pub(crate) fn quantize_sample(v: f64) -> u8 {
    let snapped = (v * 1e6).round() / 1e6;
    snapped.round().clamp(0.0, 255.0) as u8
}

fn resample(img: &RasterImage, out_w: u32, out_h: u32, factor: (f64, f64), pad: (f64, f64)) -> Result<RasterImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidConfig(format!(
            "resampled size would be {out_w}x{out_h}"
        )));
    }
    let (in_w, in_h) = (img.width() as usize, img.height() as usize);
    let (out_w, out_h) = (out_w as usize, out_h as usize);
    let c = img.channels() as usize;
    let src = img.data();
    let h_taps = axis_taps(in_w, out_w, factor.0, pad.0);
    let v_taps = axis_taps(in_h, out_h, factor.1, pad.1);

    // horizontal pass, kept unrounded
    let mut mid = vec![0f64; in_h * out_w * c];
    mid.par_chunks_mut(out_w * c).enumerate().for_each(|(y, row)| {
        let src_row = &src[y * in_w * c..(y + 1) * in_w * c];
        for (x, taps) in h_taps.iter().enumerate() {
            for ch in 0..c {
                let mut acc = 0.0;
                for (&j, &w) in taps.indices.iter().zip(&taps.weights) {
                    acc += w * src_row[j * c + ch] as f64;
                }
                row[x * c + ch] = acc;
            }
        }
    });

    let mut out = vec![0u8; out_h * out_w * c];
    out.par_chunks_mut(out_w * c).enumerate().for_each(|(y, row)| {
        let taps = &v_taps[y];
        for (i, dst) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (&j, &w) in taps.indices.iter().zip(&taps.weights) {
                acc += w * mid[j * out_w * c + i];
            }
            *dst = quantize_sample(acc);
        }
    });
    RasterImage::new(out_w as u32, out_h as u32, img.channels(), out)
}

/// Resize by `spec`, keeping the source centered in the output extent.
pub fn resize(img: &RasterImage, spec: &ResampleSpec) -> Result<RasterImage> {
    let out_w = spec.output_len(img.width());
    let out_h = spec.output_len(img.height());
    let f = spec.factor();
    let pad_x = (out_w as f64 / f - img.width() as f64) / 2.0;
    let pad_y = (out_h as f64 / f - img.height() as f64) / 2.0;
    resample(img, out_w, out_h, (f, f), (pad_x, pad_y))
}

/// Offset of the original content inside a `4 * ceil(len / 4)` extent.
pub fn storage_pad(original_len: u32) -> u32 {
    (STORAGE_SCALE * original_len.div_ceil(STORAGE_SCALE) - original_len) / 2
}

/// Quarter-size image, `ceil(side / 4)` per side. Sides not divisible by four
/// are centered within the `4 * ceil(side / 4)` extent (see [`storage_pad`]).
pub fn downscale_4x(img: &RasterImage) -> Result<RasterImage> {
    let (w, h) = img.dimensions();
    if w < STORAGE_SCALE || h < STORAGE_SCALE {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: STORAGE_SCALE,
            min_height: STORAGE_SCALE,
        });
    }
    let f = 1.0 / STORAGE_SCALE as f64;
    resample(
        img,
        w.div_ceil(STORAGE_SCALE),
        h.div_ceil(STORAGE_SCALE),
        (f, f),
        (storage_pad(w) as f64, storage_pad(h) as f64),
    )
}

pub fn upscale_4x(img: &RasterImage) -> Result<RasterImage> {
    let (w, h) = img.dimensions();
    let out_w = w
        .checked_mul(STORAGE_SCALE)
        .ok_or_else(|| Error::Unsupported(format!("{w}x{h} is too large to upscale")))?;
    let out_h = h
        .checked_mul(STORAGE_SCALE)
        .ok_or_else(|| Error::Unsupported(format!("{w}x{h} is too large to upscale")))?;
    let f = STORAGE_SCALE as f64;
    resample(img, out_w, out_h, (f, f), (0.0, 0.0))
}

/// Crops a 4x-upscaled stored image back to the original dimensions.
pub fn restore_dimensions(upscaled: &RasterImage, original_width: u32, original_height: u32) -> Result<RasterImage> {
    let (w, h) = upscaled.dimensions();
    if w < original_width || h < original_height {
        return Err(Error::ShapeMismatch(format!(
            "upscaled image {w}x{h} is smaller than the original {original_width}x{original_height}"
        )));
    }
    if (w, h) == (original_width, original_height) {
        return Ok(upscaled.clone());
    }
    upscaled.crop(
        storage_pad(original_width).min(w - original_width),
        storage_pad(original_height).min(h - original_height),
        original_width,
        original_height,
    )
}
