use serde::{Deserialize, Serialize};

use super::{median_cut, NearestSearch, Palette};
use crate::error::{Error, Result};
use crate::raster::RasterImage;

// right, below-left, below, below-right
const WEIGHT_RIGHT: f64 = 7.0 / 16.0;
const WEIGHT_BELOW_LEFT: f64 = 3.0 / 16.0;
const WEIGHT_BELOW: f64 = 5.0 / 16.0;
const WEIGHT_BELOW_RIGHT: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DitherConfig {
    /// Diffusion intensity in [0, 1]; 0 is plain nearest-color mapping.
    pub scale: f64,
    pub palette_size: usize,
}

impl Default for DitherConfig {
    fn default() -> Self {
        Self {
            scale: 1.0,
            palette_size: 256,
        }
    }
}

impl DitherConfig {
    pub fn new(scale: f64, palette_size: usize) -> Result<Self> {
        let cfg = Self { scale, palette_size };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        validate_scale(self.scale)?;
        if !(2..=super::MAX_PALETTE_LEN).contains(&self.palette_size) {
            return Err(Error::InvalidConfig(format!(
                "palette size must be in 2..=256, got {}",
                self.palette_size
            )));
        }
        Ok(())
    }
}

fn validate_scale(scale: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&scale) {
        return Err(Error::InvalidConfig(format!("dither scale must be in [0, 1], got {scale}")));
    }
    Ok(())
}

/// Floyd–Steinberg error diffusion onto `palette`, with every diffusion weight multiplied by `scale`.
///
/// Pixels are visited left to right, top to bottom. The accumulated value is
/// clamped to [0, 255] before the nearest-color lookup and the error is taken
/// from the clamped value. Alpha, if present, is copied through.
pub fn dither_floyd_steinberg(img: &RasterImage, palette: &Palette, scale: f64) -> Result<RasterImage> {
    validate_scale(scale)?;
    if palette.is_empty() {
        return Err(Error::InvalidConfig("palette is empty".into()));
    }
    let width = img.width() as usize;
    let height = img.height() as usize;
    let channels = img.channels() as usize;
    let src = img.data();
    let search = NearestSearch::new(palette);
    let colors = palette.colors();

    let w = [
        WEIGHT_RIGHT * scale,
        WEIGHT_BELOW_LEFT * scale,
        WEIGHT_BELOW * scale,
        WEIGHT_BELOW_RIGHT * scale,
    ];
    let load_row = |y: usize, buf: &mut Vec<f64>| {
        buf.clear();
        let row = &src[y * width * channels..(y + 1) * width * channels];
        buf.extend(row.chunks_exact(channels).flat_map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]));
    };

    let mut out = Vec::with_capacity(src.len());
    let mut cur = Vec::with_capacity(width * 3);
    let mut next = Vec::with_capacity(width * 3);
    load_row(0, &mut cur);

    for y in 0..height {
        let has_next = y + 1 < height;
        if has_next {
            load_row(y + 1, &mut next);
        }
        for x in 0..width {
            let v = [
                cur[x * 3].clamp(0.0, 255.0),
                cur[x * 3 + 1].clamp(0.0, 255.0),
                cur[x * 3 + 2].clamp(0.0, 255.0),
            ];
            let chosen = colors[search.nearest(v)];
            out.extend_from_slice(&chosen);
            if channels == 4 {
                out.push(src[(y * width + x) * 4 + 3]);
            }
            if scale == 0.0 {
                continue;
            }
            for ch in 0..3 {
                let err = v[ch] - chosen[ch] as f64;
                if err == 0.0 {
                    continue;
                }
                if x + 1 < width {
                    cur[(x + 1) * 3 + ch] += err * w[0];
                }
                if has_next {
                    if x > 0 {
                        next[(x - 1) * 3 + ch] += err * w[1];
                    }
                    next[x * 3 + ch] += err * w[2];
                    if x + 1 < width {
                        next[(x + 1) * 3 + ch] += err * w[3];
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    RasterImage::new(img.width(), img.height(), img.channels(), out)
}

/// Median-cut palette followed by scaled Floyd–Steinberg dithering onto it.
pub fn quantize_for_storage(img: &RasterImage, cfg: &DitherConfig) -> Result<(RasterImage, Palette)> {
    cfg.validate()?;
    let palette = median_cut(img, cfg.palette_size)?;
    let dithered = dither_floyd_steinberg(img, &palette, cfg.scale)?;
    Ok((dithered, palette))
}
