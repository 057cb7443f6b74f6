use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::palette::{quantize_for_storage, DitherConfig, Palette};
use crate::raster::{decode_png, encode_png, EncodeParams, FilterStrategy, RasterImage};
use crate::resample::{downscale_4x, restore_dimensions, STORAGE_SCALE};

use super::UpscalerBackend;

pub const CODEC_INDEXED: &str = "png-indexed";
pub const CODEC_RGB: &str = "png-rgb";
pub const CODEC_RGBA: &str = "png-rgba";

/// Encoder settings for stored objects.
pub const STORAGE_ENCODE: EncodeParams = EncodeParams {
    filter_strategy: FilterStrategy::Adaptive,
    compression_effort: 9,
    palette_mode: true,
};

/// The storage form of one image.
#[derive(Debug, Clone)]
pub struct StoredImage {
    pub png: Vec<u8>,
    pub codec: &'static str,
    pub width: u32,
    pub height: u32,
    /// Quantization palette applied before downscaling.
    pub palette: Palette,
}

/// Quantize and dither, downscale 4x, then encode as PNG.
///
/// The downscaled raster is written as indexed color whenever it has at most
/// 256 distinct colors and no alpha; otherwise as 8-bit truecolor.
pub fn compress_for_storage(img: &RasterImage, cfg: &DitherConfig) -> Result<StoredImage> {
    cfg.validate()?;
    let (w, h) = img.dimensions();
    if w < STORAGE_SCALE || h < STORAGE_SCALE {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: STORAGE_SCALE,
            min_height: STORAGE_SCALE,
        });
    }
    let (dithered, palette) = quantize_for_storage(img, cfg)?;
    let small = downscale_4x(&dithered)?;

    let exact_palette = if small.has_alpha() {
        None
    } else {
        let mut distinct = BTreeSet::new();
        let fits = small.pixels().all(|p| {
            distinct.insert([p[0], p[1], p[2]]);
            distinct.len() <= crate::palette::MAX_PALETTE_LEN
        });
        fits.then(|| Palette::new(distinct.into_iter().collect())).transpose()?
    };
    let (png, codec) = match &exact_palette {
        Some(p) => (encode_png(&small, Some(p), &STORAGE_ENCODE)?, CODEC_INDEXED),
        None if small.has_alpha() => (encode_png(&small, None, &STORAGE_ENCODE)?, CODEC_RGBA),
        None => (encode_png(&small, None, &STORAGE_ENCODE)?, CODEC_RGB),
    };
    Ok(StoredImage {
        png,
        codec,
        width: small.width(),
        height: small.height(),
        palette,
    })
}

/// Decode a stored object, upscale it with `backend` and crop to the original size.
pub fn restore_from_storage(stored_png: &[u8], original_width: u32, original_height: u32, backend: &UpscalerBackend) -> Result<RasterImage> {
    let small = decode_png(stored_png)?;
    let (sw, sh) = small.dimensions();
    if sw != original_width.div_ceil(STORAGE_SCALE) || sh != original_height.div_ceil(STORAGE_SCALE) {
        return Err(Error::CorruptInput(format!(
            "stored image {sw}x{sh} does not match original {original_width}x{original_height}"
        )));
    }
    let big = backend.upscale(&small)?;
    restore_dimensions(&big, original_width, original_height)
}
