//! In-memory raster representation and the PNG storage codec.

mod filter;
mod png;

pub use filter::{filter_image, heuristic_cost, unfilter_row, FilterStrategy, FilterType, FilteredImage};
pub use png::{decode_png, encode_png, EncodeParams, PNG_SIGNATURE};

use crate::error::{Error, Result};

/// 8-bit RGB or RGBA pixel grid, row-major and interleaved.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .field("bytes", &self.data.len())
            .finish()
    }
}

impl RasterImage {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if channels != 3 && channels != 4 {
            return Err(Error::InvalidConfig(format!(
                "channel count must be 3 or 4, got {channels}"
            )));
        }
        let expected = sample_count(width, height, channels)?;
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{width}x{height}x{channels} needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image where every pixel equals `pixel`; its length picks RGB or RGBA.
    pub fn filled(width: u32, height: u32, pixel: &[u8]) -> Result<Self> {
        let channels = pixel.len() as u8;
        let count = width as usize * height as usize;
        let data = pixel.repeat(count);
        Self::new(width, height, channels, data)
    }

    pub fn from_rgb_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, 3, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn has_alpha(&self) -> bool {
        self.channels == 4
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let c = self.channels as usize;
        let start = (y as usize * self.width as usize + x as usize) * c;
        &self.data[start..start + c]
    }

    pub fn pixels(&self) -> std::slice::ChunksExact<'_, u8> {
        self.data.chunks_exact(self.channels as usize)
    }

    /// Sub-rectangle copy. The rectangle must lie inside the image.
    pub fn crop(&self, x: u32, y: u32, width: u32, height: u32) -> Result<Self> {
        if x.checked_add(width).map_or(true, |r| r > self.width)
            || y.checked_add(height).map_or(true, |b| b > self.height)
        {
            return Err(Error::InvalidConfig(format!(
                "crop {width}x{height}+{x}+{y} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let c = self.channels as usize;
        let stride = self.width as usize * c;
        let mut data = Vec::with_capacity(width as usize * height as usize * c);
        for row in y..y + height {
            let start = row as usize * stride + x as usize * c;
            data.extend_from_slice(&self.data[start..start + width as usize * c]);
        }
        Self::new(width, height, self.channels, data)
    }

    /// Left-right mirror image.
    pub fn mirror_horizontal(&self) -> Self {
        let c = self.channels as usize;
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks_exact(self.width as usize * c) {
            for px in row.chunks_exact(c).rev() {
                data.extend_from_slice(px);
            }
        }
        Self { data, ..*self }
    }

    /// Copy of the RGB part, dropping alpha if present.
    pub fn to_rgb(&self) -> Self {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.pixels().flat_map(|p| [p[0], p[1], p[2]]).collect();
        Self {
            channels: 3,
            data,
            ..*self
        }
    }
}

pub(crate) fn sample_count(width: u32, height: u32, channels: u8) -> Result<usize> {
    (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(channels as usize))
        .filter(|&n| n <= isize::MAX as usize)
        .ok_or_else(|| Error::Unsupported(format!("image {width}x{height} is too large")))
}

/// Exact byte counts of an original and a stored object.
pub fn measure_sizes(original: &[u8], stored: &[u8]) -> (u64, u64) {
    (original.len() as u64, stored.len() as u64)
}
