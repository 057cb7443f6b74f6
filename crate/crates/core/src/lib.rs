//! Image archival with reduced storage footprint.
//!
//! Images are palette-quantized with scaled Floyd–Steinberg dithering,
//! downscaled 4x with Lanczos3 and stored as deflate-compressed PNG in a
//! content-addressed local store. Retrieval upscales through a pluggable
//! super-resolution backend back to the original dimensions. The crate also
//! measures PSNR/SSIM and the annual storage energy and carbon saved.

pub mod cli;
pub mod energy;
pub mod error;
pub mod metrics;
pub mod palette;
pub mod raster;
pub mod resample;
pub mod store;

pub use error::{Error, Result};
pub use palette::{DitherConfig, Palette};
pub use raster::RasterImage;
pub use store::{ArchiveManifest, Store, UpscalerBackend};
