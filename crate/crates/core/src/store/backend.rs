use std::process::{Command, Stdio};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{decode_png, encode_png, EncodeParams, RasterImage};
use crate::resample::{upscale_4x, STORAGE_SCALE};

pub const SCALE_ENV: &str = "GREENSTORE_SCALE";

/// Super-resolution stage used on retrieval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpscalerBackend {
    NativeLanczos3,
    /// Runs `command_template in.png out.png` through `sh`, with `GREENSTORE_SCALE=4`.
    External { command_template: String },
}

impl Default for UpscalerBackend {
    fn default() -> Self {
        UpscalerBackend::NativeLanczos3
    }
}

impl FromStr for UpscalerBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native" | "native_lanczos3" | "lanczos3" => Ok(UpscalerBackend::NativeLanczos3),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(UpscalerBackend::External {
                    command_template: cmd.to_string(),
                }),
                _ => Err(Error::InvalidConfig(format!(
                    "backend must be `native` or `external:<command>`, got {s:?}"
                ))),
            },
        }
    }
}

impl std::fmt::Display for UpscalerBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UpscalerBackend::NativeLanczos3 => f.write_str("native"),
            UpscalerBackend::External { command_template } => write!(f, "external:{command_template}"),
        }
    }
}

impl UpscalerBackend {
    /// Upscale by exactly 4x in each dimension.
    pub fn upscale(&self, img: &RasterImage) -> Result<RasterImage> {
        match self {
            UpscalerBackend::NativeLanczos3 => upscale_4x(img),
            UpscalerBackend::External { command_template } => run_external(command_template, img),
        }
    }
}

fn run_external(template: &str, img: &RasterImage) -> Result<RasterImage> {
    let scratch = tempfile::Builder::new()
        .prefix("greenstore-upscale-")
        .tempdir()
        .map_err(|e| Error::BackendFailure(format!("cannot create scratch directory: {e}")))?;
    let input = scratch.path().join("input.png");
    let output = scratch.path().join("output.png");
    let params = EncodeParams {
        compression_effort: 1,
        palette_mode: false,
        ..EncodeParams::default()
    };
    std::fs::write(&input, encode_png(img, None, &params)?)
        .map_err(|e| Error::BackendFailure(format!("cannot write backend input: {e}")))?;

    let result = Command::new("sh")
        .arg("-c")
        .arg(format!("{template} \"$@\""))
        .arg("greenstore-upscaler")
        .arg(&input)
        .arg(&output)
        .env(SCALE_ENV, STORAGE_SCALE.to_string())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .output()
        .map_err(|e| Error::BackendFailure(format!("cannot launch `{template}`: {e}")))?;
    if !result.status.success() {
        let stderr = String::from_utf8_lossy(&result.stderr);
        return Err(Error::BackendFailure(format!(
            "`{template}` exited with {}: {}",
            result.status,
            stderr.trim()
        )));
    }
    let bytes = std::fs::read(&output)
        .map_err(|e| Error::BackendFailure(format!("backend produced no readable output: {e}")))?;
    let upscaled = decode_png(&bytes).map_err(|e| Error::BackendFailure(format!("backend output is not a PNG: {e}")))?;
    let want = (img.width() * STORAGE_SCALE, img.height() * STORAGE_SCALE);
    if upscaled.dimensions() != want {
        return Err(Error::BackendFailure(format!(
            "backend output is {}x{}, expected {}x{}",
            upscaled.width(),
            upscaled.height(),
            want.0,
            want.1
        )));
    }
    // match the stored image's channel layout
    if upscaled.channels() != img.channels() {
        if img.channels() == 3 {
            return Ok(upscaled.to_rgb());
        }
        return Err(Error::BackendFailure("backend dropped the alpha channel".into()));
    }
    Ok(upscaled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_backend_names() {
        assert_eq!("native".parse::<UpscalerBackend>().unwrap(), UpscalerBackend::NativeLanczos3);
        assert_eq!(
            "external:python infer.py".parse::<UpscalerBackend>().unwrap(),
            UpscalerBackend::External {
                command_template: "python infer.py".into()
            }
        );
        assert!("external:".parse::<UpscalerBackend>().is_err());
        assert!("bicubic".parse::<UpscalerBackend>().is_err());
    }
}
