use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compress_for_storage, restore_from_storage, UpscalerBackend};
use crate::error::{Error, Result};
use crate::metrics::{compression_percentage, Psnr, QualityReport, TableRow};
use crate::palette::DitherConfig;
use crate::raster::decode_png;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub source_name: String,
    pub dither: f64,
    pub report: QualityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEvaluation {
    pub rows: Vec<TableRow>,
    pub images: Vec<ImageResult>,
}

/// PNG files directly inside `dir`, sorted by name.
pub fn list_dataset(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(dir.display().to_string()),
        _ => Error::storage(dir, e),
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::storage(dir, e))?.path();
        let is_png = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyDataset(dir.to_path_buf()));
    }
    Ok(files)
}

fn evaluate_one(path: &Path, cfg: &DitherConfig, backend: &UpscalerBackend) -> Result<ImageResult> {
    let original = fs::read(path).map_err(|e| Error::storage(path, e))?;
    let img = decode_png(&original)?;
    let stored = compress_for_storage(&img, cfg)?;
    let restored = restore_from_storage(&stored.png, img.width(), img.height(), backend)?;
    let report = QualityReport::new(&img.to_rgb(), &restored.to_rgb(), original.len() as u64, stored.png.len() as u64)?;
    Ok(ImageResult {
        source_name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        dither: cfg.scale,
        report,
    })
}

/// Runs archive-and-retrieve in memory for every PNG in `dir` under each config.
///
/// Each config yields one row: mean PSNR and SSIM over images, total stored
/// size and the compression percentage of the totals.
pub fn evaluate_dataset(dir: &Path, cfgs: &[DitherConfig], backend: &UpscalerBackend) -> Result<DatasetEvaluation> {
    if cfgs.is_empty() {
        return Err(Error::InvalidConfig("no dither configurations given".into()));
    }
    for cfg in cfgs {
        cfg.validate()?;
    }
    let files = list_dataset(dir)?;
    let dataset = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());

    let mut rows = Vec::with_capacity(cfgs.len());
    let mut images = Vec::with_capacity(cfgs.len() * files.len());
    for cfg in cfgs {
        let results: Vec<ImageResult> = files
            .par_iter()
            .map(|p| evaluate_one(p, cfg, backend))
            .collect::<Result<_>>()?;
        let n = results.len() as f64;
        let original_bytes: u64 = results.iter().map(|r| r.report.original_bytes).sum();
        let stored_bytes: u64 = results.iter().map(|r| r.report.stored_bytes).sum();
        rows.push(TableRow {
            dataset: dataset.clone(),
            dither: cfg.scale,
            psnr_db: Psnr(results.iter().map(|r| r.report.psnr_db.0).sum::<f64>() / n),
            ssim: results.iter().map(|r| r.report.ssim).sum::<f64>() / n,
            original_bytes,
            stored_bytes,
            compression_pct: compression_percentage(original_bytes as f64, stored_bytes as f64)?,
        });
        images.extend(results);
    }
    Ok(DatasetEvaluation { rows, images })
}
