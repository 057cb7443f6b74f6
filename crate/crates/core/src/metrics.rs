//! Fidelity and size metrics: PSNR, SSIM, compression percentage.

use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::raster::RasterImage;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn check_shape(a: &RasterImage, b: &RasterImage) -> Result<()> {
    if a.dimensions() != b.dimensions() || a.channels() != b.channels() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

/// Mean squared error over every sample of every channel.
pub fn mse(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    check_shape(a, b)?;
    let sum: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.data().len() as f64)
}

/// PSNR in dB against a peak of 255; identical images give `f64::INFINITY`.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

fn luma(img: &RasterImage) -> Vec<f64> {
    img.pixels()
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect()
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0f64; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.map(|v| v / sum)
}

/// Valid-region separable Gaussian filtering of a `width`-wide plane.
fn filter_valid(plane: &[f64], width: usize, height: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut rows = vec![0f64; height * ow];
    for y in 0..height {
        let src = &plane[y * width..(y + 1) * width];
        for x in 0..ow {
            rows[y * ow + x] = win.iter().zip(&src[x..x + SSIM_WINDOW]).map(|(w, v)| w * v).sum();
        }
    }
    let mut out = vec![0f64; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = win
                .iter()
                .enumerate()
                .map(|(k, w)| w * rows[(y + k) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM of the luma planes over all fully-contained 11x11 Gaussian windows.
pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall {
            width: a.width(),
            height: a.height(),
            min_width: SSIM_WINDOW as u32,
            min_height: SSIM_WINDOW as u32,
        });
    }
    let win = gaussian_window();
    let la = luma(a);
    let lb = luma(b);
    let sq_a: Vec<f64> = la.iter().map(|v| v * v).collect();
    let sq_b: Vec<f64> = lb.iter().map(|v| v * v).collect();
    let prod: Vec<f64> = la.iter().zip(&lb).map(|(x, y)| x * y).collect();

    let mu_a = filter_valid(&la, w, h, &win);
    let mu_b = filter_valid(&lb, w, h, &win);
    let e_aa = filter_valid(&sq_a, w, h, &win);
    let e_bb = filter_valid(&sq_b, w, h, &win);
    let e_ab = filter_valid(&prod, w, h, &win);

    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (ma * ma + mb * mb + SSIM_C1) * (var_a + var_b + SSIM_C2);
        total += num / den;
    }
    Ok(total / mu_a.len() as f64)
}

/// `100 * (1 - stored / original)`, in whatever unit both sizes share.
pub fn compression_percentage(original: f64, stored: f64) -> Result<f64> {
    if original == 0.0 {
        return Err(Error::DivideByZero("original size is zero"));
    }
    Ok(100.0 * (1.0 - stored / original))
}

/// PSNR value that serializes the lossless case as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Psnr(pub f64);

impl Psnr {
    pub fn is_lossless(&self) -> bool {
        self.0 == f64::INFINITY
    }
}

impl std::fmt::Display for Psnr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_lossless() {
            f.write_str("inf")
        } else if let Some(p) = f.precision() {
            write!(f, "{:.*}", p, self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_lossless() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Psnr(v)),
            Raw::Text(t) if t == "inf" => Ok(Psnr(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid PSNR value {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub psnr_db: Psnr,
    pub ssim: f64,
    pub original_bytes: u64,
    pub stored_bytes: u64,
    pub compression_pct: f64,
}

impl QualityReport {
    pub fn new(original: &RasterImage, restored: &RasterImage, original_bytes: u64, stored_bytes: u64) -> Result<Self> {
        Ok(Self {
            psnr_db: Psnr(psnr(original, restored)?),
            ssim: ssim(original, restored)?,
            original_bytes,
            stored_bytes,
            compression_pct: compression_percentage(original_bytes as f64, stored_bytes as f64)?,
        })
    }
}

/// One row of the dithering comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub dataset: String,
    pub dither: f64,
    pub psnr_db: Psnr,
    pub ssim: f64,
    pub original_bytes: u64,
    pub stored_bytes: u64,
    pub compression_pct: f64,
}

pub const MIB: f64 = 1024.0 * 1024.0;

/// Aligned text table with columns Dataset, Dither, PSNR, SSIM, Stored size (MB), Compression percentage.
pub fn render_table(rows: &[TableRow]) -> String {
    let header = ["Dataset", "Dither", "PSNR", "SSIM", "Stored size (MB)", "Compression percentage"];
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.dataset.clone(),
                format!("{}", r.dither),
                format!("{:.2} db", r.psnr_db),
                format!("{:.5}", r.ssim),
                format!("{:.4}", r.stored_bytes as f64 / MIB),
                format!("{:.4}", r.compression_pct),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cols: &[&str]| {
        let parts: Vec<String> = cols
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &header);
    for row in &cells {
        let refs: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &refs);
    }
    out
}
