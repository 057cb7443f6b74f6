#![allow(dead_code)]

pub mod oracle;

use std::path::Path;

use greenstore::raster::{encode_png, EncodeParams};
use greenstore::RasterImage;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut StdRng, max_w: u32, max_h: u32) -> RasterImage {
    let w = rng.gen_range(1..=max_w);
    let h = rng.gen_range(1..=max_h);
    let data = (0..w * h * 3).map(|_| rng.gen()).collect();
    RasterImage::new(w, h, 3, data).unwrap()
}

/// Smooth shading, an edge, and mid-frequency texture, loosely photo-like.
pub fn natural_image(w: u32, h: u32, seed: u64) -> RasterImage {
    let mut r = rng(seed);
    let phase: [f64; 3] = [r.gen_range(0.0..6.28), r.gen_range(0.0..6.28), r.gen_range(0.0..6.28)];
    let freq: f64 = r.gen_range(0.08..0.2);
    let cx = r.gen_range(0.3..0.7) * w as f64;
    let cy = r.gen_range(0.3..0.7) * h as f64;
    RasterImage::from_rgb_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let base = 60.0 + 120.0 * xf / w as f64 + 40.0 * yf / h as f64;
        let blob = 50.0 * (-((xf - cx).powi(2) + (yf - cy).powi(2)) / (0.05 * (w * h) as f64)).exp();
        let edge = if xf + 0.5 * yf > 0.6 * w as f64 { 25.0 } else { -10.0 };
        let mut px = [0u8; 3];
        for ch in 0..3 {
            let tex = 18.0 * (freq * xf + phase[ch]).sin() * (0.7 * freq * yf + phase[(ch + 1) % 3]).cos();
            let v = base + blob + edge + tex + 12.0 * ch as f64;
            px[ch] = v.round().clamp(0.0, 255.0) as u8;
        }
        px
    })
    .unwrap()
}

pub fn png_bytes(img: &RasterImage) -> Vec<u8> {
    let params = EncodeParams {
        palette_mode: false,
        compression_effort: 6,
        ..EncodeParams::default()
    };
    encode_png(img, None, &params).unwrap()
}

pub fn write_png(path: &Path, img: &RasterImage) {
    std::fs::write(path, png_bytes(img)).unwrap();
}

/// Nearest-neighbor resize used as the naive baseline.
pub fn nearest_resize(img: &RasterImage, out_w: u32, out_h: u32) -> RasterImage {
    let c = img.channels() as usize;
    let mut data = Vec::with_capacity((out_w * out_h) as usize * c);
    for y in 0..out_h {
        let sy = ((y as f64 + 0.5) * img.height() as f64 / out_h as f64).floor() as u32;
        for x in 0..out_w {
            let sx = ((x as f64 + 0.5) * img.width() as f64 / out_w as f64).floor() as u32;
            data.extend_from_slice(img.pixel(sx.min(img.width() - 1), sy.min(img.height() - 1)));
        }
    }
    RasterImage::new(out_w, out_h, img.channels(), data).unwrap()
}
