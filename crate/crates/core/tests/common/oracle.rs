//! Independent reference implementations the crate is checked against.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::Read;

use greenstore::metrics::{SSIM_C1, SSIM_C2};
use greenstore::{Palette, RasterImage};
use rand::rngs::StdRng;
use rand::Rng;

/// Walks the chunk list without any of the crate's own parsing.
pub fn chunks(png: &[u8]) -> Vec<([u8; 4], Vec<u8>)> {
    assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
    let mut pos = 8;
    let mut out = Vec::new();
    while pos < png.len() {
        let len = u32::from_be_bytes(png[pos..pos + 4].try_into().unwrap()) as usize;
        let kind: [u8; 4] = png[pos + 4..pos + 8].try_into().unwrap();
        out.push((kind, png[pos + 8..pos + 8 + len].to_vec()));
        pos += 12 + len;
    }
    out
}

pub fn inflate_idat(png: &[u8]) -> Vec<u8> {
    let zlib: Vec<u8> = chunks(png)
        .into_iter()
        .filter(|(k, _)| k == b"IDAT")
        .flat_map(|(_, p)| p)
        .collect();
    let mut decoder = libflate::zlib::Decoder::new(&zlib[..]).unwrap();
    let mut raw = Vec::new();
    decoder.read_to_end(&mut raw).unwrap();
    raw
}

/// Independent restatement of the five PNG filters.
pub fn reference_filter(kind: u8, row: &[u8], prev: &[u8], bpp: usize) -> Vec<u8> {
    let left = |i: usize| if i >= bpp { row[i - bpp] as i32 } else { 0 };
    let up = |i: usize| prev[i] as i32;
    let up_left = |i: usize| if i >= bpp { prev[i - bpp] as i32 } else { 0 };
    (0..row.len())
        .map(|i| {
            let x = row[i] as i32;
            let pred = match kind {
                0 => 0,
                1 => left(i),
                2 => up(i),
                3 => (left(i) + up(i)) / 2,
                _ => {
                    let (a, b, c) = (left(i), up(i), up_left(i));
                    let p = a + b - c;
                    let (pa, pb, pc) = ((p - a).abs(), (p - b).abs(), (p - c).abs());
                    if pa <= pb && pa <= pc {
                        a
                    } else if pb <= pc {
                        b
                    } else {
                        c
                    }
                }
            };
            (x - pred).rem_euclid(256) as u8
        })
        .collect()
}

pub fn random_palette(rng: &mut StdRng, max_len: usize) -> Palette {
    let len = rng.gen_range(1..=max_len);
    let mut set = HashSet::new();
    while set.len() < len {
        set.insert([rng.gen::<u8>(), rng.gen(), rng.gen()]);
    }
    Palette::new(set.into_iter().collect()).unwrap()
}

/// Brute-force nearest entry with integer arithmetic; lowest index wins ties.
pub fn brute_nearest(palette: &Palette, px: &[u8]) -> [u8; 3] {
    let dist = |c: &[u8; 3]| -> i64 { (0..3).map(|i| (px[i] as i64 - c[i] as i64).pow(2)).sum() };
    let mut best = 0;
    for (i, c) in palette.colors().iter().enumerate() {
        if dist(c) < dist(&palette.colors()[best]) {
            best = i;
        }
    }
    palette.colors()[best]
}

/// Closed form `3 sin(pi x) sin(pi x / 3) / (pi x)^2`.
pub fn kernel_oracle(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.abs() >= 3.0 {
        return 0.0;
    }
    3.0 * (PI * x).sin() * (PI * x / 3.0).sin() / (PI * PI * x * x)
}

pub fn round_output(v: f64) -> u8 {
    let snapped = (v * 1e6).round() / 1e6;
    snapped.round().clamp(0.0, 255.0) as u8
}

/// Non-separable reference: every output sample is one 2-D weighted sum over
/// the clamped source neighborhood, normalized by the total 2-D weight.
pub fn direct_2d(img: &RasterImage, out_w: u32, out_h: u32, factor: f64, pad: (f64, f64)) -> RasterImage {
    let stretch = if factor < 1.0 { 1.0 / factor } else { 1.0 };
    let radius = 3.0 * stretch;
    let c = img.channels() as usize;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut data = Vec::with_capacity((out_w * out_h) as usize * c);
    for oy in 0..out_h {
        let cy = (oy as f64 + 0.5) / factor - 0.5 - pad.1;
        for ox in 0..out_w {
            let cx = (ox as f64 + 0.5) / factor - 0.5 - pad.0;
            let mut acc = vec![0.0; c];
            let mut total = 0.0;
            for sy in (cy - radius).floor() as i64..=(cy + radius).ceil() as i64 {
                let wy = kernel_oracle((sy as f64 - cy) / stretch);
                for sx in (cx - radius).floor() as i64..=(cx + radius).ceil() as i64 {
                    let wx = kernel_oracle((sx as f64 - cx) / stretch);
                    let wgt = wx * wy;
                    let px = img.pixel(sx.clamp(0, w - 1) as u32, sy.clamp(0, h - 1) as u32);
                    for ch in 0..c {
                        acc[ch] += wgt * px[ch] as f64;
                    }
                    total += wgt;
                }
            }
            data.extend(acc.iter().map(|v| round_output(v / total)));
        }
    }
    RasterImage::new(out_w, out_h, img.channels(), data).unwrap()
}

pub fn direct_resize(img: &RasterImage, num: u32, den: u32) -> RasterImage {
    let f = num as f64 / den as f64;
    let out_len = |len: u32| ((2 * len as u64 * num as u64 + den as u64) / (2 * den as u64)) as u32;
    let (ow, oh) = (out_len(img.width()), out_len(img.height()));
    let pad = (
        (ow as f64 / f - img.width() as f64) / 2.0,
        (oh as f64 / f - img.height() as f64) / 2.0,
    );
    direct_2d(img, ow, oh, f, pad)
}

pub fn direct_downscale_4x(img: &RasterImage) -> RasterImage {
    let (w, h) = img.dimensions();
    let pad = |len: u32| ((4 * len.div_ceil(4) - len) / 2) as f64;
    direct_2d(img, w.div_ceil(4), h.div_ceil(4), 0.25, (pad(w), pad(h)))
}

pub fn brute_psnr(a: &RasterImage, b: &RasterImage) -> f64 {
    let mut sum = 0.0;
    for (x, y) in a.data().iter().zip(b.data()) {
        sum += (*x as f64 - *y as f64).powi(2);
    }
    let mse = sum / a.data().len() as f64;
    10.0 * (255.0f64.powi(2) / mse).log10()
}

/// Direct per-window SSIM: a fresh 2-D Gaussian is applied at every valid position.
pub fn ssim_oracle(a: &RasterImage, b: &RasterImage) -> f64 {
    let luma = |p: &[u8]| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
    let mut g = [[0.0; 11]; 11];
    let mut norm = 0.0;
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            norm += *v;
        }
    }
    let (w, h) = a.dimensions();
    let mut total = 0.0;
    let mut count = 0;
    for y0 in 0..=h - 11 {
        for x0 in 0..=w - 11 {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (i, row) in g.iter().enumerate() {
                for (j, gv) in row.iter().enumerate() {
                    let wgt = gv / norm;
                    let la = luma(a.pixel(x0 + j as u32, y0 + i as u32));
                    let lb = luma(b.pixel(x0 + j as u32, y0 + i as u32));
                    ma += wgt * la;
                    mb += wgt * lb;
                    saa += wgt * la * la;
                    sbb += wgt * lb * lb;
                    sab += wgt * la * lb;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            total += (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2)
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
            count += 1;
        }
    }
    total / count as f64
}

/// `value` rounded to the number of decimals in `printed` renders as `printed`.
pub fn matches_printed(value: f64, printed: &str) -> bool {
    let decimals = printed.split('.').nth(1).map_or(0, str::len);
    format!("{value:.decimals$}") == printed
}
