//! PNG container: chunk framing, truecolor and indexed encoding, 8-bit decoding.

use std::collections::HashMap;
use std::io::{Read, Write};

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;

use super::filter::{filter_image, unfilter_row, FilterStrategy, FilterType};
use super::{sample_count, RasterImage};
use crate::error::{Error, Result};
use crate::palette::Palette;

pub const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

const COLOR_GRAY: u8 = 0;
const COLOR_RGB: u8 = 2;
const COLOR_INDEXED: u8 = 3;
const COLOR_GRAY_ALPHA: u8 = 4;
const COLOR_RGBA: u8 = 6;

const MAX_IDAT_CHUNK: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeParams {
    pub filter_strategy: FilterStrategy,
    /// Deflate effort, 1 (fastest) to 9 (smallest).
    pub compression_effort: u8,
    /// Write indexed color when a palette is supplied.
    pub palette_mode: bool,
}

impl Default for EncodeParams {
    fn default() -> Self {
        Self {
            filter_strategy: FilterStrategy::Adaptive,
            compression_effort: 9,
            palette_mode: true,
        }
    }
}

impl EncodeParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=9).contains(&self.compression_effort) {
            return Err(Error::InvalidConfig(format!(
                "compression effort must be in 1..=9, got {}",
                self.compression_effort
            )));
        }
        Ok(())
    }
}

fn write_chunk(out: &mut Vec<u8>, kind: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    let start = out.len();
    out.extend_from_slice(kind);
    out.extend_from_slice(payload);
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_be_bytes());
}

fn index_bit_depth(len: usize) -> u8 {
    match len {
        0..=2 => 1,
        3..=4 => 2,
        5..=16 => 4,
        _ => 8,
    }
}

/// Packs one index per pixel into rows of `bit_depth`-bit samples, MSB first.
fn pack_indices(indices: &[u8], width: usize, bit_depth: u8) -> (Vec<u8>, usize) {
    let row_bytes = (width * bit_depth as usize).div_ceil(8);
    if bit_depth == 8 {
        return (indices.to_vec(), row_bytes);
    }
    let per_byte = 8 / bit_depth as usize;
    let height = indices.len() / width;
    let mut out = vec![0u8; row_bytes * height];
    for (y, row) in indices.chunks_exact(width).enumerate() {
        for (x, &idx) in row.iter().enumerate() {
            let shift = 8 - bit_depth as usize * (x % per_byte + 1);
            out[y * row_bytes + x / per_byte] |= idx << shift;
        }
    }
    (out, row_bytes)
}

/// Encodes `img` as PNG. With a palette and `params.palette_mode`, output is indexed color.
pub fn encode_png(img: &RasterImage, palette: Option<&Palette>, params: &EncodeParams) -> Result<Vec<u8>> {
    params.validate()?;
    let width = img.width() as usize;
    let height = img.height() as usize;

    let mut indexed = None;
    if let Some(palette) = palette {
        if img.has_alpha() && params.palette_mode {
            return Err(Error::Unsupported("indexed output of an image with alpha".into()));
        }
        let lookup: HashMap<[u8; 3], u8> = palette
            .colors()
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u8))
            .collect();
        let mut indices = Vec::with_capacity(img.pixel_count());
        for (i, px) in img.pixels().enumerate() {
            match lookup.get(&[px[0], px[1], px[2]]) {
                Some(&idx) => indices.push(idx),
                None => {
                    return Err(Error::PaletteMismatch {
                        x: (i % width) as u32,
                        y: (i / width) as u32,
                    })
                }
            }
        }
        if params.palette_mode {
            indexed = Some((palette, indices));
        }
    }

    let mut ihdr = Vec::with_capacity(13);
    ihdr.extend_from_slice(&img.width().to_be_bytes());
    ihdr.extend_from_slice(&img.height().to_be_bytes());

    let (raw, row_bytes, bpp, plte) = match indexed {
        Some((palette, indices)) => {
            let depth = index_bit_depth(palette.len());
            ihdr.extend_from_slice(&[depth, COLOR_INDEXED]);
            let (packed, row_bytes) = pack_indices(&indices, width, depth);
            let plte: Vec<u8> = palette.colors().iter().flatten().copied().collect();
            (packed, row_bytes, 1, Some(plte))
        }
        None => {
            let color = if img.has_alpha() { COLOR_RGBA } else { COLOR_RGB };
            ihdr.extend_from_slice(&[8, color]);
            let c = img.channels() as usize;
            (img.data().to_vec(), width * c, c, None)
        }
    };
    // compression method, filter method, interlace method
    ihdr.extend_from_slice(&[0, 0, 0]);

    let filtered = filter_image(&raw, row_bytes, height, bpp, params.filter_strategy);
    let mut encoder = ZlibEncoder::new(
        Vec::with_capacity(filtered.bytes.len() / 2),
        Compression::new(params.compression_effort as u32),
    );
    encoder
        .write_all(&filtered.bytes)
        .and_then(|_| encoder.flush())
        .map_err(|e| Error::Unsupported(format!("deflate failed: {e}")))?;
    let zlib = encoder
        .finish()
        .map_err(|e| Error::Unsupported(format!("deflate failed: {e}")))?;

    let mut out = Vec::with_capacity(zlib.len() + 128);
    out.extend_from_slice(&PNG_SIGNATURE);
    write_chunk(&mut out, b"IHDR", &ihdr);
    if let Some(plte) = plte {
        write_chunk(&mut out, b"PLTE", &plte);
    }
    for part in zlib.chunks(MAX_IDAT_CHUNK) {
        write_chunk(&mut out, b"IDAT", part);
    }
    if zlib.is_empty() {
        write_chunk(&mut out, b"IDAT", &[]);
    }
    write_chunk(&mut out, b"IEND", &[]);
    Ok(out)
}

struct Header {
    width: u32,
    height: u32,
    bit_depth: u8,
    color_type: u8,
}

impl Header {
    fn samples_per_pixel(&self) -> usize {
        match self.color_type {
            COLOR_GRAY | COLOR_INDEXED => 1,
            COLOR_GRAY_ALPHA => 2,
            COLOR_RGB => 3,
            _ => 4,
        }
    }

    fn row_bytes(&self) -> usize {
        (self.width as usize * self.samples_per_pixel() * self.bit_depth as usize).div_ceil(8)
    }
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptInput(msg.into())
}

fn parse_header(payload: &[u8]) -> Result<Header> {
    if payload.len() != 13 {
        return Err(corrupt("IHDR has wrong length"));
    }
    let width = u32::from_be_bytes(payload[0..4].try_into().unwrap());
    let height = u32::from_be_bytes(payload[4..8].try_into().unwrap());
    let (bit_depth, color_type) = (payload[8], payload[9]);
    let (compression, filter, interlace) = (payload[10], payload[11], payload[12]);
    if width == 0 || height == 0 || width > i32::MAX as u32 || height > i32::MAX as u32 {
        return Err(corrupt(format!("invalid dimensions {width}x{height}")));
    }
    if compression != 0 || filter != 0 || interlace > 1 {
        return Err(corrupt("invalid IHDR method fields"));
    }
    if interlace == 1 {
        return Err(Error::Unsupported("interlaced PNG".into()));
    }
    let valid_depth = match color_type {
        COLOR_GRAY => matches!(bit_depth, 1 | 2 | 4 | 8 | 16),
        COLOR_INDEXED => matches!(bit_depth, 1 | 2 | 4 | 8),
        COLOR_RGB | COLOR_GRAY_ALPHA | COLOR_RGBA => matches!(bit_depth, 8 | 16),
        _ => return Err(corrupt(format!("invalid color type {color_type}"))),
    };
    if !valid_depth {
        return Err(corrupt(format!("invalid bit depth {bit_depth} for color type {color_type}")));
    }
    if bit_depth != 8 && color_type != COLOR_INDEXED {
        return Err(Error::Unsupported(format!("{bit_depth}-bit samples")));
    }
    Ok(Header {
        width,
        height,
        bit_depth,
        color_type,
    })
}

/// Decodes an 8-bit PNG (or 1/2/4/8-bit indexed) into RGB or RGBA.
///
/// Grayscale is promoted to RGB, gray+alpha to RGBA, and indexed color to RGB
/// (RGBA when the palette carries transparency).
pub fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
    if bytes.len() < 8 || bytes[..8] != PNG_SIGNATURE {
        return Err(corrupt("missing PNG signature"));
    }
    let mut pos = 8;
    let mut header: Option<Header> = None;
    let mut plte: Option<&[u8]> = None;
    let mut trns: Option<&[u8]> = None;
    let mut idat = Vec::new();
    let mut seen_end = false;

    while pos < bytes.len() {
        if bytes.len() - pos < 12 {
            return Err(corrupt("truncated chunk"));
        }
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let kind: [u8; 4] = bytes[pos + 4..pos + 8].try_into().unwrap();
        if len > bytes.len() - pos - 12 {
            return Err(corrupt("truncated chunk"));
        }
        let payload = &bytes[pos + 8..pos + 8 + len];
        let stored_crc = u32::from_be_bytes(bytes[pos + 8 + len..pos + 12 + len].try_into().unwrap());
        if crc32fast::hash(&bytes[pos + 4..pos + 8 + len]) != stored_crc {
            return Err(corrupt(format!("CRC mismatch in {} chunk", String::from_utf8_lossy(&kind))));
        }
        pos += 12 + len;

        if header.is_none() && &kind != b"IHDR" {
            return Err(corrupt("first chunk is not IHDR"));
        }
        match &kind {
            b"IHDR" => {
                if header.is_some() {
                    return Err(corrupt("duplicate IHDR"));
                }
                header = Some(parse_header(payload)?);
            }
            b"PLTE" => {
                if payload.is_empty() || payload.len() % 3 != 0 || payload.len() > 768 {
                    return Err(corrupt("invalid PLTE length"));
                }
                plte = Some(payload);
            }
            b"tRNS" => trns = Some(payload),
            b"IDAT" => idat.extend_from_slice(payload),
            b"IEND" => {
                seen_end = true;
                break;
            }
            _ if kind[0].is_ascii_uppercase() => {
                return Err(Error::Unsupported(format!(
                    "critical chunk {}",
                    String::from_utf8_lossy(&kind)
                )));
            }
            _ => {}
        }
    }
    let header = header.ok_or_else(|| corrupt("missing IHDR"))?;
    if !seen_end {
        return Err(corrupt("missing IEND"));
    }
    if idat.is_empty() {
        return Err(corrupt("missing IDAT"));
    }

    let row_bytes = header.row_bytes();
    let height = header.height as usize;
    let expected = (row_bytes + 1)
        .checked_mul(height)
        .ok_or_else(|| Error::Unsupported("image too large".into()))?;
    let mut inflated = Vec::with_capacity(expected);
    ZlibDecoder::new(&idat[..])
        .take(expected as u64 + 1)
        .read_to_end(&mut inflated)
        .map_err(|e| corrupt(format!("inflate failed: {e}")))?;
    if inflated.len() != expected {
        return Err(corrupt(format!(
            "image data has {} bytes, expected {expected}",
            inflated.len()
        )));
    }

    let bpp = (header.samples_per_pixel() * header.bit_depth as usize).div_ceil(8);
    let mut raw = vec![0u8; row_bytes * height];
    for y in 0..height {
        let src = &inflated[y * (row_bytes + 1)..(y + 1) * (row_bytes + 1)];
        let kind = FilterType::from_byte(src[0]).ok_or_else(|| corrupt(format!("invalid filter type {}", src[0])))?;
        let (done, rest) = raw.split_at_mut(y * row_bytes);
        let row = &mut rest[..row_bytes];
        row.copy_from_slice(&src[1..]);
        let prev_zero;
        let prev = if y == 0 {
            prev_zero = vec![0u8; row_bytes];
            &prev_zero[..]
        } else {
            &done[(y - 1) * row_bytes..]
        };
        unfilter_row(kind, row, prev, bpp);
    }

    expand(&header, &raw, row_bytes, plte, trns)
}

fn expand(header: &Header, raw: &[u8], row_bytes: usize, plte: Option<&[u8]>, trns: Option<&[u8]>) -> Result<RasterImage> {
    let (w, h) = (header.width, header.height);
    let pixels = w as usize * h as usize;
    match header.color_type {
        COLOR_RGB => RasterImage::new(w, h, 3, raw.to_vec()),
        COLOR_RGBA => RasterImage::new(w, h, 4, raw.to_vec()),
        COLOR_GRAY => {
            sample_count(w, h, 3)?;
            let data = raw.iter().flat_map(|&g| [g, g, g]).collect();
            RasterImage::new(w, h, 3, data)
        }
        COLOR_GRAY_ALPHA => {
            sample_count(w, h, 4)?;
            let data = raw.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0], p[1]]).collect();
            RasterImage::new(w, h, 4, data)
        }
        _ => {
            let plte = plte.ok_or_else(|| corrupt("indexed image without PLTE"))?;
            let entries = plte.len() / 3;
            let alpha = trns.filter(|t| t.iter().any(|&a| a != 255));
            let channels = if alpha.is_some() { 4 } else { 3 };
            sample_count(w, h, channels)?;
            let depth = header.bit_depth as usize;
            let per_byte = 8 / depth;
            let mask = ((1u16 << depth) - 1) as u8;
            let mut data = Vec::with_capacity(pixels * channels as usize);
            for row in raw.chunks_exact(row_bytes) {
                for x in 0..w as usize {
                    let byte = row[x / per_byte];
                    let shift = 8 - depth * (x % per_byte + 1);
                    let idx = ((byte >> shift) & mask) as usize;
                    if idx >= entries {
                        return Err(corrupt(format!("palette index {idx} out of range")));
                    }
                    data.extend_from_slice(&plte[idx * 3..idx * 3 + 3]);
                    if let Some(a) = alpha {
                        data.push(a.get(idx).copied().unwrap_or(255));
                    }
                }
            }
            RasterImage::new(w, h, channels, data)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_image() -> RasterImage {
        RasterImage::from_rgb_fn(7, 5, |x, y| [(x * 30) as u8, (y * 50) as u8, (x * y) as u8]).unwrap()
    }

    #[test]
    fn roundtrip_truecolor_all_strategies() {
        let img = sample_image();
        let mut strategies = vec![FilterStrategy::Adaptive];
        strategies.extend(FilterType::ALL.map(FilterStrategy::Fixed));
        for s in strategies {
            for effort in [1, 6, 9] {
                let params = EncodeParams {
                    filter_strategy: s,
                    compression_effort: effort,
                    palette_mode: false,
                };
                let bytes = encode_png(&img, None, &params).unwrap();
                assert_eq!(decode_png(&bytes).unwrap(), img);
            }
        }
    }

    #[test]
    fn roundtrip_rgba() {
        let data: Vec<u8> = (0..6 * 4 * 4).map(|i| (i * 7) as u8).collect();
        let img = RasterImage::new(6, 4, 4, data).unwrap();
        let bytes = encode_png(&img, None, &EncodeParams::default()).unwrap();
        assert_eq!(decode_png(&bytes).unwrap(), img);
    }

    #[test]
    fn one_by_one_white() {
        let img = RasterImage::filled(1, 1, &[255, 255, 255]).unwrap();
        let bytes = encode_png(&img, None, &EncodeParams::default()).unwrap();
        let back = decode_png(&bytes).unwrap();
        assert_eq!((back.width(), back.height(), back.channels()), (1, 1, 3));
        assert_eq!(back.data(), &[255, 255, 255]);
    }

    #[test]
    fn indexed_roundtrip_every_bit_depth() {
        for n in [2usize, 3, 4, 5, 16, 17, 256] {
            let colors: Vec<[u8; 3]> = (0..n).map(|i| [i as u8, (i * 3) as u8, 255 - i as u8]).collect();
            let palette = Palette::new(colors.clone()).unwrap();
            let img = RasterImage::from_rgb_fn(13, 3, |x, y| colors[(x as usize * 7 + y as usize) % n]).unwrap();
            let bytes = encode_png(&img, Some(&palette), &EncodeParams::default()).unwrap();
            assert_eq!(bytes[24], index_bit_depth(n), "bit depth for {n}");
            assert_eq!(bytes[25], COLOR_INDEXED);
            assert_eq!(decode_png(&bytes).unwrap(), img, "palette size {n}");
        }
    }

    #[test]
    fn palette_mismatch_is_reported_with_position() {
        let palette = Palette::new(vec![[0, 0, 0]]).unwrap();
        let img = RasterImage::from_rgb_fn(3, 2, |x, y| if (x, y) == (2, 1) { [1, 0, 0] } else { [0, 0, 0] }).unwrap();
        let err = encode_png(&img, Some(&palette), &EncodeParams::default()).unwrap_err();
        assert!(matches!(err, Error::PaletteMismatch { x: 2, y: 1 }));
    }

    #[test]
    fn truncated_stream_is_corrupt() {
        let bytes = encode_png(&sample_image(), None, &EncodeParams::default()).unwrap();
        for cut in [0, 5, 8, 20, 33, bytes.len() - 13, bytes.len() - 1] {
            let err = decode_png(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::CorruptInput(_)), "cut at {cut}: {err:?}");
        }
    }

    #[test]
    fn flipped_bit_fails_crc() {
        let mut bytes = encode_png(&sample_image(), None, &EncodeParams::default()).unwrap();
        bytes[40] ^= 0x10;
        assert!(matches!(decode_png(&bytes), Err(Error::CorruptInput(_))));
    }

    fn png_with_header(depth: u8, color: u8, interlace: u8) -> Vec<u8> {
        let mut out = PNG_SIGNATURE.to_vec();
        let mut ihdr = Vec::new();
        ihdr.extend_from_slice(&1u32.to_be_bytes());
        ihdr.extend_from_slice(&1u32.to_be_bytes());
        ihdr.extend_from_slice(&[depth, color, 0, 0, interlace]);
        write_chunk(&mut out, b"IHDR", &ihdr);
        write_chunk(&mut out, b"IEND", &[]);
        out
    }

    #[test]
    fn sixteen_bit_and_interlaced_are_unsupported() {
        assert!(matches!(decode_png(&png_with_header(16, COLOR_RGB, 0)), Err(Error::Unsupported(_))));
        assert!(matches!(decode_png(&png_with_header(8, COLOR_RGB, 1)), Err(Error::Unsupported(_))));
        assert!(matches!(decode_png(&png_with_header(8, 5, 0)), Err(Error::CorruptInput(_))));
    }

    #[test]
    fn grayscale_is_promoted() {
        let gray = [0u8, 100, 200, 255];
        let mut out = PNG_SIGNATURE.to_vec();
        let mut ihdr = Vec::new();
        ihdr.extend_from_slice(&2u32.to_be_bytes());
        ihdr.extend_from_slice(&2u32.to_be_bytes());
        ihdr.extend_from_slice(&[8, COLOR_GRAY, 0, 0, 0]);
        write_chunk(&mut out, b"IHDR", &ihdr);
        let filtered = [0, gray[0], gray[1], 0, gray[2], gray[3]];
        let mut enc = ZlibEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&filtered).unwrap();
        write_chunk(&mut out, b"IDAT", &enc.finish().unwrap());
        write_chunk(&mut out, b"IEND", &[]);
        let img = decode_png(&out).unwrap();
        assert_eq!(img.channels(), 3);
        assert_eq!(img.pixel(1, 0), &[100, 100, 100]);
        assert_eq!(img.pixel(1, 1), &[255, 255, 255]);
    }

    #[test]
    fn invalid_effort_rejected() {
        let params = EncodeParams {
            compression_effort: 0,
            ..Default::default()
        };
        assert!(matches!(encode_png(&sample_image(), None, &params), Err(Error::InvalidConfig(_))));
    }
}
