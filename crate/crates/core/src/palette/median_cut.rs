use super::Palette;
use crate::error::{Error, Result};
use crate::raster::RasterImage;

#[derive(Clone, Copy)]
struct Entry {
    rgb: [u8; 3],
    count: u64,
}

struct ColorBox {
    start: usize,
    end: usize,
}

impl ColorBox {
    fn ranges(&self, entries: &[Entry]) -> [u8; 3] {
        let mut lo = [u8::MAX; 3];
        let mut hi = [u8::MIN; 3];
        for e in &entries[self.start..self.end] {
            for ch in 0..3 {
                lo[ch] = lo[ch].min(e.rgb[ch]);
                hi[ch] = hi[ch].max(e.rgb[ch]);
            }
        }
        [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]
    }

    fn mean(&self, entries: &[Entry]) -> [u8; 3] {
        let mut sum = [0f64; 3];
        let mut total = 0f64;
        for e in &entries[self.start..self.end] {
            let w = e.count as f64;
            for ch in 0..3 {
                sum[ch] += e.rgb[ch] as f64 * w;
            }
            total += w;
        }
        sum.map(|s| (s / total).round().clamp(0.0, 255.0) as u8)
    }
}

fn histogram(img: &RasterImage) -> Vec<Entry> {
    let mut packed: Vec<u32> = img
        .pixels()
        .map(|p| (p[0] as u32) << 16 | (p[1] as u32) << 8 | p[2] as u32)
        .collect();
    packed.sort_unstable();
    let mut entries: Vec<Entry> = Vec::new();
    for key in packed {
        let rgb = [(key >> 16) as u8, (key >> 8) as u8, key as u8];
        match entries.last_mut() {
            Some(last) if last.rgb == rgb => last.count += 1,
            _ => entries.push(Entry { rgb, count: 1 }),
        }
    }
    entries
}

/// Median-cut palette of at most `n` colors over the RGB histogram of `img`.
///
/// The box with the widest single-channel range is split on that channel at the
/// pixel-weighted median; each final box contributes its pixel-weighted mean.
/// Images with at most `n` distinct colors get exactly their color set.
pub fn median_cut(img: &RasterImage, n: usize) -> Result<Palette> {
    if !(2..=super::MAX_PALETTE_LEN).contains(&n) {
        return Err(Error::InvalidConfig(format!("palette size must be in 2..=256, got {n}")));
    }
    let mut entries = histogram(img);
    if entries.len() <= n {
        return Palette::new(entries.into_iter().map(|e| e.rgb).collect());
    }

    let mut boxes = vec![ColorBox {
        start: 0,
        end: entries.len(),
    }];
    while boxes.len() < n {
        // (box index, channel, range) of the widest splittable box
        let mut pick: Option<(usize, usize, u8)> = None;
        for (bi, b) in boxes.iter().enumerate() {
            if b.end - b.start < 2 {
                continue;
            }
            let ranges = b.ranges(&entries);
            let (ch, &range) = ranges
                .iter()
                .enumerate()
                .rev()
                .max_by_key(|&(_, r)| *r)
                .unwrap();
            if range > 0 && pick.map_or(true, |(_, _, r)| range > r) {
                pick = Some((bi, ch, range));
            }
        }
        let Some((bi, ch, _)) = pick else { break };

        let ColorBox { start, end } = boxes[bi];
        let slice = &mut entries[start..end];
        slice.sort_unstable_by_key(|e| (e.rgb[ch], e.rgb));
        let total: u64 = slice.iter().map(|e| e.count).sum();
        let mut acc = 0u64;
        let mut median = slice[slice.len() - 1].rgb[ch];
        for e in slice.iter() {
            acc += e.count;
            if 2 * acc >= total {
                median = e.rgb[ch];
                break;
            }
        }
        let max = slice[slice.len() - 1].rgb[ch];
        if median == max {
            // keep the upper side nonempty: cut just below the largest value
            median = slice.iter().rev().map(|e| e.rgb[ch]).find(|&v| v < max).unwrap();
        }
        let split = start + slice.partition_point(|e| e.rgb[ch] <= median);
        boxes[bi] = ColorBox { start, end: split };
        boxes.push(ColorBox { start: split, end });
    }

    let mut colors: Vec<[u8; 3]> = boxes.iter().map(|b| b.mean(&entries)).collect();
    colors.sort_unstable();
    Palette::new(colors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_colors_exact() {
        let img = RasterImage::from_rgb_fn(4, 4, |x, y| if (x + y) % 2 == 0 { [0, 0, 0] } else { [255, 255, 255] }).unwrap();
        let p = median_cut(&img, 2).unwrap();
        assert_eq!(p.colors(), &[[0, 0, 0], [255, 255, 255]]);
    }

    #[test]
    fn constant_image_single_entry() {
        let img = RasterImage::filled(5, 3, &[12, 34, 56]).unwrap();
        for n in [2, 16, 256] {
            assert_eq!(median_cut(&img, n).unwrap().colors(), &[[12, 34, 56]]);
        }
    }

    #[test]
    fn four_primaries_exact() {
        let set = [[0, 0, 0], [255, 0, 0], [0, 255, 0], [0, 0, 255]];
        let img = RasterImage::from_rgb_fn(4, 3, |x, y| set[((x + y) % 4) as usize]).unwrap();
        let p = median_cut(&img, 4).unwrap();
        let mut expected = set.to_vec();
        expected.sort();
        assert_eq!(p.colors(), &expected[..]);
    }

    #[test]
    fn out_of_range_n_rejected() {
        let img = RasterImage::filled(2, 2, &[0, 0, 0]).unwrap();
        assert!(matches!(median_cut(&img, 1), Err(Error::InvalidConfig(_))));
        assert!(matches!(median_cut(&img, 257), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn gradient_reduced_within_bounds() {
        let img = RasterImage::from_rgb_fn(64, 64, |x, y| [(x * 4) as u8, (y * 4) as u8, 128]).unwrap();
        let p = median_cut(&img, 16).unwrap();
        assert_eq!(p.len(), 16);
        for c in p.colors() {
            assert!(c[0] <= 252 && c[1] <= 252 && c[2] == 128);
        }
    }
}
