//! Palette reduction: median-cut quantization and scaled Floyd–Steinberg error diffusion.

mod dither;
mod median_cut;

pub use dither::{dither_floyd_steinberg, quantize_for_storage, DitherConfig};
pub use median_cut::median_cut;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_PALETTE_LEN: usize = 256;

/// Ordered, duplicate-free list of 1–256 RGB colors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[u8; 3]>", into = "Vec<[u8; 3]>")]
pub struct Palette {
    colors: Vec<[u8; 3]>,
}

impl TryFrom<Vec<[u8; 3]>> for Palette {
    type Error = Error;

    fn try_from(colors: Vec<[u8; 3]>) -> Result<Self> {
        Palette::new(colors)
    }
}

impl From<Palette> for Vec<[u8; 3]> {
    fn from(p: Palette) -> Self {
        p.colors
    }
}

impl Palette {
    pub fn new(colors: Vec<[u8; 3]>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::InvalidConfig("palette is empty".into()));
        }
        if colors.len() > MAX_PALETTE_LEN {
            return Err(Error::InvalidConfig(format!(
                "palette has {} colors, at most {MAX_PALETTE_LEN} allowed",
                colors.len()
            )));
        }
        let mut sorted = colors.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("palette contains duplicate colors".into()));
        }
        Ok(Self { colors })
    }

    pub fn colors(&self) -> &[[u8; 3]] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn contains(&self, rgb: [u8; 3]) -> bool {
        self.colors.contains(&rgb)
    }

    /// Index of the nearest entry by squared RGB distance, lowest index on ties.
    /// Linear scan; [`NearestSearch`] gives the same answer faster.
    pub fn nearest(&self, rgb: [f64; 3]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, c) in self.colors.iter().enumerate() {
            let d = sq_dist(rgb, *c);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

#[inline]
fn sq_dist(v: [f64; 3], c: [u8; 3]) -> f64 {
    let dr = v[0] - c[0] as f64;
    let dg = v[1] - c[1] as f64;
    let db = v[2] - c[2] as f64;
    dr * dr + dg * dg + db * db
}

/// Exact nearest-color search over a palette sorted along its widest channel.
///
/// Candidates are visited outward from the query's position on that axis; a
/// direction stops once the axis gap alone exceeds the best distance found.
pub struct NearestSearch<'a> {
    palette: &'a Palette,
    axis: usize,
    // (axis value, palette index), sorted by axis value then index
    order: Vec<(f64, usize)>,
}

impl<'a> NearestSearch<'a> {
    pub fn new(palette: &'a Palette) -> Self {
        let axis = (0..3)
            .max_by_key(|&ch| {
                let lo = palette.colors.iter().map(|c| c[ch]).min().unwrap_or(0);
                let hi = palette.colors.iter().map(|c| c[ch]).max().unwrap_or(0);
                // prefer the lowest channel among equal ranges
                (hi - lo, std::cmp::Reverse(ch))
            })
            .unwrap_or(0);
        let mut order: Vec<(f64, usize)> = palette
            .colors
            .iter()
            .enumerate()
            .map(|(i, c)| (c[axis] as f64, i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Self { palette, axis, order }
    }

    pub fn nearest(&self, rgb: [f64; 3]) -> usize {
        let key = rgb[self.axis];
        let start = self.order.partition_point(|&(v, _)| v < key);
        let mut best_d = f64::INFINITY;
        let mut best_i = usize::MAX;
        let consider = |idx: usize, best_d: &mut f64, best_i: &mut usize| {
            let d = sq_dist(rgb, self.palette.colors[idx]);
            if d < *best_d || (d == *best_d && idx < *best_i) {
                *best_d = d;
                *best_i = idx;
            }
        };
        let mut up = start;
        let mut down = start;
        loop {
            let mut progressed = false;
            if up < self.order.len() {
                let (v, idx) = self.order[up];
                let gap = v - key;
                if gap * gap <= best_d {
                    consider(idx, &mut best_d, &mut best_i);
                    up += 1;
                    progressed = true;
                } else {
                    up = self.order.len();
                }
            }
            if down > 0 {
                let (v, idx) = self.order[down - 1];
                let gap = key - v;
                if gap * gap <= best_d {
                    consider(idx, &mut best_d, &mut best_i);
                    down -= 1;
                    progressed = true;
                } else {
                    down = 0;
                }
            }
            if !progressed {
                break;
            }
        }
        best_i
    }
}
