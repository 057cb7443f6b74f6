//! PNG scanline filters and the per-row adaptive selection heuristic.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum FilterType {
    None = 0,
    Sub = 1,
    Up = 2,
    Average = 3,
    Paeth = 4,
}

impl FilterType {
    pub const ALL: [FilterType; 5] = [
        FilterType::None,
        FilterType::Sub,
        FilterType::Up,
        FilterType::Average,
        FilterType::Paeth,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.get(b as usize).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterStrategy {
    /// Per row, the filter with the smallest [`heuristic_cost`]; ties go to the lower filter number.
    #[default]
    Adaptive,
    Fixed(FilterType),
}

/// Filtered scanlines, each prefixed by its filter byte, plus the filter chosen per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilteredImage {
    pub bytes: Vec<u8>,
    pub filters: Vec<FilterType>,
}

#[inline]
fn paeth(a: u8, b: u8, c: u8) -> u8 {
    let p = a as i16 + b as i16 - c as i16;
    let pa = (p - a as i16).abs();
    let pb = (p - b as i16).abs();
    let pc = (p - c as i16).abs();
    if pa <= pb && pa <= pc {
        a
    } else if pb <= pc {
        b
    } else {
        c
    }
}

/// Appends `row` filtered with `kind` to `out`. `prev` is the previous raw row (zeros for the first).
pub fn filter_row(kind: FilterType, row: &[u8], prev: &[u8], bpp: usize, out: &mut Vec<u8>) {
    debug_assert_eq!(row.len(), prev.len());
    match kind {
        FilterType::None => out.extend_from_slice(row),
        FilterType::Sub => {
            for i in 0..row.len() {
                let left = if i >= bpp { row[i - bpp] } else { 0 };
                out.push(row[i].wrapping_sub(left));
            }
        }
        FilterType::Up => out.extend(row.iter().zip(prev).map(|(&r, &p)| r.wrapping_sub(p))),
        FilterType::Average => {
            for i in 0..row.len() {
                let left = if i >= bpp { row[i - bpp] as u16 } else { 0 };
                out.push(row[i].wrapping_sub(((left + prev[i] as u16) / 2) as u8));
            }
        }
        FilterType::Paeth => {
            for i in 0..row.len() {
                let (left, upleft) = if i >= bpp { (row[i - bpp], prev[i - bpp]) } else { (0, 0) };
                out.push(row[i].wrapping_sub(paeth(left, prev[i], upleft)));
            }
        }
    }
}

/// Reverses [`filter_row`] in place.
pub fn unfilter_row(kind: FilterType, row: &mut [u8], prev: &[u8], bpp: usize) {
    match kind {
        FilterType::None => {}
        FilterType::Sub => {
            for i in bpp..row.len() {
                row[i] = row[i].wrapping_add(row[i - bpp]);
            }
        }
        FilterType::Up => {
            for (r, &p) in row.iter_mut().zip(prev) {
                *r = r.wrapping_add(p);
            }
        }
        FilterType::Average => {
            for i in 0..row.len() {
                let left = if i >= bpp { row[i - bpp] as u16 } else { 0 };
                row[i] = row[i].wrapping_add(((left + prev[i] as u16) / 2) as u8);
            }
        }
        FilterType::Paeth => {
            for i in 0..row.len() {
                let (left, upleft) = if i >= bpp { (row[i - bpp], prev[i - bpp]) } else { (0, 0) };
                row[i] = row[i].wrapping_add(paeth(left, prev[i], upleft));
            }
        }
    }
}

/// Sum of absolute values of the filtered bytes read as signed deltas.
pub fn heuristic_cost(filtered: &[u8]) -> u64 {
    filtered.iter().map(|&b| (b as i8).unsigned_abs() as u64).sum()
}

/// Filters `height` rows of `row_bytes` each from `raw`.
pub fn filter_image(raw: &[u8], row_bytes: usize, height: usize, bpp: usize, strategy: FilterStrategy) -> FilteredImage {
    debug_assert_eq!(raw.len(), row_bytes * height);
    let mut bytes = Vec::with_capacity((row_bytes + 1) * height);
    let mut filters = Vec::with_capacity(height);
    let zero = vec![0u8; row_bytes];
    let mut candidate = Vec::with_capacity(row_bytes);
    let mut best = Vec::with_capacity(row_bytes);

    for y in 0..height {
        let row = &raw[y * row_bytes..(y + 1) * row_bytes];
        let prev = if y == 0 { &zero[..] } else { &raw[(y - 1) * row_bytes..y * row_bytes] };
        let chosen = match strategy {
            FilterStrategy::Fixed(kind) => {
                best.clear();
                filter_row(kind, row, prev, bpp, &mut best);
                kind
            }
            FilterStrategy::Adaptive => {
                let mut best_kind = FilterType::None;
                let mut best_cost = u64::MAX;
                for kind in FilterType::ALL {
                    candidate.clear();
                    filter_row(kind, row, prev, bpp, &mut candidate);
                    let cost = heuristic_cost(&candidate);
                    if cost < best_cost {
                        best_cost = cost;
                        best_kind = kind;
                        std::mem::swap(&mut best, &mut candidate);
                    }
                }
                best_kind
            }
        };
        bytes.push(chosen as u8);
        bytes.extend_from_slice(&best);
        filters.push(chosen);
    }
    FilteredImage { bytes, filters }
}
