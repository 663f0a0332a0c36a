use smallvec::SmallVec;

use super::Coord;

/// A dyadic subcube reached by `depth` cuts from the root.
///
/// Stored as the lower corner per axis plus the depth; the per-axis widths
/// follow from the cut cycle (depth `k` cuts axis `k mod dim`). Within one
/// [`super::Space`] this is in bijection with the cut path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    depth: u16,
    bits: u8,
    lo: SmallVec<[u64; 4]>,
}

impl Region {
    pub(crate) fn root(dim: usize, bits: u8) -> Self {
        Region {
            depth: 0,
            bits,
            lo: SmallVec::from_elem(0, dim),
        }
    }

    pub(crate) fn child(&self, axis: usize, offset: u64) -> Self {
        let mut lo = self.lo.clone();
        lo[axis] += offset;
        Region {
            depth: self.depth + 1,
            bits: self.bits,
            lo,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth as usize
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Number of cuts applied to `axis` on the way from the root.
    pub fn cuts(&self, axis: usize) -> usize {
        let d = self.dim();
        (self.depth() + d - 1 - axis) / d
    }

    pub fn lo(&self, axis: usize) -> u64 {
        self.lo[axis]
    }

    /// Half-open mantissa interval `[lo, hi)` on `axis`.
    pub fn interval(&self, axis: usize) -> (u64, u64) {
        let lo = self.lo[axis];
        (lo, lo + self.width(axis))
    }

    pub fn width(&self, axis: usize) -> u64 {
        1u64 << (self.bits as usize - self.cuts(axis))
    }

    /// Per-axis `[lo, hi)` in unit coordinates.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let scale = (1u64 << self.bits) as f64;
        (0..self.dim())
            .map(|i| {
                let (lo, hi) = self.interval(i);
                (lo as f64 / scale, hi as f64 / scale)
            })
            .collect()
    }

    pub fn contains(&self, c: &Coord) -> bool {
        (0..self.dim()).all(|i| {
            let shift = self.bits as usize - self.cuts(i);
            (c.axis(i) >> shift) == (self.lo[i] >> shift)
        })
    }

    /// True when `other` lies inside `self` (or equals it).
    pub fn encloses(&self, other: &Region) -> bool {
        other.depth >= self.depth
            && (0..self.dim()).all(|i| {
                let shift = self.bits as usize - self.cuts(i);
                (other.lo[i] >> shift) == (self.lo[i] >> shift)
            })
    }

    pub fn diameter(&self) -> f64 {
        (self.diameter_sq_units() as f64).sqrt() / (1u64 << self.bits) as f64
    }

    /// Squared length of the main diagonal in units of `2^-2bits`.
    pub fn diameter_sq_units(&self) -> u128 {
        (0..self.dim())
            .map(|i| {
                let w = self.width(i) as u128;
                w * w
            })
            .sum()
    }
}
