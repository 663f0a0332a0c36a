use std::cmp::Ordering;

use smallvec::SmallVec;

use super::{Coord, Space, SpaceError};

impl Space {
    /// Depth-first order of `u` and `v` in the division tree of `{u, v}`:
    /// descend from the root while both lie in the same child; the first cut
    /// that separates them decides, left child first. `Equal` iff `u == v`.
    pub fn order(&self, u: &Coord, v: &Coord) -> Ordering {
        if u == v {
            return Ordering::Equal;
        }
        let bits = self.bits as usize;
        let mut lo: SmallVec<[u64; 8]> = SmallVec::from_elem(0, self.dim);
        let mut cuts: SmallVec<[usize; 8]> = SmallVec::from_elem(0, self.dim);
        for depth in 0..self.max_depth() {
            let axis = depth % self.dim;
            let half = 1u64 << (bits - cuts[axis] - 1);
            let mid = lo[axis] + half;
            let u_upper = u.axis(axis) >= mid;
            let v_upper = v.axis(axis) >= mid;
            if u_upper != v_upper {
                // u is in the left child iff its half is the one listed first
                let u_left = u_upper != self.convention.smaller_first(axis);
                return if u_left { Ordering::Less } else { Ordering::Greater };
            }
            if u_upper {
                lo[axis] = mid;
            }
            cuts[axis] += 1;
        }
        unreachable!("distinct coordinates of equal precision separate within dim*bits cuts")
    }

    /// Fallible form of [`Space::order`]: equal coordinates are an error.
    pub fn order_compare(&self, u: &Coord, v: &Coord) -> Result<Ordering, SpaceError> {
        self.check_coord(u)?;
        self.check_coord(v)?;
        if u == v {
            return Err(SpaceError::DuplicateCoordinate(u.clone()));
        }
        Ok(self.order(u, v))
    }

    /// `u` strictly before `v`.
    pub fn precedes(&self, u: &Coord, v: &Coord) -> bool {
        self.order(u, v) == Ordering::Less
    }

    /// Bit-interleaving comparison: one bit per axis per round, most
    /// significant first, with bits of larger-first axes complemented.
    pub fn interleave_compare(&self, u: &Coord, v: &Coord) -> Result<Ordering, SpaceError> {
        self.check_coord(u)?;
        self.check_coord(v)?;
        if u == v {
            return Err(SpaceError::DuplicateCoordinate(u.clone()));
        }
        Ok(self.interleaved_bits(u).cmp(&self.interleaved_bits(v)))
    }

    /// The interleaved word of `c` as a bit sequence.
    pub fn interleaved_bits(&self, c: &Coord) -> Vec<u8> {
        let bits = self.bits as usize;
        let mut out = Vec::with_capacity(bits * self.dim);
        for round in 0..bits {
            for axis in 0..self.dim {
                let bit = ((c.axis(axis) >> (bits - 1 - round)) & 1) as u8;
                out.push(if self.convention.smaller_first(axis) { bit } else { 1 - bit });
            }
        }
        out
    }
}
