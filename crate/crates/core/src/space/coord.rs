use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{SpaceError, MAX_BITS, MAX_DIM};

/// A node position, doubling as node identity.
///
/// Axis `i` holds the mantissa `m_i`, read as `m_i / 2^bits`. Mantissas are
/// odd. The derived `Ord` is the storage order used for maps; the geometric
/// order lives in [`super::Space::order`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "CoordRepr", into = "CoordRepr")]
pub struct Coord {
    bits: u8,
    axes: SmallVec<[u64; 4]>,
}

#[derive(Serialize, Deserialize)]
struct CoordRepr {
    bits: u8,
    axes: Vec<u64>,
}

impl TryFrom<CoordRepr> for Coord {
    type Error = SpaceError;

    fn try_from(r: CoordRepr) -> Result<Self, Self::Error> {
        Coord::new(r.bits, &r.axes)
    }
}

impl From<Coord> for CoordRepr {
    fn from(c: Coord) -> Self {
        CoordRepr {
            bits: c.bits,
            axes: c.axes.to_vec(),
        }
    }
}

impl Coord {
    pub fn new(bits: u8, axes: &[u64]) -> Result<Self, SpaceError> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(SpaceError::InvalidCoord(format!("bits {bits} outside 1..={MAX_BITS}")));
        }
        if !(2..=MAX_DIM).contains(&axes.len()) {
            return Err(SpaceError::InvalidCoord(format!(
                "dimension {} outside 2..={MAX_DIM}",
                axes.len()
            )));
        }
        for &m in axes {
            if m >> bits != 0 {
                return Err(SpaceError::InvalidCoord(format!("mantissa {m} needs more than {bits} bits")));
            }
            if m & 1 == 0 {
                return Err(SpaceError::InvalidCoord(format!("mantissa {m} is even")));
            }
        }
        Ok(Coord {
            bits,
            axes: SmallVec::from_slice(axes),
        })
    }

    /// Snaps a point of `[0,1)^d` to the odd mantissa just above
    /// `floor(x * 2^bits)`.
    pub fn from_unit(bits: u8, xs: &[f64]) -> Result<Self, SpaceError> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(SpaceError::InvalidCoord(format!("bits {bits} outside 1..={MAX_BITS}")));
        }
        let scale = (1u64 << bits) as f64;
        let max = (1u64 << bits) - 1;
        let mut axes = SmallVec::<[u64; 4]>::new();
        for &x in xs {
            if !(0.0..=1.0).contains(&x) {
                return Err(SpaceError::InvalidCoord(format!("{x} outside [0,1]")));
            }
            let m = ((x * scale) as u64).min(max);
            axes.push(m | 1);
        }
        Coord::new(bits, &axes)
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[u64] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> u64 {
        self.axes[i]
    }

    pub fn to_unit(&self) -> Vec<f64> {
        let scale = (1u64 << self.bits) as f64;
        self.axes.iter().map(|&m| m as f64 / scale).collect()
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.to_unit().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x:.6}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coord{self}")
    }
}
