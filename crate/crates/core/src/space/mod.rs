//! Exact geometry of recursive cuts over the unit d-cube.
//!
//! Coordinates are fixed-point: axis value `m` stands for `m / 2^bits`. All
//! mantissas of node coordinates are odd, while every cut plane reachable by
//! the division lies on an even multiple of `2^-bits`, so a node never sits
//! on a region boundary.

mod coord;
mod division;
mod local;
mod order;
mod region;

use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

pub use coord::Coord;
pub use division::{DivisionTree, TreeNode};
pub use local::{LocalView, Placement};
pub use region::Region;

/// Largest supported number of fraction bits per axis.
pub const MAX_BITS: u8 = 62;
/// Largest supported dimension. Squared distances are summed in `u128`,
/// which holds `8 * 2^124`.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("precision exceeded: region at depth {depth} cannot be split with {bits} bits per axis")]
    PrecisionExceeded { depth: usize, bits: u8 },
    #[error("duplicate coordinate {0}")]
    DuplicateCoordinate(Coord),
    #[error("invalid coordinate: {0}")]
    InvalidCoord(String),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid region path {0:?}")]
    InvalidPath(String),
    #[error("point {0} lies outside the region")]
    OutsideRegion(Coord),
    #[error("neighbor order violated: {0}")]
    NeighborOrder(String),
}

/// Child of a cut, in the order used by the depth-first traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_char(self) -> char {
        match self {
            Side::Left => 'L',
            Side::Right => 'R',
        }
    }
}

/// Per-axis choice of which half of a cut becomes the left child.
///
/// `smaller_first[i] == true` makes the half with the smaller `i`-th
/// coordinate the left child.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Convention {
    smaller_first: SmallVec<[bool; 4]>,
}

impl Convention {
    /// West-first on x and north-first on y in the plane (y grows northward,
    /// so the larger y half comes first); smaller-first on every axis above.
    pub fn default_for(dim: usize) -> Self {
        let smaller_first = if dim == 2 {
            SmallVec::from_slice(&[true, false])
        } else {
            SmallVec::from_elem(true, dim)
        };
        Convention { smaller_first }
    }

    pub fn new(smaller_first: &[bool]) -> Self {
        Convention {
            smaller_first: SmallVec::from_slice(smaller_first),
        }
    }

    pub fn smaller_first(&self, axis: usize) -> bool {
        self.smaller_first[axis]
    }

    pub fn flags(&self) -> &[bool] {
        &self.smaller_first
    }
}

/// Geometry context: dimension, fixed-point precision and child convention.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Space {
    dim: usize,
    bits: u8,
    convention: Convention,
}

impl Space {
    pub fn new(dim: usize, bits: u8) -> Result<Self, SpaceError> {
        Self::with_convention(dim, bits, Convention::default_for(dim))
    }

    pub fn with_convention(dim: usize, bits: u8, convention: Convention) -> Result<Self, SpaceError> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(SpaceError::InvalidSpace(format!(
                "dimension {dim} outside 2..={MAX_DIM}"
            )));
        }
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(SpaceError::InvalidSpace(format!(
                "bits {bits} outside 1..={MAX_BITS}"
            )));
        }
        if convention.smaller_first.len() != dim {
            return Err(SpaceError::InvalidSpace(format!(
                "convention has {} axes, space has {dim}",
                convention.smaller_first.len()
            )));
        }
        Ok(Space {
            dim,
            bits,
            convention,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn convention(&self) -> &Convention {
        &self.convention
    }

    /// Deepest region that can still be split.
    pub fn max_depth(&self) -> usize {
        self.dim * self.bits as usize
    }

    /// The whole cube.
    pub fn root(&self) -> Region {
        Region::root(self.dim, self.bits)
    }

    pub fn check_coord(&self, c: &Coord) -> Result<(), SpaceError> {
        if c.dim() != self.dim || c.bits() != self.bits {
            return Err(SpaceError::InvalidCoord(format!(
                "{c} has dim {} / bits {}, space has dim {} / bits {}",
                c.dim(),
                c.bits(),
                self.dim,
                self.bits
            )));
        }
        Ok(())
    }

    /// Cuts `r` in half along axis `depth mod dim` and returns
    /// `(left, right)` according to the convention.
    pub fn split(&self, r: &Region) -> Result<(Region, Region), SpaceError> {
        let axis = r.depth() % self.dim;
        let cuts = r.cuts(axis);
        if cuts >= self.bits as usize {
            return Err(SpaceError::PrecisionExceeded {
                depth: r.depth(),
                bits: self.bits,
            });
        }
        let half = 1u64 << (self.bits as usize - cuts - 1);
        let lower = r.child(axis, 0);
        let upper = r.child(axis, half);
        if self.convention.smaller_first(axis) {
            Ok((lower, upper))
        } else {
            Ok((upper, lower))
        }
    }

    /// Which child of `r` holds `c`; `c` must lie inside `r`.
    pub fn side_of(&self, r: &Region, c: &Coord) -> Result<Side, SpaceError> {
        let (left, _) = self.split(r)?;
        Ok(if left.contains(c) { Side::Left } else { Side::Right })
    }

    /// Cut path of `r` from the root.
    pub fn path(&self, r: &Region) -> Vec<Side> {
        (0..r.depth())
            .map(|k| {
                let axis = k % self.dim;
                let index = k / self.dim;
                let upper = (r.lo(axis) >> (self.bits as usize - 1 - index)) & 1 == 1;
                if upper != self.convention.smaller_first(axis) {
                    Side::Left
                } else {
                    Side::Right
                }
            })
            .collect()
    }

    /// `"L"`/`"R"` path string; the root is the empty string.
    pub fn path_string(&self, r: &Region) -> String {
        self.path(r).into_iter().map(Side::as_char).collect()
    }

    pub fn region_from_path(&self, path: &str) -> Result<Region, SpaceError> {
        let mut r = self.root();
        for ch in path.chars() {
            let (left, right) = self
                .split(&r)
                .map_err(|_| SpaceError::InvalidPath(path.to_string()))?;
            r = match ch {
                'L' => left,
                'R' => right,
                _ => return Err(SpaceError::InvalidPath(path.to_string())),
            };
        }
        Ok(r)
    }

    /// Builds the division tree of `points` inside `region`.
    pub fn quad_division(&self, points: &[Coord], region: &Region) -> Result<DivisionTree, SpaceError> {
        DivisionTree::build(self, points, region)
    }

    /// Euclidean distance between two fixed-point positions.
    pub fn distance(&self, a: &Coord, b: &Coord) -> f64 {
        (distance_sq_units(a, b) as f64).sqrt() / (1u64 << self.bits) as f64
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} bits={}", self.dim, self.bits)
    }
}

/// Squared distance in units of `2^-2bits`.
pub fn distance_sq_units(a: &Coord, b: &Coord) -> u128 {
    a.axes()
        .iter()
        .zip(b.axes())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u128;
            d * d
        })
        .sum()
}
