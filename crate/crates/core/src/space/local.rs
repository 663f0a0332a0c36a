use std::cmp::Ordering;

use super::{Coord, Region, Space, SpaceError};

/// A node's local picture of the cube: its own leaf `area` and the quad
/// regions, one per depth along its path, which together tile the cube.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalView {
    pub area: Region,
    /// Ordered by depth (equivalently by path).
    pub quads: Vec<Region>,
}

/// Where a point falls in a [`LocalView`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Area,
    Quad(usize),
}

impl LocalView {
    pub fn locate(&self, p: &Coord) -> Placement {
        match self.quads.iter().position(|q| q.contains(p)) {
            Some(i) => Placement::Quad(i),
            None => Placement::Area,
        }
    }
}

impl Space {
    /// Computes `A(v)` and `Q(v)` from the division tree of the present
    /// members of `{v, left, right}`.
    ///
    /// Only the branch holding `v` matters: every region on it is cut (the
    /// root always, deeper ones while they still hold a neighbor), and the
    /// sibling of each step is a quad region.
    pub fn compute_regions(
        &self,
        v: &Coord,
        left: Option<&Coord>,
        right: Option<&Coord>,
    ) -> Result<LocalView, SpaceError> {
        self.check_coord(v)?;
        if let Some(l) = left {
            self.check_coord(l)?;
            if self.order(l, v) != Ordering::Less {
                return Err(SpaceError::NeighborOrder(format!("left {l} does not precede {v}")));
            }
        }
        if let Some(r) = right {
            self.check_coord(r)?;
            if self.order(v, r) != Ordering::Less {
                return Err(SpaceError::NeighborOrder(format!("right {r} does not follow {v}")));
            }
        }
        let others: Vec<&Coord> = left.into_iter().chain(right).collect();
        let mut current = self.root();
        let mut quads = Vec::new();
        loop {
            let (l, r) = self.split(&current)?;
            let (own, sibling) = if l.contains(v) { (l, r) } else { (r, l) };
            quads.push(sibling);
            current = own;
            if !others.iter().any(|o| current.contains(o)) {
                break;
            }
        }
        Ok(LocalView {
            area: current,
            quads,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(s: &Space, xs: &[f64]) -> Coord {
        Coord::from_unit(s.bits(), xs).unwrap()
    }

    #[test]
    fn lone_node_sees_two_halves() {
        let s = Space::new(2, 30).unwrap();
        let v = pt(&s, &[0.7, 0.3]);
        let view = s.compute_regions(&v, None, None).unwrap();
        assert_eq!(s.path_string(&view.area), "R");
        assert_eq!(view.quads.len(), 1);
        assert_eq!(s.path_string(&view.quads[0]), "L");
    }

    #[test]
    fn corner_node_has_three_quads() {
        let s = Space::new(2, 30).unwrap();
        let a = pt(&s, &[0.1, 0.9]);
        let b = pt(&s, &[0.4, 0.6]);
        let view = s.compute_regions(&a, None, Some(&b)).unwrap();
        assert_eq!(view.area.bounds(), vec![(0.0, 0.25), (0.5, 1.0)]);
        let quads: Vec<_> = view.quads.iter().map(|q| q.bounds()).collect();
        assert_eq!(
            quads,
            vec![
                vec![(0.5, 1.0), (0.0, 1.0)],
                vec![(0.0, 0.5), (0.0, 0.5)],
                vec![(0.25, 0.5), (0.5, 1.0)],
            ]
        );
        assert_eq!(view.locate(&b), Placement::Quad(2));
        assert_eq!(view.locate(&a), Placement::Area);
    }

    #[test]
    fn neighbor_order_checked() {
        let s = Space::new(2, 30).unwrap();
        let a = pt(&s, &[0.1, 0.9]);
        let b = pt(&s, &[0.4, 0.6]);
        assert!(s.compute_regions(&b, None, Some(&a)).is_err());
        assert!(s.compute_regions(&a, Some(&b), None).is_err());
        assert!(s.compute_regions(&a, Some(&a), None).is_err());
    }
}
