use super::{Coord, Region, Space, SpaceError};

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub region: Region,
    pub parent: Option<usize>,
    /// `[left, right]` for inner nodes.
    pub children: Option<[usize; 2]>,
    /// Index into the tree's points for an inhabited leaf.
    pub point: Option<usize>,
}

/// Binary tree of recursive cuts: inner nodes hold at least two points
/// (the root is always cut once), leaves hold at most one.
#[derive(Debug, Clone)]
pub struct DivisionTree {
    nodes: Vec<TreeNode>,
    points: Vec<Coord>,
}

impl DivisionTree {
    pub(crate) fn build(space: &Space, points: &[Coord], region: &Region) -> Result<Self, SpaceError> {
        for p in points {
            space.check_coord(p)?;
            if !region.contains(p) {
                return Err(SpaceError::OutsideRegion(p.clone()));
            }
        }
        let mut sorted: Vec<&Coord> = points.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(SpaceError::DuplicateCoordinate(w[0].clone()));
        }

        let mut tree = DivisionTree {
            nodes: vec![TreeNode {
                region: region.clone(),
                parent: None,
                children: None,
                point: None,
            }],
            points: points.to_vec(),
        };
        let all: Vec<usize> = (0..points.len()).collect();
        tree.divide(space, 0, &all)?;
        Ok(tree)
    }

    fn divide(&mut self, space: &Space, at: usize, members: &[usize]) -> Result<(), SpaceError> {
        let (left, right) = space.split(&self.nodes[at].region)?;
        let (in_left, in_right): (Vec<usize>, Vec<usize>) =
            members.iter().partition(|&&i| left.contains(&self.points[i]));
        let mut kids = [0usize; 2];
        for (slot, (region, group)) in [(left, in_left), (right, in_right)].into_iter().enumerate() {
            let idx = self.nodes.len();
            self.nodes.push(TreeNode {
                region,
                parent: Some(at),
                children: None,
                point: if group.len() == 1 { Some(group[0]) } else { None },
            });
            kids[slot] = idx;
            if group.len() >= 2 {
                self.divide(space, idx, &group)?;
            }
        }
        self.nodes[at].children = Some(kids);
        Ok(())
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn points(&self) -> &[Coord] {
        &self.points
    }

    /// Leaf indices in depth-first order, left child first.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match self.nodes[i].children {
                Some([l, r]) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(i),
            }
        }
        out
    }

    pub fn leaf_regions(&self) -> Vec<&Region> {
        self.leaves().into_iter().map(|i| &self.nodes[i].region).collect()
    }

    pub fn inhabitant(&self, node: usize) -> Option<&Coord> {
        self.nodes[node].point.map(|p| &self.points[p])
    }

    /// Input points in the order the depth-first traversal meets them.
    pub fn dfs_order(&self) -> Vec<&Coord> {
        self.leaves()
            .into_iter()
            .filter_map(|i| self.inhabitant(i))
            .collect()
    }

    /// Leaf index whose region holds `p`, or `None` if `p` is outside the root.
    pub fn locate(&self, p: &Coord) -> Option<usize> {
        if !self.nodes[0].region.contains(p) {
            return None;
        }
        let mut at = 0;
        while let Some([l, r]) = self.nodes[at].children {
            at = if self.nodes[l].region.contains(p) { l } else { r };
        }
        Some(at)
    }

    /// Leaf region holding `p`.
    pub fn region_locate(&self, p: &Coord) -> Option<&Region> {
        self.locate(p).map(|i| &self.nodes[i].region)
    }

    /// Regions not holding `v` whose parent holds `v`, ordered by depth.
    pub fn quad_regions_of(&self, v: &Coord) -> Vec<&Region> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let Some(parent) = node.parent {
                if !node.region.contains(v) && self.nodes[parent].region.contains(v) {
                    out.push(&node.region);
                }
            }
        }
        out.sort_by_key(|r| r.depth());
        out
    }
}
