//! Balanced binary space partition over a point set for exact halfplane
//! counting.
//!
//! Nodes split at the median of alternating coordinates (x at even depth, y
//! at odd depth), ties broken by point index, so a tree is a deterministic
//! function of its input order. Any line meets `O(sqrt(n))` cells of such a
//! tree, which bounds the nodes a count query expands.

use crate::geometry::{Halfplane, Point, Rect, RectSide};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Debug)]
pub struct Node {
    /// Tight bounding box of the points below this node.
    pub bbox: Rect,
    pub start: u32,
    pub end: u32,
    pub left: u32,
    pub right: u32,
    /// Splitting axis and the largest coordinate that went left.
    pub split: Option<(Axis, i64)>,
    pub depth: u16,
}

impl Node {
    #[inline]
    pub fn count(&self) -> usize {
        (self.end - self.start) as usize
    }

    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.left == NONE
    }

    pub fn children(&self) -> Option<(usize, usize)> {
        (!self.is_leaf()).then_some((self.left as usize, self.right as usize))
    }
}

#[derive(Clone, Debug)]
pub struct PartitionTree {
    points: Vec<Point>,
    /// `perm[k]` is the input index of the k-th point in tree order.
    perm: Vec<usize>,
    nodes: Vec<Node>,
    leaf_size: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CountResult {
    pub count: usize,
    pub visited: u64,
}

impl PartitionTree {
    pub const DEFAULT_LEAF_SIZE: usize = 1;

    pub fn build(points: &[Point]) -> Self {
        Self::with_leaf_size(points, Self::DEFAULT_LEAF_SIZE)
    }

    pub fn with_leaf_size(points: &[Point], leaf_size: usize) -> Self {
        let leaf_size = leaf_size.max(1);
        let mut tree = PartitionTree {
            points: points.to_vec(),
            perm: (0..points.len()).collect(),
            nodes: Vec::with_capacity(2 * points.len()),
            leaf_size,
        };
        if !points.is_empty() {
            tree.build_rec(0, points.len(), 0);
        }
        tree
    }

    fn build_rec(&mut self, start: usize, end: usize, depth: u16) -> u32 {
        let id = self.nodes.len() as u32;
        let bbox = Rect::bounding(self.perm[start..end].iter().map(|&k| &self.points[k])).unwrap();
        self.nodes.push(Node {
            bbox,
            start: start as u32,
            end: end as u32,
            left: NONE,
            right: NONE,
            split: None,
            depth,
        });
        if end - start <= self.leaf_size {
            return id;
        }
        let axis = if depth.is_multiple_of(2) {
            Axis::X
        } else {
            Axis::Y
        };
        let mid = start + (end - start) / 2;
        let points = &self.points;
        let key = |k: &usize| {
            let p = points[*k];
            match axis {
                Axis::X => (p.x(), *k),
                Axis::Y => (p.y(), *k),
            }
        };
        self.perm[start..end].select_nth_unstable_by_key(mid - start - 1, key);
        let pivot = key(&self.perm[mid - 1]).0;
        let left = self.build_rec(start, mid, depth + 1);
        let right = self.build_rec(mid, end, depth + 1);
        let node = &mut self.nodes[id as usize];
        node.left = left;
        node.right = right;
        node.split = Some((axis, pivot));
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> Option<usize> {
        (!self.nodes.is_empty()).then_some(0)
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Input indices of the points below `node`.
    pub fn node_points(&self, node: usize) -> &[usize] {
        let n = &self.nodes[node];
        &self.perm[n.start as usize..n.end as usize]
    }

    pub fn height(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.depth as usize + 1)
            .max()
            .unwrap_or(0)
    }

    /// Exact `|h ∩ S|`.
    pub fn count(&self, h: &Halfplane) -> usize {
        self.count_with_stats(h).count
    }

    /// Exact count plus the number of nodes touched.
    pub fn count_with_stats(&self, h: &Halfplane) -> CountResult {
        let mut res = CountResult::default();
        if self.nodes.is_empty() {
            return res;
        }
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            res.visited += 1;
            match h.classify(&node.bbox) {
                RectSide::Inside => res.count += node.count(),
                RectSide::Outside => {}
                RectSide::Crossed if node.is_leaf() => {
                    res.count += self
                        .node_points(id as usize)
                        .iter()
                        .filter(|&&k| h.contains(self.points[k]))
                        .count();
                }
                RectSide::Crossed => {
                    stack.push(node.right);
                    stack.push(node.left);
                }
            }
        }
        res
    }

    /// Nodes whose cell meets both open sides of the boundary of `h`, or
    /// touches the boundary itself.
    pub fn crossed_node_count(&self, h: &Halfplane) -> usize {
        let crossed = |r: &Rect| {
            let corners = [
                (r.min_x, r.min_y),
                (r.min_x, r.max_y),
                (r.max_x, r.min_y),
                (r.max_x, r.max_y),
            ];
            let signs = corners.map(|(x, y)| h.side_of(Point::new(x, y)));
            let pos = signs.iter().any(|s| s.is_ge());
            let neg = signs.iter().any(|s| s.is_le());
            pos && neg
        };
        let mut n = 0;
        let mut stack: Vec<u32> = self.root().map(|_| 0).into_iter().collect();
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if !crossed(&node.bbox) {
                continue;
            }
            n += 1;
            if !node.is_leaf() {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        n
    }

    /// Structural audit used by tests: counts, ranges, splits and leaf sizes.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = vec![false; self.len()];
        for &k in &self.perm {
            if std::mem::replace(&mut seen[k], true) {
                return Err(format!("index {k} appears twice"));
            }
        }
        for (id, node) in self.nodes.iter().enumerate() {
            let pts = self.node_points(id);
            if pts.is_empty() {
                return Err(format!("node {id} is empty"));
            }
            if Rect::bounding(pts.iter().map(|&k| &self.points[k])) != Some(node.bbox) {
                return Err(format!("node {id} has a stale bbox"));
            }
            match node.children() {
                None if node.count() > self.leaf_size => {
                    return Err(format!("leaf {id} holds {} points", node.count()));
                }
                None => {}
                Some((l, r)) => {
                    let (l, r) = (&self.nodes[l], &self.nodes[r]);
                    if l.count() + r.count() != node.count()
                        || l.start != node.start
                        || r.end != node.end
                    {
                        return Err(format!("node {id} children do not partition it"));
                    }
                    let (axis, pivot) = node.split.ok_or(format!("node {id} lacks a split"))?;
                    let coord = |k: usize| match axis {
                        Axis::X => self.points[k].x(),
                        Axis::Y => self.points[k].y(),
                    };
                    let lo = self.node_points(node.left as usize);
                    let hi = self.node_points(node.right as usize);
                    if lo.iter().any(|&k| coord(k) > pivot) || hi.iter().any(|&k| coord(k) < pivot)
                    {
                        return Err(format!("node {id} split is not a median cut"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{count_in_halfplane_naive, Side};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point::new(
                    rng.random_range(-1000..=1000),
                    rng.random_range(-1000..=1000),
                )
            })
            .collect()
    }

    #[test]
    fn empty_tree_counts_zero() {
        let t = PartitionTree::build(&[]);
        let h = Halfplane::new(0, 1, 0).unwrap();
        assert_eq!(t.count(&h), 0);
        assert_eq!(t.crossed_node_count(&h), 0);
        assert!(t.root().is_none());
    }

    #[test]
    fn single_point_is_one_leaf() {
        let t = PartitionTree::build(&[Point::new(3, 4)]);
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.nodes()[0].count(), 1);
        assert!(t.nodes()[0].is_leaf());
        let through = Halfplane::new(1, 0, -3).unwrap();
        assert!(t.crossed_node_count(&through) <= 1);
    }

    #[test]
    fn structure_of_a_thousand_points() {
        let pts = random_points(1000, 1);
        let t = PartitionTree::build(&pts);
        t.check_invariants().unwrap();
        assert_eq!(t.nodes().len(), 2 * 1000 - 1);
        // ceil(log2 1000) = 10 edges from root to deepest leaf
        assert!(t.height() <= 11, "height {}", t.height());
    }

    #[test]
    fn duplicates_get_their_own_leaves() {
        let pts = vec![Point::new(1, 1); 9];
        let t = PartitionTree::build(&pts);
        t.check_invariants().unwrap();
        let h = Halfplane::new(1, 1, -2).unwrap();
        assert_eq!(t.count(&h), 9);
    }

    #[test]
    fn deterministic_given_input_order() {
        let pts = random_points(300, 5);
        let (a, b) = (PartitionTree::build(&pts), PartitionTree::build(&pts));
        assert_eq!(a.perm, b.perm);
    }

    #[test]
    fn covering_and_disjoint_halfplanes_stop_at_root() {
        let pts = random_points(500, 2);
        let t = PartitionTree::build(&pts);
        let above_all = Halfplane::new(0, 1, 1001).unwrap();
        let r = t.count_with_stats(&above_all);
        assert_eq!((r.count, r.visited), (500, 1));
        let none = Halfplane::new(0, 1, -1001).unwrap();
        let r = t.count_with_stats(&none);
        assert_eq!((r.count, r.visited), (0, 1));
        assert_eq!(
            t.crossed_node_count(&Halfplane::new(1, 0, -5000).unwrap()),
            0
        );
    }

    #[test]
    fn counts_match_linear_scan_on_random_halfplanes() {
        let pts = random_points(200, 3);
        let t = PartitionTree::build(&pts);
        let rect = Rect::bounding(&pts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let h = Halfplane::random(&mut rng, &rect);
            assert_eq!(t.count(&h), count_in_halfplane_naive(&pts, &h));
        }
    }

    #[test]
    fn counts_match_on_every_pair_boundary() {
        let pts = random_points(64, 9);
        for leaf in [1, 4] {
            let t = PartitionTree::with_leaf_size(&pts, leaf);
            t.check_invariants().unwrap();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    for side in [Side::Positive, Side::Negative] {
                        let Ok(h) = Halfplane::from_pair(&pts, i, j, side) else {
                            continue;
                        };
                        assert_eq!(t.count(&h), count_in_halfplane_naive(&pts, &h));
                    }
                }
            }
        }
    }

    #[test]
    fn visited_nodes_bounded_by_crossed_cells() {
        let pts = random_points(1024, 6);
        let t = PartitionTree::build(&pts);
        let rect = Rect::bounding(&pts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let h = Halfplane::random(&mut rng, &rect);
            let visited = t.count_with_stats(&h).visited as usize;
            // each expanded node is crossed and contributes at most two children
            assert!(visited <= 2 * t.crossed_node_count(&h) + 1);
        }
    }
}
