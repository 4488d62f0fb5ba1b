//! Spanning tree, Hamiltonian path and matching with low crossing number,
//! derived from a [`PartitionTree`].

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;

use crate::geometry::{Halfplane, Point, Rect, Side};
use crate::partition_tree::PartitionTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    SpanningTree,
    Path,
    Matching,
}

/// Edges over indices into a point slice. Path edges are stored in walk
/// order, `(v0, v1), (v1, v2), ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet {
    pub kind: EdgeKind,
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Vertices in walk order; only meaningful for paths.
    pub fn path_order(&self) -> Vec<usize> {
        match self.edges.first() {
            None if self.n == 1 => vec![0],
            None => vec![],
            Some(&(a, _)) => std::iter::once(a)
                .chain(self.edges.iter().map(|e| e.1))
                .collect(),
        }
    }

    /// The vertex no matching edge covers, if any.
    pub fn unmatched(&self) -> Vec<usize> {
        let mut covered = vec![false; self.n];
        for &(a, b) in &self.edges {
            covered[a] = true;
            covered[b] = true;
        }
        (0..self.n).filter(|&v| !covered[v]).collect()
    }

    /// Checks the structural contract for `kind`.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.n;
        let mut degree = vec![0usize; n];
        for &(a, b) in &self.edges {
            if a >= n || b >= n || a == b {
                return Err(format!("bad edge ({a}, {b})"));
            }
            degree[a] += 1;
            degree[b] += 1;
        }
        match self.kind {
            EdgeKind::SpanningTree | EdgeKind::Path => {
                if self.edges.len() != n.saturating_sub(1) {
                    return Err(format!("{} edges for {n} vertices", self.edges.len()));
                }
                let mut parent: Vec<usize> = (0..n).collect();
                fn find(p: &mut [usize], mut x: usize) -> usize {
                    while p[x] != x {
                        p[x] = p[p[x]];
                        x = p[x];
                    }
                    x
                }
                for &(a, b) in &self.edges {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra == rb {
                        return Err(format!("edge ({a}, {b}) closes a cycle"));
                    }
                    parent[ra] = rb;
                }
                if self.kind == EdgeKind::Path {
                    if degree.iter().any(|&d| d > 2) {
                        return Err("path vertex of degree > 2".into());
                    }
                    if self.edges.windows(2).any(|w| w[0].1 != w[1].0) {
                        return Err("path edges out of walk order".into());
                    }
                }
            }
            EdgeKind::Matching => {
                if self.edges.len() != n / 2 {
                    return Err(format!("{} edges, expected {}", self.edges.len(), n / 2));
                }
                if degree.iter().any(|&d| d > 1) {
                    return Err("matching edges share a vertex".into());
                }
            }
        }
        Ok(())
    }
}

/// Post-order traversal of `ptree`: each internal node joins the
/// lowest-index point of its two children. Leaves holding several points
/// are chained in index order.
pub fn spanning_tree(ptree: &PartitionTree) -> EdgeSet {
    let n = ptree.len();
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if let Some(root) = ptree.root() {
        // explicit post-order, returns the representative of each subtree
        let mut rep = vec![usize::MAX; ptree.nodes().len()];
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            let node = &ptree.nodes()[id];
            match node.children() {
                None => {
                    let mut pts = ptree.node_points(id).to_vec();
                    pts.sort_unstable();
                    edges.extend(pts.windows(2).map(|w| (w[0], w[1])));
                    rep[id] = pts[0];
                }
                Some((l, r)) if expanded => {
                    edges.push((rep[l], rep[r]));
                    rep[id] = rep[l].min(rep[r]);
                }
                Some((l, r)) => {
                    stack.push((id, true));
                    stack.push((r, false));
                    stack.push((l, false));
                }
            }
        }
    }
    EdgeSet {
        kind: EdgeKind::SpanningTree,
        n,
        edges,
    }
}

/// Vertices of `tree` in depth-first discovery order from `root`,
/// neighbours visited by increasing index.
pub fn path_from_tree(tree: &EdgeSet, root: usize) -> EdgeSet {
    let n = tree.n;
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &tree.edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let mut order = Vec::with_capacity(n);
    if n > 0 {
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            order.push(v);
            stack.extend(adj[v].iter().rev().filter(|&&w| !seen[w]));
        }
    }
    let edges = order.windows(2).map(|w| (w[0], w[1])).collect();
    EdgeSet {
        kind: EdgeKind::Path,
        n,
        edges,
    }
}

/// Every second edge of `path`, starting with the first.
pub fn matching_from_path(path: &EdgeSet) -> EdgeSet {
    let edges = path.edges.iter().step_by(2).copied().collect();
    EdgeSet {
        kind: EdgeKind::Matching,
        n: path.n,
        edges,
    }
}

/// Tree, path and matching in one go; the path starts at point 0.
pub fn low_crossing_matching(ptree: &PartitionTree) -> (EdgeSet, EdgeSet, EdgeSet) {
    let tree = spanning_tree(ptree);
    let path = path_from_tree(&tree, 0);
    let matching = matching_from_path(&path);
    (tree, path, matching)
}

/// A line with a symbolic tie rule: points on it are treated as lying on
/// the side chosen by `on_line`, i.e. the line is shifted infinitesimally
/// away from that side.
#[derive(Clone, Copy, Debug)]
pub struct ProbeLine {
    pub line: Halfplane,
    pub on_line: Side,
}

impl ProbeLine {
    #[inline]
    pub fn is_positive(&self, p: Point) -> bool {
        match self.line.side_of(p) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.on_line == Side::Positive,
        }
    }

    /// Every pair-line of `points` shifted to both sides.
    pub fn exhaustive(points: &[Point]) -> Vec<ProbeLine> {
        let mut probes = Vec::with_capacity(points.len() * points.len());
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let Ok(line) = Halfplane::from_pair(points, i, j, Side::Positive) else {
                    continue;
                };
                probes.push(ProbeLine {
                    line,
                    on_line: Side::Positive,
                });
                probes.push(ProbeLine {
                    line,
                    on_line: Side::Negative,
                });
            }
        }
        probes
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, rect: &Rect, count: usize) -> Vec<ProbeLine> {
        (0..count)
            .map(|_| ProbeLine {
                line: Halfplane::random(rng, rect),
                on_line: Side::Positive,
            })
            .collect()
    }

    /// Exhaustive for up to 256 points, otherwise `random_count` random lines.
    pub fn standard<R: Rng + ?Sized>(
        points: &[Point],
        rng: &mut R,
        random_count: usize,
    ) -> Vec<ProbeLine> {
        if points.len() <= 256 {
            Self::exhaustive(points)
        } else {
            match Rect::bounding(points) {
                Some(rect) => Self::random(rng, &rect, random_count),
                None => Vec::new(),
            }
        }
    }
}

/// Number of edges with one endpoint on each side of `probe`.
pub fn crossings(edges: &EdgeSet, points: &[Point], probe: &ProbeLine) -> usize {
    edges
        .edges
        .iter()
        .filter(|&&(a, b)| probe.is_positive(points[a]) != probe.is_positive(points[b]))
        .count()
}

/// Maximum of [`crossings`] over `probes`.
pub fn crossing_number(edges: &EdgeSet, points: &[Point], probes: &[ProbeLine]) -> usize {
    probes
        .par_iter()
        .map(|p| crossings(edges, points, p))
        .max()
        .unwrap_or(0)
}

/// `(|M^I_h|, |M^C_h|)`: matching edges inside `h`, and edges with exactly
/// one endpoint in `h`.
pub fn classify_edges(matching: &EdgeSet, points: &[Point], h: &Halfplane) -> (usize, usize) {
    let mut inside = 0;
    let mut crossed = 0;
    for &(a, b) in &matching.edges {
        match (h.contains(points[a]), h.contains(points[b])) {
            (true, true) => inside += 1,
            (false, false) => {}
            _ => crossed += 1,
        }
    }
    (inside, crossed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::count_in_halfplane_naive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point::new(
                    rng.random_range(-5000..=5000),
                    rng.random_range(-5000..=5000),
                )
            })
            .collect()
    }

    #[test]
    fn tiny_trees() {
        let one = PartitionTree::build(&[Point::new(0, 0)]);
        assert!(spanning_tree(&one).is_empty());
        let two = PartitionTree::build(&[Point::new(0, 0), Point::new(1, 5)]);
        assert_eq!(spanning_tree(&two).edges, vec![(0, 1)]);
    }

    #[test]
    fn star_becomes_two_edge_path() {
        let star = EdgeSet {
            kind: EdgeKind::SpanningTree,
            n: 3,
            edges: vec![(1, 0), (1, 2)],
        };
        let p = path_from_tree(&star, 1);
        assert_eq!(p.edges, vec![(1, 0), (0, 2)]);
        p.validate().unwrap();
    }

    #[test]
    fn path_is_its_own_dfs() {
        let path = EdgeSet {
            kind: EdgeKind::Path,
            n: 5,
            edges: vec![(3, 1), (1, 4), (4, 0), (0, 2)],
        };
        let p = path_from_tree(
            &EdgeSet {
                kind: EdgeKind::SpanningTree,
                ..path.clone()
            },
            3,
        );
        assert_eq!(p.edges, path.edges);
    }

    #[test]
    fn matching_takes_alternate_edges() {
        let p4 = EdgeSet {
            kind: EdgeKind::Path,
            n: 4,
            edges: vec![(0, 1), (1, 2), (2, 3)],
        };
        assert_eq!(matching_from_path(&p4).edges, vec![(0, 1), (2, 3)]);
        let p5 = EdgeSet {
            kind: EdgeKind::Path,
            n: 5,
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 4)],
        };
        let m = matching_from_path(&p5);
        assert_eq!(m.len(), 2);
        assert_eq!(m.unmatched(), vec![4]);
        m.validate().unwrap();
    }

    #[test]
    fn derived_structures_are_valid() {
        for n in [1, 2, 3, 7, 64, 333] {
            let pts = random_points(n, n as u64);
            let (t, p, m) = low_crossing_matching(&PartitionTree::build(&pts));
            t.validate().unwrap();
            p.validate().unwrap();
            m.validate().unwrap();
        }
    }

    #[test]
    fn single_edge_crossed_by_perpendicular_bisector() {
        let pts = [Point::new(0, 0), Point::new(4, 0)];
        let e = EdgeSet {
            kind: EdgeKind::Matching,
            n: 2,
            edges: vec![(0, 1)],
        };
        let bisector = ProbeLine {
            line: Halfplane::new(1, 0, -2).unwrap(),
            on_line: Side::Positive,
        };
        assert_eq!(crossing_number(&e, &pts, &[bisector]), 1);
        let far = ProbeLine {
            line: Halfplane::new(1, 0, -100).unwrap(),
            on_line: Side::Positive,
        };
        assert_eq!(crossing_number(&e, &pts, &[far]), 0);
    }

    #[test]
    fn probe_tie_rule_moves_points_off_the_line() {
        let pts = [Point::new(0, 0), Point::new(4, 0)];
        let through = Halfplane::from_pair(&pts, 0, 1, Side::Positive).unwrap();
        let up = ProbeLine {
            line: through,
            on_line: Side::Positive,
        };
        assert!(up.is_positive(pts[0]) && up.is_positive(pts[1]));
        let down = ProbeLine {
            line: through,
            on_line: Side::Negative,
        };
        assert!(!down.is_positive(pts[0]) && !down.is_positive(pts[1]));
    }

    #[test]
    fn crossing_order_tree_path_matching() {
        let pts = random_points(128, 11);
        let (t, p, m) = low_crossing_matching(&PartitionTree::build(&pts));
        let probes = ProbeLine::exhaustive(&pts);
        for probe in probes.iter().step_by(7) {
            let (ct, cp) = (crossings(&t, &pts, probe), crossings(&p, &pts, probe));
            assert!(cp <= 2 * ct, "path {cp} vs tree {ct}");
            assert!(crossings(&m, &pts, probe) <= cp);
        }
    }

    #[test]
    fn classify_extremes_and_identity() {
        let n = 100;
        let pts = random_points(n, 12);
        let (_, _, m) = low_crossing_matching(&PartitionTree::build(&pts));
        let all = Halfplane::new(0, 1, 10_000).unwrap();
        assert_eq!(classify_edges(&m, &pts, &all), (n / 2, 0));
        let none = Halfplane::new(0, 1, -10_000).unwrap();
        assert_eq!(classify_edges(&m, &pts, &none), (0, 0));

        let rect = Rect::bounding(&pts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let h = Halfplane::random(&mut rng, &rect);
            let (inside, crossed) = classify_edges(&m, &pts, &h);
            assert_eq!(2 * inside + crossed, count_in_halfplane_naive(&pts, &h));
        }
    }
}
