//! Finite truncations of the inverse limit: preimage trees, backward branches
//! and the shift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::models::Endomorphism;

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// A finite past `x_0, x_{-1}, ..., x_{-N}` with `f(x_{-(i+1)}) = x_{-i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardBranch {
    points: Vec<Point>,
}

impl BackwardBranch {
    /// Build from points ordered head first. Compatibility is not checked.
    pub fn new(points: Vec<Point>) -> Self {
        assert!(!points.is_empty(), "a branch holds at least its head");
        BackwardBranch { points }
    }

    /// Branch from a chronological orbit segment: the last point becomes the head.
    pub fn from_orbit(orbit: &[Point]) -> Self {
        BackwardBranch::new(orbit.iter().rev().copied().collect())
    }

    pub fn depth(&self) -> usize {
        self.points.len() - 1
    }

    pub fn head(&self) -> &Point {
        &self.points[0]
    }

    /// Point `x_{-i}`.
    pub fn at(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Keep `x_0 .. x_{-n}`.
    pub fn truncate(&self, n: usize) -> BackwardBranch {
        BackwardBranch::new(self.points[..=n.min(self.depth())].to_vec())
    }

    /// Tail starting at `x_{-i}`, itself a branch of depth `N - i`.
    pub fn tail(&self, i: usize) -> BackwardBranch {
        BackwardBranch::new(self.points[i..].to_vec())
    }

    /// Append a preimage of the deepest point.
    pub fn extend(&self, deeper: Point) -> BackwardBranch {
        let mut p = self.points.clone();
        p.push(deeper);
        BackwardBranch::new(p)
    }

    /// Largest compatibility residual `max_i d(f(x_{-(i+1)}), x_{-i})`.
    pub fn residual(&self, f: &Endomorphism) -> f64 {
        self.points
            .windows(2)
            .map(|w| f.eval(&w[1]).dist(&w[0]))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    point: Point,
    parent: usize,
    first_child: usize,
    child_count: usize,
}

/// The complete tree of preimages of a root down to a fixed depth.
#[derive(Debug, Clone)]
pub struct PreimageTree {
    depth: usize,
    levels: Vec<Vec<Node>>,
}

impl PreimageTree {
    pub fn root(&self) -> &Point {
        &self.levels[0][0].point
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Points at level `-i`, grouped by parent in parent order.
    pub fn level(&self, i: usize) -> Vec<Point> {
        self.levels[i].iter().map(|n| n.point).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.levels[self.depth].len()
    }

    /// Children of node `j` at level `-i`.
    pub fn children(&self, i: usize, j: usize) -> Vec<Point> {
        let n = &self.levels[i][j];
        if i == self.depth {
            return Vec::new();
        }
        self.levels[i + 1][n.first_child..n.first_child + n.child_count]
            .iter()
            .map(|c| c.point)
            .collect()
    }

    fn branch_to(&self, level: usize, mut idx: usize) -> BackwardBranch {
        let mut pts = Vec::with_capacity(level + 1);
        for i in (0..=level).rev() {
            let n = &self.levels[i][idx];
            pts.push(n.point);
            idx = n.parent;
        }
        pts.reverse();
        BackwardBranch::new(pts)
    }
}

pub fn grow_preimage_tree(f: &Endomorphism, x: &Point, n: usize) -> Result<PreimageTree> {
    grow_preimage_tree_with_budget(f, x, n, DEFAULT_NODE_BUDGET)
}

pub fn grow_preimage_tree_with_budget(
    f: &Endomorphism,
    x: &Point,
    n: usize,
    budget: usize,
) -> Result<PreimageTree> {
    let needed = (f.degree() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut levels = vec![vec![Node {
        point: *x,
        parent: 0,
        first_child: 0,
        child_count: 0,
    }]];
    for i in 0..n {
        let mut next = Vec::with_capacity(levels[i].len() * f.degree());
        for (pi, node) in levels[i].iter_mut().enumerate() {
            let kids = f.preimages(&node.point);
            node.first_child = next.len();
            node.child_count = kids.len();
            next.extend(kids.into_iter().map(|point| Node {
                point,
                parent: pi,
                first_child: 0,
                child_count: 0,
            }));
        }
        levels.push(next);
    }
    Ok(PreimageTree { depth: n, levels })
}

/// All root-to-leaf paths in deterministic (sorted-children) order.
pub fn enumerate_branches(t: &PreimageTree) -> Vec<BackwardBranch> {
    (0..t.leaf_count()).map(|j| t.branch_to(t.depth, j)).collect()
}

/// The first deepest branch all of whose points satisfy `member`.
///
/// Returns `None` when no child of the root qualifies (and the tree has depth
/// at least one).
pub fn branch_within<F>(t: &PreimageTree, member: F) -> Option<BackwardBranch>
where
    F: Fn(&Point) -> bool,
{
    if t.depth == 0 {
        return Some(t.branch_to(0, 0));
    }
    let mut best: Option<(usize, usize)> = None;
    // explicit stack of (level, index); children pushed in reverse for sorted visiting
    let mut stack = vec![(0usize, 0usize)];
    while let Some((lvl, idx)) = stack.pop() {
        if lvl > 0 && best.is_none_or(|(bl, _)| lvl > bl) {
            best = Some((lvl, idx));
            if lvl == t.depth {
                break;
            }
        }
        if lvl == t.depth {
            continue;
        }
        let n = &t.levels[lvl][idx];
        for c in (n.first_child..n.first_child + n.child_count).rev() {
            if member(&t.levels[lvl + 1][c].point) {
                stack.push((lvl + 1, c));
            }
        }
    }
    best.map(|(l, i)| t.branch_to(l, i))
}

/// Depth-first search for a branch of exactly `depth` inside `member`, without
/// materializing the tree. Gives up after `budget` preimage evaluations.
pub fn search_branch_within<F>(
    f: &Endomorphism,
    x: &Point,
    depth: usize,
    member: F,
    budget: usize,
) -> Option<BackwardBranch>
where
    F: Fn(&Point) -> bool,
{
    search_branch_within_seeded(f, x, depth, member, budget, None)
}

/// Like [`search_branch_within`], but with a seed the children at each level
/// are tried in a rotated order, so different seeds reach different branches.
pub fn search_branch_within_seeded<F>(
    f: &Endomorphism,
    x: &Point,
    depth: usize,
    member: F,
    budget: usize,
    seed: Option<u64>,
) -> Option<BackwardBranch>
where
    F: Fn(&Point) -> bool,
{
    let mut path = vec![*x];
    let mut frontier: Vec<Vec<Point>> = Vec::new();
    let mut spent = 0usize;
    loop {
        if path.len() == depth + 1 {
            return Some(BackwardBranch::new(path));
        }
        if frontier.len() < path.len() {
            if spent >= budget {
                return None;
            }
            spent += 1;
            let mut kids: Vec<Point> = f
                .preimages(path.last().unwrap())
                .into_iter()
                .filter(|p| member(p))
                .collect();
            if let Some(seed) = seed {
                if !kids.is_empty() {
                    let r = (splitmix(seed ^ path.len() as u64) % kids.len() as u64) as usize;
                    kids.rotate_left(r);
                }
            }
            kids.reverse();
            frontier.push(kids);
        }
        match frontier.last_mut().unwrap().pop() {
            Some(next) => path.push(next),
            None => {
                frontier.pop();
                path.pop();
                if path.is_empty() {
                    return None;
                }
            }
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The shift: prepend `f(x_0)` and drop the deepest point.
pub fn shift_forward(f: &Endomorphism, b: &BackwardBranch) -> BackwardBranch {
    let mut pts = Vec::with_capacity(b.points.len());
    pts.push(f.eval(b.head()));
    pts.extend_from_slice(&b.points[..b.depth()]);
    BackwardBranch::new(pts)
}

/// Inverse shift: drop the head and append the given preimage of the deepest point.
pub fn shift_backward(b: &BackwardBranch, deeper: Point) -> BackwardBranch {
    let mut pts = b.points[1..].to_vec();
    pts.push(deeper);
    BackwardBranch::new(pts)
}

pub fn branch_distance(b1: &BackwardBranch, b2: &BackwardBranch) -> Result<f64> {
    if b1.depth() != b2.depth() {
        return Err(Error::DepthMismatch(b1.depth(), b2.depth()));
    }
    if b1.head().manifold() != b2.head().manifold() {
        return Err(Error::ManifoldMismatch(b1.head().manifold(), b2.head().manifold()));
    }
    Ok(b1
        .points
        .iter()
        .zip(&b2.points)
        .map(|(p, q)| p.dist(q))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn t(c: &[f64]) -> Point {
        Point::on_torus(c).unwrap()
    }

    #[test]
    fn doubling_tree() {
        let f = Endomorphism::circle_mul(2).unwrap();
        let tree = grow_preimage_tree(&f, &t(&[0.0]), 2).unwrap();
        let l1: Vec<f64> = tree.level(1).iter().map(|p| p.coords()[0]).collect();
        let l2: Vec<f64> = tree.level(2).iter().map(|p| p.coords()[0]).collect();
        assert_eq!(l1, vec![0.0, 0.5]);
        assert_eq!(l2, vec![0.0, 0.5, 0.25, 0.75]);
        let br = enumerate_branches(&tree);
        assert_eq!(br.len(), 4);
        assert!(br[0].points().iter().all(|p| p.coords()[0] == 0.0));
    }

    #[test]
    fn torus_leaf_count() {
        let f = Endomorphism::torus_linear(vec![vec![3, 1], vec![1, 1]]).unwrap();
        let tree = grow_preimage_tree(&f, &t(&[0.3, 0.8]), 10).unwrap();
        assert_eq!(tree.leaf_count(), 1024);
    }

    #[test]
    fn quadratic_tree_on_unit_circle() {
        let f = Endomorphism::quadratic(Complex64::new(0.0, 0.0)).unwrap();
        let tree = grow_preimage_tree(&f, &Point::finite(Complex64::new(1.0, 0.0)), 3).unwrap();
        assert_eq!(tree.leaf_count(), 8);
        for p in tree.level(3) {
            assert!((p.z().unwrap().norm() - 1.0).abs() < 1e-14);
        }
        let tree2 = grow_preimage_tree(&f, &Point::finite(Complex64::new(1.0, 0.0)), 2).unwrap();
        assert_eq!(enumerate_branches(&tree2).len(), 4);
    }

    #[test]
    fn depth_zero_tree() {
        let f = Endomorphism::circle_mul(2).unwrap();
        let tree = grow_preimage_tree(&f, &t(&[0.4]), 0).unwrap();
        let br = enumerate_branches(&tree);
        assert_eq!(br.len(), 1);
        assert_eq!(br[0].depth(), 0);
    }

    #[test]
    fn budget_is_enforced() {
        let f = Endomorphism::circle_mul(2).unwrap();
        let e = grow_preimage_tree(&f, &t(&[0.4]), 21).unwrap_err();
        assert_eq!(
            e,
            Error::BudgetExceeded {
                needed: 1 << 21,
                budget: DEFAULT_NODE_BUDGET
            }
        );
        assert!(grow_preimage_tree(&f, &t(&[0.4]), 19).is_ok());
    }

    #[test]
    fn branch_within_examples() {
        let f = Endomorphism::product(2, 0.1).unwrap();
        let tree = grow_preimage_tree(&f, &t(&[0.3, 0.0]), 6).unwrap();
        let b = branch_within(&tree, |p| p.coords()[1] == 0.0).unwrap();
        assert_eq!(b.depth(), 6);
        let mut x = 0.3;
        for p in b.points() {
            assert_eq!(p.coords()[1], 0.0);
            assert!((p.coords()[0] - x).abs() < 1e-15);
            x /= 2.0;
        }
        let first = enumerate_branches(&tree).remove(0);
        assert_eq!(branch_within(&tree, |_| true).unwrap(), first);
        let root = *tree.root();
        assert!(branch_within(&tree, |p| *p == root).is_none());
    }

    #[test]
    fn lazy_search_matches_tree_search() {
        let f = Endomorphism::circle_mul(3).unwrap();
        let x = t(&[0.37]);
        let member = |p: &Point| p.coords()[0] > 0.3;
        let tree = grow_preimage_tree(&f, &x, 7).unwrap();
        let a = branch_within(&tree, member).unwrap();
        let b = search_branch_within(&f, &x, 7, member, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shift_examples() {
        let f = Endomorphism::circle_mul(2).unwrap();
        let b = BackwardBranch::new(vec![t(&[0.5]), t(&[0.25]), t(&[0.125])]);
        let s = shift_forward(&f, &b);
        let c: Vec<f64> = s.points().iter().map(|p| p.coords()[0]).collect();
        assert_eq!(c, vec![0.0, 0.5, 0.25]);
        let d0 = BackwardBranch::new(vec![t(&[0.3])]);
        assert_eq!(shift_forward(&f, &d0).depth(), 0);
        assert!((shift_forward(&f, &d0).head().coords()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let b1 = BackwardBranch::new(vec![t(&[0.5]), t(&[0.25])]);
        let b2 = BackwardBranch::new(vec![t(&[0.5]), t(&[0.75])]);
        assert_eq!(branch_distance(&b1, &b1).unwrap(), 0.0);
        assert_eq!(branch_distance(&b1, &b2).unwrap(), 0.5);
        assert_eq!(branch_distance(&b2, &b1).unwrap(), 0.5);
        let b3 = BackwardBranch::new(vec![t(&[0.5])]);
        assert_eq!(branch_distance(&b1, &b3), Err(Error::DepthMismatch(1, 0)));
    }
}
