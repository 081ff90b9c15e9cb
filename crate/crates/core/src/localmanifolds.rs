//! Local stable and unstable manifolds: membership tests, sampled disks and
//! contraction rates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::hyperbolic::{estimate_splitting, stable_subspace, DEFAULT_FWD};
use crate::models::Endomorphism;
use crate::natural_extension::{BackwardBranch, DEFAULT_NODE_BUDGET};

/// Strict `< eps` is evaluated as `< eps - STRICT_SLACK`.
pub const STRICT_SLACK: f64 = 1e-12;

/// Pairs closer than this are below arithmetic resolution and skipped.
pub const RESOLUTION_FLOOR: f64 = 1e-8;

/// Singular-value ratio under which a principal direction does not count.
pub const PCA_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskKind {
    Stable,
    Unstable,
}

#[derive(Debug, Clone)]
pub struct LocalDisk {
    pub kind: DiskKind,
    pub base: Point,
    pub branch: Option<BackwardBranch>,
    pub epsilon: f64,
    pub depth: usize,
    /// Retained samples at scale `epsilon`.
    pub samples: Vec<Point>,
    /// Retained samples of a concentric disk at scale `epsilon / 100`, used for
    /// the dimension count where curvature is negligible.
    pub core: Vec<Point>,
}

impl LocalDisk {
    /// Number of principal directions of the core samples above threshold.
    pub fn pca_rank(&self) -> usize {
        pca_rank(&self.base, &self.core)
    }
}

/// Rank of the displacement cloud around `base`.
pub fn pca_rank(base: &Point, pts: &[Point]) -> usize {
    let d = base.dim();
    if pts.len() < 2 {
        return 0;
    }
    let rows: Vec<[f64; 3]> = pts.iter().map(|p| base.displacement_to(p)).collect();
    let n = rows.len() as f64;
    let mut mean = [0.0; 3];
    for r in &rows {
        for i in 0..d {
            mean[i] += r[i] / n;
        }
    }
    let cov = DMatrix::from_fn(d, d, |i, j| {
        rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / n
    });
    let ev = SymmetricEigen::new(cov).eigenvalues;
    let max = ev.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    ev.iter().filter(|&&e| e > 0.0 && (e / max).sqrt() > PCA_THRESHOLD).count()
}

#[inline]
fn strictly_within(d: f64, eps: f64) -> bool {
    d < eps - STRICT_SLACK
}

/// Does the forward orbit of `y` stay `eps`-close to that of `x` for `n` steps?
pub fn in_local_stable(f: &Endomorphism, x: &Point, y: &Point, eps: f64, n: usize) -> bool {
    let (mut a, mut b) = (*x, *y);
    for step in 0..=n {
        if !strictly_within(a.dist(&b), eps) {
            return false;
        }
        if step < n {
            a = f.eval(&a);
            b = f.eval(&b);
        }
    }
    true
}

/// Search the preimage tree of `y` for a branch `eps`-shadowing `xb`, pruning
/// every subtree that already violates the bound.
pub fn find_shadowing_branch(
    f: &Endomorphism,
    xb: &BackwardBranch,
    y: &Point,
    eps: f64,
) -> Result<Option<BackwardBranch>> {
    if !strictly_within(xb.head().dist(y), eps) {
        return Ok(None);
    }
    let n = xb.depth();
    let mut path = vec![*y];
    let mut frontier: Vec<Vec<Point>> = Vec::new();
    let mut spent = 0usize;
    loop {
        if path.len() == n + 1 {
            return Ok(Some(BackwardBranch::new(path)));
        }
        if frontier.len() < path.len() {
            spent += f.degree();
            if spent > DEFAULT_NODE_BUDGET {
                return Err(Error::BudgetExceeded {
                    needed: spent as u128,
                    budget: DEFAULT_NODE_BUDGET,
                });
            }
            let target = xb.at(path.len());
            let mut kids: Vec<Point> = f
                .preimages(path.last().unwrap())
                .into_iter()
                .filter(|p| strictly_within(p.dist(target), eps))
                .collect();
            kids.reverse();
            frontier.push(kids);
        }
        match frontier.last_mut().unwrap().pop() {
            Some(next) => path.push(next),
            None => {
                frontier.pop();
                path.pop();
                if path.is_empty() {
                    return Ok(None);
                }
            }
        }
    }
}

/// Is there a branch of `y` that stays `eps`-close to `xb` at every level?
pub fn in_local_unstable(f: &Endomorphism, xb: &BackwardBranch, y: &Point, eps: f64) -> Result<bool> {
    Ok(find_shadowing_branch(f, xb, y, eps)?.is_some())
}

/// Coefficients of a `u`-dimensional grid inside the closed unit ball.
fn ball_grid(u: usize, n_samples: usize) -> Vec<Vec<f64>> {
    if u == 0 {
        return Vec::new();
    }
    let m = ((n_samples.max(2) as f64).powf(1.0 / u as f64).ceil() as usize).max(2);
    let axis: Vec<f64> = (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect();
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..u {
        let mut next = Vec::new();
        for c in &out {
            for &a in &axis {
                let mut e = c.clone();
                e.push(a);
                next.push(e);
            }
        }
        out = next;
    }
    out.retain(|c| {
        let r2: f64 = c.iter().map(|x| x * x).sum();
        r2 <= 1.0 + 1e-12 && r2 > 0.0
    });
    out
}

/// Sample the local unstable manifold of `b` at scale `eps`.
///
/// A grid in the unstable plane at the head is carried back to `x_{-N}` by the
/// inverse Jacobians, and the resulting points are pushed forward `N` steps.
/// Only points that pass the membership test are kept.
pub fn grow_unstable_disk(
    f: &Endomorphism,
    b: &BackwardBranch,
    eps: f64,
    n_samples: usize,
) -> Result<LocalDisk> {
    let sp = estimate_splitting(f, b, DEFAULT_FWD)?;
    let n = b.depth();
    let x0 = *b.head();
    let u = sp.dims.0;
    let mut disk = LocalDisk {
        kind: DiskKind::Unstable,
        base: x0,
        branch: Some(b.clone()),
        epsilon: eps,
        depth: n,
        samples: vec![x0],
        core: vec![x0],
    };
    if u == 0 {
        return Ok(disk);
    }
    let mut invs = Vec::with_capacity(n);
    for i in 1..=n {
        invs.push(f.jac_inverse(b.at(i)).ok_or(Error::SingularPointOnBranch { level: i })?);
    }
    let phi = x0.conformal_factor();
    let grid = ball_grid(u, n_samples);
    let launch = |scale: f64| -> Result<Vec<Point>> {
        let mut kept = Vec::new();
        for c in &grid {
            let mut w: DVector<f64> = sp.eu_matrix() * DVector::from_column_slice(c) * (scale / phi);
            for inv in &invs {
                w = inv * w;
            }
            let start = b.at(n).translate(w.as_slice());
            let p = f.iterate(&start, n);
            if in_local_unstable(f, b, &p, eps)? {
                kept.push(p);
            }
        }
        Ok(kept)
    };
    let outer = launch(eps)?;
    let inner = launch(eps / 100.0)?;
    if outer.is_empty() && inner.is_empty() {
        return Err(Error::EmptyDisk { eps });
    }
    disk.samples.extend(outer);
    disk.samples.extend(inner.iter().copied());
    disk.core.extend(inner);
    Ok(disk)
}

/// Deterministic points of `[-1, 1]` (van der Corput in base 2, shifted).
fn spread(i: usize) -> f64 {
    let mut x = 0.0;
    let mut denom = 1.0;
    let mut k = i + 1;
    while k > 0 {
        denom *= 2.0;
        x += (k & 1) as f64 / denom;
        k >>= 1;
    }
    2.0 * x - 1.0
}

/// Largest observed one-step distance ratio along the stable disk at `x`.
pub fn stable_contraction_rate(
    f: &Endomorphism,
    x: &Point,
    pairs: usize,
    eps: f64,
    n: usize,
) -> Result<f64> {
    let es = stable_subspace(f, x, DEFAULT_FWD)?;
    let s = es.ncols();
    if s == 0 {
        return Err(Error::NoStableDirection);
    }
    let phi = x.conformal_factor();
    let mut worst: f64 = 0.0;
    let mut used = 0usize;
    for i in 0..pairs.max(1) {
        let dir: DVector<f64> = if s == 1 {
            DVector::from_element(1, 1.0)
        } else {
            let a = 2.399_963_229_728_653 * i as f64;
            let mut v = DVector::zeros(s);
            v[0] = a.cos();
            v[1] = a.sin();
            v
        };
        let axis = &es * dir;
        let t1 = spread(2 * i);
        let t2 = spread(2 * i + 1);
        let y0 = x.translate((&axis * (t1 * eps / phi)).as_slice());
        let z0 = x.translate((&axis * (t2 * eps / phi)).as_slice());
        if !(in_local_stable(f, x, &y0, eps, n) && in_local_stable(f, x, &z0, eps, n)) {
            continue;
        }
        let (mut y, mut z) = (y0, z0);
        for _ in 0..n {
            let d = y.dist(&z);
            if d < RESOLUTION_FLOOR {
                break;
            }
            let (fy, fz) = (f.eval(&y), f.eval(&z));
            worst = worst.max(fy.dist(&fz) / d);
            used += 1;
            y = fy;
            z = fz;
        }
    }
    if used == 0 {
        return Err(Error::EmptyDisk { eps });
    }
    Ok(worst)
}

/// Largest observed backward one-step ratio over pairs of shadowing branches
/// inside the unstable disk of `b`.
pub fn unstable_backward_contraction(f: &Endomorphism, b: &BackwardBranch, eps: f64) -> Result<f64> {
    let disk = grow_unstable_disk(f, b, eps, 33)?;
    let mut branches = vec![b.clone()];
    for y in &disk.samples[1..] {
        if let Some(yb) = find_shadowing_branch(f, b, y, eps)? {
            branches.push(yb);
        }
    }
    let mut worst: f64 = 0.0;
    let mut used = 0usize;
    let mut consider = |p: &BackwardBranch, q: &BackwardBranch| {
        for k in 0..p.depth() {
            let d = p.at(k).dist(q.at(k));
            if d < RESOLUTION_FLOOR {
                break;
            }
            worst = worst.max(p.at(k + 1).dist(q.at(k + 1)) / d);
            used += 1;
        }
    };
    for yb in &branches[1..] {
        consider(&branches[0], yb);
    }
    for w in branches[1..].windows(2) {
        consider(&w[0], &w[1]);
    }
    if used == 0 {
        return Err(Error::EmptyDisk { eps });
    }
    Ok(worst)
}
