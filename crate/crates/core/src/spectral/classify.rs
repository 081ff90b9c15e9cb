use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::hyperbolic::{estimate_splitting, singular_extremes, DEFAULT_FWD};
use crate::localmanifolds::grow_unstable_disk;
use crate::models::Endomorphism;
use crate::natural_extension::{shift_forward, BackwardBranch};

use super::basic::{in_set_branches, set_seed, BasicSetApprox, Classification, REALIZE_STEPS};
use super::graph::TransitionGraph;
use super::grid::{BoxGrid, CellSet};

pub const DEFAULT_EPS_LIST: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
pub const DEFAULT_N_TEST: usize = 10;
/// Grid resolution of unstable disks used in the attractor test.
pub const DISK_SAMPLES_1D: usize = 33;
pub const DISK_SAMPLES_2D: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTrial {
    pub eps: f64,
    pub disks: usize,
    pub disk_failures: usize,
    pub samples_tested: usize,
    pub contained: bool,
    pub escaped: bool,
    /// First orbit point of a disk sample found more than one cell diameter
    /// away from the set, and the step at which it was found.
    pub witness: Option<Point>,
    pub witness_step: Option<usize>,
    /// Distance from the witness to the nearest cell of the set.
    pub witness_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorReport {
    pub verdict: Classification,
    pub depth: usize,
    pub n_test: usize,
    pub trials: Vec<EpsilonTrial>,
}

impl AttractorReport {
    pub fn is_attractor(&self) -> bool {
        self.verdict == Classification::Attractor
    }
}

fn disk_samples(dim_u: usize) -> usize {
    if dim_u <= 1 {
        DISK_SAMPLES_1D
    } else {
        DISK_SAMPLES_2D
    }
}

/// Follow the orbit of a disk sample; return the first point that is more than
/// one cell diameter away from the set.
fn escape_along_orbit(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &BasicSetApprox,
    p: &Point,
) -> Option<(Point, usize)> {
    let mut q = *p;
    for step in 0..=REALIZE_STEPS {
        let r = grid.local_diameter(grid.cell_of(&q));
        if !grid.near_set(&q, &set.cells, r) {
            return Some((q, step));
        }
        q = f.eval(&q);
    }
    None
}

/// Scan the list of scales: the set is an attractor when, at some scale, every
/// sampled local unstable disk stays within one cell diameter of the set, along
/// with its forward orbit. Membership in the cell union alone would let thick
/// cell sets swallow small disks around repelling sets.
pub fn classify_attractor(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &BasicSetApprox,
    eps_list: &[f64],
    depth: usize,
    n_test: usize,
    seed: u64,
) -> Result<AttractorReport> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty basic set".into()));
    }
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("eps list must hold positive scales".into()));
    }
    let mut trials = Vec::with_capacity(eps_list.len());
    let mut any_branch = false;
    for (i, &eps) in eps_list.iter().enumerate() {
        let branches = in_set_branches(f, grid, &set.cells, n_test, depth, set_seed(seed, &set.cells, 100 + i as u64));
        any_branch |= !branches.is_empty();
        let outcomes: Vec<Result<(usize, Option<(Point, usize)>)>> = branches
            .par_iter()
            .map(|b| {
                let sp = estimate_splitting(f, b, DEFAULT_FWD)?;
                let disk = grow_unstable_disk(f, b, eps, disk_samples(sp.dims.0))?;
                let escape = disk.samples.iter().find_map(|p| escape_along_orbit(f, grid, set, p));
                Ok((disk.samples.len(), escape))
            })
            .collect();
        let mut trial = EpsilonTrial {
            eps,
            disks: 0,
            disk_failures: 0,
            samples_tested: 0,
            contained: false,
            escaped: false,
            witness: None,
            witness_step: None,
            witness_distance: None,
        };
        for o in outcomes {
            match o {
                Ok((n, esc)) => {
                    trial.disks += 1;
                    trial.samples_tested += n;
                    if let (Some((w, step)), None) = (esc, trial.witness) {
                        trial.witness = Some(w);
                        trial.witness_step = Some(step);
                        trial.witness_distance =
                            grid.distance_to_nearest(&w, |c| set.cells.contains(c));
                    }
                }
                Err(_) => trial.disk_failures += 1,
            }
        }
        trial.escaped = trial.witness.is_some();
        trial.contained = trial.disks > 0 && trial.disk_failures == 0 && !trial.escaped;
        trials.push(trial);
    }
    if !any_branch {
        return Err(Error::NoInSetBranch);
    }
    let verdict = if trials.iter().any(|t| t.contained) {
        Classification::Attractor
    } else if trials.iter().all(|t| t.escaped) {
        Classification::Neither
    } else {
        Classification::Inconclusive
    };
    Ok(AttractorReport {
        verdict,
        depth,
        n_test,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatteningTrial {
    pub r: usize,
    pub neighbourhood_cells: usize,
    /// Every cell of the closure has a graph predecessor in the neighbourhood.
    pub closure_covered: bool,
    pub uncovered_cell: Option<usize>,
    /// Cells outside the set whose sampled orbits stay in the neighbourhood.
    pub lingering_cells: usize,
    pub shrinks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepellerReport {
    pub repeller: bool,
    pub trials: Vec<FatteningTrial>,
}

/// Test the repeller conditions on neighbourhoods fattened by `1..=fattenings` cells.
pub fn classify_repeller(t: &TransitionGraph, set: &BasicSetApprox, fattenings: usize) -> RepellerReport {
    let grid = t.grid();
    let f = t.endomorphism();
    let pred = t.predecessors();
    let mut trials = Vec::with_capacity(fattenings);
    for r in 1..=fattenings {
        let u = grid.fatten(&set.cells, r);
        let closure = grid.fatten(&u, 1);
        let uncovered = closure
            .cells()
            .iter()
            .copied()
            .find(|&c| grid.is_live(c) && !pred[c].iter().any(|&p| u.contains(p)));
        let outside: Vec<usize> = u
            .cells()
            .iter()
            .copied()
            .filter(|&c| !set.cells.contains(c) && grid.is_live(c))
            .collect();
        let lingering = outside
            .par_iter()
            .filter(|&&c| {
                grid.cell_samples(c, t.samples_per_cell()).iter().any(|s| {
                    f.orbit(s, REALIZE_STEPS)
                        .iter()
                        .all(|p| u.contains(grid.cell_of(p)))
                })
            })
            .count();
        trials.push(FatteningTrial {
            r,
            neighbourhood_cells: u.len(),
            closure_covered: uncovered.is_none(),
            uncovered_cell: uncovered,
            lingering_cells: lingering,
            shrinks: lingering == 0,
        });
    }
    RepellerReport {
        repeller: trials.iter().any(|t| t.closure_covered && t.shrinks),
        trials,
    }
}

/// Anchor points near the set: heads of in-set branches.
pub fn anchors(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &CellSet,
    count: usize,
    depth: usize,
    seed: u64,
) -> Vec<Point> {
    in_set_branches(f, grid, set, count, depth, seed)
        .into_iter()
        .map(|b| *b.head())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricExpansion {
    pub eps: f64,
    pub pairs: usize,
    pub mu: Option<f64>,
    pub expanding: bool,
}

pub const ANCHOR_COUNT: usize = 200;
const ANCHOR_DEPTH: usize = 8;

/// Smallest one-step distance ratio over pairs of anchor points closer than `eps`.
pub fn verify_expanding_metric(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &BasicSetApprox,
    eps: f64,
    n_pairs: usize,
    seed: u64,
) -> MetricExpansion {
    let pts = anchors(f, grid, &set.cells, ANCHOR_COUNT, ANCHOR_DEPTH, set_seed(seed, &set.cells, 2));
    let mut pairs = Vec::new();
    'outer: for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].dist(&pts[j]);
            if d >= eps * 1e-4 && d < eps {
                pairs.push((i, j, d));
                if pairs.len() >= n_pairs {
                    break 'outer;
                }
            }
        }
    }
    let mu = pairs
        .iter()
        .map(|&(i, j, d)| f.eval(&pts[i]).dist(&f.eval(&pts[j])) / d)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))));
    MetricExpansion {
        eps,
        pairs: pairs.len(),
        mu,
        expanding: mu.is_some_and(|m| m > 1.0 + 1e-3),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeExpansion {
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda: f64,
    pub horizon: usize,
    pub samples: usize,
    pub unstable_dim: usize,
    pub expanding: bool,
}

pub const DERIVATIVE_SAMPLES: usize = 16;

/// Fit `C` and `lambda` in `|Df^n v| >= C lambda^n |v|` over the unstable
/// directions of in-set branches.
pub fn verify_expanding_derivative(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &BasicSetApprox,
    depth: usize,
    horizon: usize,
    seed: u64,
) -> Result<DerivativeExpansion> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let branches = in_set_branches(f, grid, &set.cells, DERIVATIVE_SAMPLES, depth, set_seed(seed, &set.cells, 3));
    if branches.is_empty() {
        return Err(Error::NoInSetBranch);
    }
    let growth: Vec<(usize, Vec<f64>)> = branches
        .par_iter()
        .map(|b| unstable_growth(f, b, horizon))
        .collect::<Result<_>>()?;
    let u = growth[0].0;
    if u == 0 || growth.iter().any(|g| g.0 != u) {
        return Err(Error::DegenerateSplitting(
            "unstable dimension is zero or varies across samples".into(),
        ));
    }
    let h = horizon as f64;
    let lambda = growth
        .iter()
        .map(|(_, g)| g[horizon].powf(1.0 / h))
        .fold(f64::INFINITY, f64::min);
    let c = growth
        .iter()
        .flat_map(|(_, g)| g.iter().enumerate().map(|(k, &s)| s / lambda.powi(k as i32)))
        .fold(f64::INFINITY, f64::min);
    Ok(DerivativeExpansion {
        c,
        lambda,
        horizon,
        samples: growth.len(),
        unstable_dim: u,
        expanding: lambda > 1.0 + 1e-3,
    })
}

/// Smallest metric singular value of `Df^k` on `E^u` for `k = 0..=horizon`.
fn unstable_growth(f: &Endomorphism, b: &BackwardBranch, horizon: usize) -> Result<(usize, Vec<f64>)> {
    let sp = estimate_splitting(f, b, DEFAULT_FWD)?;
    let u = sp.dims.0;
    let phi0 = b.head().conformal_factor();
    let mut w: DMatrix<f64> = sp.eu_matrix().clone();
    let mut branch = b.clone();
    let mut out = vec![1.0];
    for _ in 1..=horizon {
        w = f.jac(branch.head()) * w;
        branch = shift_forward(f, &branch);
        let phik = branch.head().conformal_factor() / phi0;
        out.push(if u > 0 { singular_extremes(&w).0 * phik } else { 0.0 });
    }
    Ok((u, out))
}

/// Smallest distance between distinct preimages of images of anchor points.
pub fn injectivity_scale(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &BasicSetApprox,
    n_points: usize,
    seed: u64,
) -> Result<f64> {
    let pts = anchors(f, grid, &set.cells, n_points, ANCHOR_DEPTH, set_seed(seed, &set.cells, 4));
    if pts.is_empty() {
        return Err(Error::NoInSetBranch);
    }
    let mut best = f64::INFINITY;
    for x in &pts {
        if !f.is_regular(x) {
            return Err(Error::SingularPoint(format!("{x:?}")));
        }
        let pre = f.preimages(&f.eval(x));
        for i in 0..pre.len() {
            for j in i + 1..pre.len() {
                best = best.min(pre[i].dist(&pre[j]));
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub r: usize,
    pub pure: bool,
    pub checked: usize,
    pub witness: Option<Point>,
}

/// Check that preimages of points of the set never land in the fattened
/// neighbourhood outside the set. A preimage within one local cell diameter of
/// the set's cells is attributed to the set, since a cell the set only clips at
/// a corner can be missing from the approximation.
pub fn check_preimage_purity(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &BasicSetApprox,
    r: usize,
    seed: u64,
) -> PurityReport {
    let u = grid.fatten(&set.cells, r);
    let pts = anchors(f, grid, &set.cells, ANCHOR_COUNT, ANCHOR_DEPTH, set_seed(seed, &set.cells, 5));
    let mut checked = 0;
    let mut witness = None;
    for x in &pts {
        for p in f.preimages(x) {
            checked += 1;
            let c = grid.cell_of(&p);
            if witness.is_none()
                && u.contains(c)
                && !set.cells.contains(c)
                && grid
                    .distance_to_nearest(&p, |k| set.cells.contains(k))
                    .is_none_or(|d| d > grid.local_diameter(c))
            {
                witness = Some(p);
            }
        }
    }
    PurityReport {
        r,
        pure: witness.is_none(),
        checked,
        witness,
    }
}

/// Consecutive steps an orbit must spend in one set to be absorbed by it.
pub const ABSORB_STEPS: usize = 64;

/// Index of the basic set that absorbs the orbit of `x` after `burn_in` steps.
pub fn omega_limit(
    f: &Endomorphism,
    grid: &BoxGrid,
    x: &Point,
    sets: &[BasicSetApprox],
    burn_in: usize,
    budget: usize,
) -> Result<usize> {
    let mut p = f.iterate(x, burn_in);
    let mut run: Option<(usize, usize)> = None;
    for step in 0..budget.max(ABSORB_STEPS) {
        let c = grid.cell_of(&p);
        let idx = sets.iter().position(|s| s.cells.contains(c));
        run = match (idx, run) {
            (Some(i), Some((j, n))) if i == j => Some((i, n + 1)),
            (Some(i), _) => Some((i, 1)),
            (None, _) => None,
        };
        if let Some((i, n)) = run {
            if n >= ABSORB_STEPS {
                return Ok(i);
            }
        }
        if step + 1 < budget.max(ABSORB_STEPS) {
            p = f.eval(&p);
        }
    }
    Err(Error::NonconvergentAtBudget {
        steps: burn_in + budget,
    })
}

/// Smallest distance from a point of `k` to the complement of the cell union `u`.
pub fn uniform_margin(k: &[Point], u: &CellSet, grid: &BoxGrid) -> Result<f64> {
    let mut best = f64::INFINITY;
    for x in k {
        if !u.contains(grid.cell_of(x)) {
            return Err(Error::PointOutsideNeighbourhood);
        }
        let d = grid
            .distance_to_nearest(x, |c| grid.is_live(c) && !u.contains(c))
            .unwrap_or(f64::INFINITY);
        best = best.min(d);
    }
    Ok(best)
}

/// Fraction of cells of `B(x, delta)` (cells whose center lies in the ball)
/// hit by samples of the unstable disk at scale `eps`.
pub fn unstable_disk_coverage(
    f: &Endomorphism,
    grid: &BoxGrid,
    b: &BackwardBranch,
    eps: f64,
    delta: f64,
    n_samples: usize,
) -> Result<f64> {
    let disk = grow_unstable_disk(f, b, eps, n_samples)?;
    let x = b.head();
    let ball: Vec<usize> = grid
        .cells_near(x, delta)
        .into_iter()
        .filter(|&c| grid.cell_center(c).dist(x) <= delta)
        .collect();
    if ball.is_empty() {
        return Err(Error::InvalidArgument("ball smaller than a cell".into()));
    }
    let hit = grid.set(disk.samples.iter().map(|p| grid.cell_of(p)).collect());
    Ok(ball.iter().filter(|&&c| hit.contains(c)).count() as f64 / ball.len() as f64)
}
