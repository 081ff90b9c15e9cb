use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::hyperbolic::{estimate_splitting, DEFAULT_DEPTH, DEFAULT_FWD};
use crate::models::Endomorphism;
use crate::natural_extension::{search_branch_within, search_branch_within_seeded, BackwardBranch};

use super::graph::TransitionGraph;
use super::grid::{BoxGrid, CellSet};

/// Steps an orbit must spend inside a component for the component to count.
pub const REALIZE_STEPS: usize = 64;
/// Preimage evaluations allowed per in-set branch search.
pub const SEARCH_BUDGET: usize = 4096;
/// Minimum number of successful splitting estimates behind a type verdict.
pub const MIN_TYPE_SAMPLES: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Attractor,
    Repeller,
    Neither,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeVote {
    /// Winning `(u, s)` when it holds a two-thirds supermajority.
    pub winner: Option<(usize, usize)>,
    pub tallies: Vec<((usize, usize), usize)>,
    pub sampled: usize,
    pub failures: usize,
}

impl TypeVote {
    pub fn inconclusive(&self) -> bool {
        self.winner.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct BasicSetApprox {
    pub id: usize,
    pub cells: CellSet,
    pub type_uv: Option<(usize, usize)>,
    pub type_vote: Option<TypeVote>,
    pub classification: Classification,
}

impl BasicSetApprox {
    pub fn new(id: usize, cells: CellSet) -> Self {
        BasicSetApprox {
            id,
            cells,
            type_uv: None,
            type_vote: None,
            classification: Classification::Inconclusive,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains_point(&self, grid: &BoxGrid, p: &Point) -> bool {
        self.cells.contains(grid.cell_of(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    pub depth: usize,
    pub seed: u64,
    pub type_samples: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            depth: DEFAULT_DEPTH,
            seed: 0,
            type_samples: 24,
        }
    }
}

/// Seed derived from a base seed and a set, stable under reordering of sets.
pub(crate) fn set_seed(seed: u64, set: &CellSet, salt: u64) -> u64 {
    let first = set.cells().first().copied().unwrap_or(0) as u64;
    seed ^ first.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn in_set_branch(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &CellSet,
    x: &Point,
    depth: usize,
    seed: u64,
) -> Option<BackwardBranch> {
    let member = |p: &Point| set.contains(grid.cell_of(p));
    // The head is taken `DEFAULT_FWD` levels down so that its forward window
    // is itself part of the in-set branch.
    let deep = depth + DEFAULT_FWD;
    if let Some(b) = search_branch_within_seeded(f, x, deep, member, SEARCH_BUDGET, Some(seed)) {
        return Some(b.tail(DEFAULT_FWD));
    }
    // Forward fallback for attracting sets: let the orbit settle, then read the
    // last `depth + 1` points as a branch.
    let orbit = f.orbit(x, 2 * depth);
    let tail = &orbit[depth..];
    tail.iter().all(member).then(|| BackwardBranch::from_orbit(tail))
}

/// Up to `count` branches of the given depth lying in `set`, with heads near
/// randomly sampled points of the set's cells.
pub fn in_set_branches(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &CellSet,
    count: usize,
    depth: usize,
    seed: u64,
) -> Vec<BackwardBranch> {
    use rand::Rng;
    if set.is_empty() || count == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..8 {
        let batch: Vec<(Point, u64)> = (0..count.max(8))
            .filter_map(|_| {
                let c = set.cells()[rng.random_range(0..set.len())];
                let p = grid.random_point(c, &mut rng)?;
                Some((p, rng.random::<u64>()))
            })
            .collect();
        let found: Vec<Option<BackwardBranch>> = batch
            .par_iter()
            .map(|(x, s)| in_set_branch(f, grid, set, x, depth, *s))
            .collect();
        out.extend(found.into_iter().flatten());
        if out.len() >= count {
            out.truncate(count);
            break;
        }
    }
    out
}

/// Whether some sampled orbit realizes the component: it either stays inside
/// for `REALIZE_STEPS` forward steps or has an in-set backward branch that deep.
fn realizable(f: &Endomorphism, grid: &BoxGrid, set: &CellSet, per_set: usize) -> bool {
    let member = |p: &Point| set.contains(grid.cell_of(p));
    let stride = (set.len() / per_set).max(1);
    let starts: Vec<Point> = set
        .cells()
        .iter()
        .step_by(stride)
        .flat_map(|&c| grid.cell_samples(c, 1))
        .collect();
    starts.par_iter().any(|x| {
        let forward = f.orbit(x, REALIZE_STEPS).iter().all(member);
        forward || search_branch_within(f, x, REALIZE_STEPS, member, SEARCH_BUDGET).is_some()
    })
}

/// Estimate the type `(dim E^u, dim E^s)` of a set by supermajority over
/// splittings at in-set branches.
pub fn basic_set_type(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &CellSet,
    opts: &SamplingOptions,
) -> Result<TypeVote> {
    let branches = in_set_branches(f, grid, set, opts.type_samples, opts.depth, set_seed(opts.seed, set, 1));
    if branches.is_empty() {
        return Err(Error::NoInSetBranch);
    }
    let dims: Vec<Option<(usize, usize)>> = branches
        .par_iter()
        .map(|b| estimate_splitting(f, b, DEFAULT_FWD).ok().map(|s| s.dims))
        .collect();
    let mut tallies: Vec<((usize, usize), usize)> = Vec::new();
    let mut failures = 0;
    for d in dims {
        match d {
            Some(d) => match tallies.iter_mut().find(|(k, _)| *k == d) {
                Some((_, n)) => *n += 1,
                None => tallies.push((d, 1)),
            },
            None => failures += 1,
        }
    }
    tallies.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let valid: usize = tallies.iter().map(|t| t.1).sum();
    let winner = tallies
        .first()
        .filter(|(_, n)| valid >= MIN_TYPE_SAMPLES && 3 * n >= 2 * valid)
        .map(|(d, _)| *d);
    Ok(TypeVote {
        winner,
        tallies,
        sampled: branches.len(),
        failures,
    })
}

/// Split the recurrent cells into strongly connected classes, drop classes that
/// no sampled orbit realizes, and type the rest. Largest first.
pub fn decompose_basic_sets(
    t: &TransitionGraph,
    recurrent: &CellSet,
    opts: &SamplingOptions,
) -> Vec<BasicSetApprox> {
    let grid = t.grid();
    let f = t.endomorphism();
    let mut comps: Vec<CellSet> = t
        .nontrivial_components(Some(recurrent))
        .into_iter()
        .map(|c| grid.set(c))
        .filter(|s| realizable(f, grid, s, 64))
        .collect();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cells()[0].cmp(&b.cells()[0])));
    comps
        .into_iter()
        .enumerate()
        .map(|(id, cells)| {
            let mut set = BasicSetApprox::new(id, cells);
            if let Ok(vote) = basic_set_type(f, grid, &set.cells, opts) {
                set.type_uv = vote.winner;
                set.type_vote = Some(vote);
            }
            set
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Manifold;
    use crate::spectral::graph::{build_transition_graph, chain_recurrent_cells};

    #[test]
    fn doubling_is_one_expanding_set() {
        let f = Endomorphism::circle_mul(2).unwrap();
        let g = BoxGrid::new(Manifold::Torus(1), 64).unwrap();
        let t = build_transition_graph(&f, &g, 8).unwrap();
        let rec = chain_recurrent_cells(&t);
        let sets = decompose_basic_sets(&t, &rec, &SamplingOptions::default());
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].len(), 64);
        assert_eq!(sets[0].type_uv, Some((1, 0)));
    }

    #[test]
    fn branches_stay_in_set() {
        let f = Endomorphism::circle_mul(3).unwrap();
        let g = BoxGrid::new(Manifold::Torus(1), 32).unwrap();
        let set = g.set((0..32).collect());
        let bs = in_set_branches(&f, &g, &set, 5, 10, 7);
        assert_eq!(bs.len(), 5);
        assert!(bs.iter().all(|b| b.depth() == 10 && b.residual(&f) < 1e-12));
        assert_eq!(bs, in_set_branches(&f, &g, &set, 5, 10, 7));
    }

    #[test]
    fn empty_set_has_no_branch() {
        let f = Endomorphism::circle_mul(2).unwrap();
        let g = BoxGrid::new(Manifold::Torus(1), 16).unwrap();
        let err = basic_set_type(&f, &g, &g.empty_set(), &SamplingOptions::default()).unwrap_err();
        assert_eq!(err, Error::NoInSetBranch);
    }
}
