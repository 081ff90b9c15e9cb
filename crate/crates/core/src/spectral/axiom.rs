use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::hyperbolic::{verify_hyperbolic, HyperbolicityEstimate, DEFAULT_HORIZON};

use super::basic::{in_set_branches, set_seed, BasicSetApprox, SamplingOptions};
use super::graph::TransitionGraph;
use super::grid::CellSet;
use super::periodic::periodic_points;

pub const DENSITY_THRESHOLD: f64 = 0.99;
const SINGULAR_DET: f64 = 1e-12;
const HYPERBOLIC_SAMPLES: usize = 8;
const DET_SAMPLES_PER_CELL: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetHyperbolicity {
    pub set: usize,
    pub estimate: Option<HyperbolicityEstimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomAReport {
    pub recurrent_cells: usize,
    /// Singular points of the model whose cell is recurrent.
    pub singular_points_in_omega: Vec<Point>,
    /// Recurrent cells holding a sampled point with `|det Df| < 1e-12`.
    pub singular_cells: Vec<usize>,
    pub no_singular_points: bool,
    pub max_period: usize,
    pub periodic_points: usize,
    pub periodic_search_complete: bool,
    pub density_fraction: f64,
    pub dense: bool,
    pub hyperbolicity: Vec<SetHyperbolicity>,
    pub hyperbolic: bool,
    pub axiom_a: bool,
}

/// Collect the evidence for the Axiom A conditions on the union of the sets.
pub fn verify_axiom_a(
    t: &TransitionGraph,
    sets: &[BasicSetApprox],
    max_period: usize,
    opts: &SamplingOptions,
) -> AxiomAReport {
    let f = t.endomorphism();
    let grid = t.grid();
    let omega = grid.set(sets.iter().flat_map(|s| s.cells.cells().iter().copied()).collect());

    let singular_points_in_omega: Vec<Point> = f
        .singular_points()
        .into_iter()
        .filter(|p| omega.contains(grid.cell_of(p)))
        .collect();
    let singular_cells: Vec<usize> = omega
        .cells()
        .iter()
        .copied()
        .filter(|&c| {
            grid.cell_samples(c, DET_SAMPLES_PER_CELL)
                .iter()
                .any(|p| f.jac(p).determinant().abs() < SINGULAR_DET)
        })
        .collect();
    let no_singular_points = singular_points_in_omega.is_empty() && singular_cells.is_empty();

    let mut near = vec![false; grid.cell_count()];
    let mut count = 0;
    let mut complete = true;
    for p in 1..=max_period {
        match periodic_points(f, p) {
            Ok(set) => {
                complete &= set.complete;
                count += set.points.len();
                for x in &set.points {
                    mark_near(t, &omega, x, &mut near);
                }
            }
            Err(_) => complete = false,
        }
    }
    let hits = omega.cells().iter().filter(|&&c| near[c]).count();
    let density_fraction = if omega.is_empty() {
        1.0
    } else {
        hits as f64 / omega.len() as f64
    };

    let hyperbolicity: Vec<SetHyperbolicity> = sets
        .iter()
        .map(|s| {
            let branches = in_set_branches(
                f,
                grid,
                &s.cells,
                HYPERBOLIC_SAMPLES,
                opts.depth,
                set_seed(opts.seed, &s.cells, 6),
            );
            match verify_hyperbolic(f, &branches, DEFAULT_HORIZON) {
                Ok(est) => SetHyperbolicity {
                    set: s.id,
                    estimate: Some(est),
                    error: None,
                },
                Err(e) => SetHyperbolicity {
                    set: s.id,
                    estimate: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let hyperbolic = hyperbolicity
        .iter()
        .all(|h| h.estimate.as_ref().is_some_and(|e| e.hyperbolic));
    let dense = density_fraction >= DENSITY_THRESHOLD;
    AxiomAReport {
        recurrent_cells: omega.len(),
        singular_points_in_omega,
        singular_cells,
        no_singular_points,
        max_period,
        periodic_points: count,
        periodic_search_complete: complete,
        density_fraction,
        dense,
        hyperbolicity,
        hyperbolic,
        axiom_a: no_singular_points && dense && hyperbolic,
    }
}

/// Mark recurrent cells within one local cell diameter of `x`.
fn mark_near(t: &TransitionGraph, omega: &CellSet, x: &Point, near: &mut [bool]) {
    let grid = t.grid();
    let r = grid.cell_diameter();
    for c in grid.cells_near(x, r) {
        if omega.contains(c) && grid.distance_to_cell(x, c) <= grid.local_diameter(c) {
            near[c] = true;
        }
    }
}
