use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::Endomorphism;

use super::grid::{BoxGrid, CellSet};

pub const DEFAULT_SAMPLES_PER_CELL: usize = 16;
pub const DEFAULT_BLOAT: f64 = 0.5;

/// Cell-level enclosure of a map, stored as compressed adjacency lists.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    f: Endomorphism,
    grid: BoxGrid,
    samples_per_cell: usize,
    bloat: f64,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl TransitionGraph {
    pub fn endomorphism(&self) -> &Endomorphism {
        &self.f
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn samples_per_cell(&self) -> usize {
        self.samples_per_cell
    }

    pub fn bloat(&self) -> f64 {
        self.bloat
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.targets[self.offsets[c]..self.offsets[c + 1]]
            .iter()
            .map(|&t| t as usize)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.targets[self.offsets[a]..self.offsets[a + 1]]
            .binary_search(&(b as u32))
            .is_ok()
    }

    /// Predecessor lists, one per cell.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.node_count()];
        for a in 0..self.node_count() {
            for b in self.successors(a) {
                pred[b].push(a);
            }
        }
        pred
    }

    fn petgraph(&self, keep: Option<&CellSet>) -> DiGraph<(), ()> {
        let n = self.node_count();
        let mut g = DiGraph::with_capacity(n, self.edge_count());
        for _ in 0..n {
            g.add_node(());
        }
        for a in 0..n {
            if keep.is_some_and(|k| !k.contains(a)) {
                continue;
            }
            for b in self.successors(a) {
                if keep.is_none_or(|k| k.contains(b)) {
                    g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
                }
            }
        }
        g
    }

    /// Nontrivial strongly connected components, each sorted, restricted to `keep`.
    pub fn nontrivial_components(&self, keep: Option<&CellSet>) -> Vec<Vec<usize>> {
        let g = self.petgraph(keep);
        tarjan_scc(&g)
            .into_iter()
            .filter_map(|comp| {
                let mut cells: Vec<usize> = comp.into_iter().map(|v| v.index()).collect();
                if keep.is_some_and(|k| !k.contains(cells[0])) {
                    return None;
                }
                let nontrivial = cells.len() > 1 || self.has_edge(cells[0], cells[0]);
                cells.sort_unstable();
                nontrivial.then_some(cells)
            })
            .collect()
    }
}

/// Build the transition graph with the default bloat factor.
pub fn build_transition_graph(
    f: &Endomorphism,
    grid: &BoxGrid,
    samples_per_cell: usize,
) -> Result<TransitionGraph> {
    build_transition_graph_with(f, grid, samples_per_cell, DEFAULT_BLOAT)
}

/// Each sampled image is bloated by `bloat` times the local cell diameter
/// before it is rasterized onto the grid.
pub fn build_transition_graph_with(
    f: &Endomorphism,
    grid: &BoxGrid,
    samples_per_cell: usize,
    bloat: f64,
) -> Result<TransitionGraph> {
    if samples_per_cell < 4 {
        return Err(Error::InvalidArgument(format!(
            "samples_per_cell must be at least 4, got {samples_per_cell}"
        )));
    }
    if !(bloat >= 0.0 && bloat.is_finite()) {
        return Err(Error::InvalidArgument(format!("bloat must be nonnegative, got {bloat}")));
    }
    if f.manifold() != grid.manifold() {
        return Err(Error::ManifoldMismatch(f.manifold(), grid.manifold()));
    }
    let lists: Vec<Vec<u32>> = (0..grid.cell_count())
        .into_par_iter()
        .map(|c| {
            if !grid.is_live(c) {
                return Vec::new();
            }
            let mut out = Vec::new();
            for s in grid.cell_samples(c, samples_per_cell) {
                let img = f.eval(&s);
                let home = grid.cell_of(&img);
                out.push(home as u32);
                let r = bloat * grid.local_diameter(home);
                if r > 0.0 {
                    for t in grid.cells_near(&img, r) {
                        if grid.distance_to_cell(&img, t) <= r {
                            out.push(t as u32);
                        }
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();
    let mut offsets = Vec::with_capacity(lists.len() + 1);
    offsets.push(0);
    let mut targets = Vec::with_capacity(lists.iter().map(Vec::len).sum());
    for l in lists {
        targets.extend_from_slice(&l);
        offsets.push(targets.len());
    }
    Ok(TransitionGraph {
        f: f.clone(),
        grid: grid.clone(),
        samples_per_cell,
        bloat,
        offsets,
        targets,
    })
}

/// Union of the nontrivial strongly connected components.
pub fn chain_recurrent_cells(t: &TransitionGraph) -> CellSet {
    let cells = t.nontrivial_components(None).into_iter().flatten().collect();
    t.grid().set(cells)
}
