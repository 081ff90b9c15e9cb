use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Manifold;
use crate::models::{g, Endomorphism, Model};

use super::basic::BasicSetApprox;
use super::grid::BoxGrid;

/// Levels of the invariance recursion; the fibre contraction makes the
/// truncation error far below rounding.
const RECURSION_DEPTH: usize = 80;
/// Samples of the boundary parametrization used for the polar graph.
const CONJUGACY_SAMPLES: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub refinement: usize,
    pub sup_abs: f64,
    pub max_first_quotient: f64,
    pub max_second_quotient: f64,
}

fn quotients(h: &[f64], cyclic: bool) -> (f64, f64) {
    let n = h.len();
    let nf = n as f64;
    let at = |i: isize| h[i.rem_euclid(n as isize) as usize];
    let (first_range, second_range) = if cyclic {
        (0..n as isize, 0..n as isize)
    } else {
        (0..n as isize - 1, 1..n as isize - 1)
    };
    let first = first_range
        .map(|i| (at(i + 1) - at(i)).abs() * nf)
        .fold(0.0, f64::max);
    let second = second_range
        .map(|i| (at(i + 1) - 2.0 * at(i) + at(i - 1)).abs() * nf * nf)
        .fold(0.0, f64::max);
    (first, second)
}

/// Check that the cells form one cyclic run of rows over every column.
fn check_graph(grid: &BoxGrid, set: &BasicSetApprox) -> Result<Vec<Vec<usize>>> {
    let n = grid.subdivisions();
    let mut columns = vec![Vec::new(); n];
    for &c in set.cells.cells() {
        let idx = grid.torus_index(c);
        columns[idx[0]].push(idx[1]);
    }
    for (i, rows) in columns.iter_mut().enumerate() {
        rows.sort_unstable();
        if rows.is_empty() {
            return Err(Error::NotAGraph(format!("column {i} is empty")));
        }
        if rows.len() == n {
            return Err(Error::NotAGraph(format!("column {i} is full")));
        }
        let gaps = (0..rows.len())
            .filter(|&j| {
                let next = rows[(j + 1) % rows.len()];
                (next + n - rows[j]) % n != 1
            })
            .count();
        if gaps != 1 {
            return Err(Error::NotAGraph(format!("column {i} splits into {gaps} runs")));
        }
    }
    Ok(columns)
}

/// Fit the attractor as a graph `y = h(x)` over the expanding circle and report
/// sup norm and difference quotients at `n` equally spaced abscissae.
///
/// `h` is the branch of the invariance equation through the fixed fibre over
/// `x = 0`, evaluated by unrolling `h(x) = g(h(x/k)) + kappa sin(2 pi x / k)`.
/// The pair straddling `x = 0` is left out since the branch need not close up.
pub fn attractor_smoothness(
    f: &Endomorphism,
    grid: &BoxGrid,
    set: &BasicSetApprox,
    n: usize,
) -> Result<SmoothnessReport> {
    if set.type_uv != Some((1, 1)) {
        return Err(Error::TypePrecondition {
            got: set.type_uv,
            required: "(n-1, 1)",
        });
    }
    if f.manifold() != Manifold::Torus(2) || grid.manifold() != Manifold::Torus(2) {
        return Err(Error::UnsupportedManifold(f.manifold()));
    }
    if n < 3 {
        return Err(Error::InvalidArgument("refinement must be at least 3".into()));
    }
    let columns = check_graph(grid, set)?;
    let (k, a, kappa) = match f.model() {
        Model::Product { k, amplitude } => (*k, *amplitude, 0.0),
        Model::ForcedCircle { k, amplitude, kappa } => (*k, *amplitude, *kappa),
        other => {
            return Err(Error::InvalidModel(format!(
                "graph fit needs a skew product, got {other:?}"
            )))
        }
    };
    // start from the middle of the run over column 0 and settle on the fixed fibre point
    let rows = &columns[0];
    let nn = grid.subdivisions();
    let start = rows
        .iter()
        .position(|&r| !rows.contains(&((r + nn - 1) % nn)))
        .unwrap_or(0);
    let mid_row = (rows[start] + rows.len() / 2) % nn;
    let mut y = (mid_row as f64 + 0.5) / nn as f64;
    if y > 0.5 {
        y -= 1.0;
    }
    for _ in 0..2000 {
        y = g(a, y);
    }
    let kf = k as f64;
    let h_at = |x: f64| -> f64 {
        let mut xs = [0.0; RECURSION_DEPTH];
        let mut xi = x;
        for v in xs.iter_mut() {
            xi /= kf;
            *v = xi;
        }
        xs.iter()
            .rev()
            .fold(y, |h, &xi| g(a, h) + kappa * (TAU * xi).sin())
    };
    let h: Vec<f64> = (0..n).map(|j| h_at(j as f64 / n as f64)).collect();
    let (first, second) = quotients(&h, false);
    Ok(SmoothnessReport {
        refinement: n,
        sup_abs: h.iter().map(|v| v.abs()).fold(0.0, f64::max),
        max_first_quotient: first,
        max_second_quotient: second,
    })
}

/// The invariant curve of a quadratic map, parametrized by the angle doubling
/// conjugacy and sampled as a polar graph `r(phi)` at `n` equally spaced angles.
pub fn julia_polar_smoothness(f: &Endomorphism, n: usize) -> Result<SmoothnessReport> {
    let c = match f.model() {
        Model::Quadratic { c } => *c,
        _ => return Err(Error::UnsupportedManifold(f.manifold())),
    };
    if n < 3 {
        return Err(Error::InvalidArgument("refinement must be at least 3".into()));
    }
    let m = CONJUGACY_SAMPLES;
    let beta = 0.5 + (0.25 - c).sqrt();
    let mut gamma: Vec<Complex64> = (0..m)
        .map(|i| Complex64::from_polar(beta.norm(), TAU * i as f64 / m as f64))
        .collect();
    // gamma(t) = branch of sqrt(gamma(2t) - c) nearest the current value
    for _ in 0..400 {
        let mut moved: f64 = 0.0;
        let next: Vec<Complex64> = (0..m)
            .map(|i| {
                let w = (gamma[(2 * i) % m] - c).sqrt();
                if (w - gamma[i]).norm() <= (-w - gamma[i]).norm() {
                    w
                } else {
                    -w
                }
            })
            .collect();
        for (a, b) in gamma.iter().zip(&next) {
            moved = moved.max((a - b).norm());
        }
        gamma = next;
        if moved < 1e-14 {
            break;
        }
    }
    let mut winding = 0.0;
    for i in 0..m {
        let d = (gamma[(i + 1) % m] / gamma[i]).arg();
        winding += d;
    }
    if (winding / TAU).round() as i64 != 1 {
        return Err(Error::NotAGraph(format!(
            "boundary curve winds {:.3} times around the origin",
            winding / TAU
        )));
    }
    let mut polar: Vec<(f64, f64)> = gamma
        .iter()
        .map(|z| (z.arg().rem_euclid(TAU), z.norm()))
        .collect();
    polar.sort_by(|a, b| a.0.total_cmp(&b.0));
    let r: Vec<f64> = (0..n)
        .map(|j| {
            let phi = TAU * j as f64 / n as f64;
            let i = polar.partition_point(|p| p.0 < phi);
            let a = polar[i % m];
            let b = polar[(i + m - 1) % m];
            let da = (a.0 - phi).rem_euclid(TAU).min((phi - a.0).rem_euclid(TAU));
            let db = (b.0 - phi).rem_euclid(TAU).min((phi - b.0).rem_euclid(TAU));
            if da <= db {
                a.1
            } else {
                b.1
            }
        })
        .collect();
    let (first, second) = quotients(&r, true);
    Ok(SmoothnessReport {
        refinement: n,
        sup_abs: r.iter().copied().fold(0.0, f64::max),
        max_first_quotient: first,
        max_second_quotient: second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::BasicSetApprox;

    fn flat_row(grid: &BoxGrid, row: usize, uv: (usize, usize)) -> BasicSetApprox {
        let n = grid.subdivisions();
        let cells = (0..n).map(|i| grid.torus_cell(&[i, row])).collect();
        let mut s = BasicSetApprox::new(0, grid.set(cells));
        s.type_uv = Some(uv);
        s
    }

    #[test]
    fn product_graph_is_flat() {
        let f = Endomorphism::product(2, 0.1).unwrap();
        let grid = BoxGrid::new(Manifold::Torus(2), 32).unwrap();
        let r = attractor_smoothness(&f, &grid, &flat_row(&grid, 0, (1, 1)), 128).unwrap();
        assert_eq!(r.sup_abs, 0.0);
        assert_eq!(r.max_first_quotient, 0.0);
        assert_eq!(r.max_second_quotient, 0.0);
    }

    #[test]
    fn repeller_type_is_rejected() {
        let f = Endomorphism::product(2, 0.1).unwrap();
        let grid = BoxGrid::new(Manifold::Torus(2), 32).unwrap();
        let err = attractor_smoothness(&f, &grid, &flat_row(&grid, 16, (2, 0)), 128).unwrap_err();
        assert!(matches!(err, Error::TypePrecondition { got: Some((2, 0)), .. }));
    }

    #[test]
    fn split_column_is_not_a_graph() {
        let f = Endomorphism::product(2, 0.1).unwrap();
        let grid = BoxGrid::new(Manifold::Torus(2), 16).unwrap();
        let mut s = flat_row(&grid, 0, (1, 1));
        let mut cells = s.cells.cells().to_vec();
        cells.push(grid.torus_cell(&[3, 8]));
        s.cells = grid.set(cells);
        assert!(matches!(attractor_smoothness(&f, &grid, &s, 64), Err(Error::NotAGraph(_))));
    }

    #[test]
    fn unit_circle_is_smooth() {
        let f = Endomorphism::quadratic(Complex64::new(0.0, 0.0)).unwrap();
        let r = julia_polar_smoothness(&f, 256).unwrap();
        assert!((r.sup_abs - 1.0).abs() < 1e-9);
        assert!(r.max_first_quotient < 1e-6);
    }
}
