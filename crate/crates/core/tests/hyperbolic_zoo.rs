//! Splitting and adapted-norm properties on in-set branches of every typed
//! basic set of the zoo.

use endohyp::hyperbolic::{adapted_norm, estimate_splitting, verify_hyperbolic, DEFAULT_FWD, DEFAULT_NORM_DEPTH};
use endohyp::natural_extension::{search_branch_within_seeded, shift_forward};
use endohyp::spectral::*;
use endohyp::{BackwardBranch, Endomorphism};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Sample {
    label: String,
    f: Endomorphism,
    cells: CellSet,
    grid: BoxGrid,
    branches: Vec<BackwardBranch>,
}

fn zoo_samples(count: usize) -> Vec<Sample> {
    let models = [
        Endomorphism::circle_mul(3).unwrap(),
        Endomorphism::torus_linear(vec![vec![3, 1], vec![1, 1]]).unwrap(),
        Endomorphism::product(2, 0.1).unwrap(),
        Endomorphism::forced_circle(2, 0.1, 0.02).unwrap(),
        Endomorphism::quadratic(Complex64::new(0.0, 0.0)).unwrap(),
        Endomorphism::quadratic(Complex64::new(0.2, 0.2)).unwrap(),
    ];
    let mut out = Vec::new();
    for f in models {
        let grid = BoxGrid::new(f.manifold(), 64).unwrap();
        let t = build_transition_graph(&f, &grid, DEFAULT_SAMPLES_PER_CELL).unwrap();
        let sets = decompose_basic_sets(&t, &chain_recurrent_cells(&t), &SamplingOptions::default());
        for s in sets.into_iter().filter(|s| s.type_uv.is_some()) {
            let branches = in_set_branches(&f, &grid, &s.cells, count, 32, 5);
            assert_eq!(branches.len(), count, "{} set {}", f.label(), s.id);
            out.push(Sample {
                label: format!("{} set {} {:?}", f.label(), s.id, s.type_uv),
                f: f.clone(),
                cells: s.cells,
                grid: grid.clone(),
                branches,
            });
        }
    }
    out
}

/// Largest sine of a principal angle between two subspaces of equal dimension.
fn subspace_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 {
        return 0.0;
    }
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let residual = &qa - &qb * (qb.transpose() * &qa);
    residual.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[test]
fn derivative_carries_the_splitting_along_branches() {
    for s in zoo_samples(100) {
        for b in &s.branches {
            let here = estimate_splitting(&s.f, b, DEFAULT_FWD).unwrap();
            let there = estimate_splitting(&s.f, &shift_forward(&s.f, b), DEFAULT_FWD).unwrap();
            assert_eq!(here.dims, there.dims, "{}", s.label);
            let j = s.f.jac(b.head());
            let gu = subspace_gap(&(&j * here.eu_matrix()), there.eu_matrix());
            let gs = subspace_gap(&(&j * here.es_matrix()), there.es_matrix());
            assert!(gu < 1e-4 && gs < 1e-4, "{}: unstable {gu:e} stable {gs:e}", s.label);
        }
    }
}

#[test]
fn stable_subspace_does_not_depend_on_the_branch() {
    let mut compared = 0;
    for s in zoo_samples(20) {
        let member = |p: &endohyp::Point| s.cells.contains(s.grid.cell_of(p));
        for b in &s.branches {
            let x = b.head();
            let other = (1..16u64)
                .filter_map(|seed| search_branch_within_seeded(&s.f, x, 32, member, 4096, Some(seed)))
                .find(|o| o != b);
            let Some(other) = other else { continue };
            let one = estimate_splitting(&s.f, b, DEFAULT_FWD).unwrap();
            let two = estimate_splitting(&s.f, &other, DEFAULT_FWD).unwrap();
            assert!(subspace_gap(one.es_matrix(), two.es_matrix()) < 1e-6, "{}", s.label);
            compared += 1;
        }
    }
    assert!(compared >= 50, "only {compared} branch pairs");
}

#[test]
fn adapted_norm_is_equivalent_to_the_background_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in zoo_samples(50) {
        let norm = adapted_norm(&s.f, &s.branches, None, DEFAULT_NORM_DEPTH).unwrap();
        let k = norm.equivalence;
        assert!(k.is_finite() && k >= 1.0, "{}: K = {k}", s.label);
        let d = s.f.dim();
        for i in 0..10_000 {
            let b = &s.branches[i % s.branches.len()];
            let site = norm.site(b).unwrap();
            let v = nalgebra::DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            if v.norm() < 1e-3 {
                continue;
            }
            let r = site.norm(&v) / site.background_norm(&v);
            assert!(r <= k * (1.0 + 1e-9) && r >= 1.0 / k * (1.0 - 1e-9), "{}: ratio {r}, K {k}", s.label);
        }
    }
}

#[test]
fn one_step_rates_are_separated() {
    for s in zoo_samples(24) {
        let est = verify_hyperbolic(&s.f, &s.branches, 12).unwrap();
        let gap = match est.min_unstable_step {
            Some(u) if est.max_stable_step > 0.0 => u / est.max_stable_step,
            _ => f64::INFINITY,
        };
        assert!(gap > 1.5, "{}: gap {gap}", s.label);
    }
}
