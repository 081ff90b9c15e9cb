use endohyp::spectral::*;
use endohyp::{Endomorphism, Manifold, Point};
use num_complex::Complex64;

struct Fixture {
    f: Endomorphism,
    grid: BoxGrid,
    graph: TransitionGraph,
    sets: Vec<BasicSetApprox>,
}

fn fixture(f: Endomorphism, n: usize) -> Fixture {
    let grid = BoxGrid::new(f.manifold(), n).unwrap();
    let graph = build_transition_graph(&f, &grid, DEFAULT_SAMPLES_PER_CELL).unwrap();
    let rec = chain_recurrent_cells(&graph);
    let sets = decompose_basic_sets(&graph, &rec, &SamplingOptions::default());
    Fixture { f, grid, graph, sets }
}

fn product(n: usize) -> Fixture {
    fixture(Endomorphism::product(2, 0.1).unwrap(), n)
}

fn cat() -> Endomorphism {
    Endomorphism::torus_linear(vec![vec![3, 1], vec![1, 1]]).unwrap()
}

fn quad(re: f64, im: f64) -> Endomorphism {
    Endomorphism::quadratic(Complex64::new(re, im)).unwrap()
}

fn set_of_type(fx: &Fixture, uv: (usize, usize)) -> &BasicSetApprox {
    fx.sets.iter().find(|s| s.type_uv == Some(uv)).unwrap()
}

/// Rows (second grid index) met by a set of a torus(2) grid.
fn rows(fx: &Fixture, s: &BasicSetApprox) -> Vec<usize> {
    let mut r: Vec<usize> = s.cells.cells().iter().map(|&c| fx.grid.torus_index(c)[1]).collect();
    r.sort_unstable();
    r.dedup();
    r
}

#[test]
fn every_sample_has_an_edge_to_its_image_cell() {
    for (f, n) in [(Endomorphism::product(2, 0.1).unwrap(), 32), (quad(0.2, 0.2), 16)] {
        let grid = BoxGrid::new(f.manifold(), n).unwrap();
        let t = build_transition_graph(&f, &grid, 8).unwrap();
        for c in grid.live_cells() {
            for s in grid.cell_samples(c, 8) {
                assert!(t.has_edge(c, grid.cell_of(&f.eval(&s))));
            }
        }
    }
}

#[test]
fn product_decomposes_into_two_circles() {
    let fx = product(64);
    assert_eq!(fx.sets.len(), 2);
    let att = set_of_type(&fx, (1, 1));
    let rep = set_of_type(&fx, (2, 0));
    let near = |r: usize, centre: f64| {
        let y = (r as f64 + 0.5) / 64.0;
        let d = (y - centre).abs();
        d.min(1.0 - d) < 3.0 / 64.0
    };
    assert!(rows(&fx, att).iter().all(|&r| near(r, 0.0)));
    assert!(rows(&fx, rep).iter().all(|&r| near(r, 0.5)));
    assert!(rows(&fx, att).contains(&0) && rows(&fx, rep).contains(&32));
    // every column is present in both rows
    assert_eq!(att.len() % 64, 0);
    assert_eq!(rep.len() % 64, 0);
}

#[test]
fn torus_is_one_basic_set() {
    let fx = fixture(cat(), 32);
    assert_eq!(fx.sets.len(), 1);
    assert_eq!(fx.sets[0].len(), 32 * 32);
    assert_eq!(fx.sets[0].type_uv, Some((1, 1)));
}

#[test]
fn quadratic_zero_has_three_classes() {
    let fx = fixture(quad(0.0, 0.0), 64);
    assert_eq!(fx.sets.len(), 3);
    let zero = fx.grid.cell_of(&Point::finite(Complex64::new(0.0, 0.0)));
    let inf = fx.grid.infinity_cell().unwrap();
    assert!(fx.sets.iter().any(|s| s.cells.contains(zero)));
    assert!(fx.sets.iter().any(|s| s.cells.contains(inf)));
    let circle = &fx.sets[0];
    assert_eq!(circle.type_uv, Some((2, 0)));
    for k in 0..32 {
        let z = Complex64::from_polar(1.0, k as f64 * 0.2);
        assert!(circle.contains_point(&fx.grid, &Point::finite(z)));
    }
}

#[test]
fn basic_sets_are_invariant_at_cell_scale() {
    let fx = product(64);
    for s in &fx.sets {
        let fat = fx.grid.fatten(&s.cells, 1);
        for &c in s.cells.cells() {
            for p in fx.grid.cell_samples(c, 4) {
                assert!(fat.contains(fx.grid.cell_of(&fx.f.eval(&p))));
            }
        }
    }
}

#[test]
fn refinement_only_removes_recurrent_cells() {
    let f = Endomorphism::product(2, 0.1).unwrap();
    let coarse = BoxGrid::new(f.manifold(), 32).unwrap();
    let fine = BoxGrid::new(f.manifold(), 64).unwrap();
    let rc = chain_recurrent_cells(&build_transition_graph(&f, &coarse, 16).unwrap());
    let rf = chain_recurrent_cells(&build_transition_graph(&f, &fine, 16).unwrap());
    for &c in rf.cells() {
        let idx = fine.torus_index(c);
        let parent = coarse.torus_cell(&[idx[0] / 2, idx[1] / 2]);
        assert!(rc.contains(parent), "fine cell {c} has no recurrent parent");
    }
}

#[test]
fn attractor_verdicts_on_product() {
    let fx = product(128);
    let att = set_of_type(&fx, (1, 1));
    let rep = set_of_type(&fx, (2, 0));
    let a = classify_attractor(&fx.f, &fx.grid, att, &[0.05], 24, 10, 0).unwrap();
    assert!(a.is_attractor());
    let r = classify_attractor(&fx.f, &fx.grid, rep, &DEFAULT_EPS_LIST, 24, 10, 0).unwrap();
    assert_eq!(r.verdict, Classification::Neither);
    assert!(r.trials.iter().all(|t| t.witness.is_some()));
}

#[test]
fn repeller_verdicts_and_coherence() {
    let fx = product(128);
    let att = set_of_type(&fx, (1, 1));
    let rep = set_of_type(&fx, (2, 0));
    assert!(classify_repeller(&fx.graph, rep, 2).repeller);
    let not = classify_repeller(&fx.graph, att, 3);
    assert!(!not.repeller);
    assert!(not.trials.iter().all(|t| !t.shrinks));
    for s in &fx.sets {
        let a = classify_attractor(&fx.f, &fx.grid, s, &DEFAULT_EPS_LIST, 24, 6, 1).unwrap();
        let r = classify_repeller(&fx.graph, s, 3);
        assert!(!(a.is_attractor() && r.repeller));
    }
}

#[test]
fn expansion_estimates_on_product() {
    let fx = product(128);
    let att = set_of_type(&fx, (1, 1));
    let rep = set_of_type(&fx, (2, 0));
    let m = verify_expanding_metric(&fx.f, &fx.grid, rep, 0.05, 2000, 0);
    assert!(m.expanding && m.mu.unwrap() > 1.5);
    let along = verify_expanding_metric(&fx.f, &fx.grid, att, 0.05, 2000, 0);
    assert!((along.mu.unwrap() - 2.0).abs() < 1e-3);
    let d = verify_expanding_derivative(&fx.f, &fx.grid, rep, 24, 16, 0).unwrap();
    let gp = 1.0 + 0.2 * std::f64::consts::PI;
    assert!((d.lambda - gp).abs() < 1e-3, "lambda {}", d.lambda);
}

#[test]
fn tripling_derivative_rate_is_exact() {
    let fx = fixture(Endomorphism::circle_mul(3).unwrap(), 64);
    let d = verify_expanding_derivative(&fx.f, &fx.grid, &fx.sets[0], 24, 16, 0).unwrap();
    assert!((d.lambda - 3.0).abs() < 1e-9);
    assert!((d.c - 1.0).abs() < 1e-9);
}

#[test]
fn injectivity_scales() {
    let fx = fixture(Endomorphism::circle_mul(2).unwrap(), 64);
    let s = injectivity_scale(&fx.f, &fx.grid, &fx.sets[0], 20, 0).unwrap();
    assert!((s - 0.5).abs() < 1e-12);
    let fx = fixture(cat(), 32);
    let s = injectivity_scale(&fx.f, &fx.grid, &fx.sets[0], 20, 0).unwrap();
    assert!((s - 0.5f64.sqrt()).abs() < 1e-9);
    let fx = fixture(quad(0.0, 0.0), 64);
    let s = injectivity_scale(&fx.f, &fx.grid, &fx.sets[0], 20, 0).unwrap();
    assert!((s - 2.0).abs() < 1e-3);
}

#[test]
fn preimage_purity() {
    let fx = product(64);
    assert!(check_preimage_purity(&fx.f, &fx.grid, set_of_type(&fx, (1, 1)), 3, 0).pure);
    let fx = fixture(Endomorphism::circle_mul(2).unwrap(), 64);
    assert!(check_preimage_purity(&fx.f, &fx.grid, &fx.sets[0], 3, 0).pure);
    let fx = fixture(quad(0.0, 0.0), 64);
    assert!(check_preimage_purity(&fx.f, &fx.grid, &fx.sets[0], 3, 0).pure);

    // the doubling two-cycle {1/3, 2/3} has preimages 1/6 and 5/6 a sixth away
    let f = Endomorphism::circle_mul(2).unwrap();
    let grid = BoxGrid::new(Manifold::Torus(1), 64).unwrap();
    let cycle = BasicSetApprox::new(0, grid.set(vec![21, 42]));
    assert!(check_preimage_purity(&f, &grid, &cycle, 8, 0).pure);
    let r = check_preimage_purity(&f, &grid, &cycle, 12, 0);
    let w = r.witness.unwrap().coords()[0];
    assert!((w - 1.0 / 6.0).abs() < 0.02 || (w - 5.0 / 6.0).abs() < 0.02, "witness {w}");
}

#[test]
fn omega_limits() {
    let fx = product(64);
    let att = fx.sets.iter().position(|s| s.type_uv == Some((1, 1))).unwrap();
    let rep = fx.sets.iter().position(|s| s.type_uv == Some((2, 0))).unwrap();
    let p = Point::on_torus(&[0.2, 0.1]).unwrap();
    assert_eq!(omega_limit(&fx.f, &fx.grid, &p, &fx.sets, 100, 1000).unwrap(), att);
    let q = Point::on_torus(&[0.2, 0.5]).unwrap();
    assert_eq!(omega_limit(&fx.f, &fx.grid, &q, &fx.sets, 100, 1000).unwrap(), rep);
    let fx = fixture(cat(), 16);
    let r = Point::on_torus(&[0.37, 0.81]).unwrap();
    assert_eq!(omega_limit(&fx.f, &fx.grid, &r, &fx.sets, 10, 200).unwrap(), 0);
}

#[test]
fn omega_limit_needs_a_budget() {
    let fx = product(64);
    let p = Point::on_torus(&[0.2, 0.3]).unwrap();
    assert!(matches!(
        omega_limit(&fx.f, &fx.grid, &p, &fx.sets, 0, 10),
        Err(endohyp::Error::NonconvergentAtBudget { .. })
    ));
}

#[test]
fn uniform_margins() {
    let grid = BoxGrid::new(Manifold::Torus(2), 128).unwrap();
    let centre = Point::on_torus(&[0.5, 0.5]).unwrap();
    let ball = grid.set(
        grid.live_cells()
            .into_iter()
            .filter(|&c| grid.cell_center(c).dist(&centre) < 0.2)
            .collect(),
    );
    let m = uniform_margin(&[centre], &ball, &grid).unwrap();
    assert!((m - 0.2).abs() < grid.cell_diameter());

    let slab = grid.set(
        grid.live_cells()
            .into_iter()
            .filter(|&c| {
                let y = grid.cell_center(c).coords()[1];
                y.min(1.0 - y) < 0.1
            })
            .collect(),
    );
    let k: Vec<Point> = (0..1000).map(|i| Point::on_torus(&[i as f64 / 1000.0, 0.0]).unwrap()).collect();
    let m = uniform_margin(&k, &slab, &grid).unwrap();
    // cells with center within 0.1 of the row reach 13/128 on both sides
    assert!((m - 13.0 / 128.0).abs() < 1e-12, "margin {m}");

    let edge = Point::on_torus(&[0.3, 0.099]).unwrap();
    assert!(uniform_margin(&[edge], &slab, &grid).unwrap() < grid.cell_diameter());
    let outside = Point::on_torus(&[0.3, 0.4]).unwrap();
    assert!(uniform_margin(&[outside], &slab, &grid).is_err());
}

#[test]
fn axiom_a_gate() {
    let fx = product(64);
    let r = verify_axiom_a(&fx.graph, &fx.sets, 8, &SamplingOptions::default());
    assert!(r.no_singular_points && r.density_fraction >= 0.99 && r.axiom_a);

    let fx = fixture(Endomorphism::circle_mul(2).unwrap(), 64);
    let r = verify_axiom_a(&fx.graph, &fx.sets, 8, &SamplingOptions::default());
    assert_eq!(r.density_fraction, 1.0);
    assert!(r.axiom_a);

    let fx = fixture(quad(0.0, 0.0), 64);
    let r = verify_axiom_a(&fx.graph, &fx.sets, 4, &SamplingOptions::default());
    assert!(!r.no_singular_points && !r.axiom_a);
    assert_eq!(r.singular_points_in_omega.len(), 2);
}

#[test]
fn density_grows_with_period() {
    let fx = product(64);
    let lo = verify_axiom_a(&fx.graph, &fx.sets, 2, &SamplingOptions::default()).density_fraction;
    let hi = verify_axiom_a(&fx.graph, &fx.sets, 6, &SamplingOptions::default()).density_fraction;
    assert!(lo < hi);
}

#[test]
fn expanding_disks_fill_balls() {
    let fx = product(128);
    let rep = set_of_type(&fx, (2, 0));
    let eps = 0.1;
    for b in in_set_branches(&fx.f, &fx.grid, &rep.cells, 10, 24, 3) {
        let cover = unstable_disk_coverage(&fx.f, &fx.grid, &b, eps, eps / 4.0, 1600).unwrap();
        assert!(cover > 0.95, "coverage {cover}");
    }
}

#[test]
fn smoothness_of_graphs() {
    let fx = fixture(Endomorphism::forced_circle(2, 0.1, 0.02).unwrap(), 128);
    let att = set_of_type(&fx, (1, 1));
    let coarse = attractor_smoothness(&fx.f, &fx.grid, att, 128).unwrap();
    let fine = attractor_smoothness(&fx.f, &fx.grid, att, 1024).unwrap();
    assert!(coarse.sup_abs > 0.0 && coarse.sup_abs <= 0.05);
    assert!(coarse.max_first_quotient <= 0.5 && fine.max_first_quotient <= 0.5);
    let rep = set_of_type(&fx, (2, 0));
    assert!(matches!(
        attractor_smoothness(&fx.f, &fx.grid, rep, 128),
        Err(endohyp::Error::TypePrecondition { .. })
    ));
}

#[test]
fn quasicircle_quotients_blow_up() {
    let f = quad(0.2, 0.2);
    let coarse = julia_polar_smoothness(&f, 128).unwrap();
    let fine = julia_polar_smoothness(&f, 1024).unwrap();
    assert!(fine.max_first_quotient > 3.0 * coarse.max_first_quotient);
}

#[test]
fn classification_is_deterministic() {
    let fx = product(64);
    let s = &fx.sets[1];
    let a = classify_attractor(&fx.f, &fx.grid, s, &DEFAULT_EPS_LIST, 24, 4, 9).unwrap();
    let b = classify_attractor(&fx.f, &fx.grid, s, &DEFAULT_EPS_LIST, 24, 4, 9).unwrap();
    assert_eq!(a, b);
}
