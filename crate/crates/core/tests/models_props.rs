use endohyp::{Endomorphism, Point};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn zoo() -> Vec<Endomorphism> {
    vec![
        Endomorphism::circle_mul(2).unwrap(),
        Endomorphism::circle_mul(-3).unwrap(),
        Endomorphism::torus_linear(vec![vec![3, 1], vec![1, 1]]).unwrap(),
        Endomorphism::torus_linear(vec![vec![2, 1, 0], vec![0, 2, 1], vec![1, 0, 2]]).unwrap(),
        Endomorphism::product(2, 0.1).unwrap(),
        Endomorphism::forced_circle(2, 0.1, 0.02).unwrap(),
        Endomorphism::quadratic(Complex64::new(0.2, 0.2)).unwrap(),
    ]
}

fn point_for(f: &Endomorphism, u: &[f64; 3]) -> Point {
    if f.manifold().is_torus() {
        Point::on_torus(&u[..f.dim()]).unwrap()
    } else {
        Point::finite(Complex64::new(4.0 * u[0] - 2.0, 4.0 * u[1] - 2.0))
    }
}

/// Central differences in the chart, unwrapped on the torus.
fn fd_jacobian(f: &Endomorphism, p: &Point) -> DMatrix<f64> {
    let d = f.dim();
    let h = 1e-6;
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut e = [0.0; 3];
        e[j] = h;
        let plus = f.eval(&p.translate(&e[..d]));
        e[j] = -h;
        let minus = f.eval(&p.translate(&e[..d]));
        let diff = minus.displacement_to(&plus);
        for i in 0..d {
            m[(i, j)] = diff[i] / (2.0 * h);
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preimages_map_back(u in prop::array::uniform3(0.0f64..1.0)) {
        for f in zoo() {
            let q = point_for(&f, &u);
            let pre = f.preimages(&q);
            prop_assert_eq!(pre.len(), f.degree(), "{}", f.label());
            for p in &pre {
                prop_assert!(f.eval(p).dist(&q) < 1e-9, "{} at {:?}", f.label(), p);
            }
            for w in pre.windows(2) {
                prop_assert!(w[0].dist(&w[1]) > 1e-9);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(u in prop::array::uniform3(0.05f64..0.95)) {
        for f in zoo() {
            let p = point_for(&f, &u);
            let exact = f.jac(&p);
            let approx = fd_jacobian(&f, &p);
            let scale = 1.0 + exact.norm();
            prop_assert!((exact - approx).norm() < 1e-6 * scale, "{}", f.label());
        }
    }

    #[test]
    fn orbit_is_iteration(u in prop::array::uniform3(0.0f64..1.0), n in 0usize..20) {
        for f in zoo() {
            let p = point_for(&f, &u);
            let orbit = f.orbit(&p, n);
            prop_assert_eq!(orbit.len(), n + 1);
            prop_assert_eq!(orbit[n], f.iterate(&p, n));
            for w in orbit.windows(2) {
                prop_assert_eq!(f.eval(&w[0]), w[1]);
            }
        }
    }
}

#[test]
fn quadratic_critical_value_has_one_preimage() {
    let c = Complex64::new(0.2, 0.2);
    let f = Endomorphism::quadratic(c).unwrap();
    let pre = f.preimages(&Point::finite(c));
    assert_eq!(pre.len(), 1);
    assert!(pre[0].z().unwrap().norm() < 1e-15);
    assert_eq!(f.preimages(&Point::infinity()), vec![Point::infinity()]);
}
