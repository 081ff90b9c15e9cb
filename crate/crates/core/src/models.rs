//! The model zoo: expanding circle maps, linear torus endomorphisms, quadratic
//! maps of the sphere, and skew products over the doubling-type circle maps.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{robust_inv, wrap_unit, Manifold, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    CircleMul { k: i64 },
    TorusLinear { matrix: Vec<Vec<i64>> },
    Quadratic { c: Complex64 },
    Product { k: i64, amplitude: f64 },
    ForcedCircle { k: i64, amplitude: f64, kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    pub base: Point,
    pub entries: DMatrix<f64>,
}

#[derive(Debug, Clone)]
struct TorusData {
    a: DMatrix<f64>,
    inv: DMatrix<f64>,
    det: i64,
    offsets: Vec<[f64; 3]>,
}

/// A validated model together with cached inverse data.
#[derive(Debug, Clone)]
pub struct Endomorphism {
    model: Model,
    manifold: Manifold,
    torus: Option<TorusData>,
}

/// Beyond this modulus the quadratic map is evaluated in the `1/z` chart.
const FAR: f64 = 1e8;

impl Endomorphism {
    pub fn new(model: Model) -> Result<Self> {
        match &model {
            Model::CircleMul { k } => {
                check_k(*k)?;
                Ok(Endomorphism {
                    model,
                    manifold: Manifold::Torus(1),
                    torus: None,
                })
            }
            Model::TorusLinear { matrix } => {
                let data = torus_data(matrix)?;
                Ok(Endomorphism {
                    manifold: Manifold::Torus(matrix.len()),
                    model,
                    torus: Some(data),
                })
            }
            Model::Quadratic { c } => {
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(Error::InvalidModel("c must be finite".into()));
                }
                Ok(Endomorphism {
                    model,
                    manifold: Manifold::Sphere,
                    torus: None,
                })
            }
            Model::Product { k, amplitude } => {
                check_k(*k)?;
                check_amplitude(*amplitude)?;
                Ok(Endomorphism {
                    model,
                    manifold: Manifold::Torus(2),
                    torus: None,
                })
            }
            Model::ForcedCircle {
                k,
                amplitude,
                kappa,
            } => {
                check_k(*k)?;
                check_amplitude(*amplitude)?;
                let margin = (1.0 - g_prime(*amplitude, 0.0)) / 2.0;
                if !kappa.is_finite() || TAU * kappa.abs() >= margin {
                    return Err(Error::InvalidModel(format!(
                        "forcing kappa = {kappa} violates 2*pi*|kappa| < {margin:.6}"
                    )));
                }
                Ok(Endomorphism {
                    model,
                    manifold: Manifold::Torus(2),
                    torus: None,
                })
            }
        }
    }

    pub fn circle_mul(k: i64) -> Result<Self> {
        Self::new(Model::CircleMul { k })
    }

    pub fn torus_linear(matrix: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(Model::TorusLinear { matrix })
    }

    pub fn quadratic(c: Complex64) -> Result<Self> {
        Self::new(Model::Quadratic { c })
    }

    pub fn product(k: i64, amplitude: f64) -> Result<Self> {
        Self::new(Model::Product { k, amplitude })
    }

    pub fn forced_circle(k: i64, amplitude: f64, kappa: f64) -> Result<Self> {
        Self::new(Model::ForcedCircle {
            k,
            amplitude,
            kappa,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn degree(&self) -> usize {
        match &self.model {
            Model::CircleMul { k } | Model::Product { k, .. } | Model::ForcedCircle { k, .. } => {
                k.unsigned_abs() as usize
            }
            Model::TorusLinear { .. } => self.torus.as_ref().unwrap().det.unsigned_abs() as usize,
            Model::Quadratic { .. } => 2,
        }
    }

    /// Points where the differential drops rank, when the model has any.
    pub fn singular_points(&self) -> Vec<Point> {
        match self.model {
            Model::Quadratic { .. } => vec![Point::finite(Complex64::new(0.0, 0.0)), Point::infinity()],
            _ => Vec::new(),
        }
    }

    pub fn eval(&self, p: &Point) -> Point {
        debug_assert_eq!(p.manifold(), self.manifold);
        match &self.model {
            Model::CircleMul { k } => torus_point(&[*k as f64 * p.coords()[0]]),
            Model::TorusLinear { .. } => {
                let a = &self.torus.as_ref().unwrap().a;
                let c = p.coords();
                let d = c.len();
                let mut out = [0.0; 3];
                for (i, o) in out.iter_mut().enumerate().take(d) {
                    *o = (0..d).map(|j| a[(i, j)] * c[j]).sum();
                }
                torus_point(&out[..d])
            }
            Model::Quadratic { c } => quadratic_eval(*c, p),
            Model::Product { k, amplitude } => {
                let c = p.coords();
                torus_point(&[*k as f64 * c[0], g(*amplitude, c[1])])
            }
            Model::ForcedCircle {
                k,
                amplitude,
                kappa,
            } => {
                let c = p.coords();
                torus_point(&[
                    *k as f64 * c[0],
                    g(*amplitude, c[1]) + kappa * (TAU * c[0]).sin(),
                ])
            }
        }
    }

    /// `n` forward iterates, starting with `p` itself (length `n + 1`).
    pub fn orbit(&self, p: &Point, n: usize) -> Vec<Point> {
        let mut out = Vec::with_capacity(n + 1);
        let mut x = *p;
        out.push(x);
        for _ in 0..n {
            x = self.eval(&x);
            out.push(x);
        }
        out
    }

    pub fn iterate(&self, p: &Point, n: usize) -> Point {
        let mut x = *p;
        for _ in 0..n {
            x = self.eval(&x);
        }
        x
    }

    /// Chart Jacobian. At infinity the `1/z` chart is used on both sides.
    pub fn jac(&self, p: &Point) -> DMatrix<f64> {
        match &self.model {
            Model::CircleMul { k } => DMatrix::from_element(1, 1, *k as f64),
            Model::TorusLinear { .. } => self.torus.as_ref().unwrap().a.clone(),
            Model::Quadratic { .. } => match p.z() {
                None => DMatrix::zeros(2, 2),
                Some(z) => {
                    let d = 2.0 * z;
                    DMatrix::from_row_slice(2, 2, &[d.re, -d.im, d.im, d.re])
                }
            },
            Model::Product { k, amplitude } => {
                let c = p.coords();
                DMatrix::from_row_slice(2, 2, &[*k as f64, 0.0, 0.0, g_prime(*amplitude, c[1])])
            }
            Model::ForcedCircle {
                k,
                amplitude,
                kappa,
            } => {
                let c = p.coords();
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        *k as f64,
                        0.0,
                        TAU * kappa * (TAU * c[0]).cos(),
                        g_prime(*amplitude, c[1]),
                    ],
                )
            }
        }
    }

    pub fn jacobian(&self, p: &Point) -> JacobianMatrix {
        JacobianMatrix {
            base: *p,
            entries: self.jac(p),
        }
    }

    pub fn is_regular(&self, p: &Point) -> bool {
        self.jac(p).determinant().abs() > 1e-12
    }

    /// The full preimage set of `q`, sorted lexicographically.
    pub fn preimages(&self, q: &Point) -> Vec<Point> {
        let mut out = match &self.model {
            Model::CircleMul { k } => {
                let kf = *k as f64;
                (0..k.abs())
                    .map(|j| torus_point(&[(q.coords()[0] + j as f64) / kf]))
                    .collect()
            }
            Model::TorusLinear { .. } => {
                let t = self.torus.as_ref().unwrap();
                let c = q.coords();
                let d = c.len();
                let mut base = [0.0; 3];
                for (i, b) in base.iter_mut().enumerate().take(d) {
                    *b = (0..d).map(|j| t.inv[(i, j)] * c[j]).sum();
                }
                t.offsets
                    .iter()
                    .map(|off| {
                        let mut x = [0.0; 3];
                        for i in 0..d {
                            x[i] = base[i] + off[i];
                        }
                        torus_point(&x[..d])
                    })
                    .collect()
            }
            Model::Quadratic { c } => match q.z() {
                None => vec![Point::infinity()],
                Some(w) => {
                    let s = (w - c).sqrt();
                    if s.norm_sqr() == 0.0 {
                        vec![Point::finite(Complex64::new(0.0, 0.0))]
                    } else {
                        vec![Point::from_complex(s), Point::from_complex(-s)]
                    }
                }
            },
            Model::Product { k, amplitude } => {
                skew_preimages(*k, *amplitude, 0.0, q.coords()[0], q.coords()[1])
            }
            Model::ForcedCircle {
                k,
                amplitude,
                kappa,
            } => skew_preimages(*k, *amplitude, *kappa, q.coords()[0], q.coords()[1]),
        };
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup_by(|a, b| a == b);
        out
    }

    /// Inverse of the Jacobian, `None` at singular points.
    pub fn jac_inverse(&self, p: &Point) -> Option<DMatrix<f64>> {
        let j = self.jac(p);
        if j.determinant().abs() <= 1e-12 {
            return None;
        }
        j.try_inverse()
    }

    /// The integer matrix of a linear torus model.
    pub fn integer_matrix(&self) -> Option<&Vec<Vec<i64>>> {
        match &self.model {
            Model::TorusLinear { matrix } => Some(matrix),
            _ => None,
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.model {
            Model::CircleMul { k } => format!("circle_mul(k={k})"),
            Model::TorusLinear { matrix } => format!("torus_linear({matrix:?})"),
            Model::Quadratic { c } => format!("quadratic(c={}{:+}i)", c.re, c.im),
            Model::Product { k, amplitude } => format!("product(k={k}, a={amplitude})"),
            Model::ForcedCircle {
                k,
                amplitude,
                kappa,
            } => format!("forced_circle(k={k}, a={amplitude}, kappa={kappa})"),
        }
    }
}

fn check_k(k: i64) -> Result<()> {
    if k.abs() < 2 {
        return Err(Error::InvalidModel(format!("need |k| >= 2, got {k}")));
    }
    Ok(())
}

fn check_amplitude(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0 / TAU) {
        return Err(Error::InvalidModel(format!(
            "amplitude must lie in (0, 1/(2 pi)), got {a}"
        )));
    }
    Ok(())
}

fn torus_point(c: &[f64]) -> Point {
    let mut w = [0.0; 3];
    for (o, x) in w.iter_mut().zip(c) {
        *o = wrap_unit(*x);
    }
    Point::on_torus(&w[..c.len()]).expect("dimension checked by the model")
}

/// The Morse–Smale circle diffeomorphism `y - a sin(2 pi y)` as a real lift.
#[inline]
pub fn g(a: f64, y: f64) -> f64 {
    y - a * (TAU * y).sin()
}

#[inline]
pub fn g_prime(a: f64, y: f64) -> f64 {
    1.0 - TAU * a * (TAU * y).cos()
}

/// Real-lift inverse of `g`: the unique `y` with `g(y) = t`.
pub fn g_inv(a: f64, t: f64) -> f64 {
    let (mut lo, mut hi) = (t - a, t + a);
    let mut y = t;
    for _ in 0..80 {
        let r = g(a, y) - t;
        if r == 0.0 {
            return y;
        }
        if r > 0.0 {
            hi = hi.min(y);
        } else {
            lo = lo.max(y);
        }
        let mut next = y - r / g_prime(a, y);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-17 * (1.0 + y.abs()) {
            return next;
        }
        y = next;
    }
    y
}

fn skew_preimages(k: i64, a: f64, kappa: f64, p: f64, q: f64) -> Vec<Point> {
    let kf = k as f64;
    (0..k.abs())
        .map(|j| {
            let x = wrap_unit((p + j as f64) / kf);
            let t = q - kappa * (TAU * x).sin();
            torus_point(&[x, g_inv(a, t)])
        })
        .collect()
}

fn quadratic_eval(c: Complex64, p: &Point) -> Point {
    let Some(z) = p.z() else {
        return Point::infinity();
    };
    if z.norm() > FAR {
        let w = robust_inv(z);
        let w2 = w * w;
        let out = w2 / (1.0 + c * w2);
        if out.norm_sqr() == 0.0 {
            Point::infinity()
        } else {
            Point::from_complex(robust_inv(out))
        }
    } else {
        Point::from_complex(z * z + c)
    }
}

fn torus_data(matrix: &[Vec<i64>]) -> Result<TorusData> {
    let d = matrix.len();
    if !(1..=3).contains(&d) || matrix.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidModel(format!(
            "matrix must be square of size 1..3, got {matrix:?}"
        )));
    }
    let m: Vec<Vec<i128>> = matrix
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let det = int_det(&m);
    if det == 0 {
        return Err(Error::InvalidModel("matrix is singular".into()));
    }
    let a = DMatrix::from_fn(d, d, |i, j| matrix[i][j] as f64);
    for ev in a.complex_eigenvalues().iter() {
        if (1.0 - ev.norm()).abs() <= 1e-9 {
            return Err(Error::InvalidModel(format!(
                "eigenvalue {ev} lies on the unit circle"
            )));
        }
    }
    let inv = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidModel("matrix not invertible".into()))?;
    let det64 = i64::try_from(det).map_err(|_| Error::InvalidModel("determinant overflow".into()))?;
    Ok(TorusData {
        a,
        inv,
        det: det64,
        offsets: lattice_solutions(&m),
    })
}

/// Determinant of a small integer matrix.
pub fn int_det(m: &[Vec<i128>]) -> i128 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("dimension is at most 3"),
    }
}

fn int_adjugate(m: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let d = m.len();
    if d == 1 {
        return vec![vec![1]];
    }
    let mut adj = vec![vec![0i128; d]; d];
    for i in 0..d {
        for j in 0..d {
            let minor: Vec<Vec<i128>> = (0..d)
                .filter(|&r| r != j)
                .map(|r| (0..d).filter(|&c| c != i).map(|c| m[r][c]).collect())
                .collect();
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            adj[i][j] = sign * int_det(&minor);
        }
    }
    adj
}

/// Representatives of `Z^d / M Z^d`, read off the lower-triangular Hermite
/// form of `M` (column operations).
pub fn lattice_cosets(m: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let d = m.len();
    let mut h: Vec<Vec<i128>> = m.to_vec();
    for i in 0..d {
        // clear row i to the right of the diagonal with Euclid on columns
        loop {
            let mut pivot = None;
            for j in i..d {
                if h[i][j] != 0 && pivot.is_none_or(|p: usize| h[i][j].abs() < h[i][p].abs()) {
                    pivot = Some(j);
                }
            }
            let p = pivot.expect("matrix is nonsingular");
            if p != i {
                for row in h.iter_mut() {
                    row.swap(i, p);
                }
            }
            let mut done = true;
            for j in (i + 1)..d {
                if h[i][j] != 0 {
                    let q = h[i][j].div_euclid(h[i][i]);
                    for row in h.iter_mut() {
                        row[j] -= q * row[i];
                    }
                    if h[i][j] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if h[i][i] < 0 {
            for row in h.iter_mut() {
                row[i] = -row[i];
            }
        }
    }
    let diag: Vec<i128> = (0..d).map(|i| h[i][i]).collect();
    let mut reps = vec![vec![]];
    for &n in &diag {
        let mut next = Vec::with_capacity(reps.len() * n as usize);
        for r in &reps {
            for v in 0..n {
                let mut e = r.clone();
                e.push(v);
                next.push(e);
            }
        }
        reps = next;
    }
    reps
}

/// All solutions of `M x = 0 (mod Z^d)` in `[0,1)^d`, computed exactly.
pub fn lattice_solutions(m: &[Vec<i128>]) -> Vec<[f64; 3]> {
    let d = m.len();
    let det = int_det(m);
    let adj = int_adjugate(m);
    let (sign, den) = (det.signum(), det.abs());
    lattice_cosets(m)
        .into_iter()
        .map(|r| {
            let mut x = [0.0; 3];
            for (i, xi) in x.iter_mut().enumerate().take(d) {
                let num: i128 = (0..d).map(|j| adj[i][j] * r[j]).sum::<i128>() * sign;
                *xi = num.rem_euclid(den) as f64 / den as f64;
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> Endomorphism {
        Endomorphism::torus_linear(vec![vec![3, 1], vec![1, 1]]).unwrap()
    }

    fn t(c: &[f64]) -> Point {
        Point::on_torus(c).unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = Endomorphism::circle_mul(2).unwrap();
        assert!((f.eval(&t(&[0.3])).coords()[0] - 0.6).abs() < 1e-15);
        assert_eq!(cat().eval(&t(&[0.5, 0.5])).coords(), &[0.0, 0.0]);
        let q = Endomorphism::quadratic(Complex64::new(0.0, 0.0)).unwrap();
        let z = q.eval(&Point::finite(Complex64::new(0.0, 2.0))).z().unwrap();
        assert_eq!(z, Complex64::new(-4.0, 0.0));
        assert!(q.eval(&Point::infinity()).is_infinite());
    }

    #[test]
    fn quadratic_far_chart_sends_huge_values_to_infinity() {
        let q = Endomorphism::quadratic(Complex64::new(0.2, 0.2)).unwrap();
        let mut p = Point::finite(Complex64::new(1e9, 1e9));
        for _ in 0..12 {
            p = q.eval(&p);
        }
        assert!(p.is_infinite());
    }

    #[test]
    fn jacobian_examples() {
        let f = Endomorphism::circle_mul(2).unwrap();
        assert_eq!(f.jac(&t(&[0.7]))[(0, 0)], 2.0);
        assert_eq!(cat().jac(&t(&[0.1, 0.4])), DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 1.0]));
        let q = Endomorphism::quadratic(Complex64::new(0.0, 0.0)).unwrap();
        let j = q.jac(&Point::finite(Complex64::new(1.0, 1.0)));
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[2.0, -2.0, 2.0, 2.0]));
    }

    #[test]
    fn preimage_examples() {
        let f = Endomorphism::circle_mul(2).unwrap();
        let pre = f.preimages(&t(&[0.5]));
        assert_eq!(pre.len(), 2);
        assert_eq!(pre[0].coords(), &[0.25]);
        assert_eq!(pre[1].coords(), &[0.75]);
        let q = Endomorphism::quadratic(Complex64::new(0.0, 0.0)).unwrap();
        let pre = q.preimages(&Point::finite(Complex64::new(-4.0, 0.0)));
        assert_eq!(pre.len(), 2);
        assert!(pre[0].approx_eq(&Point::finite(Complex64::new(0.0, -2.0)), 1e-15));
        assert!(pre[1].approx_eq(&Point::finite(Complex64::new(0.0, 2.0)), 1e-15));
        // critical value has a single preimage
        assert_eq!(q.preimages(&Point::finite(Complex64::new(0.0, 0.0))).len(), 1);
    }

    /// Brute-force oracle: `A^{-1}(q + k)` over a box of integer shifts, deduplicated mod 1.
    fn brute_preimages(a: &[[f64; 2]; 2], q: [f64; 2]) -> Vec<[f64; 2]> {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
        let mut out: Vec<[f64; 2]> = Vec::new();
        for k0 in -4..=4 {
            for k1 in -4..=4 {
                let v = [q[0] + k0 as f64, q[1] + k1 as f64];
                let x = [
                    wrap_unit(inv[0][0] * v[0] + inv[0][1] * v[1]),
                    wrap_unit(inv[1][0] * v[0] + inv[1][1] * v[1]),
                ];
                let fresh = out.iter().all(|y| {
                    let dx = (x[0] - y[0]).abs();
                    let dy = (x[1] - y[1]).abs();
                    dx.min(1.0 - dx) + dy.min(1.0 - dy) > 1e-9
                });
                if fresh {
                    out.push(x);
                }
            }
        }
        out
    }

    #[test]
    fn torus_preimages_match_brute_force() {
        let f = cat();
        for q in [[0.1, 0.7], [0.0, 0.0], [0.93, 0.31]] {
            let ours = f.preimages(&t(&q));
            let oracle = brute_preimages(&[[3.0, 1.0], [1.0, 1.0]], q);
            assert_eq!(ours.len(), 2);
            assert_eq!(oracle.len(), 2);
            for o in &oracle {
                assert!(ours.iter().any(|p| p.approx_eq(&t(o), 1e-12)));
            }
        }
    }

    #[test]
    fn hermite_cosets_count_and_distinct() {
        let m = vec![vec![4, 1, 0], vec![2, 3, 1], vec![0, 1, 2]];
        let det = int_det(&m).abs();
        let sols = lattice_solutions(&m);
        assert_eq!(sols.len() as i128, det);
        for (i, a) in sols.iter().enumerate() {
            // each is a genuine solution
            for row in &m {
                let v: f64 = (0..3).map(|j| row[j] as f64 * a[j]).sum();
                assert!((v - v.round()).abs() < 1e-12);
            }
            for b in &sols[i + 1..] {
                assert!(a != b);
            }
        }
    }

    #[test]
    fn regularity() {
        assert!(Endomorphism::circle_mul(2).unwrap().is_regular(&t(&[0.4])));
        let q = Endomorphism::quadratic(Complex64::new(0.0, 0.0)).unwrap();
        assert!(!q.is_regular(&Point::finite(Complex64::new(0.0, 0.0))));
        assert!(!q.is_regular(&Point::infinity()));
        let p = Endomorphism::product(2, 0.1).unwrap();
        assert!(p.is_regular(&t(&[0.3, 0.0])));
    }

    #[test]
    fn degrees() {
        assert_eq!(Endomorphism::circle_mul(3).unwrap().degree(), 3);
        assert_eq!(cat().degree(), 2);
        assert_eq!(Endomorphism::product(2, 0.1).unwrap().degree(), 2);
    }

    #[test]
    fn eigenvalue_gate() {
        assert!(Endomorphism::torus_linear(vec![vec![1, 1], vec![0, 1]]).is_err());
        assert!(Endomorphism::torus_linear(vec![vec![0, 1], vec![-1, 0]]).is_err());
        assert!(Endomorphism::torus_linear(vec![vec![1, 2], vec![2, 4]]).is_err());
        let a = cat().jac(&t(&[0.0, 0.0]));
        let mut ev: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        assert!((ev[0] - (2.0 - 2f64.sqrt())).abs() < 1e-12);
        assert!((ev[1] - (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn parameter_gates() {
        assert!(Endomorphism::circle_mul(1).is_err());
        assert!(Endomorphism::product(2, 0.2).is_err());
        assert!(Endomorphism::forced_circle(2, 0.1, 0.06).is_err());
        assert!(Endomorphism::forced_circle(2, 0.1, 0.02).is_ok());
    }

    #[test]
    fn morse_smale_fixed_points() {
        let a = 0.1;
        assert!((g_prime(a, 0.0) - (1.0 - 0.2 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((g_prime(a, 0.5) - (1.0 + 0.2 * std::f64::consts::PI)).abs() < 1e-15);
        assert_eq!(g_inv(a, 0.0), 0.0);
        for t in [-0.3, 0.01, 0.49, 0.77] {
            assert!((g(a, g_inv(a, t)) - t).abs() < 1e-15);
        }
    }
}
