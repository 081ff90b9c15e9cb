use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_unit, Point};
use crate::models::{g, lattice_solutions, Endomorphism, Model};

/// Largest number of periodic points enumerated in one call.
pub const DEFAULT_POINT_CAP: usize = 1 << 20;
/// Periods above this use iteration of inverse branches and report partial sets.
pub const QUADRATIC_EXACT_PERIOD: usize = 4;
pub const MAX_SEARCH_PERIOD: usize = 8;
const FIXED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPointSet {
    pub period: usize,
    pub points: Vec<Point>,
    /// False when the enumeration is known to be partial.
    pub complete: bool,
}

fn over_cap(needed: u128, cap: usize) -> Result<()> {
    if needed > cap as u128 {
        Err(Error::BudgetExceeded { needed, budget: cap })
    } else {
        Ok(())
    }
}

/// All points with `f^period(x) = x`, each checked by direct iteration.
pub fn periodic_points(f: &Endomorphism, period: usize) -> Result<PeriodicPointSet> {
    periodic_points_with_cap(f, period, DEFAULT_POINT_CAP)
}

pub fn periodic_points_with_cap(f: &Endomorphism, period: usize, cap: usize) -> Result<PeriodicPointSet> {
    if period == 0 {
        return Err(Error::InvalidArgument("period must be >= 1".into()));
    }
    let (mut points, complete) = match f.model() {
        Model::CircleMul { k } => {
            let n = circle_count(*k, period)?;
            over_cap(n as u128, cap)?;
            let pts = (0..n)
                .map(|j| Point::on_torus(&[j as f64 / n as f64]))
                .collect::<Result<Vec<_>>>()?;
            (pts, true)
        }
        Model::TorusLinear { matrix } => (torus_points(matrix, period, cap)?, true),
        Model::Product { k, amplitude } => (skew_points(*k, *amplitude, 0.0, period, cap)?, true),
        Model::ForcedCircle { k, amplitude, kappa } => {
            (skew_points(*k, *amplitude, *kappa, period, cap)?, true)
        }
        Model::Quadratic { c } => quadratic_points(*c, period)?,
    };
    points.retain(|p| f.iterate(p, period).dist(p) <= FIXED_TOL);
    points.sort_by(|a, b| a.total_cmp(b));
    points.dedup_by(|a, b| a.dist(b) <= FIXED_TOL);
    Ok(PeriodicPointSet {
        period,
        points,
        complete,
    })
}

fn circle_count(k: i64, p: usize) -> Result<u64> {
    let kp = (k as i128)
        .checked_pow(p as u32)
        .ok_or(Error::BudgetExceeded { needed: u128::MAX, budget: 0 })?;
    Ok((kp - 1).unsigned_abs() as u64)
}

fn torus_points(matrix: &[Vec<i64>], p: usize, cap: usize) -> Result<Vec<Point>> {
    let d = matrix.len();
    let a: Vec<Vec<i128>> = matrix.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut m = identity(d);
    for _ in 0..p {
        m = mat_mul(&m, &a)?;
    }
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= 1;
    }
    let det = crate::models::int_det(&m).unsigned_abs();
    over_cap(det, cap)?;
    lattice_solutions(&m)
        .into_iter()
        .map(|s| Point::on_torus(&s[..d]))
        .collect()
}

fn identity(d: usize) -> Vec<Vec<i128>> {
    (0..d)
        .map(|i| (0..d).map(|j| i128::from(i == j)).collect())
        .collect()
}

fn mat_mul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Result<Vec<Vec<i128>>> {
    let d = a.len();
    let mut out = vec![vec![0i128; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut s: i128 = 0;
            for k in 0..d {
                s = a[i][k]
                    .checked_mul(b[k][j])
                    .and_then(|v| s.checked_add(v))
                    .ok_or(Error::BudgetExceeded { needed: u128::MAX, budget: 0 })?;
            }
            out[i][j] = s;
        }
    }
    Ok(out)
}

const SCAN: usize = 4096;

/// Skew products `(k x, g(y) + kappa sin 2 pi x)`: the base coordinate is
/// periodic in closed form; the fibre coordinate solves a scalar equation on the
/// lift, found by sign changes on a scan followed by bisection.
fn skew_points(k: i64, a: f64, kappa: f64, p: usize, cap: usize) -> Result<Vec<Point>> {
    let n = circle_count(k, p)?;
    over_cap(2 * n as u128, cap)?;
    let shift_bound = (p as f64 * (a + kappa.abs())).ceil() as i64;
    let mut out = Vec::new();
    for j in 0..n {
        let x0 = j as f64 / n as f64;
        let mut xs = Vec::with_capacity(p);
        let mut x = x0;
        for _ in 0..p {
            xs.push(x);
            x = wrap_unit(k as f64 * x);
        }
        let lift = |y: f64| -> f64 {
            xs.iter().fold(y, |y, &xi| {
                g(a, y) + kappa * (2.0 * std::f64::consts::PI * xi).sin()
            })
        };
        for m in -shift_bound..=shift_bound {
            let d = |y: f64| lift(y) - y - m as f64;
            for y in scalar_roots(&d) {
                out.push(Point::on_torus(&[x0, wrap_unit(y)])?);
            }
        }
    }
    Ok(out)
}

fn scalar_roots(d: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let ys: Vec<f64> = (0..=SCAN).map(|i| i as f64 / SCAN as f64).collect();
    let vals: Vec<f64> = ys.iter().map(|&y| d(y)).collect();
    for i in 0..SCAN {
        if vals[i] == 0.0 {
            roots.push(ys[i]);
        } else if vals[i + 1] != 0.0 && vals[i].signum() != vals[i + 1].signum() {
            let (mut lo, mut hi) = (ys[i], ys[i + 1]);
            let slo = vals[i].signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let v = d(mid);
                if v == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if v.signum() == slo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots
}

fn quadratic_points(c: Complex64, p: usize) -> Result<(Vec<Point>, bool)> {
    let mut pts = vec![Point::infinity()];
    if p <= QUADRATIC_EXACT_PERIOD {
        // coefficients of f^p(z) - z, lowest degree first
        let mut poly = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        for _ in 0..p {
            poly = poly_mul(&poly, &poly);
            poly[0] += c;
        }
        poly[1] -= 1.0;
        for z in aberth(&poly) {
            pts.push(Point::finite(newton_polish(c, p, z)));
        }
        Ok((pts, true))
    } else if p <= MAX_SEARCH_PERIOD {
        // repelling cycles by iterating the composed inverse branches along each itinerary
        let beta = 0.5 + (0.25 - c).sqrt();
        for word in 0..1usize << p {
            let mut z = beta;
            for _ in 0..200 {
                for bit in (0..p).rev() {
                    let w = (z - c).sqrt();
                    z = if (word >> bit) & 1 == 1 { -w } else { w };
                }
            }
            pts.push(Point::finite(z));
        }
        Ok((pts, false))
    } else {
        Err(Error::InvalidArgument(format!(
            "quadratic periodic search supports periods up to {MAX_SEARCH_PERIOD}"
        )))
    }
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(p: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    for &a in p.iter().rev() {
        dv = dv * z + v;
        v = v * z + a;
    }
    (v, dv)
}

/// Simultaneous root finding (Aberth-Ehrlich) for a monic-leading polynomial.
fn aberth(p: &[Complex64]) -> Vec<Complex64> {
    let n = p.len() - 1;
    let lead = p[n];
    let p: Vec<Complex64> = p.iter().map(|a| a / lead).collect();
    let radius = 1.0 + p[..n].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (i as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let (v, dv) = poly_eval(&p, z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / dv;
            let s: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Newton on `f^p(z) - z` using the orbit derivative.
fn newton_polish(c: Complex64, p: usize, mut z: Complex64) -> Complex64 {
    for _ in 0..8 {
        let mut w = z;
        let mut dw = Complex64::new(1.0, 0.0);
        for _ in 0..p {
            dw *= 2.0 * w;
            w = w * w + c;
        }
        let denom = dw - 1.0;
        if denom.norm() < 1e-14 {
            break;
        }
        let step = (w - z) / denom;
        z -= step;
        if step.norm() < 1e-16 {
            break;
        }
    }
    z
}
