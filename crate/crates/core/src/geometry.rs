//! Points, tangent vectors and metrics on the flat torus and the Riemann sphere.
//!
//! Torus points are stored reduced into `[0, 1)^d`. Sphere points are either a
//! finite complex number or the point at infinity, which carries its own flag.
//! Tangent vectors at finite sphere points use the `z` chart; at infinity they
//! use the `w = 1/z` chart.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Manifold {
    Torus(usize),
    Sphere,
}

impl Manifold {
    pub fn torus(d: usize) -> Result<Self> {
        if (1..=3).contains(&d) {
            Ok(Manifold::Torus(d))
        } else {
            Err(Error::InvalidArgument(format!(
                "torus dimension must be 1, 2 or 3, got {d}"
            )))
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Manifold::Torus(d) => d,
            Manifold::Sphere => 2,
        }
    }

    pub fn is_torus(self) -> bool {
        matches!(self, Manifold::Torus(_))
    }
}

/// Reduce a real number into `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 || r == 0.0 {
        // `r == 0.0` also normalizes negative zero
        0.0
    } else {
        r
    }
}

/// `1/z` without overflow in the intermediate modulus.
pub fn robust_inv(z: Complex64) -> Complex64 {
    let s = z.re.abs().max(z.im.abs());
    if s == 0.0 || !s.is_finite() {
        return z.inv();
    }
    let w = z / s;
    w.conj() / (w.norm_sqr() * s)
}

/// Signed minimal-image difference `b - a` on the unit circle.
#[inline]
pub fn circle_delta(a: f64, b: f64) -> f64 {
    let d = b - a;
    d - d.round()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    manifold: Manifold,
    coords: [f64; 3],
    infinite: bool,
}

impl Point {
    /// Torus point from raw coordinates, reduced mod 1.
    pub fn on_torus(coords: &[f64]) -> Result<Point> {
        let m = Manifold::torus(coords.len())?;
        wrap(coords, m)
    }

    pub fn finite(z: Complex64) -> Point {
        Point {
            manifold: Manifold::Sphere,
            coords: [z.re, z.im, 0.0],
            infinite: false,
        }
    }

    pub fn infinity() -> Point {
        Point {
            manifold: Manifold::Sphere,
            coords: [0.0; 3],
            infinite: true,
        }
    }

    /// Sphere point from a complex value; non-finite values become infinity.
    pub fn from_complex(z: Complex64) -> Point {
        if z.re.is_finite() && z.im.is_finite() {
            Point::finite(z)
        } else {
            Point::infinity()
        }
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    /// Chart coordinates. Empty slice for the point at infinity.
    pub fn coords(&self) -> &[f64] {
        if self.infinite {
            &self.coords[..0]
        } else {
            &self.coords[..self.manifold.dim()]
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.infinite
    }

    /// Complex value of a finite sphere point.
    pub fn z(&self) -> Option<Complex64> {
        match (self.manifold, self.infinite) {
            (Manifold::Sphere, false) => Some(Complex64::new(self.coords[0], self.coords[1])),
            _ => None,
        }
    }

    /// Sphere point expressed in its preferred chart: `(false, z)` when
    /// `|z| <= 1`, `(true, 1/z)` otherwise (infinity gives `(true, 0)`).
    fn sphere_chart(&self) -> (bool, Complex64) {
        if self.infinite {
            return (true, Complex64::new(0.0, 0.0));
        }
        let z = Complex64::new(self.coords[0], self.coords[1]);
        if z.norm_sqr() <= 1.0 {
            (false, z)
        } else {
            (true, robust_inv(z))
        }
    }

    /// Distance to another point on the same manifold (unchecked).
    pub fn dist(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.manifold, other.manifold);
        match self.manifold {
            Manifold::Torus(d) => {
                let mut s = 0.0;
                for i in 0..d {
                    let di = (self.coords[i] - other.coords[i]).abs();
                    let m = di.min(1.0 - di);
                    s += m * m;
                }
                s.sqrt()
            }
            Manifold::Sphere => {
                let (pa, a) = self.sphere_chart();
                let (pb, b) = other.sphere_chart();
                let den = ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt();
                let num = if pa == pb { (a - b).norm() } else { (a * b - 1.0).norm() };
                2.0 * num / den
            }
        }
    }

    /// Coordinate-wise comparison with a tolerance, for tests and matching.
    pub fn approx_eq(&self, other: &Point, tol: f64) -> bool {
        self.manifold == other.manifold && self.dist(other) <= tol
    }

    /// Lexicographic order on chart coordinates; infinity sorts last.
    pub fn total_cmp(&self, other: &Point) -> Ordering {
        match (self.infinite, other.infinite) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => {
                for (a, b) in self.coords().iter().zip(other.coords()) {
                    let c = a.total_cmp(b);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                Ordering::Equal
            }
        }
    }

    /// Chart displacement from `self` to `other`, in the tangent chart at `self`.
    pub fn displacement_to(&self, other: &Point) -> [f64; 3] {
        let mut out = [0.0; 3];
        match self.manifold {
            Manifold::Torus(d) => {
                for (i, o) in out.iter_mut().enumerate().take(d) {
                    *o = circle_delta(self.coords[i], other.coords[i]);
                }
            }
            Manifold::Sphere => {
                let dz = match (self.infinite, other.infinite) {
                    (true, true) => Complex64::new(0.0, 0.0),
                    (true, false) => robust_inv(other.z().unwrap()),
                    (false, true) => Complex64::new(f64::INFINITY, f64::INFINITY),
                    (false, false) => other.z().unwrap() - self.z().unwrap(),
                };
                out[0] = dz.re;
                out[1] = dz.im;
            }
        }
        out
    }

    /// Move by a chart displacement. Inverse of `displacement_to` up to rounding.
    pub fn translate(&self, v: &[f64]) -> Point {
        match self.manifold {
            Manifold::Torus(d) => {
                let mut c = [0.0; 3];
                for i in 0..d {
                    c[i] = wrap_unit(self.coords[i] + v[i]);
                }
                Point {
                    manifold: self.manifold,
                    coords: c,
                    infinite: false,
                }
            }
            Manifold::Sphere => {
                let dv = Complex64::new(v[0], v[1]);
                if self.infinite {
                    if dv.norm_sqr() == 0.0 {
                        Point::infinity()
                    } else {
                        Point::from_complex(robust_inv(dv))
                    }
                } else {
                    Point::from_complex(self.z().unwrap() + dv)
                }
            }
        }
    }

    /// Ratio between the Riemannian norm and the Euclidean chart norm at this point.
    pub fn conformal_factor(&self) -> f64 {
        match self.manifold {
            Manifold::Torus(_) => 1.0,
            Manifold::Sphere => {
                if self.infinite {
                    2.0
                } else {
                    2.0 / (1.0 + self.z().unwrap().norm_sqr())
                }
            }
        }
    }
}

/// Reduce coordinates into `[0, 1)` on a torus.
pub fn wrap(coords: &[f64], m: Manifold) -> Result<Point> {
    match m {
        Manifold::Sphere => Err(Error::NotATorus(m)),
        Manifold::Torus(d) => {
            if coords.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: coords.len(),
                });
            }
            let mut c = [0.0; 3];
            for (ci, &x) in c.iter_mut().zip(coords) {
                *ci = wrap_unit(x);
            }
            Ok(Point {
                manifold: m,
                coords: c,
                infinite: false,
            })
        }
    }
}

/// Flat wrap-around distance on tori, chordal distance on the sphere.
pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    if p.manifold != q.manifold {
        return Err(Error::ManifoldMismatch(p.manifold, q.manifold));
    }
    Ok(p.dist(q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    components: [f64; 3],
}

impl TangentVector {
    pub fn new(base: Point, components: &[f64]) -> Result<Self> {
        let d = base.dim();
        if components.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: components.len(),
            });
        }
        let mut c = [0.0; 3];
        c[..d].copy_from_slice(components);
        Ok(TangentVector {
            base,
            components: c,
        })
    }

    pub fn components(&self) -> &[f64] {
        &self.components[..self.base.dim()]
    }

    pub fn norm(&self) -> f64 {
        let e: f64 = self.components().iter().map(|c| c * c).sum::<f64>().sqrt();
        self.base.conformal_factor() * e
    }
}

pub fn norm(v: &TangentVector) -> f64 {
    v.norm()
}
