//! Stable/unstable splittings along backward branches, hyperbolicity constants
//! and an adapted (Lyapunov) norm.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, TangentVector};
use crate::models::Endomorphism;
use crate::natural_extension::{shift_forward, BackwardBranch};

pub const DEFAULT_DEPTH: usize = 24;
pub const DEFAULT_FWD: usize = 24;
pub const DEFAULT_HORIZON: usize = 16;
pub const DEFAULT_NORM_DEPTH: usize = 12;

/// Estimated `E^s (+) E^u` at the head of a branch.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub base: Point,
    pub branch: BackwardBranch,
    pub eu: Vec<TangentVector>,
    pub es: Vec<TangentVector>,
    pub dims: (usize, usize),
    /// Asymptotic per-step growth of the pushed-forward frame, most expanding first.
    pub unstable_rates: Vec<f64>,
    /// Asymptotic per-step singular values of the forward product, most contracting last.
    pub forward_rates: Vec<f64>,
    eu_mat: DMatrix<f64>,
    es_mat: DMatrix<f64>,
    basis_inv: DMatrix<f64>,
}

impl Splitting {
    /// Chart-orthonormal basis of `E^u` as columns.
    pub fn eu_matrix(&self) -> &DMatrix<f64> {
        &self.eu_mat
    }

    pub fn es_matrix(&self) -> &DMatrix<f64> {
        &self.es_mat
    }

    /// Split a chart vector into its `(stable, unstable)` components.
    pub fn decompose(&self, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (u, s) = self.dims;
        let c = &self.basis_inv * v;
        let vu = &self.eu_mat * c.rows(0, u);
        let vs = &self.es_mat * c.rows(u, s);
        (vs, vu)
    }

    /// Project each column onto `E^s` along `E^u`.
    pub fn project_stable(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let (u, s) = self.dims;
        let c = &self.basis_inv * w;
        &self.es_mat * c.rows(u, s)
    }

    pub fn project_unstable(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let (u, _) = self.dims;
        let c = &self.basis_inv * w;
        &self.eu_mat * c.rows(0, u)
    }
}

/// A fixed, generic orthonormal starting frame.
fn start_frame(d: usize) -> DMatrix<f64> {
    let rot = |a: f64, i: usize, j: usize| {
        let mut r = DMatrix::identity(d, d);
        r[(i, i)] = a.cos();
        r[(j, j)] = a.cos();
        r[(i, j)] = -a.sin();
        r[(j, i)] = a.sin();
        r
    };
    match d {
        1 => DMatrix::identity(1, 1),
        2 => rot(0.7, 0, 1),
        _ => rot(0.7, 0, 1) * rot(0.4, 0, 2) * rot(1.1, 1, 2),
    }
}

fn qr_step(m: DMatrix<f64>, logs: &mut [f64]) -> DMatrix<f64> {
    let qr = m.qr();
    let r = qr.r();
    for (j, l) in logs.iter_mut().enumerate() {
        *l += r[(j, j)].abs().ln();
    }
    qr.q()
}

fn to_tangents(base: &Point, m: &DMatrix<f64>) -> Vec<TangentVector> {
    let phi = base.conformal_factor();
    m.column_iter()
        .map(|c| {
            let comps: Vec<f64> = c.iter().map(|x| x / phi).collect();
            TangentVector::new(*base, &comps).expect("dimension matches")
        })
        .collect()
}

/// Orthonormal frame at `x0` ordered from most expanded to most contracted by
/// `Df^fwd`, with the per-step singular-value rates. Computed by pulling a frame
/// back through the transposed forward chain.
fn forward_frame(f: &Endomorphism, x0: &Point, fwd: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let d = f.dim();
    let orbit = f.orbit(x0, fwd);
    let mut jacs = Vec::with_capacity(fwd);
    for (k, p) in orbit[..fwd].iter().enumerate() {
        if k > 0 && !f.is_regular(p) {
            return Err(Error::SingularPointOnOrbit { step: k });
        }
        jacs.push(f.jac(p));
    }
    let mut logs = vec![0.0; d];
    let mut p = start_frame(d);
    for j in jacs.iter().rev() {
        p = qr_step(j.transpose() * p, &mut logs);
    }
    let corr = (orbit[fwd].conformal_factor().ln() - x0.conformal_factor().ln()) / fwd as f64;
    let rates = logs.iter().map(|l| (l / fwd as f64 + corr).exp()).collect();
    Ok((p, rates))
}

/// Chart-orthonormal basis (as columns) of the directions contracted by the
/// forward dynamics at `x`. This depends only on the forward orbit.
pub fn stable_subspace(f: &Endomorphism, x: &Point, fwd: usize) -> Result<DMatrix<f64>> {
    if !f.is_regular(x) {
        return Err(Error::SingularPointOnOrbit { step: 0 });
    }
    let (p, rates) = forward_frame(f, x, fwd.max(1))?;
    let s = rates.iter().filter(|&&r| r < 1.0).count();
    Ok(p.columns(f.dim() - s, s).into_owned())
}

pub fn estimate_splitting(f: &Endomorphism, b: &BackwardBranch, fwd: usize) -> Result<Splitting> {
    let n = b.depth();
    if n == 0 || fwd == 0 {
        return Err(Error::InvalidArgument(
            "splitting needs branch depth >= 1 and fwd >= 1".into(),
        ));
    }
    for (i, p) in b.points().iter().enumerate() {
        if !f.is_regular(p) {
            return Err(Error::SingularPointOnBranch { level: i });
        }
    }
    let d = f.dim();
    let x0 = *b.head();

    // unstable: push a frame forward from x_{-N}
    let mut logs = vec![0.0; d];
    let mut q = start_frame(d);
    for i in (1..=n).rev() {
        q = qr_step(f.jac(b.at(i)) * q, &mut logs);
    }
    let corr = (x0.conformal_factor().ln() - b.at(n).conformal_factor().ln()) / n as f64;
    let unstable_rates: Vec<f64> = logs.iter().map(|l| (l / n as f64 + corr).exp()).collect();
    let u = unstable_rates.iter().filter(|&&r| r > 1.0).count();

    let (p, forward_rates) = forward_frame(f, &x0, fwd)?;
    let s = forward_rates.iter().filter(|&&r| r < 1.0).count();

    if u + s != d {
        return Err(Error::DegenerateSplitting(format!(
            "dimensions ({u}, {s}) do not add up to {d}; unstable rates {unstable_rates:?}, forward rates {forward_rates:?}"
        )));
    }
    let eu_mat = q.columns(0, u).into_owned();
    let es_mat = p.columns(d - s, s).into_owned();
    let mut basis = DMatrix::zeros(d, d);
    basis.columns_mut(0, u).copy_from(&eu_mat);
    basis.columns_mut(u, s).copy_from(&es_mat);
    let gram = (basis.transpose() * &basis).determinant();
    if gram <= 1e-8 {
        return Err(Error::DegenerateSplitting(format!(
            "Gram determinant {gram:e} of the splitting basis"
        )));
    }
    let basis_inv = basis
        .try_inverse()
        .ok_or_else(|| Error::DegenerateSplitting("basis not invertible".into()))?;
    Ok(Splitting {
        base: x0,
        branch: b.clone(),
        eu: to_tangents(&x0, &eu_mat),
        es: to_tangents(&x0, &es_mat),
        dims: (u, s),
        unstable_rates,
        forward_rates,
        eu_mat,
        es_mat,
        basis_inv,
    })
}

/// Largest and smallest singular values of a matrix with at least one column.
pub(crate) fn singular_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (min, max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityEstimate {
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda: f64,
    pub sample_count: usize,
    pub worst_violation: f64,
    pub hyperbolic: bool,
    /// Smallest per-step expansion of `E^u` over the samples (`None` if `u = 0`).
    pub min_unstable_step: Option<f64>,
    /// Largest per-step contraction factor of `E^s` (zero if `s = 0`).
    pub max_stable_step: f64,
}

/// Metric growth factors of the stable and unstable frames for `k = 0..=horizon`.
fn frame_ratios(
    f: &Endomorphism,
    b: &BackwardBranch,
    horizon: usize,
    fwd: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let sp = estimate_splitting(f, b, fwd)?;
    let (u, s) = sp.dims;
    let phi0 = b.head().conformal_factor();
    let mut ws = sp.es_mat.clone();
    let mut wu = sp.eu_mat.clone();
    let mut branch = b.clone();
    let mut rs = vec![1.0];
    let mut ru = vec![1.0];
    for _ in 1..=horizon {
        let j = f.jac(branch.head());
        branch = shift_forward(f, &branch);
        let phik = branch.head().conformal_factor() / phi0;
        if s > 0 {
            let next = estimate_splitting(f, &branch, fwd)?;
            ws = next.project_stable(&(&j * &ws));
            rs.push(singular_extremes(&ws).1 * phik);
        }
        if u > 0 {
            wu = &j * &wu;
            ru.push(singular_extremes(&wu).0 * phik);
        }
    }
    if s == 0 {
        rs.clear();
    }
    if u == 0 {
        ru.clear();
    }
    Ok((rs, ru))
}

/// Fit `C` and `lambda` of the hyperbolicity inequalities over sampled branches.
pub fn verify_hyperbolic(
    f: &Endomorphism,
    samples: &[BackwardBranch],
    horizon: usize,
) -> Result<HyperbolicityEstimate> {
    verify_hyperbolic_with(f, samples, horizon, DEFAULT_FWD)
}

pub fn verify_hyperbolic_with(
    f: &Endomorphism,
    samples: &[BackwardBranch],
    horizon: usize,
    fwd: usize,
) -> Result<HyperbolicityEstimate> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no sample branches".into()));
    }
    let ratios: Vec<(Vec<f64>, Vec<f64>)> = samples
        .iter()
        .map(|b| frame_ratios(f, b, horizon, fwd))
        .collect::<Result<_>>()?;
    let h = horizon as f64;
    let mut lambda: f64 = 0.0;
    let mut min_u = f64::INFINITY;
    let mut max_s: f64 = 0.0;
    for (rs, ru) in &ratios {
        if let Some(&r) = rs.get(horizon) {
            let step = r.powf(1.0 / h);
            lambda = lambda.max(step);
            max_s = max_s.max(step);
        }
        if let Some(&r) = ru.get(horizon) {
            let step = r.powf(1.0 / h);
            lambda = lambda.max(1.0 / step);
            min_u = min_u.min(step);
        }
    }
    let mut c: f64 = 1.0;
    for (rs, ru) in &ratios {
        for (k, r) in rs.iter().enumerate() {
            c = c.max(r / lambda.powi(k as i32));
        }
        for (k, r) in ru.iter().enumerate() {
            c = c.max(lambda.powi(-(k as i32)) / r);
        }
    }
    let hyperbolic = lambda < 1.0 && lambda > 0.0;
    let worst_violation = if hyperbolic {
        let mut w = f64::NEG_INFINITY;
        for (rs, ru) in &ratios {
            for (k, r) in rs.iter().enumerate() {
                w = w.max(r / lambda.powi(k as i32) - c);
            }
            for (k, r) in ru.iter().enumerate() {
                w = w.max(lambda.powi(-(k as i32)) / r - c);
            }
        }
        w
    } else {
        lambda - 1.0
    };
    Ok(HyperbolicityEstimate {
        c,
        lambda,
        sample_count: samples.len(),
        worst_violation,
        hyperbolic,
        min_unstable_step: min_u.is_finite().then_some(min_u),
        max_stable_step: max_s,
    })
}

/// A Lyapunov norm built from finite forward sums on `E^s` and backward sums on `E^u`.
#[derive(Debug, Clone)]
pub struct AdaptedNorm {
    f: Endomorphism,
    pub lambda_star: f64,
    pub m: usize,
    pub fwd: usize,
    /// Equivalence constant with the background norm over the construction samples.
    pub equivalence: f64,
}

/// Everything needed to evaluate the adapted norm at the head of one branch.
#[derive(Debug, Clone)]
pub struct NormSite {
    pub splitting: Splitting,
    forward: Vec<(DMatrix<f64>, f64)>,
    backward: Vec<(DMatrix<f64>, f64)>,
    lambda_star: f64,
}

impl NormSite {
    fn stable_terms(&self, v: &DVector<f64>) -> Vec<f64> {
        let mut w = v.clone();
        let mut out = Vec::with_capacity(self.forward.len());
        for (j, (jac, phi)) in self.forward.iter().enumerate() {
            out.push(self.lambda_star.powi(-2 * j as i32) * (phi * w.norm()).powi(2));
            w = jac * w;
        }
        out
    }

    fn unstable_terms(&self, v: &DVector<f64>) -> Vec<f64> {
        let mut w = v.clone();
        let mut out = Vec::with_capacity(self.backward.len());
        for (j, (inv, phi)) in self.backward.iter().enumerate() {
            out.push(self.lambda_star.powi(-2 * j as i32) * (phi * w.norm()).powi(2));
            w = inv * w;
        }
        out
    }

    /// Adapted norm of a chart vector at this site.
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        let (vs, vu) = self.splitting.decompose(v);
        let s: f64 = self.stable_terms(&vs).iter().sum();
        let u: f64 = self.unstable_terms(&vu).iter().sum();
        (s + u).sqrt()
    }

    /// Exact range of `norm / background_norm` over all nonzero vectors. The
    /// squared adapted norm is a quadratic form, recovered here by polarization.
    pub fn ratio_bounds(&self) -> (f64, f64) {
        let d = self.splitting.base.dim();
        let e = |i: usize| DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 });
        let sq = |v: &DVector<f64>| self.norm(v).powi(2);
        let diag: Vec<f64> = (0..d).map(|i| sq(&e(i))).collect();
        let gram = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                diag[i]
            } else {
                0.5 * (sq(&(e(i) + e(j))) - diag[i] - diag[j])
            }
        });
        let eig = gram.symmetric_eigenvalues();
        let scale = self.splitting.base.conformal_factor();
        let lo = eig.min().max(0.0).sqrt() / scale;
        let hi = eig.max().max(0.0).sqrt() / scale;
        (lo, hi)
    }

    /// Background Riemannian norm of a chart vector at this site.
    pub fn background_norm(&self, v: &DVector<f64>) -> f64 {
        self.splitting.base.conformal_factor() * v.norm()
    }
}

impl AdaptedNorm {
    pub fn site(&self, b: &BackwardBranch) -> Result<NormSite> {
        make_site(&self.f, b, self.lambda_star, self.m, self.fwd)
    }

    pub fn norm_at(&self, v: &TangentVector, b: &BackwardBranch) -> Result<f64> {
        let site = self.site(b)?;
        Ok(site.norm(&DVector::from_column_slice(v.components())))
    }

    /// Worst one-step ratios at the head of `b` over the given directions.
    ///
    /// Returns `(max stable ratio, min unstable ratio)` of the adapted norm;
    /// the inequalities hold when the first is `<= lambda_star` and the second
    /// is `>= 1 / lambda_star`.
    pub fn one_step(&self, b: &BackwardBranch, directions: usize) -> Result<(f64, f64)> {
        let here = self.site(b)?;
        let there = self.site(&shift_forward(&self.f, b))?;
        let jac = self.f.jac(b.head());
        let (u, s) = here.splitting.dims;
        let mut worst_s: f64 = 0.0;
        let mut worst_u = f64::INFINITY;
        for t in 0..directions.max(1) {
            if s > 0 {
                let c = direction_coeffs(s, t, directions);
                let v = here.splitting.es_matrix() * c;
                let (img, _) = there.splitting.decompose(&(&jac * &v));
                worst_s = worst_s.max(there.norm(&img) / here.norm(&v));
            }
            if u > 0 {
                let c = direction_coeffs(u, t, directions);
                let v = here.splitting.eu_matrix() * c;
                let (_, img) = there.splitting.decompose(&(&jac * &v));
                worst_u = worst_u.min(there.norm(&img) / here.norm(&v));
            }
        }
        Ok((worst_s, worst_u))
    }
}

/// Deterministic unit coefficient vectors spread over the sphere of directions.
fn direction_coeffs(k: usize, t: usize, total: usize) -> DVector<f64> {
    let a = std::f64::consts::PI * (t as f64 + 0.5) / total.max(1) as f64;
    let b = 2.399_963_229_728_653 * t as f64;
    match k {
        1 => DVector::from_element(1, 1.0),
        2 => DVector::from_column_slice(&[a.cos(), a.sin()]),
        _ => DVector::from_column_slice(&[a.cos(), a.sin() * b.cos(), a.sin() * b.sin()]),
    }
}

fn make_site(
    f: &Endomorphism,
    b: &BackwardBranch,
    lambda_star: f64,
    m: usize,
    fwd: usize,
) -> Result<NormSite> {
    if b.depth() < m.max(1) {
        return Err(Error::InvalidArgument(format!(
            "branch depth {} below norm depth {m}",
            b.depth()
        )));
    }
    let splitting = estimate_splitting(f, b, fwd)?;
    let orbit = f.orbit(b.head(), m);
    let forward = orbit
        .iter()
        .map(|p| (f.jac(p), p.conformal_factor()))
        .collect();
    let mut backward = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let inv = if j < m {
            f.jac_inverse(b.at(j + 1))
                .ok_or(Error::SingularPointOnBranch { level: j + 1 })?
        } else {
            DMatrix::zeros(f.dim(), f.dim())
        };
        backward.push((inv, b.at(j).conformal_factor()));
    }
    Ok(NormSite {
        splitting,
        forward,
        backward,
        lambda_star,
    })
}

/// Build the adapted norm. With `lambda_star = None` the midpoint between the
/// fitted hyperbolicity rate and 1 is used.
pub fn adapted_norm(
    f: &Endomorphism,
    sites: &[BackwardBranch],
    lambda_star: Option<f64>,
    m: usize,
) -> Result<AdaptedNorm> {
    let lambda_star = match lambda_star {
        Some(l) => l,
        None => {
            let est = verify_hyperbolic(f, sites, DEFAULT_HORIZON)?;
            0.5 * (est.lambda + 1.0)
        }
    };
    if !(lambda_star > 0.0 && lambda_star < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda_star must lie in (0, 1), got {lambda_star}"
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for b in sites {
        let site = make_site(f, b, lambda_star, m, DEFAULT_FWD)?;
        let (u, s) = site.splitting.dims;
        for t in 0..8 {
            if s > 0 {
                let v = site.splitting.es_matrix() * direction_coeffs(s, t, 8);
                let terms = site.stable_terms(&v);
                if terms[m] > terms[0] {
                    return Err(Error::DivergentSum { lambda_star });
                }
            }
            if u > 0 {
                let v = site.splitting.eu_matrix() * direction_coeffs(u, t, 8);
                let terms = site.unstable_terms(&v);
                if terms[m] > terms[0] {
                    return Err(Error::DivergentSum { lambda_star });
                }
            }
        }
        let (rlo, rhi) = site.ratio_bounds();
        lo = lo.min(rlo);
        hi = hi.max(rhi);
    }
    let equivalence = if sites.is_empty() { 1.0 } else { hi.max(1.0 / lo) };
    Ok(AdaptedNorm {
        f: f.clone(),
        lambda_star,
        m,
        fwd: DEFAULT_FWD,
        equivalence,
    })
}
