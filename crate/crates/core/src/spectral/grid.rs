//! Box grids on the torus and on the sphere.
//!
//! The sphere uses two square charts `[-1, 1]^2`: chart A in `z` owns `|z| <= 1`
//! and chart B in `w = 1/z` owns `|w| < 1`. The point at infinity sits in a
//! dedicated extra cell. Cells whose square misses the owned region are dead
//! and never receive points.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{robust_inv, Manifold, Point};

/// A set of cells with constant-time membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    cells: Vec<usize>,
    mask: Vec<bool>,
}

impl CellSet {
    pub fn new(total: usize, mut cells: Vec<usize>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        let mut mask = vec![false; total];
        for &c in &cells {
            mask[c] = true;
        }
        CellSet { cells, mask }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let cells = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        CellSet { cells, mask }
    }

    #[inline]
    pub fn contains(&self, c: usize) -> bool {
        self.mask.get(c).copied().unwrap_or(false)
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total(&self) -> usize {
        self.mask.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    manifold: Manifold,
    n: usize,
    max_diameter: f64,
}

/// Low-discrepancy generators: reciprocals of the generalized golden ratios.
fn rd_alpha(d: usize) -> [f64; 3] {
    let phi = match d {
        1 => 1.618_033_988_749_895,
        2 => 1.324_717_957_244_746,
        _ => 1.220_744_084_605_759_5,
    };
    [1.0 / phi, 1.0 / (phi * phi), 1.0 / (phi * phi * phi)]
}

impl BoxGrid {
    pub fn new(manifold: Manifold, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("grid needs at least one subdivision".into()));
        }
        let mut g = BoxGrid {
            manifold,
            n,
            max_diameter: 0.0,
        };
        g.max_diameter = match manifold {
            Manifold::Torus(d) => (d as f64).sqrt() / n as f64,
            Manifold::Sphere => (0..g.cell_count())
                .filter(|&c| g.is_live(c))
                .map(|c| g.local_diameter(c))
                .fold(0.0, f64::max),
        };
        Ok(g)
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn cell_count(&self) -> usize {
        match self.manifold {
            Manifold::Torus(d) => self.n.pow(d as u32),
            Manifold::Sphere => 2 * self.n * self.n + 1,
        }
    }

    /// Index of the cell at infinity on sphere grids.
    pub fn infinity_cell(&self) -> Option<usize> {
        match self.manifold {
            Manifold::Sphere => Some(2 * self.n * self.n),
            _ => None,
        }
    }

    /// Largest cell diameter.
    pub fn cell_diameter(&self) -> f64 {
        self.max_diameter
    }

    pub fn empty_set(&self) -> CellSet {
        CellSet::new(self.cell_count(), Vec::new())
    }

    pub fn set(&self, cells: Vec<usize>) -> CellSet {
        CellSet::new(self.cell_count(), cells)
    }

    pub fn live_cells(&self) -> Vec<usize> {
        (0..self.cell_count()).filter(|&c| self.is_live(c)).collect()
    }

    fn h(&self) -> f64 {
        2.0 / self.n as f64
    }

    fn axis_index(&self, x: f64, lo: f64, step: f64) -> usize {
        (((x - lo) / step).floor().max(0.0) as usize).min(self.n - 1)
    }

    /// Torus multi-index of a cell.
    pub fn torus_index(&self, c: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut r = c;
        for v in idx.iter_mut().take(self.manifold.dim()) {
            *v = r % self.n;
            r /= self.n;
        }
        idx
    }

    pub fn torus_cell(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn cell_of(&self, p: &Point) -> usize {
        match self.manifold {
            Manifold::Torus(_) => {
                let nf = self.n as f64;
                let idx: Vec<usize> = p
                    .coords()
                    .iter()
                    .map(|&x| ((x * nf).floor() as usize).min(self.n - 1))
                    .collect();
                self.torus_cell(&idx)
            }
            Manifold::Sphere => match p.z() {
                None => 2 * self.n * self.n,
                Some(z) => {
                    let (offset, v) = if z.norm_sqr() <= 1.0 {
                        (0, z)
                    } else {
                        (self.n * self.n, robust_inv(z))
                    };
                    let i = self.axis_index(v.re, -1.0, self.h());
                    let j = self.axis_index(v.im, -1.0, self.h());
                    offset + i + self.n * j
                }
            },
        }
    }

    /// Chart square of a sphere cell: `(chart_b, lower-left corner)`.
    fn sphere_rect(&self, c: usize) -> (bool, Complex64) {
        let nn = self.n * self.n;
        let (b, r) = if c >= nn { (true, c - nn) } else { (false, c) };
        let (i, j) = (r % self.n, r / self.n);
        let h = self.h();
        (b, Complex64::new(-1.0 + i as f64 * h, -1.0 + j as f64 * h))
    }

    fn owned(chart_b: bool, v: Complex64) -> bool {
        if chart_b {
            v.norm_sqr() < 1.0 && v.norm_sqr() > 0.0
        } else {
            v.norm_sqr() <= 1.0
        }
    }

    fn sphere_point(chart_b: bool, v: Complex64) -> Point {
        if chart_b {
            if v.norm_sqr() == 0.0 {
                Point::infinity()
            } else {
                Point::from_complex(robust_inv(v))
            }
        } else {
            Point::finite(v)
        }
    }

    /// Whether the cell can contain points at all.
    pub fn is_live(&self, c: usize) -> bool {
        match self.manifold {
            Manifold::Torus(_) => c < self.cell_count(),
            Manifold::Sphere => {
                if Some(c) == self.infinity_cell() {
                    return true;
                }
                if c >= self.cell_count() {
                    return false;
                }
                let (b, lo) = self.sphere_rect(c);
                let h = self.h();
                let nx = 0.0f64.clamp(lo.re, lo.re + h);
                let ny = 0.0f64.clamp(lo.im, lo.im + h);
                let r2 = nx * nx + ny * ny;
                if b {
                    r2 < 1.0
                } else {
                    r2 <= 1.0
                }
            }
        }
    }

    /// Point of the cell at fractional position `u in [0,1)^d`, or `None` when
    /// that position is outside the region the cell owns.
    fn point_at(&self, c: usize, u: &[f64]) -> Option<Point> {
        match self.manifold {
            Manifold::Torus(d) => {
                let idx = self.torus_index(c);
                let nf = self.n as f64;
                let coords: Vec<f64> = (0..d).map(|k| (idx[k] as f64 + u[k]) / nf).collect();
                Point::on_torus(&coords).ok()
            }
            Manifold::Sphere => {
                if Some(c) == self.infinity_cell() {
                    return Some(Point::infinity());
                }
                let (b, lo) = self.sphere_rect(c);
                let h = self.h();
                let v = lo + Complex64::new(u[0] * h, u[1] * h);
                Self::owned(b, v).then(|| Self::sphere_point(b, v))
            }
        }
    }

    /// Deterministic low-discrepancy samples inside the cell.
    pub fn cell_samples(&self, c: usize, k: usize) -> Vec<Point> {
        if Some(c) == self.infinity_cell() {
            return vec![Point::infinity()];
        }
        let d = self.manifold.dim();
        let alpha = rd_alpha(d);
        let mut out = Vec::with_capacity(k);
        let mut j = 0usize;
        while out.len() < k && j < 8 * k.max(1) {
            j += 1;
            let mut u = [0.0; 3];
            for (i, ui) in u.iter_mut().enumerate().take(d) {
                let x = 0.5 + j as f64 * alpha[i];
                *ui = x - x.floor();
            }
            if let Some(p) = self.point_at(c, &u[..d]) {
                out.push(p);
            }
        }
        out
    }

    /// A uniformly random point of the cell (by rejection on the sphere).
    pub fn random_point<R: Rng>(&self, c: usize, rng: &mut R) -> Option<Point> {
        if Some(c) == self.infinity_cell() {
            return Some(Point::infinity());
        }
        let d = self.manifold.dim();
        for _ in 0..256 {
            let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            if let Some(p) = self.point_at(c, &u) {
                return Some(p);
            }
        }
        None
    }

    /// Center of the cell square (chart center on the sphere).
    pub fn cell_center(&self, c: usize) -> Point {
        match self.manifold {
            Manifold::Torus(d) => self.point_at(c, &vec![0.5; d]).unwrap(),
            Manifold::Sphere => {
                if Some(c) == self.infinity_cell() {
                    return Point::infinity();
                }
                let (b, lo) = self.sphere_rect(c);
                let h = self.h();
                Self::sphere_point(b, lo + Complex64::new(h / 2.0, h / 2.0))
            }
        }
    }

    fn sphere_corners(&self, c: usize) -> [Point; 4] {
        let (b, lo) = self.sphere_rect(c);
        let h = self.h();
        [
            Self::sphere_point(b, lo),
            Self::sphere_point(b, lo + Complex64::new(h, 0.0)),
            Self::sphere_point(b, lo + Complex64::new(h, h)),
            Self::sphere_point(b, lo + Complex64::new(0.0, h)),
        ]
    }

    /// Diameter of one cell (the square's diagonal in the ambient metric).
    pub fn local_diameter(&self, c: usize) -> f64 {
        match self.manifold {
            Manifold::Torus(d) => (d as f64).sqrt() / self.n as f64,
            Manifold::Sphere => {
                if Some(c) == self.infinity_cell() {
                    // the w-chart squares touching w = 0 have conformal factor 2
                    return 2.0 * std::f64::consts::SQRT_2 * self.h();
                }
                let k = self.sphere_corners(c);
                k[0].dist(&k[2]).max(k[1].dist(&k[3]))
            }
        }
    }

    fn circumradius(&self, c: usize) -> f64 {
        match self.manifold {
            Manifold::Torus(_) => self.local_diameter(c) / 2.0,
            Manifold::Sphere => {
                if Some(c) == self.infinity_cell() {
                    return 0.0;
                }
                let center = self.cell_center(c);
                self.sphere_corners(c)
                    .iter()
                    .map(|k| k.dist(&center))
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Distance from a point to a cell: exact on the torus, a lower estimate
    /// (center distance minus circumradius) on the sphere.
    pub fn distance_to_cell(&self, p: &Point, c: usize) -> f64 {
        match self.manifold {
            Manifold::Torus(d) => {
                let idx = self.torus_index(c);
                let nf = self.n as f64;
                let mut s = 0.0;
                for k in 0..d {
                    let lo = idx[k] as f64 / nf;
                    let hi = (idx[k] + 1) as f64 / nf;
                    let x = p.coords()[k];
                    let m = if x >= lo && x <= hi {
                        0.0
                    } else {
                        let a = (x - lo).abs();
                        let b = (x - hi).abs();
                        a.min(1.0 - a).min(b).min(1.0 - b)
                    };
                    s += m * m;
                }
                s.sqrt()
            }
            Manifold::Sphere => {
                if self.cell_of(p) == c {
                    return 0.0;
                }
                (p.dist(&self.cell_center(c)) - self.circumradius(c)).max(0.0)
            }
        }
    }

    /// Candidate cells meeting the closed ball `B(p, r)`; a superset on the sphere.
    pub fn cells_near(&self, p: &Point, r: f64) -> Vec<usize> {
        let mut out = match self.manifold {
            Manifold::Torus(d) => {
                let nf = self.n as f64;
                let ranges: Vec<Vec<usize>> = (0..d)
                    .map(|k| {
                        let x = p.coords()[k];
                        let lo = ((x - r) * nf).floor() as i64;
                        let hi = ((x + r) * nf).floor() as i64;
                        if hi - lo + 1 >= self.n as i64 {
                            (0..self.n).collect()
                        } else {
                            (lo..=hi).map(|i| i.rem_euclid(self.n as i64) as usize).collect()
                        }
                    })
                    .collect();
                let mut cells = vec![0usize];
                let mut stride = 1usize;
                for range in &ranges {
                    let mut next = Vec::with_capacity(cells.len() * range.len());
                    for &c in &cells {
                        for &i in range {
                            next.push(c + i * stride);
                        }
                    }
                    cells = next;
                    stride *= self.n;
                }
                cells
            }
            Manifold::Sphere => self.sphere_cells_near(p, r),
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    fn sphere_cells_near(&self, p: &Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let h = self.h();
        let n = self.n as i64;
        let mut push_box = |chart_b: bool, v: Option<Complex64>| {
            let rad = match v {
                Some(v) if r < 0.5 && v.norm() <= 3.0 => r * (1.0 + v.norm_sqr()) / 2.0 * 1.25 + r * r,
                Some(v) if v.norm() <= 3.0 => 4.0,
                _ if r >= 0.5 => 4.0,
                _ => return,
            };
            let v = v.unwrap_or(Complex64::new(0.0, 0.0));
            let ilo = (((v.re - rad + 1.0) / h).floor() as i64).clamp(0, n - 1);
            let ihi = (((v.re + rad + 1.0) / h).floor() as i64).clamp(0, n - 1);
            let jlo = (((v.im - rad + 1.0) / h).floor() as i64).clamp(0, n - 1);
            let jhi = (((v.im + rad + 1.0) / h).floor() as i64).clamp(0, n - 1);
            let off = if chart_b { (n * n) as usize } else { 0 };
            for j in jlo..=jhi {
                for i in ilo..=ihi {
                    let c = off + (i + n * j) as usize;
                    if self.is_live(c) {
                        out.push(c);
                    }
                }
            }
        };
        match p.z() {
            None => push_box(true, Some(Complex64::new(0.0, 0.0))),
            Some(z) => {
                push_box(false, Some(z));
                push_box(true, Some(robust_inv(z)));
            }
        }
        let inf = self.infinity_cell().unwrap();
        if p.dist(&Point::infinity()) <= r {
            out.push(inf);
        }
        out
    }

    /// Whether some cell of `set` lies within distance `r` of `p`.
    pub fn near_set(&self, p: &Point, set: &CellSet, r: f64) -> bool {
        if set.contains(self.cell_of(p)) {
            return true;
        }
        self.cells_near(p, r)
            .into_iter()
            .any(|c| set.contains(c) && self.distance_to_cell(p, c) <= r)
    }

    /// Distance from `p` to the nearest cell satisfying `pred`, by widening search.
    pub fn distance_to_nearest<F: Fn(usize) -> bool>(&self, p: &Point, pred: F) -> Option<f64> {
        if pred(self.cell_of(p)) {
            return Some(0.0);
        }
        let mut r = self.cell_diameter();
        let cap = match self.manifold {
            Manifold::Torus(d) => (d as f64).sqrt(),
            Manifold::Sphere => 2.0,
        };
        loop {
            let best = self
                .cells_near(p, r)
                .into_iter()
                .filter(|&c| self.is_live(c) && pred(c))
                .map(|c| self.distance_to_cell(p, c))
                .fold(f64::INFINITY, f64::min);
            if best <= r {
                return Some(best);
            }
            if r >= cap {
                return best.is_finite().then_some(best);
            }
            r = (2.0 * r).min(cap);
        }
    }

    /// Grow a cell set by `r` layers of neighbours.
    pub fn fatten(&self, set: &CellSet, r: usize) -> CellSet {
        match self.manifold {
            Manifold::Torus(d) => {
                let mut mask = set.mask().to_vec();
                for _ in 0..r {
                    let cur = mask.clone();
                    for c in 0..cur.len() {
                        if !cur[c] {
                            continue;
                        }
                        let idx = self.torus_index(c);
                        for off in 0..3usize.pow(d as u32) {
                            let mut o = off;
                            let mut nb = [0usize; 3];
                            for k in 0..d {
                                let delta = (o % 3) as i64 - 1;
                                o /= 3;
                                nb[k] = (idx[k] as i64 + delta).rem_euclid(self.n as i64) as usize;
                            }
                            mask[self.torus_cell(&nb[..d])] = true;
                        }
                    }
                }
                CellSet::from_mask(mask)
            }
            Manifold::Sphere => {
                let mut mask = set.mask().to_vec();
                for &c in set.cells() {
                    let center = self.cell_center(c);
                    let reach = self.circumradius(c) + r as f64 * self.local_diameter(c);
                    for nb in self.cells_near(&center, reach) {
                        if self.distance_to_cell(&center, nb) <= reach {
                            mask[nb] = true;
                        }
                    }
                }
                CellSet::from_mask(mask)
            }
        }
    }
}
