//! Piecewise-linear convex functions `φ(x) = max_i ⟨y_i, x⟩ − c_i`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, AffineFamily, LpSolution};
use crate::par;
use crate::vecmath::{dot, norm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlcError {
    #[error("a piecewise-linear function needs at least one piece")]
    Empty,
    #[error("slope {index} has length {found}, expected {expected}")]
    Dimension { index: usize, expected: usize, found: usize },
    #[error("non-finite coefficient in piece {0}")]
    NonFinite(usize),
    #[error("malformed solution file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PLConvexFunction {
    n: usize,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    orbits: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct PieceFile {
    slope: Vec<f64>,
    intercept: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orbit: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct PlcFile {
    n: usize,
    pieces: Vec<PieceFile>,
}

impl PLConvexFunction {
    pub fn new(n: usize, slopes: Vec<Vec<f64>>, intercepts: Vec<f64>) -> Result<Self, PlcError> {
        if slopes.is_empty() {
            return Err(PlcError::Empty);
        }
        if slopes.len() != intercepts.len() {
            return Err(PlcError::Malformed("slope and intercept counts differ".into()));
        }
        let mut flat = Vec::with_capacity(n * slopes.len());
        for (i, s) in slopes.iter().enumerate() {
            if s.len() != n {
                return Err(PlcError::Dimension { index: i, expected: n, found: s.len() });
            }
            if !s.iter().all(|v| v.is_finite()) || !intercepts[i].is_finite() {
                return Err(PlcError::NonFinite(i));
            }
            flat.extend_from_slice(s);
        }
        Ok(Self { n, slopes: flat, intercepts, orbits: None })
    }

    /// Supporting planes of a differentiable convex `h` at `points`.
    pub fn tangent_planes<H, G>(n: usize, points: &[Vec<f64>], h: H, grad: G) -> Result<Self, PlcError>
    where
        H: Fn(&[f64]) -> f64,
        G: Fn(&[f64]) -> Vec<f64>,
    {
        let slopes: Vec<Vec<f64>> = points.iter().map(|p| grad(p)).collect();
        let intercepts = points.iter().zip(&slopes).map(|(p, s)| dot(s, p) - h(p)).collect();
        Self::new(n, slopes, intercepts)
    }

    /// Attaches an orbit id to each piece.
    pub fn with_orbits(mut self, orbits: Vec<usize>) -> Self {
        assert_eq!(orbits.len(), self.len());
        self.orbits = Some(orbits);
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.intercepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intercepts.is_empty()
    }

    #[inline]
    pub fn slope(&self, i: usize) -> &[f64] {
        &self.slopes[i * self.n..(i + 1) * self.n]
    }

    pub fn intercept(&self, i: usize) -> f64 {
        self.intercepts[i]
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn intercepts_mut(&mut self) -> &mut [f64] {
        &mut self.intercepts
    }

    pub fn orbit_ids(&self) -> Option<&[usize]> {
        self.orbits.as_deref()
    }

    #[inline]
    fn piece(&self, i: usize, x: &[f64]) -> f64 {
        dot(self.slope(i), x) - self.intercepts[i]
    }

    /// `(lowest maximizing index, value)`.
    #[inline]
    pub fn argmax(&self, x: &[f64]) -> (usize, f64) {
        let mut best = 0;
        let mut v = self.piece(0, x);
        for i in 1..self.len() {
            let w = self.piece(i, x);
            if w > v {
                v = w;
                best = i;
            }
        }
        (best, v)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.argmax(x).1
    }

    /// Indices of pieces within `tol` of the maximum at `x`.
    pub fn active_set(&self, x: &[f64], tol: f64) -> Vec<usize> {
        let v = self.value(x);
        (0..self.len()).filter(|&i| self.piece(i, x) >= v - tol).collect()
    }

    /// Slopes of the active pieces; their convex hull is `∂φ(x)`.
    pub fn active_slopes(&self, x: &[f64], tol: f64) -> Vec<Vec<f64>> {
        self.active_set(x, tol).into_iter().map(|i| self.slope(i).to_vec()).collect()
    }

    /// Slope of the lowest-index active piece.
    pub fn gradient_select(&self, x: &[f64]) -> Vec<f64> {
        self.slope(self.argmax(x).0).to_vec()
    }

    /// Shifts every intercept so that `φ(0) = 0`.
    pub fn normalize_at_origin(&self) -> Self {
        let shift = self.value(&vec![0.0; self.n]);
        let mut out = self.clone();
        out.intercepts.iter_mut().for_each(|c| *c += shift);
        out
    }

    /// `φ + a`.
    pub fn add_constant(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.intercepts.iter_mut().for_each(|c| *c -= a);
        out
    }

    pub fn max_slope_norm(&self) -> f64 {
        (0..self.len()).map(|i| norm(self.slope(i))).fold(0.0, f64::max)
    }

    /// Largest active slope norm over `points`.
    pub fn max_active_slope_on(&self, points: &[Vec<f64>]) -> f64 {
        par::max_range(points.len(), |i| norm(self.slope(self.argmax(&points[i]).0)))
    }

    /// Exact maximizer of `⟨x, y⟩ − φ(x)` over the cube `[−half, half]ⁿ`.
    pub(crate) fn conjugate_maximizer(&self, y: &[f64], half: f64, warm: &[usize]) -> LpSolution {
        let fam = ConjugateRows { phi: self, y };
        let lo = vec![-half; self.n];
        let hi = vec![half; self.n];
        lp::maximize_min(&fam, &lo, &hi, warm)
    }

    /// Drops pieces that are nowhere strictly maximal on `[−half, half]ⁿ`.
    pub fn prune_dominated(&self, half: f64) -> Self {
        let keep: Vec<bool> = par::map_range(self.len(), |i| {
            if self.len() == 1 {
                return true;
            }
            let fam = ExcessRows { phi: self, i };
            let lo = vec![-half; self.n];
            let hi = vec![half; self.n];
            let s = lp::maximize_min(&fam, &lo, &hi, &[]);
            s.t > 1e-12 * (1.0 + self.intercepts[i].abs())
        });
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep[i]).collect();
        self.select(&idx)
    }

    fn select(&self, idx: &[usize]) -> Self {
        let mut slopes = Vec::with_capacity(idx.len() * self.n);
        for &i in idx {
            slopes.extend_from_slice(self.slope(i));
        }
        Self {
            n: self.n,
            slopes,
            intercepts: idx.iter().map(|&i| self.intercepts[i]).collect(),
            orbits: self.orbits.as_ref().map(|o| idx.iter().map(|&i| o[i]).collect()),
        }
    }

    /// Vertices of the cells `{x : piece i is maximal}` clipped to `[−half, half]ⁿ`
    /// (exact for `n ≤ 2`).
    pub(crate) fn cell_vertices(&self, half: f64) -> Vec<Vec<f64>> {
        match self.n {
            1 => {
                let mut out = Vec::new();
                for i in 0..self.len() {
                    let (mut a, mut b) = (-half, half);
                    let yi = self.slope(i)[0];
                    for j in 0..self.len() {
                        if j == i {
                            continue;
                        }
                        // (y_i − y_j) x ≥ c_i − c_j
                        let d = yi - self.slope(j)[0];
                        let r = self.intercepts[i] - self.intercepts[j];
                        if d > 0.0 {
                            a = a.max(r / d);
                        } else if d < 0.0 {
                            b = b.min(r / d);
                        } else if r > 0.0 || (r == 0.0 && j < i) {
                            a = f64::INFINITY;
                        }
                        if a > b {
                            break;
                        }
                    }
                    if a <= b {
                        out.push(vec![a]);
                        out.push(vec![b]);
                    }
                }
                out
            }
            2 => {
                let cells: Vec<Vec<[f64; 2]>> = par::map_range(self.len(), |i| self.cell_polygon(i, half));
                cells.into_iter().flatten().map(|p| p.to_vec()).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Points where the planar cell edges cross the circle of the given radius.
    fn cell_circle_crossings(&self, radius: f64) -> Vec<Vec<f64>> {
        let half = radius * (1.0 + 1e-9);
        let cells: Vec<Vec<[f64; 2]>> = par::map_range(self.len(), |i| self.cell_polygon(i, half));
        let mut out = Vec::new();
        for poly in &cells {
            let k = poly.len();
            for e in 0..k {
                let (p, q) = (poly[e], poly[(e + 1) % k]);
                let d = [q[0] - p[0], q[1] - p[1]];
                let a = d[0] * d[0] + d[1] * d[1];
                if a == 0.0 {
                    continue;
                }
                let b = p[0] * d[0] + p[1] * d[1];
                let c = p[0] * p[0] + p[1] * p[1] - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    continue;
                }
                for t in [(-b - disc.sqrt()) / a, (-b + disc.sqrt()) / a] {
                    if (0.0..=1.0).contains(&t) {
                        let x = vec![p[0] + t * d[0], p[1] + t * d[1]];
                        let s = radius / norm(&x);
                        out.push(x.into_iter().map(|v| v * s).collect());
                    }
                }
            }
        }
        out
    }

    /// Cell `i` in the plane clipped to the square, as a vertex list.
    pub(crate) fn cell_polygon(&self, i: usize, half: f64) -> Vec<[f64; 2]> {
        let mut poly = vec![[-half, -half], [half, -half], [half, half], [-half, half]];
        let yi = self.slope(i);
        let ci = self.intercepts[i];
        let scale = half * (1.0 + self.max_slope_norm()) + ci.abs();
        for j in 0..self.len() {
            if j == i {
                continue;
            }
            let yj = self.slope(j);
            let a = [yi[0] - yj[0], yi[1] - yj[1]];
            let r = ci - self.intercepts[j];
            // keep a·x − r ≥ 0
            poly = clip(&poly, a, r, 1e-14 * scale);
            if poly.is_empty() {
                break;
            }
        }
        poly
    }

    /// `ψ(y) = sup_{|x| ≤ radius} ⟨x, y⟩ − φ(x)`, represented by candidate maximizers:
    /// the cell vertices inside the ball, the points where planar cell edges leave
    /// the ball, and the lattice points of spacing
    /// `2·radius/resolution` that border the ball's complement. Each candidate `x`
    /// becomes the piece `y ↦ ⟨x, y⟩ − φ(x)`.
    pub fn legendre_transform(&self, radius: f64, resolution: usize) -> Self {
        let n = self.n;
        let m = (resolution / 2).max(1) as i64;
        let h = radius / m as f64;
        let inside = |p: &[f64]| norm(p) <= radius * (1.0 + 1e-12);
        let mut cands: Vec<Vec<f64>> = Vec::new();
        let total = (2 * m + 1).pow(n as u32) as usize;
        let coords = |idx: usize| -> Vec<f64> {
            let mut rem = idx;
            let mut p = vec![0.0; n];
            for v in p.iter_mut() {
                *v = ((rem % (2 * m as usize + 1)) as i64 - m) as f64 * h;
                rem /= 2 * m as usize + 1;
            }
            p
        };
        let exact_vertices = n <= 2;
        let lattice: Vec<Option<Vec<f64>>> = par::map_range(total, |idx| {
            let p = coords(idx);
            if !inside(&p) {
                return None;
            }
            let lab = if exact_vertices { 0 } else { self.argmax(&p).0 };
            let mut q = p.clone();
            for d in 0..n {
                for s in [-1.0, 1.0] {
                    q[d] = p[d] + s * h;
                    let differs = !inside(&q) || (!exact_vertices && self.argmax(&q).0 != lab);
                    q[d] = p[d];
                    if differs {
                        return Some(p);
                    }
                }
            }
            None
        });
        cands.extend(lattice.into_iter().flatten());
        if exact_vertices {
            cands.extend(self.cell_vertices(radius).into_iter().filter(|v| inside(v)));
            if n == 2 {
                cands.extend(self.cell_circle_crossings(radius));
            }
        } else {
            let ymax = self.max_slope_norm().max(1e-12);
            let my = (resolution / 4).max(2) as i64;
            let hy = ymax / my as f64;
            let ny = (2 * my + 1).pow(n as u32) as usize;
            let found: Vec<Option<Vec<f64>>> = par::map_range(ny, |idx| {
                let mut rem = idx;
                let mut y = vec![0.0; n];
                for v in y.iter_mut() {
                    *v = ((rem % (2 * my as usize + 1)) as i64 - my) as f64 * hy;
                    rem /= 2 * my as usize + 1;
                }
                if norm(&y) > ymax {
                    return None;
                }
                let s = self.conjugate_maximizer(&y, radius, &[]);
                inside(&s.x).then_some(s.x)
            });
            cands.extend(found.into_iter().flatten());
        }
        let mut seen = HashSet::new();
        let key_scale = 1e10 / radius.max(1e-300);
        cands.retain(|p| seen.insert(p.iter().map(|v| (v * key_scale).round() as i64).collect::<Vec<_>>()));
        let intercepts: Vec<f64> = par::map_slice(&cands, |p| self.value(p));
        let mut slopes = Vec::with_capacity(cands.len() * n);
        for p in &cands {
            slopes.extend_from_slice(p);
        }
        Self { n, slopes, intercepts, orbits: None }
    }

    /// Serializes as `{"n": …, "pieces": [{"slope": […], "intercept": …, "orbit"?: …}]}`
    /// sorted by orbit, then lexicographically by slope.
    pub fn to_json(&self) -> String {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let oa = self.orbits.as_ref().map(|o| o[a]);
            let ob = self.orbits.as_ref().map(|o| o[b]);
            oa.cmp(&ob).then_with(|| {
                for (p, q) in self.slope(a).iter().zip(self.slope(b)) {
                    let c = p.total_cmp(q);
                    if c != std::cmp::Ordering::Equal {
                        return c;
                    }
                }
                self.intercepts[a].total_cmp(&self.intercepts[b])
            })
        });
        let file = PlcFile {
            n: self.n,
            pieces: order
                .iter()
                .map(|&i| PieceFile {
                    slope: self.slope(i).to_vec(),
                    intercept: self.intercepts[i],
                    orbit: self.orbits.as_ref().map(|o| o[i]),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, PlcError> {
        let file: PlcFile = serde_json::from_str(text).map_err(|e| PlcError::Malformed(e.to_string()))?;
        if file.n == 0 {
            return Err(PlcError::Malformed("n must be positive".into()));
        }
        let has_orbits = file.pieces.iter().all(|p| p.orbit.is_some()) && !file.pieces.is_empty();
        let orbits: Vec<usize> = file.pieces.iter().filter_map(|p| p.orbit).collect();
        let (slopes, intercepts): (Vec<_>, Vec<_>) = file.pieces.into_iter().map(|p| (p.slope, p.intercept)).unzip();
        let f = Self::new(file.n, slopes, intercepts)?;
        Ok(if has_orbits { f.with_orbits(orbits) } else { f })
    }
}

/// Sutherland–Hodgman clip of a convex polygon to `a·x − r ≥ −tol`.
pub(crate) fn clip(poly: &[[f64; 2]], a: [f64; 2], r: f64, tol: f64) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] - r;
    let m = poly.len();
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..m {
        let p = poly[k];
        let q = poly[(k + 1) % m];
        let sp = side(&p);
        let sq = side(&q);
        let pin = sp >= -tol;
        let qin = sq >= -tol;
        if pin {
            out.push(p);
        }
        if pin != qin {
            let t = sp / (sp - sq);
            if t > 0.0 && t < 1.0 {
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    out
}

/// Rows `a_j = y − y_j`, `b_j = c_j`, so that `min_j` equals `⟨x, y⟩ − φ(x)`.
struct ConjugateRows<'a> {
    phi: &'a PLConvexFunction,
    y: &'a [f64],
}

impl AffineFamily for ConjugateRows<'_> {
    fn dim(&self) -> usize {
        self.phi.n
    }
    fn len(&self) -> usize {
        self.phi.len()
    }
    fn row(&self, j: usize, a: &mut [f64]) -> f64 {
        for (d, v) in a.iter_mut().enumerate() {
            *v = self.y[d] - self.phi.slope(j)[d];
        }
        self.phi.intercepts[j]
    }
    fn lowest(&self, x: &[f64]) -> (usize, f64) {
        let (j, v) = self.phi.argmax(x);
        (j, dot(self.y, x) - v)
    }
}

/// Rows `(y_i − y_j)·x − (c_i − c_j)` over `j ≠ i`: the excess of piece `i` over the rest.
struct ExcessRows<'a> {
    phi: &'a PLConvexFunction,
    i: usize,
}

impl ExcessRows<'_> {
    fn map(&self, j: usize) -> usize {
        if j < self.i {
            j
        } else {
            j + 1
        }
    }
}

impl AffineFamily for ExcessRows<'_> {
    fn dim(&self) -> usize {
        self.phi.n
    }
    fn len(&self) -> usize {
        self.phi.len() - 1
    }
    fn row(&self, j: usize, a: &mut [f64]) -> f64 {
        let jj = self.map(j);
        for (d, v) in a.iter_mut().enumerate() {
            *v = self.phi.slope(self.i)[d] - self.phi.slope(jj)[d];
        }
        self.phi.intercepts[jj] - self.phi.intercepts[self.i]
    }
    fn lowest(&self, x: &[f64]) -> (usize, f64) {
        let own = self.phi.piece(self.i, x);
        let mut best = (0, f64::INFINITY);
        for j in 0..self.len() {
            let v = own - self.phi.piece(self.map(j), x);
            if v < best.1 {
                best = (j, v);
            }
        }
        best
    }
}

/// Square lattice of spacing `radius / m` restricted to the closed ball.
pub fn ball_lattice(n: usize, radius: f64, m: usize) -> Vec<Vec<f64>> {
    let m = m.max(1) as i64;
    let h = radius / m as f64;
    let side = (2 * m + 1) as usize;
    let total = side.pow(n as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rem = idx;
        let mut p = vec![0.0; n];
        for v in p.iter_mut() {
            *v = ((rem % side) as i64 - m) as f64 * h;
            rem /= side;
        }
        if norm(&p) <= radius * (1.0 + 1e-12) {
            out.push(p);
        }
    }
    out
}

/// `a|x|²/2` by tangent planes on a lattice of spacing `radius / m` over `B_radius`.
pub fn sampled_quadratic(n: usize, a: f64, radius: f64, m: usize) -> PLConvexFunction {
    let pts = ball_lattice(n, radius, m);
    PLConvexFunction::tangent_planes(n, &pts, |x| 0.5 * a * dot(x, x), |x| x.iter().map(|v| a * v).collect())
        .expect("nonempty lattice")
}

/// `|x|` as the max of `m` unit slopes in the plane (or `±x` on the line).
pub fn sampled_cone(n: usize, m: usize) -> PLConvexFunction {
    let slopes: Vec<Vec<f64>> = match n {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..m)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => (0..m).map(|i| crate::vecmath::sphere_point(n, i)).collect(),
    };
    let k = slopes.len();
    PLConvexFunction::new(n, slopes, vec![0.0; k]).expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_value_subdifferential() {
        let phi = sampled_cone(1, 0);
        assert_eq!(phi.value(&[-2.0]), 2.0);
        let act = phi.active_slopes(&[0.0], 0.0);
        assert_eq!(act.len(), 2);
        assert_eq!(phi.gradient_select(&[0.0]), vec![-1.0]);
        assert_eq!(phi.gradient_select(&[0.5]), vec![1.0]);
    }

    #[test]
    fn single_piece_gradient_everywhere() {
        let phi = PLConvexFunction::new(2, vec![vec![0.3, -0.2]], vec![5.0]).unwrap();
        assert_eq!(phi.gradient_select(&[7.0, 1.0]), vec![0.3, -0.2]);
        let nphi = phi.normalize_at_origin();
        assert_eq!(nphi.intercept(0), 0.0);
        assert_eq!(nphi.value(&[0.0, 0.0]), 0.0);
        assert_eq!(nphi.normalize_at_origin(), nphi);
    }

    #[test]
    fn normalization_preserves_differences() {
        let slopes: Vec<Vec<f64>> = (0..10).map(|i| vec![(i as f64).sin(), (i as f64 * 1.3).cos()]).collect();
        let cs: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let phi = PLConvexFunction::new(2, slopes, cs).unwrap();
        let nphi = phi.normalize_at_origin();
        assert!(nphi.value(&[0.0, 0.0]).abs() < 1e-15);
        for i in 0..10 {
            for j in 0..10 {
                let d0 = phi.intercept(i) - phi.intercept(j);
                let d1 = nphi.intercept(i) - nphi.intercept(j);
                assert!((d0 - d1).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn json_round_trip_and_order() {
        let phi = PLConvexFunction::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]], vec![0.1, 0.2, 0.3])
            .unwrap()
            .with_orbits(vec![1, 0, 0]);
        let text = phi.to_json();
        let back = PLConvexFunction::from_json(&text).unwrap();
        assert_eq!(back.slope(0), &[-1.0, 0.0]);
        assert_eq!(back.orbit_ids(), Some(&[0, 0, 1][..]));
        for x in [[0.3, 0.2], [-1.0, 2.0]] {
            assert_eq!(back.value(&x), phi.value(&x));
        }
        assert!(matches!(PLConvexFunction::from_json(r#"{"n":2,"pieces":[]}"#), Err(PlcError::Empty)));
        assert!(PLConvexFunction::from_json("{").is_err());
    }

    #[test]
    fn conjugate_of_quadratic_is_quadratic() {
        let phi = sampled_quadratic(2, 1.0, 2.0, 40);
        let psi = phi.legendre_transform(2.0, 80);
        for y in [[0.0, 0.0], [0.5, 0.3], [-0.7, 0.9], [1.0, -1.0]] {
            let exact = 0.5 * dot(&y, &y);
            assert!((psi.value(&y) - exact).abs() < 5e-3, "{y:?}");
        }
    }

    #[test]
    fn conjugate_of_affine_piece() {
        let phi = PLConvexFunction::new(2, vec![vec![0.5, -0.5]], vec![1.5]).unwrap();
        let psi = phi.legendre_transform(1.0, 64);
        assert!((psi.value(&[0.5, -0.5]) - 1.5).abs() < 1e-12);
        let away = psi.value(&[1.5, -0.5]);
        assert!((away - (1.5 + 1.0)).abs() < 1e-3, "{away}");
    }

    #[test]
    fn double_transform_is_exact_inside() {
        let phi = sampled_quadratic(2, 1.0, 1.5, 7);
        let psi = phi.legendre_transform(1.5, 60);
        let back = psi.legendre_transform(phi.max_slope_norm() * 1.05, 60);
        for p in ball_lattice(2, 0.9, 9) {
            assert!((back.value(&p) - phi.value(&p)).abs() < 1e-8, "{p:?}");
        }
    }

    #[test]
    fn cone_vertex_is_found() {
        let phi = sampled_cone(2, 16);
        let s = phi.conjugate_maximizer(&[0.2, 0.1], 3.0, &[]);
        assert!(norm(&s.x) < 1e-12);
        let s = phi.conjugate_maximizer(&[2.0, 0.0], 3.0, &[]);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pruning_removes_dominated_pieces() {
        let phi = PLConvexFunction::new(1, vec![vec![-1.0], vec![1.0], vec![0.0]], vec![0.0, 0.0, 5.0]).unwrap();
        let p = phi.prune_dominated(2.0);
        assert_eq!(p.len(), 2);
    }
}
