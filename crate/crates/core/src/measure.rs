//! The Monge–Ampère measure `ω(B, φ, f) = ∫_{∂φ(B)} f` of a piecewise-linear convex
//! function, the weak-solution residual and a weak-convergence check.
//!
//! Everything is computed in gradient space. A lattice of nodes `y` covers the slope
//! range of `φ`; each node is sent to a maximizer `x*(y)` of `⟨x, y⟩ − φ(x)`, so that
//! `y ∈ ∂φ(x*)`. Then `ω(B) ≈ Σ f(y) h^n [x*(y) ∈ B]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::density::{DensityError, RadialDensity};
use crate::group::OrthoMatrix;
use crate::par;
use crate::plc::{ball_lattice, PLConvexFunction};
use crate::quadrature::gauss_legendre;
use crate::vecmath::{dist, norm};

/// Residual denominator floor.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestSet {
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl TestSet {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        TestSet::Ball { center, radius }
    }

    pub fn centered_ball(n: usize, radius: f64) -> Self {
        TestSet::Ball { center: vec![0.0; n], radius }
    }

    pub fn dimension(&self) -> usize {
        match self {
            TestSet::Ball { center, .. } | TestSet::Annulus { center, .. } => center.len(),
            TestSet::Box { lo, .. } => lo.len(),
        }
    }

    /// Nonempty interior and consistent dimensions.
    pub fn validate(&self, n: usize) -> Result<(), String> {
        if self.dimension() != n {
            return Err(format!("test set has dimension {}, expected {n}", self.dimension()));
        }
        let ok = match self {
            TestSet::Ball { center, radius } => *radius > 0.0 && center.iter().all(|v| v.is_finite()),
            TestSet::Annulus { center, inner, outer } => {
                *inner >= 0.0 && outer > inner && center.iter().all(|v| v.is_finite())
            }
            TestSet::Box { lo, hi } => hi.len() == n && lo.iter().zip(hi).all(|(a, b)| a < b),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("test set has empty interior: {}", self.describe()))
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            TestSet::Ball { center, radius } => dist(x, center) <= *radius,
            TestSet::Annulus { center, inner, outer } => {
                let d = dist(x, center);
                d >= *inner && d <= *outer
            }
            TestSet::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| v >= a && v <= b),
        }
    }

    /// `sup_{x ∈ B} |x|`.
    pub fn extent(&self) -> f64 {
        match self {
            TestSet::Ball { center, radius } => norm(center) + radius,
            TestSet::Annulus { center, outer, .. } => norm(center) + outer,
            TestSet::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// `g·B` for balls and annuli; boxes are not closed under rotation.
    pub fn transformed(&self, g: &OrthoMatrix) -> Option<Self> {
        match self {
            TestSet::Ball { center, radius } => Some(TestSet::Ball { center: g.apply(center), radius: *radius }),
            TestSet::Annulus { center, inner, outer } => {
                Some(TestSet::Annulus { center: g.apply(center), inner: *inner, outer: *outer })
            }
            TestSet::Box { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        let v = |p: &[f64]| p.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        match self {
            TestSet::Ball { center, radius } => format!("ball(c=[{}],r={radius})", v(center)),
            TestSet::Annulus { center, inner, outer } => format!("annulus(c=[{}],r={inner}..{outer})", v(center)),
            TestSet::Box { lo, hi } => format!("box([{}]..[{}])", v(lo), v(hi)),
        }
    }

    /// `∫_B g`. Exact shell masses for sets centred at the origin, product Gauss rules
    /// otherwise.
    pub fn mass<D: RadialDensity + ?Sized>(&self, g: &D) -> Result<f64, DensityError> {
        match self {
            TestSet::Ball { center, radius } => shell_integral(g, center, 0.0, *radius),
            TestSet::Annulus { center, inner, outer } => shell_integral(g, center, *inner, *outer),
            TestSet::Box { lo, hi } => Ok(box_integral(g, lo, hi)),
        }
    }
}

/// Balls of the given radii centred at the origin.
pub fn concentric_balls(n: usize, radii: &[f64]) -> Vec<TestSet> {
    radii.iter().map(|&r| TestSet::centered_ball(n, r)).collect()
}

/// `{0.6, 0.7, 0.8, 0.9, 1.0}·radius`.
pub fn default_test_sets(n: usize, radius: f64) -> Vec<TestSet> {
    concentric_balls(n, &[0.6, 0.7, 0.8, 0.9, 1.0].map(|s| s * radius))
}

fn shell_integral<D: RadialDensity + ?Sized>(g: &D, c: &[f64], a: f64, b: f64) -> Result<f64, DensityError> {
    if norm(c) == 0.0 {
        return g.shell_mass(a, b);
    }
    let n = c.len();
    let (rn, rw) = gauss_legendre(64);
    let radial = |u: &[f64]| -> f64 {
        rn.iter()
            .zip(&rw)
            .map(|(t, w)| {
                let rho = 0.5 * (a + b) + 0.5 * (b - a) * t;
                let x: Vec<f64> = c.iter().zip(u).map(|(ci, ui)| ci + rho * ui).collect();
                0.5 * (b - a) * w * g.eval(&x) * rho.powi(n as i32 - 1)
            })
            .sum()
    };
    Ok(match n {
        1 => radial(&[1.0]) + radial(&[-1.0]),
        2 => {
            let m = 256;
            let h = 2.0 * std::f64::consts::PI / m as f64;
            (0..m).map(|j| {
                let t = j as f64 * h;
                h * radial(&[t.cos(), t.sin()])
            })
            .sum()
        }
        _ => {
            let (zn, zw) = gauss_legendre(48);
            let m = 96;
            let h = 2.0 * std::f64::consts::PI / m as f64;
            let mut s = 0.0;
            for (z, wz) in zn.iter().zip(&zw) {
                let sz = (1.0 - z * z).sqrt();
                for j in 0..m {
                    let t = j as f64 * h;
                    let mut u = vec![sz * t.cos(), sz * t.sin(), *z];
                    u.resize(n, 0.0);
                    s += wz * h * radial(&u);
                }
            }
            s
        }
    })
}

fn box_integral<D: RadialDensity + ?Sized>(g: &D, lo: &[f64], hi: &[f64]) -> f64 {
    let n = lo.len();
    let m = if n <= 2 { 64 } else { 40 };
    let (gn, gw) = gauss_legendre(m);
    let total = m.pow(n as u32);
    par::fold_chunks(total, par::CHUNK, || 0.0, |s, idx| {
        let mut rem = idx;
        let mut w = 1.0;
        let mut x = vec![0.0; n];
        for d in 0..n {
            let j = rem % m;
            rem /= m;
            let half = 0.5 * (hi[d] - lo[d]);
            x[d] = 0.5 * (lo[d] + hi[d]) + half * gn[j];
            w *= half * gw[j];
        }
        *s += w * g.eval(&x);
    })
    .into_iter()
    .sum()
}

/// Gradient-space quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureQuadrature {
    /// Nodes per axis across `[−Y, Y]`.
    pub nodes_per_axis: usize,
    /// Radius `Y` of the slope ball; by default 1.1 times the largest slope active
    /// on the region of interest.
    pub y_radius: Option<f64>,
    /// Also run at half resolution and report the difference.
    pub estimate_error: bool,
}

impl MeasureQuadrature {
    pub fn default_for(n: usize) -> Self {
        Self { nodes_per_axis: if n <= 2 { 200 } else { 40 }, y_radius: None, estimate_error: true }
    }
}

/// Nodes of the slope lattice with their weights `f(y) h^n` and the maximizers
/// `x*(y)`. Built once and reused for every test set.
#[derive(Debug, Clone)]
pub struct GradientImage {
    pub y_radius: f64,
    pub half: f64,
    pub xs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Largest slope active near `B_extent`, sampled on a lattice slightly larger than
/// the ball.
pub fn active_slope_radius(phi: &PLConvexFunction, extent: f64) -> f64 {
    let n = phi.dim();
    let m = if n <= 2 { 48 } else { 16 };
    let pts = ball_lattice(n, 1.05 * extent, m);
    phi.max_active_slope_on(&pts)
}

impl GradientImage {
    /// `extent` bounds the region of interest in `x`; maximizers are searched in the
    /// cube of half-width `1.25·extent`.
    pub fn new<D: RadialDensity + ?Sized>(
        phi: &PLConvexFunction,
        f: &D,
        extent: f64,
        nodes_per_axis: usize,
        y_radius: Option<f64>,
    ) -> Self {
        let n = phi.dim();
        let half = 1.25 * extent;
        let yr = y_radius.unwrap_or_else(|| 1.1 * active_slope_radius(phi, extent)).max(1e-12);
        let m = nodes_per_axis.max(2);
        let h = 2.0 * yr / m as f64;
        let offset: Vec<f64> = (0..n).map(|d| (0.5 + (d + 1) as f64 * std::f64::consts::SQRT_2).fract()).collect();
        let vol = h.powi(n as i32);
        let lines = m.pow(n as u32 - 1);
        let per_line: Vec<(Vec<Vec<f64>>, Vec<f64>)> = par::map_range(lines, |line| {
            let mut y = vec![0.0; n];
            let mut rem = line;
            for d in 1..n {
                y[d] = -yr + ((rem % m) as f64 + offset[d]) * h;
                rem /= m;
            }
            let mut xs = Vec::new();
            let mut ws = Vec::new();
            let mut warm: Vec<usize> = Vec::new();
            let mut cache: Option<Subdifferential> = None;
            for i in 0..m {
                y[0] = -yr + (i as f64 + offset[0]) * h;
                if norm(&y) > yr {
                    continue;
                }
                let x = match cache.as_ref().filter(|c| c.contains(&y)) {
                    Some(c) => c.x.clone(),
                    None => {
                        let s = phi.conjugate_maximizer(&y, half, &warm);
                        let interior = s.x.iter().all(|v| v.abs() < half * (1.0 - 1e-9));
                        cache = interior.then(|| Subdifferential::new(phi, s.x.clone(), &s.tight));
                        warm = s.tight;
                        s.x
                    }
                };
                xs.push(x);
                ws.push(f.eval(&y) * vol);
            }
            (xs, ws)
        });
        let mut xs = Vec::new();
        let mut weights = Vec::new();
        for (a, b) in per_line {
            xs.extend(a);
            weights.extend(b);
        }
        Self { y_radius: yr, half, xs, weights }
    }

    pub fn measure(&self, set: &TestSet) -> f64 {
        par::sum_range(self.xs.len(), |i| if set.contains(&self.xs[i]) { self.weights[i] } else { 0.0 })
    }

    /// `∫ h dω`.
    pub fn integrate<H: Fn(&[f64]) -> f64 + Sync + Send>(&self, h: H) -> f64 {
        par::sum_range(self.xs.len(), |i| self.weights[i] * h(&self.xs[i]))
    }

    pub fn node_count(&self) -> usize {
        self.xs.len()
    }
}

/// `∂φ(x) = conv{slopes active at x}` at an interior vertex, for cheap membership tests
/// between neighbouring lattice nodes.
struct Subdifferential {
    x: Vec<f64>,
    slopes: Vec<Vec<f64>>,
    hull: Option<Vec<[f64; 2]>>,
}

impl Subdifferential {
    fn new(phi: &PLConvexFunction, x: Vec<f64>, active: &[usize]) -> Self {
        let slopes: Vec<Vec<f64>> = active.iter().map(|&j| phi.slope(j).to_vec()).collect();
        let hull = (phi.dim() == 2).then(|| convex_hull_2d(&slopes));
        Self { x, slopes, hull }
    }

    fn contains(&self, y: &[f64]) -> bool {
        let n = y.len();
        if self.slopes.len() < n + 1 {
            return false;
        }
        match n {
            1 => {
                let lo = self.slopes.iter().map(|s| s[0]).fold(f64::INFINITY, f64::min);
                let hi = self.slopes.iter().map(|s| s[0]).fold(f64::NEG_INFINITY, f64::max);
                y[0] > lo && y[0] < hi
            }
            2 => {
                let hull = self.hull.as_ref().expect("planar hull");
                hull.len() >= 3
                    && (0..hull.len()).all(|i| {
                        let a = hull[i];
                        let b = hull[(i + 1) % hull.len()];
                        (b[0] - a[0]) * (y[1] - a[1]) - (b[1] - a[1]) * (y[0] - a[0]) > 0.0
                    })
            }
            _ => self.slopes.len() <= 8 && simplex_cover(&self.slopes, y),
        }
    }
}

/// Counter-clockwise hull (monotone chain) without collinear points.
fn convex_hull_2d(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = points.iter().map(|v| [v[0], v[1]]).collect();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// Whether `y` lies strictly inside some simplex spanned by `n + 1` of the points.
fn simplex_cover(points: &[Vec<f64>], y: &[f64]) -> bool {
    let n = y.len();
    let k = points.len();
    let mut idx: Vec<usize> = (0..=n).collect();
    loop {
        let m = n + 1;
        let a = DMatrix::from_fn(m, m, |r, c| if r < n { points[idx[c]][r] } else { 1.0 });
        let mut rhs = DVector::from_element(m, 1.0);
        for r in 0..n {
            rhs[r] = y[r];
        }
        if let Some(l) = a.lu().solve(&rhs) {
            if l.iter().all(|v| *v > 1e-12) {
                return true;
            }
        }
        let mut i = m;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if idx[i] < k - m + i {
                idx[i] += 1;
                for j in i + 1..m {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MAMeasureEstimate {
    pub value: f64,
    pub quadrature_error: f64,
    pub set: TestSet,
}

/// `ω(B, φ, f)` with a half-resolution error estimate.
pub fn ma_measure<D: RadialDensity + ?Sized>(
    set: &TestSet,
    phi: &PLConvexFunction,
    f: &D,
    quad: &MeasureQuadrature,
) -> MAMeasureEstimate {
    let extent = set.extent();
    let fine = GradientImage::new(phi, f, extent, quad.nodes_per_axis, quad.y_radius);
    let value = fine.measure(set);
    let quadrature_error = if quad.estimate_error {
        let coarse = GradientImage::new(phi, f, extent, quad.nodes_per_axis / 2, Some(fine.y_radius));
        (coarse.measure(set) - value).abs()
    } else {
        0.0
    };
    MAMeasureEstimate { value, quadrature_error, set: set.clone() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub set: String,
    pub lhs: f64,
    pub omega: f64,
    pub residual: f64,
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidualReport {
    pub rows: Vec<ResidualRow>,
    pub max_residual: f64,
}

impl WeakResidualReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("set,lhs,omega,residual,quadrature_error\n");
        for r in &self.rows {
            s.push_str(&format!("\"{}\",{:.10e},{:.10e},{:.6e},{:.3e}\n", r.set, r.lhs, r.omega, r.residual, r.quadrature_error));
        }
        s
    }
}

/// `max_B |∫_B g − ω(B, φ, f)| / max(∫_B g, floor)`.
pub fn weak_residual<F, G>(
    phi: &PLConvexFunction,
    f: &F,
    g: &G,
    sets: &[TestSet],
    quad: &MeasureQuadrature,
) -> Result<WeakResidualReport, DensityError>
where
    F: RadialDensity + ?Sized,
    G: RadialDensity + ?Sized,
{
    let extent = sets.iter().map(TestSet::extent).fold(0.0, f64::max);
    let fine = GradientImage::new(phi, f, extent, quad.nodes_per_axis, quad.y_radius);
    let coarse = quad
        .estimate_error
        .then(|| GradientImage::new(phi, f, extent, quad.nodes_per_axis / 2, Some(fine.y_radius)));
    let mut rows = Vec::new();
    for set in sets {
        let lhs = set.mass(g)?;
        let omega = fine.measure(set);
        let err = coarse.as_ref().map_or(0.0, |c| (c.measure(set) - omega).abs());
        rows.push(ResidualRow {
            set: set.describe(),
            lhs,
            omega,
            residual: (lhs - omega).abs() / lhs.max(RESIDUAL_FLOOR),
            quadrature_error: err,
        });
    }
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(WeakResidualReport { rows, max_residual })
}

/// `max(0, 1 − |x − c| / r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TentFunction {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TentFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (1.0 - dist(x, &self.center) / self.radius).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakConvergenceReport {
    /// `∫ h dω_j` per sequence entry and test function.
    pub values: Vec<Vec<f64>>,
    pub reference: Vec<f64>,
    /// `max_h |∫ h dω_j − ∫ h dω_ref|` per entry.
    pub discrepancy: Vec<f64>,
    pub decreasing: bool,
}

impl WeakConvergenceReport {
    pub fn last(&self) -> f64 {
        self.discrepancy.last().copied().unwrap_or(0.0)
    }
}

/// Compares `∫ h dω(·, φ_j, f_j)` with the reference measure for each tent `h`.
pub fn weak_convergence_check(
    sequence: &[(&PLConvexFunction, &dyn RadialDensity)],
    reference: (&PLConvexFunction, &dyn RadialDensity),
    tests: &[TentFunction],
    quad: &MeasureQuadrature,
) -> Result<WeakConvergenceReport, String> {
    if sequence.len() < 2 {
        return Err("need at least two sequence entries".into());
    }
    if tests.is_empty() {
        return Err("need at least one test function".into());
    }
    let extent = tests.iter().map(|t| norm(&t.center) + t.radius).fold(0.0, f64::max);
    let eval = |phi: &PLConvexFunction, f: &dyn RadialDensity| -> Vec<f64> {
        let img = GradientImage::new(phi, f, extent, quad.nodes_per_axis, quad.y_radius);
        tests.iter().map(|t| img.integrate(|x| t.eval(x))).collect()
    };
    let reference_values = eval(reference.0, reference.1);
    let values: Vec<Vec<f64>> = sequence.iter().map(|(p, f)| eval(p, *f)).collect();
    let discrepancy: Vec<f64> = values
        .iter()
        .map(|v| v.iter().zip(&reference_values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let decreasing = discrepancy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
    Ok(WeakConvergenceReport { values, reference: reference_values, discrepancy, decreasing })
}
