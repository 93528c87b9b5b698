//! Numerical checks of qualitative properties of a computed potential: growth at
//! infinity, two-sided bounds on the gradient image, strict convexity at a fixed
//! scale, a Hölder exponent for the gradient, and invariance under the group.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{DensityError, DensitySpec, RadialDensity};
use crate::group::OrthogonalGroupSpec;
use crate::measure::{GradientImage, TestSet};
use crate::par;
use crate::plc::{ball_lattice, PLConvexFunction};
use crate::radial::RadialSolution;
use crate::vecmath::{dist, norm, sphere_point, unit_ball_volume};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("no sampled point satisfies φ ≤ {0}")]
    EmptySublevel(f64),
    #[error("gradient differences vanish on every sampled pair")]
    InsufficientVariation,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// A convex function with a (selected) gradient.
pub trait Potential: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Length below which the gradient carries no information (the cell size for
    /// piecewise-linear functions).
    fn resolution(&self, _radius: f64) -> f64 {
        0.0
    }
}

impl Potential for PLConvexFunction {
    fn dim(&self) -> usize {
        PLConvexFunction::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        PLConvexFunction::value(self, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_select(x)
    }

    /// Diameter of a ball whose volume is `|B_radius|` divided by the number of
    /// pieces active there.
    fn resolution(&self, radius: f64) -> f64 {
        let n = PLConvexFunction::dim(self);
        let pts = ball_lattice(n, radius, if n <= 2 { 64 } else { 16 });
        let mut seen = vec![false; self.len()];
        for x in &pts {
            seen[self.argmax(x).0] = true;
        }
        let active = seen.iter().filter(|&&s| s).count().max(1);
        2.0 * radius / (active as f64).powf(1.0 / n as f64)
    }
}

impl Potential for RadialSolution {
    fn dim(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        RadialSolution::value(self, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        RadialSolution::gradient(self, x)
    }
}

/// A potential given by closures.
pub struct Analytic<V, G> {
    pub n: usize,
    pub value: V,
    pub gradient: G,
}

impl<V, G> Potential for Analytic<V, G>
where
    V: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

/// `a|x|²/2`.
pub fn quadratic(n: usize, a: f64) -> Analytic<impl Fn(&[f64]) -> f64 + Sync, impl Fn(&[f64]) -> Vec<f64> + Sync> {
    Analytic {
        n,
        value: move |x: &[f64]| 0.5 * a * x.iter().map(|v| v * v).sum::<f64>(),
        gradient: move |x: &[f64]| x.iter().map(|v| a * v).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Properness {
    ProperTrend,
    Flat,
}

impl std::fmt::Display for Properness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Properness::ProperTrend => "PROPER-TREND",
            Properness::Flat => "FLAT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropernessReport {
    pub radii: Vec<f64>,
    pub sphere_minima: Vec<f64>,
    pub verdict: Properness,
}

impl PropernessReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,min_on_sphere\n");
        for (r, m) in self.radii.iter().zip(&self.sphere_minima) {
            s.push_str(&format!("{r:.6e},{m:.10e}\n"));
        }
        s
    }
}

fn sphere_samples(n: usize) -> usize {
    match n {
        1 => 2,
        2 => 1440,
        _ => 4096,
    }
}

/// Minimum of `φ` on each sphere `|x| = r`. The trend is proper when the minima
/// increase strictly and so do their increments.
pub fn properness_check(phi: &dyn Potential, radii: &[f64]) -> Result<PropernessReport, DiagnosticsError> {
    if radii.len() < 3 {
        return Err(DiagnosticsError::Invalid(format!("need at least 3 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(DiagnosticsError::Invalid("radii must be positive and increasing".into()));
    }
    let n = phi.dim();
    let dirs: Vec<Vec<f64>> = (0..sphere_samples(n)).map(|i| sphere_point(n, i)).collect();
    let mins: Vec<f64> = radii
        .iter()
        .map(|&r| {
            par::min_range(dirs.len(), |i| {
                let x: Vec<f64> = dirs[i].iter().map(|v| v * r).collect();
                phi.value(&x)
            })
        })
        .collect();
    let rising = mins.windows(2).all(|w| w[1] > w[0]);
    let inc: Vec<f64> = mins.windows(2).map(|w| w[1] - w[0]).collect();
    let accelerating = inc.windows(2).all(|w| w[1] > w[0]);
    let verdict = if rising && accelerating { Properness::ProperTrend } else { Properness::Flat };
    Ok(PropernessReport { radii: radii.to_vec(), sphere_minima: mins, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq4Sample {
    pub center: Vec<f64>,
    pub radius: f64,
    /// `|∇φ(B)| / |B|`.
    pub ratio: f64,
    /// Mean of `g` over `B` divided by `f(∇φ(center))`, the value the equation predicts.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq4Report {
    pub c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub samples: Vec<Eq4Sample>,
}

/// Two-sided bounds `λ₁|B| ≤ |∇φ(B)| ≤ λ₂|B|` over random balls inside the
/// sublevel set `{φ ≤ c}`, searched within `B_domain`.
#[allow(clippy::too_many_arguments)]
pub fn eq4_bounds<F, G>(
    phi: &PLConvexFunction,
    f: &F,
    g: &G,
    c: f64,
    domain: f64,
    balls: usize,
    nodes_per_axis: usize,
    seed: u64,
) -> Result<Eq4Report, DiagnosticsError>
where
    F: RadialDensity + ?Sized,
    G: RadialDensity + ?Sized,
{
    let n = phi.dim();
    if balls == 0 {
        return Err(DiagnosticsError::Invalid("balls must be positive".into()));
    }
    let lattice = ball_lattice(n, domain, if n <= 2 { 64 } else { 16 });
    let inside: Vec<&Vec<f64>> = lattice.iter().filter(|x| phi.value(x) <= c).collect();
    let reach = inside.iter().map(|x| norm(x)).fold(0.0, f64::max);
    if inside.is_empty() || reach == 0.0 {
        return Err(DiagnosticsError::EmptySublevel(c));
    }
    let dirs: Vec<Vec<f64>> = (0..if n <= 2 { 64 } else { 256 }).map(|i| sphere_point(n, i)).collect();
    let ball_inside = |x: &[f64], rho: f64| {
        dirs.iter().all(|d| {
            let p: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + rho * b).collect();
            phi.value(&p) <= c
        })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut rho = 0.25 * reach;
    for _ in 0..6 {
        for _ in 0..20 * balls {
            if chosen.len() == balls {
                break;
            }
            let x = inside[rng.gen_range(0..inside.len())].clone();
            if ball_inside(&x, rho) {
                chosen.push((x, rho));
            }
        }
        if !chosen.is_empty() {
            break;
        }
        rho *= 0.5;
    }
    if chosen.is_empty() {
        return Err(DiagnosticsError::EmptySublevel(c));
    }
    let one = DensitySpec::constant(n, 1.0)?;
    let extent = chosen.iter().map(|(x, r)| norm(x) + r).fold(0.0, f64::max);
    let image = GradientImage::new(phi, &one, extent, nodes_per_axis, None);
    let vol = unit_ball_volume(n);
    let mut samples = Vec::with_capacity(chosen.len());
    for (center, radius) in chosen {
        let set = TestSet::ball(center.clone(), radius);
        let b = vol * radius.powi(n as i32);
        let ratio = image.measure(&set) / b;
        let predicted = set.mass(g)? / b / f.eval(&phi.gradient_select(&center));
        samples.push(Eq4Sample { center, radius, ratio, predicted });
    }
    let lambda1 = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    let lambda2 = samples.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(Eq4Report { c, lambda1, lambda2, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityProbe {
    pub segments: usize,
    pub length: f64,
    pub min_gap: f64,
    /// Share of segments whose gap exceeds rounding level.
    pub positive_fraction: f64,
}

/// Smallest midpoint gap `(φ(x)+φ(y))/2 − φ((x+y)/2)` over random segments of the
/// given length inside `B_domain`.
pub fn strict_convexity_probe(
    phi: &dyn Potential,
    segments: usize,
    length: f64,
    domain: f64,
    seed: u64,
) -> Result<ConvexityProbe, DiagnosticsError> {
    if segments == 0 || length <= 0.0 || 2.0 * domain <= length {
        return Err(DiagnosticsError::Invalid("need segments ≥ 1 and 0 < length < diameter".into()));
    }
    let n = phi.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..segments)
        .map(|_| {
            let m = uniform_in_ball(&mut rng, n, domain - 0.5 * length);
            let u = random_direction(&mut rng, n);
            let x = m.iter().zip(&u).map(|(a, b)| a - 0.5 * length * b).collect();
            let y = m.iter().zip(&u).map(|(a, b)| a + 0.5 * length * b).collect();
            (x, y)
        })
        .collect();
    let gaps = par::map_range(pairs.len(), |i| {
        let (x, y) = &pairs[i];
        let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        let (vx, vy) = (phi.value(x), phi.value(y));
        (0.5 * (vx + vy) - phi.value(&mid), 1e-12 * (1.0 + vx.abs() + vy.abs()))
    });
    let min_gap = gaps.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
    let positive = gaps.iter().filter(|(g, eps)| g > eps).count();
    Ok(ConvexityProbe { segments, length, min_gap, positive_fraction: positive as f64 / segments as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderWindow {
    pub beta: f64,
    pub residual: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    /// Fitted exponent over all pairs, clipped to `(0, 1]`.
    pub beta: f64,
    /// RMS residual of the log–log fit.
    pub residual: f64,
    pub min_separation: f64,
    /// Pairs with both points at distance at least a quarter of the domain from 0.
    pub away_from_origin: Option<HolderWindow>,
    /// Pairs on opposite sides of the origin along a line through it.
    pub straddling_origin: Option<HolderWindow>,
    pub low_confidence: bool,
    /// `(log separation, log gradient difference)` of the pairs used in the fit.
    pub points: Vec<(f64, f64)>,
}

const BETA_FLOOR: f64 = 1e-6;
const LOW_CONFIDENCE_RESIDUAL: f64 = 0.3;
const LOW_CONFIDENCE_BETA: f64 = 0.1;

fn fit_loglog(points: &[(f64, f64)]) -> Option<HolderWindow> {
    let m = points.len();
    if m < 3 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let residual = (points.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / m as f64).sqrt();
    Some(HolderWindow { beta: slope.clamp(BETA_FLOOR, 1.0), residual, pairs: m })
}

/// Least-squares slope of `log‖∇φ(x) − ∇φ(y)‖` against `log|x − y|` over random
/// pairs in `B_domain` separated by more than `min_separation` (by default the
/// potential's resolution).
pub fn holder_gradient_fit(
    phi: &dyn Potential,
    domain: f64,
    pairs: usize,
    min_separation: Option<f64>,
    seed: u64,
) -> Result<HolderFit, DiagnosticsError> {
    if pairs < 100 {
        return Err(DiagnosticsError::Invalid(format!("need at least 100 pairs, got {pairs}")));
    }
    let n = phi.dim();
    let sep = min_separation.unwrap_or_else(|| phi.resolution(domain));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut general = Vec::new();
    let mut away = Vec::new();
    let mut attempts = 0;
    while general.len() < pairs && attempts < 50 * pairs {
        attempts += 1;
        let x = uniform_in_ball(&mut rng, n, domain);
        let y = uniform_in_ball(&mut rng, n, domain);
        let d = dist(&x, &y);
        if d <= sep {
            continue;
        }
        let gd = dist(&phi.gradient(&x), &phi.gradient(&y));
        if gd <= 0.0 {
            general.push(None);
            continue;
        }
        let p = (d.ln(), gd.ln());
        general.push(Some(p));
        if norm(&x) >= 0.25 * domain && norm(&y) >= 0.25 * domain {
            away.push(p);
        }
    }
    let mut straddle = Vec::new();
    for _ in 0..pairs / 2 {
        let u = random_direction(&mut rng, n);
        let a = rng.gen_range(0.05..1.0) * domain;
        let b = rng.gen_range(0.5..1.0) * a;
        let x: Vec<f64> = u.iter().map(|v| v * a).collect();
        let y: Vec<f64> = u.iter().map(|v| -v * b).collect();
        if a + b <= sep {
            continue;
        }
        let gd = dist(&phi.gradient(&x), &phi.gradient(&y));
        if gd > 0.0 {
            straddle.push(((a + b).ln(), gd.ln()));
        }
    }
    let zero = general.iter().filter(|p| p.is_none()).count();
    let points: Vec<(f64, f64)> = general.into_iter().flatten().collect();
    let main = fit_loglog(&points).ok_or(DiagnosticsError::InsufficientVariation)?;
    let away_from_origin = fit_loglog(&away);
    let straddling_origin = fit_loglog(&straddle);
    let low_confidence = main.residual > LOW_CONFIDENCE_RESIDUAL
        || 2 * zero > points.len() + zero
        || [&away_from_origin, &straddling_origin].iter().any(|w| w.as_ref().is_some_and(|w| w.beta < LOW_CONFIDENCE_BETA));
    Ok(HolderFit {
        beta: main.beta,
        residual: main.residual,
        min_separation: sep,
        away_from_origin,
        straddling_origin,
        low_confidence,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    /// `max |φ(gx) − φ(x)|` over the grid and the group.
    pub value_violation: f64,
    /// `max ‖∇φ(gx) − g∇φ(x)‖` over the sample points.
    pub gradient_violation: f64,
}

/// Invariance of `φ` and equivariance of its gradient under every element of
/// `group`. Gradients are compared at `centers` (cell centres for piecewise-linear
/// functions, see [`cell_centers`]).
pub fn equivariance_check(
    phi: &dyn Potential,
    group: &OrthogonalGroupSpec,
    grid: &[Vec<f64>],
    centers: &[Vec<f64>],
) -> EquivarianceReport {
    let els = group.elements();
    let value_violation = par::max_range(grid.len(), |i| {
        let x = &grid[i];
        let v = phi.value(x);
        els.iter().map(|g| (phi.value(&g.apply(x)) - v).abs()).fold(0.0, f64::max)
    })
    .max(0.0);
    let gradient_violation = par::max_range(centers.len(), |i| {
        let x = &centers[i];
        let gx = phi.gradient(x);
        els.iter().map(|g| dist(&phi.gradient(&g.apply(x)), &g.apply(&gx))).fold(0.0, f64::max)
    })
    .max(0.0);
    EquivarianceReport { value_violation, gradient_violation }
}

/// Mean of the grid points selecting each piece, for the pieces selected somewhere.
pub fn cell_centers(phi: &PLConvexFunction, grid: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = phi.dim();
    let mut sum = vec![vec![0.0; n]; phi.len()];
    let mut cnt = vec![0usize; phi.len()];
    for x in grid {
        let i = phi.argmax(x).0;
        cnt[i] += 1;
        for (s, v) in sum[i].iter_mut().zip(x) {
            *s += v;
        }
    }
    sum.into_iter()
        .zip(cnt)
        .filter(|(_, c)| *c > 0)
        .map(|(s, c)| s.into_iter().map(|v| v / c as f64).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub properness: PropernessReport,
    pub eq4_bounds: Option<Eq4Report>,
    pub eq4_error: Option<String>,
    pub strict_convexity: ConvexityProbe,
    pub holder: Option<HolderFit>,
    pub holder_error: Option<String>,
    pub equivariance: EquivarianceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsOptions {
    pub segments: usize,
    pub segment_length: f64,
    pub holder_pairs: usize,
    pub eq4_balls: usize,
    /// Sublevel for the gradient-image bounds, as a fraction of `max φ` on the domain.
    pub eq4_level: f64,
    pub eq4_nodes: usize,
    pub seed: u64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { segments: 500, segment_length: 0.1, holder_pairs: 400, eq4_balls: 8, eq4_level: 0.5, eq4_nodes: 160, seed: 7 }
    }
}

/// All checks on `B_radius`.
pub fn run_diagnostics<F, G>(
    phi: &PLConvexFunction,
    f: &F,
    g: &G,
    group: &OrthogonalGroupSpec,
    radius: f64,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport, DiagnosticsError>
where
    F: RadialDensity + ?Sized,
    G: RadialDensity + ?Sized,
{
    let n = phi.dim();
    let radii: Vec<f64> = (1..=4).map(|i| radius * i as f64 / 4.0).collect();
    let properness = properness_check(phi, &radii)?;
    let grid = ball_lattice(n, radius, if n <= 2 { 40 } else { 12 });
    let top = grid.iter().map(|x| phi.value(x)).fold(f64::NEG_INFINITY, f64::max);
    let (eq4_bounds, eq4_error) =
        match eq4_bounds(phi, f, g, opts.eq4_level * top, radius, opts.eq4_balls, opts.eq4_nodes, opts.seed) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let length = opts.segment_length.min(radius);
    let strict_convexity = strict_convexity_probe(phi, opts.segments, length, radius, opts.seed)?;
    let (holder, holder_error) = match holder_gradient_fit(phi, radius, opts.holder_pairs, None, opts.seed) {
        Ok(h) => (Some(h), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let equivariance = equivariance_check(phi, group, &grid, &cell_centers(phi, &grid));
    Ok(DiagnosticsReport { properness, eq4_bounds, eq4_error, strict_convexity, holder, holder_error, equivariance })
}

fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

fn uniform_in_ball<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if norm(&v) <= 1.0 {
            return v.iter().map(|x| x * radius).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::cyclic;
    use crate::plc::{sampled_cone, sampled_quadratic};

    #[test]
    fn properness_of_quadratic_and_constant() {
        let q = quadratic(2, 1.0);
        let r = properness_check(&q, &[1.0, 2.0, 3.0]).unwrap();
        for (m, e) in r.sphere_minima.iter().zip([0.5, 2.0, 4.5]) {
            assert!((m - e).abs() < 1e-12);
        }
        assert_eq!(r.verdict, Properness::ProperTrend);
        let zero = PLConvexFunction::new(2, vec![vec![0.0, 0.0]], vec![0.0]).unwrap();
        assert_eq!(properness_check(&zero, &[1.0, 2.0, 3.0]).unwrap().verdict, Properness::Flat);
    }

    #[test]
    fn midpoint_gap_of_quadratic() {
        let q = quadratic(2, 1.0);
        let p = strict_convexity_probe(&q, 50, 0.1, 1.0, 3).unwrap();
        assert!((p.min_gap - 1.25e-3).abs() < 1e-12);
        let affine = PLConvexFunction::new(2, vec![vec![1.0, 2.0]], vec![0.5]).unwrap();
        assert!(strict_convexity_probe(&affine, 50, 0.1, 1.0, 3).unwrap().min_gap.abs() < 1e-12);
    }

    #[test]
    fn holder_exponents() {
        let q = quadratic(2, 1.0);
        let h = holder_gradient_fit(&q, 1.0, 200, None, 1).unwrap();
        assert!(h.beta >= 0.95 && !h.low_confidence);
        let pq = sampled_quadratic(2, 1.0, 1.2, 40);
        let h = holder_gradient_fit(&pq, 1.0, 400, None, 1).unwrap();
        assert!(h.beta >= 0.9 && !h.low_confidence, "{h:?}");
        let cone = sampled_cone(2, 64);
        let h = holder_gradient_fit(&cone, 1.0, 400, None, 1).unwrap();
        assert!(h.low_confidence, "{h:?}");
        let flat = PLConvexFunction::new(2, vec![vec![0.3, 0.0]], vec![0.0]).unwrap();
        assert!(matches!(holder_gradient_fit(&flat, 1.0, 200, None, 1), Err(DiagnosticsError::InsufficientVariation)));
    }

    #[test]
    fn gradient_image_ratio_of_scaled_quadratic() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        for a in [1.0, 2.0] {
            let phi = sampled_quadratic(2, a, 2.5, 60);
            let r = eq4_bounds(&phi, &one, &one, 0.5 * a, 1.5, 6, 200, 11).unwrap();
            assert!(r.lambda1 <= r.lambda2);
            assert!((r.lambda1 - a * a).abs() < 0.1 * a * a, "{r:?}");
            assert!((r.lambda2 - a * a).abs() < 0.1 * a * a, "{r:?}");
        }
        let phi = sampled_quadratic(2, 1.0, 1.0, 10);
        assert!(matches!(eq4_bounds(&phi, &one, &one, -1.0, 1.0, 4, 50, 1), Err(DiagnosticsError::EmptySublevel(_))));
    }

    #[test]
    fn injected_fault_is_detected() {
        let c8 = cyclic(8).unwrap();
        let grid = ball_lattice(2, 1.0, 30);
        let reps: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let (r, t) = (1.2 * ((i as f64 + 0.5) / 60.0).sqrt(), 0.785 * ((i as f64 * 0.618034) % 1.0));
                vec![r * t.cos(), r * t.sin()]
            })
            .collect();
        let (pts, _) = crate::sdot::orbit_complete(&reps, &c8);
        let q = quadratic(2, 1.0);
        let sym = PLConvexFunction::tangent_planes(2, &pts, |x| q.value(x), |x| q.gradient(x)).unwrap();
        let clean = equivariance_check(&sym, &c8, &grid, &cell_centers(&sym, &grid));
        assert!(clean.value_violation <= 1e-10, "{clean:?}");
        let mut bad = sym.clone();
        let i = bad.argmax(&[0.4, 0.3]).0;
        bad.intercepts_mut()[i] += 1e-3;
        let rep = equivariance_check(&bad, &c8, &grid, &cell_centers(&bad, &grid));
        assert!(rep.value_violation >= 5e-4, "{rep:?}");
    }
}
