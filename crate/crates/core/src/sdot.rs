//! Semi-discrete transport from `g_k` on `B_k` to atoms in `B_{R_k}`.
//!
//! The potential is `φ(x) = max_i ⟨y_i, x⟩ − c_i` with one intercept per group orbit.
//! Intercepts maximize the concave dual `D(c) = −Σ ν_i c_i − ∫ g_k φ`, whose gradient
//! in `−c` is `ν − m(c)` where `m_i` is the `g_k`-mass of the cell of piece `i`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ball_grid::{BallGrid, GridSpec};
use crate::density::{DensityError, PerturbedDensity, RadialDensity};
use crate::group::{orbit, OrthogonalGroupSpec};
use crate::par;
use crate::plc::PLConvexFunction;
use crate::radial::{solve_radial, RadialError};
use crate::vecmath::{dist, dot, norm, radical_inverse, unit_ball_volume, PRIMES};

#[derive(Debug, Error)]
pub enum SdotError {
    #[error("only {found} distinct target points survived; need at least {needed}")]
    DegenerateTargets { found: usize, needed: usize },
    #[error("target masses sum to {found}, expected {expected}")]
    MassMismatch { found: f64, expected: f64 },
    #[error("target {index} lies outside the target ball (|y| = {norm}, R = {radius})")]
    TargetOutsideBall { index: usize, norm: f64, radius: f64 },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("solver did not reach tolerance in {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64, best: Box<SolveOutput> },
    #[error("a cell with positive target mass stayed empty: piece {0}")]
    EmptyCell(usize),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Radial(#[from] RadialError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub point: Vec<f64>,
    pub mass: f64,
    pub orbit: usize,
}

/// One inner transport problem.
#[derive(Debug, Clone)]
pub struct OTProblemInstance {
    pub source_radius: f64,
    pub source_density: PerturbedDensity,
    pub targets: Vec<Target>,
    pub target_radius: f64,
}

impl OTProblemInstance {
    /// Checks total mass, support and per-orbit mass equality.
    pub fn new(
        source_radius: f64,
        source_density: PerturbedDensity,
        targets: Vec<Target>,
        target_radius: f64,
    ) -> Result<Self, SdotError> {
        let n = source_density.dimension();
        if targets.len() < n + 1 {
            return Err(SdotError::DegenerateTargets { found: targets.len(), needed: n + 1 });
        }
        let expected = source_density.ball_mass(source_radius)?;
        let found: f64 = targets.iter().map(|t| t.mass).sum();
        if (found - expected).abs() > 1e-8 * expected {
            return Err(SdotError::MassMismatch { found, expected });
        }
        for (i, t) in targets.iter().enumerate() {
            if t.point.len() != n {
                return Err(SdotError::Invalid(format!("target {i} has dimension {}", t.point.len())));
            }
            if !(t.mass > 0.0) {
                return Err(SdotError::Invalid(format!("target {i} has nonpositive mass")));
            }
            let r = norm(&t.point);
            if r > target_radius * (1.0 + 1e-12) {
                return Err(SdotError::TargetOutsideBall { index: i, norm: r, radius: target_radius });
            }
        }
        let orbits = targets.iter().map(|t| t.orbit).max().unwrap_or(0) + 1;
        let mut first = vec![f64::NAN; orbits];
        for t in &targets {
            let m = &mut first[t.orbit];
            if m.is_nan() {
                *m = t.mass;
            } else if (*m - t.mass).abs() > 1e-12 * m.abs() {
                return Err(SdotError::Invalid(format!("orbit {} carries unequal masses", t.orbit)));
            }
        }
        Ok(Self { source_radius, source_density, targets, target_radius })
    }

    pub fn dimension(&self) -> usize {
        self.source_density.dimension()
    }

    pub fn orbit_count(&self) -> usize {
        self.targets.iter().map(|t| t.orbit).max().map_or(0, |m| m + 1)
    }

    pub fn potential(&self, intercepts: &[f64]) -> PLConvexFunction {
        let n = self.dimension();
        PLConvexFunction::new(n, self.targets.iter().map(|t| t.point.clone()).collect(), intercepts.to_vec())
            .expect("validated instance")
            .with_orbits(self.targets.iter().map(|t| t.orbit).collect())
    }

    /// Checks that the target set is invariant under `group` with equal masses on
    /// orbits; returns the largest mismatch distance.
    pub fn orbit_defect(&self, group: &OrthogonalGroupSpec) -> f64 {
        let mut worst: f64 = 0.0;
        for t in &self.targets {
            for g in group.elements() {
                let p = g.apply(&t.point);
                let d = self
                    .targets
                    .iter()
                    .filter(|s| s.orbit == t.orbit)
                    .map(|s| dist(&s.point, &p))
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Expands each point to its full orbit. Returns the points and their orbit ids.
pub fn orbit_complete(points: &[Vec<f64>], group: &OrthogonalGroupSpec) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut out = Vec::new();
    let mut ids = Vec::new();
    for (k, p) in points.iter().enumerate() {
        for q in orbit(p, group).points {
            out.push(q);
            ids.push(k);
        }
    }
    (out, ids)
}

/// How target points are spread over `B_{R_k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetLayout {
    /// Radius of the densely sampled core; the annulus outside gets spacing growing
    /// linearly with the radius. `None` samples the whole ball uniformly.
    pub focus_radius: Option<f64>,
    /// Share of the point budget placed in the core.
    pub core_fraction: f64,
    /// Grid resolution for the Voronoi cell masses.
    pub mass_resolution: usize,
    /// Lloyd sweeps applied to the core points (each moves to its cell centroid).
    pub lloyd_iterations: usize,
}

impl Default for TargetLayout {
    fn default() -> Self {
        Self { focus_radius: None, core_fraction: 0.8, mass_resolution: 128, lloyd_iterations: 0 }
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn halton_point(i: usize, dims: usize, offset: usize) -> Vec<f64> {
    (0..dims).map(|d| radical_inverse(i as u64, PRIMES[(d + offset) % PRIMES.len()])).collect()
}

fn min_dist(pts: &[Vec<f64>], q: &[f64]) -> f64 {
    pts.iter().map(|p| dist(p, q)).fold(f64::INFINITY, f64::min)
}

/// Orbit-complete point set with at most `count` points (one orbit is always
/// placed). Orbits are accepted whole and greedily, keeping a minimum separation.
pub fn place_targets(
    n: usize,
    r_k: f64,
    count: usize,
    group: &OrthogonalGroupSpec,
    layout: &TargetLayout,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), SdotError> {
    let focus = layout.focus_radius.unwrap_or(r_k).min(r_k);
    let (core_budget, _) = if focus >= r_k {
        (count, 0)
    } else {
        let c = ((count as f64) * layout.core_fraction).round() as usize;
        (c.max(1), count - c.min(count))
    };
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let mut ids: Vec<usize> = Vec::new();
    let mut next_orbit = 0;
    let vol = unit_ball_volume(n);
    let s_core = (vol * focus.powi(n as i32) / core_budget as f64).powf(1.0 / n as f64);
    let sep = 0.7 * s_core;
    let tries = 400 * count + 1000;
    let accept = |pts: &mut Vec<Vec<f64>>, ids: &mut Vec<usize>, next: &mut usize, cand: Vec<Vec<f64>>| {
        pts.extend(cand.iter().cloned());
        ids.extend(std::iter::repeat_n(*next, cand.len()));
        *next += 1;
    };
    if n == 2 {
        // Golden-angle spiral in the wedge of angle 2π/|K|; every orbit then has its
        // own radius and the orbits fill the disc evenly.
        let wedge = 2.0 * std::f64::consts::PI / group.order() as f64;
        let reps = (core_budget / group.order()).max(1);
        for j in 0..reps {
            let r = focus * ((j as f64 + 0.5) / reps as f64).sqrt();
            let t = wedge * ((j as f64 + 0.5) * GOLDEN).fract();
            let orb = orbit(&[r * t.cos(), r * t.sin()], group).points;
            if pts.len() + orb.len() <= core_budget || pts.is_empty() {
                accept(&mut pts, &mut ids, &mut next_orbit, orb);
            }
        }
    }
    for i in 1..=tries {
        if n == 2 || pts.len() >= core_budget {
            break;
        }
        let u = halton_point(i, n, 0);
        let x: Vec<f64> = u.iter().map(|v| focus * (2.0 * v - 1.0)).collect();
        let r = norm(&x);
        if r > focus || r < 1e-9 * focus {
            continue;
        }
        let orb = orbit(&x, group).points;
        if !pts.is_empty() && pts.len() + orb.len() > core_budget {
            continue;
        }
        let spread = orb.iter().enumerate().all(|(a, p)| orb[a + 1..].iter().all(|q| dist(p, q) >= sep));
        if spread && orb.iter().all(|p| min_dist(&pts, p) >= sep) {
            accept(&mut pts, &mut ids, &mut next_orbit, orb);
        }
    }
    if focus < r_k && pts.len() + 1 < count {
        let budget = count - 1;
        let n_out = (budget - pts.len()).max(1);
        let ratio = (r_k / focus).ln();
        let kappa = (n as f64 * vol * ratio / n_out as f64).powf(1.0 / n as f64);
        for i in 1..=tries {
            if pts.len() >= budget {
                break;
            }
            let u = halton_point(i, n, 3);
            let r = focus * (r_k / focus).powf(u[0]);
            let dir: Vec<f64> = match n {
                1 => vec![if u.get(1).copied().unwrap_or(0.0) < 0.5 { 1.0 } else { -1.0 }],
                2 => {
                    let t = 2.0 * std::f64::consts::PI * u[1];
                    vec![t.cos(), t.sin()]
                }
                _ => {
                    let z = 1.0 - 2.0 * u[1];
                    let ph = 2.0 * std::f64::consts::PI * u[2];
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let mut d = vec![s * ph.cos(), s * ph.sin(), z];
                    d.resize(n, 0.0);
                    let nd = norm(&d);
                    d.iter_mut().for_each(|v| *v /= nd);
                    d
                }
            };
            let x: Vec<f64> = dir.iter().map(|v| v * r).collect();
            let orb = orbit(&x, group).points;
            if pts.len() + orb.len() > budget {
                continue;
            }
            let local = 0.7 * kappa * r;
            let spread = orb.iter().enumerate().all(|(a, p)| orb[a + 1..].iter().all(|q| dist(p, q) >= local));
            if spread && orb.iter().all(|p| min_dist(&pts, p) >= local.min(0.7 * kappa * norm(p)).max(sep)) {
                accept(&mut pts, &mut ids, &mut next_orbit, orb);
            }
        }
    }
    let origin = vec![0.0; n];
    if pts.len() < count && min_dist(&pts, &origin) >= 0.5 * sep {
        accept(&mut pts, &mut ids, &mut next_orbit, vec![origin]);
    }
    if pts.len() < n + 1 {
        return Err(SdotError::DegenerateTargets { found: pts.len(), needed: n + 1 });
    }
    Ok((pts, ids))
}

fn voronoi(points: &[Vec<f64>]) -> Result<PLConvexFunction, SdotError> {
    let n = points[0].len();
    PLConvexFunction::new(n, points.to_vec(), points.iter().map(|p| 0.5 * dot(p, p)).collect())
        .map_err(|e| SdotError::Invalid(e.to_string()))
}

fn mass_grid<D: RadialDensity + ?Sized>(f_k: &D, r_k: f64, res: usize, core_radius: f64) -> Result<BallGrid, SdotError> {
    let spec = GridSpec { res, core_radius: core_radius * 1.2, core_fraction: 0.7, depth: 3, angular_multiple: 16 };
    Ok(BallGrid::new(f_k, r_k, spec)?)
}

/// Lloyd relaxation of the orbits lying in `B_focus`: each orbit is rebuilt from
/// the `f_k`-centroid of its first point's Voronoi cell. Orbits whose size would
/// change are left in place.
pub fn relax_targets<D: RadialDensity + ?Sized>(
    points: &mut [Vec<f64>],
    orbits: &[usize],
    group: &OrthogonalGroupSpec,
    f_k: &D,
    r_k: f64,
    focus: f64,
    res: usize,
    iterations: usize,
) -> Result<(), SdotError> {
    if iterations == 0 {
        return Ok(());
    }
    let grid = mass_grid(f_k, r_k, res, focus)?;
    let no = orbits.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); no];
    for (i, &o) in orbits.iter().enumerate() {
        members[o].push(i);
    }
    for _ in 0..iterations {
        let acc = grid.assign(&voronoi(points)?, false);
        for m in &members {
            let first = m[0];
            if norm(&points[first]) > focus || norm(&points[first]) == 0.0 {
                continue;
            }
            let Some(mut c) = acc.centroid(first) else { continue };
            let r = norm(&c);
            if r > focus {
                c.iter_mut().for_each(|v| *v *= focus / r);
            }
            let orb = orbit(&c, group).points;
            if orb.len() == m.len() {
                for (&i, q) in m.iter().zip(orb) {
                    points[i] = q;
                }
            }
        }
    }
    Ok(())
}

/// `∫ f_k` over the Voronoi cells of `points` inside `B_{r_k}`, averaged over each
/// orbit. The cell masses sum to the ball mass within `1e−6` relative.
pub fn target_masses<D: RadialDensity + ?Sized>(
    points: &[Vec<f64>],
    orbits: &[usize],
    f_k: &D,
    r_k: f64,
    res: usize,
    core_radius: f64,
) -> Result<Vec<f64>, SdotError> {
    let grid = mass_grid(f_k, r_k, res, core_radius)?;
    let acc = grid.assign(&voronoi(points)?, false);
    let total: f64 = acc.masses.iter().sum();
    let exact = f_k.ball_mass(r_k)?;
    if (total - exact).abs() > 1e-6 * exact {
        return Err(SdotError::MassMismatch { found: total, expected: exact });
    }
    let no = orbits.iter().max().map_or(0, |m| m + 1);
    let mut sum = vec![0.0; no];
    let mut cnt = vec![0usize; no];
    for (i, &o) in orbits.iter().enumerate() {
        sum[o] += acc.masses[i];
        cnt[o] += 1;
    }
    Ok(orbits.iter().map(|&o| sum[o] / cnt[o] as f64).collect())
}

/// Orbit-complete targets in `B_{r_k}` with Voronoi masses of `f_k`, rescaled to
/// sum to `total_mass`.
pub fn sample_targets(
    f_k: &PerturbedDensity,
    r_k: f64,
    count: usize,
    group: &OrthogonalGroupSpec,
    total_mass: f64,
    layout: &TargetLayout,
) -> Result<Vec<Target>, SdotError> {
    let n = f_k.dimension();
    let (mut pts, ids) = place_targets(n, r_k, count, group, layout)?;
    let focus = layout.focus_radius.unwrap_or(r_k).min(r_k);
    relax_targets(&mut pts, &ids, group, f_k, r_k, focus, layout.mass_resolution, layout.lloyd_iterations)?;
    let masses = target_masses(&pts, &ids, f_k, r_k, layout.mass_resolution, focus)?;
    let sum: f64 = masses.iter().sum();
    let scale = total_mass / sum;
    Ok(pts
        .into_iter()
        .zip(ids)
        .zip(masses)
        .map(|((point, orbit), m)| Target { point, mass: m * scale, orbit })
        .collect())
}

/// `g_k`-masses of the cells of `max_i ⟨y_i, x⟩ − c_i` on `B_k`.
pub fn cell_masses(inst: &OTProblemInstance, intercepts: &[f64], grid: &BallGrid) -> Vec<f64> {
    grid.assign(&inst.potential(intercepts), false).masses
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Damped Newton with an interface-flux estimate of the Hessian.
    Newton,
    /// Preconditioned gradient ascent (diagonal of the Hessian estimate).
    Gradient,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Largest relative orbit-mass error at termination.
    pub tol: f64,
    pub max_iter: usize,
    pub method: SolveMethod,
    #[serde(skip, default = "default_grid")]
    pub grid: GridSpec,
}

fn default_grid() -> GridSpec {
    GridSpec::uniform(64)
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 5e-4, max_iter: 60, method: SolveMethod::Newton, grid: default_grid() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub iterations: usize,
    /// Largest relative orbit-mass error.
    pub final_residual: f64,
    /// Largest relative single-cell mass error.
    pub cell_residual: f64,
    /// Dual objective after each accepted step (starting with the initial point),
    /// accumulated from gradient-based increments.
    pub objective: Vec<f64>,
    /// The objective evaluated directly at each iterate. For large problems its
    /// rounding error exceeds the late increments.
    pub objective_raw: Vec<f64>,
    pub residuals: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub mixed_elements: usize,
    pub empty_cells: usize,
    pub converged: bool,
}

impl SolverTrace {
    pub fn is_monotone(&self) -> bool {
        self.objective.windows(2).all(|w| w[1] >= w[0])
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// Normalized so that `φ(0) = 0`.
    pub phi: PLConvexFunction,
    pub trace: SolverTrace,
    /// Intercepts before normalization.
    pub intercepts: Vec<f64>,
}

struct Eval {
    orbit_mass: Vec<f64>,
    cell_mass: Vec<f64>,
    objective: f64,
    pairs: Vec<(u32, u32, f64)>,
    mixed: usize,
}

/// Starting intercepts from the radial solution of the dual problem, which is exact
/// for rotation-invariant data in the continuum limit.
pub fn radial_initial_intercepts(inst: &OTProblemInstance, f_k: &PerturbedDensity) -> Result<Vec<f64>, SdotError> {
    let ymax = inst.targets.iter().map(|t| norm(&t.point)).fold(0.0, f64::max).max(1e-9);
    let dual = solve_radial(&inst.source_density, f_k, ymax * 1.001, 2000)?;
    Ok(inst.targets.iter().map(|t| dual.phi_at(norm(&t.point))).collect())
}

/// Finds orbit-constant intercepts whose cells carry the target masses.
pub fn solve_weights(inst: &OTProblemInstance, init: &[f64], opts: &SolveOptions) -> Result<SolveOutput, SdotError> {
    let grid = BallGrid::new(&inst.source_density, inst.source_radius, opts.grid)?;
    solve_on_grid(inst, &grid, init, opts)
}

/// `∫_F g ds / |y_i − y_j|` over the facets `F` between cell `i` of `phi` and its
/// neighbours, with the ball replaced by an inscribed polygon.
fn facet_fluxes_2d<D: RadialDensity + ?Sized>(phi: &PLConvexFunction, i: usize, g: &D, radius: f64) -> Vec<(usize, f64)> {
    const SIDES: usize = 192;
    let yi = phi.slope(i);
    let mut poly: Vec<[f64; 2]> = (0..SIDES)
        .map(|s| {
            let t = 2.0 * std::f64::consts::PI * s as f64 / SIDES as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    let mut order: Vec<usize> = (0..phi.len()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| dist(phi.slope(a), yi).total_cmp(&dist(phi.slope(b), yi)));
    let plane = |j: usize| -> ([f64; 2], f64) {
        let yj = phi.slope(j);
        ([yi[0] - yj[0], yi[1] - yj[1]], phi.intercept(i) - phi.intercept(j))
    };
    for &j in &order {
        let (a, r) = plane(j);
        if poly.iter().all(|p| a[0] * p[0] + a[1] * p[1] - r >= 0.0) {
            continue;
        }
        poly = crate::plc::clip(&poly, a, r, 0.0);
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    let (gx, gw) = crate::quadrature::gauss_legendre(6);
    let scale = radius * (1.0 + phi.max_slope_norm());
    let mut out: Vec<(usize, f64)> = Vec::new();
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        if len <= 1e-14 * radius {
            continue;
        }
        let mut best = (f64::INFINITY, usize::MAX, 0.0);
        for &j in &order {
            let (a, r) = plane(j);
            let an = (a[0] * a[0] + a[1] * a[1]).sqrt();
            if an == 0.0 {
                continue;
            }
            let gap = (a[0] * p[0] + a[1] * p[1] - r).abs().max((a[0] * q[0] + a[1] * q[1] - r).abs());
            if gap < best.0 * an {
                best = (gap / an, j, an);
            }
        }
        if best.1 == usize::MAX || best.0 > 1e-9 * scale {
            continue;
        }
        let flux: f64 = gx
            .iter()
            .zip(&gw)
            .map(|(t, w)| {
                let s = 0.5 * (1.0 + t);
                w * 0.5 * g.eval(&[p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])])
            })
            .sum::<f64>()
            * len;
        match out.iter_mut().find(|e| e.0 == best.1) {
            Some(e) => e.1 += flux / best.2,
            None => out.push((best.1, flux / best.2)),
        }
    }
    out
}

pub fn solve_on_grid(
    inst: &OTProblemInstance,
    grid: &BallGrid,
    init: &[f64],
    opts: &SolveOptions,
) -> Result<SolveOutput, SdotError> {
    let p = inst.targets.len();
    let no = inst.orbit_count();
    if init.len() != p {
        return Err(SdotError::Invalid(format!("{} initial intercepts for {p} targets", init.len())));
    }
    let orbit_of: Vec<usize> = inst.targets.iter().map(|t| t.orbit).collect();
    let mut size = vec![0usize; no];
    let mut nu = vec![0.0; no];
    let mut c_orb = vec![0.0; no];
    for (i, t) in inst.targets.iter().enumerate() {
        size[t.orbit] += 1;
        nu[t.orbit] += t.mass;
        c_orb[t.orbit] += init[i];
    }
    for a in 0..no {
        if size[a] == 0 {
            return Err(SdotError::Invalid(format!("orbit id {a} is unused")));
        }
        c_orb[a] /= size[a] as f64;
    }
    // Quadrature total rather than the analytic one, so that Σ m = Σ ν is attainable.
    let scale = grid.total_mass() / nu.iter().sum::<f64>();
    nu.iter_mut().for_each(|v| *v *= scale);
    let nu_cell: Vec<f64> = (0..p).map(|i| nu[orbit_of[i]] / size[orbit_of[i]] as f64).collect();

    let expand = |c: &[f64]| -> Vec<f64> { orbit_of.iter().map(|&o| c[o]).collect() };
    let eval = |c: &[f64], pairs: bool| -> Eval {
        let acc = grid.assign(&inst.potential(&expand(c)), pairs);
        let mut om = vec![0.0; no];
        for (i, m) in acc.masses.iter().enumerate() {
            om[orbit_of[i]] += m;
        }
        let objective = -nu.iter().zip(c).map(|(v, x)| v * x).sum::<f64>() - acc.integral;
        Eval { orbit_mass: om, cell_mass: acc.masses, objective, pairs: acc.pairs, mixed: acc.mixed }
    };
    let residual = |e: &Eval| -> f64 { (0..no).map(|a| (e.orbit_mass[a] - nu[a]).abs() / nu[a]).fold(0.0, f64::max) };
    let cell_residual =
        |e: &Eval| -> f64 { (0..p).map(|i| (e.cell_mass[i] - nu_cell[i]).abs() / nu_cell[i]).fold(0.0, f64::max) };

    let mut cur = eval(&c_orb, true);
    if cur.orbit_mass.iter().any(|&m| m <= 0.0) {
        // Scaled Voronoi start: every cell contains its own site scaled into the ball.
        let ymax = inst.targets.iter().map(|t| norm(&t.point)).fold(0.0, f64::max).max(1e-300);
        let s = inst.source_radius / ymax;
        for (i, t) in inst.targets.iter().enumerate() {
            c_orb[orbit_of[i]] = 0.5 * s * dot(&t.point, &t.point);
        }
        cur = eval(&c_orb, true);
    }
    let nu_min = nu.iter().cloned().fold(f64::INFINITY, f64::min);
    let m_min0 = cur.orbit_mass.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = 0.5 * m_min0.min(nu_min);
    let mut trace = SolverTrace {
        objective: vec![cur.objective],
        objective_raw: vec![cur.objective],
        residuals: vec![residual(&cur)],
        ..Default::default()
    };
    let mut it = 0;
    let mut stalled = false;
    while it < opts.max_iter {
        let res = residual(&cur);
        if res <= opts.tol {
            break;
        }
        it += 1;
        // Hessian of the dual reduced to orbits: exact facet fluxes in the plane,
        // an interface-flux estimate from the grid otherwise.
        let mut lap = DMatrix::<f64>::zeros(no, no);
        if inst.dimension() == 2 {
            let phi = inst.potential(&expand(&c_orb));
            let mut rep = vec![usize::MAX; no];
            for (i, &o) in orbit_of.iter().enumerate() {
                if rep[o] == usize::MAX {
                    rep[o] = i;
                }
            }
            let rows: Vec<Vec<(usize, f64)>> =
                par::map_range(no, |a| facet_fluxes_2d(&phi, rep[a], &inst.source_density, inst.source_radius));
            for (a, row) in rows.iter().enumerate() {
                for &(j, w) in row {
                    let b = orbit_of[j];
                    if a != b {
                        let w = w * size[a] as f64;
                        lap[(a, a)] += w;
                        lap[(a, b)] -= w;
                    }
                }
            }
        } else {
            for &(i, j, w) in &cur.pairs {
                let (a, b) = (orbit_of[i as usize], orbit_of[j as usize]);
                if a != b {
                    lap[(a, a)] += w;
                    lap[(b, b)] += w;
                    lap[(a, b)] -= w;
                    lap[(b, a)] -= w;
                }
            }
        }
        let maxdiag = (0..no).map(|a| lap[(a, a)]).fold(0.0, f64::max).max(1e-300);
        let mut diags: Vec<f64> = (0..no).map(|a| lap[(a, a)]).filter(|&d| d > 1e-10 * maxdiag).collect();
        diags.sort_by(|x, y| x.total_cmp(y));
        let typical = diags.get(diags.len() / 2).copied().unwrap_or(1.0);
        for a in 0..no {
            if lap[(a, a)] <= 1e-10 * maxdiag {
                lap[(a, a)] = typical;
            }
            lap[(a, a)] += 1e-9 * maxdiag;
        }
        let rhs = DVector::from_fn(no, |a, _| cur.orbit_mass[a] - nu[a]);
        let dir: Vec<f64> = match opts.method {
            SolveMethod::Newton => match lap.clone().cholesky() {
                Some(ch) => ch.solve(&rhs).iter().copied().collect(),
                None => lap.lu().solve(&rhs).map(|v| v.iter().copied().collect()).unwrap_or_else(|| {
                    (0..no).map(|a| rhs[a] / typical).collect()
                }),
            },
            SolveMethod::Gradient => {
                let d: Vec<f64> = (0..no).map(|a| rhs[a] / lap[(a, a)]).collect();
                d
            }
        };
        // The increment of the concave objective along the step is taken from the
        // trapezoid rule on its gradient `m − ν`; direct differences of the objective
        // lose all digits once |D| is large.
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-6 {
            let trial: Vec<f64> = c_orb.iter().zip(&dir).map(|(c, d)| c + alpha * d).collect();
            let e = eval(&trial, true);
            let mmin = e.orbit_mass.iter().cloned().fold(f64::INFINITY, f64::min);
            let inc: f64 = (0..no)
                .map(|a| 0.5 * ((cur.orbit_mass[a] - nu[a]) + (e.orbit_mass[a] - nu[a])) * alpha * dir[a])
                .sum();
            if inc >= 0.0 && mmin >= floor {
                accepted = Some((trial, e, inc));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((c, e, inc)) => {
                c_orb = c;
                cur = e;
                let last = *trace.objective.last().expect("initial objective");
                trace.objective.push(last + inc);
                trace.objective_raw.push(cur.objective);
                trace.residuals.push(residual(&cur));
                trace.step_sizes.push(alpha);
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    let intercepts = expand(&c_orb);
    trace.iterations = it;
    trace.final_residual = residual(&cur);
    trace.cell_residual = cell_residual(&cur);
    trace.mixed_elements = cur.mixed;
    trace.empty_cells = cur.cell_mass.iter().filter(|&&m| m == 0.0).count();
    trace.converged = trace.final_residual <= opts.tol;
    let phi = inst.potential(&intercepts).normalize_at_origin();
    let out = SolveOutput { phi, trace, intercepts };
    if out.trace.converged {
        Ok(out)
    } else {
        let _ = stalled;
        Err(SdotError::MaxIterExceeded { iterations: it, residual: out.trace.final_residual, best: Box::new(out) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DensityForm, DensitySpec};
    use crate::group::cyclic;
    use std::f64::consts::PI;

    #[test]
    fn four_point_orbit_masses() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        let k = 3;
        let fk = one.perturbed(k);
        let c4 = cyclic(4).unwrap();
        let total = fk.ball_mass(1.0).unwrap();
        let t = sample_targets(&fk, 1.0, 4, &c4, total, &TargetLayout::default()).unwrap();
        assert_eq!(t.len(), 4);
        for x in &t {
            assert!((x.mass - PI * (1.0 + 1.0 / k as f64) / 4.0).abs() < 1e-12);
        }
        let t = sample_targets(&fk, 1.0, 1, &c4, total, &TargetLayout::default()).unwrap();
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn outer_orbit_heavier() {
        let g = DensitySpec::new(2, DensityForm::RadialPoly { terms: vec![(4.0, 2.0)] }).unwrap();
        let fk = g.perturbed(2);
        let c8 = cyclic(8).unwrap();
        let (pts, ids) = orbit_complete(&[vec![1.0 / 3.0, 0.0], vec![2.0 / 3.0, 0.0]], &c8);
        assert_eq!(pts.len(), 16);
        let m = target_masses(&pts, &ids, &fk, 1.0, 64, 1.0).unwrap();
        assert!(m[8] > m[0]);
    }

    #[test]
    fn instance_validation() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        let gk = one.perturbed(4);
        let total = gk.ball_mass(1.0).unwrap();
        let targets = vec![
            Target { point: vec![0.5, 0.0], mass: total / 2.0, orbit: 0 },
            Target { point: vec![-0.5, 0.0], mass: total / 2.0, orbit: 1 },
        ];
        let inst = OTProblemInstance::new(1.0, gk, targets.clone(), 1.0);
        assert!(matches!(inst, Err(SdotError::DegenerateTargets { .. })));
        let mut t3 = targets;
        t3.push(Target { point: vec![0.0, 0.5], mass: 0.0, orbit: 2 });
        assert!(OTProblemInstance::new(1.0, one.perturbed(4), t3, 1.0).is_err());
    }

    #[test]
    fn identity_problem_converges_with_monotone_trace() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        let k = 2u32;
        let (fk, gk) = (one.perturbed(k), one.perturbed(k));
        let c8 = cyclic(8).unwrap();
        let kf = k as f64;
        let total = gk.ball_mass(kf).unwrap();
        let targets = sample_targets(&fk, kf, 96, &c8, total, &TargetLayout::default()).unwrap();
        let inst = OTProblemInstance::new(kf, gk, targets, kf).unwrap();
        assert!(inst.orbit_defect(&c8) < 1e-12);
        // Start away from the answer.
        let init: Vec<f64> = inst.targets.iter().map(|t| 0.3 * dot(&t.point, &t.point)).collect();
        let opts = SolveOptions { grid: GridSpec::uniform(64), ..Default::default() };
        let out = solve_weights(&inst, &init, &opts).unwrap();
        assert!(out.trace.is_monotone());
        assert!(out.trace.final_residual <= 5e-4);
        // Equal densities: the gradient at a target is the target itself.
        for t in inst.targets.iter().filter(|t| norm(&t.point) < 1.0) {
            let g = out.phi.gradient_select(&t.point);
            assert!(dist(&g, &t.point) < 1e-9, "{:?} -> {:?}", t.point, g);
        }
    }
}
