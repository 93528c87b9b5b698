//! Entire solutions as limits of perturbed ball-to-ball problems.
//!
//! For each `k` the densities become `f_k = f + 1/k`, `g_k = g + 1/k`, the target
//! radius `R_k` balances the masses and the semi-discrete problem from `B_k` to
//! `B_{R_k}` is solved. Iterates are normalized by `φ_k(0) = 0` and compared on a
//! fixed lattice in `B_R`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ball_grid::GridSpec;
use crate::density::{radius_for_mass, solve_rk, DensityError, DensitySpec, RadialDensity};
use crate::group::{check_irreducible, IrreducibilityCertificate, OrthogonalGroupSpec};
use crate::plc::{ball_lattice, PLConvexFunction};
use crate::sdot::{
    radial_initial_intercepts, sample_targets, solve_weights, OTProblemInstance, SdotError, SolveMethod,
    SolveOptions, SolverTrace, TargetLayout,
};
use crate::vecmath::norm;

#[derive(Debug, Error)]
pub enum ExhaustionError {
    #[error("irreducibility check failed, ε={}", .0.epsilon)]
    Reducible(IrreducibilityCertificate),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("densities and group disagree on the dimension")]
    DimensionMismatch,
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Sdot(#[from] SdotError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExhaustionSchedule {
    pub k_values: Vec<u32>,
    /// Targets at step `k` are `targets_per_k · k`.
    pub targets_per_k: usize,
    /// Radial/angular resolution at step `k` is `grid_per_k · k`.
    pub grid_per_k: usize,
    pub eval_radius: f64,
    /// Evaluation lattice spacing is `eval_radius / eval_points`.
    pub eval_points: usize,
    /// Relative mass tolerance of the inner solver.
    pub inner_tol: f64,
    pub max_inner_iter: usize,
    pub method: SolveMethod,
    /// The dense target core covers the image of `B_{focus_factor·R}`.
    pub focus_factor: f64,
    /// Share of targets in the core.
    pub core_fraction: f64,
    /// Lloyd sweeps over the core targets.
    pub lloyd_iterations: usize,
    /// Smallest slope growth exponent (over the last three `k`) treated as blow-up.
    pub blowup_exponent: f64,
}

impl Default for ExhaustionSchedule {
    fn default() -> Self {
        Self {
            k_values: vec![2, 4, 8, 16, 32],
            targets_per_k: 32,
            grid_per_k: 16,
            eval_radius: 1.0,
            eval_points: 20,
            inner_tol: 5e-4,
            max_inner_iter: 60,
            method: SolveMethod::Newton,
            focus_factor: 1.25,
            core_fraction: 0.8,
            lloyd_iterations: 0,
            blowup_exponent: 0.25,
        }
    }
}

impl ExhaustionSchedule {
    pub fn validate(&self) -> Result<(), ExhaustionError> {
        let bad = |m: &str| Err(ExhaustionError::InvalidSchedule(m.to_string()));
        if self.k_values.is_empty() {
            return bad("k_values is empty");
        }
        if self.k_values.windows(2).any(|w| w[1] <= w[0]) || self.k_values[0] == 0 {
            return bad("k_values must be positive and strictly increasing");
        }
        if !(self.eval_radius > 0.0) || self.eval_radius > self.k_values[0] as f64 {
            return bad("eval_radius must lie in (0, min k]");
        }
        if self.targets_per_k == 0 || self.grid_per_k < 2 || self.eval_points == 0 {
            return bad("targets_per_k, grid_per_k and eval_points must be positive");
        }
        if !(self.inner_tol > 0.0) {
            return bad("inner_tol must be positive");
        }
        Ok(())
    }

    pub fn eval_grid(&self, n: usize) -> Vec<Vec<f64>> {
        ball_lattice(n, self.eval_radius, self.eval_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    BudgetExhausted,
    HypothesisViolation,
}

/// Per-`k` summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRecord {
    pub k: u32,
    pub r_k: f64,
    pub focus_radius: f64,
    pub targets: usize,
    pub orbits: usize,
    pub grid_res: usize,
    /// `sup |φ_k|` on the evaluation lattice.
    pub sup_norm: f64,
    /// Largest active slope on the evaluation lattice.
    pub max_slope: f64,
    /// `sup |φ_k − φ_{k_prev}|` on the evaluation lattice.
    pub sup_difference: Option<f64>,
    /// `max |φ_k(g x) − φ_k(x)|` on the evaluation lattice.
    pub symmetry_defect: f64,
    pub inner_converged: bool,
    pub trace: SolverTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub eval_radius: f64,
    pub epsilon: f64,
    /// `4R/ε`, the slope ceiling of the contradiction argument.
    pub ceiling: f64,
    pub k: Vec<u32>,
    pub sup_norms: Vec<f64>,
    pub max_slopes: Vec<f64>,
    /// Slopes strictly increasing over the last three `k`.
    pub increasing: bool,
    /// Slopes at least doubling twice in a row over the last three `k`.
    pub doubling: bool,
    /// `log(s_last / s_{last−2}) / log(k_last / k_{last−2})`.
    pub growth_exponent: Option<f64>,
    /// Relative change of the slope bound over the last step is below 5%.
    pub stabilized: bool,
}

/// Summarizes per-`k` bounds on `B_R` and flags growth.
pub fn uniform_bound_monitor(records: &[KRecord], eval_radius: f64, epsilon: f64) -> BoundReport {
    let k: Vec<u32> = records.iter().map(|r| r.k).collect();
    let sup_norms: Vec<f64> = records.iter().map(|r| r.sup_norm).collect();
    let max_slopes: Vec<f64> = records.iter().map(|r| r.max_slope).collect();
    let m = max_slopes.len();
    let (increasing, doubling, growth_exponent) = if m >= 3 {
        let s = &max_slopes[m - 3..];
        let inc = s[0] < s[1] && s[1] < s[2];
        let dbl = s[1] >= 2.0 * s[0] && s[2] >= 2.0 * s[1];
        let kr = (k[m - 1] as f64 / k[m - 3] as f64).ln();
        let e = (s[0] > 0.0 && kr > 0.0).then(|| (s[2] / s[0]).ln() / kr);
        (inc, dbl, e)
    } else {
        (false, false, None)
    };
    let stabilized = m >= 2 && (max_slopes[m - 1] - max_slopes[m - 2]).abs() <= 0.05 * max_slopes[m - 1].abs().max(1e-12);
    BoundReport {
        eval_radius,
        epsilon,
        ceiling: if epsilon > 0.0 { 4.0 * eval_radius / epsilon } else { f64::INFINITY },
        k,
        sup_norms,
        max_slopes,
        increasing,
        doubling,
        growth_exponent,
        stabilized,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    /// First index from which all later pairwise differences are within `tol`.
    pub index: Option<usize>,
    /// `table[i][j] = sup |φ_i − φ_j|` on the grid.
    pub table: Vec<Vec<f64>>,
}

/// Pairwise sup-differences of the iterates on `grid` and the first index of a tail
/// that is Cauchy within `tol`.
pub fn cauchy_extract<P: AsRef<PLConvexFunction>>(iterates: &[P], grid: &[Vec<f64>], tol: f64) -> CauchyReport {
    let vals: Vec<Vec<f64>> = iterates.iter().map(|p| grid.iter().map(|x| p.as_ref().value(x)).collect()).collect();
    cauchy_from_values(&vals, tol)
}

/// Same as [`cauchy_extract`] on precomputed grid values.
pub fn cauchy_from_values(vals: &[Vec<f64>], tol: f64) -> CauchyReport {
    let m = vals.len();
    let mut table = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let d = vals[i].iter().zip(&vals[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            table[i][j] = d;
            table[j][i] = d;
        }
    }
    let index = if m < 2 {
        None
    } else {
        (0..m).find(|&i| (i..m).all(|a| (a..m).all(|b| table[a][b] <= tol)))
    };
    CauchyReport { index, table }
}

impl AsRef<PLConvexFunction> for PLConvexFunction {
    fn as_ref(&self) -> &PLConvexFunction {
        self
    }
}

#[derive(Debug, Clone)]
pub struct ExhaustionResult {
    pub final_phi: PLConvexFunction,
    pub iterates: Vec<PLConvexFunction>,
    pub records: Vec<KRecord>,
    pub status: RunStatus,
    pub bounds: BoundReport,
    pub certificate: IrreducibilityCertificate,
    pub schedule: ExhaustionSchedule,
    pub tol: f64,
}

impl ExhaustionResult {
    pub fn sup_differences(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.sup_difference).collect()
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Largest `|φ(g x) − φ(x)|` over the grid and the group.
pub fn symmetry_defect(phi: &PLConvexFunction, group: &OrthogonalGroupSpec, grid: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for x in grid {
        let v = phi.value(x);
        for g in group.elements() {
            worst = worst.max((phi.value(&g.apply(x)) - v).abs());
        }
    }
    worst
}

/// One inner problem of the schedule.
pub struct InnerSolve {
    pub phi: PLConvexFunction,
    pub record: KRecord,
}

/// Solves the problem at a single `k`.
pub fn solve_step(
    f: &DensitySpec,
    g: &DensitySpec,
    group: &OrthogonalGroupSpec,
    sched: &ExhaustionSchedule,
    k: u32,
) -> Result<InnerSolve, ExhaustionError> {
    let n = f.dimension();
    let kf = k as f64;
    let (f_k, g_k) = (f.perturbed(k), g.perturbed(k));
    let r_k = solve_rk(&f_k, &g_k, kf)?;
    let r = sched.eval_radius;
    let focus = radius_for_mass(&f_k, g_k.ball_mass((sched.focus_factor * r).min(kf))?, r)?.min(r_k);
    let res = sched.grid_per_k * k as usize;
    let count = sched.targets_per_k * k as usize;
    let layout = TargetLayout { focus_radius: Some(focus), core_fraction: sched.core_fraction, mass_resolution: res, lloyd_iterations: sched.lloyd_iterations };
    let total = g_k.ball_mass(kf)?;
    let targets = sample_targets(&f_k, r_k, count, group, total, &layout)?;
    let inst = OTProblemInstance::new(kf, g_k.clone(), targets, r_k)?;
    let init = radial_initial_intercepts(&inst, &f_k)?;
    let grid = GridSpec {
        res,
        core_radius: (1.5 * r).min(kf),
        core_fraction: 0.7,
        depth: 3,
        angular_multiple: lcm(16, group.order()),
    };
    let opts = SolveOptions { tol: sched.inner_tol, max_iter: sched.max_inner_iter, method: sched.method, grid };
    let (out, converged) = match solve_weights(&inst, &init, &opts) {
        Ok(o) => (o, true),
        Err(SdotError::MaxIterExceeded { best, .. }) => (*best, false),
        Err(e) => return Err(e.into()),
    };
    let eval = sched.eval_grid(n);
    let phi = out.phi;
    let record = KRecord {
        k,
        r_k,
        focus_radius: focus,
        targets: inst.targets.len(),
        orbits: inst.orbit_count(),
        grid_res: res,
        sup_norm: eval.iter().map(|x| phi.value(x).abs()).fold(0.0, f64::max),
        max_slope: phi.max_active_slope_on(&eval),
        sup_difference: None,
        symmetry_defect: symmetry_defect(&phi, group, &eval),
        inner_converged: converged,
        trace: out.trace,
    };
    Ok(InnerSolve { phi, record })
}

/// Runs the whole schedule. `tol` bounds the last sup-difference for convergence.
pub fn run_exhaustion(
    f: &DensitySpec,
    g: &DensitySpec,
    group: &OrthogonalGroupSpec,
    sched: &ExhaustionSchedule,
    tol: f64,
) -> Result<ExhaustionResult, ExhaustionError> {
    run_exhaustion_with(f, g, group, sched, tol, |_| {})
}

/// As [`run_exhaustion`], calling `progress` after each `k`.
pub fn run_exhaustion_with<P: FnMut(&KRecord)>(
    f: &DensitySpec,
    g: &DensitySpec,
    group: &OrthogonalGroupSpec,
    sched: &ExhaustionSchedule,
    tol: f64,
    mut progress: P,
) -> Result<ExhaustionResult, ExhaustionError> {
    sched.validate()?;
    let n = f.dimension();
    if g.dimension() != n || group.dimension() != n {
        return Err(ExhaustionError::DimensionMismatch);
    }
    let certificate = check_irreducible(group, 1e-9);
    if !certificate.verdict {
        return Err(ExhaustionError::Reducible(certificate));
    }
    if g.is_zero() {
        // ω(B, φ, f) = 0 for every B forces ∇φ to be constant; with φ(0) = 0 and
        // invariance under an irreducible group the only candidate is φ ≡ 0.
        let zero = PLConvexFunction::new(n, vec![vec![0.0; n]], vec![0.0]).expect("one piece");
        return Ok(ExhaustionResult {
            final_phi: zero.clone(),
            iterates: vec![zero],
            records: Vec::new(),
            status: RunStatus::Converged,
            bounds: uniform_bound_monitor(&[], sched.eval_radius, certificate.epsilon),
            certificate,
            schedule: sched.clone(),
            tol,
        });
    }
    let eval = sched.eval_grid(n);
    let mut iterates: Vec<PLConvexFunction> = Vec::new();
    let mut records: Vec<KRecord> = Vec::new();
    let mut prev_vals: Option<Vec<f64>> = None;
    for &k in &sched.k_values {
        let mut step = solve_step(f, g, group, sched, k)?;
        let vals: Vec<f64> = eval.iter().map(|x| step.phi.value(x)).collect();
        if let Some(p) = &prev_vals {
            step.record.sup_difference = Some(p.iter().zip(&vals).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        prev_vals = Some(vals);
        progress(&step.record);
        records.push(step.record);
        iterates.push(step.phi);
    }
    let bounds = uniform_bound_monitor(&records, sched.eval_radius, certificate.epsilon);
    let blowup = bounds.increasing && bounds.growth_exponent.is_some_and(|e| e >= sched.blowup_exponent);
    let last_diff = records.last().and_then(|r| r.sup_difference);
    let all_inner = records.iter().all(|r| r.inner_converged);
    let status = if blowup || bounds.doubling {
        RunStatus::HypothesisViolation
    } else if all_inner && last_diff.is_some_and(|d| d <= tol) {
        RunStatus::Converged
    } else {
        RunStatus::BudgetExhausted
    };
    Ok(ExhaustionResult {
        final_phi: iterates.last().expect("nonempty schedule").clone(),
        iterates,
        records,
        status,
        bounds,
        certificate,
        schedule: sched.clone(),
        tol,
    })
}

/// Largest `|φ(x) − h(x)|` over `grid`, after shifting `h` so that `h(0) = 0`.
pub fn sup_error<H: Fn(&[f64]) -> f64>(phi: &PLConvexFunction, h: H, grid: &[Vec<f64>]) -> f64 {
    let n = phi.dim();
    let h0 = h(&vec![0.0; n]);
    grid.iter().map(|x| (phi.value(x) - (h(x) - h0)).abs()).fold(0.0, f64::max)
}

/// Radii of the grid points, for plot tables.
pub fn grid_radii(grid: &[Vec<f64>]) -> Vec<f64> {
    grid.iter().map(|x| norm(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{cyclic, neg_identity};

    fn quad(s: f64) -> PLConvexFunction {
        crate::plc::sampled_quadratic(2, s, 1.2, 12)
    }

    #[test]
    fn cauchy_identical_and_scaled() {
        let grid = ball_lattice(2, 1.0, 10);
        let same = vec![quad(1.0), quad(1.0), quad(1.0)];
        let rep = cauchy_extract(&same, &grid, 1e-12);
        assert_eq!(rep.index, Some(0));
        assert!(rep.table.iter().flatten().all(|&d| d == 0.0));
        // (1 + 1/k)|x|²/2 for k = 1, 2, 4, 8: neighbouring gaps are 0.25, 0.125, 0.0625 at |x| = 1.
        let seq: Vec<_> = [1.0, 2.0, 4.0, 8.0].iter().map(|k| quad(1.0 + 1.0 / k)).collect();
        let rep = cauchy_extract(&seq, &grid, 0.1);
        assert_eq!(rep.index, Some(2));
        assert!((rep.table[2][3] - 0.0625).abs() < 0.01);
    }

    #[test]
    fn monitor_flags_growth() {
        let rec = |k: u32, s: f64| KRecord {
            k,
            r_k: 0.0,
            focus_radius: 0.0,
            targets: 0,
            orbits: 0,
            grid_res: 0,
            sup_norm: 0.5,
            max_slope: s,
            sup_difference: None,
            symmetry_defect: 0.0,
            inner_converged: true,
            trace: SolverTrace::default(),
        };
        let flat = [rec(2, 1.0), rec(4, 1.01), rec(8, 1.0)];
        let b = uniform_bound_monitor(&flat, 1.0, 0.9);
        assert!(!b.increasing && b.stabilized && !b.doubling);
        let grow = [rec(2, 1.0), rec(4, 2.5), rec(8, 6.0)];
        let b = uniform_bound_monitor(&grow, 1.0, 0.9);
        assert!(b.increasing && b.doubling);
        assert!(b.growth_exponent.unwrap() > 1.0);
    }

    #[test]
    fn rejects_bad_schedule_and_reducible_group() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        let bad = ExhaustionSchedule { eval_radius: 3.0, ..Default::default() };
        assert!(matches!(run_exhaustion(&one, &one, &cyclic(8).unwrap(), &bad, 0.02), Err(ExhaustionError::InvalidSchedule(_))));
        let err = run_exhaustion(&one, &one, &neg_identity(2).unwrap(), &ExhaustionSchedule::default(), 0.02).unwrap_err();
        assert!(err.to_string().contains("irreducibility check failed, ε=0"), "{err}");
    }

    #[test]
    fn vanishing_source_gives_constant() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        let zero = DensitySpec::constant(2, 0.0).unwrap();
        let res = run_exhaustion(&one, &zero, &cyclic(8).unwrap(), &ExhaustionSchedule::default(), 0.02).unwrap();
        assert_eq!(res.status, RunStatus::Converged);
        assert_eq!(res.final_phi.value(&[0.7, -0.2]), 0.0);
    }

    #[test]
    fn short_identity_run() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        let c8 = cyclic(8).unwrap();
        let sched = ExhaustionSchedule { k_values: vec![2, 4], targets_per_k: 24, grid_per_k: 12, ..Default::default() };
        let res = run_exhaustion(&one, &one, &c8, &sched, 0.1).unwrap();
        let grid = sched.eval_grid(2);
        for (phi, rec) in res.iterates.iter().zip(&res.records) {
            assert_eq!(phi.value(&[0.0, 0.0]), 0.0);
            assert!(rec.symmetry_defect <= 1e-10);
            assert!(rec.trace.is_monotone());
        }
        let err = sup_error(&res.final_phi, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]), &grid);
        assert!(err < 0.05, "{err}");
        assert_eq!(res.status, RunStatus::Converged);
    }
}
