//! Run configuration and the commands behind the `entire-ma` binary.
//!
//! A configuration is one JSON document:
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "group": "cyclic:8",
//!   "f": {"form": "constant", "value": 1.0},
//!   "g": {"form": "radial-poly", "terms": [[4.0, 2.0]]},
//!   "schedule": {"k_values": [2, 4, 8, 16], "eval_radius": 1.0},
//!   "tolerances": {"cauchy": 0.02, "residual": 0.02},
//!   "output_dir": "runs/quartic",
//!   "seed": 7
//! }
//! ```
//!
//! `group` is a preset string or `{"matrices": [[row-major entries], …]}` listing
//! generators. Everything except `dimension`, `group`, `f` and `g` has defaults.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::{check_infinite_mass, DensityForm, DensitySpec, MassVerdict};
use crate::diagnostics::{run_diagnostics, DiagnosticsOptions, DiagnosticsReport};
use crate::exhaustion::{
    cauchy_extract, run_exhaustion_with, sup_error, ExhaustionError, ExhaustionResult, ExhaustionSchedule, RunStatus,
};
use crate::group::{check_irreducible, check_irreducible_with, close_group, OrthoMatrix, OrthogonalGroupSpec};
use crate::measure::{default_test_sets, weak_residual, MeasureQuadrature, TestSet, WeakResidualReport};
use crate::plc::{ball_lattice, PLConvexFunction};
use crate::radial::{residual_check, solve_radial, RadialError, RadialSolution};

pub const FORMAT_TAG: &str = "entire-ma-run/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_FAILED: i32 = 4;

const GROUP_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupDescriptor {
    Preset(String),
    Matrices { matrices: Vec<Vec<f64>> },
}

impl GroupDescriptor {
    pub fn build(&self, n: usize) -> Result<OrthogonalGroupSpec, String> {
        let g = match self {
            GroupDescriptor::Preset(s) => OrthogonalGroupSpec::from_preset(s).map_err(|e| e.to_string())?,
            GroupDescriptor::Matrices { matrices } => {
                let gens = matrices
                    .iter()
                    .map(|m| OrthoMatrix::from_row_major(n, m.clone()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?;
                if gens.is_empty() {
                    return Err("matrices: at least one generator is required".into());
                }
                close_group(&gens, GROUP_CAP).map_err(|e| e.to_string())?
            }
        };
        if g.dimension() != n {
            return Err(format!("group acts on ℝ^{}, config dimension is {n}", g.dimension()));
        }
        Ok(g)
    }

    /// Parses a command-line descriptor: a preset, or a JSON object with `matrices`.
    pub fn parse_arg(s: &str) -> Result<Self, String> {
        let t = s.trim();
        if t.starts_with('{') {
            serde_json::from_str(t).map_err(|e| e.to_string())
        } else {
            Ok(GroupDescriptor::Preset(t.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Sup-difference between consecutive iterates that counts as converged.
    pub cauchy: f64,
    /// Largest weak residual accepted by `verify`.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { cauchy: 0.02, residual: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub group: GroupDescriptor,
    pub f: DensityForm,
    pub g: DensityForm,
    #[serde(default)]
    pub schedule: ExhaustionSchedule,
    /// Defaults to five centred balls of radii `0.6R … R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_sets: Option<Vec<TestSet>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Seeds the random probes of the diagnostics; the solver itself is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub diagnostics: DiagnosticsOptions,
}

/// A configuration error with the 1-based line it refers to, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let pat = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&pat)).map(|i| i + 1)
}

/// A parsed configuration together with the objects it describes.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub raw: RunConfig,
    pub group: OrthogonalGroupSpec,
    pub f: DensitySpec,
    pub g: DensitySpec,
    pub test_sets: Vec<TestSet>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError {
            line: (e.line() > 0).then_some(e.line()),
            message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Builds densities, group and test sets. `text` (the source document) is used
    /// only to attach line numbers to errors.
    pub fn validate(&self, text: Option<&str>) -> Result<ValidatedConfig, ConfigError> {
        let at = |key: &str, message: String| ConfigError { line: text.and_then(|t| line_of(t, key)), message };
        let n = self.dimension;
        if n == 0 {
            return Err(at("dimension", "dimension must be at least 1".into()));
        }
        let group = self.group.build(n).map_err(|m| at("group", format!("group: {m}")))?;
        let f = DensitySpec::new(n, self.f.clone()).map_err(|e| at("f", format!("f: {e}")))?;
        let g = DensitySpec::new(n, self.g.clone()).map_err(|e| at("g", format!("g: {e}")))?;
        self.schedule.validate().map_err(|e| at("schedule", e.to_string()))?;
        let test_sets = match &self.test_sets {
            Some(sets) => {
                for (i, s) in sets.iter().enumerate() {
                    s.validate(n).map_err(|m| at("test_sets", format!("test set {i}: {m}")))?;
                }
                if sets.is_empty() {
                    return Err(at("test_sets", "test_sets is empty".into()));
                }
                sets.clone()
            }
            None => default_test_sets(n, self.schedule.eval_radius),
        };
        if !(self.tolerances.cauchy > 0.0) || !(self.tolerances.residual > 0.0) {
            return Err(at("tolerances", "tolerances must be positive".into()));
        }
        Ok(ValidatedConfig { raw: self.clone(), group, f, g, test_sets })
    }
}

pub fn load_config(path: &Path) -> Result<(String, ValidatedConfig), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
    let cfg = RunConfig::from_json(&text)?.validate(Some(&text))?;
    Ok((text, cfg))
}

/// Command-line overrides shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ValidatedConfig) {
        if let Some(s) = self.seed {
            cfg.raw.seed = s;
            cfg.raw.diagnostics.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.raw.output_dir = Some(o.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: u32,
    pub r_k: f64,
    pub targets: usize,
    pub orbits: usize,
    pub sup_norm: f64,
    pub max_slope: f64,
    pub sup_difference: Option<f64>,
    pub symmetry_defect: f64,
    pub inner_converged: bool,
    pub inner_iterations: usize,
    pub mass_residual: f64,
    pub trace_monotone: bool,
    pub solution_file: String,
    pub trace_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub status: RunStatus,
    pub exit_code: i32,
    pub epsilon: f64,
    pub mass_verdict: MassVerdict,
    pub warnings: Vec<String>,
    pub iterates: Vec<KSummary>,
    pub bounds: crate::exhaustion::BoundReport,
    pub cauchy_index: Option<usize>,
    /// Sup-distance on the evaluation grid to the radial reference solution, when `f > 0`.
    pub oracle_sup_error: Option<f64>,
    pub weak_residual_max: f64,
    pub diagnostics: DiagnosticsReport,
    pub files: Vec<String>,
}

fn exit_for(status: RunStatus) -> i32 {
    match status {
        RunStatus::Converged => EXIT_OK,
        RunStatus::HypothesisViolation => EXIT_HYPOTHESIS,
        RunStatus::BudgetExhausted => EXIT_BUDGET,
    }
}

fn mass_radii(sched: &ExhaustionSchedule) -> Vec<f64> {
    let kmax = *sched.k_values.last().expect("validated") as f64;
    (0..5).map(|i| 4.0 * kmax * 2f64.powi(i)).collect()
}

struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    fn create(root: PathBuf) -> std::io::Result<Self> {
        std::fs::create_dir_all(root.join("iterates"))?;
        Ok(Self { root, files: Vec::new() })
    }

    fn write(&mut self, rel: &str, body: &str) -> std::io::Result<()> {
        std::fs::write(self.root.join(rel), body)?;
        self.files.push(rel.to_string());
        Ok(())
    }
}

fn records_csv(res: &ExhaustionResult) -> String {
    let mut s = String::from(
        "k,r_k,focus_radius,targets,orbits,grid_res,sup_norm,max_slope,sup_difference,symmetry_defect,inner_converged,iterations,mass_residual\n",
    );
    for r in &res.records {
        let _ = writeln!(
            s,
            "{},{:.10e},{:.6e},{},{},{},{:.10e},{:.10e},{},{:.3e},{},{},{:.3e}",
            r.k,
            r.r_k,
            r.focus_radius,
            r.targets,
            r.orbits,
            r.grid_res,
            r.sup_norm,
            r.max_slope,
            r.sup_difference.map(|d| format!("{d:.10e}")).unwrap_or_default(),
            r.symmetry_defect,
            r.inner_converged,
            r.trace.iterations,
            r.trace.final_residual,
        );
    }
    s
}

fn bounds_csv(res: &ExhaustionResult) -> String {
    let mut s = String::from("k,sup_norm,max_slope\n");
    for (i, k) in res.bounds.k.iter().enumerate() {
        let _ = writeln!(s, "{k},{:.10e},{:.10e}", res.bounds.sup_norms[i], res.bounds.max_slopes[i]);
    }
    s
}

fn trace_csv(t: &crate::sdot::SolverTrace) -> String {
    let mut s = String::from("iteration,objective,objective_raw,residual,step\n");
    for i in 0..t.residuals.len() {
        let step = if i == 0 { String::new() } else { format!("{:.6e}", t.step_sizes[i - 1]) };
        let _ = writeln!(
            s,
            "{i},{:.15e},{:.15e},{:.6e},{step}",
            t.objective[i],
            t.objective_raw.get(i).copied().unwrap_or(f64::NAN),
            t.residuals[i]
        );
    }
    s
}

fn cauchy_csv(table: &[Vec<f64>], ks: &[u32]) -> String {
    let mut s = String::from("k");
    for k in ks {
        let _ = write!(s, ",{k}");
    }
    s.push('\n');
    for (i, row) in table.iter().enumerate() {
        let _ = write!(s, "{}", ks.get(i).copied().unwrap_or(0));
        for v in row {
            let _ = write!(s, ",{v:.6e}");
        }
        s.push('\n');
    }
    s
}

fn holder_csv(d: &DiagnosticsReport) -> String {
    let mut s = String::from("log_separation,log_gradient_difference\n");
    if let Some(h) = &d.holder {
        for (a, b) in &h.points {
            let _ = writeln!(s, "{a:.10e},{b:.10e}");
        }
    }
    s
}

/// Runs the exhaustion for a configuration file and writes the run directory.
pub fn cmd_solve(config: &Path, ov: &Overrides, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (_, mut cfg) = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", config.display());
            return EXIT_INPUT;
        }
    };
    ov.apply(&mut cfg);
    let tol = ov.tol.unwrap_or(cfg.raw.tolerances.cauchy);
    let sched = cfg.raw.schedule.clone();
    let mut warnings = Vec::new();

    let cert = check_irreducible(&cfg.group, 1e-9);
    if !cert.verdict {
        let _ = writeln!(err, "error: irreducibility check failed, ε={}", cert.epsilon);
        return EXIT_INPUT;
    }
    let mass = match check_infinite_mass(&cfg.f, &mass_radii(&sched)) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: f: {e}");
            return EXIT_INPUT;
        }
    };
    if mass.verdict == MassVerdict::SuspectFinite {
        warnings.push(format!("{}: ∫f appears finite; the exhaustion is expected to blow up", mass.verdict));
    }
    if cfg.g.is_zero() {
        warnings.push("g vanishes identically; the solution is constant".into());
    }
    for w in &warnings {
        let _ = writeln!(err, "warning: {w}");
    }

    let res = match run_exhaustion_with(&cfg.f, &cfg.g, &cfg.group, &sched, tol, |r| {
        let _ = writeln!(
            err,
            "k={:<3} R_k={:<12.4} targets={:<5} sup|φ|={:.4} max|∇φ|={:.4} Δ={} residual={:.2e}",
            r.k,
            r.r_k,
            r.targets,
            r.sup_norm,
            r.max_slope,
            r.sup_difference.map(|d| format!("{d:.3e}")).unwrap_or_else(|| "-".into()),
            r.trace.final_residual
        );
    }) {
        Ok(r) => r,
        Err(ExhaustionError::Reducible(c)) => {
            let _ = writeln!(err, "error: irreducibility check failed, ε={}", c.epsilon);
            return EXIT_INPUT;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILED;
        }
    };

    let n = cfg.raw.dimension;
    let radius = sched.eval_radius;
    let grid = sched.eval_grid(n);
    let oracle_sup_error = if cfg.f.is_strictly_positive() {
        solve_radial(&cfg.f, &cfg.g, radius, 2000).ok().map(|sol| sup_error(&res.final_phi, |x| sol.value(x), &grid))
    } else {
        None
    };
    let quad = MeasureQuadrature::default_for(n);
    let weak = match weak_residual(&res.final_phi, &cfg.f, &cfg.g, &cfg.test_sets, &quad) {
        Ok(w) => w,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILED;
        }
    };
    let diagnostics = match run_diagnostics(&res.final_phi, &cfg.f, &cfg.g, &cfg.group, radius, &cfg.raw.diagnostics) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(err, "error: diagnostics: {e}");
            return EXIT_FAILED;
        }
    };
    let cauchy = cauchy_extract(&res.iterates, &grid, tol);

    let root = cfg.raw.output_dir.clone().unwrap_or_else(|| PathBuf::from("run"));
    let code = exit_for(res.status);
    let written = (|| -> std::io::Result<RunDir> {
        let mut dir = RunDir::create(root.clone())?;
        dir.write("FORMAT", &format!("{FORMAT_TAG}\n"))?;
        dir.write("config.json", &cfg.raw.to_json())?;
        let mut iterates = Vec::new();
        for (phi, r) in res.iterates.iter().zip(&res.records) {
            let sol = format!("iterates/k{:03}.json", r.k);
            let tr = format!("iterates/k{:03}_trace.csv", r.k);
            dir.write(&sol, &phi.to_json())?;
            dir.write(&tr, &trace_csv(&r.trace))?;
            iterates.push(KSummary {
                k: r.k,
                r_k: r.r_k,
                targets: r.targets,
                orbits: r.orbits,
                sup_norm: r.sup_norm,
                max_slope: r.max_slope,
                sup_difference: r.sup_difference,
                symmetry_defect: r.symmetry_defect,
                inner_converged: r.inner_converged,
                inner_iterations: r.trace.iterations,
                mass_residual: r.trace.final_residual,
                trace_monotone: r.trace.is_monotone(),
                solution_file: sol,
                trace_file: tr,
            });
        }
        dir.write("solution.json", &res.final_phi.to_json())?;
        dir.write("records.csv", &records_csv(&res))?;
        dir.write("bounds.csv", &bounds_csv(&res))?;
        dir.write("cauchy.csv", &cauchy_csv(&cauchy.table, &res.bounds.k))?;
        dir.write("residuals.csv", &weak.to_csv())?;
        dir.write("properness.csv", &diagnostics.properness.to_csv())?;
        dir.write("holder.csv", &holder_csv(&diagnostics))?;
        let mut files = dir.files.clone();
        files.push("report.json".into());
        let report = RunReport {
            format: FORMAT_TAG.into(),
            status: res.status,
            exit_code: code,
            epsilon: res.certificate.epsilon,
            mass_verdict: mass.verdict,
            warnings: warnings.clone(),
            iterates,
            bounds: res.bounds.clone(),
            cauchy_index: cauchy.index,
            oracle_sup_error,
            weak_residual_max: weak.max_residual,
            diagnostics: diagnostics.clone(),
            files,
        };
        dir.write("report.json", &serde_json::to_string_pretty(&report).expect("serializable"))?;
        Ok(dir)
    })();
    if let Err(e) = written {
        let _ = writeln!(err, "error: writing {}: {e}", root.display());
        return EXIT_FAILED;
    }
    let _ = writeln!(out, "status: {}", serde_json::to_value(res.status).expect("enum").as_str().unwrap_or("?"));
    let _ = writeln!(out, "run directory: {}", root.display());
    if let Some(e) = oracle_sup_error {
        let _ = writeln!(out, "sup error vs radial solution on B_{radius}: {e:.3e}");
    }
    let _ = writeln!(out, "max weak residual: {:.3e}", weak.max_residual);
    let _ = writeln!(out, "properness: {}", diagnostics.properness.verdict);
    if res.status == RunStatus::HypothesisViolation {
        let _ = writeln!(out, "slope blow-up on B_{radius}:");
        let _ = write!(out, "{}", bounds_csv(&res));
    }
    code
}

/// Prints the group's ε, the span rank of a generic orbit, its centre of mass and the
/// verdict.
pub fn cmd_epsilon(descriptor: &str, samples: Option<usize>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let group = match GroupDescriptor::parse_arg(descriptor).and_then(|d| match &d {
        GroupDescriptor::Preset(_) => d.build(OrthogonalGroupSpec::from_preset(descriptor.trim()).map_err(|e| e.to_string())?.dimension()),
        GroupDescriptor::Matrices { matrices } => {
            let len = matrices.first().map(|m| m.len()).unwrap_or(0);
            let n = (len as f64).sqrt().round() as usize;
            d.build(n)
        }
    }) {
        Ok(g) => g,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let cert = match samples {
        Some(s) => check_irreducible_with(&group, 1e-9, s),
        None => check_irreducible(&group, 1e-9),
    };
    let _ = writeln!(out, "epsilon: {:.12}", cert.epsilon);
    let _ = writeln!(out, "span rank: {}", cert.span_rank);
    let _ = writeln!(out, "center of mass norm: {:.3e}", cert.center_of_mass_norm);
    let _ = writeln!(out, "sphere samples: {}", cert.sphere_samples);
    let _ = writeln!(out, "verdict: {}", if cert.verdict { "irreducible" } else { "reducible" });
    EXIT_OK
}

/// Reads a solution: a piecewise-linear JSON file, or an `r,phi,dphi` radial table
/// which is converted to tangent planes on `B_{1.3·radius}`.
pub fn load_solution(text: &str, n: usize, radius: f64) -> Result<PLConvexFunction, String> {
    let t = text.trim_start();
    if t.starts_with('{') {
        let phi = PLConvexFunction::from_json(t).map_err(|e| e.to_string())?;
        if phi.dim() != n {
            return Err(format!("solution has dimension {}, config has {n}", phi.dim()));
        }
        return Ok(phi);
    }
    let sol = RadialSolution::from_csv(t, n).map_err(|e| format!("malformed solution file: {e}"))?;
    let reach = 1.3 * radius;
    if sol.r_max() < reach {
        return Err(format!("radial table ends at {} < {reach}", sol.r_max()));
    }
    Ok(sol.to_pl(reach, if n <= 2 { 48 } else { 12 }))
}

/// Weak residual of a stored solution on the configured test sets, plus diagnostics.
pub fn cmd_verify(solution: &Path, config: &Path, ov: &Overrides, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (_, mut cfg) = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", config.display());
            return EXIT_INPUT;
        }
    };
    ov.apply(&mut cfg);
    let n = cfg.raw.dimension;
    let radius = cfg.raw.schedule.eval_radius;
    let text = match std::fs::read_to_string(solution) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", solution.display());
            return EXIT_INPUT;
        }
    };
    let phi = match load_solution(&text, n, radius) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", solution.display());
            return EXIT_INPUT;
        }
    };
    let threshold = ov.tol.unwrap_or(cfg.raw.tolerances.residual);
    let rep: WeakResidualReport =
        match weak_residual(&phi, &cfg.f, &cfg.g, &cfg.test_sets, &MeasureQuadrature::default_for(n)) {
            Ok(r) => r,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_FAILED;
            }
        };
    let _ = write!(out, "{}", rep.to_csv());
    match run_diagnostics(&phi, &cfg.f, &cfg.g, &cfg.group, radius, &cfg.raw.diagnostics) {
        Ok(d) => {
            let _ = writeln!(out, "properness: {}", d.properness.verdict);
            let _ = writeln!(out, "min midpoint gap at length {}: {:.3e}", d.strict_convexity.length, d.strict_convexity.min_gap);
            let _ = writeln!(out, "equivariance violation: {:.3e}", d.equivariance.value_violation);
            if let Some(h) = &d.holder {
                let _ = writeln!(out, "gradient Hölder exponent: {:.3} (fit residual {:.3})", h.beta, h.residual);
            }
            if let Some(e) = &d.eq4_bounds {
                let _ = writeln!(out, "gradient-image bounds on {{φ ≤ {:.3}}}: [{:.4}, {:.4}]", e.c, e.lambda1, e.lambda2);
            }
        }
        Err(e) => {
            let _ = writeln!(err, "warning: diagnostics: {e}");
        }
    }
    let _ = writeln!(out, "max residual: {:.4e} (threshold {threshold})", rep.max_residual);
    if rep.max_residual <= threshold {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub r_max: f64,
    pub steps: usize,
    pub residual: f64,
    pub residual_radii: Vec<f64>,
}

/// Writes the radial reference solution `oracle.csv`, its tangent-plane export
/// `oracle_solution.json` and `oracle_summary.json`.
pub fn cmd_oracle(config: &Path, ov: &Overrides, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (_, mut cfg) = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", config.display());
            return EXIT_INPUT;
        }
    };
    ov.apply(&mut cfg);
    let n = cfg.raw.dimension;
    let radius = cfg.raw.schedule.eval_radius;
    let extent = cfg.test_sets.iter().map(TestSet::extent).fold(radius, f64::max);
    let r_max = 1.5 * extent;
    let steps = 3000;
    let sol = match solve_radial(&cfg.f, &cfg.g, r_max, steps) {
        Ok(s) => s,
        Err(e @ RadialError::InversionFailure(_)) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILED;
        }
    };
    let radii: Vec<f64> = (1..=20).map(|i| extent * i as f64 / 20.0).collect();
    let residual = residual_check(&sol, &cfg.f, &cfg.g, &radii);
    let summary = OracleSummary { r_max, steps, residual, residual_radii: radii };
    let root = cfg.raw.output_dir.clone().unwrap_or_else(|| PathBuf::from("oracle"));
    let written = (|| -> std::io::Result<()> {
        std::fs::create_dir_all(&root)?;
        std::fs::write(root.join("oracle.csv"), sol.to_csv())?;
        std::fs::write(root.join("oracle_solution.json"), sol.to_pl(1.3 * extent, if n <= 2 { 48 } else { 12 }).to_json())?;
        std::fs::write(root.join("oracle_summary.json"), serde_json::to_string_pretty(&summary).expect("serializable"))?;
        Ok(())
    })();
    if let Err(e) = written {
        let _ = writeln!(err, "error: writing {}: {e}", root.display());
        return EXIT_FAILED;
    }
    let _ = writeln!(out, "oracle table: {}", root.join("oracle.csv").display());
    let _ = writeln!(out, "pointwise residual: {residual:.3e}");
    EXIT_OK
}

/// The radial reference for `cfg`, if `f > 0`.
pub fn reference_solution(cfg: &ValidatedConfig, r_max: f64) -> Option<RadialSolution> {
    cfg.f.is_strictly_positive().then(|| solve_radial(&cfg.f, &cfg.g, r_max, 2000).ok()).flatten()
}

/// Largest `|φ − h|` over the evaluation lattice of `B_radius`.
pub fn sup_error_on_ball<H: Fn(&[f64]) -> f64>(phi: &PLConvexFunction, h: H, radius: f64) -> f64 {
    sup_error(phi, h, &ball_lattice(phi.dim(), radius, 40))
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: &str = r#"{
  "dimension": 2,
  "group": "cyclic:8",
  "f": {"form": "constant", "value": 1.0},
  "g": {"form": "constant", "value": 1.0}
}"#;

    #[test]
    fn round_trip_is_lossless() {
        let c = RunConfig::from_json(IDENTITY).unwrap();
        let again = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        let v = c.validate(Some(IDENTITY)).unwrap();
        assert_eq!(v.group.order(), 8);
        assert_eq!(v.test_sets.len(), 5);
    }

    #[test]
    fn errors_carry_lines() {
        let bad = IDENTITY.replace("cyclic:8", "cyclc:8");
        let e = RunConfig::from_json(&bad).unwrap().validate(Some(&bad)).unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = RunConfig::from_json("{\n  \"dimension\": 2,\n  \"grop\": 1\n}").unwrap_err();
        assert_eq!(e.line, Some(3));
        let neg = IDENTITY.replace("\"value\": 1.0}\n}", "\"value\": -1.0}\n}");
        let e = RunConfig::from_json(&neg).unwrap().validate(Some(&neg)).unwrap_err();
        assert_eq!(e.line, Some(5), "{e}");
    }

    #[test]
    fn matrices_descriptor() {
        let s = (std::f64::consts::PI / 2.0).sin();
        let d = GroupDescriptor::parse_arg(&format!("{{\"matrices\": [[0.0, -{s}, {s}, 0.0]]}}")).unwrap();
        assert_eq!(d.build(2).unwrap().order(), 4);
    }
}
