//! Radial densities, their `1/k` perturbations, ball masses, the `R_k` mass balance
//! and the divergence heuristic for `∫ f`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{self, QuadratureError};
use crate::vecmath::{norm, unit_ball_volume};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("density takes a negative value {value} at r = {r}")]
    Negative { r: f64, value: f64 },
    #[error("density is not finite at r = {0}")]
    NotFinite(f64),
    #[error("invalid density: {0}")]
    Invalid(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Symbolic radial forms. Serialized with a `form` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensityForm {
    Constant { value: f64 },
    /// `Σ c_j r^{p_j}`, written as `[[c, p], …]`.
    RadialPoly { terms: Vec<(f64, f64)> },
    /// `a·exp(b·r)`.
    RadialExp { a: f64, b: f64 },
    /// Linear interpolation of `(r_i, v_i)`, constant beyond the last knot.
    Table { r: Vec<f64>, v: Vec<f64> },
}

/// A rotation-invariant nonnegative density on ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    dimension: usize,
    form: DensityForm,
}

/// Evaluation contract shared by base and perturbed densities.
pub trait RadialDensity: Sync + Send {
    fn dimension(&self) -> usize;

    /// Value at radius `r ≥ 0`.
    fn eval_r(&self, r: f64) -> f64;

    fn eval(&self, x: &[f64]) -> f64 {
        self.eval_r(norm(x))
    }

    /// Radii where the profile is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `∫_a^b d(r) r^p dr`.
    fn radial_moment(&self, a: f64, b: f64, p: i32) -> Result<f64, DensityError> {
        let bp = self.breakpoints();
        Ok(quadrature::integrate_split(|r| self.eval_r(r) * r.powi(p), a, b, &bp)?)
    }

    /// `∫_{B_R} d = n ω_n ∫_0^R d(r) r^{n−1} dr`.
    fn ball_mass(&self, radius: f64) -> Result<f64, DensityError> {
        if radius <= 0.0 {
            return Ok(0.0);
        }
        let n = self.dimension();
        let surface = n as f64 * unit_ball_volume(n);
        Ok(surface * self.radial_moment(0.0, radius, n as i32 - 1)?)
    }

    /// Mass of the annulus `a ≤ |x| ≤ b`.
    fn shell_mass(&self, a: f64, b: f64) -> Result<f64, DensityError> {
        let n = self.dimension();
        let surface = n as f64 * unit_ball_volume(n);
        Ok(surface * self.radial_moment(a, b, n as i32 - 1)?)
    }

    /// Lower bound of the density on `[a, b]` (exact for monotone pieces).
    fn min_on(&self, a: f64, b: f64) -> f64 {
        let mut m = self.eval_r(a).min(self.eval_r(b));
        for t in self.breakpoints() {
            if t > a && t < b {
                m = m.min(self.eval_r(t));
            }
        }
        m
    }
}

impl DensitySpec {
    /// Validates nonnegativity and finiteness (analytically where decidable,
    /// otherwise on a radial sample up to `r = 1e3`).
    pub fn new(dimension: usize, form: DensityForm) -> Result<Self, DensityError> {
        if dimension == 0 {
            return Err(DensityError::Invalid("dimension must be ≥ 1".into()));
        }
        match &form {
            DensityForm::Constant { value } => {
                if !value.is_finite() {
                    return Err(DensityError::NotFinite(0.0));
                }
                if *value < 0.0 {
                    return Err(DensityError::Negative { r: 0.0, value: *value });
                }
            }
            DensityForm::RadialPoly { terms } => {
                if terms.is_empty() {
                    return Err(DensityError::Invalid("radial-poly needs at least one term".into()));
                }
                for &(c, p) in terms {
                    if !c.is_finite() || !p.is_finite() {
                        return Err(DensityError::Invalid("non-finite polynomial term".into()));
                    }
                    if p < 0.0 {
                        return Err(DensityError::Invalid(format!("negative power {p} is not locally bounded")));
                    }
                }
            }
            DensityForm::RadialExp { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(DensityError::Invalid("non-finite exponential parameters".into()));
                }
                if *a < 0.0 {
                    return Err(DensityError::Negative { r: 0.0, value: *a });
                }
            }
            DensityForm::Table { r, v } => {
                if r.len() != v.len() || r.is_empty() {
                    return Err(DensityError::Invalid("table needs equally many r and v entries".into()));
                }
                if r[0] != 0.0 {
                    return Err(DensityError::Invalid("table must start at r = 0".into()));
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(DensityError::Invalid("table radii must be strictly increasing".into()));
                }
                for (&ri, &vi) in r.iter().zip(v) {
                    if !vi.is_finite() || !ri.is_finite() {
                        return Err(DensityError::NotFinite(ri));
                    }
                    if vi < 0.0 {
                        return Err(DensityError::Negative { r: ri, value: vi });
                    }
                }
            }
        }
        let d = Self { dimension, form };
        for i in 0..=2000 {
            let r = 1e3 * (i as f64 / 2000.0).powi(2);
            let v = d.eval_r(r);
            if !v.is_finite() {
                return Err(DensityError::NotFinite(r));
            }
            if v < 0.0 {
                return Err(DensityError::Negative { r, value: v });
            }
        }
        Ok(d)
    }

    pub fn constant(dimension: usize, value: f64) -> Result<Self, DensityError> {
        Self::new(dimension, DensityForm::Constant { value })
    }

    pub fn form(&self) -> &DensityForm {
        &self.form
    }

    /// Strictly positive on every bounded set, checked on the knots and a sample.
    pub fn is_strictly_positive(&self) -> bool {
        match &self.form {
            DensityForm::Constant { value } => *value > 0.0,
            DensityForm::RadialExp { a, .. } => *a > 0.0,
            DensityForm::RadialPoly { terms } => terms.iter().any(|&(c, p)| p == 0.0 && c > 0.0) && terms.iter().all(|&(c, _)| c >= 0.0),
            DensityForm::Table { v, .. } => v.iter().all(|&x| x > 0.0),
        }
    }

    /// `true` when the density vanishes identically.
    pub fn is_zero(&self) -> bool {
        match &self.form {
            DensityForm::Constant { value } => *value == 0.0,
            DensityForm::RadialExp { a, .. } => *a == 0.0,
            DensityForm::RadialPoly { terms } => terms.iter().all(|&(c, _)| c == 0.0),
            DensityForm::Table { v, .. } => v.iter().all(|&x| x == 0.0),
        }
    }

    pub fn perturbed(&self, k: u32) -> PerturbedDensity {
        PerturbedDensity::new(self.clone(), k)
    }
}

impl RadialDensity for DensitySpec {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn eval_r(&self, r: f64) -> f64 {
        match &self.form {
            DensityForm::Constant { value } => *value,
            DensityForm::RadialPoly { terms } => terms
                .iter()
                .map(|&(c, p)| if p == 0.0 { c } else { c * r.powf(p) })
                .sum(),
            DensityForm::RadialExp { a, b } => a * (b * r).exp(),
            DensityForm::Table { r: knots, v } => {
                let last = knots.len() - 1;
                if r >= knots[last] {
                    return v[last];
                }
                let j = knots.partition_point(|&t| t <= r).saturating_sub(1);
                let t = (r - knots[j]) / (knots[j + 1] - knots[j]);
                v[j] + t * (v[j + 1] - v[j])
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.form {
            DensityForm::Table { r, .. } => r.clone(),
            _ => Vec::new(),
        }
    }

    fn radial_moment(&self, a: f64, b: f64, p: i32) -> Result<f64, DensityError> {
        match &self.form {
            DensityForm::Constant { value } => {
                let q = (p + 1) as f64;
                Ok(value * (b.powi(p + 1) - a.powi(p + 1)) / q)
            }
            DensityForm::RadialPoly { terms } => Ok(terms
                .iter()
                .map(|&(c, e)| {
                    let q = e + p as f64 + 1.0;
                    c * (b.powf(q) - a.powf(q)) / q
                })
                .sum()),
            _ => {
                let bp = self.breakpoints();
                Ok(quadrature::integrate_split(|r| self.eval_r(r) * r.powi(p), a, b, &bp)?)
            }
        }
    }
}

/// `base + 1/k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedDensity {
    base: DensitySpec,
    k: u32,
}

impl PerturbedDensity {
    pub fn new(base: DensitySpec, k: u32) -> Self {
        assert!(k > 0, "perturbation index must be positive");
        Self { base, k }
    }

    pub fn base(&self) -> &DensitySpec {
        &self.base
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn shift(&self) -> f64 {
        1.0 / self.k as f64
    }
}

impl RadialDensity for PerturbedDensity {
    fn dimension(&self) -> usize {
        self.base.dimension
    }

    fn eval_r(&self, r: f64) -> f64 {
        self.base.eval_r(r) + self.shift()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints()
    }

    fn radial_moment(&self, a: f64, b: f64, p: i32) -> Result<f64, DensityError> {
        let q = (p + 1) as f64;
        Ok(self.base.radial_moment(a, b, p)? + self.shift() * (b.powi(p + 1) - a.powi(p + 1)) / q)
    }
}

/// Radius `R` with `∫_{B_R} d = mass`, for a density whose ball mass is strictly
/// increasing and unbounded. `guess` seeds the bracket.
pub fn radius_for_mass<D: RadialDensity + ?Sized>(d: &D, mass: f64, guess: f64) -> Result<f64, DensityError> {
    if mass <= 0.0 {
        return Ok(0.0);
    }
    quadrature::solve_increasing(|r| d.ball_mass(r), mass, 0.0, guess.max(1e-6), 1e-12)
}

/// `R_k` solving `∫_{B_{R_k}} f_k = ∫_{B_k} g_k`.
pub fn solve_rk(f_k: &PerturbedDensity, g_k: &PerturbedDensity, k: f64) -> Result<f64, DensityError> {
    let target = g_k.ball_mass(k)?;
    radius_for_mass(f_k, target, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum MassVerdict {
    Diverges,
    SuspectFinite,
    Inconclusive,
}

impl std::fmt::Display for MassVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MassVerdict::Diverges => "DIVERGES",
            MassVerdict::SuspectFinite => "SUSPECT-FINITE",
            MassVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassDiagnosis {
    pub verdict: MassVerdict,
    /// `(R, ∫_{B_R} f)`.
    pub table: Vec<(f64, f64)>,
}

/// Heuristic for `∫_{ℝⁿ} f = +∞`: a plateau (relative growth below `1e−6` between
/// `R_last/2` and `R_last`) suggests finite mass, growth by a factor above 10 that is
/// still increasing suggests divergence.
pub fn check_infinite_mass<D: RadialDensity + ?Sized>(f: &D, radii: &[f64]) -> Result<MassDiagnosis, DensityError> {
    if radii.len() < 3 || radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
        return Err(DensityError::Invalid("need at least three increasing positive radii".into()));
    }
    let mut table = Vec::with_capacity(radii.len());
    for &r in radii {
        table.push((r, f.ball_mass(r)?));
    }
    let last = table[table.len() - 1].1;
    let prev = table[table.len() - 2].1;
    let first = table[0].1;
    let half = f.ball_mass(radii[radii.len() - 1] / 2.0)?;
    let verdict = if last <= 0.0 || (last - half) <= 1e-6 * last {
        MassVerdict::SuspectFinite
    } else if last > 10.0 * first && last > prev {
        MassVerdict::Diverges
    } else {
        MassVerdict::Inconclusive
    };
    Ok(MassDiagnosis { verdict, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn poly(n: usize, terms: &[(f64, f64)]) -> DensitySpec {
        DensitySpec::new(n, DensityForm::RadialPoly { terms: terms.to_vec() }).unwrap()
    }

    #[test]
    fn eval_examples() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        assert_eq!(one.eval(&[3.0, -2.0]), 1.0);
        assert_eq!(poly(2, &[(4.0, 2.0)]).eval(&[1.0, 0.0]), 4.0);
        assert_eq!(one.perturbed(4).eval(&[0.3, 0.1]), 1.25);
    }

    #[test]
    fn ball_mass_examples() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        assert!((one.ball_mass(2.0).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((poly(2, &[(4.0, 2.0)]).ball_mass(1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        let table = DensitySpec::new(3, DensityForm::Table { r: vec![0.0, 0.5, 1.0], v: vec![1.0, 1.0, 1.0] }).unwrap();
        assert!((table.ball_mass(1.0).unwrap() - 4.0 * PI / 3.0).abs() < 1e-10 * 4.0);
    }

    #[test]
    fn exp_mass_matches_gamma_integral() {
        let e = DensitySpec::new(2, DensityForm::RadialExp { a: 1.0, b: -1.0 }).unwrap();
        let r: f64 = 3.0;
        let exact = 2.0 * PI * (1.0 - (1.0 + r) * (-r).exp());
        assert!((e.ball_mass(r).unwrap() - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn rejects_bad_data() {
        assert!(DensitySpec::constant(2, -1.0).is_err());
        assert!(DensitySpec::new(2, DensityForm::RadialPoly { terms: vec![(1.0, -1.0)] }).is_err());
        assert!(DensitySpec::new(2, DensityForm::RadialPoly { terms: vec![(1.0, 0.0), (-1.0, 1.0)] }).is_err());
        assert!(DensitySpec::new(2, DensityForm::Table { r: vec![0.0, 0.0], v: vec![1.0, 1.0] }).is_err());
    }

    #[test]
    fn rk_examples() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        let r = solve_rk(&one.perturbed(5), &one.perturbed(5), 5.0).unwrap();
        assert!((r - 5.0).abs() < 1e-8);

        let g = poly(2, &[(4.0, 2.0)]);
        let r = solve_rk(&one.perturbed(2), &g.perturbed(2), 2.0).unwrap();
        assert!((r - (68.0f64 / 3.0).sqrt()).abs() < 1e-7, "{r}");

        let one1 = DensitySpec::constant(1, 1.0).unwrap();
        let r = solve_rk(&one1.perturbed(3), &one1.perturbed(3), 3.0).unwrap();
        assert!((r - 3.0).abs() < 1e-8);
    }

    #[test]
    fn rk_identity_holds() {
        let f = DensitySpec::new(2, DensityForm::RadialExp { a: 1.0, b: -1.0 }).unwrap();
        let g = DensitySpec::constant(2, 1.0).unwrap();
        for k in [2u32, 8, 32] {
            let (fk, gk) = (f.perturbed(k), g.perturbed(k));
            let r = solve_rk(&fk, &gk, k as f64).unwrap();
            let lhs = fk.ball_mass(r).unwrap();
            let rhs = gk.ball_mass(k as f64).unwrap();
            assert!((lhs - rhs).abs() <= 1e-8 * rhs);
        }
    }

    #[test]
    fn infinite_mass_examples() {
        let one = DensitySpec::constant(2, 1.0).unwrap();
        let d = check_infinite_mass(&one, &[1.0, 10.0, 100.0]).unwrap();
        assert_eq!(d.verdict, MassVerdict::Diverges);
        let e = DensitySpec::new(2, DensityForm::RadialExp { a: 1.0, b: -1.0 }).unwrap();
        assert_eq!(check_infinite_mass(&e, &[1.0, 10.0, 100.0]).unwrap().verdict, MassVerdict::SuspectFinite);
        let sq = poly(2, &[(1.0, 2.0)]);
        assert_eq!(check_infinite_mass(&sq, &[1.0, 2.0, 4.0, 8.0]).unwrap().verdict, MassVerdict::Diverges);
    }

    #[test]
    fn perturbation_gap_is_exact() {
        let g = poly(2, &[(4.0, 2.0)]);
        for k in [1u32, 3, 10, 1000] {
            let p = g.perturbed(k);
            let x = [0.3, 0.7];
            assert!((p.eval(&x) - g.eval(&x) - 1.0 / k as f64).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn serde_forms() {
        let f: DensityForm = serde_json::from_str(r#"{"form":"radial-poly","terms":[[4.0,2.0]]}"#).unwrap();
        assert_eq!(f, DensityForm::RadialPoly { terms: vec![(4.0, 2.0)] });
        let f: DensityForm = serde_json::from_str(r#"{"form":"radial-exp","a":1,"b":-1}"#).unwrap();
        assert_eq!(f, DensityForm::RadialExp { a: 1.0, b: -1.0 });
        let f: DensityForm = serde_json::from_str(r#"{"form":"table","r":[0,1],"v":[2,3]}"#).unwrap();
        assert!(matches!(f, DensityForm::Table { .. }));
    }
}
