//! Rotation-invariant solutions from the mass balance on balls.
//!
//! For radial convex `φ` the gradient maps `B_R` onto `B_{φ'(R)}`, so the weak
//! formulation on balls reads `F(φ'(R)) = G(R)` with `F(ρ) = ∫_{B_ρ} f` and
//! `G(R) = ∫_{B_R} g`. Solving this per radius gives `φ'`; integrating gives `φ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{DensityError, RadialDensity};
use crate::plc::{ball_lattice, PLConvexFunction};
use crate::quadrature;
use crate::vecmath::norm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("mass function of f is not strictly increasing near ρ = {0}; f vanishes on an interval")]
    InversionFailure(f64),
    #[error("mass identity violated at R = {radius}: relative error {error:e}")]
    IdentityViolated { radius: f64, error: f64 },
    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// Tabulated `r ↦ (φ(r), φ'(r))` on a uniform grid from `0` to `r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub dimension: usize,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

/// Four-point Lagrange interpolation on a uniform table (clamped at both ends).
fn interp(r: &[f64], v: &[f64], x: f64) -> f64 {
    let m = r.len();
    if m == 1 {
        return v[0];
    }
    let h = r[1] - r[0];
    let s = ((x - r[0]) / h).clamp(0.0, (m - 1) as f64);
    if m < 4 {
        let j = (s.floor() as usize).min(m - 2);
        let t = s - j as f64;
        return v[j] + t * (v[j + 1] - v[j]);
    }
    let j = (s.floor() as isize - 1).clamp(0, m as isize - 4) as usize;
    let t = s - j as f64;
    let (p0, p1, p2, p3) = (v[j], v[j + 1], v[j + 2], v[j + 3]);
    // Nodes at t = 0, 1, 2, 3.
    let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    p0 * l0 + p1 * l1 + p2 * l2 + p3 * l3
}

impl RadialSolution {
    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("nonempty grid")
    }

    pub fn step(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    pub fn phi_at(&self, r: f64) -> f64 {
        interp(&self.r, &self.phi, r)
    }

    pub fn dphi_at(&self, r: f64) -> f64 {
        interp(&self.r, &self.dphi, r)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.phi_at(norm(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = norm(x);
        if r == 0.0 {
            return vec![0.0; x.len()];
        }
        let s = self.dphi_at(r) / r;
        x.iter().map(|v| v * s).collect()
    }

    /// Tangent planes at the lattice points of spacing `radius / m` in `B_radius`.
    pub fn to_pl(&self, radius: f64, m: usize) -> PLConvexFunction {
        let pts = ball_lattice(self.dimension, radius, m);
        PLConvexFunction::tangent_planes(self.dimension, &pts, |x| self.value(x), |x| self.gradient(x))
            .expect("nonempty lattice")
    }

    /// `r,phi,dphi` table with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,phi,dphi\n");
        for i in 0..self.r.len() {
            s.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", self.r[i], self.phi[i], self.dphi[i]));
        }
        s
    }

    /// Parses the `r,phi,dphi` table written by [`RadialSolution::to_csv`]. The radii
    /// must start at 0 and be uniformly spaced.
    pub fn from_csv(text: &str, dimension: usize) -> Result<Self, RadialError> {
        let bad = |m: String| RadialError::InvalidGrid(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "r,phi,dphi" => {}
            _ => return Err(bad("expected header r,phi,dphi".into())),
        }
        let (mut r, mut phi, mut dphi) = (Vec::new(), Vec::new(), Vec::new());
        for (i, l) in lines.enumerate() {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
            if v.len() != 3 || v.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("row {}: expected three finite numbers", i + 1)));
            }
            r.push(v[0]);
            phi.push(v[1]);
            dphi.push(v[2]);
        }
        if r.len() < 2 || r[0] != 0.0 {
            return Err(bad("need at least two rows starting at r = 0".into()));
        }
        let h = r[1] - r[0];
        if !(h > 0.0) || r.iter().enumerate().any(|(i, &x)| (x - i as f64 * h).abs() > 1e-6 * h.max(x)) {
            return Err(bad("radii must be uniformly spaced".into()));
        }
        Ok(Self { dimension, r, phi, dphi })
    }

    /// The same profile with `φ'` multiplied by `s` (and `φ` re-integrated).
    pub fn scaled_gradient(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.dphi.iter_mut().for_each(|v| *v *= s);
        out.phi.iter_mut().for_each(|v| *v *= s);
        out
    }
}

/// Solves `F(φ'(R)) = G(R)` on `steps` uniform intervals of `[0, r_max]`.
pub fn solve_radial<F, G>(f: &F, g: &G, r_max: f64, steps: usize) -> Result<RadialSolution, RadialError>
where
    F: RadialDensity + ?Sized,
    G: RadialDensity + ?Sized,
{
    if steps < 2 || !(r_max > 0.0) {
        return Err(RadialError::InvalidGrid(format!("need steps ≥ 2 and r_max > 0, got {steps}, {r_max}")));
    }
    let n = g.dimension();
    let h = r_max / steps as f64;
    let r: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
    let mut gmass = vec![0.0; steps + 1];
    for i in 1..=steps {
        gmass[i] = gmass[i - 1] + g.shell_mass(r[i - 1], r[i])?;
    }
    let total = gmass[steps];
    // Find the image radius of r_max and check that F increases strictly up to it.
    let rho_max = quadrature::solve_increasing(|p| f.ball_mass(p), total, 0.0, r_max.max(1e-3), 1e-13)?;
    if f.ball_mass(rho_max)? < total * (1.0 - 1e-8) {
        return Err(RadialError::InversionFailure(rho_max));
    }
    let probe = 4 * steps;
    let mut prev = 0.0;
    for j in 1..=probe {
        let p = rho_max * j as f64 / probe as f64;
        let m = f.ball_mass(p)?;
        if !(m > prev) {
            return Err(RadialError::InversionFailure(p));
        }
        prev = m;
    }
    let mut dphi = vec![0.0; steps + 1];
    let mut guess = rho_max / steps as f64;
    for i in 1..=steps {
        let target = gmass[i];
        if target <= 0.0 {
            dphi[i] = 0.0;
            continue;
        }
        let lo = dphi[i - 1];
        let rho = quadrature::solve_increasing(|p| f.ball_mass(p), target, lo, guess.max(lo * 1.01 + 1e-12), 1e-13)?;
        let err = (f.ball_mass(rho)? - target).abs() / target;
        if err > 1e-8 {
            return Err(RadialError::IdentityViolated { radius: r[i], error: err });
        }
        dphi[i] = rho;
        guess = rho + (rho - lo);
    }
    let mut phi = vec![0.0; steps + 1];
    for i in 1..=steps {
        // Trapezoid with an endpoint correction from the neighbouring slopes.
        phi[i] = phi[i - 1] + 0.5 * h * (dphi[i - 1] + dphi[i]);
        if i >= 2 && i < steps {
            let curv = (dphi[i + 1] - dphi[i]) - (dphi[i - 1] - dphi[i - 2]);
            phi[i] -= h * curv / 24.0;
        }
    }
    Ok(RadialSolution { dimension: n, r, phi, dphi })
}

/// Max over `radii` of `|f(φ')·φ''·(φ'/r)^{n−1} − g| / max(g, 1e−12)` with `φ''` by
/// central differences at the table step.
pub fn residual_check<F, G>(sol: &RadialSolution, f: &F, g: &G, radii: &[f64]) -> f64
where
    F: RadialDensity + ?Sized,
    G: RadialDensity + ?Sized,
{
    let n = sol.dimension as i32;
    let h = sol.step();
    radii
        .iter()
        .filter(|&&r| r > h && r < sol.r_max() - h)
        .map(|&r| {
            let d1 = sol.dphi_at(r);
            let d2 = (sol.dphi_at(r + h) - sol.dphi_at(r - h)) / (2.0 * h);
            let lhs = f.eval_r(d1) * d2 * (d1 / r).powi(n - 1);
            let gr = g.eval_r(r);
            (lhs - gr).abs() / gr.max(1e-12)
        })
        .fold(0.0, f64::max)
}
