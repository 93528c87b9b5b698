//! Adaptive Gauss–Kronrod (7/15) quadrature on a bounded interval and a monotone
//! root finder.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Default relative tolerance for [`integrate`].
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Default maximum number of subintervals.
pub const DEFAULT_BUDGET: usize = 4000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("adaptive quadrature on [{a}, {b}] exceeded {budget} subintervals (error estimate {error:e})")]
    QuadratureFailure { a: f64, b: f64, budget: usize, error: f64 },
    #[error("integrand is not finite at x = {0}")]
    NonFinite(f64),
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel: `(integral, error estimate)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadratureError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadratureError::NonFinite(c));
    }
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        if !f1.is_finite() {
            return Err(QuadratureError::NonFinite(c - x));
        }
        if !f2.is_finite() {
            return Err(QuadratureError::NonFinite(c + x));
        }
        rk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((rk * h, ((rk - rg) * h).abs()))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// `∫_a^b f` to relative tolerance `rel_tol` (with an absolute floor of
/// `1e-300`), bisecting the panel with the largest error estimate first.
pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    budget: usize,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut panels = 1;
    while err > rel_tol * total.abs() && err > 1e-300 {
        if panels >= budget {
            return Err(QuadratureError::QuadratureFailure { a, b, budget, error: err });
        }
        let p = heap.pop().expect("heap never empties");
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&f, p.a, m)?;
        let (v2, e2) = gk15(&f, m, p.b)?;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
        panels += 1;
        if err < 0.0 {
            // Guard against drift from the incremental update.
            err = heap.iter().map(|q| q.error).sum();
        }
    }
    // Re-sum the panels to shed accumulated rounding from the running total.
    let mut vals: Vec<(f64, f64)> = heap.into_iter().map(|p| (p.a, p.value)).collect();
    vals.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(vals.into_iter().map(|(_, v)| v).sum())
}

/// [`integrate_with`] at the default tolerance and budget.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64, QuadratureError> {
    integrate_with(f, a, b, DEFAULT_REL_TOL, DEFAULT_BUDGET)
}

/// Integrates piecewise between the sorted `breaks` that fall inside `(a, b)`.
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
) -> Result<f64, QuadratureError> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
    pts.push(b);
    let mut s = 0.0;
    for w in pts.windows(2) {
        s += integrate(&f, w[0], w[1])?;
    }
    Ok(s)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_m`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if m == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// Solves `h(x) = target` for a continuous nondecreasing `h` on `[lo, ∞)` with
/// `h(lo) ≤ target`, starting the bracket search at `guess`. The returned root
/// satisfies `|h(x) − target| ≤ rel_tol · |target|` or brackets to machine precision.
pub fn solve_increasing<H, E>(h: H, target: f64, lo: f64, guess: f64, rel_tol: f64) -> Result<f64, E>
where
    H: Fn(f64) -> Result<f64, E>,
{
    let tol = rel_tol * target.abs().max(1e-300);
    let mut a = lo;
    let mut fa = h(a)? - target;
    if fa.abs() <= tol {
        return Ok(a);
    }
    let mut b = guess.max(lo + 1e-12);
    let mut fb = h(b)? - target;
    let mut grow = 0;
    while fb < 0.0 {
        a = b;
        fa = fb;
        b = lo + 2.0 * (b - lo);
        fb = h(b)? - target;
        grow += 1;
        if grow > 2000 {
            return Ok(b);
        }
    }
    // Illinois-modified regula falsi with a bisection safeguard.
    let mut side = 0i8;
    for _ in 0..300 {
        if fb.abs() <= tol {
            return Ok(b);
        }
        if fa.abs() <= tol {
            return Ok(a);
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1e-300) {
            return Ok(c);
        }
        let fc = h(c)? - target;
        if fc.abs() <= tol {
            return Ok(c);
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((v - 8.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate(|r| r * (-r).exp(), 0.0, 100.0).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kink_is_resolved() {
        let v = integrate(|x: f64| x.abs(), -1.0, 3.0).unwrap();
        assert!((v - 5.0).abs() < 1e-9);
        let v = integrate_split(|x: f64| x.abs(), -1.0, 3.0, &[0.0]).unwrap();
        assert!((v - 5.0).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = integrate_with(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1e-14, 20);
        assert!(matches!(r, Err(QuadratureError::QuadratureFailure { .. })));
    }

    #[test]
    fn gauss_legendre_integrates_degree_2m_minus_1() {
        for m in 1..8 {
            let (x, w) = gauss_legendre(m);
            let deg = 2 * m - 1;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((s - exact).abs() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn root_finder() {
        let r = solve_increasing(|x| Ok::<f64, ()>(x * x * x), 27.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 3.0).abs() < 1e-10);
    }
}
