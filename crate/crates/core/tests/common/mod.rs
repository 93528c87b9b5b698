//! Independent planar oracles for piecewise-linear convex functions, shared by the
//! property suites and the acceptance target.
#![allow(dead_code)]

use entire_ma::PLConvexFunction;
use rand::Rng;

pub type P2 = [f64; 2];

/// Random planar PL function with `pieces` slopes in the disk of radius `slope_radius`
/// and intercepts in `[-1, 1]`.
pub fn random_pl<R: Rng>(rng: &mut R, pieces: usize, slope_radius: f64) -> PLConvexFunction {
    let mut slopes = Vec::with_capacity(pieces);
    let mut cs = Vec::with_capacity(pieces);
    for _ in 0..pieces {
        let r = slope_radius * rng.gen::<f64>().sqrt();
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        slopes.push(vec![r * t.cos(), r * t.sin()]);
        cs.push(rng.gen_range(-1.0..1.0));
    }
    PLConvexFunction::new(2, slopes, cs).unwrap()
}

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull, counter-clockwise (monotone chain).
pub fn hull(mut pts: Vec<P2>) -> Vec<P2> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn area(poly: &[P2]) -> f64 {
    let k = poly.len();
    (0..k).map(|i| cross([0.0, 0.0], poly[i], poly[(i + 1) % k])).sum::<f64>().abs() / 2.0
}

pub fn perimeter(poly: &[P2]) -> f64 {
    let k = poly.len();
    if k < 2 {
        return 0.0;
    }
    (0..k).map(|i| dist2(poly[i], poly[(i + 1) % k])).sum()
}

pub fn dist2(a: P2, b: P2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Vertices of the cell complex with the hull of their active slopes, found by
/// brute force over all triples of pieces.
pub fn vertex_subdifferentials(phi: &PLConvexFunction) -> Vec<(P2, Vec<P2>)> {
    let n = phi.len();
    let scale = 1.0 + phi.max_slope_norm();
    let mut out: Vec<(P2, Vec<P2>)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (phi.slope(i), phi.slope(j), phi.slope(k));
                let (a1, a2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
                let det = a1[0] * a2[1] - a1[1] * a2[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let r1 = phi.intercept(j) - phi.intercept(i);
                let r2 = phi.intercept(k) - phi.intercept(i);
                let x = [(r1 * a2[1] - r2 * a1[1]) / det, (a1[0] * r2 - a2[0] * r1) / det];
                let top = a[0] * x[0] + a[1] * x[1] - phi.intercept(i);
                if phi.value(&x) > top + 1e-9 * scale * (1.0 + x[0].abs() + x[1].abs()) {
                    continue;
                }
                if out.iter().any(|(v, _)| dist2(*v, x) < 1e-8) {
                    continue;
                }
                let tol = 1e-9 * scale * (1.0 + x[0].abs() + x[1].abs());
                let act: Vec<P2> = phi.active_slopes(&x, tol).into_iter().map(|s| [s[0], s[1]]).collect();
                out.push((x, hull(act)));
            }
        }
    }
    out
}

/// `{x : a·x ≤ r}` applied to a convex polygon.
pub fn clip(poly: &[P2], a: P2, r: f64) -> Vec<P2> {
    let mut out = Vec::new();
    let k = poly.len();
    for i in 0..k {
        let (p, q) = (poly[i], poly[(i + 1) % k]);
        let (sp, sq) = (a[0] * p[0] + a[1] * p[1] - r, a[0] * q[0] + a[1] * q[1] - r);
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Cell of piece `i` inside the square `[-half, half]²`.
pub fn cell_polygon(phi: &PLConvexFunction, i: usize, half: f64) -> Vec<P2> {
    let mut poly = vec![[-half, -half], [half, -half], [half, half], [-half, half]];
    let yi = phi.slope(i);
    for j in 0..phi.len() {
        if j == i || poly.is_empty() {
            continue;
        }
        let yj = phi.slope(j);
        poly = clip(&poly, [yj[0] - yi[0], yj[1] - yi[1]], phi.intercept(j) - phi.intercept(i));
    }
    poly
}

pub fn diameter(poly: &[P2]) -> f64 {
    let mut d: f64 = 0.0;
    for a in poly {
        for b in poly {
            d = d.max(dist2(*a, *b));
        }
    }
    d
}

pub fn centroid(poly: &[P2]) -> P2 {
    let k = poly.len();
    let mut c = [0.0, 0.0];
    let mut a2 = 0.0;
    for i in 0..k {
        let (p, q) = (poly[i], poly[(i + 1) % k]);
        let w = p[0] * q[1] - q[0] * p[1];
        a2 += w;
        c[0] += (p[0] + q[0]) * w;
        c[1] += (p[1] + q[1]) * w;
    }
    [c[0] / (3.0 * a2), c[1] / (3.0 * a2)]
}

/// Upper bound for `sup |φ|` on the unit disk: the maximum is exact, the minimum is
/// a lattice minimum lowered by the Lipschitz covering error.
pub fn sup_abs_on_unit_disk(phi: &PLConvexFunction) -> f64 {
    let top = (0..phi.len())
        .map(|i| {
            let s = phi.slope(i);
            (s[0] * s[0] + s[1] * s[1]).sqrt() - phi.intercept(i)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let m = 60;
    let h = 1.0 / m as f64;
    let mut low = f64::INFINITY;
    for a in -m..=m {
        for b in -m..=m {
            let x = [a as f64 * h, b as f64 * h];
            if x[0] * x[0] + x[1] * x[1] <= (1.0 + h) * (1.0 + h) {
                low = low.min(phi.value(&x));
            }
        }
    }
    let low = low - phi.max_slope_norm() * h * std::f64::consts::FRAC_1_SQRT_2;
    top.abs().max(low.abs())
}
