//! Small dense-vector helpers on `&[f64]`.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    // ω_0 = 1, ω_1 = 2, ω_n = ω_{n-2} · 2π / n
    let mut w = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut d = if n.is_multiple_of(2) { 2 } else { 3 };
    while d <= n {
        w *= 2.0 * std::f64::consts::PI / d as f64;
        d += 2;
    }
    w
}

/// Radical inverse of `i` in base `b` (van der Corput / Halton coordinate).
pub(crate) fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

pub(crate) const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Deterministic nested point set on the unit sphere `S^{n-1}`: the first `m` points
/// of the sequence for `m` samples are a prefix of the sequence for any larger count.
pub(crate) fn sphere_point(n: usize, i: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    match n {
        0 => vec![],
        1 => vec![if i.is_multiple_of(2) { 1.0 } else { -1.0 }],
        2 => {
            let t = 2.0 * PI * radical_inverse(i as u64, 2);
            vec![t.cos(), t.sin()]
        }
        3 => {
            let z = 1.0 - 2.0 * radical_inverse(i as u64, 2);
            let p = 2.0 * PI * radical_inverse(i as u64, 3);
            let s = (1.0 - z * z).max(0.0).sqrt();
            vec![s * p.cos(), s * p.sin(), z]
        }
        _ => {
            // Box–Muller on Halton coordinates, then normalize.
            let idx = i as u64 + 1;
            let mut v = Vec::with_capacity(n);
            let mut d = 0;
            while v.len() < n {
                let u1 = radical_inverse(idx, PRIMES[d % PRIMES.len()]).max(1e-300);
                let u2 = radical_inverse(idx, PRIMES[(d + 1) % PRIMES.len()]);
                let rad = (-2.0 * u1.ln()).sqrt();
                v.push(rad * (2.0 * PI * u2).cos());
                if v.len() < n {
                    v.push(rad * (2.0 * PI * u2).sin());
                }
                d += 2;
            }
            let nv = norm(&v);
            v.iter().map(|x| x / nv).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_points_are_unit() {
        for n in 1..6 {
            for i in 0..50 {
                assert!((norm(&sphere_point(n, i)) - 1.0).abs() < 1e-12);
            }
        }
    }
}
