//! `max_{x ∈ box} min_j (a_j·x + b_j)` by constraint generation.
//!
//! The restricted problem over a small working set is solved by enumerating the
//! vertices of the `(x, t)` polytope; the most violated row of the full family is
//! then added until the restricted optimum is feasible for every row.

/// A finite family of affine functions `x ↦ a_j·x + b_j` on ℝⁿ.
pub(crate) trait AffineFamily {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    /// Writes `a_j` into `a` and returns `b_j`.
    fn row(&self, j: usize, a: &mut [f64]) -> f64;
    /// `(argmin_j, min_j)` of `a_j·x + b_j`, lowest index on ties.
    fn lowest(&self, x: &[f64]) -> (usize, f64);
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub t: f64,
    /// Rows tight at the solution.
    pub tight: Vec<usize>,
}

#[derive(Clone, Copy)]
enum Con {
    Row(usize),
    Upper(usize),
    Lower(usize),
}

/// Solves the `m × m` system in place by Gaussian elimination with partial pivoting.
fn solve_dense(m: usize, a: &mut [f64], b: &mut [f64]) -> bool {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for col in 0..m {
        let mut piv = col;
        for r in col + 1..m {
            if a[r * m + col].abs() > a[piv * m + col].abs() {
                piv = r;
            }
        }
        if a[piv * m + col].abs() <= 1e-12 * scale {
            return false;
        }
        if piv != col {
            for c in 0..m {
                a.swap(piv * m + c, col * m + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * m + col];
        for r in col + 1..m {
            let f = a[r * m + col] / d;
            if f != 0.0 {
                for c in col..m {
                    a[r * m + c] -= f * a[col * m + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for col in (0..m).rev() {
        let mut s = b[col];
        for c in col + 1..m {
            s -= a[col * m + c] * b[c];
        }
        b[col] = s / a[col * m + col];
    }
    true
}

struct Restricted {
    n: usize,
    rows_a: Vec<Vec<f64>>,
    rows_b: Vec<f64>,
    ids: Vec<usize>,
}

impl Restricted {
    fn add<F: AffineFamily + ?Sized>(&mut self, fam: &F, j: usize) -> bool {
        if self.ids.contains(&j) {
            return false;
        }
        let mut a = vec![0.0; self.n];
        let b = fam.row(j, &mut a);
        self.rows_a.push(a);
        self.rows_b.push(b);
        self.ids.push(j);
        true
    }

    /// Best vertex of the restricted polytope, or `None` if none was found.
    fn solve(&self, lo: &[f64], hi: &[f64], scale: f64) -> Option<(Vec<f64>, f64)> {
        let n = self.n;
        let m = n + 1;
        let mut cons: Vec<Con> = (0..self.ids.len()).map(Con::Row).collect();
        for d in 0..n {
            cons.push(Con::Upper(d));
            cons.push(Con::Lower(d));
        }
        let total = cons.len();
        if total < m {
            return None;
        }
        let tol = 1e-11 * scale;
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut idx: Vec<usize> = (0..m).collect();
        let mut a = vec![0.0; m * m];
        let mut b = vec![0.0; m];
        loop {
            let has_row = idx.iter().any(|&i| matches!(cons[i], Con::Row(_)));
            if has_row {
                for (r, &ci) in idx.iter().enumerate() {
                    let row = &mut a[r * m..(r + 1) * m];
                    row.iter_mut().for_each(|v| *v = 0.0);
                    match cons[ci] {
                        Con::Row(k) => {
                            for d in 0..n {
                                row[d] = -self.rows_a[k][d];
                            }
                            row[n] = 1.0;
                            b[r] = self.rows_b[k];
                        }
                        Con::Upper(d) => {
                            row[d] = 1.0;
                            b[r] = hi[d];
                        }
                        Con::Lower(d) => {
                            row[d] = 1.0;
                            b[r] = lo[d];
                        }
                    }
                }
                if solve_dense(m, &mut a, &mut b) {
                    let z = &b;
                    let t = z[n];
                    let better = best.as_ref().is_none_or(|(_, bt)| t > *bt + tol);
                    if better {
                        let x = &z[..n];
                        let inside = (0..n).all(|d| x[d] <= hi[d] + tol && x[d] >= lo[d] - tol);
                        let feasible = inside
                            && self.rows_a.iter().zip(&self.rows_b).all(|(ra, rb)| {
                                let v: f64 = ra.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + rb;
                                t <= v + tol
                            });
                        if feasible {
                            let xc: Vec<f64> = (0..n).map(|d| x[d].clamp(lo[d], hi[d])).collect();
                            best = Some((xc, t));
                        }
                    }
                }
            }
            // Next m-combination of 0..total.
            let mut i = m;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if idx[i] < total - m + i {
                    idx[i] += 1;
                    for j in i + 1..m {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

/// Maximizes `min_j (a_j·x + b_j)` over the box `[lo, hi]`, starting from the
/// working set `warm` (indices into the family).
pub(crate) fn maximize_min<F: AffineFamily + ?Sized>(fam: &F, lo: &[f64], hi: &[f64], warm: &[usize]) -> LpSolution {
    let n = fam.dim();
    let mut rs = Restricted { n, rows_a: Vec::new(), rows_b: Vec::new(), ids: Vec::new() };
    // A long warm list (a highly degenerate vertex) would make enumeration costly.
    for &j in warm.iter().take(2 * (n + 1)) {
        if j < fam.len() {
            rs.add(fam, j);
        }
    }
    let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    if rs.ids.is_empty() {
        let (j, _) = fam.lowest(&center);
        rs.add(fam, j);
    }
    let width = lo.iter().zip(hi).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max);
    let mut scale = 1.0f64.max(width);
    for (ra, rb) in rs.rows_a.iter().zip(&rs.rows_b) {
        scale = scale.max(rb.abs()).max(ra.iter().fold(0.0f64, |s, v| s.max(v.abs())) * width);
    }
    let mut x = center.clone();
    let mut t;
    loop {
        match rs.solve(lo, hi, scale) {
            Some((xs, ts)) => {
                x = xs;
                t = ts;
            }
            None => {
                // Degenerate restricted problem: fall back to the box centre.
                t = fam.lowest(&x).1;
            }
        }
        let (j, v) = fam.lowest(&x);
        scale = scale.max(v.abs());
        if v >= t - 1e-11 * scale || !rs.add(fam, j) {
            t = v;
            break;
        }
    }
    let tol = 1e-9 * scale;
    let mut a = vec![0.0; n];
    let tight = (0..fam.len())
        .filter(|&j| {
            let b = fam.row(j, &mut a);
            let v: f64 = a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() + b;
            v <= t + tol
        })
        .collect();
    LpSolution { x, t, tight }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rows(Vec<(Vec<f64>, f64)>);

    impl AffineFamily for Rows {
        fn dim(&self) -> usize {
            self.0[0].0.len()
        }
        fn len(&self) -> usize {
            self.0.len()
        }
        fn row(&self, j: usize, a: &mut [f64]) -> f64 {
            a.copy_from_slice(&self.0[j].0);
            self.0[j].1
        }
        fn lowest(&self, x: &[f64]) -> (usize, f64) {
            let mut best = (0, f64::INFINITY);
            for (j, (a, b)) in self.0.iter().enumerate() {
                let v: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + b;
                if v < best.1 {
                    best = (j, v);
                }
            }
            best
        }
    }

    #[test]
    fn tent_peak() {
        // min(1 - |x|, 1 - |y|) peaks at the origin with value 1.
        let rows = Rows(vec![
            (vec![-1.0, 0.0], 1.0),
            (vec![1.0, 0.0], 1.0),
            (vec![0.0, -1.0], 1.0),
            (vec![0.0, 1.0], 1.0),
        ]);
        let s = maximize_min(&rows, &[-5.0, -5.0], &[5.0, 5.0], &[]);
        assert!((s.t - 1.0).abs() < 1e-12);
        assert!(s.x.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(s.tight.len(), 4);
    }

    #[test]
    fn box_bound_active() {
        let rows = Rows(vec![(vec![1.0, 2.0], 0.5)]);
        let s = maximize_min(&rows, &[-1.0, -1.0], &[1.0, 1.0], &[]);
        assert!((s.t - 3.5).abs() < 1e-12);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional() {
        let rows = Rows(vec![(vec![1.0], 0.0), (vec![-2.0], 3.0)]);
        let s = maximize_min(&rows, &[-10.0], &[10.0], &[]);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.t - 1.0).abs() < 1e-12);
    }
}
