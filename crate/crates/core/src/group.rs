//! Finite subgroups of O(n): closure, orbits, orbit-hull inradius and the
//! irreducibility certificate.
//!
//! For an irreducible action every unit orbit `K·x` has a convex hull containing a
//! ball `B(0, ε)` with `ε` independent of `x`. The hull inradius is computed exactly
//! (angle-sorted polygon in the plane, facet enumeration above), and `ε` is estimated
//! as the minimum over a nested low-discrepancy sample of the unit sphere.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::vecmath::{dot, max_abs_diff, norm, sphere_point};

/// Orthogonality tolerance for supplied matrices.
pub const ORTHO_TOL: f64 = 1e-10;
/// Deduplication tolerance for group elements.
pub const CLOSURE_TOL: f64 = 1e-8;
/// Deduplication tolerance for orbit points.
pub const ORBIT_TOL: f64 = 1e-10;
/// Default number of sphere samples for the `ε` estimate.
pub const DEFAULT_SPHERE_SAMPLES: usize = 4096;
/// Largest number of candidate facets examined for one orbit in `n ≥ 3`.
pub const MAX_FACET_CANDIDATES: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("closure exceeded {cap} elements; the group is infinite or very large (use full-rotation mode)")]
    ClosureOverflow { cap: usize },
    #[error("matrix is not orthogonal: |MᵀM − I|∞ = {defect:e}")]
    NotOrthogonal { defect: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("orbit hull has empty interior (affine rank {rank} < {dim})")]
    DegenerateOrbit { rank: usize, dim: usize },
    #[error("orbit too large for facet enumeration ({candidates} candidate facets)")]
    InstanceTooLarge { candidates: usize },
    #[error("unknown group preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid group preset `{0}`: {1}")]
    InvalidPreset(String, String),
}

/// Dense row-major `n × n` real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoMatrix {
    n: usize,
    data: Vec<f64>,
}

impl OrthoMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    /// Builds a matrix from row-major entries; checks shape only.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self, GroupError> {
        if data.len() != n * n {
            return Err(GroupError::DimensionMismatch { expected: n * n, found: data.len() });
        }
        Ok(Self { n, data })
    }

    pub fn rotation2(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { n: 2, data: vec![c, -s, s, c] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Self { n, data }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j];
            }
        }
        Self { n, data }
    }

    /// `M·x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| dot(&self.data[i * n..(i + 1) * n], x)).collect()
    }

    /// `‖MᵀM − I‖∞` (max-entry norm).
    pub fn orthogonality_defect(&self) -> f64 {
        let p = self.transpose().mul(self);
        max_abs_diff(&p.data, &Self::identity(self.n).data)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.data, &other.data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupMode {
    ExplicitFinite,
    /// The full group O(n). Orbit-level operations act through a finite surrogate
    /// subgroup stored in `elements`; `ε = 1` exactly.
    FullRotation,
}

/// A compact subgroup of O(n), explicit when finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalGroupSpec {
    dimension: usize,
    elements: Vec<OrthoMatrix>,
    mode: GroupMode,
}

/// `{g·x : g ∈ K}` with duplicates removed.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupOrbit {
    pub base: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityCertificate {
    pub epsilon: f64,
    pub span_rank: usize,
    pub center_of_mass_norm: f64,
    pub verdict: bool,
    pub sphere_samples: usize,
}

impl OrthogonalGroupSpec {
    /// Wraps an already closed element list after checking the type invariants
    /// (orthogonality, identity present, closure under products).
    pub fn from_elements(dimension: usize, elements: Vec<OrthoMatrix>) -> Result<Self, GroupError> {
        for e in &elements {
            if e.dim() != dimension {
                return Err(GroupError::DimensionMismatch { expected: dimension, found: e.dim() });
            }
            let defect = e.orthogonality_defect();
            if defect > ORTHO_TOL {
                return Err(GroupError::NotOrthogonal { defect });
            }
        }
        let id = OrthoMatrix::identity(dimension);
        if !elements.iter().any(|e| e.max_abs_diff(&id) <= CLOSURE_TOL) {
            return Err(GroupError::InvalidPreset("elements".into(), "identity missing".into()));
        }
        for a in &elements {
            for b in &elements {
                let p = a.mul(b);
                if !elements.iter().any(|e| e.max_abs_diff(&p) <= CLOSURE_TOL) {
                    return Err(GroupError::InvalidPreset(
                        "elements".into(),
                        "not closed under multiplication".into(),
                    ));
                }
            }
        }
        Ok(Self { dimension, elements, mode: GroupMode::ExplicitFinite })
    }

    /// O(n) itself, discretized by a finite surrogate for orbit completion.
    pub fn full_rotation(n: usize) -> Result<Self, GroupError> {
        let surrogate = match n {
            0 => return Err(GroupError::InvalidPreset("full-rotation:0".into(), "n ≥ 1".into())),
            1 => neg_identity(1)?,
            2 => dihedral(8)?,
            _ => hyperoctahedral(n)?,
        };
        Ok(Self { dimension: n, elements: surrogate.elements, mode: GroupMode::FullRotation })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn elements(&self) -> &[OrthoMatrix] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn mode(&self) -> GroupMode {
        self.mode
    }

    /// `{R g Rᵀ}` for an orthogonal `R`.
    pub fn conjugate_by(&self, r: &OrthoMatrix) -> Self {
        let rt = r.transpose();
        Self {
            dimension: self.dimension,
            elements: self.elements.iter().map(|g| r.mul(g).mul(&rt)).collect(),
            mode: self.mode,
        }
    }

    /// Parses a preset descriptor: `cyclic:m`, `dihedral:m`, `hyperoctahedral:n`,
    /// `neg-identity:n`, `full-rotation:n`.
    pub fn from_preset(desc: &str) -> Result<Self, GroupError> {
        let (name, arg) = desc
            .split_once(':')
            .ok_or_else(|| GroupError::UnknownPreset(desc.to_string()))?;
        let m: usize = arg
            .trim()
            .parse()
            .map_err(|_| GroupError::InvalidPreset(desc.to_string(), "expected a positive integer".into()))?;
        if m == 0 {
            return Err(GroupError::InvalidPreset(desc.to_string(), "expected a positive integer".into()));
        }
        match name.trim() {
            "cyclic" => cyclic(m),
            "dihedral" => dihedral(m),
            "hyperoctahedral" => hyperoctahedral(m),
            "neg-identity" => neg_identity(m),
            "full-rotation" => Self::full_rotation(m),
            _ => Err(GroupError::UnknownPreset(desc.to_string())),
        }
    }
}

/// Closure of `generators` under multiplication, deduplicated within
/// [`CLOSURE_TOL`]. Fails with `ClosureOverflow` once more than `cap` elements appear.
pub fn close_group(generators: &[OrthoMatrix], cap: usize) -> Result<OrthogonalGroupSpec, GroupError> {
    let n = generators.first().map(|g| g.dim()).unwrap_or(1);
    for g in generators {
        if g.dim() != n {
            return Err(GroupError::DimensionMismatch { expected: n, found: g.dim() });
        }
        let defect = g.orthogonality_defect();
        if defect > ORTHO_TOL {
            return Err(GroupError::NotOrthogonal { defect });
        }
    }
    let mut elements = vec![OrthoMatrix::identity(n)];
    let mut next = 0;
    while next < elements.len() {
        let e = elements[next].clone();
        next += 1;
        for g in generators {
            let p = g.mul(&e);
            if !elements.iter().any(|q| q.max_abs_diff(&p) <= CLOSURE_TOL) {
                elements.push(p);
                if elements.len() > cap {
                    return Err(GroupError::ClosureOverflow { cap });
                }
            }
        }
    }
    Ok(OrthogonalGroupSpec { dimension: n, elements, mode: GroupMode::ExplicitFinite })
}

const PRESET_CAP: usize = 100_000;

/// Rotations of the plane by multiples of `2π/m`.
pub fn cyclic(m: usize) -> Result<OrthogonalGroupSpec, GroupError> {
    // Built directly rather than by repeated products to keep entries exact to 1 ulp.
    let elements = (0..m)
        .map(|j| OrthoMatrix::rotation2(2.0 * std::f64::consts::PI * j as f64 / m as f64))
        .collect();
    Ok(OrthogonalGroupSpec { dimension: 2, elements, mode: GroupMode::ExplicitFinite })
}

/// Symmetries of the regular `m`-gon (order `2m`).
pub fn dihedral(m: usize) -> Result<OrthogonalGroupSpec, GroupError> {
    let mut elements = cyclic(m)?.elements;
    let flip = OrthoMatrix { n: 2, data: vec![1.0, 0.0, 0.0, -1.0] };
    let reflections: Vec<_> = elements.iter().map(|r| r.mul(&flip)).collect();
    elements.extend(reflections);
    Ok(OrthogonalGroupSpec { dimension: 2, elements, mode: GroupMode::ExplicitFinite })
}

/// Signed permutation matrices of ℝⁿ (order `2ⁿ n!`).
pub fn hyperoctahedral(n: usize) -> Result<OrthogonalGroupSpec, GroupError> {
    let mut gens = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let mut m = OrthoMatrix::identity(n);
        m.data[i * n + i] = 0.0;
        m.data[(i + 1) * n + i + 1] = 0.0;
        m.data[i * n + i + 1] = 1.0;
        m.data[(i + 1) * n + i] = 1.0;
        gens.push(m);
    }
    let mut flip = OrthoMatrix::identity(n);
    flip.data[0] = -1.0;
    gens.push(flip);
    close_group(&gens, PRESET_CAP)
}

/// `{I, −I}`.
pub fn neg_identity(n: usize) -> Result<OrthogonalGroupSpec, GroupError> {
    let mut neg = OrthoMatrix::identity(n);
    for v in neg.data.iter_mut() {
        *v = -*v;
    }
    close_group(&[neg], PRESET_CAP)
}

/// The orbit of `x`, deduplicated within [`ORBIT_TOL`] (scaled by `max(1, |x|)`).
pub fn orbit(x: &[f64], group: &OrthogonalGroupSpec) -> GroupOrbit {
    let tol = ORBIT_TOL * norm(x).max(1.0);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(group.order());
    for g in &group.elements {
        let p = g.apply(x);
        if !points.iter().any(|q| max_abs_diff(q, &p) <= tol) {
            points.push(p);
        }
    }
    GroupOrbit { base: x.to_vec(), points }
}

/// Rank of the row span of `rows` (relative singular-value cutoff).
pub(crate) fn matrix_rank(rows: &[Vec<f64>], n: usize, rel_tol: f64) -> usize {
    if rows.is_empty() || n == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

fn affine_rank(points: &[Vec<f64>], n: usize) -> usize {
    let p0 = &points[0];
    let diffs: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    matrix_rank(&diffs, n, 1e-9)
}

/// Radius of the largest origin-centred ball inside `conv(orb.points)`.
///
/// Returns `0` when the origin is outside or on the boundary of the hull, and
/// `DegenerateOrbit` when the hull has empty interior. For `n ≥ 3` only facets
/// through the first orbit point are enumerated: the group acts transitively on the
/// orbit, so every facet is the image of one of those.
pub fn orbit_hull_inradius(orb: &GroupOrbit) -> Result<f64, GroupError> {
    let n = orb.base.len();
    let pts = &orb.points;
    let rank = if pts.len() <= 1 { 0 } else { affine_rank(pts, n) };
    if rank < n {
        return Err(GroupError::DegenerateOrbit { rank, dim: n });
    }
    match n {
        1 => {
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            Ok(hi.min(-lo).max(0.0))
        }
        2 => Ok(polygon_inradius(pts)),
        _ => facet_inradius(pts, n),
    }
}

/// Convenience wrapper mapping degenerate hulls to radius 0.
pub fn inradius_or_zero(orb: &GroupOrbit) -> f64 {
    orbit_hull_inradius(orb).unwrap_or(0.0)
}

fn polygon_inradius(pts: &[Vec<f64>]) -> f64 {
    // Orbit points share one norm, so all are hull vertices; angle order is hull order.
    let mut ang: Vec<(f64, &Vec<f64>)> = pts.iter().map(|p| (p[1].atan2(p[0]), p)).collect();
    ang.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = ang.len();
    let mut r = f64::INFINITY;
    for i in 0..m {
        let a = ang[i].1;
        let b = ang[(i + 1) % m].1;
        let ex = b[0] - a[0];
        let ey = b[1] - a[1];
        let len = (ex * ex + ey * ey).sqrt();
        // Signed distance of the origin to the left of edge a→b.
        let d = (a[0] * b[1] - a[1] * b[0]) / len;
        r = r.min(d);
    }
    r.max(0.0)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

/// Unit normal of the hyperplane through `p0` and `others` (n−1 points), or `None`
/// when they are affinely dependent.
fn hyperplane_normal(p0: &[f64], others: &[&Vec<f64>], n: usize) -> Option<Vec<f64>> {
    let rows: Vec<Vec<f64>> = others
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let normal: Vec<f64> = if n == 3 {
        let (u, v) = (&rows[0], &rows[1]);
        vec![u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
    } else {
        // Generalized cross product by cofactor expansion.
        (0..n)
            .map(|j| {
                let minor = DMatrix::from_fn(n - 1, n - 1, |r, c| {
                    let cc = if c < j { c } else { c + 1 };
                    rows[r][cc]
                });
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * minor.determinant()
            })
            .collect()
    };
    let len = norm(&normal);
    let scale = rows.iter().map(|r| norm(r)).fold(0.0, f64::max).powi(n as i32 - 1);
    if len <= 1e-12 * scale.max(1e-300) {
        None
    } else {
        Some(normal.iter().map(|x| x / len).collect())
    }
}

fn facet_inradius(pts: &[Vec<f64>], n: usize) -> Result<f64, GroupError> {
    let m = pts.len();
    let candidates = binomial(m - 1, n - 1);
    if candidates > MAX_FACET_CANDIDATES {
        return Err(GroupError::InstanceTooLarge { candidates });
    }
    let scale = norm(&pts[0]).max(1e-300);
    let tol = 1e-10 * scale;
    let p0 = &pts[0];
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (1..n).collect();
    loop {
        let others: Vec<&Vec<f64>> = idx.iter().map(|&i| &pts[i]).collect();
        if let Some(mut a) = hyperplane_normal(p0, &others, n) {
            let b = dot(&a, p0);
            let (mut above, mut below) = (false, false);
            for p in pts {
                let s = dot(&a, p) - b;
                if s > tol {
                    above = true;
                } else if s < -tol {
                    below = true;
                }
                if above && below {
                    break;
                }
            }
            if !(above && below) {
                let mut bb = b;
                if above {
                    a.iter_mut().for_each(|x| *x = -*x);
                    bb = -b;
                }
                // All points satisfy ⟨a,p⟩ ≤ bb; the origin's distance to the facet is bb.
                best = best.min(bb);
            }
        }
        // Next (n−1)-combination of 1..m.
        let k = n - 1;
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(if best.is_finite() { best.max(0.0) } else { 0.0 });
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Minimum orbit-hull inradius over the first `sphere_samples` points of a nested
/// low-discrepancy sequence on the unit sphere. Adding samples never increases the
/// value. Full-rotation groups return `1`.
pub fn lemma1_epsilon(group: &OrthogonalGroupSpec, sphere_samples: usize) -> f64 {
    if group.mode == GroupMode::FullRotation {
        return 1.0;
    }
    let n = group.dimension;
    par::min_range(sphere_samples.max(1), |i| {
        let x = sphere_point(n, i);
        inradius_or_zero(&orbit(&x, group))
    })
}

/// A fixed "generic" unit vector with pairwise-distinct, non-special coordinates.
pub(crate) fn generic_unit_vector(n: usize) -> Vec<f64> {
    let golden = 0.618_033_988_749_894_9;
    let v: Vec<f64> = (0..n)
        .map(|i| ((i + 1) as f64 * golden).fract() + 0.1 * (i as f64 + 1.0).sqrt())
        .collect();
    let nv = norm(&v);
    v.iter().map(|x| x / nv).collect()
}

/// Irreducibility certificate using [`DEFAULT_SPHERE_SAMPLES`] sphere samples.
pub fn check_irreducible(group: &OrthogonalGroupSpec, tol: f64) -> IrreducibilityCertificate {
    check_irreducible_with(group, tol, DEFAULT_SPHERE_SAMPLES)
}

/// `verdict = (span_rank = n) ∧ (ε > tol) ∧ (|center of mass| ≤ tol)`.
pub fn check_irreducible_with(
    group: &OrthogonalGroupSpec,
    tol: f64,
    sphere_samples: usize,
) -> IrreducibilityCertificate {
    let n = group.dimension;
    if group.mode == GroupMode::FullRotation {
        return IrreducibilityCertificate {
            epsilon: 1.0,
            span_rank: n,
            center_of_mass_norm: 0.0,
            verdict: true,
            sphere_samples: 0,
        };
    }
    let x = generic_unit_vector(n);
    let images: Vec<Vec<f64>> = group.elements.iter().map(|g| g.apply(&x)).collect();
    let span_rank = matrix_rank(&images, n, 1e-9);
    let mut com = vec![0.0; n];
    for p in &images {
        for (c, v) in com.iter_mut().zip(p) {
            *c += v;
        }
    }
    let center_of_mass_norm = norm(&com) / images.len() as f64;
    let epsilon = lemma1_epsilon(group, sphere_samples);
    IrreducibilityCertificate {
        epsilon,
        span_rank,
        center_of_mass_norm,
        verdict: span_rank == n && epsilon > tol && center_of_mass_norm <= tol,
        sphere_samples,
    }
}

/// `x ↦ (1/|K|) Σ_g h(g·x)`.
pub fn symmetrize_function<'a, F>(h: F, group: &'a OrthogonalGroupSpec) -> impl Fn(&[f64]) -> f64 + 'a
where
    F: Fn(&[f64]) -> f64 + 'a,
{
    move |x: &[f64]| {
        let s: f64 = group.elements.iter().map(|g| h(&g.apply(x))).sum();
        s / group.order() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c4_plus_one() -> OrthogonalGroupSpec {
        let r = OrthoMatrix::from_row_major(3, vec![0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        close_group(&[r], 100).unwrap()
    }

    #[test]
    fn closure_orders() {
        let r = OrthoMatrix::rotation2(PI / 2.0);
        assert_eq!(close_group(&[r], 100).unwrap().order(), 4);
        assert_eq!(neg_identity(3).unwrap().order(), 2);
        let irrational = OrthoMatrix::rotation2(1.0);
        assert_eq!(
            close_group(&[irrational], 1000).unwrap_err(),
            GroupError::ClosureOverflow { cap: 1000 }
        );
    }

    #[test]
    fn closure_rejects_non_orthogonal() {
        let m = OrthoMatrix::from_row_major(2, vec![1.0, 0.1, 0.0, 1.0]).unwrap();
        assert!(matches!(close_group(&[m], 10), Err(GroupError::NotOrthogonal { .. })));
    }

    #[test]
    fn preset_orders() {
        assert_eq!(GroupOrthoCase::order("cyclic:7"), 7);
        assert_eq!(GroupOrthoCase::order("dihedral:5"), 10);
        assert_eq!(GroupOrthoCase::order("hyperoctahedral:2"), 8);
        assert_eq!(GroupOrthoCase::order("hyperoctahedral:3"), 48);
        assert_eq!(GroupOrthoCase::order("neg-identity:4"), 2);
        assert!(matches!(
            OrthogonalGroupSpec::from_preset("icosahedral:3"),
            Err(GroupError::UnknownPreset(_))
        ));
        assert!(OrthogonalGroupSpec::from_preset("cyclic:x").is_err());
    }

    struct GroupOrthoCase;
    impl GroupOrthoCase {
        fn order(d: &str) -> usize {
            OrthogonalGroupSpec::from_preset(d).unwrap().order()
        }
    }

    #[test]
    fn preset_elements_satisfy_invariants() {
        for d in ["cyclic:12", "dihedral:6", "hyperoctahedral:3", "neg-identity:2"] {
            let g = OrthogonalGroupSpec::from_preset(d).unwrap();
            let rebuilt = OrthogonalGroupSpec::from_elements(g.dimension(), g.elements().to_vec());
            assert!(rebuilt.is_ok(), "{d}");
        }
    }

    #[test]
    fn orbit_examples() {
        let c4 = cyclic(4).unwrap();
        let o = orbit(&[1.0, 0.0], &c4);
        assert_eq!(o.points.len(), 4);
        for expect in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] {
            assert!(o.points.iter().any(|p| max_abs_diff(p, &expect) < 1e-12));
        }
        assert_eq!(orbit(&[0.0, 0.0], &c4).points.len(), 1);
        let o = orbit(&[1.0, 1.0], &neg_identity(2).unwrap());
        assert_eq!(o.points.len(), 2);
        assert!(o.points.iter().any(|p| max_abs_diff(p, &[-1.0, -1.0]) < 1e-12));
    }

    #[test]
    fn orbit_points_share_norm() {
        let g = hyperoctahedral(3).unwrap();
        let x = [0.3, -0.7, 0.2];
        let o = orbit(&x, &g);
        for p in &o.points {
            assert!((norm(p) - norm(&x)).abs() < 1e-10);
        }
    }

    #[test]
    fn inradius_examples() {
        let sq = orbit(&[1.0, 0.0], &cyclic(4).unwrap());
        assert!((orbit_hull_inradius(&sq).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        let oct = orbit(&[1.0, 0.0], &cyclic(8).unwrap());
        assert!((orbit_hull_inradius(&oct).unwrap() - (PI / 8.0).cos()).abs() < 1e-12);
        let seg = orbit(&[1.0, 0.0], &neg_identity(2).unwrap());
        assert!(matches!(orbit_hull_inradius(&seg), Err(GroupError::DegenerateOrbit { .. })));
        assert_eq!(inradius_or_zero(&seg), 0.0);
    }

    #[test]
    fn inradius_of_cube_and_octahedron() {
        let b3 = hyperoctahedral(3).unwrap();
        // Orbit of a vertex direction is the cube; facets at distance 1/√3.
        let v = 1.0 / 3f64.sqrt();
        let cube = orbit(&[v, v, v], &b3);
        assert_eq!(cube.points.len(), 8);
        assert!((orbit_hull_inradius(&cube).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        // Orbit of an axis is the octahedron; facets also at distance 1/√3.
        let octa = orbit(&[1.0, 0.0, 0.0], &b3);
        assert_eq!(octa.points.len(), 6);
        assert!((orbit_hull_inradius(&octa).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn epsilon_of_cyclic_groups_is_exact() {
        for m in 3..=12 {
            let e = lemma1_epsilon(&cyclic(m).unwrap(), 256);
            assert!((e - (PI / m as f64).cos()).abs() < 1e-9, "m={m}: {e}");
        }
        assert_eq!(lemma1_epsilon(&neg_identity(2).unwrap(), 64), 0.0);
    }

    #[test]
    fn epsilon_is_monotone_in_samples() {
        let g = hyperoctahedral(3).unwrap();
        let mut prev = f64::INFINITY;
        for s in [16, 64, 256, 1024] {
            let e = lemma1_epsilon(&g, s);
            assert!(e <= prev + 1e-15);
            prev = e;
        }
    }

    #[test]
    fn irreducibility_examples() {
        let c = check_irreducible(&cyclic(8).unwrap(), 1e-9);
        assert!(c.verdict);
        assert!(c.center_of_mass_norm <= 1e-12);
        assert_eq!(c.span_rank, 2);

        let c = check_irreducible(&c4_plus_one(), 1e-9);
        assert!(!c.verdict);
        assert_eq!(c.epsilon, 0.0);

        let c = check_irreducible(&neg_identity(1).unwrap(), 1e-9);
        assert!(c.verdict);
        assert!((c.epsilon - 1.0).abs() < 1e-15);

        let c = check_irreducible(&neg_identity(2).unwrap(), 1e-9);
        assert!(!c.verdict);
        assert_eq!(c.span_rank, 1);
    }

    #[test]
    fn full_rotation_mode() {
        let g = OrthogonalGroupSpec::from_preset("full-rotation:2").unwrap();
        assert_eq!(g.mode(), GroupMode::FullRotation);
        assert_eq!(lemma1_epsilon(&g, 10), 1.0);
        assert!(check_irreducible(&g, 1e-9).verdict);
    }

    #[test]
    fn symmetrize_examples() {
        let c4 = cyclic(4).unwrap();
        let h = symmetrize_function(|x: &[f64]| x[0], &c4);
        assert!(h(&[0.3, -1.2]).abs() < 1e-15);
        let h = symmetrize_function(|x: &[f64]| x[0] * x[0], &c4);
        let x = [0.7, -0.4];
        assert!((h(&x) - (0.49 + 0.16) / 2.0).abs() < 1e-15);
        let radial = |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt().exp();
        let h = symmetrize_function(radial, &c4);
        assert!((h(&x) - radial(&x)).abs() < 1e-12);
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let d5 = dihedral(5).unwrap();
        let seed = |x: &[f64]| x[0].powi(3) - 2.0 * x[0] * x[1] + x[1].sin();
        let once = symmetrize_function(seed, &d5);
        let twice = symmetrize_function(&once, &d5);
        for i in 0..20 {
            let x = [0.1 * i as f64 - 1.0, 0.37 * (i as f64).cos()];
            assert!((once(&x) - twice(&x)).abs() < 1e-12);
        }
    }
}
