//! Element quadrature on a ball for radial densities.
//!
//! The ball is split into products of radial rings and angular cells (sign pairs on
//! the line, sectors in the plane, `(cos θ, azimuth)` patches in space). Element masses
//! and first moments are exact for the radial density. Given a max-affine function,
//! each element is assigned to the piece that is maximal at all of its corners and at
//! its centroid; elements where these labels disagree are split recursively, and the
//! finest pieces go to the label at their centroid.

use crate::density::{DensityError, RadialDensity};
use crate::par;
use crate::plc::PLConvexFunction;
use crate::vecmath::{dist, dot, norm};
use std::f64::consts::PI;

/// Grid parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Nominal resolution: `res/2` rings, and `2·res` sectors in the plane
    /// (`res/2 × res` angular cells in space).
    pub res: usize,
    /// Radius covered by the uniformly spaced inner rings.
    pub core_radius: f64,
    /// Share of rings placed inside `core_radius`.
    pub core_fraction: f64,
    /// Maximum number of refinement levels for mixed elements.
    pub depth: usize,
    /// The angular sector count in the plane is rounded up to a multiple of this.
    pub angular_multiple: usize,
}

impl GridSpec {
    pub fn uniform(res: usize) -> Self {
        Self { res, core_radius: f64::INFINITY, core_fraction: 1.0, depth: 3, angular_multiple: 16 }
    }
}

#[derive(Debug, Clone, Copy)]
struct AngCell {
    a: [f64; 2],
    b: [f64; 2],
}

fn unit(n: usize, a: f64, b: f64) -> Vec<f64> {
    match n {
        1 => vec![a],
        2 => vec![a.cos(), a.sin()],
        _ => {
            let s = (1.0 - a * a).max(0.0).sqrt();
            vec![s * b.cos(), s * b.sin(), a]
        }
    }
}

fn ang_measure(n: usize, c: &AngCell) -> f64 {
    match n {
        1 => 1.0,
        2 => c.a[1] - c.a[0],
        _ => (c.a[1] - c.a[0]) * (c.b[1] - c.b[0]),
    }
}

/// Mean of the unit vector over the cell with respect to surface measure.
fn ang_mean(n: usize, c: &AngCell) -> Vec<f64> {
    match n {
        1 => vec![c.a[0]],
        2 => {
            let d = c.a[1] - c.a[0];
            vec![(c.a[1].sin() - c.a[0].sin()) / d, (c.a[0].cos() - c.a[1].cos()) / d]
        }
        _ => {
            let q = |u: f64| 0.5 * (u * (1.0 - u * u).max(0.0).sqrt() + u.clamp(-1.0, 1.0).asin());
            let du = c.a[1] - c.a[0];
            let dp = c.b[1] - c.b[0];
            let s = (q(c.a[1]) - q(c.a[0])) / du;
            vec![
                s * (c.b[1].sin() - c.b[0].sin()) / dp,
                s * (c.b[0].cos() - c.b[1].cos()) / dp,
                0.5 * (c.a[0] + c.a[1]),
            ]
        }
    }
}

fn ang_corners(n: usize, c: &AngCell) -> Vec<Vec<f64>> {
    match n {
        1 => vec![unit(1, c.a[0], 0.0)],
        2 => vec![unit(2, c.a[0], 0.0), unit(2, c.a[1], 0.0)],
        _ => {
            let mut v = Vec::with_capacity(4);
            for &a in &c.a {
                for &b in &c.b {
                    v.push(unit(3, a, b));
                }
            }
            v
        }
    }
}

fn ang_split(n: usize, c: &AngCell) -> Vec<AngCell> {
    match n {
        1 => vec![*c],
        2 => {
            let m = 0.5 * (c.a[0] + c.a[1]);
            vec![AngCell { a: [c.a[0], m], b: c.b }, AngCell { a: [m, c.a[1]], b: c.b }]
        }
        _ => {
            let ma = 0.5 * (c.a[0] + c.a[1]);
            let mb = 0.5 * (c.b[0] + c.b[1]);
            let mut v = Vec::with_capacity(4);
            for a in [[c.a[0], ma], [ma, c.a[1]]] {
                for b in [[c.b[0], mb], [mb, c.b[1]]] {
                    v.push(AngCell { a, b });
                }
            }
            v
        }
    }
}

struct Block {
    elems: Vec<(u32, u32)>,
    center: Vec<f64>,
    rho: f64,
}

/// Result of one assignment pass.
#[derive(Debug, Clone)]
pub struct CellAccumulation {
    /// Density mass assigned to each piece.
    pub masses: Vec<f64>,
    /// `∫ g·φ` under the assignment (each element contributes mass × the affine value
    /// of its piece at the element centroid).
    pub integral: f64,
    /// Interface weights `(i, j, w)` with `i < j`, `w ≈ ∫_{Γ_ij} g / |y_i − y_j|` per
    /// sample.
    pub pairs: Vec<(u32, u32, f64)>,
    /// Number of base elements that needed refinement.
    pub mixed: usize,
    /// First moments `∫_{cell_i} g x`, flattened as `i·n + d`.
    pub moments: Vec<f64>,
}

impl CellAccumulation {
    /// Centroid of cell `i`, or `None` for an empty cell.
    pub fn centroid(&self, i: usize) -> Option<Vec<f64>> {
        let n = self.moments.len() / self.masses.len().max(1);
        (self.masses[i] > 0.0).then(|| self.moments[i * n..(i + 1) * n].iter().map(|m| m / self.masses[i]).collect())
    }
}

struct Sink<'a> {
    masses: &'a mut [f64],
    moments: &'a mut [f64],
    integral: &'a mut f64,
}

pub struct BallGrid {
    n: usize,
    radius: f64,
    rings: Vec<f64>,
    cells: Vec<AngCell>,
    depth: usize,
    /// `moments[ring][level][sub] = (∫ g r^{n−1}, ∫ g r^n)`.
    moments: Vec<Vec<Vec<(f64, f64)>>>,
    blocks: Vec<Block>,
    total_mass: f64,
}

struct Elem {
    ir: usize,
    lvl: usize,
    sub: usize,
    cell: AngCell,
}

struct ElemGeom {
    mass: f64,
    centroid: Vec<f64>,
    corners: Vec<Vec<f64>>,
    /// How far the curved outer face bulges past the corners' convex hull.
    sag: f64,
}

/// Pieces of `set` that can exceed piece `l` somewhere on the element, plus `l`.
/// Differences of affine pieces peak at the corners of the hull, widened by the sag.
fn reach(phi: &PLConvexFunction, g: &ElemGeom, l: usize, set: &[usize]) -> Vec<usize> {
    let vl: Vec<f64> = g.corners.iter().map(|c| dot(phi.slope(l), c) - phi.intercept(l)).collect();
    set.iter()
        .copied()
        .filter(|&j| {
            j == l || {
                let top = g
                    .corners
                    .iter()
                    .zip(&vl)
                    .map(|(c, v)| dot(phi.slope(j), c) - phi.intercept(j) - v)
                    .fold(f64::NEG_INFINITY, f64::max);
                top + dist(phi.slope(j), phi.slope(l)) * g.sag >= 0.0
            }
        })
        .collect()
}

impl BallGrid {
    /// Builds the grid on `B_radius` for density `g`. Supports `n ∈ {1, 2, 3}`.
    pub fn new<D: RadialDensity + ?Sized>(g: &D, radius: f64, spec: GridSpec) -> Result<Self, DensityError> {
        let n = g.dimension();
        if !(1..=3).contains(&n) {
            return Err(DensityError::Invalid(format!("element quadrature supports n ≤ 3, got n = {n}")));
        }
        let nr = (spec.res / 2).max(2);
        let rings = graded_rings(nr, radius, spec.core_radius, spec.core_fraction);
        let cells: Vec<AngCell> = match n {
            1 => vec![AngCell { a: [1.0, 1.0], b: [0.0, 0.0] }, AngCell { a: [-1.0, -1.0], b: [0.0, 0.0] }],
            2 => {
                let q = spec.angular_multiple.max(1);
                let na = (2 * spec.res).max(q).div_ceil(q) * q;
                (0..na)
                    .map(|j| AngCell { a: [2.0 * PI * j as f64 / na as f64, 2.0 * PI * (j + 1) as f64 / na as f64], b: [0.0; 2] })
                    .collect()
            }
            _ => {
                let nu = (spec.res / 2).max(2).div_ceil(2) * 2;
                let nphi = spec.res.max(8).div_ceil(8) * 8;
                let mut v = Vec::with_capacity(nu * nphi);
                for i in 0..nu {
                    let a = [-1.0 + 2.0 * i as f64 / nu as f64, -1.0 + 2.0 * (i + 1) as f64 / nu as f64];
                    for j in 0..nphi {
                        let b = [2.0 * PI * j as f64 / nphi as f64, 2.0 * PI * (j + 1) as f64 / nphi as f64];
                        v.push(AngCell { a, b });
                    }
                }
                v
            }
        };
        let depth = spec.depth;
        let fine = 1usize << depth;
        let mut moments = Vec::with_capacity(nr);
        for ir in 0..nr {
            let (r0, r1) = (rings[ir], rings[ir + 1]);
            let mut finest = Vec::with_capacity(fine);
            for s in 0..fine {
                let a = r0 + (r1 - r0) * s as f64 / fine as f64;
                let b = r0 + (r1 - r0) * (s + 1) as f64 / fine as f64;
                finest.push((g.radial_moment(a, b, n as i32 - 1)?, g.radial_moment(a, b, n as i32)?));
            }
            let mut levels = vec![finest];
            while levels.last().unwrap().len() > 1 {
                let prev = levels.last().unwrap();
                let next: Vec<(f64, f64)> = prev.chunks(2).map(|p| (p[0].0 + p[1].0, p[0].1 + p[1].1)).collect();
                levels.push(next);
            }
            levels.reverse();
            moments.push(levels);
        }
        let mut grid = Self { n, radius, rings, cells, depth, moments, blocks: Vec::new(), total_mass: 0.0 };
        grid.total_mass = grid.base_elements().iter().map(|e| grid.geometry(e).mass).sum();
        grid.blocks = grid.build_blocks(spec);
        Ok(grid)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn element_count(&self) -> usize {
        (self.rings.len() - 1) * self.cells.len()
    }

    /// Sum of element masses; equals the ball mass up to the radial quadrature error.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    fn base_elements(&self) -> Vec<Elem> {
        let mut v = Vec::with_capacity(self.element_count());
        for ir in 0..self.rings.len() - 1 {
            for cell in &self.cells {
                v.push(Elem { ir, lvl: 0, sub: 0, cell: *cell });
            }
        }
        v
    }

    fn radial_range(&self, e: &Elem) -> (f64, f64) {
        let (r0, r1) = (self.rings[e.ir], self.rings[e.ir + 1]);
        let f = (1usize << e.lvl) as f64;
        (r0 + (r1 - r0) * e.sub as f64 / f, r0 + (r1 - r0) * (e.sub + 1) as f64 / f)
    }

    fn geometry(&self, e: &Elem) -> ElemGeom {
        let n = self.n;
        let (m0, m1) = self.moments[e.ir][e.lvl][e.sub];
        let (ra, rb) = self.radial_range(e);
        let mass = m0 * ang_measure(n, &e.cell);
        let rbar = if m0 > 0.0 { m1 / m0 } else { 0.5 * (ra + rb) };
        let centroid: Vec<f64> = ang_mean(n, &e.cell).into_iter().map(|v| v * rbar).collect();
        let dirs = ang_corners(n, &e.cell);
        let mut corners = Vec::with_capacity(2 * dirs.len());
        for r in [ra, rb] {
            for d in &dirs {
                corners.push(d.iter().map(|v| v * r).collect());
            }
        }
        let sag = if n == 1 || rb <= 0.0 {
            0.0
        } else {
            let half = dirs.iter().flat_map(|a| dirs.iter().map(move |b| dist(a, b))).fold(0.0, f64::max) * rb / 2.0;
            rb - (rb * rb - half * half).max(0.0).sqrt()
        };
        ElemGeom { mass, centroid, corners, sag }
    }

    fn children(&self, e: &Elem) -> Vec<Elem> {
        let mut out = Vec::new();
        for s in [2 * e.sub, 2 * e.sub + 1] {
            for c in ang_split(self.n, &e.cell) {
                out.push(Elem { ir: e.ir, lvl: e.lvl + 1, sub: s, cell: c });
            }
        }
        out
    }

    fn build_blocks(&self, spec: GridSpec) -> Vec<Block> {
        let n = self.n;
        let nr = self.rings.len() - 1;
        let (br, ba) = match n {
            1 => (16, 1),
            2 => (8, 8),
            _ => (4, 4),
        };
        let _ = spec;
        // Group angular cells into tiles of neighbouring cells.
        let tiles: Vec<Vec<usize>> = match n {
            1 => vec![vec![0], vec![1]],
            2 => (0..self.cells.len()).collect::<Vec<_>>().chunks(ba).map(|c| c.to_vec()).collect(),
            _ => {
                let nphi = self.cells.iter().filter(|c| c.a == self.cells[0].a).count();
                let nu = self.cells.len() / nphi;
                let mut t = Vec::new();
                for iu in (0..nu).step_by(ba) {
                    for ip in (0..nphi).step_by(ba) {
                        let mut v = Vec::new();
                        for u in iu..(iu + ba).min(nu) {
                            for p in ip..(ip + ba).min(nphi) {
                                v.push(u * nphi + p);
                            }
                        }
                        t.push(v);
                    }
                }
                t
            }
        };
        let mut blocks = Vec::new();
        for ir0 in (0..nr).step_by(br) {
            let ir1 = (ir0 + br).min(nr);
            for tile in &tiles {
                let elems: Vec<(u32, u32)> =
                    (ir0..ir1).flat_map(|ir| tile.iter().map(move |&j| (ir as u32, j as u32))).collect();
                // Sample the block's boundary to get a bounding ball.
                let mut pts = Vec::new();
                let (ra, rb) = (self.rings[ir0], self.rings[ir1]);
                for &j in tile {
                    let c = &self.cells[j];
                    for i in 0..=4 {
                        let r = ra + (rb - ra) * i as f64 / 4.0;
                        let sub = ang_split(n, c);
                        for sc in sub.iter().chain(std::iter::once(c)) {
                            for d in ang_corners(n, sc) {
                                pts.push(d.iter().map(|v| v * r).collect::<Vec<f64>>());
                            }
                        }
                    }
                }
                let m = pts.len() as f64;
                let mut center = vec![0.0; n];
                for p in &pts {
                    for (c, v) in center.iter_mut().zip(p) {
                        *c += v / m;
                    }
                }
                let span = tile
                    .iter()
                    .map(|&j| {
                        let c = &self.cells[j];
                        (c.a[1] - c.a[0]).abs().max((c.b[1] - c.b[0]).abs())
                    })
                    .fold(0.0, f64::max);
                let rho = pts.iter().map(|p| dist(p, &center)).fold(0.0, f64::max) * (1.0 + 1e-9)
                    + rb * span * span / 8.0
                    + 1e-12 * self.radius;
                blocks.push(Block { elems, center, rho });
            }
        }
        blocks
    }

    /// Assigns the grid's mass to the pieces of `phi`.
    pub fn assign(&self, phi: &PLConvexFunction, want_pairs: bool) -> CellAccumulation {
        let p = phi.len();
        let n = self.n;
        let norms: Vec<f64> = (0..p).map(|i| norm(phi.slope(i))).collect();
        struct Acc {
            masses: Vec<f64>,
            integral: f64,
            pairs: Vec<(u32, u32, f64)>,
            mixed: usize,
            moments: Vec<f64>,
        }
        let chunk = 4;
        let accs = par::fold_chunks(
            self.blocks.len(),
            chunk,
            || Acc { masses: vec![0.0; p], integral: 0.0, pairs: Vec::new(), mixed: 0, moments: vec![0.0; p * n] },
            |acc, bi| {
                let block = &self.blocks[bi];
                let vals: Vec<f64> = (0..p).map(|i| dot(phi.slope(i), &block.center) - phi.intercept(i)).collect();
                let lower = (0..p).map(|i| vals[i] - norms[i] * block.rho).fold(f64::NEG_INFINITY, f64::max);
                let cand: Vec<usize> = (0..p).filter(|&i| vals[i] + norms[i] * block.rho >= lower).collect();
                let label = |x: &[f64], set: &[usize]| -> usize {
                    let mut best = set[0];
                    let mut bv = dot(phi.slope(best), x) - phi.intercept(best);
                    for &i in &set[1..] {
                        let v = dot(phi.slope(i), x) - phi.intercept(i);
                        if v > bv {
                            bv = v;
                            best = i;
                        }
                    }
                    best
                };
                for &(ir, j) in &block.elems {
                    let e = Elem { ir: ir as usize, lvl: 0, sub: 0, cell: self.cells[j as usize] };
                    let g = self.geometry(&e);
                    if g.mass <= 0.0 {
                        continue;
                    }
                    // Top two pieces at the centroid.
                    let (mut b1, mut v1, mut b2, mut v2) = (usize::MAX, f64::NEG_INFINITY, usize::MAX, f64::NEG_INFINITY);
                    for &i in &cand {
                        let v = dot(phi.slope(i), &g.centroid) - phi.intercept(i);
                        if v > v1 {
                            b2 = b1;
                            v2 = v1;
                            b1 = i;
                            v1 = v;
                        } else if v > v2 {
                            b2 = i;
                            v2 = v;
                        }
                    }
                    let labels = reach(phi, &g, b1, &cand);
                    if want_pairs && b2 != usize::MAX {
                        let dy = crate::vecmath::dist(phi.slope(b1), phi.slope(b2));
                        let diam = g.corners.iter().map(|c| dist(c, &g.centroid)).fold(0.0, f64::max) * 2.0;
                        let w = 2.0 * diam;
                        if dy > 0.0 && w > 0.0 {
                            let t = (v1 - v2) / (dy * w);
                            if t < 1.0 {
                                let (i, k) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
                                acc.pairs.push((i as u32, k as u32, g.mass * (1.0 - t) / (w * dy)));
                            }
                        }
                    }
                    if labels.len() == 1 {
                        let l = labels[0];
                        acc.masses[l] += g.mass;
                        acc.integral += g.mass * (dot(phi.slope(l), &g.centroid) - phi.intercept(l));
                        for d in 0..n {
                            acc.moments[l * n + d] += g.mass * g.centroid[d];
                        }
                    } else {
                        acc.mixed += 1;
                        let mut sink = Sink { masses: &mut acc.masses, moments: &mut acc.moments, integral: &mut acc.integral };
                        self.refine(&e, &labels, phi, &label, &mut sink);
                    }
                }
            },
        );
        let mut out =
            CellAccumulation { masses: vec![0.0; p], integral: 0.0, pairs: Vec::new(), mixed: 0, moments: vec![0.0; p * n] };
        for a in accs {
            for (m, v) in out.masses.iter_mut().zip(&a.masses) {
                *m += v;
            }
            for (m, v) in out.moments.iter_mut().zip(&a.moments) {
                *m += v;
            }
            out.integral += a.integral;
            out.pairs.extend(a.pairs);
            out.mixed += a.mixed;
        }
        out
    }

    fn refine<L>(&self, e: &Elem, set: &[usize], phi: &PLConvexFunction, label: &L, sink: &mut Sink)
    where
        L: Fn(&[f64], &[usize]) -> usize,
    {
        for c in self.children(e) {
            let g = self.geometry(&c);
            if g.mass <= 0.0 {
                continue;
            }
            let lc = label(&g.centroid, set);
            let sub = reach(phi, &g, lc, set);
            if sub.len() == 1 || (c.lvl >= self.depth && self.n == 3) {
                sink.add(phi, lc, g.mass, &g.centroid);
            } else if c.lvl >= self.depth {
                self.split_leaf(&g, &sub, phi, sink);
            } else {
                self.refine(&c, &sub, phi, label, sink);
            }
        }
    }
}

impl Sink<'_> {
    fn add(&mut self, phi: &PLConvexFunction, l: usize, mass: f64, at: &[f64]) {
        *self.masses.get_mut(l).expect("piece index") += mass;
        *self.integral += mass * (dot(phi.slope(l), at) - phi.intercept(l));
        let n = at.len();
        for (d, v) in at.iter().enumerate() {
            self.moments[l * n + d] += mass * v;
        }
    }
}

impl BallGrid {
    /// Splits a mixed finest element between the pieces in `set` by the exact
    /// partition of its chord polygon (plane) or interval (line), treating the density
    /// as constant across the element. Keeps masses continuous in the intercepts.
    fn split_leaf(&self, g: &ElemGeom, set: &[usize], phi: &PLConvexFunction, sink: &mut Sink) {
        let scale = g.corners.iter().map(|c| norm(c)).fold(0.0, f64::max) * (1.0 + phi.max_slope_norm()) + 1.0;
        if self.n == 1 {
            let (a, b) = (g.corners[0][0], g.corners[1][0]);
            let (lo, hi) = (a.min(b), a.max(b));
            let len = hi - lo;
            for &l in set {
                let (mut s, mut e) = (lo, hi);
                let yl = phi.slope(l)[0];
                for &m in set {
                    if m == l {
                        continue;
                    }
                    let d = yl - phi.slope(m)[0];
                    let r = phi.intercept(l) - phi.intercept(m);
                    if d > 0.0 {
                        s = s.max(r / d);
                    } else if d < 0.0 {
                        e = e.min(r / d);
                    } else if r > 0.0 || (r == 0.0 && m < l) {
                        e = s;
                    }
                }
                if e > s && len > 0.0 {
                    sink.add(phi, l, g.mass * (e - s) / len, &[0.5 * (s + e)]);
                }
            }
            return;
        }
        let c = &g.corners;
        let quad = vec![[c[0][0], c[0][1]], [c[1][0], c[1][1]], [c[3][0], c[3][1]], [c[2][0], c[2][1]]];
        let (area, _) = polygon_area_centroid(&quad);
        if !(area > 0.0) {
            let l = set.iter().copied().max_by(|&a, &b| {
                let va = dot(phi.slope(a), &g.centroid) - phi.intercept(a);
                let vb = dot(phi.slope(b), &g.centroid) - phi.intercept(b);
                va.total_cmp(&vb).then(b.cmp(&a))
            });
            sink.add(phi, l.expect("nonempty label set"), g.mass, &g.centroid);
            return;
        }
        for &l in set {
            let mut poly = quad.clone();
            let yl = phi.slope(l);
            for &m in set {
                if m == l {
                    continue;
                }
                let ym = phi.slope(m);
                let a = [yl[0] - ym[0], yl[1] - ym[1]];
                let r = phi.intercept(l) - phi.intercept(m);
                if a == [0.0, 0.0] && r == 0.0 && m < l {
                    poly.clear();
                }
                poly = crate::plc::clip(&poly, a, r, 1e-15 * scale);
                if poly.len() < 3 {
                    poly.clear();
                    break;
                }
            }
            if poly.is_empty() {
                continue;
            }
            let (a, cen) = polygon_area_centroid(&poly);
            if a > 0.0 {
                sink.add(phi, l, g.mass * a / area, &cen);
            }
        }
    }
}

fn polygon_area_centroid(p: &[[f64; 2]]) -> (f64, Vec<f64>) {
    let mut a2 = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..p.len() {
        let q = p[i];
        let r = p[(i + 1) % p.len()];
        let cr = q[0] * r[1] - r[0] * q[1];
        a2 += cr;
        cx += (q[0] + r[0]) * cr;
        cy += (q[1] + r[1]) * cr;
    }
    if a2.abs() < 1e-300 {
        return (0.0, vec![p[0][0], p[0][1]]);
    }
    (0.5 * a2.abs(), vec![cx / (3.0 * a2), cy / (3.0 * a2)])
}

/// `nr + 1` ring radii: a uniform core followed by geometric growth to `radius`.
fn graded_rings(nr: usize, radius: f64, core: f64, fraction: f64) -> Vec<f64> {
    if !(core < radius) || fraction >= 1.0 {
        return (0..=nr).map(|i| radius * i as f64 / nr as f64).collect();
    }
    let n_core = ((nr as f64 * fraction).round() as usize).clamp(1, nr - 1);
    let n_out = nr - n_core;
    let mut r: Vec<f64> = (0..=n_core).map(|i| core * i as f64 / n_core as f64).collect();
    for j in 1..=n_out {
        r.push(core * (radius / core).powf(j as f64 / n_out as f64));
    }
    *r.last_mut().unwrap() = radius;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DensityForm, DensitySpec};

    #[test]
    fn total_mass_is_exact() {
        for n in 1..=3 {
            let g = DensitySpec::new(n, DensityForm::RadialPoly { terms: vec![(4.0, 2.0), (0.5, 0.0)] }).unwrap();
            let grid = BallGrid::new(&g, 2.0, GridSpec { res: 16, core_radius: 1.0, core_fraction: 0.7, depth: 2, angular_multiple: 16 })
                .unwrap();
            let exact = g.ball_mass(2.0).unwrap();
            assert!((grid.total_mass() - exact).abs() < 1e-11 * exact, "n={n}");
        }
    }

    #[test]
    fn antipodal_split() {
        let one = DensitySpec::constant(2, 1.0).unwrap().perturbed(4);
        let grid = BallGrid::new(&one, 1.0, GridSpec::uniform(32)).unwrap();
        let phi = PLConvexFunction::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![0.0, 0.0]).unwrap();
        let acc = grid.assign(&phi, false);
        let half = PI * 1.25 / 2.0;
        assert!((acc.masses[0] - half).abs() < 1e-9 * half);
        assert!((acc.masses[1] - half).abs() < 1e-9 * half);
        let phi = PLConvexFunction::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![10.0, 0.0]).unwrap();
        let acc = grid.assign(&phi, false);
        assert_eq!(acc.masses[0], 0.0);
        assert!((acc.masses[1] - 2.0 * half).abs() < 1e-9);
    }

    #[test]
    fn quadrant_cells() {
        let one = DensitySpec::constant(2, 1.0).unwrap().perturbed(2);
        let grid = BallGrid::new(&one, 1.0, GridSpec::uniform(24)).unwrap();
        let phi = PLConvexFunction::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![0.0; 4],
        )
        .unwrap();
        let acc = grid.assign(&phi, false);
        for m in &acc.masses {
            assert!((m - 1.5 * PI / 4.0).abs() < 1e-3, "{m}");
        }
    }

    #[test]
    fn integral_of_linear_piece_matches_first_moment() {
        // ∫_{B_1} ⟨y, x⟩ − c over a single piece equals −c·|B_1| by symmetry.
        let one = DensitySpec::constant(3, 1.0).unwrap();
        let grid = BallGrid::new(&one, 1.0, GridSpec::uniform(12)).unwrap();
        let phi = PLConvexFunction::new(3, vec![vec![0.3, -0.2, 0.7]], vec![2.0]).unwrap();
        let acc = grid.assign(&phi, false);
        assert!((acc.integral + 2.0 * 4.0 * PI / 3.0).abs() < 1e-9);
    }
}
