//! Volumes of straight simplicial maps and integrals of densities over a
//! simplicial fundamental domain with ideal vertices.
//!
//! Each simplex is split barycentrically into `(k+1)!` cells, each touching
//! exactly one original vertex `P0`. On a cell with vertices
//! `P0, P1, .., Pk` (vertex, edge midpoint, .., barycenter) the collapsed
//! cube map
//!
//! ```text
//! b(u, w) = P0 + u (P1 - P0) + u w1 (P2 - P1) + .. + u w1 .. w_{k-1} (Pk - P_{k-1})
//! ```
//!
//! shrinks the face opposite `P0` to a point. At an ideal `P0` the volume
//! density then vanishes linearly in `u`, so tensor Gauss-Legendre rules
//! converge quickly; the cusp itself is cut off by a horoball.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::groups::{RepresentationData, Word};
use crate::hypgeo::{dist, mdot, BoundaryPoint, Endpoint, Isometry, Matrix, Point, Vector};

/// Default Gauss-Legendre orders tried in turn.
pub const DEFAULT_ORDERS: [usize; 3] = [4, 6, 8];
/// Successive orders must agree to this relative tolerance.
pub const DEFAULT_REL_TOL: f64 = 1e-4;
/// Absolute agreement accepted for volumes at rounding level, where the
/// Gram determinant of a nearly flat image is pure noise.
pub const ABS_TOL: f64 = 1e-7;
/// Lowest truncation height at which the shell residual estimate is made.
pub const MIN_SHELL_HEIGHT: f64 = 3.0;
/// Pairings must match face vertices to this accuracy.
pub const PAIRING_TOL: f64 = 1e-8;

/// A face of `simplex` (the one opposite vertex slot `face`) glued to a face
/// of `target_simplex` by `isometry`.
#[derive(Clone, Debug)]
pub struct FacePairing {
    pub simplex: usize,
    pub face: usize,
    pub target_simplex: usize,
    pub target_face: usize,
    pub isometry: Isometry,
    /// The pairing as a word in the generators, when known.
    pub word: Option<Word>,
}

#[derive(Clone, Debug)]
pub struct FundamentalDomain {
    pub dim: usize,
    pub vertices: Vec<Endpoint>,
    /// Vertex ids, `dim + 1` per simplex.
    pub simplices: Vec<Vec<usize>>,
    pub face_pairings: Vec<FacePairing>,
    /// Horoballs `B(x, v) < -T` around ideal vertices are cut off.
    pub cusp_truncation_height: f64,
}

fn endpoint_distance(a: &Endpoint, b: &Endpoint) -> f64 {
    match (a, b) {
        (Endpoint::Interior(p), Endpoint::Interior(q)) => dist(p, q),
        (Endpoint::Ideal(p), Endpoint::Ideal(q)) => p.chordal_distance(q),
        _ => f64::INFINITY,
    }
}

impl FundamentalDomain {
    pub fn new(
        dim: usize,
        vertices: Vec<Endpoint>,
        simplices: Vec<Vec<usize>>,
        face_pairings: Vec<FacePairing>,
        cusp_truncation_height: f64,
    ) -> Result<Self> {
        let domain = FundamentalDomain {
            dim,
            vertices,
            simplices,
            face_pairings,
            cusp_truncation_height,
        };
        domain.validate()?;
        Ok(domain)
    }

    fn validate(&self) -> Result<()> {
        let k = self.dim;
        if k < 2 {
            return Err(Error::InvalidDomain(format!("dimension {k}")));
        }
        if !(self.cusp_truncation_height > 0.0) {
            return Err(Error::InvalidDomain(
                "truncation height must be positive".into(),
            ));
        }
        for v in &self.vertices {
            if v.dim() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: v.dim(),
                });
            }
        }
        for (s, simplex) in self.simplices.iter().enumerate() {
            if simplex.len() != k + 1 {
                return Err(Error::InvalidDomain(format!(
                    "simplex {s} has {} vertices",
                    simplex.len()
                )));
            }
            if let Some(&bad) = simplex.iter().find(|&&v| v >= self.vertices.len()) {
                return Err(Error::InvalidDomain(format!(
                    "simplex {s} uses vertex {bad}"
                )));
            }
            let lifted = self.lifted(s);
            let svd = lifted.svd(false, false);
            let (lo, hi) = (svd.singular_values.min(), svd.singular_values.max());
            if !(lo > 1e-10 * hi) {
                return Err(Error::InvalidDomain(format!("simplex {s} is degenerate")));
            }
        }
        for (i, p) in self.face_pairings.iter().enumerate() {
            self.pairing_correspondence(p)
                .map_err(|e| Error::InvalidDomain(format!("pairing {i}: {e}")))?;
        }
        Ok(())
    }

    /// Lifted vertex vectors of a simplex as columns.
    fn lifted(&self, s: usize) -> Matrix {
        let cols: Vec<Vector> = self.simplices[s]
            .iter()
            .map(|&v| self.vertices[v].coords().clone())
            .collect();
        Matrix::from_columns(&cols)
    }

    fn face_vertices(&self, s: usize, face: usize) -> Result<Vec<usize>> {
        let simplex = self
            .simplices
            .get(s)
            .ok_or_else(|| Error::InvalidDomain(format!("no simplex {s}")))?;
        if face > self.dim {
            return Err(Error::InvalidDomain(format!("no face {face}")));
        }
        Ok(simplex
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != face)
            .map(|(_, &v)| v)
            .collect())
    }

    /// For each vertex of the source face, the vertex of the target face it
    /// is carried to.
    pub fn pairing_correspondence(&self, p: &FacePairing) -> Result<Vec<(usize, usize)>> {
        let src = self.face_vertices(p.simplex, p.face)?;
        let dst = self.face_vertices(p.target_simplex, p.target_face)?;
        let mut out = Vec::with_capacity(src.len());
        for v in src {
            let image = p.isometry.apply_endpoint(&self.vertices[v]);
            let hit = dst
                .iter()
                .copied()
                .find(|&w| endpoint_distance(&image, &self.vertices[w]) <= PAIRING_TOL)
                .ok_or_else(|| {
                    Error::InvalidDomain(format!(
                        "image of vertex {v} is not a vertex of the target face"
                    ))
                })?;
            out.push((v, hit));
        }
        Ok(out)
    }

    pub fn ideal_vertex_count(&self) -> usize {
        self.vertices
            .iter()
            .filter(|v| matches!(v, Endpoint::Ideal(_)))
            .count()
    }

    /// The domain point with barycentric coordinates `b` in simplex `s`.
    pub fn point_at(&self, s: usize, b: &[f64]) -> Option<Point> {
        Point::try_from_unnormalized(self.lifted(s) * Vector::from_column_slice(b))
    }

    /// True when `x` lies outside every cusp horoball of simplex `s` at
    /// height `t`.
    pub fn is_in_truncation(&self, s: usize, x: &Point, t: f64) -> bool {
        self.simplices[s].iter().all(|&v| match &self.vertices[v] {
            Endpoint::Ideal(theta) => (-mdot(x.coords(), theta.coords())).ln() >= -t,
            Endpoint::Interior(_) => true,
        })
    }

    /// Replaces each simplex by the cone from an interior point over its
    /// faces. The new vertices are appended after the existing ones, one
    /// per simplex, at the straight barycenter. Face pairings are kept,
    /// since the outer faces are unchanged, and re-indexed accordingly.
    pub fn stellar_subdivision(&self) -> Result<(FundamentalDomain, Vec<usize>)> {
        let k = self.dim;
        let mut vertices = self.vertices.clone();
        let mut simplices = Vec::new();
        let mut centers = Vec::new();
        // outer face of old simplex s opposite slot f becomes sub-simplex (s, f),
        // whose apex (the center) sits at slot f
        let mut index = vec![vec![0usize; k + 1]; self.simplices.len()];
        for (s, simplex) in self.simplices.iter().enumerate() {
            let b = vec![1.0 / (k as f64 + 1.0); k + 1];
            let c = self
                .point_at(s, &b)
                .ok_or_else(|| Error::InvalidDomain(format!("simplex {s} has no center")))?;
            let cid = vertices.len();
            vertices.push(Endpoint::Interior(c));
            centers.push(cid);
            for f in 0..=k {
                let mut sub = simplex.clone();
                sub[f] = cid;
                index[s][f] = simplices.len();
                simplices.push(sub);
            }
        }
        let face_pairings = self
            .face_pairings
            .iter()
            .map(|p| FacePairing {
                simplex: index[p.simplex][p.face],
                face: p.face,
                target_simplex: index[p.target_simplex][p.target_face],
                target_face: p.target_face,
                isometry: p.isometry.clone(),
                word: p.word.clone(),
            })
            .collect();
        let sub = FundamentalDomain::new(
            k,
            vertices,
            simplices,
            face_pairings,
            self.cusp_truncation_height,
        )?;
        Ok((sub, centers))
    }
}

/// The images of the domain vertices under a straight developing map.
#[derive(Clone, Debug)]
pub struct DevelopingMapSpec {
    pub domain: FundamentalDomain,
    pub vertex_images: Vec<Endpoint>,
}

impl DevelopingMapSpec {
    pub fn new(domain: FundamentalDomain, vertex_images: Vec<Endpoint>) -> Result<Self> {
        if vertex_images.len() != domain.vertices.len() {
            return Err(Error::InvalidDomain(format!(
                "{} vertex images for {} vertices",
                vertex_images.len(),
                domain.vertices.len()
            )));
        }
        if let Some(first) = vertex_images.first() {
            let n = first.dim();
            if n < domain.dim {
                return Err(Error::SubspaceTooLarge { k: domain.dim, n });
            }
            if let Some(v) = vertex_images.iter().find(|v| v.dim() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.dim(),
                });
            }
        }
        Ok(DevelopingMapSpec {
            domain,
            vertex_images,
        })
    }

    /// The identity map of the domain, composed with the standard embedding
    /// into `H^n`.
    pub fn identity(domain: FundamentalDomain, n: usize) -> Result<Self> {
        let images = domain
            .vertices
            .iter()
            .map(|v| crate::hypgeo::embed_endpoint(v, n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, images)
    }

    /// The map sending every vertex to one point.
    pub fn collapse(domain: FundamentalDomain, p: Point) -> Result<Self> {
        let images = vec![Endpoint::Interior(p); domain.vertices.len()];
        Self::new(domain, images)
    }

    pub fn target_dim(&self) -> usize {
        self.vertex_images
            .first()
            .map(|v| v.dim())
            .unwrap_or(self.domain.dim)
    }

    /// All vertex images moved by `g`.
    pub fn moved_by(&self, g: &Isometry) -> DevelopingMapSpec {
        DevelopingMapSpec {
            domain: self.domain.clone(),
            vertex_images: self
                .vertex_images
                .iter()
                .map(|v| g.apply_endpoint(v))
                .collect(),
        }
    }

    /// Largest mismatch between `ρ(γ) D(v)` and `D(γ v)` over the face
    /// pairings that carry a word.
    pub fn equivariance_residual(&self, data: &RepresentationData) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in &self.domain.face_pairings {
            let Some(word) = &p.word else { continue };
            let rho = data.eval_target(word)?;
            for (v, w) in self.domain.pairing_correspondence(p)? {
                let moved = rho.apply_endpoint(&self.vertex_images[v]);
                worst = worst.max(endpoint_distance(&moved, &self.vertex_images[w]));
            }
        }
        Ok(worst)
    }

    fn lifted_images(&self, s: usize) -> Matrix {
        let cols: Vec<Vector> = self.domain.simplices[s]
            .iter()
            .map(|&v| self.vertex_images[v].coords().clone())
            .collect();
        Matrix::from_columns(&cols)
    }
}

/// The straightened image of the barycentric point `b` of simplex `s`, or
/// `None` where the combination is not timelike (degenerate image).
pub fn straighten(spec: &DevelopingMapSpec, s: usize, b: &[f64]) -> Option<Point> {
    if s >= spec.domain.simplices.len() || b.len() != spec.domain.dim + 1 {
        return None;
    }
    Point::try_from_unnormalized(spec.lifted_images(s) * Vector::from_column_slice(b))
}

/// Volume density at `b` of the straight map with lifted vertex columns
/// `w`, with respect to the barycentric coordinates `b_1 .. b_k`.
fn straight_density(w: &Matrix, b: &Vector) -> f64 {
    let y = w * b;
    let rho2 = -mdot(&y, &y);
    if !(rho2 > 0.0) {
        return 0.0;
    }
    let k = w.ncols() - 1;
    let q = &y / rho2.sqrt();
    let e: Vec<Vector> = (1..=k).map(|a| w.column(a) - w.column(0)).collect();
    let qe: Vec<f64> = e.iter().map(|ea| mdot(&q, ea)).collect();
    let mut g = Matrix::zeros(k, k);
    for a in 0..k {
        for c in a..k {
            let v = (mdot(&e[a], &e[c]) + qe[a] * qe[c]) / rho2;
            g[(a, c)] = v;
            g[(c, a)] = v;
        }
    }
    g.determinant().max(0.0).sqrt()
}

#[derive(Clone, Debug)]
pub struct VolumeOptions {
    pub orders: Vec<usize>,
    pub rel_tol: f64,
    /// Overrides the domain's truncation height.
    pub truncation: Option<f64>,
    /// Estimate the cut-off cusp volume from two shells below the cut.
    pub residual_shells: bool,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions {
            orders: DEFAULT_ORDERS.to_vec(),
            rel_tol: DEFAULT_REL_TOL,
            truncation: None,
            residual_shells: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VolumeReport {
    pub value: f64,
    pub per_simplex: Vec<f64>,
    pub quadrature_order: usize,
    /// Heuristic volume beyond the truncation; NaN when not estimated
    /// (disabled, or a cut below [`MIN_SHELL_HEIGHT`]).
    pub truncation_residual_estimate: f64,
    /// `(order, value)` for every order tried.
    pub history: Vec<(usize, f64)>,
    pub truncation: f64,
}

/// One cell of the barycentric subdivision with its collapsed-cube data.
struct Cell {
    /// Full barycentric coordinates of `P0 .. Pk`.
    p: Vec<Vector>,
    /// `|det(P_j - P_{j-1})|` in reduced coordinates.
    det: f64,
    /// Slot of `P0` in the simplex.
    apex: usize,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn cells(k: usize) -> Vec<Cell> {
    permutations(k + 1)
        .into_iter()
        .map(|perm| {
            let p: Vec<Vector> = (0..=k)
                .map(|j| {
                    let mut v = Vector::zeros(k + 1);
                    for &i in &perm[..=j] {
                        v[i] = 1.0 / (j as f64 + 1.0);
                    }
                    v
                })
                .collect();
            let diffs: Vec<Vector> = (1..=k)
                .map(|j| (&p[j] - &p[j - 1]).rows(1, k).into_owned())
                .collect();
            let det = Matrix::from_columns(&diffs).determinant().abs();
            Cell {
                p,
                det,
                apex: perm[0],
            }
        })
        .collect()
}

/// Tensor Gauss-Legendre nodes on `[0,1]^k` with the collapse Jacobian
/// `u^{k-1} w1^{k-2} ..` folded into the weights, `u` restricted to
/// `[u0, u1]`.
fn cube_nodes(k: usize, rule: &[(f64, f64)], u0: f64, u1: f64) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for axis in 0..k {
        let (a, b) = if axis == 0 { (u0, u1) } else { (0.0, 1.0) };
        let mut next = Vec::with_capacity(out.len() * rule.len());
        for (coords, w) in &out {
            for &(x, wx) in rule {
                let t = a + (b - a) * 0.5 * (x + 1.0);
                let jac = t.powi((k - 1 - axis) as i32);
                let mut c = coords.clone();
                c.push(t);
                next.push((c, w * wx * 0.5 * (b - a) * jac));
            }
        }
        out = next;
    }
    out
}

fn cell_point(cell: &Cell, t: &[f64]) -> Vector {
    let mut b = cell.p[0].clone();
    let mut scale = 1.0;
    for (j, tj) in t.iter().enumerate() {
        scale *= tj;
        b += (&cell.p[j + 1] - &cell.p[j]) * scale;
    }
    b
}

/// Parameter `u` at which the ray `b(u)` from the ideal apex leaves the
/// horoball `B(x, v) < -t`, for fixed collapsed coordinates.
fn horoball_cut(apex: &Vector, far: &Vector, t: f64) -> f64 {
    // x(u) = (1-u) V0 + u C: -<x, V0> = u a, |x|^2 = 2ua + u^2 (q - 2a)
    let a = -mdot(far, apex);
    let q = -mdot(far, far);
    let e = (-2.0 * t).exp();
    let denom = a * a + (2.0 * a - q) * e;
    if !(a > 0.0) || !(denom > 0.0) {
        return 0.0;
    }
    (2.0 * a * e / denom).clamp(0.0, 1.0)
}

/// Integrates `f(s, b, x) * density` over the truncated domain, where the
/// density is returned by `density(s, b)` and `x` is the domain point.
fn integrate_domain<F>(
    domain: &FundamentalDomain,
    order: usize,
    truncation: f64,
    shells: bool,
    f: &mut F,
) -> Result<(Vec<f64>, [f64; 2])>
where
    F: FnMut(usize, &Vector) -> Result<f64>,
{
    let k = domain.dim;
    let rule: Vec<(f64, f64)> = GaussLegendre::new(
        NonZeroUsize::new(order).ok_or_else(|| Error::InvalidConfig("order 0".into()))?,
    )
    .iter()
    .map(|(x, w)| (*x, *w))
    .collect();
    let cells = cells(k);
    let mut per_simplex = Vec::with_capacity(domain.simplices.len());
    let mut shell_sums = [0.0; 2];
    let full = cube_nodes(k, &rule, 0.0, 1.0);
    for s in 0..domain.simplices.len() {
        let lifted = domain.lifted(s);
        let mut total = 0.0;
        for cell in &cells {
            let apex_ideal = matches!(
                domain.vertices[domain.simplices[s][cell.apex]],
                Endpoint::Ideal(_)
            );
            if !apex_ideal {
                for (t, w) in &full {
                    total += w * cell.det * f(s, &cell_point(cell, t))?;
                }
                continue;
            }
            // integrate u over [u_cut, 1] separately for each collapsed direction
            let apex = lifted.column(cell.apex).into_owned();
            let inner = cube_nodes(k - 1, &rule, 0.0, 1.0);
            let mut along = |u0: f64, u1: f64, tail: &[f64]| -> Result<f64> {
                let mut acc = 0.0;
                for &(x, wx) in &rule {
                    let u = u0 + (u1 - u0) * 0.5 * (x + 1.0);
                    let mut t = vec![u];
                    t.extend_from_slice(tail);
                    let jac = u.powi(k as i32 - 1);
                    acc += wx * 0.5 * (u1 - u0) * jac * f(s, &cell_point(cell, &t))?;
                }
                Ok(acc)
            };
            for (tail, wt) in &inner {
                let mut t1 = vec![1.0];
                t1.extend_from_slice(tail);
                let far = &lifted * cell_point(cell, &t1);
                let cut = |h: f64| horoball_cut(&apex, &far, h);
                let u0 = cut(truncation);
                total += wt * cell.det * along(u0, 1.0, tail)?;
                if shells {
                    let (u1, u2) = (cut(truncation - 1.0), cut(truncation - 2.0));
                    shell_sums[0] += wt * cell.det * along(u0, u1, tail)?;
                    shell_sums[1] += wt * cell.det * along(u1, u2, tail)?;
                }
            }
        }
        per_simplex.push(total);
    }
    Ok((per_simplex, shell_sums))
}

fn shell_residual(inner: f64, outer: f64) -> f64 {
    if outer > 0.0 && inner >= 0.0 {
        let r = inner / outer;
        if r < 1.0 {
            return inner * r / (1.0 - r);
        }
        return f64::INFINITY;
    }
    0.0
}

fn integrate_with_orders<F>(
    domain: &FundamentalDomain,
    opts: &VolumeOptions,
    mut f: F,
) -> Result<VolumeReport>
where
    F: FnMut(usize, &Vector) -> Result<f64>,
{
    if opts.orders.is_empty() {
        return Err(Error::InvalidConfig("no quadrature orders".into()));
    }
    let truncation = opts.truncation.unwrap_or(domain.cusp_truncation_height);
    if !(truncation > 0.0) {
        return Err(Error::InvalidConfig(
            "truncation height must be positive".into(),
        ));
    }
    let mut history = Vec::new();
    let mut prev: Option<f64> = None;
    for (i, &order) in opts.orders.iter().enumerate() {
        let last = i + 1 == opts.orders.len();
        let (per_simplex, _) = integrate_domain(domain, order, truncation, false, &mut f)?;
        let value: f64 = per_simplex.iter().sum();
        history.push((order, value));
        let converged = match prev {
            Some(p) => (value - p).abs() <= opts.rel_tol * value.abs().max(p.abs()) + ABS_TOL,
            None => opts.orders.len() == 1,
        };
        if converged {
            // the shells below a low cut overlap the neighbouring horoballs
            let residual = if opts.residual_shells
                && domain.ideal_vertex_count() > 0
                && truncation >= MIN_SHELL_HEIGHT
            {
                let (_, s) = integrate_domain(domain, order, truncation, true, &mut f)?;
                shell_residual(s[0], s[1])
            } else if domain.ideal_vertex_count() == 0 {
                0.0
            } else {
                f64::NAN
            };
            return Ok(VolumeReport {
                value,
                per_simplex,
                quadrature_order: order,
                truncation_residual_estimate: residual,
                history,
                truncation,
            });
        }
        if last {
            break;
        }
        prev = Some(value);
    }
    Err(Error::QuadratureNonConvergence {
        orders: history.iter().map(|h| h.0).collect(),
        values: history.iter().map(|h| h.1).collect(),
    })
}

/// `vol(D)` for a straight developing map.
pub fn vol_dev(spec: &DevelopingMapSpec) -> Result<VolumeReport> {
    vol_dev_with(spec, &VolumeOptions::default())
}

pub fn vol_dev_with(spec: &DevelopingMapSpec, opts: &VolumeOptions) -> Result<VolumeReport> {
    let images: Vec<Matrix> = (0..spec.domain.simplices.len())
        .map(|s| spec.lifted_images(s))
        .collect();
    integrate_with_orders(&spec.domain, opts, |s, b| {
        Ok(straight_density(&images[s], b))
    })
}

/// `∫ f dvol` over the truncated domain for a nonnegative callback.
pub fn vol_form_integral<F>(domain: &FundamentalDomain, callback: F) -> Result<VolumeReport>
where
    F: FnMut(&Point) -> Result<f64>,
{
    vol_form_integral_with(domain, &VolumeOptions::default(), callback)
}

pub fn vol_form_integral_with<F>(
    domain: &FundamentalDomain,
    opts: &VolumeOptions,
    mut callback: F,
) -> Result<VolumeReport>
where
    F: FnMut(&Point) -> Result<f64>,
{
    let lifted: Vec<Matrix> = (0..domain.simplices.len())
        .map(|s| domain.lifted(s))
        .collect();
    let mut failures: Vec<String> = Vec::new();
    let report = integrate_with_orders(domain, opts, |s, b| {
        let density = straight_density(&lifted[s], b);
        let Some(x) = Point::try_from_unnormalized(&lifted[s] * b) else {
            return Ok(0.0);
        };
        match callback(&x) {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(v * density),
            Ok(v) => {
                failures.push(format!("simplex {s} at {:?}: value {v}", b.as_slice()));
                Ok(0.0)
            }
            Err(e) => {
                failures.push(format!("simplex {s} at {:?}: {e}", b.as_slice()));
                Ok(0.0)
            }
        }
    });
    if !failures.is_empty() {
        return Err(Error::CallbackFailure {
            count: failures.len(),
            first: failures[0].clone(),
        });
    }
    report
}

/// The Lobachevsky function `Λ(θ) = -∫_0^θ log|2 sin u| du`.
pub fn lobachevsky_oracle(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    // odd and π-periodic
    let mut t = theta.rem_euclid(pi);
    if t > 0.5 * pi {
        t -= pi;
    }
    let (sign, t) = if t < 0.0 { (-1.0, -t) } else { (1.0, t) };
    if t == 0.0 {
        return 0.0;
    }
    if t < 1e-3 {
        let t3 = t * t * t;
        return sign * (t - t * (2.0 * t).ln() + t3 / 18.0 + t3 * t * t / 900.0);
    }
    let out = quadrature::double_exponential::integrate(|u| -(2.0 * u.sin()).ln(), 0.0, t, 1e-15);
    sign * out.integral
}

/// Volume of the ideal tetrahedron with dihedral angles `α, β, γ` summing to π.
pub fn ideal_tetra_volume(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    let sum = alpha + beta + gamma;
    if (sum - std::f64::consts::PI).abs() > 1e-9 {
        return Err(Error::AngleSum(sum));
    }
    Ok(lobachevsky_oracle(alpha) + lobachevsky_oracle(beta) + lobachevsky_oracle(gamma))
}

/// Dihedral angles of the ideal tetrahedron `0, 1, z, ∞` (`Im z > 0`).
pub fn ideal_tetra_angles(z: num_complex::Complex64) -> [f64; 3] {
    let one = num_complex::Complex64::new(1.0, 0.0);
    [z.arg(), (one / (one - z)).arg(), (one - one / z).arg()]
}

/// The shape `z` (with `Im z >= 0`) of the ideal tetrahedron with the given
/// vertices on the sphere at infinity of `H^3`, read as points of the
/// Riemann sphere through the upper half-space model. `None` when two
/// vertices coincide.
pub fn ideal_tetra_shape(vertices: [&BoundaryPoint; 4]) -> Option<num_complex::Complex64> {
    use num_complex::Complex64;
    if vertices.iter().any(|v| v.dim() != 3) {
        return None;
    }
    let plane: Vec<Option<Complex64>> = vertices
        .iter()
        .map(|v| {
            let u = v.direction();
            let denom = 1.0 - u[2];
            (denom > 1e-12).then(|| Complex64::new(u[0], u[1]) / denom)
        })
        .collect();
    // z = (c - a)(d - b) / ((b - a)(d - c)); factors with ∞ cancel in pairs
    let diff = |p: usize, q: usize| -> Option<Complex64> {
        match (plane[p], plane[q]) {
            (Some(x), Some(y)) => Some(x - y),
            _ => None,
        }
    };
    let mut num = Complex64::new(1.0, 0.0);
    let mut den = Complex64::new(1.0, 0.0);
    for ((p, q), top) in [
        ((2, 0), true),
        ((3, 1), true),
        ((1, 0), false),
        ((3, 2), false),
    ] {
        if let Some(d) = diff(p, q) {
            if top {
                num *= d;
            } else {
                den *= d;
            }
        }
    }
    if num.norm() < 1e-14 || den.norm() < 1e-14 {
        return None;
    }
    let z = num / den;
    Some(if z.im < 0.0 { z.conj() } else { z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgeo::upper_half_space_ideal;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    /// Clausen-series oracle `Λ(θ) = ½ Σ sin(2kθ)/k²`.
    fn clausen(theta: f64) -> f64 {
        let mut s = 0.0;
        for k in 1..200_000 {
            let k = k as f64;
            s += (2.0 * k * theta).sin() / (k * k);
        }
        0.5 * s
    }

    fn ideal_tetra(z: Complex64) -> FundamentalDomain {
        let v = |p: Option<Complex64>| Endpoint::Ideal(upper_half_space_ideal(p));
        FundamentalDomain::new(
            3,
            vec![
                v(Some(Complex64::new(0.0, 0.0))),
                v(Some(Complex64::new(1.0, 0.0))),
                v(Some(z)),
                v(None),
            ],
            vec![vec![0, 1, 2, 3]],
            vec![],
            6.0,
        )
        .unwrap()
    }

    #[test]
    fn lobachevsky_values() {
        let pi = std::f64::consts::PI;
        assert_eq!(lobachevsky_oracle(0.0), 0.0);
        assert!(lobachevsky_oracle(pi).abs() < 1e-15);
        for theta in [0.0005, 0.01, 0.3, 1.0, pi / 3.0, 1.5, 2.7] {
            assert_abs_diff_eq!(lobachevsky_oracle(theta), clausen(theta), epsilon = 1e-5);
        }
        assert_abs_diff_eq!(
            lobachevsky_oracle(-0.4),
            -lobachevsky_oracle(0.4),
            epsilon = 1e-15
        );
        let v = ideal_tetra_volume(pi / 3.0, pi / 3.0, pi / 3.0).unwrap();
        assert_abs_diff_eq!(v, 1.0149416, epsilon = 1e-7);
        assert!(matches!(
            ideal_tetra_volume(1.0, 1.0, 1.0),
            Err(Error::AngleSum(_))
        ));
    }

    #[test]
    fn series_matches_quadrature_at_switch() {
        let t: f64 = 1e-3;
        let t3 = t * t * t;
        let series = t - t * (2.0 * t).ln() + t3 / 18.0 + t3 * t * t / 900.0;
        let quad =
            quadrature::double_exponential::integrate(|u| -(2.0 * u.sin()).ln(), 0.0, t, 1e-16);
        assert_abs_diff_eq!(series, quad.integral, epsilon = 1e-15);
    }

    #[test]
    fn regular_ideal_tetrahedron() {
        let omega = Complex64::new(0.5, 0.75f64.sqrt());
        let spec = DevelopingMapSpec::identity(ideal_tetra(omega), 3).unwrap();
        let report = vol_dev(&spec).unwrap();
        assert_abs_diff_eq!(report.value, 1.0149416, epsilon = 5e-3);
        assert!(report.truncation_residual_estimate < 1e-3);
        assert_abs_diff_eq!(
            report.value,
            report.per_simplex.iter().sum::<f64>(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn oracle_agreement_for_other_shapes() {
        for z in [Complex64::new(0.3, 0.9), Complex64::new(-0.6, 1.7)] {
            let spec = DevelopingMapSpec::identity(ideal_tetra(z), 3).unwrap();
            let [a, b, c] = ideal_tetra_angles(z);
            let expected = ideal_tetra_volume(a, b, c).unwrap();
            assert_abs_diff_eq!(vol_dev(&spec).unwrap().value, expected, epsilon = 5e-3);
        }
        // a flat shape needs higher orders
        let z = Complex64::new(1.4, 0.5);
        let spec = DevelopingMapSpec::identity(ideal_tetra(z), 3).unwrap();
        assert!(matches!(
            vol_dev(&spec),
            Err(Error::QuadratureNonConvergence { .. })
        ));
        let opts = VolumeOptions {
            orders: vec![8, 12, 16],
            ..VolumeOptions::default()
        };
        let [a, b, c] = ideal_tetra_angles(z);
        let expected = ideal_tetra_volume(a, b, c).unwrap();
        assert_abs_diff_eq!(
            vol_dev_with(&spec, &opts).unwrap().value,
            expected,
            epsilon = 1e-4
        );
    }

    #[test]
    fn shape_from_vertices() {
        let z = Complex64::new(0.3, 0.9);
        let d = ideal_tetra(z);
        let v: Vec<BoundaryPoint> = d
            .vertices
            .iter()
            .map(|e| match e {
                Endpoint::Ideal(b) => b.clone(),
                Endpoint::Interior(_) => unreachable!(),
            })
            .collect();
        let shape = ideal_tetra_shape([&v[0], &v[1], &v[2], &v[3]]).unwrap();
        assert!((shape - z).norm() < 1e-12);
        // relabeling permutes the three shape parameters
        let other = ideal_tetra_shape([&v[1], &v[0], &v[2], &v[3]]).unwrap();
        let angles = |w: Complex64| {
            let mut a = ideal_tetra_angles(w);
            a.sort_by(f64::total_cmp);
            a
        };
        for (x, y) in angles(shape).iter().zip(angles(other).iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert!(ideal_tetra_shape([&v[0], &v[0], &v[2], &v[3]]).is_none());
    }

    #[test]
    fn collapse_has_zero_volume() {
        let domain = ideal_tetra(Complex64::new(0.5, 0.8));
        let spec = DevelopingMapSpec::collapse(domain, Point::origin(3)).unwrap();
        assert_eq!(vol_dev(&spec).unwrap().value, 0.0);
    }

    #[test]
    fn callback_integrals() {
        let domain = ideal_tetra(Complex64::new(0.5, 0.75f64.sqrt()));
        let one = vol_form_integral(&domain, |_| Ok(1.0)).unwrap();
        assert_abs_diff_eq!(one.value, 1.0149416, epsilon = 5e-3);
        assert_eq!(vol_form_integral(&domain, |_| Ok(0.0)).unwrap().value, 0.0);
        let err = vol_form_integral(&domain, |_| Err(Error::EmptyOrbit));
        assert!(matches!(err, Err(Error::CallbackFailure { .. })));
    }

    #[test]
    fn straightening_examples() {
        let a = Point::from_polar(0.5, &[1.0, 0.0, 0.0]).unwrap();
        let b = Point::from_polar(1.5, &[0.0, 1.0, 0.0]).unwrap();
        let c = Point::from_polar(1.0, &[0.0, 0.0, 1.0]).unwrap();
        let d = Point::from_polar(0.7, &[-1.0, -1.0, -1.0]).unwrap();
        let verts: Vec<Endpoint> = [&a, &b, &c, &d]
            .iter()
            .map(|p| Endpoint::Interior((*p).clone()))
            .collect();
        let domain = FundamentalDomain::new(3, verts, vec![vec![0, 1, 2, 3]], vec![], 5.0).unwrap();
        let spec = DevelopingMapSpec::identity(domain, 3).unwrap();
        let at_b = straighten(&spec, 0, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(dist(&at_b, &b) < 1e-14);
        let mid = straighten(&spec, 0, &[0.5, 0.5, 0.0, 0.0]).unwrap();
        let oracle = crate::hypgeo::geodesic(&a, &b.clone().into(), 0.5 * dist(&a, &b)).unwrap();
        assert!(dist(&mid, &oracle) < 1e-12);
    }

    #[test]
    fn compact_simplex_volume_is_isometry_invariant() {
        let verts: Vec<Endpoint> = [
            [0.9, 0.0, 0.0],
            [0.0, 1.1, 0.0],
            [0.0, 0.0, 1.3],
            [-0.7, -0.7, -0.7],
        ]
        .iter()
        .map(|d| Endpoint::Interior(Point::from_polar(1.2, d).unwrap()))
        .collect();
        let domain = FundamentalDomain::new(3, verts, vec![vec![0, 1, 2, 3]], vec![], 5.0).unwrap();
        let spec = DevelopingMapSpec::identity(domain, 3).unwrap();
        let v = vol_dev(&spec).unwrap().value;
        let g = Isometry::translation(3, 2, 1.3).compose(&Isometry::rotation(3, 1, 3, 0.7));
        let w = vol_dev(&spec.moved_by(&g)).unwrap().value;
        assert_abs_diff_eq!(v, w, epsilon = 1e-4 * v);
        // flattened image: all vertices in a totally geodesic plane
        let flat: Vec<Endpoint> = spec
            .vertex_images
            .iter()
            .map(|e| {
                let mut c = e.coords().clone();
                c[3] = 0.0;
                Endpoint::Interior(Point::new(c).unwrap())
            })
            .collect();
        let flat = DevelopingMapSpec::new(spec.domain.clone(), flat).unwrap();
        assert!(vol_dev(&flat).unwrap().value < 1e-6);
    }

    #[test]
    fn degenerate_simplex_is_rejected() {
        let p = Endpoint::Interior(Point::origin(3));
        let q = Endpoint::Ideal(BoundaryPoint::from_direction(&[1.0, 0.0, 0.0]).unwrap());
        let err = FundamentalDomain::new(
            3,
            vec![p.clone(), q, p.clone(), p],
            vec![vec![0, 1, 2, 3]],
            vec![],
            3.0,
        );
        assert!(matches!(err, Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn truncation_residual_shrinks() {
        let omega = Complex64::new(0.5, 0.75f64.sqrt());
        let spec = DevelopingMapSpec::identity(ideal_tetra(omega), 3).unwrap();
        let mut prev = f64::INFINITY;
        for t in [3.0, 4.0, 5.0] {
            let opts = VolumeOptions {
                truncation: Some(t),
                ..VolumeOptions::default()
            };
            let r = vol_dev_with(&spec, &opts).unwrap();
            assert!(r.truncation_residual_estimate < prev);
            prev = r.truncation_residual_estimate;
            // truncated value plus estimated remainder recovers the full volume
            assert_abs_diff_eq!(
                r.value + r.truncation_residual_estimate,
                1.0149416,
                epsilon = 1e-4
            );
        }
    }
}
