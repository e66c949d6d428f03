//! Hyperbolic space in the hyperboloid model.
//!
//! Points of `H^m` live on the upper sheet `{x : <x,x> = -1, x_0 > 0}` of
//! Minkowski space `R^{m,1}` with the form `<u,v> = -u_0 v_0 + sum u_i v_i`.
//! Ideal points are future null rays, stored with the normalization
//! `<theta, O> = -1` against the reference basepoint `O = (1, 0, ..., 0)`,
//! i.e. `theta = (1, u)` with `u` a unit vector. Isometries are matrices in
//! `O+(m,1)`.
//!
//! The Busemann function is `B(y, theta) = log(-<y, theta>)`. With the above
//! normalization it vanishes at `O` and decreases at unit speed along rays
//! toward `theta`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Tolerance used to decide whether matrix relations hold.
pub const LORENTZ_TOL: f64 = 1e-10;
/// Eigenvalue clustering tolerance for isometry classification.
pub const CLASSIFY_TOL: f64 = 1e-8;
/// Residual allowed when checking that a set is fixed by a group.
pub const FIX_TOL: f64 = 1e-9;

/// The Minkowski form `-u_0 v_0 + sum_{i>=1} u_i v_i`.
pub fn minkowski_form(u: &Vector, v: &Vector) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(mdot(u, v))
}

#[inline]
pub(crate) fn mdot(u: &Vector, v: &Vector) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let spatial: f64 = u.iter().zip(v.iter()).skip(1).map(|(a, b)| a * b).sum();
    spatial - u[0] * v[0]
}

/// The diagonal Gram matrix `J = diag(-1, 1, ..., 1)` of size `m + 1`.
pub fn minkowski_gram(m: usize) -> Matrix {
    let mut j = Matrix::identity(m + 1, m + 1);
    j[(0, 0)] = -1.0;
    j
}

/// A point of `H^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vector,
}

impl Point {
    /// The reference basepoint `O = (1, 0, ..., 0)` of `H^m`.
    pub fn origin(m: usize) -> Self {
        let mut coords = Vector::zeros(m + 1);
        coords[0] = 1.0;
        Point { coords }
    }

    /// Validates and normalizes a future timelike vector.
    pub fn new(coords: Vector) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::NotAPoint(format!("length {}", coords.len())));
        }
        let q = mdot(&coords, &coords);
        if !(q < 0.0) || !(coords[0] > 0.0) || !q.is_finite() {
            return Err(Error::NotAPoint(format!(
                "<x,x> = {q:e}, x0 = {:e}",
                coords[0]
            )));
        }
        Ok(Self::normalize_unchecked(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(Vector::from_column_slice(coords))
    }

    /// Rescales a future timelike vector onto the sheet. The time
    /// coordinate is recomputed from the spatial part so that the result
    /// sits on the hyperboloid to rounding.
    pub(crate) fn normalize_unchecked(mut coords: Vector) -> Self {
        let q = -mdot(&coords, &coords);
        // a deviation of q from 1 below the rounding noise of the form
        // carries no information, and dividing by it would add error
        let noise = 64.0 * f64::EPSILON * coords[0] * coords[0];
        if (q - 1.0).abs() > noise {
            coords /= q.sqrt();
        }
        let spatial = coords.rows(1, coords.len() - 1).norm_squared();
        coords[0] = (1.0 + spatial).sqrt();
        Point { coords }
    }

    /// Normalizes if the vector is future timelike, otherwise `None`.
    pub(crate) fn try_from_unnormalized(coords: Vector) -> Option<Self> {
        let q = mdot(&coords, &coords);
        if q < 0.0 && coords[0] > 0.0 && q.is_finite() {
            Some(Self::normalize_unchecked(coords))
        } else {
            None
        }
    }

    /// The point at distance `r` from the basepoint in the given spatial
    /// direction (which need not be normalized).
    pub fn from_polar(r: f64, direction: &[f64]) -> Result<Self> {
        let dir = Vector::from_column_slice(direction);
        let norm = dir.norm();
        if !(norm > 0.0) {
            return Err(Error::DegenerateDirection("zero direction".into()));
        }
        let mut coords = Vector::zeros(direction.len() + 1);
        coords[0] = r.cosh();
        coords
            .rows_mut(1, direction.len())
            .copy_from(&(dir * (r.sinh() / norm)));
        Ok(Point { coords })
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    /// The dimension `m` of the hyperbolic space containing the point.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// `<x,x> + 1`, zero for an exactly normalized point.
    pub fn normalization_residual(&self) -> f64 {
        mdot(&self.coords, &self.coords) + 1.0
    }
}

/// A point of the sphere at infinity `dH^m`, stored as `(1, u)` with `|u| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    coords: Vector,
}

impl BoundaryPoint {
    /// Validates and normalizes a future null vector.
    pub fn new(coords: Vector) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::NotABoundaryPoint(format!("length {}", coords.len())));
        }
        let t = coords[0];
        let q = mdot(&coords, &coords);
        if !(t > 0.0) || !(q.abs() <= 1e-9 * t * t) {
            return Err(Error::NotABoundaryPoint(format!(
                "<v,v> = {q:e}, v0 = {t:e}"
            )));
        }
        Self::from_direction(coords.rows(1, coords.len() - 1).as_slice())
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(Vector::from_column_slice(coords))
    }

    /// The ideal endpoint of the ray from the basepoint in direction `u`.
    pub fn from_direction(direction: &[f64]) -> Result<Self> {
        let dir = Vector::from_column_slice(direction);
        let norm = dir.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotABoundaryPoint("zero spatial part".into()));
        }
        let mut coords = Vector::zeros(direction.len() + 1);
        coords[0] = 1.0;
        coords.rows_mut(1, direction.len()).copy_from(&(dir / norm));
        Ok(BoundaryPoint { coords })
    }

    /// Projectivizes any nonzero vector on (or numerically near) the future
    /// light cone.
    pub(crate) fn from_null_unchecked(coords: &Vector) -> Option<Self> {
        let spatial = coords.rows(1, coords.len() - 1);
        let sign = if coords[0] >= 0.0 { 1.0 } else { -1.0 };
        Self::from_direction((spatial * sign).as_slice()).ok()
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Unit vector of the point in the sphere (ball-model position).
    pub fn direction(&self) -> Vector {
        self.coords.rows(1, self.coords.len() - 1).into_owned()
    }

    /// The antipodal ideal point as seen from the basepoint.
    pub fn antipode(&self) -> Self {
        let mut coords = -self.coords.clone();
        coords[0] = 1.0;
        BoundaryPoint { coords }
    }

    /// Euclidean distance between the two points on the unit sphere.
    pub fn chordal_distance(&self, other: &BoundaryPoint) -> f64 {
        (&self.coords - &other.coords).norm()
    }
}

/// A point of the closed ball `H^m ∪ dH^m`, used where either kind is accepted.
#[derive(Clone, Debug, PartialEq)]
pub enum Endpoint {
    Interior(Point),
    Ideal(BoundaryPoint),
}

impl From<Point> for Endpoint {
    fn from(p: Point) -> Self {
        Endpoint::Interior(p)
    }
}

impl From<BoundaryPoint> for Endpoint {
    fn from(p: BoundaryPoint) -> Self {
        Endpoint::Ideal(p)
    }
}

impl Endpoint {
    pub fn coords(&self) -> &Vector {
        match self {
            Endpoint::Interior(p) => p.coords(),
            Endpoint::Ideal(p) => p.coords(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords().len() - 1
    }
}

/// An element of `O+(m,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    matrix: Matrix,
    orientation: i8,
}

impl Isometry {
    pub fn identity(m: usize) -> Self {
        Isometry {
            matrix: Matrix::identity(m + 1, m + 1),
            orientation: 1,
        }
    }

    /// Validates `g^T J g = J` and preservation of the upper sheet.
    pub fn new(matrix: Matrix) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() || n < 2 {
            return Err(Error::NotLorentz(format!(
                "shape {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let residual = lorentz_residual(&matrix);
        let scale = matrix.amax().max(1.0);
        if !(residual <= LORENTZ_TOL * scale * scale) {
            return Err(Error::NotLorentz(format!("|g^T J g - J| = {residual:e}")));
        }
        if !(matrix[(0, 0)] > 0.0) {
            return Err(Error::NotLorentz("reverses the time orientation".into()));
        }
        let orientation = if matrix.determinant() >= 0.0 { 1 } else { -1 };
        Ok(Isometry {
            matrix,
            orientation,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotLorentz("ragged or non-square rows".into()));
        }
        Self::new(Matrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub(crate) fn from_matrix_unchecked(matrix: Matrix) -> Self {
        let orientation = if matrix.determinant() >= 0.0 { 1 } else { -1 };
        Isometry {
            matrix,
            orientation,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            matrix: &self.matrix * &other.matrix,
            orientation: self.orientation * other.orientation,
        }
    }

    /// The inverse `J g^T J`, exact for Lorentz matrices.
    pub fn inverse(&self) -> Isometry {
        let mut inv = self.matrix.transpose();
        let n = inv.nrows();
        for i in 1..n {
            inv[(0, i)] = -inv[(0, i)];
            inv[(i, 0)] = -inv[(i, 0)];
        }
        Isometry {
            matrix: inv,
            orientation: self.orientation,
        }
    }

    pub fn apply(&self, x: &Point) -> Point {
        Point::normalize_unchecked(&self.matrix * x.coords())
    }

    pub fn apply_boundary(&self, theta: &BoundaryPoint) -> BoundaryPoint {
        let v = &self.matrix * theta.coords();
        BoundaryPoint::from_null_unchecked(&v).expect("Lorentz image of a null vector")
    }

    pub fn apply_endpoint(&self, e: &Endpoint) -> Endpoint {
        match e {
            Endpoint::Interior(p) => Endpoint::Interior(self.apply(p)),
            Endpoint::Ideal(p) => Endpoint::Ideal(self.apply_boundary(p)),
        }
    }

    /// Max-entry distance from the identity matrix.
    pub fn distance_from_identity(&self) -> f64 {
        let n = self.matrix.nrows();
        (&self.matrix - Matrix::identity(n, n)).amax()
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &Isometry) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    /// The hyperbolic translation along the `axis`-th coordinate direction
    /// by `length` (a boost in the `(0, axis)` plane).
    pub fn translation(m: usize, axis: usize, length: f64) -> Self {
        assert!(axis >= 1 && axis <= m, "axis must be a spatial index");
        let mut g = Matrix::identity(m + 1, m + 1);
        let (c, s) = (length.cosh(), length.sinh());
        g[(0, 0)] = c;
        g[(0, axis)] = s;
        g[(axis, 0)] = s;
        g[(axis, axis)] = c;
        Isometry {
            matrix: g,
            orientation: 1,
        }
    }

    /// Rotation by `angle` in the spatial `(i, j)` plane; fixes the basepoint.
    pub fn rotation(m: usize, i: usize, j: usize, angle: f64) -> Self {
        assert!(i >= 1 && j >= 1 && i <= m && j <= m && i != j);
        let mut g = Matrix::identity(m + 1, m + 1);
        let (c, s) = (angle.cos(), angle.sin());
        g[(i, i)] = c;
        g[(i, j)] = -s;
        g[(j, i)] = s;
        g[(j, j)] = c;
        Isometry {
            matrix: g,
            orientation: 1,
        }
    }

    /// The boost taking the basepoint to `y` without rotation.
    pub fn boost_to(y: &Point) -> Self {
        Isometry {
            matrix: boost_matrix(y.coords()),
            orientation: 1,
        }
    }
}

fn lorentz_residual(g: &Matrix) -> f64 {
    let m = g.nrows() - 1;
    let j = minkowski_gram(m);
    (g.transpose() * &j * g - j).amax()
}

fn boost_matrix(y: &Vector) -> Matrix {
    let n = y.len();
    let y0 = y[0];
    let mut t = Matrix::identity(n, n);
    t[(0, 0)] = y0;
    for i in 1..n {
        t[(0, i)] = y[i];
        t[(i, 0)] = y[i];
        for j in 1..n {
            t[(i, j)] += y[i] * y[j] / (1.0 + y0);
        }
    }
    t
}

/// An orthonormal frame of `T_y H^m` as the columns of an `(m+1) x m` matrix.
pub fn tangent_frame(y: &Point) -> Matrix {
    let t = boost_matrix(y.coords());
    t.columns(1, y.dim()).into_owned()
}

/// Projection of an ambient vector onto `T_y H^m`.
pub fn project_tangent(y: &Point, v: &Vector) -> Vector {
    v + y.coords() * mdot(v, y.coords())
}

/// The Riemannian exponential map at `y`.
pub fn exp_map(y: &Point, v: &Vector) -> Point {
    let norm_sq = mdot(v, v).max(0.0);
    let r = norm_sq.sqrt();
    if r < 1e-300 {
        return y.clone();
    }
    let coords = y.coords() * r.cosh() + v * (r.sinh() / r);
    Point::normalize_unchecked(coords)
}

/// The Riemannian logarithm at `y`: the tangent vector of length `d(y,z)`
/// pointing to `z`.
pub fn log_map(y: &Point, z: &Point) -> Vector {
    let d = dist(y, z);
    let w = project_tangent(y, z.coords());
    let wn = mdot(&w, &w).max(0.0).sqrt();
    if wn < 1e-300 || d == 0.0 {
        return Vector::zeros(y.coords().len());
    }
    w * (d / wn)
}

/// Hyperbolic distance, evaluated as `2 asinh(|x - y|_M / 2)` for accuracy
/// at short range.
pub fn dist(x: &Point, y: &Point) -> f64 {
    let diff = x.coords() - y.coords();
    let q = mdot(&diff, &diff);
    if q <= 0.0 {
        return 0.0;
    }
    2.0 * (0.5 * q.sqrt()).asinh()
}

/// Value and gradient of the Busemann function `B(y, theta)`.
///
/// The gradient is the unit tangent vector at `y` pointing away from
/// `theta`, in ambient coordinates.
pub fn busemann(y: &Point, theta: &BoundaryPoint) -> (f64, Vector) {
    let p = busemann_pairing(y, theta);
    let grad = y.coords() - theta.coords() / p;
    (p.ln(), grad)
}

/// `-<y, theta>`. When `y` leans toward `theta` the direct difference
/// cancels, so it is rewritten as `(1 + |y_perp|^2) / (y_0 + y.u)`.
fn busemann_pairing(y: &Point, theta: &BoundaryPoint) -> f64 {
    let (yc, tc) = (y.coords(), theta.coords());
    let m = yc.len() - 1;
    let ys = yc.rows(1, m);
    let u = tc.rows(1, m);
    let along = ys.dot(&u);
    if along <= 0.0 {
        return yc[0] - along;
    }
    let perp = ys - u * along;
    (1.0 + perp.norm_squared()) / (yc[0] + along)
}

/// Unit-speed geodesic from `x` toward `target`, evaluated at `t`.
pub fn geodesic(x: &Point, target: &Endpoint, t: f64) -> Result<Point> {
    let u = unit_direction(x, target)?;
    Ok(Point::normalize_unchecked(
        x.coords() * t.cosh() + u * t.sinh(),
    ))
}

/// Unit tangent at `x` pointing toward `target`.
pub fn unit_direction(x: &Point, target: &Endpoint) -> Result<Vector> {
    if x.coords().len() != target.coords().len() {
        return Err(Error::DimensionMismatch {
            expected: x.coords().len(),
            found: target.coords().len(),
        });
    }
    match target {
        Endpoint::Interior(y) => {
            let v = log_map(x, y);
            let n = mdot(&v, &v).max(0.0).sqrt();
            if n < 1e-14 {
                return Err(Error::DegenerateDirection(
                    "target coincides with the start point".into(),
                ));
            }
            Ok(v / n)
        }
        Endpoint::Ideal(theta) => {
            let (_, grad) = busemann(x, theta);
            Ok(-grad)
        }
    }
}

/// A geodesic ray `t -> alpha(t)`, `t >= 0`, from `base` to an ideal endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicRay {
    pub base: Point,
    pub endpoint: BoundaryPoint,
}

impl GeodesicRay {
    pub fn new(base: Point, endpoint: BoundaryPoint) -> Result<Self> {
        if base.dim() != endpoint.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: endpoint.dim(),
            });
        }
        Ok(GeodesicRay { base, endpoint })
    }

    pub fn point_at(&self, t: f64) -> Point {
        let (_, grad) = busemann(&self.base, &self.endpoint);
        Point::normalize_unchecked(self.base.coords() * t.cosh() - grad * t.sinh())
    }
}

/// Type of an isometry of `H^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
    Indeterminate,
}

impl std::fmt::Display for IsometryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            IsometryKind::Elliptic => "elliptic",
            IsometryKind::Parabolic => "parabolic",
            IsometryKind::Hyperbolic => "hyperbolic",
            IsometryKind::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub kind: IsometryKind,
    /// Minimal displacement; zero for elliptic and parabolic elements.
    pub translation_length: f64,
    /// A fixed point in `H^m` (the one nearest the basepoint), if any.
    pub interior_fixed: Option<Point>,
    /// Fixed points at infinity: the axis endpoints (attracting first) for
    /// hyperbolic elements, the unique fixed point for parabolic ones.
    pub boundary_fixed: Vec<BoundaryPoint>,
}

/// Basis (as columns) of the numerical kernel of `a`.
fn null_space(a: &Matrix, tol: f64) -> Matrix {
    let ncols = a.ncols();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut cols = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol {
            cols.push(v_t.row(i).transpose());
        }
    }
    // rows of V^T beyond the singular values (wide input) are also in the kernel
    for i in svd.singular_values.len()..v_t.nrows() {
        cols.push(v_t.row(i).transpose());
    }
    if cols.is_empty() {
        Matrix::zeros(ncols, 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Signature analysis of the restriction of the Minkowski form to a
/// subspace given by orthonormal columns.
struct FixedSubspace {
    basis: Matrix,
    gram_values: Vec<f64>,
    gram_vectors: Matrix,
}

impl FixedSubspace {
    fn new(basis: Matrix) -> Self {
        let m = basis.nrows() - 1;
        if basis.ncols() == 0 {
            return FixedSubspace {
                basis,
                gram_values: Vec::new(),
                gram_vectors: Matrix::zeros(0, 0),
            };
        }
        let q = basis.transpose() * minkowski_gram(m) * &basis;
        let eig = SymmetricEigen::new(q);
        FixedSubspace {
            basis,
            gram_values: eig.eigenvalues.iter().copied().collect(),
            gram_vectors: eig.eigenvectors,
        }
    }

    fn has_timelike(&self) -> bool {
        self.gram_values.iter().any(|&q| q < -CLASSIFY_TOL)
    }

    fn null_directions(&self) -> Vec<Vector> {
        self.gram_values
            .iter()
            .enumerate()
            .filter(|(_, q)| q.abs() <= CLASSIFY_TOL)
            .map(|(i, _)| &self.basis * self.gram_vectors.column(i))
            .collect()
    }

    /// The point of the fixed totally geodesic subspace nearest the basepoint.
    fn nearest_interior_point(&self) -> Option<Point> {
        let m = self.basis.nrows() - 1;
        let j = minkowski_gram(m);
        let q = self.basis.transpose() * &j * &self.basis;
        let rhs = self.basis.transpose() * &j * Point::origin(m).coords();
        let c = q.lu().solve(&rhs)?;
        let v = &self.basis * c;
        Point::try_from_unnormalized(v.clone()).or_else(|| Point::try_from_unnormalized(-v))
    }

    /// Ideal points of the fixed subspace: `p ± e` for an orthonormal basis
    /// `e` of the spacelike directions tangent at `p`.
    fn ideal_points(&self, p: &Point) -> Vec<BoundaryPoint> {
        let mut out = Vec::new();
        let mut dirs: Vec<Vector> = Vec::new();
        for i in 0..self.basis.ncols() {
            let mut v = project_tangent(p, &self.basis.column(i).into_owned());
            for d in &dirs {
                let c = mdot(&v, d);
                v -= d * c;
            }
            let n = mdot(&v, &v);
            if n > 1e-12 {
                dirs.push(v / n.sqrt());
            }
        }
        for d in dirs {
            for sign in [1.0, -1.0] {
                if let Some(b) = BoundaryPoint::from_null_unchecked(&(p.coords() + &d * sign)) {
                    out.push(b);
                }
            }
        }
        out
    }
}

fn real_eigenvector(g: &Matrix, lambda: f64) -> Option<Vector> {
    let n = g.nrows();
    let a = g - Matrix::identity(n, n) * lambda;
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    Some(v_t.row(imin).transpose())
}

/// Classifies `g` by the structure of its fixed points in the closed ball.
pub fn classify_isometry(g: &Isometry) -> Classification {
    let m = g.dim();
    let n = m + 1;
    let scale = g.matrix().amax().max(1.0);
    let kernel = null_space(&(g.matrix() - Matrix::identity(n, n)), CLASSIFY_TOL * scale);
    let fixed = FixedSubspace::new(kernel);

    if fixed.has_timelike() {
        let interior = fixed.nearest_interior_point();
        let boundary = interior
            .as_ref()
            .map(|p| fixed.ideal_points(p))
            .unwrap_or_default();
        return Classification {
            kind: IsometryKind::Elliptic,
            translation_length: 0.0,
            interior_fixed: interior,
            boundary_fixed: boundary,
        };
    }

    let nulls = fixed.null_directions();
    if !nulls.is_empty() && fixed.gram_values.iter().all(|&q| q > -CLASSIFY_TOL) {
        let boundary: Vec<BoundaryPoint> = nulls
            .iter()
            .filter_map(BoundaryPoint::from_null_unchecked)
            .collect();
        return Classification {
            kind: if boundary.len() == 1 {
                IsometryKind::Parabolic
            } else {
                IsometryKind::Indeterminate
            },
            translation_length: 0.0,
            interior_fixed: None,
            boundary_fixed: boundary,
        };
    }

    let eigenvalues = g.matrix().complex_eigenvalues();
    let top: Option<Complex64> = eigenvalues
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()));
    if let Some(lambda) = top {
        if lambda.norm() > 1.0 + CLASSIFY_TOL && lambda.im.abs() <= CLASSIFY_TOL * lambda.norm() {
            let lam = lambda.re;
            let plus = real_eigenvector(g.matrix(), lam);
            let minus = real_eigenvector(g.matrix(), 1.0 / lam);
            if let (Some(p), Some(q)) = (plus, minus) {
                // refine the eigenvalue from the eigenvector: lambda = (g v)_0 / v_0
                let gp = g.matrix() * &p;
                let refined = if p[0].abs() > 1e-12 {
                    gp[0] / p[0]
                } else {
                    lam
                };
                let boundary: Vec<BoundaryPoint> = [p, q]
                    .iter()
                    .filter_map(BoundaryPoint::from_null_unchecked)
                    .collect();
                return Classification {
                    kind: IsometryKind::Hyperbolic,
                    translation_length: refined.abs().ln(),
                    interior_fixed: None,
                    boundary_fixed: boundary,
                };
            }
        }
    }

    Classification {
        kind: IsometryKind::Indeterminate,
        translation_length: 0.0,
        interior_fixed: None,
        boundary_fixed: Vec::new(),
    }
}

/// What the common fixed set of a group looks like.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedSetKind {
    /// No fixed point inside; two fixed ideal points spanning an invariant geodesic.
    EmptyInterior,
    /// Every point is fixed.
    Pointwise,
    /// The fixed set meets `H^m` in a totally geodesic subspace.
    Axis,
    /// A single fixed ideal point.
    Ideal,
}

#[derive(Clone, Debug)]
pub struct FixedSet {
    pub interior_points: Vec<Point>,
    pub boundary_points: Vec<BoundaryPoint>,
    pub invariant_geodesics: Vec<(BoundaryPoint, BoundaryPoint)>,
    pub description: FixedSetKind,
}

impl FixedSet {
    pub fn is_empty(&self) -> bool {
        self.description != FixedSetKind::Pointwise
            && self.interior_points.is_empty()
            && self.boundary_points.is_empty()
    }

    /// Largest residual of the listed elements under the given group
    /// elements: distances for interior points, chordal distances on the
    /// sphere for ideal points and geodesic endpoints (up to swapping).
    pub fn max_residual(&self, gens: &[Isometry]) -> f64 {
        let mut worst: f64 = 0.0;
        for g in gens {
            for p in &self.interior_points {
                worst = worst.max(dist(&g.apply(p), p));
            }
            for b in &self.boundary_points {
                worst = worst.max(g.apply_boundary(b).chordal_distance(b));
            }
            for (a, b) in &self.invariant_geodesics {
                let (ga, gb) = (g.apply_boundary(a), g.apply_boundary(b));
                let straight = ga.chordal_distance(a).max(gb.chordal_distance(b));
                let swapped = ga.chordal_distance(b).max(gb.chordal_distance(a));
                worst = worst.max(straight.min(swapped));
            }
        }
        worst
    }
}

/// Common fixed set in the closed ball of a commuting family of isometries.
pub fn common_fixed_set(gens: &[Isometry]) -> Result<FixedSet> {
    let Some(first) = gens.first() else {
        return Err(Error::InvalidRepresentation("no generators".into()));
    };
    let m = first.dim();
    for g in gens {
        if g.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: g.dim(),
            });
        }
    }
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            let ab = gens[i].compose(&gens[j]);
            let ba = gens[j].compose(&gens[i]);
            let scale = gens[i].matrix().amax().max(1.0) * gens[j].matrix().amax().max(1.0);
            let residual = ab.frobenius_distance(&ba) / scale;
            if residual > FIX_TOL {
                return Err(Error::NotAbelian {
                    first: i,
                    second: j,
                    residual,
                });
            }
        }
    }

    let n = m + 1;
    let nontrivial: Vec<&Isometry> = gens
        .iter()
        .filter(|g| g.distance_from_identity() > CLASSIFY_TOL)
        .collect();
    if nontrivial.is_empty() {
        return Ok(FixedSet {
            interior_points: vec![Point::origin(m)],
            boundary_points: Vec::new(),
            invariant_geodesics: Vec::new(),
            description: FixedSetKind::Pointwise,
        });
    }

    let scale = nontrivial
        .iter()
        .map(|g| g.matrix().amax())
        .fold(1.0_f64, f64::max);
    let mut stacked = Matrix::zeros(n * nontrivial.len(), n);
    for (i, g) in nontrivial.iter().enumerate() {
        stacked
            .view_mut((i * n, 0), (n, n))
            .copy_from(&(g.matrix() - Matrix::identity(n, n)));
    }
    let fixed = FixedSubspace::new(null_space(&stacked, CLASSIFY_TOL * scale));

    let result = if fixed.has_timelike() {
        let p = fixed.nearest_interior_point().ok_or(Error::EmptyFixedSet)?;
        let ideal = fixed.ideal_points(&p);
        let geodesics = if ideal.len() == 2 {
            vec![(ideal[0].clone(), ideal[1].clone())]
        } else {
            Vec::new()
        };
        FixedSet {
            interior_points: vec![p],
            boundary_points: ideal,
            invariant_geodesics: geodesics,
            description: FixedSetKind::Axis,
        }
    } else if !fixed.null_directions().is_empty() {
        let boundary: Vec<BoundaryPoint> = fixed
            .null_directions()
            .iter()
            .filter_map(BoundaryPoint::from_null_unchecked)
            .collect();
        FixedSet {
            interior_points: Vec::new(),
            boundary_points: boundary,
            invariant_geodesics: Vec::new(),
            description: FixedSetKind::Ideal,
        }
    } else {
        // no fixed vectors: look for a common axis of the hyperbolic elements
        let hyperbolic = nontrivial
            .iter()
            .map(|g| classify_isometry(g))
            .find(|c| c.kind == IsometryKind::Hyperbolic && c.boundary_fixed.len() == 2)
            .ok_or(Error::EmptyFixedSet)?;
        let (a, b) = (
            hyperbolic.boundary_fixed[0].clone(),
            hyperbolic.boundary_fixed[1].clone(),
        );
        FixedSet {
            interior_points: Vec::new(),
            boundary_points: vec![a.clone(), b.clone()],
            invariant_geodesics: vec![(a, b)],
            description: FixedSetKind::EmptyInterior,
        }
    };

    if result.is_empty() {
        return Err(Error::EmptyFixedSet);
    }
    let residual = result.max_residual(gens);
    if residual > FIX_TOL.max(1e-7 * scale) {
        return Err(Error::EmptyFixedSet);
    }
    Ok(result)
}

/// The image of `A` under the double cover `SL(2,C) -> SO+(3,1)`, acting on
/// Hermitian matrices `[[x0+x3, x1+i x2], [x1-i x2, x0-x3]]` by `X -> A X A*`.
pub fn sl2c_to_lorentz(a: &[[Complex64; 2]; 2]) -> Result<Isometry> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if (det - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::BadDeterminant {
            re: det.re,
            im: det.im,
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let basis: [[[Complex64; 2]; 2]; 4] = [
        [[one, zero], [zero, one]],
        [[zero, one], [one, zero]],
        [[zero, i], [-i, zero]],
        [[one, zero], [zero, -one]],
    ];
    let mul = |x: &[[Complex64; 2]; 2], y: &[[Complex64; 2]; 2]| {
        let mut out = [[zero; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = x[r][0] * y[0][c] + x[r][1] * y[1][c];
            }
        }
        out
    };
    let a_star = [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ];
    let mut l = Matrix::zeros(4, 4);
    for (j, e) in basis.iter().enumerate() {
        let h = mul(&mul(a, e), &a_star);
        l[(0, j)] = 0.5 * (h[0][0].re + h[1][1].re);
        l[(1, j)] = h[0][1].re;
        l[(2, j)] = h[0][1].im;
        l[(3, j)] = 0.5 * (h[0][0].re - h[1][1].re);
    }
    Ok(Isometry::from_matrix_unchecked(l))
}

/// The point of `H^3` corresponding to `(z, t)` in the upper half-space
/// model, compatible with [`sl2c_to_lorentz`]: `(0, 1)` is the basepoint
/// and Möbius maps act by their Lorentz images.
pub fn upper_half_space_point(z: Complex64, t: f64) -> Result<Point> {
    if !(t > 0.0) {
        return Err(Error::NotAPoint(format!("height {t} is not positive")));
    }
    let w = z.norm_sqr() + t * t;
    Point::from_slice(&[
        (1.0 + w) / (2.0 * t),
        z.re / t,
        z.im / t,
        (w - 1.0) / (2.0 * t),
    ])
}

/// The ideal point `z` of the upper half-space model; `None` means `∞`.
pub fn upper_half_space_ideal(z: Option<Complex64>) -> BoundaryPoint {
    match z {
        None => BoundaryPoint::from_direction(&[0.0, 0.0, 1.0]).expect("unit vector"),
        Some(z) => {
            let r2 = z.norm_sqr();
            BoundaryPoint::from_direction(&[2.0 * z.re, 2.0 * z.im, r2 - 1.0])
                .expect("nonzero direction")
        }
    }
}

/// Zero-padding embedding `H^k -> H^n` onto a totally geodesic copy.
pub fn embed_subspace(x: &Point, n: usize) -> Result<Point> {
    Ok(Point {
        coords: pad_vector(x.coords(), n)?,
    })
}

pub fn embed_boundary(theta: &BoundaryPoint, n: usize) -> Result<BoundaryPoint> {
    Ok(BoundaryPoint {
        coords: pad_vector(theta.coords(), n)?,
    })
}

pub fn embed_endpoint(e: &Endpoint, n: usize) -> Result<Endpoint> {
    Ok(match e {
        Endpoint::Interior(p) => Endpoint::Interior(embed_subspace(p, n)?),
        Endpoint::Ideal(p) => Endpoint::Ideal(embed_boundary(p, n)?),
    })
}

fn pad_vector(v: &Vector, n: usize) -> Result<Vector> {
    let k = v.len() - 1;
    if k > n {
        return Err(Error::SubspaceTooLarge { k, n });
    }
    let mut out = Vector::zeros(n + 1);
    out.rows_mut(0, k + 1).copy_from(v);
    Ok(out)
}

/// Block-diagonal extension of an isometry of `H^k` to `H^n`; it preserves
/// the embedded `H^k` and acts trivially on its normal directions.
pub fn include_isometry(g: &Isometry, n: usize) -> Result<Isometry> {
    let k = g.dim();
    if k > n {
        return Err(Error::SubspaceTooLarge { k, n });
    }
    let mut m = Matrix::identity(n + 1, n + 1);
    m.view_mut((0, 0), (k + 1, k + 1)).copy_from(g.matrix());
    Ok(Isometry {
        matrix: m,
        orientation: g.orientation(),
    })
}

/// Distance from a point of `H^n` to the embedded `H^k` (first `k` spatial
/// coordinates): `asinh` of the Euclidean norm of the normal coordinates.
pub fn distance_to_subspace(x: &Point, k: usize) -> f64 {
    let c = x.coords();
    let normal = c.rows(k + 1, c.len() - k - 1).norm();
    normal.asinh()
}

/// Poincaré ball coordinates `x_spatial / (1 + x_0)`.
pub fn to_ball(x: &Point) -> Vector {
    let c = x.coords();
    c.rows(1, c.len() - 1) / (1.0 + c[0])
}

pub fn boundary_to_ball(theta: &BoundaryPoint) -> Vector {
    theta.direction()
}

pub fn endpoint_to_ball(e: &Endpoint) -> Vector {
    match e {
        Endpoint::Interior(p) => to_ball(p),
        Endpoint::Ideal(p) => boundary_to_ball(p),
    }
}

/// Inverse of [`to_ball`] on the open ball.
pub fn from_ball(v: &[f64]) -> Result<Point> {
    let b = Vector::from_column_slice(v);
    let r2 = b.norm_squared();
    if !(r2 < 1.0) {
        return Err(Error::NotAPoint(format!("|v|^2 = {r2} is not < 1")));
    }
    let mut coords = Vector::zeros(v.len() + 1);
    let denom = 1.0 - r2;
    coords[0] = (1.0 + r2) / denom;
    coords.rows_mut(1, v.len()).copy_from(&(b * (2.0 / denom)));
    Ok(Point::normalize_unchecked(coords))
}

/// Inverse of [`boundary_to_ball`] on the unit sphere.
pub fn boundary_from_ball(v: &[f64]) -> Result<BoundaryPoint> {
    let n = Vector::from_column_slice(v).norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NotABoundaryPoint(format!("|v| = {n} is not 1")));
    }
    BoundaryPoint::from_direction(v)
}

/// Euclidean distance in the ball model between a point and the geodesic
/// with the given ideal endpoints, by golden-section search along it.
pub fn ball_distance_to_geodesic(x: &Point, a: &BoundaryPoint, b: &BoundaryPoint) -> f64 {
    let target = to_ball(x);
    // parametrize the geodesic by arclength from its point nearest the basepoint
    let (pa, pb) = (a.coords(), b.coords());
    let s = -mdot(pa, pb);
    if s <= 1e-300 {
        return (target - boundary_to_ball(a)).norm();
    }
    let mid = Point::normalize_unchecked(pa + pb);
    let dir = {
        let v = project_tangent(&mid, &(pa - pb));
        let n = mdot(&v, &v).sqrt();
        v / n
    };
    // ball coordinates straight from the unnormalized combination, which
    // stays accurate far out along the geodesic
    let at = |t: f64| {
        let v = mid.coords() * t.cosh() + &dir * t.sinh();
        let ball = v.rows(1, v.len() - 1) / (1.0 + v[0]);
        (ball - &target).norm()
    };
    let t0 = {
        let v = log_map(&mid, x);
        mdot(&v, &dir)
    };
    let (mut lo, mut hi) = (t0 - 30.0, t0 + 30.0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (at(c), at(d));
    for _ in 0..200 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = at(d);
        }
    }
    let best = fc.min(fd);
    best.min((boundary_to_ball(a) - &target).norm())
        .min((boundary_to_ball(b) - &target).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn minkowski_form_signature() {
        let o = Point::origin(3);
        assert_eq!(minkowski_form(o.coords(), o.coords()).unwrap(), -1.0);
        let theta = Vector::from_column_slice(&[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(minkowski_form(o.coords(), &theta).unwrap(), -1.0);
        let e1 = Vector::from_column_slice(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(minkowski_form(&e1, &e1).unwrap(), 1.0);
        assert!(matches!(
            minkowski_form(&e1, &Vector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let o = Point::origin(3);
        assert_eq!(dist(&o, &o), 0.0);
        let p = Point::from_polar(1.0, &[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(dist(&o, &p), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn busemann_calibration() {
        let o = Point::origin(3);
        let theta = BoundaryPoint::from_direction(&[0.3, -0.4, 0.5]).unwrap();
        assert_abs_diff_eq!(busemann(&o, &theta).0, 0.0, epsilon = 1e-15);
        let ray = GeodesicRay::new(o.clone(), theta.clone()).unwrap();
        let opposite = theta.antipode();
        for t in [1.0, 5.0, 10.0] {
            let (b, grad) = busemann(&ray.point_at(t), &theta);
            assert_abs_diff_eq!(b, -t, epsilon = 1e-12);
            // ambient entries grow like e^t, so the form loses e^{2t} ulps
            assert!((mdot(&grad, &grad) - 1.0).abs() <= 1e-14 * (2.0 * t).exp());
            assert_abs_diff_eq!(busemann(&ray.point_at(t), &opposite).0, t, epsilon = 1e-12);
        }
    }

    #[test]
    fn geodesic_examples() {
        let x = Point::from_polar(0.7, &[1.0, 2.0, 0.0]).unwrap();
        let y = Point::from_polar(1.3, &[-1.0, 0.0, 1.0]).unwrap();
        let d = dist(&x, &y);
        let end = geodesic(&x, &y.clone().into(), d).unwrap();
        assert!(dist(&end, &y) < 1e-10);
        let m1 = geodesic(&x, &y.clone().into(), d / 2.0).unwrap();
        let m2 = geodesic(&y, &x.clone().into(), d / 2.0).unwrap();
        assert!(dist(&m1, &m2) < 1e-12);
        let o = Point::origin(3);
        let theta = BoundaryPoint::from_direction(&[0.0, 1.0, 0.0]).unwrap();
        assert!(dist(&geodesic(&o, &theta.into(), 0.0).unwrap(), &o) < 1e-15);
        assert!(matches!(
            geodesic(&x, &x.clone().into(), 1.0),
            Err(Error::DegenerateDirection(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let id = classify_isometry(&Isometry::identity(3));
        assert_eq!(id.kind, IsometryKind::Elliptic);
        assert_eq!(id.translation_length, 0.0);

        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let parabolic = sl2c_to_lorentz(&[[one, one], [zero, one]]).unwrap();
        let cls = classify_isometry(&parabolic);
        assert_eq!(cls.kind, IsometryKind::Parabolic);
        assert_eq!(cls.boundary_fixed.len(), 1);
        let inf = upper_half_space_ideal(None);
        assert!(cls.boundary_fixed[0].chordal_distance(&inf) < 1e-12);

        let e = 0.5f64.exp();
        let hyp = sl2c_to_lorentz(&[[c(e, 0.0), zero], [zero, c(1.0 / e, 0.0)]]).unwrap();
        let cls = classify_isometry(&hyp);
        assert_eq!(cls.kind, IsometryKind::Hyperbolic);
        assert_abs_diff_eq!(cls.translation_length, 1.0, epsilon = 1e-10);
        // the basepoint lies on the axis from 0 to ∞
        let o = Point::origin(3);
        assert_abs_diff_eq!(dist(&o, &hyp.apply(&o)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sl2c_cover_kernel_and_identity() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let id = sl2c_to_lorentz(&[[one, zero], [zero, one]]).unwrap();
        assert!(id.distance_from_identity() < 1e-15);
        let minus = sl2c_to_lorentz(&[[-one, zero], [zero, -one]]).unwrap();
        assert!(minus.distance_from_identity() < 1e-15);
        assert!(matches!(
            sl2c_to_lorentz(&[[one, one], [one, one]]),
            Err(Error::BadDeterminant { .. })
        ));
    }

    #[test]
    fn upper_half_space_is_compatible_with_cover() {
        let a = [[c(0.3, 0.2), c(1.1, -0.4)], [c(0.0, 0.0), c(0.0, 0.0)]];
        // fill a unit-determinant matrix: a11 = (1 + a01 a10) / a00 with a10 = 0.5i
        let a10 = c(0.0, 0.5);
        let a11 = (c(1.0, 0.0) + a[0][1] * a10) / a[0][0];
        let a = [[a[0][0], a[0][1]], [a10, a11]];
        let g = sl2c_to_lorentz(&a).unwrap();
        let z = c(0.4, -0.7);
        let t = 1.3;
        // Möbius action on the upper half-space via quaternions:
        // (a q + b)(c q + d)^{-1} with q = z + t j
        let (aa, bb, cc, dd) = (a[0][0], a[0][1], a[1][0], a[1][1]);
        let czd = cc * z + dd;
        let denom = czd.norm_sqr() + cc.norm_sqr() * t * t;
        let num = (aa * z + bb) * czd.conj() + aa * cc.conj() * t * t;
        let image = upper_half_space_point(num / denom, t / denom).unwrap();
        let direct = g.apply(&upper_half_space_point(z, t).unwrap());
        assert!(dist(&image, &direct) < 1e-12);
    }

    #[test]
    fn fixed_set_single_parabolic() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let p = sl2c_to_lorentz(&[[one, one], [zero, one]]).unwrap();
        let fs = common_fixed_set(std::slice::from_ref(&p)).unwrap();
        assert_eq!(fs.description, FixedSetKind::Ideal);
        assert_eq!(fs.boundary_points.len(), 1);
        assert!(fs.boundary_points[0].chordal_distance(&upper_half_space_ideal(None)) < 1e-12);
        assert!(fs.max_residual(&[p]) < 1e-9);
    }

    #[test]
    fn fixed_set_rotation_axis() {
        let r = Isometry::rotation(3, 1, 2, 0.7);
        let fs = common_fixed_set(std::slice::from_ref(&r)).unwrap();
        assert_eq!(fs.description, FixedSetKind::Axis);
        assert_eq!(fs.boundary_points.len(), 2);
        assert_eq!(fs.invariant_geodesics.len(), 1);
        for b in &fs.boundary_points {
            assert!(b.direction()[2].abs() > 1.0 - 1e-12);
        }
        assert!(fs.max_residual(&[r]) < 1e-12);
    }

    #[test]
    fn fixed_set_klein_four_group() {
        // two rotations by pi about orthogonal axes through the basepoint
        // commute and fix only their intersection point
        let r1 = Isometry::rotation(3, 2, 3, std::f64::consts::PI);
        let r2 = Isometry::rotation(3, 1, 3, std::f64::consts::PI);
        let fs = common_fixed_set(&[r1.clone(), r2.clone()]).unwrap();
        assert_eq!(fs.description, FixedSetKind::Axis);
        assert!(fs.boundary_points.is_empty());
        assert!(dist(&fs.interior_points[0], &Point::origin(3)) < 1e-12);
    }

    #[test]
    fn fixed_set_rejects_non_commuting() {
        let quarter = std::f64::consts::FRAC_PI_2;
        let r1 = Isometry::rotation(3, 2, 3, quarter);
        let r2 = Isometry::rotation(3, 1, 3, quarter);
        assert!(matches!(
            common_fixed_set(&[r1, r2]),
            Err(Error::NotAbelian {
                first: 0,
                second: 1,
                ..
            })
        ));
    }

    #[test]
    fn fixed_set_common_axis() {
        let g1 = Isometry::translation(3, 1, 0.5);
        let g2 = Isometry::translation(3, 1, 1.2).compose(&Isometry::rotation(3, 2, 3, 0.3));
        let fs = common_fixed_set(&[g1.clone(), g2.clone()]).unwrap();
        assert_eq!(fs.description, FixedSetKind::EmptyInterior);
        assert_eq!(fs.invariant_geodesics.len(), 1);
        let (a, b) = &fs.invariant_geodesics[0];
        assert!(a.direction()[0].abs() > 1.0 - 1e-10);
        assert!(b.direction()[0].abs() > 1.0 - 1e-10);
        assert!(fs.max_residual(&[g1, g2]) < 1e-9);
    }

    #[test]
    fn embedding_examples() {
        let o3 = Point::origin(3);
        assert_eq!(embed_subspace(&o3, 4).unwrap(), Point::origin(4));
        let x = Point::from_polar(0.8, &[1.0, -2.0, 0.5]).unwrap();
        let y = Point::from_polar(1.7, &[0.0, 1.0, 3.0]).unwrap();
        let (ex, ey) = (
            embed_subspace(&x, 4).unwrap(),
            embed_subspace(&y, 4).unwrap(),
        );
        assert_eq!(dist(&ex, &ey), dist(&x, &y));
        let g = Isometry::translation(3, 2, 0.4).compose(&Isometry::rotation(3, 1, 3, 1.1));
        let gi = include_isometry(&g, 4).unwrap();
        assert!(dist(&gi.apply(&ex), &embed_subspace(&g.apply(&x), 4).unwrap()) < 1e-14);
        assert!(matches!(
            embed_subspace(&Point::origin(5), 4),
            Err(Error::SubspaceTooLarge { .. })
        ));
        assert_eq!(distance_to_subspace(&ex, 3), 0.0);
    }

    #[test]
    fn ball_model_examples() {
        let o = Point::origin(3);
        assert_eq!(to_ball(&o).norm(), 0.0);
        let r = 1.7;
        let p = Point::from_polar(r, &[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(to_ball(&p)[0], (r / 2.0).tanh(), epsilon = 1e-15);
        let theta = BoundaryPoint::from_slice(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(boundary_to_ball(&theta).as_slice(), &[1.0, 0.0, 0.0]);
        let back = from_ball(to_ball(&p).as_slice()).unwrap();
        assert!((back.coords() - p.coords()).amax() < 1e-12);
    }

    #[test]
    fn ball_distance_to_axis() {
        let a = BoundaryPoint::from_direction(&[1.0, 0.0, 0.0]).unwrap();
        let b = a.antipode();
        let x = Point::from_polar(0.9, &[0.0, 1.0, 0.0]).unwrap();
        // the axis is a diameter of the ball
        let expected = (0.9f64 / 2.0).tanh();
        assert_abs_diff_eq!(
            ball_distance_to_geodesic(&x, &a, &b),
            expected,
            epsilon = 1e-9
        );
    }
}
