//! Finite-dimensional Hilbert space primitives and bounded closed convex bodies.
//!
//! Points live in `R^d` with the Euclidean inner product. A [`ConvexBody`] is
//! a ball, an axis-aligned box, or an ellipsoid `{c + S u : |u| <= r}`; every
//! body supports exact metric projection, its exact diameter, and seeded
//! sampling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative slack used by membership tests so that projected points test as
/// members after rounding.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

const PROJECTION_TOL: f64 = 1e-12;
const PROJECTION_MAX_ITER: usize = 200;

/// Builds a vector, rejecting NaN and infinite coordinates.
pub fn vector(coords: &[f64]) -> Result<Vector> {
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("vector"));
    }
    Ok(Vector::from_column_slice(coords))
}

pub fn check_dim(expected: usize, v: &Vector) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

/// Euclidean inner product.
pub fn inner(x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(x.len(), y)?;
    Ok(x.dot(y))
}

pub fn distance(x: &Vector, y: &Vector) -> f64 {
    (x - y).norm()
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn square_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidBody(format!("matrix is not {n}x{n}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Row-major nested list into a square matrix.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    if rows.is_empty() {
        return Err(Error::InvalidBody("empty matrix".into()));
    }
    square_matrix(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    Ball {
        center: Vector,
        radius: f64,
    },
    Box {
        lower: Vector,
        upper: Vector,
    },
    /// `{center + shape * u : |u| <= radius}`
    Ellipsoid {
        center: Vector,
        shape: Matrix,
        radius: f64,
    },
}

#[derive(Debug, Clone)]
struct EllipsoidCache {
    shape_inv: Matrix,
    // eigenvectors of shape * shape^T, columns
    axes: Matrix,
    // reciprocals of the eigenvalues of shape * shape^T
    inv_eigs: Vector,
    sigma_max: f64,
    // unit right singular vector for sigma_max
    major_dir: Vector,
}

/// A nonempty bounded closed convex subset of `R^d`.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    kind: BodyKind,
    ellipsoid: Option<EllipsoidCache>,
}

impl PartialEq for ConvexBody {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl ConvexBody {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("ball center"));
        }
        if center.is_empty() {
            return Err(Error::InvalidBody("dimension must be at least 1".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidBody(format!("ball radius {radius} must be positive")));
        }
        Ok(Self {
            kind: BodyKind::Ball { center, radius },
            ellipsoid: None,
        })
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(lower.len(), &upper)?;
        if lower.is_empty() {
            return Err(Error::InvalidBody("dimension must be at least 1".into()));
        }
        if lower.iter().chain(upper.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("box corner"));
        }
        if let Some(i) = (0..lower.len()).find(|&i| lower[i] >= upper[i]) {
            return Err(Error::InvalidBody(format!(
                "box edge {i} has lower {} >= upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self {
            kind: BodyKind::Box { lower, upper },
            ellipsoid: None,
        })
    }

    pub fn ellipsoid(center: Vector, shape: Matrix, radius: f64) -> Result<Self> {
        let d = center.len();
        if d == 0 {
            return Err(Error::InvalidBody("dimension must be at least 1".into()));
        }
        if shape.nrows() != d || shape.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: shape.nrows(),
            });
        }
        if center.iter().chain(shape.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("ellipsoid"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidBody(format!(
                "ellipsoid radius {radius} must be positive"
            )));
        }
        let svd = shape.clone().svd(false, true);
        let sigma_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        let (imax, sigma_max) = svd.singular_values.argmax();
        if sigma_min <= 1e-12 * sigma_max.max(1.0) {
            return Err(Error::InvalidBody("ellipsoid shape matrix is singular".into()));
        }
        let shape_inv = shape.clone().try_inverse().ok_or(Error::Singular)?;
        let v_t = svd.v_t.expect("requested V^T");
        let major_dir = v_t.row(imax).transpose();
        let gram = &shape * shape.transpose();
        let eig = gram.symmetric_eigen();
        let inv_eigs = eig.eigenvalues.map(|l| 1.0 / l);
        Ok(Self {
            kind: BodyKind::Ellipsoid {
                center,
                shape,
                radius,
            },
            ellipsoid: Some(EllipsoidCache {
                shape_inv,
                axes: eig.eigenvectors,
                inv_eigs,
                sigma_max,
                major_dir,
            }),
        })
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        match &self.kind {
            BodyKind::Ball { center, .. } | BodyKind::Ellipsoid { center, .. } => center.len(),
            BodyKind::Box { lower, .. } => lower.len(),
        }
    }

    /// Center of symmetry.
    pub fn center(&self) -> Vector {
        match &self.kind {
            BodyKind::Ball { center, .. } | BodyKind::Ellipsoid { center, .. } => center.clone(),
            BodyKind::Box { lower, upper } => (lower + upper) * 0.5,
        }
    }

    fn cache(&self) -> &EllipsoidCache {
        self.ellipsoid.as_ref().expect("ellipsoid cache")
    }

    /// Membership with a relative slack of [`MEMBERSHIP_SLACK`].
    pub fn contains(&self, x: &Vector) -> bool {
        if x.len() != self.dimension() {
            return false;
        }
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                (x - center).norm() <= radius * (1.0 + MEMBERSHIP_SLACK)
            }
            BodyKind::Box { lower, upper } => (0..x.len()).all(|i| {
                let slack = MEMBERSHIP_SLACK * (upper[i] - lower[i]).max(1.0);
                x[i] >= lower[i] - slack && x[i] <= upper[i] + slack
            }),
            BodyKind::Ellipsoid { center, radius, .. } => {
                let u = &self.cache().shape_inv * (x - center);
                u.norm() <= radius * (1.0 + MEMBERSHIP_SLACK)
            }
        }
    }

    /// Nearest point of the body in the Euclidean norm.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dimension(), x)?;
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("projected point"));
        }
        if self.contains(x) {
            return Ok(x.clone());
        }
        Ok(match &self.kind {
            BodyKind::Ball { center, radius } => {
                let w = x - center;
                let scale = *radius / w.norm();
                center + w * scale
            }
            BodyKind::Box { lower, upper } => {
                Vector::from_fn(x.len(), |i, _| x[i].clamp(lower[i], upper[i]))
            }
            BodyKind::Ellipsoid { center, radius, .. } => {
                center + self.project_centered_ellipsoid(&(x - center), *radius)
            }
        })
    }

    // Minimizes |y - w| subject to y^T Q y <= r^2, Q = (S S^T)^{-1}, for w outside.
    // KKT: y = (I + lam Q)^{-1} w with lam > 0 the root of the secular equation.
    fn project_centered_ellipsoid(&self, w: &Vector, radius: f64) -> Vector {
        let cache = self.cache();
        let wt = cache.axes.transpose() * w;
        let q = &cache.inv_eigs;
        let r2 = radius * radius;
        let secular = |lam: f64| -> (f64, f64) {
            let mut g = -r2;
            let mut dg = 0.0;
            for i in 0..wt.len() {
                let denom = 1.0 + lam * q[i];
                let num = q[i] * wt[i] * wt[i];
                g += num / (denom * denom);
                dg -= 2.0 * q[i] * num / (denom * denom * denom);
            }
            (g, dg)
        };
        let mut lo = 0.0;
        let mut hi = (0..wt.len()).map(|i| wt[i] * wt[i] / q[i]).sum::<f64>().sqrt() / radius;
        let mut lam = 0.0;
        for _ in 0..PROJECTION_MAX_ITER {
            let (g, dg) = secular(lam);
            if g.abs() <= PROJECTION_TOL * r2 {
                break;
            }
            if g > 0.0 {
                lo = lam;
            } else {
                hi = lam;
            }
            let newton = lam - g / dg;
            let next = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - lam).abs() <= f64::EPSILON * lam.max(1.0) {
                lam = next;
                break;
            }
            lam = next;
        }
        let yt = Vector::from_fn(wt.len(), |i, _| wt[i] / (1.0 + lam * q[i]));
        &cache.axes * yt
    }

    /// Exact diameter.
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius, .. } => 2.0 * radius,
            BodyKind::Box { lower, upper } => (upper - lower).norm(),
            BodyKind::Ellipsoid { radius, .. } => 2.0 * radius * self.cache().sigma_max,
        }
    }

    /// Two points of the body realizing the diameter.
    pub fn antipodal_pair(&self) -> (Vector, Vector) {
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                let mut e = Vector::zeros(center.len());
                e[0] = *radius;
                (center - &e, center + e)
            }
            BodyKind::Box { lower, upper } => (lower.clone(), upper.clone()),
            BodyKind::Ellipsoid {
                center,
                shape,
                radius,
            } => {
                let axis = shape * &self.cache().major_dir * *radius;
                (center - &axis, center + axis)
            }
        }
    }

    /// Deterministic pseudo-random point of the body.
    pub fn sample(&self, seed: u64) -> Vector {
        self.sample_stream(seed, 0)
    }

    /// Point from stream `stream` of `seed`; distinct streams are independent.
    pub fn sample_stream(&self, seed: u64, stream: u64) -> Vector {
        let mut rng = stream_rng(seed, stream);
        let d = self.dimension();
        let point = match &self.kind {
            BodyKind::Ball { center, radius } => center + unit_ball_point(&mut rng, d) * *radius,
            BodyKind::Box { lower, upper } => {
                Vector::from_fn(d, |i, _| lower[i] + rng.random::<f64>() * (upper[i] - lower[i]))
            }
            BodyKind::Ellipsoid {
                center,
                shape,
                radius,
            } => center + shape * unit_ball_point(&mut rng, d) * *radius,
        };
        self.project(&point).unwrap_or(point)
    }

    /// Largest `t >= 0` with `base + t * dir` in the body, for `base` inside.
    pub fn extent_along(&self, base: &Vector, dir: &Vector) -> f64 {
        if dir.norm() == 0.0 || !self.contains(base) {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = 2.0 * self.diameter() / dir.norm();
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.contains(&(base + dir * mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Verifies `A(body) ⊆ body` for the linear map `x ↦ A x`.
    pub fn check_invariant_under(&self, a: &Matrix) -> Result<()> {
        let d = self.dimension();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.nrows(),
            });
        }
        let tol = 1e-9;
        match &self.kind {
            BodyKind::Ball { center, .. } | BodyKind::Ellipsoid { center, .. } => {
                let drift = (a * center - center).norm();
                if drift > tol * center.norm().max(1.0) {
                    return Err(Error::BodyNotInvariant(format!(
                        "center moves by {drift:e}"
                    )));
                }
                let conj = match &self.kind {
                    BodyKind::Ellipsoid { shape, .. } => &self.cache().shape_inv * a * shape,
                    _ => a.clone(),
                };
                let norm = spectral_norm(&conj);
                if norm > 1.0 + tol {
                    return Err(Error::BodyNotInvariant(format!(
                        "conjugated map has norm {norm} > 1"
                    )));
                }
                Ok(())
            }
            BodyKind::Box { lower, upper } => {
                if d > 20 {
                    return Err(Error::InvalidBody(
                        "box invariance check limited to dimension 20".into(),
                    ));
                }
                for mask in 0u32..(1 << d) {
                    let vertex =
                        Vector::from_fn(d, |i, _| if mask & (1 << i) != 0 { upper[i] } else { lower[i] });
                    let image = a * &vertex;
                    if !self.contains(&image) {
                        return Err(Error::BodyNotInvariant(format!(
                            "vertex {mask:b} maps outside the box"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

fn unit_ball_point<R: Rng>(rng: &mut R, d: usize) -> Vector {
    loop {
        let g = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 1e-300 {
            let radius = rng.random::<f64>().powf(1.0 / d as f64);
            return g * (radius / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        vector(c).unwrap()
    }

    fn shear_shape() -> Matrix {
        Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0])
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner(&v(&[1.0, 2.0]), &v(&[1.0, 2.0])).unwrap(), 5.0);
        // 0.6*1 + 0.4*(-1)
        assert!((inner(&v(&[0.6, 0.4]), &v(&[1.0, -1.0])).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            inner(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vector_rejects_non_finite() {
        assert!(vector(&[1.0, f64::NAN]).is_err());
        assert!(vector(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn project_examples() {
        let ball = ConvexBody::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(ball.project(&v(&[2.0, 0.0])).unwrap(), v(&[1.0, 0.0]));
        let bx = ConvexBody::boxed(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        assert_eq!(bx.project(&v(&[0.5, 3.0])).unwrap(), v(&[0.5, 1.0]));
        let ell = ConvexBody::ellipsoid(v(&[0.0, 0.0]), shear_shape(), 1.0).unwrap();
        let inside = v(&[0.2, -0.1]);
        assert_eq!(ell.project(&inside).unwrap(), inside);
    }

    #[test]
    fn ellipsoid_projection_satisfies_kkt() {
        // The residual x - y must be normal to the boundary: parallel to Q y.
        let ell = ConvexBody::ellipsoid(v(&[0.5, -0.2]), shear_shape(), 1.0).unwrap();
        let x = v(&[3.0, 2.0]);
        let y = ell.project(&x).unwrap();
        let s_inv = shear_shape().try_inverse().unwrap();
        let u = &s_inv * (&y - v(&[0.5, -0.2]));
        assert!((u.norm() - 1.0).abs() < 1e-10);
        let q = s_inv.transpose() * &s_inv;
        let normal = q * (&y - v(&[0.5, -0.2]));
        let r = &x - &y;
        let cross = r[0] * normal[1] - r[1] * normal[0];
        assert!(cross.abs() < 1e-10 * r.norm() * normal.norm());
        assert!(r.dot(&normal) > 0.0);
    }

    #[test]
    fn diameter_examples() {
        let ball = ConvexBody::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(ball.diameter(), 2.0);
        let bx = ConvexBody::boxed(v(&[0.0, 0.0]), v(&[3.0, 4.0])).unwrap();
        assert_eq!(bx.diameter(), 5.0);
        // 2x2 closed form: sigma_max^2 = (tr + sqrt(tr^2 - 4 det^2)) / 2 of S^T S
        let s = shear_shape();
        let g = s.transpose() * &s;
        let tr = g[(0, 0)] + g[(1, 1)];
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        let sigma = ((tr + (tr * tr - 4.0 * det).sqrt()) / 2.0).sqrt();
        let ell = ConvexBody::ellipsoid(v(&[0.0, 0.0]), s, 1.0).unwrap();
        assert!((ell.diameter() - 2.0 * sigma).abs() < 1e-12);
    }

    #[test]
    fn antipodal_pairs_realize_diameter() {
        let bodies = [
            ConvexBody::ball(v(&[1.0, 2.0, 3.0]), 0.5).unwrap(),
            ConvexBody::boxed(v(&[0.0, -1.0]), v(&[2.0, 3.0])).unwrap(),
            ConvexBody::ellipsoid(v(&[0.1, 0.2]), shear_shape(), 1.5).unwrap(),
        ];
        for b in &bodies {
            let (p, q) = b.antipodal_pair();
            assert!(b.contains(&p) && b.contains(&q));
            assert!((distance(&p, &q) - b.diameter()).abs() < 1e-9);
        }
    }

    #[test]
    fn sample_is_deterministic_and_inside() {
        let ell = ConvexBody::ellipsoid(v(&[0.0, 0.0]), shear_shape(), 1.0).unwrap();
        assert_eq!(ell.sample(42), ell.sample(42));
        assert_ne!(ell.sample(42), ell.sample(43));
        for s in 0..200 {
            let o = ell.sample(s);
            assert_eq!(ell.project(&o).unwrap(), o);
        }
    }

    #[test]
    fn box_sample_mean_monte_carlo() {
        let bx = ConvexBody::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let n = 10_000;
        let mut acc = Vector::zeros(2);
        for i in 0..n {
            acc += bx.sample_stream(9, i);
        }
        acc /= n as f64;
        assert!((acc[0] - 0.5).abs() < 0.05 && (acc[1] - 0.5).abs() < 0.05);
    }

    #[test]
    fn invalid_bodies_rejected() {
        assert!(ConvexBody::ball(v(&[0.0]), 0.0).is_err());
        assert!(ConvexBody::boxed(v(&[0.0, 1.0]), v(&[1.0, 1.0])).is_err());
        let singular = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(ConvexBody::ellipsoid(v(&[0.0, 0.0]), singular, 1.0).is_err());
    }

    #[test]
    fn invariance_checks() {
        let shear = Matrix::from_row_slice(2, 2, &[1.0, -0.6, 0.0, -1.0]);
        let ell = ConvexBody::ellipsoid(v(&[0.0, 0.0]), shear_shape(), 1.0).unwrap();
        ell.check_invariant_under(&shear).unwrap();
        let ball = ConvexBody::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert!(ball.check_invariant_under(&shear).is_err());
        let swap = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let bx = ConvexBody::boxed(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        bx.check_invariant_under(&swap).unwrap();
        assert!(bx.check_invariant_under(&shear).is_err());
    }

    #[test]
    fn extent_along_hits_boundary() {
        let ball = ConvexBody::ball(v(&[0.0, 0.0]), 2.0).unwrap();
        let t = ball.extent_along(&v(&[0.0, 0.0]), &v(&[0.0, 1.0]));
        assert!((t - 2.0).abs() < 1e-9);
    }
}
