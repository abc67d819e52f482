//! Seeded random action families used by the batch suites.

use rand::Rng;
use rand_distr::StandardNormal;

use semiretract::action::{bumped_reflection_action, cyclic_linear_action, involution_action, LipschitzAction};
use semiretract::rng::stream_rng;
use semiretract::{ConvexBody, Matrix, Vector};

fn rotation(th: f64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()])
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix, with the sign convention fixed by `diag(R) > 0`.
pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Non-orthogonal involution `A = S diag(1, -1) S^{-1}` in the plane with
/// `S = Q [[1, s], [0, 1]] diag(a, b)`, on the ellipsoid `S(unit disc)`.
/// Draws until the exact constant `|A|` lies in `(1, 1.41)`.
pub fn random_shear_involution(seed: u64, stream: u64) -> LipschitzAction {
    let mut rng = stream_rng(seed, stream);
    loop {
        let s: f64 = rng.random_range(0.03..0.35);
        let conj = rotation(rng.random_range(0.0..std::f64::consts::TAU))
            * Matrix::from_row_slice(2, 2, &[1.0, s, 0.0, 1.0])
            * Matrix::from_diagonal(&Vector::from_vec(vec![
                rng.random_range(0.5..1.5),
                rng.random_range(0.5..1.5),
            ]));
        let inv = conj.clone().try_inverse().expect("shear conjugator is invertible");
        let a = &conj * Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0])) * inv;
        let body = ConvexBody::ellipsoid(Vector::zeros(2), conj, 1.0).expect("valid ellipsoid");
        let action = involution_action(a, body).expect("shear involution");
        let k = action.declared_k();
        if k > 1.0 + 1e-6 && k < 1.41 {
            return action;
        }
    }
}

/// `Q diag(±1) Q^T` on a centered ball, with at least one `-1`.
pub fn random_orthogonal_involution(d: usize, seed: u64, stream: u64) -> LipschitzAction {
    let mut rng = stream_rng(seed, stream);
    let q = random_orthogonal(d, &mut rng);
    let flips = rng.random_range(1..=d);
    let signs = Vector::from_fn(d, |i, _| if i < flips { -1.0 } else { 1.0 });
    let a = &q * Matrix::from_diagonal(&signs) * q.transpose();
    let body = ConvexBody::ball(Vector::zeros(d), rng.random_range(0.5..2.0)).expect("ball");
    involution_action(a, body).expect("orthogonal involution")
}

/// Isometric `Z_n` action `Q D Q^T` on a centered ball, `D` block diagonal
/// with rotations by multiples of `2π/n` and, for even `n`, possibly `-1`.
pub fn random_cyclic_isometry(d: usize, n: usize, seed: u64, stream: u64) -> LipschitzAction {
    let mut rng = stream_rng(seed, stream);
    let q = random_orthogonal(d, &mut rng);
    let mut block = Matrix::identity(d, d);
    let mut i = 0;
    while i + 1 < d {
        let j = rng.random_range(0..n) as f64;
        block
            .view_mut((i, i), (2, 2))
            .copy_from(&rotation(std::f64::consts::TAU * j / n as f64));
        i += 2;
    }
    if i < d && n.is_multiple_of(2) && rng.random_bool(0.5) {
        block[(i, i)] = -1.0;
    }
    let body = ConvexBody::ball(Vector::zeros(d), rng.random_range(0.5..2.0)).expect("ball");
    cyclic_linear_action(q, block, n, body).expect("cyclic isometry")
}

/// Bumped reflection across a random line in the plane, bump in
/// `[0.01, 0.08]` along a random direction.
pub fn random_bumped_reflection(seed: u64, stream: u64) -> LipschitzAction {
    let mut rng = stream_rng(seed, stream);
    let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (c, s) = (th.cos(), th.sin());
    // reflection across the line spanned by (c, s)
    let refl = Matrix::from_row_slice(2, 2, &[c * c - s * s, 2.0 * c * s, 2.0 * c * s, s * s - c * c]);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let dir = Vector::from_vec(vec![phi.cos(), phi.sin()]);
    bumped_reflection_action(refl, rng.random_range(0.01..0.08), dir, rng.random_range(0.5..2.0))
        .expect("bumped reflection")
}
