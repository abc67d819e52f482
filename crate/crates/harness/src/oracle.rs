//! Closed-form reference maps the iteration is compared against.

use semiretract::{Matrix, Vector};

const RANK_TOL: f64 = 1e-10;

/// Projection onto `Fix = ∩ ker(A_g - I)` along `Σ range(A_g - I)` for a
/// linear representation of a finite group, built from the two subspaces
/// directly rather than from any mean. `None` if they do not split `R^d`.
pub fn fixed_space_projection(matrices: &[Matrix]) -> Option<Matrix> {
    let d = matrices.first()?.nrows();
    let identity = Matrix::identity(d, d);
    let mut stacked = Matrix::zeros(matrices.len() * d, d);
    let mut side = Matrix::zeros(d, matrices.len() * d);
    for (i, m) in matrices.iter().enumerate() {
        let diff = m - &identity;
        stacked.view_mut((i * d, 0), (d, d)).copy_from(&diff);
        side.view_mut((0, i * d), (d, d)).copy_from(&diff);
    }

    let kernel = stacked.svd(false, true);
    let v_t = kernel.v_t?;
    let scale = kernel.singular_values.iter().copied().fold(1.0, f64::max);
    let fixed: Vec<Vector> = (0..d)
        .filter(|&i| kernel.singular_values.get(i).is_none_or(|&s| s <= RANK_TOL * scale))
        .map(|i| v_t.row(i).transpose())
        .collect();

    let range = side.svd(true, false);
    let u = range.u?;
    let scale = range.singular_values.iter().copied().fold(1.0, f64::max);
    let moved: Vec<Vector> = (0..d)
        .filter(|&i| range.singular_values[i] > RANK_TOL * scale)
        .map(|i| u.column(i).into_owned())
        .collect();

    if fixed.len() + moved.len() != d {
        return None;
    }
    let basis = Matrix::from_columns(&[fixed.as_slice(), moved.as_slice()].concat());
    let smallest = basis.singular_values().min();
    if smallest <= 1e-8 {
        return None;
    }
    let inv = basis.clone().try_inverse()?;
    let selector = Matrix::from_diagonal(&Vector::from_fn(d, |i, _| if i < fixed.len() { 1.0 } else { 0.0 }));
    Some(basis * selector * inv)
}

/// Iterates of `x ↦ p + c (x - p)` with `c = (1/N) Σ_{n=1..N} q^n`: the
/// window-averaged map of the contraction `T x = p + q (x - p)`.
pub fn contraction_window_orbit(p: &Vector, q: f64, window: usize, x0: &Vector, steps: usize) -> Vec<Vector> {
    let c = (1..=window).map(|n| q.powi(n as i32)).sum::<f64>() / window as f64;
    let mut out = vec![x0.clone()];
    let mut x = x0.clone();
    for _ in 0..steps {
        x = p + (&x - p) * c;
        out.push(x.clone());
    }
    out
}
