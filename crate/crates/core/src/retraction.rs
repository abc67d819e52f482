//! The mean-averaged map and its iteration.
//!
//! For a mean `μ` on the index set, the averaged map sends `x` to the
//! barycenter `Σ_t μ_t T_t x`, which is the unique point `x̄` with
//! `⟨x̄, y⟩ = Σ_t μ_t ⟨T_t x, y⟩` for every `y`. Iterating it from `x_0`
//! and passing to the limit gives the retraction `R`. With an exact left
//! invariant mean and `1 < k < √2` the residual
//! `r(x) = Σ_t μ_t |T_t x - x|²` contracts by `k² - 1` per step; for
//! `k <= 1` one step already lands in the common fixed-point set.

use serde::Serialize;

use crate::action::LipschitzAction;
use crate::analysis::min_iterations;
use crate::error::{Error, Result};
use crate::exec::{max_or_zero, Exec};
use crate::geometry::{check_dim, distance, Vector};
use crate::semigroup::{IndexSet, Mean, MeanSupport};

/// Iteration cap used when the decay estimate gives no iteration count
/// (`k <= 1`, or `k >= √2`).
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Elements `1..=NATURALS_CHECK_WINDOW` are checked for actions of the naturals.
pub const NATURALS_CHECK_WINDOW: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RetractionTrace {
    /// `x_0, x_1, …`
    pub iterates: Vec<Vector>,
    /// `|x_{n+1} - x_n|`, one fewer than the iterates.
    pub gaps: Vec<f64>,
    /// `r(x_n)` for every iterate.
    pub residuals: Vec<f64>,
    pub limit: Vector,
    pub converged: bool,
    pub iterations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub converged: bool,
    pub iterations_used: usize,
    pub limit: Vec<f64>,
    pub final_gap: Option<f64>,
    pub initial_residual: f64,
    pub final_residual: f64,
}

impl RetractionTrace {
    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            converged: self.converged,
            iterations_used: self.iterations_used,
            limit: self.limit.iter().copied().collect(),
            final_gap: self.gaps.last().copied(),
            initial_residual: self.residuals.first().copied().unwrap_or(0.0),
            final_residual: self.residuals.last().copied().unwrap_or(0.0),
        }
    }
}

fn check_compatible(action: &LipschitzAction, mean: &Mean) -> Result<()> {
    match (action.index(), mean.support()) {
        (IndexSet::Finite(s), MeanSupport::Finite { order }) if s.order() == order => Ok(()),
        (IndexSet::Naturals, MeanSupport::Window { .. }) => Ok(()),
        _ => Err(Error::IndexMismatch(format!(
            "mean support {:?} does not index this action",
            mean.support()
        ))),
    }
}

fn check_member(action: &LipschitzAction, x: &Vector) -> Result<()> {
    check_dim(action.dimension(), x)?;
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("point"));
    }
    if !action.body().contains(x) {
        return Err(Error::NotInSet("point lies outside the body".into()));
    }
    Ok(())
}

// Barycenter and residual from a single orbit.
fn average_and_residual(action: &LipschitzAction, mean: &Mean, x: &Vector) -> Result<(Vector, f64)> {
    let orbit = action.orbit(x, mean.support())?;
    let mut avg = Vector::zeros(x.len());
    let mut residual = 0.0;
    for (w, y) in mean.weights().iter().zip(&orbit) {
        if *w == 0.0 {
            continue;
        }
        avg.axpy(*w, y, 1.0);
        residual += w * (y - x).norm_squared();
    }
    Ok((avg, residual))
}

/// `Σ_t μ_t T_t x`.
pub fn averaged_map(action: &LipschitzAction, mean: &Mean, x: &Vector) -> Result<Vector> {
    check_compatible(action, mean)?;
    check_member(action, x)?;
    Ok(average_and_residual(action, mean, x)?.0)
}

/// `Σ_t μ_t |T_t x - x|²`.
pub fn residual(action: &LipschitzAction, mean: &Mean, x: &Vector) -> Result<f64> {
    check_compatible(action, mean)?;
    check_member(action, x)?;
    Ok(average_and_residual(action, mean, x)?.1)
}

/// Iteration cap tied to the decay estimate: twice the number of steps after
/// which `4 (k² - 1)^n diam(C)² <= tol²`, or [`DEFAULT_MAX_ITER`] when that
/// estimate does not apply.
pub fn default_max_iter(action: &LipschitzAction, tol: f64) -> usize {
    let k = action.declared_k();
    if k > 1.0 && k < std::f64::consts::SQRT_2 {
        if let Ok(n) = min_iterations(tol, k, action.body().diameter()) {
            return (2 * n).max(1);
        }
    }
    DEFAULT_MAX_ITER
}

/// Runs `x_{n+1} = T̄ x_n` from `x0` until `|x_{n+1} - x_n| <= tol` or
/// `max_iter` steps. Each iterate is projected onto the body to absorb
/// rounding.
pub fn iterate_retraction(
    action: &LipschitzAction,
    mean: &Mean,
    x0: &Vector,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<RetractionTrace> {
    check_compatible(action, mean)?;
    check_member(action, x0)?;
    if !(tol > 0.0) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            range: "(0, ∞)",
        });
    }
    let max_iter = max_iter.unwrap_or_else(|| default_max_iter(action, tol));
    let body = action.body();
    let mut iterates = vec![x0.clone()];
    let mut gaps = Vec::new();
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut x = x0.clone();
    for n in 0..max_iter {
        let (next, r) = average_and_residual(action, mean, &x)?;
        residuals.push(r);
        if !r.is_finite() || next.iter().any(|c| !c.is_finite()) {
            return Err(Error::Diverged { iteration: n + 1 });
        }
        let next = body.project(&next)?;
        let gap = distance(&next, &x);
        gaps.push(gap);
        iterates.push(next.clone());
        x = next;
        if gap <= tol {
            converged = true;
            break;
        }
    }
    let (_, r) = average_and_residual(action, mean, &x)?;
    residuals.push(r);
    Ok(RetractionTrace {
        iterations_used: gaps.len(),
        limit: x,
        iterates,
        gaps,
        residuals,
        converged,
    })
}

/// The limit map `R x = lim T̄^n x` at fixed tolerance.
#[derive(Debug, Clone)]
pub struct Retraction<'a> {
    action: &'a LipschitzAction,
    mean: &'a Mean,
    tol: f64,
    max_iter: usize,
}

pub fn build_retraction<'a>(
    action: &'a LipschitzAction,
    mean: &'a Mean,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<Retraction<'a>> {
    check_compatible(action, mean)?;
    if !(tol > 0.0) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            range: "(0, ∞)",
        });
    }
    Ok(Retraction {
        action,
        mean,
        tol,
        max_iter: max_iter.unwrap_or_else(|| default_max_iter(action, tol)),
    })
}

impl<'a> Retraction<'a> {
    pub fn action(&self) -> &'a LipschitzAction {
        self.action
    }

    pub fn mean(&self) -> &'a Mean {
        self.mean
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    pub fn trace(&self, x: &Vector) -> Result<RetractionTrace> {
        iterate_retraction(self.action, self.mean, x, self.tol, Some(self.max_iter))
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        Ok(self.trace(x)?.limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetractionReport {
    pub samples: usize,
    /// `max |T_s(Rx) - Rx|` over samples and checked elements.
    pub fixed_point_defect: f64,
    /// `max |R(Rx) - Rx|`.
    pub idempotence_defect: f64,
    /// `max |Rp - p|` over sampled common fixed points `p`, when the family
    /// can produce them.
    pub identity_on_fix_defect: Option<f64>,
    pub fixed_points_tested: usize,
    pub mean_defect: f64,
    pub mean_exact: bool,
    /// Threshold all three defects are compared with.
    pub allowance: f64,
    pub passed: bool,
}

/// Checks `T_s ∘ R = R`, `R ∘ R = R`, and `R|Fix = id` on sampled points.
///
/// Window means on the naturals are only approximately invariant, so their
/// allowance is widened to `tol + defect · diam(C)`; every other mean is held
/// to `tol`.
pub fn verify_retraction(
    retraction: &Retraction<'_>,
    samples: usize,
    seed: u64,
    tol: f64,
    exec: Exec,
) -> Result<RetractionReport> {
    let action = retraction.action();
    let mean = retraction.mean();
    let body = action.body();
    let elements = action.test_elements(NATURALS_CHECK_WINDOW);
    let rows = exec.map_indices(samples, |i| -> Result<(f64, f64, Option<f64>)> {
        let x = body.sample_stream(seed, i as u64);
        let rx = retraction.apply(&x)?;
        let mut fixed: f64 = 0.0;
        for &s in &elements {
            fixed = fixed.max(distance(&action.evaluate(s, &rx)?, &rx));
        }
        let idem = distance(&retraction.apply(&rx)?, &rx);
        let on_fix = match action.sample_fixed_point(seed, i as u64) {
            Some(p) => Some(distance(&retraction.apply(&p)?, &p)),
            None => None,
        };
        Ok((fixed, idem, on_fix))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let fixed_point_defect = max_or_zero(rows.iter().map(|r| r.0));
    let idempotence_defect = max_or_zero(rows.iter().map(|r| r.1));
    let on_fix: Vec<f64> = rows.iter().filter_map(|r| r.2).collect();
    let identity_on_fix_defect = (!on_fix.is_empty()).then(|| max_or_zero(on_fix.iter().copied()));
    let allowance = match mean.support() {
        MeanSupport::Window { .. } => tol + mean.defect() * body.diameter(),
        MeanSupport::Finite { .. } => tol,
    };
    let passed = fixed_point_defect <= allowance
        && idempotence_defect <= allowance
        && identity_on_fix_defect.is_none_or(|d| d <= allowance);
    Ok(RetractionReport {
        samples,
        fixed_point_defect,
        idempotence_defect,
        identity_on_fix_defect,
        fixed_points_tested: on_fix.len(),
        mean_defect: mean.defect(),
        mean_exact: mean.is_exact(),
        allowance,
        passed,
    })
}
