//! Hölder bounds, decay fitting, and the Hilbert-space thresholds.
//!
//! With `γ = k² - 1 < 1` the retraction is Hölder with exponent
//! `α = 1 / (1 - log_γ k)` and constant `c = k + 8 diam(C) / (2 - k²)`.
//! [`check_holder`] tests `d(Rx, Ry) <= c D (d(x, y) / D)^α` with
//! `D = diam(C)`: distances are rescaled to a unit-diameter set before the
//! exponent is applied, and `c` acts in the original units.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{max_or_zero, Exec};
use crate::geometry::{distance, ConvexBody, Vector};
use crate::retraction::RetractionTrace;
use crate::rng::stream_rng;

/// Constants above this are reported as `+∞`.
pub const HOLDER_CONSTANT_CAP: f64 = 1e12;
/// `check_holder` passes when `worst_ratio <= 1 + HOLDER_TOL`.
pub const HOLDER_TOL: f64 = 1e-6;
/// Envelope quantile for the empirical exponent.
pub const HOLDER_QUANTILE: f64 = 0.95;
/// Pairs closer than this (relative to the diameter) are skipped.
pub const DEGENERATE_PAIR: f64 = 1e-12;

fn check_k(k: f64) -> Result<()> {
    if !(k > 1.0 && k < SQRT_2) {
        return Err(Error::OutOfRange {
            name: "k",
            value: k,
            range: "(1, √2)",
        });
    }
    Ok(())
}

fn check_diam(diam: f64) -> Result<()> {
    if !(diam > 0.0 && diam.is_finite()) {
        return Err(Error::OutOfRange {
            name: "diam",
            value: diam,
            range: "(0, ∞)",
        });
    }
    Ok(())
}

/// `α = 1 / (1 - ln k / ln(k² - 1))`.
pub fn holder_exponent(k: f64) -> Result<f64> {
    check_k(k)?;
    let gamma = k * k - 1.0;
    Ok(1.0 / (1.0 - k.ln() / gamma.ln()))
}

/// `c = k + 8 diam / (2 - k²)`, or `+∞` past [`HOLDER_CONSTANT_CAP`].
pub fn holder_constant(k: f64, diam: f64) -> Result<f64> {
    check_k(k)?;
    check_diam(diam)?;
    let c = k + 8.0 * diam / (2.0 - k * k);
    Ok(if c > HOLDER_CONSTANT_CAP { f64::INFINITY } else { c })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub alpha_theory: f64,
    pub c_theory: f64,
    /// Slope of the upper 95% quantile line of `ln d(Rx,Ry)` against
    /// `ln d(x,y)`; `None` with fewer than two usable scales.
    pub alpha_empirical: Option<f64>,
    /// `max d(Rx,Ry) / (c D (d(x,y)/D)^α)`.
    pub worst_ratio: f64,
    pub pairs_tested: usize,
    pub pairs_skipped: usize,
    pub passed: bool,
    /// `(d(x, y), d(Rx, Ry))` for every tested pair.
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

fn is_degenerate(x: &Vector, y: &Vector, diam: f64) -> bool {
    distance(x, y) <= DEGENERATE_PAIR * diam
}

fn unit_direction(rng: &mut impl Rng, d: usize) -> Vector {
    loop {
        let v = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Samples `pairs` pairs from `body` and compares `d(Rx, Ry)` with the
/// theoretical bound. Even-numbered pairs are independent uniform samples;
/// odd ones put `y` at distance about `10^{-u} D` from `x`, `u ∈ [0, 6]`, so
/// small scales are exercised too.
pub fn check_holder<F>(
    retraction: F,
    body: &ConvexBody,
    k: f64,
    pairs: usize,
    seed: u64,
    exec: Exec,
) -> Result<HolderEstimate>
where
    F: Fn(&Vector) -> Result<Vector> + Sync,
{
    let diam = body.diameter();
    let alpha = holder_exponent(k)?;
    let c = holder_constant(k, diam)?;
    let rows = exec.map_indices(pairs, |i| -> Result<Option<(f64, f64)>> {
        let x = body.sample_stream(seed, 2 * i as u64);
        let y = if i % 2 == 0 {
            body.sample_stream(seed, 2 * i as u64 + 1)
        } else {
            let mut rng = stream_rng(seed, 2 * i as u64 + 1);
            let scale = diam * 10f64.powf(-6.0 * rng.random::<f64>());
            let dir = unit_direction(&mut rng, x.len());
            body.project(&(&x + dir * scale))?
        };
        if is_degenerate(&x, &y, diam) {
            return Ok(None);
        }
        Ok(Some((distance(&x, &y), distance(&retraction(&x)?, &retraction(&y)?))))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let samples: Vec<(f64, f64)> = rows.iter().flatten().copied().collect();
    let worst_ratio = max_or_zero(
        samples
            .iter()
            .map(|&(d, dr)| dr / (c * diam * (d / diam).powf(alpha))),
    );
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|&&(_, dr)| dr > DEGENERATE_PAIR * diam)
        .map(|&(d, dr)| ((d / diam).ln(), (dr / diam).ln()))
        .unzip();
    Ok(HolderEstimate {
        alpha_theory: alpha,
        c_theory: c,
        alpha_empirical: quantile_slope(&xs, &ys, HOLDER_QUANTILE),
        worst_ratio,
        pairs_tested: samples.len(),
        pairs_skipped: pairs - samples.len(),
        passed: worst_ratio <= 1.0 + HOLDER_TOL,
        samples,
    })
}

fn check_loss(residuals: &mut [f64], tau: f64) -> f64 {
    let n = residuals.len();
    let idx = ((tau * n as f64).ceil() as usize).clamp(1, n) - 1;
    let (_, &mut q, _) = residuals.select_nth_unstable_by(idx, f64::total_cmp);
    residuals
        .iter()
        .map(|&r| {
            let u = r - q;
            if u >= 0.0 { tau * u } else { (tau - 1.0) * u }
        })
        .sum()
}

/// Slope of the `tau`-quantile regression line of `ys` on `xs`.
///
/// For a fixed slope the best intercept is a `tau`-quantile of the
/// residuals, and the profiled check loss is convex in the slope, so a
/// golden-section search finds the minimizer.
pub fn quantile_slope(xs: &[f64], ys: &[f64], tau: f64) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let lo_x = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_x = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi_x - lo_x > 1e-12) {
        return None;
    }
    let mut buf = vec![0.0; n];
    let mut loss = |b: f64| {
        for (r, (x, y)) in buf.iter_mut().zip(xs.iter().zip(ys)) {
            *r = y - b * x;
        }
        check_loss(&mut buf, tau)
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-5.0, 5.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (loss(c), loss(d));
    for _ in 0..100 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = loss(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = loss(d);
        }
    }
    Some((a + b) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DecayFit {
    Fitted {
        /// `exp(slope)`: the fitted per-step residual ratio.
        ratio: f64,
        slope: f64,
        intercept: f64,
        points: usize,
    },
    NotFittable {
        positive_residuals: usize,
    },
}

impl DecayFit {
    pub fn ratio(&self) -> Option<f64> {
        match self {
            DecayFit::Fitted { ratio, .. } => Some(*ratio),
            DecayFit::NotFittable { .. } => None,
        }
    }
}

/// Residuals this far below the first one are treated as round-off.
pub const DECAY_FLOOR: f64 = 1e-26;
pub const DECAY_MIN_POINTS: usize = 4;

/// Least-squares line through `(n, ln r(x_n))` over the leading run of
/// residuals above `DECAY_FLOOR · r(x_0)`.
pub fn decay_rate_fit(trace: &RetractionTrace) -> DecayFit {
    let r0 = trace.residuals.first().copied().unwrap_or(0.0);
    let floor = r0 * DECAY_FLOOR;
    let run: Vec<f64> = trace
        .residuals
        .iter()
        .copied()
        .take_while(|&r| r > 0.0 && r > floor && r.is_finite())
        .collect();
    if run.len() < DECAY_MIN_POINTS {
        return DecayFit::NotFittable {
            positive_residuals: run.len(),
        };
    }
    let n = run.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = run.iter().map(|r| r.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, r) in run.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (r.ln() - my);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    DecayFit::Fitted {
        ratio: slope.exp(),
        slope,
        intercept: my - slope * mx,
        points: run.len(),
    }
}

/// `δ(ε) = 1 - sqrt(1 - ε²/4)` for Hilbert space.
pub fn hilbert_modulus(eps: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&eps) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "[0, 2]",
        });
    }
    Ok(1.0 - (1.0 - eps * eps / 4.0).max(0.0).sqrt())
}

/// `k (1 - δ(1/k)) - 1`; negative exactly where a uniformly `k`-Lipschitzian
/// map is guaranteed a fixed point by the modulus condition.
pub fn goebel_kirk_gap(k: f64) -> Result<f64> {
    check_positive_k(k)?;
    Ok(k * (1.0 - hilbert_modulus((1.0 / k).min(2.0))?) - 1.0)
}

fn check_positive_k(k: f64) -> Result<()> {
    if !(k >= 0.5 && k.is_finite()) {
        return Err(Error::OutOfRange {
            name: "k",
            value: k,
            range: "[0.5, ∞)",
        });
    }
    Ok(())
}

/// Root of `k (1 - δ(1/k)) = 1` on `(1, 2)`, by bisection.
pub fn goebel_kirk_threshold() -> f64 {
    let f = |k: f64| goebel_kirk_gap(k).unwrap_or(f64::NAN);
    let (mut lo, mut hi) = (1.0, 2.0);
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn lifschitz_threshold() -> f64 {
    SQRT_2
}

/// Smallest `n` with `4 (k² - 1)^n diam² <= tol²`.
pub fn min_iterations(tol: f64, k: f64, diam: f64) -> Result<usize> {
    check_k(k)?;
    check_diam(diam)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            range: "(0, ∞)",
        });
    }
    let gamma = k * k - 1.0;
    let target = tol * tol;
    let lhs = |n: usize| 4.0 * gamma.powi(n as i32) * diam * diam;
    if lhs(0) <= target {
        return Ok(0);
    }
    let mut n = ((target / (4.0 * diam * diam)).ln() / gamma.ln()).ceil().max(0.0) as usize;
    while lhs(n) > target {
        n += 1;
    }
    while n > 0 && lhs(n - 1) <= target {
        n -= 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTable {
    pub goebel_kirk: f64,
    pub lifschitz: f64,
    /// `(ε, δ(ε))`.
    pub modulus: Vec<(f64, f64)>,
}

pub fn threshold_table(eps: &[f64]) -> Result<ThresholdTable> {
    Ok(ThresholdTable {
        goebel_kirk: goebel_kirk_threshold(),
        lifschitz: lifschitz_threshold(),
        modulus: eps
            .iter()
            .map(|&e| Ok((e, hilbert_modulus(e)?)))
            .collect::<Result<_>>()?,
    })
}
