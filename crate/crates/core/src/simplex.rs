//! Dense phase-one simplex for feasibility of `A x = b, x >= 0`.
//!
//! Sized for the small systems produced by invariant-mean problems. Uses
//! Bland's rule, so it cannot cycle. On infeasibility it returns a Farkas
//! certificate `y` with `A^T y <= 0` and `b^T y > 0`, read off the reduced
//! costs of the artificial columns.

use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    /// `y` with `A^T y <= 0` (up to pivot tolerance) and `b^T y > 0`.
    pub multipliers: Vector,
    /// Optimal phase-one objective: the minimal total artificial mass.
    pub infeasibility: f64,
}

impl FarkasCertificate {
    /// Largest entry of `A^T y` (should be `<= 0`) and `b^T y` (should be `> 0`).
    pub fn check(&self, a: &Matrix, b: &Vector) -> (f64, f64) {
        let aty = a.transpose() * &self.multipliers;
        let worst = aty.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (worst, b.dot(&self.multipliers))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Vector),
    Infeasible(FarkasCertificate),
}

struct Tableau {
    rows: usize,
    cols: usize, // n + m + 1 (rhs last)
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let cols = self.cols;
        let p = self.at(pr, pc);
        for c in 0..cols {
            self.data[pr * cols + c] /= p;
        }
        let pivot_row: Vec<f64> = self.data[pr * cols..(pr + 1) * cols].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.at(r, pc);
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * cols..(r + 1) * cols];
            for (x, &pv) in row.iter_mut().zip(&pivot_row) {
                *x -= factor * pv;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }
}

/// Decides feasibility of `A x = b, x >= 0`.
pub fn phase_one(a: &Matrix, b: &Vector) -> Result<Feasibility> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear program"));
    }
    let signs: Vec<f64> = b.iter().map(|&bi| if bi < 0.0 { -1.0 } else { 1.0 }).collect();
    let cols = n + m + 1;
    // rows 0..m constraints, row m reduced costs
    let mut t = Tableau {
        rows: m + 1,
        cols,
        data: vec![0.0; (m + 1) * cols],
        basis: (n..n + m).collect(),
    };
    for i in 0..m {
        for j in 0..n {
            t.data[i * cols + j] = signs[i] * a[(i, j)];
        }
        t.data[i * cols + n + i] = 1.0;
        t.data[i * cols + cols - 1] = signs[i] * b[i];
    }
    // reduced costs c_j - 1^T A_j; the objective entry stores -w
    for j in 0..n {
        t.data[m * cols + j] = -(0..m).map(|i| t.at(i, j)).sum::<f64>();
    }
    t.data[m * cols + cols - 1] = -(0..m).map(|i| t.at(i, cols - 1)).sum::<f64>();

    let scale = 1.0 + b.amax();
    let mut pivots = 0;
    loop {
        let entering = (0..n + m).find(|&j| t.at(m, j) < -PIVOT_EPS * scale);
        let Some(pc) = entering else { break };
        let mut best: Option<(f64, usize, usize)> = None;
        for r in 0..m {
            let coef = t.at(r, pc);
            if coef > PIVOT_EPS {
                let ratio = t.at(r, cols - 1) / coef;
                let better = match best {
                    None => true,
                    Some((br, _, bvar)) => {
                        ratio < br - PIVOT_EPS || (ratio <= br + PIVOT_EPS && t.basis[r] < bvar)
                    }
                };
                if better {
                    best = Some((ratio, r, t.basis[r]));
                }
            }
        }
        let Some((_, pr, _)) = best else {
            return Err(Error::Numerical(
                "phase-one objective reported unbounded".into(),
            ));
        };
        t.pivot(pr, pc);
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::Numerical(format!("no convergence after {MAX_PIVOTS} pivots")));
        }
    }

    let infeasibility = -t.at(m, cols - 1);
    if infeasibility > 1e-9 * scale {
        let multipliers = Vector::from_fn(m, |i, _| signs[i] * (1.0 - t.at(m, n + i)));
        return Ok(Feasibility::Infeasible(FarkasCertificate {
            multipliers,
            infeasibility,
        }));
    }
    let mut x = Vector::zeros(n);
    for (r, &var) in t.basis.iter().enumerate() {
        if var < n {
            x[var] = t.at(r, cols - 1).max(0.0);
        }
    }
    Ok(Feasibility::Feasible(x))
}
