// Brute-force evaluation of inf { 1 - |x+y|/2 : |x|, |y| <= 1, |x - y| >= ε }
// in the plane. By rotation invariance x = (r1, 0) and y = r2 (cos θ, sin θ);
// a coarse grid over (r1, r2, θ) is refined around the best cell.

use semiretract::analysis::{goebel_kirk_threshold, hilbert_modulus};

fn objective(eps: f64, r1: f64, r2: f64, th: f64) -> Option<f64> {
    let (yx, yy) = (r2 * th.cos(), r2 * th.sin());
    let gap = ((r1 - yx).powi(2) + yy * yy).sqrt();
    if gap < eps {
        return None;
    }
    Some(1.0 - 0.5 * ((r1 + yx).powi(2) + yy * yy).sqrt())
}

fn brute_modulus(eps: f64) -> f64 {
    let steps = 60;
    let (mut r1_lo, mut r1_hi) = (0.0, 1.0);
    let (mut r2_lo, mut r2_hi) = (0.0, 1.0);
    let (mut th_lo, mut th_hi) = (0.0, std::f64::consts::PI);
    let mut best = f64::INFINITY;
    let mut arg = (1.0, 1.0, 0.0);
    for _ in 0..8 {
        for i in 0..=steps {
            let r1 = r1_lo + (r1_hi - r1_lo) * i as f64 / steps as f64;
            for j in 0..=steps {
                let r2 = r2_lo + (r2_hi - r2_lo) * j as f64 / steps as f64;
                for l in 0..=steps {
                    let th = th_lo + (th_hi - th_lo) * l as f64 / steps as f64;
                    if let Some(v) = objective(eps, r1, r2, th) {
                        if v < best {
                            best = v;
                            arg = (r1, r2, th);
                        }
                    }
                }
            }
        }
        let shrink = |lo: &mut f64, hi: &mut f64, c: f64, min: f64, max: f64| {
            let half = 4.0 * (*hi - *lo) / steps as f64;
            *lo = (c - half).max(min);
            *hi = (c + half).min(max);
        };
        shrink(&mut r1_lo, &mut r1_hi, arg.0, 0.0, 1.0);
        shrink(&mut r2_lo, &mut r2_hi, arg.1, 0.0, 1.0);
        shrink(&mut th_lo, &mut th_hi, arg.2, 0.0, std::f64::consts::PI);
    }
    best
}

#[test]
fn closed_form_matches_brute_force() {
    for i in 1..=7 {
        let eps = 0.25 * i as f64;
        let brute = brute_modulus(eps);
        let closed = hilbert_modulus(eps).unwrap();
        assert!((brute - closed).abs() <= 1e-4, "eps {eps}: brute {brute}, closed {closed}");
    }
}

#[test]
fn threshold_from_brute_modulus() {
    // bisection on k (1 - δ(1/k)) = 1 using the brute-force modulus
    let (mut lo, mut hi) = (1.0, 2.0);
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if mid * (1.0 - brute_modulus(1.0 / mid)) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((0.5 * (lo + hi) - goebel_kirk_threshold()).abs() <= 1e-4);
}
