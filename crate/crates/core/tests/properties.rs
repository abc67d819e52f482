use proptest::prelude::*;

use semiretract::action::{bumped_reflection_action, involution_action, LipschitzAction};
use semiretract::analysis::{holder_exponent, hilbert_modulus};
use semiretract::geometry::{distance, vector};
use semiretract::retraction::iterate_retraction;
use semiretract::semigroup::{
    examples::random_commutative, invariance_defect, solve_left_invariant_mean, FiniteSemigroup,
};
use semiretract::{ConvexBody, IndexSet, InvariantMean, Matrix, Mean, Vector};

fn body_strategy() -> impl Strategy<Value = ConvexBody> {
    let ball = (prop::collection::vec(-1.0..1.0f64, 3), 0.1..2.0f64)
        .prop_map(|(c, r)| ConvexBody::ball(Vector::from_vec(c), r).unwrap());
    let boxed = (prop::collection::vec(-1.0..1.0f64, 3), prop::collection::vec(0.05..2.0f64, 3))
        .prop_map(|(lo, w)| {
            let lo = Vector::from_vec(lo);
            let hi = &lo + Vector::from_vec(w);
            ConvexBody::boxed(lo, hi).unwrap()
        });
    let ellipsoid = (
        prop::collection::vec(-1.0..1.0f64, 3),
        prop::collection::vec(-1.0..1.0f64, 9),
        0.2..1.5f64,
    )
        .prop_filter_map("singular shape", |(c, s, r)| {
            let shape = Matrix::from_row_slice(3, 3, &s) + Matrix::identity(3, 3) * 1.5;
            ConvexBody::ellipsoid(Vector::from_vec(c), shape, r).ok()
        });
    prop_oneof![ball, boxed, ellipsoid]
}

fn point() -> impl Strategy<Value = Vector> {
    prop::collection::vec(-4.0..4.0f64, 3).prop_map(Vector::from_vec)
}

fn rotation(th: f64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()])
}

// A = Q S diag(1, -1) S^{-1} Q^T with S an upper shear; the body is the
// image of the unit disc under Q S, which A maps onto itself.
fn shear_family(s: f64, th: f64) -> LipschitzAction {
    let q = rotation(th);
    let conj = &q * Matrix::from_row_slice(2, 2, &[1.0, s, 0.0, 1.0]);
    let inv = conj.clone().try_inverse().unwrap();
    let a = &conj * Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]) * inv;
    let body = ConvexBody::ellipsoid(Vector::zeros(2), conj, 1.0).unwrap();
    involution_action(a, body).unwrap()
}

fn exact_mean(action: &LipschitzAction) -> Mean {
    let IndexSet::Finite(s) = action.index() else { unreachable!() };
    match solve_left_invariant_mean(s).unwrap() {
        InvariantMean::Feasible(m) => m,
        InvariantMean::Infeasible(_) => panic!("expected an invariant mean"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_is_idempotent_and_nonexpansive(body in body_strategy(), x in point(), y in point()) {
        let px = body.project(&x).unwrap();
        let py = body.project(&y).unwrap();
        prop_assert!(body.contains(&px));
        prop_assert!((body.project(&px).unwrap() - &px).norm() <= 1e-9);
        prop_assert!(distance(&px, &py) <= distance(&x, &y) + 1e-9);
    }

    #[test]
    fn projection_satisfies_variational_inequality(body in body_strategy(), x in point(), seed in 0u64..1000) {
        // <x - Px, z - Px> <= 0 for every z in the body
        let px = body.project(&x).unwrap();
        for i in 0..8 {
            let z = body.sample_stream(seed, i);
            prop_assert!((&x - &px).dot(&(&z - &px)) <= 1e-7);
        }
    }

    #[test]
    fn parallelogram_law(x in point(), y in point()) {
        let lhs = (&x + &y).norm_squared() + (&x - &y).norm_squared();
        let rhs = 2.0 * (x.norm_squared() + y.norm_squared());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
    }

    #[test]
    fn diameter_bounds_sampled_pairs(body in body_strategy(), seed in 0u64..1000) {
        let diam = body.diameter();
        let (p, q) = body.antipodal_pair();
        prop_assert!((distance(&p, &q) - diam).abs() <= 1e-8 * diam);
        for i in 0..16 {
            let a = body.sample_stream(seed, 2 * i);
            let b = body.sample_stream(seed, 2 * i + 1);
            prop_assert!(body.contains(&a) && body.contains(&b));
            prop_assert!(distance(&a, &b) <= diam + 1e-9);
        }
    }

    #[test]
    fn translation_adjoint_is_consistent(seed in 0u64..10_000, f in prop::collection::vec(-3.0..3.0f64, 8)) {
        let s = random_commutative(seed, 8);
        let n = s.order();
        let mu: Vec<f64> = (0..n).map(|i| ((i * 7 + seed as usize) % 5 + 1) as f64).collect();
        let total: f64 = mu.iter().sum();
        let mu: Vec<f64> = mu.iter().map(|w| w / total).collect();
        let f = &f[..n];
        for t in 0..n {
            let l = s.left_translation(t).unwrap();
            let lhs: f64 = mu.iter().zip(l.apply(f)).map(|(a, b)| a * b).sum();
            let rhs: f64 = l.adjoint_apply(&mu).iter().zip(f).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
            let adj = l.adjoint_apply(&mu);
            prop_assert!((adj.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn commutative_tables_have_invariant_means(seed in 0u64..100_000) {
        let s = random_commutative(seed, 6);
        prop_assert!(s.is_commutative());
        match solve_left_invariant_mean(&s).unwrap() {
            InvariantMean::Feasible(m) => {
                prop_assert!(m.defect() <= 1e-9);
                prop_assert!(m.weights().iter().all(|&w| w >= 0.0));
                prop_assert!((m.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
            InvariantMean::Infeasible(_) => prop_assert!(false, "commutative semigroup without mean"),
        }
    }

    #[test]
    fn reparsed_tables_round_trip(seed in 0u64..10_000) {
        let s = random_commutative(seed, 6);
        let mut text = format!("{}\n", s.order());
        for row in s.table() {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            text.push_str(&cells.join(" "));
            text.push('\n');
        }
        let parsed = FiniteSemigroup::parse_table(&text).unwrap();
        prop_assert_eq!(parsed.table(), s.table());
    }

    #[test]
    fn modulus_is_monotone_and_positive(a in 0.0..2.0f64, b in 0.0..2.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(hilbert_modulus(lo).unwrap() <= hilbert_modulus(hi).unwrap());
        if hi > 0.0 {
            prop_assert!(hilbert_modulus(hi).unwrap() > 0.0);
        }
    }

    #[test]
    fn shear_limit_matches_half_sum(s in 0.02..0.34f64, th in 0.0..std::f64::consts::PI, seed in 0u64..1000) {
        let act = shear_family(s, th);
        prop_assert!(act.declared_k() > 1.0 && act.declared_k() < 1.41);
        let mu = exact_mean(&act);
        let a = &act.matrices().unwrap()[1];
        let half = (Matrix::identity(2, 2) + a) * 0.5;
        let x = act.body().sample(seed);
        let trace = iterate_retraction(&act, &mu, &x, 1e-13, None).unwrap();
        prop_assert!(trace.converged);
        prop_assert!((&trace.limit - &half * &x).norm() <= 1e-10);
    }

    #[test]
    fn residuals_contract_for_bumped_reflections(
        bump in 0.01..0.08f64,
        angle in 0.0..std::f64::consts::TAU,
        seed in 0u64..1000,
    ) {
        let dir = vector(&[angle.cos(), angle.sin()]).unwrap();
        let refl = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let act = bumped_reflection_action(refl, bump, dir, 1.0).unwrap();
        let k = act.declared_k();
        let gamma = k * k - 1.0;
        let diam = act.body().diameter();
        let mu = exact_mean(&act);
        let x0 = act.body().sample(seed);
        let trace = iterate_retraction(&act, &mu, &x0, 1e-12, None).unwrap();
        for w in trace.residuals.windows(2) {
            prop_assert!(w[1] <= gamma * w[0] + 1e-9);
        }
        for (n, g) in trace.gaps.iter().enumerate() {
            prop_assert!(g * g <= 4.0 * gamma.powi(n as i32) * diam * diam + 1e-9);
        }
    }

    #[test]
    fn holder_exponent_meets_selection_inequality(k in 1.01..1.41f64) {
        let alpha = holder_exponent(k).unwrap();
        let gamma = k * k - 1.0;
        prop_assert!(alpha > 0.0 && alpha < 1.0);
        prop_assert!(k <= gamma.powf(1.0 - 1.0 / alpha) + 1e-12);
    }
}

#[test]
fn selection_inequality_on_grid() {
    for i in 0..=400 {
        let k = 1.01 + 0.4 * i as f64 / 400.0;
        let alpha = holder_exponent(k).unwrap();
        let gamma = k * k - 1.0;
        assert!(k <= gamma.powf(1.0 - 1.0 / alpha) + 1e-12, "k = {k}");
    }
}

#[test]
fn random_tables_are_associative_and_mean_defects_agree() {
    for seed in 0..50 {
        let s = random_commutative(seed, 6);
        let index = IndexSet::Finite(s.clone());
        let uniform = vec![1.0 / s.order() as f64; s.order()];
        let mean = Mean::from_weights(&index, uniform).unwrap();
        assert_eq!(invariance_defect(&index, &mean).unwrap(), mean.defect());
    }
}
