//! The subcommands, as functions from a config to a report.

use std::f64::consts::SQRT_2;

use semiretract::action::{
    check_domain_invariance, check_fixed_set, check_homomorphism, estimate_uniform_lipschitz,
    BoundSource, LipschitzAction,
};
use semiretract::analysis::{
    check_holder, decay_rate_fit, goebel_kirk_threshold, hilbert_modulus, lifschitz_threshold,
    threshold_table, DecayFit, HOLDER_TOL,
};
use semiretract::geometry::distance;
use semiretract::retraction::{
    averaged_map, build_retraction, iterate_retraction, residual, verify_retraction, RetractionTrace,
};
use semiretract::rng::derive_seed;
use semiretract::semigroup::MeanSupport;
use semiretract::simplex::FarkasCertificate;
use semiretract::{Exec, IndexSet, InvariantMean, Mean, Vector};

use crate::config::ExperimentConfig;
use crate::oracle::{contraction_window_orbit, fixed_space_projection};
use crate::report::{CertificateSummary, CriterionResult, MeanSummary, RunReport};
use crate::scenario::{build_action, build_mean, load_index, start_point};
use crate::CliError;

/// Tolerances of the verification suite.
pub const EXACT_MEAN_TOL: f64 = 1e-9;
pub const CONTRACTION_SLACK: f64 = 1e-9;
pub const COLLAPSE_RESIDUAL_TOL: f64 = 1e-10;
pub const COLLAPSE_FIXED_TOL: f64 = 1e-9;
pub const ORACLE_TOL: f64 = 1e-8;
pub const DECAY_FIT_TOL: f64 = 1e-3;
pub const WINDOW_DEFECT_TOL: f64 = 1e-12;
pub const CONTRACTION_LIMIT_TOL: f64 = 2e-3;
pub const FIXED_SET_TOL: f64 = 1e-9;
pub const ACTION_SANITY_TOL: f64 = 1e-9;
/// Window of powers checked for actions of the naturals.
pub const NATURALS_WINDOW: usize = 8;
/// Threshold for treating a declared constant as `<= 1`.
pub const NONEXPANSIVE_SLACK: f64 = 1e-9;

/// δ(ε) is tabulated at these points.
pub const MODULUS_TABLE: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

// Labels for derived seeds, so that each check draws its own stream.
const SEED_TRACES: u64 = 1;
const SEED_RETRACTION: u64 = 2;
const SEED_HOLDER: u64 = 3;
const SEED_LIPSCHITZ: u64 = 4;
const SEED_ORACLE: u64 = 5;
const SEED_FIXED_SET: u64 = 6;

/// A report plus the bulk data written to CSV.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub trace: Option<RetractionTrace>,
    pub mean_weights: Option<Vec<f64>>,
    pub holder_pairs: Option<Vec<(f64, f64)>>,
}

impl Outcome {
    fn new(report: RunReport) -> Self {
        Self {
            report,
            trace: None,
            mean_weights: None,
            holder_pairs: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            0
        } else {
            1
        }
    }
}

fn run_err(e: semiretract::Error) -> CliError {
    CliError::Run(e.to_string())
}

fn certificate_summary(index: &IndexSet, cert: &FarkasCertificate) -> CertificateSummary {
    let IndexSet::Finite(s) = index else {
        unreachable!("certificates come from finite semigroups")
    };
    let (a, b) = semiretract::semigroup::invariance_constraints(s);
    let (max_aty, bty) = cert.check(&a, &b);
    CertificateSummary {
        multipliers: cert.multipliers.iter().copied().collect(),
        max_aty,
        bty,
    }
}

fn mean_summary(index: &IndexSet, mean: &InvariantMean) -> MeanSummary {
    match mean {
        InvariantMean::Feasible(m) => MeanSummary {
            feasible: true,
            weights: m.weights().to_vec(),
            defect: Some(m.defect()),
            exact: m.is_exact(),
            certificate: None,
        },
        InvariantMean::Infeasible(cert) => MeanSummary {
            feasible: false,
            weights: Vec::new(),
            defect: None,
            exact: false,
            certificate: Some(certificate_summary(index, cert)),
        },
    }
}

fn mean_invariance_criterion(mean: &Mean) -> CriterionResult {
    match mean.support() {
        MeanSupport::Finite { .. } => CriterionResult::at_most(
            "mean_invariance",
            "max_s |L_s* mu - mu|_1",
            mean.defect(),
            EXACT_MEAN_TOL,
        ),
        MeanSupport::Window { len } => CriterionResult::at_most(
            "mean_invariance",
            "shift defect of the window mean, against the Folner bound 2/N",
            mean.defect(),
            2.0 / len as f64 + WINDOW_DEFECT_TOL,
        ),
    }
}

/// Builds the mean for `config` and reports feasibility and invariance.
pub fn cmd_mean(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut report = RunReport::new("mean", Some(config.clone()));
    let index = load_index(config)?;
    let mean = report.time("mean", || build_mean(config, &index))?;
    report.mean = Some(mean_summary(&index, &mean));
    let mut out_weights = None;
    match &mean {
        InvariantMean::Feasible(m) => {
            report.push(CriterionResult::flag("mean_feasible", "an invariant mean exists", true));
            report.push(mean_invariance_criterion(m));
            if let MeanSupport::Window { len } = m.support() {
                report.push(CriterionResult::at_most(
                    "window_defect",
                    "|defect - 2/N|",
                    (m.defect() - 2.0 / len as f64).abs(),
                    WINDOW_DEFECT_TOL,
                ));
            }
            out_weights = Some(m.weights().to_vec());
        }
        InvariantMean::Infeasible(_) => {
            let cert = report.mean.as_ref().and_then(|m| m.certificate.clone());
            report.push(CriterionResult::flag("mean_feasible", "an invariant mean exists", false));
            if let Some(c) = cert {
                report.push(CriterionResult::flag(
                    "farkas_certificate",
                    "A^T y <= 0 and b^T y > 0",
                    c.max_aty <= 1e-9 && c.bty > 0.0,
                ));
            }
        }
    }
    let mut outcome = Outcome::new(report);
    outcome.mean_weights = out_weights;
    Ok(outcome)
}

struct Setup {
    action: LipschitzAction,
    mean: Mean,
    x0: Vector,
}

fn setup(config: &ExperimentConfig, report: &mut RunReport) -> Result<Option<Setup>, CliError> {
    let index = load_index(config)?;
    let action = build_action(config, &index)?;
    let mean = build_mean(config, &index)?;
    report.action = Some(action.metadata().clone());
    report.mean = Some(mean_summary(&index, &mean));
    let x0 = start_point(config, action.body())?;
    report.x0 = Some(x0.iter().copied().collect());
    match mean {
        InvariantMean::Feasible(mean) => Ok(Some(Setup { action, mean, x0 })),
        InvariantMean::Infeasible(_) => {
            report.push(CriterionResult::flag("mean_feasible", "an invariant mean exists", false));
            Ok(None)
        }
    }
}

/// Iterates the averaged map from `x0`; with `verify`, adds the retraction
/// identities on sampled points.
pub fn cmd_retract(config: &ExperimentConfig, verify: bool) -> Result<Outcome, CliError> {
    let mut report = RunReport::new("retract", Some(config.clone()));
    let Some(Setup { action, mean, x0 }) = setup(config, &mut report)? else {
        return Ok(Outcome::new(report));
    };
    let trace = report
        .time("iterate", || iterate_retraction(&action, &mean, &x0, config.tol, config.max_iter))
        .map_err(run_err)?;
    report.trace = Some(trace.summary());
    report.push(CriterionResult::flag("converged", "gap fell below tol within max_iter", trace.converged));
    if verify {
        let r = build_retraction(&action, &mean, config.tol, config.max_iter).map_err(run_err)?;
        retraction_criteria(config, &r, &mut report)?;
    }
    let mut outcome = Outcome::new(report);
    outcome.trace = Some(trace);
    outcome.mean_weights = Some(mean.weights().to_vec());
    Ok(outcome)
}

fn retraction_criteria(
    config: &ExperimentConfig,
    r: &semiretract::retraction::Retraction<'_>,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let v = &config.verify;
    let rep = report
        .time("verify_retraction", || {
            verify_retraction(r, v.samples, derive_seed(config.seed, SEED_RETRACTION), v.retraction_tol, Exec::default())
        })
        .map_err(run_err)?;
    let note = format!("allowance {:.3e} over {} points", rep.allowance, rep.samples);
    report.push(
        CriterionResult::at_most("retraction_fixed", "max |T_s(Rx) - Rx|", rep.fixed_point_defect, rep.allowance)
            .with_note(note.clone()),
    );
    report.push(
        CriterionResult::at_most("retraction_idempotent", "max |R(Rx) - Rx|", rep.idempotence_defect, rep.allowance)
            .with_note(note.clone()),
    );
    match rep.identity_on_fix_defect {
        Some(d) => report.push(
            CriterionResult::at_most("retraction_identity_on_fix", "max |Rp - p| over sampled common fixed points", d, rep.allowance)
                .with_note(format!("{} fixed points", rep.fixed_points_tested)),
        ),
        None => report.push(CriterionResult::skipped(
            "retraction_identity_on_fix",
            "max |Rp - p| over sampled common fixed points",
            "family cannot sample its fixed-point set",
        )),
    }
    report.retraction = Some(rep);
    Ok(())
}

fn trace_starts(config: &ExperimentConfig, action: &LipschitzAction, x0: &Vector) -> Vec<Vector> {
    let seed = derive_seed(config.seed, SEED_TRACES);
    std::iter::once(x0.clone())
        .chain((1..config.verify.traces as u64).map(|i| action.body().sample_stream(seed, i)))
        .collect()
}

// Constants within NONEXPANSIVE_SLACK of 1 (rounding in operator norms of
// isometries) count as nonexpansive rather than as k > 1.
fn in_holder_range(k: f64) -> bool {
    k > 1.0 + NONEXPANSIVE_SLACK && k < SQRT_2
}

/// Runs the full suite, or only the Hölder check when `holder_only`.
pub fn cmd_verify(config: &ExperimentConfig, holder_only: bool) -> Result<Outcome, CliError> {
    let command = if holder_only { "holder" } else { "verify" };
    let mut report = RunReport::new(command, Some(config.clone()));
    let Some(Setup { action, mean, x0 }) = setup(config, &mut report)? else {
        return Ok(Outcome::new(report));
    };
    let k = action.declared_k();
    let exact = mean.is_exact();
    let holder_regime = exact && in_holder_range(k);
    let r = build_retraction(&action, &mean, config.tol, config.max_iter).map_err(run_err)?;
    let v = config.verify.clone();
    let mut outcome_trace = None;

    if !holder_only {
        report.push(mean_invariance_criterion(&mean));
        if let MeanSupport::Window { len } = mean.support() {
            if mean.weights().iter().all(|&w| w == mean.weights()[0]) {
                report.push(CriterionResult::at_most(
                    "window_defect",
                    "|defect - 2/N| for the uniform window",
                    (mean.defect() - 2.0 / len as f64).abs(),
                    WINDOW_DEFECT_TOL,
                ));
            }
        }
        action_sanity(config, &action, &mut report)?;

        let trace = report
            .time("iterate", || iterate_retraction(&action, &mean, &x0, config.tol, config.max_iter))
            .map_err(run_err)?;
        report.trace = Some(trace.summary());
        report.push(CriterionResult::flag("converged", "gap fell below tol within max_iter", trace.converged));

        let starts = trace_starts(config, &action, &x0);
        if holder_regime {
            decay_criteria(config, &action, &mean, &starts, &trace, &mut report)?;
        } else {
            let why = if exact { "k outside (1, sqrt 2)" } else { "mean is not exactly invariant" };
            for (id, d) in [
                ("residual_contraction", "r(x_{n+1}) <= (k^2-1) r(x_n)"),
                ("gap_bound", "|x_{n+1}-x_n|^2 <= 4 (k^2-1)^n diam^2"),
                ("decay_rate", "fitted residual ratio <= k^2-1"),
            ] {
                report.push(CriterionResult::skipped(id, d, why));
            }
        }
        if exact && k <= 1.0 + NONEXPANSIVE_SLACK {
            collapse_criteria(&action, &mean, &starts, &mut report)?;
        } else {
            report.push(CriterionResult::skipped(
                "one_step_collapse",
                "x_1 is a common fixed point",
                "needs an exact mean and k <= 1",
            ));
        }

        retraction_criteria(config, &r, &mut report)?;
        oracle_criteria(config, &action, &mean, &r, &mut report)?;
        family_criteria(config, &action, &mean, &trace, &mut report)?;
        outcome_trace = Some(trace);
    }

    let mut holder_pairs = None;
    if holder_regime {
        let est = report
            .time("holder", || {
                check_holder(|x| r.apply(x), action.body(), k, v.pairs, derive_seed(config.seed, SEED_HOLDER), Exec::default())
            })
            .map_err(run_err)?;
        report.push(
            CriterionResult::at_most(
                "holder",
                "max d(Rx,Ry) / (c D (d(x,y)/D)^alpha)",
                est.worst_ratio,
                1.0 + HOLDER_TOL,
            )
            .with_note(format!(
                "alpha = {:.9}, c = {:.6}, {} pairs",
                est.alpha_theory, est.c_theory, est.pairs_tested
            )),
        );
        holder_pairs = Some(est.samples.clone());
        report.holder = Some(est);
    } else {
        report.push(CriterionResult::skipped(
            "holder",
            "Hölder bound of the retraction",
            "needs an exact mean and 1 < k < sqrt 2",
        ));
    }

    let mut outcome = Outcome::new(report);
    outcome.trace = outcome_trace;
    outcome.holder_pairs = holder_pairs;
    outcome.mean_weights = Some(mean.weights().to_vec());
    Ok(outcome)
}

fn action_sanity(config: &ExperimentConfig, action: &LipschitzAction, report: &mut RunReport) -> Result<(), CliError> {
    let n = config.verify.lipschitz_samples;
    let seed = derive_seed(config.seed, SEED_LIPSCHITZ);
    let hom = check_homomorphism(action, n.min(50), seed, NATURALS_WINDOW, Exec::default()).map_err(run_err)?;
    report.push(CriterionResult::at_most("homomorphism", "max |T_{ts}x - T_t T_s x|", hom, ACTION_SANITY_TOL));
    let dom = check_domain_invariance(action, n, seed, NATURALS_WINDOW, Exec::default()).map_err(run_err)?;
    report.push(CriterionResult::at_most("domain_invariance", "max dist(T_t x, C)", dom, ACTION_SANITY_TOL));
    if action.metadata().bound == BoundSource::Empirical {
        report.push(CriterionResult::skipped(
            "lipschitz_bound",
            "sampled Lipschitz ratio <= declared k",
            "declared k is itself a sampled estimate",
        ));
    } else {
        let est = report
            .time("lipschitz", || estimate_uniform_lipschitz(action, n, seed, NATURALS_WINDOW, Exec::default()))
            .map_err(run_err)?;
        let k = action.declared_k();
        report.push(CriterionResult::at_most(
            "lipschitz_bound",
            "sampled Lipschitz ratio <= declared k",
            est,
            k * (1.0 + ACTION_SANITY_TOL),
        ));
    }
    Ok(())
}

fn decay_criteria(
    config: &ExperimentConfig,
    action: &LipschitzAction,
    mean: &Mean,
    starts: &[Vector],
    trace: &RetractionTrace,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let k = action.declared_k();
    let gamma = k * k - 1.0;
    let diam = action.body().diameter();
    let traces = starts
        .iter()
        .map(|x| iterate_retraction(action, mean, x, config.tol, config.max_iter))
        .collect::<Result<Vec<_>, _>>()
        .map_err(run_err)?;
    // worst violation of each inequality, as excess over the bound
    let mut contraction: f64 = f64::NEG_INFINITY;
    let mut gap: f64 = f64::NEG_INFINITY;
    for t in &traces {
        for w in t.residuals.windows(2) {
            contraction = contraction.max(w[1] - gamma * w[0]);
        }
        for (n, g) in t.gaps.iter().enumerate() {
            gap = gap.max(g * g - 4.0 * gamma.powi(n as i32) * diam * diam);
        }
    }
    let note = format!("{} traces, gamma = {gamma:.9}", traces.len());
    report.push(
        CriterionResult::at_most(
            "residual_contraction",
            "max r(x_{n+1}) - (k^2-1) r(x_n)",
            contraction.max(0.0),
            CONTRACTION_SLACK,
        )
        .with_note(note.clone()),
    );
    report.push(
        CriterionResult::at_most(
            "gap_bound",
            "max |x_{n+1}-x_n|^2 - 4 (k^2-1)^n diam^2",
            gap.max(0.0),
            CONTRACTION_SLACK,
        )
        .with_note(note),
    );
    let fit = decay_rate_fit(trace);
    match &fit {
        DecayFit::Fitted { ratio, .. } => report.push(CriterionResult::at_most(
            "decay_rate",
            "fitted residual ratio along the x0 trace",
            *ratio,
            gamma + DECAY_FIT_TOL,
        )),
        DecayFit::NotFittable { positive_residuals } => report.push(CriterionResult::skipped(
            "decay_rate",
            "fitted residual ratio along the x0 trace",
            &format!("only {positive_residuals} positive residuals"),
        )),
    }
    report.decay = Some(fit);
    Ok(())
}

fn collapse_criteria(
    action: &LipschitzAction,
    mean: &Mean,
    starts: &[Vector],
    report: &mut RunReport,
) -> Result<(), CliError> {
    let mut worst_residual: f64 = 0.0;
    let mut worst_move: f64 = 0.0;
    let elements = action.test_elements(NATURALS_WINDOW);
    for x in starts {
        let x1 = averaged_map(action, mean, x).map_err(run_err)?;
        let x1 = action.body().project(&x1).map_err(run_err)?;
        worst_residual = worst_residual.max(residual(action, mean, &x1).map_err(run_err)?);
        for &s in &elements {
            let moved = distance(&action.evaluate(s, &x1).map_err(run_err)?, &x1);
            worst_move = worst_move.max(moved);
        }
    }
    report.push(CriterionResult::at_most(
        "one_step_collapse",
        "max r(x_1)",
        worst_residual,
        COLLAPSE_RESIDUAL_TOL,
    ));
    report.push(CriterionResult::at_most(
        "one_step_fixed",
        "max |T_s x_1 - x_1|",
        worst_move,
        COLLAPSE_FIXED_TOL,
    ));
    Ok(())
}

fn oracle_criteria(
    config: &ExperimentConfig,
    action: &LipschitzAction,
    mean: &Mean,
    r: &semiretract::retraction::Retraction<'_>,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let is_group = matches!(action.index(), IndexSet::Finite(s) if s.is_group());
    let projection = match (action.matrices(), is_group && mean.is_exact()) {
        (Some(ms), true) => fixed_space_projection(ms),
        _ => None,
    };
    let Some(p) = projection else {
        report.push(CriterionResult::skipped(
            "oracle_projection",
            "R agrees with the fixed-space projection",
            "needs a linear group action with an exact mean",
        ));
        return Ok(());
    };
    let seed = derive_seed(config.seed, SEED_ORACLE);
    let n = config.verify.samples;
    let diffs = Exec::default().map_indices(n, |i| -> Result<f64, semiretract::Error> {
        let x = action.body().sample_stream(seed, i as u64);
        Ok(distance(&r.apply(&x)?, &(&p * &x)))
    });
    let worst = diffs
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(run_err)?
        .into_iter()
        .fold(0.0, f64::max);
    report.push(
        CriterionResult::at_most("oracle_projection", "max |Rx - Px|", worst, ORACLE_TOL)
            .with_note(format!("{n} points")),
    );
    Ok(())
}

fn family_criteria(
    config: &ExperimentConfig,
    action: &LipschitzAction,
    mean: &Mean,
    trace: &RetractionTrace,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let meta = action.metadata();
    match meta.family.as_str() {
        "contraction" => {
            let d = action.dimension();
            let p = Vector::from_fn(d, |i, _| meta.params[&format!("center_{i}")]);
            let q = meta.params["ratio"];
            let MeanSupport::Window { len } = mean.support() else {
                return Ok(());
            };
            report.push(CriterionResult::at_most(
                "contraction_limit",
                "|R x0 - p|",
                distance(&trace.limit, &p),
                CONTRACTION_LIMIT_TOL,
            ));
            if mean.weights().iter().all(|&w| w == mean.weights()[0]) {
                let oracle = contraction_window_orbit(&p, q, len, &trace.iterates[0], trace.iterates.len() - 1);
                let worst = trace
                    .iterates
                    .iter()
                    .zip(&oracle)
                    .map(|(a, b)| distance(a, b))
                    .fold(0.0, f64::max);
                report.push(CriterionResult::at_most(
                    "contraction_window_oracle",
                    "max_n |x_n - closed-form window iterate|",
                    worst,
                    ORACLE_TOL,
                ));
            }
        }
        "dist_perturbation" => {
            let rep = check_fixed_set(action, config.verify.samples, derive_seed(config.seed, SEED_FIXED_SET), Exec::default())
                .map_err(run_err)?
                .expect("dist perturbation family");
            report.push(CriterionResult::at_most(
                "fixed_set_contains_f",
                "max |Tp - p| over p in F",
                rep.f_in_fix_defect,
                FIXED_SET_TOL,
            ));
            report.push(CriterionResult::at_least(
                "fixed_set_within_f",
                "min |Tx - x| / (eps dist(x,F)^2) over x outside F",
                rep.displacement_ratio,
                1.0 - FIXED_SET_TOL,
            ));
            report.fixed_set = Some(rep);
        }
        _ => {}
    }
    Ok(())
}

/// The Goebel–Kirk and Lifschitz constants with a table of `δ(ε)`.
pub fn cmd_threshold() -> Result<Outcome, CliError> {
    let mut report = RunReport::new("threshold", None);
    let table = report.time("thresholds", || threshold_table(&MODULUS_TABLE)).map_err(run_err)?;
    report.push(CriterionResult::at_most(
        "goebel_kirk",
        "|root of k(1 - delta(1/k)) = 1 minus sqrt(5)/2|",
        (goebel_kirk_threshold() - 5f64.sqrt() / 2.0).abs(),
        1e-9,
    ));
    report.push(CriterionResult::at_most(
        "lifschitz",
        "|threshold - sqrt 2|",
        (lifschitz_threshold() - SQRT_2).abs(),
        1e-12,
    ));
    report.push(CriterionResult::at_most(
        "modulus_at_1",
        "|delta(1) - (1 - sqrt(3)/2)|",
        (hilbert_modulus(1.0).map_err(run_err)? - (1.0 - 3f64.sqrt() / 2.0)).abs(),
        1e-12,
    ));
    report.push(CriterionResult::at_most(
        "modulus_at_2",
        "|delta(2) - 1|",
        (hilbert_modulus(2.0).map_err(run_err)? - 1.0).abs(),
        0.0,
    ));
    report.thresholds = Some(table);
    Ok(Outcome::new(report))
}
