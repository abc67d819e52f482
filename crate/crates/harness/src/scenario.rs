//! Turns a config into core objects.

use semiretract::action::{
    bumped_reflection_action, contraction_action, cyclic_linear_action, dist_perturbation_map,
    involution_action, linear_power_action, linear_table_action, ClosedSet, LipschitzAction,
};
use semiretract::geometry::{matrix_from_rows, vector, BodyKind};
use semiretract::semigroup::{folner_mean, solve_left_invariant_mean};
use semiretract::{ConvexBody, FiniteSemigroup, IndexSet, InvariantMean, Matrix, Mean, Vector};

use crate::config::{
    parse_sampled, ActionSpec, BodySpec, ExperimentConfig, IndexChoice, MeanMode, SetSpec,
    StartSpec,
};
use crate::CliError;

fn cfg<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Config(format!("{context}: {e}"))
}

fn mat(rows: &[Vec<f64>], what: &str) -> Result<Matrix, CliError> {
    matrix_from_rows(rows).map_err(cfg(what))
}

fn vec_of(coords: &[f64], what: &str) -> Result<Vector, CliError> {
    vector(coords).map_err(cfg(what))
}

pub fn load_index(config: &ExperimentConfig) -> Result<IndexSet, CliError> {
    Ok(match config.index_choice()? {
        IndexChoice::Cyclic(n) => IndexSet::Finite(FiniteSemigroup::cyclic(n)),
        IndexChoice::Naturals(_) => IndexSet::Naturals,
        IndexChoice::Table(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let s = FiniteSemigroup::parse_table(&text).map_err(cfg("semigroup table"))?;
            IndexSet::Finite(s)
        }
    })
}

pub fn build_mean(config: &ExperimentConfig, index: &IndexSet) -> Result<InvariantMean, CliError> {
    match (config.mean_mode()?, index) {
        (MeanMode::Exact, IndexSet::Finite(s)) => {
            solve_left_invariant_mean(s).map_err(|e| CliError::Run(e.to_string()))
        }
        (MeanMode::Folner(_), IndexSet::Naturals) => {
            let n = config.window()?.expect("naturals have a window");
            Ok(InvariantMean::Feasible(folner_mean(n).map_err(cfg("window mean"))?))
        }
        (MeanMode::Folner(_), IndexSet::Finite(_)) => Err(CliError::Config(
            "folner windows apply to the naturals only".into(),
        )),
        (MeanMode::Weights, index) => {
            let w = config.mean.weights.clone().unwrap_or_default();
            Ok(InvariantMean::Feasible(
                Mean::from_weights(index, w).map_err(cfg("mean weights"))?,
            ))
        }
        (MeanMode::Exact, IndexSet::Naturals) => Err(CliError::Config(
            "the naturals need a window mean".into(),
        )),
    }
}

pub fn build_body(spec: &BodySpec) -> Result<ConvexBody, CliError> {
    let body = match spec {
        BodySpec::Ball { center, radius } => ConvexBody::ball(vec_of(center, "ball center")?, *radius),
        BodySpec::Box { lower, upper } => {
            ConvexBody::boxed(vec_of(lower, "box lower")?, vec_of(upper, "box upper")?)
        }
        BodySpec::Ellipsoid {
            center,
            shape,
            radius,
        } => ConvexBody::ellipsoid(
            vec_of(center, "ellipsoid center")?,
            mat(shape, "ellipsoid shape")?,
            *radius,
        ),
    };
    body.map_err(cfg("body"))
}

fn expect_cyclic(index: &IndexSet, n: usize, family: &str) -> Result<(), CliError> {
    match index {
        IndexSet::Finite(s) if s.order() == n && s.table() == FiniteSemigroup::cyclic(n).table() => {
            Ok(())
        }
        _ => Err(CliError::Config(format!(
            "family {family} acts through Z_{n}; set semigroup.spec = \"Z_{n}\""
        ))),
    }
}

fn expect_naturals(index: &IndexSet, family: &str) -> Result<(), CliError> {
    match index {
        IndexSet::Naturals => Ok(()),
        IndexSet::Finite(_) => Err(CliError::Config(format!(
            "family {family} is indexed by the naturals; use semigroup.spec = \"N-window:N\""
        ))),
    }
}

fn closed_set(spec: &SetSpec) -> Result<ClosedSet, CliError> {
    Ok(match spec {
        SetSpec::Segment { a, b } => ClosedSet::Segment(vec_of(a, "segment end")?, vec_of(b, "segment end")?),
        SetSpec::Points { points } => ClosedSet::Points(
            points
                .iter()
                .map(|p| vec_of(p, "point of F"))
                .collect::<Result<_, _>>()?,
        ),
        SetSpec::Ball { center, radius } => ClosedSet::Body(
            ConvexBody::ball(vec_of(center, "F center")?, *radius).map_err(cfg("F"))?,
        ),
    })
}

fn plane_rotation(order: usize) -> Matrix {
    let th = std::f64::consts::TAU / order as f64;
    Matrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()])
}

pub fn build_action(config: &ExperimentConfig, index: &IndexSet) -> Result<LipschitzAction, CliError> {
    let spec = config
        .action
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs an [action] table".into()))?;
    let body = || -> Result<ConvexBody, CliError> {
        build_body(
            config
                .body
                .as_ref()
                .ok_or_else(|| CliError::Config("this command needs a [body] table".into()))?,
        )
    };
    let action = match spec {
        ActionSpec::Involution { matrix } => {
            expect_cyclic(index, 2, "involution")?;
            involution_action(mat(matrix, "involution matrix")?, body()?)
        }
        ActionSpec::Cyclic {
            order,
            block,
            conjugator,
        } => {
            expect_cyclic(index, *order, "cyclic")?;
            let body = body()?;
            let d = body.dimension();
            let block = match block {
                Some(rows) => mat(rows, "cyclic block")?,
                None if d == 2 => plane_rotation(*order),
                None => {
                    return Err(CliError::Config(
                        "cyclic actions outside the plane need an explicit block".into(),
                    ))
                }
            };
            let conj = match conjugator {
                Some(rows) => mat(rows, "cyclic conjugator")?,
                None => Matrix::identity(d, d),
            };
            cyclic_linear_action(conj, block, *order, body)
        }
        ActionSpec::LinearTable { matrices } => {
            let IndexSet::Finite(s) = index else {
                return Err(CliError::Config("linear_table needs a finite semigroup".into()));
            };
            let ms = matrices
                .iter()
                .map(|m| mat(m, "table matrix"))
                .collect::<Result<Vec<_>, _>>()?;
            linear_table_action(s.clone(), ms, body()?)
        }
        ActionSpec::LinearPower { generator } => {
            expect_naturals(index, "linear_power")?;
            let window = config.window()?.expect("naturals have a window");
            linear_power_action(mat(generator, "generator")?, window, body()?)
        }
        ActionSpec::Contraction { center, ratio } => {
            expect_naturals(index, "contraction")?;
            contraction_action(vec_of(center, "contraction center")?, *ratio, body()?)
        }
        ActionSpec::DistPerturbation { set, anchor, eps } => {
            expect_naturals(index, "dist_perturbation")?;
            dist_perturbation_map(closed_set(set)?, vec_of(anchor, "anchor")?, *eps, body()?)
        }
        ActionSpec::BumpedReflection {
            reflection,
            bump,
            direction,
        } => {
            expect_cyclic(index, 2, "bumped_reflection")?;
            let body = body()?;
            let radius = match body.kind() {
                BodyKind::Ball { center, radius } if center.iter().all(|&c| c == 0.0) => *radius,
                _ => {
                    return Err(CliError::Config(
                        "bumped_reflection acts on a ball centered at the origin".into(),
                    ))
                }
            };
            bumped_reflection_action(
                mat(reflection, "reflection")?,
                *bump,
                vec_of(direction, "bump direction")?,
                radius,
            )
        }
    };
    let action = action.map_err(cfg("action"))?;
    if let Some(d) = config.dimension {
        if d != action.dimension() {
            return Err(CliError::Config(format!(
                "dimension = {d} but the body lives in R^{}",
                action.dimension()
            )));
        }
    }
    Ok(action)
}

pub fn start_point(config: &ExperimentConfig, body: &ConvexBody) -> Result<Vector, CliError> {
    let x = match &config.x0 {
        Some(StartSpec::Point(p)) => vec_of(p, "x0")?,
        Some(StartSpec::Named(name)) => body.sample(parse_sampled(name)?.unwrap_or(config.seed)),
        None => body.sample(config.seed),
    };
    if x.len() != body.dimension() {
        return Err(CliError::Config(format!(
            "x0 has {} coordinates, the body lives in R^{}",
            x.len(),
            body.dimension()
        )));
    }
    if !body.contains(&x) {
        return Err(CliError::Config("x0 lies outside the body".into()));
    }
    Ok(x)
}
