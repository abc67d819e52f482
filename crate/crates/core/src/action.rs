//! Uniformly Lipschitzian semigroup actions `{T_t : t ∈ S}` on a convex body.
//!
//! An action is immutable once built. Finite-index families are linear
//! representations of finite groups and a nonlinear conjugated reflection;
//! families indexed by the naturals are generated by a single self-map `T`
//! with `T_t = T^t`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{max_or_zero, Exec};
use crate::geometry::{check_dim, distance, spectral_norm, ConvexBody, Matrix, Vector};
use crate::rng::stream_rng;
use crate::semigroup::{FiniteSemigroup, IndexSet, MeanSupport};

const INVOLUTION_TOL: f64 = 1e-10;
const INVERSE_MAX_ITER: usize = 500;

/// Where the declared uniform Lipschitz constant comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    /// Computed exactly, e.g. a maximum of operator norms over a finite group.
    Exact,
    /// A closed-form upper bound supplied by the family.
    Analytic,
    /// Largest sampled ratio over a window of powers; not a proven bound.
    Empirical,
}

/// A closed subset `F` used by the distance-perturbation family.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedSet {
    Body(ConvexBody),
    Points(Vec<Vector>),
    Segment(Vector, Vector),
}

impl ClosedSet {
    fn dimension(&self) -> usize {
        match self {
            ClosedSet::Body(b) => b.dimension(),
            ClosedSet::Points(p) => p.first().map_or(0, |v| v.len()),
            ClosedSet::Segment(a, _) => a.len(),
        }
    }

    /// Nearest point of the set.
    pub fn nearest(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dimension(), x)?;
        match self {
            ClosedSet::Body(b) => b.project(x),
            ClosedSet::Points(points) => points
                .iter()
                .min_by(|a, b| distance(a, x).total_cmp(&distance(b, x)))
                .cloned()
                .ok_or_else(|| Error::NotInSet("empty point set".into())),
            ClosedSet::Segment(a, b) => {
                let ab = b - a;
                let len2 = ab.norm_squared();
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    ((x - a).dot(&ab) / len2).clamp(0.0, 1.0)
                };
                Ok(a + ab * t)
            }
        }
    }

    pub fn distance(&self, x: &Vector) -> Result<f64> {
        Ok(distance(x, &self.nearest(x)?))
    }

    pub fn sample(&self, seed: u64, stream: u64) -> Vector {
        match self {
            ClosedSet::Body(b) => b.sample_stream(seed, stream),
            ClosedSet::Points(points) => {
                let i = stream_rng(seed, stream).random_range(0..points.len());
                points[i].clone()
            }
            ClosedSet::Segment(a, b) => {
                let t: f64 = stream_rng(seed, stream).random();
                a + (b - a) * t
            }
        }
    }

    fn inside(&self, body: &ConvexBody) -> bool {
        match self {
            ClosedSet::Body(inner) => {
                let (p, q) = inner.antipodal_pair();
                body.contains(&p)
                    && body.contains(&q)
                    && (0..64).all(|i| body.contains(&inner.sample_stream(0, i)))
            }
            ClosedSet::Points(points) => points.iter().all(|p| body.contains(p)),
            ClosedSet::Segment(a, b) => body.contains(a) && body.contains(b),
        }
    }
}

type CustomMap = Arc<dyn Fn(usize, &Vector) -> Vector + Send + Sync>;

#[derive(Clone)]
enum Family {
    /// One matrix per element of a finite semigroup.
    Linear { matrices: Vec<Matrix> },
    /// `T^t` for a linear generator, powers `0..=window` tabulated.
    LinearPower { powers: Vec<Matrix> },
    Contraction { center: Vector, ratio: f64 },
    DistPerturbation { set: ClosedSet, anchor: Vector, eps: f64 },
    /// `T_a = φ^{-1} ∘ A ∘ φ` on a centered ball, `φ(x) = x + β r (1 - |x|²/r²) v`.
    BumpedReflection {
        reflection: Matrix,
        bump: f64,
        direction: Vector,
        radius: f64,
    },
    Custom { map: CustomMap },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Linear { matrices } => f.debug_struct("Linear").field("matrices", matrices).finish(),
            Family::LinearPower { powers } => f.debug_struct("LinearPower").field("window", &(powers.len() - 1)).finish(),
            Family::Contraction { center, ratio } => f
                .debug_struct("Contraction")
                .field("center", center)
                .field("ratio", ratio)
                .finish(),
            Family::DistPerturbation { set, anchor, eps } => f
                .debug_struct("DistPerturbation")
                .field("set", set)
                .field("anchor", anchor)
                .field("eps", eps)
                .finish(),
            Family::BumpedReflection { bump, .. } => {
                f.debug_struct("BumpedReflection").field("bump", bump).finish()
            }
            Family::Custom { .. } => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionMetadata {
    pub family: String,
    pub declared_k: f64,
    pub bound: BoundSource,
    pub params: BTreeMap<String, f64>,
}

/// A uniformly `k`-Lipschitzian action of a semigroup on a convex body.
#[derive(Debug, Clone)]
pub struct LipschitzAction {
    index: IndexSet,
    body: ConvexBody,
    family: Family,
    metadata: ActionMetadata,
}

fn metadata(family: &str, k: f64, bound: BoundSource, params: &[(&str, f64)]) -> ActionMetadata {
    ActionMetadata {
        family: family.to_string(),
        declared_k: k,
        bound,
        params: params.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
    }
}

fn check_square(d: usize, m: &Matrix) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.nrows(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    Ok(())
}

/// Action of `Z_2 = {e, a}` by `T_e = I`, `T_a = A` for an involution `A`.
pub fn involution_action(a: Matrix, body: ConvexBody) -> Result<LipschitzAction> {
    let d = body.dimension();
    check_square(d, &a)?;
    let defect = spectral_norm(&(&a * &a - Matrix::identity(d, d)));
    if defect > INVOLUTION_TOL {
        return Err(Error::NotInvolutive(defect));
    }
    body.check_invariant_under(&a)?;
    let k = spectral_norm(&a).max(1.0);
    Ok(LipschitzAction {
        index: IndexSet::Finite(FiniteSemigroup::cyclic(2)),
        body,
        family: Family::Linear {
            matrices: vec![Matrix::identity(d, d), a],
        },
        metadata: metadata("involution", k, BoundSource::Exact, &[]),
    })
}

/// Action of `Z_n` by powers of `A = S D S^{-1}` where `D^n = I`.
///
/// `D` is typically block diagonal with rotations by multiples of `2π/n` and
/// `±1` entries, so that the image of a centered ball under `S` is invariant.
pub fn cyclic_linear_action(
    conjugator: Matrix,
    block: Matrix,
    n: usize,
    body: ConvexBody,
) -> Result<LipschitzAction> {
    let d = body.dimension();
    check_square(d, &conjugator)?;
    check_square(d, &block)?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "period",
            value: 0.0,
            range: ">= 1",
        });
    }
    let identity = Matrix::identity(d, d);
    let residual = spectral_norm(&(block.pow(n as u32) - &identity));
    if residual > INVOLUTION_TOL {
        return Err(Error::NotPeriodic { period: n, residual });
    }
    let inv = conjugator.clone().try_inverse().ok_or(Error::Singular)?;
    let a = &conjugator * &block * inv;
    body.check_invariant_under(&a)?;
    let mut matrices = Vec::with_capacity(n);
    let mut power = identity;
    for _ in 0..n {
        matrices.push(power.clone());
        power = &a * power;
    }
    let k = matrices.iter().map(spectral_norm).fold(0.0, f64::max);
    Ok(LipschitzAction {
        index: IndexSet::Finite(FiniteSemigroup::cyclic(n)),
        body,
        family: Family::Linear { matrices },
        metadata: metadata("cyclic", k, BoundSource::Exact, &[("period", n as f64)]),
    })
}

/// Linear action with one matrix per element of an arbitrary finite
/// semigroup. The homomorphism property is not enforced here; use
/// [`check_homomorphism`].
pub fn linear_table_action(
    semigroup: FiniteSemigroup,
    matrices: Vec<Matrix>,
    body: ConvexBody,
) -> Result<LipschitzAction> {
    let d = body.dimension();
    if matrices.len() != semigroup.order() {
        return Err(Error::IndexMismatch(format!(
            "{} matrices for a semigroup of order {}",
            matrices.len(),
            semigroup.order()
        )));
    }
    for m in &matrices {
        check_square(d, m)?;
        body.check_invariant_under(m)?;
    }
    let k = matrices.iter().map(spectral_norm).fold(0.0, f64::max);
    Ok(LipschitzAction {
        index: IndexSet::Finite(semigroup),
        body,
        family: Family::Linear { matrices },
        metadata: metadata("linear_table", k, BoundSource::Exact, &[]),
    })
}

/// Action of the naturals by powers of a linear map, with `A^0..=A^window`
/// tabulated at construction.
///
/// The declared constant is the largest norm over the tabulated powers; it is
/// exact when some tabulated power is the identity.
pub fn linear_power_action(generator: Matrix, window: usize, body: ConvexBody) -> Result<LipschitzAction> {
    let d = body.dimension();
    check_square(d, &generator)?;
    if window == 0 {
        return Err(Error::OutOfRange {
            name: "power window",
            value: 0.0,
            range: ">= 1",
        });
    }
    body.check_invariant_under(&generator)?;
    let identity = Matrix::identity(d, d);
    let mut powers = vec![identity.clone()];
    for m in 1..=window {
        powers.push(&generator * &powers[m - 1]);
    }
    let k = powers[1..].iter().map(spectral_norm).fold(0.0, f64::max);
    let periodic = powers[1..]
        .iter()
        .any(|p| spectral_norm(&(p - &identity)) <= INVOLUTION_TOL);
    let bound = if periodic { BoundSource::Exact } else { BoundSource::Empirical };
    Ok(LipschitzAction {
        index: IndexSet::Naturals,
        body,
        family: Family::LinearPower { powers },
        metadata: metadata("linear_power", k, bound, &[("window", window as f64)]),
    })
}

/// `T x = p + q (x - p)`, so `T^t x = p + q^t (x - p)`; uniformly
/// `q`-Lipschitzian with the single fixed point `p`.
pub fn contraction_action(center: Vector, ratio: f64, body: ConvexBody) -> Result<LipschitzAction> {
    check_dim(body.dimension(), &center)?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::OutOfRange {
            name: "contraction ratio",
            value: ratio,
            range: "(0, 1)",
        });
    }
    if !body.contains(&center) {
        return Err(Error::NotInSet("contraction center outside the body".into()));
    }
    let mut meta = metadata("contraction", ratio, BoundSource::Analytic, &[("ratio", ratio)]);
    for (i, c) in center.iter().enumerate() {
        meta.params.insert(format!("center_{i}"), *c);
    }
    Ok(LipschitzAction {
        index: IndexSet::Naturals,
        body,
        family: Family::Contraction { center, ratio },
        metadata: meta,
    })
}

/// Window and pair count of the empirical constant reported for the
/// distance-perturbation family.
pub const DIST_PERTURBATION_K_WINDOW: usize = 32;
pub const DIST_PERTURBATION_K_PAIRS: usize = 256;

/// `T x = x + ε dist(x, F) (z - x)` with `z ∈ F`; its fixed-point set is
/// exactly `F`. The uniform constant of `{T^t}` has no closed form, so the
/// declared constant is the empirical supremum over a power window.
pub fn dist_perturbation_map(
    set: ClosedSet,
    anchor: Vector,
    eps: f64,
    body: ConvexBody,
) -> Result<LipschitzAction> {
    let d = body.dimension();
    check_dim(d, &anchor)?;
    if set.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: set.dimension(),
        });
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, ∞)",
        });
    }
    if set.distance(&anchor)? > 1e-12 {
        return Err(Error::NotInSet("anchor z is not in F".into()));
    }
    if !set.inside(&body) {
        return Err(Error::NotInSet("F is not contained in the body".into()));
    }
    let diam = body.diameter();
    if eps * diam > 1.0 {
        // T x is a convex combination of x and z only while ε dist(x, F) <= 1
        return Err(Error::OutOfRange {
            name: "eps * diam C",
            value: eps * diam,
            range: "(0, 1]",
        });
    }
    let mut action = LipschitzAction {
        index: IndexSet::Naturals,
        body,
        family: Family::DistPerturbation { set, anchor, eps },
        metadata: metadata(
            "dist_perturbation",
            f64::NAN,
            BoundSource::Empirical,
            &[
                ("eps", eps),
                ("single_step_bound", 1.0 + 2.0 * eps * diam),
                ("k_window", DIST_PERTURBATION_K_WINDOW as f64),
            ],
        ),
    };
    let k = estimate_uniform_lipschitz(
        &action,
        DIST_PERTURBATION_K_PAIRS,
        0,
        DIST_PERTURBATION_K_WINDOW,
        Exec::Sequential,
    )?;
    action.metadata.declared_k = k.max(1.0);
    Ok(action)
}

/// Nonlinear involution `T_a = φ^{-1} ∘ A ∘ φ` on the ball of radius `r`
/// centered at the origin, where `A` is an orthogonal involution and
/// `φ(x) = x + β r (1 - |x|²/r²) v` fixes the sphere.
///
/// `Lip(φ) <= 1 + 2β` and `Lip(φ^{-1}) <= 1/(1 - 2β)`, so the action is
/// uniformly `(1 + 2β)/(1 - 2β)`-Lipschitzian; this stays below `√2` for
/// `β < 0.0858`.
pub fn bumped_reflection_action(
    reflection: Matrix,
    bump: f64,
    direction: Vector,
    radius: f64,
) -> Result<LipschitzAction> {
    let d = direction.len();
    let body = ConvexBody::ball(Vector::zeros(d), radius)?;
    check_square(d, &reflection)?;
    let identity = Matrix::identity(d, d);
    let defect = spectral_norm(&(&reflection * &reflection - &identity));
    if defect > INVOLUTION_TOL {
        return Err(Error::NotInvolutive(defect));
    }
    body.check_invariant_under(&reflection)?;
    if !(bump > 0.0 && bump < 0.5) {
        return Err(Error::OutOfRange {
            name: "bump",
            value: bump,
            range: "(0, 0.5)",
        });
    }
    let norm = direction.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::OutOfRange {
            name: "bump direction norm",
            value: norm,
            range: "(0, ∞)",
        });
    }
    let k = (1.0 + 2.0 * bump) / (1.0 - 2.0 * bump);
    Ok(LipschitzAction {
        index: IndexSet::Finite(FiniteSemigroup::cyclic(2)),
        body,
        family: Family::BumpedReflection {
            reflection,
            bump,
            direction: direction / norm,
            radius,
        },
        metadata: metadata(
            "bumped_reflection",
            k,
            BoundSource::Analytic,
            &[("bump", bump), ("radius", radius)],
        ),
    })
}

/// Arbitrary action of a finite semigroup given by a closure, with a
/// caller-supplied constant. Nothing is checked.
pub fn custom_action<F>(
    semigroup: FiniteSemigroup,
    body: ConvexBody,
    declared_k: f64,
    map: F,
) -> LipschitzAction
where
    F: Fn(usize, &Vector) -> Vector + Send + Sync + 'static,
{
    LipschitzAction {
        index: IndexSet::Finite(semigroup),
        body,
        family: Family::Custom { map: Arc::new(map) },
        metadata: metadata("custom", declared_k, BoundSource::Analytic, &[]),
    }
}

impl LipschitzAction {
    pub fn index(&self) -> &IndexSet {
        &self.index
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn dimension(&self) -> usize {
        self.body.dimension()
    }

    pub fn declared_k(&self) -> f64 {
        self.metadata.declared_k
    }

    pub fn metadata(&self) -> &ActionMetadata {
        &self.metadata
    }

    /// The matrices of a finite linear action, `None` otherwise.
    pub fn matrices(&self) -> Option<&[Matrix]> {
        match &self.family {
            Family::Linear { matrices } => Some(matrices),
            _ => None,
        }
    }

    fn check_element(&self, t: usize) -> Result<()> {
        match &self.index {
            IndexSet::Finite(s) if t >= s.order() => Err(Error::UnknownElement(t)),
            _ => Ok(()),
        }
    }

    /// `T_t x`. For the naturals `t` is the exponent.
    pub fn evaluate(&self, t: usize, x: &Vector) -> Result<Vector> {
        check_dim(self.dimension(), x)?;
        self.check_element(t)?;
        Ok(self.evaluate_unchecked(t, x))
    }

    fn evaluate_unchecked(&self, t: usize, x: &Vector) -> Vector {
        match &self.family {
            Family::Linear { matrices } => &matrices[t] * x,
            Family::LinearPower { powers } => {
                let step = powers.len() - 1;
                let mut y = x.clone();
                let mut remaining = t;
                while remaining > 0 {
                    let e = remaining.min(step);
                    y = &powers[e] * y;
                    remaining -= e;
                }
                y
            }
            Family::Contraction { center, ratio } => {
                let factor = ratio.powi(t.min(i32::MAX as usize) as i32);
                center + (x - center) * factor
            }
            Family::DistPerturbation { .. } => {
                let mut y = x.clone();
                for _ in 0..t {
                    y = self.perturbation_step(&y);
                }
                y
            }
            Family::BumpedReflection {
                reflection,
                bump,
                direction,
                radius,
            } => {
                if t == 0 {
                    return x.clone();
                }
                let lifted = bump_forward(x, *bump, direction, *radius);
                bump_inverse(&(reflection * lifted), *bump, direction, *radius)
            }
            Family::Custom { map } => map(t, x),
        }
    }

    fn perturbation_step(&self, x: &Vector) -> Vector {
        let Family::DistPerturbation { set, anchor, eps } = &self.family else {
            unreachable!()
        };
        let dist = set.distance(x).unwrap_or(f64::NAN);
        x + (anchor - x) * (eps * dist)
    }

    /// Images `T_t x` for every slot of a mean with the given support, in
    /// slot order. Powers of the naturals are built incrementally.
    pub fn orbit(&self, x: &Vector, support: MeanSupport) -> Result<Vec<Vector>> {
        check_dim(self.dimension(), x)?;
        match (&self.index, support) {
            (IndexSet::Finite(s), MeanSupport::Finite { order }) if s.order() == order => {
                Ok((0..order).map(|t| self.evaluate_unchecked(t, x)).collect())
            }
            (IndexSet::Naturals, MeanSupport::Window { len }) => Ok(self.power_orbit(x, len)),
            _ => Err(Error::IndexMismatch(format!(
                "mean support {support:?} does not index this action"
            ))),
        }
    }

    // T^1 x, …, T^len x
    fn power_orbit(&self, x: &Vector, len: usize) -> Vec<Vector> {
        match &self.family {
            Family::DistPerturbation { .. } | Family::LinearPower { .. } => {
                let mut out = Vec::with_capacity(len);
                let mut y = x.clone();
                for _ in 0..len {
                    y = self.evaluate_unchecked(1, &y);
                    out.push(y.clone());
                }
                out
            }
            _ => (1..=len).map(|t| self.evaluate_unchecked(t, x)).collect(),
        }
    }

    /// Elements used by sampled checks: all of a finite semigroup, or
    /// `1..=window` for the naturals.
    pub fn test_elements(&self, window: usize) -> Vec<usize> {
        match &self.index {
            IndexSet::Finite(s) => (0..s.order()).collect(),
            IndexSet::Naturals => (1..=window).collect(),
        }
    }

    /// A point of the common fixed-point set drawn from the family's own
    /// description of that set, independent of any averaging.
    pub fn sample_fixed_point(&self, seed: u64, stream: u64) -> Option<Vector> {
        match &self.family {
            Family::Linear { matrices } => fixed_subspace_point(&self.body, matrices, seed, stream),
            Family::LinearPower { powers } => {
                fixed_subspace_point(&self.body, &powers[1..2], seed, stream)
            }
            Family::Contraction { center, .. } => Some(center.clone()),
            Family::DistPerturbation { set, .. } => Some(set.sample(seed, stream)),
            Family::BumpedReflection {
                reflection,
                bump,
                direction,
                radius,
            } => {
                let flat = fixed_subspace_point(&self.body, std::slice::from_ref(reflection), seed, stream)?;
                Some(bump_inverse(&flat, *bump, direction, *radius))
            }
            Family::Custom { .. } => None,
        }
    }

    /// Membership test for the common fixed-point set when the family knows
    /// it in closed form: returns the distance from `x` to that set.
    pub fn distance_to_fixed_set(&self, x: &Vector) -> Option<f64> {
        match &self.family {
            Family::DistPerturbation { set, .. } => set.distance(x).ok(),
            Family::Contraction { center, .. } => Some(distance(x, center)),
            _ => None,
        }
    }
}

fn bump_forward(x: &Vector, bump: f64, direction: &Vector, radius: f64) -> Vector {
    let s = 1.0 - x.norm_squared() / (radius * radius);
    x + direction * (bump * radius * s)
}

// Solves y = φ(x) for x by the contraction x ↦ y - β r (1 - |x|²/r²) v.
fn bump_inverse(y: &Vector, bump: f64, direction: &Vector, radius: f64) -> Vector {
    let mut x = y.clone();
    for _ in 0..INVERSE_MAX_ITER {
        let s = 1.0 - x.norm_squared() / (radius * radius);
        let next = y - direction * (bump * radius * s);
        let step = (&next - &x).norm();
        x = next;
        if step <= 1e-17 * radius {
            break;
        }
    }
    x
}

// Point of {x : A_t x = x for all t} ∩ body along a random direction of the
// common eigenspace for eigenvalue 1, through the origin.
fn fixed_subspace_point(body: &ConvexBody, matrices: &[Matrix], seed: u64, stream: u64) -> Option<Vector> {
    let d = body.dimension();
    let origin = Vector::zeros(d);
    if !body.contains(&origin) {
        return None;
    }
    let identity = Matrix::identity(d, d);
    let mut stacked = Matrix::zeros(matrices.len() * d, d);
    for (i, m) in matrices.iter().enumerate() {
        stacked.view_mut((i * d, 0), (d, d)).copy_from(&(m - &identity));
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t?;
    let scale = svd.singular_values.iter().copied().fold(1.0, f64::max);
    let mut rng = stream_rng(seed, stream);
    let mut dir = Vector::zeros(d);
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma <= 1e-10 * scale {
            let c: f64 = rng.sample(StandardNormal);
            dir += v_t.row(i).transpose() * c;
        }
    }
    // Rank-deficient SVDs of tall matrices report d singular values; any
    // missing ones correspond to zero.
    if dir.norm() == 0.0 {
        return Some(origin);
    }
    let forward = body.extent_along(&origin, &dir);
    let backward = body.extent_along(&origin, &(-&dir));
    let u: f64 = rng.random();
    Some(&dir * (-backward + u * (forward + backward)))
}

/// Largest sampled ratio `|T_t x - T_t y| / |x - y|` over elements from
/// [`LipschitzAction::test_elements`] and `samples` random pairs. Pairs with
/// `x = y` are skipped.
pub fn estimate_uniform_lipschitz(
    action: &LipschitzAction,
    samples: usize,
    seed: u64,
    window: usize,
    exec: Exec,
) -> Result<f64> {
    let body = action.body();
    let ratios = exec.map_indices(samples, |i| -> Result<f64> {
        let x = body.sample_stream(seed, 2 * i as u64);
        let y = body.sample_stream(seed, 2 * i as u64 + 1);
        let dxy = distance(&x, &y);
        if dxy <= 1e-12 {
            return Ok(0.0);
        }
        let (ox, oy) = match action.index() {
            IndexSet::Finite(s) => {
                let support = MeanSupport::Finite { order: s.order() };
                (action.orbit(&x, support)?, action.orbit(&y, support)?)
            }
            IndexSet::Naturals => (action.power_orbit(&x, window), action.power_orbit(&y, window)),
        };
        Ok(max_or_zero(ox.iter().zip(&oy).map(|(a, b)| distance(a, b) / dxy)))
    });
    Ok(max_or_zero(ratios.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Largest sampled `|T_{ts} x - T_t(T_s x)|`; for the naturals `t, s` range
/// over `1..=window`.
pub fn check_homomorphism(
    action: &LipschitzAction,
    samples: usize,
    seed: u64,
    window: usize,
    exec: Exec,
) -> Result<f64> {
    let elements = action.test_elements(window);
    let defects = exec.map_indices(samples, |i| -> Result<f64> {
        let x = action.body().sample_stream(seed, i as u64);
        let mut worst: f64 = 0.0;
        for &s in &elements {
            let sx = action.evaluate(s, &x)?;
            for &t in &elements {
                let ts = match action.index() {
                    IndexSet::Finite(sg) => sg.product(t, s),
                    IndexSet::Naturals => t + s,
                };
                let lhs = action.evaluate(ts, &x)?;
                let rhs = action.evaluate(t, &sx)?;
                worst = worst.max(distance(&lhs, &rhs));
            }
        }
        Ok(worst)
    });
    Ok(max_or_zero(defects.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Largest sampled `|P_C(T_t x) - T_t x|`: zero when the body is invariant.
pub fn check_domain_invariance(
    action: &LipschitzAction,
    samples: usize,
    seed: u64,
    window: usize,
    exec: Exec,
) -> Result<f64> {
    let elements = action.test_elements(window);
    let defects = exec.map_indices(samples, |i| -> Result<f64> {
        let x = action.body().sample_stream(seed, i as u64);
        let mut worst: f64 = 0.0;
        for &t in &elements {
            let y = action.evaluate(t, &x)?;
            worst = worst.max(distance(&action.body().project(&y)?, &y));
        }
        Ok(worst)
    });
    Ok(max_or_zero(defects.into_iter().collect::<Result<Vec<_>>>()?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedSetReport {
    /// `max |T p - p|` over sampled `p ∈ F`: zero when `F ⊆ Fix T`.
    pub f_in_fix_defect: f64,
    /// `min |T x - x| / (ε dist(x, F)²)` over sampled `x ∉ F`. Since
    /// `|z - x| >= dist(x, F)`, a value `>= 1` shows every such `x` moves,
    /// i.e. `Fix T ⊆ F`.
    pub displacement_ratio: f64,
    pub on_set: usize,
    pub off_set: usize,
}

/// Samples both inclusions `F ⊆ Fix T` and `Fix T ⊆ F` for a
/// distance-perturbation map. Off-set points are drawn uniformly from the
/// body and at distances `10^{-u}`, `u ∈ [0, 8]`, from points of `F`.
/// `None` for other families.
pub fn check_fixed_set(
    action: &LipschitzAction,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<Option<FixedSetReport>> {
    let Family::DistPerturbation { set, eps, .. } = &action.family else {
        return Ok(None);
    };
    let body = action.body();
    let d = action.dimension();
    let rows = exec.map_indices(samples, |i| -> Result<(f64, Option<f64>)> {
        let p = set.sample(seed, 3 * i as u64);
        let on = distance(&action.evaluate(1, &p)?, &p);
        let x = if i % 2 == 0 {
            body.sample_stream(seed, 3 * i as u64 + 1)
        } else {
            let mut rng = stream_rng(seed, 3 * i as u64 + 2);
            let scale = 10f64.powf(-8.0 * rng.random::<f64>());
            let dir = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let n = dir.norm();
            if n == 0.0 {
                return Ok((on, None));
            }
            body.project(&(&p + dir * (scale / n)))?
        };
        let dist = set.distance(&x)?;
        if dist <= 1e-12 {
            return Ok((on, None));
        }
        let moved = distance(&action.evaluate(1, &x)?, &x);
        Ok((on, Some(moved / (eps * dist * dist))))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
    Ok(Some(FixedSetReport {
        f_in_fix_defect: max_or_zero(rows.iter().map(|r| r.0)),
        displacement_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        on_set: rows.len(),
        off_set: ratios.len(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vector;

    fn v(c: &[f64]) -> Vector {
        vector(c).unwrap()
    }

    fn m2(a: f64, b: f64, c: f64, d: f64) -> Matrix {
        Matrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    fn unit_ball() -> ConvexBody {
        ConvexBody::ball(v(&[0.0, 0.0]), 1.0).unwrap()
    }

    fn shear_body() -> ConvexBody {
        ConvexBody::ellipsoid(v(&[0.0, 0.0]), m2(1.0, 0.3, 0.0, 1.0), 1.0).unwrap()
    }

    // sigma_max of a 2x2 matrix through the eigenvalues of A^T A
    fn sigma_max_2x2(a: &Matrix) -> f64 {
        let g = a.transpose() * a;
        let tr = g[(0, 0)] + g[(1, 1)];
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        ((tr + (tr * tr - 4.0 * det).sqrt()) / 2.0).sqrt()
    }

    #[test]
    fn involution_examples() {
        let act = involution_action(m2(1.0, 0.0, 0.0, -1.0), unit_ball()).unwrap();
        assert_eq!(act.declared_k(), 1.0);

        let shear = m2(1.0, -0.6, 0.0, -1.0);
        let act = involution_action(shear.clone(), shear_body()).unwrap();
        let oracle = sigma_max_2x2(&shear);
        assert!((oracle - 1.344_030_650_891).abs() < 1e-9);
        assert!((act.declared_k() - oracle).abs() < 1e-12);

        let act = involution_action(Matrix::identity(2, 2), unit_ball()).unwrap();
        assert_eq!(act.declared_k(), 1.0);
    }

    #[test]
    fn involution_errors() {
        assert!(matches!(
            involution_action(m2(1.0, 1.0, 0.0, 1.0), unit_ball()),
            Err(Error::NotInvolutive(_))
        ));
        assert!(matches!(
            involution_action(m2(1.0, -0.6, 0.0, -1.0), unit_ball()),
            Err(Error::BodyNotInvariant(_))
        ));
    }

    #[test]
    fn cyclic_examples() {
        let th = 2.0 * std::f64::consts::PI / 3.0;
        let rot = m2(th.cos(), -th.sin(), th.sin(), th.cos());
        let act = cyclic_linear_action(Matrix::identity(2, 2), rot, 3, unit_ball()).unwrap();
        assert!((act.declared_k() - 1.0).abs() < 1e-12);

        let s = m2(1.0, 0.3, 0.0, 1.0);
        let act = cyclic_linear_action(s, m2(1.0, 0.0, 0.0, -1.0), 2, shear_body()).unwrap();
        let expected = m2(1.0, -0.6, 0.0, -1.0);
        let mats = act.matrices().unwrap();
        assert!((&mats[1] - &expected).amax() < 1e-14);
        let norms: Vec<f64> = mats.iter().map(spectral_norm).collect();
        assert_eq!(act.declared_k(), norms.iter().copied().fold(0.0, f64::max));

        assert!(matches!(
            cyclic_linear_action(Matrix::identity(2, 2), rot_by(1.0), 3, unit_ball()),
            Err(Error::NotPeriodic { .. })
        ));
    }

    fn rot_by(th: f64) -> Matrix {
        m2(th.cos(), -th.sin(), th.sin(), th.cos())
    }

    #[test]
    fn dist_perturbation_examples() {
        let f = ClosedSet::Segment(v(&[-1.0, 0.0]), v(&[0.0, 0.0]));
        let z = v(&[-0.5, 0.0]);
        let act = dist_perturbation_map(f.clone(), z.clone(), 0.1, unit_ball()).unwrap();
        // x in F and x = z are fixed
        for x in [v(&[-0.9, 0.0]), v(&[0.0, 0.0]), z.clone()] {
            assert_eq!(act.evaluate(1, &x).unwrap(), x);
        }
        let x = v(&[0.5, 0.0]);
        let expected = &x + (&z - &x) * (0.1 * 0.5);
        assert!((act.evaluate(1, &x).unwrap() - expected).norm() < 1e-15);
        assert!(act.declared_k() >= 1.0);
        assert_eq!(act.metadata().bound, BoundSource::Empirical);

        assert!(matches!(
            dist_perturbation_map(f.clone(), v(&[0.5, 0.5]), 0.1, unit_ball()),
            Err(Error::NotInSet(_))
        ));
        assert!(dist_perturbation_map(f.clone(), z.clone(), 2.0, unit_ball()).is_err());

        let act = dist_perturbation_map(f, z, 0.4, unit_ball()).unwrap();
        let report = check_fixed_set(&act, 400, 2, Exec::default()).unwrap().unwrap();
        assert!(report.f_in_fix_defect <= 1e-12);
        assert!(report.displacement_ratio >= 1.0 - 1e-9, "{report:?}");
        assert!(report.off_set > 300);
        let refl = involution_action(m2(1.0, 0.0, 0.0, -1.0), unit_ball()).unwrap();
        assert_eq!(check_fixed_set(&refl, 10, 0, Exec::default()).unwrap(), None);
    }

    #[test]
    fn contraction_examples() {
        let p = v(&[0.3, -0.2]);
        let body = ConvexBody::boxed(v(&[-2.0, -2.0]), v(&[2.0, 2.0])).unwrap();
        let act = contraction_action(p.clone(), 0.5, body).unwrap();
        for t in 0..5 {
            assert_eq!(act.evaluate(t, &p).unwrap(), p);
        }
        let x = v(&[1.0, 1.0]);
        let tx = act.evaluate(1, &x).unwrap();
        assert!((tx - v(&[0.65, 0.4])).norm() < 1e-15);
        for t in 0..10 {
            let d = distance(&act.evaluate(t, &x).unwrap(), &p);
            assert!((d - 0.5f64.powi(t as i32) * distance(&x, &p)).abs() < 1e-15);
        }
    }

    #[test]
    fn lipschitz_estimates() {
        let refl = involution_action(m2(1.0, 0.0, 0.0, -1.0), unit_ball()).unwrap();
        assert!(estimate_uniform_lipschitz(&refl, 200, 1, 8, Exec::default()).unwrap() <= 1.0 + 1e-9);

        let shear = involution_action(m2(1.0, -0.6, 0.0, -1.0), shear_body()).unwrap();
        let est = estimate_uniform_lipschitz(&shear, 500, 1, 8, Exec::default()).unwrap();
        assert!(est > 1.0 && est <= 1.3441, "estimate {est}");

        let body = ConvexBody::boxed(v(&[-2.0, -2.0]), v(&[2.0, 2.0])).unwrap();
        let c = contraction_action(v(&[0.3, -0.2]), 0.5, body).unwrap();
        assert!(estimate_uniform_lipschitz(&c, 200, 1, 16, Exec::default()).unwrap() <= 0.5 + 1e-9);
    }

    #[test]
    fn homomorphism_defects() {
        let th = 2.0 * std::f64::consts::PI / 5.0;
        let act = cyclic_linear_action(m2(1.0, 0.1, 0.0, 1.0), rot_by(th), 5, shear_like(0.1)).unwrap();
        assert!(check_homomorphism(&act, 50, 3, 4, Exec::default()).unwrap() <= 1e-10);
        let inv = involution_action(m2(1.0, -0.6, 0.0, -1.0), shear_body()).unwrap();
        assert!(check_homomorphism(&inv, 50, 3, 4, Exec::default()).unwrap() <= 1e-10);
        let pow = linear_power_action(m2(1.0, -0.6, 0.0, -1.0), 4, shear_body()).unwrap();
        assert!(check_homomorphism(&pow, 20, 3, 6, Exec::default()).unwrap() <= 1e-10);
        assert_eq!(pow.metadata().bound, BoundSource::Exact);

        // Z_3 table with rotation matrices assigned out of order
        let corrupted = linear_table_action(
            FiniteSemigroup::cyclic(3),
            vec![Matrix::identity(2, 2), rot_by(2.0 * th), rot_by(th)],
            unit_ball(),
        )
        .unwrap();
        assert!(check_homomorphism(&corrupted, 20, 3, 4, Exec::default()).unwrap() > 0.1);
    }

    fn shear_like(s: f64) -> ConvexBody {
        ConvexBody::ellipsoid(v(&[0.0, 0.0]), m2(1.0, s, 0.0, 1.0), 1.0).unwrap()
    }

    #[test]
    fn bumped_reflection_is_involution_with_declared_bound() {
        let act =
            bumped_reflection_action(m2(1.0, 0.0, 0.0, -1.0), 0.05, v(&[0.6, 0.8]), 1.0).unwrap();
        assert!((act.declared_k() - 1.1 / 0.9).abs() < 1e-15);
        assert!(check_homomorphism(&act, 100, 5, 2, Exec::default()).unwrap() <= 1e-12);
        let est = estimate_uniform_lipschitz(&act, 500, 5, 2, Exec::default()).unwrap();
        assert!(est <= act.declared_k());
        assert!(check_domain_invariance(&act, 200, 5, 2, Exec::default()).unwrap() <= 1e-9);
        for i in 0..20 {
            let p = act.sample_fixed_point(8, i).unwrap();
            assert!(distance(&act.evaluate(1, &p).unwrap(), &p) <= 1e-12);
        }
    }

    #[test]
    fn fixed_points_of_linear_actions() {
        let act = involution_action(m2(1.0, -0.6, 0.0, -1.0), shear_body()).unwrap();
        for i in 0..50 {
            let p = act.sample_fixed_point(2, i).unwrap();
            assert!(act.body().contains(&p));
            assert!(distance(&act.evaluate(1, &p).unwrap(), &p) <= 1e-12);
        }
        let th = 2.0 * std::f64::consts::PI / 3.0;
        let rot = cyclic_linear_action(Matrix::identity(2, 2), rot_by(th), 3, unit_ball()).unwrap();
        assert_eq!(rot.sample_fixed_point(0, 0).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn domain_invariance_of_shipped_families() {
        let body = ConvexBody::boxed(v(&[-2.0, -2.0]), v(&[2.0, 2.0])).unwrap();
        let c = contraction_action(v(&[0.3, -0.2]), 0.5, body).unwrap();
        assert!(check_domain_invariance(&c, 100, 1, 8, Exec::default()).unwrap() <= 1e-9);
        let f = ClosedSet::Segment(v(&[-1.0, 0.0]), v(&[0.0, 0.0]));
        let d = dist_perturbation_map(f, v(&[0.0, 0.0]), 0.2, unit_ball()).unwrap();
        assert!(check_domain_invariance(&d, 100, 1, 8, Exec::default()).unwrap() <= 1e-9);
        let inv = involution_action(m2(1.0, -0.6, 0.0, -1.0), shear_body()).unwrap();
        assert!(check_domain_invariance(&inv, 100, 1, 8, Exec::default()).unwrap() <= 1e-9);
    }

    #[test]
    fn orbit_rejects_mismatched_support() {
        let inv = involution_action(m2(1.0, 0.0, 0.0, -1.0), unit_ball()).unwrap();
        assert!(inv.orbit(&v(&[0.1, 0.1]), MeanSupport::Window { len: 3 }).is_err());
        assert!(inv.orbit(&v(&[0.1, 0.1]), MeanSupport::Finite { order: 3 }).is_err());
        assert!(matches!(inv.evaluate(2, &v(&[0.0, 0.0])), Err(Error::UnknownElement(2))));
    }
}
