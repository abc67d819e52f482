//! Finite semigroups, the additive semigroup of naturals, and left invariant
//! means on them.
//!
//! A mean on a finite index set is a probability vector. Left translation
//! `(l_s f)(t) = f(st)` acts on functions; its adjoint pushes a mean forward
//! along `t ↦ st`. A mean is left invariant when every pushforward leaves it
//! unchanged, which for a finite semigroup is a linear feasibility problem.
//! The naturals have no constructive invariant mean, so they are handled
//! through uniform averages over windows `{1, …, N}` whose invariance defect
//! is tracked explicitly.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};
use crate::simplex::{phase_one, FarkasCertificate, Feasibility};

/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Defect threshold below which a mean is reported as exactly invariant.
pub const EXACT_DEFECT_TOL: f64 = 1e-9;

const DYKSTRA_MAX_ITER: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteSemigroup {
    labels: Vec<String>,
    table: Vec<Vec<usize>>,
}

impl FiniteSemigroup {
    /// Validates a multiplication table, `table[s][t]` being the index of `st`.
    ///
    /// Associativity is checked over all triples; the first violating triple
    /// is reported by label.
    pub fn new(labels: Vec<String>, table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidTable("empty table".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidTable(format!(
                "{} labels for {n} elements",
                labels.len()
            )));
        }
        let unique: HashSet<&String> = labels.iter().collect();
        if unique.len() != n {
            return Err(Error::InvalidTable("duplicate labels".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidTable(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&e| e >= n) {
                return Err(Error::InvalidTable(format!("entry {bad} in row {i} out of range")));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = table[a][b];
                for c in 0..n {
                    if table[ab][c] != table[a][table[b][c]] {
                        return Err(Error::NonAssociative {
                            a: labels[a].clone(),
                            b: labels[b].clone(),
                            c: labels[c].clone(),
                        });
                    }
                }
            }
        }
        Ok(Self { labels, table })
    }

    /// Table with labels `0..n`.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let labels = (0..table.len()).map(|i| i.to_string()).collect();
        Self::new(labels, table)
    }

    /// Cyclic group `Z_n`; element `i` is `a^i`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1, "cyclic group needs n >= 1");
        let labels = (0..n)
            .map(|i| match i {
                0 => "e".to_string(),
                1 => "a".to_string(),
                _ => format!("a^{i}"),
            })
            .collect();
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Self { labels, table }
    }

    /// `st = s`.
    pub fn left_zero(n: usize) -> Self {
        assert!(n >= 1);
        let labels = (0..n).map(|i| format!("l{i}")).collect();
        let table = (0..n).map(|s| vec![s; n]).collect();
        Self { labels, table }
    }

    /// `st = t`.
    pub fn right_zero(n: usize) -> Self {
        assert!(n >= 1);
        let labels = (0..n).map(|i| format!("r{i}")).collect();
        let table = (0..n).map(|_| (0..n).collect()).collect();
        Self { labels, table }
    }

    /// Parses the plain-text table format: a line with `n`, then `n` rows of
    /// `n` whitespace-separated 0-based indices, then an optional line of `n`
    /// labels. Blank lines and `#` comments are ignored.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidTable("missing size line".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::InvalidTable(format!("bad size line {header:?}")))?;
        let mut table = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidTable(format!("missing row {i}")))?;
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|_| Error::InvalidTable(format!("bad entry {tok:?} in row {i}")))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(row);
        }
        let labels = match lines.next() {
            Some(line) => line.split_whitespace().map(str::to_string).collect(),
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        if let Some(extra) = lines.next() {
            return Err(Error::InvalidTable(format!("unexpected trailing line {extra:?}")));
        }
        Self::new(labels, table)
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    /// Index of `st`.
    pub fn product(&self, s: usize, t: usize) -> usize {
        self.table[s][t]
    }

    pub fn is_commutative(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.table[a][b] == self.table[b][a]))
    }

    /// Two-sided identity, if any.
    pub fn identity(&self) -> Option<usize> {
        let n = self.order();
        (0..n).find(|&e| (0..n).all(|t| self.table[e][t] == t && self.table[t][e] == t))
    }

    pub fn is_group(&self) -> bool {
        let Some(e) = self.identity() else { return false };
        let n = self.order();
        (0..n).all(|a| (0..n).any(|b| self.table[a][b] == e && self.table[b][a] == e))
    }

    pub fn left_translation(&self, s: usize) -> Result<LeftTranslation> {
        if s >= self.order() {
            return Err(Error::UnknownElement(s));
        }
        Ok(LeftTranslation {
            images: self.table[s].clone(),
        })
    }
}

/// The operator `(L_s f)(t) = f(st)` on functions over a finite semigroup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeftTranslation {
    images: Vec<usize>,
}

impl LeftTranslation {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.images.iter().map(|&st| f[st]).collect()
    }

    /// `(L_s^* mu)(u) = sum of mu(t) over t with st = u`.
    pub fn adjoint_apply(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; mu.len()];
        for (t, &st) in self.images.iter().enumerate() {
            out[st] += mu[t];
        }
        out
    }

    /// Matrix of `L_s`, so that `L_s f = M f`.
    pub fn matrix(&self) -> Matrix {
        let n = self.images.len();
        Matrix::from_fn(n, n, |t, u| if self.images[t] == u { 1.0 } else { 0.0 })
    }

    /// Matrix of the adjoint; every column sums to one.
    pub fn adjoint_matrix(&self) -> Matrix {
        self.matrix().transpose()
    }
}

/// Index set of a semigroup action.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexSet {
    Finite(FiniteSemigroup),
    /// The additive semigroup `{1, 2, …}`; `0` is accepted as the identity.
    Naturals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanSupport {
    Finite { order: usize },
    /// Uniform-window support `{1, …, len}` of the naturals.
    Window { len: usize },
}

/// A finitely supported mean with its left-invariance defect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mean {
    weights: Vec<f64>,
    support: MeanSupport,
    defect: f64,
    exact: bool,
}

impl Mean {
    /// Wraps user weights, computing the defect against `index`.
    pub fn from_weights(index: &IndexSet, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::IndexMismatch("mean has no weights".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("mean weights"));
        }
        if let Some(w) = weights.iter().find(|&&w| w < -1e-14) {
            return Err(Error::OutOfRange {
                name: "mean weight",
                value: *w,
                range: "[0, 1]",
            });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange {
                name: "mean total mass",
                value: total,
                range: "1 ± 1e-9",
            });
        }
        let weights: Vec<f64> = weights.iter().map(|w| w.max(0.0) / total).collect();
        let support = match index {
            IndexSet::Finite(s) => {
                if s.order() != weights.len() {
                    return Err(Error::IndexMismatch(format!(
                        "{} weights for a semigroup of order {}",
                        weights.len(),
                        s.order()
                    )));
                }
                MeanSupport::Finite { order: s.order() }
            }
            IndexSet::Naturals => MeanSupport::Window { len: weights.len() },
        };
        let mut mean = Self {
            weights,
            support,
            defect: 0.0,
            exact: false,
        };
        mean.defect = invariance_defect(index, &mean)?;
        mean.exact = mean.defect <= EXACT_DEFECT_TOL;
        Ok(mean)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> MeanSupport {
        self.support
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// `sum_t mu(t) f(t)`.
    pub fn pair(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Index-set element carried by weight slot `i`.
    pub fn element(&self, i: usize) -> usize {
        match self.support {
            MeanSupport::Finite { .. } => i,
            MeanSupport::Window { .. } => i + 1,
        }
    }
}

/// Outcome of the invariant-mean feasibility problem.
#[derive(Debug, Clone, PartialEq)]
pub enum InvariantMean {
    Feasible(Mean),
    /// No left invariant mean; the certificate proves it.
    Infeasible(FarkasCertificate),
}

/// Constraint system `(L_s^* - I) mu = 0` for all `s`, `sum mu = 1`, with
/// duplicate and zero rows removed.
pub fn invariance_constraints(s: &FiniteSemigroup) -> (Matrix, Vector) {
    let n = s.order();
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut rows: Vec<Vec<i64>> = Vec::new();
    for a in 0..n {
        for u in 0..n {
            let mut row = vec![0i64; n];
            for t in 0..n {
                if s.product(a, t) == u {
                    row[t] += 1;
                }
            }
            row[u] -= 1;
            if row.iter().all(|&c| c == 0) {
                continue;
            }
            if seen.insert(row.clone()) {
                rows.push(row);
            }
        }
    }
    let m = rows.len() + 1;
    let mut a = Matrix::zeros(m, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            a[(i, j)] = c as f64;
        }
    }
    for j in 0..n {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = Vector::zeros(m);
    b[m - 1] = 1.0;
    (a, b)
}

/// Finds a left invariant mean or certifies that none exists.
///
/// Feasibility is decided by phase-one simplex. When the feasible set has
/// more than one point, the returned mean is the one closest to uniform in
/// the Euclidean norm.
pub fn solve_left_invariant_mean(s: &FiniteSemigroup) -> Result<InvariantMean> {
    let (a, b) = invariance_constraints(s);
    let vertex = match phase_one(&a, &b)? {
        Feasibility::Infeasible(cert) => return Ok(InvariantMean::Infeasible(cert)),
        Feasibility::Feasible(x) => x,
    };
    let index = IndexSet::Finite(s.clone());
    let candidate = canonical_point(&a, &b)
        .and_then(|w| Mean::from_weights(&index, w.iter().copied().collect()).ok())
        .filter(|m| m.defect() <= EXACT_DEFECT_TOL);
    let mean = match candidate {
        Some(m) => m,
        None => {
            let total = vertex.sum();
            let m = Mean::from_weights(&index, vertex.iter().map(|w| w / total).collect())?;
            if m.defect() > EXACT_DEFECT_TOL {
                return Err(Error::Numerical(format!(
                    "simplex vertex has invariance defect {:e}",
                    m.defect()
                )));
            }
            m
        }
    };
    Ok(InvariantMean::Feasible(mean))
}

// Euclidean projection of the uniform vector onto {A x = b, x >= 0} by
// Dykstra's alternating projections, finished by an exact affine solve on the
// detected support.
fn canonical_point(a: &Matrix, b: &Vector) -> Option<Vector> {
    let n = a.ncols();
    let uniform = Vector::from_element(n, 1.0 / n as f64);
    let pinv = a.clone().pseudo_inverse(1e-12).ok()?;
    let affine = |x: &Vector| x - &pinv * (a * x - b);

    let mut x = uniform.clone();
    let mut q = Vector::zeros(n);
    for _ in 0..DYKSTRA_MAX_ITER {
        let y = affine(&x);
        let shifted = &y + &q;
        let next = shifted.map(|v| v.max(0.0));
        q = shifted - &next;
        let step = (&next - &x).norm();
        x = next;
        if step < 1e-15 {
            break;
        }
    }

    let support: Vec<usize> = (0..n).filter(|&i| x[i] > 1e-10).collect();
    if support.is_empty() {
        return None;
    }
    let a_s = Matrix::from_fn(a.nrows(), support.len(), |i, j| a[(i, support[j])]);
    let u_s = Vector::from_fn(support.len(), |j, _| uniform[support[j]]);
    let pinv_s = a_s.clone().pseudo_inverse(1e-12).ok()?;
    let polished_s = &u_s - &pinv_s * (&a_s * &u_s - b);
    let polished = if polished_s.min() >= -1e-13 && (&a_s * &polished_s - b).amax() <= 1e-12 {
        let mut full = Vector::zeros(n);
        for (j, &i) in support.iter().enumerate() {
            full[i] = polished_s[j].max(0.0);
        }
        full
    } else {
        x
    };
    let total = polished.sum();
    (total > 0.0).then(|| polished / total)
}

/// Uniform mean on the window `{1, …, N}` of the naturals.
pub fn folner_mean(len: usize) -> Result<Mean> {
    if len == 0 {
        return Err(Error::OutOfRange {
            name: "window length",
            value: 0.0,
            range: ">= 1",
        });
    }
    Mean::from_weights(&IndexSet::Naturals, vec![1.0 / len as f64; len])
}

/// `|L_shift^* mu - mu|_1` for window weights, `mu(u)` supported on `1..=N`.
pub fn window_shift_defect(weights: &[f64], shift: usize) -> f64 {
    let n = weights.len();
    let at = |u: usize| -> f64 {
        if (1..=n).contains(&u) {
            weights[u - 1]
        } else {
            0.0
        }
    };
    (1..=n + shift)
        .map(|u| {
            let pushed = if u > shift { at(u - shift) } else { 0.0 };
            (pushed - at(u)).abs()
        })
        .sum()
}

/// Largest `l1` deviation of a translated mean from itself: over all
/// elements of a finite semigroup, or over the generator `1` of the naturals.
pub fn invariance_defect(index: &IndexSet, mean: &Mean) -> Result<f64> {
    match (index, mean.support()) {
        (IndexSet::Finite(s), MeanSupport::Finite { order }) if order == s.order() => {
            let mut worst: f64 = 0.0;
            for a in 0..s.order() {
                let pushed = s.left_translation(a)?.adjoint_apply(mean.weights());
                let d: f64 = pushed
                    .iter()
                    .zip(mean.weights())
                    .map(|(p, w)| (p - w).abs())
                    .sum();
                worst = worst.max(d);
            }
            Ok(worst)
        }
        (IndexSet::Naturals, MeanSupport::Window { .. }) => {
            Ok(window_shift_defect(mean.weights(), 1))
        }
        _ => Err(Error::IndexMismatch(format!(
            "mean support {:?} does not match the index set",
            mean.support()
        ))),
    }
}

/// Generators of small test semigroups.
pub mod examples {
    use rand::seq::SliceRandom;
    use rand::Rng;

    use super::FiniteSemigroup;
    use crate::rng::stream_rng;

    /// The symmetric group on `k` letters (`k <= 4`).
    pub fn symmetric_group(k: usize) -> FiniteSemigroup {
        assert!((1..=4).contains(&k));
        let mut perms: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..k {
            let mut next = Vec::new();
            for p in &perms {
                for v in 0..k {
                    if !p.contains(&v) {
                        let mut q = p.clone();
                        q.push(v);
                        next.push(q);
                    }
                }
            }
            perms = next;
        }
        let find = |p: &Vec<usize>| perms.iter().position(|q| q == p).expect("closed");
        let table = perms
            .iter()
            .map(|s| {
                perms
                    .iter()
                    .map(|t| find(&(0..k).map(|i| s[t[i]]).collect()))
                    .collect()
            })
            .collect();
        let labels = perms
            .iter()
            .map(|p| p.iter().map(|d| d.to_string()).collect::<String>())
            .collect();
        FiniteSemigroup::new(labels, table).expect("permutation composition is associative")
    }

    fn table_of(n: usize, op: impl Fn(usize, usize) -> usize) -> Vec<Vec<usize>> {
        (0..n).map(|a| (0..n).map(|b| op(a, b)).collect()).collect()
    }

    fn monogenic(index: usize, period: usize) -> Vec<Vec<usize>> {
        // element j is a^(j+1)
        let n = index + period - 1;
        table_of(n, |a, b| {
            let mut e = a + b + 2;
            while e >= index + period {
                e -= period;
            }
            e - 1
        })
    }

    fn union_semilattice<R: Rng>(rng: &mut R, max: usize) -> Vec<Vec<usize>> {
        loop {
            let mut sets: Vec<u8> = (0..rng.random_range(1..=3))
                .map(|_| rng.random_range(0..16u8))
                .collect();
            sets.sort_unstable();
            sets.dedup();
            let mut changed = true;
            while changed {
                changed = false;
                for i in 0..sets.len() {
                    for j in 0..sets.len() {
                        let u = sets[i] | sets[j];
                        if !sets.contains(&u) {
                            sets.push(u);
                            changed = true;
                        }
                    }
                }
            }
            if sets.len() <= max {
                let pos = |v: u8| sets.iter().position(|&s| s == v).expect("closed");
                return table_of(sets.len(), |a, b| pos(sets[a] | sets[b]));
            }
        }
    }

    fn adjoin_identity(t: &[Vec<usize>]) -> Vec<Vec<usize>> {
        let n = t.len();
        table_of(n + 1, |a, b| match (a == n, b == n) {
            (true, _) => b,
            (_, true) => a,
            _ => t[a][b],
        })
    }

    fn adjoin_zero(t: &[Vec<usize>]) -> Vec<Vec<usize>> {
        let n = t.len();
        table_of(n + 1, |a, b| if a == n || b == n { n } else { t[a][b] })
    }

    fn product(t: &[Vec<usize>], u: &[Vec<usize>]) -> Vec<Vec<usize>> {
        let m = u.len();
        table_of(t.len() * m, |a, b| t[a / m][b / m] * m + u[a % m][b % m])
    }

    fn base<R: Rng>(rng: &mut R, max: usize) -> Vec<Vec<usize>> {
        let max = max.max(1);
        match rng.random_range(0..5) {
            0 => {
                let m = rng.random_range(1..=max);
                table_of(m, |a, b| (a + b) % m)
            }
            1 => {
                let index = rng.random_range(1..=max);
                let period = rng.random_range(1..=(max + 1 - index));
                monogenic(index, period)
            }
            2 => {
                let m = rng.random_range(1..=max);
                table_of(m, |a, b| a.max(b))
            }
            3 => {
                let m = rng.random_range(1..=max);
                table_of(m, |_, _| 0)
            }
            _ => union_semilattice(rng, max),
        }
    }

    /// A random commutative semigroup of order at most `max_order`, built
    /// from cyclic groups, monogenic semigroups, semilattices and null
    /// semigroups by adjoining identities or zeros and taking direct
    /// products, then relabelled by a random permutation.
    pub fn random_commutative(seed: u64, max_order: usize) -> FiniteSemigroup {
        assert!(max_order >= 1);
        let mut rng = stream_rng(seed, 0x5e31);
        let mut t = base(&mut rng, max_order);
        loop {
            let n = t.len();
            let choice = rng.random_range(0..4);
            let next = match choice {
                0 if n < max_order => adjoin_identity(&t),
                1 if n < max_order => adjoin_zero(&t),
                2 if 2 * n <= max_order => {
                    let other = base(&mut rng, max_order / n);
                    if n * other.len() <= max_order {
                        product(&t, &other)
                    } else {
                        break;
                    }
                }
                _ => break,
            };
            t = next;
        }
        let n = t.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut inv = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let relabelled = table_of(n, |a, b| perm[t[inv[a]][inv[b]]]);
        FiniteSemigroup::from_table(relabelled).expect("generated tables are associative")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2_labels() -> Vec<String> {
        vec!["e".into(), "a".into()]
    }

    #[test]
    fn validates_small_groups() {
        FiniteSemigroup::new(z2_labels(), vec![vec![0, 1], vec![1, 0]]).unwrap();
        FiniteSemigroup::from_table(vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]).unwrap();
    }

    #[test]
    fn rejects_non_associative_with_witness() {
        // x*y = (x + 1) mod 2 ignores y: (aa)a = a(aa) fails somewhere
        let err = FiniteSemigroup::new(z2_labels(), vec![vec![1, 1], vec![0, 0]]).unwrap_err();
        let Error::NonAssociative { a, b, c } = err else {
            panic!("expected witness, got {err:?}")
        };
        let idx = |l: &str| if l == "e" { 0 } else { 1 };
        let t = [[1usize, 1], [0, 0]];
        let (a, b, c) = (idx(&a), idx(&b), idx(&c));
        assert_ne!(t[t[a][b]][c], t[a][t[b][c]]);
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(FiniteSemigroup::from_table(vec![]).is_err());
        assert!(FiniteSemigroup::from_table(vec![vec![0, 2], vec![0, 0]]).is_err());
        assert!(FiniteSemigroup::from_table(vec![vec![0], vec![0, 0]]).is_err());
        assert!(FiniteSemigroup::new(vec!["x".into(), "x".into()], vec![vec![0, 0], vec![0, 0]]).is_err());
    }

    #[test]
    fn parse_table_format() {
        let s = FiniteSemigroup::parse_table("# Z_2\n2\n0 1\n1 0\ne a\n").unwrap();
        assert_eq!(s, FiniteSemigroup::cyclic(2));
        let s = FiniteSemigroup::parse_table("2\n0 0\n1 1\n").unwrap();
        assert_eq!(s.labels(), ["0", "1"]);
        assert!(FiniteSemigroup::parse_table("2\n0 1\n").is_err());
        assert!(FiniteSemigroup::parse_table("two\n").is_err());
    }

    #[test]
    fn left_translation_examples() {
        let z2 = FiniteSemigroup::cyclic(2);
        let l = z2.left_translation(0).unwrap();
        assert_eq!(l.matrix(), Matrix::identity(2, 2));

        let lz = FiniteSemigroup::left_zero(3);
        let f = [0.3, -1.0, 2.5];
        for s in 0..3 {
            assert_eq!(lz.left_translation(s).unwrap().apply(&f), vec![f[s]; 3]);
        }
        let rz = FiniteSemigroup::right_zero(3);
        for s in 0..3 {
            assert_eq!(rz.left_translation(s).unwrap().apply(&f), f.to_vec());
        }
        assert!(matches!(z2.left_translation(2), Err(Error::UnknownElement(2))));
    }

    #[test]
    fn adjoint_columns_sum_to_one() {
        let s = examples::symmetric_group(3);
        for a in 0..s.order() {
            let m = s.left_translation(a).unwrap().adjoint_matrix();
            for j in 0..s.order() {
                assert!((m.column(j).sum() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn solver_examples() {
        let InvariantMean::Feasible(m) = solve_left_invariant_mean(&FiniteSemigroup::cyclic(2)).unwrap()
        else {
            panic!()
        };
        assert!(m.weights().iter().all(|w| (w - 0.5).abs() < 1e-12));
        assert!(m.is_exact());

        let InvariantMean::Infeasible(cert) =
            solve_left_invariant_mean(&FiniteSemigroup::left_zero(2)).unwrap()
        else {
            panic!("left-zero semigroups have no left invariant mean")
        };
        let (a, b) = invariance_constraints(&FiniteSemigroup::left_zero(2));
        let (worst, by) = cert.check(&a, &b);
        assert!(worst <= 1e-9 && by > 0.0);

        let InvariantMean::Feasible(m) =
            solve_left_invariant_mean(&FiniteSemigroup::right_zero(3)).unwrap()
        else {
            panic!()
        };
        assert!(m.weights().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn left_zero_constraints_enumerated() {
        // Constraint for s: L_s^* mu = delta_s, so mu = delta_0 = delta_1.
        let lz = FiniteSemigroup::left_zero(2);
        let mu = [0.5, 0.5];
        for s in 0..2 {
            let pushed = lz.left_translation(s).unwrap().adjoint_apply(&mu);
            let mut delta = [0.0; 2];
            delta[s] = 1.0;
            assert_eq!(pushed, delta);
        }
    }

    #[test]
    fn semilattice_mean_is_point_mass_at_top() {
        let s = FiniteSemigroup::from_table(
            (0..4).map(|a| (0..4).map(|b: usize| a.max(b)).collect()).collect(),
        )
        .unwrap();
        let InvariantMean::Feasible(m) = solve_left_invariant_mean(&s).unwrap() else {
            panic!()
        };
        assert!((m.weights()[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonabelian_group_gets_uniform() {
        let s3 = examples::symmetric_group(3);
        assert!(s3.is_group() && !s3.is_commutative());
        let InvariantMean::Feasible(m) = solve_left_invariant_mean(&s3).unwrap() else {
            panic!()
        };
        assert!(m.weights().iter().all(|w| (w - 1.0 / 6.0).abs() < 1e-9));
    }

    #[test]
    fn folner_examples() {
        let m = folner_mean(1).unwrap();
        assert_eq!(m.weights(), &[1.0]);
        assert_eq!(m.defect(), 2.0);
        assert!(!m.is_exact());
        let m = folner_mean(100).unwrap();
        assert!((m.defect() - 0.02).abs() < 1e-12);
        let quartered = folner_mean(400).unwrap().defect();
        assert!((quartered - m.defect() / 4.0).abs() < 1e-12);
        assert!(folner_mean(0).is_err());
    }

    #[test]
    fn folner_defect_by_indicator_summation() {
        // sup over indicator functions f = 1_{u} of |mu(l_1 f) - mu(f)|, summed
        // over u, equals the l1 defect.
        let n = 100;
        let w = vec![1.0 / n as f64; n];
        let mut total = 0.0;
        for u in 1..=n + 1 {
            let f = |t: usize| if t == u { 1.0 } else { 0.0 };
            let shifted: f64 = (1..=n).map(|t| w[t - 1] * f(t + 1)).sum();
            let plain: f64 = (1..=n).map(|t| w[t - 1] * f(t)).sum();
            total += (shifted - plain).abs();
        }
        assert!((total - 0.02).abs() < 1e-12);
    }

    #[test]
    fn defect_examples() {
        let z2 = IndexSet::Finite(FiniteSemigroup::cyclic(2));
        let m = Mean::from_weights(&z2, vec![0.9, 0.1]).unwrap();
        assert!((m.defect() - 1.6).abs() < 1e-12);
        assert!(!m.is_exact());
        let m = Mean::from_weights(&z2, vec![0.5, 0.5]).unwrap();
        assert!(m.defect() <= 1e-9);
        assert!(Mean::from_weights(&z2, vec![1.0]).is_err());
        assert!(Mean::from_weights(&z2, vec![0.7, 0.7]).is_err());
        assert!(Mean::from_weights(&z2, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn random_commutative_tables_are_valid() {
        for seed in 0..200 {
            let s = examples::random_commutative(seed, 6);
            assert!(s.order() <= 6 && s.order() >= 1);
            assert!(s.is_commutative());
            FiniteSemigroup::from_table(s.table().to_vec()).unwrap();
        }
    }
}
