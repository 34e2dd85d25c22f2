//! Tree-structured classifiers: spanning-tree representations, Chow–Liu
//! fitting, the recursive discriminative structure learner, and exact or
//! Monte-Carlo error evaluation.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, Error, Result};
use crate::model::{ClassModel, EdgeWeightMatrix, ModelSampler, Observation, Scope};
use crate::set::Subset;
use crate::ssp::{ssp_minimize, SspOptions};

/// An undirected spanning tree on vertices 0..n. Edges are stored
/// normalized (u < v) and sorted, so equal trees compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTreeStructure")]
pub struct TreeStructure {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawTreeStructure {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawTreeStructure> for TreeStructure {
    type Error = Error;

    fn try_from(raw: RawTreeStructure) -> Result<Self> {
        TreeStructure::new(raw.n, raw.edges)
    }
}

/// Union-find over 0..n with path halving, for cycle detection.
struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the two components; false if they were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

impl TreeStructure {
    /// Builds a spanning tree, normalizing edge order and validating that
    /// the edges connect all n vertices without cycles.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(validation("a tree needs at least 1 vertex"));
        }
        if edges.len() != n - 1 {
            return Err(validation(format!(
                "a spanning tree on {n} vertices has {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut dsu = Dsu::new(n);
        for (a, b) in edges {
            if a == b {
                return Err(validation(format!("self-loop at vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(validation(format!(
                    "edge ({a},{b}) out of range for {n} vertices"
                )));
            }
            if !dsu.union(a, b) {
                return Err(validation(format!("edge ({a},{b}) closes a cycle")));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        // n−1 cycle-free edges on n vertices are automatically connected.
        normalized.sort_unstable();
        Ok(TreeStructure { n, edges: normalized })
    }

    pub fn contains_edge(&self, u: usize, v: usize) -> bool {
        let e = (u.min(v), u.max(v));
        self.edges.binary_search(&e).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn total_weight(&self, weights: &EdgeWeightMatrix) -> f64 {
        self.edges.iter().map(|&(u, v)| weights.weight(u, v)).sum()
    }
}

/// Maximum-weight spanning tree by Kruskal's algorithm. Candidate edges are
/// ordered by descending weight with ties broken lexicographically, so the
/// result is deterministic; equal weights everywhere yield the star at
/// vertex 0.
pub fn chow_liu_tree(weights: &EdgeWeightMatrix) -> Result<TreeStructure> {
    let n = weights.n();
    if n < 2 {
        return Err(validation("spanning-tree learning needs at least 2 variables"));
    }
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            candidates.push((i, j));
        }
    }
    candidates.sort_by(|&(a, b), &(c, d)| {
        weights
            .weight(c, d)
            .partial_cmp(&weights.weight(a, b))
            .expect("edge weights are finite")
            .then(a.cmp(&c))
            .then(b.cmp(&d))
    });
    let mut dsu = Dsu::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for (u, v) in candidates {
        if dsu.union(u, v) {
            edges.push((u, v));
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    TreeStructure::new(n, edges)
}

fn prufer_decode(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    debug_assert_eq!(seq.len() + 2, n);
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let mut last: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    debug_assert_eq!(last.len(), 2);
    edges.push((last.remove(0), last[0]));
    edges
}

/// Uniform random spanning tree: a random Prüfer sequence, decoded.
/// Deterministic per seed.
pub fn random_tree(n: usize, seed: u64) -> Result<TreeStructure> {
    if n < 2 {
        return Err(validation("random trees need at least 2 vertices"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seq: Vec<usize> = (0..n.saturating_sub(2))
        .map(|_| rng.random_range(0..n))
        .collect();
    TreeStructure::new(n, prufer_decode(n, &seq))
}

/// Every labeled spanning tree on n vertices, via Cayley's bijection with
/// Prüfer sequences (n^(n−2) trees; capped at n ≤ 8).
pub fn all_spanning_trees(n: usize) -> Result<Vec<TreeStructure>> {
    if !(2..=8).contains(&n) {
        return Err(validation(format!(
            "exhaustive tree enumeration supports 2..=8 vertices, got {n}"
        )));
    }
    let len = n - 2;
    let count = n.pow(len as u32);
    let mut trees = Vec::with_capacity(count);
    for code in 0..count {
        let mut seq = vec![0usize; len];
        let mut c = code;
        for s in seq.iter_mut() {
            *s = c % n;
            c /= n;
        }
        trees.push(TreeStructure::new(n, prufer_decode(n, &seq))?);
    }
    Ok(trees)
}

/// Sign convention for the discriminative split objective.
///
/// The split score of a partition is its EAR value
/// I(S; rest | x, C) − I(S; rest | x). Both conventions find, per pivot x,
/// the partition minimizing that score; they differ in how pivots are then
/// compared. `Prose` (the default) ranks pivots by the same minimized score,
/// so the overall most discriminative split wins. `Printed` ranks pivots by
/// the negated score, faithfully reproducing a sign inconsistency in the
/// procedure this implements, which makes the least discriminative pivot
/// win; it is kept behind a flag for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EarSign {
    #[default]
    Prose,
    Printed,
}

impl std::str::FromStr for EarSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prose" => Ok(EarSign::Prose),
            "printed" => Ok(EarSign::Printed),
            other => Err(validation(format!(
                "unknown ear-sign '{other}', expected prose|printed"
            ))),
        }
    }
}

/// Options for the discriminative tree learner: the SSP configuration used
/// on inner partition problems with ≥ 4 free variables, and the pivot sign
/// convention.
#[derive(Debug, Clone, Default)]
pub struct DiscTreeOptions {
    pub ssp: SspOptions,
    pub ear_sign: EarSign,
}

/// Learns a discriminative spanning tree by recursive partitioning. At each
/// level, every variable x is tried as a pivot: the remaining variables are
/// split into the two sides S, rest minimizing the EAR score
/// I(S; rest|x, C) − I(S; rest|x) — by enumeration for ≤ 3 free variables,
/// by the submodular-supermodular procedure otherwise (both terms are
/// symmetric submodular set functions of S). The winning pivot's two sides,
/// each with the pivot re-attached as separator, are solved recursively and
/// their subtrees joined at the pivot.
pub fn make_discriminative_tree(
    model: &ClassModel,
    opts: &DiscTreeOptions,
) -> Result<TreeStructure> {
    let n = model.n();
    if n < 2 {
        return Err(validation("discriminative trees need at least 2 variables"));
    }
    opts.ssp.validate()?;
    let vars: Vec<usize> = (0..n).collect();
    let edges = build_subtree(model, &vars, opts)?;
    TreeStructure::new(n, edges)
}

/// One recursion level over a set of original variable indices (ascending).
/// Returns edges in original indices.
fn build_subtree(
    model: &ClassModel,
    vars: &[usize],
    opts: &DiscTreeOptions,
) -> Result<Vec<(usize, usize)>> {
    let m = vars.len();
    if m == 1 {
        return Ok(Vec::new());
    }
    if m == 2 {
        return Ok(vec![(vars[0], vars[1])]);
    }
    let sub = model.marginalize(vars)?;

    // Pick the pivot whose best split scores lowest under the sign
    // convention; ties go to the smallest pivot index, and split ties to the
    // smallest bitmask, keeping the whole construction deterministic.
    let mut best: Option<(f64, usize, Subset)> = None;
    for x in 0..m {
        let (split, score) = best_split_at_pivot(&sub, x, opts)?;
        let pivot_val = match opts.ear_sign {
            EarSign::Prose => score,
            EarSign::Printed => -score,
        };
        let replace = match best {
            None => true,
            Some((val, _, _)) => pivot_val < val - 1e-12,
        };
        if replace {
            best = Some((pivot_val, x, split));
        }
    }
    let (_, x, split) = best.expect("at least one pivot exists for m >= 3");

    let mut side_a: Vec<usize> = split.members().map(|i| vars[i]).collect();
    let mut side_b: Vec<usize> = (0..m)
        .filter(|&i| i != x && !split.contains(i))
        .map(|i| vars[i])
        .collect();
    side_a.push(vars[x]);
    side_a.sort_unstable();
    side_b.push(vars[x]);
    side_b.sort_unstable();

    let mut edges = build_subtree(model, &side_a, opts)?;
    edges.extend(build_subtree(model, &side_b, opts)?);
    Ok(edges)
}

/// Minimizes the EAR score over proper non-empty subsets of the non-pivot
/// variables of `sub` (local indices). Small problems are enumerated; larger
/// ones run SSP on the two symmetric-MI oracles.
fn best_split_at_pivot(
    sub: &ClassModel,
    x: usize,
    opts: &DiscTreeOptions,
) -> Result<(Subset, f64)> {
    let m = sub.n();
    let free: Vec<usize> = (0..m).filter(|&i| i != x).collect();

    if free.len() <= 3 {
        let mut best: Option<(f64, Subset)> = None;
        for mask in 1..((1u64 << free.len()) - 1).max(1) {
            let s = Subset::from_members(
                (0..free.len()).filter(|&k| mask >> k & 1 == 1).map(|k| free[k]),
            );
            let score = sub.ear_score(s, x)?;
            let replace = match best {
                None => true,
                Some((b, bs)) => score < b - 1e-12 || (score <= b + 1e-12 && s.0 < bs.0),
            };
            if replace {
                best = Some((score, s));
            }
        }
        return match best {
            Some((score, s)) => Ok((s, score)),
            // One free variable: the "split" is that variable vs nothing;
            // the subtree recursion handles it as a 2-variable base case.
            None => Ok((Subset::singleton(free[0]), 0.0)),
        };
    }

    // EAR(S) = I(S; free∖S | x, C) − I(S; free∖S | x): a difference of two
    // symmetric submodular functions over the free variables; minimize with
    // the submodular-supermodular procedure on local free indices.
    let with_class = conditional_cut_oracle(sub, x, &free, Scope::ClassAveraged)?;
    let without = conditional_cut_oracle(sub, x, &free, Scope::Mixture)?;
    let (result, _trace) = ssp_minimize(&with_class, &without, &opts.ssp)?;
    let s = Subset::from_members(result.minimizer.members().map(|k| free[k]));
    Ok((s, result.value))
}

/// f(S) = I(σS; σ(free∖S) | {x}, scope) as a set function over free-variable
/// positions, where σ maps positions to `sub`'s local indices.
fn conditional_cut_oracle(
    sub: &ClassModel,
    x: usize,
    free: &[usize],
    scope: Scope,
) -> Result<crate::set::SetFunction> {
    let ground = crate::set::GroundSet::new(free.len())?;
    let model = sub.clone();
    let free = free.to_vec();
    let pivot = Subset::singleton(x);
    Ok(crate::set::SetFunction::new(ground, move |a| {
        let s = Subset::from_members(a.members().map(|k| free[k]));
        let rest = Subset::from_members(
            (0..free.len()).filter(|&k| !a.contains(k)).map(|k| free[k]),
        );
        if s.is_empty() || rest.is_empty() {
            return 0.0;
        }
        model
            .mutual_information(s, rest, pivot, scope)
            .expect("validated sub-model evaluates conditional MI")
    }))
}

/// Per-class parameters of a fitted tree (or forest) classifier.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
enum ClassifierParams {
    /// Full factorized distribution per class, one probability per outcome.
    Discrete { distributions: Vec<Vec<f64>> },
    /// Per-class precision matrix and its log determinant.
    Gaussian {
        precisions: Vec<Vec<Vec<f64>>>,
        log_dets: Vec<f64>,
    },
}

/// A Bayes classifier over class-conditional distributions factorized on a
/// tree (possibly edgeless, as for naive Bayes, or complete, bypassing any
/// structure). Decision rule: argmax_c prior_c · q_c(x), ties to the lowest
/// class index.
#[derive(Debug, Clone, Serialize)]
pub struct TreeClassifier {
    pub n: usize,
    pub class_priors: Vec<f64>,
    /// The structure the parameters were fitted on (informational).
    pub edges: Vec<(usize, usize)>,
    params: ClassifierParams,
}

impl TreeClassifier {
    pub fn class_count(&self) -> usize {
        self.class_priors.len()
    }

    /// Log of prior_c · q_c(observation), in nats.
    pub fn log_score(&self, c: usize, obs: &Observation) -> Result<f64> {
        let prior = self.class_priors[c];
        match (&self.params, obs) {
            (ClassifierParams::Discrete { distributions }, Observation::Discrete(o)) => {
                let q = distributions[c][*o as usize];
                Ok(if prior > 0.0 && q > 0.0 {
                    prior.ln() + q.ln()
                } else {
                    f64::NEG_INFINITY
                })
            }
            (
                ClassifierParams::Gaussian {
                    precisions,
                    log_dets,
                },
                Observation::Continuous(x),
            ) => {
                if x.len() != self.n {
                    return Err(validation("observation dimension mismatch"));
                }
                let j = &precisions[c];
                let mut quad = 0.0;
                for (i, xi) in x.iter().enumerate() {
                    for (k, xk) in x.iter().enumerate() {
                        quad += xi * j[i][k] * xk;
                    }
                }
                let log_density = 0.5 * (log_dets[c] - self.n as f64 * (2.0 * std::f64::consts::PI).ln())
                    - 0.5 * quad;
                Ok(if prior > 0.0 {
                    prior.ln() + log_density
                } else {
                    f64::NEG_INFINITY
                })
            }
            _ => Err(validation(
                "observation family does not match classifier family",
            )),
        }
    }

    /// Most probable class; ties break to the lowest index.
    pub fn classify(&self, obs: &Observation) -> Result<usize> {
        let mut best = 0;
        let mut best_score = self.log_score(0, obs)?;
        for c in 1..self.class_count() {
            let score = self.log_score(c, obs)?;
            if score > best_score {
                best = c;
                best_score = score;
            }
        }
        Ok(best)
    }

    #[cfg(test)]
    fn discrete_distributions(&self) -> Option<&Vec<Vec<f64>>> {
        match &self.params {
            ClassifierParams::Discrete { distributions } => Some(distributions),
            _ => None,
        }
    }
}

/// Fits classifier parameters by KL projection of each class distribution
/// onto the given structure: the factorization keeps the true per-vertex and
/// per-edge marginals, q(x) = Π_v p(x_v) · Π_(u,v) p(x_u,x_v)/(p(x_u)p(x_v)).
/// The Gaussian analogue assembles the tree-structured precision from the
/// pairwise moments. Accepts forests (naive Bayes is the edgeless case).
fn fit_forest(model: &ClassModel, n: usize, edges: &[(usize, usize)]) -> Result<TreeClassifier> {
    if model.n() != n {
        return Err(validation(format!(
            "structure has {n} vertices but the model has {} variables",
            model.n()
        )));
    }
    let mut degree = vec![0usize; n];
    for &(u, v) in edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    let params = match model {
        ClassModel::Discrete(dm) => {
            let mut distributions = Vec::with_capacity(dm.class_count());
            for table in &dm.tables {
                // Vertex and edge marginals of this class.
                let mut vertex = vec![[0.0f64; 2]; n];
                for (o, &p) in table.iter().enumerate() {
                    for (v, marg) in vertex.iter_mut().enumerate() {
                        marg[o >> v & 1] += p;
                    }
                }
                let mut edge_joint = Vec::with_capacity(edges.len());
                for &(u, v) in edges {
                    let mut joint = [0.0f64; 4];
                    for (o, &p) in table.iter().enumerate() {
                        joint[(o >> u & 1) | (o >> v & 1) << 1] += p;
                    }
                    edge_joint.push(joint);
                }
                let size = 1usize << n;
                let mut q = vec![0.0f64; size];
                for (o, qo) in q.iter_mut().enumerate() {
                    let mut value = 1.0;
                    for (v, marg) in vertex.iter().enumerate() {
                        value *= marg[o >> v & 1];
                    }
                    if value == 0.0 {
                        continue;
                    }
                    for (e, &(u, v)) in edges.iter().enumerate() {
                        let pu = vertex[u][o >> u & 1];
                        let pv = vertex[v][o >> v & 1];
                        value *= edge_joint[e][(o >> u & 1) | (o >> v & 1) << 1] / (pu * pv);
                    }
                    *qo = value;
                }
                let total: f64 = q.iter().sum();
                if (total - 1.0).abs() > 1e-10 {
                    return Err(numerical(format!(
                        "fitted tree distribution sums to {total}, expected 1"
                    )));
                }
                distributions.push(q);
            }
            ClassifierParams::Discrete { distributions }
        }
        ClassModel::Gaussian(gm) => {
            let mut precisions = Vec::with_capacity(gm.class_count());
            let mut log_dets = Vec::with_capacity(gm.class_count());
            for cov in &gm.covariances {
                let mut j = vec![vec![0.0f64; n]; n];
                for &(u, v) in edges {
                    let (suu, suv, svv) = (cov[u][u], cov[u][v], cov[v][v]);
                    let det = suu * svv - suv * suv;
                    if det <= 0.0 {
                        return Err(numerical(format!(
                            "pairwise covariance block ({u},{v}) is singular"
                        )));
                    }
                    j[u][u] += svv / det;
                    j[v][v] += suu / det;
                    j[u][v] -= suv / det;
                    j[v][u] -= suv / det;
                }
                for v in 0..n {
                    j[v][v] += (1.0 - degree[v] as f64) / cov[v][v];
                }
                log_dets.push(log_det_pd(&j)?);
                precisions.push(j);
            }
            ClassifierParams::Gaussian {
                precisions,
                log_dets,
            }
        }
    };
    Ok(TreeClassifier {
        n,
        class_priors: model.class_priors().to_vec(),
        edges: edges.to_vec(),
        params,
    })
}

fn log_det_pd(m: &[Vec<f64>]) -> Result<f64> {
    let n = m.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
    match mat.cholesky() {
        Some(chol) => Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()),
        None => Err(numerical("fitted precision matrix is not positive definite")),
    }
}

/// KL projection of each class distribution onto a spanning tree.
pub fn fit_tree_classifier(model: &ClassModel, tree: &TreeStructure) -> Result<TreeClassifier> {
    fit_forest(model, tree.n, &tree.edges)
}

/// The edgeless factorization: class-conditionally independent variables.
pub fn naive_bayes_classifier(model: &ClassModel) -> Result<TreeClassifier> {
    fit_forest(model, model.n(), &[])
}

/// A classifier carrying each class's full distribution, without any
/// structural reduction — the error floor every tree fit is compared to.
pub fn complete_classifier(model: &ClassModel) -> Result<TreeClassifier> {
    let params = match model {
        ClassModel::Discrete(dm) => ClassifierParams::Discrete {
            distributions: dm.tables.clone(),
        },
        ClassModel::Gaussian(gm) => {
            let mut precisions = Vec::with_capacity(gm.class_count());
            let mut log_dets = Vec::with_capacity(gm.class_count());
            for cov in &gm.covariances {
                let n = gm.n;
                let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| cov[i][j]);
                let chol = mat
                    .cholesky()
                    .ok_or_else(|| numerical("covariance is not positive definite"))?;
                let inv = chol.inverse();
                let j: Vec<Vec<f64>> = (0..n)
                    .map(|i| (0..n).map(|k| inv[(i, k)]).collect())
                    .collect();
                log_dets.push(log_det_pd(&j)?);
                precisions.push(j);
            }
            ClassifierParams::Gaussian {
                precisions,
                log_dets,
            }
        }
    };
    Ok(TreeClassifier {
        n: model.n(),
        class_priors: model.class_priors().to_vec(),
        edges: Vec::new(),
        params,
    })
}

/// How classification error is measured against the true model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    /// Exact expected error by summation over all outcomes (discrete only).
    Exact,
    /// Error frequency on seeded samples from the true mixture.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Expected misclassification rate of `classifier` when the data truly come
/// from `model`.
pub fn evaluate_error(
    model: &ClassModel,
    classifier: &TreeClassifier,
    method: &EvalMethod,
) -> Result<f64> {
    if model.n() != classifier.n {
        return Err(validation("model and classifier dimension mismatch"));
    }
    match method {
        EvalMethod::Exact => {
            let ClassModel::Discrete(dm) = model else {
                return Err(validation(
                    "exact evaluation requires a discrete model; use the monte-carlo method",
                ));
            };
            let mut err = 0.0;
            for o in 0..(1u64 << dm.n) {
                let predicted = classifier.classify(&Observation::Discrete(o))?;
                for (c, (prior, table)) in
                    dm.class_priors.iter().zip(&dm.tables).enumerate()
                {
                    if c != predicted {
                        err += prior * table[o as usize];
                    }
                }
            }
            Ok(err)
        }
        EvalMethod::MonteCarlo { samples, seed } => {
            if *samples == 0 {
                return Err(validation("monte-carlo evaluation needs at least 1 sample"));
            }
            let sampler = ModelSampler::new(model)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut wrong = 0usize;
            for _ in 0..*samples {
                let (c, obs) = sampler.sample(&mut rng);
                if classifier.classify(&obs)? != c {
                    wrong += 1;
                }
            }
            Ok(wrong as f64 / *samples as f64)
        }
    }
}

/// Error frequency of `classifier` on an explicit labeled sample.
pub fn error_on_samples(
    classifier: &TreeClassifier,
    samples: &[(usize, Observation)],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(validation("cannot evaluate on an empty sample"));
    }
    let mut wrong = 0usize;
    for (c, obs) in samples {
        if classifier.classify(obs)? != *c {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / samples.len() as f64)
}
