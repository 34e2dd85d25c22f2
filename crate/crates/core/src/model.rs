//! Class-conditional probability models and the information-theoretic
//! oracles built on them.
//!
//! Two model families share one interface: discrete models hold an explicit
//! probability table over all 2^n outcomes of n binary variables per class,
//! Gaussian models hold a zero-mean covariance matrix per class. Every
//! information quantity (entropy, conditional mutual information, EAR
//! scores, edge weights) is computed in nats through the entropy identity
//! I(A;B|S) = H(A∪S) + H(B∪S) − H(A∪B∪S) − H(S), evaluated under one of
//! three scopes: a single class, the class-averaged value Σ_c p(c)·(·|c), or
//! the class mixture.
//!
//! A Gaussian mixture of classes is not itself Gaussian; mixture-scope
//! quantities use the moment-matched covariance Σ_mix = Σ_c p(c)·Σ_c, which
//! is exactly what a pooled sample covariance estimates for zero-mean
//! classes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, Result};
use crate::set::{GroundSet, SetFunction, Subset};

/// ln(2πe), the per-dimension constant of Gaussian differential entropy.
pub fn ln_2pie() -> f64 {
    (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()
}

/// Which distribution an information quantity is taken under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// The class mixture Σ_c p(c)·p(x|c) (Gaussians: moment-matched).
    Mixture,
    /// Class-averaged: Σ_c p(c) · (quantity under class c).
    ClassAveraged,
    /// A single class's distribution.
    Class(usize),
}

/// Compresses the bits of `outcome` selected by `mask` into a dense index,
/// preserving ascending bit order.
fn compress_bits(outcome: u64, mask: u64) -> usize {
    let mut out = 0usize;
    let mut k = 0;
    let mut m = mask;
    while m != 0 {
        let i = m.trailing_zeros();
        if outcome >> i & 1 == 1 {
            out |= 1 << k;
        }
        k += 1;
        m &= m - 1;
    }
    out
}

fn entropy_of(dist: &[f64]) -> f64 {
    dist.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

fn check_priors(priors: &[f64], class_count: usize) -> Result<()> {
    if priors.len() != class_count {
        return Err(validation(format!(
            "expected {class_count} class priors, got {}",
            priors.len()
        )));
    }
    if let Some((i, &p)) = priors.iter().enumerate().find(|&(_, &p)| !(0.0..=1.0).contains(&p)) {
        return Err(validation(format!(
            "prior for class {} is {p}, expected a probability",
            i + 1
        )));
    }
    let sum: f64 = priors.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(validation(format!(
            "class priors sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

type EntropyCache = Arc<Mutex<HashMap<(usize, u64), f64>>>;

/// n binary variables with one explicit joint table per class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteClassModel {
    pub n: usize,
    pub class_priors: Vec<f64>,
    /// One probability per outcome bitmask (variable v ⇔ bit v), per class.
    pub tables: Vec<Vec<f64>>,
    #[serde(skip, default = "new_cache")]
    cache: EntropyCache,
}

/// Zero-mean Gaussian variables with one covariance matrix per class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianClassModel {
    pub n: usize,
    pub class_priors: Vec<f64>,
    /// Row-major n×n symmetric positive-definite matrices, one per class.
    pub covariances: Vec<Vec<Vec<f64>>>,
    #[serde(skip, default = "new_cache")]
    cache: EntropyCache,
}

fn new_cache() -> EntropyCache {
    Arc::new(Mutex::new(HashMap::new()))
}

impl DiscreteClassModel {
    pub fn new(n: usize, class_priors: Vec<f64>, tables: Vec<Vec<f64>>) -> Result<Self> {
        let model = DiscreteClassModel {
            n,
            class_priors,
            tables,
            cache: new_cache(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n == 0 {
            return Err(validation("model needs at least 1 variable"));
        }
        if self.n > 16 {
            return Err(validation(format!(
                "discrete models support at most 16 variables, got {}",
                self.n
            )));
        }
        if self.tables.is_empty() {
            return Err(validation("model needs at least 1 class table"));
        }
        check_priors(&self.class_priors, self.tables.len())?;
        let size = 1usize << self.n;
        for (c, table) in self.tables.iter().enumerate() {
            if table.len() != size {
                return Err(validation(format!(
                    "table for class {} has {} entries, expected {size}",
                    c + 1,
                    table.len()
                )));
            }
            if let Some(&bad) = table.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(validation(format!(
                    "table for class {} contains invalid probability {bad}",
                    c + 1
                )));
            }
            let sum: f64 = table.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(validation(format!(
                    "table for class {} sums to {sum}, expected 1",
                    c + 1
                )));
            }
        }
        Ok(Vec::new())
    }

    pub fn class_count(&self) -> usize {
        self.tables.len()
    }

    /// Mixture mass of one outcome.
    pub fn mixture_mass(&self, outcome: u64) -> f64 {
        self.class_priors
            .iter()
            .zip(&self.tables)
            .map(|(p, t)| p * t[outcome as usize])
            .sum()
    }

    fn table_entropy(&self, table: &[f64], s: Subset) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        let mut marginal = vec![0.0; 1 << s.card()];
        for (o, &p) in table.iter().enumerate() {
            marginal[compress_bits(o as u64, s.0)] += p;
        }
        entropy_of(&marginal)
    }

    fn entropy_uncached(&self, s: Subset, scope: Scope) -> f64 {
        match scope {
            Scope::Class(c) => self.table_entropy(&self.tables[c], s),
            Scope::ClassAveraged => self
                .class_priors
                .iter()
                .zip(&self.tables)
                .map(|(p, t)| p * self.table_entropy(t, s))
                .sum(),
            Scope::Mixture => {
                let size = 1usize << self.n;
                let mixture: Vec<f64> = (0..size).map(|o| self.mixture_mass(o as u64)).collect();
                self.table_entropy(&mixture, s)
            }
        }
    }
}

impl GaussianClassModel {
    pub fn new(n: usize, class_priors: Vec<f64>, covariances: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let model = GaussianClassModel {
            n,
            class_priors,
            covariances,
            cache: new_cache(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n == 0 {
            return Err(validation("model needs at least 1 variable"));
        }
        if self.covariances.is_empty() {
            return Err(validation("model needs at least 1 class covariance"));
        }
        check_priors(&self.class_priors, self.covariances.len())?;
        for (c, cov) in self.covariances.iter().enumerate() {
            if cov.len() != self.n || cov.iter().any(|row| row.len() != self.n) {
                return Err(validation(format!(
                    "covariance for class {} is not {n}×{n}",
                    c + 1,
                    n = self.n
                )));
            }
            for i in 0..self.n {
                for j in (i + 1)..self.n {
                    if (cov[i][j] - cov[j][i]).abs() > 1e-12 {
                        return Err(validation(format!(
                            "covariance for class {} is asymmetric at ({i},{j})",
                            c + 1
                        )));
                    }
                }
            }
            let m = DMatrix::from_fn(self.n, self.n, |i, j| cov[i][j]);
            let eigs = m.symmetric_eigenvalues();
            let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_eig <= 0.0 {
                return Err(numerical(format!(
                    "covariance for class {} is not positive definite (smallest eigenvalue {min_eig})",
                    c + 1
                )));
            }
        }
        // Identical per-variable variances across classes are expected of the
        // synthetic protocol but only a warning for user-supplied models.
        let mut warnings = Vec::new();
        for i in 0..self.n {
            let v0 = self.covariances[0][i][i];
            for (c, cov) in self.covariances.iter().enumerate().skip(1) {
                if (cov[i][i] - v0).abs() > 1e-9 {
                    warnings.push(format!(
                        "variance of variable {i} differs between class 1 ({v0}) and class {} ({}); \
                         the synthetic protocol assumes identical variances",
                        c + 1,
                        cov[i][i]
                    ));
                }
            }
        }
        Ok(warnings)
    }

    pub fn class_count(&self) -> usize {
        self.covariances.len()
    }

    /// Moment-matched covariance of the class mixture (zero means).
    pub fn mixture_covariance(&self) -> Vec<Vec<f64>> {
        let mut mix = vec![vec![0.0; self.n]; self.n];
        for (p, cov) in self.class_priors.iter().zip(&self.covariances) {
            for i in 0..self.n {
                for j in 0..self.n {
                    mix[i][j] += p * cov[i][j];
                }
            }
        }
        mix
    }

    fn submatrix_entropy(cov: &[Vec<f64>], s: Subset) -> Result<f64> {
        let k = s.card();
        if k == 0 {
            return Ok(0.0);
        }
        let idx: Vec<usize> = s.members().collect();
        let sub = DMatrix::from_fn(k, k, |i, j| cov[idx[i]][idx[j]]);
        match sub.cholesky() {
            Some(chol) => {
                let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                Ok(0.5 * (k as f64 * ln_2pie() + log_det))
            }
            None => Err(numerical(format!(
                "covariance submatrix on {s:?} is not positive definite"
            ))),
        }
    }

    fn entropy_uncached(&self, s: Subset, scope: Scope) -> Result<f64> {
        match scope {
            Scope::Class(c) => Self::submatrix_entropy(&self.covariances[c], s),
            Scope::ClassAveraged => {
                let mut total = 0.0;
                for (p, cov) in self.class_priors.iter().zip(&self.covariances) {
                    total += p * Self::submatrix_entropy(cov, s)?;
                }
                Ok(total)
            }
            Scope::Mixture => Self::submatrix_entropy(&self.mixture_covariance(), s),
        }
    }
}

/// A class-conditional model of either family, as stored in model files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClassModel {
    Discrete(DiscreteClassModel),
    Gaussian(GaussianClassModel),
}

impl ClassModel {
    pub fn n(&self) -> usize {
        match self {
            ClassModel::Discrete(m) => m.n,
            ClassModel::Gaussian(m) => m.n,
        }
    }

    pub fn class_count(&self) -> usize {
        match self {
            ClassModel::Discrete(m) => m.class_count(),
            ClassModel::Gaussian(m) => m.class_count(),
        }
    }

    pub fn class_priors(&self) -> &[f64] {
        match self {
            ClassModel::Discrete(m) => &m.class_priors,
            ClassModel::Gaussian(m) => &m.class_priors,
        }
    }

    pub fn ground(&self) -> GroundSet {
        GroundSet::new(self.n()).expect("validated model has 1..=63 variables")
    }

    /// Validates all structural invariants; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        match self {
            ClassModel::Discrete(m) => m.validate(),
            ClassModel::Gaussian(m) => m.validate(),
        }
    }

    fn scope_key(&self, scope: Scope) -> Result<usize> {
        let c = match scope {
            Scope::Mixture => 0,
            Scope::ClassAveraged => 1,
            Scope::Class(c) => {
                if c >= self.class_count() {
                    return Err(validation(format!(
                        "class index {c} out of range for {} classes",
                        self.class_count()
                    )));
                }
                2 + c
            }
        };
        Ok(c)
    }

    /// Marginal entropy of the variables in S, in nats. Discrete models use
    /// the exact table; Gaussian models use ½·ln((2πe)^|S|·det Σ_S) with
    /// H(∅) = 0 by the normalization convention.
    pub fn entropy(&self, s: Subset, scope: Scope) -> Result<f64> {
        if !s.is_subset_of(Subset::full(self.n())) {
            return Err(validation(format!(
                "subset {s:?} out of range for n={}",
                self.n()
            )));
        }
        let key = (self.scope_key(scope)?, s.0);
        let cache = match self {
            ClassModel::Discrete(m) => &m.cache,
            ClassModel::Gaussian(m) => &m.cache,
        };
        if let Some(&v) = cache.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let value = match self {
            ClassModel::Discrete(m) => m.entropy_uncached(s, scope),
            ClassModel::Gaussian(m) => m.entropy_uncached(s, scope)?,
        };
        cache.lock().unwrap().insert(key, value);
        Ok(value)
    }

    /// I(A;B|cond) under the given scope, via the entropy identity.
    pub fn mutual_information(
        &self,
        a: Subset,
        b: Subset,
        cond: Subset,
        scope: Scope,
    ) -> Result<f64> {
        if !a.intersect(b).is_empty()
            || !a.intersect(cond).is_empty()
            || !b.intersect(cond).is_empty()
        {
            return Err(validation(format!(
                "blocks must be pairwise disjoint, got A={a:?} B={b:?} cond={cond:?}"
            )));
        }
        Ok(self.entropy(a.union(cond), scope)? + self.entropy(b.union(cond), scope)?
            - self.entropy(a.union(b).union(cond), scope)?
            - self.entropy(cond, scope)?)
    }

    /// I(A;B|cond), class-averaged (`with_class`) or under the mixture.
    pub fn conditional_mi(
        &self,
        a: Subset,
        b: Subset,
        cond: Subset,
        with_class: bool,
    ) -> Result<f64> {
        let scope = if with_class {
            Scope::ClassAveraged
        } else {
            Scope::Mixture
        };
        self.mutual_information(a, b, cond, scope)
    }

    /// EAR score of the partition (S vs the rest) around pivot x:
    /// I(S; V∖S∖{x} | x, C) − I(S; V∖S∖{x} | x). Positive values mean the
    /// dependence across the cut is mostly class-conditional, i.e.
    /// discriminative.
    pub fn ear_score(&self, s: Subset, x: usize) -> Result<f64> {
        let n = self.n();
        if x >= n {
            return Err(validation(format!("pivot {x} out of range for n={n}")));
        }
        if s.contains(x) {
            return Err(validation(format!("pivot {x} must not belong to S={s:?}")));
        }
        let pivot = Subset::singleton(x);
        let rest = Subset::full(n).minus(s).minus(pivot);
        if s.is_empty() || rest.is_empty() {
            return Err(validation(format!(
                "S={s:?} must be a proper non-empty subset of the non-pivot variables"
            )));
        }
        Ok(self.mutual_information(s, rest, pivot, Scope::ClassAveraged)?
            - self.mutual_information(s, rest, pivot, Scope::Mixture)?)
    }

    /// Pairwise edge weights for spanning-tree learning.
    pub fn mi_edge_weights(&self, variant: WeightVariant) -> Result<EdgeWeightMatrix> {
        let scope = match variant {
            WeightVariant::MarginalMi => Scope::Mixture,
            WeightVariant::ConditionalMi => Scope::ClassAveraged,
            WeightVariant::Classwise(c) => Scope::Class(c),
        };
        let n = self.n();
        let mut weights = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.mutual_information(
                    Subset::singleton(i),
                    Subset::singleton(j),
                    Subset::EMPTY,
                    scope,
                )?;
                weights[i][j] = w;
                weights[j][i] = w;
            }
        }
        Ok(EdgeWeightMatrix { variant, weights })
    }

    /// Restriction of the model to a sorted list of variables; recursive
    /// structure learning operates on these induced sub-models.
    pub fn marginalize(&self, vars: &[usize]) -> Result<ClassModel> {
        let n = self.n();
        if vars.is_empty() {
            return Err(validation("cannot marginalize onto an empty variable set"));
        }
        if vars.windows(2).any(|w| w[0] >= w[1]) || *vars.last().unwrap() >= n {
            return Err(validation(format!(
                "variable list {vars:?} must be strictly ascending and < {n}"
            )));
        }
        let mask = Subset::from_members(vars.iter().copied());
        match self {
            ClassModel::Discrete(m) => {
                let mut tables = Vec::with_capacity(m.tables.len());
                for table in &m.tables {
                    let mut t = vec![0.0; 1 << vars.len()];
                    for (o, &p) in table.iter().enumerate() {
                        t[compress_bits(o as u64, mask.0)] += p;
                    }
                    tables.push(t);
                }
                Ok(ClassModel::Discrete(DiscreteClassModel::new(
                    vars.len(),
                    m.class_priors.clone(),
                    tables,
                )?))
            }
            ClassModel::Gaussian(m) => {
                let covs = m
                    .covariances
                    .iter()
                    .map(|cov| {
                        vars.iter()
                            .map(|&i| vars.iter().map(|&j| cov[i][j]).collect())
                            .collect()
                    })
                    .collect();
                Ok(ClassModel::Gaussian(GaussianClassModel::new(
                    vars.len(),
                    m.class_priors.clone(),
                    covs,
                )?))
            }
        }
    }

    /// Entropy oracle f(A) = H(A) under the scope, as a normalized set
    /// function (submodular for both families).
    pub fn entropy_oracle(&self, scope: Scope) -> Result<SetFunction> {
        self.scope_key(scope)?;
        let model = self.clone();
        Ok(SetFunction::new(self.ground(), move |a| {
            model
                .entropy(a, scope)
                .expect("validated model evaluates entropy on any subset")
        }))
    }

    /// Symmetric cut-information oracle f(A) = I(A; V∖A) under the scope:
    /// symmetric, submodular, and hence posimodular.
    pub fn symmetric_mi_oracle(&self, scope: Scope) -> Result<SetFunction> {
        self.scope_key(scope)?;
        let model = self.clone();
        let n = self.n();
        Ok(SetFunction::new(self.ground(), move |a| {
            let rest = a.complement(n);
            if a.is_empty() || rest.is_empty() {
                return 0.0;
            }
            model
                .mutual_information(a, rest, Subset::EMPTY, scope)
                .expect("validated model evaluates MI on any partition")
        }))
    }
}

/// Which pairwise-MI variant weights the edges of a learned tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightVariant {
    /// I(Xi; Xj) under the class mixture.
    MarginalMi,
    /// I(Xi; Xj | C) = Σ_c p(c)·I_c(Xi; Xj).
    ConditionalMi,
    /// I(Xi; Xj | C = c) for one class (0-based index).
    Classwise(usize),
}

/// Symmetric non-negative pairwise weights with zero diagonal.
#[derive(Debug, Clone)]
pub struct EdgeWeightMatrix {
    pub variant: WeightVariant,
    pub weights: Vec<Vec<f64>>,
}

impl EdgeWeightMatrix {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }
}

/// Construction recipe for the synthetic two-class Gaussian benchmark: a
/// chain backbone shared by both classes (neighbor correlation
/// `common_strength`, slightly tilted per class so generative structure
/// still carries some class signal), plus one designated pair (0, n−1)
/// whose extra correlation `disc_strength` flips sign between classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub seed: u64,
    pub common_strength: f64,
    pub disc_strength: f64,
    /// Class asymmetry of the backbone: class 1 neighbors correlate at
    /// common_strength + tilt, class 2 at common_strength − tilt. Zero makes
    /// the backbone carry no class information at all.
    pub backbone_tilt: f64,
    pub diagonal_load: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 6,
            seed: 0,
            common_strength: 0.6,
            disc_strength: 0.2,
            backbone_tilt: 0.05,
            diagonal_load: 0.0,
        }
    }
}

/// Builds the two-class synthetic Gaussian model. Fails with the offending
/// eigenvalue if a class covariance is not positive definite after loading.
pub fn synth_model(spec: &SynthSpec) -> Result<GaussianClassModel> {
    let n = spec.n;
    if n < 2 {
        return Err(validation("synthetic models need at least 2 variables"));
    }
    let mut covariances = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let rho = spec.common_strength + sign * spec.backbone_tilt;
        if rho.abs() >= 1.0 {
            return Err(validation(format!(
                "backbone correlation {rho} is not in (−1, 1)"
            )));
        }
        let mut cov = vec![vec![0.0; n]; n];
        for (i, row) in cov.iter_mut().enumerate() {
            for (j, value) in row.iter_mut().enumerate() {
                *value = rho.powi((i as i32 - j as i32).abs());
            }
        }
        cov[0][n - 1] += sign * spec.disc_strength;
        cov[n - 1][0] += sign * spec.disc_strength;
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] += spec.diagonal_load;
        }
        covariances.push(cov);
    }
    GaussianClassModel::new(n, vec![0.5, 0.5], covariances)
}

/// One observation drawn from a class model.
#[derive(Debug, Clone)]
pub enum Observation {
    Discrete(u64),
    Continuous(Vec<f64>),
}

/// Seeded sampler over a class model's mixture (class by prior, then the
/// class conditional). Gaussian classes pre-factor their covariances.
pub struct ModelSampler {
    model: ClassModel,
    cholesky: Vec<DMatrix<f64>>,
}

impl ModelSampler {
    pub fn new(model: &ClassModel) -> Result<Self> {
        let cholesky = match model {
            ClassModel::Discrete(_) => Vec::new(),
            ClassModel::Gaussian(m) => m
                .covariances
                .iter()
                .enumerate()
                .map(|(c, cov)| {
                    let mat = DMatrix::from_fn(m.n, m.n, |i, j| cov[i][j]);
                    mat.cholesky().map(|ch| ch.l()).ok_or_else(|| {
                        numerical(format!("covariance for class {} has no Cholesky factor", c + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(ModelSampler {
            model: model.clone(),
            cholesky,
        })
    }

    fn sample_class(&self, rng: &mut impl RngExt) -> usize {
        let u: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        for (c, &p) in self.model.class_priors().iter().enumerate() {
            acc += p;
            if u < acc {
                return c;
            }
        }
        self.model.class_count() - 1
    }

    pub fn sample(&self, rng: &mut impl RngExt) -> (usize, Observation) {
        let c = self.sample_class(rng);
        (c, self.sample_given_class(c, rng).1)
    }

    /// Draws from one class's conditional distribution.
    pub fn sample_given_class(&self, c: usize, rng: &mut impl RngExt) -> (usize, Observation) {
        match &self.model {
            ClassModel::Discrete(m) => {
                let u: f64 = rng.random_range(0.0..1.0);
                let mut acc = 0.0;
                let table = &m.tables[c];
                for (o, &p) in table.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return (c, Observation::Discrete(o as u64));
                    }
                }
                (c, Observation::Discrete(table.len() as u64 - 1))
            }
            ClassModel::Gaussian(m) => {
                let z = DMatrix::from_fn(m.n, 1, |_, _| standard_normal(rng));
                let x = &self.cholesky[c] * z;
                (c, Observation::Continuous(x.column(0).iter().copied().collect()))
            }
        }
    }
}

/// Box–Muller standard normal draw from a uniform generator, so samples are
/// identical on every platform for a fixed seed.
pub fn standard_normal(rng: &mut impl RngExt) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Maximum-likelihood covariance with the zero-mean convention: (1/N)·XᵀX.
pub fn sample_covariance_zero_mean(samples: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    if samples.is_empty() {
        return Err(validation("cannot estimate a covariance from no samples"));
    }
    let mut cov = vec![vec![0.0; n]; n];
    for x in samples {
        if x.len() != n {
            return Err(validation("sample dimension mismatch"));
        }
        for i in 0..n {
            for j in 0..n {
                cov[i][j] += x[i] * x[j];
            }
        }
    }
    let scale = 1.0 / samples.len() as f64;
    for row in &mut cov {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::{check_property, Property};
    use rand::SeedableRng;

    fn uniform_discrete(n: usize) -> ClassModel {
        let size = 1 << n;
        ClassModel::Discrete(
            DiscreteClassModel::new(n, vec![1.0], vec![vec![1.0 / size as f64; size]]).unwrap(),
        )
    }

    fn two_class_discrete() -> ClassModel {
        // Class 1 is uniform; class 2 makes the two variables agree 90% of
        // the time, so their dependence exists only within class 2.
        let t1 = vec![0.25; 4];
        let t2 = vec![0.45, 0.05, 0.05, 0.45];
        ClassModel::Discrete(DiscreteClassModel::new(2, vec![0.5, 0.5], vec![t1, t2]).unwrap())
    }

    fn gaussian_pair(corr: f64) -> ClassModel {
        ClassModel::Gaussian(
            GaussianClassModel::new(
                2,
                vec![1.0],
                vec![vec![vec![1.0, corr], vec![corr, 1.0]]],
            )
            .unwrap(),
        )
    }

    #[test]
    fn validation_rejects_bad_tables_with_one_based_class_names() {
        let err = DiscreteClassModel::new(2, vec![1.0], vec![vec![0.5, 0.5, 0.5, 0.5]])
            .unwrap_err()
            .to_string();
        assert!(err.contains("class 1"), "{err}");
        let err = DiscreteClassModel::new(
            1,
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5], vec![0.7, 0.4]],
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("class 2"), "{err}");
    }

    #[test]
    fn validation_rejects_bad_priors_and_non_pd_covariances() {
        assert!(DiscreteClassModel::new(1, vec![0.6, 0.6], vec![vec![0.5, 0.5]; 2]).is_err());
        let err = GaussianClassModel::new(
            2,
            vec![1.0],
            vec![vec![vec![1.0, 2.0], vec![2.0, 1.0]]],
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("eigenvalue"));
    }

    #[test]
    fn differing_variances_warn_but_load() {
        let m = GaussianClassModel::new(
            1,
            vec![0.5, 0.5],
            vec![vec![vec![1.0]], vec![vec![2.0]]],
        )
        .unwrap();
        let warnings = m.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("identical variances"));
    }

    #[test]
    fn uniform_table_entropy_is_n_ln2() {
        let m = uniform_discrete(3);
        let h = m.entropy(Subset::full(3), Scope::Mixture).unwrap();
        assert!((h - 3.0 * 2f64.ln()).abs() <= 1e-12);
        assert_eq!(m.entropy(Subset::EMPTY, Scope::Mixture).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_entropy_closed_forms() {
        let m = gaussian_pair(0.5);
        let h1 = m.entropy(Subset::singleton(0), Scope::Class(0)).unwrap();
        assert!((h1 - 0.5 * ln_2pie()).abs() <= 1e-12);
        let h12 = m.entropy(Subset::full(2), Scope::Class(0)).unwrap();
        assert!((h12 - 0.5 * (2.0 * ln_2pie() + 0.75f64.ln())).abs() <= 1e-12);
        // Independence: diagonal covariance is additive.
        let ind = gaussian_pair(0.0);
        let sum = ind.entropy(Subset::singleton(0), Scope::Class(0)).unwrap()
            + ind.entropy(Subset::singleton(1), Scope::Class(0)).unwrap();
        assert!((ind.entropy(Subset::full(2), Scope::Class(0)).unwrap() - sum).abs() <= 1e-12);
    }

    #[test]
    fn mi_is_zero_under_independence_and_positive_under_correlation() {
        let ind = gaussian_pair(0.0);
        let mi = ind
            .mutual_information(Subset::singleton(0), Subset::singleton(1), Subset::EMPTY, Scope::Class(0))
            .unwrap();
        assert!(mi.abs() <= 1e-12);
        let dep = gaussian_pair(0.5);
        let mi = dep
            .mutual_information(Subset::singleton(0), Subset::singleton(1), Subset::EMPTY, Scope::Class(0))
            .unwrap();
        assert!((mi - -0.5 * 0.75f64.ln()).abs() <= 1e-12);
    }

    #[test]
    fn disjointness_is_enforced() {
        let m = uniform_discrete(3);
        assert!(m
            .mutual_information(
                Subset::from_members([0, 1]),
                Subset::singleton(1),
                Subset::EMPTY,
                Scope::Mixture
            )
            .is_err());
    }

    #[test]
    fn single_class_scopes_coincide() {
        let m = uniform_discrete(3);
        for s in [Subset::singleton(0), Subset::from_members([0, 2])] {
            let a = m.entropy(s, Scope::Mixture).unwrap();
            let b = m.entropy(s, Scope::ClassAveraged).unwrap();
            let c = m.entropy(s, Scope::Class(0)).unwrap();
            assert!((a - b).abs() <= 1e-15 && (b - c).abs() <= 1e-15);
        }
    }

    #[test]
    fn identical_class_tables_zero_every_ear_score() {
        let t = vec![0.1, 0.2, 0.3, 0.05, 0.05, 0.1, 0.15, 0.05];
        let m = ClassModel::Discrete(
            DiscreteClassModel::new(3, vec![0.5, 0.5], vec![t.clone(), t]).unwrap(),
        );
        for x in 0..3 {
            for s in [0usize, 1, 2] {
                if s == x {
                    continue;
                }
                let score = m.ear_score(Subset::singleton(s), x).unwrap();
                assert!(score.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn ear_score_is_symmetric_in_the_partition() {
        let m = two_class_model_4();
        for x in 0..4 {
            let free: Vec<usize> = (0..4).filter(|&i| i != x).collect();
            let s = Subset::singleton(free[0]);
            let comp = Subset::from_members(free[1..].iter().copied());
            let a = m.ear_score(s, x).unwrap();
            let b = m.ear_score(comp, x).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    fn two_class_model_4() -> ClassModel {
        // Arbitrary fixed two-class table on 4 variables, normalized.
        let mut t1: Vec<f64> = (0..16).map(|i| 1.0 + ((i * 7) % 5) as f64).collect();
        let mut t2: Vec<f64> = (0..16).map(|i| 1.0 + ((i * 3) % 7) as f64).collect();
        let s1: f64 = t1.iter().sum();
        let s2: f64 = t2.iter().sum();
        t1.iter_mut().for_each(|p| *p /= s1);
        t2.iter_mut().for_each(|p| *p /= s2);
        ClassModel::Discrete(DiscreteClassModel::new(4, vec![0.5, 0.5], vec![t1, t2]).unwrap())
    }

    #[test]
    fn entropy_oracles_are_submodular_and_cut_mi_is_symmetric() {
        let m = two_class_model_4();
        let h = m.entropy_oracle(Scope::Mixture).unwrap();
        assert!(check_property(&h, Property::Submodular, 1e-9).unwrap().holds);
        let f = m.symmetric_mi_oracle(Scope::ClassAveraged).unwrap();
        assert!(check_property(&f, Property::Symmetric, 1e-9).unwrap().holds);
        assert!(check_property(&f, Property::Submodular, 1e-9).unwrap().holds);
        assert!(check_property(&f, Property::Posimodular, 1e-9).unwrap().holds);
    }

    #[test]
    fn chain_rule_on_random_subsets() {
        let m = two_class_model_4();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let a = Subset(rng.random_range(0..16u64));
            let b = Subset(rng.random_range(0..16u64)).minus(a);
            // H(A∪B) = H(A) + H(B|A), with H(B|A) = H(A∪B) − H(A) by
            // definition; verify through the MI identity instead:
            // I(A;B) = H(A) + H(B) − H(A∪B) ≥ 0.
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let mi = m
                .mutual_information(a, b, Subset::EMPTY, Scope::Mixture)
                .unwrap();
            assert!(mi >= -1e-10);
            let h = m.entropy(a.union(b), Scope::Mixture).unwrap();
            let ha = m.entropy(a, Scope::Mixture).unwrap();
            let hb = m.entropy(b, Scope::Mixture).unwrap();
            assert!((h - (ha + hb - mi)).abs() <= 1e-12);
        }
    }

    #[test]
    fn marginalization_matches_direct_tables() {
        let m = two_class_model_4();
        let sub = m.marginalize(&[1, 3]).unwrap();
        assert_eq!(sub.n(), 2);
        // Entropy of {1,3} in the original equals entropy of all variables
        // in the marginalized model.
        let orig = m
            .entropy(Subset::from_members([1, 3]), Scope::Mixture)
            .unwrap();
        let new = sub.entropy(Subset::full(2), Scope::Mixture).unwrap();
        assert!((orig - new).abs() <= 1e-12);
        assert!(m.marginalize(&[3, 1]).is_err());
        assert!(m.marginalize(&[]).is_err());
    }

    #[test]
    fn synth_model_shapes_and_degenerate_cases() {
        let spec = SynthSpec::default();
        let m = synth_model(&spec).unwrap();
        assert_eq!(m.class_count(), 2);
        assert!((m.covariances[0][0][5] - (0.65f64.powi(5) + 0.2)).abs() <= 1e-15);
        assert!((m.covariances[1][0][5] - (0.55f64.powi(5) - 0.2)).abs() <= 1e-15);
        assert!(m.validate().unwrap().is_empty());

        // No class-specific components at all → identical covariances.
        let spec = SynthSpec {
            disc_strength: 0.0,
            backbone_tilt: 0.0,
            ..SynthSpec::default()
        };
        let m = synth_model(&spec).unwrap();
        assert_eq!(m.covariances[0], m.covariances[1]);

        // Pure discriminative pair: identity plus the flipped corner.
        let spec = SynthSpec {
            common_strength: 0.0,
            backbone_tilt: 0.0,
            disc_strength: 0.3,
            n: 4,
            ..SynthSpec::default()
        };
        let m = synth_model(&spec).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j {
                    1.0
                } else if (i, j) == (0, 3) || (i, j) == (3, 0) {
                    0.3
                } else {
                    0.0
                };
                assert_eq!(m.covariances[0][i][j], expected);
                assert_eq!(m.covariances[1][i][j], -expected + if i == j { 2.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn sampler_is_deterministic_and_covariance_estimates_converge() {
        let m = ClassModel::Gaussian(synth_model(&SynthSpec::default()).unwrap());
        let sampler = ModelSampler::new(&m).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut per_class: Vec<Vec<Vec<f64>>> = vec![Vec::new(), Vec::new()];
        for _ in 0..4000 {
            let (c, obs) = sampler.sample(&mut rng);
            if let Observation::Continuous(x) = obs {
                per_class[c].push(x);
            }
        }
        let est = sample_covariance_zero_mean(&per_class[0], 6).unwrap();
        if let ClassModel::Gaussian(g) = &m {
            // Loose 3σ-ish bound for ~2000 samples.
            assert!((est[0][1] - g.covariances[0][0][1]).abs() < 0.1);
            assert!((est[0][5] - g.covariances[0][0][5]).abs() < 0.1);
        }
        // Determinism.
        let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let (c, obs) = sampler.sample(&mut rng2);
        let mut rng3 = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let (c2, obs2) = sampler.sample(&mut rng3);
        assert_eq!(c, c2);
        if let (Observation::Continuous(a), Observation::Continuous(b)) = (obs, obs2) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn model_json_round_trips_with_type_tag() {
        let m = two_class_discrete();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"type\":\"discrete\""));
        let back: ClassModel = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
        let g = gaussian_pair(0.25);
        let json = serde_json::to_string(&g).unwrap();
        assert!(json.contains("\"type\":\"gaussian\""));
        let back: ClassModel = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn classwise_weights_require_valid_class() {
        let m = two_class_discrete();
        assert!(m.mi_edge_weights(WeightVariant::Classwise(2)).is_err());
        let w = m.mi_edge_weights(WeightVariant::Classwise(1)).unwrap();
        assert!(w.weight(0, 1) > 0.0); // class 2 couples the two variables
        let w1 = m.mi_edge_weights(WeightVariant::Classwise(0)).unwrap();
        assert!(w1.weight(0, 1).abs() <= 1e-12); // class 1 is uniform
    }
}
