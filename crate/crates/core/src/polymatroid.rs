//! Modular lower bounds from Edmonds' greedy chain construction.
//!
//! Given a submodular g and a permutation π of the ground set, the chain
//! differences h(π(i)) = g(Wᵢ) − g(Wᵢ₋₁) over prefixes Wᵢ = {π(1),…,π(i)}
//! define a modular function that (a) agrees with g on every chain prefix and
//! (b) never exceeds g anywhere. These vertices of the base polytope
//! {x : x(S) ≤ g(S) ∀S, x(V) = g(V)} are both the tight upper bounds consumed
//! by the descent loop and the linear-optimization oracle of the
//! minimum-norm-point minimizer.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::set::{GroundSet, PropertyReport, SetFunction, Subset, Violation};

/// A modular set function: one real weight per element, evaluating on a
/// subset as the sum of member weights (so the value at ∅ is exactly 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModularWeights {
    weights: Vec<f64>,
}

impl ModularWeights {
    pub fn new(weights: Vec<f64>) -> Self {
        ModularWeights { weights }
    }

    pub fn zeros(n: usize) -> Self {
        ModularWeights { weights: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eval(&self, a: Subset) -> f64 {
        a.members().map(|i| self.weights[i]).sum()
    }

    /// Value on the full ground set.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Inner product with another weight vector.
    pub fn dot(&self, other: &ModularWeights) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn as_set_function(&self) -> SetFunction {
        SetFunction::modular(self.weights.clone()).expect("weights non-empty")
    }
}

/// A bijective arrangement of all ground-set elements. "Begins with A" means
/// the first |A| positions are exactly the elements of A.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(validation(format!(
                    "order {order:?} is not a permutation of 0..{n}"
                )));
            }
            seen[i] = true;
        }
        Ok(Permutation { order })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { order: (0..n).collect() }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    /// The chain prefix W_i = {π(1), …, π(i)} (i = 0 gives ∅).
    pub fn prefix(&self, i: usize) -> Subset {
        Subset::from_members(self.order[..i].iter().copied())
    }

    pub fn begins_with(&self, a: Subset) -> bool {
        self.prefix(a.card()) == a
    }
}

/// Chain differences of g along π: h(π(i)) = g(Wᵢ) − g(Wᵢ₋₁).
///
/// For submodular g the result is a pointwise lower bound on g that is tight
/// on every chain prefix (in particular h(V) = g(V)).
pub fn modular_approximation(g: &SetFunction, pi: &Permutation) -> Result<ModularWeights> {
    if pi.n() != g.n() {
        return Err(validation(format!(
            "permutation over {} elements does not match ground set of {}",
            pi.n(),
            g.n()
        )));
    }
    let mut weights = vec![0.0; g.n()];
    let mut prefix = Subset::EMPTY;
    let mut prev = 0.0; // g(∅)
    for &x in pi.order() {
        prefix = prefix.insert(x);
        let cur = g.eval(prefix);
        weights[x] = cur - prev;
        prev = cur;
    }
    Ok(ModularWeights::new(weights))
}

/// Seeded random permutation whose first |A| positions are a uniform shuffle
/// of A's elements and whose remaining positions are a uniform shuffle of the
/// complement. Pure function of (A, seed); the generator is ChaCha so traces
/// reproduce across platforms.
pub fn permutation_beginning_with(a: Subset, ground: &GroundSet, seed: u64) -> Result<Permutation> {
    if !a.is_subset_of(ground.full()) {
        return Err(validation(format!(
            "subset {a:?} out of range for n={}",
            ground.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut head: Vec<usize> = a.members().collect();
    let mut tail: Vec<usize> = ground.members().filter(|&i| !a.contains(i)).collect();
    head.shuffle(&mut rng);
    tail.shuffle(&mut rng);
    head.extend(tail);
    Permutation::new(head)
}

/// Edmonds' greedy solution of max c·x over the base polytope of g: sort
/// elements by non-increasing c-weight (ties by ascending index) and take the
/// chain differences along that order.
pub fn greedy_vertex(g: &SetFunction, c: &ModularWeights) -> Result<ModularWeights> {
    if c.n() != g.n() {
        return Err(validation("direction vector length does not match ground set"));
    }
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by(|&i, &j| {
        c.weight(j)
            .partial_cmp(&c.weight(i))
            .expect("non-finite weight in direction vector")
            .then(i.cmp(&j))
    });
    modular_approximation(g, &Permutation::new(order)?)
}

/// Brute-force membership check for the base polytope: h(S) ≤ g(S) + tol for
/// every S, and h(V) = g(V) up to tol. Only for enumerable ground sets
/// (n ≤ 16).
pub fn in_base_polytope(g: &SetFunction, h: &ModularWeights, tolerance: f64) -> Result<PropertyReport> {
    let n = g.n();
    if n > 16 {
        return Err(validation(format!(
            "ground set too large for brute-force base-polytope check: n={n} exceeds 16"
        )));
    }
    if h.n() != n {
        return Err(validation("weight vector length does not match ground set"));
    }
    let mut violations = Vec::new();
    for s in g.ground().subsets() {
        let hs = h.eval(s);
        let gs = g.eval(s);
        if hs > gs + tolerance {
            violations.push(Violation { a: s, b: s, lhs: hs, rhs: gs });
        }
    }
    let full = g.ground().full();
    let (hv, gv) = (h.eval(full), g.eval(full));
    if (hv - gv).abs() > tolerance {
        violations.push(Violation { a: full, b: full, lhs: hv, rhs: gv });
    }
    Ok(PropertyReport::from_violations(violations, tolerance))
}
