//! Ground sets, bit-indexed subsets, and normalized set-function oracles.
//!
//! Subsets are stored as `u64` bitmasks against a fixed ground set of at most
//! 63 elements, so union/intersection/difference are single instructions and
//! "iterate all subsets" is integer counting. Every oracle is normalized at
//! construction so that `f(∅) = 0`: the raw value at the empty set is cached
//! as an offset and subtracted from every evaluation. All downstream math
//! (modular approximations, base-polytope membership, the descent loop)
//! assumes that normalization.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{validation, Result};

/// The finite universe V whose subsets the set functions score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(validation("ground set must have at least 1 element"));
        }
        if n > 63 {
            return Err(validation(format!(
                "ground set of {n} elements exceeds the bit-indexed limit of 63"
            )));
        }
        Ok(GroundSet { n, labels: None })
    }

    pub fn with_labels(n: usize, labels: Vec<String>) -> Result<Self> {
        let mut ground = Self::new(n)?;
        if labels.len() != n {
            return Err(validation(format!(
                "expected {n} labels, got {}",
                labels.len()
            )));
        }
        let mut seen = labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != n {
            return Err(validation("labels must be distinct"));
        }
        ground.labels = Some(labels);
        Ok(ground)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(ls) => ls[i].clone(),
            None => format!("x{i}"),
        }
    }

    /// The full set V as a subset mask.
    pub fn full(&self) -> Subset {
        Subset::full(self.n)
    }

    /// All 2^n subsets in bitmask order. Caller is responsible for keeping n
    /// small enough to enumerate.
    pub fn subsets(&self) -> impl Iterator<Item = Subset> {
        (0u64..(1u64 << self.n)).map(Subset)
    }

    /// All proper non-empty subsets (A ∉ {∅, V}) in bitmask order.
    pub fn proper_subsets(&self) -> impl Iterator<Item = Subset> {
        let full = (1u64 << self.n) - 1;
        (1u64..full).map(Subset)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> {
        0..self.n
    }
}

/// A subset of a ground set, stored as a bitmask (element i ⇔ bit i).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(pub u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(n: usize) -> Subset {
        Subset(((1u128 << n) - 1) as u64)
    }

    pub fn singleton(i: usize) -> Subset {
        Subset(1 << i)
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Subset {
        let mut mask = 0u64;
        for i in members {
            mask |= 1 << i;
        }
        Subset(mask)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(self, i: usize) -> Subset {
        Subset(self.0 | 1 << i)
    }

    pub fn remove(self, i: usize) -> Subset {
        Subset(self.0 & !(1 << i))
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersect(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    /// Set difference self ∖ other.
    pub fn minus(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    /// Complement within a ground set of n elements.
    pub fn complement(self, n: usize) -> Subset {
        Subset(!self.0 & Subset::full(n).0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn card(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut mask = self.0;
        std::iter::from_fn(move || {
            if mask == 0 {
                None
            } else {
                let i = mask.trailing_zeros() as usize;
                mask &= mask - 1;
                Some(i)
            }
        })
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

type OracleFn = dyn Fn(Subset) -> f64 + Send + Sync;

/// A normalized set-function oracle f : 2^V → ℝ with f(∅) = 0.
///
/// Evaluations are counted (shared across clones) so minimization engines can
/// report their oracle-call budgets.
#[derive(Clone)]
pub struct SetFunction {
    ground: GroundSet,
    raw: Arc<OracleFn>,
    offset: f64,
    calls: Arc<AtomicU64>,
}

impl SetFunction {
    /// Wraps a raw map, caching its value at ∅ as the normalization offset.
    pub fn new<F>(ground: GroundSet, raw: F) -> Self
    where
        F: Fn(Subset) -> f64 + Send + Sync + 'static,
    {
        let offset = raw(Subset::EMPTY);
        SetFunction {
            ground,
            raw: Arc::new(raw),
            offset,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Oracle backed by an explicit table of 2^n values indexed by bitmask.
    pub fn from_table(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(validation(format!(
                "table length {len} is not a power of two ≥ 2"
            )));
        }
        let n = len.trailing_zeros() as usize;
        if n > 16 {
            return Err(validation(format!(
                "explicit tables support at most 16 elements, got {n}"
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(validation(format!("table contains non-finite value {bad}")));
        }
        let ground = GroundSet::new(n)?;
        Ok(SetFunction::new(ground, move |a| values[a.0 as usize]))
    }

    /// Modular oracle: f(A) = Σ_{x∈A} w(x).
    pub fn modular(weights: Vec<f64>) -> Result<Self> {
        let ground = GroundSet::new(weights.len())?;
        Ok(SetFunction::new(ground, move |a| {
            a.members().map(|i| weights[i]).sum()
        }))
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn n(&self) -> usize {
        self.ground.len()
    }

    /// Normalized evaluation f(A) − f(∅).
    pub fn eval(&self, a: Subset) -> f64 {
        debug_assert!(
            a.is_subset_of(self.ground.full()),
            "subset {a:?} out of range for n={}",
            self.ground.len()
        );
        self.calls.fetch_add(1, Ordering::Relaxed);
        if a.is_empty() {
            return 0.0;
        }
        (self.raw)(a) - self.offset
    }

    /// ρ_f(A, x) = f(A ∪ {x}) − f(A). Errors if x ∈ A.
    pub fn incremental_gain(&self, a: Subset, x: usize) -> Result<f64> {
        if a.contains(x) {
            return Err(validation(format!("element {x} already present in {a:?}")));
        }
        Ok(self.eval(a.insert(x)) - self.eval(a))
    }

    /// Total oracle calls so far, shared across clones of this oracle.
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Pointwise difference f − h against a modular function, as a new
    /// normalized oracle on the same ground set.
    pub fn minus_modular(&self, h: &crate::polymatroid::ModularWeights) -> SetFunction {
        let inner = self.clone();
        let h = h.clone();
        SetFunction::new(self.ground.clone(), move |a| inner.eval(a) - h.eval(a))
    }

    /// Pointwise sum of two oracles on the same ground set.
    pub fn plus(&self, other: &SetFunction) -> Result<SetFunction> {
        if self.n() != other.n() {
            return Err(validation("oracle ground sets differ"));
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(SetFunction::new(self.ground.clone(), move |s| {
            a.eval(s) + b.eval(s)
        }))
    }

    /// Scaled oracle k·f (k ≥ 0 preserves submodularity).
    pub fn scaled(&self, k: f64) -> SetFunction {
        let inner = self.clone();
        SetFunction::new(self.ground.clone(), move |a| k * inner.eval(a))
    }

    /// Reduction for constrained minimization: forces `fixed_in` into every
    /// evaluated set and drops `excluded` from the ground set entirely.
    ///
    /// The reduced oracle lives on a fresh ground set of the remaining
    /// elements (in ascending original order) and evaluates
    /// f'(S) = f(σ(S) ∪ fixed_in) − f(fixed_in), which keeps normalization
    /// and submodularity. `back_map` translates a reduced-minimizer back into
    /// original indices (its fixed elements included).
    pub fn restrict(&self, fixed_in: Subset, excluded: Subset) -> Result<ReducedOracle> {
        if !fixed_in.intersect(excluded).is_empty() {
            return Err(validation("fixed-in and excluded sets overlap"));
        }
        let free: Vec<usize> = self
            .ground
            .members()
            .filter(|&i| !fixed_in.contains(i) && !excluded.contains(i))
            .collect();
        let map = free.clone();
        let inner = self.clone();
        let base = inner.eval(fixed_in);
        let oracle = if free.is_empty() {
            None
        } else {
            let ground = GroundSet::new(free.len())?;
            let map_in = map.clone();
            Some(SetFunction::new(ground, move |s| {
                let mut orig = fixed_in;
                for i in s.members() {
                    orig = orig.insert(map_in[i]);
                }
                inner.eval(orig) - base
            }))
        };
        Ok(ReducedOracle {
            oracle,
            fixed_in,
            map,
        })
    }
}

/// A restricted/contracted oracle together with the index translation back to
/// the original ground set. `oracle` is `None` when no free elements remain.
pub struct ReducedOracle {
    pub oracle: Option<SetFunction>,
    fixed_in: Subset,
    map: Vec<usize>,
}

impl ReducedOracle {
    /// Translates a subset of the reduced ground set into original indices,
    /// including the forced-in elements.
    pub fn to_original(&self, reduced: Subset) -> Subset {
        let mut orig = self.fixed_in;
        for i in reduced.members() {
            orig = orig.insert(self.map[i]);
        }
        orig
    }
}

/// Structural properties checkable by brute force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    /// f(A) + f(B) ≥ f(A∪B) + f(A∩B)
    Submodular,
    /// f(A) + f(B) ≥ f(A∖B) + f(B∖A)
    Posimodular,
    /// f(A) = f(V∖A)
    Symmetric,
}

/// One violating witness of a property check.
#[derive(Debug, Clone)]
pub struct Violation {
    pub a: Subset,
    pub b: Subset,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of an exhaustive property check.
#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub holds: bool,
    pub violations: Vec<Violation>,
    pub tolerance: f64,
}

impl PropertyReport {
    pub fn from_violations(violations: Vec<Violation>, tolerance: f64) -> Self {
        PropertyReport {
            holds: violations.is_empty(),
            violations,
            tolerance,
        }
    }
}

/// Exhaustively verifies a structural property of the oracle, reporting every
/// violating witness up to the additive tolerance.
///
/// Pairwise checks (submodular, posimodular) enumerate all 4^n subset pairs
/// and therefore cap at n = 10; the symmetry check is a single 2^n sweep and
/// caps at n = 16.
pub fn check_property(f: &SetFunction, property: Property, tolerance: f64) -> Result<PropertyReport> {
    let n = f.n();
    let cap = match property {
        Property::Submodular | Property::Posimodular => 10,
        Property::Symmetric => 16,
    };
    if n > cap {
        return Err(validation(format!(
            "ground set too large for brute-force {property:?} check: n={n} exceeds {cap}"
        )));
    }
    let mut violations = Vec::new();
    match property {
        Property::Submodular | Property::Posimodular => {
            for a in f.ground().subsets() {
                let fa = f.eval(a);
                for b in f.ground().subsets() {
                    let fb = f.eval(b);
                    let (l, r) = match property {
                        Property::Submodular => (a.union(b), a.intersect(b)),
                        Property::Posimodular => (a.minus(b), b.minus(a)),
                        Property::Symmetric => unreachable!(),
                    };
                    let lhs = fa + fb;
                    let rhs = f.eval(l) + f.eval(r);
                    if lhs < rhs - tolerance {
                        violations.push(Violation { a, b, lhs, rhs });
                    }
                }
            }
        }
        Property::Symmetric => {
            for a in f.ground().subsets() {
                let lhs = f.eval(a);
                let rhs = f.eval(a.complement(n));
                if (lhs - rhs).abs() > tolerance {
                    violations.push(Violation { a, b: a.complement(n), lhs, rhs });
                }
            }
        }
    }
    Ok(PropertyReport::from_violations(violations, tolerance))
}

/// Default absolute tolerance for property checks, in nats. Log-determinant
/// arithmetic introduces rounding well below this.
pub const PROPERTY_TOLERANCE: f64 = 1e-9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_set_bounds() {
        assert!(GroundSet::new(0).is_err());
        assert!(GroundSet::new(64).is_err());
        assert_eq!(GroundSet::new(63).unwrap().len(), 63);
    }

    #[test]
    fn labels_must_be_distinct_and_counted() {
        assert!(GroundSet::with_labels(2, vec!["a".into(), "a".into()]).is_err());
        assert!(GroundSet::with_labels(2, vec!["a".into()]).is_err());
        let g = GroundSet::with_labels(2, vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(g.label(1), "b");
    }

    #[test]
    fn subset_algebra() {
        let a = Subset::from_members([0, 2]);
        let b = Subset::from_members([1, 2]);
        assert_eq!(a.union(b), Subset::from_members([0, 1, 2]));
        assert_eq!(a.intersect(b), Subset::singleton(2));
        assert_eq!(a.minus(b), Subset::singleton(0));
        assert_eq!(a.complement(4), Subset::from_members([1, 3]));
        assert_eq!(a.card(), 2);
        assert!(a.contains(2) && !a.contains(1));
        assert_eq!(a.members().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(Subset::full(63).card(), 63);
    }

    #[test]
    fn evaluation_is_normalized_at_empty() {
        // Raw oracle with f(∅) = 7: the offset must absorb it.
        let f = SetFunction::new(GroundSet::new(3).unwrap(), |a| 7.0 + a.card() as f64);
        assert_eq!(f.eval(Subset::EMPTY), 0.0);
        assert_eq!(f.eval(Subset::from_members([0, 1])), 2.0);
    }

    #[test]
    fn modular_oracle_sums_member_weights() {
        let f = SetFunction::modular(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.eval(Subset::from_members([0, 2])), 4.0);
        assert_eq!(f.eval(Subset::EMPTY), 0.0);
    }

    #[test]
    fn incremental_gain_matches_definition() {
        let f = SetFunction::modular(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.incremental_gain(Subset::singleton(0), 1).unwrap(), 2.0);
        assert_eq!(f.incremental_gain(Subset::EMPTY, 2).unwrap(), 3.0);
        assert!(f.incremental_gain(Subset::singleton(1), 1).is_err());
    }

    #[test]
    fn call_counter_shared_across_clones() {
        let f = SetFunction::modular(vec![1.0]).unwrap();
        let g = f.clone();
        f.eval(Subset::singleton(0));
        g.eval(Subset::singleton(0));
        assert_eq!(f.call_count(), 2);
    }

    #[test]
    fn cardinality_squared_is_not_submodular() {
        let f = SetFunction::new(GroundSet::new(3).unwrap(), |a| (a.card() * a.card()) as f64);
        let report = check_property(&f, Property::Submodular, 1e-9).unwrap();
        assert!(!report.holds);
        // The canonical witness A={0}, B={1}: 1+1 < 4+0.
        assert!(report
            .violations
            .iter()
            .any(|v| (v.a, v.b) == (Subset::singleton(0), Subset::singleton(1))
                || (v.a, v.b) == (Subset::singleton(1), Subset::singleton(0))));
    }

    #[test]
    fn sqrt_cardinality_is_submodular() {
        let f = SetFunction::new(GroundSet::new(5).unwrap(), |a| (a.card() as f64).sqrt());
        assert!(check_property(&f, Property::Submodular, 1e-9).unwrap().holds);
        assert!(check_property(&f, Property::Posimodular, 1e-9).unwrap().holds);
    }

    #[test]
    fn cut_function_is_symmetric_and_posimodular() {
        // Cut of the path graph 0-1-2-3.
        let f = SetFunction::new(GroundSet::new(4).unwrap(), |a| {
            (0..3)
                .filter(|&i| a.contains(i) != a.contains(i + 1))
                .count() as f64
        });
        assert!(check_property(&f, Property::Symmetric, 1e-9).unwrap().holds);
        assert!(check_property(&f, Property::Submodular, 1e-9).unwrap().holds);
        assert!(check_property(&f, Property::Posimodular, 1e-9).unwrap().holds);
    }

    #[test]
    fn property_checks_reject_oversized_ground_sets() {
        let f = SetFunction::new(GroundSet::new(11).unwrap(), |a| a.card() as f64);
        assert!(check_property(&f, Property::Submodular, 1e-9).is_err());
        assert!(check_property(&f, Property::Symmetric, 1e-9).is_ok());
        let g = SetFunction::new(GroundSet::new(17).unwrap(), |a| a.card() as f64);
        assert!(check_property(&g, Property::Symmetric, 1e-9).is_err());
    }

    #[test]
    fn restriction_forces_elements_and_renumbers() {
        let f = SetFunction::modular(vec![1.0, 2.0, 4.0, 8.0]).unwrap();
        // Force {1} in, exclude {2}: free elements are 0 and 3.
        let reduced = f.restrict(Subset::singleton(1), Subset::singleton(2)).unwrap();
        let r = reduced.oracle.as_ref().unwrap();
        assert_eq!(r.n(), 2);
        // f'({0'}) = f({0,1}) - f({1}) = 1
        assert_eq!(r.eval(Subset::singleton(0)), 1.0);
        // f'({1'}) = f({1,3}) - f({1}) = 8
        assert_eq!(r.eval(Subset::singleton(1)), 8.0);
        assert_eq!(
            reduced.to_original(Subset::singleton(1)),
            Subset::from_members([1, 3])
        );
    }

    #[test]
    fn sum_of_submodular_passes_check() {
        let f = SetFunction::new(GroundSet::new(4).unwrap(), |a| (a.card() as f64).sqrt());
        let g = SetFunction::new(GroundSet::new(4).unwrap(), |a| {
            (0..3)
                .filter(|&i| a.contains(i) != a.contains(i + 1))
                .count() as f64
        });
        let sum = f.plus(&g).unwrap();
        assert!(check_property(&sum, Property::Submodular, 1e-9).unwrap().holds);
    }
}
