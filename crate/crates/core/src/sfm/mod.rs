//! Submodular function minimization engines.
//!
//! Three interchangeable solvers: exhaustive enumeration (the oracle of
//! record for everything else, n ≤ 20), Queyranne's pendant-pair algorithm
//! (O(n³) oracle calls, exact for symmetric — more generally posimodular —
//! submodular functions), and a minimum-norm-point method over the base
//! polytope (general submodular functions, replacing the heavyweight
//! combinatorial algorithms). `minimize_proper` layers the A ∉ {∅, V}
//! constraint over any engine via forced-in/forced-out oracle reductions.

mod minnorm;
mod queyranne;

pub use minnorm::min_norm_minimize;
pub use queyranne::queyranne_minimize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::set::{SetFunction, Subset};

/// Which minimization algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Brute,
    Queyranne,
    MinNorm,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Engine::Brute => "brute",
            Engine::Queyranne => "queyranne",
            Engine::MinNorm => "minnorm",
        };
        f.write_str(name)
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Engine::Brute),
            "queyranne" => Ok(Engine::Queyranne),
            "minnorm" => Ok(Engine::MinNorm),
            other => Err(validation(format!(
                "unknown engine '{other}' (expected brute, queyranne, or minnorm)"
            ))),
        }
    }
}

/// Search space for the exhaustive engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    All,
    ProperNonempty,
}

/// Result of one minimization call. `value` is always re-evaluated through
/// the oracle at the returned set, so it matches `oracle.eval(minimizer)`
/// bit for bit.
#[derive(Debug, Clone)]
pub struct MinimizationResult {
    pub minimizer: Subset,
    pub value: f64,
    pub engine: Engine,
    pub evaluations: u64,
    pub converged: bool,
}

/// Orders candidate optima: smaller value wins, ties go to the smaller
/// bitmask so results are schedule-independent.
pub(crate) fn better(value: f64, set: Subset, than: (f64, Subset)) -> bool {
    value < than.0 || (value == than.0 && set < than.1)
}

/// Exhaustive minimization, the ground truth the other engines are tested
/// against. Ties break to the smallest bitmask.
pub fn brute_force_minimize(f: &SetFunction, mode: Mode) -> Result<MinimizationResult> {
    let n = f.n();
    if n > 20 {
        return Err(validation(format!(
            "ground set too large for exhaustive minimization: n={n} exceeds 20"
        )));
    }
    if mode == Mode::ProperNonempty && n < 2 {
        return Err(validation(
            "proper non-empty minimization needs at least 2 elements",
        ));
    }
    let start = f.call_count();
    let mut best: Option<(f64, Subset)> = None;
    let subsets: Box<dyn Iterator<Item = Subset>> = match mode {
        Mode::All => Box::new(f.ground().subsets()),
        Mode::ProperNonempty => Box::new(f.ground().proper_subsets()),
    };
    for a in subsets {
        let v = f.eval(a);
        if best.is_none() || better(v, a, best.unwrap()) {
            best = Some((v, a));
        }
    }
    let (value, minimizer) = best.expect("at least one candidate");
    Ok(MinimizationResult {
        minimizer,
        value,
        engine: Engine::Brute,
        evaluations: f.call_count() - start,
        converged: true,
    })
}

/// Minimizes over all subsets with the chosen engine. Queyranne is excluded
/// here because it inherently searches proper non-empty sets only.
pub fn minimize(f: &SetFunction, engine: Engine) -> Result<MinimizationResult> {
    match engine {
        Engine::Brute => brute_force_minimize(f, Mode::All),
        Engine::MinNorm => min_norm_minimize(f, minnorm::DEFAULT_TOL, minnorm::DEFAULT_MAX_ITER),
        Engine::Queyranne => Err(validation(
            "queyranne engine minimizes over proper non-empty subsets only; use minimize_proper",
        )),
    }
}

/// Minimizes over A ∉ {∅, V}.
///
/// Brute force enumerates the constraint directly and Queyranne satisfies it
/// by construction. For the minimum-norm engine the constraint is enforced by
/// 2(n−1) reduced solves: with anchor element 0, for every other element u we
/// minimize once with (0 in, u out) and once with (u in, 0 out); every proper
/// non-empty subset falls in one of those families. Candidates are
/// re-evaluated on the original oracle and merged by (value, bitmask).
pub fn minimize_proper(f: &SetFunction, engine: Engine) -> Result<MinimizationResult> {
    let n = f.n();
    if n < 2 {
        return Err(validation(
            "proper non-empty minimization needs at least 2 elements",
        ));
    }
    match engine {
        Engine::Brute => brute_force_minimize(f, Mode::ProperNonempty),
        Engine::Queyranne => queyranne_minimize(f),
        Engine::MinNorm => {
            let start = f.call_count();
            let mut best: Option<(f64, Subset)> = None;
            let mut converged = true;
            let anchor = 0usize;
            for u in 1..n {
                for (fixed_in, excluded) in [
                    (Subset::singleton(anchor), Subset::singleton(u)),
                    (Subset::singleton(u), Subset::singleton(anchor)),
                ] {
                    let reduced = f.restrict(fixed_in, excluded)?;
                    let candidate = match &reduced.oracle {
                        None => fixed_in, // n = 2: the forced singleton is the whole family
                        Some(r) => {
                            let res =
                                min_norm_minimize(r, minnorm::DEFAULT_TOL, minnorm::DEFAULT_MAX_ITER)?;
                            converged &= res.converged;
                            reduced.to_original(res.minimizer)
                        }
                    };
                    let v = f.eval(candidate);
                    if best.is_none() || better(v, candidate, best.unwrap()) {
                        best = Some((v, candidate));
                    }
                }
            }
            let (value, minimizer) = best.expect("n ≥ 2 yields candidates");
            Ok(MinimizationResult {
                minimizer,
                value,
                engine: Engine::MinNorm,
                evaluations: f.call_count() - start,
                converged,
            })
        }
    }
}
