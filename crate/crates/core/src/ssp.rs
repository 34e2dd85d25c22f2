//! The submodular–supermodular procedure: approximate minimization of a
//! difference f − g of two submodular functions.
//!
//! Each iteration replaces the subtracted g by a tight modular lower bound
//! hₙ built from a random permutation beginning with the current iterate,
//! then exactly minimizes the submodular surrogate f − hₙ over proper
//! non-empty subsets. Because hₙ ≤ g everywhere and hₙ = g on the chain
//! prefixes, the true objective never increases along accepted iterates.
//! Restarts draw fresh starting subsets; optional local-search rounds upgrade
//! the result to 1- or 2-exchange optimality by rerunning the descent step on
//! permutations that pin each candidate exchange to the prefix boundary.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{validation, Result};
use crate::polymatroid::{modular_approximation, permutation_beginning_with, Permutation};
use crate::set::{SetFunction, Subset};
use crate::sfm::{better, minimize_proper, Engine, MinimizationResult};

/// Knobs for one `ssp_minimize` call.
#[derive(Debug, Clone)]
pub struct SspOptions {
    /// Improvement threshold δ: an iteration is accepted only if its
    /// surrogate minimum beats the incumbent by more than this (absolute,
    /// nats). Guards against numerical-precision loops.
    pub delta: f64,
    pub seed: u64,
    /// Independent restarts from random proper non-empty starting subsets.
    pub restarts: u32,
    /// 0 = none, 1 = single-element exchanges, 2 = all pairs.
    pub local_search_radius: u32,
    pub engine: Engine,
    /// Safety cap per restart; the δ rule terminates far earlier in practice.
    pub max_iterations: u32,
}

impl Default for SspOptions {
    fn default() -> Self {
        SspOptions {
            delta: 1e-9,
            seed: 0,
            restarts: 1,
            local_search_radius: 0,
            engine: Engine::MinNorm,
            max_iterations: 100,
        }
    }
}

impl SspOptions {
    pub fn validate(&self) -> Result<()> {
        if self.delta < 0.0 {
            return Err(validation("delta must be ≥ 0"));
        }
        if self.restarts < 1 {
            return Err(validation("restarts must be ≥ 1"));
        }
        if self.local_search_radius > 2 {
            return Err(validation("local_search_radius must be 0, 1, or 2"));
        }
        if self.max_iterations < 1 {
            return Err(validation("max_iterations must be ≥ 1"));
        }
        Ok(())
    }
}

/// One accepted iterate of the descent.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub restart: u32,
    pub iteration: u32,
    #[serde(rename = "subset_bitmask")]
    pub subset: u64,
    /// True objective φ(Aₙ) = (f − g)(Aₙ), not the surrogate value.
    pub objective: f64,
    #[serde(skip)]
    pub perm_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    NoImprovement,
    IterationCap,
}

/// The iterate record of a full run (all restarts).
#[derive(Debug, Clone)]
pub struct SspTrace {
    pub rows: Vec<TraceRow>,
    /// Per-restart termination reason, indexed by restart.
    pub terminations: Vec<TerminationReason>,
    /// Set when a local-search radius was requested: whether the returned
    /// subset was certified exchange-optimal at that radius.
    pub certified: Option<bool>,
}

impl SspTrace {
    /// JSON-lines export: one record per accepted iterate.
    pub fn to_jsonl(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("trace rows serialize"))
            .fold(String::new(), |mut acc, line| {
                acc.push_str(&line);
                acc.push('\n');
                acc
            })
    }
}

fn phi(f: &SetFunction, g: &SetFunction, a: Subset) -> f64 {
    f.eval(a) - g.eval(a)
}

/// Approximately minimizes (f − g)(A) over A ∉ {∅, V} for submodular f, g on
/// a common ground set. Returns the best iterate across restarts (ties by
/// bitmask) and the acceptance trace.
pub fn ssp_minimize(
    f: &SetFunction,
    g: &SetFunction,
    opts: &SspOptions,
) -> Result<(MinimizationResult, SspTrace)> {
    opts.validate()?;
    let n = f.n();
    if n != g.n() {
        return Err(validation(format!(
            "f and g ground sets differ: {n} vs {}",
            g.n()
        )));
    }
    if n < 2 {
        return Err(validation(
            "proper non-empty minimization needs at least 2 elements",
        ));
    }
    let calls_before = f.call_count() + g.call_count();
    let full = Subset::full(n).0;

    let mut rows = Vec::new();
    let mut terminations = Vec::new();
    let mut best: Option<(f64, Subset)> = None;
    let mut engines_converged = true;

    for restart in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(
            opts.seed
                .wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        // Random proper non-empty start; its φ upper-bounds everything the
        // restart reports, because the first surrogate is tight on it.
        let mut current = Subset(rng.random_range(1..full));
        let mut current_phi = phi(f, g, current);
        let mut min_val = f64::INFINITY;
        let mut termination = TerminationReason::IterationCap;

        for iteration in 0..opts.max_iterations {
            let perm_seed = rng.next_u64();
            let pi = permutation_beginning_with(current, f.ground(), perm_seed)?;
            let h = modular_approximation(g, &pi)?;
            let surrogate = f.minus_modular(&h);
            let res = minimize_proper(&surrogate, opts.engine)?;
            engines_converged &= res.converged;
            let val = res.value;
            let cand_phi = phi(f, g, res.minimizer);
            if best.is_none() || better(cand_phi, res.minimizer, best.unwrap()) {
                best = Some((cand_phi, res.minimizer));
            }
            // Descent guard: an exact engine always finds val ≤ φ(current)
            // because the surrogate is tight on the current iterate; an
            // inexact one may not, and accepting such a step could raise the
            // true objective.
            if val < min_val - opts.delta && cand_phi <= current_phi + 1e-12 {
                min_val = val;
                rows.push(TraceRow {
                    restart,
                    iteration,
                    subset: res.minimizer.0,
                    objective: cand_phi,
                    perm_seed,
                });
                current = res.minimizer;
                current_phi = cand_phi;
            } else {
                termination = TerminationReason::NoImprovement;
                break;
            }
        }
        terminations.push(termination);
    }

    let (_, mut best_set) = best.expect("at least one iteration ran");
    let mut certified = None;
    if opts.local_search_radius > 0 {
        // Polish until the certificate holds; each round either certifies or
        // strictly improves φ, so this terminates.
        for _ in 0..opts.max_iterations {
            let (improved, cert) =
                local_search_certify(f, g, best_set, opts.local_search_radius, opts)?;
            best_set = improved;
            certified = Some(cert);
            if cert {
                break;
            }
        }
    }

    let value = phi(f, g, best_set);
    Ok((
        MinimizationResult {
            minimizer: best_set,
            value,
            engine: opts.engine,
            evaluations: f.call_count() + g.call_count() - calls_before,
            converged: engines_converged,
        },
        SspTrace {
            rows,
            terminations,
            certified,
        },
    ))
}

/// One exchange-neighborhood pass around A (k-exchange polishing).
///
/// Radius 1 builds, for every element x, the permutation that places x
/// directly at the A-prefix boundary, so both A and A ± {x} are tight chain
/// prefixes of the rerun descent step. Radius 2 does the same for every
/// ordered pair (covering all 1- and 2-exchange neighbors). Returns the best
/// subset seen and whether no exchange improved on φ(A) by more than δ.
pub fn local_search_certify(
    f: &SetFunction,
    g: &SetFunction,
    a: Subset,
    radius: u32,
    opts: &SspOptions,
) -> Result<(Subset, bool)> {
    let n = f.n();
    if radius == 0 || radius > 2 {
        return Err(validation("local-search radius must be 1 or 2"));
    }
    if a.is_empty() || a == Subset::full(n) {
        return Err(validation("local search requires a proper non-empty subset"));
    }

    let phi_a = phi(f, g, a);
    let mut best = (phi_a, a);

    let mut orders: Vec<Vec<usize>> = Vec::new();
    if radius == 1 {
        for x in 0..n {
            let mut order: Vec<usize> = a.remove(x).members().collect();
            order.push(x);
            order.extend((0..n).filter(|&i| !a.contains(i) && i != x));
            orders.push(order);
        }
    } else {
        for u in 0..n {
            for v in 0..n {
                if u == v {
                    continue;
                }
                let trimmed = a.remove(u).remove(v);
                let mut order: Vec<usize> = trimmed.members().collect();
                order.push(u);
                order.push(v);
                order.extend((0..n).filter(|&i| !trimmed.contains(i) && i != u && i != v));
                orders.push(order);
            }
        }
    }

    for order in orders {
        let pi = Permutation::new(order)?;
        let h = modular_approximation(g, &pi)?;
        let res = minimize_proper(&f.minus_modular(&h), opts.engine)?;
        let cand_phi = phi(f, g, res.minimizer);
        if better(cand_phi, res.minimizer, best) {
            best = (cand_phi, res.minimizer);
        }
    }

    let certified = best.0 >= phi_a - opts.delta;
    Ok((best.1, certified))
}
