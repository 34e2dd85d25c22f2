//! Queyranne's pendant-pair minimizer for symmetric (more generally,
//! posimodular) submodular functions.
//!
//! Each phase orders the current merged nodes by repeatedly appending the
//! node u minimizing f(W ∪ u) − f(u); the last two nodes of that order form a
//! pendant pair (t, u), meaning {u} minimizes f among all sets separating u
//! from t. The singleton cut f(u) is recorded as a candidate and the pair is
//! merged, so n − 1 phases scan every relevant cut with O(n³) oracle calls.

use crate::error::{validation, Result};
use crate::set::{SetFunction, Subset};
use crate::sfm::{better, Engine, MinimizationResult};

#[derive(Clone)]
struct Node {
    mask: Subset,
    repr: usize, // smallest original element, used for deterministic ties
    singleton_value: f64,
}

/// Minimizes a posimodular submodular f over proper non-empty subsets.
/// Correctness is the caller's contract: on non-posimodular inputs the
/// result is merely some cut the scan happened to visit.
pub fn queyranne_minimize(f: &SetFunction) -> Result<MinimizationResult> {
    let n = f.n();
    if n < 2 {
        return Err(validation(
            "pendant-pair minimization needs at least 2 elements",
        ));
    }
    let start = f.call_count();
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            mask: Subset::singleton(i),
            repr: i,
            singleton_value: f.eval(Subset::singleton(i)),
        })
        .collect();
    let mut best: Option<(f64, Subset)> = None;

    while nodes.len() >= 2 {
        // Maximum-adjacency-style ordering; ties break by ascending repr,
        // and the phase always starts from the lowest-repr node.
        let k = nodes.len();
        let mut selected = vec![0usize];
        let mut in_order = vec![false; k];
        in_order[0] = true;
        let mut w = nodes[0].mask;
        while selected.len() < k {
            let mut pick: Option<(f64, usize)> = None;
            for (i, node) in nodes.iter().enumerate() {
                if in_order[i] {
                    continue;
                }
                let key = f.eval(w.union(node.mask)) - node.singleton_value;
                let replace = match pick {
                    None => true,
                    Some((kbest, ibest)) => {
                        key < kbest || (key == kbest && node.repr < nodes[ibest].repr)
                    }
                };
                if replace {
                    pick = Some((key, i));
                }
            }
            let (_, i) = pick.expect("unselected node exists");
            in_order[i] = true;
            w = w.union(nodes[i].mask);
            selected.push(i);
        }

        // Pendant pair = last two of the order; the cut {u} is a candidate.
        let u_idx = selected[k - 1];
        let t_idx = selected[k - 2];
        let cut = nodes[u_idx].mask;
        let v = f.eval(cut);
        if best.is_none() || better(v, cut, best.unwrap()) {
            best = Some((v, cut));
        }

        // Merge u into t and keep nodes sorted by repr for determinism.
        let merged_mask = nodes[t_idx].mask.union(nodes[u_idx].mask);
        let merged = Node {
            mask: merged_mask,
            repr: nodes[t_idx].repr.min(nodes[u_idx].repr),
            singleton_value: f.eval(merged_mask),
        };
        let (hi, lo) = (t_idx.max(u_idx), t_idx.min(u_idx));
        nodes.remove(hi);
        nodes.remove(lo);
        nodes.push(merged);
        nodes.sort_by_key(|node| node.repr);
    }

    let (value, minimizer) = best.expect("n ≥ 2 produces candidates");
    Ok(MinimizationResult {
        minimizer,
        value,
        engine: Engine::Queyranne,
        evaluations: f.call_count() - start,
        converged: true,
    })
}
