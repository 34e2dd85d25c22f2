//! Minimum-norm-point submodular minimization (Fujishige–Wolfe).
//!
//! The minimum-norm point x* of the base polytope encodes the minimizers of a
//! submodular f: the strictly negative coordinates of x* form the minimal
//! minimizer. Wolfe's algorithm finds x* by alternating a linear-optimization
//! step (Edmonds' greedy vertex in direction −x) with affine minimization
//! over the current vertex set, maintained as a convex combination. The
//! subset is then read off by thresholding negative coordinates, probing the
//! near-zero boundary coordinates, and polishing with single-element
//! exchanges so the result is never worse than any 1-exchange neighbor.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::polymatroid::{greedy_vertex, modular_approximation, ModularWeights, Permutation};
use crate::set::{SetFunction, Subset};
use crate::sfm::{Engine, MinimizationResult};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 1000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Affine minimizer of ‖Σ μᵢ·vᵢ‖ subject to Σ μᵢ = 1, via the KKT system on
/// the Gram matrix. Returns None if the system is numerically singular even
/// after a tiny ridge.
fn affine_minimizer(verts: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = verts.len();
    let mut sys = DMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            sys[(i, j)] = 2.0 * dot(&verts[i], &verts[j]);
        }
        sys[(i, m)] = 1.0;
        sys[(m, i)] = 1.0;
    }
    let mut rhs = DMatrix::zeros(m + 1, 1);
    rhs[(m, 0)] = 1.0;
    let solve = |sys: DMatrix<f64>| sys.lu().solve(&rhs);
    let solution = solve(sys.clone()).or_else(|| {
        let mut ridged = sys;
        for i in 0..m {
            ridged[(i, i)] += 1e-12;
        }
        solve(ridged)
    })?;
    Some((0..m).map(|i| solution[(i, 0)]).collect())
}

/// Minimizes a normalized submodular f over all subsets (∅ and V included).
/// On hitting `max_iter` the best point so far is still extracted, with
/// `converged` cleared.
pub fn min_norm_minimize(f: &SetFunction, tol: f64, max_iter: usize) -> Result<MinimizationResult> {
    let n = f.n();
    let start = f.call_count();

    let first = modular_approximation(f, &Permutation::identity(n))?;
    let mut verts: Vec<Vec<f64>> = vec![first.weights().to_vec()];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x: Vec<f64> = verts[0].clone();
    let mut converged = false;

    for _ in 0..max_iter {
        // Linear optimization: the base-polytope vertex minimizing ⟨x, ·⟩.
        let direction = ModularWeights::new(x.iter().map(|v| -v).collect());
        let q = greedy_vertex(f, &direction)?;
        let q = q.weights().to_vec();
        let xx = dot(&x, &x);
        let gap = xx - dot(&x, &q);
        if gap <= (tol * tol).max(1e-14 * xx.max(1.0)) {
            converged = true;
            break;
        }
        if verts.iter().any(|v| {
            v.iter()
                .zip(&q)
                .all(|(a, b)| (a - b).abs() <= 1e-14 * (1.0 + a.abs()))
        }) {
            // The LO step reproposed a known vertex: no further progress is
            // possible in exact arithmetic.
            converged = true;
            break;
        }
        verts.push(q);
        lambda.push(0.0);

        // Minor cycle: pull x to the affine minimizer of the current corral,
        // dropping vertices whose coefficients hit zero.
        let mut guard = 0;
        loop {
            guard += 1;
            let y = match affine_minimizer(&verts) {
                Some(y) => y,
                None => {
                    verts.pop();
                    lambda.pop();
                    break;
                }
            };
            if y.iter().all(|&c| c > -1e-12) {
                lambda = y.into_iter().map(|c| c.max(0.0)).collect();
                break;
            }
            // Step from λ toward y as far as the simplex allows.
            let mut theta = 1.0f64;
            for i in 0..lambda.len() {
                if y[i] < lambda[i] && y[i] < 0.0 {
                    theta = theta.min(lambda[i] / (lambda[i] - y[i]));
                }
            }
            for i in 0..lambda.len() {
                lambda[i] += theta * (y[i] - lambda[i]);
            }
            let keep: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 1e-12).collect();
            if keep.len() < lambda.len() {
                verts = keep.iter().map(|&i| verts[i].clone()).collect();
                lambda = keep.iter().map(|&i| lambda[i]).collect();
            }
            if guard > 4 * (n + 4) {
                break; // degenerate cycling; fall back to the current corral
            }
        }
        let norm: f64 = lambda.iter().sum();
        if norm > 0.0 {
            for l in &mut lambda {
                *l /= norm;
            }
        }
        x = vec![0.0; n];
        for (l, v) in lambda.iter().zip(&verts) {
            for i in 0..n {
                x[i] += l * v[i];
            }
        }
    }

    // Extract the minimizer: strictly negative coordinates, then probe the
    // numerically-zero boundary, then enforce 1-exchange local optimality.
    let mut a = Subset::from_members((0..n).filter(|&i| x[i] < -tol));
    let mut fa = f.eval(a);
    for i in (0..n).filter(|&i| x[i].abs() <= tol) {
        let cand = a.insert(i);
        let fc = f.eval(cand);
        if fc < fa {
            a = cand;
            fa = fc;
        }
    }
    loop {
        let mut improved = false;
        for i in 0..n {
            let cand = if a.contains(i) { a.remove(i) } else { a.insert(i) };
            let fc = f.eval(cand);
            if fc < fa {
                a = cand;
                fa = fc;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }

    Ok(MinimizationResult {
        minimizer: a,
        value: f.eval(a),
        engine: Engine::MinNorm,
        evaluations: f.call_count() - start,
        converged,
    })
}
