//! Proximal-gradient solvers: the support-restricted subsolver used inside
//! the polyatomic outer loop, and a traced full-problem baseline.

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{operator_norm_sq, restrict_columns, LinOp};

use super::{
    elapsed_s, herm_norm_sq, objective_parts, over_budget, shrink, support_size, CountedOp,
    LassoProblem, SolverTrace, Termination, TraceRow, STEP_SAFETY,
};

/// Result of a restricted ISTA run.
#[derive(Debug, Clone)]
pub struct IstaOutcome {
    /// Zero-padded full-length iterate.
    pub x: Vec<f64>,
    /// Proximal steps actually taken.
    pub iterations: usize,
    /// Whether the relative-change stop fired before the iteration cap.
    pub converged: bool,
}

/// Minimizes the LASSO objective over iterates supported in `support`,
/// returning the zero-padded solution. See [`run_ista_with_stats`].
pub fn run_ista(
    problem: &LassoProblem,
    support: &[usize],
    x_init: &[f64],
    eps_rel: f64,
    iter_cap: usize,
) -> Result<Vec<f64>> {
    run_ista_with_stats(problem, support, x_init, eps_rel, iter_cap).map(|o| o.x)
}

/// Warm-started ISTA on the column-restricted operator.
///
/// Iterates `x_{m+1} = shrink(x_m - tau G_S*(G_S x_m - y), tau lambda)` with
/// `tau` just under `1 / ||G_S||^2`, stopping once the iterate moves by less
/// than `eps_rel` relative to its norm or `iter_cap` is hit. The restriction
/// is materialized as an explicit matrix (cheap at active-set sizes); when
/// `support` covers every column the full operator is used directly instead.
///
/// The returned iterate never has a larger objective than `x_init`.
pub fn run_ista_with_stats(
    problem: &LassoProblem,
    support: &[usize],
    x_init: &[f64],
    eps_rel: f64,
    iter_cap: usize,
) -> Result<IstaOutcome> {
    let n = problem.dim();
    if x_init.len() != n {
        return Err(Error::invalid(format!(
            "warm start has length {}, expected {}",
            x_init.len(),
            n
        )));
    }
    if !(eps_rel.is_finite() && eps_rel >= 0.0) {
        return Err(Error::invalid(format!(
            "eps_rel must be nonnegative and finite, got {eps_rel}"
        )));
    }
    for w in support.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::invalid(
                "support indices must be strictly increasing",
            ));
        }
    }
    if support.last().is_some_and(|&j| j >= n) {
        return Err(Error::invalid("support index out of range"));
    }
    for (j, &v) in x_init.iter().enumerate() {
        if v != 0.0 && support.binary_search(&j).is_err() {
            return Err(Error::invalid(format!(
                "warm start has mass at index {j} outside the support"
            )));
        }
    }

    if support.is_empty() {
        return Ok(IstaOutcome {
            x: x_init.to_vec(),
            iterations: 0,
            converged: true,
        });
    }

    // Full support needs no materialized restriction, and the problem
    // already caches that operator norm.
    let full = support.len() == n;
    let restricted;
    let (op, norm_sq): (&dyn LinOp, f64) = if full {
        (problem.op(), problem.norm_sq())
    } else {
        restricted = restrict_columns(problem.op(), support)?;
        let ns = operator_norm_sq(&restricted, 1e-6, 500);
        (&restricted, ns)
    };

    if norm_sq <= 0.0 {
        // All selected columns are zero: the data term ignores x, so the l1
        // term alone drives the restricted solution to zero.
        return Ok(IstaOutcome {
            x: vec![0.0; n],
            iterations: 0,
            converged: true,
        });
    }

    let y = problem.y();
    let lambda = problem.lambda();
    let tau = 1.0 / (norm_sq * (1.0 + STEP_SAFETY));
    let threshold = tau * lambda;

    let mut xs: Vec<f64> = support.iter().map(|&j| x_init[j]).collect();
    let objective = |v: &[f64]| {
        let fv = op.forward(v);
        objective_parts(y, &fv, lambda, v)
    };
    let obj_init = objective(&xs);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < iter_cap {
        let fv = op.forward(&xs);
        let r: Vec<_> = fv.iter().zip(y).map(|(fi, yi)| fi - yi).collect();
        let grad = op.adjoint(&r);

        let prev_norm = norm2(&xs);
        let mut change_sq = 0.0;
        for (xi, gi) in xs.iter_mut().zip(&grad) {
            let next = shrink(*xi - tau * gi, threshold);
            let d = next - *xi;
            change_sq += d * d;
            *xi = next;
        }
        iterations += 1;
        if change_sq.sqrt() <= eps_rel * prev_norm {
            converged = true;
            break;
        }
    }

    // Floating-point guard: the descent property is part of the contract, so
    // fall back to the warm start if rounding pushed the objective up.
    if objective(&xs) > obj_init {
        return Ok(IstaOutcome {
            x: x_init.to_vec(),
            iterations,
            converged,
        });
    }

    let mut x = vec![0.0; n];
    for (&j, &v) in support.iter().zip(&xs) {
        x[j] = v;
    }
    Ok(IstaOutcome {
        x,
        iterations,
        converged,
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Plain proximal gradient on the full problem, instrumented like the other
/// baselines: per-iteration rows with objective, wall time and cumulative
/// operator applications.
///
/// Stops after `max_iter` iterations or when the objective changes by less
/// than `tol` relative to the previous value. Unlike [`run_ista`], which is
/// the warm-started subsolver with an iterate-movement stop, this entry point
/// serves as a standalone baseline run.
pub fn run_ista_traced(
    problem: &LassoProblem,
    max_iter: usize,
    tol: f64,
    time_budget: Option<f64>,
) -> SolverTrace {
    assert!(tol >= 0.0 && tol.is_finite(), "tol must be nonnegative");
    let start = Instant::now();
    let mut ops = CountedOp::new(problem.op());
    let y = problem.y();
    let lambda = problem.lambda();

    let tau = if problem.norm_sq() > 0.0 {
        1.0 / (problem.norm_sq() * (1.0 + STEP_SAFETY))
    } else {
        1.0
    };
    let threshold = tau * lambda;

    let mut x = vec![0.0; problem.dim()];
    let mut obj_prev = 0.5 * herm_norm_sq(y);
    let mut rows = vec![TraceRow {
        iter: 0,
        time_s: elapsed_s(start),
        objective: obj_prev,
        forward_count: 0,
        adjoint_count: 0,
        support_size: 0,
    }];
    let mut termination = Termination::MaxIter;

    for k in 1..=max_iter {
        let fx = ops.forward(&x);
        let r: Vec<Complex64> = fx.iter().zip(y).map(|(fi, yi)| fi - yi).collect();
        let grad = ops.adjoint(&r);
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi = shrink(*xi - tau * gi, threshold);
        }

        let fx = ops.forward(&x);
        let obj = objective_parts(y, &fx, lambda, &x);
        rows.push(TraceRow {
            iter: k as u64,
            time_s: elapsed_s(start),
            objective: obj,
            forward_count: ops.forward_count,
            adjoint_count: ops.adjoint_count,
            support_size: support_size(&x),
        });

        let rel = (obj_prev - obj).abs() / obj_prev.abs().max(f64::MIN_POSITIVE);
        obj_prev = obj;
        if rel <= tol {
            termination = Termination::ObjectiveStall;
            break;
        }
        if over_budget(start, time_budget) {
            termination = Termination::TimeBudget;
            break;
        }
    }

    SolverTrace {
        rows,
        final_x: x,
        termination,
    }
}
