//! Accelerated proximal gradient descent (FISTA momentum schedule).

use std::time::Instant;

use num_complex::Complex64;

use super::{
    elapsed_s, herm_norm_sq, objective_parts, over_budget, shrink, support_size, CountedOp,
    LassoProblem, SolverTrace, Termination, TraceRow, STEP_SAFETY,
};

/// Accelerated proximal gradient on the LASSO objective.
///
/// Stops after `max_iter` iterations or when the objective changes by less
/// than `tol` relative to the previous iterate's value. `tol = 0` runs to the
/// iteration cap (the momentum ripple keeps consecutive objectives apart).
pub fn run_apgd(problem: &LassoProblem, max_iter: usize, tol: f64) -> SolverTrace {
    run_apgd_with(problem, max_iter, tol, None)
}

/// [`run_apgd`] with an optional wall-time budget in seconds.
pub fn run_apgd_with(
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
    let n = problem.dim();

    // One gradient step per iteration with a fixed step just under the
    // inverse Lipschitz constant. A zero operator has zero gradient, so any
    // positive step works there.
    let tau = if problem.norm_sq() > 0.0 {
        1.0 / (problem.norm_sq() * (1.0 + STEP_SAFETY))
    } else {
        1.0
    };
    let threshold = tau * lambda;

    let mut x = vec![0.0; n];
    let mut x_prev = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t: f64 = 1.0;
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
        // gradient of the data term at the extrapolated point
        let fz = ops.forward(&z);
        let r: Vec<Complex64> = fz.iter().zip(y).map(|(fi, yi)| fi - yi).collect();
        let grad = ops.adjoint(&r);

        let x_new: Vec<f64> = z
            .iter()
            .zip(&grad)
            .map(|(zi, gi)| shrink(zi - tau * gi, threshold))
            .collect();

        let fx = ops.forward(&x_new);
        let obj = objective_parts(y, &fx, lambda, &x_new);
        rows.push(TraceRow {
            iter: k as u64,
            time_s: elapsed_s(start),
            objective: obj,
            forward_count: ops.forward_count,
            adjoint_count: ops.adjoint_count,
            support_size: support_size(&x_new),
        });

        x_prev = std::mem::replace(&mut x, x_new);
        let rel = (obj_prev - obj).abs() / obj_prev.abs().max(f64::MIN_POSITIVE);
        obj_prev = obj;
        if rel <= tol {
            termination = Termination::ObjectiveStall;
            break;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        z = x
            .iter()
            .zip(&x_prev)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        t = t_next;

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
