//! Frank-Wolfe solvers over the l1 ball: the classical single-atom variant
//! and the polyatomic variant with an inexact restricted correction step.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ista::run_ista;
use super::{
    elapsed_s, herm_norm_sq, objective_parts, over_budget, support_size, ActiveSet, CountedOp,
    DualCertificate, LassoProblem, SolverTrace, Termination, TraceRow,
};

/// Iterations the polyatomic solver waits for a relative objective
/// improvement before declaring a stall.
pub(crate) const PFW_STALL_WINDOW: usize = 10;

/// A signed scaled canonical vector `value * e_index` with `|value| = M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub index: usize,
    pub value: f64,
}

/// Frank-Wolfe direction: the l1-ball vertex maximizing `<eta, s>`.
///
/// Picks the entry of largest magnitude (lowest index on ties) with the
/// matching sign. A zero certificate only happens at an exact optimum; the
/// degenerate convention is index 0 with positive sign.
pub fn vfw_direction(eta: &DualCertificate, m: f64) -> Atom {
    assert!(m >= 0.0, "ball radius must be nonnegative");
    if eta.inf_norm() == 0.0 {
        return Atom { index: 0, value: m };
    }
    let index = eta.argmax_abs();
    let value = if eta.values()[index] > 0.0 { m } else { -m };
    Atom { index, value }
}

/// Polyatomic exploration: all indices whose certificate magnitude is within
/// `delta * gamma_k` of the maximum, in increasing order.
///
/// Always contains every argmax of `|eta|`; for a zero certificate the
/// threshold is negative and every index qualifies.
pub fn pfw_candidates(eta: &DualCertificate, delta: f64, gamma_k: f64) -> Vec<usize> {
    debug_assert!(delta > 0.0, "exploration width must be positive");
    debug_assert!(gamma_k > 0.0 && gamma_k <= 1.0, "step size in (0, 1]");
    let threshold = eta.inf_norm() - delta * gamma_k;
    eta.values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= threshold)
        .map(|(j, _)| j)
        .collect()
}

/// True when `eta` certifies `x` as a LASSO optimum within `tol`: the
/// certificate bound plus sign agreement on the support of `x`.
fn certifies_optimum(eta: &DualCertificate, x: &[f64], tol: f64) -> bool {
    if eta.inf_norm() > 1.0 + tol {
        return false;
    }
    x.iter()
        .zip(eta.values())
        .all(|(xi, ej)| *xi == 0.0 || (ej - xi.signum()).abs() <= 10.0 * tol)
}

/// Classical Frank-Wolfe with the open-loop step `gamma_k = 2 / (k + 2)`.
///
/// Starts from zero and moves toward one atom per iteration. The atoms come
/// from the differentiable lift of the l1-penalized objective over
/// `{(t, x): ||x||_1 <= t <= M}`, whose vertices are the signed scaled basis
/// vectors plus the origin: while `||eta||_inf > 1` the best atom is the
/// ball vertex from [`vfw_direction`], otherwise it is the origin and the
/// step contracts the iterate. Every iterate stays inside the l1 ball of
/// radius M.
///
/// Stops on `max_iter` or on a certified optimum: `||eta||_inf <= 1 + tol`
/// together with sign agreement `|eta[j] - sign(x[j])| <= 10 * tol` on the
/// support (the certificate bound alone does not certify a point whose
/// support signs disagree, and mid-run iterates routinely dip below the
/// bound while still far from optimal).
pub fn run_vfw(problem: &LassoProblem, max_iter: usize, tol: f64) -> SolverTrace {
    run_vfw_with(problem, max_iter, tol, None)
}

/// [`run_vfw`] with an optional wall-time budget in seconds.
pub fn run_vfw_with(
    problem: &LassoProblem,
    max_iter: usize,
    tol: f64,
    time_budget: Option<f64>,
) -> SolverTrace {
    run_vfw_observed(problem, max_iter, tol, time_budget, |_, _, _| {})
}

/// [`run_vfw_with`] invoking `observer(k, gamma_k, x_k)` after each applied
/// update, for audits of the step schedule and iterate feasibility.
pub fn run_vfw_observed(
    problem: &LassoProblem,
    max_iter: usize,
    tol: f64,
    time_budget: Option<f64>,
    mut observer: impl FnMut(usize, f64, &[f64]),
) -> SolverTrace {
    assert!(tol >= 0.0 && tol.is_finite(), "tol must be nonnegative");
    let start = Instant::now();
    let mut ops = CountedOp::new(problem.op());
    let y = problem.y();
    let lambda = problem.lambda();
    let m = problem.l1_radius();

    let mut x = vec![0.0; problem.dim()];
    let mut rows = vec![TraceRow {
        iter: 0,
        time_s: elapsed_s(start),
        objective: 0.5 * herm_norm_sq(y),
        forward_count: 0,
        adjoint_count: 0,
        support_size: 0,
    }];
    let mut termination = Termination::MaxIter;
    let mut completed: u64 = 0;

    for k in 1..=max_iter {
        // One forward serves both the trace row for the incoming iterate and
        // the residual behind the certificate.
        let fx = ops.forward(&x);
        if k > 1 {
            rows.push(TraceRow {
                iter: completed,
                time_s: elapsed_s(start),
                objective: objective_parts(y, &fx, lambda, &x),
                forward_count: ops.forward_count,
                adjoint_count: ops.adjoint_count,
                support_size: support_size(&x),
            });
        }
        let r: Vec<Complex64> = y.iter().zip(&fx).map(|(yi, fi)| yi - fi).collect();
        let mut vals = ops.adjoint(&r);
        for v in vals.iter_mut() {
            *v /= lambda;
        }
        let eta = DualCertificate::new(vals);
        if certifies_optimum(&eta, &x, tol) {
            termination = Termination::Certificate;
            break;
        }

        let gamma = 2.0 / (k as f64 + 2.0);
        for xi in x.iter_mut() {
            *xi *= 1.0 - gamma;
        }
        // inside the certificate bound the lift's zero vertex is the best
        // atom, so the step is a pure contraction
        if eta.inf_norm() > 1.0 {
            let atom = vfw_direction(&eta, m);
            x[atom.index] += gamma * atom.value;
        }
        completed = k as u64;
        observer(k, gamma, &x);

        if over_budget(start, time_budget) {
            termination = Termination::TimeBudget;
            break;
        }
    }

    // The certificate exit leaves the last recorded row current; the other
    // exits have one applied update still unrecorded.
    if completed > rows.last().expect("row 0 exists").iter {
        let fx = ops.forward(&x);
        rows.push(TraceRow {
            iter: completed,
            time_s: elapsed_s(start),
            objective: objective_parts(y, &fx, lambda, &x),
            forward_count: ops.forward_count,
            adjoint_count: ops.adjoint_count,
            support_size: support_size(&x),
        });
    }

    SolverTrace {
        rows,
        final_x: x,
        termination,
    }
}

/// Polyatomic Frank-Wolfe configuration.
///
/// `delta = None` resolves to `0.05 * ||eta_1||_inf` on the first iteration,
/// scaling the exploration width with the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfwConfig {
    /// Exploration width; `None` picks 5% of the initial certificate peak.
    pub delta: Option<f64>,
    /// Initial precision of the inexact correction, tightened as eps0 * gamma_k.
    pub eps0: f64,
    /// Certificate slack and stall tolerance for the global stop.
    pub tol: f64,
    pub max_iter: usize,
    /// Iteration cap of each inner ISTA call.
    pub ista_cap: usize,
}

impl Default for PfwConfig {
    fn default() -> Self {
        PfwConfig {
            delta: None,
            eps0: 1e-2,
            tol: 1e-4,
            max_iter: 500,
            ista_cap: 10_000,
        }
    }
}

/// Per-iteration snapshot handed to the [`run_pfw_observed`] observer.
pub struct PfwStep<'a> {
    pub iter: usize,
    pub gamma: f64,
    /// Inner precision eps0 * gamma actually used this iteration.
    pub eps: f64,
    /// Resolved exploration width.
    pub delta: f64,
    pub certificate: &'a DualCertificate,
    pub candidates: &'a [usize],
    pub active: &'a [usize],
    pub iterate: &'a [f64],
    pub objective: f64,
}

/// Polyatomic Frank-Wolfe: grows an active set from the certificate's near-
/// maximal entries, then corrects all active weights with warm-started ISTA.
///
/// Stops on the certificate test `||eta||_inf <= 1 + tol`, on `max_iter`, or
/// when the objective improves by less than `tol` (relative) over a trailing
/// window. Recorded objectives never increase.
pub fn run_pfw(problem: &LassoProblem, config: &PfwConfig) -> SolverTrace {
    run_pfw_with(problem, config, None)
}

/// [`run_pfw`] with an optional wall-time budget in seconds.
pub fn run_pfw_with(
    problem: &LassoProblem,
    config: &PfwConfig,
    time_budget: Option<f64>,
) -> SolverTrace {
    run_pfw_observed(problem, config, time_budget, |_| {})
}

/// [`run_pfw_with`] invoking the observer after every completed iteration.
pub fn run_pfw_observed(
    problem: &LassoProblem,
    config: &PfwConfig,
    time_budget: Option<f64>,
    mut observer: impl FnMut(&PfwStep),
) -> SolverTrace {
    assert!(
        config.eps0 > 0.0 && config.eps0.is_finite(),
        "eps0 must be positive"
    );
    assert!(
        config.tol >= 0.0 && config.tol.is_finite(),
        "tol must be nonnegative"
    );
    if let Some(d) = config.delta {
        assert!(d > 0.0 && d.is_finite(), "delta must be positive");
    }

    let start = Instant::now();
    let mut ops = CountedOp::new(problem.op());
    let y = problem.y();
    let lambda = problem.lambda();

    let mut x = vec![0.0; problem.dim()];
    let mut obj = 0.5 * herm_norm_sq(y);
    let mut active = ActiveSet::new();
    let mut delta = config.delta;

    let mut rows = vec![TraceRow {
        iter: 0,
        time_s: elapsed_s(start),
        objective: obj,
        forward_count: 0,
        adjoint_count: 0,
        support_size: 0,
    }];
    let mut termination = Termination::MaxIter;

    for k in 1..=config.max_iter {
        let fx = ops.forward(&x);
        let r: Vec<Complex64> = y.iter().zip(&fx).map(|(yi, fi)| yi - fi).collect();
        let mut vals = ops.adjoint(&r);
        for v in vals.iter_mut() {
            *v /= lambda;
        }
        let eta = DualCertificate::new(vals);
        if eta.inf_norm() <= 1.0 + config.tol {
            termination = Termination::Certificate;
            break;
        }

        let gamma = 2.0 / (k as f64 + 2.0);
        let d = *delta.get_or_insert(0.05 * eta.inf_norm());
        let candidates = pfw_candidates(&eta, d, gamma);
        active.merge(&candidates);

        let eps = config.eps0 * gamma;
        let candidate_x = run_ista(problem, active.indices(), &x, eps, config.ista_cap)
            .expect("active-set subproblem is valid by construction");

        // The subsolver guards descent on the restricted matrix; re-checking
        // on the full operator keeps recorded rows exactly non-increasing.
        let fc = ops.forward(&candidate_x);
        let cand_obj = objective_parts(y, &fc, lambda, &candidate_x);
        if cand_obj <= obj {
            x = candidate_x;
            obj = cand_obj;
        }

        rows.push(TraceRow {
            iter: k as u64,
            time_s: elapsed_s(start),
            objective: obj,
            forward_count: ops.forward_count,
            adjoint_count: ops.adjoint_count,
            support_size: support_size(&x),
        });
        observer(&PfwStep {
            iter: k,
            gamma,
            eps,
            delta: d,
            certificate: &eta,
            candidates: &candidates,
            active: active.indices(),
            iterate: &x,
            objective: obj,
        });

        if k >= PFW_STALL_WINDOW {
            let prev = rows[k - PFW_STALL_WINDOW].objective;
            if prev - obj <= config.tol * prev.abs().max(f64::MIN_POSITIVE) {
                termination = Termination::ObjectiveStall;
                break;
            }
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
