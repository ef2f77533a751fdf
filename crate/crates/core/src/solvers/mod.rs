//! LASSO solvers and shared primitives.
//!
//! All solvers minimize `0.5 * ||y - G x||^2 + lambda * ||x||_1` over real
//! images, where the data-fit norm comes from the hermitian-real inner
//! product. Every LASSO solution lies in the l1 ball of radius
//! `M = ||y||^2 / (2 lambda)`, which is the feasible domain the Frank-Wolfe
//! variants walk over.

mod apgd;
mod fw;
mod ista;

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{herm_re, operator_norm_sq, LinOp};

pub use apgd::{run_apgd, run_apgd_with};
pub use fw::{
    pfw_candidates, run_pfw, run_pfw_observed, run_pfw_with, run_vfw, run_vfw_observed,
    run_vfw_with, vfw_direction, Atom, PfwConfig, PfwStep,
};
pub use ista::{run_ista, run_ista_traced, run_ista_with_stats, IstaOutcome};

/// Relative safety margin applied on top of estimated squared operator norms
/// when deriving gradient step sizes. Power iteration approaches the true
/// norm from below; stepping with the raw estimate can overshoot and break
/// descent guarantees.
pub(crate) const STEP_SAFETY: f64 = 1e-3;

/// A LASSO instance: measurement operator, data vector and regularization
/// weight, plus the cached squared operator norm used for step sizes.
pub struct LassoProblem {
    op: Box<dyn LinOp + Send + Sync>,
    y: Vec<Complex64>,
    lambda: f64,
    norm_sq: f64,
}

impl LassoProblem {
    /// Builds a problem and estimates `||G||^2` by power iteration.
    pub fn new(op: Box<dyn LinOp + Send + Sync>, y: Vec<Complex64>, lambda: f64) -> Result<Self> {
        if y.len() != op.output_dim() {
            return Err(Error::invalid(format!(
                "data vector has length {}, operator produces {}",
                y.len(),
                op.output_dim()
            )));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        let norm_sq = operator_norm_sq(op.as_ref(), 1e-6, 500);
        Ok(LassoProblem {
            op,
            y,
            lambda,
            norm_sq,
        })
    }

    pub fn op(&self) -> &dyn LinOp {
        self.op.as_ref()
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Input dimension N of the image space.
    pub fn dim(&self) -> usize {
        self.op.input_dim()
    }

    /// Cached estimate of the largest eigenvalue of `G* G`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Radius `M = ||y||^2 / (2 lambda)` of the l1 ball containing every
    /// solution.
    pub fn l1_radius(&self) -> f64 {
        0.5 * herm_norm_sq(&self.y) / self.lambda
    }
}

impl std::fmt::Debug for LassoProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LassoProblem")
            .field("dim", &self.dim())
            .field("measurements", &self.y.len())
            .field("lambda", &self.lambda)
            .field("norm_sq", &self.norm_sq)
            .finish()
    }
}

/// Objective value `0.5 * ||y - G x||^2 + lambda * ||x||_1`.
pub fn lasso_objective(problem: &LassoProblem, x: &[f64]) -> f64 {
    assert_eq!(x.len(), problem.dim(), "iterate length must be N");
    let fx = problem.op().forward(x);
    objective_parts(&problem.y, &fx, problem.lambda, x)
}

/// The empirical dual certificate `eta = (1/lambda) G* (y - G x)`.
///
/// At a solution, `||eta||_inf <= 1` and `eta[j] = sign(x[j])` on the
/// support. The norm bound alone is necessary but not sufficient: an iterate
/// can sit inside the unit band while misaligned atoms still carry mass.
pub fn dual_certificate(problem: &LassoProblem, x: &[f64]) -> DualCertificate {
    assert_eq!(x.len(), problem.dim(), "iterate length must be N");
    let fx = problem.op().forward(x);
    let r: Vec<Complex64> = problem.y.iter().zip(&fx).map(|(yi, fi)| yi - fi).collect();
    let mut values = problem.op().adjoint(&r);
    for v in values.iter_mut() {
        *v /= problem.lambda;
    }
    DualCertificate::new(values)
}

/// Dual certificate values with the max-magnitude entry cached.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    values: Vec<f64>,
    inf_norm: f64,
    argmax: usize,
}

impl DualCertificate {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "certificate must have positive length");
        let mut inf_norm = 0.0;
        let mut argmax = 0;
        for (j, &v) in values.iter().enumerate() {
            // strict comparison keeps the lowest index on ties
            if v.abs() > inf_norm {
                inf_norm = v.abs();
                argmax = j;
            }
        }
        DualCertificate {
            values,
            inf_norm,
            argmax,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn inf_norm(&self) -> f64 {
        self.inf_norm
    }

    /// Index of the entry with the largest magnitude, lowest index on ties.
    pub fn argmax_abs(&self) -> usize {
        self.argmax
    }
}

/// Componentwise soft threshold, the proximal map of `t * ||.||_1`.
pub fn soft_threshold(v: &[f64], t: f64) -> Vec<f64> {
    assert!(t >= 0.0, "threshold must be nonnegative");
    v.iter().map(|&x| shrink(x, t)).collect()
}

#[inline]
pub(crate) fn shrink(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Monotone union of candidate index sets, with the per-iteration candidate
/// history kept for audits.
#[derive(Debug, Clone, Default)]
pub struct ActiveSet {
    indices: Vec<usize>,
    history: Vec<Vec<usize>>,
}

impl ActiveSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a sorted candidate set; the active indices only ever grow.
    pub fn merge(&mut self, candidates: &[usize]) {
        debug_assert!(candidates.windows(2).all(|w| w[0] < w[1]));
        let mut merged = Vec::with_capacity(self.indices.len() + candidates.len());
        let (mut a, mut b) = (0, 0);
        while a < self.indices.len() && b < candidates.len() {
            match self.indices[a].cmp(&candidates[b]) {
                std::cmp::Ordering::Less => {
                    merged.push(self.indices[a]);
                    a += 1;
                }
                std::cmp::Ordering::Greater => {
                    merged.push(candidates[b]);
                    b += 1;
                }
                std::cmp::Ordering::Equal => {
                    merged.push(self.indices[a]);
                    a += 1;
                    b += 1;
                }
            }
        }
        merged.extend_from_slice(&self.indices[a..]);
        merged.extend_from_slice(&candidates[b..]);
        self.indices = merged;
        self.history.push(candidates.to_vec());
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Candidate sets in the order they were merged.
    pub fn history(&self) -> &[Vec<usize>] {
        &self.history
    }
}

/// Why a solver run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIter,
    ObjectiveStall,
    Certificate,
    TimeBudget,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::MaxIter => "max_iter",
            Termination::ObjectiveStall => "objective_stall",
            Termination::Certificate => "certificate",
            Termination::TimeBudget => "time_budget",
        };
        f.write_str(s)
    }
}

/// One recorded solver iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: u64,
    pub time_s: f64,
    pub objective: f64,
    pub forward_count: u64,
    pub adjoint_count: u64,
    pub support_size: u64,
}

/// Full record of a solver run: per-iteration rows (row 0 is the zero
/// iterate), the final iterate, and the stop reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    pub final_x: Vec<f64>,
    pub termination: Termination,
}

impl SolverTrace {
    pub fn final_objective(&self) -> f64 {
        self.rows.last().expect("trace has at least row 0").objective
    }

    pub fn iterations(&self) -> u64 {
        self.rows.last().expect("trace has at least row 0").iter
    }
}

/// Operator-application counter. All solver access to the full operator goes
/// through this wrapper so traces account for every application exactly once.
pub(crate) struct CountedOp<'a> {
    op: &'a dyn LinOp,
    pub forward_count: u64,
    pub adjoint_count: u64,
}

impl<'a> CountedOp<'a> {
    pub fn new(op: &'a dyn LinOp) -> Self {
        CountedOp {
            op,
            forward_count: 0,
            adjoint_count: 0,
        }
    }

    pub fn forward(&mut self, x: &[f64]) -> Vec<Complex64> {
        self.forward_count += 1;
        self.op.forward(x)
    }

    pub fn adjoint(&mut self, z: &[Complex64]) -> Vec<f64> {
        self.adjoint_count += 1;
        self.op.adjoint(z)
    }
}

pub(crate) fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub(crate) fn support_size(x: &[f64]) -> u64 {
    x.iter().filter(|v| **v != 0.0).count() as u64
}

pub(crate) fn herm_norm_sq(z: &[Complex64]) -> f64 {
    herm_re(z, z)
}

/// Objective from a precomputed forward image: `0.5 ||y - fx||^2 + lambda ||x||_1`.
pub(crate) fn objective_parts(y: &[Complex64], fx: &[Complex64], lambda: f64, x: &[f64]) -> f64 {
    let resid: f64 = y
        .iter()
        .zip(fx)
        .map(|(yi, fi)| (yi - fi).norm_sqr())
        .sum();
    0.5 * resid + lambda * l1_norm(x)
}

pub(crate) fn elapsed_s(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

pub(crate) fn over_budget(start: Instant, budget: Option<f64>) -> bool {
    budget.is_some_and(|b| elapsed_s(start) >= b)
}
