//! Sparse image recovery from randomly sampled 2-D Fourier measurements.
//!
//! The crate solves the LASSO problem
//! `min_x 0.5 * ||y - G x||^2 + lambda * ||x||_1`
//! where `G` samples an image's discrete Fourier transform at chosen
//! frequency pairs. Three solvers share one problem description:
//!
//! * [`solvers::run_apgd`]: accelerated proximal gradient descent (FISTA),
//!   the classical baseline.
//! * [`solvers::run_vfw`]: vanilla Frank-Wolfe on the equivalent
//!   l1-ball-constrained problem, one atom per iteration.
//! * [`solvers::run_pfw`]: polyatomic Frank-Wolfe, which collects every
//!   near-optimal atom per iteration and reoptimizes over the active set.
//!
//! [`bench`] runs all three on identical generated instances and emits
//! comparable traces; [`problems`] generates those instances
//! deterministically.

pub mod bench;
pub mod error;
pub mod operators;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
pub use operators::{
    dft_adjoint, dft_forward, hermitian_inner, operator_norm_sq, restrict_columns, DenseOperator,
    FourierOperator, FrequencySampleSet, LinOp,
};
pub use problems::{
    add_complex_noise, assemble_problem, gen_sparse_image, gen_sparse_image_with,
    sample_frequencies, NoiseSpec, SparseImage,
};
pub use solvers::{
    dual_certificate, lasso_objective, run_apgd, run_apgd_with, run_ista, run_ista_traced,
    run_ista_with_stats, run_pfw, run_pfw_with, run_vfw, run_vfw_with, soft_threshold, ActiveSet,
    DualCertificate, IstaOutcome, LassoProblem, PfwConfig, PfwStep, SolverTrace, Termination,
    TraceRow,
};
