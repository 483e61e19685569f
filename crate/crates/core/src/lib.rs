//! Proximal variance-reduced stochastic gradient methods for finite sums,
//! with linear-rate certificates.
#![no_std]

extern crate alloc;

pub mod dual;
pub mod linalg;
pub mod problems;
pub mod rates;
pub mod sampling;
pub mod solver;

pub use dual::{DualError, DualStorage, DualStrategy, Replacement, StorageLayout, UpdateSet};
pub use problems::{
    build_least_squares, build_least_squares_dense, build_one_dimensional, ComponentFunctions,
    FiniteSumProblem, ProblemError, ProxOperator, SparseRow,
};
pub use sampling::{PrimalDistribution, SamplingError, SamplingLabel};
pub use solver::{run, RunConfig, SolverError, SolverState, Trace, TraceRow};
pub use rates::{
    nu_coherent, nu_incoherent, solve_optimal_rate, solve_rate_fixed_step, LimitingSide, RateCertificate,
    RateError, RateInputs,
};
