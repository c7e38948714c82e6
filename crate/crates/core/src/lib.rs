//! Hybrid multi-objective CMA-ES (HMO-CMA-ES) for anytime bi-objective
//! black-box optimization, together with a scalable bi-objective problem
//! suite and hypervolume-target benchmarking tools.

pub mod bench;
pub mod cli;
pub mod cma;
pub mod error;
pub mod eval;
pub mod hybrid;
pub mod linalg;
pub mod mocma;
pub mod pareto;
pub mod problems;
pub mod scalarize;
pub mod warmstart;

pub use error::{Error, Result};
pub use eval::{Component, Evaluator, Ledger};
pub use pareto::{dominates, hv2d, hv_contribution, nondominated_sort, ObjectiveVector, ParetoArchive, SearchPoint, Solution};
pub use problems::{make_problem, reference_data, BiObjectiveProblem, ProblemKey, ReferenceData};
pub use scalarize::Scalarization;
