//! Best-policy identification in discounted tabular MDPs from a single
//! trajectory: planning, chain diagnostics, oracle allocations, navigation,
//! stopping and benchmarking.

pub mod allocation;
pub mod bench;
pub mod chain;
pub mod error;
pub mod instances;
pub mod mdp;
pub mod navigation;
pub mod stopping;

pub use error::{Error, Result};
pub use mdp::{solve_optimal, StochasticPolicy, TabularMdp, ValueSolution};
