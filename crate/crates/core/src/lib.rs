//! Evaluators for sell-side limit-order tactics and optimizers for
//! market-order execution schedules.
//!
//! Limit-order side: closed forms for the pegging tactic ([`peg`]), a
//! backward-recursion lattice for post-and-wait ([`post_wait`]), cost
//! comparison ([`tactic_eval`]) and Monte-Carlo checks ([`monte_carlo`]).
//! Market-order side: block/uniform cost functionals under decay kernels
//! ([`exec_market`]) and stochastic-liquidity optimization
//! ([`exec_stochastic`]). [`allocator`] maps schedule-band position to a
//! tactic set.

// `!(x > 0.0)` style guards deliberately reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod domain;
pub mod error;
pub mod exec_market;
pub mod exec_stochastic;
pub mod monte_carlo;
pub mod peg;
pub mod post_wait;
pub mod tactic_eval;

pub use domain::{
    validate_params, BoundaryCondition, ImpactSpec, KernelSpec, SpreadMultiple, TacticParams,
    TradeSchedule,
};
pub use error::{Error, Result};
