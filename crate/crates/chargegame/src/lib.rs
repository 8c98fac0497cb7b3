//! Multi-user wireless charging power allocation as a noncooperative bidding
//! game.
//!
//! A single transmitter with a fixed power budget serves several users. Each
//! user submits a positive unit-price bid and receives power in proportion to
//! its bid, scaled by its link efficiency. Every user's payoff trades off
//! charging satisfaction against the payment implied by its bid, which yields
//! a closed-form best response and a unique Nash equilibrium.
//!
//! The crate provides:
//!
//! - [`game`] — the data model (users, games, bids) plus the allocation rule,
//!   utilities, and the closed-form best response;
//! - [`dynamics`] — synchronous best-response iteration, the equilibrium
//!   solver, and convergence diagnostics;
//! - [`async_sim`] — totally asynchronous updating with per-link packet loss
//!   and per-user update schedules, simulated on a deterministic round clock;
//! - [`welfare`] — social welfare, the cooperative benchmark, and the price
//!   of anarchy;
//! - [`oracle`] — independent brute-force references used to validate the
//!   closed forms;
//! - [`rng`] — seeded, counter-splittable random streams so every simulation
//!   is bit-reproducible.

pub mod async_sim;
pub mod dynamics;
pub mod game;
mod numeric;
pub mod oracle;
pub mod rng;
pub mod welfare;

pub use async_sim::{
    run_async, step_async, AsyncNetworkModel, MailboxState, ModelError, UpdateSchedule,
};
pub use dynamics::{
    check_monotone, estimate_rate, iterate_sync, part_metric, solve_nash, ConvergenceTrace,
    InitMode, Monotonicity, RateError, SolveError, SolverSettings,
};
pub use game::{AllocationReport, BidVector, ChargingGame, GameError, UserProfile};
pub use oracle::{
    brute_force_best_response, property_battery, GridSpec, OracleError, PropertyReport,
    PropertyViolation,
};
pub use welfare::{
    constrained_cooperative_optimum, cooperative_supremum, price_of_anarchy, social_welfare,
    welfare_report, BoxOptimum, WelfareError, WelfareReport,
};
