//! Compete or cooperate: a two-cell MIMO macro/femto simulator.
//!
//! The macro (MBS) and femto (FBS) base stations either play an
//! uncoordinated precoder-selection game, settled at the correlated
//! equilibrium with the highest expected sum rate, or cooperate through
//! joint transmission with a rate-denominated side payment. The coalition
//! module decides which is stable; the harness maps where.

pub mod codebook;
pub mod coalition;
pub mod equilibrium;
pub mod harness;
pub mod numerics;
pub mod parallel;
pub mod rates;
pub mod scenario;

pub use codebook::{Codebook, CoordFbsAction, PowerSplit, Precoder};
pub use coalition::{CoalitionReport, PaymentPolicy};
pub use equilibrium::{CeMode, EquilibriumReport, GameMode, PayoffTable};
pub use harness::{evaluate_point, EvalConfig};
pub use parallel::Execution;
pub use scenario::{Point, Scenario};
