//! Communication complexity of classical simulations of channels described
//! by conditional outcome probabilities `P(w|s,m)`.
//!
//! * [`game`]: game tensors, the planar depolarizing family and their files.
//! * [`info`]: entropy, capacity and marginal projection on finite alphabets.
//! * [`joint`]: joint outcome arrays and channels over them.
//! * [`solver`]: certified minimal capacity over channels reproducing a game.
//! * [`analytic`]: closed-form optimum of the planar game.
//! * [`protocol`]: one-shot simulation protocols with exact bit accounting.

// `!(x >= 0.0)` style tests are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod game;
pub mod info;
pub mod joint;
pub mod protocol;
pub mod solver;

pub use analytic::AnalyticError;
pub use game::GameError;
pub use info::InfoError;
pub use joint::JointError;
pub use protocol::ProtocolError;
pub use solver::SolverError;
