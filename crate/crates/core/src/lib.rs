//! Semicoarse correlated equilibria of finite normal-form games.
//!
//! The crate computes and verifies outcome distributions that are stable
//! against every deviation realisable as the gradient field of a quadratic
//! potential on a player's simplex. These sit between correlated and coarse
//! correlated equilibria and are exactly what projected gradient ascent
//! guarantees in time average.
//!
//! * [`game`]: normal-form games, mixed profiles and the stock game generators.
//! * [`transforms`]: stochastic transforms, generator pairs and the canonical family.
//! * [`lp`]: linear programs, a two-phase simplex solver and LP text I/O.
//! * [`equilibria`]: CE, CCE and semicoarse programs, the Lyapunov dual and verifiers.
//! * [`dynamics`]: projected gradient ascent, regret measurement and bounds.
//! * [`bertrand`]: Bertrand competition, equilibrium certificates and convergence bounds.

pub mod bertrand;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod game;
pub mod lp;
pub mod transforms;

pub use error::{Error, Result};
