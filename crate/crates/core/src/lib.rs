//! Design and validation of security-optimal encrypted control systems.
//!
//! The crate synthesizes the state-feedback gain that makes least-squares
//! identification of the closed loop as hard as possible, sizes the
//! security parameter and key length of an updatable homomorphic
//! encryption scheme so that the identification cannot finish within a
//! defense period, and checks both claims by simulation: a Monte Carlo
//! identification attack and an encrypted control loop built on
//! updatable multiplicative ElGamal.
//!
//! Module map:
//!
//! - [`matkit`]: dense linear algebra (Lyapunov, pseudo-inverse, Cholesky).
//! - [`plantsim`]: plant/gain models and noisy closed-loop trajectories.
//! - [`riccati`]: regularized discrete-time LQR (initializer and cross-check).
//! - [`h2syn`]: log-det barrier solver for the H₂ gain-synthesis LMI.
//! - [`lsattack`]: least-squares identification attacker and Monte Carlo harness.
//! - [`seclevel`]: sample complexity, deciphering time, sizing of N*, λ*, k*.
//! - [`cryptoloop`]: updatable ElGamal, fixed-point codec, encrypted loop.
//! - [`cli`]: the `encctl` command-line front end.

pub mod cli;
pub mod cryptoloop;
pub mod h2syn;
pub mod lsattack;
pub mod matkit;
pub mod plantsim;
pub mod riccati;
pub mod seclevel;

pub use matkit::{RealMatrix, SpdMatrix};
pub use plantsim::{FeedbackGain, PlantModel, Trajectory};
