//! Stability and infinite-time admissibility analysis for diagonal
//! state-delayed systems `z'(t) = A z(t - tau) + B u(t)` with scalar input.
//!
//! Each mode of the diagonal system is the scalar delay equation
//! `z_k'(t) = lambda_k z_k(t - tau) + b_k u(t)` with characteristic function
//! `P(s) = s - lambda e^{-s tau}`. The crate
//!
//! * decides stability of a mode through the region `Lambda_tau` and
//!   cross-checks the verdict against characteristic roots ([`quasipoly`]),
//! * evaluates the resolvent blocks of a mode ([`resolvent`]),
//! * produces explicit admissibility constants per mode and an `l^1`
//!   certificate for the whole system ([`admissibility`]),
//! * integrates the delayed modes in time by the method of steps, giving
//!   time-domain oracles for the frequency-domain quantities ([`simulate`]),
//! * loads, generates and aggregates system descriptions ([`systems`]).

pub mod admissibility;
pub mod cli;
pub mod error;
pub mod lambert;
pub mod quadrature;
pub mod quasipoly;
pub mod resolvent;
pub mod simulate;
pub mod systems;

pub use error::{Error, Result};
pub use num_complex::Complex64;
