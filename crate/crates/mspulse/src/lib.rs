//! Power-optimal amplitude-modulated Mølmer–Sørensen gates.
//!
//! This crate synthesizes Fourier-series pulse envelopes for two-ion
//! entangling gates that are robust to gate-timing errors, and evaluates the
//! resulting gate performance.
//!
//! The workflow:
//!
//! 1. [`constraints`] — linear conditions on the Fourier coefficients that
//!    null successive time derivatives of the phase-space trajectory at the
//!    gate time. Satisfying `l` such condition sets flattens the infidelity
//!    to O((Δt/T)^(4l+2)).
//! 2. [`optimizer`] — within the constrained family, minimize average pulse
//!    power at fixed entangling phase via a generalized Rayleigh quotient.
//! 3. [`trajectory`] — closed-form phase-space displacements F(t), G(t) and
//!    the accumulated geometric phase A(t).
//! 4. [`gate`] — analytic fidelity, an exact truncated-Fock-space propagator
//!    as an independent oracle, timing-error scans, and stability regions.
//!
//! See the `examples/` directory and the `mspulse` CLI for end-to-end runs.

pub mod cli;
pub mod constraints;
pub mod error;
pub mod gate;
pub mod optimizer;
pub mod pulse;
pub mod quad;
pub mod svg;
pub mod trajectory;

pub use error::{Error, Result};
pub use pulse::{FourierPulse, PhysicalParams};
