//! Time integration of the fluctuation system, its incompressible limit and
//! the oscillating limit system.
//!
//! All integrators treat the constant-coefficient linear part exactly and
//! the remainder with the second-order Lawson–Heun scheme
//!
//! ```text
//! U* = E (Uₙ + h N(tₙ, Uₙ))
//! Uₙ₊₁ = E (Uₙ + h/2 N(tₙ, Uₙ)) + h/2 N(tₙ₊₁, U*)
//! ```
//!
//! where `E = e^{hL}`.

pub mod linear;
pub mod full;
pub mod initial;
pub mod insf;
pub mod limit;
