//! Optimal actuator placement for a semi-discretized heat equation.
//!
//! The lower level is an LQR problem whose value function `z0ᵀ Π(r) z0`
//! comes from an algebraic Riccati equation parameterized by the actuator
//! locations `r`. Neural surrogates replace the Riccati solve, and the upper
//! level `max_{z0} min_{r}` problem is solved by projected gradient
//! descent-ascent or by a consensus-based particle method.

pub mod maxmin;
pub mod model;
pub mod neural;
pub mod numkit;
pub mod riccati;
pub mod rng;
pub mod simulate;
pub mod surrogate;
