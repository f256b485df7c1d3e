//! Spectral laboratory for the fractional Camassa–Holm equation
//!
//! ```text
//! u_t + u_x + u u_x + (3/4)Λu_x + (5/4)Λu_t + (1/4)[2Λ(u u_x) + uΛu_x] = 0,   Λ = (-∂x²)^ν,
//! ```
//!
//! on a periodic interval: Littlewood–Paley blocks and Besov norms, Bony
//! paraproducts and commutators, a pseudospectral RK4 solver for the
//! nonlocal form, the constructive Picard iteration, and analyticity
//! diagnostics.

pub mod analyticity;
pub mod bony;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod io;
pub mod littlewood_paley;
pub mod model;
pub mod picard;
pub mod spectral;

pub use error::{FchError, Result};
pub use littlewood_paley::{besov_norm, critical_index, BesovSpec, DyadicSystem};
pub use spectral::{GridSpec, MultiplierOp, SpectralField};
