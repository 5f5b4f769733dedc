//! Population dynamics of the Asian citrus psyllid (*Diaphorina citri*)
//! under sex-pheromone trapping, formulated as a piecewise smooth ODE system.
//!
//! The adult population is split into three compartments:
//!
//! | Symbol | Compartment |
//! |--------|-------------|
//! | `M` | males, all assumed available for mating |
//! | `A` | females currently receptive to mating |
//! | `U` | fertilized females preparing for oviposition |
//!
//! Mating saturates through the term `min{γM/(A_p + A), 1}`: when males are
//! abundant every receptive female finds a mate, when they are scarce only a
//! fraction does. Traps act through two knobs: the lure strength `A_p`
//! (pheromone emission expressed as "false females" competing for males) and
//! the male-killing rate `α` of trapped males. The `min` makes the vector
//! field continuous but only piecewise smooth; the switching plane
//! `γM = A + A_p` separates the male-abundance and male-scarcity regimes.
//!
//! Crate layout:
//!
//! - [`model`] — parameters, state space, and the switched vector fields;
//! - [`analysis`] — offspring numbers, closed-form equilibria, Jacobians,
//!   Routh–Hurwitz/eigenvalue stability, next-generation matrices, and the
//!   feedback-gain threshold `k*(α)`;
//! - [`thresholds`] — fold thresholds in the lure strength: the critical
//!   pheromone amount above which the male-scarcity system loses its positive
//!   equilibria, and the analogous threshold of the monotone comparison
//!   system;
//! - [`sim`] — event-aware Dormand–Prince 5(4) integration of the controlled
//!   system under open-loop, closed-loop, sampled, and mixed policies, with
//!   pheromone-cost accounting;
//! - [`linalg`] — small fixed-size helpers (3×3 matrices, cubic roots).
//!
//! The crate is `no_std`-compatible (enable the `libm` feature instead of
//! `std`); all computations are pure and deterministic.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("psyllid-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod linalg;
pub(crate) mod math;
pub mod model;
pub mod sim;
pub mod thresholds;

pub use error::CoreError;
pub use model::{ControlInputs, ModelParams, State};
