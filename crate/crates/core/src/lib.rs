//! Distributionally robust finite games with risk-averse players.
//!
//! Players face an uncertain payoff tensor whose distribution is only known to
//! lie in a moment ambiguity set (polyhedral support, fixed mean, bounded mean
//! absolute deviation). Each player minimises the worst-case CVaR of their loss
//! over that set. This crate evaluates those worst-case risks through their
//! linear-programming duals, computes best responses and equilibria, and
//! certifies equilibria against the multilinear optimality system obtained from
//! LP duality.
//!
//! Module map:
//!
//! * [`game`] payoff tensors, mixed strategies and the payoff operator `Y^i`.
//! * [`ambiguity`] the moment ambiguity set and its validation.
//! * [`lp`] a dense two-phase simplex solver with dual extraction.
//! * [`risk`] CVaR of discrete losses and worst-case CVaR over the ambiguity set.
//! * [`equilibrium`] best responses, gaps, certificates, search and reductions.
//! * [`inspection`], [`gamefile`], [`experiment`], [`cli`] the command-line
//!   front end and the inspection-game experiment harness.

// Dense linear algebra reads more clearly with explicit index loops.
#![allow(clippy::needless_range_loop)]
pub mod ambiguity;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod format;
pub mod game;
pub mod gamefile;
pub mod inspection;
pub mod lp;
pub mod risk;

pub use error::{Error, Result};
