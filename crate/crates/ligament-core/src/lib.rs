//! 2D linear-elasticity structural optimization with thin-bar grafting.
//!
//! The crate predicts, through a polarization-tensor adjoint formula, the
//! first-order effect of grafting a thin material bar onto a structure,
//! scans candidate bars, inserts the best ones inside a fixed-grid level-set
//! shape-optimization loop, and validates every prediction against direct
//! finite-difference solves of the perturbed tube problem.
//!
//! The crate is `no_std` (with `alloc`); all file formats, configuration and
//! the command-line front end live in the companion `ligament-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cases;
pub mod elasticity;
pub mod error;
pub mod functionals;
pub mod geom;
pub mod ligament;
pub mod material;
pub mod mesh;
pub mod optimizer;
pub mod sparse;
pub mod validation;

pub use error::{Error, Result};
pub use geom::{Sym2, Vec2};
