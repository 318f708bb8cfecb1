//! A definite-clause logic programming engine built around the magic
//! transformation, with top-down (LD-resolution) and bottom-up (ground
//! fixpoint) evaluators and a harness that checks the transformation's
//! correctness properties by differential evaluation.

pub mod bottomup;
pub mod cli;
pub mod error;
pub mod parser;
pub mod subst;
pub mod syntax;
pub mod topdown;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
