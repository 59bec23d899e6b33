//! Finite-model toolkit for condensing abstract domains: explicit lattices
//! and quantales, closure-operator domains, complete and weak-complete
//! shells, flat substitutions with lifted unification, and a small logic
//! language with a condensation checker.

pub mod corpus;
pub mod domains;
pub mod error;
pub mod lattice_core;
pub mod lp_semantics;
pub mod quantale;
pub mod shells;
pub mod subst;

mod par;
mod syntax;

pub use error::{Error, Result};
