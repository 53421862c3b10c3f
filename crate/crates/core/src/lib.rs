//! Equidecomposition of clopen sets under group actions on symbolic spaces,
//! and the algebra of the resulting type semigroups.

pub mod equidecomp;
pub mod error;
pub mod monoid_lab;
pub mod partition_engine;
pub mod space_model;
pub mod states_lp;
pub mod unit_systems;

pub use error::{Error, Result};
