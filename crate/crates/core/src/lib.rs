//! Canonical infinite interval exchange transformations (IIETs) for
//! substitution subshifts.
//!
//! The pipeline runs rule → Perron data → partition of `[0,1)` → approximating
//! finite exchanges → spectral diagnostics and pictures.

pub mod address;
pub mod duals;
pub mod error;
pub mod iet;
pub mod numfmt;
pub mod partition;
pub mod render;
pub mod spectral;
pub mod subst;

pub use address::{Address, Label};
pub use error::{Error, Result};
pub use iet::FiniteIet;
pub use partition::PhiConfig;
pub use subst::{PerronData, SubstitutionRule, System, TransitionMatrix};
