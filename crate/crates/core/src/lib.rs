//! Polaron-frame quantum master equations for N-level systems coupled to a bosonic bath.

pub mod error;
pub mod linalg;
pub mod model;
pub mod bath;
pub mod quad;
pub mod special;
pub mod polaron;
pub mod generators;
pub mod dynamics;
pub mod oracle;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/model.md")]
mod book_model {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/bath.md")]
mod book_bath {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/polaron.md")]
mod book_polaron {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/generators.md")]
mod book_generators {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dynamics.md")]
mod book_dynamics {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/oracle.md")]
mod book_oracle {}
