//! Ground and mountain-pass states of the mass-supercritical NLS with a
//! harmonic trap in two of three directions, on an axisymmetric grid.
//!
//! The guide in `book/` walks through the pieces in dependency order.

// grid code indexes several arrays by the same node coordinates
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod functional;
pub mod grid;
pub mod interp;
pub mod ground;
pub mod linalg;
pub mod mpass;
pub mod newton;
pub mod soliton;
pub mod spectral;
pub mod study;
pub mod sum;

pub use error::{Error, Result};

// The guide's snippets run as doctests of this crate.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/soliton.md")]
    mod soliton {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/ground.md")]
    mod ground {}
    #[doc = include_str!("../../../book/src/mountain_pass.md")]
    mod mountain_pass {}
    #[doc = include_str!("../../../book/src/studies.md")]
    mod studies {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
