//! A circle-method laboratory for Waring-type problems over weighted thin sets.

pub mod arith;
pub mod cli;
pub mod conv;
pub mod counting;
pub mod error;
pub mod expsum;
pub mod predict;
pub mod psi;
pub mod quad;
pub mod sets;
pub mod singular;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/sets.md")]
    mod sets {}
    #[doc = include_str!("../../../book/src/psi.md")]
    mod psi {}
    #[doc = include_str!("../../../book/src/expsum.md")]
    mod expsum {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/singular.md")]
    mod singular {}
    #[doc = include_str!("../../../book/src/predict.md")]
    mod predict {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
