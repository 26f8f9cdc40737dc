//! mdBook cannot execute the code blocks inside `book/`, so this crate
//! includes every chapter as module documentation and lets
//! `cargo test --doc` run them. One module per chapter keeps a failing
//! snippet traceable to its source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral {}

#[doc = include_str!("../../../book/src/potentials.md")]
pub mod potentials {}

#[doc = include_str!("../../../book/src/stepping.md")]
pub mod stepping {}

#[doc = include_str!("../../../book/src/checks.md")]
pub mod checks {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
