//! The guide's chapters as doc comments, so `cargo test` runs every code block.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/impact.md")]
pub mod impact {}
#[doc = include_str!("../../../book/src/cumulants.md")]
pub mod cumulants {}
#[doc = include_str!("../../../book/src/solving.md")]
pub mod solving {}
#[doc = include_str!("../../../book/src/equivalence.md")]
pub mod equivalence {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
