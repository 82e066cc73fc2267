//! Code listings of the guide in `book/src`, compiled and run as doc-tests.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/intervals.md")]
pub mod intervals {}

#[doc = include_str!("../../../book/src/decomposition.md")]
pub mod decomposition {}

#[doc = include_str!("../../../book/src/propagation.md")]
pub mod propagation {}

#[doc = include_str!("../../../book/src/box-consistency.md")]
pub mod box_consistency {}

#[doc = include_str!("../../../book/src/solving.md")]
pub mod solving {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
