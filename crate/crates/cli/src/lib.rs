//! Configuration, serialization, rendering and the `dmi` command line.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cmx;
pub mod commands;
pub mod config;
pub mod render;
pub mod stages;

pub use commands::run;
