//! Distortion-matrix reflection imaging.
//!
//! The crate covers the whole chain from a synthetic plane-wave acquisition to
//! an aberration-corrected image: matrix kernels ([`matrix`]), a Born forward
//! model ([`sim`]), focused beamforming ([`beamform`]), far-field projection and
//! clutter filtering ([`farfield`]) and distortion-matrix analysis and correction
//! ([`distortion`]).

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod beamform;
pub mod distortion;
pub mod error;
pub mod farfield;
pub mod matrix;
pub mod par;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;
