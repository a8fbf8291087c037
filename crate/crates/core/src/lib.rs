//! High-order nonlocal-means image restoration.
//!
//! - [`nlm`]: classic nonlocal-means denoising.
//! - [`kernreg`]: order 0–2 local polynomial kernel regression.
//! - [`honlm`]: nonlocal-means weights inside the polynomial fit.
//! - [`superres`]: similarity-weighted multi-frame fusion and TV deblurring.
//! - [`metrics`], [`pnmio`], [`bench`], [`cli`]: scoring, PGM I/O and the
//!   command-line harness.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod honlm;
pub mod image;
pub mod kernreg;
pub mod metrics;
pub mod nlm;
pub mod noise;
pub mod pnmio;
pub mod superres;

pub use error::{Error, Result};
pub use image::{Image, Kernel2D, Patch};
pub use kernreg::Order;
