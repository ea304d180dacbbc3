//! Virtual camera rigs for surround-view perception.
//!
//! Images from an arbitrary physical camera rig are re-projected into a fixed
//! virtual rig using a ground-plane / fixed-distance depth assumption
//! ([`warp`]). The quality of a virtual rig is scored by a distance-weighted
//! angular error over 3D box corners ([`metric`]), and the virtual rig itself
//! is searched with CMA-ES ([`optimizer`]) against a family of physical rigs.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod image;
pub mod metric;
pub mod optimizer;
pub mod presets;
pub mod rng;
pub mod scenegen;
pub mod warp;

pub use error::{Error, Result};
