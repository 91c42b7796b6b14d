#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::large_enum_variant)]

pub mod camera;
pub mod central;
pub mod config;
pub mod environment;
pub mod error;
pub mod geometry;
pub mod groundtruth;
pub mod image;
pub mod job;
pub mod noncentral;

pub use error::{Error, Result};
