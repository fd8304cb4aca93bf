//! File formats, LensFun parsing and the `raycalib` command line on top of
//! [`raycalib_core`].

pub mod cli;
pub mod error;
pub mod field_io;
pub mod json;
pub mod lensfun;
pub mod manifest;

pub use raycalib_core as core;
