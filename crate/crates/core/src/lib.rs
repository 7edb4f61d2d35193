#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod lsq;
pub mod nv;
pub mod output;
pub mod spectra;
pub mod spin;

pub use error::{Error, Result};
