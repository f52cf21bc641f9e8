#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod controller;
pub mod error;
pub mod estimator;
pub mod plant;
pub mod scenarios;
pub mod simloop;

pub use error::{Error, Result};
