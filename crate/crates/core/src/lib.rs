#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dmregion;
pub mod epi;
pub mod extremal;
pub mod error;
pub mod gaussinfo;
pub mod matcore;
pub mod secrecy;

pub use error::{Error, Result};
pub use matcore::SymMatrix;
