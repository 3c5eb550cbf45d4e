#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandits;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod graphs;
pub mod policies;
pub mod regret;
pub mod report;

pub use error::{Error, Result};
