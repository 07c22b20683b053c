#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coords;
pub mod counting;
pub mod error;
pub mod profiles;
pub mod quad;
pub mod quadform;
pub mod spectral;
pub mod weights;

pub use coords::{LogRadius, Point};
pub use error::{Error, Result, Warning};
