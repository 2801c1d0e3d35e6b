#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod pulse;
mod kernel;
pub mod scattering;
pub mod joint;
pub mod gates;
pub mod sweep;
