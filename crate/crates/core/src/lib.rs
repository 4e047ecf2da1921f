// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod hyperbolic;
pub mod oracle;
pub mod parabolic;
pub mod steady;
pub mod verify;
pub mod wave;
