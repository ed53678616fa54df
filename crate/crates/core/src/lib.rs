#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod jet;
pub mod expr;
pub mod linalg;
pub mod geometry;
pub mod catalog;
pub mod gcr;
pub mod cli;
