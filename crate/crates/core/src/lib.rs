// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod estimation;
pub mod interferometer;
pub mod materials;
pub mod modesolver;
pub mod scenario;
pub mod specfun;
