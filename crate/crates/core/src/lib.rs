// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustics;
pub mod engine;
pub mod exec;
pub mod geom;
pub mod gesture;
pub mod glottis;
pub mod tongue;
pub mod tract;
