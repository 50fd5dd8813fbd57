//! Command line entry points and the live WebSocket server.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod listen;
pub mod messages;
pub mod server;
