#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Finite expression search for high-dimensional elliptic PDEs.
//!
//! Candidate solutions are binary trees of unary and binary operators with
//! trainable scalings and biases. A risk-seeking policy-gradient controller
//! proposes operator assignments, each is scored after a short Adam + BFGS
//! tuning of its parameters, and the best pool members are fine-tuned.
//! Unary operators may be trained tanh networks ("TN operators").

pub mod cli;
pub mod controller;
pub mod error;
pub mod eval;
pub mod expr;
pub mod numeric;
pub mod optimize;
pub mod pde;
pub mod rng;
pub mod search;
pub mod transnet;

pub use error::{FexError, Result};
