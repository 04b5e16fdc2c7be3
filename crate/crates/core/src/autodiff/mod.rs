//! Define-by-run reverse-mode automatic differentiation over dense `f64`
//! arrays.
//!
//! A [`Graph`] is an append-only tape. Every forward operation evaluates
//! eagerly, checks its output for NaN/Inf, and records a node whose inputs
//! all have smaller ids, so reverse iteration over the node list is a valid
//! topological order for [`Graph::backward`]. Graphs are cheap and are
//! rebuilt for every training step.

mod gradcheck;
mod graph;
mod kernels;
mod tensor;

pub use gradcheck::{grad_check, grad_check_coords};
pub use graph::{Gradients, Graph, Var};
pub use tensor::Tensor;
