//! Higher-order forward (Taylor-mode) automatic differentiation with an
//! explicit compute-graph IR and a collapsing rewrite pass that
//! propagates the sum of highest-degree coefficients instead of
//! propagating then summing, plus the PDE operators built on top
//! (Laplacian, weighted Laplacian, biharmonic; exact and stochastic).

pub mod collapse;
pub mod graph;
pub mod harness;
pub mod operators;
pub mod rng;
pub mod taylor;
pub mod tensor;

pub use collapse::{collapse as collapse_graph, pull_sum_up, push_replicate_down, RewriteReport};
pub use graph::{Batching, Graph, GraphError, NodeKind};
pub use operators::{Mode, OperatorError};
pub use taylor::{Jet, PrimitiveKind, TaylorError, UnaryFn};
pub use tensor::{Shape, Tensor, TensorError};
