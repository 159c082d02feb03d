//! PDE operators built on jets: exact and stochastic Laplacians,
//! weighted Laplacians, the biharmonic operator via jet interpolation,
//! and the vector-count cost model.

mod cost;
mod directions;
pub mod gamma;
mod ops;
mod plan;

pub use cost::{count_vectors, theoretical_ratio, OperatorKind};
pub use directions::{DirectionSet, Distribution, WeightedLaplacianSpec};
pub use gamma::{gamma, multi_indices, Rat};
pub use ops::{
    biharmonic_6jet, biharmonic_exact, biharmonic_stochastic, interpolate_mixed_partial,
    interpolation_identity_check, laplacian, mixed_partial_6jet, prepare_biharmonic_exact,
    prepare_biharmonic_stochastic, prepare_laplacian, prepare_weighted_laplacian,
    weighted_laplacian, PreparedOperator,
};
pub use plan::{biharmonic_plan, rat_to_f64, InterpolationPlan, Pairing, PlanMember, ReducedGroup};

use std::fmt;

use crate::graph::GraphError;
use crate::taylor::TaylorError;
use crate::tensor::TensorError;

/// Whether the captured graph is evaluated as-is or after collapsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Standard,
    Collapsed,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Collapsed => "collapsed",
        }
    }
}

#[derive(Debug)]
pub enum OperatorError {
    ZeroDimension,
    ZeroSamples,
    IndefiniteWeighting,
    BadSpec(String),
    Graph(GraphError),
    Taylor(TaylorError),
    Tensor(TensorError),
}

impl fmt::Display for OperatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorError::ZeroDimension => write!(f, "input dimension must be positive"),
            OperatorError::ZeroSamples => write!(f, "sample count must be positive"),
            OperatorError::IndefiniteWeighting => {
                write!(f, "weighting matrix has negative eigenvalues")
            }
            OperatorError::BadSpec(s) => write!(f, "{s}"),
            OperatorError::Graph(e) => write!(f, "{e}"),
            OperatorError::Taylor(e) => write!(f, "{e}"),
            OperatorError::Tensor(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for OperatorError {}

impl From<GraphError> for OperatorError {
    fn from(e: GraphError) -> Self {
        OperatorError::Graph(e)
    }
}

impl From<TaylorError> for OperatorError {
    fn from(e: TaylorError) -> Self {
        OperatorError::Taylor(e)
    }
}

impl From<TensorError> for OperatorError {
    fn from(e: TensorError) -> Self {
        OperatorError::Tensor(e)
    }
}
