//! Jet representation and standard Taylor-mode propagation: integer
//! partitions with multiplicities, per-primitive propagation rules, and
//! jet evaluation over a compute graph.

mod jet;
mod ladder;
mod partition;
mod prop;

pub use jet::Jet;
pub use ladder::UnaryFn;
pub use partition::{binomial, partition_table, partitions, Partition, PartitionTable, MAX_DEGREE};
pub use prop::{apply_affine, jet_eval, propagate_primitive, PrimitiveKind};

use std::fmt;

use crate::tensor::TensorError;

#[derive(Debug, Clone, PartialEq)]
pub enum TaylorError {
    /// Requested degree outside 1..=MAX_DEGREE.
    DegreeOutOfRange(usize),
    /// Inputs to a primitive disagree on degree, batching or collapsed layout.
    MixedBatching(String),
    /// Jet construction violated an invariant.
    BadJet(String),
    /// Primitive or graph construct outside the supported set.
    Unsupported(String),
    Tensor(TensorError),
}

impl fmt::Display for TaylorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaylorError::DegreeOutOfRange(k) => {
                write!(f, "degree {k} outside supported range 1..={MAX_DEGREE}")
            }
            TaylorError::MixedBatching(s) => write!(f, "mixed batching: {s}"),
            TaylorError::BadJet(s) => write!(f, "bad jet: {s}"),
            TaylorError::Unsupported(s) => write!(f, "unsupported: {s}"),
            TaylorError::Tensor(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for TaylorError {}

impl From<TensorError> for TaylorError {
    fn from(e: TensorError) -> Self {
        TaylorError::Tensor(e)
    }
}
