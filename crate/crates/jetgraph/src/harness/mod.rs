//! Verification oracles (nested first-order duals, finite differences)
//! and the benchmark scaffolding (MLP builder, slope fitting).

mod bench;
mod dual;
mod fd;
mod mlp;
mod oracle;

pub use bench::{fit_line, run_bench, BenchConfig, BenchOp, BenchRecord, CSV_HEADER};
pub use dual::{Dual, Scalar};
pub use fd::finite_difference;
pub use mlp::{build_mlp, MlpSpec};
pub use oracle::{
    biharmonic_contraction, eval_function_graph, hessian_trace, oracle_derivative,
    weighted_hessian_trace, DerivativeTensor,
};
