//! Closed-form vector counts per graph node for every operator and
//! mode: the cost proxy that predicts the standard/collapsed
//! performance ratio.

use super::{Mode, OperatorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    LaplacianExact,
    LaplacianStochastic,
    WeightedLaplacianExact,
    WeightedLaplacianStochastic,
    BiharmonicExact,
    BiharmonicStochastic,
}

impl OperatorKind {
    pub fn is_exact(self) -> bool {
        matches!(
            self,
            OperatorKind::LaplacianExact
                | OperatorKind::WeightedLaplacianExact
                | OperatorKind::BiharmonicExact
        )
    }
}

/// Vectors propagated through every graph node for one evaluation point.
/// `r_or_s` is the rank R for the weighted Laplacian and the sample
/// count S for stochastic operators; the exact (weighted) Laplacian and
/// exact biharmonic derive everything from `dim`.
pub fn count_vectors(
    op: OperatorKind,
    mode: Mode,
    dim: usize,
    r_or_s: usize,
) -> Result<u64, OperatorError> {
    if dim == 0 {
        return Err(OperatorError::ZeroDimension);
    }
    let d = dim as u64;
    let count = match op {
        OperatorKind::LaplacianExact => match mode {
            Mode::Standard => 1 + 2 * d,
            Mode::Collapsed => 2 + d,
        },
        OperatorKind::WeightedLaplacianExact => {
            let r = r_or_s as u64;
            match mode {
                Mode::Standard => 1 + 2 * r,
                Mode::Collapsed => 2 + r,
            }
        }
        OperatorKind::LaplacianStochastic | OperatorKind::WeightedLaplacianStochastic => {
            if r_or_s == 0 {
                return Err(OperatorError::ZeroSamples);
            }
            let s = r_or_s as u64;
            match mode {
                Mode::Standard => 1 + 2 * s,
                Mode::Collapsed => 2 + s,
            }
        }
        OperatorKind::BiharmonicExact => {
            // grouped sum over the three reduced jet families (the closed
            // forms 6D^2-2D+1 and 9/2 D^2 - 3/2 D + 4 fall out of it)
            let diag = d;
            let off = d * (d - 1);
            let pairs = d * (d - 1) / 2;
            match mode {
                Mode::Standard => 1 + 4 * (diag + off + pairs),
                Mode::Collapsed => 1 + (3 * diag + 1) + (3 * off + 1) + (3 * pairs + 1),
            }
        }
        OperatorKind::BiharmonicStochastic => {
            if r_or_s == 0 {
                return Err(OperatorError::ZeroSamples);
            }
            let s = r_or_s as u64;
            match mode {
                Mode::Standard => 1 + 4 * s,
                Mode::Collapsed => 2 + 3 * s,
            }
        }
    };
    Ok(count)
}

/// Predicted collapsed/standard cost ratio. Exact operators compare the
/// whole per-datum vector count; stochastic operators compare the
/// per-sample increment.
pub fn theoretical_ratio(op: OperatorKind, dim: usize, r_or_s: usize) -> Result<f64, OperatorError> {
    let at = |mode: Mode, s: usize| count_vectors(op, mode, dim, s);
    if op.is_exact() {
        Ok(at(Mode::Collapsed, r_or_s)? as f64 / at(Mode::Standard, r_or_s)? as f64)
    } else {
        let ds = at(Mode::Standard, r_or_s + 1)? - at(Mode::Standard, r_or_s)?;
        let dc = at(Mode::Collapsed, r_or_s + 1)? - at(Mode::Collapsed, r_or_s)?;
        Ok(dc as f64 / ds as f64)
    }
}
