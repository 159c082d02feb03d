//! Direction sets for seeding first coefficients, and the weighted
//! Laplacian's factor matrix.

use crate::rng;
use crate::tensor::{Shape, Tensor};

use super::OperatorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    Rademacher,
    Gaussian,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Distribution::Rademacher => "rademacher",
            Distribution::Gaussian => "gaussian",
        }
    }
}

#[derive(Debug, Clone)]
pub enum DirectionSet {
    /// The standard basis of R^dim.
    Basis(usize),
    /// Columns of a (dim, count) matrix, one jet per column.
    Columns(Tensor),
    /// i.i.d. unit-variance draws.
    Sampled {
        count: usize,
        distribution: Distribution,
        seed: u64,
    },
}

impl DirectionSet {
    pub fn count(&self, _dim: usize) -> usize {
        match self {
            DirectionSet::Basis(d) => *d,
            DirectionSet::Columns(t) => t.shape().dims().get(1).copied().unwrap_or(0),
            DirectionSet::Sampled { count, .. } => *count,
        }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, DirectionSet::Sampled { .. })
    }

    /// Materialize as a (count, dim) matrix with one direction per row.
    pub fn materialize(&self, dim: usize) -> Result<Tensor, OperatorError> {
        if dim == 0 {
            return Err(OperatorError::ZeroDimension);
        }
        match self {
            DirectionSet::Basis(d) => {
                if *d != dim {
                    return Err(OperatorError::BadSpec(format!(
                        "basis dimension {d} does not match input dimension {dim}"
                    )));
                }
                let mut data = vec![0.0; dim * dim];
                for i in 0..dim {
                    data[i * dim + i] = 1.0;
                }
                Ok(Tensor::new(Shape::of(&[dim, dim]), data)?)
            }
            DirectionSet::Columns(t) => {
                let dims = t.shape().dims();
                if dims.len() != 2 || dims[0] != dim {
                    return Err(OperatorError::BadSpec(format!(
                        "column matrix shape {} does not match input dimension {dim}",
                        t.shape()
                    )));
                }
                let (d, r) = (dims[0], dims[1]);
                let mut data = vec![0.0; r * d];
                for row in 0..d {
                    for col in 0..r {
                        data[col * d + row] = t.data()[row * r + col];
                    }
                }
                Ok(Tensor::new(Shape::of(&[r, d]), data)?)
            }
            DirectionSet::Sampled {
                count,
                distribution,
                seed,
            } => {
                if *count == 0 {
                    return Err(OperatorError::ZeroSamples);
                }
                let mut rng = rng::seeded(*seed);
                Ok(match distribution {
                    Distribution::Gaussian => rng::gaussian_directions(&mut rng, *count, dim),
                    Distribution::Rademacher => rng::rademacher_directions(&mut rng, *count, dim),
                })
            }
        }
    }
}

/// Factor sigma of the weighting matrix sigma * sigma^T contracted with
/// the Hessian. Rank R <= D is allowed and exploited.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLaplacianSpec {
    sigma: Tensor,
}

impl WeightedLaplacianSpec {
    /// Directly from the factor, shape (D, R).
    pub fn from_sigma(sigma: Tensor) -> Result<WeightedLaplacianSpec, OperatorError> {
        if sigma.shape().rank() != 2 {
            return Err(OperatorError::BadSpec(format!(
                "sigma must be a matrix, got shape {}",
                sigma.shape()
            )));
        }
        Ok(WeightedLaplacianSpec { sigma })
    }

    /// From a symmetric weighting matrix: factorizes by eigendecomposition
    /// and rejects indefinite input (negative eigenvalues beyond a small
    /// tolerance). Near-zero modes are dropped, so the rank can shrink.
    pub fn from_weighting(w: &Tensor) -> Result<WeightedLaplacianSpec, OperatorError> {
        let dims = w.shape().dims();
        if dims.len() != 2 || dims[0] != dims[1] {
            return Err(OperatorError::BadSpec(format!(
                "weighting must be square, got shape {}",
                w.shape()
            )));
        }
        let d = dims[0];
        let scale = w.max_abs().max(1.0);
        for r in 0..d {
            for c in 0..r {
                if (w.data()[r * d + c] - w.data()[c * d + r]).abs() > 1e-10 * scale {
                    return Err(OperatorError::BadSpec(
                        "weighting matrix is not symmetric".into(),
                    ));
                }
            }
        }
        let (eigvals, eigvecs) = jacobi_eigen(w);
        let tol = 1e-10 * scale;
        if eigvals.iter().any(|&l| l < -tol) {
            return Err(OperatorError::IndefiniteWeighting);
        }
        let kept: Vec<usize> = (0..d).filter(|&i| eigvals[i] > tol).collect();
        let r = kept.len().max(1);
        let mut sigma = vec![0.0; d * r];
        for (col, &i) in kept.iter().enumerate() {
            let root = eigvals[i].max(0.0).sqrt();
            for row in 0..d {
                sigma[row * r + col] = eigvecs[row * d + i] * root;
            }
        }
        Ok(WeightedLaplacianSpec {
            sigma: Tensor::new(Shape::of(&[d, r]), sigma)?,
        })
    }

    pub fn sigma(&self) -> &Tensor {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.shape().dims()[0]
    }

    pub fn rank(&self) -> usize {
        self.sigma.shape().dims()[1]
    }

    /// sigma * v for a rank-1 v of length R.
    pub fn apply(&self, v: &Tensor) -> Result<Tensor, OperatorError> {
        Ok(self.sigma.inner_product(v)?)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix; returns
/// (eigenvalues, column eigenvectors flattened row-major d x d).
fn jacobi_eigen(w: &Tensor) -> (Vec<f64>, Vec<f64>) {
    let d = w.shape().dims()[0];
    let mut a: Vec<f64> = w.data().to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p * d + q] * a[p * d + q];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + w.max_abs()) {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..d).map(|i| a[i * d + i]).collect();
    (eig, v)
}
