//! Jet values: a primal plus K coefficient blocks, optionally batched
//! over a set of directions along a new leading axis.

use crate::tensor::{Shape, Tensor};

use super::TaylorError;

/// Truncated Taylor expansion of degree K represented by its coefficient
/// tensors. The primal is always unbatched. When `batch` is set, each
/// coefficient carries a leading axis of that extent, one slice per
/// direction -- except the top coefficient when `collapsed_top` is set,
/// which then stores the sum over directions and has no leading axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    primal: Tensor,
    coeffs: Vec<Tensor>,
    batch: Option<usize>,
    collapsed_top: bool,
}

impl Jet {
    pub fn new(
        primal: Tensor,
        coeffs: Vec<Tensor>,
        batch: Option<usize>,
        collapsed_top: bool,
    ) -> Result<Jet, TaylorError> {
        if coeffs.is_empty() {
            return Err(TaylorError::DegreeOutOfRange(0));
        }
        if collapsed_top && batch.is_none() {
            return Err(TaylorError::BadJet(
                "collapsed_top requires a batched jet".into(),
            ));
        }
        let elem = primal.shape().clone();
        let degree = coeffs.len();
        for (i, c) in coeffs.iter().enumerate() {
            let k = i + 1;
            let top_collapsed = collapsed_top && k == degree;
            let expected = match batch {
                Some(r) if !top_collapsed => elem.prepend(r),
                _ => elem.clone(),
            };
            if c.shape() != &expected {
                return Err(TaylorError::BadJet(format!(
                    "coefficient {k} has shape {} but expected {expected}",
                    c.shape()
                )));
            }
        }
        Ok(Jet {
            primal,
            coeffs,
            batch,
            collapsed_top,
        })
    }

    /// Unbatched jet seeded along one direction: x1 = v, higher coefficients zero.
    pub fn seed_direction(x0: Tensor, v: Tensor, degree: usize) -> Result<Jet, TaylorError> {
        if v.shape() != x0.shape() {
            return Err(TaylorError::BadJet(format!(
                "direction shape {} does not match primal {}",
                v.shape(),
                x0.shape()
            )));
        }
        let elem = x0.shape().clone();
        let mut coeffs = vec![v];
        coeffs.resize(degree, Tensor::zeros(elem));
        Jet::new(x0, coeffs, None, false)
    }

    /// Batched jet seeded along the rows of `directions` (leading axis =
    /// direction index): x1 = directions, higher coefficients zero.
    pub fn seed_directions(x0: Tensor, directions: Tensor, degree: usize) -> Result<Jet, TaylorError> {
        let r = match directions.shape().dims().first() {
            Some(&r) => r,
            None => return Err(TaylorError::BadJet("directions must have a leading axis".into())),
        };
        if directions.shape() != &x0.shape().prepend(r) {
            return Err(TaylorError::BadJet(format!(
                "directions shape {} does not match primal {} with leading axis",
                directions.shape(),
                x0.shape()
            )));
        }
        let batched_zero = Tensor::zeros(x0.shape().prepend(r));
        let mut coeffs = vec![directions];
        coeffs.resize(degree, batched_zero);
        Jet::new(x0, coeffs, Some(r), false)
    }

    /// Unbatched jet with explicit coefficients x1..xK.
    pub fn from_coefficients(x0: Tensor, coeffs: Vec<Tensor>) -> Result<Jet, TaylorError> {
        Jet::new(x0, coeffs, None, false)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn primal(&self) -> &Tensor {
        &self.primal
    }

    /// Coefficient x_k, 1-based.
    pub fn coeff(&self, k: usize) -> &Tensor {
        &self.coeffs[k - 1]
    }

    pub fn coeffs(&self) -> &[Tensor] {
        &self.coeffs
    }

    pub fn top(&self) -> &Tensor {
        self.coeffs.last().unwrap()
    }

    pub fn batch(&self) -> Option<usize> {
        self.batch
    }

    pub fn is_collapsed_top(&self) -> bool {
        self.collapsed_top
    }

    pub fn element_shape(&self) -> &Shape {
        self.primal.shape()
    }

    /// Sum the top coefficient over the direction axis, producing the
    /// collapsed layout. Identity on already-collapsed jets.
    pub fn collapse_top(&self) -> Result<Jet, TaylorError> {
        if self.collapsed_top {
            return Ok(self.clone());
        }
        let r = self
            .batch
            .ok_or_else(|| TaylorError::BadJet("collapse_top on unbatched jet".into()))?;
        let mut coeffs = self.coeffs.clone();
        let k = coeffs.len();
        coeffs[k - 1] = coeffs[k - 1].sum_leading()?;
        Jet::new(self.primal.clone(), coeffs, Some(r), true)
    }

    /// Top coefficient summed over directions (whether or not the jet is
    /// already collapsed).
    pub fn summed_top(&self) -> Result<Tensor, TaylorError> {
        if self.collapsed_top || self.batch.is_none() {
            Ok(self.top().clone())
        } else {
            Ok(self.top().sum_leading()?)
        }
    }
}
