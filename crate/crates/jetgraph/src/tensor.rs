//! Minimal dense-tensor kernel: shapes, elementwise math, and the
//! broadcasting inner product used by every derivative contraction.
//!
//! Tensors are immutable after construction, store 64-bit floats in
//! row-major order, and reduce with a fixed left-to-right summation
//! order so results are bit-reproducible run-to-run.

use std::fmt;

/// Ordered list of non-negative extents. Rank 0 denotes a scalar.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn scalar() -> Self {
        Shape(Vec::new())
    }

    pub fn of(dims: &[usize]) -> Self {
        Shape(dims.to_vec())
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    /// Total element count (the empty product is 1, so a scalar has one element).
    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shape with `extent` prepended as a new leading axis.
    pub fn prepend(&self, extent: usize) -> Shape {
        let mut dims = Vec::with_capacity(self.0.len() + 1);
        dims.push(extent);
        dims.extend_from_slice(&self.0);
        Shape(dims)
    }

    /// Shape with the leading axis removed. Panics on rank 0.
    pub fn drop_leading(&self) -> Shape {
        Shape(self.0[1..].to_vec())
    }

    /// Whether `suffix` equals the trailing dims of `self`.
    pub fn ends_with(&self, suffix: &Shape) -> bool {
        self.rank() >= suffix.rank() && self.0[self.rank() - suffix.rank()..] == suffix.0[..]
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorError {
    /// Binary op or contraction got incompatible shapes.
    ShapeMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },
    /// Data length does not match the shape's element count.
    DataLength { shape: Shape, len: usize },
    /// Operation requires a different rank (e.g. outer_power wants rank 1).
    RankMismatch { op: &'static str, shape: Shape },
    /// Power or axis argument out of range.
    BadArgument { op: &'static str, detail: String },
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::ShapeMismatch { op, left, right } => {
                write!(f, "{op}: incompatible shapes {left} and {right}")
            }
            TensorError::DataLength { shape, len } => {
                write!(f, "data length {len} does not match shape {shape}")
            }
            TensorError::RankMismatch { op, shape } => {
                write!(f, "{op}: unsupported rank for shape {shape}")
            }
            TensorError::BadArgument { op, detail } => write!(f, "{op}: {detail}"),
        }
    }
}

impl std::error::Error for TensorError {}

/// Dense multi-dimensional array of f64, row-major.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{:?}{:?}", self.shape, self.data)
    }
}

impl Tensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Tensor, TensorError> {
        if data.len() != shape.len() {
            return Err(TensorError::DataLength {
                shape,
                len: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn scalar(value: f64) -> Tensor {
        Tensor {
            shape: Shape::scalar(),
            data: vec![value],
        }
    }

    pub fn zeros(shape: Shape) -> Tensor {
        let n = shape.len();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    /// Rank-1 tensor from a flat vector.
    pub fn vector(data: Vec<f64>) -> Tensor {
        Tensor {
            shape: Shape::of(&[data.len()]),
            data,
        }
    }

    /// Rank-2 tensor from rows.
    pub fn matrix(rows: &[Vec<f64>]) -> Result<Tensor, TensorError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(TensorError::BadArgument {
                    op: "matrix",
                    detail: format!("ragged rows: {} vs {}", row.len(), c),
                });
            }
            data.extend_from_slice(row);
        }
        Tensor::new(Shape::of(&[r, c]), data)
    }

    /// Standard basis vector e_d in dimension `dim` (0-based index).
    pub fn basis(dim: usize, d: usize) -> Tensor {
        let mut data = vec![0.0; dim];
        data[d] = 1.0;
        Tensor::vector(data)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Value of a rank-0 tensor. Panics if not scalar.
    pub fn item(&self) -> f64 {
        assert!(
            self.shape.rank() == 0,
            "item() on non-scalar tensor {:?}",
            self.shape
        );
        self.data[0]
    }

    /// Row `r` of the leading axis as a tensor of the remaining shape.
    pub fn leading_slice(&self, r: usize) -> Tensor {
        let inner = self.shape.drop_leading();
        let n = inner.len();
        Tensor {
            shape: inner,
            data: self.data[r * n..(r + 1) * n].to_vec(),
        }
    }

    /// Stack equal-shaped tensors along a new leading axis.
    pub fn stack(parts: &[Tensor]) -> Result<Tensor, TensorError> {
        let first = parts.first().ok_or_else(|| TensorError::BadArgument {
            op: "stack",
            detail: "empty input".into(),
        })?;
        let mut data = Vec::with_capacity(parts.len() * first.data.len());
        for p in parts {
            if p.shape != first.shape {
                return Err(TensorError::ShapeMismatch {
                    op: "stack",
                    left: first.shape.clone(),
                    right: p.shape.clone(),
                });
            }
            data.extend_from_slice(&p.data);
        }
        Tensor::new(first.shape.prepend(parts.len()), data)
    }

    /// Broadcast this tensor along a new leading axis of extent `count`,
    /// materializing the copies.
    pub fn replicate(&self, count: usize) -> Tensor {
        let mut data = Vec::with_capacity(count * self.data.len());
        for _ in 0..count {
            data.extend_from_slice(&self.data);
        }
        Tensor {
            shape: self.shape.prepend(count),
            data,
        }
    }

    /// Broadcasting inner product. The trailing dims of the longer-rank
    /// tensor must match the full shape of the shorter; either argument
    /// order is accepted. Full contraction yields a scalar; extra leading
    /// dims of the longer tensor survive in the result.
    pub fn inner_product(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        let (long, short) = if self.shape.rank() >= other.shape.rank() {
            (self, other)
        } else {
            (other, self)
        };
        if !long.shape.ends_with(&short.shape) {
            return Err(TensorError::ShapeMismatch {
                op: "inner_product",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let block = short.shape.len();
        let lead_rank = long.shape.rank() - short.shape.rank();
        let lead_shape = Shape::of(&long.shape.dims()[..lead_rank]);
        let blocks = lead_shape.len();
        let mut out = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let chunk = &long.data[b * block..(b + 1) * block];
            let mut acc = 0.0;
            for (x, y) in chunk.iter().zip(short.data.iter()) {
                acc += x * y;
            }
            out.push(acc);
        }
        Tensor::new(lead_shape, out)
    }

    /// k-fold tensor power of a rank-1 tensor: entries are products
    /// v[d_1]*...*v[d_k]. k = 1 returns the vector unchanged.
    pub fn outer_power(&self, k: usize) -> Result<Tensor, TensorError> {
        if self.shape.rank() != 1 {
            return Err(TensorError::RankMismatch {
                op: "outer_power",
                shape: self.shape.clone(),
            });
        }
        if k < 1 {
            return Err(TensorError::BadArgument {
                op: "outer_power",
                detail: "power must be at least 1".into(),
            });
        }
        let d = self.shape.dims()[0];
        let mut data = self.data.clone();
        for _ in 1..k {
            let mut next = Vec::with_capacity(data.len() * d);
            for &a in &data {
                for &v in &self.data {
                    next.push(a * v);
                }
            }
            data = next;
        }
        Tensor::new(Shape::of(&vec![d; k]), data)
    }

    fn zip_broadcast(
        &self,
        other: &Tensor,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        if self.shape == other.shape {
            let data = self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect();
            return Tensor::new(self.shape.clone(), data);
        }
        // Leading-axis broadcast: the smaller operand's shape must equal the
        // trailing dims of the larger one.
        if self.shape.ends_with(&other.shape) {
            let block = other.shape.len();
            if block == 0 {
                return Err(TensorError::ShapeMismatch {
                    op,
                    left: self.shape.clone(),
                    right: other.shape.clone(),
                });
            }
            let data = self
                .data
                .chunks(block)
                .flat_map(|c| c.iter().zip(other.data.iter()).map(|(&a, &b)| f(a, b)))
                .collect();
            return Tensor::new(self.shape.clone(), data);
        }
        if other.shape.ends_with(&self.shape) {
            let block = self.shape.len();
            if block == 0 {
                return Err(TensorError::ShapeMismatch {
                    op,
                    left: self.shape.clone(),
                    right: other.shape.clone(),
                });
            }
            let data = other
                .data
                .chunks(block)
                .flat_map(|c| self.data.iter().zip(c.iter()).map(|(&a, &b)| f(a, b)))
                .collect();
            return Tensor::new(other.shape.clone(), data);
        }
        Err(TensorError::ShapeMismatch {
            op,
            left: self.shape.clone(),
            right: other.shape.clone(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_broadcast(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_broadcast(other, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_broadcast(other, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn map_unary(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }

    /// Sum over the leading axis, in index order. Rank must be at least 1.
    pub fn sum_leading(&self) -> Result<Tensor, TensorError> {
        if self.shape.rank() == 0 {
            return Err(TensorError::RankMismatch {
                op: "sum_leading",
                shape: self.shape.clone(),
            });
        }
        let r = self.shape.dims()[0];
        let inner = self.shape.drop_leading();
        let block = inner.len();
        let mut out = vec![0.0; block];
        for i in 0..r {
            let chunk = &self.data[i * block..(i + 1) * block];
            for (o, &x) in out.iter_mut().zip(chunk.iter()) {
                *o += x;
            }
        }
        Tensor::new(inner, out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
    }
}

/// Relative difference between two equal-shaped tensors:
/// max |a - b| / max(1, |a|, |b|).
pub fn rel_diff(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.shape(), b.shape(), "rel_diff on mismatched shapes");
    let denom = a.max_abs().max(b.max_abs()).max(1.0);
    a.data
        .iter()
        .zip(b.data.iter())
        .fold(0.0_f64, |m, (&x, &y)| m.max((x - y).abs()))
        / denom
}
