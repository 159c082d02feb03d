//! Full derivative tensors by nested first-order AD, independent of the
//! jet machinery: evaluate the function graph over nested duals, one
//! graph evaluation per index tuple.

use crate::graph::{Graph, GraphError, NodeKind};
use crate::taylor::PrimitiveKind;
use crate::tensor::{Shape, Tensor};

use super::dual::{Dual, Scalar};

/// Materialized k-th derivative tensor of shape (C, D, ..., D) with k
/// trailing input axes; entry [c, d1..dk] is the mixed partial of output
/// c along inputs d1..dk.
#[derive(Debug, Clone)]
pub struct DerivativeTensor {
    pub order: usize,
    pub tensor: Tensor,
}

impl DerivativeTensor {
    /// Largest deviation from index-permutation symmetry of the trailing
    /// axes, relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let dims = self.tensor.shape().dims();
        let c = dims[0];
        let d = if self.order > 0 { dims[1] } else { 1 };
        let data = self.tensor.data();
        let scale = self.tensor.max_abs().max(1.0);
        let mut worst = 0.0_f64;
        let block = d.pow(self.order as u32);
        let mut idx = vec![0usize; self.order];
        for ci in 0..c {
            for flat in 0..block {
                let mut rem = flat;
                for slot in (0..self.order).rev() {
                    idx[slot] = rem % d;
                    rem /= d;
                }
                let mut sorted = idx.clone();
                sorted.sort_unstable();
                let mut canon = 0usize;
                for &i in &sorted {
                    canon = canon * d + i;
                }
                let diff = (data[ci * block + flat] - data[ci * block + canon]).abs();
                worst = worst.max(diff / scale);
            }
        }
        worst
    }
}

/// Evaluate a function graph over any scalar-like type.
pub fn eval_function_graph<T: Scalar>(graph: &Graph, x: &[T]) -> Result<Vec<T>, GraphError> {
    let mut values: Vec<Option<Vec<T>>> = vec![None; graph.len()];
    let mut output: Option<Vec<T>> = None;
    for (id, node) in graph.nodes().iter().enumerate() {
        let arg = |i: usize| -> &Vec<T> { values[node.inputs[i]].as_ref().expect("ordered") };
        let val: Vec<T> = match &node.kind {
            NodeKind::Leaf { .. } => x.to_vec(),
            NodeKind::Primitive(prim) => match prim {
                PrimitiveKind::Affine { weight, bias } => {
                    let input = arg(0);
                    let dims = weight.shape().dims();
                    let (rows, cols) = (dims[0], dims[1]);
                    if input.len() != cols {
                        return Err(GraphError::Unsupported(format!(
                            "affine of width {cols} applied to {} values",
                            input.len()
                        )));
                    }
                    let w = weight.data();
                    (0..rows)
                        .map(|i| {
                            let mut acc = T::from_f64(bias.as_ref().map_or(0.0, |b| b.data()[i]));
                            for (j, &xj) in input.iter().enumerate() {
                                acc = acc.add(xj.mul_f64(w[i * cols + j]));
                            }
                            acc
                        })
                        .collect()
                }
                PrimitiveKind::Unary(f) => {
                    let input = arg(0);
                    input
                        .iter()
                        .map(|&v| match f {
                            crate::taylor::UnaryFn::Sin => v.sin(),
                            crate::taylor::UnaryFn::Cos => v.cos(),
                            crate::taylor::UnaryFn::Tanh => v.tanh(),
                            crate::taylor::UnaryFn::Exp => v.exp(),
                        })
                        .collect()
                }
                PrimitiveKind::Scale(c) => arg(0).iter().map(|&v| v.mul_f64(*c)).collect(),
                PrimitiveKind::Add => arg(0)
                    .iter()
                    .zip(arg(1))
                    .map(|(&a, &b)| a.add(b))
                    .collect(),
                PrimitiveKind::Hadamard => arg(0)
                    .iter()
                    .zip(arg(1))
                    .map(|(&a, &b)| a.mul(b))
                    .collect(),
            },
            NodeKind::Output { .. } => {
                let v = arg(0).clone();
                output = Some(v.clone());
                v
            }
            other => {
                return Err(GraphError::Unsupported(format!(
                    "oracle evaluation handles function graphs only, found {other:?}"
                )))
            }
        };
        values[id] = Some(val);
    }
    output.ok_or_else(|| GraphError::Unsupported("graph has no output".into()))
}

type D1 = Dual<f64>;
type D2 = Dual<D1>;
type D3 = Dual<D2>;
type D4 = Dual<D3>;

fn directional<const K: usize>(
    graph: &Graph,
    x0: &[f64],
    dirs: &[usize],
) -> Result<Vec<f64>, GraphError> {
    match K {
        1 => {
            let x: Vec<D1> = x0
                .iter()
                .enumerate()
                .map(|(i, &v)| Dual {
                    re: v,
                    eps: if dirs[0] == i { 1.0 } else { 0.0 },
                })
                .collect();
            Ok(eval_function_graph(graph, &x)?.iter().map(|o| o.eps).collect())
        }
        2 => {
            let x: Vec<D2> = x0
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let e = |d: usize| if dirs[d] == i { 1.0 } else { 0.0 };
                    Dual {
                        re: Dual { re: v, eps: e(1) },
                        eps: Dual { re: e(0), eps: 0.0 },
                    }
                })
                .collect();
            Ok(eval_function_graph(graph, &x)?
                .iter()
                .map(|o| o.eps.eps)
                .collect())
        }
        3 => {
            let x: Vec<D3> = x0
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let e = |d: usize| if dirs[d] == i { 1.0 } else { 0.0 };
                    Dual {
                        re: Dual {
                            re: Dual { re: v, eps: e(2) },
                            eps: Dual { re: e(1), eps: 0.0 },
                        },
                        eps: Dual::constant(Dual { re: e(0), eps: 0.0 }),
                    }
                })
                .collect();
            Ok(eval_function_graph(graph, &x)?
                .iter()
                .map(|o| o.eps.eps.eps)
                .collect())
        }
        4 => {
            let x: Vec<D4> = x0
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let e = |d: usize| if dirs[d] == i { 1.0 } else { 0.0 };
                    Dual {
                        re: Dual {
                            re: Dual {
                                re: Dual { re: v, eps: e(3) },
                                eps: Dual { re: e(2), eps: 0.0 },
                            },
                            eps: Dual::constant(Dual { re: e(1), eps: 0.0 }),
                        },
                        eps: Dual::constant(Dual::constant(Dual { re: e(0), eps: 0.0 })),
                    }
                })
                .collect();
            Ok(eval_function_graph(graph, &x)?
                .iter()
                .map(|o| o.eps.eps.eps.eps)
                .collect())
        }
        _ => Err(GraphError::Unsupported(format!(
            "oracle derivative order {K} not supported"
        ))),
    }
}

/// Materialize the full k-th derivative tensor (k <= 4) by nesting
/// first-order duals over every index tuple.
pub fn oracle_derivative(
    graph: &Graph,
    x0: &Tensor,
    k: usize,
) -> Result<DerivativeTensor, GraphError> {
    let d = match x0.shape().dims() {
        [d] => *d,
        _ => {
            return Err(GraphError::Unsupported(
                "oracle expects a rank-1 input point".into(),
            ))
        }
    };
    if k == 0 || k > 4 {
        return Err(GraphError::Unsupported(format!(
            "oracle derivative order {k} outside 1..=4"
        )));
    }
    let x = x0.data();
    let tuples = d.pow(k as u32);
    let mut per_output: Vec<Vec<f64>> = Vec::new();
    let mut dirs = vec![0usize; k];
    for flat in 0..tuples {
        let mut rem = flat;
        for slot in (0..k).rev() {
            dirs[slot] = rem % d;
            rem /= d;
        }
        let vals = match k {
            1 => directional::<1>(graph, x, &dirs)?,
            2 => directional::<2>(graph, x, &dirs)?,
            3 => directional::<3>(graph, x, &dirs)?,
            _ => directional::<4>(graph, x, &dirs)?,
        };
        if per_output.is_empty() {
            per_output = vec![Vec::with_capacity(tuples); vals.len()];
        }
        for (c, v) in vals.iter().enumerate() {
            per_output[c].push(*v);
        }
    }
    let c = per_output.len();
    let mut dims = vec![c];
    dims.extend(std::iter::repeat_n(d, k));
    let mut data = Vec::with_capacity(c * tuples);
    for out in per_output {
        data.extend(out);
    }
    Ok(DerivativeTensor {
        order: k,
        tensor: Tensor::new(Shape::of(&dims), data)?,
    })
}

/// Hessian trace per output component, from the materialized tensor.
pub fn hessian_trace(h: &DerivativeTensor) -> Tensor {
    assert_eq!(h.order, 2);
    let dims = h.tensor.shape().dims();
    let (c, d) = (dims[0], dims[1]);
    let data = (0..c)
        .map(|ci| (0..d).map(|i| h.tensor.data()[ci * d * d + i * d + i]).sum())
        .collect();
    Tensor::vector(data)
}

/// <Hessian, W> per output component for a dense symmetric W.
pub fn weighted_hessian_trace(h: &DerivativeTensor, w: &Tensor) -> Tensor {
    assert_eq!(h.order, 2);
    let dims = h.tensor.shape().dims();
    let (c, d) = (dims[0], dims[1]);
    let data = (0..c)
        .map(|ci| {
            let block = &h.tensor.data()[ci * d * d..(ci + 1) * d * d];
            block.iter().zip(w.data()).map(|(&a, &b)| a * b).sum()
        })
        .collect();
    Tensor::vector(data)
}

/// Biharmonic per output component: the full double-trace of the fourth
/// derivative tensor.
pub fn biharmonic_contraction(t4: &DerivativeTensor) -> Tensor {
    assert_eq!(t4.order, 4);
    let dims = t4.tensor.shape().dims();
    let (c, d) = (dims[0], dims[1]);
    let block = d * d * d * d;
    let data = (0..c)
        .map(|ci| {
            let mut acc = 0.0;
            for d1 in 0..d {
                for d2 in 0..d {
                    acc += t4.tensor.data()
                        [ci * block + d1 * d * d * d + d1 * d * d + d2 * d + d2];
                }
            }
            acc
        })
        .collect();
    Tensor::vector(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Batching;
    use approx::assert_relative_eq;

    /// f(x) = 0.5 * ||x||^2 as a function graph.
    fn half_square_norm(d: usize) -> Graph {
        let mut b = Graph::builder();
        let x = b.leaf("x", Batching::Plain);
        let sq = b.primitive(PrimitiveKind::Hadamard, &[x, x]).unwrap();
        let w = Tensor::new(Shape::of(&[1, d]), vec![0.5; d]).unwrap();
        let s = b
            .primitive(PrimitiveKind::Affine { weight: w, bias: None }, &[sq])
            .unwrap();
        b.output("f", s).unwrap();
        b.finish()
    }

    #[test]
    fn hessian_of_half_square_norm_is_identity() {
        let g = half_square_norm(3);
        let x0 = Tensor::vector(vec![0.3, -1.0, 2.0]);
        let h = oracle_derivative(&g, &x0, 2).unwrap();
        assert_eq!(h.tensor.shape().dims(), &[1, 3, 3]);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(h.tensor.data()[i * 3 + j], want, epsilon = 1e-12);
            }
        }
        assert!(h.symmetry_defect() <= 1e-12);
    }

    #[test]
    fn hessian_of_coordinate_product() {
        // f(x) = x1*x2: Hessian [[0,1],[1,0]]
        let mut b = Graph::builder();
        let x = b.leaf("x", Batching::Plain);
        let w1 = Tensor::matrix(&[vec![1.0, 0.0]]).unwrap();
        let w2 = Tensor::matrix(&[vec![0.0, 1.0]]).unwrap();
        let a = b
            .primitive(PrimitiveKind::Affine { weight: w1, bias: None }, &[x])
            .unwrap();
        let c = b
            .primitive(PrimitiveKind::Affine { weight: w2, bias: None }, &[x])
            .unwrap();
        let prod = b.primitive(PrimitiveKind::Hadamard, &[a, c]).unwrap();
        b.output("f", prod).unwrap();
        let g = b.finish();
        let h = oracle_derivative(&g, &Tensor::vector(vec![0.7, -0.2]), 2).unwrap();
        assert_eq!(h.tensor.data(), &[0.0, 1.0, 1.0, 0.0]);
    }
}
