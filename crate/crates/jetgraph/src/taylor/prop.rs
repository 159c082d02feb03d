//! Per-primitive Taylor propagation and jet evaluation over a function
//! graph.
//!
//! Every coefficient of a composition is a sum over integer partitions:
//! the partition {k} contributes the linear term, everything else uses
//! lower coefficients only. Collapsed jets exploit exactly that split:
//! the nonlinear part is evaluated per direction and summed, the linear
//! part is applied once to the pre-summed top coefficient.

use crate::graph::{Graph, NodeKind};
use crate::tensor::{Tensor, TensorError};

use super::ladder::UnaryFn;
use super::partition::{binomial, partitions};
use super::{Jet, TaylorError};

/// Primitive operations with known Taylor arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveKind {
    /// x -> W x + b. All derivatives beyond the first vanish, so every
    /// coefficient propagates as W x_k (the bias only enters the primal).
    Affine {
        weight: Tensor,
        bias: Option<Tensor>,
    },
    Unary(UnaryFn),
    Hadamard,
    Add,
    Scale(f64),
}

impl PrimitiveKind {
    pub fn arity(&self) -> usize {
        match self {
            PrimitiveKind::Hadamard | PrimitiveKind::Add => 2,
            _ => 1,
        }
    }

    /// Affine map without the constant part, for coefficient channels.
    pub fn linear_part(&self) -> PrimitiveKind {
        match self {
            PrimitiveKind::Affine { weight, .. } => PrimitiveKind::Affine {
                weight: weight.clone(),
                bias: None,
            },
            other => other.clone(),
        }
    }
}

/// Apply W x (+ b) where x is rank-1 or batched rank-2 with the feature
/// axis trailing.
pub fn apply_affine(
    weight: &Tensor,
    bias: Option<&Tensor>,
    x: &Tensor,
) -> Result<Tensor, TensorError> {
    let wd = weight.shape().dims();
    if wd.len() != 2 {
        return Err(TensorError::RankMismatch {
            op: "affine",
            shape: weight.shape().clone(),
        });
    }
    let (rows, cols) = (wd[0], wd[1]);
    let xd = x.shape().dims();
    let (batch, features) = match xd.len() {
        1 => (None, xd[0]),
        2 => (Some(xd[0]), xd[1]),
        _ => {
            return Err(TensorError::RankMismatch {
                op: "affine",
                shape: x.shape().clone(),
            })
        }
    };
    if features != cols {
        return Err(TensorError::ShapeMismatch {
            op: "affine",
            left: weight.shape().clone(),
            right: x.shape().clone(),
        });
    }
    if let Some(b) = bias {
        if b.shape().dims() != [rows] {
            return Err(TensorError::ShapeMismatch {
                op: "affine",
                left: weight.shape().clone(),
                right: b.shape().clone(),
            });
        }
    }
    let w = weight.data();
    let mut out = Vec::with_capacity(batch.unwrap_or(1) * rows);
    for r in 0..batch.unwrap_or(1) {
        let xrow = &x.data()[r * cols..(r + 1) * cols];
        for i in 0..rows {
            let wrow = &w[i * cols..(i + 1) * cols];
            let mut acc = match bias {
                Some(b) => b.data()[i],
                None => 0.0,
            };
            for (wv, xv) in wrow.iter().zip(xrow.iter()) {
                acc += wv * xv;
            }
            out.push(acc);
        }
    }
    match batch {
        None => Tensor::new(crate::tensor::Shape::of(&[rows]), out),
        Some(b) => Tensor::new(crate::tensor::Shape::of(&[b, rows]), out),
    }
}

fn check_aligned(inputs: &[&Jet]) -> Result<(usize, Option<usize>, bool), TaylorError> {
    let first = inputs.first().ok_or_else(|| {
        TaylorError::Unsupported("primitive applied to zero inputs".into())
    })?;
    let key = (first.degree(), first.batch(), first.is_collapsed_top());
    for j in &inputs[1..] {
        if (j.degree(), j.batch(), j.is_collapsed_top()) != key {
            return Err(TaylorError::MixedBatching(format!(
                "degree/batch/collapsed {:?} vs {:?}",
                key,
                (j.degree(), j.batch(), j.is_collapsed_top())
            )));
        }
    }
    Ok(key)
}

fn add_opt(acc: Option<Tensor>, t: Tensor) -> Result<Option<Tensor>, TensorError> {
    Ok(Some(match acc {
        None => t,
        Some(a) => a.add(&t)?,
    }))
}

/// Forward-propagate one primitive over aligned input jets.
pub fn propagate_primitive(prim: &PrimitiveKind, inputs: &[&Jet]) -> Result<Jet, TaylorError> {
    if inputs.len() != prim.arity() {
        return Err(TaylorError::Unsupported(format!(
            "{prim:?} expects {} inputs, got {}",
            prim.arity(),
            inputs.len()
        )));
    }
    let (degree, batch, collapsed) = check_aligned(inputs)?;
    match prim {
        PrimitiveKind::Affine { weight, bias } => {
            let x = inputs[0];
            let primal = apply_affine(weight, bias.as_ref(), x.primal())?;
            let coeffs = x
                .coeffs()
                .iter()
                .map(|c| apply_affine(weight, None, c))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Jet::new(primal, coeffs, batch, collapsed)?)
        }
        PrimitiveKind::Scale(c) => {
            let x = inputs[0];
            Ok(Jet::new(
                x.primal().scale(*c),
                x.coeffs().iter().map(|t| t.scale(*c)).collect(),
                batch,
                collapsed,
            )?)
        }
        PrimitiveKind::Add => {
            let (a, b) = (inputs[0], inputs[1]);
            let primal = a.primal().add(b.primal())?;
            let coeffs = a
                .coeffs()
                .iter()
                .zip(b.coeffs())
                .map(|(x, y)| x.add(y))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Jet::new(primal, coeffs, batch, collapsed)?)
        }
        PrimitiveKind::Unary(f) => {
            let x = inputs[0];
            let ladder = f.derivative_ladder(x.primal(), degree);
            let mut coeffs = Vec::with_capacity(degree);
            for k in 1..=degree {
                let top_collapsed = collapsed && k == degree;
                let mut per_direction: Option<Tensor> = None;
                let mut summed: Option<Tensor> = None;
                for sigma in partitions(k)? {
                    if top_collapsed && sigma.is_trivial() {
                        // linear term applied to the pre-summed top
                        let t = ladder[1].hadamard(x.coeff(k))?.scale(sigma.nu as f64);
                        summed = add_opt(summed, t)?;
                        continue;
                    }
                    let mut term = ladder[sigma.order()].clone();
                    for &s in &sigma.parts {
                        term = term.hadamard(x.coeff(s as usize))?;
                    }
                    per_direction = add_opt(per_direction, term.scale(sigma.nu as f64))?;
                }
                let coeff = if top_collapsed {
                    let mut acc = summed.expect("trivial partition always present");
                    if let Some(p) = per_direction {
                        acc = acc.add(&p.sum_leading()?)?;
                    }
                    acc
                } else {
                    per_direction.expect("at least one partition per degree")
                };
                coeffs.push(coeff);
            }
            Ok(Jet::new(ladder[0].clone(), coeffs, batch, collapsed)?)
        }
        PrimitiveKind::Hadamard => {
            let (a, b) = (inputs[0], inputs[1]);
            let primal = a.primal().hadamard(b.primal())?;
            fn get(j: &Jet, i: usize) -> &Tensor {
                if i == 0 {
                    j.primal()
                } else {
                    j.coeff(i)
                }
            }
            let mut coeffs = Vec::with_capacity(degree);
            for k in 1..=degree {
                let top_collapsed = collapsed && k == degree;
                let mut per_direction: Option<Tensor> = None;
                let mut summed: Option<Tensor> = None;
                for i in 0..=k {
                    let c = binomial(k, i) as f64;
                    let term = get(a, i).hadamard(get(b, k - i))?.scale(c);
                    // with a collapsed top, the i=0 and i=k terms pair the
                    // summed top with the other factor's (unbatched) primal
                    if top_collapsed && (i == 0 || i == k) {
                        summed = add_opt(summed, term)?;
                    } else {
                        per_direction = add_opt(per_direction, term)?;
                    }
                }
                let coeff = if top_collapsed {
                    let mut acc = summed.expect("boundary terms always present");
                    if let Some(p) = per_direction {
                        acc = acc.add(&p.sum_leading()?)?;
                    }
                    acc
                } else {
                    per_direction.expect("k >= 1 has terms")
                };
                coeffs.push(coeff);
            }
            Ok(Jet::new(primal, coeffs, batch, collapsed)?)
        }
    }
}

/// Propagate a seed jet through a function graph (leaves and primitives
/// only). The graph must have exactly one leaf and one output.
pub fn jet_eval(graph: &Graph, seed: &Jet) -> Result<Jet, TaylorError> {
    let mut values: Vec<Option<Jet>> = vec![None; graph.len()];
    let mut output: Option<Jet> = None;
    let mut leaves = 0usize;
    for (id, node) in graph.nodes().iter().enumerate() {
        let jet = match &node.kind {
            NodeKind::Leaf { .. } => {
                leaves += 1;
                if leaves > 1 {
                    return Err(TaylorError::Unsupported(
                        "jet_eval expects a single-leaf function graph".into(),
                    ));
                }
                seed.clone()
            }
            NodeKind::Primitive(prim) => {
                let ins: Vec<&Jet> = node
                    .inputs
                    .iter()
                    .map(|&i| values[i].as_ref().expect("topological order"))
                    .collect();
                propagate_primitive(prim, &ins)?
            }
            NodeKind::Output { .. } => {
                let jet = values[node.inputs[0]].clone().expect("topological order");
                if output.is_some() {
                    return Err(TaylorError::Unsupported(
                        "jet_eval expects a single output".into(),
                    ));
                }
                output = Some(jet.clone());
                jet
            }
            other => {
                return Err(TaylorError::Unsupported(format!(
                    "jet_eval over function graphs does not handle {other:?}"
                )))
            }
        };
        values[id] = Some(jet);
    }
    if leaves == 0 {
        return Err(TaylorError::Unsupported("graph has no leaf".into()));
    }
    output.ok_or_else(|| TaylorError::Unsupported("graph has no output".into()))
}
