//! Graph evaluation. Replicate values are kept as zero-copy broadcasts
//! and only materialized at outputs, so a replicated chain costs the
//! same as its unbatched base.

use std::collections::HashMap;

use crate::taylor::{apply_affine, PrimitiveKind};
use crate::tensor::Tensor;

use super::{Batching, Graph, GraphError, NodeKind};

#[derive(Debug, Clone)]
enum Val {
    T(Tensor),
    Rep { base: Tensor, count: usize },
}

impl Val {
    fn materialize(&self) -> Tensor {
        match self {
            Val::T(t) => t.clone(),
            Val::Rep { base, count } => base.replicate(*count),
        }
    }

    fn base(&self) -> &Tensor {
        match self {
            Val::T(t) => t,
            Val::Rep { base, .. } => base,
        }
    }
}

pub type EvalOutputs = Vec<(String, Tensor)>;

/// Evaluate with all leaves bound, returning outputs in append order.
pub fn evaluate(graph: &Graph, bindings: &HashMap<String, Tensor>) -> Result<EvalOutputs, GraphError> {
    evaluate_counted(graph, bindings).map(|(outs, _)| outs)
}

/// Like [`evaluate`] but also tallies the flop proxy: one unit per
/// scalar multiply-add actually performed (elementwise maps count one
/// per element, broadcasts over a lazy replicate are free).
pub fn evaluate_counted(
    graph: &Graph,
    bindings: &HashMap<String, Tensor>,
) -> Result<(EvalOutputs, u64), GraphError> {
    let mut values: Vec<Option<Val>> = vec![None; graph.len()];
    let mut outputs = Vec::new();
    let mut flops: u64 = 0;
    for (id, node) in graph.nodes().iter().enumerate() {
        let arg = |i: usize| -> &Val { values[node.inputs[i]].as_ref().expect("append order") };
        let val = match &node.kind {
            NodeKind::Leaf { name } => {
                let t = bindings
                    .get(name)
                    .ok_or_else(|| GraphError::UnboundLeaf(name.clone()))?;
                if let Batching::Batched(r) = node.batching {
                    let ok = t.shape().rank() >= 1 && t.shape().dims()[0] == r;
                    if !ok {
                        return Err(GraphError::BindingShape {
                            leaf: name.clone(),
                            msg: format!(
                                "expected leading direction extent {r}, got shape {}",
                                t.shape()
                            ),
                        });
                    }
                }
                Val::T(t.clone())
            }
            NodeKind::Replicate { count } => Val::Rep {
                base: arg(0).base().clone(),
                count: *count,
            },
            NodeKind::SumOverDirections => match arg(0) {
                Val::T(t) => {
                    let r = t.shape().dims().first().copied().unwrap_or(0) as u64;
                    flops += r.saturating_sub(1) * t.shape().drop_leading().len() as u64;
                    Val::T(t.sum_leading()?)
                }
                Val::Rep { base, count } => {
                    flops += base.shape().len() as u64;
                    Val::T(base.scale(*count as f64))
                }
            },
            NodeKind::Derivative { f, order } => {
                let (f, order) = (*f, *order as usize);
                unary_like(arg(0), &mut flops, move |t| {
                    Ok(t.map_unary(|x| f.derivative_scalar(order, x)))
                })?
            }
            NodeKind::Primitive(prim) => match prim {
                PrimitiveKind::Unary(f) => {
                    let f = *f;
                    unary_like(arg(0), &mut flops, move |t| {
                        Ok(t.map_unary(|x| f.apply_scalar(x)))
                    })?
                }
                PrimitiveKind::Scale(c) => {
                    let c = *c;
                    unary_like(arg(0), &mut flops, move |t| Ok(t.scale(c)))?
                }
                PrimitiveKind::Affine { weight, bias } => {
                    let cost = (weight.shape().len()
                        + bias.as_ref().map_or(0, |b| b.shape().len()))
                        as u64;
                    match arg(0) {
                        Val::T(t) => {
                            let channels = match node.batching {
                                Batching::Batched(r) => r as u64,
                                Batching::Plain => 1,
                            };
                            flops += cost * channels;
                            Val::T(apply_affine(weight, bias.as_ref(), t)?)
                        }
                        Val::Rep { base, count } => {
                            flops += cost;
                            Val::Rep {
                                base: apply_affine(weight, bias.as_ref(), base)?,
                                count: *count,
                            }
                        }
                    }
                }
                PrimitiveKind::Add | PrimitiveKind::Hadamard => {
                    let combine = |a: &Tensor, b: &Tensor| match prim {
                        PrimitiveKind::Add => a.add(b),
                        _ => a.hadamard(b),
                    };
                    // a genuinely batched operand (a Val::T on a batched
                    // input) forces materialized batched output; replicate
                    // bases only broadcast against it
                    let genuinely_batched = |i: usize| {
                        graph.node(node.inputs[i]).batching.is_batched()
                            && matches!(values[node.inputs[i]], Some(Val::T(_)))
                    };
                    match (arg(0), arg(1)) {
                        (Val::Rep { base: a, count }, Val::Rep { base: b, .. }) => {
                            flops += a.shape().len().max(b.shape().len()) as u64;
                            Val::Rep {
                                base: combine(a, b)?,
                                count: *count,
                            }
                        }
                        (Val::Rep { base: a, count }, Val::T(b))
                        | (Val::T(b), Val::Rep { base: a, count }) => {
                            let batched_other = genuinely_batched(0) || genuinely_batched(1);
                            let out = combine(a, b)?;
                            flops += out.shape().len() as u64;
                            if batched_other {
                                Val::T(out)
                            } else {
                                Val::Rep {
                                    base: out,
                                    count: *count,
                                }
                            }
                        }
                        (Val::T(a), Val::T(b)) => {
                            let out = combine(a, b)?;
                            flops += out.shape().len() as u64;
                            Val::T(out)
                        }
                    }
                }
            },
            NodeKind::Contract { spec } => {
                // multiply in strict slot order so the captured graph
                // reproduces direct jet propagation bit for bit; replicate
                // bases broadcast until a genuinely batched operand appears
                if spec.operands.is_empty() {
                    return Err(GraphError::Type {
                        node: id,
                        msg: "contract with no operands".into(),
                    });
                }
                let genuinely_batched = |i: usize| {
                    graph.node(node.inputs[i]).batching.is_batched()
                        && matches!(values[node.inputs[i]], Some(Val::T(_)))
                };
                let mut acc = arg(0).clone();
                let mut has_dir = genuinely_batched(0);
                let mut rep_extent = match arg(0) {
                    Val::Rep { count, .. } => Some(*count),
                    _ => None,
                };
                for i in 1..spec.operands.len() {
                    let rhs = arg(i);
                    let rhs_dir = genuinely_batched(i);
                    if let Val::Rep { count, .. } = rhs {
                        rep_extent = Some(*count);
                    }
                    let (a, b) = (acc.base(), rhs.base());
                    flops += a.shape().len().max(b.shape().len()) as u64;
                    let product = a.hadamard(b)?;
                    acc = if has_dir || rhs_dir {
                        has_dir = true;
                        Val::T(product)
                    } else if matches!(acc, Val::Rep { .. }) || matches!(rhs, Val::Rep { .. }) {
                        let count = rep_extent.expect("replicate operand sets the extent");
                        Val::Rep {
                            base: product,
                            count,
                        }
                    } else {
                        Val::T(product)
                    };
                }
                if spec.output {
                    acc
                } else if has_dir {
                    let t = match acc {
                        Val::T(t) => t,
                        Val::Rep { .. } => unreachable!("direction axis is materialized"),
                    };
                    let r = t.shape().dims()[0] as u64;
                    flops += r.saturating_sub(1) * t.shape().drop_leading().len() as u64;
                    Val::T(t.sum_leading()?)
                } else if spec.batched_slots() > 0 {
                    // every direction operand was a broadcast
                    let count = rep_extent.expect("marked slot had a replicate") as f64;
                    flops += acc.base().shape().len() as u64;
                    Val::T(acc.base().scale(count))
                } else {
                    Val::T(acc.base().clone())
                }
            }
            NodeKind::Output { name } => {
                let t = arg(0).materialize();
                outputs.push((name.clone(), t.clone()));
                Val::T(t)
            }
        };
        values[id] = Some(val);
    }
    Ok((outputs, flops))
}

fn unary_like(
    v: &Val,
    flops: &mut u64,
    f: impl Fn(&Tensor) -> Result<Tensor, GraphError>,
) -> Result<Val, GraphError> {
    match v {
        Val::T(t) => {
            *flops += t.shape().len() as u64;
            Ok(Val::T(f(t)?))
        }
        Val::Rep { base, count } => {
            *flops += base.shape().len() as u64;
            Ok(Val::Rep {
                base: f(base)?,
                count: *count,
            })
        }
    }
}
