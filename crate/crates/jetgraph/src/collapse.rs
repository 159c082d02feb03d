//! The collapsing rewrite: push Replicate nodes down through the graph
//! so shared work is computed once unbatched, then pull each
//! SumOverDirections up through every position that is linear in the
//! batched value, until the sum sits directly on the top-coefficient
//! leaf (or is fused into the contraction that consumes the batched
//! value nonlinearly).
//!
//! Both passes are total on valid graphs and preserve evaluation
//! semantics up to float reassociation of the moved sums.

use crate::graph::{
    Batching, ContractSpec, Graph, GraphBuilder, GraphError, NodeId, NodeKind,
};
use crate::taylor::PrimitiveKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteReport {
    pub replicates_moved: usize,
    pub sums_moved: usize,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub batched_vectors_before: u64,
    pub batched_vectors_after: u64,
}

/// Push every Replicate node down as far as it goes: unary chains of
/// replicate-then-op become op-then-replicate, and multi-input nodes
/// consume the unbatched operand directly by broadcasting.
pub fn push_replicate_down(graph: &Graph) -> Graph {
    push_impl(graph).0
}

/// Pull every SumOverDirections node up through linear positions; where
/// a value enters a contraction nonlinearly the reduction is fused into
/// that contraction's spec instead.
pub fn pull_sum_up(graph: &Graph) -> Graph {
    pull_impl(graph).0
}

/// Full collapse: replicate-push then sum-pull, with a rewrite report.
pub fn collapse(graph: &Graph) -> (Graph, RewriteReport) {
    let nodes_before = graph.len();
    let batched_vectors_before = graph.vectors_per_node();
    let (pushed, replicates_moved) = push_impl(graph);
    let (pulled, sums_moved) = pull_impl(&pushed);
    let report = RewriteReport {
        replicates_moved,
        sums_moved,
        nodes_before,
        nodes_after: pulled.len(),
        batched_vectors_before,
        batched_vectors_after: pulled.vectors_per_node(),
    };
    (pulled, report)
}

/// Rewrite roots: outputs when present, otherwise every node (keeps the
/// passes total on output-less graphs).
fn roots(graph: &Graph) -> Vec<NodeId> {
    let outs: Vec<NodeId> = graph.outputs().iter().map(|&(id, _)| id).collect();
    if outs.is_empty() {
        (0..graph.len()).collect()
    } else {
        outs
    }
}

#[derive(Clone, Copy, Debug)]
enum PVal {
    Node(NodeId),
    /// The value is `replicate(base, count)`; the replicate itself has
    /// not been emitted.
    Rep { base: NodeId, count: usize },
}

struct Pusher<'g> {
    old: &'g Graph,
    b: GraphBuilder,
    memo: Vec<Option<PVal>>,
    moved: usize,
}

fn push_impl(graph: &Graph) -> (Graph, usize) {
    let mut p = Pusher {
        old: graph,
        b: GraphBuilder::new(),
        memo: vec![None; graph.len()],
        moved: 0,
    };
    for root in roots(graph) {
        p.value(root).expect("push pass is total on valid graphs");
    }
    (p.b.finish(), p.moved)
}

impl<'g> Pusher<'g> {
    fn materialize(&mut self, v: PVal) -> Result<NodeId, GraphError> {
        match v {
            PVal::Node(n) => Ok(n),
            PVal::Rep { base, count } => self.b.replicate(base, count),
        }
    }

    fn tag_result(&mut self, old_id: NodeId, v: PVal) {
        let target = match v {
            PVal::Node(n) => n,
            PVal::Rep { base, .. } => base,
        };
        for tag in &self.old.node(old_id).tags {
            self.b.add_tag(target, *tag);
        }
    }

    fn value(&mut self, id: NodeId) -> Result<PVal, GraphError> {
        if let Some(v) = self.memo[id] {
            return Ok(v);
        }
        let node = self.old.node(id);
        let v = match &node.kind {
            NodeKind::Leaf { name } => PVal::Node(self.b.leaf(name, node.batching)),
            NodeKind::Replicate { count } => {
                let base = match self.value(node.inputs[0])? {
                    PVal::Node(n) => n,
                    PVal::Rep { .. } => unreachable!("replicate input is unbatched"),
                };
                PVal::Rep { base, count: *count }
            }
            NodeKind::SumOverDirections => {
                let inner = self.value(node.inputs[0])?;
                let n = self.materialize(inner)?;
                PVal::Node(self.b.sum(n)?)
            }
            NodeKind::Derivative { f, order } => {
                let (f, order) = (*f, *order);
                match self.value(node.inputs[0])? {
                    PVal::Node(n) => PVal::Node(self.b.derivative(f, order, n)?),
                    PVal::Rep { base, count } => {
                        self.moved += 1;
                        PVal::Rep {
                            base: self.b.derivative(f, order, base)?,
                            count,
                        }
                    }
                }
            }
            NodeKind::Primitive(prim) => match prim.arity() {
                1 => match self.value(node.inputs[0])? {
                    PVal::Node(n) => PVal::Node(self.b.primitive(prim.clone(), &[n])?),
                    PVal::Rep { base, count } => {
                        self.moved += 1;
                        PVal::Rep {
                            base: self.b.primitive(prim.clone(), &[base])?,
                            count,
                        }
                    }
                },
                _ => {
                    let va = self.value(node.inputs[0])?;
                    let vb = self.value(node.inputs[1])?;
                    match (va, vb) {
                        (PVal::Rep { base: a, count }, PVal::Rep { base: b, .. }) => {
                            self.moved += 1;
                            PVal::Rep {
                                base: self.b.primitive(prim.clone(), &[a, b])?,
                                count,
                            }
                        }
                        (PVal::Node(a), PVal::Node(b)) => {
                            PVal::Node(self.b.primitive(prim.clone(), &[a, b])?)
                        }
                        (PVal::Rep { base, count }, PVal::Node(n)) => {
                            self.moved += 1;
                            let out = self.b.primitive(prim.clone(), &[base, n])?;
                            if self.b.batching(n).is_batched() {
                                PVal::Node(out)
                            } else {
                                PVal::Rep { base: out, count }
                            }
                        }
                        (PVal::Node(n), PVal::Rep { base, count }) => {
                            self.moved += 1;
                            let out = self.b.primitive(prim.clone(), &[n, base])?;
                            if self.b.batching(n).is_batched() {
                                PVal::Node(out)
                            } else {
                                PVal::Rep { base: out, count }
                            }
                        }
                    }
                }
            },
            NodeKind::Contract { spec } => {
                let mut ops = Vec::with_capacity(node.inputs.len());
                let mut marks = Vec::with_capacity(node.inputs.len());
                let mut rep_count: Option<usize> = None;
                for (&input, &marked) in node.inputs.iter().zip(&spec.operands) {
                    match self.value(input)? {
                        PVal::Node(n) => {
                            ops.push(n);
                            marks.push(marked && self.b.batching(n).is_batched());
                        }
                        PVal::Rep { base, count } => {
                            self.moved += 1;
                            rep_count = Some(count);
                            ops.push(base);
                            marks.push(false);
                        }
                    }
                }
                let has_r = marks.iter().any(|&m| m);
                if spec.output {
                    if has_r {
                        let s = ContractSpec::new(marks, true);
                        PVal::Node(self.b.contract(s, &ops)?)
                    } else {
                        // every direction operand was a broadcast: the whole
                        // product is one
                        let s = ContractSpec::new(marks, false);
                        let n = self.b.contract(s, &ops)?;
                        let count = rep_count.expect("batched output needs a direction source");
                        PVal::Rep { base: n, count }
                    }
                } else if has_r || spec.batched_slots() == 0 {
                    // still reducing over genuine directions, or a plain
                    // product that never had a direction axis
                    let s = ContractSpec::new(marks, false);
                    PVal::Node(self.b.contract(s, &ops)?)
                } else {
                    // reduction over directions of a broadcast value
                    let s = ContractSpec::new(marks, false);
                    let n = self.b.contract(s, &ops)?;
                    let count = rep_count.expect("reducing contract had a direction source");
                    PVal::Node(self.b.primitive(PrimitiveKind::Scale(count as f64), &[n])?)
                }
            }
            NodeKind::Output { name } => {
                let inner = self.value(node.inputs[0])?;
                let n = self.materialize(inner)?;
                PVal::Node(self.b.output(name, n)?)
            }
        };
        self.tag_result(id, v);
        self.memo[id] = Some(v);
        Ok(v)
    }
}

struct Puller<'g> {
    old: &'g Graph,
    b: GraphBuilder,
    copy_memo: Vec<Option<NodeId>>,
    pull_memo: Vec<Option<NodeId>>,
    moved: usize,
}

fn pull_impl(graph: &Graph) -> (Graph, usize) {
    let mut p = Puller {
        old: graph,
        b: GraphBuilder::new(),
        copy_memo: vec![None; graph.len()],
        pull_memo: vec![None; graph.len()],
        moved: 0,
    };
    for root in roots(graph) {
        p.copy(root).expect("pull pass is total on valid graphs");
    }
    (p.b.finish(), p.moved)
}

impl<'g> Puller<'g> {
    fn copy_tags(&mut self, old_id: NodeId, new_id: NodeId) {
        for tag in &self.old.node(old_id).tags {
            self.b.add_tag(new_id, *tag);
        }
    }

    fn copy(&mut self, id: NodeId) -> Result<NodeId, GraphError> {
        if let Some(n) = self.copy_memo[id] {
            return Ok(n);
        }
        let node = self.old.node(id);
        let new_id = match &node.kind {
            // a sum node is replaced by the pulled version of its input
            NodeKind::SumOverDirections => self.pulled(node.inputs[0])?,
            NodeKind::Leaf { name } => self.b.leaf(name, node.batching),
            kind => {
                let inputs = node
                    .inputs
                    .iter()
                    .map(|&i| self.copy(i))
                    .collect::<Result<Vec<_>, _>>()?;
                match kind {
                    NodeKind::Replicate { count } => self.b.replicate(inputs[0], *count)?,
                    NodeKind::Derivative { f, order } => {
                        self.b.derivative(*f, *order, inputs[0])?
                    }
                    NodeKind::Primitive(p) => self.b.primitive(p.clone(), &inputs)?,
                    NodeKind::Contract { spec } => self.b.contract(spec.clone(), &inputs)?,
                    NodeKind::Output { name } => self.b.output(name, inputs[0])?,
                    NodeKind::Leaf { .. } | NodeKind::SumOverDirections => unreachable!(),
                }
            }
        };
        self.copy_tags(id, new_id);
        self.copy_memo[id] = Some(new_id);
        Ok(new_id)
    }

    /// Emit a node computing the direction-sum of the (batched) old value
    /// `id`, moving the summation as far up as linearity allows.
    fn pulled(&mut self, id: NodeId) -> Result<NodeId, GraphError> {
        if let Some(n) = self.pull_memo[id] {
            return Ok(n);
        }
        let node = self.old.node(id);
        let extent = match node.batching {
            Batching::Batched(r) => r,
            Batching::Plain => {
                return Err(GraphError::Type {
                    node: id,
                    msg: "sum over an unbatched value".into(),
                })
            }
        };
        let new_id = match &node.kind {
            // terminal position: the collapsed seeding point
            NodeKind::Leaf { .. } => {
                let leaf = self.copy(id)?;
                self.b.sum(leaf)?
            }
            NodeKind::Replicate { count } => {
                self.moved += 1;
                let base = self.copy(node.inputs[0])?;
                self.b
                    .primitive(PrimitiveKind::Scale(*count as f64), &[base])?
            }
            NodeKind::Primitive(PrimitiveKind::Add) => {
                self.moved += 1;
                let mut inputs = Vec::with_capacity(2);
                for &i in &node.inputs {
                    let term = if self.old.node(i).batching.is_batched() {
                        self.pulled(i)?
                    } else {
                        // broadcast addend: contributes once per direction
                        let c = self.copy(i)?;
                        self.b
                            .primitive(PrimitiveKind::Scale(extent as f64), &[c])?
                    };
                    inputs.push(term);
                }
                self.b.primitive(PrimitiveKind::Add, &inputs)?
            }
            NodeKind::Primitive(PrimitiveKind::Scale(c)) => {
                self.moved += 1;
                let inner = self.pulled(node.inputs[0])?;
                self.b.primitive(PrimitiveKind::Scale(*c), &[inner])?
            }
            NodeKind::Primitive(PrimitiveKind::Affine {
                weight,
                bias: None,
            }) => {
                self.moved += 1;
                let inner = self.pulled(node.inputs[0])?;
                self.b.primitive(
                    PrimitiveKind::Affine {
                        weight: weight.clone(),
                        bias: None,
                    },
                    &[inner],
                )?
            }
            NodeKind::Contract { spec } => {
                self.moved += 1;
                if spec.batched_slots() == 1 {
                    // linear in the single batched operand: the sum moves
                    // into that operand and the `r` index disappears
                    let mut inputs = Vec::with_capacity(node.inputs.len());
                    for (&i, &marked) in node.inputs.iter().zip(&spec.operands) {
                        inputs.push(if marked { self.pulled(i)? } else { self.copy(i)? });
                    }
                    let s = ContractSpec::new(vec![false; inputs.len()], false);
                    self.b.contract(s, &inputs)?
                } else {
                    // nonlinear in the batched value: fuse the reduction
                    // into this contraction
                    let inputs = node
                        .inputs
                        .iter()
                        .map(|&i| self.copy(i))
                        .collect::<Result<Vec<_>, _>>()?;
                    let s = ContractSpec::new(spec.operands.clone(), false);
                    self.b.contract(s, &inputs)?
                }
            }
            // nonlinear or opaque in the batched value: the sum stays put
            _ => {
                let n = self.copy(id)?;
                self.b.sum(n)?
            }
        };
        if !matches!(self.old.node(id).kind, NodeKind::Leaf { .. }) {
            self.copy_tags(id, new_id);
        }
        self.pull_memo[id] = Some(new_id);
        Ok(new_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::evaluate;
    use crate::taylor::UnaryFn;
    use crate::tensor::Tensor;
    use std::collections::HashMap;

    #[test]
    fn sum_of_replicate_becomes_scale() {
        let mut b = Graph::builder();
        let x = b.leaf("x", Batching::Plain);
        let rep = b.replicate(x, 5).unwrap();
        let s = b.sum(rep).unwrap();
        b.output("y", s).unwrap();
        let g = b.finish();
        let out = pull_sum_up(&g);
        let kinds: Vec<_> = out.nodes().iter().map(|n| &n.kind).collect();
        assert!(kinds
            .iter()
            .any(|k| matches!(k, NodeKind::Primitive(PrimitiveKind::Scale(c)) if *c == 5.0)));
        assert!(!kinds.iter().any(|k| matches!(k, NodeKind::SumOverDirections)));

        let mut bind = HashMap::new();
        bind.insert("x".to_string(), Tensor::vector(vec![1.0, 2.0]));
        let before = evaluate(&g, &bind).unwrap();
        let after = evaluate(&out, &bind).unwrap();
        assert_eq!(before[0].1, after[0].1);
    }

    #[test]
    fn sum_on_batched_leaf_moves_to_leaf() {
        // scale(sum(scale(x_r))) chains the sum through linear nodes to the leaf
        let mut b = Graph::builder();
        let x = b.leaf("x_r", Batching::Batched(3));
        let sc = b.primitive(PrimitiveKind::Scale(2.0), &[x]).unwrap();
        let s = b.sum(sc).unwrap();
        b.output("y", s).unwrap();
        let g = b.finish();
        let out = pull_sum_up(&g);
        // the sum's input must now be the leaf itself
        let sum_id = out
            .nodes()
            .iter()
            .position(|n| matches!(n.kind, NodeKind::SumOverDirections))
            .unwrap();
        assert!(matches!(
            out.node(out.node(sum_id).inputs[0]).kind,
            NodeKind::Leaf { .. }
        ));
    }

    #[test]
    fn replicate_with_no_consumers_past_output_is_unchanged() {
        let mut b = Graph::builder();
        let x = b.leaf("x", Batching::Plain);
        let rep = b.replicate(x, 4).unwrap();
        b.output("y", rep).unwrap();
        let g = b.finish();
        let out = push_replicate_down(&g);
        assert_eq!(out, g);
    }

    #[test]
    fn push_moves_unary_before_replicate() {
        let mut b = Graph::builder();
        let x = b.leaf("x", Batching::Plain);
        let rep = b.replicate(x, 4).unwrap();
        let s = b.primitive(PrimitiveKind::Unary(UnaryFn::Sin), &[rep]).unwrap();
        b.output("y", s).unwrap();
        let g = b.finish();
        let out = push_replicate_down(&g);
        // sin now unbatched, replicate feeds the output
        let sin_id = out
            .nodes()
            .iter()
            .position(|n| matches!(n.kind, NodeKind::Primitive(PrimitiveKind::Unary(UnaryFn::Sin))))
            .unwrap();
        assert_eq!(out.node(sin_id).batching, Batching::Plain);
        let mut bind = HashMap::new();
        bind.insert("x".to_string(), Tensor::vector(vec![0.5, -0.25]));
        let a = evaluate(&g, &bind).unwrap();
        let c = evaluate(&out, &bind).unwrap();
        assert_eq!(a[0].1, c[0].1);
    }

    #[test]
    fn graph_with_no_replicate_is_fixpoint_of_push() {
        let mut b = Graph::builder();
        let x = b.leaf("x_r", Batching::Batched(2));
        let s = b.sum(x).unwrap();
        b.output("y", s).unwrap();
        let g = b.finish();
        assert_eq!(push_replicate_down(&g), g);
    }

    #[test]
    fn sum_through_broadcast_add_scales_the_plain_side() {
        // sum_r (a + b_r) = R*a + sum_r b_r
        let mut b = Graph::builder();
        let a = b.leaf("a", Batching::Plain);
        let br = b.leaf("b_r", Batching::Batched(3));
        let added = b.primitive(PrimitiveKind::Add, &[a, br]).unwrap();
        let s = b.sum(added).unwrap();
        b.output("y", s).unwrap();
        let g = b.finish();
        let out = pull_sum_up(&g);
        let mut bind = HashMap::new();
        bind.insert("a".to_string(), Tensor::vector(vec![1.0, -2.0]));
        bind.insert(
            "b_r".to_string(),
            Tensor::matrix(&[vec![0.5, 0.5], vec![1.0, 0.0], vec![-1.0, 2.0]]).unwrap(),
        );
        let before = evaluate(&g, &bind).unwrap();
        let after = evaluate(&out, &bind).unwrap();
        let diff = crate::tensor::rel_diff(&before[0].1, &after[0].1);
        assert!(diff <= 1e-15, "rel diff {diff}");
        // the scale-by-extent node appears and the sum sits on the leaf
        assert!(out.nodes().iter().any(
            |n| matches!(n.kind, NodeKind::Primitive(PrimitiveKind::Scale(c)) if c == 3.0)
        ));
    }

    #[test]
    fn collapse_is_idempotent() {
        let mut b = Graph::builder();
        let x0 = b.leaf("x0", Batching::Plain);
        let x1 = b.leaf("x1_r", Batching::Batched(4));
        let rep = b.replicate(x0, 4).unwrap();
        let f0 = b.primitive(PrimitiveKind::Unary(UnaryFn::Sin), &[rep]).unwrap();
        let df = b.primitive(PrimitiveKind::Unary(UnaryFn::Cos), &[rep]).unwrap();
        let t1 = b
            .contract(
                ContractSpec::parse("r...,r...,r...->r...").unwrap(),
                &[df, x1, x1],
            )
            .unwrap();
        let neg = b.primitive(PrimitiveKind::Scale(-1.0), &[f0]).unwrap();
        let t2 = b
            .contract(ContractSpec::parse("r...,r...->r...").unwrap(), &[neg, x1])
            .unwrap();
        let add = b.primitive(PrimitiveKind::Add, &[t1, t2]).unwrap();
        let s = b.sum(add).unwrap();
        b.output("f", s).unwrap();
        let g = b.finish();

        let (once, report) = collapse(&g);
        let (twice, report2) = collapse(&once);
        assert_eq!(once, twice);
        assert!(report.replicates_moved > 0);
        assert!(report.sums_moved > 0);
        assert_eq!(report2.replicates_moved, 0);
        assert_eq!(report2.sums_moved, 0);

        let mut bind = HashMap::new();
        bind.insert("x0".to_string(), Tensor::vector(vec![0.3, 0.7]));
        bind.insert(
            "x1_r".to_string(),
            Tensor::matrix(&[
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.5, 0.5],
                vec![-1.0, 2.0],
            ])
            .unwrap(),
        );
        let before = evaluate(&g, &bind).unwrap();
        let after = evaluate(&once, &bind).unwrap();
        let diff = crate::tensor::rel_diff(&before[0].1, &after[0].1);
        assert!(diff <= 1e-12, "rel diff {diff}");
    }
}
