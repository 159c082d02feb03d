//! Explicit compute-graph IR for jet computations: the substrate the
//! collapsing pass rewrites.
//!
//! Nodes are Taylor-arithmetic primitives plus three jet-level markers:
//! `Replicate` broadcasts an unbatched value over the direction axis,
//! `SumOverDirections` reduces it, and `Contract` is a restricted
//! einsum over elementwise factors where the only contractible index is
//! the reserved leading direction index `r`.
//!
//! Graphs are append-ordered; the append order is the evaluation order,
//! so every node's inputs precede it. Batching (whether a value carries
//! the direction axis, and with which extent) is inferred at
//! construction and stored per node.

mod capture;
mod eval;
mod text;

pub use capture::{capture, CaptureOutputs, CaptureSpec, CoeffSeed, FamilySeed};
pub use eval::{evaluate, evaluate_counted, EvalOutputs};
pub use text::{parse, serialize};

use std::collections::HashMap;
use std::fmt;

use crate::taylor::{PrimitiveKind, UnaryFn};
use crate::tensor::TensorError;

pub type NodeId = usize;

/// Whether a value carries the leading direction axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Batching {
    Plain,
    Batched(usize),
}

impl Batching {
    pub fn is_batched(self) -> bool {
        matches!(self, Batching::Batched(_))
    }

    pub fn extent(self) -> Option<usize> {
        match self {
            Batching::Plain => None,
            Batching::Batched(r) => Some(r),
        }
    }
}

/// Restricted einsum spec: each operand either carries the direction
/// index `r` or not, and so does the output. Written like
/// `"...,r...->r..."`. An output without `r` sums over the direction
/// axis of the batched operands.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContractSpec {
    pub operands: Vec<bool>,
    pub output: bool,
}

impl ContractSpec {
    pub fn new(operands: Vec<bool>, output: bool) -> ContractSpec {
        ContractSpec { operands, output }
    }

    pub fn parse(s: &str) -> Result<ContractSpec, String> {
        let (lhs, rhs) = s
            .split_once("->")
            .ok_or_else(|| format!("contract spec `{s}` is missing `->`"))?;
        let slot = |part: &str| -> Result<bool, String> {
            match part {
                "..." => Ok(false),
                "r..." => Ok(true),
                other => Err(format!("bad contract slot `{other}`")),
            }
        };
        let operands = lhs.split(',').map(slot).collect::<Result<Vec<_>, _>>()?;
        Ok(ContractSpec {
            operands,
            output: slot(rhs)?,
        })
    }

    pub fn batched_slots(&self) -> usize {
        self.operands.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for ContractSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &b) in self.operands.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", if b { "r..." } else { "..." })?;
        }
        write!(f, "->{}", if self.output { "r..." } else { "..." })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf { name: String },
    Replicate { count: usize },
    SumOverDirections,
    Primitive(PrimitiveKind),
    /// Elementwise j-th derivative of a unary primitive. Ladder values of
    /// tanh have no composition from the primitive set alone, so they get
    /// a dedicated elementwise node.
    Derivative { f: UnaryFn, order: u8 },
    Contract { spec: ContractSpec },
    Output { name: String },
}

/// Marks a node as the degree-`degree` jet coefficient of function stage
/// `stage` within direction family `family`. Used by the cost counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoeffTag {
    pub stage: u32,
    pub degree: u8,
    pub family: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub inputs: Vec<NodeId>,
    pub batching: Batching,
    pub tags: Vec<CoeffTag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    Type { node: NodeId, msg: String },
    UnboundLeaf(String),
    BindingShape { leaf: String, msg: String },
    Parse { line: usize, msg: String },
    Unsupported(String),
    Tensor(TensorError),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::Type { node, msg } => write!(f, "type error at %{node}: {msg}"),
            GraphError::UnboundLeaf(name) => write!(f, "unbound leaf `{name}`"),
            GraphError::BindingShape { leaf, msg } => {
                write!(f, "bad binding for leaf `{leaf}`: {msg}")
            }
            GraphError::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
            GraphError::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            GraphError::Tensor(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for GraphError {}

impl From<TensorError> for GraphError {
    fn from(e: TensorError) -> Self {
        GraphError::Tensor(e)
    }
}

impl Graph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Output nodes in append order as (id, name).
    pub fn outputs(&self) -> Vec<(NodeId, &str)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(id, n)| match &n.kind {
                NodeKind::Output { name } => Some((id, name.as_str())),
                _ => None,
            })
            .collect()
    }

    /// Ids of nodes consuming `id`.
    pub fn consumers(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.inputs.contains(&id))
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-stage propagated-vector counts: for every function stage, one
    /// vector for the (shared) primal plus, per coefficient and family,
    /// the direction extent for batched values and one for collapsed or
    /// unbatched ones. Replicate is a free broadcast and counts as one.
    /// Index 0 of the result is stage 1.
    pub fn stage_vector_counts(&self) -> Vec<u64> {
        let mut max_stage = 0u32;
        for n in &self.nodes {
            for t in &n.tags {
                max_stage = max_stage.max(t.stage);
            }
        }
        if max_stage == 0 {
            return Vec::new();
        }
        let mut counts = vec![0u64; max_stage as usize];
        let mut primal_seen = vec![false; max_stage as usize];
        for n in &self.nodes {
            let channels = match (&n.kind, n.batching) {
                (NodeKind::Replicate { .. }, _) => 1,
                (_, Batching::Batched(r)) => r as u64,
                (_, Batching::Plain) => 1,
            };
            for t in &n.tags {
                if t.stage == 0 {
                    continue;
                }
                let idx = (t.stage - 1) as usize;
                if t.degree == 0 {
                    if !primal_seen[idx] {
                        primal_seen[idx] = true;
                        counts[idx] += 1;
                    }
                } else {
                    counts[idx] += channels;
                }
            }
        }
        counts
    }

    /// The paper-style per-node vector count: the steady-state (maximum)
    /// over all function stages.
    pub fn vectors_per_node(&self) -> u64 {
        self.stage_vector_counts().into_iter().max().unwrap_or(0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum CseKey {
    Leaf(String, Batching),
    Replicate(usize, NodeId),
    Sum(NodeId),
    Unary(UnaryFn, NodeId),
    Derivative(UnaryFn, u8, NodeId),
    Scale(u64, NodeId),
    Add(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    Affine(Vec<u64>, Option<Vec<u64>>, NodeId),
    Contract(ContractSpec, Vec<NodeId>),
}

fn bits(data: &[f64]) -> Vec<u64> {
    data.iter().map(|x| x.to_bits()).collect()
}

fn cse_key(kind: &NodeKind, inputs: &[NodeId], batching: Batching) -> Option<CseKey> {
    match kind {
        NodeKind::Leaf { name } => Some(CseKey::Leaf(name.clone(), batching)),
        NodeKind::Replicate { count } => Some(CseKey::Replicate(*count, inputs[0])),
        NodeKind::SumOverDirections => Some(CseKey::Sum(inputs[0])),
        NodeKind::Derivative { f, order } => Some(CseKey::Derivative(*f, *order, inputs[0])),
        NodeKind::Primitive(p) => match p {
            PrimitiveKind::Unary(f) => Some(CseKey::Unary(*f, inputs[0])),
            PrimitiveKind::Scale(c) => Some(CseKey::Scale(c.to_bits(), inputs[0])),
            PrimitiveKind::Add => Some(CseKey::Add(inputs[0], inputs[1])),
            PrimitiveKind::Hadamard => Some(CseKey::Hadamard(inputs[0], inputs[1])),
            PrimitiveKind::Affine { weight, bias } => Some(CseKey::Affine(
                bits(weight.data()),
                bias.as_ref().map(|b| bits(b.data())),
                inputs[0],
            )),
        },
        NodeKind::Contract { spec } => Some(CseKey::Contract(spec.clone(), inputs.to_vec())),
        // outputs are never merged
        NodeKind::Output { .. } => None,
    }
}

/// Append-only graph builder with batching inference and structural
/// deduplication of identical (kind, inputs) nodes.
pub struct GraphBuilder {
    nodes: Vec<Node>,
    cse: HashMap<CseKey, NodeId>,
}

impl Default for GraphBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl GraphBuilder {
    pub fn new() -> GraphBuilder {
        GraphBuilder {
            nodes: Vec::new(),
            cse: HashMap::new(),
        }
    }

    pub fn batching(&self, id: NodeId) -> Batching {
        self.nodes[id].batching
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn infer(&self, kind: &NodeKind, inputs: &[NodeId]) -> Result<Batching, String> {
        let b = |i: usize| self.nodes[inputs[i]].batching;
        let want_arity = |n: usize| -> Result<(), String> {
            if inputs.len() != n {
                Err(format!("expected {n} inputs, got {}", inputs.len()))
            } else {
                Ok(())
            }
        };
        match kind {
            NodeKind::Leaf { .. } => unreachable!("leaf batching is declared"),
            NodeKind::Replicate { count } => {
                want_arity(1)?;
                match b(0) {
                    Batching::Plain => Ok(Batching::Batched(*count)),
                    Batching::Batched(_) => Err("replicate of an already batched value".into()),
                }
            }
            NodeKind::SumOverDirections => {
                want_arity(1)?;
                match b(0) {
                    Batching::Batched(_) => Ok(Batching::Plain),
                    Batching::Plain => Err("sum-over-directions of an unbatched value".into()),
                }
            }
            NodeKind::Derivative { .. } => {
                want_arity(1)?;
                Ok(b(0))
            }
            NodeKind::Primitive(p) => match p {
                PrimitiveKind::Unary(_) | PrimitiveKind::Scale(_) | PrimitiveKind::Affine { .. } => {
                    want_arity(1)?;
                    Ok(b(0))
                }
                PrimitiveKind::Add | PrimitiveKind::Hadamard => {
                    want_arity(2)?;
                    match (b(0), b(1)) {
                        (Batching::Plain, Batching::Plain) => Ok(Batching::Plain),
                        (Batching::Batched(r), Batching::Plain)
                        | (Batching::Plain, Batching::Batched(r)) => Ok(Batching::Batched(r)),
                        (Batching::Batched(r1), Batching::Batched(r2)) => {
                            if r1 == r2 {
                                Ok(Batching::Batched(r1))
                            } else {
                                Err(format!("direction extents differ: {r1} vs {r2}"))
                            }
                        }
                    }
                }
            },
            NodeKind::Contract { spec } => {
                want_arity(spec.operands.len())?;
                let mut extent: Option<usize> = None;
                for (i, &marked) in spec.operands.iter().enumerate() {
                    match (marked, b(i)) {
                        (true, Batching::Batched(r)) => match extent {
                            None => extent = Some(r),
                            Some(e) if e == r => {}
                            Some(e) => {
                                return Err(format!("direction extents differ: {e} vs {r}"))
                            }
                        },
                        (true, Batching::Plain) => {
                            return Err(format!("operand {i} marked `r` but input is unbatched"))
                        }
                        (false, Batching::Batched(_)) => {
                            return Err(format!("operand {i} unmarked but input is batched"))
                        }
                        (false, Batching::Plain) => {}
                    }
                }
                if spec.output || spec.batched_slots() > 0 {
                    let r = extent.ok_or("output uses index `r` but no operand declares it")?;
                    if spec.output {
                        return Ok(Batching::Batched(r));
                    }
                }
                Ok(Batching::Plain)
            }
            NodeKind::Output { .. } => {
                want_arity(1)?;
                Ok(b(0))
            }
        }
    }

    fn push(&mut self, kind: NodeKind, inputs: Vec<NodeId>, batching: Batching) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            kind,
            inputs,
            batching,
            tags: Vec::new(),
        });
        id
    }

    fn push_checked(&mut self, kind: NodeKind, inputs: Vec<NodeId>) -> Result<NodeId, GraphError> {
        for &i in &inputs {
            if i >= self.nodes.len() {
                return Err(GraphError::Type {
                    node: self.nodes.len(),
                    msg: format!("input %{i} not yet defined"),
                });
            }
        }
        let batching = self.infer(&kind, &inputs).map_err(|msg| GraphError::Type {
            node: self.nodes.len(),
            msg,
        })?;
        if let Some(key) = cse_key(&kind, &inputs, batching) {
            if let Some(&existing) = self.cse.get(&key) {
                return Ok(existing);
            }
            let id = self.push(kind, inputs, batching);
            self.cse.insert(key, id);
            return Ok(id);
        }
        Ok(self.push(kind, inputs, batching))
    }

    pub fn leaf(&mut self, name: &str, batching: Batching) -> NodeId {
        let kind = NodeKind::Leaf { name: name.to_string() };
        if let Some(key) = cse_key(&kind, &[], batching) {
            if let Some(&existing) = self.cse.get(&key) {
                return existing;
            }
            let id = self.push(kind, Vec::new(), batching);
            self.cse.insert(key, id);
            return id;
        }
        unreachable!()
    }

    pub fn replicate(&mut self, input: NodeId, count: usize) -> Result<NodeId, GraphError> {
        self.push_checked(NodeKind::Replicate { count }, vec![input])
    }

    pub fn sum(&mut self, input: NodeId) -> Result<NodeId, GraphError> {
        self.push_checked(NodeKind::SumOverDirections, vec![input])
    }

    pub fn primitive(
        &mut self,
        prim: PrimitiveKind,
        inputs: &[NodeId],
    ) -> Result<NodeId, GraphError> {
        self.push_checked(NodeKind::Primitive(prim), inputs.to_vec())
    }

    pub fn derivative(
        &mut self,
        f: UnaryFn,
        order: u8,
        input: NodeId,
    ) -> Result<NodeId, GraphError> {
        self.push_checked(NodeKind::Derivative { f, order }, vec![input])
    }

    pub fn contract(
        &mut self,
        spec: ContractSpec,
        inputs: &[NodeId],
    ) -> Result<NodeId, GraphError> {
        self.push_checked(NodeKind::Contract { spec }, inputs.to_vec())
    }

    pub fn output(&mut self, name: &str, input: NodeId) -> Result<NodeId, GraphError> {
        self.push_checked(
            NodeKind::Output {
                name: name.to_string(),
            },
            vec![input],
        )
    }

    pub fn add_tag(&mut self, id: NodeId, tag: CoeffTag) {
        if !self.nodes[id].tags.contains(&tag) {
            self.nodes[id].tags.push(tag);
        }
    }

    pub fn finish(self) -> Graph {
        Graph { nodes: self.nodes }
    }
}

/// Re-validate an externally constructed node list (used by the parser):
/// inputs must precede uses and batching must match the inference.
pub(crate) fn validate_nodes(nodes: Vec<Node>) -> Result<Graph, String> {
    let mut b = GraphBuilder::new();
    for (idx, node) in nodes.iter().enumerate() {
        let declared = node.batching;
        let id = match &node.kind {
            NodeKind::Leaf { name } => b.leaf(name, declared),
            kind => {
                for &i in &node.inputs {
                    if i >= idx {
                        return Err(format!("node %{idx} references %{i} before definition"));
                    }
                }
                let inferred = b
                    .infer(kind, &node.inputs)
                    .map_err(|msg| format!("node %{idx}: {msg}"))?;
                if inferred != declared {
                    return Err(format!(
                        "node %{idx}: declared batching {declared:?} but inferred {inferred:?}"
                    ));
                }
                b.push(kind.clone(), node.inputs.clone(), declared)
            }
        };
        if id != idx {
            return Err(format!("node %{idx}: duplicate of %{id} (ids must be dense)"));
        }
        for tag in &node.tags {
            b.add_tag(id, *tag);
        }
    }
    Ok(b.finish())
}
