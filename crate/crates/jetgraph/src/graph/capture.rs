//! Capture: expand a function graph into the compute graph of its
//! K-jet, one batched coefficient chain per direction family, exactly
//! the standard Taylor propagation. The shared primal appears once and
//! is replicated into each family; structurally-zero seed coefficients
//! are dropped rather than propagated as zero tensors.

use crate::taylor::{binomial, partitions, PrimitiveKind, UnaryFn, MAX_DEGREE};

use super::{Batching, CoeffTag, ContractSpec, Graph, GraphBuilder, GraphError, NodeId, NodeKind};

/// How one seed coefficient of a family is provided.
#[derive(Debug, Clone)]
pub enum CoeffSeed {
    /// Bound at evaluation time under this leaf name, batched over the
    /// family's directions.
    Leaf(String),
    /// Structurally zero; never materialized.
    Zero,
}

/// One family of directions sharing the primal: `count` directions, one
/// seed per coefficient degree 1..=K.
#[derive(Debug, Clone)]
pub struct FamilySeed {
    pub count: usize,
    pub coeffs: Vec<CoeffSeed>,
}

#[derive(Debug, Clone)]
pub enum CaptureOutputs {
    /// Per family, sum the top coefficient over its directions, scale by
    /// the family weight, add everything and emit it under `name`.
    WeightedTopSum { name: String, weights: Vec<f64> },
    /// Emit the final stage's full jet (single family): the primal chain
    /// as `f0`, coefficient chains as `f1`.. and the direction-summed top
    /// as `fK`.
    FullJet,
}

#[derive(Debug, Clone)]
pub struct CaptureSpec {
    pub degree: usize,
    /// Leaf name the primal binds to.
    pub primal_leaf: String,
    pub families: Vec<FamilySeed>,
    pub outputs: CaptureOutputs,
}

struct FamilyState {
    /// Batched primal chain of this family at the current function node.
    primal: NodeId,
    /// Coefficient chain, None = structurally zero.
    coeffs: Vec<Option<NodeId>>,
}

struct Capturer<'s> {
    b: GraphBuilder,
    spec: &'s CaptureSpec,
}

fn all_batched(n: usize) -> ContractSpec {
    ContractSpec::new(vec![true; n], true)
}

impl<'s> Capturer<'s> {
    fn tag(&mut self, id: NodeId, stage: u32, degree: usize, family: usize) {
        self.b.add_tag(
            id,
            CoeffTag {
                stage,
                degree: degree as u8,
                family: family as u8,
            },
        );
    }

    /// Ladder node d^order of `f` on the family's batched primal input.
    /// d^0 reuses the primal chain node itself; sin/cos cycle through the
    /// primitive set, tanh uses derivative nodes.
    fn ladder(
        &mut self,
        f: UnaryFn,
        order: usize,
        input: NodeId,
        d0: NodeId,
    ) -> Result<NodeId, GraphError> {
        if order == 0 {
            return Ok(d0);
        }
        match f {
            UnaryFn::Exp => Ok(d0),
            UnaryFn::Sin => {
                let base = match order % 4 {
                    0 => return Ok(d0),
                    1 => self.b.primitive(PrimitiveKind::Unary(UnaryFn::Cos), &[input])?,
                    2 => d0,
                    _ => self.b.primitive(PrimitiveKind::Unary(UnaryFn::Cos), &[input])?,
                };
                if order % 4 >= 2 {
                    self.b.primitive(PrimitiveKind::Scale(-1.0), &[base])
                } else {
                    Ok(base)
                }
            }
            UnaryFn::Cos => {
                let base = match order % 4 {
                    0 => return Ok(d0),
                    2 => d0,
                    _ => self.b.primitive(PrimitiveKind::Unary(UnaryFn::Sin), &[input])?,
                };
                if order % 4 == 1 || order % 4 == 2 {
                    self.b.primitive(PrimitiveKind::Scale(-1.0), &[base])
                } else {
                    Ok(base)
                }
            }
            UnaryFn::Tanh => self.b.derivative(UnaryFn::Tanh, order as u8, input),
        }
    }

    fn add_tree(&mut self, terms: Vec<NodeId>) -> Result<Option<NodeId>, GraphError> {
        let mut iter = terms.into_iter();
        let first = match iter.next() {
            None => return Ok(None),
            Some(t) => t,
        };
        let mut acc = first;
        for t in iter {
            acc = self.b.primitive(PrimitiveKind::Add, &[acc, t])?;
        }
        Ok(Some(acc))
    }

    fn propagate_stage(
        &mut self,
        prim: &PrimitiveKind,
        stage: u32,
        family: usize,
        inputs: &[&FamilyState],
    ) -> Result<FamilyState, GraphError> {
        let degree = self.spec.degree;
        let state = match prim {
            PrimitiveKind::Affine { weight, bias } => {
                let x = inputs[0];
                let primal = self.b.primitive(
                    PrimitiveKind::Affine {
                        weight: weight.clone(),
                        bias: bias.clone(),
                    },
                    &[x.primal],
                )?;
                let linear = PrimitiveKind::Affine {
                    weight: weight.clone(),
                    bias: None,
                };
                let coeffs = x
                    .coeffs
                    .iter()
                    .map(|c| match c {
                        Some(n) => Ok(Some(self.b.primitive(linear.clone(), &[*n])?)),
                        None => Ok(None),
                    })
                    .collect::<Result<Vec<_>, GraphError>>()?;
                FamilyState { primal, coeffs }
            }
            PrimitiveKind::Scale(c) => {
                let x = inputs[0];
                let primal = self.b.primitive(PrimitiveKind::Scale(*c), &[x.primal])?;
                let coeffs = x
                    .coeffs
                    .iter()
                    .map(|co| match co {
                        Some(n) => Ok(Some(self.b.primitive(PrimitiveKind::Scale(*c), &[*n])?)),
                        None => Ok(None),
                    })
                    .collect::<Result<Vec<_>, GraphError>>()?;
                FamilyState { primal, coeffs }
            }
            PrimitiveKind::Add => {
                let (a, b) = (inputs[0], inputs[1]);
                let primal = self.b.primitive(PrimitiveKind::Add, &[a.primal, b.primal])?;
                let coeffs = a
                    .coeffs
                    .iter()
                    .zip(&b.coeffs)
                    .map(|pair| match pair {
                        (Some(x), Some(y)) => {
                            Ok(Some(self.b.primitive(PrimitiveKind::Add, &[*x, *y])?))
                        }
                        (Some(x), None) | (None, Some(x)) => Ok(Some(*x)),
                        (None, None) => Ok(None),
                    })
                    .collect::<Result<Vec<_>, GraphError>>()?;
                FamilyState { primal, coeffs }
            }
            PrimitiveKind::Unary(f) => {
                let x = inputs[0];
                let d0 = self
                    .b
                    .primitive(PrimitiveKind::Unary(*f), &[x.primal])?;
                let mut coeffs = Vec::with_capacity(degree);
                for k in 1..=degree {
                    let mut terms = Vec::new();
                    for sigma in partitions(k).map_err(|e| GraphError::Unsupported(e.to_string()))? {
                        let factors: Option<Vec<NodeId>> = sigma
                            .parts
                            .iter()
                            .map(|&s| x.coeffs[s as usize - 1])
                            .collect();
                        let factors = match factors {
                            Some(f) => f,
                            None => continue, // a structurally-zero factor kills the term
                        };
                        let d = self.ladder(*f, sigma.order(), x.primal, d0)?;
                        let mut ops = vec![d];
                        ops.extend(factors);
                        let mut term = self.b.contract(all_batched(ops.len()), &ops)?;
                        if sigma.nu != 1 {
                            term = self
                                .b
                                .primitive(PrimitiveKind::Scale(sigma.nu as f64), &[term])?;
                        }
                        terms.push(term);
                    }
                    coeffs.push(self.add_tree(terms)?);
                }
                FamilyState { primal: d0, coeffs }
            }
            PrimitiveKind::Hadamard => {
                let (a, b) = (inputs[0], inputs[1]);
                let primal = self
                    .b
                    .primitive(PrimitiveKind::Hadamard, &[a.primal, b.primal])?;
                let pick = |st: &FamilyState, i: usize| -> Option<NodeId> {
                    if i == 0 {
                        Some(st.primal)
                    } else {
                        st.coeffs[i - 1]
                    }
                };
                let mut coeffs = Vec::with_capacity(degree);
                for k in 1..=degree {
                    let mut terms = Vec::new();
                    for i in 0..=k {
                        let (x, y) = match (pick(a, i), pick(b, k - i)) {
                            (Some(x), Some(y)) => (x, y),
                            _ => continue,
                        };
                        let mut term = self.b.contract(all_batched(2), &[x, y])?;
                        let c = binomial(k, i);
                        if c != 1 {
                            term = self.b.primitive(PrimitiveKind::Scale(c as f64), &[term])?;
                        }
                        terms.push(term);
                    }
                    coeffs.push(self.add_tree(terms)?);
                }
                FamilyState { primal, coeffs }
            }
        };
        self.tag(state.primal, stage, 0, family);
        for (k, c) in state.coeffs.iter().enumerate() {
            if let Some(n) = c {
                self.tag(*n, stage, k + 1, family);
            }
        }
        Ok(state)
    }
}

/// Expand `function` (a single-leaf, single-output graph of primitives)
/// into the compute graph of its K-jet under `spec`.
pub fn capture(function: &Graph, spec: &CaptureSpec) -> Result<Graph, GraphError> {
    if spec.degree == 0 || spec.degree > MAX_DEGREE {
        return Err(GraphError::Unsupported(format!(
            "capture degree {} outside 1..={MAX_DEGREE}",
            spec.degree
        )));
    }
    if spec.families.is_empty() {
        return Err(GraphError::Unsupported("capture needs at least one family".into()));
    }
    for fam in &spec.families {
        if fam.coeffs.len() != spec.degree {
            return Err(GraphError::Unsupported(format!(
                "family seeds {} coefficients, capture degree is {}",
                fam.coeffs.len(),
                spec.degree
            )));
        }
    }
    match &spec.outputs {
        CaptureOutputs::FullJet if spec.families.len() != 1 => {
            return Err(GraphError::Unsupported(
                "full-jet capture expects a single family".into(),
            ))
        }
        CaptureOutputs::WeightedTopSum { weights, .. }
            if weights.len() != spec.families.len() =>
        {
            return Err(GraphError::Unsupported(
                "one weight per family required".into(),
            ))
        }
        _ => {}
    }

    let mut cap = Capturer {
        b: GraphBuilder::new(),
        spec,
    };
    let n_funcs = function.len();
    // per family, per function node
    let mut states: Vec<Vec<Option<FamilyState>>> = spec
        .families
        .iter()
        .map(|_| (0..n_funcs).map(|_| None).collect())
        .collect();
    let mut final_node: Option<usize> = None;
    let mut stage = 0u32;

    // the shared primal leaf is emitted first
    let x0 = cap.b.leaf(&spec.primal_leaf, Batching::Plain);

    // seed leaves per family, in declaration order
    let mut seeds: Vec<(NodeId, Vec<Option<NodeId>>)> = Vec::new();
    for fam in &spec.families {
        let rep = cap.b.replicate(x0, fam.count)?;
        let coeffs = fam
            .coeffs
            .iter()
            .map(|seed| match seed {
                CoeffSeed::Leaf(name) => Some(cap.b.leaf(name, Batching::Batched(fam.count))),
                CoeffSeed::Zero => None,
            })
            .collect();
        seeds.push((rep, coeffs));
    }

    for (id, node) in function.nodes().iter().enumerate() {
        match &node.kind {
            NodeKind::Leaf { .. } => {
                if seeds.is_empty() {
                    return Err(GraphError::Unsupported(
                        "function graph has more than one leaf".into(),
                    ));
                }
                for (f, (rep, coeffs)) in seeds.drain(..).enumerate() {
                    states[f][id] = Some(FamilyState {
                        primal: rep,
                        coeffs,
                    });
                }
            }
            NodeKind::Primitive(prim) => {
                stage += 1;
                for (f, family_states) in states.iter_mut().enumerate() {
                    let ins: Vec<&FamilyState> = node
                        .inputs
                        .iter()
                        .map(|&i| family_states[i].as_ref().expect("function graph is ordered"))
                        .collect();
                    let st = cap.propagate_stage(prim, stage, f, &ins)?;
                    family_states[id] = Some(st);
                }
            }
            NodeKind::Output { .. } => {
                if final_node.is_some() {
                    return Err(GraphError::Unsupported(
                        "function graph has more than one output".into(),
                    ));
                }
                final_node = Some(node.inputs[0]);
            }
            other => {
                return Err(GraphError::Unsupported(format!(
                    "function graphs may only contain leaves, primitives and outputs, found {other:?}"
                )))
            }
        }
    }

    let final_node =
        final_node.ok_or_else(|| GraphError::Unsupported("function graph has no output".into()))?;

    match &spec.outputs {
        CaptureOutputs::FullJet => {
            let st = states[0][final_node].as_ref().unwrap();
            cap.b.output("f0", st.primal)?;
            let degree = spec.degree;
            for k in 1..degree {
                let n = st.coeffs[k - 1].ok_or_else(|| {
                    GraphError::Unsupported(format!(
                        "coefficient {k} is structurally zero; full-jet capture cannot emit it"
                    ))
                })?;
                cap.b.output(&format!("f{k}"), n)?;
            }
            let top = st.coeffs[degree - 1].ok_or_else(|| {
                GraphError::Unsupported("top coefficient is structurally zero".into())
            })?;
            let summed = cap.b.sum(top)?;
            cap.b.output(&format!("f{degree}"), summed)?;
        }
        CaptureOutputs::WeightedTopSum { name, weights } => {
            let mut acc: Option<NodeId> = None;
            for (f, &w) in weights.iter().enumerate() {
                let st = states[f][final_node].as_ref().unwrap();
                let top = match st.coeffs[spec.degree - 1] {
                    Some(t) => t,
                    None => continue,
                };
                let summed = cap.b.sum(top)?;
                let weighted = if w == 1.0 {
                    summed
                } else {
                    cap.b.primitive(PrimitiveKind::Scale(w), &[summed])?
                };
                acc = Some(match acc {
                    None => weighted,
                    Some(a) => cap.b.primitive(PrimitiveKind::Add, &[a, weighted])?,
                });
            }
            let out = match acc {
                Some(a) => a,
                None => {
                    // every family's top is structurally zero (e.g. an affine
                    // function): the operator value is exactly zero, shaped
                    // like the output
                    let st = states[0][final_node].as_ref().unwrap();
                    let summed = cap.b.sum(st.primal)?;
                    cap.b.primitive(PrimitiveKind::Scale(0.0), &[summed])?
                }
            };
            cap.b.output(name, out)?;
        }
    }
    Ok(cap.b.finish())
}
