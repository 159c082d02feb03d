//! Line-oriented textual form of the IR, one node per line:
//!
//! ```text
//! jetgraph v1
//! %0 = leaf[x0] : plain
//! %1 = leaf[x1_r] : batched(4)
//! %2 = replicate[4](%0) : batched(4)
//! %3 = prim[sin](%2) : batched(4)
//! %4 = contract["r...,r...->r..."](%3, %1) : batched(4)
//! %5 = sum(%4) : plain
//! %6 = output[f2](%5) : plain
//! ```
//!
//! Coefficient tags append as `@c(stage,degree,family)`. Parsing then
//! serializing (and vice versa) is the identity on valid input; parse
//! errors carry 1-based line numbers.

use crate::taylor::{PrimitiveKind, UnaryFn};
use crate::tensor::{Shape, Tensor};

use super::{validate_nodes, Batching, CoeffTag, ContractSpec, Graph, GraphError, Node, NodeKind};

const HEADER: &str = "jetgraph v1";

fn write_tensor(out: &mut String, t: &Tensor) {
    out.push('(');
    for (i, d) in t.shape().dims().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&d.to_string());
    }
    out.push_str(")[");
    for (i, v) in t.data().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{v}"));
    }
    out.push(']');
}

pub fn serialize(graph: &Graph) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for (id, node) in graph.nodes().iter().enumerate() {
        out.push_str(&format!("%{id} = "));
        match &node.kind {
            NodeKind::Leaf { name } => out.push_str(&format!("leaf[{name}]")),
            NodeKind::Replicate { count } => out.push_str(&format!("replicate[{count}]")),
            NodeKind::SumOverDirections => out.push_str("sum"),
            NodeKind::Derivative { f, order } => {
                out.push_str(&format!("deriv[{} {}]", f.name(), order))
            }
            NodeKind::Primitive(p) => match p {
                PrimitiveKind::Unary(f) => out.push_str(&format!("prim[{}]", f.name())),
                PrimitiveKind::Add => out.push_str("prim[add]"),
                PrimitiveKind::Hadamard => out.push_str("prim[hadamard]"),
                PrimitiveKind::Scale(c) => out.push_str(&format!("prim[scale {c}]")),
                PrimitiveKind::Affine { weight, bias } => {
                    out.push_str("prim[affine w=");
                    write_tensor(&mut out, weight);
                    if let Some(b) = bias {
                        out.push_str(" b=");
                        write_tensor(&mut out, b);
                    }
                    out.push(']');
                }
            },
            NodeKind::Contract { spec } => out.push_str(&format!("contract[\"{spec}\"]")),
            NodeKind::Output { name } => out.push_str(&format!("output[{name}]")),
        }
        if !node.inputs.is_empty() {
            out.push('(');
            for (i, input) in node.inputs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("%{input}"));
            }
            out.push(')');
        }
        match node.batching {
            Batching::Plain => out.push_str(" : plain"),
            Batching::Batched(r) => out.push_str(&format!(" : batched({r})")),
        }
        for tag in &node.tags {
            out.push_str(&format!(" @c({},{},{})", tag.stage, tag.degree, tag.family));
        }
        out.push('\n');
    }
    out
}

struct LineParser<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, msg: impl Into<String>) -> GraphError {
        GraphError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn eat(&mut self, token: &str) -> Result<(), GraphError> {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.err(format!("expected `{token}` at `{}`", truncate(self.rest()))))
        }
    }

    fn eat_opt(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(' ') {
            self.pos += 1;
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        for c in self.rest().chars() {
            if pred(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        &self.s[start..self.pos]
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, GraphError> {
        let tok = self.take_while(|c| {
            c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '+' || c == '_'
        });
        tok.parse()
            .map_err(|_| self.err(format!("expected {what}, got `{tok}`")))
    }

    fn node_ref(&mut self) -> Result<usize, GraphError> {
        self.eat("%")?;
        self.number::<usize>("node id")
    }

    fn tensor(&mut self) -> Result<Tensor, GraphError> {
        self.eat("(")?;
        let mut dims = Vec::new();
        if !self.rest().starts_with(')') {
            loop {
                dims.push(self.number::<usize>("extent")?);
                if !self.eat_opt(",") {
                    break;
                }
            }
        }
        self.eat(")")?;
        self.eat("[")?;
        let mut data = Vec::new();
        loop {
            self.skip_ws();
            if self.eat_opt("]") {
                break;
            }
            data.push(self.number::<f64>("float")?);
        }
        Tensor::new(Shape::of(&dims), data).map_err(|e| self.err(e.to_string()))
    }
}

fn truncate(s: &str) -> String {
    let line = s.lines().next().unwrap_or("");
    if line.len() > 30 {
        format!("{}...", &line[..30])
    } else {
        line.to_string()
    }
}

/// Parse the textual IR back into a graph, re-validating batching.
pub fn parse(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == HEADER => {}
        _ => {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("expected header `{HEADER}`"),
            })
        }
    }
    let mut nodes: Vec<Node> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut p = LineParser {
            s: line,
            pos: 0,
            line: line_no,
        };
        let id = p.node_ref()?;
        if id != nodes.len() {
            return Err(p.err(format!("expected node id %{}, got %{id}", nodes.len())));
        }
        p.skip_ws();
        p.eat("=")?;
        p.skip_ws();
        let kind_name = p.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        let kind = match kind_name {
            "leaf" => {
                p.eat("[")?;
                let name = p.take_while(|c| c != ']').to_string();
                p.eat("]")?;
                NodeKind::Leaf { name }
            }
            "replicate" => {
                p.eat("[")?;
                let count = p.number::<usize>("replica count")?;
                p.eat("]")?;
                NodeKind::Replicate { count }
            }
            "sum" => NodeKind::SumOverDirections,
            "deriv" => {
                p.eat("[")?;
                let f = p.take_while(|c| c.is_ascii_alphabetic());
                let f = UnaryFn::from_name(f).ok_or_else(|| p.err("unknown unary function"))?;
                p.skip_ws();
                let order = p.number::<u8>("derivative order")?;
                p.eat("]")?;
                NodeKind::Derivative { f, order }
            }
            "prim" => {
                p.eat("[")?;
                let name = p.take_while(|c| c.is_ascii_alphabetic());
                let prim = match name {
                    "add" => PrimitiveKind::Add,
                    "hadamard" => PrimitiveKind::Hadamard,
                    "scale" => {
                        p.skip_ws();
                        PrimitiveKind::Scale(p.number::<f64>("scale factor")?)
                    }
                    "affine" => {
                        p.skip_ws();
                        p.eat("w=")?;
                        let weight = p.tensor()?;
                        p.skip_ws();
                        let bias = if p.eat_opt("b=") { Some(p.tensor()?) } else { None };
                        PrimitiveKind::Affine { weight, bias }
                    }
                    other => match UnaryFn::from_name(other) {
                        Some(f) => PrimitiveKind::Unary(f),
                        None => return Err(p.err(format!("unknown primitive `{other}`"))),
                    },
                };
                p.eat("]")?;
                NodeKind::Primitive(prim)
            }
            "contract" => {
                p.eat("[\"")?;
                let spec = p.take_while(|c| c != '"');
                let spec = ContractSpec::parse(spec).map_err(|e| p.err(e))?;
                p.eat("\"]")?;
                NodeKind::Contract { spec }
            }
            "output" => {
                p.eat("[")?;
                let name = p.take_while(|c| c != ']').to_string();
                p.eat("]")?;
                NodeKind::Output { name }
            }
            other => return Err(p.err(format!("unknown node kind `{other}`"))),
        };
        let mut inputs = Vec::new();
        if p.eat_opt("(") {
            loop {
                p.skip_ws();
                inputs.push(p.node_ref()?);
                p.skip_ws();
                if !p.eat_opt(",") {
                    break;
                }
            }
            p.eat(")")?;
        }
        p.skip_ws();
        p.eat(":")?;
        p.skip_ws();
        let batching = if p.eat_opt("plain") {
            Batching::Plain
        } else if p.eat_opt("batched(") {
            let r = p.number::<usize>("direction extent")?;
            p.eat(")")?;
            Batching::Batched(r)
        } else {
            return Err(p.err("expected `plain` or `batched(R)`"));
        };
        let mut tags = Vec::new();
        loop {
            p.skip_ws();
            if p.eat_opt("@c(") {
                let stage = p.number::<u32>("stage")?;
                p.eat(",")?;
                let degree = p.number::<u8>("degree")?;
                p.eat(",")?;
                let family = p.number::<u8>("family")?;
                p.eat(")")?;
                tags.push(CoeffTag {
                    stage,
                    degree,
                    family,
                });
            } else {
                break;
            }
        }
        if !p.rest().is_empty() {
            return Err(p.err(format!("trailing input `{}`", truncate(p.rest()))));
        }
        nodes.push(Node {
            kind,
            inputs,
            batching,
            tags,
        });
    }
    validate_nodes(nodes).map_err(|msg| GraphError::Parse { line: 0, msg })
}
