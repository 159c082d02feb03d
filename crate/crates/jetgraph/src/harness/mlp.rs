//! Benchmark MLP builder: alternating affine and elementwise-activation
//! layers, no activation on the final layer. Parameters are drawn
//! uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)) so activations stay
//! in tanh's responsive range.

use crate::graph::{Batching, Graph, GraphError};
use crate::rng;
use crate::taylor::{PrimitiveKind, UnaryFn};
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone)]
pub struct MlpSpec {
    /// Layer widths including input and output, e.g. [50, 768, 768, 512, 512, 1].
    pub widths: Vec<usize>,
    pub activation: UnaryFn,
    pub seed: u64,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, seed: u64) -> MlpSpec {
        MlpSpec {
            widths,
            activation: UnaryFn::Tanh,
            seed,
        }
    }

    /// The benchmark architecture: D -> 768 -> 768 -> 512 -> 512 -> 1.
    pub fn benchmark(dim: usize, seed: u64) -> MlpSpec {
        MlpSpec::new(vec![dim, 768, 768, 512, 512, 1], seed)
    }

    /// Desk-scale architecture: D -> 64 -> 64 -> 1.
    pub fn small(dim: usize, seed: u64) -> MlpSpec {
        MlpSpec::new(vec![dim, 64, 64, 1], seed)
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }
}

/// Build the MLP's function graph. Same spec, same graph, bit for bit.
pub fn build_mlp(spec: &MlpSpec) -> Result<Graph, GraphError> {
    if spec.widths.len() < 2 || spec.widths.contains(&0) {
        return Err(GraphError::Unsupported(
            "MLP spec needs at least two positive widths".into(),
        ));
    }
    let mut rng = rng::seeded(spec.seed);
    let mut b = Graph::builder();
    let mut prev = b.leaf("x", Batching::Plain);
    let layers = spec.widths.len() - 1;
    for l in 0..layers {
        let (fan_in, fan_out) = (spec.widths[l], spec.widths[l + 1]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w = Tensor::new(
            Shape::of(&[fan_out, fan_in]),
            (0..fan_out * fan_in)
                .map(|_| rng::uniform(&mut rng, bound))
                .collect(),
        )?;
        let bias = Tensor::vector((0..fan_out).map(|_| rng::uniform(&mut rng, bound)).collect());
        prev = b.primitive(
            PrimitiveKind::Affine {
                weight: w,
                bias: Some(bias),
            },
            &[prev],
        )?;
        if l + 1 < layers {
            prev = b.primitive(PrimitiveKind::Unary(spec.activation), &[prev])?;
        }
    }
    b.output("f", prev)?;
    Ok(b.finish())
}
