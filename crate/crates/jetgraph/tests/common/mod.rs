//! Shared fixtures: closed-form test functions as graphs, a random
//! function-graph generator, and golden-file comparison.
#![allow(dead_code)]

use jetgraph::graph::{Batching, Graph};
use jetgraph::taylor::{PrimitiveKind, UnaryFn};
use jetgraph::tensor::{Shape, Tensor};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// f(x) = sin(x), elementwise.
pub fn sin_graph() -> Graph {
    let mut b = Graph::builder();
    let x = b.leaf("x", Batching::Plain);
    let s = b.primitive(PrimitiveKind::Unary(UnaryFn::Sin), &[x]).unwrap();
    b.output("f", s).unwrap();
    b.finish()
}

/// f(x) = 0.5 * ||x||^2 (Laplacian = D, Hessian = I).
pub fn half_square_norm(d: usize) -> Graph {
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

fn row_select(b: &mut jetgraph::graph::GraphBuilder, x: usize, d: usize, i: usize) -> usize {
    let mut w = vec![0.0; d];
    w[i] = 1.0;
    b.primitive(
        PrimitiveKind::Affine {
            weight: Tensor::new(Shape::of(&[1, d]), w).unwrap(),
            bias: None,
        },
        &[x],
    )
    .unwrap()
}

/// f(x) = sin(x1) + x2^2 on R^2.
pub fn sin_plus_square() -> Graph {
    let mut b = Graph::builder();
    let x = b.leaf("x", Batching::Plain);
    let x1 = row_select(&mut b, x, 2, 0);
    let x2 = row_select(&mut b, x, 2, 1);
    let s = b.primitive(PrimitiveKind::Unary(UnaryFn::Sin), &[x1]).unwrap();
    let sq = b.primitive(PrimitiveKind::Hadamard, &[x2, x2]).unwrap();
    let f = b.primitive(PrimitiveKind::Add, &[s, sq]).unwrap();
    b.output("f", f).unwrap();
    b.finish()
}

/// f(x) = x1^4 on R^d.
pub fn quartic_coordinate(d: usize) -> Graph {
    let mut b = Graph::builder();
    let x = b.leaf("x", Batching::Plain);
    let p = row_select(&mut b, x, d, 0);
    let p2 = b.primitive(PrimitiveKind::Hadamard, &[p, p]).unwrap();
    let p4 = b.primitive(PrimitiveKind::Hadamard, &[p2, p2]).unwrap();
    b.output("f", p4).unwrap();
    b.finish()
}

/// f(x) = ||x||^4 (biharmonic = 8 D (D + 2), constant in x).
pub fn quartic_norm(d: usize) -> Graph {
    let mut b = Graph::builder();
    let x = b.leaf("x", Batching::Plain);
    let sq = b.primitive(PrimitiveKind::Hadamard, &[x, x]).unwrap();
    let w = Tensor::new(Shape::of(&[1, d]), vec![1.0; d]).unwrap();
    let norm2 = b
        .primitive(PrimitiveKind::Affine { weight: w, bias: None }, &[sq])
        .unwrap();
    let norm4 = b.primitive(PrimitiveKind::Hadamard, &[norm2, norm2]).unwrap();
    b.output("f", norm4).unwrap();
    b.finish()
}

/// f(x) = x1^2 * x2^2 on R^d (d >= 2).
pub fn square_pair_product(d: usize) -> Graph {
    let mut b = Graph::builder();
    let x = b.leaf("x", Batching::Plain);
    let x1 = row_select(&mut b, x, d, 0);
    let x2 = row_select(&mut b, x, d, 1);
    let s1 = b.primitive(PrimitiveKind::Hadamard, &[x1, x1]).unwrap();
    let s2 = b.primitive(PrimitiveKind::Hadamard, &[x2, x2]).unwrap();
    let f = b.primitive(PrimitiveKind::Hadamard, &[s1, s2]).unwrap();
    b.output("f", f).unwrap();
    b.finish()
}

/// f(x) = x1 * x2 * ... * xd.
pub fn coordinate_product(d: usize) -> Graph {
    let mut b = Graph::builder();
    let x = b.leaf("x", Batching::Plain);
    let mut acc = row_select(&mut b, x, d, 0);
    for i in 1..d {
        let xi = row_select(&mut b, x, d, i);
        acc = b.primitive(PrimitiveKind::Hadamard, &[acc, xi]).unwrap();
    }
    b.output("f", acc).unwrap();
    b.finish()
}

/// Random tensor with entries uniform in [-bound, bound).
pub fn random_tensor(rng: &mut ChaCha12Rng, shape: &[usize], bound: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(
        Shape::of(shape),
        (0..n).map(|_| rng.gen_range(-bound..bound)).collect(),
    )
    .unwrap()
}

/// Random small function graph over all primitive kinds, mapping R^dim
/// to R^out_dim, with weights scaled to keep values tame.
pub fn random_function_graph(
    rng: &mut ChaCha12Rng,
    dim: usize,
    out_dim: usize,
) -> Graph {
    let mut b = Graph::builder();
    let x = b.leaf("x", Batching::Plain);
    // pool of (node, width)
    let mut pool = vec![(x, dim)];
    let steps = rng.gen_range(2..6);
    for _ in 0..steps {
        let (src, width) = pool[rng.gen_range(0..pool.len())];
        let next = match rng.gen_range(0..6) {
            0 => {
                let out = rng.gen_range(1..4);
                let bound = 0.9 / (width as f64).sqrt();
                let w = random_tensor(rng, &[out, width], bound);
                let bias = if rng.gen_bool(0.5) {
                    Some(random_tensor(rng, &[out], 0.3))
                } else {
                    None
                };
                (
                    b.primitive(PrimitiveKind::Affine { weight: w, bias }, &[src])
                        .unwrap(),
                    out,
                )
            }
            1 => {
                let f = match rng.gen_range(0..4) {
                    0 => UnaryFn::Sin,
                    1 => UnaryFn::Cos,
                    2 => UnaryFn::Tanh,
                    _ => UnaryFn::Exp,
                };
                (b.primitive(PrimitiveKind::Unary(f), &[src]).unwrap(), width)
            }
            2 => (
                b.primitive(PrimitiveKind::Scale(rng.gen_range(-1.2..1.2)), &[src])
                    .unwrap(),
                width,
            ),
            3 | 4 => {
                // second operand of the same width, possibly the same node
                let same: Vec<usize> = pool
                    .iter()
                    .filter(|(_, w)| *w == width)
                    .map(|(n, _)| *n)
                    .collect();
                let other = same[rng.gen_range(0..same.len())];
                let prim = if rng.gen_bool(0.5) {
                    PrimitiveKind::Add
                } else {
                    PrimitiveKind::Hadamard
                };
                (b.primitive(prim, &[src, other]).unwrap(), width)
            }
            _ => (
                b.primitive(PrimitiveKind::Unary(UnaryFn::Tanh), &[src]).unwrap(),
                width,
            ),
        };
        pool.push(next);
    }
    let (last, width) = *pool.last().unwrap();
    let bound = 0.9 / (width as f64).sqrt();
    let w = random_tensor(rng, &[out_dim, width], bound);
    let out = b
        .primitive(PrimitiveKind::Affine { weight: w, bias: None }, &[last])
        .unwrap();
    b.output("f", out).unwrap();
    b.finish()
}

/// Compare against a checked-in golden file; set BLESS=1 to regenerate.
pub fn golden_compare(name: &str, actual: &str) {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let want = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()));
    assert_eq!(actual, want, "golden mismatch for {name}");
}
