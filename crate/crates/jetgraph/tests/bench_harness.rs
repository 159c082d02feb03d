//! Benchmark-harness behavior: sweep shape, flop-proxy linearity, and
//! batching-inference fuzzing over small graphs.

mod common;

use jetgraph::graph::{Batching, ContractSpec, Graph};
use jetgraph::harness::{fit_line, run_bench, BenchConfig, BenchOp};
use jetgraph::operators::{Distribution, Mode};
use jetgraph::taylor::{PrimitiveKind, UnaryFn};

#[test]
fn flop_proxy_is_monotone_and_linear_in_batch_size() {
    let cfg = BenchConfig {
        op: BenchOp::Laplacian,
        modes: vec![Mode::Standard, Mode::Collapsed],
        include_oracle: false,
        exact: true,
        dim: 12,
        batch_sizes: vec![2, 4, 8, 16],
        sample_counts: vec![],
        distribution: Distribution::Gaussian,
        seed: 3,
        reps: 1,
        widths: vec![12, 24, 24, 1],
    };
    let records = run_bench(&cfg).unwrap();
    for mode in ["standard", "collapsed"] {
        let points: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| !r.slope_flag && r.mode == mode)
            .map(|r| (r.n as f64, r.flops as f64))
            .collect();
        assert_eq!(points.len(), 4);
        for w in points.windows(2) {
            assert!(w[0].1 < w[1].1, "{mode}: flops not monotone");
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let (_, _, r2) = fit_line(&xs, &ys);
        assert!(r2 >= 0.999, "{mode}: R^2 = {r2}");
    }
}

#[test]
fn flop_proxy_is_linear_in_sample_count() {
    let cfg = BenchConfig {
        op: BenchOp::Biharmonic,
        modes: vec![Mode::Standard, Mode::Collapsed],
        include_oracle: false,
        exact: false,
        dim: 6,
        batch_sizes: vec![2],
        sample_counts: vec![2, 4, 6, 8],
        distribution: Distribution::Gaussian,
        seed: 5,
        reps: 1,
        widths: vec![6, 16, 16, 1],
    };
    let records = run_bench(&cfg).unwrap();
    for mode in ["standard", "collapsed"] {
        let points: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| !r.slope_flag && r.mode == mode)
            .map(|r| (r.samples as f64, r.flops as f64))
            .collect();
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let (_, _, r2) = fit_line(&xs, &ys);
        assert!(r2 >= 0.999, "{mode}: R^2 = {r2}");
    }
}

/// A graph typechecks iff every edge connects compatible batching:
/// enumerate every node kind over every batching combination of one or
/// two inputs and compare the builder's verdict with the rule.
#[test]
fn batching_inference_exhaustive_small_graphs() {
    let batchings = [Batching::Plain, Batching::Batched(2), Batching::Batched(3)];

    // unary consumers over every input batching
    for &b in &batchings {
        let mk = || {
            let mut g = Graph::builder();
            let leaf = g.leaf("a", b);
            (g, leaf)
        };
        let (mut g, leaf) = mk();
        assert_eq!(g.replicate(leaf, 4).is_ok(), b == Batching::Plain);
        let (mut g, leaf) = mk();
        assert_eq!(g.sum(leaf).is_ok(), b.is_batched());
        let (mut g, leaf) = mk();
        assert!(g.primitive(PrimitiveKind::Unary(UnaryFn::Tanh), &[leaf]).is_ok());
        let (mut g, leaf) = mk();
        assert!(g.derivative(UnaryFn::Tanh, 2, leaf).is_ok());
        let (mut g, leaf) = mk();
        assert!(g.output("o", leaf).is_ok());
    }

    // binary primitives over every pair of batchings
    for &ba in &batchings {
        for &bb in &batchings {
            for prim in [PrimitiveKind::Add, PrimitiveKind::Hadamard] {
                let mut g = Graph::builder();
                let a = g.leaf("a", ba);
                let b = g.leaf("b", bb);
                let compatible = match (ba.extent(), bb.extent()) {
                    (Some(r1), Some(r2)) => r1 == r2,
                    _ => true,
                };
                assert_eq!(
                    g.primitive(prim.clone(), &[a, b]).is_ok(),
                    compatible,
                    "{prim:?} over {ba:?}, {bb:?}"
                );
            }
        }
    }

    // contracts: every two-operand spec against every batching pair
    let specs = [
        "...,...->...",
        "r...,...->r...",
        "...,r...->r...",
        "r...,r...->r...",
        "r...,...->...",
        "...,r...->...",
        "r...,r...->...",
    ];
    for &ba in &batchings {
        for &bb in &batchings {
            for spec_str in specs {
                let spec = ContractSpec::parse(spec_str).unwrap();
                let mut g = Graph::builder();
                let a = g.leaf("a", ba);
                let b = g.leaf("b", bb);
                let slot_ok = |marked: bool, b: Batching| marked == b.is_batched();
                let extents_ok = match (spec.operands[0], spec.operands[1]) {
                    (true, true) => ba.extent() == bb.extent(),
                    _ => true,
                };
                let want = slot_ok(spec.operands[0], ba) && slot_ok(spec.operands[1], bb) && extents_ok;
                assert_eq!(
                    g.contract(spec, &[a, b]).is_ok(),
                    want,
                    "{spec_str} over {ba:?}, {bb:?}"
                );
            }
        }
    }
}
