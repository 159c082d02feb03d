//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

mod common;

use std::collections::HashMap;

use common::*;
use jetgraph::collapse::collapse;
use jetgraph::graph::{
    capture, evaluate, parse, serialize, CaptureOutputs, CaptureSpec, CoeffSeed, FamilySeed,
};
use jetgraph::harness::{
    biharmonic_contraction, build_mlp, hessian_trace, oracle_derivative, run_bench, BenchConfig,
    BenchOp, MlpSpec,
};
use jetgraph::operators::{
    biharmonic_6jet, biharmonic_exact, biharmonic_stochastic, count_vectors, gamma, laplacian,
    theoretical_ratio, DirectionSet, Distribution, Mode, OperatorKind, Rat,
};
use jetgraph::taylor::partitions;
use jetgraph::tensor::{rel_diff, Tensor};
use rand::Rng;

fn pass(n: u32, name: &str) {
    println!("criterion {n} ({name}): PASS");
}

/// One golden row: a partition (parts descending) and its multiplicity.
type GoldenRow = (&'static [u8], u64);

/// Golden table: every partition and multiplicity for degrees 2..=8,
/// frozen as integers.
const GOLDEN_MULTIPLICITIES: &[(usize, &[GoldenRow])] = &[
    (2, &[(&[1, 1], 1), (&[2], 1)]),
    (3, &[(&[1, 1, 1], 1), (&[2, 1], 3), (&[3], 1)]),
    (
        4,
        &[
            (&[1, 1, 1, 1], 1),
            (&[2, 1, 1], 6),
            (&[2, 2], 3),
            (&[3, 1], 4),
            (&[4], 1),
        ],
    ),
    (
        5,
        &[
            (&[1, 1, 1, 1, 1], 1),
            (&[2, 1, 1, 1], 10),
            (&[2, 2, 1], 15),
            (&[3, 1, 1], 10),
            (&[3, 2], 10),
            (&[4, 1], 5),
            (&[5], 1),
        ],
    ),
    (
        6,
        &[
            (&[1, 1, 1, 1, 1, 1], 1),
            (&[2, 1, 1, 1, 1], 15),
            (&[2, 2, 1, 1], 45),
            (&[2, 2, 2], 15),
            (&[3, 1, 1, 1], 20),
            (&[3, 2, 1], 60),
            (&[3, 3], 10),
            (&[4, 1, 1], 15),
            (&[4, 2], 15),
            (&[5, 1], 6),
            (&[6], 1),
        ],
    ),
    (
        7,
        &[
            (&[1, 1, 1, 1, 1, 1, 1], 1),
            (&[2, 1, 1, 1, 1, 1], 21),
            (&[2, 2, 1, 1, 1], 105),
            (&[2, 2, 2, 1], 105),
            (&[3, 1, 1, 1, 1], 35),
            (&[3, 2, 1, 1], 210),
            (&[3, 2, 2], 105),
            (&[3, 3, 1], 70),
            (&[4, 1, 1, 1], 35),
            (&[4, 2, 1], 105),
            (&[4, 3], 35),
            (&[5, 1, 1], 21),
            (&[5, 2], 21),
            (&[6, 1], 7),
            (&[7], 1),
        ],
    ),
    (
        8,
        &[
            (&[1, 1, 1, 1, 1, 1, 1, 1], 1),
            (&[2, 1, 1, 1, 1, 1, 1], 28),
            (&[2, 2, 1, 1, 1, 1], 210),
            (&[2, 2, 2, 1, 1], 420),
            (&[2, 2, 2, 2], 105),
            (&[3, 1, 1, 1, 1, 1], 56),
            (&[3, 2, 1, 1, 1], 560),
            (&[3, 2, 2, 1], 840),
            (&[3, 3, 1, 1], 280),
            (&[3, 3, 2], 280),
            (&[4, 1, 1, 1, 1], 70),
            (&[4, 2, 1, 1], 420),
            (&[4, 2, 2], 210),
            (&[4, 3, 1], 280),
            (&[4, 4], 35),
            (&[5, 1, 1, 1], 56),
            (&[5, 2, 1], 168),
            (&[5, 3], 56),
            (&[6, 1, 1], 28),
            (&[6, 2], 28),
            (&[7, 1], 8),
            (&[8], 1),
        ],
    ),
];

#[test]
fn criterion_01_faa_di_bruno_golden_table() {
    for &(degree, table) in GOLDEN_MULTIPLICITIES {
        let got = partitions(degree).unwrap();
        assert_eq!(got.len(), table.len(), "partition count at degree {degree}");
        for &(parts, nu) in table {
            let found = got
                .iter()
                .find(|p| p.parts == parts)
                .unwrap_or_else(|| panic!("degree {degree}: missing partition {parts:?}"));
            assert_eq!(found.nu, nu, "multiplicity of {parts:?} at degree {degree}");
        }
    }
    pass(1, "faa-di-bruno golden table");
}

#[test]
fn criterion_02_collapse_semantic_preservation() {
    let mut rng = jetgraph::rng::seeded(0xC011A5E);
    let mut cases = 0;
    while cases < 200 {
        let dim = rng.gen_range(1..5);
        let out_dim = rng.gen_range(1..3);
        let f = random_function_graph(&mut rng, dim, out_dim);
        let degree = rng.gen_range(1..=4);
        let n_families = rng.gen_range(1..=2);
        let full_jet = n_families == 1 && rng.gen_bool(0.3);
        let mut families = Vec::new();
        let mut weights = Vec::new();
        let mut bindings = HashMap::new();
        for g in 0..n_families {
            let count = if full_jet { rng.gen_range(1..5) } else { rng.gen_range(0..5) };
            let coeffs = (1..=degree)
                .map(|k| {
                    if full_jet || rng.gen_bool(0.7) {
                        let name = format!("x{k}_g{g}");
                        bindings.insert(name.clone(), random_tensor(&mut rng, &[count, dim], 0.8));
                        CoeffSeed::Leaf(name)
                    } else {
                        CoeffSeed::Zero
                    }
                })
                .collect();
            families.push(FamilySeed { count, coeffs });
            weights.push(rng.gen_range(-1.5..1.5));
        }
        let spec = CaptureSpec {
            degree,
            primal_leaf: "x0".into(),
            families,
            outputs: if full_jet {
                CaptureOutputs::FullJet
            } else {
                CaptureOutputs::WeightedTopSum {
                    name: "result".into(),
                    weights,
                }
            },
        };
        let g = match capture(&f, &spec) {
            Ok(g) => g,
            Err(_) => continue, // e.g. full-jet over a structurally-zero coefficient
        };
        bindings.insert("x0".into(), random_tensor(&mut rng, &[dim], 0.7));
        let standard = evaluate(&g, &bindings).unwrap();
        let (collapsed_graph, _) = collapse(&g);
        let collapsed = evaluate(&collapsed_graph, &bindings).unwrap();
        assert_eq!(standard.len(), collapsed.len());
        for ((name_s, val_s), (name_c, val_c)) in standard.iter().zip(&collapsed) {
            assert_eq!(name_s, name_c);
            let diff = rel_diff(val_s, val_c);
            assert!(
                diff <= 1e-10,
                "case {cases}: output {name_s} differs by {diff}"
            );
        }
        cases += 1;
    }
    pass(2, "collapse semantic preservation over 200 random cases");
}

#[test]
fn criterion_03_gamma_rationals() {
    let i = [2usize, 2];
    assert_eq!(gamma(&i, &[4, 0]).unwrap(), Rat::new(13, 192));
    assert_eq!(gamma(&i, &[1, 3]).unwrap(), Rat::new(-1, 3));
    assert_eq!(gamma(&i, &[2, 2]).unwrap(), Rat::new(5, 8));
    pass(3, "gamma coefficients exact as rationals");
}

#[test]
fn criterion_04_laplacian_against_oracle() {
    let mut checked = 0;
    for &dim in &[2usize, 5, 10, 50] {
        for seed in 0..5u64 {
            let f = build_mlp(&MlpSpec::small(dim, seed * 31 + dim as u64)).unwrap();
            let x0 = random_tensor(&mut jetgraph::rng::seeded(seed + 900), &[dim], 0.8);
            let want = hessian_trace(&oracle_derivative(&f, &x0, 2).unwrap());
            for mode in [Mode::Standard, Mode::Collapsed] {
                let got = laplacian(&f, &x0, mode, &DirectionSet::Basis(dim)).unwrap();
                let diff = rel_diff(&got, &want);
                assert!(
                    diff <= 1e-8,
                    "D={dim} seed={seed} mode={mode:?}: rel diff {diff}"
                );
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 20);
    pass(4, "exact Laplacian equals oracle Hessian trace on 20 MLPs");
}

#[test]
fn criterion_05_biharmonic_triple_agreement() {
    for &dim in &[2usize, 3, 5] {
        for seed in 0..2u64 {
            let f = build_mlp(&MlpSpec::new(vec![dim, 12, 12, 1], seed * 7 + dim as u64)).unwrap();
            let x0 = random_tensor(&mut jetgraph::rng::seeded(seed + 50), &[dim], 0.6);
            let interp = biharmonic_exact(&f, &x0, Mode::Collapsed).unwrap();
            let sixjet = biharmonic_6jet(&f, &x0).unwrap();
            let oracle = biharmonic_contraction(&oracle_derivative(&f, &x0, 4).unwrap());
            for (a, b, label) in [
                (&interp, &sixjet, "interpolation vs 6-jet"),
                (&interp, &oracle, "interpolation vs oracle"),
                (&sixjet, &oracle, "6-jet vs oracle"),
            ] {
                let diff = rel_diff(a, b);
                assert!(diff <= 1e-6, "D={dim} seed={seed} {label}: rel diff {diff}");
            }
        }
    }
    pass(5, "biharmonic triple agreement (interpolation, 6-jet, oracle)");
}

#[test]
fn criterion_06_cost_model_reproduces_ratio_table() {
    let round2 = |x: f64| (x * 100.0).round() / 100.0;

    // exact rows at the table's dimensions
    assert_eq!(
        count_vectors(OperatorKind::LaplacianExact, Mode::Standard, 50, 0).unwrap(),
        101
    );
    assert_eq!(
        count_vectors(OperatorKind::LaplacianExact, Mode::Collapsed, 50, 0).unwrap(),
        52
    );
    assert_eq!(
        count_vectors(OperatorKind::WeightedLaplacianExact, Mode::Standard, 50, 50).unwrap(),
        101
    );
    assert_eq!(
        count_vectors(OperatorKind::WeightedLaplacianExact, Mode::Collapsed, 50, 50).unwrap(),
        52
    );
    assert_eq!(
        count_vectors(OperatorKind::BiharmonicExact, Mode::Standard, 5, 0).unwrap(),
        141
    );
    assert_eq!(
        count_vectors(OperatorKind::BiharmonicExact, Mode::Collapsed, 5, 0).unwrap(),
        109
    );
    assert_eq!(
        round2(theoretical_ratio(OperatorKind::LaplacianExact, 50, 0).unwrap()),
        0.51
    );
    assert_eq!(
        round2(theoretical_ratio(OperatorKind::WeightedLaplacianExact, 50, 50).unwrap()),
        0.51
    );
    assert_eq!(
        round2(theoretical_ratio(OperatorKind::BiharmonicExact, 5, 0).unwrap()),
        0.77
    );

    // stochastic rows: per-sample increments 2 vs 1 and 4 vs 3
    for (op, dim) in [
        (OperatorKind::LaplacianStochastic, 50),
        (OperatorKind::WeightedLaplacianStochastic, 50),
    ] {
        let d_std = count_vectors(op, Mode::Standard, dim, 8).unwrap()
            - count_vectors(op, Mode::Standard, dim, 7).unwrap();
        let d_col = count_vectors(op, Mode::Collapsed, dim, 8).unwrap()
            - count_vectors(op, Mode::Collapsed, dim, 7).unwrap();
        assert_eq!((d_std, d_col), (2, 1));
        assert_eq!(round2(theoretical_ratio(op, dim, 7).unwrap()), 0.5);
    }
    let d_std = count_vectors(OperatorKind::BiharmonicStochastic, Mode::Standard, 5, 8).unwrap()
        - count_vectors(OperatorKind::BiharmonicStochastic, Mode::Standard, 5, 7).unwrap();
    let d_col = count_vectors(OperatorKind::BiharmonicStochastic, Mode::Collapsed, 5, 8).unwrap()
        - count_vectors(OperatorKind::BiharmonicStochastic, Mode::Collapsed, 5, 7).unwrap();
    assert_eq!((d_std, d_col), (4, 3));
    assert_eq!(
        round2(theoretical_ratio(OperatorKind::BiharmonicStochastic, 5, 7).unwrap()),
        0.75
    );
    pass(6, "cost model reproduces the ratio table");
}

#[test]
fn criterion_07_instrumented_graphs_match_cost_model() {
    use jetgraph::operators::{
        prepare_biharmonic_exact, prepare_laplacian, prepare_weighted_laplacian,
        WeightedLaplacianSpec,
    };
    for &dim in &[5usize, 50] {
        let f = build_mlp(&MlpSpec::small(dim, 17)).unwrap();
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        let sigma = Tensor::new(jetgraph::Shape::of(&[dim, dim]), eye).unwrap();
        let spec = WeightedLaplacianSpec::from_sigma(sigma.clone()).unwrap();
        for mode in [Mode::Standard, Mode::Collapsed] {
            let rows: [(&str, u64, u64); 3] = [
                (
                    "laplacian",
                    prepare_laplacian(&f, dim, mode, &DirectionSet::Basis(dim))
                        .unwrap()
                        .vectors_per_node(),
                    count_vectors(OperatorKind::LaplacianExact, mode, dim, 0).unwrap(),
                ),
                (
                    "weighted-laplacian",
                    prepare_weighted_laplacian(
                        &f,
                        dim,
                        &spec,
                        mode,
                        &DirectionSet::Columns(sigma.clone()),
                    )
                    .unwrap()
                    .vectors_per_node(),
                    count_vectors(OperatorKind::WeightedLaplacianExact, mode, dim, dim).unwrap(),
                ),
                (
                    "biharmonic",
                    prepare_biharmonic_exact(&f, dim, mode)
                        .unwrap()
                        .vectors_per_node(),
                    count_vectors(OperatorKind::BiharmonicExact, mode, dim, 0).unwrap(),
                ),
            ];
            for (op, instrumented, model) in rows {
                assert_eq!(
                    instrumented, model,
                    "{op} {mode:?} at D={dim}: instrumented {instrumented} vs model {model}"
                );
            }
        }
    }
    pass(7, "instrumented graph counters equal the cost model");
}

#[test]
fn criterion_08_performance_direction() {
    // flop-proxy slope ratio at the benchmark architecture
    let lap_cfg = BenchConfig {
        op: BenchOp::Laplacian,
        modes: vec![Mode::Standard, Mode::Collapsed],
        include_oracle: false,
        exact: true,
        dim: 50,
        batch_sizes: vec![2, 4, 6],
        sample_counts: vec![],
        distribution: Distribution::Gaussian,
        seed: 0,
        reps: 1,
        widths: vec![],
    };
    let records = run_bench(&lap_cfg).unwrap();
    let slope = |mode: &str| -> f64 {
        records
            .iter()
            .find(|r| r.slope_flag && r.mode == mode)
            .map(|r| r.flops as f64)
            .unwrap()
    };
    let lap_ratio = slope("collapsed") / slope("standard");
    assert!(
        (lap_ratio - 0.51).abs() <= 0.05,
        "exact Laplacian flop slope ratio {lap_ratio}"
    );

    let bi_cfg = BenchConfig {
        op: BenchOp::Biharmonic,
        modes: vec![Mode::Standard, Mode::Collapsed],
        include_oracle: false,
        exact: false,
        dim: 5,
        batch_sizes: vec![2],
        sample_counts: vec![4, 8, 12],
        distribution: Distribution::Gaussian,
        seed: 0,
        reps: 1,
        widths: vec![],
    };
    let records = run_bench(&bi_cfg).unwrap();
    let slope = |mode: &str| -> f64 {
        records
            .iter()
            .find(|r| r.slope_flag && r.mode == mode)
            .map(|r| r.flops as f64)
            .unwrap()
    };
    let bi_ratio = slope("collapsed") / slope("standard");
    assert!(
        (bi_ratio - 0.75).abs() <= 0.05,
        "stochastic biharmonic flop slope ratio {bi_ratio}"
    );

    // wall-clock direction only: collapsed <= standard at D=50, N=64
    let wall_cfg = BenchConfig {
        op: BenchOp::Laplacian,
        modes: vec![Mode::Standard, Mode::Collapsed],
        include_oracle: false,
        exact: true,
        dim: 50,
        batch_sizes: vec![64],
        sample_counts: vec![],
        distribution: Distribution::Gaussian,
        seed: 0,
        reps: 2,
        widths: vec![],
    };
    let records = run_bench(&wall_cfg).unwrap();
    let wall = |mode: &str| -> u128 {
        records
            .iter()
            .find(|r| !r.slope_flag && r.mode == mode)
            .map(|r| r.wall_ns_min)
            .unwrap()
    };
    let (std_ns, col_ns) = (wall("standard"), wall("collapsed"));
    assert!(
        col_ns <= std_ns,
        "collapsed {col_ns} ns should not exceed standard {std_ns} ns"
    );
    println!(
        "  flop slope ratios: laplacian {lap_ratio:.3} (want 0.51), biharmonic {bi_ratio:.3} (want 0.75); wall {col_ns} <= {std_ns} ns"
    );
    pass(8, "performance direction and flop slope ratios");
}

#[test]
fn criterion_09_stochastic_unbiasedness() {
    // Hutchinson Laplacian on a quadratic: mean of 1e5 Gaussian samples
    // within 4 analytic standard errors of the exact value
    let d = 8;
    let samples = 100_000;
    let f = half_square_norm(d);
    let x0 = random_tensor(&mut jetgraph::rng::seeded(200), &[d], 1.0);
    let est = laplacian(
        &f,
        &x0,
        Mode::Collapsed,
        &DirectionSet::Sampled {
            count: samples,
            distribution: Distribution::Gaussian,
            seed: 424242,
        },
    )
    .unwrap();
    // single-sample variance of ||v||^2 for standard normals is 2D
    let se = (2.0 * d as f64 / samples as f64).sqrt();
    let err = (est.data()[0] - d as f64).abs();
    assert!(err <= 4.0 * se, "Laplacian estimate off by {err} > 4 x {se}");

    // stochastic biharmonic on f(x) = x1^4 in one dimension: each sample
    // contributes 24 v^4, so the estimator's expectation is 24 E[v^4] = 72
    // with variance 576 (E[v^8] - E[v^4]^2) = 576 * 96
    let g = quartic_coordinate(1);
    let x0 = Tensor::vector(vec![0.5]);
    let est = biharmonic_stochastic(&g, &x0, samples, 31337, Mode::Collapsed).unwrap();
    let se = (576.0 * 96.0 / samples as f64).sqrt();
    let err = (est.data()[0] - 72.0).abs();
    assert!(err <= 4.0 * se, "biharmonic estimate off by {err} > 4 x {se}");
    pass(9, "stochastic estimators land within four standard errors");
}

#[test]
fn criterion_10_rewrite_structural_golden() {
    let f = sin_graph();
    let spec = CaptureSpec {
        degree: 2,
        primal_leaf: "x0".into(),
        families: vec![FamilySeed {
            count: 4,
            coeffs: vec![CoeffSeed::Leaf("x1_r".into()), CoeffSeed::Leaf("x2_r".into())],
        }],
        outputs: CaptureOutputs::FullJet,
    };
    let before = capture(&f, &spec).unwrap();
    let (after, _) = collapse(&before);
    let before_text = serialize(&before);
    let after_text = serialize(&after);
    golden_compare("sin2jet_before.ir", &before_text);
    golden_compare("sin2jet_after.ir", &after_text);
    // the checked-in files parse back to the same graphs
    assert_eq!(parse(&before_text).unwrap(), before);
    assert_eq!(parse(&after_text).unwrap(), after);
    pass(10, "rewrite golden files match");
}
