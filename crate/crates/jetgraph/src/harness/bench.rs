//! Benchmark records, the sweep runner, and the slope methodology:
//! sweep one variable (batch size or sample count), fit a line, report
//! the per-unit cost. Timed regions are strictly serial.

use std::time::Instant;

use crate::graph::Graph;
use crate::operators::{
    prepare_biharmonic_exact, prepare_biharmonic_stochastic, prepare_laplacian,
    prepare_weighted_laplacian, DirectionSet, Distribution, Mode, OperatorError, PreparedOperator,
    WeightedLaplacianSpec,
};
use crate::rng;
use crate::tensor::{Shape, Tensor};

use super::mlp::{build_mlp, MlpSpec};
use super::oracle::{
    biharmonic_contraction, hessian_trace, oracle_derivative, weighted_hessian_trace,
};

/// One measured configuration, or a fitted slope row (slope_flag set).
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub op: String,
    pub mode: String,
    pub exact: bool,
    pub dim: usize,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub wall_ns_min: u128,
    pub flops: u64,
    pub vectors_per_node: u64,
    pub slope_flag: bool,
}

pub const CSV_HEADER: &str = "op,mode,exact,dim,n,samples,seed,wall_ns_min,flops,vectors_per_node,slope_flag";

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.op,
            self.mode,
            self.exact as u8,
            self.dim,
            self.n,
            self.samples,
            self.seed,
            self.wall_ns_min,
            self.flops,
            self.vectors_per_node,
            self.slope_flag as u8,
        )
    }
}

/// Least-squares line fit; returns (slope, intercept, r_squared).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return (0.0, mean_y, 1.0);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchOp {
    Laplacian,
    WeightedLaplacian,
    Biharmonic,
}

impl BenchOp {
    pub fn name(self) -> &'static str {
        match self {
            BenchOp::Laplacian => "laplacian",
            BenchOp::WeightedLaplacian => "weighted-laplacian",
            BenchOp::Biharmonic => "biharmonic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub op: BenchOp,
    pub modes: Vec<Mode>,
    pub include_oracle: bool,
    pub exact: bool,
    pub dim: usize,
    /// Batch sizes swept in exact mode; the first entry is the fixed
    /// batch for stochastic sweeps.
    pub batch_sizes: Vec<usize>,
    pub sample_counts: Vec<usize>,
    pub distribution: Distribution,
    pub seed: u64,
    pub reps: usize,
    pub widths: Vec<usize>,
}

impl BenchConfig {
    /// Full-rank diagonal weighting factor, entries in [0.5, 1.5).
    pub fn bench_sigma(&self) -> Tensor {
        let mut rng = rng::seeded(self.seed ^ 0x5157);
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0 + 0.5 * rng::uniform(&mut rng, 1.0);
        }
        Tensor::new(Shape::of(&[d, d]), data).unwrap()
    }

    fn data_points(&self, n: usize) -> Vec<Tensor> {
        let mut rng = rng::seeded(self.seed ^ 0x0da7a);
        (0..n)
            .map(|_| {
                Tensor::vector((0..self.dim).map(|_| rng::uniform(&mut rng, 1.0)).collect())
            })
            .collect()
    }

    fn prepare(
        &self,
        function: &Graph,
        mode: Mode,
        samples: usize,
    ) -> Result<PreparedOperator, OperatorError> {
        let d = self.dim;
        match (self.op, self.exact) {
            (BenchOp::Laplacian, true) => {
                prepare_laplacian(function, d, mode, &DirectionSet::Basis(d))
            }
            (BenchOp::Laplacian, false) => {
                if samples >= d {
                    return Err(OperatorError::BadSpec(format!(
                        "stochastic Laplacian with {samples} samples >= dimension {d}: compute exactly instead"
                    )));
                }
                prepare_laplacian(
                    function,
                    d,
                    mode,
                    &DirectionSet::Sampled {
                        count: samples,
                        distribution: self.distribution,
                        seed: self.seed,
                    },
                )
            }
            (BenchOp::WeightedLaplacian, true) => {
                let spec = WeightedLaplacianSpec::from_sigma(self.bench_sigma())?;
                let cols = DirectionSet::Columns(spec.sigma().clone());
                prepare_weighted_laplacian(function, d, &spec, mode, &cols)
            }
            (BenchOp::WeightedLaplacian, false) => {
                if samples >= d {
                    return Err(OperatorError::BadSpec(format!(
                        "stochastic weighted Laplacian with {samples} samples >= rank {d}: compute exactly instead"
                    )));
                }
                let spec = WeightedLaplacianSpec::from_sigma(self.bench_sigma())?;
                prepare_weighted_laplacian(
                    function,
                    d,
                    &spec,
                    mode,
                    &DirectionSet::Sampled {
                        count: samples,
                        distribution: self.distribution,
                        seed: self.seed,
                    },
                )
            }
            (BenchOp::Biharmonic, true) => prepare_biharmonic_exact(function, d, mode),
            (BenchOp::Biharmonic, false) => {
                let dd = d as u64;
                let exact_cost = (9 * dd * dd - 3 * dd + 8) / 2;
                if 2 + 3 * samples as u64 >= exact_cost {
                    return Err(OperatorError::BadSpec(format!(
                        "stochastic biharmonic with {samples} samples costs 2+3S >= {exact_cost}: compute exactly instead"
                    )));
                }
                prepare_biharmonic_stochastic(function, d, samples, self.seed, mode)
            }
        }
    }

    fn oracle_value(&self, function: &Graph, x0: &Tensor) -> Result<Tensor, OperatorError> {
        match self.op {
            BenchOp::Laplacian => Ok(hessian_trace(&oracle_derivative(function, x0, 2)?)),
            BenchOp::WeightedLaplacian => {
                let sigma = self.bench_sigma();
                let d = self.dim;
                // W = sigma sigma^T
                let mut w = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = 0.0;
                        for k in 0..d {
                            acc += sigma.data()[i * d + k] * sigma.data()[j * d + k];
                        }
                        w[i * d + j] = acc;
                    }
                }
                let w = Tensor::new(Shape::of(&[d, d]), w)?;
                Ok(weighted_hessian_trace(
                    &oracle_derivative(function, x0, 2)?,
                    &w,
                ))
            }
            BenchOp::Biharmonic => Ok(biharmonic_contraction(&oracle_derivative(function, x0, 4)?)),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep_record(
    cfg: &BenchConfig,
    mode_name: &str,
    n: usize,
    samples: usize,
    wall_ns_min: u128,
    flops: u64,
    vectors: u64,
    slope_flag: bool,
) -> BenchRecord {
    BenchRecord {
        op: cfg.op.name().to_string(),
        mode: mode_name.to_string(),
        exact: cfg.exact,
        dim: cfg.dim,
        n,
        samples,
        seed: cfg.seed,
        wall_ns_min,
        flops,
        vectors_per_node: vectors,
        slope_flag,
    }
}

/// Run the sweep: one record per (mode, sweep point) plus one fitted
/// slope record per mode. Wall time is the minimum over `reps` strictly
/// serial runs; the flop proxy is deterministic and identical across
/// reps.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, OperatorError> {
    let mut widths = cfg.widths.clone();
    if widths.is_empty() {
        widths = vec![cfg.dim, 768, 768, 512, 512, 1];
    } else if widths[0] != cfg.dim {
        return Err(OperatorError::BadSpec(format!(
            "width spec starts at {} but the sweep dimension is {}",
            widths[0], cfg.dim
        )));
    }
    let function = build_mlp(&MlpSpec::new(widths, cfg.seed))?;
    let mut records = Vec::new();

    let sweep: Vec<(usize, usize)> = if cfg.exact {
        cfg.batch_sizes.iter().map(|&n| (n, 0)).collect()
    } else {
        let n = cfg.batch_sizes.first().copied().unwrap_or(1);
        cfg.sample_counts.iter().map(|&s| (n, s)).collect()
    };
    if sweep.is_empty() {
        return Err(OperatorError::BadSpec("empty sweep".into()));
    }

    for &mode in &cfg.modes {
        let mut xs = Vec::new();
        let mut walls = Vec::new();
        let mut flops_series = Vec::new();
        let mut vectors = 0;
        for &(n, samples) in &sweep {
            let prepared = cfg.prepare(&function, mode, samples)?;
            vectors = prepared.vectors_per_node();
            let data = cfg.data_points(n);
            let mut wall_min = u128::MAX;
            let mut flops_total = 0u64;
            for _ in 0..cfg.reps.max(1) {
                flops_total = 0;
                let start = Instant::now();
                for x0 in &data {
                    let (_, flops) = prepared.evaluate_counted(x0)?;
                    flops_total += flops;
                }
                wall_min = wall_min.min(start.elapsed().as_nanos());
            }
            let sweep_var = if cfg.exact { n } else { samples };
            xs.push(sweep_var as f64);
            walls.push(wall_min as f64);
            flops_series.push(flops_total as f64);
            records.push(sweep_record(
                cfg,
                mode.name(),
                n,
                samples,
                wall_min,
                flops_total,
                vectors,
                false,
            ));
        }
        let (wall_slope, _, _) = fit_line(&xs, &walls);
        let (flop_slope, _, _) = fit_line(&xs, &flops_series);
        records.push(sweep_record(
            cfg,
            mode.name(),
            0,
            0,
            wall_slope.max(0.0) as u128,
            flop_slope.max(0.0) as u64,
            vectors,
            true,
        ));
    }

    if cfg.include_oracle {
        let mut xs = Vec::new();
        let mut walls = Vec::new();
        for &(n, samples) in &sweep {
            let data = cfg.data_points(n);
            let mut wall_min = u128::MAX;
            for _ in 0..cfg.reps.max(1) {
                let start = Instant::now();
                for x0 in &data {
                    let _ = cfg.oracle_value(&function, x0)?;
                }
                wall_min = wall_min.min(start.elapsed().as_nanos());
            }
            let sweep_var = if cfg.exact { n } else { samples };
            xs.push(sweep_var as f64);
            walls.push(wall_min as f64);
            records.push(sweep_record(cfg, "oracle", n, samples, wall_min, 0, 0, false));
        }
        let (wall_slope, _, _) = fit_line(&xs, &walls);
        records.push(sweep_record(
            cfg,
            "oracle",
            0,
            0,
            wall_slope.max(0.0) as u128,
            0,
            0,
            true,
        ));
    }
    Ok(records)
}
