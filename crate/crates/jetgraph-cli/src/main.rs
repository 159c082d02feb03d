//! `bench`: sweep the PDE operators over batch sizes or sample counts on
//! the benchmark MLP, comparing standard Taylor mode, collapsed Taylor
//! mode, and the nested first-order oracle, and emit one CSV row per
//! configuration plus fitted per-unit slopes.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use jetgraph::collapse::collapse;
use jetgraph::graph::serialize;
use jetgraph::harness::{build_mlp, run_bench, BenchConfig, BenchOp, MlpSpec, CSV_HEADER};
use jetgraph::operators::{
    prepare_biharmonic_exact, prepare_biharmonic_stochastic, prepare_laplacian,
    prepare_weighted_laplacian, DirectionSet, Distribution, Mode, WeightedLaplacianSpec,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OpArg {
    Laplacian,
    WeightedLaplacian,
    Biharmonic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Standard,
    Collapsed,
    Both,
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistArg {
    Rademacher,
    Gaussian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DumpArg {
    Before,
    After,
}

/// Benchmark the PDE operators in standard vs collapsed Taylor mode.
#[derive(Parser, Debug)]
#[command(name = "bench", version)]
struct Args {
    /// Operator to benchmark.
    #[arg(long, value_enum)]
    op: OpArg,

    /// Which implementations to run.
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,

    /// Exact computation (basis or column directions). Default.
    #[arg(long, conflicts_with = "stochastic")]
    exact: bool,

    /// Stochastic estimation; sweeps --samples at fixed batch size.
    #[arg(long)]
    stochastic: bool,

    /// Input dimension D.
    #[arg(long)]
    dim: usize,

    /// Batch sizes to sweep (exact), or the fixed batch (stochastic).
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    batch: Vec<usize>,

    /// Sample counts to sweep in stochastic mode.
    #[arg(long, value_delimiter = ',')]
    samples: Vec<usize>,

    /// Sampling distribution for stochastic directions.
    #[arg(long, value_enum, default_value = "gaussian")]
    distribution: DistArg,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Wall time is the minimum over this many runs.
    #[arg(long, default_value_t = 5)]
    reps: usize,

    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Desk-scale architecture D -> 64 -> 64 -> 1 instead of the full
    /// D -> 768 -> 768 -> 512 -> 512 -> 1.
    #[arg(long)]
    small: bool,

    /// Print the operator graph IR (before or after collapsing) and exit.
    #[arg(long, value_enum)]
    dump_graph: Option<DumpArg>,

    /// Run the collapse pass and report what it moved.
    #[arg(long)]
    collapse: bool,
}

fn widths(args: &Args) -> Vec<usize> {
    if args.small {
        MlpSpec::small(args.dim, args.seed).widths
    } else {
        MlpSpec::benchmark(args.dim, args.seed).widths
    }
}

fn prepare_for_dump(args: &Args, mode: Mode) -> Result<jetgraph::Graph, Box<dyn std::error::Error>> {
    let f = build_mlp(&MlpSpec::new(widths(args), args.seed))?;
    let d = args.dim;
    let dist = match args.distribution {
        DistArg::Rademacher => Distribution::Rademacher,
        DistArg::Gaussian => Distribution::Gaussian,
    };
    let samples = args.samples.first().copied().unwrap_or(1);
    let exact = !args.stochastic;
    let prepared = match args.op {
        OpArg::Laplacian if exact => prepare_laplacian(&f, d, mode, &DirectionSet::Basis(d))?,
        OpArg::Laplacian => prepare_laplacian(
            &f,
            d,
            mode,
            &DirectionSet::Sampled {
                count: samples,
                distribution: dist,
                seed: args.seed,
            },
        )?,
        OpArg::WeightedLaplacian => {
            let cfg = bench_config(args);
            let spec = WeightedLaplacianSpec::from_sigma(cfg.bench_sigma())?;
            if exact {
                let cols = DirectionSet::Columns(spec.sigma().clone());
                prepare_weighted_laplacian(&f, d, &spec, mode, &cols)?
            } else {
                prepare_weighted_laplacian(
                    &f,
                    d,
                    &spec,
                    mode,
                    &DirectionSet::Sampled {
                        count: samples,
                        distribution: dist,
                        seed: args.seed,
                    },
                )?
            }
        }
        OpArg::Biharmonic if exact => prepare_biharmonic_exact(&f, d, mode)?,
        OpArg::Biharmonic => prepare_biharmonic_stochastic(&f, d, samples, args.seed, mode)?,
    };
    Ok(prepared.graph)
}

fn bench_config(args: &Args) -> BenchConfig {
    BenchConfig {
        op: match args.op {
            OpArg::Laplacian => BenchOp::Laplacian,
            OpArg::WeightedLaplacian => BenchOp::WeightedLaplacian,
            OpArg::Biharmonic => BenchOp::Biharmonic,
        },
        modes: match args.mode {
            ModeArg::Standard => vec![Mode::Standard],
            ModeArg::Collapsed => vec![Mode::Collapsed],
            ModeArg::Both => vec![Mode::Standard, Mode::Collapsed],
            ModeArg::Oracle => vec![],
        },
        include_oracle: matches!(args.mode, ModeArg::Oracle),
        exact: !args.stochastic,
        dim: args.dim,
        batch_sizes: args.batch.clone(),
        sample_counts: args.samples.clone(),
        distribution: match args.distribution {
            DistArg::Rademacher => Distribution::Rademacher,
            DistArg::Gaussian => Distribution::Gaussian,
        },
        seed: args.seed,
        reps: args.reps,
        widths: widths(args),
    }
}

/// Write to stdout, treating a closed pipe as normal termination.
fn emit(text: &str) -> std::io::Result<()> {
    match std::io::stdout().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn run(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    if let Some(dump) = args.dump_graph {
        let graph = match dump {
            DumpArg::Before => prepare_for_dump(args, Mode::Standard)?,
            DumpArg::After => prepare_for_dump(args, Mode::Collapsed)?,
        };
        emit(&serialize(&graph))?;
        return Ok(());
    }
    if args.collapse {
        let standard = prepare_for_dump(args, Mode::Standard)?;
        let (_, report) = collapse(&standard);
        eprintln!(
            "collapse: {} replicates moved, {} sums moved, {} -> {} nodes, {} -> {} vectors per node",
            report.replicates_moved,
            report.sums_moved,
            report.nodes_before,
            report.nodes_after,
            report.batched_vectors_before,
            report.batched_vectors_after,
        );
    }
    if args.stochastic && args.samples.is_empty() {
        return Err("stochastic sweeps need --samples".into());
    }
    let records = run_bench(&bench_config(args))?;
    let mut out = String::with_capacity(records.len() * 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)?,
        None => emit(&out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::FAILURE
        }
    }
}
