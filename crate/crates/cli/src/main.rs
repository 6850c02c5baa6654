use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dawa::harness::{
    gen_synthetic_data, gen_workload, report_emit, run_experiment, ExperimentConfig, SyntheticKind, SyntheticParams,
    WorkloadKind, WorkloadParams,
};
use dawa::mechanisms::{run_dawa_traced, MechanismConfig, MechanismName};
use dawa::partition::{exact_partition, private_partition, CostMode, PartitionParams};
use dawa::spatial::{
    answer_rectangle, grid_discretize, linearize, rectangles_workload, GridSpec, HilbertMap, RectangleQuery,
};
use dawa::{io as dio, PrivacyBudget, RngStream};

/// Differentially private answering of range-query workloads.
#[derive(Parser)]
#[command(name = "dawa", version)]
struct Cli {
    /// Worker threads for parallel sections (0 = one per core).
    #[arg(long, global = true, env = "DAWA_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid from a JSON config and write the JSON report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Report destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a workload as CSV `lo,hi`.
    Workload(WorkloadArgs),
    /// Generate a synthetic data vector, one count per line.
    Datagen(DatagenArgs),
    /// Compute a (private or exact) partition of a data vector as CSV `lo,hi`.
    Partition(PartitionArgs),
    /// Run one mechanism on a data vector and workload; one estimate per line.
    Estimate(EstimateArgs),
    /// Answer rectangle queries over 2D points through the Hilbert layout.
    Spatial(SpatialArgs),
}

#[derive(Args)]
struct WorkloadArgs {
    /// identity | uniform | clustered | large-clustered
    #[arg(long)]
    kind: WorkloadKind,
    #[arg(long)]
    n: usize,
    /// Number of queries of the uniform workload.
    #[arg(long, default_value_t = 2000)]
    queries: usize,
    #[arg(long, default_value_t = 5)]
    clusters: usize,
    #[arg(long, default_value_t = 400)]
    per_cluster: usize,
    /// Endpoint spread of clustered workloads [default: 256, or 1024 for large-clustered].
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DatagenArgs {
    /// constant | piecewise_constant | heavy_tail
    #[arg(long)]
    kind: SyntheticKind,
    #[arg(long)]
    n: usize,
    /// Cell value of constant data.
    #[arg(long, default_value_t = 5)]
    value: u64,
    /// Number of uniform runs of piecewise-constant data.
    #[arg(long, default_value_t = 8)]
    segments: usize,
    /// Target total count.
    #[arg(long, default_value_t = 100_000)]
    scale: u64,
    /// Pareto shape of heavy-tail data.
    #[arg(long, default_value_t = 1.5)]
    tail_index: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    /// Data file, one count per line.
    #[arg(long)]
    data: PathBuf,
    /// Budget for choosing the partition.
    #[arg(long)]
    eps1: f64,
    /// Budget later spent on bucket counts; sets the per-bucket charge.
    #[arg(long)]
    eps2: f64,
    /// Candidate buckets: pow2 | all
    #[arg(long, default_value = "pow2")]
    mode: CostMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise-free least-cost partition (not private).
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Workload CSV `lo,hi`.
    #[arg(long)]
    workload: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value = "dawa")]
    mechanism: MechanismName,
    #[arg(long, default_value = "pow2")]
    mode: CostMode,
    #[arg(long, default_value_t = 2)]
    branching: usize,
    /// Share of epsilon spent on partitioning.
    #[arg(long, default_value_t = PrivacyBudget::DEFAULT_PARTITION_SHARE)]
    partition_share: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the scaled query tree as CSV `lo,hi,depth,c_q` (dawa only).
    #[arg(long)]
    dump_tree: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpatialArgs {
    /// Points CSV `x,y`.
    #[arg(long)]
    points: PathBuf,
    /// Rectangles CSV `xlo,xhi,ylo,yhi` in the points' units.
    #[arg(long)]
    rects: PathBuf,
    #[arg(long)]
    epsilon: f64,
    /// Bins per axis are 2^g.
    #[arg(long, default_value_t = 10)]
    g: u32,
    #[arg(long, default_value = "dawa")]
    mechanism: MechanismName,
    #[arg(long, default_value = "pow2")]
    mode: CostMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV `xlo,xhi,ylo,yhi,estimate,exact`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_data(path: &Path) -> Result<dawa::DataVector> {
    dio::read_data(path).with_context(|| format!("reading data from {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let report = run_experiment(&cfg)?;
            match out {
                Some(p) => report_emit(&report, &p)?,
                None => output(&None)?.write_all(report.to_json()?.as_bytes())?,
            }
        }
        Command::Workload(a) => {
            let params = WorkloadParams {
                queries: a.queries,
                clusters: a.clusters,
                per_cluster: a.per_cluster,
                sigma: a.sigma,
            };
            let w = gen_workload(a.kind, a.n, &params, a.seed)?;
            dio::write_workload(&w, output(&a.out)?)?;
        }
        Command::Datagen(a) => {
            let params = SyntheticParams {
                value: a.value,
                segments: a.segments,
                scale: a.scale,
                tail_index: a.tail_index,
            };
            let x = gen_synthetic_data(a.kind, a.n, &params, a.seed)?;
            let mut out = output(&a.out)?;
            dio::write_data(&x, &mut out)?;
            out.flush()?;
        }
        Command::Partition(a) => {
            let x = read_data(&a.data)?;
            let p = if a.exact {
                exact_partition(&x, a.eps2, a.mode)?
            } else {
                let params = PartitionParams::new(a.eps1, a.eps2, a.mode);
                private_partition(&x, &params, &mut RngStream::new(a.seed))?
            };
            dio::write_partition(&p, output(&a.out)?)?;
        }
        Command::Estimate(a) => {
            let x = read_data(&a.data)?;
            let w = dio::read_workload(&a.workload, x.len())
                .with_context(|| format!("reading workload from {}", a.workload.display()))?;
            let budget = PrivacyBudget::with_share(a.epsilon, a.partition_share)?;
            let mut rng = RngStream::new(a.seed);
            let est = if a.mechanism == MechanismName::Dawa {
                let trace = run_dawa_traced(&x, &w, &budget, a.mode, a.branching, &mut rng)?;
                if let Some(p) = &a.dump_tree {
                    trace.strategy.tree.write_csv(BufWriter::new(File::create(p)?))?;
                }
                trace.estimate
            } else {
                anyhow::ensure!(a.dump_tree.is_none(), "--dump-tree requires --mechanism dawa");
                let cfg = MechanismConfig {
                    name: a.mechanism,
                    budget,
                    mode: a.mode,
                    branching: a.branching,
                };
                cfg.run(&x, &w, &mut rng)?
            };
            let mut out = output(&a.out)?;
            for v in est.values() {
                writeln!(out, "{v}")?;
            }
            out.flush()?;
        }
        Command::Spatial(a) => {
            let points = dio::read_points(&a.points)?;
            let raw = dio::read_rectangles(&a.rects)?;
            let spec = GridSpec::bounding(&points, a.g)?;
            let map = HilbertMap::new(a.g)?;
            let x = linearize(&grid_discretize(&points, &spec)?, &map)?;
            let rects = raw
                .iter()
                .map(|r| RectangleQuery::from_real(&spec, r[0], r[1], r[2], r[3]))
                .collect::<dawa::Result<Vec<_>>>()?;
            let w = rectangles_workload(&rects, &map)?;
            let cfg = MechanismConfig {
                name: a.mechanism,
                budget: PrivacyBudget::new(a.epsilon)?,
                mode: a.mode,
                branching: 2,
            };
            let est = cfg.run(&x, &w, &mut RngStream::new(a.seed))?;
            let truth = x.to_estimate();
            let mut out = output(&a.out)?;
            writeln!(out, "xlo,xhi,ylo,yhi,estimate,exact")?;
            for (r, q) in raw.iter().zip(&rects) {
                let e = answer_rectangle(&est, q, &map)?;
                let t = answer_rectangle(&truth, q, &map)?;
                writeln!(out, "{},{},{},{},{e},{t}", r[0], r[1], r[2], r[3])?;
            }
            out.flush()?;
        }
    }
    Ok(())
}
