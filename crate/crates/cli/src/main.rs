use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sngraph::features::FeatureSet;
use sngraph::grapher::GraphParams;
use sngraph::io::{read_graph, write_ply, GraphFile};
use sngraph::pipeline::{
    process_dataset, resolve_jobs, run_pipeline, DatasetOptions, OutputFormat, PipelineConfig,
    ThresholdUnits,
};
use sngraph::sampler::SamplerMethod;
use sngraph::shapes;

const THREADS_ENV: &str = "SNGRAPH_THREADS";

#[derive(Parser)]
#[command(name = "sngraph", version, about = "Convert triangle meshes into sphere node graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert one mesh file into a graph file.
    Convert {
        input: PathBuf,
        /// Output path; defaults to the input path with the format's extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Convert a <class>/<split>/<file> tree and write manifest.csv.
    Dataset {
        root: PathBuf,
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Keep graph files that already exist.
        #[arg(long)]
        skip_existing: bool,
    },
    /// Print statistics of a graph file (JSON or binary).
    Inspect { input: PathBuf },
    /// Write a graph file as ASCII PLY.
    ExportPly { input: PathBuf, output: PathBuf },
    /// Write the built-in sample meshes as OFF files.
    Samples { out: PathBuf },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    /// Number of sphere nodes.
    #[arg(long = "nodes", short = 'n', default_value_t = 32)]
    nodes: usize,
    /// Degree cap.
    #[arg(long, default_value_t = 6)]
    q: usize,
    /// Samples per edge.
    #[arg(long, default_value_t = 10)]
    p: usize,
    /// Outside threshold on the SDF.
    #[arg(long = "t-d", default_value_t = 0.05)]
    t_d: f64,
    /// Maximum outside fraction of an edge.
    #[arg(long = "t-p", default_value_t = 0.7)]
    t_p: f64,
    /// nodesphere | fss
    #[arg(long, default_value = "nodesphere")]
    sampler: SamplerMethod,
    /// none | pr | adr | both
    #[arg(long, default_value = "both")]
    features: FeatureSet,
    /// json | binary | ply
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    /// Units of --t-d: normalized | voxel
    #[arg(long = "threshold-units", default_value = "normalized")]
    threshold_units: ThresholdUnits,
    /// Worker threads (capped by SNGRAPH_THREADS).
    #[arg(long)]
    jobs: Option<usize>,
}

impl ConfigArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            resolution: self.resolution,
            nodes: self.nodes,
            params: GraphParams {
                p: self.p,
                t_d: self.t_d,
                t_p: self.t_p,
                q: self.q,
            },
            sampler: self.sampler,
            features: self.features,
            format: self.format,
            threshold_units: self.threshold_units,
        }
    }

    fn jobs(&self) -> usize {
        resolve_jobs(self.jobs, std::env::var(THREADS_ENV).ok().as_deref())
    }
}

fn init_pool(jobs: usize) {
    // only fails if a global pool already exists
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
}

fn inspect(input: &PathBuf) -> Result<()> {
    let f = read_graph(input).with_context(|| format!("reading {}", input.display()))?;
    let g = f.to_graph();
    let degrees = g.degrees();
    let n = f.nodes.len();
    println!("file:        {}", input.display());
    if let Some(m) = &f.meta {
        println!("source:      {}", m.source_id);
        println!("resolution:  {}", m.resolution);
        println!("sampler:     {}", m.sampler);
        println!("nodes:       {} (requested {})", m.achieved_n, m.requested_n);
        println!(
            "params:      p={} t_d={} t_p={} q={}",
            m.params.p, m.params.t_d, m.params.t_p, m.params.q
        );
    } else {
        println!("nodes:       {n}");
    }
    println!("edges:       {} ({} forced onto isolated nodes)", f.edges.len(), f.rule4_edges.len());
    if n > 0 {
        let (lo, hi) = (degrees.iter().min().unwrap(), degrees.iter().max().unwrap());
        let mean = degrees.iter().sum::<usize>() as f64 / n as f64;
        println!("degree:      min {lo} max {hi} mean {mean:.2}");
        let (rmin, rmax) = f
            .nodes
            .iter()
            .fold((f32::INFINITY, 0f32), |(a, b), n| (a.min(n.r), b.max(n.r)));
        println!("radius:      min {rmin} max {rmax}");
    }
    let feats: Vec<&str> = [
        f.features.pr.as_ref().map(|_| "pr"),
        f.features.adr.as_ref().map(|_| "adr"),
    ]
    .into_iter()
    .flatten()
    .collect();
    println!("features:    {}", if feats.is_empty() { "none".into() } else { feats.join(", ") });
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Convert { input, output, cfg } => {
            init_pool(cfg.jobs());
            let config = cfg.config();
            let out = run_pipeline(&input, &config)
                .with_context(|| format!("converting {}", input.display()))?;
            let path = output.unwrap_or_else(|| input.with_extension(config.format.extension()));
            out.write(&path, config.format)?;
            log::info!(
                "{}: {} nodes, {} edges -> {}",
                input.display(),
                out.graph.nodes.len(),
                out.graph.edges.len(),
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Dataset {
            root,
            out,
            cfg,
            skip_existing,
        } => {
            let opts = DatasetOptions {
                jobs: cfg.jobs(),
                skip_existing,
            };
            let report = process_dataset(&root, &out, &cfg.config(), &opts)
                .with_context(|| format!("processing {}", root.display()))?;
            println!(
                "converted {} files ({} reused), {} failed",
                report.manifest.rows.len(),
                report.skipped,
                report.failures.len()
            );
            for (p, msg) in &report.failures {
                eprintln!("failed: {p}: {msg}");
            }
            Ok(if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Inspect { input } => {
            inspect(&input)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportPly { input, output } => {
            let f: GraphFile = read_graph(&input).with_context(|| format!("reading {}", input.display()))?;
            write_ply(&f, &output)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Samples { out } => {
            std::fs::create_dir_all(&out)?;
            for (name, mesh) in shapes::catalog() {
                mesh.write_off(out.join(format!("{name}.off")))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
