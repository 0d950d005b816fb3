//! End-to-end conversion of mesh files into sphere node graphs, for single
//! files and for `<class>/<split>/<file>` dataset trees.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_adr, extract_pr, FeatureMatrix, FeatureSet};
use crate::grapher::{build_graph, GraphParams, SnGraph};
use crate::io::{self, GraphFile};
use crate::mesh::{load_mesh, normalize_mesh, TriangleMesh};
use crate::sampler::{select, SamplerMethod};
use crate::sdf::compute_sdf;
use crate::voxel::{solidify, voxelize_surface, DEFAULT_RESOLUTION};

pub const DEFAULT_NODE_COUNT: usize = 32;
pub const MANIFEST_NAME: &str = "manifest.csv";
const MESH_EXTENSIONS: [&str; 2] = ["off", "obj"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Binary,
    Ply,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Binary => "sng",
            OutputFormat::Ply => "ply",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "binary" | "sng" => Ok(OutputFormat::Binary),
            "ply" => Ok(OutputFormat::Ply),
            other => Err(Error::InvalidParam(format!("unknown output format '{other}'"))),
        }
    }
}

/// Unit of the `t_d` threshold as given by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdUnits {
    /// Fractions of the unit longest side (the SDF's own units).
    Normalized,
    /// Voxel lengths; divided by the resolution before use.
    Voxel,
}

impl FromStr for ThresholdUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normalized" => Ok(ThresholdUnits::Normalized),
            "voxel" => Ok(ThresholdUnits::Voxel),
            other => Err(Error::InvalidParam(format!("unknown threshold units '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub resolution: usize,
    pub nodes: usize,
    pub params: GraphParams,
    pub sampler: SamplerMethod,
    pub features: FeatureSet,
    pub format: OutputFormat,
    pub threshold_units: ThresholdUnits,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            nodes: DEFAULT_NODE_COUNT,
            params: GraphParams::default(),
            sampler: SamplerMethod::NodeSphere,
            features: FeatureSet::Both,
            format: OutputFormat::Json,
            threshold_units: ThresholdUnits::Normalized,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 1 {
            return Err(Error::InvalidParam("node count must be at least 1".into()));
        }
        if self.resolution < 4 {
            return Err(Error::ResolutionTooSmall(self.resolution));
        }
        self.params.validate()
    }

    /// Graph parameters with `t_d` converted to normalized units.
    pub fn effective_params(&self) -> GraphParams {
        match self.threshold_units {
            ThresholdUnits::Normalized => self.params,
            ThresholdUnits::Voxel => GraphParams {
                t_d: self.params.t_d / self.resolution as f64,
                ..self.params
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub graph: SnGraph,
    pub pr: Option<FeatureMatrix>,
    pub adr: Option<FeatureMatrix>,
}

impl PipelineOutput {
    pub fn to_file(&self) -> GraphFile {
        GraphFile::from_graph(&self.graph, self.pr.as_ref(), self.adr.as_ref())
    }

    /// Encoded bytes in the given format.
    pub fn encode(&self, format: OutputFormat) -> Result<Vec<u8>> {
        let f = self.to_file();
        Ok(match format {
            OutputFormat::Json => f.to_json_string()?.into_bytes(),
            OutputFormat::Binary => f.to_binary(),
            OutputFormat::Ply => io::ply_string(&f).into_bytes(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode(format)?).map_err(|e| Error::io(path, e))
    }
}

/// Runs every stage on an in-memory mesh (model units).
pub fn run_mesh(mesh: &TriangleMesh, source_id: &str, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let normalized = normalize_mesh(mesh)?;
    let surface = voxelize_surface(&normalized, cfg.resolution)?;
    let solid = solidify(&surface);
    let sdf = compute_sdf(&solid);
    if sdf.is_empty_object() {
        return Err(Error::EmptyInterior);
    }
    let sel = select(&sdf, cfg.nodes, cfg.sampler)?;
    if sel.achieved_n < sel.requested_n {
        log::info!(
            "{source_id}: only {} of {} nodes admissible",
            sel.achieved_n,
            sel.requested_n
        );
    }
    let mut graph = build_graph(&sel, &sdf, &cfg.effective_params())?;
    graph.meta.source_id = source_id.to_string();
    let pr = cfg.features.pr().then(|| extract_pr(&graph));
    let adr = cfg.features.adr().then(|| extract_adr(&graph));
    Ok(PipelineOutput { graph, pr, adr })
}

pub fn run_pipeline(mesh_path: impl AsRef<Path>, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let path = mesh_path.as_ref();
    let mesh = load_mesh(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    run_mesh(&mesh, &id, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    /// Mesh path relative to the dataset root, `/`-separated.
    pub path: String,
    pub label: String,
    pub split: Split,
    pub achieved_n: usize,
    /// Graph path relative to the output root.
    pub output: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestRow>, _>>()
            .map_err(|e| Error::Format(e.to_string()))?;
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = rows.iter().find(|r| !seen.insert(r.path.clone())) {
            return Err(Error::Format(format!("duplicate manifest path {}", dup.path)));
        }
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub jobs: usize,
    /// Reuse graph files that already exist instead of recomputing them.
    pub skip_existing: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            skip_existing: false,
        }
    }
}

#[derive(Debug)]
pub struct DatasetReport {
    pub manifest: DatasetManifest,
    pub failures: Vec<(String, String)>,
    pub skipped: usize,
}

/// Worker count: the request (or all cores), capped by the value of the
/// `SNGRAPH_THREADS` variable when given.
pub fn resolve_jobs(requested: Option<usize>, env_cap: Option<&str>) -> usize {
    let base = requested
        .filter(|&j| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    match env_cap.and_then(|s| s.trim().parse::<usize>().ok()).filter(|&c| c > 0) {
        Some(cap) => base.min(cap),
        None => base,
    }
}

struct DatasetEntry {
    rel: String,
    label: String,
    split: Split,
    path: PathBuf,
}

fn scan_tree(root: &Path) -> Result<Vec<DatasetEntry>> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root is not a directory"),
        ));
    }
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).min_depth(3).max_depth(3).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            Error::io(root, e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk error")))
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| MESH_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let rel = path.strip_prefix(root).unwrap();
        let parts: Vec<String> = rel.iter().map(|p| p.to_string_lossy().into_owned()).collect();
        let split = match parts[1].as_str() {
            "train" => Split::Train,
            "test" => Split::Test,
            other => {
                log::warn!("skipping {}: unknown split '{other}'", rel.display());
                continue;
            }
        };
        out.push(DatasetEntry {
            rel: parts.join("/"),
            label: parts[0].clone(),
            split,
            path: path.to_path_buf(),
        });
    }
    Ok(out)
}

fn output_rel(e: &DatasetEntry, format: OutputFormat) -> String {
    let stem = Path::new(&e.rel).with_extension(format.extension());
    stem.iter().map(|p| p.to_string_lossy()).collect::<Vec<_>>().join("/")
}

fn node_count_of(path: &Path, format: OutputFormat) -> Result<usize> {
    match format {
        OutputFormat::Json | OutputFormat::Binary => Ok(io::read_graph(path)?.nodes.len()),
        OutputFormat::Ply => {
            let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            s.lines()
                .find_map(|l| l.strip_prefix("element vertex "))
                .and_then(|n| n.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("{}: no vertex element", path.display())))
        }
    }
}

/// Converts every mesh under `root` into `out_root`, mirroring the tree,
/// and writes `out_root/manifest.csv`. Per-file failures are collected in
/// the report rather than aborting the batch.
pub fn process_dataset(
    root: impl AsRef<Path>,
    out_root: impl AsRef<Path>,
    cfg: &PipelineConfig,
    opts: &DatasetOptions,
) -> Result<DatasetReport> {
    let root = root.as_ref();
    let out_root = out_root.as_ref();
    cfg.validate()?;
    let entries = scan_tree(root)?;
    fs::create_dir_all(out_root).map_err(|e| Error::io(out_root, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParam(e.to_string()))?;

    enum Outcome {
        Done(ManifestRow, bool),
        Failed(String, String),
    }

    let outcomes: Vec<Outcome> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let rel_out = output_rel(e, cfg.format);
                let out_path = out_root.join(&rel_out);
                let row = |n| ManifestRow {
                    path: e.rel.clone(),
                    label: e.label.clone(),
                    split: e.split,
                    achieved_n: n,
                    output: rel_out.clone(),
                };
                if opts.skip_existing && out_path.is_file() {
                    if let Ok(n) = node_count_of(&out_path, cfg.format) {
                        return Outcome::Done(row(n), true);
                    }
                }
                let result = run_pipeline(&e.path, cfg).and_then(|out| {
                    if let Some(dir) = out_path.parent() {
                        fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
                    }
                    out.write(&out_path, cfg.format)?;
                    Ok(out.graph.nodes.len())
                });
                match result {
                    Ok(n) => Outcome::Done(row(n), false),
                    Err(err) => {
                        log::error!("{}: {err}", e.rel);
                        Outcome::Failed(e.rel.clone(), err.to_string())
                    }
                }
            })
            .collect()
    });

    let mut manifest = DatasetManifest::default();
    let mut failures = Vec::new();
    let mut skipped = 0;
    for o in outcomes {
        match o {
            Outcome::Done(row, was_skipped) => {
                skipped += was_skipped as usize;
                manifest.rows.push(row);
            }
            Outcome::Failed(p, msg) => failures.push((p, msg)),
        }
    }
    manifest.write_csv(out_root.join(MANIFEST_NAME))?;
    Ok(DatasetReport {
        manifest,
        failures,
        skipped,
    })
}
