//! Sphere node graphs (SN-Graphs) from triangle meshes.
//!
//! The pipeline normalizes a mesh into the unit box, voxelizes and fills it,
//! computes an exact signed distance field, picks interior spheres with a
//! max-min rule that favors well-spread, large spheres, connects them with
//! rule-based edges and emits per-node features.
//!
//! ```no_run
//! use sngraph::pipeline::{run_pipeline, PipelineConfig};
//!
//! let out = run_pipeline("chair_0001.off", &PipelineConfig::default()).unwrap();
//! println!("{} nodes, {} edges", out.graph.nodes.len(), out.graph.edges.len());
//! ```

pub mod error;
pub mod features;
pub mod grapher;
pub mod io;
pub mod mesh;
pub mod pipeline;
pub mod sampler;
pub mod sdf;
pub mod shapes;
pub mod voxel;

pub use error::{Error, Result};
pub use features::{extract_adr, extract_pr, FeatureKind, FeatureMatrix, FeatureSet};
pub use grapher::{build_graph, GraphParams, SnGraph};
pub use mesh::{load_mesh, normalize_mesh, TriangleMesh};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
pub use sampler::{select_fss, select_spheres, SamplerMethod, Selection, SphereNode};
pub use sdf::{compute_sdf, SdfGrid};
pub use voxel::{solidify, voxelize_surface, VoxelGrid};
