use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed mesh file (line {line}): {msg}")]
    MalformedMesh { line: usize, msg: String },

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("degenerate mesh: bounding box has zero extent")]
    DegenerateMesh,

    #[error("voxel resolution {0} is below the minimum of 4")]
    ResolutionTooSmall(usize),

    #[error("mesh is not normalized: coordinate {0} lies outside [-0.5, 0.5]")]
    NotNormalized(f64),

    #[error("object has no interior voxels")]
    EmptyInterior,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("graph file format error: {0}")]
    Format(String),

    #[error("unsupported graph file version {0}")]
    Version(u64),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
