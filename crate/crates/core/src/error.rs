use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-manifold edge ({a}, {b}): {count} incident triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("inconsistent orientation at edge ({a}, {b})")]
    InconsistentOrientation { a: usize, b: usize },

    #[error("degenerate triangle {index}: area {area:e} below {eps:e}")]
    DegenerateTriangle { index: usize, area: f64, eps: f64 },

    #[error("triangle {index} references vertex {vertex} of {count}")]
    VertexOutOfRange { index: usize, vertex: usize, count: usize },

    #[error("antipodal points on the sphere ({context})")]
    Antipodal { context: String },

    #[error("inverted or flat tetrahedron {index} (signed volume {volume:e})")]
    InvertedTet { index: usize, volume: f64 },

    #[error("boundary facet {facet:?} has no Γ₁/Γ₂ tag")]
    UntaggedBoundary { facet: [usize; 3] },

    #[error("tagged triangle {facet:?} is not a boundary facet of the volume mesh")]
    StrayTag { facet: [usize; 3] },

    #[error("interface surface is not closed: {0}")]
    InterfaceNotClosed(String),

    #[error("mesh quality {quality:.3e} below threshold {threshold:.3e}")]
    MeshCorrupted { quality: f64, threshold: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("conjugate gradients did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("source patch {patch} is empty; reduce r or refine Γ₂")]
    EmptyPatch { patch: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Errors that signal a geometrically unusable trial configuration, as
    /// opposed to a bug or an IO failure. Line searches reject such trials.
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            Error::DegenerateTriangle { .. }
                | Error::InvertedTet { .. }
                | Error::MeshCorrupted { .. }
                | Error::Antipodal { .. }
        )
    }
}
