use thiserror::Error;

/// Errors raised anywhere in the mesh → assembly → solve → sensitivity pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("msh parse error at line {line}: {msg}")]
    MshParse { line: usize, msg: String },
    #[error("msh file uses binary encoding, only ASCII 4.1 is supported")]
    MshBinary,
    #[error("unsupported msh version {0:?}, expected \"4.1 0 8\"")]
    MshVersion(String),
    #[error("unsupported element type {kind} (element {element})")]
    UnsupportedElement { kind: i64, element: i64 },
    #[error("liner triangle {element} does not coincide with any tetrahedron face")]
    LinerNotConforming { element: i64 },
    #[error("electrode segment {element} of electrode {electrode} is not a tetrahedron edge")]
    ElectrodeNotConforming { electrode: usize, element: i64 },
    #[error("missing physical group {0:?}")]
    MissingGroup(String),

    #[error("invalid mesh request: {0}")]
    MeshSpec(String),
    #[error("degenerate cell {cell} in {dim}d grid: measure {measure:e} below tolerance")]
    DegenerateCell { dim: usize, cell: usize, measure: f64 },
    #[error("grid geometry has not been computed")]
    NoGeometry,
    #[error("liner cell {0} is not an interior face of the 3d grid")]
    LinerOnBoundary(usize),
    #[error("electrode {electrode} cell {cell} has no host tetrahedron")]
    ElectrodeOutside { electrode: usize, cell: usize },
    #[error("mortar interfaces have not been built")]
    MissingMortars,

    #[error("invalid material: {0}")]
    Material(String),
    #[error("size mismatch: {what} has {got} entries, expected {expected}")]
    SizeMismatch { what: &'static str, got: usize, expected: usize },
    #[error("index out of range: {what} {index} (have {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },

    #[error("singular system: unknown {dof} ({block}) {reason}")]
    Singular { dof: usize, block: &'static str, reason: String },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("solve produced non-finite values")]
    NonFinite,

    #[error("invalid configuration: {0}")]
    Quadrupole(String),
    #[error("coincident points in analytic evaluation")]
    CoincidentPoints,
    #[error("degenerate electrode geometry: geometric factor is unbounded")]
    DegenerateGeometry,
    #[error("field normalization mismatch: {0}")]
    Normalization(String),
    #[error("finite-difference step invalid: {0}")]
    FdStep(String),

    #[error("point {0:?} is outside every cell")]
    PointOutside([f64; 3]),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("field file error: {0}")]
    FieldFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
