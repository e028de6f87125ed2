use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum Error {
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("quadrature degree {0} exceeds the supported maximum {1}")]
    QuadratureDegree(usize, usize),
    #[error("unknown domain '{0}'")]
    UnknownDomain(String),
    #[error("degenerate geometry on element {element}: {detail}")]
    Geometry { element: usize, detail: String },
    #[error("inverse map failed to converge on element {element} for point ({x}, {y})")]
    InverseMap { element: usize, x: f64, y: f64 },
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("singular local system ({context}) on element {element:?} (c_h = {c_h:?})")]
    SingularSystem {
        context: String,
        element: Option<usize>,
        c_h: Option<f64>,
    },
    #[error("no admissible blending parameter for order {0}")]
    NoAdmissibleT(usize),
    #[error("linear solver failure: {0}")]
    Solver(String),
    #[error("root finding failed: {0}")]
    NoRoot(String),
    #[error("point ({0}, {1}) is outside the mesh")]
    PointOutside(f64, f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
