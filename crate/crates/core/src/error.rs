use thiserror::Error;

/// Errors raised by the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("pattern length {0} is out of range")]
    PatternLength(usize),
    #[error("pattern id {id} is out of range for length {len}")]
    PatternIdOutOfRange { id: u64, len: usize },
    #[error("invalid pattern string {0:?}")]
    InvalidPattern(String),

    #[error("newick syntax error at byte {pos}: {msg}")]
    NewickSyntax { pos: usize, msg: String },
    #[error("interior node has degree {0}; only trivalent trees are supported")]
    NotTrivalent(usize),
    #[error("duplicate leaf label {0}")]
    DuplicateLeaf(u32),
    #[error("leaf labels must be 1..={n}; label {label} is missing")]
    MissingLeaf { n: usize, label: u32 },
    #[error("tree needs at least 3 leaves, got {0}")]
    TooFewLeaves(usize),
    #[error("leaf count {n} is outside the supported range {min}..={max}")]
    LeafCountOutOfRange { n: usize, min: usize, max: usize },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("leaves {0} and {1} do not form a cherry")]
    NotACherry(u32, u32),

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("vector length {0} is not a power of 4")]
    NotPowerOfFour(usize),
    #[error("edge {edge} parameters are not stochastic: {reason}")]
    NotStochastic { edge: usize, reason: String },
    #[error("sign action covers {got} interior nodes, tree has {expected}")]
    ActionMismatch { expected: usize, got: usize },

    #[error("off-slice pattern {0} has no edge assignment")]
    OffSlice(String),
    #[error("the hyperplane generator has no monomial image to compare")]
    HyperplaneGenerator,
    #[error("invariant set is malformed: {0}")]
    MalformedSet(String),

    #[error("fasta: {0}")]
    Fasta(String),
    #[error("alignment has no usable columns")]
    EmptyAlignment,
    #[error("q at the all-A pattern is {0}, expected 1 (unnormalized input)")]
    Unnormalized(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
