use thiserror::Error;

/// Errors surfaced by parsing, problem construction and search.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown residue '{ch}' in record {record} at offset {offset}")]
    UnknownResidue {
        record: String,
        offset: usize,
        ch: char,
    },

    #[error("record {0} has no residues")]
    EmptyRecord(String),

    #[error("input contains no FASTA records")]
    NoRecords,

    #[error("malformed FASTA: {0}")]
    MalformedFasta(String),

    #[error("cost matrix line {line}: {msg}")]
    MatrixFormat { line: usize, msg: String },

    #[error("cost matrix is not symmetric at ({a},{b})/({b},{a})")]
    AsymmetricMatrix { a: char, b: char },

    #[error("negative penalty {value} in cost model")]
    NegativePenalty { value: i64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("memory budget exceeded: {0}")]
    MemoryBudget(String),

    #[error("no alignment with cost at most {upper} found")]
    NoSolution { upper: i64 },

    #[error("instance too large for dense evaluation: {edges} edges (limit {limit})")]
    TooLarge { edges: u128, limit: u128 },

    #[error("path enumeration exceeded {0} paths")]
    TooManyPaths(usize),

    #[error("solution reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("spill file: {0}")]
    Spill(String),
}

pub type Result<T> = std::result::Result<T, Error>;
