use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("degenerate policy: no action has positive probability in state {state}")]
    DegeneratePolicy { state: String },

    #[error("support violation in episode {episode}, step {step}: pi_e = {pi_e}, behavior probability = {behavior_prob}")]
    SupportViolation {
        episode: usize,
        step: usize,
        pi_e: f64,
        behavior_prob: f64,
    },

    #[error("invalid probability in episode {episode}, step {step}: {value}")]
    InvalidProbability {
        episode: usize,
        step: usize,
        value: f64,
    },

    #[error("non-terminating ARP: linear system is singular (pivot {pivot:e} at row {row})")]
    NonTerminating { row: usize, pivot: f64 },

    #[error("insufficient distinct states: {distinct} distinct, {requested} clusters requested")]
    InsufficientDistinctStates { distinct: usize, requested: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("group {key} has {count} trials; at least 2 are required")]
    TooFewTrials { key: String, count: usize },

    #[error("oracle too noisy: stderr {stderr} exceeds 1% of |truth| = {truth}")]
    NoisyOracle { truth: f64, stderr: f64 },

    #[error("trial (n = {n}, trial = {trial}) failed: {source}")]
    Trial {
        n: usize,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
