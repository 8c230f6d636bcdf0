use std::path::PathBuf;

use thiserror::Error;

use crate::geom::{Coord, Openings};

/// Errors raised while ticking a tree.
///
/// These are structural or configuration problems. Domain outcomes such as
/// "no segment matches" surface as [`Status::Failure`](crate::bt::Status)
/// instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown {kind} executor: {name}")]
    UnknownExecutor { kind: &'static str, name: String },
    #[error("malformed node: {0}")]
    MalformedNode(String),
    #[error("tick budget exhausted after {ticks} ticks without meeting the stop condition")]
    TickBudgetExhausted { ticks: u64 },
    #[error("root returned RUNNING in single-tick mode")]
    RunningAtCompletion,
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("attribute :{key}: {message}")]
    Attribute { key: String, message: String },
    #[error("blackboard entry {key:?} holds a {found}, expected {expected}")]
    BlackboardType {
        key: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("cell {0} is already occupied")]
    CellOccupied(Coord),
    #[error("unknown segment id: {0}")]
    UnknownSegmentId(String),
    #[error("unknown game: {0}")]
    UnknownGame(String),
    #[error("no :game given and the library holds {0} games")]
    AmbiguousGame(usize),
    #[error("start room already generated")]
    StartRoomExists,
    #[error("no dungeon layout on the blackboard")]
    NoLayout,
    #[error("no {game} segment with openings {{{want}}}")]
    NoMatch { game: String, want: Openings },
    #[error("level mixes segment sizes {first:?} and {other:?}")]
    MixedDimensions {
        first: (usize, usize),
        other: (usize, usize),
    },
    #[error("level map is empty")]
    EmptyLevel,
}

/// Errors raised while loading a segment library.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {message}")]
    ManifestParse { path: PathBuf, message: String },
    #[error("{0}: invalid manifest: {1}")]
    InvalidManifest(String, String),
    #[error("segment {id}: expected {expected:?} (rows, cols), found {found:?}")]
    DimensionMismatch {
        id: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("duplicate segment id: {0}")]
    DuplicateId(String),
    #[error("game {0} is declared by more than one manifest")]
    DuplicateGame(String),
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
