//! Benchmark descriptors, their on-disk data, and translation direction
//! enumeration.

mod descriptor;
mod directions;
mod samples;

use std::path::PathBuf;

use thiserror::Error;

use crate::langid::LanguageTag;

pub use descriptor::{
    load_registry, AlignmentMode, BenchmarkDescriptor, DataFormat, TaskKind, DEFAULT_STOP,
    FIELD_ROLES,
};
pub use directions::{declared_directions, enumerate_directions, Direction, DirectionMode};
pub use samples::{
    corpus_lines, load_direction_samples, load_label_samples, load_samples, Gender, Sample,
};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{}: field `{field}`: {reason}", file.display())]
    SchemaViolation { file: PathBuf, field: String, reason: String },
    #[error("duplicate benchmark id {0:?}")]
    DuplicateId(String),
    #[error("missing data file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("benchmark {benchmark}: parallel files differ in length: {counts:?}")]
    RaggedParallelData { benchmark: String, counts: Vec<(String, usize)> },
    #[error("{}:{line}: malformed row: {reason}", file.display())]
    MalformedRow { file: PathBuf, line: usize, reason: String },
    #[error("benchmark {benchmark} has no subset aligned to {tag}")]
    TagNotInBenchmark { benchmark: String, tag: LanguageTag },
    #[error("pivot {pivot} is not among the languages of benchmark {benchmark}")]
    PivotNotInBenchmark { benchmark: String, pivot: LanguageTag },
    #[error("benchmark {0} is not a translation benchmark")]
    NotATranslationBenchmark(String),
    #[error("direction source and target are both {0}")]
    DegenerateDirection(LanguageTag),
}
