//! HTTP client for the model-server wire protocol, NLL windowing,
//! throughput accounting, and an in-process stub server.

mod client;
pub mod conformance;
mod nll;
pub mod stub;
mod throughput;
pub mod wire;

use thiserror::Error;

pub use client::{
    choose_label, run_ordered, ClientConfig, Clock, Generation, InferenceClient, NllOutcome, Ranking,
    SegmentNll, TieBreak, BACKEND_URL_ENV,
};
pub use nll::{plan_nll_windows, NllWindowPlan, Segment, DEFAULT_STRIDE, DEFAULT_WINDOW};
pub use throughput::{measure_throughput, throughput_cell, ThroughputStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("server returned status {0}")]
    Server(u16),
    #[error("no labels to rank")]
    EmptyLabelSet,
    #[error("label {0:?} given twice")]
    DuplicateLabel(String),
    #[error("invalid window {window} / stride {stride}: need 0 < stride <= window")]
    InvalidStride { window: usize, stride: usize },
    #[error("text has no tokens")]
    EmptyText,
    #[error("wall time is zero")]
    ZeroWallTime,
}

impl InferenceError {
    /// Transient transport failures that are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        matches!(self, InferenceError::Timeout | InferenceError::Connect(_))
    }
}
