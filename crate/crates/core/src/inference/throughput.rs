use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::InferenceError;

/// Generated tokens and the wall time spent producing them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThroughputStats {
    pub tokens: u64,
    pub seconds: f64,
}

impl ThroughputStats {
    pub fn record(&mut self, tokens: usize, wall_time: Duration) {
        self.tokens += tokens as u64;
        self.seconds += wall_time.as_secs_f64();
    }

    pub fn merge(&mut self, other: &ThroughputStats) {
        self.tokens += other.tokens;
        self.seconds += other.seconds;
    }
}

pub fn measure_throughput(stats: &ThroughputStats) -> Result<f64, InferenceError> {
    if stats.seconds.is_nan() || stats.seconds <= 0.0 {
        return Err(InferenceError::ZeroWallTime);
    }
    Ok(stats.tokens as f64 / stats.seconds)
}

/// `tokens / seconds = tokens/s`, seconds and rate with two decimals.
pub fn throughput_cell(stats: &ThroughputStats) -> Result<String, InferenceError> {
    let tps = measure_throughput(stats)?;
    Ok(format!("{} / {:.2} = {:.2}", stats.tokens, stats.seconds, tps))
}
