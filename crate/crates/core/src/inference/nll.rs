use serde::{Deserialize, Serialize};

use super::InferenceError;

pub const DEFAULT_WINDOW: usize = 1024;
pub const DEFAULT_STRIDE: usize = 512;

/// One model call: tokens `[start, end)` are in context, and only
/// `[scored_from, end)` contribute to the total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub scored_from: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NllWindowPlan {
    pub window: usize,
    pub stride: usize,
    pub segments: Vec<Segment>,
}

/// Strided sliding windows over `n_tokens`. Segment `i` spans
/// `[i*stride, min(i*stride + window, n))`; after the first, each scores
/// only the tokens past the previous segment's end, so the scored ranges
/// partition `[0, n)`.
pub fn plan_nll_windows(n_tokens: usize, window: usize, stride: usize) -> Result<NllWindowPlan, InferenceError> {
    if stride == 0 || window == 0 || stride > window {
        return Err(InferenceError::InvalidStride { window, stride });
    }
    if n_tokens == 0 {
        return Err(InferenceError::EmptyText);
    }
    let mut segments = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + window).min(n_tokens);
        let scored_from = if start == 0 { 0 } else { (start + window - stride).min(end) };
        segments.push(Segment { start, end, scored_from });
        if end == n_tokens {
            break;
        }
        start += stride;
    }
    Ok(NllWindowPlan { window, stride, segments })
}
