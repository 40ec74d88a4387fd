//! Process exit statuses.
//!
//! | status | meaning |
//! |---|---|
//! | 0 | success |
//! | 1 | runtime failure (provider, I/O on outputs) |
//! | 2 | bad input: missing or malformed files, invalid flags or settings |
//! | 3 | `--fail-if-delta-above` threshold exceeded |
//! | 4 | partial result written; some items failed |

use std::fmt;

use myopic_core::{CorpusError, EvalError};

pub const RUNTIME: i32 = 1;
pub const INPUT: i32 = 2;
pub const THRESHOLD: i32 = 3;
pub const PARTIAL: i32 = 4;

#[derive(Debug)]
pub struct InputError(String);

impl InputError {
    pub fn new(message: impl Into<String>) -> Self {
        Self(message.into())
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug)]
pub struct ThresholdExceeded {
    pub delta: f64,
    pub limit: f64,
}

impl fmt::Display for ThresholdExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "head-tail delta {:.4} exceeds the limit {:.4}", self.delta, self.limit)
    }
}

impl std::error::Error for ThresholdExceeded {}

#[derive(Debug)]
pub struct PartialFailure(pub String);

impl fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for PartialFailure {}

pub fn code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<ThresholdExceeded>() {
            return THRESHOLD;
        }
        if cause.is::<PartialFailure>() {
            return PARTIAL;
        }
        if cause.is::<InputError>() || cause.is::<CorpusError>() || cause.is::<EvalError>() {
            return INPUT;
        }
    }
    RUNTIME
}
