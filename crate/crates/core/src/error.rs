// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("attachment offsets must be positive (got {name} = {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("change points must be strictly increasing inside (0, 1)")]
    UnorderedChangePoints,
    #[error("tree size {n} is too small (need at least {min})")]
    SizeTooSmall { n: usize, min: usize },
    #[error("requested {k} largest degrees from a tree with {n} vertices")]
    KTooLarge { k: usize, n: usize },
    #[error("degree must be at least 1 (got {0})")]
    InvalidK(u64),
    #[error("truncation horizon must be positive (got {0})")]
    NonPositiveA(f64),
    #[error("time {t} outside the admissible range ({lo}, {hi}]")]
    HorizonOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("schedule has no change point")]
    NoChangePoint,
    #[error("operation supports a single change point, schedule has {0}")]
    MultipleChangePoints(usize),
    #[error("schedule has no segments")]
    NoSegments,
    #[error("only {found} mass points in the fit window, need {needed}")]
    InsufficientSupport { found: usize, needed: usize },
    #[error("index {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },
    #[error("trajectory does not cover the requested horizon")]
    MissingTrajectory,
    #[error("no steps fall in the averaging window at t = {0}")]
    EmptyWindow(f64),
    #[error("t = {t} outside ({eps}, 1)")]
    TOutOfRange { t: f64, eps: f64 },
    #[error("curve is empty")]
    EmptyCurve,
    #[error("bad interval [{s}, {t}]")]
    BadInterval { s: f64, t: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
