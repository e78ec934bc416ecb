// SPDX-License-Identifier: MIT OR Apache-2.0

//! Preferential attachment trees whose attachment offset switches at one or
//! more change points.
//!
//! The crate is `no_std` (with `alloc`) and contains only the algorithms:
//!
//! * [`schedule`]: change-point schedules and segment lookup.
//! * [`rng`]: seeded, stream-addressable randomness.
//! * [`tree`]: O(1)-per-vertex tree generation and degree statistics.
//! * [`embed`]: the continuous-time embedding (holding times, after-change
//!   duration and its Gaussian limit).
//! * [`limits`]: limiting degree laws, point-process samplers and tail fits.
//! * [`leaves`]: the leaf-proportion limit curve, exact expectations and the
//!   fluctuation scale functions.
//! * [`estimator`]: the offline change-point estimator and its population
//!   limit.
//!
//! File formats, the command-line harness and parallel ensembles live in the
//! `pachange` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod embed;
pub mod error;
pub mod estimator;
pub mod leaves;
pub mod limits;
pub(crate) mod math;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use rng::SeededRng;
pub use schedule::{ChangePointSchedule, Segment};
pub use tree::{DegreeHistogram, GrowingTree, RecordOptions};
