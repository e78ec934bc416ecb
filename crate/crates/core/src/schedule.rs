// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point schedules.
//!
//! A schedule is an initial offset `alpha` plus an ordered list of segments
//! `(gamma_i, beta_i)`: once the tree has more than `floor(gamma_i * n)`
//! vertices, new vertices attach with offset `beta_i`. An empty list is the
//! classical model without a change point.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::floor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Fraction of the final size after which this segment starts.
    pub gamma: f64,
    /// Attachment offset used inside the segment.
    pub beta: f64,
}

impl Segment {
    pub const fn new(gamma: f64, beta: f64) -> Self {
        Self { gamma, beta }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointSchedule {
    alpha: f64,
    segments: Vec<Segment>,
}

impl ChangePointSchedule {
    /// Builds and validates a schedule. Offsets must be strictly positive.
    pub fn new(alpha: f64, segments: Vec<Segment>) -> Result<Self> {
        validate_schedule(Self { alpha, segments })
    }

    /// Like [`new`](Self::new) but also admits zero offsets, i.e. attachment
    /// proportional to the plain degree. The limit laws stay well defined at
    /// zero, which makes this boundary case useful for cross-checks.
    pub fn with_zero_offsets(alpha: f64, segments: Vec<Segment>) -> Result<Self> {
        let s = Self { alpha, segments };
        s.check(true)?;
        Ok(s)
    }

    /// The main single change-point model `(alpha, beta, gamma)`.
    pub fn single(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::new(alpha, alloc::vec![Segment::new(gamma, beta)])
    }

    pub fn no_change(alpha: f64) -> Result<Self> {
        Self::new(alpha, Vec::new())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn num_change_points(&self) -> usize {
        self.segments.len()
    }

    /// `(gamma, beta)` of a schedule with exactly one change point.
    pub fn single_change_point(&self) -> Result<(f64, f64)> {
        match self.segments.as_slice() {
            [] => Err(Error::NoChangePoint),
            [s] => Ok((s.gamma, s.beta)),
            more => Err(Error::MultipleChangePoints(more.len())),
        }
    }

    /// Offset of segment `j` (segment 0 is the initial `alpha`).
    pub fn offset(&self, j: usize) -> f64 {
        if j == 0 {
            self.alpha
        } else {
            self.segments[j - 1].beta
        }
    }

    /// Step indices `floor(gamma_i * n)` after which each segment starts.
    pub fn change_steps(&self, n: usize) -> Vec<usize> {
        self.segments
            .iter()
            .map(|s| floor(s.gamma * n as f64) as usize)
            .collect()
    }

    /// Segment index and active offset for step `m` of a tree of final size
    /// `n`: the `j` with `floor(gamma_j n) < m <= floor(gamma_{j+1} n)`.
    pub fn segment_of(&self, m: usize, n: usize) -> (usize, f64) {
        debug_assert!(1 <= m && m <= n);
        let j = self
            .segments
            .iter()
            .take_while(|s| (floor(s.gamma * n as f64) as usize) < m)
            .count();
        (j, self.offset(j))
    }

    fn check(&self, allow_zero: bool) -> Result<()> {
        let bad = |v: f64| !(v > 0.0 || (allow_zero && v == 0.0)) || !v.is_finite();
        if bad(self.alpha) {
            return Err(Error::NonPositiveParameter {
                name: "alpha",
                value: self.alpha,
            });
        }
        for s in &self.segments {
            if bad(s.beta) {
                return Err(Error::NonPositiveParameter {
                    name: "beta",
                    value: s.beta,
                });
            }
        }
        let mut prev = 0.0;
        for s in &self.segments {
            if !(s.gamma > prev && s.gamma < 1.0) {
                return Err(Error::UnorderedChangePoints);
            }
            prev = s.gamma;
        }
        Ok(())
    }
}

/// Returns the schedule unchanged when every invariant holds.
pub fn validate_schedule(schedule: ChangePointSchedule) -> Result<ChangePointSchedule> {
    schedule.check(false)?;
    Ok(schedule)
}

/// Walks the segments of a run of final size `n` in step order; cheaper than
/// calling [`ChangePointSchedule::segment_of`] once per step.
#[derive(Debug, Clone)]
pub(crate) struct SegmentCursor<'a> {
    schedule: &'a ChangePointSchedule,
    steps: Vec<usize>,
    current: usize,
}

impl<'a> SegmentCursor<'a> {
    pub(crate) fn new(schedule: &'a ChangePointSchedule, n: usize) -> Self {
        Self {
            schedule,
            steps: schedule.change_steps(n),
            current: 0,
        }
    }

    /// Offset for step `m`; `m` must not decrease between calls.
    #[inline]
    pub(crate) fn offset_at(&mut self, m: usize) -> f64 {
        while self.current < self.steps.len() && self.steps[self.current] < m {
            self.current += 1;
        }
        self.schedule.offset(self.current)
    }
}
