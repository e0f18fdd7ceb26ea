//! Rate reporting: a simulated exchange pair exposing a cumulative-rate
//! accumulator, the two reporting windows, and TWAP.
//!
//! The pair is modelled as a piecewise-constant spot-rate path. Its
//! accumulator integrates the spot rate over time, so the difference of two
//! accumulator readings divided by their spacing is the time-weighted mean
//! rate between them.
//!
//! Each frame `[k, k + period]` has two windows sharing the boundary
//! `b = k + period - reporting_interval`: window 1 is `[k, b]`, window 2 is
//! `(b, k + period]`. A snapshot taken inside a window replaces whatever that
//! window held before.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, FrameIndex};
use crate::market::{EventBody, Market};
use crate::params::MarketParams;
use crate::{Cumulative, Rate, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PricePoint {
    pub t: Timestamp,
    pub rate: Rate,
    /// Accumulator value at `t`.
    pub cumulative: Cumulative,
}

/// Piecewise-constant spot-rate path with an exact accumulator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmmPair {
    points: Vec<PricePoint>,
}

impl AmmPair {
    pub fn new() -> Self {
        AmmPair::default()
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    /// Changes the spot rate from time `t` onwards.
    pub fn set_spot_rate(&mut self, t: Timestamp, rate: Rate) -> Result<()> {
        let cumulative = match self.points.last() {
            None => 0,
            Some(last) if t <= last.t => {
                return Err(Error::NonMonotonicTime { last: last.t, t });
            }
            Some(last) => advance(last, t)?,
        };
        self.points.push(PricePoint {
            t,
            rate,
            cumulative,
        });
        Ok(())
    }

    fn segment_at(&self, t: Timestamp) -> Result<&PricePoint> {
        let idx = self.points.partition_point(|p| p.t <= t);
        if idx == 0 {
            return Err(Error::TimeBeforePath { t });
        }
        Ok(&self.points[idx - 1])
    }

    pub fn cumulative_at(&self, t: Timestamp) -> Result<Cumulative> {
        advance(self.segment_at(t)?, t)
    }

    pub fn spot_at(&self, t: Timestamp) -> Result<Rate> {
        Ok(self.segment_at(t)?.rate)
    }
}

fn advance(from: &PricePoint, t: Timestamp) -> Result<Cumulative> {
    let elapsed = (t - from.t) as u128;
    (from.rate as u128)
        .checked_mul(elapsed)
        .and_then(|area| from.cumulative.checked_add(area))
        .ok_or(Error::Overflow)
}

/// Time-weighted average rate between two accumulator readings, floored.
pub fn twap(cum1: Cumulative, t1: Timestamp, cum2: Cumulative, t2: Timestamp) -> Result<Rate> {
    if t2 <= t1 {
        return Err(Error::ZeroInterval);
    }
    if cum2 < cum1 {
        return Err(Error::NonMonotonicCumulative);
    }
    let mean = (cum2 - cum1) / (t2 - t1) as u128;
    Rate::try_from(mean).map_err(|_| Error::Overflow)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    First,
    Second,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::First => f.write_str("window 1"),
            Window::Second => f.write_str("window 2"),
        }
    }
}

/// Which reporting window of frame `n`, if any, contains `now`.
pub fn window_of(n: FrameIndex, now: Timestamp, params: &MarketParams) -> Option<Window> {
    let (start, end) = grid::frame_bounds(n, params);
    let boundary = end - params.reporting_interval;
    if (start..=boundary).contains(&now) {
        Some(Window::First)
    } else if now > boundary && now <= end {
        Some(Window::Second)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub taken_at: Timestamp,
    pub cumulative: Cumulative,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportingState {
    pub window1: Option<Snapshot>,
    pub window2: Option<Snapshot>,
}

impl ReportingState {
    pub fn get(&self, window: Window) -> Option<Snapshot> {
        match window {
            Window::First => self.window1,
            Window::Second => self.window2,
        }
    }

    /// Stores `snap` unless the window already holds a later one.
    pub fn record(&mut self, window: Window, snap: Snapshot) -> bool {
        let slot = match window {
            Window::First => &mut self.window1,
            Window::Second => &mut self.window2,
        };
        match slot {
            Some(existing) if existing.taken_at > snap.taken_at => false,
            _ => {
                *slot = Some(snap);
                true
            }
        }
    }

    pub fn is_complete(&self) -> bool {
        self.window1.is_some() && self.window2.is_some()
    }

    pub fn rate(&self) -> Result<Rate> {
        let first = self.window1.ok_or(Error::MissingSnapshot(Window::First))?;
        let second = self.window2.ok_or(Error::MissingSnapshot(Window::Second))?;
        twap(
            first.cumulative,
            first.taken_at,
            second.cumulative,
            second.taken_at,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotOutcome {
    Written(Window),
    /// Nobody bought into the frame, so there is no contract to report to.
    NoFrame,
    OutsideWindows,
    AlreadyResolved,
    /// The pair has no rate at this time yet.
    NoPriceData,
    /// An equal-or-later snapshot already sits in the window.
    Stale,
}

impl Market {
    /// Attempts a snapshot for frame `n`. Out-of-window attempts are no-ops.
    pub fn report_snapshot(&mut self, n: FrameIndex, now: Timestamp) -> SnapshotOutcome {
        if self.check_clock(now).is_err() {
            return SnapshotOutcome::Stale;
        }
        let Some(window) = window_of(n, now, &self.params) else {
            return SnapshotOutcome::OutsideWindows;
        };
        let Ok(cumulative) = self.pair.cumulative_at(now) else {
            return SnapshotOutcome::NoPriceData;
        };
        let Some(record) = self.frames.get_mut(&n) else {
            return SnapshotOutcome::NoFrame;
        };
        if record.resolution.is_some() {
            return SnapshotOutcome::AlreadyResolved;
        }
        let snap = Snapshot {
            taken_at: now,
            cumulative,
        };
        if !record.reporting.record(window, snap) {
            return SnapshotOutcome::Stale;
        }
        self.clock = Some(now);
        self.log(
            now,
            EventBody::Snapshot {
                frame: n,
                window,
                taken_at: now,
                cumulative,
            },
        );
        SnapshotOutcome::Written(window)
    }

    /// A reporting event at `now`: snapshots the frame whose interval holds
    /// `now`, plus the previous frame when `now` is exactly its maturity.
    pub fn trigger_reporting(&mut self, now: Timestamp) -> Vec<(FrameIndex, SnapshotOutcome)> {
        let Ok(current) = grid::frame_of_time(now, &self.params) else {
            return Vec::new();
        };
        let mut targets = Vec::with_capacity(2);
        if current.0 > 0 && grid::frame_bounds(current, &self.params).0 == now {
            targets.push(FrameIndex(current.0 - 1));
        }
        targets.push(current);
        targets
            .into_iter()
            .map(|n| (n, self.report_snapshot(n, now)))
            .collect()
    }

    /// TWAP between the two stored snapshots of a matured frame, divided by
    /// their actual spacing.
    pub fn reported_rate(&self, n: FrameIndex, now: Timestamp) -> Result<Rate> {
        let maturity = grid::maturity(n, &self.params);
        if now < maturity {
            return Err(Error::NotMatured {
                frame: n,
                maturity,
                now,
            });
        }
        match self.frames.get(&n) {
            Some(record) => record.reporting.rate(),
            None => Err(Error::MissingSnapshot(Window::First)),
        }
    }
}
