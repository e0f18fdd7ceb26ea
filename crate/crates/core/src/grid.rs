//! The time × outcome grid: frames, bins, lots, and the clock-derived
//! contract state.
//!
//! Frame `n` covers `[k_n, k_n + period)` with `k_n = initial + n * period`.
//! Trading on a frame's lots is possible only while `now < k_n`, so `k_n` is
//! its trading close; `k_n + period` is its maturity, when the outcome is
//! observable. Bin `m` covers scaled rates `[m * granularity, (m + 1) * granularity)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::MarketParams;
use crate::{Rate, Timestamp};

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FrameIndex(pub u64);

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct BinIndex(pub u64);

impl fmt::Display for FrameIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for BinIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LotId {
    pub frame: FrameIndex,
    pub bin: BinIndex,
}

impl LotId {
    pub fn new(frame: u64, bin: u64) -> Self {
        LotId {
            frame: FrameIndex(frame),
            bin: BinIndex(bin),
        }
    }
}

impl fmt::Display for LotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.frame, self.bin)
    }
}

/// Converts a signed rate from an external source into a scaled rate.
pub fn checked_rate(raw: i128) -> Result<Rate> {
    if raw < 0 {
        return Err(Error::NegativeRate(raw));
    }
    Rate::try_from(raw).map_err(|_| Error::Overflow)
}

pub fn frame_of_time(t: Timestamp, params: &MarketParams) -> Result<FrameIndex> {
    if t < params.initial_timestamp {
        return Err(Error::TimeBeforeMarketDebut {
            t,
            initial: params.initial_timestamp,
        });
    }
    Ok(FrameIndex((t - params.initial_timestamp) / params.period))
}

/// `(k_start, k_end)` of frame `n`. Saturates at `u64::MAX` for frames past
/// the representable timeline.
pub fn frame_bounds(n: FrameIndex, params: &MarketParams) -> (Timestamp, Timestamp) {
    let start =
        n.0.saturating_mul(params.period)
            .saturating_add(params.initial_timestamp);
    (start, start.saturating_add(params.period))
}

/// Last instant at which lots of frame `n` could have changed hands.
pub fn trading_close(n: FrameIndex, params: &MarketParams) -> Timestamp {
    frame_bounds(n, params).0
}

pub fn maturity(n: FrameIndex, params: &MarketParams) -> Timestamp {
    frame_bounds(n, params).1
}

pub fn bin_of_rate(rate: Rate, params: &MarketParams) -> BinIndex {
    BinIndex(rate / params.granularity)
}

/// `(lo, hi)` of bin `m`; `lo` belongs to the bin, `hi` to the next one.
pub fn bin_bounds(m: BinIndex, params: &MarketParams) -> (Rate, Rate) {
    let lo = m.0.saturating_mul(params.granularity);
    (lo, lo.saturating_add(params.granularity))
}

pub fn is_valid_purchase_frame(n: FrameIndex, now: Timestamp, params: &MarketParams) -> bool {
    frame_bounds(n, params).0 > now
}

/// Life-cycle position of a contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractState {
    Created,
    Opened,
    Closed,
    Matured,
    Reported,
    Resolved,
    Settled,
    Invalid,
}

impl ContractState {
    /// Position along the life cycle. `Resolved` and `Invalid` share a rank;
    /// a legal history never decreases in rank.
    pub fn rank(self) -> u8 {
        match self {
            ContractState::Created => 0,
            ContractState::Opened => 1,
            ContractState::Closed => 2,
            ContractState::Matured => 3,
            ContractState::Reported => 4,
            ContractState::Resolved | ContractState::Invalid => 5,
            ContractState::Settled => 6,
        }
    }

    /// Whether moving from `self` to `next` follows the life cycle.
    pub fn can_become(self, next: ContractState) -> bool {
        use ContractState::*;
        if self == next {
            return true;
        }
        match (self, next) {
            (Invalid, _) => false,
            (_, Invalid) => matches!(self, Created | Opened | Closed | Matured | Reported),
            _ => next.rank() > self.rank(),
        }
    }
}

impl fmt::Display for ContractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ContractState::Created => "created",
            ContractState::Opened => "opened",
            ContractState::Closed => "closed",
            ContractState::Matured => "matured",
            ContractState::Reported => "reported",
            ContractState::Resolved => "resolved",
            ContractState::Settled => "settled",
            ContractState::Invalid => "invalid",
        };
        f.write_str(s)
    }
}

/// Stored progress of a frame beyond what the clock tells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameProgress {
    /// Both reporting windows hold a snapshot.
    pub reported: bool,
    pub resolved: Option<ResolutionKind>,
    /// Every non-zero claim has been paid out.
    pub fully_settled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolutionKind {
    Valid,
    Invalid,
}

pub fn contract_state(
    n: FrameIndex,
    progress: FrameProgress,
    now: Timestamp,
    params: &MarketParams,
) -> ContractState {
    let (start, end) = frame_bounds(n, params);
    if now < start {
        return ContractState::Opened;
    }
    if now < end {
        return ContractState::Closed;
    }
    match progress.resolved {
        Some(ResolutionKind::Invalid) => ContractState::Invalid,
        Some(ResolutionKind::Valid) if progress.fully_settled => ContractState::Settled,
        Some(ResolutionKind::Valid) => ContractState::Resolved,
        None if progress.reported => ContractState::Reported,
        None => ContractState::Matured,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::test_params;
    use proptest::prelude::*;

    fn params(initial: u64, period: u64) -> MarketParams {
        MarketParams {
            initial_timestamp: initial,
            period,
            reporting_interval: period / 3,
            ..test_params()
        }
    }

    #[test]
    fn frame_of_time_examples() {
        let p = params(1000, 100);
        assert_eq!(frame_of_time(1000, &p), Ok(FrameIndex(0)));
        assert_eq!(frame_of_time(1150, &p), Ok(FrameIndex(1)));
        assert_eq!(
            frame_of_time(999, &p),
            Err(Error::TimeBeforeMarketDebut {
                t: 999,
                initial: 1000
            })
        );
    }

    #[test]
    fn frame_bounds_examples() {
        let p = params(1000, 100);
        assert_eq!(frame_bounds(FrameIndex(0), &p), (1000, 1100));
        assert_eq!(frame_bounds(FrameIndex(2), &p), (1200, 1300));
        let day = params(0, 86_400);
        assert_eq!(frame_bounds(FrameIndex(10), &day), (864_000, 950_400));
    }

    #[test]
    fn bin_of_rate_examples() {
        let p = test_params();
        assert_eq!(bin_of_rate(0, &p), BinIndex(0));
        assert_eq!(bin_of_rate(25, &p), BinIndex(2));
        // boundary belongs to the upper bin
        assert_eq!(bin_of_rate(30, &p), BinIndex(3));
        assert_eq!(checked_rate(-1), Err(Error::NegativeRate(-1)));
        assert_eq!(checked_rate(7), Ok(7));
    }

    #[test]
    fn purchase_frame_validity() {
        let p = params(1000, 100);
        assert!(is_valid_purchase_frame(FrameIndex(1), 1050, &p));
        assert!(!is_valid_purchase_frame(FrameIndex(0), 1050, &p));
        assert!(!is_valid_purchase_frame(FrameIndex(1), 1100, &p));
    }

    #[test]
    fn contract_state_examples() {
        let p = params(1000, 100);
        let none = FrameProgress::default();
        assert_eq!(
            contract_state(FrameIndex(2), none, 1150, &p),
            ContractState::Opened
        );
        assert_eq!(
            contract_state(FrameIndex(1), none, 1150, &p),
            ContractState::Closed
        );
        assert_eq!(
            contract_state(FrameIndex(0), none, 1150, &p),
            ContractState::Matured
        );

        let reported = FrameProgress {
            reported: true,
            ..none
        };
        assert_eq!(
            contract_state(FrameIndex(0), reported, 1150, &p),
            ContractState::Reported
        );
        // progress flags never leak into time-derived states
        assert_eq!(
            contract_state(FrameIndex(1), reported, 1150, &p),
            ContractState::Closed
        );

        let invalid = FrameProgress {
            resolved: Some(ResolutionKind::Invalid),
            ..none
        };
        assert_eq!(
            contract_state(FrameIndex(0), invalid, 1150, &p),
            ContractState::Invalid
        );
        let settled = FrameProgress {
            resolved: Some(ResolutionKind::Valid),
            fully_settled: true,
            ..none
        };
        assert_eq!(
            contract_state(FrameIndex(0), settled, 1150, &p),
            ContractState::Settled
        );
    }

    #[test]
    fn transition_table() {
        use ContractState::*;
        assert!(Opened.can_become(Closed));
        assert!(Matured.can_become(Invalid));
        assert!(Reported.can_become(Invalid));
        assert!(Reported.can_become(Resolved));
        assert!(!Resolved.can_become(Invalid));
        assert!(!Invalid.can_become(Settled));
        assert!(!Closed.can_become(Opened));
        assert!(!Settled.can_become(Resolved));
    }

    proptest! {
        #[test]
        fn frame_round_trip(initial in 0u64..1_000_000, period in 1u64..100_000, n in 0u64..1_000_000) {
            let p = params(initial, period.max(3));
            let (start, end) = frame_bounds(FrameIndex(n), &p);
            prop_assert_eq!(frame_of_time(start, &p), Ok(FrameIndex(n)));
            prop_assert_eq!(frame_of_time(end - 1, &p), Ok(FrameIndex(n)));
        }

        #[test]
        fn bin_round_trip(granularity in 1u64..10_000, m in 0u64..1_000_000) {
            let p = MarketParams { granularity, ..test_params() };
            let (lo, hi) = bin_bounds(BinIndex(m), &p);
            prop_assert_eq!(bin_of_rate(lo, &p), BinIndex(m));
            prop_assert_eq!(bin_of_rate(hi, &p), BinIndex(m + 1));
        }

        #[test]
        fn exactly_one_closed_frame(now in 1000u64..50_000) {
            let p = params(1000, 100);
            let current = frame_of_time(now, &p).unwrap();
            for n in 0..=current.0 + 5 {
                let state = contract_state(FrameIndex(n), FrameProgress::default(), now, &p);
                let expected = match n.cmp(&current.0) {
                    std::cmp::Ordering::Less => ContractState::Matured,
                    std::cmp::Ordering::Equal => ContractState::Closed,
                    std::cmp::Ordering::Greater => ContractState::Opened,
                };
                prop_assert_eq!(state, expected);
                prop_assert_eq!(
                    is_valid_purchase_frame(FrameIndex(n), now, &p),
                    state == ContractState::Opened
                );
            }
        }
    }
}
