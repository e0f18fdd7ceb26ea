//! The market state machine: ledger, rate pair, per-frame contracts, and the
//! append-only event log.
//!
//! All mutating operations take the current time explicitly. The market
//! refuses any operation whose time is earlier than one it already accepted,
//! so a frame's clock-derived state can never move backwards.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, BinIndex, ContractState, FrameIndex, FrameProgress, ResolutionKind};
use crate::ledger::{AccountId, Bucket, Ledger, PostingKind, Transfer};
use crate::money::Money;
use crate::oracle::{AmmPair, ReportingState, Window};
use crate::params::MarketParams;
use crate::resolution::{InvalidReason, Resolution, SettlementEntry};
use crate::{Cumulative, Rate, Timestamp};

/// Current holder of a lot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ownership {
    pub owner: AccountId,
    /// Self-assessed price; the next buyer pays exactly this.
    pub price: Money,
    pub acquired_at: Timestamp,
    /// Tax prepaid as if held until trading close; zeroed once charged.
    pub escrowed_max_tax: Money,
}

/// One accepted purchase, kept for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurchaseRecord {
    pub bin: BinIndex,
    pub buyer: AccountId,
    pub price: Money,
    pub at: Timestamp,
}

/// Contract state of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: FrameIndex,
    pub ownerships: BTreeMap<BinIndex, Ownership>,
    /// Sum of every tax charged for this frame.
    pub pool: Money,
    pub taxes_finalized: bool,
    pub reporting: ReportingState,
    pub resolution: Option<Resolution>,
    pub settlements: BTreeMap<AccountId, SettlementEntry>,
    /// Tax charged per account, the basis for refunds of an invalid frame.
    pub taxes_paid: BTreeMap<AccountId, Money>,
    pub history: Vec<PurchaseRecord>,
}

impl FrameRecord {
    pub fn new(frame: FrameIndex) -> Self {
        FrameRecord {
            frame,
            ownerships: BTreeMap::new(),
            pool: Money::ZERO,
            taxes_finalized: false,
            reporting: ReportingState::default(),
            resolution: None,
            settlements: BTreeMap::new(),
            taxes_paid: BTreeMap::new(),
            history: Vec::new(),
        }
    }

    pub fn progress(&self) -> FrameProgress {
        FrameProgress {
            reported: self.reporting.is_complete(),
            resolved: self.resolution.as_ref().map(|r| {
                if r.is_valid() {
                    ResolutionKind::Valid
                } else {
                    ResolutionKind::Invalid
                }
            }),
            fully_settled: self.settlements.values().all(|e| e.claimable().is_zero()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub time: Timestamp,
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventBody {
    Posting(Transfer),
    Snapshot {
        frame: FrameIndex,
        window: Window,
        taken_at: Timestamp,
        cumulative: Cumulative,
    },
    Resolution {
        frame: FrameIndex,
        reported_rate: Option<Rate>,
        winning_bin: Option<BinIndex>,
        winner: Option<AccountId>,
        reward: Money,
        fee_market: Money,
        fee_protocol: Money,
        dust: Money,
        invalid_reason: Option<InvalidReason>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Market {
    pub(crate) params: MarketParams,
    pub(crate) ledger: Ledger,
    pub(crate) pair: AmmPair,
    pub(crate) frames: BTreeMap<FrameIndex, FrameRecord>,
    pub(crate) events: Vec<Event>,
    pub(crate) clock: Option<Timestamp>,
}

impl Market {
    pub fn new(params: MarketParams) -> Result<Self> {
        params.validate()?;
        Ok(Market {
            params,
            ledger: Ledger::new(),
            pair: AmmPair::new(),
            frames: BTreeMap::new(),
            events: Vec::new(),
            clock: None,
        })
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn pair(&self) -> &AmmPair {
        &self.pair
    }

    pub fn frames(&self) -> &BTreeMap<FrameIndex, FrameRecord> {
        &self.frames
    }

    pub fn frame(&self, n: FrameIndex) -> Option<&FrameRecord> {
        self.frames.get(&n)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Latest time any accepted operation ran at.
    pub fn clock(&self) -> Option<Timestamp> {
        self.clock
    }

    pub fn contract_state(&self, n: FrameIndex, now: Timestamp) -> ContractState {
        let progress = self
            .frames
            .get(&n)
            .map(FrameRecord::progress)
            .unwrap_or_default();
        grid::contract_state(n, progress, now, &self.params)
    }

    pub fn set_spot_rate(&mut self, t: Timestamp, rate: Rate) -> Result<()> {
        self.check_clock(t)?;
        self.pair.set_spot_rate(t, rate)?;
        self.clock = Some(t);
        Ok(())
    }

    pub fn deposit(&mut self, account: &AccountId, amount: Money, now: Timestamp) -> Result<()> {
        self.check_clock(now)?;
        self.post(
            now,
            vec![Transfer::new(
                PostingKind::Deposit,
                Bucket::External,
                Bucket::Account(account.clone()),
                amount,
            )],
        )?;
        self.clock = Some(now);
        Ok(())
    }

    pub(crate) fn check_clock(&self, now: Timestamp) -> Result<()> {
        match self.clock {
            Some(clock) if now < clock => Err(Error::ClockRegression { now, clock }),
            _ => Ok(()),
        }
    }

    /// Applies a batch atomically and logs it. Zero-amount transfers other
    /// than deposits are dropped.
    pub(crate) fn post(&mut self, now: Timestamp, batch: Vec<Transfer>) -> Result<()> {
        let batch: Vec<Transfer> = batch
            .into_iter()
            .filter(|t| t.kind == PostingKind::Deposit || !t.amount.is_zero())
            .collect();
        self.ledger.apply(&batch)?;
        for t in batch {
            self.log(now, EventBody::Posting(t));
        }
        Ok(())
    }

    pub(crate) fn log(&mut self, now: Timestamp, body: EventBody) {
        let seq = self.events.len() as u64;
        self.events.push(Event {
            seq,
            time: now,
            body,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::test_params;

    #[test]
    fn rejects_invalid_params() {
        let mut p = test_params();
        p.reporting_interval = p.period;
        assert!(matches!(
            Market::new(p),
            Err(Error::InvalidParams {
                field: "reporting_interval",
                ..
            })
        ));
    }

    #[test]
    fn clock_never_moves_backwards() {
        let mut m = Market::new(test_params()).unwrap();
        let a = AccountId::from("A");
        m.deposit(&a, Money::new(10), 1000).unwrap();
        let before = m.clone();
        assert_eq!(
            m.deposit(&a, Money::new(10), 999),
            Err(Error::ClockRegression {
                now: 999,
                clock: 1000
            })
        );
        assert_eq!(m, before);
    }

    #[test]
    fn deposit_is_logged() {
        let mut m = Market::new(test_params()).unwrap();
        m.deposit(&AccountId::from("A"), Money::new(0), 5).unwrap();
        assert_eq!(m.events().len(), 1);
        assert_eq!(m.ledger().free_balance(&AccountId::from("A")), Money::ZERO);
    }
}
