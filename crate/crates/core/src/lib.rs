//! Deterministic reference model of a Harberger-tax prediction market.
//!
//! The market discretizes time into frames and the observed rate into bins.
//! Each (frame, bin) cell is a lot that anyone can buy at its owner's
//! self-assessed price; owners pay a tax on that price into the frame's pool.
//! After the frame matures, a time-weighted average rate read from a
//! simulated exchange pair picks the winning bin and its owner takes the pool,
//! less fees.
//!
//! All amounts are integers: money in minor units ([`Money`]), rates
//! pre-multiplied by [`MarketParams::rate_scale`], time in seconds.
//!
//! The [`sim`] module drives a [`Market`] from a declarative scenario and
//! produces a verifiable report.

pub mod error;
pub mod grid;
pub mod ledger;
pub mod market;
pub mod money;
pub mod oracle;
pub mod params;
pub mod resolution;
pub mod sim;
pub mod trading;

/// Seconds (Unix time).
pub type Timestamp = u64;
/// An observed rate, already multiplied by the market's rate scale.
pub type Rate = u64;
/// Integral of a [`Rate`] over time, in rate-seconds.
pub type Cumulative = u128;

pub use error::{Error, Result};
pub use grid::{BinIndex, ContractState, FrameIndex, LotId};
pub use ledger::{AccountId, Bucket, Ledger, PostingKind, Transfer};
pub use market::{Event, EventBody, FrameRecord, Market, Ownership};
pub use money::Money;
pub use oracle::{AmmPair, Snapshot, SnapshotOutcome, Window};
pub use params::{FeeRecipients, MarketParams};
pub use resolution::{InvalidReason, Resolution, SettlementEntry};
pub use trading::{accrued_tax, max_tax, PurchaseReceipt};
