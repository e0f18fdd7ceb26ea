use thiserror::Error;

use crate::grid::FrameIndex;
use crate::ledger::{AccountId, Bucket};
use crate::money::Money;
use crate::oracle::Window;
use crate::Timestamp;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every way a market operation can be refused.
///
/// A refused operation never leaves partial state behind.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid market parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("time {now} is earlier than the market clock {clock}")]
    ClockRegression { now: Timestamp, clock: Timestamp },

    #[error("time {t} is before market debut at {initial}")]
    TimeBeforeMarketDebut { t: Timestamp, initial: Timestamp },

    #[error("rate {0} is negative")]
    NegativeRate(i128),

    #[error("arithmetic overflow")]
    Overflow,

    #[error("arithmetic underflow")]
    Underflow,

    #[error("division by zero")]
    DivisionByZero,

    #[error("purchase at {now} is after trading close {close}")]
    PurchaseAfterClose { now: Timestamp, close: Timestamp },

    #[error("frame {frame} is not open for purchases at {now}")]
    InvalidFrame { frame: FrameIndex, now: Timestamp },

    #[error("account `{account}` holds {available}, needs {needed}")]
    InsufficientBalance {
        account: AccountId,
        needed: Money,
        available: Money,
    },

    #[error("bucket {bucket} holds {available}, cannot debit {needed}")]
    BucketUnderflow {
        bucket: Bucket,
        needed: Money,
        available: Money,
    },

    #[error("frame {frame} trading closes at {close}, now is {now}")]
    FrameStillOpen {
        frame: FrameIndex,
        close: Timestamp,
        now: Timestamp,
    },

    #[error("taxes for frame {0} are already finalized")]
    AlreadyFinalized(FrameIndex),

    #[error("price point at {t} does not follow the last point at {last}")]
    NonMonotonicTime { last: Timestamp, t: Timestamp },

    #[error("time {t} precedes the first price point")]
    TimeBeforePath { t: Timestamp },

    #[error("twap over an empty interval")]
    ZeroInterval,

    #[error("cumulative rate decreased between snapshots")]
    NonMonotonicCumulative,

    #[error("missing {0} snapshot")]
    MissingSnapshot(Window),

    #[error("frame {frame} matures at {maturity}, now is {now}")]
    NotMatured {
        frame: FrameIndex,
        maturity: Timestamp,
        now: Timestamp,
    },

    #[error("frame {0} is already resolved")]
    AlreadyResolved(FrameIndex),

    #[error("frame {0} is not resolved")]
    NotResolved(FrameIndex),

    #[error("nothing to claim for account `{0}`")]
    NothingToClaim(AccountId),
}
