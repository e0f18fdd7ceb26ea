//! Double-entry fund accounting.
//!
//! Every movement of money is a [`Transfer`] between two [`Bucket`]s. Money
//! only enters through deposits (from [`Bucket::External`]) and only leaves
//! through withdrawals (to [`Bucket::External`]), so at every step
//!
//! ```text
//! total_deposited - total_withdrawn
//!     = Σ free balances + custody + Σ pools + market fees + protocol fees
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FrameIndex;
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub String);

impl AccountId {
    pub fn new(id: impl Into<String>) -> Self {
        AccountId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AccountId {
    fn from(s: &str) -> Self {
        AccountId(s.to_owned())
    }
}

/// A place money can sit. `External` is the world outside the market and has
/// no balance of its own.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    External,
    Account(AccountId),
    Custody,
    Pool(FrameIndex),
    MarketFee,
    ProtocolFee,
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bucket::External => f.write_str("external"),
            Bucket::Account(id) => write!(f, "account:{id}"),
            Bucket::Custody => f.write_str("custody"),
            Bucket::Pool(n) => write!(f, "pool:{n}"),
            Bucket::MarketFee => f.write_str("fee:market"),
            Bucket::ProtocolFee => f.write_str("fee:protocol"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostingKind {
    /// External funds credited to a free balance.
    Deposit,
    /// Buyer's cost (escrow plus acquisition price) moved into custody.
    Purchase,
    /// Accrued tax moved from custody into a frame pool.
    TaxCharge,
    /// Unused escrow returned to an owner.
    Refund,
    /// Acquisition price paid by a buyer, released to the seller.
    Proceeds,
    /// Market or protocol fee taken from a pool.
    Fee,
    /// Rounding remainder of a pool swept to the protocol fee bucket.
    Dust,
    /// Reward or invalid-frame refund paid out of a pool.
    Settlement,
    /// Free balance paid out of the market.
    Withdrawal,
}

impl fmt::Display for PostingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PostingKind::Deposit => "deposit",
            PostingKind::Purchase => "purchase",
            PostingKind::TaxCharge => "tax_charge",
            PostingKind::Refund => "refund",
            PostingKind::Proceeds => "proceeds",
            PostingKind::Fee => "fee",
            PostingKind::Dust => "dust",
            PostingKind::Settlement => "settlement",
            PostingKind::Withdrawal => "withdrawal",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub kind: PostingKind,
    pub from: Bucket,
    pub to: Bucket,
    pub amount: Money,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameIndex>,
}

impl Transfer {
    pub fn new(kind: PostingKind, from: Bucket, to: Bucket, amount: Money) -> Self {
        Transfer {
            kind,
            from,
            to,
            amount,
            frame: None,
        }
    }

    pub fn for_frame(mut self, frame: FrameIndex) -> Self {
        self.frame = Some(frame);
        self
    }
}

/// Balance of every bucket, plus the running external totals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    accounts: BTreeMap<AccountId, Money>,
    custody: Money,
    pools: BTreeMap<FrameIndex, Money>,
    fee_market: Money,
    fee_protocol: Money,
    total_deposited: Money,
    total_withdrawn: Money,
}

/// Result of a conservation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conservation {
    pub net_external: Money,
    pub held: Money,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.net_external == self.held
    }
}

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    pub fn balance(&self, bucket: &Bucket) -> Money {
        match bucket {
            Bucket::External => Money::ZERO,
            Bucket::Account(id) => self.accounts.get(id).copied().unwrap_or_default(),
            Bucket::Custody => self.custody,
            Bucket::Pool(n) => self.pools.get(n).copied().unwrap_or_default(),
            Bucket::MarketFee => self.fee_market,
            Bucket::ProtocolFee => self.fee_protocol,
        }
    }

    pub fn free_balance(&self, account: &AccountId) -> Money {
        self.accounts.get(account).copied().unwrap_or_default()
    }

    pub fn accounts(&self) -> &BTreeMap<AccountId, Money> {
        &self.accounts
    }

    pub fn pools(&self) -> &BTreeMap<FrameIndex, Money> {
        &self.pools
    }

    pub fn custody(&self) -> Money {
        self.custody
    }

    pub fn fee_market(&self) -> Money {
        self.fee_market
    }

    pub fn fee_protocol(&self) -> Money {
        self.fee_protocol
    }

    pub fn total_deposited(&self) -> Money {
        self.total_deposited
    }

    pub fn total_withdrawn(&self) -> Money {
        self.total_withdrawn
    }

    /// Sum of every internal bucket.
    pub fn held(&self) -> Result<Money> {
        let mut total = self
            .custody
            .try_add(self.fee_market)?
            .try_add(self.fee_protocol)?;
        for m in self.accounts.values().chain(self.pools.values()) {
            total = total.try_add(*m)?;
        }
        Ok(total)
    }

    pub fn conservation(&self) -> Result<Conservation> {
        Ok(Conservation {
            net_external: self.total_deposited.try_sub(self.total_withdrawn)?,
            held: self.held()?,
        })
    }

    /// Applies a batch of transfers atomically: either every transfer lands or
    /// the ledger is left untouched.
    pub fn apply(&mut self, batch: &[Transfer]) -> Result<()> {
        let mut staged = self.clone();
        for t in batch {
            staged.apply_one(t)?;
        }
        *self = staged;
        Ok(())
    }

    fn apply_one(&mut self, t: &Transfer) -> Result<()> {
        if t.from == Bucket::External {
            self.total_deposited = self.total_deposited.try_add(t.amount)?;
        } else {
            let slot = self.slot(&t.from);
            let available = *slot;
            *slot = available
                .checked_sub(t.amount)
                .ok_or_else(|| match &t.from {
                    Bucket::Account(id) => Error::InsufficientBalance {
                        account: id.clone(),
                        needed: t.amount,
                        available,
                    },
                    other => Error::BucketUnderflow {
                        bucket: other.clone(),
                        needed: t.amount,
                        available,
                    },
                })?;
        }
        if t.to == Bucket::External {
            self.total_withdrawn = self.total_withdrawn.try_add(t.amount)?;
        } else {
            let slot = self.slot(&t.to);
            *slot = slot.try_add(t.amount)?;
        }
        Ok(())
    }

    fn slot(&mut self, bucket: &Bucket) -> &mut Money {
        match bucket {
            Bucket::External => unreachable!("external has no balance slot"),
            Bucket::Account(id) => self.accounts.entry(id.clone()).or_default(),
            Bucket::Custody => &mut self.custody,
            Bucket::Pool(n) => self.pools.entry(*n).or_default(),
            Bucket::MarketFee => &mut self.fee_market,
            Bucket::ProtocolFee => &mut self.fee_protocol,
        }
    }
}
