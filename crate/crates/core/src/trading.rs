//! Lot purchases and tax collection.
//!
//! A buyer pays the current owner's self-assessed price plus a tax escrow
//! covering ownership until the frame's trading close. When the lot is sold
//! on, the seller is charged tax for the time actually held; the unused part
//! of the escrow is refunded together with the sale proceeds. Owners still
//! holding at trading close are charged their whole escrow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, FrameIndex, LotId};
use crate::ledger::{AccountId, Bucket, PostingKind, Transfer};
use crate::market::{FrameRecord, Market, Ownership, PurchaseRecord};
use crate::money::Money;
use crate::oracle::SnapshotOutcome;
use crate::params::{MarketParams, BPS_DENOMINATOR};
use crate::Timestamp;

/// Tax owed for holding a lot priced at `price` for `span` seconds:
/// `floor(price * tax_bps * span / (10000 * period))`.
pub fn accrued_tax(price: Money, span: u64, params: &MarketParams) -> Result<Money> {
    let numerator = (params.tax_bps as u128)
        .checked_mul(span as u128)
        .ok_or(Error::Overflow)?;
    let denominator = (BPS_DENOMINATOR as u128) * params.period as u128;
    price.mul_div_floor(numerator, denominator)
}

/// Tax for holding from `now` until `trading_close`.
pub fn max_tax(
    price: Money,
    now: Timestamp,
    trading_close: Timestamp,
    params: &MarketParams,
) -> Result<Money> {
    if now > trading_close {
        return Err(Error::PurchaseAfterClose {
            now,
            close: trading_close,
        });
    }
    accrued_tax(price, trading_close - now, params)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurchaseReceipt {
    pub lot: LotId,
    /// Everything the buyer paid: `escrow + acquisition_price`.
    pub cost: Money,
    pub escrow: Money,
    pub acquisition_price: Money,
    pub previous_owner: Option<AccountId>,
    /// Tax the previous owner was charged.
    pub tax_charged: Money,
    /// Credited to the previous owner: proceeds plus unused escrow.
    pub seller_credit: Money,
    pub snapshots: Vec<(FrameIndex, SnapshotOutcome)>,
}

impl Market {
    /// Buys `lot` for `buyer` and sets its new self-assessed price.
    ///
    /// The current owner may buy their own lot; that is how a price changes.
    pub fn buy_lot(
        &mut self,
        lot: LotId,
        buyer: &AccountId,
        new_price: Money,
        now: Timestamp,
    ) -> Result<PurchaseReceipt> {
        self.check_clock(now)?;
        if now < self.params.initial_timestamp {
            return Err(Error::TimeBeforeMarketDebut {
                t: now,
                initial: self.params.initial_timestamp,
            });
        }
        if !grid::is_valid_purchase_frame(lot.frame, now, &self.params) {
            return Err(Error::InvalidFrame {
                frame: lot.frame,
                now,
            });
        }
        let close = grid::trading_close(lot.frame, &self.params);
        let escrow = max_tax(new_price, now, close, &self.params)?;

        let previous = self
            .frames
            .get(&lot.frame)
            .and_then(|r| r.ownerships.get(&lot.bin))
            .cloned();
        let acquisition_price = previous.as_ref().map_or(Money::ZERO, |o| o.price);
        let cost = escrow.try_add(acquisition_price)?;

        let mut batch = vec![Transfer::new(
            PostingKind::Purchase,
            Bucket::Account(buyer.clone()),
            Bucket::Custody,
            cost,
        )
        .for_frame(lot.frame)];
        let mut tax_charged = Money::ZERO;
        let mut seller_credit = Money::ZERO;
        if let Some(prev) = &previous {
            tax_charged = accrued_tax(prev.price, now - prev.acquired_at, &self.params)?;
            let unused = prev.escrowed_max_tax.try_sub(tax_charged)?;
            seller_credit = unused.try_add(acquisition_price)?;
            let seller = Bucket::Account(prev.owner.clone());
            batch.push(
                Transfer::new(
                    PostingKind::TaxCharge,
                    Bucket::Custody,
                    Bucket::Pool(lot.frame),
                    tax_charged,
                )
                .for_frame(lot.frame),
            );
            batch.push(
                Transfer::new(PostingKind::Refund, Bucket::Custody, seller.clone(), unused)
                    .for_frame(lot.frame),
            );
            batch.push(
                Transfer::new(
                    PostingKind::Proceeds,
                    Bucket::Custody,
                    seller,
                    acquisition_price,
                )
                .for_frame(lot.frame),
            );
        }

        // Pool bookkeeping is computed before anything mutates.
        let record = self.frames.get(&lot.frame);
        let pool = record
            .map_or(Money::ZERO, |r| r.pool)
            .try_add(tax_charged)?;
        let seller_paid = match (&previous, record) {
            (Some(prev), Some(r)) => Some(
                r.taxes_paid
                    .get(&prev.owner)
                    .copied()
                    .unwrap_or_default()
                    .try_add(tax_charged)?,
            ),
            _ => None,
        };

        self.post(now, batch)?;

        let record = self
            .frames
            .entry(lot.frame)
            .or_insert_with(|| FrameRecord::new(lot.frame));
        record.pool = pool;
        if let (Some(prev), Some(paid)) = (&previous, seller_paid) {
            record.taxes_paid.insert(prev.owner.clone(), paid);
        }
        record.ownerships.insert(
            lot.bin,
            Ownership {
                owner: buyer.clone(),
                price: new_price,
                acquired_at: now,
                escrowed_max_tax: escrow,
            },
        );
        record.history.push(PurchaseRecord {
            bin: lot.bin,
            buyer: buyer.clone(),
            price: new_price,
            at: now,
        });
        self.clock = Some(now);

        let snapshots = self.trigger_reporting(now);
        Ok(PurchaseReceipt {
            lot,
            cost,
            escrow,
            acquisition_price,
            previous_owner: previous.map(|p| p.owner),
            tax_charged,
            seller_credit,
            snapshots,
        })
    }

    /// Charges every owner still holding a lot of frame `n` at trading close.
    /// Returns the total charged.
    pub fn finalize_frame_taxes(&mut self, n: FrameIndex, now: Timestamp) -> Result<Money> {
        self.check_clock(now)?;
        let close = grid::trading_close(n, &self.params);
        if now < close {
            return Err(Error::FrameStillOpen {
                frame: n,
                close,
                now,
            });
        }
        let Some(record) = self.frames.get(&n) else {
            return Ok(Money::ZERO);
        };
        if record.taxes_finalized {
            return Err(Error::AlreadyFinalized(n));
        }

        let mut batch = Vec::new();
        let mut charges = Vec::new();
        let mut total = Money::ZERO;
        for own in record.ownerships.values() {
            let charge = accrued_tax(own.price, close - own.acquired_at, &self.params)?;
            let unused = own.escrowed_max_tax.try_sub(charge)?;
            batch.push(
                Transfer::new(
                    PostingKind::TaxCharge,
                    Bucket::Custody,
                    Bucket::Pool(n),
                    charge,
                )
                .for_frame(n),
            );
            batch.push(
                Transfer::new(
                    PostingKind::Refund,
                    Bucket::Custody,
                    Bucket::Account(own.owner.clone()),
                    unused,
                )
                .for_frame(n),
            );
            charges.push((own.owner.clone(), charge));
            total = total.try_add(charge)?;
        }
        let pool = record.pool.try_add(total)?;
        let mut paid = record.taxes_paid.clone();
        for (owner, charge) in charges {
            let entry = paid.entry(owner).or_default();
            *entry = entry.try_add(charge)?;
        }

        self.post(now, batch)?;

        let record = self.frames.get_mut(&n).expect("record checked above");
        record.pool = pool;
        record.taxes_paid = paid;
        record.taxes_finalized = true;
        for own in record.ownerships.values_mut() {
            own.escrowed_max_tax = Money::ZERO;
        }
        self.clock = Some(now);
        Ok(total)
    }

    /// Total tax collected for frame `n`.
    pub fn pool_balance(&self, n: FrameIndex) -> Money {
        self.frames.get(&n).map_or(Money::ZERO, |r| r.pool)
    }
}
