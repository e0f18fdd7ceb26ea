//! Resolution and settlement of matured frames.
//!
//! On resolution both fees are taken from the pool. If the reported rate falls
//! in an owned bin, the rest goes to that bin's current owner. Otherwise the
//! frame is invalid and every account that paid tax into the pool gets back
//! its pro-rata share of what is left after fees; the floor-rounding remainder
//! goes to the protocol fee bucket.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, BinIndex, FrameIndex};
use crate::ledger::{AccountId, Bucket, PostingKind, Transfer};
use crate::market::{EventBody, FrameRecord, Market};
use crate::money::Money;
use crate::params::BPS_DENOMINATOR;
use crate::{Rate, Timestamp};

/// Share of the net pool paid to the winning lot's final owner.
pub const WINNER_SHARE_BPS: u32 = BPS_DENOMINATOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    NoLots,
    NoWinningLot,
    ReportingError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub resolved_at: Timestamp,
    /// Pool at resolution time.
    pub pool: Money,
    pub reported_rate: Option<Rate>,
    pub winning_bin: Option<BinIndex>,
    pub winner: Option<AccountId>,
    pub winner_share_bps: u32,
    pub reward: Money,
    pub fee_market: Money,
    pub fee_protocol: Money,
    /// Refunds of an invalid frame, by taxpayer.
    pub refunds: BTreeMap<AccountId, Money>,
    /// Rounding remainder of the refunds, swept to protocol fees.
    pub dust: Money,
    pub invalid_reason: Option<InvalidReason>,
}

impl Resolution {
    pub fn is_valid(&self) -> bool {
        self.invalid_reason.is_none()
    }

    pub fn refund_total(&self) -> Money {
        self.refunds.values().sum()
    }

    /// `reward + fees + refunds + dust`; equals `pool` for every resolution.
    pub fn distributed(&self) -> Result<Money> {
        self.reward
            .try_add(self.fee_market)?
            .try_add(self.fee_protocol)?
            .try_add(self.refund_total())?
            .try_add(self.dust)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementEntry {
    pub amount: Money,
    pub claimed: bool,
}

impl SettlementEntry {
    pub fn claimable(&self) -> Money {
        if self.claimed {
            Money::ZERO
        } else {
            self.amount
        }
    }
}

impl Market {
    /// Resolves matured frame `n`, finalizing its taxes first if needed.
    /// Anyone may call this.
    pub fn resolve(&mut self, n: FrameIndex, now: Timestamp) -> Result<Resolution> {
        self.check_clock(now)?;
        let maturity = grid::maturity(n, &self.params);
        if now < maturity {
            return Err(Error::NotMatured {
                frame: n,
                maturity,
                now,
            });
        }
        if self.frames.get(&n).is_some_and(|r| r.resolution.is_some()) {
            return Err(Error::AlreadyResolved(n));
        }

        let before = self.clone();
        let outcome = self.resolve_inner(n, now);
        if outcome.is_err() {
            *self = before;
        }
        outcome
    }

    fn resolve_inner(&mut self, n: FrameIndex, now: Timestamp) -> Result<Resolution> {
        if self.frames.get(&n).is_some_and(|r| !r.taxes_finalized) {
            let _charged = self.finalize_frame_taxes(n, now)?;
        }
        let rate = self.reported_rate(n, now);
        let record = self.frames.entry(n).or_insert_with(|| FrameRecord::new(n));
        let pool = record.pool;
        let fee_market =
            pool.mul_div_floor(self.params.market_fee_bps as u128, BPS_DENOMINATOR as u128)?;
        let fee_protocol = pool.mul_div_floor(
            self.params.protocol_fee_bps as u128,
            BPS_DENOMINATOR as u128,
        )?;
        let net = pool.try_sub(fee_market)?.try_sub(fee_protocol)?;

        let mut resolution = Resolution {
            resolved_at: now,
            pool,
            reported_rate: None,
            winning_bin: None,
            winner: None,
            winner_share_bps: WINNER_SHARE_BPS,
            reward: Money::ZERO,
            fee_market,
            fee_protocol,
            refunds: BTreeMap::new(),
            dust: Money::ZERO,
            invalid_reason: None,
        };
        if record.ownerships.is_empty() {
            resolution.invalid_reason = Some(InvalidReason::NoLots);
        } else {
            match rate {
                Err(Error::MissingSnapshot(_)) => {
                    resolution.invalid_reason = Some(InvalidReason::ReportingError)
                }
                Err(e) => return Err(e),
                Ok(rate) => {
                    let bin = grid::bin_of_rate(rate, &self.params);
                    resolution.reported_rate = Some(rate);
                    resolution.winning_bin = Some(bin);
                    match record.ownerships.get(&bin) {
                        Some(own) => {
                            resolution.winner = Some(own.owner.clone());
                            resolution.reward = net
                                .mul_div_floor(WINNER_SHARE_BPS as u128, BPS_DENOMINATOR as u128)?;
                        }
                        None => resolution.invalid_reason = Some(InvalidReason::NoWinningLot),
                    }
                }
            }
        }

        if resolution.invalid_reason.is_some() && !pool.is_zero() {
            for (account, paid) in &record.taxes_paid {
                if paid.is_zero() {
                    continue;
                }
                let refund = paid.mul_div_floor(net.minor_units(), pool.minor_units())?;
                resolution.refunds.insert(account.clone(), refund);
            }
            resolution.dust = net.try_sub(resolution.refund_total())?;
        }

        let mut settlements = BTreeMap::new();
        if let Some(winner) = &resolution.winner {
            settlements.insert(
                winner.clone(),
                SettlementEntry {
                    amount: resolution.reward,
                    claimed: false,
                },
            );
        }
        for (account, refund) in &resolution.refunds {
            settlements.insert(
                account.clone(),
                SettlementEntry {
                    amount: *refund,
                    claimed: false,
                },
            );
        }
        record.resolution = Some(resolution.clone());
        record.settlements = settlements;

        let pool_bucket = Bucket::Pool(n);
        self.post(
            now,
            vec![
                Transfer::new(
                    PostingKind::Fee,
                    pool_bucket.clone(),
                    Bucket::MarketFee,
                    fee_market,
                )
                .for_frame(n),
                Transfer::new(
                    PostingKind::Fee,
                    pool_bucket.clone(),
                    Bucket::ProtocolFee,
                    fee_protocol,
                )
                .for_frame(n),
                Transfer::new(
                    PostingKind::Dust,
                    pool_bucket,
                    Bucket::ProtocolFee,
                    resolution.dust,
                )
                .for_frame(n),
            ],
        )?;
        self.log(
            now,
            EventBody::Resolution {
                frame: n,
                reported_rate: resolution.reported_rate,
                winning_bin: resolution.winning_bin,
                winner: resolution.winner.clone(),
                reward: resolution.reward,
                fee_market,
                fee_protocol,
                dust: resolution.dust,
                invalid_reason: resolution.invalid_reason,
            },
        );
        self.clock = Some(now);
        Ok(resolution)
    }

    /// Pays `account` its reward or refund from frame `n`.
    pub fn settle(&mut self, n: FrameIndex, account: &AccountId, now: Timestamp) -> Result<Money> {
        self.check_clock(now)?;
        let record = self
            .frames
            .get(&n)
            .filter(|r| r.resolution.is_some())
            .ok_or(Error::NotResolved(n))?;
        let amount = record
            .settlements
            .get(account)
            .map_or(Money::ZERO, SettlementEntry::claimable);
        if amount.is_zero() {
            return Err(Error::NothingToClaim(account.clone()));
        }
        self.post(
            now,
            vec![Transfer::new(
                PostingKind::Settlement,
                Bucket::Pool(n),
                Bucket::Account(account.clone()),
                amount,
            )
            .for_frame(n)],
        )?;
        let entry = self
            .frames
            .get_mut(&n)
            .and_then(|r| r.settlements.get_mut(account))
            .expect("entry checked above");
        entry.claimed = true;
        self.clock = Some(now);
        Ok(amount)
    }

    /// Pays out the account's whole free balance: resale proceeds, unused
    /// escrow, settled rewards, and idle deposits.
    pub fn withdraw_seller_proceeds(
        &mut self,
        account: &AccountId,
        now: Timestamp,
    ) -> Result<Money> {
        self.check_clock(now)?;
        let amount = self.ledger.free_balance(account);
        if amount.is_zero() {
            return Err(Error::NothingToClaim(account.clone()));
        }
        self.post(
            now,
            vec![Transfer::new(
                PostingKind::Withdrawal,
                Bucket::Account(account.clone()),
                Bucket::External,
                amount,
            )],
        )?;
        self.clock = Some(now);
        Ok(amount)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ContractState, LotId};
    use crate::params::test_params;

    fn id(s: &str) -> AccountId {
        AccountId::from(s)
    }

    /// Frame 2 = [1200, 1300); windows [1200, 1270] and (1270, 1300].
    fn resale_market(rate: Rate) -> Market {
        let mut m = Market::new(test_params()).unwrap();
        m.set_spot_rate(1000, rate).unwrap();
        m.deposit(&id("A"), Money::new(10_000), 1000).unwrap();
        m.deposit(&id("B"), Money::new(10_000), 1000).unwrap();
        m.buy_lot(LotId::new(2, 2), &id("A"), Money::new(1000), 1100)
            .unwrap();
        m.buy_lot(LotId::new(2, 2), &id("B"), Money::new(2000), 1150)
            .unwrap();
        m.trigger_reporting(1250);
        m.trigger_reporting(1290);
        m
    }

    #[test]
    fn winner_takes_net_pool() {
        let mut m = resale_market(25);
        assert_eq!(
            m.contract_state(FrameIndex(2), 1300),
            ContractState::Reported
        );
        let r = m.resolve(FrameIndex(2), 1300).unwrap();
        assert_eq!(r.pool, Money::new(150));
        assert_eq!(r.fee_market, Money::new(3));
        assert_eq!(r.fee_protocol, Money::new(1));
        assert_eq!(r.reward, Money::new(146));
        assert_eq!(r.winner, Some(id("B")));
        assert_eq!(r.winning_bin, Some(BinIndex(2)));
        assert_eq!(r.distributed(), Ok(r.pool));
        assert_eq!(
            m.contract_state(FrameIndex(2), 1300),
            ContractState::Resolved
        );

        assert_eq!(m.settle(FrameIndex(2), &id("B"), 1301), Ok(Money::new(146)));
        assert_eq!(
            m.settle(FrameIndex(2), &id("B"), 1302),
            Err(Error::NothingToClaim(id("B")))
        );
        assert_eq!(
            m.settle(FrameIndex(2), &id("C"), 1302),
            Err(Error::NothingToClaim(id("C")))
        );
        assert_eq!(
            m.contract_state(FrameIndex(2), 1302),
            ContractState::Settled
        );
        assert_eq!(m.ledger().pools()[&FrameIndex(2)], Money::ZERO);
        assert!(m.ledger().conservation().unwrap().holds());
    }

    #[test]
    fn unowned_winning_bin_refunds_taxpayers() {
        // rate 55 lands in bin 5, nobody owns it
        let mut m = resale_market(55);
        let r = m.resolve(FrameIndex(2), 1300).unwrap();
        assert_eq!(r.invalid_reason, Some(InvalidReason::NoWinningLot));
        assert_eq!(r.winning_bin, Some(BinIndex(5)));
        // net = 150 - 3 - 1 = 146; A paid 50, B paid 100
        // A: floor(50 * 146 / 150) = 48, B: floor(100 * 146 / 150) = 97, dust 1
        assert_eq!(r.refunds[&id("A")], Money::new(48));
        assert_eq!(r.refunds[&id("B")], Money::new(97));
        assert_eq!(r.dust, Money::new(1));
        assert_eq!(r.distributed(), Ok(r.pool));
        assert_eq!(
            m.contract_state(FrameIndex(2), 1300),
            ContractState::Invalid
        );

        assert_eq!(m.settle(FrameIndex(2), &id("A"), 1300), Ok(Money::new(48)));
        assert_eq!(m.settle(FrameIndex(2), &id("B"), 1300), Ok(Money::new(97)));
        assert_eq!(
            m.contract_state(FrameIndex(2), 1300),
            ContractState::Invalid
        );
        assert_eq!(m.ledger().fee_protocol(), Money::new(2));
        assert!(m.ledger().conservation().unwrap().holds());
    }

    #[test]
    fn empty_frame_is_invalid_with_nothing_to_distribute() {
        let mut m = Market::new(test_params()).unwrap();
        let r = m.resolve(FrameIndex(3), 1400).unwrap();
        assert_eq!(r.invalid_reason, Some(InvalidReason::NoLots));
        assert_eq!(r.pool, Money::ZERO);
        assert_eq!(r.distributed(), Ok(Money::ZERO));
        assert_eq!(
            m.settle(FrameIndex(3), &id("A"), 1400),
            Err(Error::NothingToClaim(id("A")))
        );
    }

    #[test]
    fn missing_snapshot_is_reporting_error() {
        let mut m = Market::new(test_params()).unwrap();
        m.set_spot_rate(1000, 25).unwrap();
        m.deposit(&id("A"), Money::new(1000), 1000).unwrap();
        m.buy_lot(LotId::new(2, 2), &id("A"), Money::new(1000), 1100)
            .unwrap();
        m.trigger_reporting(1250);
        let r = m.resolve(FrameIndex(2), 1300).unwrap();
        assert_eq!(r.invalid_reason, Some(InvalidReason::ReportingError));
        assert_eq!(r.reported_rate, None);
        // pool 100, fees 2 + 1, sole taxpayer refunded 97
        assert_eq!(r.refunds[&id("A")], Money::new(97));
        assert_eq!(r.dust, Money::ZERO);
    }

    #[test]
    fn resolve_preconditions() {
        let mut m = resale_market(25);
        assert_eq!(
            m.resolve(FrameIndex(2), 1299),
            Err(Error::NotMatured {
                frame: FrameIndex(2),
                maturity: 1300,
                now: 1299
            })
        );
        assert_eq!(
            m.settle(FrameIndex(2), &id("B"), 1299),
            Err(Error::NotResolved(FrameIndex(2)))
        );
        m.resolve(FrameIndex(2), 1300).unwrap();
        assert_eq!(
            m.resolve(FrameIndex(2), 1300),
            Err(Error::AlreadyResolved(FrameIndex(2)))
        );
    }

    #[test]
    fn sole_participant_loses_only_fees() {
        let mut m = Market::new(test_params()).unwrap();
        m.set_spot_rate(1000, 25).unwrap();
        m.deposit(&id("A"), Money::new(5000), 1000).unwrap();
        m.buy_lot(LotId::new(2, 2), &id("A"), Money::new(1000), 1100)
            .unwrap();
        m.trigger_reporting(1200);
        m.trigger_reporting(1300);
        let r = m.resolve(FrameIndex(2), 1300).unwrap();
        assert_eq!(m.settle(FrameIndex(2), &id("A"), 1300), Ok(Money::new(97)));
        let fees = r.fee_market.try_add(r.fee_protocol).unwrap();
        assert_eq!(fees, Money::new(3));
        assert_eq!(m.ledger().free_balance(&id("A")), Money::new(5000 - 3));
    }

    #[test]
    fn withdrawals() {
        let mut m = resale_market(25);
        assert_eq!(
            m.withdraw_seller_proceeds(&id("A"), 1300),
            Ok(Money::new(9_900 + 1050))
        );
        assert_eq!(
            m.withdraw_seller_proceeds(&id("A"), 1300),
            Err(Error::NothingToClaim(id("A")))
        );
        assert_eq!(
            m.withdraw_seller_proceeds(&id("Z"), 1300),
            Err(Error::NothingToClaim(id("Z")))
        );
        assert!(m.ledger().conservation().unwrap().holds());
    }
}
