//! Re-checks a report's bookkeeping from its own event log.
//!
//! The checks deliberately replay the postings instead of trusting the
//! market's ledger, so a report that was tampered with (or produced by a
//! buggy engine) is caught.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grid::FrameIndex;
use crate::ledger::{Bucket, PostingKind};
use crate::market::EventBody;
use crate::money::Money;
use crate::sim::report::SimReport;

pub const CONSERVATION: &str = "conservation";
pub const POOL_IDENTITY: &str = "pool_identity";
pub const FULL_DISTRIBUTION: &str = "full_distribution";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub violations: Vec<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub checks: Vec<Check>,
}

impl CheckSummary {
    pub fn is_clean(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn violation_count(&self) -> usize {
        self.checks.iter().map(|c| c.violations.len()).sum()
    }
}

pub fn verify_report(report: &SimReport) -> CheckSummary {
    CheckSummary {
        checks: vec![
            Check {
                name: CONSERVATION.to_owned(),
                violations: check_conservation(report),
            },
            Check {
                name: POOL_IDENTITY.to_owned(),
                violations: check_pool_identity(report),
            },
            Check {
                name: FULL_DISTRIBUTION.to_owned(),
                violations: check_full_distribution(report),
            },
        ],
    }
}

fn check_conservation(report: &SimReport) -> Vec<String> {
    let mut violations = Vec::new();
    let mut buckets: BTreeMap<Bucket, i128> = BTreeMap::new();
    let mut deposited: i128 = 0;
    let mut withdrawn: i128 = 0;

    for e in &report.events {
        let EventBody::Posting(t) = &e.body else {
            continue;
        };
        let Ok(amount) = i128::try_from(t.amount.minor_units()) else {
            violations.push(format!(
                "event #{}: amount {} out of range",
                e.seq, t.amount
            ));
            continue;
        };
        match &t.from {
            Bucket::External => deposited += amount,
            b => *buckets.entry(b.clone()).or_default() -= amount,
        }
        match &t.to {
            Bucket::External => withdrawn += amount,
            b => *buckets.entry(b.clone()).or_default() += amount,
        }
        if let Some(v) = buckets.get(&t.from).filter(|v| **v < 0) {
            violations.push(format!("event #{}: {} went negative ({v})", e.seq, t.from));
        }
        let held: i128 = buckets.values().sum();
        if deposited - withdrawn != held {
            violations.push(format!(
                "event #{}: deposited - withdrawn = {} but buckets hold {held}",
                e.seq,
                deposited - withdrawn
            ));
        }
    }

    let expect = |violations: &mut Vec<String>, what: String, replayed: i128, stated: Money| {
        if replayed != stated.minor_units() as i128 {
            violations.push(format!(
                "{what}: replayed {replayed}, report states {stated}"
            ));
        }
    };
    let replayed = |b: &Bucket| buckets.get(b).copied().unwrap_or(0);
    let l = &report.ledger;
    expect(
        &mut violations,
        "total deposited".into(),
        deposited,
        l.total_deposited,
    );
    expect(
        &mut violations,
        "total withdrawn".into(),
        withdrawn,
        l.total_withdrawn,
    );
    expect(
        &mut violations,
        "custody".into(),
        replayed(&Bucket::Custody),
        l.custody,
    );
    expect(
        &mut violations,
        "market fees".into(),
        replayed(&Bucket::MarketFee),
        l.fee_market,
    );
    expect(
        &mut violations,
        "protocol fees".into(),
        replayed(&Bucket::ProtocolFee),
        l.fee_protocol,
    );

    for (bucket, value) in &buckets {
        match bucket {
            Bucket::Account(id) => {
                let stated = report.balances.get(id).copied().unwrap_or_default();
                expect(&mut violations, format!("balance of {id}"), *value, stated);
            }
            Bucket::Pool(n) => {
                let stated = l.pools.get(n).copied().unwrap_or_default();
                expect(&mut violations, format!("pool {n}"), *value, stated);
            }
            _ => {}
        }
    }
    for (id, stated) in &report.balances {
        if !buckets.contains_key(&Bucket::Account(id.clone())) && !stated.is_zero() {
            violations.push(format!(
                "balance of {id}: report states {stated}, no postings"
            ));
        }
    }
    if !report.conservation.holds() {
        violations.push(format!(
            "stated conservation broken: net external {} vs held {}",
            report.conservation.net_external, report.conservation.held
        ));
    }
    violations
}

fn check_pool_identity(report: &SimReport) -> Vec<String> {
    let mut charged: BTreeMap<FrameIndex, u128> = BTreeMap::new();
    for e in &report.events {
        if let EventBody::Posting(t) = &e.body {
            if let (PostingKind::TaxCharge, Bucket::Pool(n)) = (t.kind, &t.to) {
                *charged.entry(*n).or_default() += t.amount.minor_units();
            }
        }
    }
    let mut violations = Vec::new();
    for f in &report.frames {
        let sum = charged.remove(&f.frame).unwrap_or(0);
        if sum != f.pool.minor_units() {
            violations.push(format!(
                "frame {}: tax charges sum to {sum}, pool states {}",
                f.frame, f.pool
            ));
        }
        let paid: u128 = f.taxes_paid.values().map(|m| m.minor_units()).sum();
        if f.taxes_finalized && paid != f.pool.minor_units() {
            violations.push(format!(
                "frame {}: per-account taxes sum to {paid}, pool states {}",
                f.frame, f.pool
            ));
        }
        if let Some(r) = &f.resolution {
            if r.pool != f.pool {
                violations.push(format!(
                    "frame {}: resolved on pool {}, pool states {}",
                    f.frame, r.pool, f.pool
                ));
            }
        }
    }
    for (n, sum) in charged {
        violations.push(format!(
            "frame {n}: {sum} charged to a frame missing from the report"
        ));
    }
    violations
}

fn check_full_distribution(report: &SimReport) -> Vec<String> {
    let mut violations = Vec::new();
    for f in &report.frames {
        let Some(r) = &f.resolution else {
            continue;
        };
        match r.distributed() {
            Ok(total) if total == f.pool => {}
            Ok(total) => violations.push(format!(
                "frame {}: distributed {total}, pool {}",
                f.frame, f.pool
            )),
            Err(e) => violations.push(format!("frame {}: {e}", f.frame)),
        }
        if r.is_valid() {
            if !r.refunds.is_empty() || !r.dust.is_zero() {
                violations.push(format!("frame {}: resolved frame carries refunds", f.frame));
            }
            if r.winner.is_none() {
                violations.push(format!("frame {}: resolved without a winner", f.frame));
            }
        } else {
            let recipients = r.refunds.len() as u128;
            if !r.dust.is_zero() && r.dust.minor_units() >= recipients {
                violations.push(format!(
                    "frame {}: dust {} not below {recipients} recipients",
                    f.frame, r.dust
                ));
            }
        }
        let claimed: u128 = f
            .settlements
            .values()
            .filter(|s| s.claimed)
            .map(|s| s.amount.minor_units())
            .sum();
        let owed: u128 = f.settlements.values().map(|s| s.amount.minor_units()).sum();
        if owed != r.reward.minor_units() + r.refund_total().minor_units() {
            violations.push(format!(
                "frame {}: settlement entries total {owed}, resolution owes {}",
                f.frame,
                r.reward.minor_units() + r.refund_total().minor_units()
            ));
        }
        if f.pool_held.minor_units() + claimed != owed {
            violations.push(format!(
                "frame {}: pool holds {} with {claimed} claimed of {owed}",
                f.frame, f.pool_held
            ));
        }
    }
    violations
}
