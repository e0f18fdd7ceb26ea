//! Simulation reports. The JSON form is authoritative; the table is rendered
//! from it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::grid::{self, BinIndex, ContractState, FrameIndex};
use crate::ledger::{AccountId, Conservation};
use crate::market::{Event, EventBody, Market, Ownership, PurchaseRecord};
use crate::money::Money;
use crate::oracle::ReportingState;
use crate::params::MarketParams;
use crate::resolution::{Resolution, SettlementEntry};
use crate::sim::runner::{ActionOutcome, Applied, Outcome};
use crate::Timestamp;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub custody: Money,
    pub pools: BTreeMap<FrameIndex, Money>,
    pub fee_market: Money,
    pub fee_protocol: Money,
    pub total_deposited: Money,
    pub total_withdrawn: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub frame: FrameIndex,
    pub k_start: Timestamp,
    pub k_end: Timestamp,
    /// State at the report's final time.
    pub state: ContractState,
    /// Total tax collected.
    pub pool: Money,
    /// Still sitting in the pool bucket.
    pub pool_held: Money,
    pub taxes_finalized: bool,
    pub ownerships: BTreeMap<BinIndex, Ownership>,
    pub history: Vec<PurchaseRecord>,
    pub taxes_paid: BTreeMap<AccountId, Money>,
    pub reporting: ReportingState,
    pub resolution: Option<Resolution>,
    pub settlements: BTreeMap<AccountId, SettlementEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub format_version: u32,
    pub market: MarketParams,
    pub final_time: Option<Timestamp>,
    /// Free balance of every account that ever held one.
    pub balances: BTreeMap<AccountId, Money>,
    pub ledger: LedgerTotals,
    pub conservation: Conservation,
    pub frames: Vec<FrameSummary>,
    pub actions: Vec<ActionOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub price_rejections: Vec<(Timestamp, String)>,
    pub events: Vec<Event>,
}

impl SimReport {
    pub(crate) fn build(
        market: &Market,
        actions: Vec<ActionOutcome>,
        price_rejections: Vec<(Timestamp, String)>,
    ) -> SimReport {
        let ledger = market.ledger();
        let params = market.params();
        let now = market.clock();
        let frames = market
            .frames()
            .values()
            .map(|r| {
                let (k_start, k_end) = grid::frame_bounds(r.frame, params);
                FrameSummary {
                    frame: r.frame,
                    k_start,
                    k_end,
                    state: market.contract_state(r.frame, now.unwrap_or(params.initial_timestamp)),
                    pool: r.pool,
                    pool_held: ledger.pools().get(&r.frame).copied().unwrap_or_default(),
                    taxes_finalized: r.taxes_finalized,
                    ownerships: r.ownerships.clone(),
                    history: r.history.clone(),
                    taxes_paid: r.taxes_paid.clone(),
                    reporting: r.reporting.clone(),
                    resolution: r.resolution.clone(),
                    settlements: r.settlements.clone(),
                }
            })
            .collect();
        SimReport {
            format_version: REPORT_FORMAT_VERSION,
            market: params.clone(),
            final_time: now,
            balances: ledger.accounts().clone(),
            ledger: LedgerTotals {
                custody: ledger.custody(),
                pools: ledger.pools().clone(),
                fee_market: ledger.fee_market(),
                fee_protocol: ledger.fee_protocol(),
                total_deposited: ledger.total_deposited(),
                total_withdrawn: ledger.total_withdrawn(),
            },
            conservation: ledger.conservation().unwrap_or(Conservation {
                net_external: Money::MAX,
                held: Money::ZERO,
            }),
            frames,
            actions,
            price_rejections,
            events: market.events().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<SimReport> {
        serde_json::from_str(text)
    }

    /// Event log, one JSON record per line.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn frame(&self, n: FrameIndex) -> Option<&FrameSummary> {
        self.frames.iter().find(|f| f.frame == n)
    }

    pub fn rejected(&self) -> impl Iterator<Item = &ActionOutcome> {
        self.actions.iter().filter(|a| !a.is_applied())
    }

    /// Every account mentioned anywhere in the report.
    pub fn known_accounts(&self) -> Vec<AccountId> {
        let mut ids: Vec<AccountId> = self
            .balances
            .keys()
            .cloned()
            .chain(self.actions.iter().map(|a| a.actor.clone()))
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        self.render_summary(&mut out);
        out.push('\n');
        for f in &self.frames {
            render_frame(&mut out, f);
            out.push('\n');
        }
        self.render_actions(&mut out);
        out.push('\n');
        self.render_events(&mut out, None);
        out
    }

    pub fn render_summary(&self, out: &mut String) {
        let d = self.market.accounting_decimals;
        let l = &self.ledger;
        let _ = writeln!(out, "final time        {}", fmt_time(self.final_time));
        let _ = writeln!(
            out,
            "deposited         {}",
            l.total_deposited.to_decimal_string(d)
        );
        let _ = writeln!(
            out,
            "withdrawn         {}",
            l.total_withdrawn.to_decimal_string(d)
        );
        let _ = writeln!(out, "custody           {}", l.custody.to_decimal_string(d));
        let _ = writeln!(
            out,
            "market fees       {} ({})",
            l.fee_market.to_decimal_string(d),
            self.market.fee_recipients.market
        );
        let _ = writeln!(
            out,
            "protocol fees     {} ({})",
            l.fee_protocol.to_decimal_string(d),
            self.market.fee_recipients.protocol
        );
        let _ = writeln!(
            out,
            "conservation      {} (net external {}, held {})",
            if self.conservation.holds() {
                "ok"
            } else {
                "BROKEN"
            },
            self.conservation.net_external,
            self.conservation.held
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<16} {:>20}", "account", "free balance");
        for (id, bal) in &self.balances {
            let _ = writeln!(out, "{:<16} {:>20}", id.as_str(), bal.to_decimal_string(d));
        }
    }

    pub fn render_account(&self, out: &mut String, id: &AccountId) {
        let d = self.market.accounting_decimals;
        let bal = self.balances.get(id).copied().unwrap_or_default();
        let _ = writeln!(out, "account {id}");
        let _ = writeln!(out, "  free balance    {}", bal.to_decimal_string(d));
        for f in &self.frames {
            for (bin, own) in &f.ownerships {
                if &own.owner == id {
                    let _ = writeln!(
                        out,
                        "  owns lot ({}, {}) at price {}",
                        f.frame,
                        bin,
                        own.price.to_decimal_string(d)
                    );
                }
            }
            if let Some(paid) = f.taxes_paid.get(id) {
                let _ = writeln!(
                    out,
                    "  frame {} tax paid {}",
                    f.frame,
                    paid.to_decimal_string(d)
                );
            }
            if let Some(entry) = f.settlements.get(id) {
                let _ = writeln!(
                    out,
                    "  frame {} claim {} ({})",
                    f.frame,
                    entry.amount.to_decimal_string(d),
                    if entry.claimed {
                        "claimed"
                    } else {
                        "unclaimed"
                    }
                );
            }
        }
        let _ = writeln!(out, "  actions");
        for a in self.actions.iter().filter(|a| &a.actor == id) {
            render_action_line(out, a);
        }
    }

    pub fn render_actions(&self, out: &mut String) {
        let _ = writeln!(out, "actions ({} rejected)", self.rejected().count());
        for a in &self.actions {
            render_action_line(out, a);
        }
    }

    /// Event log, one line per record, optionally restricted to one frame.
    pub fn render_events(&self, out: &mut String, frame: Option<FrameIndex>) {
        let _ = writeln!(out, "events");
        for e in &self.events {
            if frame.is_some() && event_frame(e) != frame {
                continue;
            }
            let line = match &e.body {
                EventBody::Posting(t) => format!(
                    "{:<10} {:<8} {} -> {}",
                    t.kind.to_string(),
                    t.amount,
                    t.from,
                    t.to
                ),
                EventBody::Snapshot {
                    frame,
                    window,
                    cumulative,
                    ..
                } => format!("snapshot   frame {frame} {window} cumulative {cumulative}"),
                EventBody::Resolution {
                    frame,
                    winner,
                    reward,
                    invalid_reason,
                    ..
                } => match (winner, invalid_reason) {
                    (Some(w), _) => format!("resolution frame {frame} winner {w} reward {reward}"),
                    (None, Some(r)) => format!("resolution frame {frame} invalid {r:?}"),
                    (None, None) => format!("resolution frame {frame}"),
                },
            };
            let _ = writeln!(out, "  #{:<4} t={:<10} {}", e.seq, e.time, line);
        }
    }
}

fn event_frame(e: &Event) -> Option<FrameIndex> {
    match &e.body {
        EventBody::Posting(t) => t.frame,
        EventBody::Snapshot { frame, .. } | EventBody::Resolution { frame, .. } => Some(*frame),
    }
}

fn fmt_time(t: Option<Timestamp>) -> String {
    t.map_or_else(|| "-".to_owned(), |t| t.to_string())
}

fn render_action_line(out: &mut String, a: &ActionOutcome) {
    let result = match &a.outcome {
        Outcome::Rejected { error } => format!("REJECTED: {error}"),
        Outcome::Applied(Applied::Bought(r)) => format!("cost {}", r.cost),
        Outcome::Applied(Applied::Resolved {
            winner: Some(w),
            reward,
            ..
        }) => format!("winner {w} reward {reward}"),
        Outcome::Applied(Applied::Resolved { invalid_reason, .. }) => {
            format!("invalid {:?}", invalid_reason)
        }
        Outcome::Applied(Applied::Settled { amount } | Applied::Withdrew { amount }) => {
            format!("paid {amount}")
        }
        Outcome::Applied(Applied::Reported { snapshots }) => {
            let written = snapshots
                .iter()
                .filter(|(_, o)| matches!(o, crate::oracle::SnapshotOutcome::Written(_)))
                .count();
            format!("{written} snapshot(s) written")
        }
        Outcome::Applied(Applied::Deposited { .. }) => "ok".to_owned(),
    };
    let _ = writeln!(
        out,
        "  [{:>3}] t={:<10} {:<8} {:<24} {}",
        a.index,
        a.t,
        a.actor.as_str(),
        a.action.to_string(),
        result
    );
}

pub fn render_frame(out: &mut String, f: &FrameSummary) {
    let _ = writeln!(
        out,
        "frame {} [{}, {}) {}",
        f.frame, f.k_start, f.k_end, f.state
    );
    let _ = writeln!(out, "  pool            {}", f.pool);
    let _ = writeln!(out, "  pool held       {}", f.pool_held);
    for (bin, own) in &f.ownerships {
        let _ = writeln!(
            out,
            "  bin {:<6} owner {:<12} price {:<10} since {}",
            bin,
            own.owner.as_str(),
            own.price,
            own.acquired_at
        );
    }
    for (label, snap) in [
        ("window 1", f.reporting.window1),
        ("window 2", f.reporting.window2),
    ] {
        match snap {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "  {label}        t={} cumulative {}",
                    s.taken_at, s.cumulative
                );
            }
            None => {
                let _ = writeln!(out, "  {label}        -");
            }
        }
    }
    if let Some(r) = &f.resolution {
        if let Some(rate) = r.reported_rate {
            let _ = writeln!(out, "  reported rate   {rate}");
        }
        match (&r.winner, r.invalid_reason) {
            (Some(w), _) => {
                let _ = writeln!(out, "  winner          {w}");
                let _ = writeln!(out, "  reward          {}", r.reward);
            }
            (None, Some(reason)) => {
                let _ = writeln!(out, "  invalid         {reason:?}");
                for (id, amt) in &r.refunds {
                    let _ = writeln!(out, "  refund          {id} {amt}");
                }
                let _ = writeln!(out, "  dust            {}", r.dust);
            }
            (None, None) => {}
        }
        let _ = writeln!(out, "  fee market      {}", r.fee_market);
        let _ = writeln!(out, "  fee protocol    {}", r.fee_protocol);
    }
}
