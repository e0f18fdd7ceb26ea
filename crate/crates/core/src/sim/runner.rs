use serde::{Deserialize, Serialize};

use crate::grid::{BinIndex, FrameIndex};
use crate::ledger::AccountId;
use crate::market::Market;
use crate::money::Money;
use crate::oracle::SnapshotOutcome;
use crate::resolution::InvalidReason;
use crate::sim::report::SimReport;
use crate::sim::scenario::{Action, Scenario, ScheduledAction};
use crate::trading::PurchaseReceipt;
use crate::{Rate, Result, Timestamp};

/// What an accepted action did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Applied {
    Deposited {
        amount: Money,
    },
    Bought(PurchaseReceipt),
    Reported {
        snapshots: Vec<(FrameIndex, SnapshotOutcome)>,
    },
    Resolved {
        reported_rate: Option<Rate>,
        winning_bin: Option<BinIndex>,
        winner: Option<AccountId>,
        reward: Money,
        invalid_reason: Option<InvalidReason>,
    },
    Settled {
        amount: Money,
    },
    Withdrew {
        amount: Money,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Applied(Applied),
    Rejected { error: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub index: usize,
    pub t: Timestamp,
    pub actor: AccountId,
    pub action: Action,
    pub outcome: Outcome,
}

impl ActionOutcome {
    pub fn is_applied(&self) -> bool {
        matches!(self.outcome, Outcome::Applied(_))
    }
}

/// One step of a run, handed to the observer after it took effect.
#[derive(Debug, Clone, Copy)]
pub enum Step<'a> {
    PricePoint { t: Timestamp, rate: Rate },
    Action(&'a ActionOutcome),
}

/// Runs a scenario to completion. Refused actions are recorded in the report,
/// never fatal.
pub fn run(scenario: &Scenario) -> Result<SimReport> {
    run_with_observer(scenario, |_, _| {})
}

/// Like [`run`], calling `observe` with the market state after every price
/// point and every action.
pub fn run_with_observer<F>(scenario: &Scenario, mut observe: F) -> Result<SimReport>
where
    F: FnMut(&Market, Step<'_>),
{
    let mut market = Market::new(scenario.market.clone())?;
    let mut outcomes = Vec::with_capacity(scenario.actions.len());
    let mut price_rejections = Vec::new();
    let mut prices = scenario.price_path.iter().peekable();

    let mut apply_price =
        |market: &mut Market, t: Timestamp, rate: Rate| match market.set_spot_rate(t, rate) {
            Ok(()) => true,
            Err(e) => {
                price_rejections.push((t, e.to_string()));
                false
            }
        };

    for (index, scheduled) in scenario.actions.iter().enumerate() {
        while let Some(&&(t, rate)) = prices.peek() {
            if t > scheduled.t {
                break;
            }
            prices.next();
            if apply_price(&mut market, t, rate) {
                observe(&market, Step::PricePoint { t, rate });
            }
        }
        let outcome = match apply(&mut market, scheduled) {
            Ok(applied) => Outcome::Applied(applied),
            Err(e) => Outcome::Rejected {
                error: e.to_string(),
            },
        };
        outcomes.push(ActionOutcome {
            index,
            t: scheduled.t,
            actor: scheduled.actor.clone(),
            action: scheduled.action,
            outcome,
        });
        observe(&market, Step::Action(outcomes.last().expect("just pushed")));
    }
    for &(t, rate) in prices {
        if apply_price(&mut market, t, rate) {
            observe(&market, Step::PricePoint { t, rate });
        }
    }

    Ok(SimReport::build(&market, outcomes, price_rejections))
}

fn apply(market: &mut Market, scheduled: &ScheduledAction) -> Result<Applied> {
    let now = scheduled.t;
    let actor = &scheduled.actor;
    Ok(match scheduled.action {
        Action::Deposit { amount } => {
            market.deposit(actor, amount, now)?;
            Applied::Deposited { amount }
        }
        Action::Buy { lot, price } => Applied::Bought(market.buy_lot(lot, actor, price, now)?),
        Action::Report => {
            market.check_clock(now)?;
            Applied::Reported {
                snapshots: market.trigger_reporting(now),
            }
        }
        Action::Resolve { frame } => {
            let r = market.resolve(frame, now)?;
            Applied::Resolved {
                reported_rate: r.reported_rate,
                winning_bin: r.winning_bin,
                winner: r.winner,
                reward: r.reward,
                invalid_reason: r.invalid_reason,
            }
        }
        Action::Settle { frame } => Applied::Settled {
            amount: market.settle(frame, actor, now)?,
        },
        Action::Withdraw => Applied::Withdrew {
            amount: market.withdraw_seller_proceeds(actor, now)?,
        },
    })
}
