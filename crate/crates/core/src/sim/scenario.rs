//! Scenario documents.
//!
//! A scenario is a JSON object with three keys:
//!
//! ```json
//! {
//!   "market": { "initial_timestamp": 1100, "period": 100, "granularity": 10,
//!               "tax_bps": 1000, "market_fee_bps": 200, "protocol_fee_bps": 100,
//!               "reporting_interval": 30 },
//!   "price_path": [ { "t": 1100, "rate": 25 } ],
//!   "actions": [
//!     { "t": 1100, "actor": "A", "action": "deposit", "amount": 5000 },
//!     { "t": 1100, "actor": "A", "action": "buy", "frame": 1, "bin": 2, "price": 1000 },
//!     { "t": 1250, "actor": "A", "action": "report" },
//!     { "t": 1300, "actor": "A", "action": "resolve", "frame": 1 },
//!     { "t": 1300, "actor": "A", "action": "settle", "frame": 1 },
//!     { "t": 1300, "actor": "A", "action": "withdraw" }
//!   ]
//! }
//! ```
//!
//! Money, rates and times are integers. Actions must be in non-decreasing
//! time order; actions sharing a timestamp run in file order.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{self, FrameIndex, LotId};
use crate::ledger::AccountId;
use crate::money::Money;
use crate::params::MarketParams;
use crate::{Rate, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Deposit { amount: Money },
    Buy { lot: LotId, price: Money },
    Report,
    Resolve { frame: FrameIndex },
    Settle { frame: FrameIndex },
    Withdraw,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Deposit { amount } => write!(f, "deposit {amount}"),
            Action::Buy { lot, price } => write!(f, "buy {lot} at {price}"),
            Action::Report => f.write_str("report"),
            Action::Resolve { frame } => write!(f, "resolve {frame}"),
            Action::Settle { frame } => write!(f, "settle {frame}"),
            Action::Withdraw => f.write_str("withdraw"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledAction {
    pub t: Timestamp,
    pub actor: AccountId,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub market: MarketParams,
    pub price_path: Vec<(Timestamp, Rate)>,
    pub actions: Vec<ScheduledAction>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    market: MarketParams,
    #[serde(default)]
    price_path: Vec<RawPricePoint>,
    #[serde(default)]
    actions: Vec<RawAction>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPricePoint {
    t: Timestamp,
    rate: i128,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    t: Timestamp,
    actor: String,
    action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amount: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price: Option<u128>,
}

impl RawAction {
    fn from_action(a: &ScheduledAction) -> Self {
        let mut raw = RawAction {
            t: a.t,
            actor: a.actor.0.clone(),
            action: String::new(),
            amount: None,
            frame: None,
            bin: None,
            price: None,
        };
        raw.action = match a.action {
            Action::Deposit { amount } => {
                raw.amount = Some(amount.minor_units());
                "deposit"
            }
            Action::Buy { lot, price } => {
                raw.frame = Some(lot.frame.0);
                raw.bin = Some(lot.bin.0);
                raw.price = Some(price.minor_units());
                "buy"
            }
            Action::Report => "report",
            Action::Resolve { frame } => {
                raw.frame = Some(frame.0);
                "resolve"
            }
            Action::Settle { frame } => {
                raw.frame = Some(frame.0);
                "settle"
            }
            Action::Withdraw => "withdraw",
        }
        .to_owned();
        raw
    }

    fn into_action(self, idx: usize) -> Result<ScheduledAction, ScenarioError> {
        let field = |name: &str| format!("actions[{idx}].{name}");
        let require = |v: Option<u64>, name: &str| {
            v.ok_or_else(|| ScenarioError::invalid(field(name), "required for this action"))
        };
        let require_money = |v: Option<u128>, name: &str| {
            v.map(Money::new)
                .ok_or_else(|| ScenarioError::invalid(field(name), "required for this action"))
        };
        let allowed: &[&str] = match self.action.as_str() {
            "deposit" => &["amount"],
            "buy" => &["frame", "bin", "price"],
            "resolve" | "settle" => &["frame"],
            "report" | "withdraw" => &[],
            other => {
                return Err(ScenarioError::invalid(
                    field("action"),
                    format!(
                        "unknown action `{other}` (expected deposit, buy, report, resolve, settle or withdraw)"
                    ),
                ))
            }
        };
        for (name, present) in [
            ("amount", self.amount.is_some()),
            ("frame", self.frame.is_some()),
            ("bin", self.bin.is_some()),
            ("price", self.price.is_some()),
        ] {
            if present && !allowed.contains(&name) {
                return Err(ScenarioError::invalid(
                    field(name),
                    format!("not accepted by `{}`", self.action),
                ));
            }
        }
        if self.actor.is_empty() {
            return Err(ScenarioError::invalid(field("actor"), "must not be empty"));
        }
        let action = match self.action.as_str() {
            "deposit" => Action::Deposit {
                amount: require_money(self.amount, "amount")?,
            },
            "buy" => Action::Buy {
                lot: LotId::new(require(self.frame, "frame")?, require(self.bin, "bin")?),
                price: require_money(self.price, "price")?,
            },
            "resolve" => Action::Resolve {
                frame: FrameIndex(require(self.frame, "frame")?),
            },
            "settle" => Action::Settle {
                frame: FrameIndex(require(self.frame, "frame")?),
            },
            "report" => Action::Report,
            _ => Action::Withdraw,
        };
        Ok(ScheduledAction {
            t: self.t,
            actor: AccountId(self.actor),
            action,
        })
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    if let Err(crate::Error::InvalidParams { field, reason }) = raw.market.validate() {
        return Err(ScenarioError::invalid(format!("market.{field}"), reason));
    }

    let mut price_path = Vec::with_capacity(raw.price_path.len());
    for (i, p) in raw.price_path.into_iter().enumerate() {
        let rate = grid::checked_rate(p.rate)
            .map_err(|e| ScenarioError::invalid(format!("price_path[{i}].rate"), e.to_string()))?;
        if let Some(&(last, _)) = price_path.last() {
            if p.t <= last {
                return Err(ScenarioError::invalid(
                    format!("price_path[{i}].t"),
                    format!(
                        "{} does not follow {last}; times must strictly increase",
                        p.t
                    ),
                ));
            }
        }
        price_path.push((p.t, rate));
    }

    let mut actions: Vec<ScheduledAction> = Vec::with_capacity(raw.actions.len());
    for (i, a) in raw.actions.into_iter().enumerate() {
        let action = a.into_action(i)?;
        if let Some(prev) = actions.last() {
            if action.t < prev.t {
                return Err(ScenarioError::invalid(
                    format!("actions[{i}].t"),
                    format!(
                        "{} is earlier than the previous action at {}",
                        action.t, prev.t
                    ),
                ));
            }
        }
        actions.push(action);
    }

    Ok(Scenario {
        market: raw.market,
        price_path,
        actions,
    })
}

impl Scenario {
    /// Serializes back into the document format accepted by [`load_scenario`].
    pub fn to_json(&self) -> String {
        let raw = RawScenario {
            market: self.market.clone(),
            price_path: self
                .price_path
                .iter()
                .map(|&(t, rate)| RawPricePoint {
                    t,
                    rate: rate as i128,
                })
                .collect(),
            actions: self.actions.iter().map(RawAction::from_action).collect(),
        };
        serde_json::to_string_pretty(&raw).expect("scenario serializes")
    }

    /// Distinct actors, in first-appearance order.
    pub fn actors(&self) -> Vec<AccountId> {
        let mut seen = Vec::new();
        for a in &self.actions {
            if !seen.contains(&a.actor) {
                seen.push(a.actor.clone());
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MARKET: &str = r#""market": {
        "initial_timestamp": 1000, "period": 100, "granularity": 10,
        "tax_bps": 1000, "market_fee_bps": 200, "protocol_fee_bps": 100,
        "reporting_interval": 30
    }"#;

    fn doc(rest: &str) -> String {
        format!("{{ {MARKET}{rest} }}")
    }

    #[test]
    fn minimal_document() {
        let s = load_scenario(&doc(r#", "actions": []"#)).unwrap();
        assert!(s.actions.is_empty());
        assert!(s.price_path.is_empty());
        assert_eq!(s.market.rate_scale, 1);
    }

    #[test]
    fn decreasing_action_times_are_rejected() {
        let err = load_scenario(&doc(r#", "actions": [
                {"t": 1100, "actor": "A", "action": "report"},
                {"t": 1050, "actor": "A", "action": "report"}
            ]"#))
        .unwrap_err();
        assert!(
            matches!(err, ScenarioError::Validation { ref field, .. } if field == "actions[1].t")
        );
    }

    #[test]
    fn reporting_interval_must_fit_period() {
        let text = doc("").replace("\"reporting_interval\": 30", "\"reporting_interval\": 100");
        let err = load_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("reporting_interval"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = load_scenario("{\n  \"market\": }").unwrap_err();
        assert!(
            matches!(err, ScenarioError::Parse { line: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn negative_rate_is_rejected() {
        let err = load_scenario(&doc(r#", "price_path": [{"t": 1000, "rate": -1}]"#)).unwrap_err();
        assert!(
            matches!(err, ScenarioError::Validation { ref field, .. } if field == "price_path[0].rate")
        );
    }

    #[test]
    fn price_path_must_strictly_increase() {
        let err = load_scenario(&doc(
            r#", "price_path": [{"t": 1000, "rate": 1}, {"t": 1000, "rate": 2}]"#,
        ))
        .unwrap_err();
        assert!(
            matches!(err, ScenarioError::Validation { ref field, .. } if field == "price_path[1].t")
        );
    }

    #[test]
    fn action_fields_are_checked() {
        let err = load_scenario(&doc(
            r#", "actions": [{"t": 1000, "actor": "A", "action": "buy", "frame": 1, "price": 5}]"#,
        ))
        .unwrap_err();
        assert!(err.to_string().contains("actions[0].bin"), "{err}");

        let err = load_scenario(&doc(
            r#", "actions": [{"t": 1000, "actor": "A", "action": "report", "amount": 5}]"#,
        ))
        .unwrap_err();
        assert!(err.to_string().contains("actions[0].amount"), "{err}");

        let err = load_scenario(&doc(
            r#", "actions": [{"t": 1000, "actor": "A", "action": "sell"}]"#,
        ))
        .unwrap_err();
        assert!(err.to_string().contains("unknown action"), "{err}");
    }

    #[test]
    fn round_trips_through_json() {
        let s = load_scenario(&doc(r#", "price_path": [{"t": 1000, "rate": 25}],
            "actions": [
                {"t": 1000, "actor": "A", "action": "deposit", "amount": 5000},
                {"t": 1000, "actor": "B", "action": "buy", "frame": 2, "bin": 3, "price": 10},
                {"t": 1300, "actor": "A", "action": "resolve", "frame": 2},
                {"t": 1300, "actor": "A", "action": "settle", "frame": 2},
                {"t": 1300, "actor": "A", "action": "withdraw"},
                {"t": 1300, "actor": "A", "action": "report"}
            ]"#))
        .unwrap();
        assert_eq!(load_scenario(&s.to_json()).unwrap(), s);
        assert_eq!(s.actors(), vec![AccountId::from("A"), AccountId::from("B")]);
    }
}
