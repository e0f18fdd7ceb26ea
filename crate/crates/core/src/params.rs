//! Market configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Timestamp;

pub const BPS_DENOMINATOR: u32 = 10_000;

/// Labels of the accounts the two fee buckets accrue to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeeRecipients {
    pub market: String,
    pub protocol: String,
}

impl Default for FeeRecipients {
    fn default() -> Self {
        FeeRecipients {
            market: "market-operator".to_owned(),
            protocol: "protocol".to_owned(),
        }
    }
}

/// Static configuration of one market.
///
/// Rates (the observed quantity) are unsigned integers already multiplied by
/// `rate_scale`; money is in minor units with `accounting_decimals` digits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    /// Debut time; frame 0 starts here.
    pub initial_timestamp: Timestamp,
    /// Frame duration in seconds.
    pub period: u64,
    /// Width of one outcome bin, in scaled rate units.
    pub granularity: u64,
    /// Power of ten the raw rate is multiplied by.
    #[serde(default = "default_rate_scale")]
    pub rate_scale: u64,
    /// Tax charged per full period of ownership, in basis points of the price.
    pub tax_bps: u32,
    pub market_fee_bps: u32,
    pub protocol_fee_bps: u32,
    /// Averaging window at the end of each frame, in seconds.
    pub reporting_interval: u64,
    #[serde(default)]
    pub accounting_decimals: u8,
    #[serde(default)]
    pub fee_recipients: FeeRecipients,
}

fn default_rate_scale() -> u64 {
    1
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(Error::InvalidParams {
                field,
                reason: reason.into(),
            })
        }
        if self.period == 0 {
            return bad("period", "must be greater than zero");
        }
        if self.granularity == 0 {
            return bad("granularity", "must be greater than zero");
        }
        if self.reporting_interval == 0 || self.reporting_interval >= self.period {
            return bad(
                "reporting_interval",
                format!(
                    "must satisfy 0 < reporting_interval < period ({} vs {})",
                    self.reporting_interval, self.period
                ),
            );
        }
        if !is_power_of_ten(self.rate_scale) {
            return bad(
                "rate_scale",
                format!("{} is not a power of ten", self.rate_scale),
            );
        }
        if self.tax_bps > BPS_DENOMINATOR {
            return bad("tax_bps", "must not exceed 10000");
        }
        if self.market_fee_bps as u64 + self.protocol_fee_bps as u64 > BPS_DENOMINATOR as u64 {
            return bad(
                "market_fee_bps",
                "market_fee_bps + protocol_fee_bps must not exceed 10000",
            );
        }
        if self.accounting_decimals > 38 {
            return bad("accounting_decimals", "must be at most 38");
        }
        Ok(())
    }
}

fn is_power_of_ten(mut v: u64) -> bool {
    if v == 0 {
        return false;
    }
    while v.is_multiple_of(10) {
        v /= 10;
    }
    v == 1
}

#[cfg(test)]
pub(crate) fn test_params() -> MarketParams {
    MarketParams {
        initial_timestamp: 1000,
        period: 100,
        granularity: 10,
        rate_scale: 1,
        tax_bps: 1000,
        market_fee_bps: 200,
        protocol_fee_bps: 100,
        reporting_interval: 30,
        accounting_decimals: 0,
        fee_recipients: FeeRecipients::default(),
    }
}
