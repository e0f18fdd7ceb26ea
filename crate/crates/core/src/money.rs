//! Unsigned money amounts in minor units of the accounting token.

use std::fmt;
use std::iter::Sum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-negative amount of the accounting token, counted in minor units.
///
/// All arithmetic is checked; there is no wrapping or saturating path.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
#[must_use]
pub struct Money(u128);

impl Money {
    pub const ZERO: Money = Money(0);
    pub const MAX: Money = Money(u128::MAX);

    pub const fn new(minor_units: u128) -> Self {
        Money(minor_units)
    }

    pub const fn minor_units(self) -> u128 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, other: Money) -> Option<Money> {
        self.0.checked_add(other.0).map(Money)
    }

    pub fn checked_sub(self, other: Money) -> Option<Money> {
        self.0.checked_sub(other.0).map(Money)
    }

    /// `self + other`, reporting overflow as an error.
    pub fn try_add(self, other: Money) -> Result<Money> {
        self.checked_add(other).ok_or(Error::Overflow)
    }

    /// `self - other`; fails with [`Error::Underflow`] rather than going negative.
    pub fn try_sub(self, other: Money) -> Result<Money> {
        self.checked_sub(other).ok_or(Error::Underflow)
    }

    /// `floor(self * numerator / denominator)` with overflow checking on the product.
    pub fn mul_div_floor(self, numerator: u128, denominator: u128) -> Result<Money> {
        if denominator == 0 {
            return Err(Error::DivisionByZero);
        }
        let product = self.0.checked_mul(numerator).ok_or(Error::Overflow)?;
        Ok(Money(product / denominator))
    }

    /// Renders the amount with `decimals` fractional digits, e.g. `12.500000`.
    pub fn to_decimal_string(self, decimals: u8) -> String {
        if decimals == 0 {
            return self.0.to_string();
        }
        let digits = format!("{:0>width$}", self.0, width = decimals as usize + 1);
        let split = digits.len() - decimals as usize;
        format!("{}.{}", &digits[..split], &digits[split..])
    }
}

impl From<u128> for Money {
    fn from(v: u128) -> Self {
        Money(v)
    }
}

impl From<u64> for Money {
    fn from(v: u64) -> Self {
        Money(v as u128)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Panics on overflow; use [`Money::try_add`] on untrusted input.
impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, |acc, m| {
            acc.checked_add(m).expect("money sum overflowed u128")
        })
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.copied().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checked_ops() {
        assert_eq!(Money::new(3).try_add(Money::new(4)).unwrap(), Money::new(7));
        assert_eq!(Money::MAX.try_add(Money::new(1)), Err(Error::Overflow));
        assert_eq!(Money::new(3).try_sub(Money::new(4)), Err(Error::Underflow));
    }

    #[test]
    fn mul_div_floors() {
        assert_eq!(
            Money::new(150).mul_div_floor(100, 10_000).unwrap(),
            Money::new(1)
        );
        assert_eq!(
            Money::new(150).mul_div_floor(200, 10_000).unwrap(),
            Money::new(3)
        );
        assert_eq!(
            Money::new(1).mul_div_floor(1, 0),
            Err(Error::DivisionByZero)
        );
        assert_eq!(Money::MAX.mul_div_floor(2, 1), Err(Error::Overflow));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(Money::new(12_500_000).to_decimal_string(6), "12.500000");
        assert_eq!(Money::new(5).to_decimal_string(2), "0.05");
        assert_eq!(Money::new(5).to_decimal_string(0), "5");
    }
}
