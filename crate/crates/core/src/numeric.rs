//! Exact count ratios and fixed-point rendering.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A ratio of two counts, kept exact so derived columns can be rendered
/// without floating point drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quotient {
    pub numerator: u64,
    pub denominator: u64,
}

impl Quotient {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        Quotient {
            numerator,
            denominator,
        }
    }

    /// `None` when the denominator is zero.
    pub fn value(&self) -> Option<f64> {
        (self.denominator > 0).then(|| self.numerator as f64 / self.denominator as f64)
    }

    /// Value scaled by `scale` (e.g. 100 for percentages) rendered with four
    /// decimals, truncated toward zero.
    pub fn fixed4_scaled(&self, scale: u64) -> Option<String> {
        (self.denominator > 0)
            .then(|| fixed4(self.numerator as u128 * scale as u128, self.denominator as u128))
    }

    pub fn fixed4(&self) -> Option<String> {
        self.fixed4_scaled(1)
    }
}

impl fmt::Display for Quotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Renders `num / den` with exactly four decimals, truncating.
///
/// Panics if `den == 0`.
pub fn fixed4(num: u128, den: u128) -> String {
    assert!(den > 0, "fixed4 with zero denominator");
    let scaled = num * 10_000 / den;
    format!("{}.{:04}", scaled / 10_000, scaled % 10_000)
}

/// Four-decimal truncation of a non-negative float. Used only where the
/// value has no exact count representation.
pub fn fixed4_f64(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sign = if x < 0.0 { "-" } else { "" };
    // Nudge by a few ulps so values like 0.29 (stored as 0.28999..) do not
    // truncate one step low.
    let scaled = (x.abs() * 10_000.0 * (1.0 + 4.0 * f64::EPSILON)).floor() as u128;
    format!("{sign}{}.{:04}", scaled / 10_000, scaled % 10_000)
}
