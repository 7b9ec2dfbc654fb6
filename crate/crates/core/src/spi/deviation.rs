//! Exact two-sample Poisson rate comparison.
//!
//! Conditional on the total `n = k1 + k2`, the field count is
//! Binomial(n, T2 / (T1 + T2)) under equal rates. The two-sided p-value sums
//! every outcome no more probable than the observed one.

use serde::Serialize;
use statrs::function::factorial::ln_factorial;
use thiserror::Error;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Relative slack when comparing probabilities for the "no more probable"
/// tail, so exact ties survive rounding.
const TIE_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationVerdict {
    Consistent,
    Deviating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationResult {
    pub verdict: DeviationVerdict,
    pub p_value: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviationError {
    #[error("exposure must be positive (validation {validation}, field {field})")]
    NonPositiveExposure { validation: f64, field: f64 },
    #[error("significance level {0} is outside (0, 1)")]
    BadAlpha(f64),
}

/// `validation` and `field` are `(events, exposure)` pairs.
pub fn deviation_test(
    validation: (u64, f64),
    field: (u64, f64),
    alpha: f64,
) -> Result<DeviationResult, DeviationError> {
    let (k1, t1) = validation;
    let (k2, t2) = field;
    if !(t1 > 0.0 && t2 > 0.0 && t1.is_finite() && t2.is_finite()) {
        return Err(DeviationError::NonPositiveExposure {
            validation: t1,
            field: t2,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DeviationError::BadAlpha(alpha));
    }
    let p_value = binomial_two_sided(k1, k2, t1 / (t1 + t2), t2 / (t1 + t2));
    let verdict = if p_value <= alpha {
        DeviationVerdict::Deviating
    } else {
        DeviationVerdict::Consistent
    };
    Ok(DeviationResult { verdict, p_value })
}

/// Two-sided p-value of observing `k2` "field" outcomes out of `k1 + k2`
/// with per-trial probabilities `p1` (validation) and `p2` (field).
///
/// Every floating operation here is symmetric in the two samples, so
/// swapping them gives a bit-identical result.
fn binomial_two_sided(k1: u64, k2: u64, p1: f64, p2: f64) -> f64 {
    let n = k1 + k2;
    if n == 0 {
        return 1.0;
    }
    let ln_p1 = p1.ln();
    let ln_p2 = p2.ln();
    let ln_n = ln_factorial(n);
    // ln P(field = j), written so that (j, p2) <-> (n - j, p1) is exact.
    let ln_pmf = |j: u64| {
        let i = n - j;
        let coef = ln_n - (ln_factorial(i) + ln_factorial(j));
        let tail = mul_ln(i, ln_p1) + mul_ln(j, ln_p2);
        coef + tail
    };
    let observed = ln_pmf(k2);
    let cutoff = observed + TIE_TOLERANCE.ln_1p();
    let mut included: Vec<f64> = (0..=n)
        .map(ln_pmf)
        .filter(|lp| *lp <= cutoff)
        .map(f64::exp)
        .collect();
    included.sort_by(f64::total_cmp);
    included.into_iter().sum::<f64>().min(1.0)
}

fn mul_ln(count: u64, ln_p: f64) -> f64 {
    // 0 * -inf must be 0 (probability 1 of zero trials).
    if count == 0 {
        0.0
    } else {
        count as f64 * ln_p
    }
}
