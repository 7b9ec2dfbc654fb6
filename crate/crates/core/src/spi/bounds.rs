//! One-sided credible bounds on a Poisson rate.
//!
//! With a flat Gamma(1, 0) prior and `k` events in exposure `T`, the rate
//! posterior is Gamma(k + 1, T). Its `q` quantile is `x_q / T` where `x_q`
//! solves `P(k + 1, x) = q` for the regularized lower incomplete gamma `P`.

use statrs::function::gamma::gamma_lr;

/// Quantile of the standard Gamma(shape, 1) distribution: the smallest `x`
/// (to within floating resolution) with `P(shape, x) >= q`.
pub fn gamma_quantile(shape: f64, q: f64) -> f64 {
    assert!(shape > 0.0, "shape must be positive");
    assert!(q > 0.0 && q < 1.0, "quantile level must lie in (0, 1)");
    let cdf = |x: f64| if x <= 0.0 { 0.0 } else { gamma_lr(shape, x) };
    let mut lo = 0.0_f64;
    let mut hi = shape + 10.0;
    while cdf(hi) < q {
        lo = hi;
        hi *= 2.0;
    }
    // Bisection until the bracket stops shrinking.
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if cdf(mid) >= q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Upper `confidence` credible bound on the rate given `events` in `exposure`.
pub fn rate_upper_bound(events: u64, exposure: f64, confidence: f64) -> f64 {
    gamma_quantile(events as f64 + 1.0, confidence) / exposure
}

/// Lower `confidence` bound, the `1 - confidence` quantile of Gamma(k, T).
/// This is the exact Poisson lower limit that pairs with the upper bound
/// above; the Gamma(k + 1, T) quantile would sit above `k / T` for small
/// `k`. Zero when no events were seen.
pub fn rate_lower_bound(events: u64, exposure: f64, confidence: f64) -> f64 {
    if events == 0 {
        return 0.0;
    }
    gamma_quantile(events as f64, 1.0 - confidence) / exposure
}
