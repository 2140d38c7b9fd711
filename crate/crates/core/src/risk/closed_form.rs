//! Closed-form risk ratios and bounds.
//!
//! Everything here is a rational function of the integer dimensions and the
//! variance parameters, so it is written over [`Exact`] and can be evaluated
//! in floating point or in exact rational arithmetic. Ratios are risks
//! divided by `R(X) = pσ²`.

use crate::error::{invalid, Result};
use crate::scalar::Exact;

fn count<T: Exact>(k: u64) -> T {
    T::from_count(k)
}

fn need_p3(p: u64) -> Result<()> {
    if p < 3 {
        Err(invalid(format!("this estimator needs p ≥ 3, got p = {p}")))
    } else {
        Ok(())
    }
}

/// `σ²/(τ² + σ²)`, the share of the prior-mean offset that the Bayes rule removes.
pub fn shrink_share<T: Exact>(tau2: T, sigma2: T) -> T {
    sigma2.clone() / (tau2 + sigma2)
}

/// `τ²/(τ² + σ²)`: the Bayes risk ratio, and the limit of both modified
/// estimators' ratios as `n, p → ∞`.
pub fn asymptotic_limit<T: Exact>(tau2: T, sigma2: T) -> T {
    tau2.clone() / (tau2 + sigma2)
}

pub fn bayes_ratio<T: Exact>(tau2: T, sigma2: T) -> T {
    asymptotic_limit(tau2, sigma2)
}

/// `1 − (p−2)/p · n/(n+2) · σ²/(τ²+σ²)`.
pub fn empirical_modified_bayes_ratio<T: Exact>(p: u64, n: u64, tau2: T, sigma2: T) -> Result<T> {
    need_p3(p)?;
    let share = shrink_share(tau2, sigma2);
    let factor = (count::<T>(p - 2) * count::<T>(n)) / (count::<T>(p) * count::<T>(n + 2));
    Ok(T::one() - factor * share)
}

/// Risk ratio of `ν + (1 − c·S²/‖X−ν‖²)(X−ν)`:
/// `1 − (2n(p−2)c − n(n+2)c²) / (p(p−2)) · σ²/(τ²+σ²)`.
pub fn general_c_ratio<T: Exact>(p: u64, n: u64, c: T, tau2: T, sigma2: T) -> Result<T> {
    need_p3(p)?;
    let n_t = count::<T>(n);
    let p2 = count::<T>(p - 2);
    let gain = count::<T>(2) * n_t.clone() * p2.clone() * c.clone()
        - n_t * count::<T>(n + 2) * c.clone() * c;
    Ok(T::one() - gain / (count::<T>(p) * p2) * shrink_share(tau2, sigma2))
}

/// `ĉ = (p−2)/(n+2)`, the minimiser of [`general_c_ratio`] over `c`.
pub fn optimal_c<T: Exact>(p: u64, n: u64) -> Result<T> {
    need_p3(p)?;
    Ok(count::<T>(p - 2) / count::<T>(n + 2))
}

/// `2(p−2)/(n+2)`: `general_c_ratio ≤ 1` exactly for `c` in `[0, this]`.
pub fn minimax_c_limit<T: Exact>(p: u64, n: u64) -> Result<T> {
    need_p3(p)?;
    Ok(count::<T>(2 * (p - 2)) / count::<T>(n + 2))
}

/// Lower bound on the modified Bayes risk ratio,
/// `1 + n(n+2)(1+ρ)/(n(1+ρ)+4)² − 2/(1+ρ)`.
pub fn modified_bayes_lower_bound<T: Exact>(n: u64, rho: T) -> T {
    let one_rho = T::one() + rho;
    let denom = count::<T>(n) * one_rho.clone() + count::<T>(4);
    T::one() + count::<T>(n) * count::<T>(n + 2) * one_rho.clone() / (denom.clone() * denom)
        - count::<T>(2) / one_rho
}

/// Upper bound on the modified Bayes risk ratio,
/// `1 + (n+2)/(n(1+ρ)) − 2n/(n(1+ρ)+2)`.
pub fn modified_bayes_upper_bound<T: Exact>(n: u64, rho: T) -> T {
    T::one() + upper_bound_curve(n, rho)
}

/// The upper bound minus one, `n(n+2)(1+ρ)/(n(1+ρ))² − 2n/(n+2+nρ)`.
/// Non-positive for every `ρ > 0` once `n ≥ 5`.
pub fn upper_bound_curve<T: Exact>(n: u64, rho: T) -> T {
    let n_t = count::<T>(n);
    let scaled = n_t.clone() * (T::one() + rho);
    count::<T>(n + 2) / scaled.clone() - count::<T>(2) * n_t / (scaled + count::<T>(2))
}

/// `E[(p−2)/(n+2) · S²/‖X−ν‖²] − σ²/(τ²+σ²) = σ²/(τ²+σ²)·(n/(n+2) − 1)`.
pub fn empirical_ratio_gap<T: Exact>(p: u64, n: u64, tau2: T, sigma2: T) -> Result<T> {
    need_p3(p)?;
    let share = shrink_share(tau2, sigma2);
    Ok(share * (count::<T>(n) / count::<T>(n + 2) - T::one()))
}

/// Bracket `[n/(n(1+ρ)+2) − 1/(1+ρ), 0]` for `E[S²/(S²+nτ²)] − σ²/(σ²+τ²)`.
pub fn modified_ratio_gap_bracket<T: Exact>(n: u64, rho: T) -> (T, T) {
    let one_rho = T::one() + rho;
    let n_t = count::<T>(n);
    let lo = n_t.clone() / (n_t * one_rho.clone() + count::<T>(2)) - T::one() / one_rho;
    (lo, T::zero())
}

/// Golden-section search for the minimiser of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `width`.
///
/// Both interior points are recomputed each step, so the search also works in
/// exact arithmetic where the golden ratio is only approximated.
pub fn golden_section_min<T, F>(f: F, lo: T, hi: T, width: T) -> T
where
    T: Exact,
    F: Fn(&T) -> T,
{
    let inv_phi = T::from_f64(0.618_033_988_749_895).expect("representable");
    let (mut a, mut b) = (lo, hi);
    while b.clone() - a.clone() > width {
        let span = b.clone() - a.clone();
        let x1 = b.clone() - inv_phi.clone() * span.clone();
        let x2 = a.clone() + inv_phi.clone() * span;
        if f(&x1) < f(&x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    (a + b) / count::<T>(2)
}
