//! Bayes risks `R(δ; ν, τ², σ²) = E‖δ − θ‖²`, averaged over the prior, with
//! bounds, minimaxity verdicts and limits.
//!
//! The modified Bayes risk has no closed form and is assembled from two
//! inverse-shift chi-square moments with shift `c = nτ²/σ²`:
//!
//! `R/(pσ²) = 1 + n(n+2)(1+ρ)·E_{χ²_{n+4}}[1/(u+c)²] − 2n·E_{χ²_{n+2}}[1/(u+c)]`
//!
//! where `ρ = τ²/σ²`. Its closed-form bounds are checked on every call.

pub mod closed_form;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::chi2::{expect_inv_shift_sq_with, expect_inv_shift_with, Tolerances};
use crate::error::{invalid, Error, Result};
use crate::estimators::{EstimatorKind, ProblemSpec};
use crate::scalar::Real;

/// Ratios above `1 + VIOLATION_SLACK` count as a minimaxity violation.
pub const VIOLATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Minimax {
    /// A sufficient condition from the theory applies.
    Proven,
    /// No sufficient condition applies, and the ratio does not exceed one.
    NotProven,
    /// The ratio exceeds one.
    Violated,
}

impl std::fmt::Display for Minimax {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Minimax::Proven => "proven",
            Minimax::NotProven => "not-proven",
            Minimax::Violated => "violated",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport<T> {
    pub estimator: EstimatorKind<T>,
    pub risk: T,
    /// `risk / (pσ²)`
    pub ratio: T,
    pub lower_bound: Option<T>,
    pub upper_bound: Option<T>,
    pub minimax: Minimax,
    /// `τ²/(τ²+σ²)`
    pub limit_ratio: T,
    /// `τ²/σ²`
    pub rho: T,
}

fn to_real<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn verdict_from_ratio<T: Real>(ratio: T) -> Minimax {
    if ratio > T::one() + T::lit(VIOLATION_SLACK) {
        Minimax::Violated
    } else {
        Minimax::NotProven
    }
}

fn known_tau2<T: Real>(spec: &ProblemSpec<T>, kind: EstimatorKind<T>) -> Result<T> {
    spec.require_tau2(&kind)
}

fn need_p3<T: Real>(spec: &ProblemSpec<T>) -> Result<()> {
    if spec.p() < 3 {
        Err(invalid(format!(
            "this estimator needs p ≥ 3, got p = {}",
            spec.p()
        )))
    } else {
        Ok(())
    }
}

/// `R(X) = pσ²`.
pub fn risk_mle<T: Real>(spec: &ProblemSpec<T>) -> T {
    spec.p_real() * spec.sigma2()
}

fn report<T: Real>(
    spec: &ProblemSpec<T>,
    estimator: EstimatorKind<T>,
    tau2: T,
    ratio: T,
    bounds: Option<(T, T)>,
    minimax: Minimax,
) -> RiskReport<T> {
    RiskReport {
        estimator,
        risk: risk_mle(spec) * ratio,
        ratio,
        lower_bound: bounds.map(|b| b.0),
        upper_bound: bounds.map(|b| b.1),
        minimax,
        limit_ratio: closed_form::asymptotic_limit(tau2, spec.sigma2()),
        rho: tau2 / spec.sigma2(),
    }
}

/// Bayes rule `ν + τ²/(τ²+σ²)·(X−ν)` with σ² known.
pub fn risk_bayes<T: Real>(spec: &ProblemSpec<T>) -> Result<RiskReport<T>> {
    let kind = EstimatorKind::Bayes;
    let tau2 = known_tau2(spec, kind)?;
    let ratio = closed_form::bayes_ratio(tau2, spec.sigma2());
    Ok(report(
        spec,
        kind,
        tau2,
        ratio,
        None,
        verdict_from_ratio(ratio),
    ))
}

/// The two chi-square moments behind the modified Bayes risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedBayesMoments<T> {
    /// `E_{χ²_{n+2}}[1/(u+c)]`
    pub inv_shift: T,
    /// `E_{χ²_{n+4}}[1/(u+c)²]`
    pub inv_shift_sq: T,
    pub shift: T,
}

pub fn modified_bayes_moments<T: Real>(
    n: u64,
    rho: T,
    tol: &Tolerances<T>,
) -> Result<ModifiedBayesMoments<T>> {
    let shift = T::from_u64(n).unwrap() * rho;
    Ok(ModifiedBayesMoments {
        inv_shift: expect_inv_shift_with(n + 2, shift, tol)?,
        inv_shift_sq: expect_inv_shift_sq_with(n + 4, shift, tol)?,
        shift,
    })
}

/// Modified Bayes rule `ν + (1 − S²/(S²+nτ²))(X−ν)`.
pub fn risk_modified_bayes<T: Real>(spec: &ProblemSpec<T>) -> Result<RiskReport<T>> {
    risk_modified_bayes_with(spec, &Tolerances::default())
}

pub fn risk_modified_bayes_with<T: Real>(
    spec: &ProblemSpec<T>,
    tol: &Tolerances<T>,
) -> Result<RiskReport<T>> {
    let kind = EstimatorKind::ModifiedBayes;
    let tau2 = known_tau2(spec, kind)?;
    let n = spec.n();
    let rho = tau2 / spec.sigma2();
    let m = modified_bayes_moments(n, rho, tol)?;
    let n_t = spec.n_real();
    let second = n_t * (n_t + T::lit(2.0)) * (T::one() + rho) * m.inv_shift_sq;
    let first = T::lit(2.0) * n_t * m.inv_shift;
    let ratio = T::one() + second - first;

    let lower = closed_form::modified_bayes_lower_bound(n, rho);
    let upper = closed_form::modified_bayes_upper_bound(n, rho);
    let slack = T::lit(16.0) * tol.rel_tol.max(T::epsilon()) * (T::one() + second + first);
    if ratio < lower - slack || ratio > upper + slack {
        return Err(Error::InternalConsistency(format!(
            "modified Bayes ratio {} outside [{}, {}] at n = {n}, rho = {}",
            to_real(ratio),
            to_real(lower),
            to_real(upper),
            to_real(rho)
        )));
    }
    let minimax = if n >= 5 || upper < T::one() {
        if ratio > T::one() + T::lit(VIOLATION_SLACK) {
            return Err(Error::InternalConsistency(format!(
                "modified Bayes ratio {} exceeds one where minimaxity is proven (n = {n}, rho = {})",
                to_real(ratio),
                to_real(rho)
            )));
        }
        Minimax::Proven
    } else {
        verdict_from_ratio(ratio)
    };
    Ok(report(
        spec,
        kind,
        tau2,
        ratio,
        Some((lower, upper)),
        minimax,
    ))
}

/// Empirical modified Bayes rule `ν + (1 − (p−2)/(n+2)·S²/‖X−ν‖²)(X−ν)`.
/// The risk is evaluated at the true τ², which the estimator itself never uses.
pub fn risk_empirical_modified_bayes<T: Real>(spec: &ProblemSpec<T>) -> Result<RiskReport<T>> {
    let kind = EstimatorKind::EmpiricalModifiedBayes;
    need_p3(spec)?;
    let tau2 = known_tau2(spec, kind)?;
    let ratio = closed_form::empirical_modified_bayes_ratio(
        spec.p() as u64,
        spec.n(),
        tau2,
        spec.sigma2(),
    )?;
    Ok(report(spec, kind, tau2, ratio, None, Minimax::Proven))
}

/// `ν + (1 − c·S²/‖X−ν‖²)(X−ν)`.
pub fn risk_general_c<T: Real>(spec: &ProblemSpec<T>, c: T) -> Result<RiskReport<T>> {
    let kind = EstimatorKind::GeneralC(c);
    kind.validate()?;
    need_p3(spec)?;
    let tau2 = known_tau2(spec, kind)?;
    let (p, n) = (spec.p() as u64, spec.n());
    let ratio = closed_form::general_c_ratio(p, n, c, tau2, spec.sigma2())?;
    let limit = closed_form::minimax_c_limit::<T>(p, n)?;
    let minimax = if c >= T::zero() && c <= limit {
        Minimax::Proven
    } else {
        verdict_from_ratio(ratio)
    };
    Ok(report(spec, kind, tau2, ratio, None, minimax))
}

/// Exact risk report for any estimator with a known risk.
pub fn exact_risk<T: Real>(
    kind: &EstimatorKind<T>,
    spec: &ProblemSpec<T>,
    tol: &Tolerances<T>,
) -> Result<RiskReport<T>> {
    match *kind {
        EstimatorKind::Mle => {
            let tau2 = spec.tau2().unwrap_or(T::nan());
            Ok(RiskReport {
                estimator: *kind,
                risk: risk_mle(spec),
                ratio: T::one(),
                lower_bound: None,
                upper_bound: None,
                minimax: Minimax::Proven,
                limit_ratio: closed_form::asymptotic_limit(tau2, spec.sigma2()),
                rho: tau2 / spec.sigma2(),
            })
        }
        EstimatorKind::Bayes => risk_bayes(spec),
        EstimatorKind::ModifiedBayes => risk_modified_bayes_with(spec, tol),
        EstimatorKind::EmpiricalModifiedBayes => risk_empirical_modified_bayes(spec),
        EstimatorKind::GeneralC(c) => risk_general_c(spec, c),
        EstimatorKind::JamesStein | EstimatorKind::JamesSteinPlus => {
            Err(invalid(format!("no closed-form Bayes risk for {kind}")))
        }
    }
}

/// `ĉ = (p−2)/(n+2)`, cross-checked against [`numeric_optimal_c`].
pub fn optimal_c<T: Real>(spec: &ProblemSpec<T>) -> Result<T> {
    need_p3(spec)?;
    let closed = closed_form::optimal_c::<T>(spec.p() as u64, spec.n())?;
    let numeric = numeric_optimal_c(spec)?;
    let rel = ((numeric - closed) / closed).abs();
    if rel > T::lit(1e-10).max(T::lit(4.0) * T::epsilon()) {
        return Err(Error::InternalConsistency(format!(
            "golden-section argmin {} disagrees with (p-2)/(n+2) = {}",
            to_real(numeric),
            to_real(closed)
        )));
    }
    Ok(closed)
}

/// Golden-section minimiser of the general-c risk over `[0, 4(p−2)/(n+2)]`,
/// run in exact rational arithmetic.
pub fn numeric_optimal_c<T: Real>(spec: &ProblemSpec<T>) -> Result<T> {
    need_p3(spec)?;
    let (p, n) = (spec.p() as u64, spec.n());
    let exact = |x: T| {
        BigRational::from_float(x.to_f64().unwrap())
            .ok_or_else(|| invalid(format!("cannot represent {x} exactly")))
    };
    // σ²/(τ²+σ²) only scales the objective; any positive τ² will do when unknown.
    let tau2 = exact(spec.tau2().unwrap_or(T::one()))?;
    let sigma2 = exact(spec.sigma2())?;
    let hi =
        closed_form::minimax_c_limit::<BigRational>(p, n)? * BigRational::from_integer(2.into());
    let width = hi.clone() * BigRational::new(1.into(), 10u64.pow(14).into());
    let argmin = closed_form::golden_section_min(
        |c: &BigRational| {
            closed_form::general_c_ratio(p, n, c.clone(), tau2.clone(), sigma2.clone())
                .expect("p ≥ 3 was checked")
        },
        BigRational::from_integer(0.into()),
        hi,
        width,
    );
    Ok(T::lit(argmin.to_f64().unwrap_or(f64::NAN)))
}

/// The upper bound on the modified Bayes ratio, minus one.
pub fn upper_bound_curve<T: Real>(n: u64, rho: T) -> T {
    closed_form::upper_bound_curve(n, rho)
}

/// `τ²/(τ²+σ²)`.
pub fn asymptotic_limit<T: Real>(spec: &ProblemSpec<T>) -> Result<T> {
    let tau2 = spec
        .tau2()
        .ok_or_else(|| Error::MissingHyperparameter("tau2", "asymptotic limit".into()))?;
    Ok(closed_form::asymptotic_limit(tau2, spec.sigma2()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnbiasednessTarget {
    /// `S²/(S²+nτ²)` as an estimate of `σ²/(σ²+τ²)`.
    ModifiedRatio,
    /// `(p−2)/(n+2) · S²/‖X−ν‖²` as an estimate of `σ²/(σ²+τ²)`.
    EmpiricalRatio,
}

/// Bias of the plug-in estimate of `σ²/(σ²+τ²)`.
pub fn unbiasedness_gap<T: Real>(spec: &ProblemSpec<T>, which: UnbiasednessTarget) -> Result<T> {
    let tau2 = spec
        .tau2()
        .ok_or_else(|| Error::MissingHyperparameter("tau2", "unbiasedness gap".into()))?;
    let sigma2 = spec.sigma2();
    match which {
        UnbiasednessTarget::EmpiricalRatio => {
            need_p3(spec)?;
            closed_form::empirical_ratio_gap(spec.p() as u64, spec.n(), tau2, sigma2)
        }
        UnbiasednessTarget::ModifiedRatio => {
            let n = spec.n();
            let rho = tau2 / sigma2;
            let tol = Tolerances::default();
            let n_t = spec.n_real();
            let mean = n_t * expect_inv_shift_with(n + 2, n_t * rho, &tol)?;
            let gap = mean - closed_form::shrink_share(tau2, sigma2);
            let (lo, hi) = closed_form::modified_ratio_gap_bracket(n, rho);
            let slack = T::lit(16.0) * tol.rel_tol;
            if gap < lo - slack || gap > hi + slack {
                return Err(Error::InternalConsistency(format!(
                    "modified ratio gap {} outside [{}, {}]",
                    to_real(gap),
                    to_real(lo),
                    to_real(hi)
                )));
            }
            Ok(gap)
        }
    }
}
