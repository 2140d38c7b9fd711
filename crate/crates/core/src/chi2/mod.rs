//! Central and noncentral chi-square expectations.
//!
//! `E[f(U)]` for a central `U ~ χ²_q` is computed by adaptive quadrature over
//! the half line with the density evaluated in log space. The half line is cut
//! into three pieces: a head near zero integrated in `v = √u` (which removes
//! the `u^{q/2-1}` endpoint singularity for odd `q`), a body around the bulk
//! of the law, and a tail compactified by `u = b + s·t/(1-t)`.
//!
//! The noncentral law is a Poisson mixture of central laws,
//! `E[f(χ²_q(λ))] = Σ_k P(K = k) E[f(χ²_{q+2k})]` with `K ~ Poisson(λ)` and
//! `λ = ‖θ‖²/(2σ²)`, so `E[χ²_q(λ)] = q + 2λ`.

mod quadrature;
pub mod special;

use std::ops::Range;

pub use quadrature::{Adaptive, Integral, Segment};

use crate::error::{invalid, Result};
use crate::scalar::Real;
use special::{ln_gamma, ln_poisson_weight};

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_SERIES_TAIL_MASS: f64 = 1e-12;
pub const DEFAULT_MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    pub rel_tol: T,
    pub series_tail_mass: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(DEFAULT_REL_TOL),
            series_tail_mass: T::lit(DEFAULT_SERIES_TAIL_MASS),
            max_intervals: DEFAULT_MAX_INTERVALS,
        }
    }
}

impl<T: Real> Tolerances<T> {
    pub fn with_rel_tol(rel_tol: T) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero() && self.rel_tol < T::one()) {
            return Err(invalid(format!(
                "rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if !(self.series_tail_mass > T::zero() && self.series_tail_mass < T::one()) {
            return Err(invalid(format!(
                "series_tail_mass must lie in (0, 1), got {}",
                self.series_tail_mass
            )));
        }
        Ok(())
    }
}

/// Chi-square law with `dof` degrees of freedom and noncentrality
/// `λ = ‖θ‖²/(2σ²)`; `λ = 0` is the central law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareLaw<T> {
    dof: u64,
    noncentrality: T,
}

impl<T: Real> ChiSquareLaw<T> {
    pub fn new(dof: u64, noncentrality: T) -> Result<Self> {
        if dof < 1 {
            return Err(invalid("chi-square degrees of freedom must be at least 1"));
        }
        if !(noncentrality >= T::zero()) || !noncentrality.is_finite() {
            return Err(invalid(format!(
                "noncentrality must be finite and non-negative, got {noncentrality}"
            )));
        }
        Ok(Self { dof, noncentrality })
    }

    pub fn central(dof: u64) -> Result<Self> {
        Self::new(dof, T::zero())
    }

    pub fn dof(&self) -> u64 {
        self.dof
    }

    pub fn noncentrality(&self) -> T {
        self.noncentrality
    }

    pub fn is_central(&self) -> bool {
        self.noncentrality == T::zero()
    }

    pub fn mean(&self) -> T {
        T::from_u64(self.dof).unwrap() + T::lit(2.0) * self.noncentrality
    }
}

/// Log density of the central `χ²_q` law at `u > 0`.
pub fn ln_density<T: Real>(dof: u64, u: T) -> T {
    let half_q = T::from_u64(dof).unwrap() * T::lit(0.5);
    (half_q - T::one()) * u.ln() - T::lit(0.5) * u - half_q * T::LN_2() - ln_gamma(half_q)
}

const HEAD: usize = 0;
const BODY: usize = 1;
const TAIL: usize = 2;

fn checked_dof(dof: u64) -> Result<()> {
    if dof < 1 {
        Err(invalid("chi-square degrees of freedom must be at least 1"))
    } else {
        Ok(())
    }
}

/// `∫ f(u) χ²_q(u) du` with its error estimate.
pub fn central_integral<T, F>(f: F, dof: u64, tol: &Tolerances<T>) -> Result<Integral<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    checked_dof(dof)?;
    tol.validate()?;
    let q = T::from_u64(dof).unwrap();
    let half_q = q * T::lit(0.5);
    let norm = half_q * T::LN_2() + ln_gamma(half_q);
    let ln_floor = T::min_positive_value().ln();
    let sd = (T::lit(2.0) * q).sqrt();
    let two = T::lit(2.0);
    let half = T::lit(0.5);

    let weighted = |u: T, ln_w: T| -> T {
        if ln_w < ln_floor {
            T::zero()
        } else {
            f(u) * ln_w.exp()
        }
    };

    let body_lo = q - T::lit(8.0) * sd;
    let mut segments = Vec::with_capacity(24);
    let tail_start = if body_lo <= T::zero() {
        let head_hi = (q + two * sd).sqrt();
        let pieces = 8;
        let step = head_hi / T::from_usize(pieces).unwrap();
        for i in 0..pieces {
            let lo = step * T::from_usize(i).unwrap();
            let hi = if i + 1 == pieces {
                head_hi
            } else {
                step * T::from_usize(i + 1).unwrap()
            };
            segments.push(Segment { tag: HEAD, lo, hi });
        }
        head_hi * head_hi
    } else {
        segments.push(Segment {
            tag: HEAD,
            lo: T::zero(),
            hi: body_lo.sqrt(),
        });
        let body_hi = q + T::lit(8.0) * sd;
        let pieces = 16;
        let step = (body_hi - body_lo) / T::from_usize(pieces).unwrap();
        for i in 0..pieces {
            let lo = body_lo + step * T::from_usize(i).unwrap();
            let hi = if i + 1 == pieces {
                body_hi
            } else {
                body_lo + step * T::from_usize(i + 1).unwrap()
            };
            segments.push(Segment { tag: BODY, lo, hi });
        }
        body_hi
    };
    segments.push(Segment {
        tag: TAIL,
        lo: T::zero(),
        hi: T::one(),
    });

    let integrand = |tag: usize, x: T| -> T {
        match tag {
            HEAD => {
                // u = v², du = 2v dv; the (q-1)·ln v term vanishes for q = 1.
                let u = x * x;
                let power = if dof == 1 {
                    T::zero()
                } else {
                    (q - T::one()) * x.ln()
                };
                let ln_w = power - half * u + T::LN_2() - norm;
                weighted(u, ln_w)
            }
            BODY => weighted(x, (half_q - T::one()) * x.ln() - half * x - norm),
            _ => {
                let one_minus = T::one() - x;
                if one_minus <= T::zero() {
                    return T::zero();
                }
                let u = tail_start + sd * x / one_minus;
                let ln_jac = sd.ln() - two * one_minus.ln();
                weighted(u, (half_q - T::one()) * u.ln() - half * u - norm + ln_jac)
            }
        }
    };

    Adaptive {
        rel_tol: tol.rel_tol,
        abs_tol: T::zero(),
        max_intervals: tol.max_intervals,
    }
    .integrate(integrand, &segments)
}

/// `E[f(U)]` for `U ~ χ²_q`, to relative accuracy `rel_tol`.
pub fn central_expectation<T, F>(f: F, dof: u64, rel_tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    central_integral(f, dof, &Tolerances::with_rel_tol(rel_tol)).map(|i| i.value)
}

/// Result of a truncated Poisson-mixture evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureValue<T> {
    pub value: T,
    /// Upper bound on the Poisson mass left out of the sum.
    pub tail_mass: T,
    /// Mixing indices `k` that were summed.
    pub terms: Range<u64>,
}

/// `E[f(U)]` for `U ~ χ²_q(λ)`.
///
/// Terms are added from the Poisson mode outward, always on the side whose
/// remaining mass is larger, until a geometric bound on the omitted mass on
/// both sides drops below `series_tail_mass`.
pub fn noncentral_expectation<T, F>(
    f: F,
    law: &ChiSquareLaw<T>,
    tol: &Tolerances<T>,
) -> Result<MixtureValue<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    tol.validate()?;
    let q = law.dof;
    let lambda = law.noncentrality;
    if law.is_central() {
        let value = central_integral(&f, q, tol)?.value;
        return Ok(MixtureValue {
            value,
            tail_mass: T::zero(),
            terms: 0..1,
        });
    }

    let weight = |k: u64| ln_poisson_weight(k, lambda).exp();
    let term = |k: u64| -> Result<T> {
        let w = weight(k);
        if w == T::zero() {
            return Ok(T::zero());
        }
        Ok(w * central_integral(&f, q + 2 * k, tol)?.value)
    };
    let lower_omitted = |lo: u64| -> T {
        if lo == 0 {
            T::zero()
        } else {
            // P(K ≤ lo-1) ≤ w_{lo-1} / (1 - (lo-1)/λ), valid since lo-1 < λ.
            let ratio = T::from_u64(lo - 1).unwrap() / lambda;
            weight(lo - 1) / (T::one() - ratio)
        }
    };
    let upper_omitted = |hi: u64| -> T {
        // P(K ≥ hi+1) ≤ w_{hi+1} / (1 - λ/(hi+2)), valid since hi+2 > λ.
        let ratio = lambda / T::from_u64(hi + 2).unwrap();
        weight(hi + 1) / (T::one() - ratio)
    };

    let mode = lambda.floor().to_u64().unwrap_or(0);
    let (mut lo, mut hi) = (mode, mode);
    let mut value = term(mode)?;
    loop {
        let below = lower_omitted(lo);
        let above = upper_omitted(hi);
        let omitted = below + above;
        if omitted < tol.series_tail_mass {
            return Ok(MixtureValue {
                value,
                tail_mass: omitted,
                terms: lo..hi + 1,
            });
        }
        if below > above {
            lo -= 1;
            value = value + term(lo)?;
        } else {
            hi += 1;
            value = value + term(hi)?;
        }
    }
}

/// Exponent of the inverse shift `1/(u+c)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversePower {
    One,
    Two,
}

impl InversePower {
    /// Smallest dof for which `E[1/U^k]` is finite.
    pub fn min_dof_at_zero_shift(self) -> u64 {
        match self {
            InversePower::One => 3,
            InversePower::Two => 5,
        }
    }
}

/// A request for `E[1/(U + c)^k]` under a (non)central chi-square law.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationQuery<T> {
    pub law: ChiSquareLaw<T>,
    pub shift: T,
    pub power: InversePower,
    pub rel_tol: T,
    pub series_tail_mass: T,
}

impl<T: Real> ExpectationQuery<T> {
    pub fn new(law: ChiSquareLaw<T>, shift: T, power: InversePower) -> Result<Self> {
        let defaults = Tolerances::<T>::default();
        let query = Self {
            law,
            shift,
            power,
            rel_tol: defaults.rel_tol,
            series_tail_mass: defaults.series_tail_mass,
        };
        query.validate()?;
        Ok(query)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances().validate()?;
        if !(self.shift >= T::zero()) || !self.shift.is_finite() {
            return Err(invalid(format!(
                "shift must be finite and non-negative, got {}",
                self.shift
            )));
        }
        if self.shift == T::zero() && self.law.dof < self.power.min_dof_at_zero_shift() {
            return Err(invalid(format!(
                "E[1/U^{}] does not exist for {} degrees of freedom",
                match self.power {
                    InversePower::One => 1,
                    InversePower::Two => 2,
                },
                self.law.dof
            )));
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances<T> {
        Tolerances {
            rel_tol: self.rel_tol,
            series_tail_mass: self.series_tail_mass,
            max_intervals: DEFAULT_MAX_INTERVALS,
        }
    }

    pub fn evaluate(&self) -> Result<MixtureValue<T>> {
        self.validate()?;
        let c = self.shift;
        match self.power {
            InversePower::One => {
                noncentral_expectation(|u| (u + c).recip(), &self.law, &self.tolerances())
            }
            InversePower::Two => noncentral_expectation(
                |u| {
                    let r = (u + c).recip();
                    r * r
                },
                &self.law,
                &self.tolerances(),
            ),
        }
    }
}

fn inverse_shift<T: Real>(dof: u64, c: T, power: InversePower, tol: &Tolerances<T>) -> Result<T> {
    let query = ExpectationQuery {
        law: ChiSquareLaw::central(dof)?,
        shift: c,
        power,
        rel_tol: tol.rel_tol,
        series_tail_mass: tol.series_tail_mass,
    };
    query.validate()?;
    let value = match power {
        InversePower::One => central_integral(|u| (u + c).recip(), dof, tol)?.value,
        InversePower::Two => {
            central_integral(
                |u| {
                    let r = (u + c).recip();
                    r * r
                },
                dof,
                tol,
            )?
            .value
        }
    };
    Ok(value)
}

/// `E[1/(U + c)]` for `U ~ χ²_q`. Needs `c > 0`, or `c = 0` with `q ≥ 3`.
pub fn expect_inv_shift<T: Real>(dof: u64, c: T) -> Result<T> {
    expect_inv_shift_with(dof, c, &Tolerances::default())
}

pub fn expect_inv_shift_with<T: Real>(dof: u64, c: T, tol: &Tolerances<T>) -> Result<T> {
    inverse_shift(dof, c, InversePower::One, tol)
}

/// `E[1/(U + c)²]` for `U ~ χ²_q`. Needs `c > 0`, or `c = 0` with `q ≥ 5`.
pub fn expect_inv_shift_sq<T: Real>(dof: u64, c: T) -> Result<T> {
    expect_inv_shift_sq_with(dof, c, &Tolerances::default())
}

pub fn expect_inv_shift_sq_with<T: Real>(dof: u64, c: T, tol: &Tolerances<T>) -> Result<T> {
    inverse_shift(dof, c, InversePower::Two, tol)
}

/// Both sides of `E[h(U)·U] = q·E_{q+2}[h] + 2λ·E_{q+4}[h]` for `U ~ χ²_q(λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceResidual<T> {
    pub lhs: T,
    /// `q·E_{q+2}[h]`
    pub shifted_once: T,
    /// `2λ·E_{q+4}[h]`
    pub shifted_twice: T,
}

impl<T: Real> RecurrenceResidual<T> {
    pub fn rhs(&self) -> T {
        self.shifted_once + self.shifted_twice
    }

    pub fn residual(&self) -> T {
        self.lhs - self.rhs()
    }

    /// Residual relative to the largest of the three terms.
    pub fn relative(&self) -> T {
        let scale = self
            .lhs
            .abs()
            .max(self.shifted_once.abs())
            .max(self.shifted_twice.abs());
        if scale == T::zero() {
            self.residual().abs()
        } else {
            self.residual().abs() / scale
        }
    }
}

pub fn chi2_recurrence_check<T, H>(
    h: H,
    dof: u64,
    lambda: T,
    tol: &Tolerances<T>,
) -> Result<RecurrenceResidual<T>>
where
    T: Real,
    H: Fn(T) -> T,
{
    let law = ChiSquareLaw::new(dof, lambda)?;
    let lhs = noncentral_expectation(|u| h(u) * u, &law, tol)?.value;
    let q = T::from_u64(dof).unwrap();
    let shifted_once =
        q * noncentral_expectation(&h, &ChiSquareLaw::new(dof + 2, lambda)?, tol)?.value;
    let shifted_twice = if lambda == T::zero() {
        T::zero()
    } else {
        T::lit(2.0)
            * lambda
            * noncentral_expectation(&h, &ChiSquareLaw::new(dof + 4, lambda)?, tol)?.value
    };
    Ok(RecurrenceResidual {
        lhs,
        shifted_once,
        shifted_twice,
    })
}
