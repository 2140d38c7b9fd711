//! Scalar abstractions.
//!
//! Quadrature and simulation code is written against [`Real`], which is
//! implemented for `f32` and `f64`. Closed-form risk expressions only need
//! field arithmetic and are written against [`Exact`], so they can also be
//! evaluated over exact rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

/// Floating-point scalar used by the numerical parts of the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    fn lit(x: f64) -> Self;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from the central chi-square law with `dof` degrees of freedom,
    /// via the gamma sampler.
    fn chi_squared_gamma<R: Rng + ?Sized>(dof: u64, rng: &mut R) -> Self;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn chi_squared_gamma<R: Rng + ?Sized>(dof: u64, rng: &mut R) -> Self {
        ChiSquared::new(dof as f64)
            .expect("positive degrees of freedom")
            .sample(rng)
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn chi_squared_gamma<R: Rng + ?Sized>(dof: u64, rng: &mut R) -> Self {
        ChiSquared::new(dof as f32)
            .expect("positive degrees of freedom")
            .sample(rng)
    }
}

/// Field-like scalar for closed-form expressions: `f32`, `f64`,
/// `Ratio<i64>`, `BigRational`, ...
pub trait Exact: Clone + Num + PartialOrd + FromPrimitive + Debug {
    fn from_count(k: u64) -> Self {
        Self::from_u64(k).expect("integer is representable")
    }
}

impl<T> Exact for T where T: Clone + Num + PartialOrd + FromPrimitive + Debug {}
