use crate::scalar::Real;

/// Natural log of the gamma function for `x > 0`.
///
/// Shifts the argument up to at least 15 with the recurrence and then applies
/// the Stirling series, which is accurate to a few ulps from there on.
pub fn ln_gamma<T: Real>(x: T) -> T {
    debug_assert!(x > T::zero(), "ln_gamma needs a positive argument");
    let threshold = T::lit(15.0);
    let mut z = x;
    let mut product = T::one();
    while z < threshold {
        product = product * z;
        z = z + T::one();
    }
    let inv = z.recip();
    let inv2 = inv * inv;
    let series = inv
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 360.0)
                    - inv2
                        * (T::lit(1.0 / 1260.0)
                            - inv2 * (T::lit(1.0 / 1680.0) - inv2 * T::lit(1.0 / 1188.0)))));
    let half_ln_two_pi = T::lit(0.918_938_533_204_672_7);
    (z - T::lit(0.5)) * z.ln() - z + half_ln_two_pi + series - product.ln()
}

/// `ln P(K = k)` for `K ~ Poisson(mean)`, `mean > 0`.
pub fn ln_poisson_weight<T: Real>(k: u64, mean: T) -> T {
    let kf = T::from_u64(k).expect("count fits the scalar");
    -mean + kf * mean.ln() - ln_gamma(kf + T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials_and_half_integers() {
        let mut fact = 1.0f64;
        for k in 1..30u32 {
            // Γ(k) = (k-1)!
            let got = ln_gamma(k as f64);
            assert!(
                (got - fact.ln()).abs() < 1e-13 * fact.ln().abs().max(1.0),
                "k={k}"
            );
            fact *= k as f64;
        }
        let half = ln_gamma(0.5f64);
        assert!((half - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        // Γ(5/2) = 3√π/4
        let g52 = ln_gamma(2.5f64);
        assert!((g52 - (0.75 * std::f64::consts::PI.sqrt()).ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_gamma_large_argument_against_statrs() {
        for &x in &[7.5, 33.0, 250.5, 5002.0, 1.0e6] {
            let want = statrs::function::gamma::ln_gamma(x);
            let got = ln_gamma(x);
            assert!(
                (got - want).abs() <= 1e-14 * want.abs(),
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn poisson_weights_sum_to_one() {
        let total: f64 = (0..200).map(|k| ln_poisson_weight(k, 20.0f64).exp()).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn works_in_single_precision() {
        let got = ln_gamma(10.0f32);
        assert!((got - 362_880f32.ln()).abs() < 1e-5);
    }
}
