//! Point estimators of the mean `θ` of `X | θ ~ N_p(θ, σ²I)` with a
//! variance statistic `S² ~ σ²χ²_n` and prior `θ ~ N_p(ν, τ²I)`.
//!
//! Every estimator here has the form `target + w·(x − target)` for a scalar
//! shrink weight `w`, where the target is the prior mean `ν` (or the origin
//! for the James–Stein baselines). [`Shrinkage`] exposes that pair so the
//! Monte Carlo loop can score an estimator without allocating.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    p: usize,
    n: u64,
    sigma2: T,
    nu: Vec<T>,
    /// `None` when τ² is unknown.
    tau2: Option<T>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(p: usize, n: u64, sigma2: T, nu: Vec<T>, tau2: Option<T>) -> Result<Self> {
        if p < 1 {
            return Err(invalid("dimension p must be at least 1"));
        }
        if n < 1 {
            return Err(invalid("degrees of freedom n must be at least 1"));
        }
        if nu.len() != p {
            return Err(Error::InvalidDimension {
                expected: p,
                got: nu.len(),
            });
        }
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(invalid(format!(
                "sigma2 must be positive and finite, got {sigma2}"
            )));
        }
        if let Some(t) = tau2 {
            if !(t >= T::zero()) || !t.is_finite() {
                return Err(invalid(format!(
                    "tau2 must be non-negative and finite, got {t}"
                )));
            }
        }
        if nu.iter().any(|v| !v.is_finite()) {
            return Err(invalid("prior mean must be finite"));
        }
        Ok(Self {
            p,
            n,
            sigma2,
            nu,
            tau2,
        })
    }

    /// Spec with prior mean at the origin.
    pub fn centered(p: usize, n: u64, sigma2: T, tau2: Option<T>) -> Result<Self> {
        Self::new(p, n, sigma2, vec![T::zero(); p], tau2)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn nu(&self) -> &[T] {
        &self.nu
    }

    pub fn tau2(&self) -> Option<T> {
        self.tau2
    }

    pub fn with_tau2(mut self, tau2: Option<T>) -> Result<Self> {
        if let Some(t) = tau2 {
            if !(t >= T::zero()) || !t.is_finite() {
                return Err(invalid(format!(
                    "tau2 must be non-negative and finite, got {t}"
                )));
            }
        }
        self.tau2 = tau2;
        Ok(self)
    }

    pub(crate) fn require_tau2(&self, who: &EstimatorKind<T>) -> Result<T> {
        self.tau2
            .ok_or_else(|| Error::MissingHyperparameter("tau2", who.to_string()))
    }

    /// `ρ = τ²/σ²`, when τ² is known.
    pub fn rho(&self) -> Option<T> {
        self.tau2.map(|t| t / self.sigma2)
    }

    pub(crate) fn p_real(&self) -> T {
        T::from_usize(self.p).unwrap()
    }

    pub(crate) fn n_real(&self) -> T {
        T::from_u64(self.n).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T> {
    pub x: Vec<T>,
    pub s2: T,
}

impl<T: Real> Observation<T> {
    pub fn new(x: Vec<T>, s2: T) -> Result<Self> {
        if !(s2 > T::zero()) || !s2.is_finite() {
            return Err(invalid(format!("s2 must be positive and finite, got {s2}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("observation must be finite"));
        }
        Ok(Self { x, s2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind<T> {
    Mle,
    Bayes,
    ModifiedBayes,
    EmpiricalModifiedBayes,
    GeneralC(T),
    JamesStein,
    JamesSteinPlus,
}

impl<T: Real> EstimatorKind<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorKind::GeneralC(c) if !c.is_finite() => {
                Err(invalid("general-c constant must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Whether the estimator needs τ².
    pub fn needs_tau2(&self) -> bool {
        matches!(self, EstimatorKind::Bayes | EstimatorKind::ModifiedBayes)
    }

    pub fn shrinks_toward_origin(&self) -> bool {
        matches!(
            self,
            EstimatorKind::JamesStein | EstimatorKind::JamesSteinPlus
        )
    }

    fn divides_by_norm(&self) -> bool {
        matches!(
            self,
            EstimatorKind::EmpiricalModifiedBayes
                | EstimatorKind::GeneralC(_)
                | EstimatorKind::JamesStein
                | EstimatorKind::JamesSteinPlus
        )
    }
}

impl<T: Real> fmt::Display for EstimatorKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Mle => f.write_str("mle"),
            EstimatorKind::Bayes => f.write_str("bayes"),
            EstimatorKind::ModifiedBayes => f.write_str("modified-bayes"),
            EstimatorKind::EmpiricalModifiedBayes => f.write_str("empirical-modified-bayes"),
            EstimatorKind::GeneralC(c) => write!(f, "general-c:{c}"),
            EstimatorKind::JamesStein => f.write_str("james-stein"),
            EstimatorKind::JamesSteinPlus => f.write_str("james-stein-plus"),
        }
    }
}

impl<T: Real> FromStr for EstimatorKind<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "mle" | "x" => EstimatorKind::Mle,
            "bayes" => EstimatorKind::Bayes,
            "modified-bayes" | "mb" => EstimatorKind::ModifiedBayes,
            "empirical-modified-bayes" | "emb" | "eb" => EstimatorKind::EmpiricalModifiedBayes,
            "james-stein" | "js" => EstimatorKind::JamesStein,
            "james-stein-plus" | "js+" | "jsp" => EstimatorKind::JamesSteinPlus,
            other => {
                let value = other
                    .strip_prefix("general-c:")
                    .or_else(|| other.strip_prefix("general-c="))
                    .or_else(|| other.strip_prefix("c="))
                    .ok_or_else(|| invalid(format!("unknown estimator kind `{s}`")))?;
                let c: f64 = value
                    .parse()
                    .map_err(|_| invalid(format!("bad general-c constant `{value}`")))?;
                EstimatorKind::GeneralC(T::lit(c))
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Where an estimator shrinks toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    PriorMean,
    Origin,
}

/// `target + weight·(x − target)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shrinkage<T> {
    pub target: Target,
    pub weight: T,
}

/// Sufficient scalars of an observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    /// `‖x − ν‖²`
    pub offset_norm2: T,
    /// `‖x‖²`
    pub norm2: T,
    pub s2: T,
}

impl<T: Real> Summary<T> {
    pub fn of(spec: &ProblemSpec<T>, obs: &Observation<T>) -> Self {
        let (offset_norm2, norm2) =
            obs.x
                .iter()
                .zip(&spec.nu)
                .fold((T::zero(), T::zero()), |(a, b), (&x, &nu)| {
                    let d = x - nu;
                    (a + d * d, b + x * x)
                });
        Self {
            offset_norm2,
            norm2,
            s2: obs.s2,
        }
    }
}

/// Shrink weight of `kind` for the given summary.
pub fn shrinkage<T: Real>(
    kind: &EstimatorKind<T>,
    spec: &ProblemSpec<T>,
    summary: &Summary<T>,
) -> Result<Shrinkage<T>> {
    kind.validate()?;
    let one = T::one();
    let p = spec.p_real();
    let n = spec.n_real();
    let two = T::lit(2.0);
    let s2 = summary.s2;
    if kind.divides_by_norm() {
        let norm = if kind.shrinks_toward_origin() {
            summary.norm2
        } else {
            summary.offset_norm2
        };
        if norm == T::zero() {
            return Err(Error::DivisionByZero(if kind.shrinks_toward_origin() {
                "‖x‖² = 0"
            } else {
                "‖x − ν‖² = 0"
            }));
        }
    }
    let shrinkage = match *kind {
        EstimatorKind::Mle => Shrinkage {
            target: Target::PriorMean,
            weight: one,
        },
        EstimatorKind::Bayes => {
            let tau2 = spec.require_tau2(kind)?;
            Shrinkage {
                target: Target::PriorMean,
                weight: one - spec.sigma2 / (tau2 + spec.sigma2),
            }
        }
        EstimatorKind::ModifiedBayes => {
            let tau2 = spec.require_tau2(kind)?;
            Shrinkage {
                target: Target::PriorMean,
                weight: one - s2 / (s2 + n * tau2),
            }
        }
        EstimatorKind::EmpiricalModifiedBayes => {
            if spec.p < 3 {
                return Err(invalid(
                    "the empirical modified Bayes estimator needs p ≥ 3",
                ));
            }
            let c = (p - two) / (n + two);
            Shrinkage {
                target: Target::PriorMean,
                weight: one - c * s2 / summary.offset_norm2,
            }
        }
        EstimatorKind::GeneralC(c) => Shrinkage {
            target: Target::PriorMean,
            weight: one - c * s2 / summary.offset_norm2,
        },
        EstimatorKind::JamesStein | EstimatorKind::JamesSteinPlus => {
            let w = one - (p - two) * s2 / ((n + two) * summary.norm2);
            Shrinkage {
                target: Target::Origin,
                weight: if *kind == EstimatorKind::JamesSteinPlus {
                    w.max(T::zero())
                } else {
                    w
                },
            }
        }
    };
    Ok(shrinkage)
}

impl<T: Real> Shrinkage<T> {
    pub fn apply(&self, spec: &ProblemSpec<T>, x: &[T]) -> Vec<T> {
        match self.target {
            Target::PriorMean => x
                .iter()
                .zip(&spec.nu)
                .map(|(&xi, &nu)| nu + self.weight * (xi - nu))
                .collect(),
            Target::Origin => x.iter().map(|&xi| self.weight * xi).collect(),
        }
    }

    /// `‖δ(x) − θ‖²` without materialising `δ(x)`.
    pub fn squared_error(&self, spec: &ProblemSpec<T>, x: &[T], theta: &[T]) -> T {
        let w = self.weight;
        match self.target {
            Target::PriorMean => x
                .iter()
                .zip(&spec.nu)
                .zip(theta)
                .map(|((&xi, &nu), &th)| {
                    let e = nu + w * (xi - nu) - th;
                    e * e
                })
                .sum(),
            Target::Origin => x
                .iter()
                .zip(theta)
                .map(|(&xi, &th)| {
                    let e = w * xi - th;
                    e * e
                })
                .sum(),
        }
    }
}

/// Evaluates estimator `kind` at `obs`.
pub fn estimate<T: Real>(
    kind: &EstimatorKind<T>,
    spec: &ProblemSpec<T>,
    obs: &Observation<T>,
) -> Result<Vec<T>> {
    if obs.x.len() != spec.p {
        return Err(Error::InvalidDimension {
            expected: spec.p,
            got: obs.x.len(),
        });
    }
    let summary = Summary::of(spec, obs);
    Ok(shrinkage(kind, spec, &summary)?.apply(spec, &obs.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(p: usize, n: u64, sigma2: f64, nu: Vec<f64>, tau2: Option<f64>) -> ProblemSpec<f64> {
        ProblemSpec::new(p, n, sigma2, nu, tau2).unwrap()
    }

    #[test]
    fn modified_bayes_halves_at_s2_equal_n_tau2() {
        let sp = spec(3, 4, 1.0, vec![1.0, -2.0, 0.5], Some(0.75));
        let obs = Observation::new(vec![3.0, 0.0, 1.5], 3.0).unwrap();
        let got = estimate(&EstimatorKind::ModifiedBayes, &sp, &obs).unwrap();
        assert_eq!(got, vec![2.0, -1.0, 1.0]);
    }

    #[test]
    fn bayes_midpoint_when_tau2_equals_sigma2() {
        let sp = spec(2, 5, 2.0, vec![1.0, 1.0], Some(2.0));
        let obs = Observation::new(vec![3.0, -1.0], 1.0).unwrap();
        let got = estimate(&EstimatorKind::Bayes, &sp, &obs).unwrap();
        assert_eq!(got, vec![2.0, 0.0]);
    }

    #[test]
    fn empirical_modified_bayes_hand_value() {
        // (p−2)/(n+2) = 1/4, s2/‖x−ν‖² = 4/4 → weight 3/4.
        let sp = spec(3, 2, 1.0, vec![1.0, 2.0, 3.0], None);
        let obs = Observation::new(vec![3.0, 2.0, 3.0], 4.0).unwrap();
        let got = estimate(&EstimatorKind::EmpiricalModifiedBayes, &sp, &obs).unwrap();
        assert_eq!(got, vec![2.5, 2.0, 3.0]);
    }

    #[test]
    fn observation_at_prior_mean() {
        let sp = spec(3, 4, 1.0, vec![0.5, 0.5, 0.5], Some(1.0));
        let obs = Observation::new(vec![0.5, 0.5, 0.5], 2.0).unwrap();
        for kind in [
            EstimatorKind::Mle,
            EstimatorKind::Bayes,
            EstimatorKind::ModifiedBayes,
        ] {
            assert_eq!(estimate(&kind, &sp, &obs).unwrap(), sp.nu().to_vec());
        }
        for kind in [
            EstimatorKind::EmpiricalModifiedBayes,
            EstimatorKind::GeneralC(0.3),
        ] {
            assert!(matches!(
                estimate(&kind, &sp, &obs),
                Err(Error::DivisionByZero(_))
            ));
        }
    }

    #[test]
    fn james_stein_needs_nonzero_x() {
        let sp = spec(3, 4, 1.0, vec![1.0; 3], None);
        let obs = Observation::new(vec![0.0; 3], 2.0).unwrap();
        assert!(matches!(
            estimate(&EstimatorKind::JamesStein, &sp, &obs),
            Err(Error::DivisionByZero(_))
        ));
    }

    #[test]
    fn james_stein_plus_clamps() {
        let sp = spec(5, 2, 1.0, vec![0.0; 5], None);
        // (p−2)/(n+2) · s2/‖x‖² = 3/4 · 8/1 = 6 → negative weight
        let obs = Observation::new(vec![1.0, 0.0, 0.0, 0.0, 0.0], 8.0).unwrap();
        let js = estimate(&EstimatorKind::JamesStein, &sp, &obs).unwrap();
        assert_eq!(js[0], -5.0);
        let jsp = estimate(&EstimatorKind::JamesSteinPlus, &sp, &obs).unwrap();
        assert_eq!(jsp[0], 0.0);
    }

    #[test]
    fn missing_tau2_and_bad_dimensions() {
        let sp = spec(3, 4, 1.0, vec![0.0; 3], None);
        let obs = Observation::new(vec![1.0; 3], 1.0).unwrap();
        assert!(matches!(
            estimate(&EstimatorKind::ModifiedBayes, &sp, &obs),
            Err(Error::MissingHyperparameter(..))
        ));
        let short = Observation::new(vec![1.0; 2], 1.0).unwrap();
        assert!(matches!(
            estimate(&EstimatorKind::Mle, &sp, &short),
            Err(Error::InvalidDimension { .. })
        ));
        let sp2 = spec(2, 4, 1.0, vec![0.0; 2], None);
        assert!(estimate(&EstimatorKind::EmpiricalModifiedBayes, &sp2, &short).is_err());
        assert!(ProblemSpec::new(0, 1, 1.0, vec![], None).is_err());
        assert!(ProblemSpec::new(2, 0, 1.0, vec![0.0; 2], None).is_err());
        assert!(ProblemSpec::new(2, 1, 0.0, vec![0.0; 2], None).is_err());
        assert!(ProblemSpec::new(2, 1, 1.0, vec![0.0; 2], Some(-1.0)).is_err());
        assert!(ProblemSpec::new(2, 1, 1.0, vec![0.0; 3], None).is_err());
        assert!(Observation::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn zero_tau2_collapses_to_prior_mean() {
        let sp = spec(2, 3, 1.0, vec![1.0, -1.0], Some(0.0));
        let obs = Observation::new(vec![4.0, 2.0], 1.5).unwrap();
        assert_eq!(
            estimate(&EstimatorKind::ModifiedBayes, &sp, &obs).unwrap(),
            vec![1.0, -1.0]
        );
    }

    #[test]
    fn kind_round_trips_through_strings() {
        for kind in [
            EstimatorKind::Mle,
            EstimatorKind::Bayes,
            EstimatorKind::ModifiedBayes,
            EstimatorKind::EmpiricalModifiedBayes,
            EstimatorKind::GeneralC(0.625),
            EstimatorKind::JamesStein,
            EstimatorKind::JamesSteinPlus,
        ] {
            let parsed: EstimatorKind<f64> = kind.to_string().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("bogus".parse::<EstimatorKind<f64>>().is_err());
        assert!("general-c:inf".parse::<EstimatorKind<f64>>().is_err());
    }

    fn nu_kinds() -> Vec<EstimatorKind<f64>> {
        vec![
            EstimatorKind::Mle,
            EstimatorKind::Bayes,
            EstimatorKind::ModifiedBayes,
            EstimatorKind::EmpiricalModifiedBayes,
            EstimatorKind::GeneralC(0.4),
        ]
    }

    proptest! {
        #[test]
        fn translation_equivariance(
            offset in prop::collection::vec(-5.0f64..5.0, 4),
            nu in prop::collection::vec(-5.0f64..5.0, 4),
            shift in prop::collection::vec(-10.0f64..10.0, 4),
            s2 in 0.1f64..10.0,
            tau2 in 0.0f64..5.0,
        ) {
            prop_assume!(offset.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let sp = spec(4, 6, 1.3, nu.clone(), Some(tau2));
            let shifted_nu: Vec<f64> = nu.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let sp_shift = spec(4, 6, 1.3, shifted_nu, Some(tau2));
            let x: Vec<f64> = nu.iter().zip(&offset).map(|(a, b)| a + b).collect();
            let xs: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
            for kind in nu_kinds() {
                let base = estimate(&kind, &sp, &Observation::new(x.clone(), s2).unwrap()).unwrap();
                let moved = estimate(&kind, &sp_shift, &Observation::new(xs.clone(), s2).unwrap()).unwrap();
                for i in 0..4 {
                    prop_assert!((moved[i] - base[i] - shift[i]).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn scale_consistency(
            offset in prop::collection::vec(-5.0f64..5.0, 3),
            nu in prop::collection::vec(-5.0f64..5.0, 3),
            s2 in 0.1f64..10.0,
            tau2 in 0.01f64..5.0,
            t in 0.1f64..10.0,
        ) {
            prop_assume!(offset.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let x: Vec<f64> = nu.iter().zip(&offset).map(|(a, b)| a + b).collect();
            let sp = spec(3, 5, 0.7, nu.clone(), Some(tau2));
            let scaled_nu: Vec<f64> = nu.iter().map(|v| v * t).collect();
            let sp_t = spec(3, 5, 0.7 * t * t, scaled_nu.clone(), Some(tau2 * t * t));
            let xt: Vec<f64> = scaled_nu.iter().zip(&offset).map(|(a, b)| a + b * t).collect();
            for kind in nu_kinds().into_iter().filter(|k| *k != EstimatorKind::Mle) {
                let base = estimate(&kind, &sp, &Observation::new(x.clone(), s2).unwrap()).unwrap();
                let scaled = estimate(&kind, &sp_t, &Observation::new(xt.clone(), s2 * t * t).unwrap()).unwrap();
                for i in 0..3 {
                    let want = (base[i] - nu[i]) * t;
                    prop_assert!((scaled[i] - scaled_nu[i] - want).abs() < 1e-9 * (1.0 + want.abs()));
                }
            }
        }

        #[test]
        fn empirical_is_general_c_at_its_constant(
            x in prop::collection::vec(-5.0f64..5.0, 5),
            s2 in 0.1f64..10.0,
            n in 1u64..50,
        ) {
            prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let sp = spec(5, n, 1.0, vec![0.0; 5], None);
            let obs = Observation::new(x, s2).unwrap();
            let c = 3.0 / (n as f64 + 2.0);
            let a = estimate(&EstimatorKind::EmpiricalModifiedBayes, &sp, &obs).unwrap();
            let b = estimate(&EstimatorKind::GeneralC(c), &sp, &obs).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn positive_part_weight_in_unit_interval(
            x in prop::collection::vec(-5.0f64..5.0, 4),
            s2 in 0.01f64..50.0,
        ) {
            prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let sp = spec(4, 3, 1.0, vec![0.0; 4], None);
            let obs = Observation::new(x, s2).unwrap();
            let summary = Summary::of(&sp, &obs);
            let plus = shrinkage(&EstimatorKind::JamesSteinPlus, &sp, &summary).unwrap();
            let plain = shrinkage(&EstimatorKind::JamesStein, &sp, &summary).unwrap();
            prop_assert!(plus.weight >= 0.0 && plus.weight <= 1.0);
            if plain.weight >= 0.0 {
                prop_assert_eq!(plus.weight, plain.weight);
            }
        }

        #[test]
        fn modified_bayes_weight_in_open_unit_interval(
            s2 in 1e-3f64..100.0,
            tau2 in 1e-3f64..100.0,
            n in 1u64..100,
        ) {
            let sp = spec(2, n, 1.0, vec![0.0; 2], Some(tau2));
            let summary = Summary { offset_norm2: 1.0, norm2: 1.0, s2 };
            let w = shrinkage(&EstimatorKind::ModifiedBayes, &sp, &summary).unwrap().weight;
            prop_assert!(w > 0.0 && w < 1.0);
        }
    }

    #[test]
    fn squared_error_matches_materialised_estimate() {
        let sp = spec(3, 4, 1.0, vec![0.5, -0.5, 1.0], Some(2.0));
        let obs = Observation::new(vec![1.0, 2.0, -3.0], 1.7).unwrap();
        let theta = [0.2, 0.1, -0.4];
        for kind in nu_kinds()
            .into_iter()
            .chain([EstimatorKind::JamesStein, EstimatorKind::JamesSteinPlus])
        {
            let est = estimate(&kind, &sp, &obs).unwrap();
            let direct: f64 = est.iter().zip(&theta).map(|(a, b)| (a - b) * (a - b)).sum();
            let s = shrinkage(&kind, &sp, &Summary::of(&sp, &obs)).unwrap();
            assert!((s.squared_error(&sp, &obs.x, &theta) - direct).abs() < 1e-12);
        }
    }
}
