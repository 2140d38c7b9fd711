//! Monte Carlo estimates of Bayes risks under the hierarchical model
//! `θ ~ N_p(ν, τ²I)`, `X | θ ~ N_p(θ, σ²I)`, `S² ~ σ²χ²_n`.
//!
//! Randomness comes from ChaCha8 streams keyed by `(seed, role)` with the
//! replicate index as the stream id, so replicate `i` sees the same numbers
//! whatever thread runs it. Replicates are grouped into fixed-size chunks;
//! chunk statistics are merged in a fixed pairwise tree, which keeps the
//! floating-point sums identical across thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::estimators::{shrinkage, EstimatorKind, ProblemSpec, Shrinkage, Summary};
use crate::scalar::Real;

/// Replicates per work item.
pub const CHUNK: u64 = 2048;

/// Largest `n` for which `χ²_n` is drawn as a sum of squared normals.
pub const SUM_OF_SQUARES_MAX_DOF: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Prior = 1,
    Noise = 2,
    Scale = 3,
    Stein = 4,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based stream for `(seed, role, index)`.
pub fn stream(seed: u64, role: Role, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ (role as u64).rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// The three streams one replicate draws from.
pub struct ReplicateStreams {
    pub prior: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub scale: ChaCha8Rng,
}

impl ReplicateStreams {
    pub fn new(seed: u64, replicate: u64) -> Self {
        Self {
            prior: stream(seed, Role::Prior, replicate),
            noise: stream(seed, Role::Noise, replicate),
            scale: stream(seed, Role::Scale, replicate),
        }
    }
}

pub fn chi_squared_by_normals<T: Real, R: rand::Rng + ?Sized>(dof: u64, rng: &mut R) -> T {
    (0..dof)
        .map(|_| {
            let z = T::standard_normal(rng);
            z * z
        })
        .fold(T::zero(), |a, b| a + b)
}

pub fn chi_squared_by_gamma<T: Real, R: rand::Rng + ?Sized>(dof: u64, rng: &mut R) -> T {
    T::chi_squared_gamma(dof, rng)
}

pub fn chi_squared<T: Real, R: rand::Rng + ?Sized>(dof: u64, rng: &mut R) -> T {
    if dof <= SUM_OF_SQUARES_MAX_DOF {
        chi_squared_by_normals(dof, rng)
    } else {
        chi_squared_by_gamma(dof, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDraw<T> {
    pub theta: Vec<T>,
    pub x: Vec<T>,
    pub s2: T,
}

impl<T: Real> SimulationDraw<T> {
    fn zeroed(p: usize) -> Self {
        Self {
            theta: vec![T::zero(); p],
            x: vec![T::zero(); p],
            s2: T::zero(),
        }
    }
}

fn draw_into<T: Real>(
    spec: &ProblemSpec<T>,
    tau: T,
    sigma: T,
    streams: &mut ReplicateStreams,
    out: &mut SimulationDraw<T>,
) {
    for ((theta, x), &nu) in out.theta.iter_mut().zip(out.x.iter_mut()).zip(spec.nu()) {
        *theta = if tau == T::zero() {
            nu
        } else {
            nu + tau * T::standard_normal(&mut streams.prior)
        };
        *x = *theta + sigma * T::standard_normal(&mut streams.noise);
    }
    out.s2 = spec.sigma2() * chi_squared::<T, _>(spec.n(), &mut streams.scale);
}

/// One draw of `(θ, X, S²)` from the model.
pub fn draw<T: Real>(
    spec: &ProblemSpec<T>,
    streams: &mut ReplicateStreams,
) -> Result<SimulationDraw<T>> {
    let tau2 = spec
        .tau2()
        .ok_or_else(|| Error::MissingHyperparameter("tau2", "simulation".into()))?;
    let mut out = SimulationDraw::zeroed(spec.p());
    draw_into(spec, tau2.sqrt(), spec.sigma2().sqrt(), streams, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig<T> {
    pub replicates: u64,
    pub seed: u64,
    pub spec: ProblemSpec<T>,
    pub estimators: Vec<EstimatorKind<T>>,
}

impl<T: Real> McConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(invalid("at least one replicate is needed"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("no estimators requested"));
        }
        if self.spec.tau2().is_none() {
            return Err(Error::MissingHyperparameter("tau2", "simulation".into()));
        }
        for kind in &self.estimators {
            kind.validate()?;
            if *kind == EstimatorKind::EmpiricalModifiedBayes && self.spec.p() < 3 {
                return Err(invalid(
                    "the empirical modified Bayes estimator needs p ≥ 3",
                ));
            }
        }
        Ok(())
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments<T> {
    pub count: u64,
    pub mean: T,
    pub m2: T,
}

impl<T: Real> Default for Moments<T> {
    fn default() -> Self {
        Self {
            count: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }
}

impl<T: Real> Moments<T> {
    pub fn push(&mut self, value: T) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean = self.mean + delta / T::from_u64(self.count).unwrap();
        self.m2 = self.m2 + delta * (value - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (
            T::from_u64(self.count).unwrap(),
            T::from_u64(other.count).unwrap(),
            T::from_u64(count).unwrap(),
        );
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }

    pub fn variance(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            self.m2 / T::from_u64(self.count - 1).unwrap()
        }
    }

    pub fn std_error(&self) -> T {
        if self.count == 0 {
            return T::zero();
        }
        (self.variance() / T::from_u64(self.count).unwrap()).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate<T> {
    pub estimator: EstimatorKind<T>,
    pub mse_mean: T,
    pub std_error: T,
    pub replicates: u64,
    pub seed: u64,
    /// Draws discarded because an estimator's norm was exactly zero.
    pub resamples: u64,
}

impl<T: Real> McEstimate<T> {
    /// `(mse_mean − exact) / std_error`.
    pub fn z_score(&self, exact: T) -> T {
        (self.mse_mean - exact) / self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedDifference<T> {
    pub mean: T,
    pub std_error: T,
}

#[derive(Debug, Clone)]
struct ChunkStats<T> {
    losses: Vec<Moments<T>>,
    // Row-major upper triangle of loss_i − loss_j for i < j.
    differences: Vec<Moments<T>>,
    resamples: u64,
}

impl<T: Real> ChunkStats<T> {
    fn new(k: usize) -> Self {
        Self {
            losses: vec![Moments::default(); k],
            differences: vec![Moments::default(); k * k.saturating_sub(1) / 2],
            resamples: 0,
        }
    }

    fn merge(&self, other: &Self) -> Self {
        Self {
            losses: self
                .losses
                .iter()
                .zip(&other.losses)
                .map(|(a, b)| a.merge(b))
                .collect(),
            differences: self
                .differences
                .iter()
                .zip(&other.differences)
                .map(|(a, b)| a.merge(b))
                .collect(),
            resamples: self.resamples + other.resamples,
        }
    }
}

fn tree_merge<T: Real>(parts: &[ChunkStats<T>]) -> ChunkStats<T> {
    match parts.len() {
        1 => parts[0].clone(),
        len => {
            let (left, right) = parts.split_at(len / 2);
            tree_merge(left).merge(&tree_merge(right))
        }
    }
}

fn pair_index(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

/// Full simulation output, including paired differences between estimators.
#[derive(Debug, Clone)]
pub struct McRun<T> {
    pub estimates: Vec<McEstimate<T>>,
    differences: Vec<Moments<T>>,
}

impl<T: Real> McRun<T> {
    /// Mean and standard error of `loss_a − loss_b` over the shared draws.
    pub fn difference(&self, a: usize, b: usize) -> PairedDifference<T> {
        let k = self.estimates.len();
        assert!(a < k && b < k, "estimator index out of range");
        if a == b {
            return PairedDifference {
                mean: T::zero(),
                std_error: T::zero(),
            };
        }
        let (i, j, sign) = if a < b {
            (a, b, T::one())
        } else {
            (b, a, -T::one())
        };
        let m = self.differences[pair_index(k, i, j)];
        PairedDifference {
            mean: sign * m.mean,
            std_error: m.std_error(),
        }
    }
}

const MAX_RESAMPLES_PER_REPLICATE: u64 = 1000;

fn run_chunk<T: Real>(config: &McConfig<T>, chunk: u64) -> Result<ChunkStats<T>> {
    let spec = &config.spec;
    let k = config.estimators.len();
    let tau = spec.tau2().unwrap().sqrt();
    let sigma = spec.sigma2().sqrt();
    let start = chunk * CHUNK;
    let end = (start + CHUNK).min(config.replicates);
    let mut stats = ChunkStats::new(k);
    let mut buf = SimulationDraw::zeroed(spec.p());
    let mut shrinks: Vec<Shrinkage<T>> = Vec::with_capacity(k);
    let mut losses = vec![T::zero(); k];
    for replicate in start..end {
        let mut streams = ReplicateStreams::new(config.seed, replicate);
        let mut attempts = 0;
        loop {
            draw_into(spec, tau, sigma, &mut streams, &mut buf);
            let summary = summarize(spec, &buf);
            shrinks.clear();
            let mut degenerate = false;
            for kind in &config.estimators {
                match shrinkage(kind, spec, &summary) {
                    Ok(s) => shrinks.push(s),
                    Err(Error::DivisionByZero(_)) => {
                        degenerate = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if !degenerate {
                break;
            }
            stats.resamples += 1;
            attempts += 1;
            if attempts >= MAX_RESAMPLES_PER_REPLICATE {
                return Err(Error::InternalConsistency(format!(
                    "replicate {replicate} kept producing zero-norm draws"
                )));
            }
        }
        for (loss, s) in losses.iter_mut().zip(&shrinks) {
            *loss = s.squared_error(spec, &buf.x, &buf.theta);
        }
        for i in 0..k {
            stats.losses[i].push(losses[i]);
            for j in i + 1..k {
                stats.differences[pair_index(k, i, j)].push(losses[i] - losses[j]);
            }
        }
    }
    Ok(stats)
}

fn summarize<T: Real>(spec: &ProblemSpec<T>, d: &SimulationDraw<T>) -> Summary<T> {
    let (offset_norm2, norm2) =
        d.x.iter()
            .zip(spec.nu())
            .fold((T::zero(), T::zero()), |(a, b), (&x, &nu)| {
                let e = x - nu;
                (a + e * e, b + x * x)
            });
    Summary {
        offset_norm2,
        norm2,
        s2: d.s2,
    }
}

/// Runs the simulation on the current rayon pool.
pub fn simulate<T: Real>(config: &McConfig<T>) -> Result<McRun<T>> {
    config.validate()?;
    let chunks = config.replicates.div_ceil(CHUNK);
    let parts: Vec<ChunkStats<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(config, c))
        .collect::<Result<_>>()?;
    let total = tree_merge(&parts);
    let estimates = config
        .estimators
        .iter()
        .zip(&total.losses)
        .map(|(kind, m)| McEstimate {
            estimator: *kind,
            mse_mean: m.mean,
            std_error: m.std_error(),
            replicates: m.count,
            seed: config.seed,
            resamples: total.resamples,
        })
        .collect();
    Ok(McRun {
        estimates,
        differences: total.differences,
    })
}

/// Empirical Bayes risk of each requested estimator over shared draws.
pub fn empirical_risk<T: Real>(config: &McConfig<T>) -> Result<Vec<McEstimate<T>>> {
    simulate(config).map(|run| run.estimates)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinCheck<T> {
    /// Mean of `Y·g(Y)`.
    pub lhs: T,
    /// Mean of `g'(Y)`.
    pub rhs: T,
    /// Standard error of the paired difference.
    pub std_error: T,
    pub z_score: T,
}

/// Checks `E[Y·g(Y)] = E[g'(Y)]` for standard normal `Y` on `samples` draws.
pub fn stein_identity_check<T, G, D>(
    g: G,
    g_prime: D,
    samples: u64,
    seed: u64,
) -> Result<SteinCheck<T>>
where
    T: Real,
    G: Fn(T) -> T + Sync,
    D: Fn(T) -> T + Sync,
{
    if samples < 2 {
        return Err(invalid("the Stein check needs at least two samples"));
    }
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<[Moments<T>; 3]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, Role::Stein, c);
            let mut m = [Moments::default(); 3];
            let end = ((c + 1) * CHUNK).min(samples);
            for _ in c * CHUNK..end {
                let y = T::standard_normal(&mut rng);
                let left = y * g(y);
                let right = g_prime(y);
                m[0].push(left);
                m[1].push(right);
                m[2].push(left - right);
            }
            m
        })
        .collect();
    fn merge_all<T: Real>(parts: &[[Moments<T>; 3]]) -> [Moments<T>; 3] {
        match parts.len() {
            1 => parts[0],
            len => {
                let (l, r) = parts.split_at(len / 2);
                let (a, b) = (merge_all(l), merge_all(r));
                [a[0].merge(&b[0]), a[1].merge(&b[1]), a[2].merge(&b[2])]
            }
        }
    }
    let [lhs, rhs, diff] = merge_all(&parts);
    let std_error = diff.std_error();
    let z_score = if std_error > T::zero() {
        diff.mean / std_error
    } else {
        T::zero()
    };
    Ok(SteinCheck {
        lhs: lhs.mean,
        rhs: rhs.mean,
        std_error,
        z_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: usize, n: u64, sigma2: f64, tau2: f64) -> ProblemSpec<f64> {
        ProblemSpec::centered(p, n, sigma2, Some(tau2)).unwrap()
    }

    #[test]
    fn zero_tau2_pins_theta_to_prior_mean() {
        let sp = ProblemSpec::new(3, 4, 1.0, vec![1.0, 2.0, 3.0], Some(0.0)).unwrap();
        for r in 0..50 {
            let d = draw(&sp, &mut ReplicateStreams::new(9, r)).unwrap();
            assert_eq!(d.theta, vec![1.0, 2.0, 3.0]);
            assert!(d.s2 > 0.0);
        }
    }

    #[test]
    fn draws_are_reproducible_per_replicate() {
        let sp = spec(4, 7, 1.5, 2.0);
        let a = draw(&sp, &mut ReplicateStreams::new(42, 17)).unwrap();
        let b = draw(&sp, &mut ReplicateStreams::new(42, 17)).unwrap();
        let c = draw(&sp, &mut ReplicateStreams::new(42, 18)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = Moments::default();
        values.iter().for_each(|&v| all.push(v));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        values[..313].iter().for_each(|&v| a.push(v));
        values[313..].iter().for_each(|&v| b.push(v));
        let merged = a.merge(&b);
        assert_eq!(merged.count, all.count);
        assert!((merged.mean - all.mean).abs() < 1e-12);
        assert!((merged.m2 - all.m2).abs() < 1e-9 * all.m2);
    }

    #[test]
    fn pair_indices_are_dense() {
        let k = 5;
        let mut seen = vec![false; k * (k - 1) / 2];
        for i in 0..k {
            for j in i + 1..k {
                seen[pair_index(k, i, j)] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn config_validation() {
        let sp = ProblemSpec::centered(2, 3, 1.0, Some(1.0)).unwrap();
        let mut cfg = McConfig {
            replicates: 10,
            seed: 1,
            spec: sp.clone(),
            estimators: vec![EstimatorKind::EmpiricalModifiedBayes],
        };
        assert!(simulate(&cfg).is_err());
        cfg.estimators = vec![];
        assert!(simulate(&cfg).is_err());
        cfg.estimators = vec![EstimatorKind::Mle];
        cfg.replicates = 0;
        assert!(simulate(&cfg).is_err());
        cfg.replicates = 10;
        cfg.spec = sp.with_tau2(None).unwrap();
        assert!(matches!(
            simulate(&cfg),
            Err(Error::MissingHyperparameter(..))
        ));
    }

    #[test]
    fn paired_difference_is_antisymmetric() {
        let cfg = McConfig {
            replicates: 5000,
            seed: 3,
            spec: spec(5, 4, 1.0, 1.0),
            estimators: vec![EstimatorKind::Mle, EstimatorKind::EmpiricalModifiedBayes],
        };
        let run = simulate(&cfg).unwrap();
        let ab = run.difference(0, 1);
        let ba = run.difference(1, 0);
        assert_eq!(ab.mean, -ba.mean);
        assert_eq!(ab.std_error, ba.std_error);
        let direct = run.estimates[0].mse_mean - run.estimates[1].mse_mean;
        assert!((ab.mean - direct).abs() < 1e-9);
    }

    #[test]
    fn stein_identity_linear() {
        let check = stein_identity_check(|y: f64| y, |_| 1.0, 200_000, 5).unwrap();
        assert!(check.z_score.abs() < 4.0, "{check:?}");
        assert_eq!(check.rhs, 1.0);
    }
}
