//! Figure grids, the lemma verification suite and stable table output.

use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::chi2::{
    central_expectation, chi2_recurrence_check, expect_inv_shift_sq_with, expect_inv_shift_with,
    noncentral_expectation, ChiSquareLaw, Tolerances,
};
use crate::error::{invalid, Error, Result};
use crate::estimators::ProblemSpec;
use crate::monte_carlo::{
    chi_squared_by_gamma, chi_squared_by_normals, stein_identity_check, stream, Moments, Role,
};
use crate::risk::{risk_mle, risk_modified_bayes_with, upper_bound_curve};
use crate::scalar::Real;

pub const DEFAULT_RHO_RANGE: (f64, f64) = (0.01, 20.0);
pub const DEFAULT_RHO_POINTS: usize = 200;
pub const DEFAULT_SURFACE_RANGE: (f64, f64) = (0.1, 10.0);
pub const DEFAULT_SURFACE_POINTS: usize = 50;
pub const DEFAULT_SURFACE_P: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRequest<T> {
    pub lo: T,
    pub hi: T,
    pub points: usize,
    pub spacing: Spacing,
}

impl<T: Real> GridRequest<T> {
    pub fn new(lo: T, hi: T, points: usize, spacing: Spacing) -> Result<Self> {
        let grid = Self {
            lo,
            hi,
            points,
            spacing,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(invalid(format!(
                "grid needs finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.points < 2 {
            return Err(invalid("a grid needs at least two points"));
        }
        if self.spacing == Spacing::Log && self.lo <= T::zero() {
            return Err(invalid("a log-spaced grid needs lo > 0"));
        }
        Ok(())
    }

    /// Grid points with both endpoints hit exactly.
    pub fn values(&self) -> Vec<T> {
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.lo;
                }
                if i == last {
                    return self.hi;
                }
                let t = T::from_usize(i).unwrap() / T::from_usize(last).unwrap();
                match self.spacing {
                    Spacing::Linear => self.lo + t * (self.hi - self.lo),
                    Spacing::Log => (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow<T> {
    pub rho: T,
    pub exact_ratio: T,
    pub lower_bound: T,
    pub upper_bound: T,
}

/// Modified Bayes risk ratio with its bounds at each `ρ`.
pub fn ratio_curve<T: Real>(n: u64, rhos: &[T], tol: &Tolerances<T>) -> Result<Vec<RatioRow<T>>> {
    if n < 1 {
        return Err(invalid("n must be at least 1"));
    }
    rhos.par_iter()
        .map(|&rho| {
            let spec = ProblemSpec::centered(1, n, T::one(), Some(rho))?;
            let r = risk_modified_bayes_with(&spec, tol)?;
            Ok(RatioRow {
                rho,
                exact_ratio: r.ratio,
                lower_bound: r.lower_bound.unwrap_or(T::nan()),
                upper_bound: r.upper_bound.unwrap_or(T::nan()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow<T> {
    pub tau2: T,
    pub sigma2: T,
    /// Modified Bayes risk minus `pσ²`.
    pub delta_risk: T,
}

/// `Δ_R` over the `τ² × σ²` product grid, `τ²` varying slowest.
pub fn risk_difference_surface<T: Real>(
    n: u64,
    p: usize,
    tau2s: &[T],
    sigma2s: &[T],
    tol: &Tolerances<T>,
) -> Result<Vec<SurfaceRow<T>>> {
    if n < 1 || p < 1 {
        return Err(invalid("n and p must be at least 1"));
    }
    let cells: Vec<(T, T)> = tau2s
        .iter()
        .flat_map(|&t| sigma2s.iter().map(move |&s| (t, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(tau2, sigma2)| {
            let spec = ProblemSpec::centered(p, n, sigma2, Some(tau2))?;
            let r = risk_modified_bayes_with(&spec, tol)?;
            Ok(SurfaceRow {
                tau2,
                sigma2,
                delta_risk: r.risk - risk_mle(&spec),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow<T> {
    pub rho: T,
    pub upper_bound_minus_one: T,
}

pub fn bound_curve<T: Real>(n: u64, rhos: &[T]) -> Result<Vec<BoundRow<T>>> {
    if n < 1 {
        return Err(invalid("n must be at least 1"));
    }
    Ok(rhos
        .iter()
        .map(|&rho| BoundRow {
            rho,
            upper_bound_minus_one: upper_bound_curve(n, rho),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Lemma suite

/// Bracket functions checked by the suite. Tests swap one out to make sure a
/// broken bound is reported.
#[derive(Clone, Copy)]
pub struct Brackets {
    /// Bounds on `E_{χ²_{n+2}}[1/(u+c)]`.
    pub inv_lower: fn(u64, f64) -> f64,
    pub inv_upper: fn(u64, f64) -> f64,
    /// Bounds on `E_{χ²_{n+4}}[1/(u+c)²]`.
    pub sq_lower: fn(u64, f64) -> f64,
    pub sq_upper: fn(u64, f64) -> f64,
}

impl Default for Brackets {
    fn default() -> Self {
        Self {
            inv_lower: |n, c| 1.0 / (n as f64 + 2.0 + c),
            inv_upper: |n, c| 1.0 / (n as f64 + c),
            sq_lower: |n, c| (n as f64 + 4.0 + c).powi(-2),
            sq_upper: |n, c| (n as f64 + c).powi(-2),
        }
    }
}

#[derive(Clone)]
pub struct LemmaConfig {
    pub dofs: Vec<u64>,
    pub lambdas: Vec<f64>,
    pub shifts: Vec<f64>,
    pub tolerances: Tolerances<f64>,
    /// Relative slack allowed on inequalities that hold exactly.
    pub slack: f64,
    pub recurrence_tol: f64,
    pub mixture_tol: f64,
    pub stein_samples: u64,
    pub stein_z: f64,
    pub seed: u64,
    pub brackets: Brackets,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            dofs: (1..=60).collect(),
            lambdas: vec![0.0, 1.0, 5.0, 20.0],
            shifts: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            tolerances: Tolerances::default(),
            slack: 1e-9,
            recurrence_tol: 1e-8,
            mixture_tol: 1e-12,
            stein_samples: 1_000_000,
            stein_z: 4.0,
            seed: 0x5eed,
            brackets: Brackets::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub lemma: &'static str,
    pub point: String,
    /// Distance from failing; negative means the check failed.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LemmaReport {
    pub checks: Vec<CheckOutcome>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// `(lemma, checks, failures)` in first-seen order.
    pub fn summary(&self) -> Vec<(&'static str, usize, usize)> {
        let mut out: Vec<(&'static str, usize, usize)> = Vec::new();
        for c in &self.checks {
            match out.iter_mut().find(|s| s.0 == c.lemma) {
                Some(s) => {
                    s.1 += 1;
                    s.2 += usize::from(!c.passed);
                }
                None => out.push((c.lemma, 1, usize::from(!c.passed))),
            }
        }
        out
    }
}

pub const MONOTONICITY: &str = "chi-square monotonicity";
pub const BRACKETS: &str = "inverse-moment brackets";
pub const RECURRENCE: &str = "chi-square recurrence";
pub const STEIN: &str = "stein identity";
pub const MIXTURE: &str = "mixture consistency";
pub const TRUNCATION: &str = "poisson truncation";
pub const SAMPLERS: &str = "chi-square samplers";

fn outcome(lemma: &'static str, point: String, margin: f64) -> CheckOutcome {
    CheckOutcome {
        lemma,
        point,
        margin,
        passed: margin >= 0.0 && margin.is_finite(),
    }
}

fn errored(lemma: &'static str, point: String, err: &Error) -> CheckOutcome {
    CheckOutcome {
        lemma,
        point: format!("{point} ({err})"),
        margin: f64::NEG_INFINITY,
        passed: false,
    }
}

fn monotonicity(cfg: &LemmaConfig) -> Vec<CheckOutcome> {
    let jobs: Vec<(u64, f64, f64)> = cfg
        .dofs
        .iter()
        .flat_map(|&q| {
            cfg.lambdas
                .iter()
                .flat_map(move |&l| cfg.shifts.iter().map(move |&c| (q, l, c)))
        })
        .collect();
    jobs.par_iter()
        .flat_map_iter(|&(q, lambda, c)| {
            let point = format!("q={q} lambda={lambda} c={c}");
            let eval = |dof| -> Result<(f64, f64)> {
                let m = noncentral_expectation(
                    |u: f64| 1.0 / (u + c),
                    &ChiSquareLaw::new(dof, lambda)?,
                    &cfg.tolerances,
                )?;
                Ok((m.value, m.tail_mass))
            };
            let result = eval(q).and_then(|a| eval(q + 2).map(|b| (a, b)));
            let mut out = Vec::with_capacity(2);
            match result {
                Ok(((here, tail_here), (next, tail_next))) => {
                    out.push(outcome(
                        MONOTONICITY,
                        point.clone(),
                        here * (1.0 + cfg.slack) - next,
                    ));
                    let worst_tail = tail_here.max(tail_next);
                    out.push(outcome(
                        TRUNCATION,
                        point,
                        cfg.tolerances.series_tail_mass - worst_tail,
                    ));
                }
                Err(e) => out.push(errored(MONOTONICITY, point, &e)),
            }
            out
        })
        .collect()
}

fn brackets(cfg: &LemmaConfig) -> Vec<CheckOutcome> {
    let b = cfg.brackets;
    let jobs: Vec<(u64, f64)> = cfg
        .dofs
        .iter()
        .flat_map(|&n| cfg.shifts.iter().map(move |&c| (n, c)))
        .collect();
    jobs.par_iter()
        .flat_map_iter(|&(n, c)| {
            let point = format!("n={n} c={c}");
            let mut out = Vec::with_capacity(2);
            match expect_inv_shift_with(n + 2, c, &cfg.tolerances) {
                Ok(v) => {
                    let (lo, hi) = ((b.inv_lower)(n, c), (b.inv_upper)(n, c));
                    let margin = (v - lo * (1.0 - cfg.slack)).min(hi * (1.0 + cfg.slack) - v) / hi;
                    out.push(outcome(BRACKETS, format!("E[1/(u+c)] {point}"), margin));
                }
                Err(e) => out.push(errored(BRACKETS, point.clone(), &e)),
            }
            match expect_inv_shift_sq_with(n + 4, c, &cfg.tolerances) {
                Ok(v) => {
                    let (lo, hi) = ((b.sq_lower)(n, c), (b.sq_upper)(n, c));
                    let margin = (v - lo * (1.0 - cfg.slack)).min(hi * (1.0 + cfg.slack) - v) / hi;
                    out.push(outcome(BRACKETS, format!("E[1/(u+c)^2] {point}"), margin));
                }
                Err(e) => out.push(errored(BRACKETS, point, &e)),
            }
            out
        })
        .collect()
}

type NamedFn = (&'static str, fn(f64) -> f64);
type Derivative = (&'static str, fn(f64) -> f64, fn(f64) -> f64);

fn recurrence(cfg: &LemmaConfig) -> Vec<CheckOutcome> {
    let hs: [NamedFn; 3] = [
        ("1", |_| 1.0),
        ("1/(u+1)", |u| 1.0 / (u + 1.0)),
        ("1/(u+2)", |u| 1.0 / (u + 2.0)),
    ];
    let jobs: Vec<(usize, u64, f64)> = (0..hs.len())
        .flat_map(|h| {
            cfg.dofs
                .iter()
                .flat_map(move |&q| cfg.lambdas.iter().map(move |&l| (h, q, l)))
        })
        .collect();
    jobs.par_iter()
        .map(|&(h, q, lambda)| {
            let point = format!("h={} q={q} lambda={lambda}", hs[h].0);
            match chi2_recurrence_check(hs[h].1, q, lambda, &cfg.tolerances) {
                Ok(r) => outcome(RECURRENCE, point, cfg.recurrence_tol - r.relative()),
                Err(e) => errored(RECURRENCE, point, &e),
            }
        })
        .collect()
}

fn mixture_consistency(cfg: &LemmaConfig) -> Vec<CheckOutcome> {
    cfg.dofs
        .par_iter()
        .map(|&q| {
            let point = format!("q={q}");
            let f = |u: f64| 1.0 / (u + 1.0);
            let result = ChiSquareLaw::new(q, 0.0).and_then(|law| {
                let mixed = noncentral_expectation(f, &law, &cfg.tolerances)?.value;
                let central = central_expectation(f, q, cfg.tolerances.rel_tol)?;
                Ok(((mixed - central) / central).abs())
            });
            match result {
                Ok(rel) => outcome(MIXTURE, point, cfg.mixture_tol - rel),
                Err(e) => errored(MIXTURE, point, &e),
            }
        })
        .collect()
}

fn stein(cfg: &LemmaConfig) -> Vec<CheckOutcome> {
    let gs: [Derivative; 3] = [
        ("y", |y| y, |_| 1.0),
        ("y^3", |y| y * y * y, |y| 3.0 * y * y),
        (
            "y/(1+y^2)",
            |y| y / (1.0 + y * y),
            |y| {
                let d = 1.0 + y * y;
                (1.0 - y * y) / (d * d)
            },
        ),
    ];
    gs.iter()
        .enumerate()
        .map(|(i, &(name, g, gp))| {
            let point = format!("g={name} N={}", cfg.stein_samples);
            match stein_identity_check(g, gp, cfg.stein_samples, cfg.seed.wrapping_add(i as u64)) {
                Ok(s) => outcome(STEIN, point, cfg.stein_z - s.z_score.abs()),
                Err(e) => errored(STEIN, point, &e),
            }
        })
        .collect()
}

/// Sum-of-squares and gamma samplers agree in mean and variance at dofs on
/// both sides of the switch-over.
fn samplers(cfg: &LemmaConfig) -> Vec<CheckOutcome> {
    let samples = (cfg.stein_samples / 10).max(1000);
    [1u64, 5, 30, 64, 65, 200]
        .par_iter()
        .map(|&dof| {
            let mut a = stream(cfg.seed, Role::Scale, dof);
            let mut b = stream(cfg.seed, Role::Scale, dof + 1_000_000);
            let (mut ma, mut mb) = (Moments::<f64>::default(), Moments::<f64>::default());
            for _ in 0..samples {
                ma.push(chi_squared_by_normals(dof, &mut a));
                mb.push(chi_squared_by_gamma(dof, &mut b));
            }
            let se = (ma.std_error().powi(2) + mb.std_error().powi(2)).sqrt();
            let z_mean = ((ma.mean - mb.mean) / se).abs();
            // Both should also match the exact mean q.
            let q = dof as f64;
            let z_exact = ((ma.mean - q) / ma.std_error())
                .abs()
                .max(((mb.mean - q) / mb.std_error()).abs());
            outcome(
                SAMPLERS,
                format!("dof={dof} N={samples}"),
                cfg.stein_z - z_mean.max(z_exact),
            )
        })
        .collect()
}

/// Runs every invariant suite. Quadrature checks are deterministic; the
/// stochastic ones depend on `seed`.
pub fn verify_lemmas(cfg: &LemmaConfig) -> LemmaReport {
    let mut checks = Vec::new();
    checks.extend(monotonicity(cfg));
    checks.extend(brackets(cfg));
    checks.extend(recurrence(cfg));
    checks.extend(mixture_consistency(cfg));
    checks.extend(stein(cfg));
    checks.extend(samplers(cfg));
    LemmaReport { checks }
}

// ---------------------------------------------------------------------------
// Tables

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn num<T: Real>(x: T) -> Self {
        Cell::Num(x.to_f64().unwrap_or(f64::NAN))
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(k) => json!(k),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Seventeen significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    /// Written as `# key = value` lines ahead of the header.
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        for (k, v) in &self.metadata {
            writeln!(out, "# {k} = {v}").map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 output")
    }

    pub fn to_json(&self) -> Value {
        let metadata: Map<String, Value> = self
            .metadata
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.clone(), cell.json()))
                        .collect(),
                )
            })
            .collect();
        json!({ "metadata": metadata, "columns": self.columns, "rows": rows })
    }
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("cannot write output: {e}"))
}

impl<T: Real> From<&[RatioRow<T>]> for Table {
    fn from(rows: &[RatioRow<T>]) -> Self {
        let mut t = Table::new(&["rho", "exact_ratio", "lower_bound", "upper_bound"]);
        for r in rows {
            t.push(vec![
                Cell::num(r.rho),
                Cell::num(r.exact_ratio),
                Cell::num(r.lower_bound),
                Cell::num(r.upper_bound),
            ]);
        }
        t
    }
}

impl<T: Real> From<&[SurfaceRow<T>]> for Table {
    fn from(rows: &[SurfaceRow<T>]) -> Self {
        let mut t = Table::new(&["tau2", "sigma2", "delta_risk"]);
        for r in rows {
            t.push(vec![
                Cell::num(r.tau2),
                Cell::num(r.sigma2),
                Cell::num(r.delta_risk),
            ]);
        }
        t
    }
}

impl<T: Real> From<&[BoundRow<T>]> for Table {
    fn from(rows: &[BoundRow<T>]) -> Self {
        let mut t = Table::new(&["rho", "upper_bound_minus_one"]);
        for r in rows {
            t.push(vec![Cell::num(r.rho), Cell::num(r.upper_bound_minus_one)]);
        }
        t
    }
}

impl From<&LemmaReport> for Table {
    fn from(report: &LemmaReport) -> Self {
        let mut t = Table::new(&["lemma", "point", "margin", "passed"]);
        for c in &report.checks {
            t.push(vec![
                Cell::Text(c.lemma.to_string()),
                Cell::Text(c.point.clone()),
                Cell::Num(c.margin),
                Cell::Text(c.passed.to_string()),
            ]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LemmaConfig {
        LemmaConfig {
            dofs: vec![1, 2, 5, 12],
            lambdas: vec![0.0, 3.0],
            shifts: vec![0.1, 10.0],
            stein_samples: 20_000,
            ..LemmaConfig::default()
        }
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = GridRequest::new(0.01, 20.0, 200, Spacing::Log)
            .unwrap()
            .values();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[199], 20.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let l = GridRequest::new(0.0, 1.0, 5, Spacing::Linear)
            .unwrap()
            .values();
        assert_eq!(l, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(GridRequest::new(0.0, 1.0, 5, Spacing::Log).is_err());
        assert!(GridRequest::new(1.0, 1.0, 5, Spacing::Linear).is_err());
        assert!(GridRequest::new(0.0, 1.0, 1, Spacing::Linear).is_err());
    }

    #[test]
    fn ratio_curve_rows_are_sandwiched() {
        let rhos = GridRequest::new(0.01, 20.0, 15, Spacing::Log)
            .unwrap()
            .values();
        for r in ratio_curve(5, &rhos, &Tolerances::default()).unwrap() {
            assert!(r.lower_bound <= r.exact_ratio && r.exact_ratio <= r.upper_bound);
            assert!(r.exact_ratio < 1.0);
        }
    }

    #[test]
    fn surface_is_negative_for_moderate_n() {
        let g = GridRequest::new(0.1, 10.0, 6, Spacing::Linear)
            .unwrap()
            .values();
        let rows = risk_difference_surface(22, 10, &g, &g, &Tolerances::default()).unwrap();
        assert_eq!(rows.len(), 36);
        assert!(rows.iter().all(|r| r.delta_risk < 0.0));
        assert_eq!((rows[1].tau2, rows[1].sigma2), (g[0], g[1]));
    }

    #[test]
    fn surface_difference_vanishes_with_sigma2() {
        let rows =
            risk_difference_surface(22, 10, &[1.0f64], &[1e-3, 1e-6], &Tolerances::default())
                .unwrap();
        assert!(rows[1].delta_risk.abs() < rows[0].delta_risk.abs());
        assert!(rows[1].delta_risk.abs() < 1e-4);
    }

    #[test]
    fn bound_curve_tends_to_zero_from_below() {
        let rows = bound_curve(100, &[0.1f64, 1.0, 10.0, 1e6]).unwrap();
        assert!(rows.iter().all(|r| r.upper_bound_minus_one <= 0.0));
        assert!(rows[3].upper_bound_minus_one.abs() < 1e-5);
    }

    #[test]
    fn small_lemma_suite_passes() {
        let report = verify_lemmas(&small());
        let failures: Vec<_> = report.failures().collect();
        assert!(failures.is_empty(), "{failures:?}");
        let names: Vec<_> = report.summary().into_iter().map(|s| s.0).collect();
        for lemma in [
            MONOTONICITY,
            TRUNCATION,
            BRACKETS,
            RECURRENCE,
            MIXTURE,
            STEIN,
            SAMPLERS,
        ] {
            assert!(names.contains(&lemma), "{lemma} missing");
        }
    }

    #[test]
    fn corrupted_bracket_is_caught_by_name() {
        let mut cfg = small();
        // Tighten the upper bound past the true value.
        cfg.brackets.inv_upper = |n, c| 1.0 / (n as f64 + 2.0 + c);
        let report = verify_lemmas(&cfg);
        assert!(!report.passed());
        assert!(report.failures().all(|f| f.lemma == BRACKETS));
    }

    #[test]
    fn verdicts_do_not_depend_on_seed() {
        let a = verify_lemmas(&small());
        let b = verify_lemmas(&LemmaConfig {
            seed: 99,
            ..small()
        });
        assert_eq!(a.passed(), b.passed());
        assert_eq!(a.checks.len(), b.checks.len());
    }

    #[test]
    fn csv_is_stable() {
        let mut t = Table::new(&["a", "b"]).meta("n", 5);
        t.push(vec![Cell::Num(0.1), Cell::Text("mle".into())]);
        t.push(vec![Cell::Num(f64::NAN), Cell::Empty]);
        let s = t.to_csv_string();
        assert_eq!(s, "# n = 5\na,b\n1.0000000000000001e-1,mle\nNaN,\n");
        assert_eq!(t.to_json()["rows"][1]["a"], Value::Null);
    }
}
