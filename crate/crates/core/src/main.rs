use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use shrinkage::chi2::Tolerances;
use shrinkage::estimators::{estimate, EstimatorKind, Observation, ProblemSpec};
use shrinkage::monte_carlo::{simulate, McConfig};
use shrinkage::reports::{
    bound_curve, ratio_curve, risk_difference_surface, verify_lemmas, Cell, GridRequest,
    LemmaConfig, Spacing, Table, DEFAULT_RHO_POINTS, DEFAULT_RHO_RANGE, DEFAULT_SURFACE_P,
    DEFAULT_SURFACE_POINTS, DEFAULT_SURFACE_RANGE,
};
use shrinkage::risk::{
    closed_form, exact_risk, numeric_optimal_c, optimal_c, risk_general_c, risk_mle,
};
use shrinkage::{Error, Result};

#[derive(Parser, Serialize)]
#[command(
    name = "shrinkage",
    version,
    about = "Shrinkage estimators of a normal mean: exact risks, bounds and Monte Carlo checks"
)]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, global = true, default_value_t = 20_240_601)]
    seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write a JSON manifest of the run parameters here.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Serialize)]
struct SpecArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long)]
    tau2: Option<f64>,
    /// Prior mean read from a whitespace or comma separated file.
    #[arg(long, conflicts_with = "nu_zero")]
    nu_file: Option<PathBuf>,
    /// Prior mean at the origin (the default).
    #[arg(long)]
    nu_zero: bool,
}

impl SpecArgs {
    fn build(&self) -> Result<ProblemSpec<f64>> {
        match &self.nu_file {
            Some(path) => {
                ProblemSpec::new(self.p, self.n, self.sigma2, read_vector(path)?, self.tau2)
            }
            None => ProblemSpec::centered(self.p, self.n, self.sigma2, self.tau2),
        }
    }
}

#[derive(Args, Serialize)]
struct RhoGrid {
    #[arg(long, default_value_t = DEFAULT_RHO_RANGE.0)]
    rho_min: f64,
    #[arg(long, default_value_t = DEFAULT_RHO_RANGE.1)]
    rho_max: f64,
    #[arg(long, default_value_t = DEFAULT_RHO_POINTS)]
    points: usize,
    /// Space the points evenly instead of logarithmically.
    #[arg(long)]
    linear: bool,
}

impl RhoGrid {
    fn values(&self) -> Result<Vec<f64>> {
        let spacing = if self.linear {
            Spacing::Linear
        } else {
            Spacing::Log
        };
        Ok(GridRequest::new(self.rho_min, self.rho_max, self.points, spacing)?.values())
    }

    fn describe(&self, t: Table) -> Table {
        t.meta("rho_min", self.rho_min)
            .meta("rho_max", self.rho_max)
            .meta("points", self.points)
            .meta("spacing", if self.linear { "linear" } else { "log" })
    }
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Apply an estimator to an observed vector.
    Estimate {
        /// File holding the observation x.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        s2: f64,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Exact Bayes risk, bounds and minimax verdict.
    ExactRisk {
        /// Comma separated estimator kinds.
        #[arg(long, default_value = "modified-bayes")]
        kind: String,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Monte Carlo Bayes risk with common random numbers across estimators.
    McRisk {
        #[arg(long, default_value_t = 100_000)]
        replicates: u64,
        #[arg(
            long,
            default_value = "mle,bayes,modified-bayes,empirical-modified-bayes"
        )]
        estimators: String,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Modified Bayes risk ratio and its bounds over a ρ grid.
    RatioCurve {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        grid: RhoGrid,
    },
    /// Modified Bayes risk minus pσ² over a τ² × σ² grid.
    Surface {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = DEFAULT_SURFACE_P)]
        p: usize,
        #[arg(long, default_value_t = DEFAULT_SURFACE_RANGE.0)]
        min: f64,
        #[arg(long, default_value_t = DEFAULT_SURFACE_RANGE.1)]
        max: f64,
        #[arg(long, default_value_t = DEFAULT_SURFACE_POINTS)]
        points: usize,
    },
    /// Upper bound on the modified Bayes ratio, minus one.
    BoundCurve {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        grid: RhoGrid,
    },
    /// Optimal shrinkage constant, closed form against numeric search.
    OptimalC {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Minimax verdicts for every estimator with an exact risk.
    MinimaxCheck {
        #[arg(long)]
        c: Option<f64>,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Run the numerical invariant suites; exits 1 on any failure.
    VerifyLemmas {
        #[arg(long, default_value_t = 1_000_000)]
        stein_samples: u64,
        /// Write every check instead of only the failures.
        #[arg(long)]
        all: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Estimate { .. } => "estimate",
            Command::ExactRisk { .. } => "exact-risk",
            Command::McRisk { .. } => "mc-risk",
            Command::RatioCurve { .. } => "ratio-curve",
            Command::Surface { .. } => "surface",
            Command::BoundCurve { .. } => "bound-curve",
            Command::OptimalC { .. } => "optimal-c",
            Command::MinimaxCheck { .. } => "minimax-check",
            Command::VerifyLemmas { .. } => "verify-lemmas",
        }
    }
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(|ch: char| ch == ',' || ch.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad number `{t}` in {}", path.display())))
        })
        .collect()
}

fn parse_kinds(list: &str) -> Result<Vec<EstimatorKind<f64>>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn spec_meta(t: Table, spec: &ProblemSpec<f64>) -> Table {
    let t = t
        .meta("p", spec.p())
        .meta("n", spec.n())
        .meta("sigma2", spec.sigma2());
    match spec.tau2() {
        Some(tau2) => t.meta("tau2", tau2),
        None => t,
    }
}

/// What a subcommand produced.
struct Outcome {
    table: Table,
    /// Set when an invariant check failed; the table is still written.
    failed: bool,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Self {
            table,
            failed: false,
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let tol = Tolerances::<f64>::default();
    let base = Table::default()
        .meta("command", cli.command.name())
        .meta("version", env!("CARGO_PKG_VERSION"));
    let with = |mut t: Table, columns: Table| {
        t.columns = columns.columns;
        t.rows = columns.rows;
        t.metadata.extend(columns.metadata);
        t
    };
    Ok(match &cli.command {
        Command::Estimate {
            input,
            kind,
            s2,
            spec,
        } => {
            let spec = spec.build()?;
            let kind: EstimatorKind<f64> = kind.parse()?;
            let obs = Observation::new(read_vector(input)?, *s2)?;
            let est = estimate(&kind, &spec, &obs)?;
            let mut t = Table::new(&["index", "estimate"]);
            for (i, v) in est.iter().enumerate() {
                t.push(vec![Cell::Int(i as u64), Cell::Num(*v)]);
            }
            with(spec_meta(base.meta("kind", kind).meta("s2", s2), &spec), t).into()
        }
        Command::ExactRisk { kind, spec } => {
            let spec = spec.build()?;
            let mut t = risk_table();
            for kind in parse_kinds(kind)? {
                push_risk(&mut t, &exact_risk(&kind, &spec, &tol)?);
            }
            with(spec_meta(base, &spec), t).into()
        }
        Command::McRisk {
            replicates,
            estimators,
            spec,
        } => {
            let spec = spec.build()?;
            let config = McConfig {
                replicates: *replicates,
                seed: cli.seed,
                spec: spec.clone(),
                estimators: parse_kinds(estimators)?,
            };
            let run = simulate(&config)?;
            let mut t = Table::new(&["kind", "mse_mean", "std_error", "exact_risk", "z_score"]);
            for e in &run.estimates {
                let exact = match exact_risk(&e.estimator, &spec, &tol) {
                    Ok(r) => Some(r.risk),
                    Err(Error::InvalidInput(_)) => None,
                    Err(err) => return Err(err),
                };
                let z = exact.map(|x| {
                    if e.std_error > 0.0 {
                        e.z_score(x)
                    } else if e.mse_mean == x {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                });
                t.push(vec![
                    Cell::Text(e.estimator.to_string()),
                    Cell::Num(e.mse_mean),
                    Cell::Num(e.std_error),
                    exact.map_or(Cell::Empty, Cell::Num),
                    z.map_or(Cell::Empty, Cell::Num),
                ]);
            }
            let resamples = run.estimates.first().map_or(0, |e| e.resamples);
            let meta = spec_meta(base, &spec)
                .meta("replicates", replicates)
                .meta("seed", cli.seed)
                .meta("resamples", resamples);
            with(meta, t).into()
        }
        Command::RatioCurve { n, grid } => {
            let rows = ratio_curve(*n, &grid.values()?, &tol)?;
            with(
                grid.describe(base.meta("n", n)),
                Table::from(rows.as_slice()),
            )
            .into()
        }
        Command::Surface {
            n,
            p,
            min,
            max,
            points,
        } => {
            let g = GridRequest::new(*min, *max, *points, Spacing::Linear)?.values();
            let rows = risk_difference_surface(*n, *p, &g, &g, &tol)?;
            let meta = base
                .meta("n", n)
                .meta("p", p)
                .meta("min", min)
                .meta("max", max)
                .meta("points", points)
                .meta("spacing", "linear");
            with(meta, Table::from(rows.as_slice())).into()
        }
        Command::BoundCurve { n, grid } => {
            let rows = bound_curve(*n, &grid.values()?)?;
            with(
                grid.describe(base.meta("n", n)),
                Table::from(rows.as_slice()),
            )
            .into()
        }
        Command::OptimalC { spec } => {
            let spec = spec.build()?;
            let numeric = numeric_optimal_c(&spec)?;
            let closed = optimal_c(&spec)?;
            let limit = closed_form::minimax_c_limit::<f64>(spec.p() as u64, spec.n())?;
            let mut t = Table::new(&["quantity", "value"]);
            t.push(vec![Cell::Text("closed_form".into()), Cell::Num(closed)]);
            t.push(vec![
                Cell::Text("golden_section".into()),
                Cell::Num(numeric),
            ]);
            t.push(vec![
                Cell::Text("relative_difference".into()),
                Cell::Num(((numeric - closed) / closed).abs()),
            ]);
            t.push(vec![Cell::Text("minimax_c_limit".into()), Cell::Num(limit)]);
            if spec.tau2().is_some() {
                t.push(vec![
                    Cell::Text("risk_at_optimum".into()),
                    Cell::Num(risk_general_c(&spec, closed)?.risk),
                ]);
                t.push(vec![
                    Cell::Text("risk_mle".into()),
                    Cell::Num(risk_mle(&spec)),
                ]);
            }
            with(spec_meta(base, &spec), t).into()
        }
        Command::MinimaxCheck { c, spec } => {
            let spec = spec.build()?;
            let mut kinds = vec![
                EstimatorKind::Mle,
                EstimatorKind::Bayes,
                EstimatorKind::ModifiedBayes,
            ];
            if spec.p() >= 3 {
                kinds.push(EstimatorKind::EmpiricalModifiedBayes);
                kinds.push(EstimatorKind::GeneralC(match c {
                    Some(c) => *c,
                    None => optimal_c(&spec)?,
                }));
            }
            let mut t = risk_table();
            for kind in kinds {
                push_risk(&mut t, &exact_risk(&kind, &spec, &tol)?);
            }
            with(spec_meta(base, &spec), t).into()
        }
        Command::VerifyLemmas { stein_samples, all } => {
            let cfg = LemmaConfig {
                stein_samples: *stein_samples,
                seed: cli.seed,
                ..LemmaConfig::default()
            };
            let report = verify_lemmas(&cfg);
            let mut stderr = io::stderr().lock();
            for (lemma, checks, failures) in report.summary() {
                let status = if failures == 0 { "pass" } else { "FAIL" };
                let _ = writeln!(
                    stderr,
                    "{status:4}  {lemma}: {checks} checks, {failures} failures"
                );
            }
            let mut full = Table::from(&report);
            if !all {
                full.rows.retain(|r| r[3] == Cell::Text("false".into()));
            }
            let meta = base
                .meta("seed", cli.seed)
                .meta("stein_samples", stein_samples);
            Outcome {
                table: with(meta, full),
                failed: !report.passed(),
            }
        }
    })
}

fn risk_table() -> Table {
    Table::new(&[
        "estimator",
        "risk",
        "ratio",
        "lower_bound",
        "upper_bound",
        "minimax",
        "limit_ratio",
        "rho",
    ])
}

fn push_risk(t: &mut Table, r: &shrinkage::RiskReportF64) {
    t.push(vec![
        Cell::Text(r.estimator.to_string()),
        Cell::Num(r.risk),
        Cell::Num(r.ratio),
        r.lower_bound.map_or(Cell::Empty, Cell::Num),
        r.upper_bound.map_or(Cell::Empty, Cell::Num),
        Cell::Text(r.minimax.to_string()),
        Cell::Num(r.limit_ratio),
        Cell::Num(r.rho),
    ]);
}

fn emit(cli: &Cli, table: &Table) -> io::Result<()> {
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    match cli.format {
        Format::Csv => table
            .write_csv(&mut sink)
            .map_err(|e| io::Error::other(e.to_string()))?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &table.to_json())?;
            writeln!(sink)?;
        }
    }
    sink.flush()
}

fn write_manifest(cli: &Cli, path: &Path, table: &Table) -> io::Result<()> {
    let manifest = json!({
        "tool": "shrinkage",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "arguments": cli,
        "metadata": table.to_json()["metadata"],
        "rows": table.rows.len(),
    });
    fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InternalConsistency(_) | Error::NonConvergence { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match pool.install(|| run(&cli)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = emit(&cli, &outcome.table) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if let Some(path) = &cli.manifest {
        if let Err(e) = write_manifest(&cli, path, &outcome.table) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if outcome.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
