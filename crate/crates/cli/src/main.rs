//! `poisson-cpn`: builds the covariant Poisson structures on `CP^{n-1}` and
//! runs the verification reports.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use poisson_cpn::invariants::{block_from_chart, classify_block, ClassificationMode, ClassificationResult};
use poisson_cpn::lie_core::SubalgebraKind;
use poisson_cpn::quotient_geometry::{phi2, rank_of, SpherePoint, TauField, RANK_TOL};
use poisson_cpn::scalar::{exact_sqrt, parse_exact, Exact, Scalar};
use poisson_cpn::verification::{
    adjoint_table, affine_identity_check, coisotropy_report, covariance_check, embedding_check,
    expansion_remainder, jacobi_residual, point_rng, proportionality_check, rank_map, AdTableRow,
    RankSample, VerificationReport, Witness, AFFINE_TOL, COISOTROPY_TOL, COVARIANCE_TOL, EMBEDDING_TOL,
    JACOBI_STEP, JACOBI_TOL, PROPORTIONALITY_TOL,
};
use poisson_cpn::Error;

const THREADS_ENV: &str = "POISSON_CPN_THREADS";
/// Floating-point tolerance for the Ad table when `--exact` is off.
const TABLE_TOL: f64 = 1e-12;
/// Tolerance on the kernel of `τ_1 - τ_c` at `[e_1]` before classification.
const BLOCK_KERNEL_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "poisson-cpn", version, about = "Covariant Poisson structures on CP^{n-1}")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coisotropy of a block subgroup for the affine structure π_{σ_c}.
    Coisotropy {
        #[command(flatten)]
        base: Base,
        #[arg(long, value_enum, default_value_t = Subgroup::U)]
        subgroup: Subgroup,
        #[arg(long, default_value_t = COISOTROPY_TOL)]
        tol: f64,
    },
    /// τ_c in its canonical chart at random points.
    Tensor {
        #[command(flatten)]
        base: Base,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = RANK_TOL)]
        tol: f64,
    },
    /// Rank of τ_c at random points, in chart-1 coordinates.
    RankMap {
        #[command(flatten)]
        base: Base,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = RANK_TOL)]
        tol: f64,
    },
    /// Numerical checks of the structural theorems.
    Verify {
        #[command(subcommand)]
        check: Check,
    },
    /// Classifies the block of τ_1 - τ_c at [e_1] against λ·J_std.
    ClassifyInvariant {
        #[command(flatten)]
        base: Base,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, value_enum, default_value_t = Mode::U)]
        mode: Mode,
        #[arg(long, default_value_t = poisson_cpn::invariants::CLASSIFY_TOL)]
        tol: f64,
    },
    /// The eight rows of the Ad_{σ_c^{-1}} table and the expansion of Ad_{σ_c^{-1}} r.
    AdjointTable {
        #[command(flatten)]
        base: Base,
        /// Exact rational arithmetic; needs √c and √(1-c) rational.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = TABLE_TOL)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum Check {
    /// Jacobi identity of τ_c by central differences.
    Jacobi {
        #[command(flatten)]
        base: Base,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = JACOBI_STEP)]
        step: f64,
        #[arg(long, default_value_t = JACOBI_TOL)]
        tol: f64,
    },
    /// τ_c on the slice |v_1| = √c against the standard structure of CP^{n-2}.
    Embedding {
        #[command(flatten)]
        base: Base,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = EMBEDDING_TOL)]
        tol: f64,
    },
    /// Covariance of τ_c under the SU(n) action.
    Covariance {
        #[command(flatten)]
        base: Base,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = COVARIANCE_TOL)]
        tol: f64,
    },
    /// The affine identity Λ_σ(gh) = Λ_σ(g) + Ad_g Λ_σ(h) - Ad_g X_σ.
    Affine {
        #[command(flatten)]
        base: Base,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = AFFINE_TOL)]
        tol: f64,
    },
    /// τ_1 - τ_c as a constant multiple of the canonical tensor.
    Proportionality {
        #[command(flatten)]
        base: Base,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = PROPORTIONALITY_TOL)]
        tol: f64,
    },
}

#[derive(Args)]
struct Base {
    #[arg(long, value_parser = parse_n)]
    n: usize,
    /// Decimal or fraction in [0, 1].
    #[arg(long, value_parser = parse_c)]
    c: CValue,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Subgroup {
    U,
    SuBottom,
    SuTop,
}

impl From<Subgroup> for SubalgebraKind {
    fn from(s: Subgroup) -> Self {
        match s {
            Subgroup::U => SubalgebraKind::UBottom,
            Subgroup::SuBottom => SubalgebraKind::SuBottom,
            Subgroup::SuTop => SubalgebraKind::SuTop,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Su,
    U,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// `c` as typed, kept exact for `--exact`.
#[derive(Clone)]
struct CValue {
    exact: Exact,
    value: f64,
}

fn parse_n(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|_| format!("`{s}` is not a dimension"))?;
    if n < 2 {
        return Err("n must be at least 2".into());
    }
    Ok(n)
}

fn parse_c(s: &str) -> Result<CValue, String> {
    let exact = parse_exact(s).ok_or_else(|| format!("`{s}` is not a decimal or fraction"))?;
    let value = exact.to_f64();
    if !(0.0..=1.0).contains(&value) {
        return Err("c must lie in [0, 1]".into());
    }
    Ok(CValue { exact, value })
}

enum Failure {
    Usage(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", usage_for_args());
            }
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let path = command_path(&cli.command);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", usage(&path));
            ExitCode::from(2)
        }
    }
}

fn command_path(command: &Command) -> Vec<&'static str> {
    match command {
        Command::Coisotropy { .. } => vec!["coisotropy"],
        Command::Tensor { .. } => vec!["tensor"],
        Command::RankMap { .. } => vec!["rank-map"],
        Command::ClassifyInvariant { .. } => vec!["classify-invariant"],
        Command::AdjointTable { .. } => vec!["adjoint-table"],
        Command::Verify { check } => vec![
            "verify",
            match check {
                Check::Jacobi { .. } => "jacobi",
                Check::Embedding { .. } => "embedding",
                Check::Covariance { .. } => "covariance",
                Check::Affine { .. } => "affine",
                Check::Proportionality { .. } => "proportionality",
            },
        ],
    }
}

/// Flag grammar of the subcommand at `path`.
fn usage<S: AsRef<str>>(path: &[S]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let mut cur = &mut cmd;
    for name in path {
        cur = cur.find_subcommand_mut(name.as_ref()).expect("known subcommand");
    }
    cur.render_help().to_string()
}

/// [`usage`] for the longest valid subcommand prefix of argv.
fn usage_for_args() -> String {
    let cmd = Cli::command();
    let mut cur = &cmd;
    let mut path = Vec::new();
    for arg in std::env::args().skip(1) {
        match cur.find_subcommand(&arg) {
            Some(sub) => {
                path.push(arg);
                cur = sub;
            }
            None => break,
        }
    }
    usage(&path)
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => return Err(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Coisotropy { base, subgroup, tol } => {
            json_only(&base)?;
            let mut report = coisotropy_report(base.n, base.c.value, subgroup.into(), tol)?;
            let residual = report.max_residual;
            report.measured.insert("residual".into(), json!(residual));
            emit_report(&base, &report)
        }
        Command::Tensor { base, sampling, tol } => {
            json_only(&base)?;
            tensor(&base, &sampling, tol)
        }
        Command::RankMap { base, sampling, tol } => rank_map_cmd(&base, &sampling, tol),
        Command::Verify { check } => verify(check),
        Command::ClassifyInvariant {
            base,
            sampling,
            mode,
            tol,
        } => {
            json_only(&base)?;
            classify(&base, &sampling, mode, tol)
        }
        Command::AdjointTable { base, exact, tol } => {
            json_only(&base)?;
            table(&base, exact, tol)
        }
    }
}

fn verify(check: Check) -> Outcome {
    let (base, report, tol) = match check {
        Check::Jacobi {
            base,
            sampling,
            step,
            tol,
        } => {
            if step.is_nan() || step <= 0.0 {
                return Err(Failure::Usage("--step must be positive".into()));
            }
            let r = jacobi_residual(base.n, base.c.value, sampling.samples as usize, step, sampling.seed)?;
            (base, r, tol)
        }
        Check::Embedding { base, sampling, tol } => {
            let r = embedding_check(base.n, base.c.value, sampling.samples as usize, sampling.seed)?;
            (base, r, tol)
        }
        Check::Covariance { base, sampling, tol } => {
            // split the budget into a near-square grid of group elements and points
            let total = sampling.samples as usize;
            let groups = (total as f64).sqrt().ceil() as usize;
            let points = total.div_ceil(groups);
            let r = covariance_check(base.n, base.c.value, groups, points, sampling.seed)?;
            (base, r, tol)
        }
        Check::Affine { base, sampling, tol } => {
            let r = affine_identity_check(base.n, base.c.value, sampling.samples as usize, sampling.seed)?;
            (base, r, tol)
        }
        Check::Proportionality { base, sampling, tol } => {
            let r = proportionality_check(base.n, base.c.value, sampling.samples as usize, sampling.seed)?;
            (base, r, tol)
        }
    };
    json_only(&base)?;
    emit_report(&base, &with_tolerance(report, tol))
}

/// Re-evaluates `pass` against a user tolerance.
fn with_tolerance(mut report: VerificationReport, tol: f64) -> VerificationReport {
    report.params.insert("tolerance".into(), json!(tol));
    report.pass = !report.max_residual.is_nan() && report.max_residual < tol;
    report
}

#[derive(Serialize)]
struct TensorSample {
    index: usize,
    chart: usize,
    coordinates: Vec<f64>,
    rank: usize,
    matrix: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn tensor(base: &Base, sampling: &Sampling, tol: f64) -> Outcome {
    let field = TauField::new(base.n, base.c.value)?;
    let points = (0..sampling.samples as usize)
        .map(|i| {
            let p = phi2(&SpherePoint::random(base.n, &mut point_rng(sampling.seed, i as u64)));
            let t = field.at(&p)?;
            Ok(TensorSample {
                index: i,
                chart: p.chart() + 1,
                coordinates: p.real_coordinates().iter().copied().collect(),
                rank: rank_of(t.matrix(), tol),
                matrix: rows(t.matrix()),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let out = json!({
        "check": "tensor",
        "params": base_params(base, Some(sampling), tol),
        "points": points,
    });
    write_output(base, &to_json(&out))
}

fn rank_map_cmd(base: &Base, sampling: &Sampling, tol: f64) -> Outcome {
    let samples = rank_map(base.n, base.c.value, sampling.samples as usize, tol, sampling.seed)?;
    let ranks_even = samples.iter().all(|s| s.rank % 2 == 0);
    let text = match base.format {
        Format::Csv => rank_csv(base.n, &samples)?,
        Format::Json => {
            let mut histogram = BTreeMap::new();
            for s in &samples {
                *histogram.entry(s.rank.to_string()).or_insert(0usize) += 1;
            }
            to_json(&json!({
                "check": "rank_map",
                "params": base_params(base, Some(sampling), tol),
                "pass": ranks_even,
                "histogram": histogram,
                "samples": samples,
            }))
        }
    };
    write_output(base, &text)?;
    if ranks_even {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn rank_csv(n: usize, samples: &[RankSample]) -> Result<String, Failure> {
    let mut header = Vec::new();
    if n == 2 {
        header.extend(["chart_re".to_string(), "chart_im".to_string()]);
    } else {
        for j in 2..=n {
            header.push(format!("chart_re_{j}"));
            header.push(format!("chart_im_{j}"));
        }
    }
    header.push("rank".into());
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Usage(e.to_string());
    w.write_record(&header).map_err(io)?;
    for s in samples {
        let mut record: Vec<String> = s.chart1.iter().map(|x| x.to_string()).collect();
        record.push(s.rank.to_string());
        w.write_record(&record).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Usage(e.to_string()))
}

#[derive(Serialize)]
struct ClassifyOutput {
    check: &'static str,
    params: BTreeMap<String, Value>,
    pass: bool,
    block: Vec<Vec<f64>>,
    #[serde(flatten)]
    result: ClassificationResult,
}

fn classify(base: &Base, sampling: &Sampling, mode: Mode, tol: f64) -> Outcome {
    use poisson_cpn::quotient_geometry::ChartBivector;
    let p = phi2(&SpherePoint::basis_vector(base.n, 0));
    let d = TauField::new(base.n, 1.0)?.at(&p)?.into_matrix() - TauField::new(base.n, base.c.value)?.at(&p)?.into_matrix();
    let t = ChartBivector::new(p, (&d - d.transpose()) * 0.5)?;
    let block = match block_from_chart(&t, BLOCK_KERNEL_TOL) {
        Ok(b) => b,
        Err(Error::InvariantViolation { what, residual }) => {
            eprintln!("{what} has residual {residual:e}");
            return Err(Failure::Check);
        }
        Err(e) => return Err(e.into()),
    };
    let mode = match mode {
        Mode::Su => ClassificationMode::SuInvariant,
        Mode::U => ClassificationMode::UInvariant,
    };
    let result = classify_block(&block, mode, sampling.samples as usize, sampling.seed, tol);
    let mut params = base_params(base, Some(sampling), tol);
    params.insert("mode".into(), json!(mode));
    let pass = result.lambda().is_some();
    let out = ClassifyOutput {
        check: "classify_invariant",
        params,
        pass,
        block: rows(block.matrix()),
        result,
    };
    write_output(base, &to_json(&out))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

#[derive(Serialize)]
struct TableOutput {
    #[serde(flatten)]
    report: VerificationReport,
    rows: Vec<AdTableRow>,
}

fn table(base: &Base, exact: bool, tol: f64) -> Outcome {
    let n = base.n;
    let (rows, expansion, expansion_zero) = if exact {
        let one = Exact::from_i64(1);
        let s = exact_sqrt(&base.c.exact);
        let t = exact_sqrt(&(one - base.c.exact.clone()));
        let (Some(s), Some(t)) = (s, t) else {
            return Err(Failure::Usage(format!(
                "--exact needs √c and √(1-c) rational; c = {} does not qualify",
                base.c.exact
            )));
        };
        let rows = adjoint_table(n, s.clone(), t.clone())?;
        let rem = expansion_remainder(n, s, t)?;
        let zero = rem.coeffs().iter().all(|z| *z == Exact::from_i64(0));
        let max = rem.coeffs().iter().fold(0.0f64, |m, z| m.max(z.abs_f64()));
        (rows, max, zero)
    } else {
        let c = base.c.value;
        let rows = adjoint_table(n, c.sqrt(), (1.0 - c).sqrt())?;
        let rem = expansion_remainder(n, c.sqrt(), (1.0 - c).sqrt())?;
        let max = rem.coeffs().amax();
        (rows, max, max == 0.0)
    };
    let mut samples: Vec<Witness> = rows
        .iter()
        .map(|r| Witness {
            index: r.row,
            point: vec![],
            residual: r.max_remainder,
        })
        .collect();
    // the full expansion of Ad_{σ^{-1}} r follows the eight table rows
    samples.push(Witness {
        index: rows.len() + 1,
        point: vec![],
        residual: expansion,
    });
    let mut params = base_params(base, None, tol);
    params.insert("exact".into(), json!(exact));
    let mut report = VerificationReport::from_samples("adjoint_table", params, tol, samples);
    if exact {
        report.params.insert("tolerance".into(), json!(0.0));
        report.pass = rows.iter().all(|r| r.zero) && expansion_zero;
    }
    report.measured.insert("expansion_remainder".into(), json!(expansion));
    report.measured.insert("expansion_zero".into(), json!(expansion_zero));
    let pass = report.pass;
    write_output(base, &to_json(&TableOutput { report, rows }))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn base_params(base: &Base, sampling: Option<&Sampling>, tol: f64) -> BTreeMap<String, Value> {
    let mut p = BTreeMap::new();
    p.insert("n".into(), json!(base.n));
    p.insert("c".into(), json!(base.c.value));
    p.insert("tolerance".into(), json!(tol));
    if let Some(s) = sampling {
        p.insert("seed".into(), json!(s.seed));
        p.insert("samples".into(), json!(s.samples));
    }
    p
}

fn json_only(base: &Base) -> Outcome {
    if base.format == Format::Csv {
        return Err(Failure::Usage("CSV output is only available for rank-map".into()));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize to JSON")
}

fn emit_report(base: &Base, report: &VerificationReport) -> Outcome {
    write_output(base, &to_json(report))?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn write_output(base: &Base, text: &str) -> Outcome {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &base.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            // a closed pipe (`| head`) is not an error
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Usage(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}
