use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fraccalc::derivative::{caputo_derivative, fourier_derivative, gl_derivative, rl_derivative};
use fraccalc::dist::{dist_apply, DistDescriptor};
use fraccalc::integral::rl_integral_any;
use fraccalc::report::VerificationReport;
use fraccalc::rules::decompose_high_order;
use fraccalc::suites::{run_suite, SuiteConfig, SUITES};
use fraccalc::weak::{weak_derivative_compute, TestFunction};
use fraccalc::{Direction, Error, GridFunction};
use serde::Serialize;

/// Fractional integrals and derivatives on CSV grids, and numerical checks
/// of their calculus rules.
#[derive(Parser)]
#[command(name = "fraccalc", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply an operator to an `x,value` CSV.
    Compute(ComputeArgs),
    /// Run a verification suite and report every case.
    Verify(VerifyArgs),
    /// Evaluate a distribution descriptor on a bump test function.
    Apply(ApplyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    /// Riemann–Liouville derivative, 0 < alpha < 1
    RlDeriv,
    /// Riemann–Liouville integral of order sigma > 0
    Integral,
    /// Caputo derivative in weak form
    Caputo,
    /// Grünwald–Letnikov sum with the grid spacing as step (uniform grids)
    Gl,
    /// Fourier multiplier (uniform grid treated as one period)
    Fourier,
    /// 1 < alpha < 2 as d/dx of the order alpha-1 derivative
    Decompose,
    /// Weak derivative with the absolute-continuity diagnostic
    Weak,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Left,
    Right,
}

impl From<Dir> for Direction {
    fn from(d: Dir) -> Direction {
        match d {
            Dir::Left => Direction::Left,
            Dir::Right => Direction::Right,
        }
    }
}

#[derive(clap::Args)]
struct ComputeArgs {
    #[arg(long, value_enum)]
    op: Op,
    #[arg(long, value_enum, default_value = "left")]
    dir: Dir,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    input: PathBuf,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Emit {"x": [...], "value": [...], "warnings": [...]} instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    #[arg(long)]
    alpha: Option<f64>,
    /// Resolution: node count for most suites, interval count for the
    /// step-function suites, 1/h for the backend comparisons.
    #[arg(long)]
    n: Option<usize>,
    /// Override the tolerance of every non-order case.
    #[arg(long)]
    tol: Option<f64>,
    /// Half-width of the Fourier backend's periodic window.
    #[arg(long)]
    window: Option<f64>,
    /// Highest product-rule order.
    #[arg(long)]
    m: Option<usize>,
    /// Print the JSON report instead of a table.
    #[arg(long)]
    json: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
#[command(allow_negative_numbers = true)]
struct ApplyArgs {
    /// Descriptor JSON, inline or as a file path. CSV paths inside a file
    /// resolve against the file's directory.
    #[arg(long)]
    dist: String,
    #[arg(long)]
    center: f64,
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
}

/// Exit codes: 1 failing case, 2 bad flags, 3 unreadable input, 4 numerics.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure { code: 2, msg: msg.into() }
    }

    fn input(e: Error) -> Failure {
        Failure { code: 3, msg: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::NonConvergence { .. } | Error::NonConvergentSum(_) => 4,
            Error::Parse(_) | Error::Io(_) => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.cmd {
        Cmd::Compute(a) => compute(a),
        Cmd::Verify(a) => verify(a),
        Cmd::Apply(a) => apply(a),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn need(v: Option<f64>, flag: &str, op: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| Failure::usage(format!("--op {op} needs --{flag}")))
}

fn derivative_order(alpha: Option<f64>, op: &str) -> Result<f64, Failure> {
    let a = need(alpha, "alpha", op)?;
    if !(a > 0.0 && a < 1.0) {
        let hint = if a > 1.0 && a < 2.0 { "; for 1 < alpha < 2 use --op decompose" } else { "" };
        return Err(Failure::usage(format!("--op {op} needs 0 < alpha < 1, got {a}{hint}")));
    }
    Ok(a)
}

fn uniform_step(u: &GridFunction) -> Result<f64, Failure> {
    let x = u.nodes();
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if x.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Failure::usage("--op gl needs a uniform grid"));
    }
    Ok(h)
}

#[derive(Serialize)]
struct JsonGrid<'a> {
    x: &'a [f64],
    value: Vec<Option<f64>>,
    warnings: &'a [String],
}

fn compute(a: ComputeArgs) -> Result<u8, Failure> {
    let u = GridFunction::load(&a.input).map_err(Failure::input)?;
    let dir: Direction = a.dir.into();
    let mut warnings = Vec::new();
    let out = match a.op {
        Op::RlDeriv => rl_derivative(&u, dir, derivative_order(a.alpha, "rl-deriv")?)?,
        Op::Caputo => caputo_derivative(&u, dir, derivative_order(a.alpha, "caputo")?)?,
        Op::Integral => {
            let s = need(a.sigma, "sigma", "integral")?;
            if !(s > 0.0 && s.is_finite()) {
                return Err(Failure::usage(format!("--sigma must be positive, got {s}")));
            }
            rl_integral_any(&u, dir, s)?
        }
        Op::Gl => {
            let alpha = derivative_order(a.alpha, "gl")?;
            let h = uniform_step(&u)?;
            let iv = u.grid().interval();
            let vals = u
                .nodes()
                .iter()
                .map(|&x| gl_derivative(|y| u.interp(y), iv, dir, alpha, h, x))
                .collect::<Result<Vec<f64>, Error>>()?;
            GridFunction::new(u.grid().clone(), vals)?
        }
        Op::Fourier => {
            let alpha = need(a.alpha, "alpha", "fourier")?;
            let (d, w) = fourier_derivative(&u, alpha)?;
            warnings = w;
            d
        }
        Op::Decompose => {
            let alpha = need(a.alpha, "alpha", "decompose")?;
            if !(alpha > 1.0 && alpha < 2.0) {
                return Err(Failure::usage(format!("--op decompose needs 1 < alpha < 2, got {alpha}")));
            }
            decompose_high_order(&u, dir, alpha)?
        }
        Op::Weak => {
            let (d, diag) = weak_derivative_compute(&u, dir, derivative_order(a.alpha, "weak")?)?;
            warnings.push(format!(
                "{}: derivative TV ratios {:.3}, {:.3}",
                diag.label(),
                diag.ratios[0],
                diag.ratios[1]
            ));
            d
        }
    };
    if out.values().iter().any(|v| v.is_nan()) {
        warnings.push("rows with value NaN are excluded singular nodes (the anchored endpoint)".into());
    }
    let mut bytes = Vec::new();
    if a.json {
        let value = out.values().iter().map(|v| v.is_finite().then_some(*v)).collect();
        let doc = JsonGrid { x: out.nodes(), value, warnings: &warnings };
        serde_json::to_writer_pretty(&mut bytes, &doc).map_err(|e| Failure::usage(e.to_string()))?;
        bytes.push(b'\n');
    } else {
        out.write_csv(&mut bytes)?;
        for w in &warnings {
            eprintln!("warning: {w}");
        }
    }
    emit(&bytes, a.output.as_deref())?;
    Ok(0)
}

fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Failure { code: 3, msg: format!("{}: {e}", p.display()) }),
        None => std::io::stdout().write_all(bytes).map_err(|e| Failure { code: 3, msg: e.to_string() }),
    }
}

fn table(r: &VerificationReport) -> String {
    let mut s = format!("suite {} (alpha = {})\n", r.suite, r.alpha);
    for c in &r.cases {
        let order = c.measured_order.map(|p| format!("  order {p:.3}")).unwrap_or_default();
        s += &format!(
            "  {:<4} {:<40} residual {:.3e}  tol {:.3e}{}\n",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance,
            order
        );
        for w in &c.warnings {
            s += &format!("       warning: {w}\n");
        }
    }
    s
}

fn verify(a: VerifyArgs) -> Result<u8, Failure> {
    if !SUITES.contains(&a.suite.as_str()) {
        return Err(Failure::usage(format!("unknown suite '{}'; known: {}", a.suite, SUITES.join(", "))));
    }
    if let Some(n) = a.n {
        if n < 8 {
            return Err(Failure::usage(format!("--n must be at least 8, got {n}")));
        }
    }
    let cfg = SuiteConfig { alpha: a.alpha, n: a.n, tol: a.tol, window: a.window, m: a.m };
    let report = run_suite(&a.suite, &cfg)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::usage(e.to_string()))? + "\n";
    if let Some(p) = &a.output {
        emit(json.as_bytes(), Some(p))?;
    }
    if a.json {
        emit(json.as_bytes(), None)?;
    } else {
        emit(table(&report).as_bytes(), None)?;
    }
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn apply(a: ApplyArgs) -> Result<u8, Failure> {
    let (text, base) = if a.dist.trim_start().starts_with('{') {
        (a.dist.clone(), PathBuf::from("."))
    } else {
        let p = PathBuf::from(&a.dist);
        let text = std::fs::read_to_string(&p).map_err(|e| Failure { code: 3, msg: format!("{}: {e}", p.display()) })?;
        (text, p.parent().map(Path::to_path_buf).unwrap_or_default())
    };
    let desc: DistDescriptor = serde_json::from_str(&text).map_err(|e| Failure { code: 3, msg: format!("descriptor: {e}") })?;
    let u = desc.build(&base)?;
    let phi = TestFunction::new(a.center, a.radius, a.amplitude)?;
    println!("{:.16e}", dist_apply(&u, &phi)?);
    Ok(0)
}
