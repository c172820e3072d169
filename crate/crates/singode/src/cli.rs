//! Command-line frontend: load problems, run analyses and demos, emit
//! JSON reports and CSV plot data.
//!
//! Exit codes for `analyze`: 0 = UNIQUE_NEAR_ZERO, 10 =
//! CONDITIONAL_ON_FLATNESS, 20 = INCONCLUSIVE, 1 = error. Other
//! subcommands exit 0 on success (all checks passing) and 1 otherwise.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num::rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::criteria::{
    self, b_constant_exact, check_uniqueness, flatness_bound_exact, format_g17, Tolerances,
    Verdict,
};
use crate::expr::{self, Precision, MAX_PRECISION_BITS, MIN_PRECISION_BITS};
use crate::model::{alpha_sine_problem, bessel_problem, cauchy_euler_problem, load_problem};
use crate::numerics::{
    self, geometric_grid, integrate, minimal_c_scan_series, rational_geometric_points,
    sample_positive, vanishing_slope, DerivativeEvaluator, ReferenceSolution, TrajectoryStatus,
    SLOPE_WINDOW,
};
use crate::series::{
    bessel_laurent_ode, bessel_series, factorial, indicial_roots, ode_residual,
    series_from_polynomial_expr, SeriesScalar,
};
use crate::model::InitialData;

const INV_E: f64 = 0.36787944117144233;
const DEFAULT_ALPHA: f64 = 0.18393972058572117; // 1/(2e)

#[derive(Parser)]
#[command(
    name = "singode",
    version,
    about = "Uniqueness analysis for ODEs with coefficients singular at the origin"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Working precision in bits for expression evaluation
    /// (default: native f64)
    #[arg(long, global = true, value_name = "BITS")]
    precision: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate singularity weights of a problem file and report every
    /// uniqueness criterion
    Analyze {
        /// Problem file (see README for the format)
        spec_path: PathBuf,
        /// Grid points per sign
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Smallest sampled magnitude
        #[arg(long, default_value_t = 1e-8)]
        x_min: f64,
        /// Largest sampled magnitude
        #[arg(long, default_value_t = 1e-1)]
        x_max: f64,
        /// Write the JSON report to this path instead of stdout
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Run a built-in demonstration pipeline and print a pass/fail table
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        /// Family parameter: alpha in (0,1) for example4, integer order
        /// >= 2 for bessel, coefficient size for cauchy-euler
        #[arg(long)]
        param: Option<f64>,
        /// Write plot data (CSV) to this path
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Print exact series expansions
    Series {
        #[command(subcommand)]
        which: SeriesCommand,
    },
    /// Check the vanishing-order bound N <= B_n C_min + n - 1 for a
    /// polynomial, with exact rational arithmetic
    VerifyBound {
        /// Polynomial in x, e.g. "x^3"
        #[arg(long)]
        function: String,
        /// Derivative order n >= 2 of the inequality
        #[arg(long)]
        n: usize,
        /// Largest sample point
        #[arg(long, default_value_t = 0.5)]
        x_max: f64,
        /// Number of geometric sample points
        #[arg(long, default_value_t = 24)]
        samples: usize,
    },
    /// Dump the per-sample minimal-C ratios of a polynomial as CSV
    Scan {
        /// Polynomial in x, e.g. "x^3"
        #[arg(long)]
        function: String,
        /// Derivative order n >= 2
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        x_max: f64,
        #[arg(long, default_value_t = 24)]
        samples: usize,
        /// Write the CSV here instead of stdout
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoName {
    /// The x^alpha * sin(x) family: flat nonzero solution, not smooth
    Example4,
    /// Bessel equations of integer order m >= 2: smooth flat solutions
    Bessel,
    /// Equi-dimensional equations with constant coefficient weights
    CauchyEuler,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum SeriesFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum SeriesCommand {
    /// First-kind Bessel series with exact rational coefficients
    Bessel {
        /// Integer order m >= 0
        #[arg(long)]
        nu: i64,
        /// Number of series terms to print (k = 0 .. terms-1)
        #[arg(long)]
        terms: usize,
        #[arg(long, value_enum, default_value_t = SeriesFormat::Text)]
        format: SeriesFormat,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    let precision = match cli.precision {
        None => Precision::Double,
        Some(bits) => {
            if !(MIN_PRECISION_BITS..=MAX_PRECISION_BITS).contains(&bits) {
                eprintln!(
                    "error: --precision must be in {MIN_PRECISION_BITS}..={MAX_PRECISION_BITS}, got {bits}"
                );
                return 1;
            }
            Precision::Bits(bits)
        }
    };
    match dispatch(cli.command, precision) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, precision: Precision) -> Result<i32, Box<dyn std::error::Error>> {
    match command {
        Command::Analyze {
            spec_path,
            samples,
            x_min,
            x_max,
            json,
        } => cmd_analyze(&spec_path, samples, x_min, x_max, json.as_deref(), precision),
        Command::Demo { name, param, csv } => cmd_demo(name, param, csv.as_deref(), precision),
        Command::Series { which } => cmd_series(which),
        Command::VerifyBound {
            function,
            n,
            x_max,
            samples,
        } => cmd_verify_bound(&function, n, x_max, samples),
        Command::Scan {
            function,
            n,
            x_max,
            samples,
            csv,
        } => cmd_scan(&function, n, x_max, samples, csv.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn cmd_analyze(
    spec_path: &std::path::Path,
    samples: usize,
    x_min: f64,
    x_max: f64,
    json_path: Option<&std::path::Path>,
    precision: Precision,
) -> Result<i32, Box<dyn std::error::Error>> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| format!("cannot read {}: {e}", spec_path.display()))?;
    let problem = load_problem(&text)?;
    let grid = geometric_grid(x_max, x_min, samples)?;
    let report = check_uniqueness(&problem, &grid, &Tolerances::default(), precision)?;
    let json = report.to_json();
    match json_path {
        Some(path) => {
            fs::write(path, &json).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            println!("{}", summarize_report(&report));
            println!("report written to {}", path.display());
        }
        None => print!("{json}"),
    }
    Ok(report.verdict.exit_code())
}

fn summarize_report(report: &criteria::CriteriaReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "problem : {}", report.label);
    let _ = writeln!(
        s,
        "order n = {}, B_n = {:.6}, C_n = {:.6}",
        report.order, report.b_n, report.c_n
    );
    for w in &report.weights {
        let _ = writeln!(
            s,
            "  c_{} = {:.9}  (converged: {}{})",
            w.k,
            w.estimate,
            w.converged,
            w.note.as_deref().map(|n| format!("; {n}")).unwrap_or_default()
        );
    }
    let _ = writeln!(
        s,
        "1/e criterion: {}   1/B_n criterion: {}   zero-weight: {}   bounded: {}",
        report.e_criterion_satisfied,
        report.relaxed_criterion_satisfied,
        report.zero_weight_criterion_satisfied,
        report.bounded_coefficients_satisfied
    );
    let _ = write!(
        s,
        "flatness bound M = {}, verdict: {}",
        report.flatness_bound_m,
        report.verdict.as_str()
    );
    s
}

// ---------------------------------------------------------------------------
// demo
// ---------------------------------------------------------------------------

struct CheckTable {
    rows: Vec<(String, String, bool)>,
}

impl CheckTable {
    fn new() -> Self {
        CheckTable { rows: Vec::new() }
    }

    fn push(&mut self, check: impl Into<String>, detail: impl Into<String>, pass: bool) {
        self.rows.push((check.into(), detail.into(), pass));
    }

    fn print_and_passed(&self) -> bool {
        let width = self.rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let mut all = true;
        for (check, detail, pass) in &self.rows {
            all &= pass;
            println!(
                "  {:<width$}  {}  {detail}",
                check,
                if *pass { "PASS" } else { "FAIL" },
            );
        }
        all
    }
}

fn cmd_demo(
    name: DemoName,
    param: Option<f64>,
    csv: Option<&std::path::Path>,
    precision: Precision,
) -> Result<i32, Box<dyn std::error::Error>> {
    match name {
        DemoName::Bessel => demo_bessel(param, csv, precision),
        DemoName::Example4 => demo_alpha_sine(param, csv, precision),
        DemoName::CauchyEuler => demo_cauchy_euler(param, csv, precision),
    }
}

fn demo_bessel(
    param: Option<f64>,
    csv: Option<&std::path::Path>,
    precision: Precision,
) -> Result<i32, Box<dyn std::error::Error>> {
    let mf = param.unwrap_or(2.0);
    if mf.fract() != 0.0 || mf < 2.0 || mf > 64.0 {
        return Err(format!("bessel demo needs an integer order in 2..=64, got {mf}").into());
    }
    let m = mf as u32;
    println!("demo: Bessel equation y'' + (1/x) y' + (1 - {}/x^2) y = 0", m * m);
    let mut table = CheckTable::new();

    // 1. exact series residual
    let truncation = 18;
    let series = bessel_series(m, truncation)?;
    let ode = bessel_laurent_ode(m);
    let residual = ode_residual(&ode, &series)?;
    let end = SeriesScalar::as_integer(&residual.certified_end).unwrap_or(0);
    table.push(
        "series residual (exact)",
        format!("identically 0 through x^{end}"),
        residual.is_identically_zero() && !residual.truncation_insufficient(),
    );

    // 2. vanishing order (m, 1/(m! 2^m))
    let (order, coeff) = series.vanishing_order()?;
    let expected_coeff = BigRational::new(
        num::bigint::BigInt::from(1),
        factorial(m as u64) * num::bigint::BigInt::from(2u32).pow(m),
    );
    table.push(
        "vanishing order",
        format!("N = {order}, a_N = {coeff}"),
        SeriesScalar::as_integer(&order) == Some(m as i64) && coeff == expected_coeff,
    );

    // 3. singularity weights
    let problem = bessel_problem(m);
    let grid = numerics::default_grid();
    let report = check_uniqueness(&problem, &grid, &Tolerances::default(), precision)?;
    let c0 = report.weights[0].estimate;
    let c1 = report.weights[1].estimate;
    let m2 = (m * m) as f64;
    table.push(
        "weight c_0",
        format!("{c0:.9} (expected {m2})"),
        (c0 - m2).abs() <= 1e-3,
    );
    table.push("weight c_1", format!("{c1:.9} (expected 1)"), (c1 - 1.0).abs() <= 1e-3);
    table.push(
        "1/e criterion violated",
        format!("c_0 = {c0:.6} > 1/e = {INV_E:.6}"),
        !report.e_criterion_satisfied,
    );

    // 4. log-log slope of the solution
    let reference = ReferenceSolution::bessel(m)?;
    let slope_samples = sample_positive(|x| reference.value(x), SLOPE_WINDOW, 32);
    let slope = vanishing_slope(&slope_samples)?;
    table.push(
        "log-log slope",
        format!("{:.4} (expected {m})", slope.slope),
        (slope.slope - m as f64).abs() <= 0.01,
    );

    // 5. integration cross-check against the series
    let from = InitialData::new(1.0, reference.derivatives(1.0, 1));
    let trajectory = integrate(&problem, &from, 0.05, 1e-12, 0.0, precision)?;
    let mut max_rel: f64 = 0.0;
    for node in &trajectory.nodes {
        let want = reference.value(node.x);
        max_rel = max_rel.max((node.y[0] - want).abs() / want.abs());
    }
    table.push(
        "integrator vs series",
        format!(
            "max relative deviation {:.3e} over [0.05, 1]",
            max_rel
        ),
        trajectory.status == TrajectoryStatus::Completed && max_rel <= 1e-6,
    );

    // 6. verdict
    let expected_m = 2 * (m as u64) * (m as u64) + 1;
    table.push(
        "verdict",
        format!(
            "{} with flatness bound M = {}",
            report.verdict.as_str(),
            report.flatness_bound_m
        ),
        report.verdict == Verdict::ConditionalOnFlatness(expected_m),
    );

    let all = table.print_and_passed();
    println!();
    println!(
        "non-uniqueness demonstrated: y_{m} is a nonzero solution with y(0) = y'(0) = 0, \
         possible because c_0 = {} exceeds 1/e",
        m * m
    );

    if let Some(path) = csv {
        let mut out = String::from("x,y\n");
        for i in 1..=256 {
            let x = i as f64 / 256.0;
            let _ = writeln!(out, "{},{}", format_g17(x), format_g17(reference.value(x)));
        }
        fs::write(path, out)?;
        println!("solution curve written to {}", path.display());
    }
    Ok(if all { 0 } else { 1 })
}

fn demo_alpha_sine(
    param: Option<f64>,
    csv: Option<&std::path::Path>,
    precision: Precision,
) -> Result<i32, Box<dyn std::error::Error>> {
    let alpha = param.unwrap_or(DEFAULT_ALPHA);
    let reference = ReferenceSolution::alpha_sine(alpha)?;
    println!(
        "demo: y'' - (2a/x) y' + (1 + (a^2+a)/x^2) y = 0 with a = {alpha:.17}, \
         solution |x|^a sin|x| (even reflection)"
    );
    let mut table = CheckTable::new();

    // 1. closed-form residual at 200 pseudorandom points in (0, 1)
    let mut rng = ChaCha8Rng::seed_from_u64(0x51_6f_de);
    let mut max_residual: f64 = 0.0;
    for _ in 0..200 {
        let x: f64 = rng.gen_range(1e-5..1.0);
        let d = reference.derivatives(x, 2);
        let r = d[2] - (2.0 * alpha / x) * d[1] + (1.0 + (alpha * alpha + alpha) / (x * x)) * d[0];
        max_residual = max_residual.max(r.abs());
    }
    table.push(
        "closed-form residual",
        format!("max {max_residual:.3e} at 200 random points in (0,1)"),
        max_residual <= 1e-10,
    );

    // 2. weights
    let problem = alpha_sine_problem(alpha);
    let grid = numerics::default_grid();
    let report = check_uniqueness(&problem, &grid, &Tolerances::default(), precision)?;
    let c1_expected = 2.0 * alpha;
    let c0_expected = alpha * alpha + alpha;
    let c0 = report.weights[0].estimate;
    let c1 = report.weights[1].estimate;
    table.push(
        "weight c_0",
        format!("{c0:.9} (expected {c0_expected:.9})"),
        (c0 - c0_expected).abs() <= 1e-3,
    );
    table.push(
        "weight c_1",
        format!("{c1:.9} (expected {c1_expected:.9})"),
        (c1 - c1_expected).abs() <= 1e-3,
    );
    table.push(
        "1/e criterion",
        format!("max weight {:.9} vs 1/e = {INV_E:.9}", report.c_n),
        report.e_criterion_satisfied,
    );

    // 3. log-log slope: non-integer vanishing order
    let slope_samples = sample_positive(|x| reference.value(x), SLOPE_WINDOW, 32);
    let slope = vanishing_slope(&slope_samples)?;
    let expected_slope = 1.0 + alpha;
    let non_integer = (slope.slope - slope.slope.round()).abs() > 0.05;
    table.push(
        "log-log slope",
        format!("{:.5} (expected {expected_slope:.5})", slope.slope),
        (slope.slope - expected_slope).abs() <= 0.01,
    );
    table.push(
        "non-integer vanishing order",
        format!("slope {:.5} is not an integer -> solution is not smooth", slope.slope),
        non_integer,
    );

    // 4. integration cross-check
    let from = InitialData::new(1.0, reference.derivatives(1.0, 1));
    let trajectory = integrate(&problem, &from, 0.01, 1e-12, 0.0, precision)?;
    let mut max_rel: f64 = 0.0;
    for node in &trajectory.nodes {
        let want = reference.value(node.x);
        max_rel = max_rel.max((node.y[0] - want).abs() / want.abs().max(1e-300));
    }
    table.push(
        "integrator vs closed form",
        format!("max relative deviation {max_rel:.3e} over [0.01, 1]"),
        trajectory.status == TrajectoryStatus::Completed && max_rel <= 1e-6,
    );

    table.push(
        "verdict",
        report.verdict.as_str().to_string(),
        report.verdict == Verdict::UniqueNearZero,
    );

    let all = table.print_and_passed();
    println!();
    println!(
        "criteria satisfied, yet a nonzero flat solution exists: it is only C^(1,a), \
         so uniqueness for smooth solutions is not contradicted"
    );

    if let Some(path) = csv {
        let mut out = String::from("x,y\n");
        for i in 1..=256 {
            let x = i as f64 / 256.0;
            let _ = writeln!(out, "{},{}", format_g17(x), format_g17(reference.value(x)));
        }
        fs::write(path, out)?;
        println!("solution curve written to {}", path.display());
    }
    Ok(if all { 0 } else { 1 })
}

fn demo_cauchy_euler(
    param: Option<f64>,
    csv: Option<&std::path::Path>,
    precision: Precision,
) -> Result<i32, Box<dyn std::error::Error>> {
    let a = param.unwrap_or(0.3);
    if !a.is_finite() {
        return Err("cauchy-euler demo needs a finite parameter".into());
    }
    println!("demo: x^2 y'' + {a} x y' + {a} y = 0  (normalized: y'' + ({a}/x) y' + ({a}/x^2) y = 0)");
    let mut table = CheckTable::new();

    // 1. indicial roots
    let roots = indicial_roots(2, &[a, a]);
    let max_re = roots.roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let detail = roots
        .roots
        .iter()
        .map(|z| format!("{:.6}{}{:.6}i", z.re, if z.im < 0.0 { " - " } else { " + " }, z.im.abs()))
        .collect::<Vec<_>>()
        .join(", ");
    table.push(
        "indicial roots",
        format!("{detail}; max real part {max_re:.6}"),
        max_re < 2.0 && roots.max_residual() <= 1e-12,
    );

    // 2. weights are exactly |a|
    let problem = cauchy_euler_problem(a, a);
    let grid = numerics::default_grid();
    let report = check_uniqueness(&problem, &grid, &Tolerances::default(), precision)?;
    let weights_ok = report
        .weights
        .iter()
        .all(|w| (w.estimate - a.abs()).abs() <= 1e-9);
    table.push(
        "constant weights",
        format!("c_0 = {:.9}, c_1 = {:.9}", report.weights[0].estimate, report.weights[1].estimate),
        weights_ok,
    );

    // 3. verdict
    let expect_unique = a.abs() < INV_E;
    table.push(
        "verdict",
        report.verdict.as_str().to_string(),
        (report.verdict == Verdict::UniqueNearZero) == expect_unique,
    );

    let all = table.print_and_passed();
    println!();
    if expect_unique {
        println!(
            "|a_k| = {} < 1/e: only the zero solution has flat initial data at 0",
            a.abs()
        );
    } else {
        println!(
            "|a_k| = {} >= 1/e: the constant-weight criterion fails",
            a.abs()
        );
    }

    if let Some(path) = csv {
        // root landscape over the criterion square
        let lo = -INV_E + 1e-6;
        let hi = INV_E - 1e-6;
        let mut out = String::from("a0,a1,max_real_part\n");
        for i in 0..41 {
            for j in 0..41 {
                let a0 = lo + (hi - lo) * i as f64 / 40.0;
                let a1 = lo + (hi - lo) * j as f64 / 40.0;
                let r = indicial_roots(2, &[a0, a1]);
                let mr = r.roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    format_g17(a0),
                    format_g17(a1),
                    format_g17(mr)
                );
            }
        }
        fs::write(path, out)?;
        println!("indicial-root landscape written to {}", path.display());
    }
    Ok(if all { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// series
// ---------------------------------------------------------------------------

fn cmd_series(which: SeriesCommand) -> Result<i32, Box<dyn std::error::Error>> {
    match which {
        SeriesCommand::Bessel { nu, terms, format } => {
            if nu < 0 {
                return Err(format!("series order must be >= 0, got {nu}").into());
            }
            if terms < 1 {
                return Err(format!("need at least 1 term, got {terms}").into());
            }
            let truncation = (2 * (terms - 1)).max(1);
            let s = bessel_series(nu as u32, truncation)?;
            match format {
                SeriesFormat::Text => println!("{s}"),
                SeriesFormat::Json => {
                    let nu0 = SeriesScalar::as_integer(s.leading_exponent())
                        .expect("integer leading exponent");
                    let mut out = String::from("[");
                    let mut first = true;
                    for (i, c) in s.coeffs().iter().enumerate() {
                        if c.is_negligible() {
                            continue;
                        }
                        if !first {
                            out.push_str(", ");
                        }
                        first = false;
                        let _ = write!(out, "[{}, {}, {}]", nu0 + i as i64, c.numer(), c.denom());
                    }
                    out.push(']');
                    println!("{out}");
                }
            }
            Ok(0)
        }
    }
}

// ---------------------------------------------------------------------------
// verify-bound and scan
// ---------------------------------------------------------------------------

fn polynomial_scan(
    function: &str,
    n: usize,
    x_max: f64,
    samples: usize,
) -> Result<
    (
        crate::series::RationalSeries,
        crate::numerics::ExactMinimalCScan,
    ),
    Box<dyn std::error::Error>,
> {
    if n < 2 {
        return Err(format!("order n must be >= 2, got {n}").into());
    }
    if !(x_max > 0.0) {
        return Err(format!("x_max must be positive, got {x_max}").into());
    }
    if samples < 8 {
        return Err(format!("need at least 8 samples, got {samples}").into());
    }
    let parsed = expr::parse(function)?;
    let series = series_from_polynomial_expr(&parsed, 64)?;
    let x0 = BigRational::from_float(x_max).ok_or("x_max is not finite")?;
    let half = BigRational::new(1.into(), 2.into());
    let points = rational_geometric_points(x0, half, samples);
    let scan = minimal_c_scan_series(&series, n, &points)?;
    Ok((series, scan))
}

fn cmd_verify_bound(
    function: &str,
    n: usize,
    x_max: f64,
    samples: usize,
) -> Result<i32, Box<dyn std::error::Error>> {
    let (series, scan) = polynomial_scan(function, n, x_max, samples)?;
    let (order, _) = series.vanishing_order()?;
    let n_exact = order.clone();
    let n_int = SeriesScalar::as_integer(&order).ok_or("non-integer vanishing order")?;

    // slope cross-check in floating point
    let slope_samples = sample_positive(|x| series.eval_f64(x), SLOPE_WINDOW, 32);
    let slope = vanishing_slope(&slope_samples)?;

    let b_n = b_constant_exact(n);
    let bound = &b_n * &scan.c_min + BigRational::from_integer((n as i64 - 1).into());
    let m_floor = flatness_bound_exact(&scan.c_min, n);
    let holds = n_exact <= bound;

    println!("function    : {function}");
    println!("n           : {n}");
    println!(
        "N           : {n_int} (log-log slope cross-check: {:.6})",
        slope.slope
    );
    println!(
        "C_min       : {} = {:.9}",
        scan.c_min,
        SeriesScalar::to_f64(&scan.c_min)
    );
    println!(
        "B_n C_min + n - 1 = {} = {:.9}  (floor M = {})",
        bound,
        SeriesScalar::to_f64(&bound),
        m_floor
    );
    let equality = n_exact == bound;
    println!(
        "bound N <= B_n C_min + n - 1: {}{}",
        if holds { "PASS" } else { "FAIL" },
        if equality { " (equality)" } else { "" }
    );
    Ok(if holds { 0 } else { 1 })
}

fn cmd_scan(
    function: &str,
    n: usize,
    x_max: f64,
    samples: usize,
    csv: Option<&std::path::Path>,
) -> Result<i32, Box<dyn std::error::Error>> {
    let (_, scan) = polynomial_scan(function, n, x_max, samples)?;
    let f64_scan = scan.to_f64_scan();
    let mut out = String::from("x,ratio\n");
    for (x, r) in &f64_scan.samples {
        let _ = writeln!(out, "{},{}", format_g17(*x), format_g17(*r));
    }
    match csv {
        Some(path) => {
            fs::write(path, &out)?;
            println!("C_min = {} = {:.9}", scan.c_min, f64_scan.c_min);
            println!("{} samples written to {}", f64_scan.samples.len(), path.display());
        }
        None => {
            print!("{out}");
            eprintln!("C_min = {} = {:.9}", scan.c_min, f64_scan.c_min);
        }
    }
    if !f64_scan.skipped.is_empty() {
        eprintln!(
            "skipped {} sample(s) where every derivative vanished",
            f64_scan.skipped.len()
        );
    }
    Ok(0)
}
