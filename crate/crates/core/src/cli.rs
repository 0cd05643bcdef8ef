//! Command-line front end. Every subcommand renders its whole output into a
//! string first, so a failed run never leaves a partial file behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bounds::{
    congruence_check, eval_bound, parse_bound, predefined_bound, residual_series, BoundExpr,
    BoundsError, Constants,
};
use crate::enumerate::{
    classify_triple, verify_conjecture_range, EnumerateError, Enumerator, Method, SolutionType,
};
use crate::sums::{parse_grid, sweep, SumSeries, SumsError, SweepConfig};

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Domain,
    Io,
    Invariant,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Domain => 1,
            ErrorKind::Io => 2,
            ErrorKind::Invariant => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ErrorKind::Domain => "domain",
            ErrorKind::Io => "io",
            ErrorKind::Invariant => "invariant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn domain(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Domain,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: format!("{}: {err}", path.display()),
        }
    }

    fn invariant(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Invariant,
            message: message.into(),
        }
    }

    /// Single stderr line: `error: <kind>: <message>`.
    pub fn line(&self) -> String {
        let flat: String = self
            .message
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        format!("error: {}: {}", self.kind.label(), flat)
    }
}

impl From<EnumerateError> for CliError {
    fn from(e: EnumerateError) -> Self {
        match e {
            EnumerateError::NotASolution { .. } | EnumerateError::Unclassified { .. } => {
                CliError::invariant(e.to_string())
            }
            _ => CliError::domain(e.to_string()),
        }
    }
}

impl From<SumsError> for CliError {
    fn from(e: SumsError) -> Self {
        let kind = match &e {
            SumsError::Io { .. } => ErrorKind::Io,
            SumsError::CorruptCheckpoint { .. } | SumsError::Interrupted { .. } => {
                ErrorKind::Invariant
            }
            SumsError::Enumerate(inner) => return CliError::from(inner.clone()),
            _ => ErrorKind::Domain,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        let kind = match &e {
            BoundsError::Invariant { .. } => ErrorKind::Invariant,
            _ => ErrorKind::Domain,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "estraus",
    version,
    about = "Solutions of 4/n = 1/n1 + 1/n2 + 1/n3: counts, prime sums, bound reports"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub shared: Shared,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// Output file (default: standard output).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, value_name = "K")]
    pub workers: Option<usize>,
    #[arg(
        long,
        global = true,
        default_value = "divisor",
        value_name = "naive|divisor"
    )]
    pub method: Method,
    /// Named constant for bound expressions, e.g. --const c=2.
    #[arg(long = "const", global = true, value_name = "NAME=VALUE", value_parser = parse_const)]
    pub constants: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct BoundChoice {
    /// Bound expression over N.
    #[arg(long, value_name = "TEXT")]
    pub expr: Option<String>,
    /// Named bound: tao-upper, tao-typeI, jia, paper-G.
    #[arg(long, value_name = "NAME")]
    pub bound: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count solutions for one n.
    Count {
        #[arg(long, value_parser = parse_int)]
        n: u64,
        /// Also list the canonical triples.
        #[arg(long)]
        list: bool,
    },
    /// Classify the solutions for a prime p >= 5 into Type I and Type II.
    Classify {
        #[arg(long, value_parser = parse_int)]
        p: u64,
    },
    /// Check that every n in LO..HI (inclusive) has a solution.
    Verify {
        #[arg(long, value_name = "LO..HI", value_parser = parse_range)]
        range: (u64, u64),
    },
    /// Sweep the primes up to N_max and write the cumulative sums.
    Sum {
        #[arg(long = "max-N", value_name = "INT", value_parser = parse_int)]
        max_n: u64,
        #[arg(long, value_name = "SPEC")]
        grid: Option<String>,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        /// Also write the per-prime counts here.
        #[arg(long = "per-prime", value_name = "PATH")]
        per_prime: Option<PathBuf>,
    },
    /// Evaluate a bound over a grid.
    Bounds {
        #[command(flatten)]
        bound: BoundChoice,
        #[arg(long, value_name = "SPEC")]
        grid: String,
    },
    /// Join cumulative sums with a bound.
    Report {
        #[command(flatten)]
        bound: BoundChoice,
        /// Sum series CSV from an earlier `sum` run.
        #[arg(long, value_name = "PATH", conflicts_with_all = ["max_n", "checkpoint"])]
        sums: Option<PathBuf>,
        /// Run a sweep to this limit instead of reading --sums.
        #[arg(long = "max-N", value_name = "INT", value_parser = parse_int, required_unless_present = "sums")]
        max_n: Option<u64>,
        #[arg(long, value_name = "SPEC")]
        grid: Option<String>,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
}

/// Decimal integer, optionally written `B^E`.
pub fn parse_int(text: &str) -> Result<u64, String> {
    let text = text.trim();
    let bad = || format!("'{text}' is not a nonnegative integer");
    match text.split_once('^') {
        Some((base, exp)) => {
            let base: u64 = base.trim().parse().map_err(|_| bad())?;
            let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
            base.checked_pow(exp)
                .ok_or_else(|| format!("'{text}' overflows 64 bits"))
        }
        None => text.parse().map_err(|_| bad()),
    }
}

fn parse_range(text: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| format!("'{text}' is not of the form LO..HI"))?;
    Ok((parse_int(lo)?, parse_int(hi)?))
}

fn parse_const(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| format!("'{text}' is not of the form name=value"))?;
    let name = name.trim();
    let valid = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid || name == "N" || ["log", "loglog", "exp", "sqrt"].contains(&name) {
        return Err(format!("'{name}' is not a usable constant name"));
    }
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("'{value}' is not a number"))?;
    if !value.is_finite() {
        return Err(format!("constant {name} must be finite"));
    }
    Ok((name.to_string(), value))
}

/// A real with 12 significant digits, `%g` style.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl Shared {
    fn workers(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }

    fn constants(&self) -> Constants {
        self.constants.iter().cloned().collect()
    }
}

fn resolve_bound(choice: &BoundChoice, constants: &Constants) -> Result<BoundExpr, CliError> {
    let expr = match (&choice.expr, &choice.bound) {
        (Some(text), _) => parse_bound(text, constants)?,
        (None, Some(name)) => predefined_bound(name, constants)?,
        (None, None) => return Err(CliError::domain("one of --expr or --bound is required")),
    };
    Ok(expr)
}

fn grid_or(spec: Option<&str>, n_max: u64) -> Result<Vec<u64>, CliError> {
    match spec {
        Some(spec) => Ok(parse_grid(spec)?),
        None => Ok(vec![n_max]),
    }
}

fn run_count(engine: &Enumerator, n: u64, list: bool, method: Method) -> Result<String, CliError> {
    let triples = engine.enumerate_solutions(n, method)?;
    let count = crate::enumerate::count_from_triples(n, &triples);
    let mut out = String::from("n,ordered,unordered\n");
    let _ = writeln!(out, "{},{},{}", count.n, count.ordered, count.unordered);
    if list {
        out.push_str("\nn1,n2,n3,orderings\n");
        for t in &triples {
            let _ = writeln!(out, "{},{},{},{}", t.n1(), t.n2(), t.n3(), t.orderings());
        }
    }
    Ok(out)
}

fn run_classify(engine: &Enumerator, p: u64, method: Method) -> Result<String, CliError> {
    let split = engine.type_counts(p, method)?;
    let triples = engine.enumerate_solutions(p, method)?;
    let mut out = String::from("n1,n2,n3,type,orderings\n");
    let (mut type_i, mut type_ii) = (0u64, 0u64);
    for t in &triples {
        let kind = classify_triple(p, t)?;
        match kind {
            SolutionType::TypeI => type_i += t.orderings(),
            SolutionType::TypeII => type_ii += t.orderings(),
        }
        let _ = writeln!(
            out,
            "{},{},{},{kind},{}",
            t.n1(),
            t.n2(),
            t.n3(),
            t.orderings()
        );
    }
    if (type_i, type_ii) != (split.type_i_ordered, split.type_ii_ordered) {
        return Err(CliError::invariant(format!(
            "p = {p}: per-triple types ({type_i}, {type_ii}) disagree with the split ({}, {})",
            split.type_i_ordered, split.type_ii_ordered
        )));
    }
    out.push_str("\np,f_ordered,typeI_ordered,typeII_ordered,f_I,f_II\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{}",
        p,
        split.ordered(),
        split.type_i_ordered,
        split.type_ii_ordered,
        split.f_i,
        split.f_ii
    );
    Ok(out)
}

fn series_for_report(
    shared: &Shared,
    sums: Option<&Path>,
    max_n: Option<u64>,
    grid: Option<&str>,
    checkpoint: Option<&Path>,
) -> Result<SumSeries, CliError> {
    if let Some(path) = sums {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let series = SumSeries::from_csv(&text)?;
        return match grid {
            Some(spec) => {
                let wanted = parse_grid(spec)?;
                let rows: Vec<_> = series
                    .rows
                    .iter()
                    .filter(|r| wanted.contains(&r.n))
                    .copied()
                    .collect();
                if rows.len() != wanted.len() {
                    return Err(CliError::domain(format!(
                        "{} does not cover every point of grid '{spec}'",
                        path.display()
                    )));
                }
                Ok(SumSeries { rows })
            }
            None => Ok(series),
        };
    }
    let n_max = max_n.ok_or_else(|| CliError::domain("report needs --sums or --max-N"))?;
    let mut config = SweepConfig::new(n_max);
    config.grid = grid_or(grid, n_max)?;
    config.workers = shared.workers();
    config.method = shared.method;
    config.checkpoint = checkpoint.map(Path::to_path_buf);
    Ok(sweep(&config)?.series)
}

const REPORT_HEADER: &str = "N,S,S_I,G_of_N,epsilon,epsilon_runmax,chi,ratio_SI_G,pnt_ratio,chi_eps_logN,chi_eps_NlogN,floorG_mod_N,N_divides_floorG";

fn render_report(series: &SumSeries, bound: &BoundExpr) -> Result<String, CliError> {
    let rows = residual_series(series, bound)?;
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        let log_n = (row.n as f64).ln();
        // Beyond 2^53 the floor is not exact; the cells are left as NA.
        let (rem, divisible) = match congruence_check(bound, row.n) {
            Ok(c) => (c.remainder.to_string(), c.divisible.to_string()),
            Err(BoundsError::Magnitude { .. }) => ("NA".to_string(), "NA".to_string()),
            Err(e) => return Err(e.into()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.n,
            row.s,
            row.s_i,
            format_real(row.g),
            format_real(row.epsilon),
            format_real(row.epsilon_runmax),
            format_real(row.chi),
            row.ratio_si_g.map_or_else(|| "NA".to_string(), format_real),
            format_real(row.pnt_ratio),
            format_real(row.g + log_n),
            format_real(row.g + row.n as f64 * log_n),
            rem,
            divisible
        );
    }
    Ok(out)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let shared = &cli.shared;
    let workers = shared.workers();
    if workers == 0 {
        return Err(CliError::domain("--workers must be positive"));
    }
    let constants = shared.constants();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::domain(format!("cannot start worker pool: {e}")))?;

    let output = pool.install(|| -> Result<String, CliError> {
        match &cli.command {
            Command::Count { n, list } => run_count(&Enumerator::new(), *n, *list, shared.method),
            Command::Classify { p } => run_classify(&Enumerator::new(), *p, shared.method),
            Command::Verify { range: (lo, hi) } => Ok(match verify_conjecture_range(*lo, *hi)? {
                Some(n) => format!("{n}\n"),
                None => "none\n".to_string(),
            }),
            Command::Sum {
                max_n,
                grid,
                checkpoint,
                per_prime,
            } => {
                let mut config = SweepConfig::new(*max_n);
                config.grid = grid_or(grid.as_deref(), *max_n)?;
                config.workers = workers;
                config.method = shared.method;
                config.checkpoint = checkpoint.clone();
                let result = sweep(&config)?;
                if let Some(path) = per_prime {
                    std::fs::write(path, result.per_prime_csv())
                        .map_err(|e| CliError::io(path, e))?;
                }
                Ok(result.series.to_csv())
            }
            Command::Bounds { bound, grid } => {
                let expr = resolve_bound(bound, &constants)?;
                let mut out = String::from("N,G_of_N\n");
                for n in parse_grid(grid)? {
                    let value = eval_bound(&expr, n).map_err(|e| BoundsError::AtGridPoint {
                        n,
                        source: Box::new(e),
                    })?;
                    let _ = writeln!(out, "{n},{}", format_real(value));
                }
                Ok(out)
            }
            Command::Report {
                bound,
                sums,
                max_n,
                grid,
                checkpoint,
            } => {
                let expr = resolve_bound(bound, &constants)?;
                let series = series_for_report(
                    shared,
                    sums.as_deref(),
                    *max_n,
                    grid.as_deref(),
                    checkpoint.as_deref(),
                )?;
                render_report(&series, &expr)
            }
        }
    })?;
    write_output(shared.out.as_deref(), &output)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as Clap;
            if matches!(e.kind(), Clap::DisplayHelp | Clap::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let message = e.to_string();
            let summary: Vec<&str> = message
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty() && !l.starts_with("For more information"))
                .collect();
            let summary = summary.join(" ");
            let summary = summary.trim_start_matches("error: ");
            eprintln!("{}", CliError::domain(summary).line());
            return ErrorKind::Domain.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.kind.exit_code()
        }
    }
}
