//! Candidate bound functions `G(N)` and the quantities built from them:
//! the residual `S_I(N) - G(N)`, its running nonnegative maximum, the
//! bound-plus-residual `chi`, ratios, and floor congruences.
//!
//! Expression grammar (whitespace insignificant):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := factor (("*" | "/") factor)*
//! factor  := primary ("^" unsigned-number)?
//! primary := "N" | number | ident | func "(" expr ")" | "(" expr ")"
//! func    := "log" | "loglog" | "exp" | "sqrt"
//! ```
//!
//! Identifiers other than `N` and the function names resolve through a
//! constants map at parse time.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::primes::prime_count;
use crate::sums::SumSeries;

/// Smallest `N` accepted by an expression that contains `loglog`.
pub const LOGLOG_MIN_N: u64 = 16;

/// Largest `|floor(G(N))|` that the `f64` evaluator represents exactly.
pub const EXACT_INTEGER_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

pub type Constants = BTreeMap<String, f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier '{name}' at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("unknown bound '{0}' (expected tao-upper, tao-typeI, jia or paper-G)")]
    UnknownBound(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value {value} evaluating {expr}")]
    NonFinite { expr: String, value: f64 },
    #[error("division by zero: G({n}) = 0")]
    DivisionByZero { n: u64 },
    #[error("|G({n})| = {value} exceeds the exact integer range 2^53")]
    Magnitude { n: u64, value: f64 },
    #[error("at N = {n}: {source}")]
    AtGridPoint {
        n: u64,
        #[source]
        source: Box<BoundsError>,
    },
    #[error("invariant violated at N = {n}: chi = {chi} < S_I = {s_i}")]
    Invariant { n: u64, chi: f64, s_i: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    LogLog,
    Exp,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::LogLog => "loglog",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        match name {
            "log" => Some(Func::Log),
            "loglog" => Some(Func::LogLog),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

/// Expression tree over the single variable `N`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundExpr {
    Var,
    Num(f64),
    Const {
        name: String,
        value: f64,
    },
    Binary {
        op: BinOp,
        lhs: Box<BoundExpr>,
        rhs: Box<BoundExpr>,
    },
    Pow {
        base: Box<BoundExpr>,
        exponent: f64,
    },
    Call {
        func: Func,
        arg: Box<BoundExpr>,
    },
}

impl BoundExpr {
    pub fn binary(op: BinOp, lhs: BoundExpr, rhs: BoundExpr) -> Self {
        BoundExpr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn call(func: Func, arg: BoundExpr) -> Self {
        BoundExpr::Call {
            func,
            arg: Box::new(arg),
        }
    }

    pub fn pow(base: BoundExpr, exponent: f64) -> Self {
        BoundExpr::Pow {
            base: Box::new(base),
            exponent,
        }
    }

    pub fn contains_loglog(&self) -> bool {
        match self {
            BoundExpr::Var | BoundExpr::Num(_) | BoundExpr::Const { .. } => false,
            BoundExpr::Binary { lhs, rhs, .. } => lhs.contains_loglog() || rhs.contains_loglog(),
            BoundExpr::Pow { base, .. } => base.contains_loglog(),
            BoundExpr::Call { func, arg } => *func == Func::LogLog || arg.contains_loglog(),
        }
    }

    fn eval_at(&self, n: f64) -> Result<f64, BoundsError> {
        let value = match self {
            BoundExpr::Var => n,
            BoundExpr::Num(v) => *v,
            BoundExpr::Const { value, .. } => *value,
            BoundExpr::Binary { op, lhs, rhs } => {
                let (l, r) = (lhs.eval_at(n)?, rhs.eval_at(n)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                }
            }
            BoundExpr::Pow { base, exponent } => base.eval_at(n)?.powf(*exponent),
            BoundExpr::Call { func, arg } => {
                let x = arg.eval_at(n)?;
                match func {
                    Func::Log if x <= 0.0 => {
                        return Err(BoundsError::Domain(format!("log of {x}")));
                    }
                    Func::Log => x.ln(),
                    Func::LogLog if x <= 1.0 => {
                        return Err(BoundsError::Domain(format!("loglog of {x}")));
                    }
                    Func::LogLog => x.ln().ln(),
                    Func::Exp => x.exp(),
                    Func::Sqrt if x < 0.0 => {
                        return Err(BoundsError::Domain(format!("sqrt of {x}")));
                    }
                    Func::Sqrt => x.sqrt(),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(BoundsError::NonFinite {
                expr: self.to_string(),
                value,
            })
        }
    }

    fn needs_parens_as_base(&self) -> bool {
        matches!(self, BoundExpr::Binary { .. } | BoundExpr::Pow { .. })
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `{}` on f64 is the shortest representation that parses back exactly.
    write!(f, "{v}")
}

impl fmt::Display for BoundExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundExpr::Var => f.write_str("N"),
            BoundExpr::Num(v) => write_number(f, *v),
            BoundExpr::Const { name, .. } => f.write_str(name),
            BoundExpr::Binary { op, lhs, rhs } => {
                let prec = op.precedence();
                let wrap_lhs =
                    matches!(&**lhs, BoundExpr::Binary { op: o, .. } if o.precedence() < prec);
                let wrap_rhs =
                    matches!(&**rhs, BoundExpr::Binary { op: o, .. } if o.precedence() <= prec);
                if wrap_lhs {
                    write!(f, "({lhs})")?;
                } else {
                    write!(f, "{lhs}")?;
                }
                write!(f, "{}", op.symbol())?;
                if wrap_rhs {
                    write!(f, "({rhs})")
                } else {
                    write!(f, "{rhs}")
                }
            }
            BoundExpr::Pow { base, exponent } => {
                if base.needs_parens_as_base() {
                    write!(f, "({base})^")?;
                } else {
                    write!(f, "{base}^")?;
                }
                write_number(f, *exponent)
            }
            BoundExpr::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    constants: &'a Constants,
}

impl<'a> Parser<'a> {
    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, BoundsError> {
        Err(BoundsError::Syntax {
            pos: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<(), BoundsError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => self.syntax(format!("expected '{want}', found '{c}'")),
            None => self.syntax(format!("expected '{want}', found end of input")),
        }
    }

    fn expr(&mut self) -> Result<BoundExpr, BoundsError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = BoundExpr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<BoundExpr, BoundsError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = BoundExpr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<BoundExpr, BoundsError> {
        let base = self.primary()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            match self.number()? {
                Some(exponent) => Ok(BoundExpr::pow(base, exponent)),
                None => self.syntax("expected an unsigned number after '^'"),
            }
        } else {
            Ok(base)
        }
    }

    fn number(&mut self) -> Result<Option<f64>, BoundsError> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let mut end = start;
        let digits = |mut i: usize| {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            i
        };
        end = digits(end);
        if end < bytes.len() && bytes[end] == b'.' {
            end = digits(end + 1);
        }
        if end == start || (end == start + 1 && bytes[start] == b'.') {
            return Ok(None);
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut e = end + 1;
            if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                e += 1;
            }
            let after = digits(e);
            if after > e {
                end = after;
            }
        }
        match self.src[start..end].parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = end;
                Ok(Some(v))
            }
            _ => self.syntax(format!("invalid number '{}'", &self.src[start..end])),
        }
    }

    fn primary(&mut self) -> Result<BoundExpr, BoundsError> {
        match self.peek() {
            None => self.syntax("unexpected end of input"),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => match self.number()? {
                Some(v) => Ok(BoundExpr::Num(v)),
                None => self.syntax("expected a number"),
            },
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                let len = self.src[start..]
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                    .unwrap_or(self.src.len() - start);
                let name = &self.src[start..start + len];
                self.pos += len;
                if name == "N" {
                    return Ok(BoundExpr::Var);
                }
                if let Some(func) = Func::from_name(name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(BoundExpr::call(func, arg));
                }
                match self.constants.get(name) {
                    Some(&value) => Ok(BoundExpr::Const {
                        name: name.to_string(),
                        value,
                    }),
                    None => Err(BoundsError::UnknownIdentifier {
                        name: name.to_string(),
                        pos: start,
                    }),
                }
            }
            Some(c) => self.syntax(format!("unexpected '{c}'")),
        }
    }
}

/// Parses bound text against the grammar in the module docs.
pub fn parse_bound(text: &str, constants: &Constants) -> Result<BoundExpr, BoundsError> {
    let mut parser = Parser {
        src: text,
        pos: 0,
        constants,
    };
    let expr = parser.expr()?;
    match parser.peek() {
        None => Ok(expr),
        Some(c) => parser.syntax(format!("unexpected trailing '{c}'")),
    }
}

/// Evaluates `G(N)`.
pub fn eval_bound(expr: &BoundExpr, n: u64) -> Result<f64, BoundsError> {
    if n < 2 {
        return Err(BoundsError::Domain(format!("N = {n} is below 2")));
    }
    if n < LOGLOG_MIN_N && expr.contains_loglog() {
        return Err(BoundsError::Domain(format!(
            "N = {n} is below {LOGLOG_MIN_N}, required by loglog"
        )));
    }
    expr.eval_at(n as f64)
}

pub const PREDEFINED: [&str; 4] = ["tao-upper", "tao-typeI", "jia", "paper-G"];

/// Source text of a named bound.
pub fn predefined_text(name: &str) -> Option<&'static str> {
    match name {
        "tao-upper" => Some("N*log(N)^2*loglog(N)"),
        "tao-typeI" => Some("N*exp(c*log(N)/loglog(N))"),
        "jia" => Some("N*log(N)^5*loglog(N)^2"),
        "paper-G" => Some("N*log(N)^5*loglog(N)^2-log(N)"),
        _ => None,
    }
}

/// Named bound; `c` defaults to 1 when the constants map lacks it.
pub fn predefined_bound(name: &str, constants: &Constants) -> Result<BoundExpr, BoundsError> {
    let text = predefined_text(name).ok_or_else(|| BoundsError::UnknownBound(name.to_string()))?;
    let mut constants = constants.clone();
    constants.entry("c".to_string()).or_insert(1.0);
    parse_bound(text, &constants)
}

/// One grid point of the residual report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub n: u64,
    pub s: u64,
    pub s_i: u64,
    pub g: f64,
    /// `S_I(N) - G(N)`.
    pub epsilon: f64,
    /// Running maximum of `epsilon` over the grid so far, floored at 0.
    pub epsilon_runmax: f64,
    /// `G(N) + epsilon_runmax`.
    pub chi: f64,
    /// `S_I(N) / G(N)`; `None` when `G(N) = 0`.
    pub ratio_si_g: Option<f64>,
    pub pnt_ratio: f64,
}

fn at(n: u64) -> impl FnOnce(BoundsError) -> BoundsError {
    move |e| BoundsError::AtGridPoint {
        n,
        source: Box::new(e),
    }
}

/// Residuals of `S_I` against `G` on the series grid. The running maximum
/// is the least nonnegative, nondecreasing `eps(N)` with `S_I <= G + eps`
/// at every grid point seen.
pub fn residual_series(sums: &SumSeries, g: &BoundExpr) -> Result<Vec<ReportRow>, BoundsError> {
    let grid = sums.grid();
    let pi = prime_counts_at(&grid);
    let mut runmax = 0.0f64;
    let mut rows = Vec::with_capacity(sums.rows.len());
    for (row, &pi_n) in sums.rows.iter().zip(&pi) {
        let n = row.n;
        let g_n = eval_bound(g, n).map_err(at(n))?;
        let s_i = row.s_i as f64;
        let epsilon = s_i - g_n;
        runmax = runmax.max(epsilon);
        let chi = g_n + runmax;
        // G + (S_I - G) can round one ulp below S_I.
        let slack = 4.0 * f64::EPSILON * g_n.abs().max(s_i);
        if chi < s_i - slack {
            return Err(BoundsError::Invariant {
                n,
                chi,
                s_i: row.s_i,
            });
        }
        rows.push(ReportRow {
            n,
            s: row.s,
            s_i: row.s_i,
            g: g_n,
            epsilon,
            epsilon_runmax: runmax,
            chi,
            ratio_si_g: (g_n != 0.0).then(|| s_i / g_n),
            pnt_ratio: pnt_ratio_from_count(n, pi_n),
        });
    }
    Ok(rows)
}

/// pi(x) at each point of an increasing list, in one sieve pass.
pub fn prime_counts_at(points: &[u64]) -> Vec<u64> {
    let Some(&last) = points.last() else {
        return Vec::new();
    };
    if last < 2 {
        return vec![0; points.len()];
    }
    let mut counts = vec![0u64; points.len()];
    let mut idx = 0;
    let mut running = 0u64;
    crate::primes::for_each_prime(2, last + 1, crate::primes::DEFAULT_WINDOW, |p| {
        while idx < points.len() && points[idx] < p {
            counts[idx] = running;
            idx += 1;
        }
        running += 1;
    })
    .expect("grid below 2^40");
    for c in &mut counts[idx..] {
        *c = running;
    }
    counts
}

fn pnt_ratio_from_count(x: u64, pi: u64) -> f64 {
    pi as f64 * (x as f64).ln() / x as f64
}

/// `pi(X) * ln X / X`.
pub fn pnt_ratio(x: u64) -> f64 {
    pnt_ratio_from_count(x, prime_count(x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub n: u64,
    pub si_over_g: f64,
    pub pnt_ratio: f64,
}

/// `S_I(N)/G(N)` next to `pi(N) ln N / N` on the series grid.
pub fn ratio_comparison(sums: &SumSeries, g: &BoundExpr) -> Result<Vec<RatioRow>, BoundsError> {
    let grid = sums.grid();
    let pi = prime_counts_at(&grid);
    sums.rows
        .iter()
        .zip(pi)
        .map(|(row, pi_n)| {
            let g_n = eval_bound(g, row.n).map_err(at(row.n))?;
            if g_n == 0.0 {
                return Err(BoundsError::DivisionByZero { n: row.n });
            }
            Ok(RatioRow {
                n: row.n,
                si_over_g: row.s_i as f64 / g_n,
                pnt_ratio: pnt_ratio_from_count(row.n, pi_n),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Congruence {
    pub floor: i64,
    /// `floor mod N`, in `[0, N)`.
    pub remainder: u64,
    pub divisible: bool,
}

/// Tests `N | floor(G(N))`.
pub fn congruence_check(g: &BoundExpr, n: u64) -> Result<Congruence, BoundsError> {
    let value = eval_bound(g, n)?;
    let floor = value.floor();
    if floor.abs() >= EXACT_INTEGER_LIMIT {
        return Err(BoundsError::Magnitude { n, value });
    }
    let floor = floor as i64;
    let remainder = floor.rem_euclid(n as i64) as u64;
    Ok(Congruence {
        floor,
        remainder,
        divisible: remainder == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sums::SumRow;

    fn parse(text: &str) -> BoundExpr {
        parse_bound(text, &Constants::new()).unwrap()
    }

    fn series(rows: &[(u64, u64)]) -> SumSeries {
        SumSeries {
            rows: rows
                .iter()
                .map(|&(n, s_i)| SumRow {
                    n,
                    s: 0,
                    s_i,
                    s_ii: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn parses_variable_and_precedence() {
        assert_eq!(parse("N"), BoundExpr::Var);
        assert_eq!(
            parse("1 + 2 * N"),
            BoundExpr::binary(
                BinOp::Add,
                BoundExpr::Num(1.0),
                BoundExpr::binary(BinOp::Mul, BoundExpr::Num(2.0), BoundExpr::Var)
            )
        );
        assert_eq!(
            parse("N - 1 - 2"),
            BoundExpr::binary(
                BinOp::Sub,
                BoundExpr::binary(BinOp::Sub, BoundExpr::Var, BoundExpr::Num(1.0)),
                BoundExpr::Num(2.0)
            )
        );
        assert_eq!(parse("(N)^2.5"), BoundExpr::pow(BoundExpr::Var, 2.5));
    }

    #[test]
    fn g_bound_tree() {
        let g = predefined_bound("paper-G", &Constants::new()).unwrap();
        let log_n = || BoundExpr::call(Func::Log, BoundExpr::Var);
        let jia = BoundExpr::binary(
            BinOp::Mul,
            BoundExpr::binary(BinOp::Mul, BoundExpr::Var, BoundExpr::pow(log_n(), 5.0)),
            BoundExpr::pow(BoundExpr::call(Func::LogLog, BoundExpr::Var), 2.0),
        );
        assert_eq!(g, BoundExpr::binary(BinOp::Sub, jia.clone(), log_n()));
        assert_eq!(predefined_bound("jia", &Constants::new()).unwrap(), jia);
        assert_eq!(g, parse("N*log(N)^5*loglog(N)^2 - log(N)"));
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_bound("N*exp(c*log(N)/loglog(N))", &Constants::new()),
            Err(BoundsError::UnknownIdentifier {
                name: "c".into(),
                pos: 6
            })
        );
        for bad in [
            "", "N +", "log N", "(N", "N)", "N^-1", "N^x", "2 $ 3", "N N",
        ] {
            assert!(
                matches!(
                    parse_bound(bad, &Constants::new()),
                    Err(BoundsError::Syntax { .. })
                ),
                "{bad}"
            );
        }
        assert_eq!(
            predefined_bound("nosuch", &Constants::new()),
            Err(BoundsError::UnknownBound("nosuch".into()))
        );
    }

    #[test]
    fn constants_resolve() {
        let mut k = Constants::new();
        k.insert("c".into(), 2.0);
        let e = predefined_bound("tao-typeI", &k).unwrap();
        let want = 100.0 * (2.0 * 100f64.ln() / 100f64.ln().ln()).exp();
        assert!((eval_bound(&e, 100).unwrap() - want).abs() < 1e-9 * want);
        let default_c = predefined_bound("tao-typeI", &Constants::new()).unwrap();
        assert!(default_c.to_string().contains('c'));
    }

    #[test]
    fn evaluation_and_domain() {
        assert_eq!(eval_bound(&parse("N"), 100), Ok(100.0));
        assert!(matches!(
            eval_bound(&parse("loglog(N)"), 2),
            Err(BoundsError::Domain(_))
        ));
        assert!(matches!(
            eval_bound(&parse("loglog(N)"), 15),
            Err(BoundsError::Domain(_))
        ));
        assert!(eval_bound(&parse("loglog(N)"), 16).unwrap() > 0.0);
        assert!(matches!(
            eval_bound(&parse("log(N - 100)"), 100),
            Err(BoundsError::Domain(_))
        ));
        assert!(matches!(
            eval_bound(&parse("sqrt(2 - N)"), 10),
            Err(BoundsError::Domain(_))
        ));
        assert!(matches!(
            eval_bound(&parse("1/(N-10)"), 10),
            Err(BoundsError::NonFinite { .. })
        ));
        assert!(matches!(
            eval_bound(&parse("exp(N)"), 1000),
            Err(BoundsError::NonFinite { .. })
        ));
        assert!(matches!(
            eval_bound(&parse("N"), 1),
            Err(BoundsError::Domain(_))
        ));
    }

    #[test]
    fn printing_is_reparseable() {
        for text in [
            "N-(N-1)",
            "N/(N*2)",
            "(N+1)*(N-1)",
            "(N^2)^3",
            "(N+1)^0.5",
            "log(N)^2/N",
            "N-1+2",
        ] {
            let e = parse(text);
            assert_eq!(e.to_string(), text);
            assert_eq!(parse(&e.to_string()), e);
        }
        assert_eq!(parse(" N * 3.25e2 ").to_string(), "N*325");
    }

    #[test]
    fn residuals_with_zero_bound() {
        let rows = residual_series(&series(&[(10, 11), (20, 30), (30, 30)]), &parse("0")).unwrap();
        let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        assert_eq!(eps, vec![11.0, 30.0, 30.0]);
        let chi: Vec<f64> = rows.iter().map(|r| r.chi).collect();
        assert_eq!(chi, vec![11.0, 30.0, 30.0]);
        assert!(rows.iter().all(|r| r.ratio_si_g.is_none()));
    }

    #[test]
    fn runmax_holds_after_residual_drops() {
        // G = N: eps = 11 - 10 = 1, then 15 - 20 = -5.
        let rows = residual_series(&series(&[(10, 11), (20, 15)]), &parse("N")).unwrap();
        assert_eq!(rows[0].epsilon_runmax, 1.0);
        assert_eq!(rows[1].epsilon, -5.0);
        assert_eq!(rows[1].epsilon_runmax, 1.0);
        assert_eq!(rows[1].chi, 21.0);
        assert!(rows.iter().all(|r| r.chi >= r.s_i as f64));
    }

    #[test]
    fn residual_errors_carry_grid_point() {
        let err = residual_series(&series(&[(20, 1), (10, 1)]), &parse("log(N-15)")).unwrap_err();
        assert!(matches!(err, BoundsError::AtGridPoint { n: 10, .. }));
    }

    #[test]
    fn pnt_values() {
        assert!((pnt_ratio(10) - 4.0 * 10f64.ln() / 10.0).abs() < 1e-15);
        assert!((pnt_ratio(2) - 2f64.ln() / 2.0).abs() < 1e-15);
        assert!((pnt_ratio(10_000) - 1.1320).abs() < 1e-4);
        assert_eq!(prime_counts_at(&[2, 10, 11, 100]), vec![1, 4, 5, 25]);
        assert!(prime_counts_at(&[]).is_empty());
    }

    #[test]
    fn ratio_rows() {
        let s = series(&[(10, 11)]);
        let rows = ratio_comparison(&s, &parse("N")).unwrap();
        assert_eq!(rows[0].si_over_g, 1.1);
        assert_eq!(
            ratio_comparison(&s, &parse("0")),
            Err(BoundsError::DivisionByZero { n: 10 })
        );
        assert!(ratio_comparison(&SumSeries::default(), &parse("N"))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn congruences() {
        for n in [2, 7, 100, 12345] {
            let c = congruence_check(&parse("N"), n).unwrap();
            assert_eq!((c.remainder, c.divisible), (0, true));
        }
        let c = congruence_check(&parse("N + 1"), 7).unwrap();
        assert_eq!((c.floor, c.remainder, c.divisible), (8, 1, false));
        let c = congruence_check(&parse("N - 9.5"), 7).unwrap();
        assert_eq!((c.floor, c.remainder), (-3, 4));
        assert!(matches!(
            congruence_check(&parse("N^20"), 100),
            Err(BoundsError::Magnitude { .. })
        ));
    }
}
