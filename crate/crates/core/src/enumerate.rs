//! Solutions of `4/n = 1/n1 + 1/n2 + 1/n3` in positive integers.
//!
//! Every canonical solution has `n/4 < n1 <= 3n/4`, since `1/n1 < 4/n <= 3/n1`.
//! For each `n1` in that window the residual `4/n - 1/n1` is reduced to
//! lowest terms `a/b`, and the pairs `1/n2 + 1/n3 = a/b` with `n1 <= n2 <= n3`
//! are found either by scanning `n2` (naive) or from the identity
//! `(a*n2 - b)(a*n3 - b) = b^2` (divisor). Both produce the same triples in the
//! same lexicographic order.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{factorize, gcd, is_prime, DivisibilityTest};

/// Exclusive upper bound on `n`; keeps `n * n1` below 2^62.
pub const MAX_N: u64 = 1 << 31;

/// Largest `n1` covered by the smallest-prime-factor table of an [`Enumerator`].
const TABLE_CAP: u64 = 1 << 23;

/// Largest modulus with a precomputed divisibility test.
const TEST_CAP: u64 = 1 << 21;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("n = {0} is below 2")]
    TooSmall(u64),
    #[error("n = {0} exceeds the supported range (n < 2^31)")]
    Overflow(u64),
    #[error("invalid range {lo}..{hi}")]
    InvalidRange { lo: u64, hi: u64 },
    #[error("{0} is not a prime >= 5; type classification needs gcd(p, 6) = 1")]
    NotClassifiable(u64),
    #[error("{triple} does not solve 4/{n}")]
    NotASolution { n: u64, triple: UnitFractionTriple },
    #[error("{triple} has {count} denominators divisible by {p}")]
    Unclassified {
        p: u64,
        triple: UnitFractionTriple,
        count: usize,
    },
}

/// Enumeration strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Method {
    Naive,
    #[default]
    Divisor,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Divisor => "divisor",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Method::Naive),
            "divisor" => Ok(Method::Divisor),
            other => Err(format!(
                "unknown method '{other}' (expected naive or divisor)"
            )),
        }
    }
}

/// One solution, stored with `n1 <= n2 <= n3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitFractionTriple {
    n1: u128,
    n2: u128,
    n3: u128,
}

impl UnitFractionTriple {
    /// Builds the canonical (sorted) form of any permutation.
    pub fn new(a: u128, b: u128, c: u128) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        Self {
            n1: v[0],
            n2: v[1],
            n3: v[2],
        }
    }

    pub fn n1(&self) -> u128 {
        self.n1
    }

    pub fn n2(&self) -> u128 {
        self.n2
    }

    pub fn n3(&self) -> u128 {
        self.n3
    }

    pub fn to_array(self) -> [u128; 3] {
        [self.n1, self.n2, self.n3]
    }

    /// Number of distinct orderings: 6, 3 or 1.
    pub fn orderings(&self) -> u64 {
        match (self.n1 == self.n2, self.n2 == self.n3) {
            (false, false) => 6,
            (true, true) => 1,
            _ => 3,
        }
    }

    /// Exact check of `4/n = 1/n1 + 1/n2 + 1/n3`.
    pub fn solves(&self, n: u64) -> bool {
        is_solution(n, self)
    }
}

impl fmt::Display for UnitFractionTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.n1, self.n2, self.n3)
    }
}

/// Ordered (`f(n)`) and unordered solution counts for one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolutionCount {
    pub n: u64,
    pub ordered: u64,
    pub unordered: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolutionType {
    /// Exactly one denominator divisible by `p`.
    TypeI,
    /// Exactly two denominators divisible by `p`.
    TypeII,
}

impl fmt::Display for SolutionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolutionType::TypeI => "I",
            SolutionType::TypeII => "II",
        })
    }
}

/// Per-prime split of `f(p)` into Type I and Type II solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeSplit {
    pub p: u64,
    pub type_i_ordered: u64,
    pub type_ii_ordered: u64,
    /// `type_i_ordered / 3`.
    pub f_i: u64,
    /// `type_ii_ordered / 3`.
    pub f_ii: u64,
}

impl TypeSplit {
    /// `f(p)`, the ordered total.
    pub fn ordered(&self) -> u64 {
        self.type_i_ordered + self.type_ii_ordered
    }
}

/// Exact membership test. Works in `u128` on the reduced residual so no
/// intermediate exceeds 2^126 for any `n < 2^31`.
pub fn is_solution(n: u64, t: &UnitFractionTriple) -> bool {
    if !(2..MAX_N).contains(&n) {
        return false;
    }
    let n = n as u128;
    let [n1, n2, n3] = t.to_array();
    if !(4 * n1 > n && 4 * n1 <= 3 * n) {
        return false;
    }
    let num = 4 * n1 - n;
    let den = n * n1;
    let g = crate::arith::gcd_u128(num, den);
    let (a, b) = (num / g, den / g);
    // 1/n2 must lie in [a/(2b), a/b).
    if !(a * n2 > b && a * n2 <= 2 * b) {
        return false;
    }
    let c = a * n2 - b;
    let e = b * n2;
    e % c == 0 && e / c == n3
}

fn multiplicity_counts(triples: &[UnitFractionTriple], n: u64) -> SolutionCount {
    SolutionCount {
        n,
        ordered: triples.iter().map(UnitFractionTriple::orderings).sum(),
        unordered: triples.len() as u64,
    }
}

/// Smallest prime factor of `m`, its exponent, and `m` with that prime power
/// removed.
#[derive(Debug, Clone, Copy, Default)]
struct SpfEntry {
    prime: u32,
    exponent: u32,
    rest: u32,
}

/// Enumeration engine; optionally carries a smallest-prime-factor table
/// that speeds up factoring `n1` during sweeps.
#[derive(Debug, Clone, Default)]
pub struct Enumerator {
    table: Vec<SpfEntry>,
    tests: Vec<DivisibilityTest>,
}

impl Enumerator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a factor table for every `n1` that can occur with `n <= n_max`.
    pub fn for_max_n(n_max: u64) -> Self {
        let limit = (3 * n_max / 4).min(TABLE_CAP) as usize;
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        let mut table = vec![SpfEntry::default(); limit + 1];
        for m in 2..=limit {
            let prime = spf[m];
            let q = m / prime as usize;
            table[m] = if q > 1 && spf[q] == prime {
                SpfEntry {
                    exponent: table[q].exponent + 1,
                    ..table[q]
                }
            } else {
                SpfEntry {
                    prime,
                    exponent: 1,
                    rest: q as u32,
                }
            };
        }
        let tests = (1..=(2 * n_max + 1).min(TEST_CAP))
            .map(DivisibilityTest::new)
            .collect();
        Self { table, tests }
    }

    fn divisibility_test(&self, a: u64) -> DivisibilityTest {
        match self.tests.get(a as usize - 1) {
            Some(&t) => t,
            None => DivisibilityTest::new(a),
        }
    }

    /// Writes the prime factorization of `m` (`1 <= m < 2^31`) into `out`.
    fn factor_into(&self, m: u64, out: &mut Vec<(u64, u32)>) {
        out.clear();
        if (m as usize) < self.table.len() {
            let mut rest = m as usize;
            while rest > 1 {
                let entry = self.table[rest];
                out.push((u64::from(entry.prime), entry.exponent));
                rest = entry.rest as usize;
            }
        } else {
            out.extend_from_slice(factorize(m).expect("n1 < 2^31").factors());
        }
    }

    /// Visits every canonical solution for `n` in lexicographic order.
    /// The visitor may stop the walk early by returning `Break`.
    pub fn for_each_solution(
        &self,
        n: u64,
        method: Method,
        visit: impl FnMut(UnitFractionTriple) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, EnumerateError> {
        self.walk(n, method, true, visit)
    }

    /// As [`Self::for_each_solution`], but triples sharing an `n1` may arrive
    /// in any order.
    pub fn for_each_solution_unordered(
        &self,
        n: u64,
        method: Method,
        visit: impl FnMut(UnitFractionTriple) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, EnumerateError> {
        self.walk(n, method, false, visit)
    }

    fn walk(
        &self,
        n: u64,
        method: Method,
        sorted: bool,
        mut visit: impl FnMut(UnitFractionTriple) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, EnumerateError> {
        check_n(n)?;
        let fact_n = match method {
            Method::Divisor => Some(factorize(n).expect("n < 2^31")),
            Method::Naive => None,
        };
        let mut found: Vec<UnitFractionTriple> = Vec::new();
        let mut scratch = Scratch::default();
        for n1 in n / 4 + 1..=3 * n / 4 {
            let num = 4 * n1 - n;
            let den = n * n1;
            let g = gcd(num, den);
            let (a, b) = if g == 1 {
                (num, den)
            } else {
                (num / g, den / g)
            };
            found.clear();
            match &fact_n {
                None => naive_pairs(n1, a, b, &mut found),
                Some(fact_n) => {
                    self.factor_into(n1, &mut scratch.n1_factors);
                    merge_without(
                        fact_n.factors(),
                        &scratch.n1_factors,
                        g,
                        &mut scratch.b_factors,
                    );
                    divisor_pairs(n1, a, b, sorted, &mut scratch, &mut found);
                }
            }
            for &t in &found {
                if visit(t).is_break() {
                    return Ok(ControlFlow::Break(()));
                }
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    pub fn enumerate_solutions(
        &self,
        n: u64,
        method: Method,
    ) -> Result<Vec<UnitFractionTriple>, EnumerateError> {
        let mut out = Vec::new();
        let _ = self.for_each_solution(n, method, |t| {
            out.push(t);
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }

    pub fn count_solutions(&self, n: u64, method: Method) -> Result<SolutionCount, EnumerateError> {
        let mut count = SolutionCount {
            n,
            ordered: 0,
            unordered: 0,
        };
        let _ = self.for_each_solution_unordered(n, method, |t| {
            count.ordered += t.orderings();
            count.unordered += 1;
            ControlFlow::Continue(())
        })?;
        Ok(count)
    }

    /// True if `n` has at least one solution; stops at the first one found.
    pub fn has_solution(&self, n: u64, method: Method) -> Result<bool, EnumerateError> {
        let flow = self.for_each_solution_unordered(n, method, |_| ControlFlow::Break(()))?;
        Ok(flow.is_break())
    }

    /// Type splits for a sorted batch of primes `>= 5`, computed with the
    /// divisor method arranged `n1`-outermost so that each divisor list of
    /// `n1^2` is shared by every prime of the batch.
    ///
    /// For prime `p` and `n1 < p` the residual is `a/b` with `a = 4*n1 - p`,
    /// `b = p*n1`, already coprime. Divisors `d <= b` of `b^2` are either
    /// `d1` or `p*d1` with `d1 | n1^2` (`d1 <= n1` in the second case):
    ///
    /// - `d = d1` solves iff `a | d1 + 4*n1^2`, and only `n3` is divisible by `p`
    ///   (Type I);
    /// - `d = p*d1` solves iff `a | d1 + n1`, and both `n2`, `n3` are divisible
    ///   by `p` (Type II).
    pub fn type_counts_batch(&self, primes: &[u64]) -> Result<Vec<TypeSplit>, EnumerateError> {
        for w in primes.windows(2) {
            if w[0] >= w[1] {
                return Err(EnumerateError::InvalidRange { lo: w[0], hi: w[1] });
            }
        }
        for &p in primes {
            check_classifiable(p)?;
        }
        let (Some(&first), Some(&last)) = (primes.first(), primes.last()) else {
            return Ok(Vec::new());
        };
        let mut type_i = vec![0u64; primes.len()];
        let mut type_ii = vec![0u64; primes.len()];
        let mut n1_factors = Vec::new();
        let mut all = Vec::new();
        let mut small = Vec::new();
        for n1 in first / 4 + 1..=3 * last / 4 {
            // Primes with p/4 < n1 <= 3p/4, i.e. ceil(4*n1/3) <= p < 4*n1.
            let lo = primes.partition_point(|&p| 3 * p < 4 * n1);
            let hi = primes.partition_point(|&p| p < 4 * n1);
            if lo >= hi {
                continue;
            }
            self.factor_into(n1, &mut n1_factors);
            let n1_sq = n1 * n1;
            divisors_of_square_up_to(&n1_factors, n1_sq, &mut all);
            small.clear();
            small.extend(all.iter().copied().filter(|&d1| d1 <= n1));
            let shift_i = 4 * n1_sq;
            for idx in lo..hi {
                let p = primes[idx];
                let a = 4 * n1 - p;
                let b = p * n1;
                let by_a = self.divisibility_test(a);
                // n2 >= n1 requires d >= a*n1 - b = n1*(4*n1 - 2p).
                let d_min = if 2 * n1 > p { n1 * (4 * n1 - 2 * p) } else { 0 };
                let orderings = |d: u64| match (d == d_min, d == b) {
                    (false, false) => 6,
                    (true, true) => 1,
                    _ => 3,
                };
                for &d1 in &all {
                    if by_a.divides(d1 + shift_i) && d1 >= d_min {
                        type_i[idx] += orderings(d1);
                    }
                }
                if a <= 2 * n1 {
                    for &d1 in &small {
                        if by_a.divides(d1 + n1) && p * d1 >= d_min {
                            type_ii[idx] += orderings(p * d1);
                        }
                    }
                }
            }
        }
        Ok(primes
            .iter()
            .zip(type_i.into_iter().zip(type_ii))
            .map(|(&p, (ti, tii))| {
                assert!(
                    ti % 3 == 0 && tii % 3 == 0,
                    "type counts for p = {p} not divisible by 3: {ti}, {tii}"
                );
                TypeSplit {
                    p,
                    type_i_ordered: ti,
                    type_ii_ordered: tii,
                    f_i: ti / 3,
                    f_ii: tii / 3,
                }
            })
            .collect())
    }

    pub fn type_counts(&self, p: u64, method: Method) -> Result<TypeSplit, EnumerateError> {
        check_classifiable(p)?;
        let mut type_i = 0u64;
        let mut type_ii = 0u64;
        let mut failure = None;
        let _ = self.for_each_solution_unordered(p, method, |t| match divisible_count(p, &t) {
            1 => {
                type_i += t.orderings();
                ControlFlow::Continue(())
            }
            2 => {
                type_ii += t.orderings();
                ControlFlow::Continue(())
            }
            count => {
                failure = Some(EnumerateError::Unclassified {
                    p,
                    triple: t,
                    count,
                });
                ControlFlow::Break(())
            }
        })?;
        if let Some(err) = failure {
            return Err(err);
        }
        assert!(
            type_i.is_multiple_of(3) && type_ii.is_multiple_of(3),
            "type counts for p = {p} not divisible by 3: {type_i}, {type_ii}"
        );
        Ok(TypeSplit {
            p,
            type_i_ordered: type_i,
            type_ii_ordered: type_ii,
            f_i: type_i / 3,
            f_ii: type_ii / 3,
        })
    }
}

fn check_n(n: u64) -> Result<(), EnumerateError> {
    if n < 2 {
        Err(EnumerateError::TooSmall(n))
    } else if n >= MAX_N {
        Err(EnumerateError::Overflow(n))
    } else {
        Ok(())
    }
}

fn check_classifiable(p: u64) -> Result<(), EnumerateError> {
    if p < 5 || !is_prime(p) {
        return Err(EnumerateError::NotClassifiable(p));
    }
    check_n(p)
}

fn divisible_count(p: u64, t: &UnitFractionTriple) -> usize {
    let p = p as u128;
    t.to_array().iter().filter(|&&x| x % p == 0).count()
}

/// Scans `n2` over `(b/a, 2b/a]`, keeping `n2 >= n1`, and tests `n3` for
/// integrality.
fn naive_pairs(n1: u64, a: u64, b: u64, out: &mut Vec<UnitFractionTriple>) {
    let lo = (b / a + 1).max(n1);
    let hi = 2 * b / a;
    if lo > hi {
        return;
    }
    let fits_u64 = (b as u128) * (hi as u128) <= u64::MAX as u128;
    for n2 in lo..=hi {
        let n3 = if fits_u64 {
            let c = a * n2 - b;
            let e = b * n2;
            e.is_multiple_of(c).then(|| (e / c) as u128)
        } else {
            let c = a as u128 * n2 as u128 - b as u128;
            let e = b as u128 * n2 as u128;
            e.is_multiple_of(c).then(|| e / c)
        };
        if let Some(n3) = n3 {
            out.push(UnitFractionTriple {
                n1: n1 as u128,
                n2: n2 as u128,
                n3,
            });
        }
    }
}

/// Reusable buffers for the divisor method.
#[derive(Default)]
struct Scratch {
    n1_factors: Vec<(u64, u32)>,
    b_factors: Vec<(u64, u32)>,
    divisors: Vec<u64>,
}

/// Factorization of `x * y / g` from the factorizations of `x` and `y`;
/// `g` must divide `x * y`.
fn merge_without(x: &[(u64, u32)], y: &[(u64, u32)], mut g: u64, out: &mut Vec<(u64, u32)>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let (p, mut e) = match (x.get(i), y.get(j)) {
            (Some(&(p, e)), Some(&(q, f))) if p == q => {
                i += 1;
                j += 1;
                (p, e + f)
            }
            (Some(&(p, e)), Some(&(q, _))) if p < q => {
                i += 1;
                (p, e)
            }
            (Some(_), Some(&(q, f))) | (None, Some(&(q, f))) => {
                j += 1;
                (q, f)
            }
            (Some(&(p, e)), None) => {
                i += 1;
                (p, e)
            }
            (None, None) => unreachable!(),
        };
        while g > 1 && e > 0 && g.is_multiple_of(p) {
            g /= p;
            e -= 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    debug_assert_eq!(g, 1);
}

/// Fills `out` with the divisors of `b^2` that do not exceed `b`, unordered.
fn divisors_of_square_up_to(factors: &[(u64, u32)], b: u64, out: &mut Vec<u64>) {
    if out.is_empty() {
        out.push(0);
    }
    out[0] = 1;
    let mut len = 1;
    for &(p, e) in factors {
        let base = len;
        let mut pk = 1u64;
        for _ in 0..2 * e {
            pk = pk.saturating_mul(p);
            if pk > b {
                break;
            }
            if out.len() < len + base {
                out.resize(len + base, 0);
            }
            // Branch-free append of out[i] * pk when it stays within b.
            for i in 0..base {
                let v = out[i].saturating_mul(pk);
                out[len] = v;
                len += usize::from(v <= b);
            }
        }
    }
    out.truncate(len);
}

/// Solves `1/n2 + 1/n3 = a/b` through divisor pairs `d * d' = b^2` with
/// `d <= d'` and `d = -b (mod a)`; then `n2 = (d + b)/a`, `n3 = (d' + b)/a`.
fn divisor_pairs(
    n1: u64,
    a: u64,
    b: u64,
    sorted: bool,
    scratch: &mut Scratch,
    out: &mut Vec<UnitFractionTriple>,
) {
    let divisors = &mut scratch.divisors;
    divisors_of_square_up_to(&scratch.b_factors, b, divisors);
    let by_a = DivisibilityTest::new(a);
    // n2 >= n1  <=>  d >= a*n1 - b
    let d_min = (a as u128 * n1 as u128).saturating_sub(b as u128).max(1) as u64;
    divisors.retain(|&d| d >= d_min && by_a.divides(d + b));
    if sorted {
        divisors.sort_unstable();
    }
    let b2 = b as u128 * b as u128;
    out.extend(divisors.iter().map(|&d| UnitFractionTriple {
        n1: n1 as u128,
        n2: ((d + b) / a) as u128,
        n3: (b2 / d as u128 + b as u128) / a as u128,
    }));
}

/// All canonical solutions for `n`, lexicographically ordered.
pub fn enumerate_solutions(
    n: u64,
    method: Method,
) -> Result<Vec<UnitFractionTriple>, EnumerateError> {
    Enumerator::new().enumerate_solutions(n, method)
}

pub fn count_solutions(n: u64, method: Method) -> Result<SolutionCount, EnumerateError> {
    Enumerator::new().count_solutions(n, method)
}

/// Counts derived from an explicit list of canonical triples.
pub fn count_from_triples(n: u64, triples: &[UnitFractionTriple]) -> SolutionCount {
    multiplicity_counts(triples, n)
}

/// First `n` in `[lo, hi]` with no solution, or `None` if every `n` has one.
pub fn verify_conjecture_range(lo: u64, hi: u64) -> Result<Option<u64>, EnumerateError> {
    if lo < 2 || lo > hi {
        return Err(EnumerateError::InvalidRange { lo, hi });
    }
    check_n(hi)?;
    let engine = Enumerator::for_max_n(hi);
    let first = (lo..=hi).into_par_iter().find_first(|&n| {
        !engine
            .has_solution(n, Method::Divisor)
            .expect("n validated above")
    });
    Ok(first)
}

/// Type of a solution for the prime `p >= 5`.
pub fn classify_triple(p: u64, t: &UnitFractionTriple) -> Result<SolutionType, EnumerateError> {
    check_classifiable(p)?;
    if !is_solution(p, t) {
        return Err(EnumerateError::NotASolution { n: p, triple: *t });
    }
    match divisible_count(p, t) {
        1 => Ok(SolutionType::TypeI),
        2 => Ok(SolutionType::TypeII),
        count => Err(EnumerateError::Unclassified {
            p,
            triple: *t,
            count,
        }),
    }
}

pub fn type_counts(p: u64) -> Result<TypeSplit, EnumerateError> {
    Enumerator::new().type_counts(p, Method::Divisor)
}
