//! Segmented sieve, prime counting, and the von Mangoldt function.

use thiserror::Error;

use crate::arith::{divisors, factorize};

/// Sieve window width, in integers.
pub const DEFAULT_WINDOW: u64 = 1 << 20;

/// Upper end of the supported sieving range.
pub const MAX_HI: u64 = 1 << 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrimesError {
    #[error("invalid prime range [{lo}, {hi}): need 2 <= lo <= hi <= 2^40")]
    InvalidRange { lo: u64, hi: u64 },
}

/// The primes in the half-open interval `[lo, hi)`, increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeRange {
    pub lo: u64,
    pub hi: u64,
    pub primes: Vec<u64>,
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Streams every prime in `[lo, hi)` to `visit`, in increasing order.
///
/// Memory is `O(window + pi(sqrt(hi)))`.
pub fn for_each_prime(
    lo: u64,
    hi: u64,
    window: u64,
    mut visit: impl FnMut(u64),
) -> Result<(), PrimesError> {
    if lo < 2 || lo > hi || hi > MAX_HI || window == 0 {
        return Err(PrimesError::InvalidRange { lo, hi });
    }
    if lo == hi {
        return Ok(());
    }
    let base = simple_sieve(isqrt(hi - 1));
    let mut marks = vec![false; window.min(hi - lo) as usize];
    let mut start = lo;
    while start < hi {
        let end = (start + window).min(hi);
        let len = (end - start) as usize;
        let marks = &mut marks[..len];
        marks.fill(false);
        for &p in &base {
            if p * p >= end {
                break;
            }
            let first = (p * p).max(start.div_ceil(p) * p);
            let mut j = (first - start) as usize;
            while j < len {
                marks[j] = true;
                j += p as usize;
            }
        }
        for (i, &m) in marks.iter().enumerate() {
            if !m {
                visit(start + i as u64);
            }
        }
        start = end;
    }
    Ok(())
}

/// Exactly the primes in `[lo, hi)`.
pub fn primes_in_range(lo: u64, hi: u64) -> Result<PrimeRange, PrimesError> {
    primes_in_range_with_window(lo, hi, DEFAULT_WINDOW)
}

pub fn primes_in_range_with_window(
    lo: u64,
    hi: u64,
    window: u64,
) -> Result<PrimeRange, PrimesError> {
    let mut primes = Vec::new();
    for_each_prime(lo, hi, window, |p| primes.push(p))?;
    Ok(PrimeRange { lo, hi, primes })
}

/// pi(x), the number of primes not exceeding `x`. Zero below 2.
pub fn prime_count(x: u64) -> u64 {
    if x < 2 {
        return 0;
    }
    let mut count = 0;
    for_each_prime(2, x + 1, DEFAULT_WINDOW, |_| count += 1)
        .expect("range [2, x] is valid for x < 2^40");
    count
}

/// von Mangoldt function: `ln p` when `m = p^k` with `k >= 1`, else 0.
pub fn mangoldt(m: u64) -> f64 {
    if m < 2 {
        return 0.0;
    }
    let f = factorize(m).expect("m >= 2 below the factorization limit");
    match f.factors() {
        [(p, _)] => (*p as f64).ln(),
        _ => 0.0,
    }
}

/// Sum of `mangoldt(d)` over the divisors `d` of `n`.
pub fn mangoldt_divisor_sum(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let f = factorize(n).expect("n below the factorization limit");
    divisors(&f).into_iter().map(mangoldt).sum()
}
