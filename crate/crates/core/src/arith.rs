//! Exact 64-bit integer arithmetic: primality, factorization and divisors.
//!
//! Factorization runs trial division by the primes below 10^6, then falls
//! back to Brent's variant of Pollard rho on any cofactor that fails a
//! deterministic Miller-Rabin test. All modular products go through `u128`.

use std::sync::OnceLock;

use thiserror::Error;

/// Trial division covers every prime below this bound.
pub const TRIAL_LIMIT: u64 = 1_000_000;

/// Largest value whose factorization is guaranteed.
pub const FACTOR_LIMIT: u64 = 1 << 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("cannot factorize 0")]
    Zero,
    #[error("{0} exceeds the factorization range (< 2^63)")]
    OutOfRange(u64),
}

/// Prime factorization of a positive integer, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factorization {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// The factorization of 1.
    pub fn one() -> Self {
        Self {
            value: 1,
            factors: Vec::new(),
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Number of divisors, the product of `exponent + 1`.
    pub fn divisor_count(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(_, e)| u64::from(e) + 1)
            .product()
    }

    /// Multiplies back the prime powers; `None` on overflow.
    pub fn product(&self) -> Option<u64> {
        self.factors
            .iter()
            .try_fold(1u64, |acc, &(p, e)| acc.checked_mul(p.checked_pow(e)?))
    }

    /// Factorization of `self * other`, `None` if the product overflows.
    pub fn mul(&self, other: &Factorization) -> Option<Factorization> {
        let value = self.value.checked_mul(other.value)?;
        let mut factors = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (p, e) = self.factors[i];
            let (q, f) = other.factors[j];
            match p.cmp(&q) {
                std::cmp::Ordering::Less => {
                    factors.push((p, e));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    factors.push((q, f));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    factors.push((p, e + f));
                    i += 1;
                    j += 1;
                }
            }
        }
        factors.extend_from_slice(&self.factors[i..]);
        factors.extend_from_slice(&other.factors[j..]);
        Some(Factorization { value, factors })
    }

    /// Factorization of `self / d`, where `d` must divide the value.
    /// Returns `None` if it does not.
    pub fn div_exact(&self, mut d: u64) -> Option<Factorization> {
        if d == 0 || !self.value.is_multiple_of(d) {
            return None;
        }
        let value = self.value / d;
        let mut factors = Vec::with_capacity(self.factors.len());
        for &(p, e) in &self.factors {
            let mut e = e;
            while e > 0 && d.is_multiple_of(p) {
                d /= p;
                e -= 1;
            }
            if e > 0 {
                factors.push((p, e));
            }
        }
        debug_assert_eq!(d, 1);
        Some(Factorization { value, factors })
    }
}

/// Primes below [`TRIAL_LIMIT`], sieved once on first use.
pub fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = TRIAL_LIMIT as usize;
        let mut composite = vec![false; limit];
        let mut primes = Vec::with_capacity(78_498);
        for i in 2..limit {
            if !composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j < limit {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

/// Binary gcd; avoids hardware division.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    if a == 0 || b == 0 {
        return a | b;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

pub fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact divisibility by a fixed `u64` divisor with one multiply and one
/// rotate (Granlund-Montgomery). For `a = 2^k * m` with `m` odd, `a | x` iff
/// `rotr(x * m^-1 mod 2^64, k) <= (2^64 - 1) / a`.
#[derive(Debug, Clone, Copy)]
pub struct DivisibilityTest {
    inverse: u64,
    shift: u32,
    limit: u64,
}

impl DivisibilityTest {
    pub fn new(divisor: u64) -> Self {
        assert!(divisor > 0, "divisor must be positive");
        let shift = divisor.trailing_zeros();
        let odd = divisor >> shift;
        // Newton iteration doubles the correct low bits: 3 -> 6 -> 12 -> 24 -> 48 -> 96.
        let mut inverse = odd;
        for _ in 0..5 {
            inverse = inverse.wrapping_mul(2u64.wrapping_sub(odd.wrapping_mul(inverse)));
        }
        debug_assert_eq!(odd.wrapping_mul(inverse), 1);
        Self {
            inverse,
            shift,
            limit: u64::MAX / divisor,
        }
    }

    #[inline]
    pub fn divides(&self, x: u64) -> bool {
        x.wrapping_mul(self.inverse).rotate_right(self.shift) <= self.limit
    }
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

// The first twelve primes as witnesses decide primality for all n < 3.3 * 10^24.
const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's cycle-finding variant of Pollard rho. `n` must be an odd composite.
fn pollard_brent(n: u64) -> u64 {
    const BATCH: u64 = 128;
    for c in 1..n {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
        let mut g = 1;
        let mut x = y;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            // The batch overshot; step one at a time from the saved point.
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!("pollard rho exhausted increments for {n}")
}

fn split_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    split_large(d, out);
    split_large(n / d, out);
}

/// Unique prime factorization of `m`, for `1 <= m < 2^63`.
pub fn factorize(m: u64) -> Result<Factorization, ArithError> {
    if m == 0 {
        return Err(ArithError::Zero);
    }
    if m >= FACTOR_LIMIT {
        return Err(ArithError::OutOfRange(m));
    }
    let mut rest = m;
    let mut factors = Vec::new();
    let tz = rest.trailing_zeros();
    if tz > 0 {
        factors.push((2, tz));
        rest >>= tz;
    }
    for &p in &small_primes()[1..] {
        let p = u64::from(p);
        if p * p > rest {
            break;
        }
        if rest.is_multiple_of(p) {
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if rest > 1 {
        if rest < TRIAL_LIMIT * TRIAL_LIMIT {
            factors.push((rest, 1));
        } else {
            let mut large = Vec::new();
            split_large(rest, &mut large);
            large.sort_unstable();
            for q in large {
                match factors.last_mut() {
                    Some((p, e)) if *p == q => *e += 1,
                    _ => factors.push((q, 1)),
                }
            }
        }
    }
    Ok(Factorization { value: m, factors })
}

/// All divisors of the factored value, strictly increasing.
pub fn divisors(f: &Factorization) -> Vec<u64> {
    let mut out = Vec::with_capacity(f.divisor_count() as usize);
    out.push(1u64);
    for &(p, e) in &f.factors {
        let len = out.len();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}
