pub mod arith;
pub mod bounds;
pub mod cli;
pub mod enumerate;
pub mod primes;
pub mod sums;
