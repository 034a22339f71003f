//! Exact rational arithmetic: Bernoulli numbers and the two power-series
//! coefficient families consumed by the symbol maps.
//!
//! `theta_series_coeff(k)` is the coefficient of `t^{2k}` in `sin(t)/t`,
//! `theta_inv_series_coeff(k)` the coefficient of `t^{2k}` in `t/sin(t)`.
//! The two series are exact reciprocals of one another.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

/// Shorthand for `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Shorthand for an integer rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n!` as a big integer.
pub fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for j in 2..=n {
        acc *= BigInt::from(j);
    }
    acc
}

/// Binomial coefficient `C(n, k)` as a big integer; zero when `k > n`.
pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

/// Bernoulli number `B_m` in the convention with `B_1 = -1/2`.
///
/// Computed from the defining recurrence
/// `sum_{j=0}^{m} C(m+1, j) B_j = 0` for `m >= 1`, `B_0 = 1`, which only
/// uses exact integer arithmetic.
pub fn bernoulli(m: u32) -> Rational {
    bernoulli_table(m)[m as usize].clone()
}

fn bernoulli_table(m: u32) -> Vec<Rational> {
    let mut table: Vec<Rational> = Vec::with_capacity(m as usize + 1);
    table.push(Rational::one());
    for n in 1..=m {
        let mut sum = Rational::zero();
        for (j, b) in table.iter().enumerate() {
            sum += b * Rational::from_integer(binomial(n + 1, j as u32));
        }
        let coeff = Rational::new(BigInt::from(-1), BigInt::from(n + 1));
        table.push(coeff * sum);
    }
    table
}

/// Coefficient of `t^{2k}` in the Maclaurin series of `sin(t)/t`,
/// i.e. `(-1)^k / (2k+1)!`.
pub fn theta_series_coeff(k: u32) -> Rational {
    let sign = if k.is_multiple_of(2) { 1 } else { -1 };
    Rational::new(BigInt::from(sign), factorial(2 * k + 1))
}

/// Coefficient `a_k` of `t^{2k}` in the Maclaurin series of `t/sin(t)`:
/// `a_k = (-1)^{k-1} (2^{2k} - 2) B_{2k} / (2k)!`.
pub fn theta_inv_series_coeff(k: u32) -> Rational {
    if k == 0 {
        return Rational::one();
    }
    let sign = if k % 2 == 1 { 1 } else { -1 };
    let pow = (BigInt::one() << (2 * k as usize)) - BigInt::from(2);
    let num = Rational::from_integer(BigInt::from(sign) * pow);
    num * bernoulli(2 * k) / Rational::from_integer(factorial(2 * k))
}
