//! Exact-arithmetic oracles shared by the integration tests. Nothing in here
//! touches the library's evaluation paths.
#![allow(dead_code)]

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `ln |n|` for a big integer, accurate to a couple of ulp.
pub fn ln_bigint(n: &BigInt) -> f64 {
    assert!(!n.is_zero());
    let bits = n.bits() as i64;
    let shift = (bits - 64).max(0);
    let top = (n.abs() >> shift as usize).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `(mantissa, k)` with `|r| ≈ mantissa * 2^-k` and a 64+ bit mantissa.
fn scaled(r: &BigRational) -> (BigInt, i64) {
    let num = r.numer().abs();
    let den = r.denom().clone();
    let k = 70 - (num.bits() as i64 - den.bits() as i64);
    let q = if k >= 0 { (num << k as usize) / den } else { num / (den << (-k) as usize) };
    (q, k)
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let (q, k) = scaled(r);
    let sign = if r.numer().sign() == Sign::Minus { -1.0 } else { 1.0 };
    let mantissa = q.to_f64().unwrap();
    // split the power of two to stay in range for extreme k
    sign * mantissa * 2f64.powi(-(k as i32) / 2) * 2f64.powi(-(k as i32) + (k as i32) / 2)
}

pub fn ln_abs_ratio(r: &BigRational) -> f64 {
    let (q, k) = scaled(r);
    ln_bigint(&q) - k as f64 * std::f64::consts::LN_2
}

/// Ascending series of `J_p(x)` summed exactly in rationals until the
/// alternating tail is below `1e-40`.
pub fn bessel_exact(p: u32, x: &BigRational) -> f64 {
    let half = x / BigRational::from_integer(BigInt::from(2));
    let half_sq = &half * &half;
    let mut term = (0..p).fold(BigRational::one(), |acc, _| acc * &half)
        / BigRational::from_integer(factorial(p as u64));
    let mut sum = term.clone();
    let tiny = rational(1, 1) / BigRational::from_integer(BigInt::from(10).pow(40));
    let x_f = ratio_to_f64(x);
    let mut k = 1u64;
    loop {
        term = -term * &half_sq / BigRational::from_integer(BigInt::from(k * (k + p as u64)));
        sum += &term;
        if (k as f64) > x_f && term.abs() < tiny {
            break;
        }
        k += 1;
    }
    ratio_to_f64(&sum)
}

/// `sum_{k=0}^{min(l,n)} (-1)^k β^{l+n-2k} / (k! (l-k)! (n-k)!)` for a
/// rational β, exactly.
pub fn overlap_sum_exact(l: u64, n: u64, beta: &BigRational) -> BigRational {
    let m = l.min(n);
    let beta_sq = beta * beta;
    // start at k = m and walk down: term_k = (-1)^k β^{l+n-2k} / (k!(l-k)!(n-k)!)
    let top = l + n - 2 * m;
    let mut term = (0..top).fold(BigRational::one(), |acc, _| acc * beta)
        / BigRational::from_integer(factorial(m) * factorial(l - m) * factorial(n - m));
    if m % 2 == 1 {
        term = -term;
    }
    let mut sum = term.clone();
    for k in (0..m).rev() {
        // term_k / term_{k+1} = -β² (k+1) / ((l-k)(n-k))
        term = -term * &beta_sq * BigRational::from_integer(BigInt::from(k + 1))
            / BigRational::from_integer(BigInt::from((l - k) * (n - k)));
        sum += &term;
    }
    sum
}

/// `ln |<l| D(β) |n>|` from the exact sum:
/// `-β²/2 + ½ ln l! + ½ ln n! + ln |sum|`.
pub fn ln_overlap_exact(l: u64, n: u64, beta: &BigRational) -> f64 {
    let sum = overlap_sum_exact(l, n, beta);
    if sum.is_zero() {
        return f64::NEG_INFINITY;
    }
    let b = ratio_to_f64(beta);
    -0.5 * b * b + 0.5 * ln_bigint(&factorial(l)) + 0.5 * ln_bigint(&factorial(n)) + ln_abs_ratio(&sum)
}

/// Sign of the exact sum (+1, -1 or 0).
pub fn overlap_sum_sign(l: u64, n: u64, beta: &BigRational) -> i32 {
    let s = overlap_sum_exact(l, n, beta);
    if s.is_zero() {
        0
    } else if s.is_positive() {
        1
    } else {
        -1
    }
}

/// `ln |<l| D(1/den) |n>|` through the integer form of the sum:
/// `Σ_k (-1)^k β^{l+n-2k} / (k!(l-k)!(n-k)!) = β^{l+n} T / (l! n!)` with
/// `T = Σ_k (-1)^k C(l,k) C(n,k) k! den^{2k}`.
/// Cheap enough for `l, n` around `10^4`.
pub fn ln_overlap_integer(l: u64, n: u64, den: u64) -> f64 {
    let den_sq = BigInt::from(den) * BigInt::from(den);
    let mut term = BigInt::one();
    let mut total = BigInt::one();
    for k in 1..=l.min(n) {
        term = term * BigInt::from(l - k + 1) * BigInt::from(n - k + 1) * &den_sq / BigInt::from(k);
        if k % 2 == 1 {
            total -= &term;
        } else {
            total += &term;
        }
    }
    assert!(!total.is_zero());
    let beta = 1.0 / den as f64;
    -0.5 * beta * beta - 0.5 * (ln_bigint(&factorial(l)) + ln_bigint(&factorial(n))) - (l + n) as f64 * (den as f64).ln()
        + ln_bigint(&total)
}

/// `ln |L_n^{(a)}(x)|` from the plain three-term recurrence, rescaled by
/// powers of two to stay in range.
pub fn ln_laguerre_recurrence(n: u64, a: f64, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0f64, 1.0 + a - x);
    let mut log_scale = 0.0;
    if n == 0 {
        return 0.0;
    }
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if !(1e-100..=1e100).contains(&m) {
            prev /= m;
            cur /= m;
            log_scale += m.ln();
        }
    }
    cur.abs().ln() + log_scale
}
