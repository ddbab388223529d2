//! Scalar special-function kernels: log-gamma, integer-order Bessel J,
//! associated Laguerre polynomials and a sign-aware log-sum-exp.
//!
//! Anything that involves factorials of large arguments goes through
//! [`SignedLog`], which keeps a binary exponent next to a mantissa so the
//! magnitude never overflows or underflows, while still converting back to
//! `f64` without loss whenever the value is representable.

use std::cmp::Ordering;
use std::f64::consts::LN_2;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use thiserror::Error;

/// Relative size of a sum (against its largest term) below which the sum is
/// reported as cancelled.
pub const SUM_CANCELLATION_THRESHOLD: f64 = 1e-13;

/// Largest tolerated single-step magnification in the Laguerre recurrence.
pub const LAGUERRE_DYNAMIC_RANGE: f64 = 1e12;

const LN2_LO: f64 = 2.319_046_813_846_299_6e-17;
const RESCALE_EXP: i32 = 600;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum NumericsError {
    #[error("{function}: argument {value} is outside the domain ({requirement})")]
    Domain {
        function: &'static str,
        value: f64,
        requirement: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }

    fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

/// A real number held as `mantissa * 2^exponent` with `1 <= |mantissa| < 2`.
///
/// Reported through [`SignedLog::log_abs`] and [`SignedLog::sign`]; zero has
/// `log_abs() == -inf` and `Sign::Zero`.
#[derive(Clone, Copy, PartialEq)]
pub struct SignedLog {
    mantissa: f64,
    exponent: i64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { mantissa: 0.0, exponent: 0 };
    pub const ONE: SignedLog = SignedLog { mantissa: 1.0, exponent: 0 };

    /// `mantissa * 2^exponent`, renormalised. Panics on non-finite input.
    pub fn from_parts(mantissa: f64, exponent: i64) -> Self {
        assert!(mantissa.is_finite(), "SignedLog from non-finite mantissa {mantissa}");
        if mantissa == 0.0 {
            return Self::ZERO;
        }
        let (frac, exp) = libm::frexp(mantissa);
        SignedLog {
            mantissa: 2.0 * frac,
            exponent: exponent + i64::from(exp) - 1,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_parts(x, 0)
    }

    /// The number `sign * exp(log_abs)`.
    pub fn from_ln(log_abs: f64, sign: Sign) -> Self {
        assert!(!log_abs.is_nan(), "SignedLog from NaN logarithm");
        if sign == Sign::Zero || log_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        assert!(log_abs.is_finite(), "SignedLog from infinite logarithm");
        let exponent = (log_abs / LN_2).floor();
        // Cody-Waite style reduction; the fused multiply keeps the product exact.
        let reduced = (-exponent).mul_add(LN_2, log_abs);
        let reduced = (-exponent).mul_add(LN2_LO, reduced);
        Self::from_parts(sign.as_f64() * reduced.exp(), exponent as i64)
    }

    pub fn sign(&self) -> Sign {
        Sign::of(self.mantissa)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn log_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.abs().ln() + self.exponent as f64 * LN_2
        }
    }

    /// Nearest `f64`; saturates to `±inf` or flushes to zero out of range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        match i32::try_from(self.exponent) {
            Ok(e) => libm::ldexp(self.mantissa, e),
            Err(_) if self.exponent > 0 => self.sign().as_f64() * f64::INFINITY,
            Err(_) => self.sign().as_f64() * 0.0,
        }
    }

    pub fn abs(&self) -> Self {
        SignedLog { mantissa: self.mantissa.abs(), exponent: self.exponent }
    }

    pub fn mul_f64(self, factor: f64) -> Self {
        Self::from_parts(self.mantissa * factor, self.exponent)
    }

    /// Compare magnitudes.
    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self
                .exponent
                .cmp(&other.exponent)
                .then(self.mantissa.abs().total_cmp(&other.mantissa.abs())),
        }
    }

    /// `mantissa * 2^(exponent - shift)` as a plain float.
    fn scaled(&self, shift: i64) -> f64 {
        let e = (self.exponent - shift).clamp(-2000, 2000) as i32;
        libm::ldexp(self.mantissa, e)
    }
}

impl Default for SignedLog {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for SignedLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignedLog({:?}, ln|x| = {})", self.sign(), self.log_abs())
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;

    fn mul(self, rhs: SignedLog) -> SignedLog {
        Self::from_parts(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Div for SignedLog {
    type Output = SignedLog;

    fn div(self, rhs: SignedLog) -> SignedLog {
        assert!(!rhs.is_zero(), "SignedLog division by zero");
        Self::from_parts(self.mantissa / rhs.mantissa, self.exponent - rhs.exponent)
    }
}

impl Neg for SignedLog {
    type Output = SignedLog;

    fn neg(self) -> SignedLog {
        SignedLog { mantissa: -self.mantissa, exponent: self.exponent }
    }
}

/// A computed value together with the cancellation it went through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checked {
    pub value: SignedLog,
    /// `log10` of the largest intermediate magnitude over the result; 0 when
    /// nothing cancelled, `inf` for an exactly cancelled result.
    pub lost_digits: f64,
    /// The loss exceeded the operation's threshold.
    pub cancelled: bool,
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64, NumericsError> {
    if !(x > 0.0) || x.is_infinite() {
        return Err(NumericsError::Domain {
            function: "log_gamma",
            value: x,
            requirement: "x > 0",
        });
    }
    Ok(libm::lgamma(x))
}

/// `ln n!`.
pub fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Sum of signed terms by the max-shift technique: every term is scaled by
/// the largest binary exponent present, positive and negative parts are
/// accumulated separately and recombined at the end.
pub fn signed_log_sum(terms: &[SignedLog]) -> Checked {
    let Some(shift) = terms.iter().filter(|t| !t.is_zero()).map(|t| t.exponent).max() else {
        return Checked { value: SignedLog::ZERO, lost_digits: 0.0, cancelled: false };
    };
    let mut positive = Neumaier::default();
    let mut negative = Neumaier::default();
    let mut peak = 0.0_f64;
    for term in terms {
        let v = term.scaled(shift);
        peak = peak.max(v.abs());
        if v > 0.0 {
            positive.add(v);
        } else if v < 0.0 {
            negative.add(-v);
        }
    }
    let total = positive.total() - negative.total();
    let value = SignedLog::from_parts(total, shift);
    let ratio = total.abs() / peak;
    Checked {
        value,
        lost_digits: -ratio.log10().min(0.0),
        cancelled: ratio < SUM_CANCELLATION_THRESHOLD,
    }
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    compensation: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Bessel function of the first kind `J_p(x)` for integer order and `x >= 0`.
///
/// Negative orders are mapped through `J_{-p} = (-1)^p J_p`, so the parity
/// relation holds bit for bit. Panics when `x` is negative or not finite.
pub fn bessel_j(p: i64, x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j: x = {x} must be finite and >= 0");
    let order = p.unsigned_abs();
    let value = if x <= SERIES_LIMIT {
        bessel_series(order, x)
    } else {
        bessel_miller(order, x, None)
    };
    if p < 0 && order % 2 == 1 {
        -value
    } else {
        value
    }
}

/// `J_0(x), J_1(x), ..., J_{max_order}(x)` from a single downward recurrence.
pub fn bessel_j_orders(max_order: u64, x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j_orders: x = {x} must be finite and >= 0");
    let len = max_order as usize + 1;
    if x == 0.0 {
        let mut out = vec![0.0; len];
        out[0] = 1.0;
        return out;
    }
    let mut out = vec![0.0; len];
    bessel_miller(max_order, x, Some(&mut out));
    out
}

const SERIES_LIMIT: f64 = 2.0;

/// Ascending series; all terms decrease monotonically for `x <= 2`.
fn bessel_series(order: u64, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let lead_ln = order as f64 * half.ln() - ln_factorial(order);
    if lead_ln < -750.0 {
        return 0.0;
    }
    let q = -half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    let nu = order as f64;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * lead_ln.exp()
}

/// Miller's downward recurrence normalised by `J_0 + 2 sum J_{2k} = 1`.
///
/// Returns `J_order(x)`; when `table` is given it is filled with
/// `J_0 ..= J_{table.len()-1}` and `order` must equal `table.len() - 1`.
fn bessel_miller(order: u64, x: f64, mut table: Option<&mut [f64]>) -> f64 {
    let reach = (order as f64).max(x.ceil());
    let start = reach + 40.0 * reach.cbrt() + 40.0;
    let mut k = start as u64;
    if k % 2 == 1 {
        k += 1;
    }
    let big = libm::ldexp(1.0, RESCALE_EXP);
    let small = libm::ldexp(1.0, -RESCALE_EXP);

    let two_over_x = 2.0 / x;
    let mut above = 0.0; // J_{j+1}
    let mut current = libm::ldexp(1.0, -RESCALE_EXP); // J_j, unnormalised
    let mut even_sum = 0.0; // sum of J_{2m}, m >= 1
    let mut picked = 0.0;
    let mut j = k;
    loop {
        if j == order {
            picked = current;
        }
        if let Some(t) = table.as_deref_mut() {
            if (j as usize) < t.len() {
                t[j as usize] = current;
            }
        }
        if j == 0 {
            break;
        }
        if j.is_multiple_of(2) {
            even_sum += current;
        }
        let below = j as f64 * two_over_x * current - above;
        above = current;
        current = below;
        j -= 1;
        if current.abs() > big {
            current *= small;
            above *= small;
            even_sum *= small;
            picked *= small;
            if let Some(t) = table.as_deref_mut() {
                for v in t.iter_mut().skip(j as usize + 1) {
                    *v *= small;
                }
            }
        }
    }
    // `current` now holds J_0.
    let norm = current + 2.0 * even_sum;
    if let Some(t) = table {
        for v in t.iter_mut() {
            *v /= norm;
        }
    }
    picked / norm
}

/// Associated Laguerre polynomial `L_n^{(a)}(x)` for `x >= 0`.
pub fn assoc_laguerre(n: u64, a: f64, x: f64) -> Result<Checked, NumericsError> {
    let mut seq = assoc_laguerre_sequence(n, a, x)?;
    Ok(seq.pop().expect("sequence holds n + 1 entries"))
}

/// `L_0^{(a)}(x), ..., L_{n_max}^{(a)}(x)`.
///
/// At `x = 0` the closed form `Γ(n+a+1) / (n! Γ(a+1))` is accumulated as the
/// product `prod_{j=1..n} (a + j) / j`; elsewhere the three-term recurrence
/// runs on a rescaled mantissa so no intermediate overflows.
pub fn assoc_laguerre_sequence(n_max: u64, a: f64, x: f64) -> Result<Vec<Checked>, NumericsError> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(NumericsError::Domain {
            function: "assoc_laguerre",
            value: x,
            requirement: "finite x >= 0",
        });
    }
    if !a.is_finite() {
        return Err(NumericsError::Domain {
            function: "assoc_laguerre",
            value: a,
            requirement: "finite order parameter",
        });
    }
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let exact = |value| Checked { value, lost_digits: 0.0, cancelled: false };
    out.push(exact(SignedLog::ONE));
    if n_max == 0 {
        return Ok(out);
    }

    if x == 0.0 {
        let mut acc = SignedLog::ONE;
        for j in 1..=n_max {
            let j = j as f64;
            acc = acc.mul_f64((a + j) / j);
            out.push(exact(acc));
        }
        return Ok(out);
    }

    // Shared binary exponent for the pair (prev, cur).
    let mut exponent: i64 = 0;
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    let first_ratio = (1.0 + a).abs().max(x) / cur.abs();
    out.push(step_result(cur, exponent, first_ratio));
    for k in 1..n_max {
        let kf = k as f64;
        let t1 = (2.0 * kf + 1.0 + a - x) * cur / (kf + 1.0);
        let t2 = (kf + a) * prev / (kf + 1.0);
        let next = t1 - t2;
        let ratio = t1.abs().max(t2.abs()) / next.abs();
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 0.0 {
            let (_, e) = libm::frexp(mag);
            if e.abs() > RESCALE_EXP {
                prev = libm::ldexp(prev, -e);
                cur = libm::ldexp(cur, -e);
                exponent += i64::from(e);
            }
        }
        out.push(step_result(cur, exponent, ratio));
    }
    Ok(out)
}

fn step_result(mantissa: f64, exponent: i64, ratio: f64) -> Checked {
    let ratio = if ratio.is_nan() { 1.0 } else { ratio };
    Checked {
        value: SignedLog::from_parts(mantissa, exponent),
        lost_digits: ratio.log10().max(0.0),
        cancelled: ratio > LAGUERRE_DYNAMIC_RANGE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn log_gamma_small_integers() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert_eq!(log_gamma(2.0).unwrap(), 0.0);
        assert!(rel(log_gamma(5.0).unwrap(), 24f64.ln()) < 1e-15);
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-3.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn signed_log_roundtrip_examples() {
        for x in [1.0, -1.0, 3.5e-300, -7.25e307, f64::MIN_POSITIVE, 0.1, -2.0] {
            assert_eq!(SignedLog::from_f64(x).to_f64(), x);
        }
        let z = SignedLog::from_f64(0.0);
        assert_eq!(z.sign(), Sign::Zero);
        assert_eq!(z.log_abs(), f64::NEG_INFINITY);
    }

    #[test]
    fn from_ln_large_magnitude() {
        let v = SignedLog::from_ln(-1.0e7, Sign::Negative);
        assert_eq!(v.sign(), Sign::Negative);
        assert!((v.log_abs() + 1.0e7).abs() < 4e-9);
        assert_eq!(v.to_f64(), -0.0);
        let w = SignedLog::from_ln(2.5, Sign::Positive);
        assert!(rel(w.to_f64(), 2.5f64.exp()) < 4e-16);
    }

    #[test]
    fn sum_examples() {
        let ln2 = SignedLog::from_ln(2f64.ln(), Sign::Positive);
        let s = signed_log_sum(&[ln2, ln2]);
        assert!((s.value.log_abs() - 4f64.ln()).abs() < 1e-15);
        assert!(!s.cancelled);

        let big = SignedLog::from_ln(1e300f64.ln(), Sign::Positive);
        let s = signed_log_sum(&[big, -big]);
        assert_eq!(s.value.sign(), Sign::Zero);
        assert!(s.cancelled);

        let empty = signed_log_sum(&[]);
        assert!(empty.value.is_zero() && !empty.cancelled);
    }

    #[test]
    fn sum_spanning_huge_exponent_gap() {
        let a = SignedLog::from_parts(1.0, 5000);
        let b = SignedLog::from_parts(1.0, -5000);
        let s = signed_log_sum(&[b, a, b]);
        assert_eq!(s.value, a);
    }

    #[test]
    fn bessel_trivial_values() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
        assert_eq!(bessel_j(-2, 3.0), bessel_j(2, 3.0));
        assert_eq!(bessel_j(-3, 7.5), -bessel_j(3, 7.5));
    }

    #[test]
    fn bessel_series_and_miller_agree_at_switch() {
        for p in 0..12 {
            let s = bessel_series(p, SERIES_LIMIT);
            let m = bessel_miller(p, SERIES_LIMIT, None);
            assert!((s - m).abs() < 1e-15, "p={p}: {s} vs {m}");
        }
    }

    #[test]
    fn bessel_table_matches_scalar() {
        let x = 17.3;
        let table = bessel_j_orders(40, x);
        for (p, v) in table.iter().enumerate() {
            assert!((v - bessel_j(p as i64, x)).abs() < 1e-14);
        }
        let small = bessel_j_orders(60, 0.01);
        assert!((small[0] - bessel_j(0, 0.01)).abs() < 1e-15);
        assert!(rel(small[5], bessel_j(5, 0.01)) < 1e-13);
        assert!(small[60] >= 0.0);
    }

    #[test]
    fn laguerre_low_degree() {
        let l0 = assoc_laguerre(0, -3.7, 12.0).unwrap();
        assert_eq!(l0.value.to_f64(), 1.0);
        let l2 = assoc_laguerre(2, 0.0, 1.0).unwrap();
        assert!((l2.value.to_f64() + 0.5).abs() < 1e-15);
        // L_1^{(a)}(x) = 1 + a - x
        let l1 = assoc_laguerre(1, 2.5, 0.75).unwrap();
        assert!((l1.value.to_f64() - 2.75).abs() < 1e-15);
        assert!(assoc_laguerre(3, 1.0, -0.5).is_err());
    }

    #[test]
    fn laguerre_at_zero_with_negative_integer_order_vanishes() {
        // Γ(n-p+1) / (n! Γ(1-p)) is zero once n >= p.
        let seq = assoc_laguerre_sequence(6, -3.0, 0.0).unwrap();
        assert_eq!(seq[1].value.to_f64(), -2.0);
        assert_eq!(seq[2].value.to_f64(), 1.0);
        assert!(seq[3].value.is_zero());
        assert!(seq[6].value.is_zero());
    }
}
