//! Overlaps `±<l|n>∓` between the displaced Fock states of the two dressed
//! ladders.
//!
//! The excited ladder carries `|n>_+ = D(-Ω_a/4ω_L)|n>`, the ground ladder
//! `|n>_- = D(+Ω_a/4ω_L)|n>`, so an overlap across ladders is a matrix
//! element of a single displacement by `±Ω_a/2ω_L`. Three evaluations are
//! provided:
//!
//! * [`overlap_direct`]: the finite alternating sum in plain `f64`, which
//!   stops working once a factorial overflows (just above `n = 170`);
//! * [`overlap_log`]: the same sum evaluated from logarithms of its terms,
//!   which never overflows;
//! * [`overlap_bessel`]: the large-`n`, small-`p` limit `J_p(|Ω_a|√n/ω_L)`.
//!
//! [`overlap_exact`] picks between the first two. [`displacement_matrix_oracle`]
//! is an independent route through Laguerre polynomials used to check them.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    assoc_laguerre, assoc_laguerre_sequence, bessel_j, ln_factorial, signed_log_sum, Checked, Sign, SignedLog,
    SUM_CANCELLATION_THRESHOLD,
};

/// `max(l, n)` up to which [`overlap_exact`] tries the plain-float sum.
pub const DIRECT_LIMIT: u64 = 150;

/// Decimal digits an alternating sum may lose before [`overlap_exact`]
/// switches to the Laguerre form.
pub const MAX_SUM_LOSS: f64 = 4.0;

/// Terms more than this many e-folds below the largest one round to zero
/// after shifting, so the log-space sum never visits them.
const LOG_WINDOW: f64 = 700.0;

/// Smallest result magnitude accepted from the plain-float sum.
const DIRECT_FLOOR: f64 = 1e-290;

pub const ORACLE_MAX_DIM: usize = 2000;
pub const ORACLE_DEFICIT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("{name} must be {requirement}, got {value}")]
    Invalid {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OverlapError {
    #[error("Bessel overlap needs n >= 1 and |p| <= n/10, got n = {n}, p = {p}")]
    BesselDomain { n: u64, p: i64 },
    #[error("oracle dimension {dim} outside 1..={ORACLE_MAX_DIM}")]
    OracleDimension { dim: usize },
    #[error("|alpha|^2 = {alpha_sq} exceeds dim/4 = {limit}")]
    OracleDisplacement { alpha_sq: f64, limit: f64 },
    #[error("column-norm deficit {deficit:e} in column {column} exceeds {ORACLE_DEFICIT_LIMIT:e}")]
    Truncation { column: usize, deficit: f64 },
}

/// Drive and system frequencies plus the complex longitudinal coupling
/// `Ω_a = |Ω_a| e^{iφ}`. All frequencies share one (arbitrary) unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    omega0: f64,
    omega_l: f64,
    omega_a_abs: f64,
    phi: f64,
}

impl ModelParams {
    pub fn new(omega0: f64, omega_l: f64, omega_a_abs: f64, phi: f64) -> Result<Self, ParamsError> {
        let check = |name, requirement, value: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ParamsError::Invalid { name, requirement, value })
            }
        };
        check("omega0", "> 0", omega0, omega0 > 0.0)?;
        check("omega_L", "> 0", omega_l, omega_l > 0.0)?;
        check("|Omega_a|", ">= 0", omega_a_abs, omega_a_abs >= 0.0)?;
        check("phi", "finite", phi, true)?;
        Ok(ModelParams { omega0, omega_l, omega_a_abs, phi })
    }

    /// Parameters in units of `ω₀` with a real coupling.
    pub fn from_ratios(omega_a_over_omega0: f64, omega_l_over_omega0: f64) -> Result<Self, ParamsError> {
        Self::new(1.0, omega_l_over_omega0, omega_a_over_omega0, 0.0)
    }

    pub fn with_phase(self, phi: f64) -> Result<Self, ParamsError> {
        Self::new(self.omega0, self.omega_l, self.omega_a_abs, phi)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn omega_l(&self) -> f64 {
        self.omega_l
    }

    pub fn omega_a_abs(&self) -> f64 {
        self.omega_a_abs
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `|Ω_a| / 2ω_L`, the separation of the two ladders' displacements.
    pub fn beta(&self) -> f64 {
        self.omega_a_abs / (2.0 * self.omega_l)
    }

    /// `Ω_a / 4ω_L`, the displacement of each ladder.
    pub fn alpha0(&self) -> Complex64 {
        Complex64::from_polar(self.omega_a_abs / (4.0 * self.omega_l), self.phi)
    }

    /// `ω_L / ω₀`.
    pub fn laser_ratio(&self) -> f64 {
        self.omega_l / self.omega0
    }

    /// `|Ω_a| / ω₀`.
    pub fn coupling_ratio(&self) -> f64 {
        self.omega_a_abs / self.omega0
    }

    /// `|Ω_a| √n / ω_L`, the Bessel argument at photon number `n`.
    pub fn bessel_argument(&self, n: f64) -> f64 {
        self.omega_a_abs * n.sqrt() / self.omega_l
    }
}

/// Which displaced basis a field state belongs to: `|n>_+` (excited ladder)
/// or `|n>_-` (ground ladder).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Displacement {
    Plus,
    Minus,
}

impl Displacement {
    pub fn opposite(self) -> Self {
        match self {
            Displacement::Plus => Displacement::Minus,
            Displacement::Minus => Displacement::Plus,
        }
    }

    /// `(±1)^k`.
    fn parity(self, k: u64) -> bool {
        self == Displacement::Minus && k % 2 == 1
    }
}

/// A complex overlap kept as `exp(log_abs + i phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapValue {
    /// `ln |overlap|`, at most 0.
    pub log_abs: f64,
    /// Argument in `[0, 2π)`; sign prefactors show up as a shift by `π`.
    pub phase: f64,
    /// Decimal digits lost to cancellation on the way (0 for a clean result).
    pub lost_digits: f64,
}

impl OverlapValue {
    pub fn zero() -> Self {
        OverlapValue { log_abs: f64::NEG_INFINITY, phase: 0.0, lost_digits: 0.0 }
    }

    pub fn one() -> Self {
        OverlapValue { log_abs: 0.0, phase: 0.0, lost_digits: 0.0 }
    }

    fn kronecker(l: u64, n: u64) -> Self {
        if l == n {
            Self::one()
        } else {
            Self::zero()
        }
    }

    fn new(log_abs: f64, phase: f64, negative: bool, lost_digits: f64) -> Self {
        let phase = if negative { phase + PI } else { phase };
        OverlapValue {
            log_abs: log_abs.min(0.0),
            phase: phase.rem_euclid(TAU) + 0.0,
            lost_digits,
        }
    }

    /// The evaluation went past the cancellation warning threshold.
    pub fn cancelled(&self) -> bool {
        self.lost_digits > -SUM_CANCELLATION_THRESHOLD.log10()
    }

    pub fn modulus(&self) -> f64 {
        self.log_abs.exp()
    }

    pub fn modulus_sq(&self) -> f64 {
        (2.0 * self.log_abs).exp()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.modulus(), self.phase)
    }
}

/// `bra<l|n>ket` with the sign prefactor `(±)^l (∓)^n` and phase
/// `e^{i(l-n)φ}`. States of the same ladder are orthonormal.
///
/// Uses the plain-float sum while `max(l, n) <= DIRECT_LIMIT` and the result
/// is representable, the log-space sum otherwise. Either sum cancels roughly
/// like `e^{2β√min(l,n)}`; past [`MAX_SUM_LOSS`] digits the value comes from
/// the Laguerre form instead.
pub fn overlap_exact(l: u64, n: u64, params: &ModelParams, bra: Displacement, ket: Displacement) -> OverlapValue {
    let summed = if l.max(n) <= DIRECT_LIMIT {
        overlap_direct(l, n, params, bra, ket).unwrap_or_else(|| overlap_log(l, n, params, bra, ket))
    } else {
        overlap_log(l, n, params, bra, ket)
    };
    if summed.lost_digits <= MAX_SUM_LOSS {
        return summed;
    }
    let fallback = overlap_laguerre(l, n, params, bra, ket);
    if fallback.lost_digits < summed.lost_digits {
        fallback
    } else {
        summed
    }
}

/// The same matrix element through `L_m^{(M-m)}(β²)` with `m = min(l, n)`,
/// `M = max(l, n)`:
///
/// `|<l|n>| = √(m!/M!) β^{M-m} e^{-β²/2} |L_m^{(M-m)}(β²)|`.
///
/// The polynomial comes from the three-term recurrence, `O(m)` steps.
pub fn overlap_laguerre(l: u64, n: u64, params: &ModelParams, bra: Displacement, ket: Displacement) -> OverlapValue {
    let beta = params.beta();
    if bra == ket || beta == 0.0 {
        return OverlapValue::kronecker(l, n);
    }
    let (m, big) = (l.min(n), l.max(n));
    let lag = assoc_laguerre(m, (big - m) as f64, beta * beta).expect("β² is finite and non-negative");
    if lag.value.is_zero() {
        return OverlapValue { lost_digits: f64::INFINITY, ..OverlapValue::zero() };
    }
    let log_abs = -0.5 * ln_factorial_ratio(big, m) + (big - m) as f64 * beta.ln() - 0.5 * beta * beta
        + lag.value.log_abs();
    // bra +: <l|D(β e^{iφ})|n>; the (-α*)^{n-l} of the l < n branch and the
    // flipped displacement of bra - each contribute (-1)^{|l-n|}
    let odd_offset = (big - m) % 2 == 1;
    let flipped = match bra {
        Displacement::Plus => l < n && odd_offset,
        Displacement::Minus => l >= n && odd_offset,
    };
    let negative = (lag.value.sign() == Sign::Negative) ^ flipped;
    let phase = (l as f64 - n as f64) * params.phi();
    OverlapValue::new(log_abs, phase, negative, lag.lost_digits)
}

/// The alternating factorial sum in plain `f64`.
///
/// Returns `None` when a factorial overflows or the result drops below the
/// range where the plain evaluation can be trusted.
pub fn overlap_direct(
    l: u64,
    n: u64,
    params: &ModelParams,
    bra: Displacement,
    ket: Displacement,
) -> Option<OverlapValue> {
    let beta = params.beta();
    if bra == ket || beta == 0.0 {
        return Some(OverlapValue::kronecker(l, n));
    }
    let top = l.max(n) as usize;
    let mut fact = Vec::with_capacity(top + 1);
    fact.push(1.0_f64);
    for k in 1..=top {
        fact.push(fact[k - 1] * k as f64);
    }
    let (l_i, n_i) = (l as usize, n as usize);
    let mut sum = 0.0;
    let mut peak = 0.0_f64;
    for k in 0..=l_i.min(n_i) {
        let power = beta.powi((l_i + n_i - 2 * k) as i32);
        let term = power / fact[k] / fact[l_i - k] / fact[n_i - k];
        peak = peak.max(term.abs());
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let value = fact[l_i].sqrt() * fact[n_i].sqrt() * (-0.5 * beta * beta).exp() * sum;
    if !value.is_finite() || !(peak >= f64::MIN_POSITIVE) || value.abs() < DIRECT_FLOOR {
        return None;
    }
    let negative = (value < 0.0) ^ bra.parity(l) ^ ket.parity(n);
    let phase = (l as f64 - n as f64) * params.phi();
    let lost = (peak / sum.abs()).log10().max(0.0);
    Some(OverlapValue::new(value.abs().ln(), phase, negative, lost))
}

/// The alternating sum evaluated in log space:
///
/// `ln|<l|n>| = -β²/2 + ½ ln Γ(l+1) + ½ ln Γ(n+1) + ln S_max + ln|Σ_k (-1)^k S_k / S_max|`,
/// `ln S_k = (l+n-2k) ln β - ln Γ(k+1) - ln Γ(l-k+1) - ln Γ(n-k+1)`.
///
/// `S_k` is log-concave in `k`, so `S_max` sits where the ratio
/// `S_{k+1}/S_k = (l-k)(n-k) / ((k+1) β²)` crosses one. The shifted terms
/// `S_k / S_max` are built from those ratios outwards from the peak, and the
/// walk stops once a term would round to zero after the shift.
pub fn overlap_log(l: u64, n: u64, params: &ModelParams, bra: Displacement, ket: Displacement) -> OverlapValue {
    let beta = params.beta();
    if bra == ket || beta == 0.0 {
        return OverlapValue::kronecker(l, n);
    }
    let (scale_ln, sum) = log_space_sum(l, n, beta);
    if sum.value.is_zero() {
        return OverlapValue { lost_digits: f64::INFINITY, ..OverlapValue::zero() };
    }
    let log_abs = -0.5 * beta * beta + scale_ln + sum.value.log_abs();
    let negative = (sum.value.sign() == Sign::Negative) ^ bra.parity(l) ^ ket.parity(n);
    let phase = (l as f64 - n as f64) * params.phi();
    OverlapValue::new(log_abs, phase, negative, sum.lost_digits)
}

/// `ln |bra<l|n>∓|` for opposite ladders from the log-space sum, or from the
/// Laguerre form when the sum lost more than [`MAX_SUM_LOSS`] digits.
pub fn overlap_log_abs(l: u64, n: u64, params: &ModelParams, bra: Displacement) -> f64 {
    let summed = overlap_log(l, n, params, bra, bra.opposite());
    if summed.lost_digits <= MAX_SUM_LOSS {
        return summed.log_abs;
    }
    let fallback = overlap_laguerre(l, n, params, bra, bra.opposite());
    if fallback.lost_digits < summed.lost_digits {
        fallback.log_abs
    } else {
        summed.log_abs
    }
}

/// `(½ ln l! + ½ ln n! + ln S_max, Σ_k (-1)^k S_k / S_max)`.
///
/// The factorials are grouped as `ln(l!/k!)` and `ln(n!/k!)` around the peak
/// index, which keeps the first component accurate when `n` is in the
/// millions and the individual log-factorials are ~1e7.
fn log_space_sum(l: u64, n: u64, beta: f64) -> (f64, Checked) {
    let ln_beta = beta.ln();
    let beta_sq = beta * beta;
    let m = l.min(n);
    let ln_ratio = |k: u64| ((l - k) as f64).ln() + ((n - k) as f64).ln() - ((k + 1) as f64).ln() - 2.0 * ln_beta;
    let (mut lo, mut hi) = (0u64, m);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ln_ratio(mid) > 0.0 {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let peak = lo;
    let scale_ln = 0.5 * ln_factorial_ratio(l, peak) + 0.5 * ln_factorial_ratio(n, peak)
        + (l + n - 2 * peak) as f64 * ln_beta
        - ln_factorial(l - peak)
        - ln_factorial(n - peak);
    let floor = (-LOG_WINDOW).exp();
    let alternating = |k: u64, t: f64| SignedLog::from_f64(if k.is_multiple_of(2) { t } else { -t });
    let ratio = |k: u64| ((l - k) as f64) * ((n - k) as f64) / ((k + 1) as f64 * beta_sq);

    let mut terms = vec![alternating(peak, 1.0)];
    let mut t = 1.0;
    let mut k = peak;
    while k > 0 {
        k -= 1;
        t /= ratio(k);
        if t < floor {
            break;
        }
        terms.push(alternating(k, t));
    }
    t = 1.0;
    k = peak;
    while k < m {
        t *= ratio(k);
        k += 1;
        if t < floor {
            break;
        }
        terms.push(alternating(k, t));
    }
    (scale_ln, signed_log_sum(&terms))
}

/// `ln(a!/b!)` for `a >= b`.
fn ln_factorial_ratio(a: u64, b: u64) -> f64 {
    if a - b > 1024 {
        return ln_factorial(a) - ln_factorial(b);
    }
    let mut acc = 0.0;
    let mut product = 1.0f64;
    for j in b + 1..=a {
        product *= j as f64;
        if product > 1e250 {
            acc += product.ln();
            product = 1.0;
        }
    }
    acc + product.ln()
}

/// Large-`n` limit `bra<n|n-p>∓ ≈ (±)^p e^{ipφ} J_p(|Ω_a|√n/ω_L)`.
pub fn overlap_bessel(n: u64, p: i64, params: &ModelParams, bra: Displacement) -> Result<OverlapValue, OverlapError> {
    if n == 0 || p.unsigned_abs() * 10 > n {
        return Err(OverlapError::BesselDomain { n, p });
    }
    let j = bessel_j(p, params.bessel_argument(n as f64));
    if j == 0.0 {
        return Ok(OverlapValue::zero());
    }
    let negative = (j < 0.0) ^ bra.parity(p.unsigned_abs());
    Ok(OverlapValue::new(j.abs().ln(), p as f64 * params.phi(), negative, 0.0))
}

/// `<m|D(α)|n>` on a truncated Fock basis, built from Laguerre polynomials.
#[derive(Debug, Clone)]
pub struct DisplacementMatrix {
    pub alpha: Complex64,
    pub dim: usize,
    elements: Vec<Complex64>,
    /// `1 - sum_m |<m|D|n>|^2` for every column `n`.
    pub column_deficits: Vec<f64>,
    /// Number of leading columns whose deficit was checked against
    /// [`ORACLE_DEFICIT_LIMIT`].
    pub checked_columns: usize,
    /// Largest deficit among the checked columns.
    pub truncation_deficit: f64,
}

impl DisplacementMatrix {
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.elements[m * self.dim + n]
    }
}

/// `<m|D(α)|n>` for `m, n < dim` from
/// `√(n!/m!) α^{m-n} e^{-|α|²/2} L_n^{(m-n)}(|α|²)` (`m >= n`) and
/// `<m|D(α)|n> = conj(<n|D(-α)|m>)` below the diagonal.
///
/// Requires `|α|² <= dim/4`; the leading `dim/4 + 1` columns are checked for
/// norm loss and the call fails if any loses more than `1e-8`.
pub fn displacement_matrix_oracle(alpha: Complex64, dim: usize) -> Result<DisplacementMatrix, OverlapError> {
    if dim == 0 || dim > ORACLE_MAX_DIM {
        return Err(OverlapError::OracleDimension { dim });
    }
    let alpha_sq = alpha.norm_sqr();
    let limit = dim as f64 / 4.0;
    if alpha_sq > limit {
        return Err(OverlapError::OracleDisplacement { alpha_sq, limit });
    }
    let mut elements = vec![Complex64::new(0.0, 0.0); dim * dim];
    if alpha_sq == 0.0 {
        for i in 0..dim {
            elements[i * dim + i] = Complex64::new(1.0, 0.0);
        }
    } else {
        let ln_alpha = alpha.norm().ln();
        let theta = alpha.arg();
        for offset in 0..dim {
            let count = (dim - offset) as u64;
            let laguerre = assoc_laguerre_sequence(count - 1, offset as f64, alpha_sq)
                .expect("|alpha|^2 is finite and non-negative");
            for (lower, lag) in laguerre.iter().enumerate() {
                let upper = lower + offset;
                if lag.value.is_zero() {
                    continue;
                }
                let ln_mag = 0.5 * (ln_factorial(lower as u64) - ln_factorial(upper as u64))
                    + offset as f64 * ln_alpha
                    - 0.5 * alpha_sq
                    + lag.value.log_abs();
                let mag = ln_mag.exp();
                let flip = if lag.value.sign() == Sign::Negative { PI } else { 0.0 };
                let d = offset as f64;
                // <upper|D(α)|lower>: α^d; <lower|D(α)|upper>: (-α*)^d.
                elements[upper * dim + lower] = Complex64::from_polar(mag, d * theta + flip);
                if offset > 0 {
                    elements[lower * dim + upper] = Complex64::from_polar(mag, d * (PI - theta) + flip);
                }
            }
        }
    }
    let column_deficits: Vec<f64> = (0..dim)
        .map(|n| 1.0 - (0..dim).map(|m| elements[m * dim + n].norm_sqr()).sum::<f64>())
        .collect();
    let checked_columns = (dim / 4 + 1).min(dim);
    let (worst_column, truncation_deficit) = column_deficits[..checked_columns]
        .iter()
        .map(|d| d.abs())
        .enumerate()
        .fold((0, 0.0_f64), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    if truncation_deficit > ORACLE_DEFICIT_LIMIT {
        return Err(OverlapError::Truncation { column: worst_column, deficit: truncation_deficit });
    }
    Ok(DisplacementMatrix { alpha, dim, elements, column_deficits, checked_columns, truncation_deficit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, phi: f64) -> ModelParams {
        // ω₀ = 1, ω_L = 0.5 so that β = |Ω_a|
        ModelParams::new(1.0, 0.5, beta, phi).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, -0.1, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.1, f64::NAN).is_err());
        let p = ModelParams::from_ratios(1.0, 1.0).unwrap();
        assert_eq!(p.beta(), 0.5);
        assert_eq!(p.alpha0(), Complex64::new(0.25, 0.0));
    }

    #[test]
    fn same_ladder_is_orthonormal() {
        let p = params(0.8, 0.3);
        assert_eq!(overlap_exact(3, 3, &p, Displacement::Plus, Displacement::Plus), OverlapValue::one());
        assert_eq!(overlap_exact(2, 5, &p, Displacement::Minus, Displacement::Minus).modulus(), 0.0);
    }

    #[test]
    fn vacuum_overlap_is_gaussian() {
        // Ω_a/ω_L = 1 gives β = 1/2 and |<0|0>| = e^{-1/8}
        let p = ModelParams::from_ratios(1.0, 1.0).unwrap();
        let v = overlap_exact(0, 0, &p, Displacement::Plus, Displacement::Minus);
        assert!((v.modulus() - (-0.125f64).exp()).abs() < 1e-15);
        assert!((overlap_log_abs(0, 0, &p, Displacement::Minus) + 0.125).abs() < 1e-15);
    }

    #[test]
    fn single_photon_sign_convention() {
        // bra +: <1|D(β)|0> = +β e^{-β²/2} e^{iφ};  bra -: -β e^{-β²/2} e^{iφ}
        let phi = 0.7;
        let p = params(0.3, phi);
        let plus = overlap_exact(1, 0, &p, Displacement::Plus, Displacement::Minus).to_complex();
        let minus = overlap_exact(1, 0, &p, Displacement::Minus, Displacement::Plus).to_complex();
        let expected = Complex64::from_polar(0.3 * (-0.045f64).exp(), phi);
        assert!((plus - expected).norm() < 1e-15);
        assert!((minus + expected).norm() < 1e-15);
    }

    #[test]
    fn direct_and_log_paths_agree() {
        let p = params(0.9, 0.0);
        // the alternating sum cancels by up to ~2e8 at (150, 150), so both
        // paths share that loss
        for (l, n, tol) in [(0, 0, 1e-14), (5, 3, 1e-14), (40, 41, 1e-11), (100, 97, 5e-9), (150, 150, 5e-7)] {
            let d = overlap_direct(l, n, &p, Displacement::Plus, Displacement::Minus).unwrap();
            let g = overlap_log(l, n, &p, Displacement::Plus, Displacement::Minus);
            assert!((d.log_abs - g.log_abs).abs() < tol, "({l},{n}) {d:?} {g:?}");
            assert!((d.phase - g.phase).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_path_gives_up_past_factorial_overflow() {
        let p = ModelParams::from_ratios(0.1, 1.0).unwrap();
        assert!(overlap_direct(170, 170, &p, Displacement::Plus, Displacement::Minus).is_some());
        assert!(overlap_direct(171, 171, &p, Displacement::Plus, Displacement::Minus).is_none());
        let v = overlap_exact(171, 171, &p, Displacement::Plus, Displacement::Minus);
        assert!(v.log_abs.is_finite());
    }

    #[test]
    fn bessel_overlap_domain_and_trivial_value() {
        let p = ModelParams::from_ratios(0.0, 0.9).unwrap();
        assert_eq!(overlap_bessel(1000, 0, &p, Displacement::Plus).unwrap(), OverlapValue::one());
        assert!(overlap_bessel(0, 0, &p, Displacement::Plus).is_err());
        assert!(overlap_bessel(100, 11, &p, Displacement::Plus).is_err());
        assert!(overlap_bessel(100, -10, &p, Displacement::Plus).is_ok());
    }

    #[test]
    fn oracle_identity_and_vacuum() {
        let id = displacement_matrix_oracle(Complex64::new(0.0, 0.0), 8).unwrap();
        for m in 0..8 {
            for n in 0..8 {
                let want = if m == n { 1.0 } else { 0.0 };
                assert_eq!(id.get(m, n), Complex64::new(want, 0.0));
            }
        }
        let alpha = Complex64::from_polar(1.3, 0.4);
        let d = displacement_matrix_oracle(alpha, 60).unwrap();
        assert!((d.get(0, 0).re - (-0.5 * 1.69f64).exp()).abs() < 1e-15);
        assert!(d.get(0, 0).im.abs() < 1e-15);
    }

    #[test]
    fn oracle_rejects_unsafe_requests() {
        assert!(matches!(
            displacement_matrix_oracle(Complex64::new(3.0, 0.0), 20),
            Err(OverlapError::OracleDisplacement { .. })
        ));
        assert!(matches!(displacement_matrix_oracle(Complex64::new(0.1, 0.0), 0), Err(OverlapError::OracleDimension { .. })));
        assert!(matches!(
            displacement_matrix_oracle(Complex64::new(0.1, 0.0), 2001),
            Err(OverlapError::OracleDimension { .. })
        ));
        // |α|² at the limit leaks out of the leading block
        assert!(matches!(
            displacement_matrix_oracle(Complex64::new(5.0, 0.0), 100),
            Err(OverlapError::Truncation { .. })
        ));
    }
}
