//! Spontaneous transition rates in units of the free-space rate `Γ₀`.
//!
//! A jump `(i, n) -> (j, n')` between ladders has rate
//! `|<n'|n>|² (s_i + (n - n') ω_L/ω₀)³`; the cube is the emitted photon
//! frequency in units of `ω₀`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ladder::{
    allowed_final_indices, final_state, photon_frequency, Branch, DressedState, LadderError, TransitionRecord,
};
use crate::numerics::{bessel_j, bessel_j_orders, ln_factorial};
use crate::overlaps::{overlap_exact, ModelParams};

/// Target for the neglected tail of the semiclassical Bessel sums.
pub const SEMICLASSICAL_TAIL: f64 = 1e-12;

/// Tolerance on the total weight of a [`PhotonDistribution`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON0: f64 = 8.854_187_812_8e-12;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// One debye in C·m.
pub const DEBYE: f64 = 1e-21 / SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("final index {n_prime} is not reachable from {from}")]
    Disallowed { from: DressedState, n_prime: u64 },
    #[error(transparent)]
    Ladder(#[from] LadderError),
    #[error("semiclassical channel p = {p} needs [n_bar] >= 10|p| and p >= {min_p}, got [n_bar] = {n_round}")]
    SemiclassicalDomain { p: i64, n_round: u64, min_p: f64 },
    #[error("mean photon number must be finite and round to at least {min}, got {n_bar}")]
    PhotonNumber { n_bar: f64, min: u64 },
    #[error("photon distribution: {0}")]
    Distribution(String),
    #[error("{name} must be {requirement}, got {value}")]
    Invalid { name: &'static str, requirement: &'static str, value: f64 },
}

/// All allowed jumps out of one dressed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub initial: DressedState,
    pub transitions: Vec<TransitionRecord>,
    pub total_over_gamma0: f64,
}

impl RateTable {
    pub fn is_dark(&self) -> bool {
        self.total_over_gamma0 == 0.0
    }
}

/// `Γ_{i n n'} / Γ₀`.
pub fn partial_rate(from: DressedState, n_prime: u64, params: &ModelParams) -> Result<f64, RateError> {
    if !allowed_final_indices(from, params).contains(&n_prime) {
        return Err(RateError::Disallowed { from, n_prime });
    }
    Ok(transition(from, n_prime, params)?.rate_over_gamma0)
}

fn transition(from: DressedState, n_prime: u64, params: &ModelParams) -> Result<TransitionRecord, LadderError> {
    let freq = photon_frequency(from, n_prime, params)?;
    let to = final_state(from, n_prime);
    let overlap = overlap_exact(n_prime, from.n, params, to.branch.displacement(), from.branch.displacement());
    Ok(TransitionRecord { from, to, rate_over_gamma0: overlap.modulus_sq() * freq.powi(3), photon_freq: freq })
}

/// Every allowed jump out of `from` and their sum `Γ_{i,n} / Γ₀`.
pub fn total_rate(from: DressedState, params: &ModelParams) -> RateTable {
    let transitions: Vec<TransitionRecord> = allowed_final_indices(from, params)
        .map(|n_prime| transition(from, n_prime, params).expect("allowed indices emit at non-negative frequency"))
        .collect();
    let total_over_gamma0 = transitions.iter().map(|t| t.rate_over_gamma0).sum();
    RateTable { initial: from, transitions, total_over_gamma0 }
}

/// `Γ_{e,0} / Γ₀ = e^{-β²} Σ_{n'=0}^{⌊ω₀/ω_L⌋} β^{2n'}/n'! (1 - n' ω_L/ω₀)³`.
pub fn suppression_rate_e0(params: &ModelParams) -> f64 {
    let beta_sq = params.beta().powi(2);
    if beta_sq == 0.0 {
        return 1.0;
    }
    let from = DressedState::excited(0);
    allowed_final_indices(from, params)
        .map(|n_prime| {
            let freq = photon_frequency(from, n_prime, params).expect("allowed indices emit at non-negative frequency");
            // e^{-β²} β^{2n'} / n'! formed in logs so large β does not underflow the prefactor
            let ln_poisson = -beta_sq + n_prime as f64 * beta_sq.ln() - ln_factorial(n_prime);
            ln_poisson.exp() * freq.powi(3)
        })
        .sum()
}

/// `Γ_{g10} / Γ₀ = e^{-β²} β² (ω_L/ω₀ - 1)³` above resonance, zero otherwise.
pub fn absorption_rate_g1(params: &ModelParams) -> f64 {
    let w = params.laser_ratio();
    if w <= 1.0 {
        return 0.0;
    }
    let beta_sq = params.beta().powi(2);
    (-beta_sq).exp() * beta_sq * (w - 1.0).powi(3)
}

/// Normalized weights `|c_n|²` over ladder indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    weights: BTreeMap<u64, f64>,
}

impl PhotonDistribution {
    pub fn delta(n: u64) -> Self {
        PhotonDistribution { weights: BTreeMap::from([(n, 1.0)]) }
    }

    /// Weights must be non-negative and finite and sum to one within
    /// [`NORMALIZATION_TOLERANCE`].
    pub fn from_weights(weights: impl IntoIterator<Item = (u64, f64)>) -> Result<Self, RateError> {
        let mut map = BTreeMap::new();
        for (n, w) in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(RateError::Distribution(format!("weight {w} at n = {n}")));
            }
            *map.entry(n).or_insert(0.0) += w;
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(RateError::Distribution(format!("weights sum to {total}")));
        }
        Ok(PhotonDistribution { weights: map })
    }

    /// Poisson weights `e^{-n̄} n̄^n / n!` of a coherent state, cut where they
    /// drop below `1e-17` of the mode and renormalized.
    pub fn poisson(mean: f64) -> Result<Self, RateError> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(RateError::Invalid { name: "mean", requirement: "finite and >= 0", value: mean });
        }
        if mean == 0.0 {
            return Ok(Self::delta(0));
        }
        let ln_pmf = |n: u64| -mean + n as f64 * mean.ln() - ln_factorial(n);
        let mode = mean.floor() as u64;
        let cutoff = ln_pmf(mode) - 17.0 * std::f64::consts::LN_10;
        let mut lo = mode;
        while lo > 0 && ln_pmf(lo - 1) >= cutoff {
            lo -= 1;
        }
        let mut hi = mode;
        while ln_pmf(hi + 1) >= cutoff {
            hi += 1;
        }
        let raw: Vec<(u64, f64)> = (lo..=hi).map(|n| (n, ln_pmf(n).exp())).collect();
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        Ok(PhotonDistribution { weights: raw.into_iter().map(|(n, w)| (n, w / total)).collect() })
    }

    pub fn weights(&self) -> &BTreeMap<u64, f64> {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }
}

/// `Σ_n |c_n|² Γ_{i,n} / Γ₀`.
pub fn weighted_total_rate(branch: Branch, dist: &PhotonDistribution, params: &ModelParams) -> f64 {
    dist.weights
        .iter()
        .map(|(&n, &w)| w * total_rate(DressedState::new(branch, n), params).total_over_gamma0)
        .sum()
}

/// `[n̄]`: nearest integer, ties to even.
pub fn round_photon_number(n_bar: f64) -> Result<u64, RateError> {
    if !n_bar.is_finite() || n_bar < 0.0 {
        return Err(RateError::PhotonNumber { n_bar, min: 0 });
    }
    Ok(n_bar.round_ties_even() as u64)
}

/// Channel `p` of the large-`n̄` rate: `J_p(x)² (s_i + p ω_L/ω₀)³` with
/// `x = |Ω_a| √[n̄] / ω_L`.
pub fn semiclassical_partial(branch: Branch, n_bar: f64, p: i64, params: &ModelParams) -> Result<f64, RateError> {
    let n_round = round_photon_number(n_bar)?;
    let min_p = -branch.sign() / params.laser_ratio();
    let freq = branch.sign() + p as f64 * params.laser_ratio();
    let at_boundary = freq.abs() <= 4.0 * f64::EPSILON * (1.0 + (p as f64 * params.laser_ratio()).abs());
    if n_round < 10 * p.unsigned_abs() || (freq < 0.0 && !at_boundary) {
        return Err(RateError::SemiclassicalDomain { p, n_round, min_p });
    }
    if at_boundary {
        return Ok(0.0);
    }
    let x = params.bessel_argument(n_round as f64);
    Ok(bessel_j(p, x).powi(2) * freq.powi(3))
}

/// Large-`n̄` totals in units of `Γ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalTotals {
    pub gamma_e: f64,
    pub gamma_g: f64,
    /// Highest Bessel order included in `gamma_g`.
    pub max_order: u64,
}

/// `gamma_g = Σ_{p >= ω₀/ω_L} J_p(x)² (p ω_L/ω₀ - 1)³` and
/// `gamma_e = 1 + (3|Ω_a|²/2ω₀²) [n̄] + gamma_g`.
///
/// The sum stops once past `p = x` the terms shrink geometrically and the
/// bound on the rest drops below [`SEMICLASSICAL_TAIL`].
pub fn semiclassical_totals(n_bar: f64, params: &ModelParams) -> Result<SemiclassicalTotals, RateError> {
    let n_round = round_photon_number(n_bar)?;
    if n_round < 1 {
        return Err(RateError::PhotonNumber { n_bar, min: 1 });
    }
    let x = params.bessel_argument(n_round as f64);
    let w = params.laser_ratio();
    let coupling = 1.5 * params.coupling_ratio().powi(2) * n_round as f64;
    let (gamma_g, max_order) = ground_channel_sum(x, w);
    Ok(SemiclassicalTotals { gamma_e: 1.0 + coupling + gamma_g, gamma_g, max_order })
}

fn ground_channel_sum(x: f64, w: f64) -> (f64, u64) {
    let p_min = (1.0 / w).ceil().max(1.0) as u64;
    let mut top = (x.max(p_min as f64) + 40.0 * x.cbrt() + 60.0).ceil() as u64;
    loop {
        let j = bessel_j_orders(top, x);
        let term = |p: u64| j[p as usize].powi(2) * (p as f64 * w - 1.0).max(0.0).powi(3);
        let sum: f64 = (p_min..=top).map(term).sum();
        let (last, before) = (term(top), term(top - 1));
        if last == 0.0 {
            return (sum, top);
        }
        let q = last / before;
        if top as f64 > x && q < 0.5 && last * q / (1.0 - q) < SEMICLASSICAL_TAIL {
            return (sum, top);
        }
        top *= 2;
    }
}

/// Dipole and transition frequency for the SI value of `Γ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma0Params {
    omega0: f64,
    dipole: f64,
}

impl Gamma0Params {
    /// `omega0` in rad/s, `dipole` in C·m.
    pub fn new(omega0: f64, dipole: f64) -> Result<Self, RateError> {
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(RateError::Invalid { name: "omega0", requirement: "> 0", value: omega0 });
        }
        if !(dipole >= 0.0) || !dipole.is_finite() {
            return Err(RateError::Invalid { name: "dipole", requirement: ">= 0", value: dipole });
        }
        Ok(Gamma0Params { omega0, dipole })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn dipole(&self) -> f64 {
        self.dipole
    }
}

/// `Γ₀ = ω₀³ d² / (3 π ε₀ ħ c³)` in s⁻¹.
pub fn gamma0_si(p: &Gamma0Params) -> f64 {
    p.omega0.powi(3) * p.dipole.powi(2) / (3.0 * std::f64::consts::PI * EPSILON0 * HBAR * SPEED_OF_LIGHT.powi(3))
}
