//! The two dressed ladders: energies, which spontaneous jumps are allowed,
//! and the frequency of the photon each jump emits.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::overlaps::{Displacement, ModelParams};

/// Relative slack used when deciding whether `ω₀/ω_L` is an integer.
const INTEGER_RATIO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LadderError {
    #[error("transition {from} -> n' = {to_index} would emit at negative frequency {freq}")]
    NegativeFrequency { from: DressedState, to_index: u64, freq: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "e")]
    Excited,
    #[serde(rename = "g")]
    Ground,
}

impl Branch {
    /// `s_i`: +1 for the excited ladder, -1 for the ground ladder.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Excited => 1.0,
            Branch::Ground => -1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Branch::Excited => Branch::Ground,
            Branch::Ground => Branch::Excited,
        }
    }

    /// The displaced basis the ladder's field states live in.
    pub fn displacement(self) -> Displacement {
        match self {
            Branch::Excited => Displacement::Plus,
            Branch::Ground => Displacement::Minus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Excited => "e",
            Branch::Ground => "g",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e" | "excited" => Ok(Branch::Excited),
            "g" | "ground" => Ok(Branch::Ground),
            other => Err(format!("unknown branch '{other}', expected e or g")),
        }
    }
}

/// `|i> ⊗ |n>_±`: atomic branch plus index on that branch's photon ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DressedState {
    pub branch: Branch,
    pub n: u64,
}

impl DressedState {
    pub fn new(branch: Branch, n: u64) -> Self {
        DressedState { branch, n }
    }

    pub fn excited(n: u64) -> Self {
        Self::new(Branch::Excited, n)
    }

    pub fn ground(n: u64) -> Self {
        Self::new(Branch::Ground, n)
    }
}

impl fmt::Display for DressedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.branch, self.n)
    }
}

/// One spontaneous jump between ladders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub from: DressedState,
    pub to: DressedState,
    pub rate_over_gamma0: f64,
    /// Emitted photon frequency in units of `ω₀`.
    pub photon_freq: f64,
}

/// Energy zero of [`dressed_energy_in`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyFrame {
    /// The constant `-|Ω_a|²/16ω_L` is dropped.
    #[default]
    Transformed,
    /// The constant is kept, as in a level diagram of the driven system.
    Shifted,
}

/// `s_i ω₀/2 + n ω_L`, in the units of `params`.
pub fn dressed_energy(state: DressedState, params: &ModelParams) -> f64 {
    dressed_energy_in(state, params, EnergyFrame::Transformed)
}

pub fn dressed_energy_in(state: DressedState, params: &ModelParams, frame: EnergyFrame) -> f64 {
    let base = state.branch.sign() * params.omega0() / 2.0 + state.n as f64 * params.omega_l();
    match frame {
        EnergyFrame::Transformed => base,
        EnergyFrame::Shifted => base - params.omega_a_abs().powi(2) / (16.0 * params.omega_l()),
    }
}

/// `ω₀/ω_L`, snapped to the nearest integer when it is one up to rounding.
fn snapped_frequency_ratio(params: &ModelParams) -> (f64, bool) {
    let r = params.omega0() / params.omega_l();
    let nearest = r.round();
    if (r - nearest).abs() <= INTEGER_RATIO_TOLERANCE * nearest.max(1.0) {
        (nearest, true)
    } else {
        (r, false)
    }
}

/// Final indices `n'` on the other ladder with `n' <= n + s_i ω₀/ω_L`.
///
/// When `ω₀/ω_L` is an integer the boundary index is included; it emits at
/// zero frequency and so carries zero rate.
pub fn allowed_final_indices(state: DressedState, params: &ModelParams) -> Range<u64> {
    let (ratio, _) = snapped_frequency_ratio(params);
    let bound = state.n as f64 + state.branch.sign() * ratio;
    if bound < 0.0 {
        return 0..0;
    }
    0..bound.floor() as u64 + 1
}

/// `s_i + (n - n') ω_L/ω₀`: the emitted frequency in units of `ω₀`.
///
/// Rounding residue at the integer boundary is cleared to an exact zero.
pub fn photon_frequency(from: DressedState, to_index: u64, params: &ModelParams) -> Result<f64, LadderError> {
    let steps = from.n as f64 - to_index as f64;
    let freq = from.branch.sign() + steps * params.laser_ratio();
    let scale = 1.0 + (steps * params.laser_ratio()).abs();
    if freq.abs() <= 4.0 * f64::EPSILON * scale {
        return Ok(0.0);
    }
    if freq < 0.0 {
        return Err(LadderError::NegativeFrequency { from, to_index, freq });
    }
    Ok(freq)
}

/// The partner state a jump from `from` to index `to_index` lands in.
pub fn final_state(from: DressedState, to_index: u64) -> DressedState {
    DressedState::new(from.branch.other(), to_index)
}
