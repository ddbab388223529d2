//! Spontaneous emission and absorption rates of a polar two-level system
//! driven through its permanent dipole (longitudinal coupling).

pub mod cascade;
pub mod ladder;
pub mod numerics;
pub mod overlaps;
pub mod rates;

pub use ladder::{Branch, DressedState, TransitionRecord};
pub use overlaps::{Displacement, ModelParams, OverlapValue};
pub use rates::{PhotonDistribution, RateTable};
