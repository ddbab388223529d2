//! Monte-Carlo cascades over the two-ladder rate graph.
//!
//! Each trajectory draws from its own ChaCha8 stream: the generator is seeded
//! with the run seed and switched to stream number `trajectory_id`, so any
//! trajectory can be regenerated on its own and ensembles come out the same
//! however they are split across threads.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ladder::{Branch, DressedState, TransitionRecord};
use crate::overlaps::ModelParams;
use crate::rates::{total_rate, RateTable};

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("max_jumps must be at least 1")]
    NoJumps,
    #[error("bin width must be positive and finite, got {0}")]
    BinWidth(f64),
    #[error("trajectory log: {0}")]
    Log(#[from] csv::Error),
    #[error("trajectory log row {row}: {message}")]
    Malformed { row: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Absolute time of the jump in units of `1/Γ₀`.
    pub time: f64,
    pub record: TransitionRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub id: u64,
    pub start: DressedState,
    pub jumps: Vec<Jump>,
    /// Stopped at `max_jumps` in a state that could still decay.
    pub truncated: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> DressedState {
        self.jumps.last().map_or(self.start, |j| j.record.to)
    }

    pub fn duration(&self) -> f64 {
        self.jumps.last().map_or(0.0, |j| j.time)
    }
}

/// Rate table plus cumulative partial rates for inverse-CDF selection.
#[derive(Debug)]
struct Channels {
    table: RateTable,
    cumulative: Vec<f64>,
}

/// Draws trajectories for one parameter set, caching rate tables per state.
///
/// The cache is private to the sampler; parallel callers use one sampler per
/// worker.
#[derive(Debug)]
pub struct CascadeSampler {
    params: ModelParams,
    cache: HashMap<DressedState, Arc<Channels>>,
}

impl CascadeSampler {
    pub fn new(params: ModelParams) -> Self {
        CascadeSampler { params, cache: HashMap::new() }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn channels(&mut self, state: DressedState) -> Arc<Channels> {
        let params = self.params;
        self.cache
            .entry(state)
            .or_insert_with(|| {
                let table = total_rate(state, &params);
                let cumulative = table
                    .transitions
                    .iter()
                    .scan(0.0, |acc, t| {
                        *acc += t.rate_over_gamma0;
                        Some(*acc)
                    })
                    .collect();
                Arc::new(Channels { table, cumulative })
            })
            .clone()
    }

    /// The rate table of `state` as used by the sampler.
    pub fn rate_table(&mut self, state: DressedState) -> RateTable {
        self.channels(state).table.clone()
    }

    /// One trajectory from `start`. A state whose allowed jumps all have zero
    /// rate is terminal, like a state with no allowed jumps.
    pub fn sample(&mut self, start: DressedState, seed: u64, id: u64, max_jumps: usize) -> Result<Trajectory, CascadeError> {
        if max_jumps == 0 {
            return Err(CascadeError::NoJumps);
        }
        let mut rng = trajectory_rng(seed, id);
        let mut state = start;
        let mut time = 0.0;
        let mut jumps = Vec::new();
        loop {
            let channels = self.channels(state);
            let total = *channels.cumulative.last().unwrap_or(&0.0);
            if !(total > 0.0) {
                return Ok(Trajectory { seed, id, start, jumps, truncated: false });
            }
            if jumps.len() == max_jumps {
                return Ok(Trajectory { seed, id, start, jumps, truncated: true });
            }
            let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
            // a zero draw would repeat the previous time stamp
            time += wait.max(f64::MIN_POSITIVE);
            let target = rng.random::<f64>() * total;
            let pick = channels.cumulative.partition_point(|&c| c <= target);
            let pick = skip_zero_rates(&channels.table.transitions, pick.min(channels.cumulative.len() - 1));
            let record = channels.table.transitions[pick];
            jumps.push(Jump { time, record });
            state = record.to;
        }
    }
}

/// Rounding can land the inverse-CDF pick on a channel of zero rate at the
/// end of the table; step back to the last channel that can fire.
fn skip_zero_rates(transitions: &[TransitionRecord], mut pick: usize) -> usize {
    while transitions[pick].rate_over_gamma0 == 0.0 && pick > 0 {
        pick -= 1;
    }
    pick
}

/// The generator of trajectory `id` in a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn sample_trajectory(
    start: DressedState,
    params: &ModelParams,
    seed: u64,
    max_jumps: usize,
) -> Result<Trajectory, CascadeError> {
    CascadeSampler::new(*params).sample(start, seed, 0, max_jumps)
}

/// Trajectories `0..count` of one run, in id order.
pub fn sample_ensemble(
    start: DressedState,
    params: &ModelParams,
    seed: u64,
    count: u64,
    max_jumps: usize,
) -> Result<Vec<Trajectory>, CascadeError> {
    if max_jumps == 0 {
        return Err(CascadeError::NoJumps);
    }
    (0..count)
        .into_par_iter()
        .map_init(|| CascadeSampler::new(*params), |sampler, id| sampler.sample(start, seed, id, max_jumps))
        .collect()
}

/// Emitted photon frequencies binned at `k · bin_width`, `k = round(freq / bin_width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub bin_width: f64,
    pub photons: u64,
    /// Bin index `k` to fraction of all photons.
    pub bins: BTreeMap<i64, f64>,
}

impl Spectrum {
    pub fn center(&self, k: i64) -> f64 {
        k as f64 * self.bin_width
    }
}

pub fn emission_spectrum(trajectories: &[Trajectory], bin_width: f64) -> Result<Spectrum, CascadeError> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(CascadeError::BinWidth(bin_width));
    }
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    let mut photons = 0u64;
    for jump in trajectories.iter().flat_map(|t| &t.jumps) {
        *counts.entry((jump.record.photon_freq / bin_width).round() as i64).or_default() += 1;
        photons += 1;
    }
    let bins = counts.into_iter().map(|(k, c)| (k, c as f64 / photons as f64)).collect();
    Ok(Spectrum { bin_width, photons, bins })
}

/// One line of the trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub trajectory_id: u64,
    pub jump_index: usize,
    pub time: f64,
    pub from_branch: Branch,
    pub from_n: u64,
    pub to_branch: Branch,
    pub to_n: u64,
    pub photon_freq: f64,
}

/// Comma-separated log with a header row, one line per jump.
pub fn write_trajectory_log<W: Write>(trajectories: &[Trajectory], writer: W) -> Result<(), CascadeError> {
    let mut out = csv::Writer::from_writer(writer);
    for t in trajectories {
        for (i, jump) in t.jumps.iter().enumerate() {
            out.serialize(LogRow {
                trajectory_id: t.id,
                jump_index: i,
                time: jump.time,
                from_branch: jump.record.from.branch,
                from_n: jump.record.from.n,
                to_branch: jump.record.to.branch,
                to_n: jump.record.to.n,
                photon_freq: jump.record.photon_freq,
            })?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trajectory_log<R: Read>(reader: R) -> Result<Vec<LogRow>, CascadeError> {
    let mut rows = Vec::new();
    for (i, row) in csv::Reader::from_reader(reader).deserialize().enumerate() {
        let row: LogRow = row?;
        if row.from_branch == row.to_branch {
            return Err(CascadeError::Malformed { row: i, message: "jump within one ladder".into() });
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_emitter_jumps_once() {
        let p = ModelParams::from_ratios(0.0, 0.5).unwrap();
        let t = sample_trajectory(DressedState::excited(0), &p, 7, 10).unwrap();
        assert_eq!(t.jumps.len(), 1);
        assert_eq!(t.final_state(), DressedState::ground(0));
        assert_eq!(t.jumps[0].record.photon_freq, 1.0);
        assert!(!t.truncated);
    }

    #[test]
    fn dark_start() {
        let p = ModelParams::from_ratios(0.4, 0.5).unwrap();
        let t = sample_trajectory(DressedState::ground(0), &p, 1, 10).unwrap();
        assert!(t.jumps.is_empty() && !t.truncated);
    }

    #[test]
    fn truncation_flag() {
        let p = ModelParams::from_ratios(0.5, 0.5).unwrap();
        let t = sample_trajectory(DressedState::excited(40), &p, 3, 1).unwrap();
        assert_eq!(t.jumps.len(), 1);
        assert!(t.truncated);
        assert!(sample_trajectory(DressedState::excited(0), &p, 3, 0).is_err());
    }

    #[test]
    fn streams_differ() {
        let mut a = trajectory_rng(5, 0);
        let mut b = trajectory_rng(5, 1);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }
}
