//! Single-point queries and cascade runs. Each returns a report that renders
//! as annotated text or serializes to JSON.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use polar_tls::cascade::{emission_spectrum, sample_ensemble, write_trajectory_log, Trajectory};
use polar_tls::overlaps::{overlap_direct, overlap_exact, overlap_laguerre, overlap_log};
use polar_tls::rates::{gamma0_si, partial_rate, round_photon_number, semiclassical_totals, total_rate, Gamma0Params};
use polar_tls::{Displacement, DressedState, ModelParams, OverlapValue};
use serde::Serialize;

use crate::table::format_float as g;
use crate::CliError;

/// Run `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::usage("threads must be at least 1")),
        Some(t) => Ok(rayon::ThreadPoolBuilder::new().num_threads(t).build().map_err(CliError::compute)?.install(f)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Channel {
    pub to: String,
    pub rate_over_gamma0: f64,
    pub photon_freq_over_omega0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub state: String,
    pub total_over_gamma0: f64,
    pub channels: Vec<Channel>,
}

impl fmt::Display for RateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total_rate {} = {} [Gamma0]", self.state, g(self.total_over_gamma0))?;
        if self.channels.is_empty() {
            return writeln!(f, "no allowed channels (dark state)");
        }
        writeln!(f, "to\trate [Gamma0]\tphoton_freq [omega0]")?;
        for c in &self.channels {
            writeln!(f, "{}\t{}\t{}", c.to, g(c.rate_over_gamma0), g(c.photon_freq_over_omega0))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialReport {
    pub from: String,
    pub to: String,
    pub rate_over_gamma0: f64,
}

impl fmt::Display for PartialReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "partial_rate {} -> {} = {} [Gamma0]", self.from, self.to, g(self.rate_over_gamma0))
    }
}

pub fn rate_query(state: DressedState, params: &ModelParams) -> RateReport {
    let table = total_rate(state, params);
    RateReport {
        state: state.to_string(),
        total_over_gamma0: table.total_over_gamma0,
        channels: table
            .transitions
            .iter()
            .map(|t| Channel {
                to: t.to.to_string(),
                rate_over_gamma0: t.rate_over_gamma0,
                photon_freq_over_omega0: t.photon_freq / params.omega0(),
            })
            .collect(),
    }
}

pub fn partial_query(state: DressedState, n_prime: u64, params: &ModelParams) -> Result<PartialReport, CliError> {
    let rate = partial_rate(state, n_prime, params).map_err(CliError::compute)?;
    let to = DressedState::new(state.branch.other(), n_prime);
    Ok(PartialReport { from: state.to_string(), to: to.to_string(), rate_over_gamma0: rate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMethod {
    Exact,
    Direct,
    Log,
    Laguerre,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapReport {
    pub ell: u64,
    pub n: u64,
    pub bra: &'static str,
    pub ket: &'static str,
    pub method: OverlapMethod,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub log_abs: f64,
    pub phase: f64,
    pub lost_digits: f64,
}

impl fmt::Display for OverlapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}<{}|{}>{} = {} + {}i [dimensionless]", self.bra, self.ell, self.n, self.ket, g(self.re), g(self.im))?;
        writeln!(f, "abs = {}", g(self.abs))?;
        writeln!(f, "ln abs = {}", self.log_abs)?;
        writeln!(f, "phase = {} [rad]", self.phase)?;
        writeln!(f, "lost_digits = {}", self.lost_digits)
    }
}

fn sign(d: Displacement) -> &'static str {
    match d {
        Displacement::Plus => "+",
        Displacement::Minus => "-",
    }
}

pub fn overlap_query(
    ell: u64,
    n: u64,
    params: &ModelParams,
    bra: Displacement,
    ket: Displacement,
    method: OverlapMethod,
) -> Result<OverlapReport, CliError> {
    let v: OverlapValue = match method {
        OverlapMethod::Exact => overlap_exact(ell, n, params, bra, ket),
        OverlapMethod::Log => overlap_log(ell, n, params, bra, ket),
        OverlapMethod::Laguerre => overlap_laguerre(ell, n, params, bra, ket),
        OverlapMethod::Direct => overlap_direct(ell, n, params, bra, ket)
            .ok_or_else(|| CliError::compute("the plain float sum cannot represent this overlap; try --method exact"))?,
    };
    let z = v.to_complex();
    Ok(OverlapReport {
        ell,
        n,
        bra: sign(bra),
        ket: sign(ket),
        method,
        re: z.re,
        im: z.im,
        abs: v.modulus(),
        log_abs: v.log_abs,
        phase: v.phase,
        lost_digits: v.lost_digits,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SemiclassicalReport {
    pub n_bar: f64,
    pub n_rounded: u64,
    pub gamma_e: f64,
    pub gamma_g: f64,
    pub max_order: u64,
}

impl fmt::Display for SemiclassicalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gamma_e = {} [Gamma0]", g(self.gamma_e))?;
        writeln!(f, "gamma_g = {} [Gamma0]", g(self.gamma_g))?;
        writeln!(f, "[n_bar] = {}, orders summed up to {}", self.n_rounded, self.max_order)
    }
}

pub fn semiclassical_query(n_bar: f64, params: &ModelParams) -> Result<SemiclassicalReport, CliError> {
    let t = semiclassical_totals(n_bar, params).map_err(CliError::compute)?;
    let n_rounded = round_photon_number(n_bar).map_err(CliError::compute)?;
    Ok(SemiclassicalReport { n_bar, n_rounded, gamma_e: t.gamma_e, gamma_g: t.gamma_g, max_order: t.max_order })
}

#[derive(Debug, Clone, Serialize)]
pub struct Gamma0Report {
    pub omega0_rad_per_s: f64,
    pub dipole_c_m: f64,
    pub gamma0_per_s: f64,
}

impl fmt::Display for Gamma0Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gamma0 = {} [1/s]", g(self.gamma0_per_s))
    }
}

pub fn gamma0_query(omega0: f64, dipole: f64) -> Result<Gamma0Report, CliError> {
    let p = Gamma0Params::new(omega0, dipole).map_err(|e| CliError::usage(e.to_string()))?;
    Ok(Gamma0Report { omega0_rad_per_s: omega0, dipole_c_m: dipole, gamma0_per_s: gamma0_si(&p) })
}

#[derive(Debug, Clone, Serialize)]
pub struct Branching {
    pub to: String,
    pub observed: f64,
    pub expected: f64,
    /// Binomial standard error of `observed` given `expected`.
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Line {
    pub center: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeSummary {
    pub start: String,
    pub seed: u64,
    pub trajectories: u64,
    pub truncated: u64,
    pub photons: u64,
    pub mean_jumps: f64,
    /// In units of `1/Γ₀`.
    pub mean_total_time: f64,
    pub first_jump: Vec<Branching>,
    pub bin_width: f64,
    pub spectrum: Vec<Line>,
}

impl fmt::Display for CascadeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start {}, seed {}, {} trajectories ({} truncated)", self.start, self.seed, self.trajectories, self.truncated)?;
        writeln!(f, "mean jumps = {}", self.mean_jumps)?;
        writeln!(f, "mean total time = {} [1/Gamma0]", self.mean_total_time)?;
        if !self.first_jump.is_empty() {
            writeln!(f, "first jump\tobserved\texpected\tsigma")?;
            for b in &self.first_jump {
                writeln!(f, "{}\t{}\t{}\t{}", b.to, g(b.observed), g(b.expected), g(b.sigma))?;
            }
        }
        writeln!(f, "spectrum ({} photons, bin width {} [omega0])", self.photons, self.bin_width)?;
        for l in &self.spectrum {
            writeln!(f, "{}\t{}", g(l.center), g(l.fraction))?;
        }
        Ok(())
    }
}

pub struct CascadeRun<'a> {
    pub start: DressedState,
    pub params: ModelParams,
    pub seed: u64,
    pub trajectories: u64,
    pub max_jumps: usize,
    pub bin_width: f64,
    pub log: &'a Path,
    pub threads: Option<usize>,
}

/// Sample the ensemble, write its log and summarize it.
pub fn run_cascade(run: &CascadeRun<'_>) -> Result<CascadeSummary, CliError> {
    if run.trajectories == 0 {
        return Err(CliError::usage("need at least one trajectory"));
    }
    if !(run.bin_width > 0.0) || !run.bin_width.is_finite() {
        return Err(CliError::usage(format!("bin width must be positive, got {}", run.bin_width)));
    }
    if run.max_jumps == 0 {
        return Err(CliError::usage("max jumps must be at least 1"));
    }
    let runs = with_threads(run.threads, || {
        sample_ensemble(run.start, &run.params, run.seed, run.trajectories, run.max_jumps)
    })?
    .map_err(CliError::compute)?;
    let file = File::create(run.log).map_err(|e| CliError::io(run.log, e))?;
    let mut out = BufWriter::new(file);
    write_trajectory_log(&runs, &mut out).map_err(|e| CliError::Compute(format!("{}: {e}", run.log.display())))?;
    out.flush().map_err(|e| CliError::io(run.log, e))?;
    summarize(run, &runs)
}

fn summarize(run: &CascadeRun<'_>, runs: &[Trajectory]) -> Result<CascadeSummary, CliError> {
    let count = runs.len() as f64;
    let spectrum = emission_spectrum(runs, run.bin_width).map_err(CliError::compute)?;
    let table = total_rate(run.start, &run.params);
    let first_jump = table
        .transitions
        .iter()
        .map(|t| {
            let hits = runs.iter().filter(|r| r.jumps.first().is_some_and(|j| j.record.to == t.to)).count();
            let expected = t.rate_over_gamma0 / table.total_over_gamma0;
            Branching {
                to: t.to.to_string(),
                observed: hits as f64 / count,
                expected,
                sigma: (expected * (1.0 - expected) / count).sqrt(),
            }
        })
        .collect();
    Ok(CascadeSummary {
        start: run.start.to_string(),
        seed: run.seed,
        trajectories: runs.len() as u64,
        truncated: runs.iter().filter(|r| r.truncated).count() as u64,
        photons: spectrum.photons,
        mean_jumps: runs.iter().map(|r| r.jumps.len() as f64).sum::<f64>() / count,
        mean_total_time: runs.iter().map(|r| r.duration()).sum::<f64>() / count,
        first_jump,
        bin_width: spectrum.bin_width,
        spectrum: spectrum.bins.iter().map(|(&k, &fraction)| Line { center: spectrum.center(k), fraction }).collect(),
    })
}
