//! Grid evaluation. Points run in parallel, rows come back in grid order.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use polar_tls::ladder::photon_frequency;
use polar_tls::overlaps::{overlap_bessel, overlap_direct, overlap_exact, overlap_log};
use polar_tls::rates::{absorption_rate_g1, partial_rate, semiclassical_totals, suppression_rate_e0, RateError};
use polar_tls::{Branch, Displacement, DressedState, ModelParams};
use rayon::prelude::*;

use crate::config::{MapQuantity, Plan, SweepConfig};
use crate::run::with_threads;
use crate::table::Table;
use crate::CliError;

pub const MAP_COLUMNS: [&str; 3] = ["omega_L_over_omega0", "Omega_a_over_omega0", "value"];
pub const OVERLAP_COLUMNS: [&str; 4] = ["sqrt_n", "p", "exact_sq", "bessel_sq"];
pub const SEMICLASSICAL_COLUMNS: [&str; 4] = ["omega_L_over_omega0", "n_bar", "gamma_e", "gamma_g"];
pub const LOG_VS_DIRECT_COLUMNS: [&str; 4] = ["n", "p", "direct", "log"];

fn params(omega_a: f64, omega_l: f64, phi: f64) -> Result<ModelParams, CliError> {
    ModelParams::new(1.0, omega_l, omega_a, phi).map_err(CliError::compute)
}

/// Evaluate a validated plan.
pub fn evaluate(plan: &Plan, quantity: &str) -> Result<Table, CliError> {
    let mut table;
    match plan {
        Plan::Map { map, omega_a, omega_l, phi } => {
            table = Table::new(quantity, &MAP_COLUMNS);
            let (a_vals, l_vals) = (omega_a.values(), omega_l.values());
            let points: Vec<(f64, f64)> = l_vals.iter().flat_map(|&l| a_vals.iter().map(move |&a| (l, a))).collect();
            table.rows = points
                .par_iter()
                .map(|&(l, a)| {
                    let p = params(a, l, *phi)?;
                    let v = match map {
                        MapQuantity::SuppressionE0 => suppression_rate_e0(&p),
                        MapQuantity::AbsorptionG1 => absorption_rate_g1(&p),
                        MapQuantity::PartialE0n(n_prime) => match partial_rate(DressedState::excited(0), *n_prime, &p) {
                            Ok(v) => v,
                            Err(RateError::Disallowed { .. }) => 0.0,
                            Err(e) => return Err(CliError::compute(e)),
                        },
                    };
                    Ok(vec![Some(l), Some(a), Some(v)])
                })
                .collect::<Result<_, CliError>>()?;
        }
        Plan::OverlapCompare { sqrt_n, ps, omega_a, omega_l, phi } => {
            table = Table::new(quantity, &OVERLAP_COLUMNS);
            let p = params(*omega_a, *omega_l, *phi)?;
            let points: Vec<(f64, i64)> =
                sqrt_n.values().into_iter().flat_map(|s| ps.iter().map(move |&order| (s, order))).collect();
            table.rows = points
                .par_iter()
                .map(|&(s, order)| {
                    let n = (s * s).round() as u64;
                    let m = n.checked_add_signed(-order).ok_or_else(|| CliError::compute(format!("n - p < 0 at n = {n}")))?;
                    let exact = overlap_exact(n, m, &p, Displacement::Plus, Displacement::Minus).modulus_sq();
                    let bessel = overlap_bessel(n, order, &p, Displacement::Plus).map_err(CliError::compute)?.modulus_sq();
                    Ok(vec![Some(s), Some(order as f64), Some(exact), Some(bessel)])
                })
                .collect::<Result<_, CliError>>()?;
        }
        Plan::Semiclassical { omega_l, n_bar, omega_a, phi } => {
            table = Table::new(quantity, &SEMICLASSICAL_COLUMNS);
            let nb = n_bar.values();
            let points: Vec<(f64, f64)> = omega_l.values().into_iter().flat_map(|l| nb.iter().map(move |&x| (l, x))).collect();
            table.rows = points
                .par_iter()
                .map(|&(l, x)| {
                    let t = semiclassical_totals(x, &params(*omega_a, l, *phi)?).map_err(CliError::compute)?;
                    Ok(vec![Some(l), Some(x), Some(t.gamma_e), Some(t.gamma_g)])
                })
                .collect::<Result<_, CliError>>()?;
        }
        Plan::LogVsDirect { n, ps, omega_a, omega_l, phi } => {
            table = Table::new(quantity, &LOG_VS_DIRECT_COLUMNS);
            let p = params(*omega_a, *omega_l, *phi)?;
            let mut ns: Vec<u64> = n.values().into_iter().map(|x| x.round() as u64).collect();
            ns.dedup();
            let points: Vec<(u64, i64)> = ns.into_iter().flat_map(|k| ps.iter().map(move |&o| (k, o))).collect();
            table.rows = points.par_iter().map(|&(k, order)| log_vs_direct_row(k, order, &p)).collect();
        }
    }
    Ok(table)
}

/// Rate of `(e,n) → (g,n+p)` from the plain and the log-space sum.
/// Both are blank for a forbidden channel, `direct` also where the plain
/// sum gives up.
fn log_vs_direct_row(n: u64, order: i64, p: &ModelParams) -> Vec<Option<f64>> {
    let from = DressedState::excited(n);
    let (bra, ket) = (Branch::Ground.displacement(), Branch::Excited.displacement());
    let rates = n.checked_add_signed(order).and_then(|m| {
        let freq = photon_frequency(from, m, p).ok()?;
        let cube = freq.powi(3);
        let direct = overlap_direct(m, n, p, bra, ket).map(|v| v.modulus_sq() * cube);
        let log = overlap_log(m, n, p, bra, ket).modulus_sq() * cube;
        Some((direct, log))
    });
    let (direct, log) = match rates {
        Some((d, l)) => (d, Some(l)),
        None => (None, None),
    };
    vec![Some(n as f64), Some(order as f64), direct, log]
}

/// Validate, evaluate on `config.threads` workers (all cores by default) and
/// write to `config.output` or standard output.
pub fn run_sweep(config: &SweepConfig) -> Result<Table, CliError> {
    let plan = config.plan()?;
    let quantity = config.quantity.name();
    let table = with_threads(config.threads, || evaluate(&plan, quantity))??;
    match &config.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            table.write(config.format, BufWriter::new(file)).map_err(|e| CliError::io(path, e))?;
        }
        None => {
            let stdout = io::stdout().lock();
            let mut out = BufWriter::new(stdout);
            table.write(config.format, &mut out).and_then(|_| out.flush()).map_err(|e| CliError::io("<stdout>", e))?;
        }
    }
    Ok(table)
}
