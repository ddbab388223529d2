//! Sweep configuration: the TOML file form, flag overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Quantity {
    /// Total decay rate of (e,0) over an Ω_a × ω_L grid.
    SuppressionE0,
    /// Spontaneous absorption rate of (g,1) over an Ω_a × ω_L grid.
    AbsorptionG1,
    /// One channel (e,0) → (g,n') over an Ω_a × ω_L grid.
    PartialE0n,
    /// Exact vs large-n Bessel overlaps along a √n axis.
    OverlapCompare,
    /// Large-n̄ totals over an ω_L × n̄ grid.
    SemiclassicalTotals,
    /// Partial rates from (e,n) by the plain and the log-space sum.
    LogVsDirect,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::SuppressionE0 => "suppression_e0",
            Quantity::AbsorptionG1 => "absorption_g1",
            Quantity::PartialE0n => "partial_e0n",
            Quantity::OverlapCompare => "overlap_compare",
            Quantity::SemiclassicalTotals => "semiclassical_totals",
            Quantity::LogVsDirect => "log_vs_direct",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn linear(start: f64, stop: f64, steps: usize) -> Self {
        Axis { start, stop, steps, scale: Scale::Linear }
    }

    pub fn log(start: f64, stop: f64, steps: usize) -> Self {
        Axis { start, stop, steps, scale: Scale::Log }
    }

    pub fn validate(&self, name: &str) -> Result<(), CliError> {
        if self.steps < 2 {
            return Err(CliError::usage(format!("axis {name}: steps must be at least 2, got {}", self.steps)));
        }
        if !self.start.is_finite() || !self.stop.is_finite() || self.start >= self.stop {
            return Err(CliError::usage(format!(
                "axis {name}: need finite start < stop, got {}..{}",
                self.start, self.stop
            )));
        }
        if self.scale == Scale::Log && self.start <= 0.0 {
            return Err(CliError::usage(format!("axis {name}: a log axis needs start > 0, got {}", self.start)));
        }
        Ok(())
    }

    /// Grid points, endpoints exact.
    pub fn values(&self) -> Vec<f64> {
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == last {
                    return self.stop;
                }
                let t = i as f64 / last as f64;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * t,
                    Scale::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

impl FromStr for Axis {
    type Err = String;

    /// `start:stop:steps` with an optional `:lin` or `:log` suffix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected start:stop:steps[:lin|log], got {s:?}"));
        }
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let steps = parts[2].trim().parse::<usize>().map_err(|e| format!("{:?}: {e}", parts[2]))?;
        let scale = match parts.get(3).map(|x| x.trim()) {
            None | Some("lin") | Some("linear") => Scale::Linear,
            Some("log") => Scale::Log,
            Some(other) => return Err(format!("unknown scale {other:?}")),
        };
        Ok(Axis { start: num(parts[0])?, stop: num(parts[1])?, steps, scale })
    }
}

/// A flag that pins a parameter (`0.5`) or sweeps it (`0:4:101`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisOrValue {
    Value(f64),
    Axis(Axis),
}

impl FromStr for AxisOrValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains(':') {
            s.parse().map(AxisOrValue::Axis)
        } else {
            s.trim().parse::<f64>().map(AxisOrValue::Value).map_err(|e| format!("{s:?}: {e}"))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// Ω_a/ω₀.
    pub omega_a: Option<Axis>,
    /// ω_L/ω₀.
    pub omega_l: Option<Axis>,
    pub sqrt_n: Option<Axis>,
    pub n_bar: Option<Axis>,
    /// Photon number, rounded to the nearest integer.
    pub n: Option<Axis>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixed {
    pub omega_a: Option<f64>,
    pub omega_l: Option<f64>,
    pub phi: Option<f64>,
    pub n_prime: Option<u64>,
    pub p: Option<Vec<i64>>,
}

/// Everything a sweep needs. Read from a TOML file, then patched by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub quantity: Quantity,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub fixed: Fixed,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn new(quantity: Quantity) -> Self {
        SweepConfig {
            quantity,
            grid: Grid::default(),
            fixed: Fixed::default(),
            output: None,
            format: Format::Csv,
            threads: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn set_omega_a(&mut self, v: AxisOrValue) {
        match v {
            AxisOrValue::Value(x) => {
                self.fixed.omega_a = Some(x);
                self.grid.omega_a = None;
            }
            AxisOrValue::Axis(a) => {
                self.grid.omega_a = Some(a);
                self.fixed.omega_a = None;
            }
        }
    }

    pub fn set_omega_l(&mut self, v: AxisOrValue) {
        match v {
            AxisOrValue::Value(x) => {
                self.fixed.omega_l = Some(x);
                self.grid.omega_l = None;
            }
            AxisOrValue::Axis(a) => {
                self.grid.omega_l = Some(a);
                self.fixed.omega_l = None;
            }
        }
    }

    /// Fill defaults and reject combinations that make no sense for the
    /// quantity. Nothing is evaluated here.
    pub fn plan(&self) -> Result<Plan, CliError> {
        let q = self.quantity;
        let g = &self.grid;
        let f = &self.fixed;
        let reject = |what: &str| Err(CliError::usage(format!("{what} does not apply to {q}")));
        let phi = f.phi.unwrap_or(0.0);
        if !phi.is_finite() {
            return Err(CliError::usage(format!("phi must be finite, got {phi}")));
        }
        let plan = match q {
            Quantity::SuppressionE0 | Quantity::AbsorptionG1 | Quantity::PartialE0n => {
                if g.sqrt_n.is_some() || g.n_bar.is_some() || g.n.is_some() {
                    return reject("only omega_a and omega_l axes exist here; another axis");
                }
                if f.p.is_some() {
                    return reject("fixed p");
                }
                if f.n_prime.is_some() && q != Quantity::PartialE0n {
                    return reject("fixed n_prime");
                }
                if f.omega_a.is_some() || f.omega_l.is_some() {
                    return reject("a pinned omega_a or omega_l (both are swept)");
                }
                let (a_default, l_default) = match q {
                    Quantity::AbsorptionG1 => (Axis::linear(0.0, 12.0, 121), Axis::linear(1.0, 3.0, 101)),
                    _ => (Axis::linear(0.0, 4.0, 101), Axis::log(0.05, 2.0, 101)),
                };
                let omega_a = g.omega_a.unwrap_or(a_default);
                let omega_l = g.omega_l.unwrap_or(l_default);
                omega_a.validate("omega_a")?;
                omega_l.validate("omega_l")?;
                check_drive(omega_a.start, omega_l.start)?;
                let map = match q {
                    Quantity::SuppressionE0 => MapQuantity::SuppressionE0,
                    Quantity::AbsorptionG1 => MapQuantity::AbsorptionG1,
                    _ => MapQuantity::PartialE0n(f.n_prime.unwrap_or(0)),
                };
                Plan::Map { map, omega_a, omega_l, phi }
            }
            Quantity::OverlapCompare => {
                if g.omega_a.is_some() || g.omega_l.is_some() || g.n_bar.is_some() || g.n.is_some() {
                    return reject("only the sqrt_n axis exists here; another axis");
                }
                if f.n_prime.is_some() {
                    return reject("fixed n_prime");
                }
                let sqrt_n = g.sqrt_n.unwrap_or(Axis::linear(100.0, 1000.0, 20));
                sqrt_n.validate("sqrt_n")?;
                let ps = f.p.clone().unwrap_or_else(|| vec![0, 1, 2, 3]);
                let (omega_a, omega_l) = (f.omega_a.unwrap_or(0.001), f.omega_l.unwrap_or(0.9));
                check_drive(omega_a, omega_l)?;
                check_orders(&ps)?;
                let n_min = (sqrt_n.start * sqrt_n.start).round();
                let p_max = ps.iter().map(|p| p.unsigned_abs()).max().unwrap_or(0);
                if n_min < 1.0 || n_min < 10.0 * p_max as f64 {
                    return Err(CliError::usage(format!(
                        "overlap_compare needs n >= max(1, 10|p|) = {}; sqrt_n starts at {}",
                        (10 * p_max).max(1),
                        sqrt_n.start
                    )));
                }
                Plan::OverlapCompare { sqrt_n, ps, omega_a, omega_l, phi }
            }
            Quantity::SemiclassicalTotals => {
                if g.omega_a.is_some() || g.sqrt_n.is_some() || g.n.is_some() {
                    return reject("only omega_l and n_bar axes exist here; another axis");
                }
                if f.p.is_some() || f.n_prime.is_some() || f.omega_l.is_some() {
                    return reject("fixed p, n_prime or omega_l");
                }
                let omega_l = g.omega_l.unwrap_or(Axis::log(0.05, 2.0, 101));
                let n_bar = g.n_bar.unwrap_or(Axis::log(1e4, 1e8, 41));
                let omega_a = f.omega_a.unwrap_or(0.001);
                omega_l.validate("omega_l")?;
                n_bar.validate("n_bar")?;
                check_drive(omega_a, omega_l.start)?;
                if n_bar.start < 1.0 {
                    return Err(CliError::usage(format!("n_bar axis must start at 1 or above, got {}", n_bar.start)));
                }
                Plan::Semiclassical { omega_l, n_bar, omega_a, phi }
            }
            Quantity::LogVsDirect => {
                if g.omega_a.is_some() || g.omega_l.is_some() || g.sqrt_n.is_some() || g.n_bar.is_some() {
                    return reject("only the n axis exists here; another axis");
                }
                if f.n_prime.is_some() {
                    return reject("fixed n_prime");
                }
                let n = g.n.unwrap_or(Axis::linear(0.0, 300.0, 301));
                n.validate("n")?;
                if n.start < 0.0 {
                    return Err(CliError::usage(format!("n axis must start at 0 or above, got {}", n.start)));
                }
                let ps = f.p.clone().unwrap_or_else(|| vec![-2, -1, 0, 1]);
                let (omega_a, omega_l) = (f.omega_a.unwrap_or(0.1), f.omega_l.unwrap_or(1.0));
                check_drive(omega_a, omega_l)?;
                check_orders(&ps)?;
                Plan::LogVsDirect { n, ps, omega_a, omega_l, phi }
            }
        };
        Ok(plan)
    }
}

fn check_drive(omega_a: f64, omega_l: f64) -> Result<(), CliError> {
    if !(omega_a >= 0.0) || !omega_a.is_finite() {
        return Err(CliError::usage(format!("omega_a must be finite and >= 0, got {omega_a}")));
    }
    if !(omega_l > 0.0) || !omega_l.is_finite() {
        return Err(CliError::usage(format!("omega_l must be finite and > 0, got {omega_l}")));
    }
    Ok(())
}

fn check_orders(ps: &[i64]) -> Result<(), CliError> {
    if ps.is_empty() {
        return Err(CliError::usage("p list is empty"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapQuantity {
    SuppressionE0,
    AbsorptionG1,
    PartialE0n(u64),
}

/// A validated sweep with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Map { map: MapQuantity, omega_a: Axis, omega_l: Axis, phi: f64 },
    OverlapCompare { sqrt_n: Axis, ps: Vec<i64>, omega_a: f64, omega_l: f64, phi: f64 },
    Semiclassical { omega_l: Axis, n_bar: Axis, omega_a: f64, phi: f64 },
    LogVsDirect { n: Axis, ps: Vec<i64>, omega_a: f64, omega_l: f64, phi: f64 },
}
