//! Parameter sweeps over the standard channel families: closed-form `D`,
//! finite-squeezing `D`, and the best code found by search, per grid point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{amplification, attenuation, isotropic_classical_noise, GaussianChannel};
use crate::entanglement::{entanglement_degradation, finite_r_degradation};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::search::{search, SearchConfig, SearchMethod};

/// Squeezing of the finite-`r` column.
pub const SWEEP_R: f64 = 8.0;
/// Upper limit on grid length, to catch typos like a zero-ish step.
pub const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Parameter: transmittance `eta` in (0, 1).
    Attenuation,
    /// Parameter: gain `eta` > 1.
    Amplification,
    /// Parameter: `det N` > 0, with `N = sqrt(det N) I`.
    ClassicalNoise,
}

impl Family {
    pub fn channel(self, parameter: f64) -> Result<GaussianChannel> {
        match self {
            Family::Attenuation => attenuation(parameter),
            Family::Amplification => amplification(parameter),
            Family::ClassicalNoise => {
                if !(parameter > 0.0 && parameter.is_finite()) {
                    return Err(Error::OutOfRange {
                        name: "classical noise det N",
                        value: parameter,
                        range: "(0, inf)".into(),
                    });
                }
                isotropic_classical_noise(parameter.sqrt())
            }
        }
    }

    pub fn parameter_name(self) -> &'static str {
        match self {
            Family::Attenuation | Family::Amplification => "eta",
            Family::ClassicalNoise => "det_N",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Attenuation => "attenuation",
            Family::Amplification => "amplification",
            Family::ClassicalNoise => "classical-noise",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attenuation" => Ok(Family::Attenuation),
            "amplification" => Ok(Family::Amplification),
            "classical-noise" => Ok(Family::ClassicalNoise),
            other => Err(Error::Parse(format!(
                "unknown family {other:?} (expected attenuation, amplification or classical-noise)"
            ))),
        }
    }
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or a
/// comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let bad = |msg: &str| Error::Parse(format!("grid {spec:?}: {msg}"));
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| bad(&format!("{s:?} is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad("values must be finite"))
        }
    };
    if spec.is_empty() {
        return Err(bad("empty"));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) {
                return Err(bad("step must be positive"));
            }
            if stop < start {
                return Err(bad("stop is below start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() + 1.0;
            if count > MAX_GRID_POINTS as f64 {
                return Err(bad("too many points"));
            }
            (0..count as usize)
                .map(|i| round12(start + i as f64 * step))
                .collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad("expected start:stop:step or a comma list")),
    };
    Ok(grid)
}

/// Removes accumulation noise such as `0.15000000000000002`.
fn round12(v: f64) -> f64 {
    let scaled = (v * 1e12).round() / 1e12;
    if (scaled - v).abs() <= 1e-12 * v.abs().max(1.0) {
        scaled
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub budget: usize,
    pub seed: u64,
    pub method: SearchMethod,
    pub r: f64,
    pub execution: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 2,
            budget: 200,
            seed: 0,
            method: SearchMethod::Random,
            r: SWEEP_R,
            execution: Execution::default(),
        }
    }
}

/// One grid point. Numeric fields are `None` when the point failed; the
/// reason is in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: Family,
    pub parameter: f64,
    pub d_closed: Option<f64>,
    pub d_finite_r: Option<f64>,
    pub d_best_search: Option<f64>,
    pub log_negativity: Option<f64>,
    pub violated: Option<bool>,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(family: Family, parameter: f64, e: Error) -> Self {
        SweepRow {
            family,
            parameter,
            d_closed: None,
            d_finite_r: None,
            d_best_search: None,
            log_negativity: None,
            violated: None,
            error: Some(e.to_string()),
        }
    }
}

fn row(family: Family, parameter: f64, cfg: &SweepConfig) -> Result<SweepRow> {
    let ch = family.channel(parameter)?;
    let closed = entanglement_degradation(&ch)?;
    let finite = finite_r_degradation(&ch, cfg.r)?.min(1.0);
    let search_cfg = SearchConfig {
        execution: cfg.execution,
        ..SearchConfig::new(cfg.n, cfg.budget, cfg.seed, cfg.method)
    };
    let found = search(&ch, &search_cfg)?;
    Ok(SweepRow {
        family,
        parameter,
        d_closed: Some(closed.d),
        d_finite_r: Some(finite),
        d_best_search: Some(found.best_d),
        log_negativity: Some(closed.log_negativity.to_f64()),
        violated: Some(found.violated),
        error: None,
    })
}

/// One row per grid point, in grid order. Per-point failures are recorded
/// in the row rather than aborting the sweep.
pub fn sweep_report(family: Family, grid: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Parse("grid is empty".into()));
    }
    Ok(grid
        .iter()
        .map(|&p| row(family, p, cfg).unwrap_or_else(|e| SweepRow::failed(family, p, e)))
        .collect())
}
