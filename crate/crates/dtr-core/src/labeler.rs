//! Retrospective optimal scale factors: for each transformer day, the
//! largest relay scale factor whose trip current keeps the winding hotspot
//! at the configured limit.
//!
//! The trip current implied by a candidate scale factor is substituted for
//! the maximum-phase peak equivalent (other phases scaled proportionally)
//! and the resulting hotspot is driven to the limit with a bounded Brent
//! search.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relay::{self, RelayError, RelaySettings};
use crate::solve::brent_root;
use crate::thermal::{
    hotspot_temperature, DayEquivalents, DayWindow, LoadFactors, ThermalError, ThermalParams,
};

#[derive(Debug, Error)]
pub enum LabelError {
    #[error(transparent)]
    Relay(#[from] RelayError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error("degenerate day: peak-period equivalent current is zero on every phase")]
    DegenerateDay,
    #[error("no feasible scale factor in [{k_min}, {k_max}] (pre-load {preload_a} A)")]
    InfeasibleBracket {
        k_min: f64,
        k_max: f64,
        preload_a: f64,
    },
    #[error("invalid labeler config: {0}")]
    InvalidConfig(String),
}

/// How the optimal scale factor met the search bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryFlag {
    InteriorRoot,
    ClampedLow,
    ClampedHigh,
}

impl std::fmt::Display for BoundaryFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BoundaryFlag::InteriorRoot => "interior_root",
            BoundaryFlag::ClampedLow => "clamped_low",
            BoundaryFlag::ClampedHigh => "clamped_high",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for BoundaryFlag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interior_root" => Ok(BoundaryFlag::InteriorRoot),
            "clamped_low" => Ok(BoundaryFlag::ClampedLow),
            "clamped_high" => Ok(BoundaryFlag::ClampedHigh),
            other => Err(format!("unknown boundary flag '{other}'")),
        }
    }
}

/// One labelled (transformer, day).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub transformer_id: String,
    pub date: NaiveDate,
    pub ambient_c: f64,
    pub factors: LoadFactors,
    pub k_opt: f64,
    pub boundary_flag: BoundaryFlag,
}

/// Everything the labeler needs for one transformer day.
#[derive(Debug, Clone, Copy)]
pub struct DayInputs<'a> {
    pub equivalents: DayEquivalents,
    pub ambient_c: f64,
    pub params: &'a ThermalParams,
    pub window: &'a DayWindow,
    pub rated_phase_current: f64,
}

/// Search bounds and convergence tolerance for the scale-factor search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelerConfig {
    pub k_min: f64,
    pub k_max: f64,
    /// Hotspot limit the trip current must respect (°C).
    pub hotspot_limit_c: f64,
    /// Convergence tolerance on the hotspot at the root (°C).
    pub tolerance_c: f64,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        Self {
            k_min: 0.5,
            k_max: 2.5,
            hotspot_limit_c: 140.0,
            tolerance_c: 0.01,
        }
    }
}

impl LabelerConfig {
    pub fn validate(&self) -> Result<(), LabelError> {
        if !(self.k_min > 0.0) || self.k_max <= self.k_min {
            return Err(LabelError::InvalidConfig(format!(
                "need 0 < k_min < k_max, got [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        if !(self.tolerance_c > 0.0) {
            return Err(LabelError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance_c
            )));
        }
        Ok(())
    }
}

/// Load factors for the day with the trip current at scale factor `k`
/// substituted for the maximum-phase peak equivalent and the other phases
/// scaled by the same ratio. Off-peak factors are left unchanged.
pub fn scaled_factors_at_k(k: f64, day: &DayInputs) -> Result<LoadFactors, LabelError> {
    let settings = RelaySettings {
        scale_factor: k,
        rated_phase_current: day.rated_phase_current,
    };
    let t = day.window.peak_duration_minutes();
    let preload = day.equivalents.max_phase_offpeak();
    let trip = relay::trip_current(
        &settings,
        preload,
        t,
        day.params.tau_winding_min,
        day.params.tau_oil_min,
    )?;
    let max_peak = day.equivalents.max_phase_peak();
    if !(max_peak > 0.0) {
        return Err(LabelError::DegenerateDay);
    }
    let ratio = trip / max_peak;
    let scaled = DayEquivalents {
        offpeak: day.equivalents.offpeak,
        peak: [
            day.equivalents.peak[0] * ratio,
            day.equivalents.peak[1] * ratio,
            day.equivalents.peak[2] * ratio,
        ],
    };
    Ok(LoadFactors::from_equivalents(&scaled, day.rated_phase_current)?)
}

/// Hotspot temperature when the peak load sits exactly at the trip boundary
/// implied by scale factor `k`.
pub fn hotspot_at_k(k: f64, day: &DayInputs) -> Result<f64, LabelError> {
    let factors = scaled_factors_at_k(k, day)?;
    Ok(hotspot_temperature(
        &factors,
        day.ambient_c,
        day.params,
        day.window.peak_duration_minutes(),
    ))
}

/// Largest scale factor holding the hotspot at the limit, clamped to the
/// configured search bounds.
pub fn optimal_scale_factor(
    day: &DayInputs,
    cfg: &LabelerConfig,
) -> Result<(f64, BoundaryFlag), LabelError> {
    cfg.validate()?;
    let t = day.window.peak_duration_minutes();
    let preload = day.equivalents.max_phase_offpeak();
    // Below this scale the pre-load alone exceeds the relay's thermal
    // boundary, so the search bracket starts just above it.
    let k_feasible = relay::min_feasible_scale(
        preload,
        day.rated_phase_current,
        t,
        day.params.tau_winding_min,
        day.params.tau_oil_min,
    );
    let k_lo = cfg.k_min.max(k_feasible * (1.0 + 1e-9) + 1e-12);
    if k_lo >= cfg.k_max {
        return Err(LabelError::InfeasibleBracket {
            k_min: cfg.k_min,
            k_max: cfg.k_max,
            preload_a: preload,
        });
    }

    let g = |k: f64| hotspot_at_k(k, day).map(|h| h - cfg.hotspot_limit_c);
    let g_hi = g(cfg.k_max)?;
    if g_hi < 0.0 {
        return Ok((cfg.k_max, BoundaryFlag::ClampedHigh));
    }
    let g_lo = g(k_lo)?;
    if g_lo > 0.0 {
        return Ok((cfg.k_min, BoundaryFlag::ClampedLow));
    }

    let root = brent_root(
        |k| g(k).expect("hotspot defined inside feasible bracket"),
        k_lo,
        cfg.k_max,
        g_lo,
        g_hi,
        1e-10,
        0.5 * cfg.tolerance_c,
        200,
    );
    Ok((root.x, BoundaryFlag::InteriorRoot))
}

/// Label one transformer day.
pub fn label_day(
    transformer_id: &str,
    date: NaiveDate,
    day: &DayInputs,
    cfg: &LabelerConfig,
) -> Result<LabelRecord, LabelError> {
    let (k_opt, boundary_flag) = optimal_scale_factor(day, cfg)?;
    let factors = LoadFactors::from_equivalents(&day.equivalents, day.rated_phase_current)?;
    Ok(LabelRecord {
        transformer_id: transformer_id.to_string(),
        date,
        ambient_c: day.ambient_c,
        factors,
        k_opt,
        boundary_flag,
    })
}
