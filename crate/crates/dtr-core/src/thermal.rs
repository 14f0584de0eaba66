//! Winding hotspot temperature from per-phase loads via the two-step
//! equivalent-load exponential-response model.
//!
//! The peak-period hotspot is the sum of ambient, top-oil rise over ambient,
//! and hotspot rise over top oil. Each rise follows a first-order exponential
//! response from the steady state implied by the off-peak load factors toward
//! the ultimate value implied by the peak load factors. Phase unbalance is
//! carried by splitting the load factor into a winding component (max phase)
//! and a top-oil component (mean phase).

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LoadSeries;

/// Half-hourly sample cadence assumed for load data.
pub const SAMPLE_MINUTES: i64 = 30;

#[derive(Debug, Error)]
pub enum ThermalError {
    #[error("invalid thermal parameters: {0}")]
    InvalidParams(String),
    #[error("invalid day window: {0}")]
    InvalidWindow(String),
    #[error("invalid load factors: {0}")]
    InvalidFactors(String),
    #[error("rated phase current must be positive, got {0}")]
    InvalidRatedCurrent(f64),
    #[error("load series {transformer_id} has a gap at {missing} (expected half-hourly samples)")]
    Gap {
        transformer_id: String,
        missing: NaiveDateTime,
    },
}

/// Nameplate-derived thermal parameters of one transformer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    /// Top-oil rise over ambient at rated load (K).
    pub rated_top_oil_rise: f64,
    /// Hotspot rise over top oil at rated load (K).
    pub rated_hotspot_rise: f64,
    /// Ratio of load loss to no-load loss at rated load.
    pub loss_ratio: f64,
    /// Oil exponent n.
    pub oil_exponent: f64,
    /// Winding exponent m.
    pub winding_exponent: f64,
    /// Top-oil time constant (minutes).
    pub tau_oil_min: f64,
    /// Winding time constant (minutes).
    pub tau_winding_min: f64,
}

impl ThermalParams {
    /// Typical ONAN distribution transformer figures; overridable per fleet.
    pub fn typical_onan() -> Self {
        Self {
            rated_top_oil_rise: 55.0,
            rated_hotspot_rise: 23.0,
            loss_ratio: 5.0,
            oil_exponent: 0.8,
            winding_exponent: 0.8,
            tau_oil_min: 180.0,
            tau_winding_min: 7.0,
        }
    }

    pub fn validate(&self) -> Result<(), ThermalError> {
        let fields = [
            ("rated_top_oil_rise", self.rated_top_oil_rise),
            ("rated_hotspot_rise", self.rated_hotspot_rise),
            ("loss_ratio", self.loss_ratio),
            ("oil_exponent", self.oil_exponent),
            ("winding_exponent", self.winding_exponent),
            ("tau_oil_min", self.tau_oil_min),
            ("tau_winding_min", self.tau_winding_min),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ThermalError::InvalidParams(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.tau_winding_min >= self.tau_oil_min {
            return Err(ThermalError::InvalidParams(format!(
                "tau_winding ({}) must be below tau_oil ({})",
                self.tau_winding_min, self.tau_oil_min
            )));
        }
        if self.oil_exponent > 1.0 || self.winding_exponent > 1.0 {
            return Err(ThermalError::InvalidParams(
                "exponents must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Winding/top-oil load factor split for the off-peak and peak periods (p.u.).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadFactors {
    pub k_oil_offpeak: f64,
    pub k_oil_peak: f64,
    pub k_winding_offpeak: f64,
    pub k_winding_peak: f64,
}

impl LoadFactors {
    pub fn validate(&self) -> Result<(), ThermalError> {
        let all = [
            self.k_oil_offpeak,
            self.k_oil_peak,
            self.k_winding_offpeak,
            self.k_winding_peak,
        ];
        if all.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(ThermalError::InvalidFactors(format!(
                "factors must be finite and non-negative: {self:?}"
            )));
        }
        if self.k_winding_offpeak < self.k_oil_offpeak - 1e-12
            || self.k_winding_peak < self.k_oil_peak - 1e-12
        {
            return Err(ThermalError::InvalidFactors(format!(
                "winding factor (max phase) cannot be below oil factor (mean phase): {self:?}"
            )));
        }
        Ok(())
    }

    /// Derive the factor split from per-phase period-equivalent currents.
    pub fn from_equivalents(
        eq: &DayEquivalents,
        rated_phase_current: f64,
    ) -> Result<Self, ThermalError> {
        if !(rated_phase_current > 0.0) {
            return Err(ThermalError::InvalidRatedCurrent(rated_phase_current));
        }
        let max3 = |v: &[f64; 3]| v[0].max(v[1]).max(v[2]);
        let mean3 = |v: &[f64; 3]| (v[0] + v[1] + v[2]) / 3.0;
        Ok(Self {
            k_oil_offpeak: mean3(&eq.offpeak) / rated_phase_current,
            k_oil_peak: mean3(&eq.peak) / rated_phase_current,
            k_winding_offpeak: max3(&eq.offpeak) / rated_phase_current,
            k_winding_peak: max3(&eq.peak) / rated_phase_current,
        })
    }
}

/// Clock-time bounds of the daily peak period; the off-peak window is the
/// 12 hours immediately preceding `peak_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayWindow {
    pub peak_start: NaiveTime,
    pub peak_end: NaiveTime,
    /// Duration of the pre-peak window in hours (fixed at 12).
    pub offpeak_hours: u32,
}

impl Default for DayWindow {
    fn default() -> Self {
        Self {
            peak_start: NaiveTime::from_hms_opt(17, 0, 0).unwrap(),
            peak_end: NaiveTime::from_hms_opt(20, 0, 0).unwrap(),
            offpeak_hours: 12,
        }
    }
}

impl DayWindow {
    pub fn validate(&self) -> Result<(), ThermalError> {
        let d = self.peak_duration_minutes();
        if d <= 0.0 || d > 24.0 * 60.0 {
            return Err(ThermalError::InvalidWindow(format!(
                "peak window duration must be in (0, 24] h, got {d} min"
            )));
        }
        if (d as i64) % SAMPLE_MINUTES != 0 {
            return Err(ThermalError::InvalidWindow(format!(
                "peak window duration must be a multiple of {SAMPLE_MINUTES} min, got {d} min"
            )));
        }
        if self.offpeak_hours == 0 {
            return Err(ThermalError::InvalidWindow(
                "off-peak window must be non-empty".into(),
            ));
        }
        Ok(())
    }

    /// Peak-period duration in minutes; a peak_end at or before peak_start
    /// wraps past midnight.
    pub fn peak_duration_minutes(&self) -> f64 {
        let start = self.peak_start.signed_duration_since(NaiveTime::MIN);
        let end = self.peak_end.signed_duration_since(NaiveTime::MIN);
        let mut mins = (end - start).num_minutes();
        if mins <= 0 {
            mins += 24 * 60;
        }
        mins as f64
    }

    /// First sample timestamp of the off-peak window for a peak on `date`.
    pub fn offpeak_start(&self, date: NaiveDate) -> NaiveDateTime {
        date.and_time(self.peak_start) - Duration::hours(i64::from(self.offpeak_hours))
    }

    /// First sample timestamp of the peak window for a peak on `date`.
    pub fn peak_start_at(&self, date: NaiveDate) -> NaiveDateTime {
        date.and_time(self.peak_start)
    }

    pub fn offpeak_sample_count(&self) -> usize {
        (i64::from(self.offpeak_hours) * 60 / SAMPLE_MINUTES) as usize
    }

    pub fn peak_sample_count(&self) -> usize {
        (self.peak_duration_minutes() as i64 / SAMPLE_MINUTES) as usize
    }
}

/// Per-phase period-equivalent currents (amperes) for one transformer day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayEquivalents {
    pub offpeak: [f64; 3],
    pub peak: [f64; 3],
}

impl DayEquivalents {
    pub fn max_phase_peak(&self) -> f64 {
        self.peak[0].max(self.peak[1]).max(self.peak[2])
    }

    pub fn max_phase_offpeak(&self) -> f64 {
        self.offpeak[0].max(self.offpeak[1]).max(self.offpeak[2])
    }
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Extract the per-phase sample vectors covering `n` half-hourly steps from
/// `start`, erroring on any gap.
fn window_samples<'a>(
    series: &'a LoadSeries,
    start: NaiveDateTime,
    n: usize,
) -> Result<[&'a [f64]; 3], ThermalError> {
    let gap = |missing: NaiveDateTime| ThermalError::Gap {
        transformer_id: series.transformer_id.clone(),
        missing,
    };
    let begin = series
        .timestamps
        .binary_search(&start)
        .map_err(|_| gap(start))?;
    if begin + n > series.timestamps.len() {
        return Err(gap(start + Duration::minutes(SAMPLE_MINUTES * (n as i64 - 1))));
    }
    for j in 0..n {
        let expected = start + Duration::minutes(SAMPLE_MINUTES * j as i64);
        if series.timestamps[begin + j] != expected {
            return Err(gap(expected));
        }
    }
    Ok([
        &series.i_a[begin..begin + n],
        &series.i_b[begin..begin + n],
        &series.i_c[begin..begin + n],
    ])
}

/// Per-phase equivalent currents for the day whose peak falls on `date`.
///
/// The period equivalent is the RMS of the half-hourly samples; the peak
/// equivalent is additionally floored at 90% of that phase's maximum
/// half-hourly value.
pub fn equivalent_currents(
    series: &LoadSeries,
    date: NaiveDate,
    window: &DayWindow,
) -> Result<DayEquivalents, ThermalError> {
    window.validate()?;
    let off = window_samples(series, window.offpeak_start(date), window.offpeak_sample_count())?;
    let peak = window_samples(series, window.peak_start_at(date), window.peak_sample_count())?;

    let mut eq = DayEquivalents {
        offpeak: [0.0; 3],
        peak: [0.0; 3],
    };
    for p in 0..3 {
        eq.offpeak[p] = rms(off[p]);
        let max = peak[p].iter().cloned().fold(0.0_f64, f64::max);
        eq.peak[p] = rms(peak[p]).max(0.9 * max);
    }
    Ok(eq)
}

/// Two-step equivalent load factors for the day whose peak falls on `date`.
pub fn equivalent_load_factors(
    series: &LoadSeries,
    date: NaiveDate,
    window: &DayWindow,
    rated_phase_current: f64,
) -> Result<LoadFactors, ThermalError> {
    let eq = equivalent_currents(series, date, window)?;
    LoadFactors::from_equivalents(&eq, rated_phase_current)
}

/// Ultimate top-oil rise over ambient for oil load factor `k_oil` (K).
pub fn top_oil_ultimate_rise(k_oil: f64, params: &ThermalParams) -> f64 {
    let r = params.loss_ratio;
    params.rated_top_oil_rise * ((k_oil * k_oil * r + 1.0) / (r + 1.0)).powf(params.oil_exponent)
}

/// Ultimate hotspot rise over top oil for winding load factor `k_w` (K).
pub fn hotspot_ultimate_rise(k_winding: f64, params: &ThermalParams) -> f64 {
    params.rated_hotspot_rise * k_winding.powf(2.0 * params.winding_exponent)
}

fn exponential_response(initial: f64, ultimate: f64, t_min: f64, tau_min: f64) -> f64 {
    initial + (ultimate - initial) * (1.0 - (-t_min / tau_min).exp())
}

/// The two rise components plus ambient, exposed so tests can check the
/// exact decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HotspotBreakdown {
    pub ambient_c: f64,
    pub top_oil_rise_k: f64,
    pub hotspot_rise_k: f64,
}

impl HotspotBreakdown {
    pub fn total(&self) -> f64 {
        self.ambient_c + self.top_oil_rise_k + self.hotspot_rise_k
    }
}

/// Hotspot temperature at the end of the peak period, with the off-peak
/// factors setting the initial steady state and the peak factors the
/// ultimate one.
pub fn hotspot_breakdown(
    factors: &LoadFactors,
    ambient_c: f64,
    params: &ThermalParams,
    peak_duration_min: f64,
) -> HotspotBreakdown {
    let oil_initial = top_oil_ultimate_rise(factors.k_oil_offpeak, params);
    let oil_ultimate = top_oil_ultimate_rise(factors.k_oil_peak, params);
    let hs_initial = hotspot_ultimate_rise(factors.k_winding_offpeak, params);
    let hs_ultimate = hotspot_ultimate_rise(factors.k_winding_peak, params);
    HotspotBreakdown {
        ambient_c,
        top_oil_rise_k: exponential_response(
            oil_initial,
            oil_ultimate,
            peak_duration_min,
            params.tau_oil_min,
        ),
        hotspot_rise_k: exponential_response(
            hs_initial,
            hs_ultimate,
            peak_duration_min,
            params.tau_winding_min,
        ),
    }
}

/// Maximum winding hotspot temperature (°C) for the peak period.
pub fn hotspot_temperature(
    factors: &LoadFactors,
    ambient_c: f64,
    params: &ThermalParams,
    peak_duration_min: f64,
) -> f64 {
    hotspot_breakdown(factors, ambient_c, params, peak_duration_min).total()
}
