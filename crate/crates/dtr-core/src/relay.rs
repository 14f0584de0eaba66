//! Numerical relay thermal (ANSI 49) element: scaled rating and the
//! dual-time-constant tripping current.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Weight of the winding exponential in the relay's thermal image; the oil
/// exponential carries the remainder. Fixed constants of the relay model.
pub const WINDING_WEIGHT: f64 = 0.4;
pub const OIL_WEIGHT: f64 = 0.6;

#[derive(Debug, Error)]
pub enum RelayError {
    #[error("invalid relay settings: {0}")]
    InvalidSettings(String),
    #[error(
        "pre-load {preload_a} A already exceeds the thermal boundary of the scaled rating \
         {scaled_rating_a} A at {time_to_trip_min} min (no real trip current)"
    )]
    AlreadyTripping {
        preload_a: f64,
        scaled_rating_a: f64,
        time_to_trip_min: f64,
    },
}

/// Scale factor and rated phase current of the protected transformer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaySettings {
    pub scale_factor: f64,
    pub rated_phase_current: f64,
}

impl RelaySettings {
    pub fn validate(&self) -> Result<(), RelayError> {
        if !(self.scale_factor > 0.0) || !(self.rated_phase_current > 0.0) {
            return Err(RelayError::InvalidSettings(format!(
                "scale factor and rated current must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Scaled rated phase current: the relay's effective continuous rating.
pub fn scaled_rating(settings: &RelaySettings) -> f64 {
    settings.scale_factor * settings.rated_phase_current
}

/// Combined exponential weight of the relay's thermal image at time `t`.
pub fn image_weight(time_min: f64, tau_winding_min: f64, tau_oil_min: f64) -> f64 {
    WINDING_WEIGHT * (-time_min / tau_winding_min).exp()
        + OIL_WEIGHT * (-time_min / tau_oil_min).exp()
}

/// Current that, held from the given pre-load, trips the relay exactly after
/// `time_to_trip_min`.
///
/// Both numerator and denominator of the closed form are negative when the
/// pre-load sits below the thermal boundary; a non-negative numerator means
/// the pre-load alone already exceeds the boundary at the requested time and
/// is surfaced as [`RelayError::AlreadyTripping`].
pub fn trip_current(
    settings: &RelaySettings,
    preload_a: f64,
    time_to_trip_min: f64,
    tau_winding_min: f64,
    tau_oil_min: f64,
) -> Result<f64, RelayError> {
    settings.validate()?;
    if !(time_to_trip_min > 0.0) || preload_a < 0.0 {
        return Err(RelayError::InvalidSettings(format!(
            "need time_to_trip > 0 and preload >= 0, got t = {time_to_trip_min}, \
             preload = {preload_a}"
        )));
    }
    let scaled = scaled_rating(settings);
    let w = image_weight(time_to_trip_min, tau_winding_min, tau_oil_min);
    let numerator = preload_a * preload_a * w - scaled * scaled;
    let denominator = w - 1.0;
    if numerator >= 0.0 {
        return Err(RelayError::AlreadyTripping {
            preload_a,
            scaled_rating_a: scaled,
            time_to_trip_min,
        });
    }
    Ok((numerator / denominator).sqrt())
}

/// Smallest scale factor for which the trip current is defined at the given
/// pre-load and time; below it the pre-load alone exceeds the boundary.
pub fn min_feasible_scale(
    preload_a: f64,
    rated_phase_current: f64,
    time_to_trip_min: f64,
    tau_winding_min: f64,
    tau_oil_min: f64,
) -> f64 {
    let w = image_weight(time_to_trip_min, tau_winding_min, tau_oil_min);
    preload_a * w.sqrt() / rated_phase_current
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const TAU_W: f64 = 7.0;
    const TAU_O: f64 = 180.0;

    fn settings(k: f64, rated: f64) -> RelaySettings {
        RelaySettings {
            scale_factor: k,
            rated_phase_current: rated,
        }
    }

    #[test]
    fn scaled_rating_is_direct_product() {
        assert_eq!(scaled_rating(&settings(1.0, 200.0)), 200.0);
        assert_eq!(scaled_rating(&settings(1.05, 200.0)), 210.0);
        assert_abs_diff_eq!(scaled_rating(&settings(1.127, 100.0)), 112.7, epsilon = 1e-12);
    }

    #[test]
    fn preload_at_rating_is_a_fixed_point() {
        for (k, rated, t) in [(1.05, 200.0, 180.0), (1.3, 120.0, 60.0), (0.9, 400.0, 240.0)] {
            let s = settings(k, rated);
            let scaled = scaled_rating(&s);
            let trip = trip_current(&s, scaled, t, TAU_W, TAU_O).unwrap();
            assert_relative_eq!(trip, scaled, max_relative = 1e-12);
        }
    }

    #[test]
    fn steady_state_limit_returns_scaled_rating() {
        let s = settings(1.05, 200.0);
        let trip = trip_current(&s, 150.0, 1e6 * TAU_O, TAU_W, TAU_O).unwrap();
        assert_relative_eq!(trip, 210.0, max_relative = 1e-6);
    }

    #[test]
    fn matches_direct_formula_and_back_substitution() {
        // scaled = 210 A, preload = 150 A, t = 180 min.
        let s = settings(1.05, 200.0);
        let trip = trip_current(&s, 150.0, 180.0, TAU_W, TAU_O).unwrap();

        // Independent evaluation of the closed form.
        let a = (-180.0_f64 / TAU_W).exp();
        let b = (-180.0_f64 / TAU_O).exp();
        let direct = ((0.4 * 150.0_f64.powi(2) * a + 0.6 * 150.0_f64.powi(2) * b
            - 210.0_f64.powi(2))
            / (0.4 * a + 0.6 * b - 1.0))
            .sqrt();
        assert_relative_eq!(trip, direct, max_relative = 1e-12);

        // Back-substitution: the dual-exponential thermal image driven by a
        // step from preload to the trip current must reach the boundary
        // (scaled rating squared) exactly at t.
        let w = 0.4 * a + 0.6 * b;
        let image = trip * trip + (150.0_f64.powi(2) - trip * trip) * w;
        assert_relative_eq!(image, 210.0_f64.powi(2), max_relative = 1e-12);
    }

    #[test]
    fn preload_above_boundary_errors() {
        let s = settings(1.0, 100.0);
        // At very short times the image weight is near 1, so a preload above
        // the scaled rating already exceeds the boundary.
        let err = trip_current(&s, 140.0, 0.1, TAU_W, TAU_O).unwrap_err();
        assert!(matches!(err, RelayError::AlreadyTripping { .. }));

        // Just above the feasibility threshold the trip current is defined.
        let k_min = min_feasible_scale(140.0, 100.0, 0.1, TAU_W, TAU_O);
        let s = settings(k_min * 1.001, 100.0);
        assert!(trip_current(&s, 140.0, 0.1, TAU_W, TAU_O).is_ok());
        let s = settings(k_min * 0.999, 100.0);
        assert!(trip_current(&s, 140.0, 0.1, TAU_W, TAU_O).is_err());
    }

    #[test]
    fn rejects_invalid_arguments() {
        let s = settings(1.0, 100.0);
        assert!(trip_current(&s, -1.0, 60.0, TAU_W, TAU_O).is_err());
        assert!(trip_current(&s, 50.0, 0.0, TAU_W, TAU_O).is_err());
        assert!(settings(0.0, 100.0).validate().is_err());
        assert!(settings(1.0, 0.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_scale_factor(
            k in 0.6..2.4f64,
            preload_frac in 0.0..0.95f64,
            t in 10.0..480.0f64
        ) {
            let rated = 200.0;
            let preload = preload_frac * k * rated;
            let lo = trip_current(&settings(k, rated), preload, t, TAU_W, TAU_O).unwrap();
            let hi = trip_current(&settings(k * 1.05, rated), preload, t, TAU_W, TAU_O).unwrap();
            prop_assert!(hi > lo);
        }

        #[test]
        fn monotone_nonincreasing_in_preload(
            f1 in 0.0..1.0f64,
            f2 in 0.0..1.0f64,
            t in 10.0..480.0f64
        ) {
            let s = settings(1.1, 200.0);
            let scaled = scaled_rating(&s);
            let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
            let trip_lo = trip_current(&s, lo * scaled, t, TAU_W, TAU_O).unwrap();
            let trip_hi = trip_current(&s, hi * scaled, t, TAU_W, TAU_O).unwrap();
            prop_assert!(trip_hi <= trip_lo + 1e-9);
            // Result never below the scaled rating while preload <= rating.
            prop_assert!(trip_hi >= scaled - 1e-9);
        }

        #[test]
        fn monotone_nonincreasing_in_time(
            t1 in 10.0..480.0f64,
            t2 in 10.0..480.0f64,
            preload_frac in 0.0..0.9f64
        ) {
            let s = settings(1.1, 200.0);
            let preload = preload_frac * scaled_rating(&s);
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let trip_short = trip_current(&s, preload, lo, TAU_W, TAU_O).unwrap();
            let trip_long = trip_current(&s, preload, hi, TAU_W, TAU_O).unwrap();
            prop_assert!(trip_long <= trip_short + 1e-9);
        }

        #[test]
        fn fixed_point_everywhere(k in 0.6..2.4f64, t in 1.0..600.0f64) {
            let s = settings(k, 150.0);
            let scaled = scaled_rating(&s);
            let trip = trip_current(&s, scaled, t, TAU_W, TAU_O).unwrap();
            prop_assert!((trip - scaled).abs() <= 1e-12 * scaled);
        }
    }
}
