//! Fleet data: load/weather/metadata schemas, CSV ingestion with validation,
//! a reproducible synthetic fleet generator, and the chronological
//! train/holdout split.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thermal::{ThermalParams, SAMPLE_MINUTES};

/// Amperes of rated phase current per kVA at 400 V three-phase.
pub const AMPS_PER_KVA: f64 = 1000.0 / (1.732_050_807_568_877_2 * 400.0);

pub const LOADS_HEADER: [&str; 5] = [
    "transformer_id",
    "timestamp_iso8601",
    "i_a_amps",
    "i_b_amps",
    "i_c_amps",
];
pub const WEATHER_HEADER: [&str; 4] = ["site_id", "date", "ambient_true_c", "ambient_forecast_c"];
pub const META_HEADER: [&str; 11] = [
    "transformer_id",
    "rated_kva",
    "rated_phase_amps",
    "num_customers",
    "dtheta_to_r",
    "dtheta_h_r",
    "loss_ratio",
    "n_exp",
    "m_exp",
    "tau_oil_min",
    "tau_wind_min",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema mismatch in {path}: expected columns {expected:?}, found {found:?}")]
    Schema {
        path: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("insufficient days: need {needed}, have {available}")]
    InsufficientDays { needed: usize, available: usize },
    #[error("invalid metadata for {transformer_id}: {message}")]
    InvalidMeta {
        transformer_id: String,
        message: String,
    },
    #[error("unsupported sample cadence of {minutes} min (must divide {SAMPLE_MINUTES})")]
    UnsupportedCadence { minutes: i64 },
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Identity, rating, and thermal parameters of one transformer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerMeta {
    pub transformer_id: String,
    pub rated_kva: f64,
    pub rated_phase_amps: f64,
    pub num_customers: u32,
    pub thermal: ThermalParams,
}

impl TransformerMeta {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let invalid = |message: String| DatasetError::InvalidMeta {
            transformer_id: self.transformer_id.clone(),
            message,
        };
        if !(25.0..=1000.0).contains(&self.rated_kva) {
            return Err(invalid(format!(
                "rated power {} kVA outside [25, 1000]",
                self.rated_kva
            )));
        }
        let implied = self.rated_kva * AMPS_PER_KVA;
        if (self.rated_phase_amps - implied).abs() > 0.01 * implied {
            return Err(invalid(format!(
                "rated phase current {} A inconsistent with {} kVA at 400 V (expected ~{implied:.1} A)",
                self.rated_phase_amps, self.rated_kva
            )));
        }
        self.thermal.validate().map_err(|e| invalid(e.to_string()))
    }
}

/// Half-hourly per-phase current magnitudes for one transformer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSeries {
    pub transformer_id: String,
    pub timestamps: Vec<NaiveDateTime>,
    pub i_a: Vec<f64>,
    pub i_b: Vec<f64>,
    pub i_c: Vec<f64>,
}

impl LoadSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn phase(&self, p: usize) -> &[f64] {
        match p {
            0 => &self.i_a,
            1 => &self.i_b,
            2 => &self.i_c,
            _ => panic!("phase index {p} out of range"),
        }
    }

    /// Dates with a complete 48-sample half-hourly day (midnight-aligned).
    pub fn complete_days(&self) -> Vec<NaiveDate> {
        let mut counts: BTreeMap<NaiveDate, usize> = BTreeMap::new();
        for ts in &self.timestamps {
            *counts.entry(ts.date()).or_default() += 1;
        }
        counts
            .into_iter()
            .filter_map(|(d, n)| (n == 48).then_some(d))
            .collect()
    }
}

/// Daily ambient temperature (true and day-ahead forecast) for one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherDay {
    pub date: NaiveDate,
    pub ambient_true_c: f64,
    pub ambient_forecast_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    pub site_id: String,
    pub days: Vec<WeatherDay>,
}

impl WeatherSeries {
    pub fn lookup(&self, date: NaiveDate) -> Option<&WeatherDay> {
        self.days
            .binary_search_by_key(&date, |d| d.date)
            .ok()
            .map(|i| &self.days[i])
    }
}

/// Chronological split sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_validation_days: usize,
    pub holdout_days: usize,
}

/// Chronological split of the date axis; the holdout block strictly follows
/// every training day.
pub fn split_dates(
    dates: &[NaiveDate],
    spec: &SplitSpec,
) -> Result<(Vec<NaiveDate>, Vec<NaiveDate>), DatasetError> {
    if spec.train_validation_days == 0 || spec.holdout_days == 0 {
        return Err(DatasetError::InsufficientDays {
            needed: 2,
            available: 0,
        });
    }
    let needed = spec.train_validation_days + spec.holdout_days;
    if dates.len() < needed {
        return Err(DatasetError::InsufficientDays {
            needed,
            available: dates.len(),
        });
    }
    let mut sorted = dates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < needed {
        return Err(DatasetError::InsufficientDays {
            needed,
            available: sorted.len(),
        });
    }
    let train = sorted[..spec.train_validation_days].to_vec();
    let holdout =
        sorted[spec.train_validation_days..spec.train_validation_days + spec.holdout_days].to_vec();
    Ok((train, holdout))
}

/// A complete fleet: metadata, loads, weather, and the holiday calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetData {
    pub metas: Vec<TransformerMeta>,
    pub loads: Vec<LoadSeries>,
    pub weather: WeatherSeries,
    pub holidays: Vec<NaiveDate>,
}

impl FleetData {
    pub fn load_series(&self, transformer_id: &str) -> Option<&LoadSeries> {
        self.loads
            .binary_search_by(|s| s.transformer_id.as_str().cmp(transformer_id))
            .ok()
            .map(|i| &self.loads[i])
    }

    pub fn meta(&self, transformer_id: &str) -> Option<&TransformerMeta> {
        self.metas
            .binary_search_by(|m| m.transformer_id.as_str().cmp(transformer_id))
            .ok()
            .map(|i| &self.metas[i])
    }

    /// Dates covered by every transformer's complete days.
    pub fn common_days(&self) -> Vec<NaiveDate> {
        let mut iter = self.loads.iter();
        let Some(first) = iter.next() else {
            return Vec::new();
        };
        let mut common: Vec<NaiveDate> = first.complete_days();
        for s in iter {
            let days = s.complete_days();
            common.retain(|d| days.binary_search(d).is_ok());
        }
        common
    }
}

// ---------------------------------------------------------------------------
// Synthetic fleet generation
// ---------------------------------------------------------------------------

/// Knobs of the synthetic fleet generator. Defaults target a winter UK fleet
/// whose optimal scale factors land mostly in [1.1, 1.45].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub start_date: NaiveDate,
    /// Ratings drawn uniformly from this set (kVA).
    pub rated_kva_choices: Vec<f64>,
    /// Per-transformer mean utilisation drawn uniformly from this range
    /// (p.u. of rated current at the daily-shape average).
    pub utilisation_range: (f64, f64),
    /// Height of the sharp evening spike added to the smooth daily shape.
    pub evening_spike: f64,
    /// Max per-phase weight deviation; 0 means perfectly balanced phases.
    pub unbalance: f64,
    /// Demand drop per degree above the seasonal mean, in p.u. of rated
    /// current per °C (applied at the daily-shape maximum).
    pub temp_coupling_pu_per_c: f64,
    /// Stationary standard deviation of the multiplicative AR(1) load noise.
    pub noise_pu: f64,
    /// AR(1) coefficient of the load noise (per half-hour step).
    pub noise_phi: f64,
    /// Weekend demand scaling.
    pub weekend_scale: f64,
    /// Holiday demand scaling.
    pub holiday_scale: f64,
    /// Customers per kVA before rounding.
    pub customers_per_kva: f64,
    pub weather: SynthWeatherConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthWeatherConfig {
    pub seasonal_mean_c: f64,
    pub seasonal_amplitude_c: f64,
    /// Day of year of the coldest point of the seasonal cycle.
    pub coldest_day_of_year: u32,
    pub ar_phi: f64,
    pub ar_sigma_c: f64,
    /// Std-dev of the day-ahead forecast error.
    pub forecast_sigma_c: f64,
}

impl Default for SynthWeatherConfig {
    fn default() -> Self {
        Self {
            seasonal_mean_c: 8.0,
            seasonal_amplitude_c: 6.5,
            coldest_day_of_year: 25,
            ar_phi: 0.7,
            ar_sigma_c: 1.5,
            forecast_sigma_c: 1.12,
        }
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            start_date: NaiveDate::from_ymd_opt(2024, 9, 1).unwrap(),
            rated_kva_choices: vec![25.0, 50.0, 100.0, 200.0, 315.0, 500.0, 800.0, 1000.0],
            utilisation_range: (0.30, 0.46),
            evening_spike: 0.55,
            unbalance: 0.12,
            temp_coupling_pu_per_c: 0.006,
            noise_pu: 0.02,
            noise_phi: 0.9,
            weekend_scale: 0.94,
            holiday_scale: 0.90,
            customers_per_kva: 0.35,
            weather: SynthWeatherConfig::default(),
        }
    }
}

/// splitmix64, used to derive independent per-stream seeds.
fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Smooth daily demand shape (p.u., peak-normalised to 1 at the evening
/// maximum before the spike is added). `slot` is the half-hour index 0..48.
fn daily_shape(slot: usize, evening_spike: f64) -> f64 {
    let h = slot as f64 * 0.5;
    let bump = |centre: f64, width: f64| (-((h - centre) / width).powi(2)).exp();
    // Overnight valley, morning shoulder, broad evening peak, and a sharp
    // cooking-hour spike inside the 17:00-20:00 window.
    0.42 + 0.18 * bump(8.0, 2.4) + 0.58 * bump(18.2, 1.5) + evening_spike * bump(17.8, 0.45)
}

fn shape_max(evening_spike: f64) -> f64 {
    (0..48)
        .map(|s| daily_shape(s, evening_spike))
        .fold(0.0, f64::max)
}

/// Fixed UK-style winter holidays within the generated range.
fn holidays_in_range(start: NaiveDate, n_days: usize) -> Vec<NaiveDate> {
    let end = start + Duration::days(n_days as i64);
    let mut out = Vec::new();
    for year in start.year()..=end.year() {
        for (m, d) in [(12, 25), (12, 26), (1, 1)] {
            if let Some(date) = NaiveDate::from_ymd_opt(year, m, d) {
                if date >= start && date < end {
                    out.push(date);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

fn generate_weather(seed: u64, start: NaiveDate, n_days: usize, cfg: &SynthWeatherConfig) -> WeatherSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xfeed_5eed));
    let mut forecast_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xf0_5eca_57));
    let innovations = Normal::new(0.0, cfg.ar_sigma_c * (1.0 - cfg.ar_phi * cfg.ar_phi).sqrt())
        .expect("valid normal");
    let forecast_noise = Normal::new(0.0, cfg.forecast_sigma_c).expect("valid normal");
    let mut ar = 0.0_f64;
    let mut days = Vec::with_capacity(n_days);
    for i in 0..n_days {
        let date = start + Duration::days(i as i64);
        let doy = date.ordinal() as f64;
        let phase = 2.0 * std::f64::consts::PI * (doy - cfg.coldest_day_of_year as f64) / 365.25;
        let seasonal = cfg.seasonal_mean_c - cfg.seasonal_amplitude_c * phase.cos();
        ar = cfg.ar_phi * ar + innovations.sample(&mut rng);
        let truth = seasonal + ar;
        let forecast = if cfg.forecast_sigma_c > 0.0 {
            truth + forecast_noise.sample(&mut forecast_rng)
        } else {
            truth
        };
        days.push(WeatherDay {
            date,
            ambient_true_c: truth,
            ambient_forecast_c: Some(forecast),
        });
    }
    WeatherSeries {
        site_id: "site-1".to_string(),
        days,
    }
}

/// Generate a reproducible synthetic fleet. Identical `(seed, n, cfg)`
/// arguments produce identical outputs; each transformer consumes its own
/// derived random stream.
pub fn generate_synthetic_fleet(
    seed: u64,
    n_transformers: usize,
    n_days: usize,
    cfg: &SynthConfig,
) -> FleetData {
    assert!(n_transformers >= 1, "need at least one transformer");
    assert!(n_days >= 15, "need at least 15 days (7-day lags plus history)");

    let weather = generate_weather(seed, cfg.start_date, n_days, &cfg.weather);
    let holidays = holidays_in_range(cfg.start_date, n_days);
    let peak_shape = shape_max(cfg.evening_spike);

    let mut metas = Vec::with_capacity(n_transformers);
    let mut loads = Vec::with_capacity(n_transformers);
    for idx in 0..n_transformers {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1000 + idx as u64));
        let transformer_id = format!("tx-{:04}", idx + 1);

        let rated_kva = cfg.rated_kva_choices[rng.gen_range(0..cfg.rated_kva_choices.len())];
        let rated_amps = rated_kva * AMPS_PER_KVA;
        let utilisation = rng.gen_range(cfg.utilisation_range.0..cfg.utilisation_range.1);
        let num_customers = ((rated_kva * cfg.customers_per_kva * rng.gen_range(0.7..1.3))
            .round() as u32)
            .max(1);

        // Per-phase weights with mean exactly 1.
        let raw: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let mean_raw = (raw[0] + raw[1] + raw[2]) / 3.0;
        let phase_w: [f64; 3] = [
            1.0 + cfg.unbalance * (raw[0] - mean_raw),
            1.0 + cfg.unbalance * (raw[1] - mean_raw),
            1.0 + cfg.unbalance * (raw[2] - mean_raw),
        ];

        let coupling_amps_per_c = cfg.temp_coupling_pu_per_c * rated_amps;
        let noise_dist = Normal::new(
            0.0,
            cfg.noise_pu * (1.0 - cfg.noise_phi * cfg.noise_phi).sqrt(),
        )
        .expect("valid normal");

        let n_samples = n_days * 48;
        let mut timestamps = Vec::with_capacity(n_samples);
        let mut phases: [Vec<f64>; 3] = [
            Vec::with_capacity(n_samples),
            Vec::with_capacity(n_samples),
            Vec::with_capacity(n_samples),
        ];
        let mut ar = 0.0_f64;
        for day in 0..n_days {
            let date = cfg.start_date + Duration::days(day as i64);
            let ambient = weather.days[day].ambient_true_c;
            let temp_dev = ambient - cfg.weather.seasonal_mean_c;
            let cal = if holidays.binary_search(&date).is_ok() {
                cfg.holiday_scale
            } else if date.weekday().number_from_monday() >= 6 {
                cfg.weekend_scale
            } else {
                1.0
            };
            for slot in 0..48 {
                let ts = date.and_hms_opt(0, 0, 0).unwrap()
                    + Duration::minutes(SAMPLE_MINUTES * slot as i64);
                timestamps.push(ts);
                let shape = daily_shape(slot, cfg.evening_spike);
                ar = cfg.noise_phi * ar + noise_dist.sample(&mut rng);
                for (p, weight) in phase_w.iter().enumerate() {
                    let base = rated_amps * utilisation * shape * cal * weight / peak_shape
                        * (peak_shape / 1.0);
                    // Negative linear temperature coupling, scaled by the
                    // shape so the daily peak moves by exactly the coupling.
                    let coupled =
                        base - coupling_amps_per_c * temp_dev * (shape / peak_shape);
                    phases[p].push((coupled * (1.0 + ar)).max(0.0));
                }
            }
        }
        let [i_a, i_b, i_c] = phases;
        loads.push(LoadSeries {
            transformer_id: transformer_id.clone(),
            timestamps,
            i_a,
            i_b,
            i_c,
        });
        metas.push(TransformerMeta {
            transformer_id,
            rated_kva,
            rated_phase_amps: rated_amps,
            num_customers,
            thermal: ThermalParams::typical_onan(),
        });
    }

    FleetData {
        metas,
        loads,
        weather,
        holidays,
    }
}

// ---------------------------------------------------------------------------
// CSV input/output
// ---------------------------------------------------------------------------

const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

fn check_header(path: &Path, headers: &csv::StringRecord, expected: &[&str]) -> Result<(), DatasetError> {
    let found: Vec<String> = headers.iter().map(str::to_string).collect();
    if found != expected {
        return Err(DatasetError::Schema {
            path: path.display().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, row: u64, name: &str) -> Result<T, DatasetError> {
    let raw = record.get(idx).unwrap_or("");
    raw.trim().parse().map_err(|_| DatasetError::Row {
        row,
        message: format!("cannot parse {name} from '{raw}'"),
    })
}

/// Read and validate a per-phase load CSV. Series are returned sorted by
/// transformer id; an empty file yields an empty collection with a warning.
pub fn ingest_loads(path: &Path) -> Result<Vec<LoadSeries>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    check_header(path, reader.headers()?, &LOADS_HEADER)?;

    let mut by_id: BTreeMap<String, LoadSeries> = BTreeMap::new();
    let mut row: u64 = 1;
    for record in reader.records() {
        let record = record?;
        row += 1;
        let id = record.get(0).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(DatasetError::Row {
                row,
                message: "empty transformer_id".into(),
            });
        }
        let ts_raw = record.get(1).unwrap_or("");
        let ts = NaiveDateTime::parse_from_str(ts_raw, TS_FORMAT).map_err(|_| DatasetError::Row {
            row,
            message: format!("cannot parse timestamp '{ts_raw}'"),
        })?;
        let ia: f64 = parse_field(&record, 2, row, "i_a_amps")?;
        let ib: f64 = parse_field(&record, 3, row, "i_b_amps")?;
        let ic: f64 = parse_field(&record, 4, row, "i_c_amps")?;
        for (name, v) in [("i_a_amps", ia), ("i_b_amps", ib), ("i_c_amps", ic)] {
            if v < 0.0 || !v.is_finite() {
                return Err(DatasetError::Row {
                    row,
                    message: format!("negative or non-finite {name}: {v}"),
                });
            }
        }
        let series = by_id.entry(id.clone()).or_insert_with(|| LoadSeries {
            transformer_id: id,
            timestamps: Vec::new(),
            i_a: Vec::new(),
            i_b: Vec::new(),
            i_c: Vec::new(),
        });
        if let Some(last) = series.timestamps.last() {
            if ts == *last {
                return Err(DatasetError::Row {
                    row,
                    message: format!("duplicated timestamp {ts} for {}", series.transformer_id),
                });
            }
            if ts < *last {
                return Err(DatasetError::Row {
                    row,
                    message: format!(
                        "non-monotone timestamp {ts} after {last} for {}",
                        series.transformer_id
                    ),
                });
            }
        }
        series.timestamps.push(ts);
        series.i_a.push(ia);
        series.i_b.push(ib);
        series.i_c.push(ic);
    }
    if by_id.is_empty() {
        log::warn!("load file {} contains no rows", path.display());
    }

    let mut out = Vec::with_capacity(by_id.len());
    for (_, series) in by_id {
        let series = resample_to_half_hourly(series)?;
        let gaps = count_gaps(&series);
        if gaps > 0 {
            log::warn!(
                "series {} has {gaps} half-hourly gap(s); incomplete days are excluded from labelling",
                series.transformer_id
            );
        }
        out.push(series);
    }
    Ok(out)
}

fn count_gaps(series: &LoadSeries) -> usize {
    series
        .timestamps
        .windows(2)
        .filter(|w| (w[1] - w[0]).num_minutes() != SAMPLE_MINUTES)
        .count()
}

/// Aggregate a finer, uniform cadence to half-hourly samples by RMS.
/// Half-hourly input passes through untouched.
pub fn resample_to_half_hourly(series: LoadSeries) -> Result<LoadSeries, DatasetError> {
    if series.timestamps.len() < 2 {
        return Ok(series);
    }
    let step = (series.timestamps[1] - series.timestamps[0]).num_minutes();
    if step == SAMPLE_MINUTES {
        return Ok(series);
    }
    if step <= 0 || SAMPLE_MINUTES % step != 0 {
        return Err(DatasetError::UnsupportedCadence { minutes: step });
    }
    let group = (SAMPLE_MINUTES / step) as usize;
    let mut out = LoadSeries {
        transformer_id: series.transformer_id.clone(),
        timestamps: Vec::new(),
        i_a: Vec::new(),
        i_b: Vec::new(),
        i_c: Vec::new(),
    };
    let mut i = 0;
    while i + group <= series.len() {
        let bucket_start = series.timestamps[i];
        // Only aggregate buckets aligned to the half-hour and contiguous.
        let aligned = bucket_start.and_utc().timestamp() % (SAMPLE_MINUTES * 60) == 0;
        let contiguous = (0..group).all(|j| {
            series.timestamps[i + j] == bucket_start + Duration::minutes(step * j as i64)
        });
        if !aligned || !contiguous {
            i += 1;
            continue;
        }
        let rms = |vals: &[f64]| {
            (vals[i..i + group].iter().map(|v| v * v).sum::<f64>() / group as f64).sqrt()
        };
        out.timestamps.push(bucket_start);
        out.i_a.push(rms(&series.i_a));
        out.i_b.push(rms(&series.i_b));
        out.i_c.push(rms(&series.i_c));
        i += group;
    }
    Ok(out)
}

pub fn write_loads_csv(path: &Path, loads: &[LoadSeries]) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LOADS_HEADER)?;
    for series in loads {
        for i in 0..series.len() {
            w.write_record(&[
                series.transformer_id.clone(),
                series.timestamps[i].format(TS_FORMAT).to_string(),
                series.i_a[i].to_string(),
                series.i_b[i].to_string(),
                series.i_c[i].to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn write_weather_csv(path: &Path, weather: &WeatherSeries) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(WEATHER_HEADER)?;
    for day in &weather.days {
        w.write_record(&[
            weather.site_id.clone(),
            day.date.to_string(),
            day.ambient_true_c.to_string(),
            day.ambient_forecast_c.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_weather_csv(path: &Path) -> Result<WeatherSeries, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    check_header(path, reader.headers()?, &WEATHER_HEADER)?;
    let mut site_id = String::new();
    let mut days = Vec::new();
    let mut row: u64 = 1;
    for record in reader.records() {
        let record = record?;
        row += 1;
        site_id = record.get(0).unwrap_or("").to_string();
        let date: NaiveDate = parse_field(&record, 1, row, "date")?;
        let truth: f64 = parse_field(&record, 2, row, "ambient_true_c")?;
        if !(-30.0..=50.0).contains(&truth) {
            return Err(DatasetError::Row {
                row,
                message: format!("ambient {truth} °C outside plausible range [-30, 50]"),
            });
        }
        let forecast_raw = record.get(3).unwrap_or("").trim();
        let forecast = if forecast_raw.is_empty() {
            None
        } else {
            Some(parse_field::<f64>(&record, 3, row, "ambient_forecast_c")?)
        };
        days.push(WeatherDay {
            date,
            ambient_true_c: truth,
            ambient_forecast_c: forecast,
        });
    }
    days.sort_by_key(|d| d.date);
    Ok(WeatherSeries { site_id, days })
}

pub fn write_meta_csv(path: &Path, metas: &[TransformerMeta]) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(META_HEADER)?;
    for m in metas {
        w.write_record(&[
            m.transformer_id.clone(),
            m.rated_kva.to_string(),
            m.rated_phase_amps.to_string(),
            m.num_customers.to_string(),
            m.thermal.rated_top_oil_rise.to_string(),
            m.thermal.rated_hotspot_rise.to_string(),
            m.thermal.loss_ratio.to_string(),
            m.thermal.oil_exponent.to_string(),
            m.thermal.winding_exponent.to_string(),
            m.thermal.tau_oil_min.to_string(),
            m.thermal.tau_winding_min.to_string(),
        ])?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_meta_csv(path: &Path) -> Result<Vec<TransformerMeta>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    check_header(path, reader.headers()?, &META_HEADER)?;
    let mut out = Vec::new();
    let mut row: u64 = 1;
    for record in reader.records() {
        let record = record?;
        row += 1;
        let meta = TransformerMeta {
            transformer_id: record.get(0).unwrap_or("").to_string(),
            rated_kva: parse_field(&record, 1, row, "rated_kva")?,
            rated_phase_amps: parse_field(&record, 2, row, "rated_phase_amps")?,
            num_customers: parse_field(&record, 3, row, "num_customers")?,
            thermal: ThermalParams {
                rated_top_oil_rise: parse_field(&record, 4, row, "dtheta_to_r")?,
                rated_hotspot_rise: parse_field(&record, 5, row, "dtheta_h_r")?,
                loss_ratio: parse_field(&record, 6, row, "loss_ratio")?,
                oil_exponent: parse_field(&record, 7, row, "n_exp")?,
                winding_exponent: parse_field(&record, 8, row, "m_exp")?,
                tau_oil_min: parse_field(&record, 9, row, "tau_oil_min")?,
                tau_winding_min: parse_field(&record, 10, row, "tau_wind_min")?,
            },
        };
        meta.validate()?;
        out.push(meta);
    }
    out.sort_by(|a, b| a.transformer_id.cmp(&b.transformer_id));
    Ok(out)
}

pub fn write_holidays(path: &Path, holidays: &[NaiveDate]) -> Result<(), DatasetError> {
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    for d in holidays {
        writeln!(f, "{d}").map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

pub fn read_holidays(path: &Path) -> Result<Vec<NaiveDate>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let date: NaiveDate = line.parse().map_err(|_| DatasetError::Row {
            row: i as u64 + 1,
            message: format!("cannot parse holiday date '{line}'"),
        })?;
        out.push(date);
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn split_is_chronological() {
        let start = NaiveDate::from_ymd_opt(2024, 9, 1).unwrap();
        let dates: Vec<_> = (0..183).map(|i| start + Duration::days(i)).collect();
        let spec = SplitSpec {
            train_validation_days: 152,
            holdout_days: 31,
        };
        let (train, holdout) = split_dates(&dates, &spec).unwrap();
        assert_eq!(train.len(), 152);
        assert_eq!(holdout.len(), 31);
        assert!(train.last().unwrap() < holdout.first().unwrap());

        let (train, holdout) = split_dates(
            &dates[..20],
            &SplitSpec {
                train_validation_days: 15,
                holdout_days: 5,
            },
        )
        .unwrap();
        assert_eq!((train.len(), holdout.len()), (15, 5));

        assert!(matches!(
            split_dates(
                &dates[..20],
                &SplitSpec {
                    train_validation_days: 18,
                    holdout_days: 5
                }
            ),
            Err(DatasetError::InsufficientDays { .. })
        ));
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = SynthConfig::default();
        let a = generate_synthetic_fleet(42, 3, 20, &cfg);
        let b = generate_synthetic_fleet(42, 3, 20, &cfg);
        assert_eq!(a, b);
        let c = generate_synthetic_fleet(43, 3, 20, &cfg);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_unbalance_gives_equal_phases() {
        let cfg = SynthConfig {
            unbalance: 0.0,
            ..SynthConfig::default()
        };
        let fleet = generate_synthetic_fleet(7, 2, 16, &cfg);
        for series in &fleet.loads {
            for i in 0..series.len() {
                assert_eq!(series.i_a[i], series.i_b[i]);
                assert_eq!(series.i_b[i], series.i_c[i]);
            }
        }
    }

    #[test]
    fn temperature_coupling_recovered_by_regression() {
        let cfg = SynthConfig::default();
        let fleet = generate_synthetic_fleet(99, 4, 120, &cfg);
        for (meta, series) in fleet.metas.iter().zip(&fleet.loads) {
            let expected_slope = -cfg.temp_coupling_pu_per_c * meta.rated_phase_amps;
            // Regress daily peak current (weekdays only, max over phases and
            // slots) on true ambient.
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (d, day) in fleet.weather.days.iter().enumerate() {
                if day.date.weekday().number_from_monday() >= 6
                    || fleet.holidays.binary_search(&day.date).is_ok()
                {
                    continue;
                }
                let lo = d * 48;
                let peak = (lo..lo + 48)
                    .map(|i| series.i_a[i].max(series.i_b[i]).max(series.i_c[i]))
                    .fold(0.0, f64::max);
                xs.push(day.ambient_true_c);
                ys.push(peak);
            }
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let slope = sxy / sxx;
            assert!(
                (slope - expected_slope).abs() <= 0.10 * expected_slope.abs(),
                "{}: slope {slope} vs expected {expected_slope}",
                meta.transformer_id
            );
        }
    }

    #[test]
    fn generated_meta_is_valid_and_days_complete() {
        let fleet = generate_synthetic_fleet(5, 3, 18, &SynthConfig::default());
        for m in &fleet.metas {
            m.validate().unwrap();
        }
        for s in &fleet.loads {
            assert_eq!(s.complete_days().len(), 18);
        }
        assert_eq!(fleet.weather.days.len(), 18);
    }

    #[test]
    fn loads_roundtrip_and_validation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("loads.csv");
        let fleet = generate_synthetic_fleet(3, 2, 16, &SynthConfig::default());
        write_loads_csv(&path, &fleet.loads).unwrap();
        let back = ingest_loads(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].transformer_id, fleet.loads[0].transformer_id);
        assert_eq!(back[0].len(), fleet.loads[0].len());
        for i in 0..back[0].len() {
            assert_eq!(back[0].i_a[i], fleet.loads[0].i_a[i]);
        }
    }

    #[test]
    fn empty_loads_file_is_empty_collection() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("loads.csv");
        std::fs::write(&path, format!("{}\n", LOADS_HEADER.join(","))).unwrap();
        assert!(ingest_loads(&path).unwrap().is_empty());
    }

    #[test]
    fn duplicated_timestamp_reports_row() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("loads.csv");
        std::fs::write(
            &path,
            format!(
                "{}\n\
                 tx-1,2024-09-01T00:00:00Z,10,10,10\n\
                 tx-1,2024-09-01T00:00:00Z,11,11,11\n",
                LOADS_HEADER.join(",")
            ),
        )
        .unwrap();
        match ingest_loads(&path).unwrap_err() {
            DatasetError::Row { row, message } => {
                assert_eq!(row, 3);
                assert!(message.contains("duplicated"));
            }
            other => panic!("expected row error, got {other}"),
        }
    }

    #[test]
    fn schema_mismatch_and_negative_current_rejected() {
        let dir = tempdir().unwrap();
        let bad_header = dir.path().join("bad.csv");
        std::fs::write(&bad_header, "a,b,c\n").unwrap();
        assert!(matches!(
            ingest_loads(&bad_header),
            Err(DatasetError::Schema { .. })
        ));

        let negative = dir.path().join("neg.csv");
        std::fs::write(
            &negative,
            format!(
                "{}\ntx-1,2024-09-01T00:00:00Z,-5,10,10\n",
                LOADS_HEADER.join(",")
            ),
        )
        .unwrap();
        assert!(matches!(
            ingest_loads(&negative),
            Err(DatasetError::Row { row: 2, .. })
        ));
    }

    #[test]
    fn resamples_finer_cadence_by_rms() {
        let start = NaiveDate::from_ymd_opt(2024, 9, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        // 10-minute cadence: groups of 3 collapse into one half-hour.
        let timestamps: Vec<_> = (0..6).map(|i| start + Duration::minutes(10 * i)).collect();
        let series = LoadSeries {
            transformer_id: "tx-1".into(),
            timestamps,
            i_a: vec![3.0, 4.0, 0.0, 1.0, 1.0, 1.0],
            i_b: vec![1.0; 6],
            i_c: vec![2.0; 6],
        };
        let out = resample_to_half_hourly(series).unwrap();
        assert_eq!(out.len(), 2);
        let expected = ((9.0 + 16.0 + 0.0) / 3.0_f64).sqrt();
        assert!((out.i_a[0] - expected).abs() < 1e-12);
        assert_eq!(out.i_b[1], 1.0);
    }

    #[test]
    fn meta_and_weather_roundtrip() {
        let dir = tempdir().unwrap();
        let fleet = generate_synthetic_fleet(11, 3, 16, &SynthConfig::default());
        let meta_path = dir.path().join("meta.csv");
        write_meta_csv(&meta_path, &fleet.metas).unwrap();
        assert_eq!(read_meta_csv(&meta_path).unwrap(), fleet.metas);

        let weather_path = dir.path().join("weather.csv");
        write_weather_csv(&weather_path, &fleet.weather).unwrap();
        assert_eq!(read_weather_csv(&weather_path).unwrap(), fleet.weather);

        let holidays_path = dir.path().join("holidays.txt");
        write_holidays(&holidays_path, &fleet.holidays).unwrap();
        assert_eq!(read_holidays(&holidays_path).unwrap(), fleet.holidays);
    }

    #[test]
    fn inconsistent_rated_current_rejected() {
        let meta = TransformerMeta {
            transformer_id: "tx-x".into(),
            rated_kva: 500.0,
            rated_phase_amps: 500.0 * AMPS_PER_KVA * 1.05,
            num_customers: 10,
            thermal: ThermalParams::typical_onan(),
        };
        assert!(meta.validate().is_err());
    }
}
