//! Risk-based dynamic thermal rating (DTR) for distribution transformers.
//!
//! The crate covers the full pipeline: a two-step equivalent-load hotspot
//! model ([`thermal`]), the relay's dual-time-constant thermal element
//! ([`relay`]), retrospective optimal scale-factor labelling ([`labeler`]),
//! fleet data ingestion and synthesis ([`dataset`]), feature engineering
//! ([`features`]), transformer clustering ([`clustering`]), gradient-boosted
//! quantile forecasting of scale factors ([`forecaster`]), the load-based
//! multi-stage counterfactual ([`multistage`]), and calibration/capacity/risk
//! metrics ([`evaluation`]). [`pipeline`] wires the stages together behind a
//! single [`config::Config`].

pub mod clustering;
pub mod config;
pub mod dataset;
pub mod evaluation;
pub mod features;
pub mod forecaster;
pub mod labeler;
pub mod multistage;
pub mod pipeline;
pub mod relay;
pub mod solve;
pub mod thermal;
