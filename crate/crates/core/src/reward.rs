//! Readability rewards and the weighted composite reward.
//!
//! Two readability rewards are provided. [`eq2_reward`] is the deviation
//! penalty `1 - exp(-(r - r*)^2 / 2σ^2)`, which is 0 at the target.
//! [`normalized_readability`] is the Gaussian density rescaled to peak 1 at
//! the target; it is the complement of the former and is the default
//! readability component of [`composite_reward`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textstats::ReadabilityReport;

pub const DEFAULT_LENGTH_TARGET: f64 = 200.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("relevance must lie in [0, 1], got {0}")]
    RelevanceOutOfRange(f64),
    #[error("word count must be at least 1")]
    ZeroLength,
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Readability component is the deviation penalty, 0 at the target.
    Eq2Literal,
    /// Readability component is the normalized Gaussian, 1 at the target.
    GaussianNormalized,
}

/// Which readability score feeds the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMetric {
    Fre,
    Fkgl,
}

/// Unvalidated reward settings as they appear in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSettings {
    #[serde(rename = "target_fre")]
    pub target_readability: f64,
    pub sigma: f64,
    pub w_r: f64,
    pub w_b: f64,
    pub w_l: f64,
    /// Target summary length in words; `None` means "derive from data".
    pub length_target: Option<f64>,
    pub length_sigma: f64,
    pub mode: RewardMode,
    pub metric: RewardMetric,
}

impl Default for RewardSettings {
    fn default() -> Self {
        RewardSettings {
            target_readability: 60.0,
            sigma: 10.0,
            w_r: 0.5,
            w_b: 0.3,
            w_l: 0.2,
            length_target: None,
            length_sigma: 0.25,
            mode: RewardMode::GaussianNormalized,
            metric: RewardMetric::Fre,
        }
    }
}

/// Validated reward configuration: positive widths, non-negative weights
/// summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RewardSettings", into = "RewardSettings")]
pub struct RewardConfig {
    target: f64,
    sigma: f64,
    weights: [f64; 3],
    length_target: f64,
    length_sigma: f64,
    mode: RewardMode,
    metric: RewardMetric,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig::new(RewardSettings::default()).expect("defaults are valid")
    }
}

impl TryFrom<RewardSettings> for RewardConfig {
    type Error = RewardError;

    fn try_from(s: RewardSettings) -> Result<Self, Self::Error> {
        RewardConfig::new(s)
    }
}

impl From<RewardConfig> for RewardSettings {
    fn from(c: RewardConfig) -> Self {
        c.settings()
    }
}

impl RewardConfig {
    pub fn new(s: RewardSettings) -> Result<Self, RewardError> {
        let bad = |msg: String| Err(RewardError::InvalidConfig(msg));
        if !s.target_readability.is_finite() {
            return bad("target_fre must be finite".into());
        }
        if !(s.sigma.is_finite() && s.sigma > 0.0) {
            return Err(RewardError::NonPositiveSigma(s.sigma));
        }
        let weights = [s.w_r, s.w_b, s.w_l];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return bad(format!("weights must be finite and >= 0, got {weights:?}"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("weights must sum to 1, got {sum}"));
        }
        let length_target = s.length_target.unwrap_or(DEFAULT_LENGTH_TARGET);
        if !(length_target.is_finite() && length_target > 0.0) {
            return bad(format!("length_target must be > 0, got {length_target}"));
        }
        if !(s.length_sigma.is_finite() && s.length_sigma > 0.0) {
            return bad(format!("length_sigma must be > 0, got {}", s.length_sigma));
        }
        Ok(RewardConfig {
            target: s.target_readability,
            sigma: s.sigma,
            weights,
            length_target,
            length_sigma: s.length_sigma,
            mode: s.mode,
            metric: s.metric,
        })
    }

    pub fn settings(&self) -> RewardSettings {
        RewardSettings {
            target_readability: self.target,
            sigma: self.sigma,
            w_r: self.weights[0],
            w_b: self.weights[1],
            w_l: self.weights[2],
            length_target: Some(self.length_target),
            length_sigma: self.length_sigma,
            mode: self.mode,
            metric: self.metric,
        }
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `[w_r, w_b, w_l]`
    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn length_target(&self) -> f64 {
        self.length_target
    }

    pub fn length_sigma(&self) -> f64 {
        self.length_sigma
    }

    pub fn mode(&self) -> RewardMode {
        self.mode
    }

    pub fn metric(&self) -> RewardMetric {
        self.metric
    }

    /// Picks the configured readability score out of a report.
    pub fn readability_of(&self, report: &ReadabilityReport) -> f64 {
        match self.metric {
            RewardMetric::Fre => report.fre,
            RewardMetric::Fkgl => report.fkgl,
        }
    }
}

/// Normal density with the given mean and standard deviation.
pub fn gaussian_pdf(value: f64, mean: f64, sigma: f64) -> Result<f64, RewardError> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(RewardError::NonPositiveSigma(sigma));
    }
    let z = value - mean;
    Ok((-(z * z) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt()))
}

fn gaussian_kernel(deviation: f64, sigma: f64) -> f64 {
    (-(deviation * deviation) / (2.0 * sigma * sigma)).exp()
}

/// `1 - exp(-(r - r*)^2 / 2σ^2)`: 0 at the target, approaching 1 with distance.
pub fn eq2_reward(readability: f64, cfg: &RewardConfig) -> f64 {
    1.0 - gaussian_kernel(readability - cfg.target, cfg.sigma)
}

/// Gaussian density rescaled to 1 at the target.
pub fn normalized_readability(readability: f64, cfg: &RewardConfig) -> f64 {
    gaussian_kernel(readability - cfg.target, cfg.sigma)
}

/// Readability component according to the configured mode.
pub fn readability_component(readability: f64, cfg: &RewardConfig) -> f64 {
    match cfg.mode {
        RewardMode::Eq2Literal => eq2_reward(readability, cfg),
        RewardMode::GaussianNormalized => normalized_readability(readability, cfg),
    }
}

/// Gaussian over the ratio of `word_count` to the length target.
pub fn length_score(word_count: usize, cfg: &RewardConfig) -> Result<f64, RewardError> {
    if word_count == 0 {
        return Err(RewardError::ZeroLength);
    }
    let ratio = word_count as f64 / cfg.length_target;
    Ok(gaussian_kernel(ratio - 1.0, cfg.length_sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub readability_component: f64,
    pub relevance_component: f64,
    pub length_component: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// Weighted sum of already-computed components.
    pub fn from_components(
        readability: f64,
        relevance: f64,
        length: f64,
        cfg: &RewardConfig,
    ) -> Result<Self, RewardError> {
        if !(0.0..=1.0).contains(&relevance) {
            return Err(RewardError::RelevanceOutOfRange(relevance));
        }
        let [w_r, w_b, w_l] = cfg.weights;
        Ok(RewardBreakdown {
            readability_component: readability,
            relevance_component: relevance,
            length_component: length,
            total: w_r * readability + w_b * relevance + w_l * length,
        })
    }
}

/// `w_r · readability + w_b · relevance + w_l · length`.
pub fn composite_reward(
    readability: f64,
    relevance: f64,
    word_count: usize,
    cfg: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    RewardBreakdown::from_components(
        readability_component(readability, cfg),
        relevance,
        length_score(word_count, cfg)?,
        cfg,
    )
}
