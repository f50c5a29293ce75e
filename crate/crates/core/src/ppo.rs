//! PPO over a softmax candidate-selection policy.
//!
//! Each [`CandidateSet`] holds pre-generated summary variants for one
//! document, described by feature vectors
//! `[readability component, relevance, length score]`. The policy picks a
//! candidate with probability `softmax(θ · features)`. Training samples one
//! candidate per set from the frozen old policy, scores it with the reward
//! function, and then ascends the ratio objective
//! `mean(min(ratio · A, clip(ratio, 1 - ε, 1 + ε) · A))`
//! for a few epochs. With `ε = 0` the objective is the unclipped
//! `mean(ratio · A)`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reward::{length_score, readability_component, RewardConfig, RewardError};
use crate::rouge::rouge_l;
use crate::textstats::{readability_report, tokenize, FamiliarWords, TextError};

/// `[readability component, relevance, length score]`
pub const FEATURE_DIM: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpoError {
    #[error("dimension mismatch: policy has {expected} weights, features have {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("old-policy probability must be positive (sample {0})")]
    ZeroOldProb(usize),
    #[error("input lengths differ")]
    LengthMismatch,
    #[error("invalid candidate set `{doc_id}`: {reason}")]
    InvalidCandidateSet { doc_id: String, reason: String },
    #[error("invalid PPO config: {0}")]
    InvalidConfig(String),
    #[error("no candidate sets to train on")]
    NoCandidateSets,
    #[error("action {action} out of range for set `{doc_id}`")]
    BadAction { doc_id: String, action: usize },
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Text(#[from] TextError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub doc_id: String,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn validate(&self) -> Result<(), PpoError> {
        let fail = |reason: String| {
            Err(PpoError::InvalidCandidateSet {
                doc_id: self.doc_id.clone(),
                reason,
            })
        };
        if self.candidates.len() < 2 {
            return fail(format!(
                "need at least 2 candidates, got {}",
                self.candidates.len()
            ));
        }
        let dim = self.candidates[0].features.len();
        for (i, c) in self.candidates.iter().enumerate() {
            if c.features.len() != dim {
                return fail(format!(
                    "candidate {i} has {} features, expected {dim}",
                    c.features.len()
                ));
            }
            if let Some(f) = c.features.iter().find(|f| !(0.0..=1.0).contains(*f)) {
                return fail(format!("candidate {i} feature {f} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.candidates.first().map_or(0, |c| c.features.len())
    }
}

/// Policy weights, one per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams(pub Vec<f64>);

impl PolicyParams {
    pub fn zeros(dim: usize) -> Self {
        PolicyParams(vec![0.0; dim])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    None,
    RunningMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub learning_rate: f64,
    pub epochs_per_batch: usize,
    pub batch_size: usize,
    pub iterations: usize,
    pub baseline: Baseline,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_epsilon: 0.2,
            learning_rate: 0.5,
            epochs_per_batch: 4,
            batch_size: 16,
            iterations: 500,
            baseline: Baseline::RunningMean,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::InvalidConfig(m.into()));
        if !(self.clip_epsilon.is_finite() && self.clip_epsilon >= 0.0) {
            return bad("clip_epsilon must be >= 0");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.epochs_per_batch == 0 || self.batch_size == 0 {
            return bad("epochs_per_batch and batch_size must be >= 1");
        }
        Ok(())
    }
}

fn check_dims(params: &PolicyParams, set: &CandidateSet) -> Result<(), PpoError> {
    match set
        .candidates
        .iter()
        .find(|c| c.features.len() != params.0.len())
    {
        Some(c) => Err(PpoError::DimMismatch {
            expected: params.0.len(),
            found: c.features.len(),
        }),
        None => Ok(()),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Softmax over `θ · features` for each candidate.
pub fn policy_distribution(
    params: &PolicyParams,
    set: &CandidateSet,
) -> Result<Vec<f64>, PpoError> {
    check_dims(params, set)?;
    let logits: Vec<f64> = set
        .candidates
        .iter()
        .map(|c| dot(&params.0, &c.features))
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// `∇θ log π(action) = f_action - E_π[f]`.
pub fn log_prob_gradient(
    params: &PolicyParams,
    set: &CandidateSet,
    action: usize,
) -> Result<Vec<f64>, PpoError> {
    let probs = policy_distribution(params, set)?;
    let chosen = set
        .candidates
        .get(action)
        .ok_or_else(|| PpoError::BadAction {
            doc_id: set.doc_id.clone(),
            action,
        })?;
    let mut grad = chosen.features.clone();
    for (p, c) in probs.iter().zip(&set.candidates) {
        for (g, f) in grad.iter_mut().zip(&c.features) {
            *g -= p * f;
        }
    }
    Ok(grad)
}

fn surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        ratio * advantage
    } else {
        (ratio * advantage).min(ratio.clamp(1.0 - eps, 1.0 + eps) * advantage)
    }
}

/// True when the clipped branch is active and the sample contributes no gradient.
fn clipped(ratio: f64, advantage: f64, eps: f64) -> bool {
    eps > 0.0 && ((advantage > 0.0 && ratio > 1.0 + eps) || (advantage < 0.0 && ratio < 1.0 - eps))
}

/// Batch mean of the PPO surrogate. Inputs are per-sample: probability of
/// the taken action under the new and old policies, the reward, and the
/// baseline subtracted to form the advantage.
pub fn ppo_ratio_objective(
    new_probs: &[f64],
    old_probs: &[f64],
    rewards: &[f64],
    baseline: &[f64],
    eps: f64,
) -> Result<f64, PpoError> {
    let n = new_probs.len();
    if old_probs.len() != n || rewards.len() != n || baseline.len() != n || n == 0 {
        return Err(PpoError::LengthMismatch);
    }
    if let Some(i) = old_probs.iter().position(|&p| p.is_nan() || p <= 0.0) {
        return Err(PpoError::ZeroOldProb(i));
    }
    let total: f64 = (0..n)
        .map(|i| surrogate(new_probs[i] / old_probs[i], rewards[i] - baseline[i], eps))
        .sum();
    Ok(total / n as f64)
}

/// One sampled action from the old policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rollout {
    pub set: usize,
    pub action: usize,
    pub old_prob: f64,
    pub reward: f64,
    pub advantage: f64,
}

/// Surrogate objective of `params` on a batch of rollouts.
pub fn objective_value(
    params: &PolicyParams,
    sets: &[CandidateSet],
    batch: &[Rollout],
    eps: f64,
) -> Result<f64, PpoError> {
    let mut total = 0.0;
    for r in batch {
        let p = policy_distribution(params, &sets[r.set])?[r.action];
        total += surrogate(p / r.old_prob, r.advantage, eps);
    }
    Ok(total / batch.len() as f64)
}

/// Analytic gradient of [`objective_value`] with respect to θ.
pub fn objective_gradient(
    params: &PolicyParams,
    sets: &[CandidateSet],
    batch: &[Rollout],
    eps: f64,
) -> Result<Vec<f64>, PpoError> {
    let mut grad = vec![0.0; params.0.len()];
    for r in batch {
        let set = &sets[r.set];
        let p = policy_distribution(params, set)?[r.action];
        let ratio = p / r.old_prob;
        if clipped(ratio, r.advantage, eps) {
            continue;
        }
        let glog = log_prob_gradient(params, set, r.action)?;
        for (g, d) in grad.iter_mut().zip(glog) {
            *g += ratio * r.advantage * d;
        }
    }
    let n = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub mean_reward: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub rows: Vec<TraceRow>,
}

impl TrainTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,mean_reward,objective\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.iteration, r.mean_reward, r.objective);
        }
        out
    }
}

fn sample(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Runs `cfg.iterations` rollout/update rounds starting from θ = 0.
pub fn train<F>(
    sets: &[CandidateSet],
    reward_fn: F,
    cfg: &PpoConfig,
) -> Result<(PolicyParams, TrainTrace), PpoError>
where
    F: Fn(&CandidateSet, usize) -> Result<f64, PpoError> + Sync,
{
    train_from(sets, reward_fn, cfg, None)
}

/// Like [`train`], with an optional initial θ.
pub fn train_from<F>(
    sets: &[CandidateSet],
    reward_fn: F,
    cfg: &PpoConfig,
    init: Option<PolicyParams>,
) -> Result<(PolicyParams, TrainTrace), PpoError>
where
    F: Fn(&CandidateSet, usize) -> Result<f64, PpoError> + Sync,
{
    cfg.validate()?;
    let first = sets.first().ok_or(PpoError::NoCandidateSets)?;
    for s in sets {
        s.validate()?;
    }
    let mut params = init.unwrap_or_else(|| PolicyParams::zeros(first.dim()));
    for s in sets {
        check_dims(&params, s)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reward_sum = 0.0;
    let mut reward_count = 0usize;
    let mut trace = TrainTrace::default();

    for iteration in 0..cfg.iterations {
        let mut draws = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let set = rng.gen_range(0..sets.len());
            let probs = policy_distribution(&params, &sets[set])?;
            let action = sample(&probs, &mut rng);
            draws.push((set, action, probs[action]));
        }
        let rewards = draws
            .par_iter()
            .map(|&(set, action, _)| reward_fn(&sets[set], action))
            .collect::<Result<Vec<f64>, PpoError>>()?;

        reward_sum += rewards.iter().sum::<f64>();
        reward_count += rewards.len();
        let baseline = match cfg.baseline {
            Baseline::None => 0.0,
            Baseline::RunningMean => reward_sum / reward_count as f64,
        };
        let batch: Vec<Rollout> = draws
            .iter()
            .zip(&rewards)
            .map(|(&(set, action, old_prob), &reward)| Rollout {
                set,
                action,
                old_prob,
                reward,
                advantage: reward - baseline,
            })
            .collect();

        for _ in 0..cfg.epochs_per_batch {
            let grad = objective_gradient(&params, sets, &batch, cfg.clip_epsilon)?;
            for (t, g) in params.0.iter_mut().zip(grad) {
                *t += cfg.learning_rate * g;
            }
        }
        trace.rows.push(TraceRow {
            iteration,
            mean_reward: rewards.iter().sum::<f64>() / rewards.len() as f64,
            objective: objective_value(&params, sets, &batch, cfg.clip_epsilon)?,
        });
    }
    Ok((params, trace))
}

/// Reward as the configured weighted sum of a candidate's features.
pub fn feature_reward(
    cfg: &RewardConfig,
) -> impl Fn(&CandidateSet, usize) -> Result<f64, PpoError> + Sync {
    let weights = cfg.weights();
    move |set: &CandidateSet, action: usize| {
        let c = set
            .candidates
            .get(action)
            .ok_or_else(|| PpoError::BadAction {
                doc_id: set.doc_id.clone(),
                action,
            })?;
        if c.features.len() != FEATURE_DIM {
            return Err(PpoError::DimMismatch {
                expected: FEATURE_DIM,
                found: c.features.len(),
            });
        }
        Ok(dot(&weights, &c.features))
    }
}

/// Fraction of keyphrases that occur as contiguous token runs in `text`.
/// Returns 0 when there are no keyphrases.
pub fn keyphrase_coverage(text: &str, keyphrases: &[String]) -> f64 {
    let tokens = tokenize(text);
    let phrases: Vec<Vec<String>> = keyphrases
        .iter()
        .map(|k| tokenize(k))
        .filter(|k| !k.is_empty())
        .collect();
    if phrases.is_empty() {
        return 0.0;
    }
    let found = phrases
        .iter()
        .filter(|p| tokens.windows(p.len()).any(|w| w == p.as_slice()))
        .count();
    found as f64 / phrases.len() as f64
}

/// Computes feature vectors for summary variants of one document.
///
/// Relevance is ROUGE-L F1 against `reference` when one is given, otherwise
/// keyphrase coverage.
pub fn build_candidate_set(
    doc_id: &str,
    texts: &[String],
    reference: Option<&str>,
    keyphrases: &[String],
    familiar: &FamiliarWords,
    cfg: &RewardConfig,
) -> Result<CandidateSet, PpoError> {
    let reference_tokens = reference.map(tokenize).filter(|r| !r.is_empty());
    let candidates = texts
        .iter()
        .map(|text| {
            let report = readability_report(text, familiar)?;
            let words = tokenize(text);
            let relevance = match &reference_tokens {
                Some(r) => rouge_l(&words, r).map(|s| s.f1).unwrap_or(0.0),
                None => keyphrase_coverage(text, keyphrases),
            };
            Ok(Candidate {
                text: text.clone(),
                features: vec![
                    readability_component(cfg.readability_of(&report), cfg),
                    relevance,
                    length_score(words.len(), cfg)?,
                ],
            })
        })
        .collect::<Result<Vec<_>, PpoError>>()?;
    let set = CandidateSet {
        doc_id: doc_id.to_string(),
        candidates,
    };
    set.validate()?;
    Ok(set)
}
