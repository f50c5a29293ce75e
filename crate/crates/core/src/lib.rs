//! Retrieval-augmented lay summarization toolkit.
//!
//! - [`corpus`], JSONL article and passage ingestion
//! - [`textstats`], tokenization and readability metrics
//! - [`rouge`], ROUGE-1/2/L
//! - [`retrieval`], BM25 index, reranking, hit-rate evaluation
//! - [`reward`], Gaussian readability rewards and the composite reward
//! - [`ppo`], PPO over a candidate-selection policy
//! - [`pipeline`], end-to-end run and evaluation report
//! - [`services`] / [`bridge`], model-service traits, mocks and HTTP client

pub mod bridge;
pub mod config;
pub mod corpus;
pub mod pipeline;
pub mod ppo;
pub mod retrieval;
pub mod reward;
pub mod rouge;
pub mod services;
pub mod textstats;
