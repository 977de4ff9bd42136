//! Consensus-draft speculative decoding for multi-sample inference.
//!
//! When a language model samples many reasoning paths in parallel (for
//! majority voting or Best-of-N), the paths keep re-deriving each other's
//! token subsequences. This crate turns that redundancy into speculative
//! drafts: an incremental suffix index finds windows of sibling paths that
//! (fuzzily) match a path's recent tokens, the continuations behind those
//! windows form a candidate pool, a layered weighted DAG merges the
//! candidates and a greedy walk extracts the highest-consensus continuation,
//! which is then verified token-by-token against the model's own conditional
//! distribution. Verification accepts exactly the sampled tokens, so output
//! sequences are bit-identical to plain sampling — drafting only changes how
//! many positions one step can confirm.
//!
//! The crate ships a seeded simulated model ([`model::SimModel`]) and a
//! benchmark harness ([`bench`]) so the accept-length behavior of the engine
//! is measurable at desk scale, plus the `chorus` CLI over both.

pub mod bench;
pub mod config;
pub mod detmath;
pub mod engine;
pub mod graph;
pub mod model;
pub mod pool;
pub mod rng;

pub use config::{ConfigError, EngineConfig, PathState, PoolStructure, TokenId, TokenRecord};
pub use engine::{
    Session, SessionTrace, StepRecord, VerificationResult, best_of_n, majority_vote, run_session,
    run_vanilla,
};
pub use graph::{ConsensusGraph, DraftSequence, build_graph, build_list, build_tree};
pub use model::{Distribution, ModelOracle, SimModel, SimModelSpec};
pub use pool::{CandidateContinuation, DraftPool, MatchHit};
pub use rng::RngStream;
