//! Session orchestration: the multi-sample speculative decoding loop, its
//! vanilla baseline, and the answer aggregators.
//!
//! A session holds `num_paths` reasoning paths, each with its own counter
//! substream derived from `(rng_seed, path_id)`. Paths step round-robin; in
//! one step a path harvests candidates from the pool with its `suffix_len`
//! suffix, builds the configured structure, extracts one draft, verifies it
//! against the model, and appends everything emitted. Any failure to draft
//! (short path, empty pool, drafting disabled) degrades to sampling exactly
//! one token, so every step advances the path.
//!
//! Verification samples the model's true conditional at each position and
//! accepts the longest prefix of the draft that matches the sampled tokens.
//! Accepted tokens therefore *are* the sampled tokens, and because each
//! emitted position consumes exactly one variate of the path's stream, a
//! drafted session reproduces the vanilla token sequences bit for bit — the
//! lossless-equivalence property the tests pin down.
//!
//! Pool visibility follows a phase barrier: queries within a round see the
//! pool as of the round's start, and all appends land at the round's end, so
//! traces do not depend on intra-round scheduling.

use crate::config::{ConfigError, EngineConfig, PathState, PoolStructure, TokenId, TokenRecord};
use crate::graph::extract_with;
use crate::model::ModelOracle;
use crate::pool::DraftPool;
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::hash::Hash;
use std::io::{self, BufRead, Write};
use std::time::Instant;
use thiserror::Error;

/// Outcome of verifying one draft.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationResult {
    /// Length of the accepted draft prefix.
    pub accepted_len: usize,
    /// Everything appended this step: the accepted tokens plus one
    /// correction/continuation token, unless an accepted EOS cut the step.
    pub emitted: Vec<TokenRecord>,
}

/// Verify `draft` against the model from `prefix`.
///
/// Position by position: sample the conditional (one variate each); while the
/// sampled token equals the draft token, accept and continue. The first
/// mismatch is emitted as the correction and ends the step; a fully matched
/// draft earns one extra sampled token. Any emitted EOS ends the step at once.
pub fn verify_draft(
    model: &dyn ModelOracle,
    prompt_context: u64,
    prefix: &[TokenId],
    draft: &[TokenId],
    temperature: f64,
    rng: &mut RngStream,
    eos: Option<TokenId>,
) -> VerificationResult {
    let mut ctx = prefix.to_vec();
    let mut emitted = Vec::with_capacity(draft.len() + 1);
    let mut accepted_len = 0;
    for position in 0..=draft.len() {
        let dist = model
            .conditional(prompt_context, &ctx, temperature)
            .expect("session prefixes stay within the model vocabulary");
        let token = dist.sample(rng);
        emitted.push(TokenRecord::new(token, dist.prob(token)));
        ctx.push(token);
        let hit_eos = eos == Some(token);
        if position < draft.len() && token == draft[position] {
            accepted_len += 1;
            if hit_eos {
                break;
            }
        } else {
            // correction token (mismatch) or bonus token (fully accepted)
            break;
        }
    }
    VerificationResult {
        accepted_len,
        emitted,
    }
}

/// One engine step as recorded in the trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepRecord {
    pub path_id: u32,
    /// Length of the draft proposed to verification (0 for vanilla steps).
    pub draft_len: u32,
    /// Accepted draft prefix length.
    pub accepted: u32,
    /// Tokens appended this step.
    pub emitted: u32,
    /// Whether this step ran the draft-construction stage at all.
    pub drafted: bool,
    /// Wall time of pool query + structure build + extraction, nanoseconds.
    /// Measurement metadata: excluded from outcome comparisons.
    pub draft_build_ns: u64,
    /// Tokens indexed across all paths when this step queried.
    pub pool_tokens: u64,
}

impl StepRecord {
    fn same_outcome(&self, other: &StepRecord) -> bool {
        self.path_id == other.path_id
            && self.draft_len == other.draft_len
            && self.accepted == other.accepted
            && self.emitted == other.emitted
            && self.drafted == other.drafted
            && self.pool_tokens == other.pool_tokens
    }
}

/// Session-level fields echoed into the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub num_paths: u32,
    pub max_seq_len: usize,
    pub structure: PoolStructure,
    pub fuzzy: bool,
    pub rng_seed: u64,
    pub drafting: bool,
}

/// Complete record of one session: per-step records, final paths, aggregate
/// answer.
#[derive(Debug, Clone)]
pub struct SessionTrace {
    pub meta: TraceMeta,
    pub steps: Vec<StepRecord>,
    pub paths: Vec<PathState>,
    pub answer: Option<TokenId>,
}

impl SessionTrace {
    /// Mean accepted draft length per step; vanilla fallbacks count as 0.
    pub fn mean_accept_len(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.accepted as f64).sum::<f64>() / self.steps.len() as f64
    }

    pub fn tokens_per_step(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.emitted as f64).sum::<f64>() / self.steps.len() as f64
    }

    /// Mean draft-construction time over steps that ran construction, in
    /// microseconds.
    pub fn mean_draft_us(&self) -> f64 {
        let drafted: Vec<&StepRecord> = self.steps.iter().filter(|s| s.drafted).collect();
        if drafted.is_empty() {
            return 0.0;
        }
        drafted.iter().map(|s| s.draft_build_ns as f64).sum::<f64>()
            / drafted.len() as f64
            / 1_000.0
    }

    pub fn total_tokens(&self) -> usize {
        self.paths.iter().map(PathState::len).sum()
    }

    pub fn path_tokens(&self, path: usize) -> Vec<TokenId> {
        self.paths[path].tokens()
    }

    /// Deterministic-outcome equality: everything except wall-clock fields.
    pub fn same_outcome(&self, other: &SessionTrace) -> bool {
        self.meta == other.meta
            && self.answer == other.answer
            && self.steps.len() == other.steps.len()
            && self
                .steps
                .iter()
                .zip(&other.steps)
                .all(|(a, b)| a.same_outcome(b))
            && self.paths.len() == other.paths.len()
            && self
                .paths
                .iter()
                .zip(&other.paths)
                .all(|(a, b)| a.records() == b.records() && a.is_finished() == b.is_finished())
    }
}

/// Answer label of a path: its last non-EOS token.
pub fn path_answer(path: &PathState, eos: Option<TokenId>) -> Option<TokenId> {
    path.records()
        .iter()
        .rev()
        .map(|r| r.token)
        .find(|t| Some(*t) != eos)
}

/// Majority vote: the label with the highest count, ties broken by first
/// occurrence order. `None` only for empty input.
pub fn majority_vote<T: Eq + Hash>(answers: &[T]) -> Option<&T> {
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for a in answers {
        *counts.entry(a).or_default() += 1;
    }
    let mut best: Option<(&T, usize)> = None;
    let mut seen: HashMap<&T, ()> = HashMap::new();
    for a in answers {
        if seen.insert(a, ()).is_some() {
            continue;
        }
        let count = counts[a];
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((a, count));
        }
    }
    best.map(|(a, _)| a)
}

/// Best-of-N: the highest-scoring answer, ties broken by first occurrence.
pub fn best_of_n<T, F>(answers: &[T], mut scorer: F) -> Option<&T>
where
    F: FnMut(&T) -> f64,
{
    let mut best: Option<(&T, f64)> = None;
    for a in answers {
        let score = scorer(a);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((a, score));
        }
    }
    best.map(|(a, _)| a)
}

/// A live decoding session. Most callers use [`run_session`] /
/// [`run_vanilla`]; stepping manually is for tests and instrumentation.
pub struct Session<'m> {
    cfg: EngineConfig,
    model: &'m dyn ModelOracle,
    prompt_context: u64,
    drafting: bool,
    eos: Option<TokenId>,
    paths: Vec<PathState>,
    streams: Vec<RngStream>,
    pool: DraftPool,
    staged_appends: Vec<(u32, TokenRecord)>,
    steps: Vec<StepRecord>,
    dump_sink: Option<DumpSink<'m>>,
}

/// Callback receiving `(path_id, dump)` for every drafting step.
type DumpSink<'m> = Box<dyn FnMut(u32, &str) + 'm>;

impl<'m> Session<'m> {
    pub fn new(
        cfg: EngineConfig,
        model: &'m dyn ModelOracle,
        prompt_context: u64,
        drafting: bool,
    ) -> Result<Self, ConfigError> {
        let cfg = cfg.validated()?;
        let tolerance = if cfg.fuzzy { cfg.edit_tolerance } else { 0 };
        let pool = DraftPool::new(cfg.num_paths, cfg.suffix_len, tolerance, cfg.max_draft_len);
        let paths = (0..cfg.num_paths).map(PathState::new).collect();
        let streams = (0..cfg.num_paths)
            .map(|p| RngStream::new(cfg.rng_seed, p as u64))
            .collect();
        Ok(Session {
            eos: model.eos_token(),
            cfg,
            model,
            prompt_context,
            drafting,
            paths,
            streams,
            pool,
            staged_appends: Vec::new(),
            steps: Vec::new(),
            dump_sink: None,
        })
    }

    /// Receive the consensus-graph debug dump of every drafting step.
    pub fn set_dump_sink(&mut self, sink: impl FnMut(u32, &str) + 'm) {
        self.dump_sink = Some(Box::new(sink));
    }

    pub fn paths(&self) -> &[PathState] {
        &self.paths
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn is_finished(&self) -> bool {
        self.paths.iter().all(PathState::is_finished)
    }

    /// Advance one unfinished path by one step. Pool appends are staged until
    /// [`flush_round`](Self::flush_round) so queries see the round-start pool.
    pub fn step_path(&mut self, path_id: u32) -> StepRecord {
        let idx = path_id as usize;
        assert!(!self.paths[idx].is_finished(), "step on a finished path");

        // Draft construction: query + build + extract, timed as a unit.
        let remaining = self.cfg.max_seq_len - self.paths[idx].len();
        let mut draft: Vec<TokenId> = Vec::new();
        let mut drafted = false;
        let mut build_ns = 0u64;
        let pool_tokens = self.pool.total_tokens() as u64;
        if self.drafting
            && remaining > 1
            && let Some(suffix) = self.paths[idx].suffix(self.cfg.suffix_len)
        {
            drafted = true;
            let started = Instant::now();
            let candidates = self.pool.query(&suffix, path_id);
            let mut dump = None;
            if !candidates.is_empty() {
                let (sequence, d) = extract_with(
                    self.cfg.pool_structure,
                    &candidates,
                    self.cfg.alpha,
                    self.cfg.max_draft_len,
                    self.dump_sink.is_some(),
                )
                .expect("candidate set is nonempty");
                draft = sequence.tokens;
                dump = d;
            }
            build_ns = started.elapsed().as_nanos() as u64;
            // a draft longer than what fits under the cap (plus the
            // mandatory advance token) is never proposed
            draft.truncate(remaining - 1);
            if let (Some(sink), Some(text)) = (self.dump_sink.as_mut(), dump) {
                sink(path_id, &text);
            }
        }

        let prefix = self.paths[idx].tokens();
        let result = verify_draft(
            self.model,
            self.prompt_context,
            &prefix,
            &draft,
            self.cfg.temperature,
            &mut self.streams[idx],
            self.eos,
        );

        debug_assert!(!result.emitted.is_empty(), "every step advances the path");
        debug_assert!(result.accepted_len <= draft.len());
        debug_assert!(draft.len() <= self.cfg.max_draft_len);

        let mut finished = false;
        for record in &result.emitted {
            self.paths[idx].append(*record);
            self.staged_appends.push((path_id, *record));
            if Some(record.token) == self.eos {
                finished = true;
            }
        }
        if finished || self.paths[idx].len() >= self.cfg.max_seq_len {
            self.paths[idx].finish();
        }

        let record = StepRecord {
            path_id,
            draft_len: draft.len() as u32,
            accepted: result.accepted_len as u32,
            emitted: result.emitted.len() as u32,
            drafted,
            draft_build_ns: build_ns,
            pool_tokens,
        };
        self.steps.push(record);
        record
    }

    /// Apply the round's staged pool appends.
    pub fn flush_round(&mut self) {
        for (path, record) in std::mem::take(&mut self.staged_appends) {
            self.pool.append(path, record);
        }
    }

    /// Step every unfinished path once, then flush. Returns `false` once all
    /// paths are finished.
    pub fn round(&mut self) -> bool {
        let pending: Vec<u32> = self
            .paths
            .iter()
            .filter(|p| !p.is_finished())
            .map(PathState::path_id)
            .collect();
        for path_id in pending {
            self.step_path(path_id);
        }
        self.flush_round();
        !self.is_finished()
    }

    /// Run to completion.
    pub fn run(mut self) -> SessionTrace {
        while self.round() {}
        let answers: Vec<TokenId> = self
            .paths
            .iter()
            .filter_map(|p| path_answer(p, self.eos))
            .collect();
        let answer = majority_vote(&answers).copied();
        SessionTrace {
            meta: TraceMeta {
                num_paths: self.cfg.num_paths,
                max_seq_len: self.cfg.max_seq_len,
                structure: self.cfg.pool_structure,
                fuzzy: self.cfg.fuzzy,
                rng_seed: self.cfg.rng_seed,
                drafting: self.drafting,
            },
            steps: self.steps,
            paths: self.paths,
            answer,
        }
    }
}

/// Run a full consensus-drafted session.
pub fn run_session(
    cfg: &EngineConfig,
    model: &dyn ModelOracle,
    prompt_context: u64,
) -> Result<SessionTrace, ConfigError> {
    Ok(Session::new(cfg.clone(), model, prompt_context, true)?.run())
}

/// Run the one-token-per-step baseline. Consumes variates in the same
/// per-position order as verification, so its token sequences match
/// [`run_session`] under the same seed.
pub fn run_vanilla(
    cfg: &EngineConfig,
    model: &dyn ModelOracle,
    prompt_context: u64,
) -> Result<SessionTrace, ConfigError> {
    Ok(Session::new(cfg.clone(), model, prompt_context, false)?.run())
}

// ---------------------------------------------------------------------------
// Trace serialization: line-delimited JSON
// ---------------------------------------------------------------------------

/// One line of the trace stream. A trace is a `meta` line, then `step` lines
/// in execution order, then one `path` line per path, then a `final` line.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TraceLine {
    Meta(TraceMeta),
    Step(StepRecord),
    Path {
        path: u32,
        tokens: Vec<u32>,
        probs: Vec<f64>,
        finished: bool,
    },
    Final {
        answer: Option<u32>,
    },
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace io: {0}")]
    Io(#[from] io::Error),
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace is missing its `{0}` line")]
    Missing(&'static str),
}

impl SessionTrace {
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<(), TraceError> {
        let mut emit = |line: &TraceLine| -> Result<(), TraceError> {
            serde_json::to_writer(&mut w, line)
                .map_err(|e| TraceError::Json { line: 0, source: e })?;
            w.write_all(b"\n")?;
            Ok(())
        };
        emit(&TraceLine::Meta(self.meta.clone()))?;
        for step in &self.steps {
            emit(&TraceLine::Step(*step))?;
        }
        for path in &self.paths {
            emit(&TraceLine::Path {
                path: path.path_id(),
                tokens: path.records().iter().map(|r| r.token.0).collect(),
                probs: path.records().iter().map(|r| r.prob).collect(),
                finished: path.is_finished(),
            })?;
        }
        emit(&TraceLine::Final {
            answer: self.answer.map(|t| t.0),
        })
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<SessionTrace, TraceError> {
        let mut meta = None;
        let mut steps = Vec::new();
        let mut paths = Vec::new();
        let mut answer = None;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine = serde_json::from_str(&line).map_err(|e| TraceError::Json {
                line: idx + 1,
                source: e,
            })?;
            match parsed {
                TraceLine::Meta(m) => meta = Some(m),
                TraceLine::Step(s) => steps.push(s),
                TraceLine::Path {
                    path,
                    tokens,
                    probs,
                    finished,
                } => {
                    let records = tokens
                        .into_iter()
                        .zip(probs)
                        .map(|(t, p)| TokenRecord::new(TokenId(t), p))
                        .collect();
                    paths.push(PathState::from_parts(path, records, finished));
                }
                TraceLine::Final { answer: a } => answer = a.map(TokenId),
            }
        }
        Ok(SessionTrace {
            meta: meta.ok_or(TraceError::Missing("meta"))?,
            steps,
            paths,
            answer,
        })
    }
}
