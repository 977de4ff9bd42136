//! Shared domain types and engine configuration.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

/// Index into a fixed model vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One generated token plus the probability it was emitted with — the
/// model's post-temperature probability of the token given its prefix,
/// recorded at emission time. Always in `(0, 1]`: a sampled token has mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenRecord {
    pub token: TokenId,
    pub prob: f64,
}

impl TokenRecord {
    pub fn new(token: TokenId, prob: f64) -> Self {
        debug_assert!(prob > 0.0 && prob <= 1.0, "token probability out of (0, 1]");
        TokenRecord { token, prob }
    }
}

/// One reasoning path: an append-only token sequence plus a finished flag.
/// Records never shrink, and a finished path rejects further appends.
#[derive(Debug, Clone)]
pub struct PathState {
    path_id: u32,
    records: Vec<TokenRecord>,
    finished: bool,
}

impl PathState {
    pub fn new(path_id: u32) -> Self {
        PathState {
            path_id,
            records: Vec::new(),
            finished: false,
        }
    }

    pub fn from_parts(path_id: u32, records: Vec<TokenRecord>, finished: bool) -> Self {
        PathState {
            path_id,
            records,
            finished,
        }
    }

    pub fn path_id(&self) -> u32 {
        self.path_id
    }

    pub fn records(&self) -> &[TokenRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn append(&mut self, record: TokenRecord) {
        assert!(!self.finished, "append to a finished path");
        self.records.push(record);
    }

    pub fn finish(&mut self) {
        self.finished = true;
    }

    pub fn tokens(&self) -> Vec<TokenId> {
        self.records.iter().map(|r| r.token).collect()
    }

    /// Last `k` tokens, or `None` while the path is still shorter than `k`.
    pub fn suffix(&self, k: usize) -> Option<Vec<TokenId>> {
        if self.records.len() < k {
            return None;
        }
        Some(
            self.records[self.records.len() - k..]
                .iter()
                .map(|r| r.token)
                .collect(),
        )
    }
}

/// Shape of the per-step draft structure (the structure ablation axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolStructure {
    Dag,
    Tree,
    List,
}

impl fmt::Display for PoolStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PoolStructure::Dag => "dag",
            PoolStructure::Tree => "tree",
            PoolStructure::List => "list",
        };
        f.write_str(s)
    }
}

impl FromStr for PoolStructure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dag" => Ok(PoolStructure::Dag),
            "tree" => Ok(PoolStructure::Tree),
            "list" => Ok(PoolStructure::List),
            other => Err(format!(
                "unknown structure `{other}` (expected dag, tree or list)"
            )),
        }
    }
}

/// Engine knobs for one decoding session.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Number of parallel reasoning paths. Consensus needs at least two.
    pub num_paths: u32,
    /// Length of the suffix used as the match query.
    pub suffix_len: usize,
    /// Maximum draft length proposed per step.
    pub max_draft_len: usize,
    /// Edit-distance tolerance for fuzzy window matching (in tokens).
    pub edit_tolerance: usize,
    /// Blend between probability mass and witness frequency in edge weights.
    pub alpha: f64,
    /// Sampling temperature.
    pub temperature: f64,
    /// Hard cap on generated tokens per path.
    pub max_seq_len: usize,
    /// Master seed; each path derives its own substream from it.
    pub rng_seed: u64,
    pub pool_structure: PoolStructure,
    /// When false, matching is exact regardless of `edit_tolerance`.
    pub fuzzy: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            num_paths: 8,
            suffix_len: 4,
            max_draft_len: 6,
            edit_tolerance: 1,
            alpha: 1.0,
            temperature: 0.8,
            max_seq_len: 256,
            rng_seed: 42,
            pool_structure: PoolStructure::Dag,
            fuzzy: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn field(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Field {
            field,
            reason: reason.into(),
        }
    }

    /// Name of the violated field, when this is a field error.
    pub fn field_name(&self) -> Option<&'static str> {
        match self {
            ConfigError::Field { field, .. } => Some(field),
            _ => None,
        }
    }
}

impl EngineConfig {
    /// Check every invariant, returning the config unchanged when they hold.
    pub fn validated(self) -> Result<Self, ConfigError> {
        if self.num_paths < 2 {
            return Err(ConfigError::field(
                "num_paths",
                "consensus needs at least 2 paths",
            ));
        }
        if self.suffix_len < 1 {
            return Err(ConfigError::field("suffix_len", "must be at least 1"));
        }
        if self.max_draft_len < 1 {
            return Err(ConfigError::field("max_draft_len", "must be at least 1"));
        }
        if !(self.alpha >= 0.0 && self.alpha <= 1.0) {
            return Err(ConfigError::field(
                "alpha",
                format!("{} is outside [0, 1]", self.alpha),
            ));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(ConfigError::field(
                "temperature",
                format!("{} is not a positive finite real", self.temperature),
            ));
        }
        if self.max_seq_len < 1 {
            return Err(ConfigError::field("max_seq_len", "must be at least 1"));
        }
        Ok(self)
    }

    /// Apply one `key = value` pair from the flat config grammar.
    /// Returns `false` when the key is not an engine key.
    pub fn apply_kv(&mut self, key: &str, value: &str, line: usize) -> Result<bool, ConfigError> {
        fn parse<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            value.parse().map_err(|e| ConfigError::Parse {
                line,
                message: format!("bad value `{value}` for `{key}`: {e}"),
            })
        }

        match key {
            "num_paths" => self.num_paths = parse(key, value, line)?,
            "suffix_len" => self.suffix_len = parse(key, value, line)?,
            "max_draft_len" => self.max_draft_len = parse(key, value, line)?,
            "edit_tolerance" => self.edit_tolerance = parse(key, value, line)?,
            "alpha" => self.alpha = parse(key, value, line)?,
            "temperature" => self.temperature = parse(key, value, line)?,
            "max_seq_len" => self.max_seq_len = parse(key, value, line)?,
            "rng_seed" => self.rng_seed = parse(key, value, line)?,
            "pool_structure" => self.pool_structure = parse(key, value, line)?,
            "fuzzy" => self.fuzzy = parse(key, value, line)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Serialize to the flat `key = value` grammar. Re-parsing the output
    /// reproduces the config exactly (floats round-trip via shortest repr).
    pub fn to_kv_string(&self) -> String {
        format!(
            "num_paths = {}\nsuffix_len = {}\nmax_draft_len = {}\nedit_tolerance = {}\n\
             alpha = {}\ntemperature = {}\nmax_seq_len = {}\nrng_seed = {}\n\
             pool_structure = {}\nfuzzy = {}\n",
            self.num_paths,
            self.suffix_len,
            self.max_draft_len,
            self.edit_tolerance,
            self.alpha,
            self.temperature,
            self.max_seq_len,
            self.rng_seed,
            self.pool_structure,
            self.fuzzy,
        )
    }
}

/// Split flat `key = value` text into (line, key, value) entries.
/// `#` starts a comment; blank lines are skipped.
pub fn parse_kv_lines(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{stripped}`"),
            });
        };
        out.push((line, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}
