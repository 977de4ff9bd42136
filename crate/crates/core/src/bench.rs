//! Benchmark harness: configured sweeps over the simulated model, with
//! deterministic CSV/JSON emission.
//!
//! # File grammar
//!
//! Run and sweep files share one flat `key = value` grammar (`#` comments).
//! Engine keys are the [`EngineConfig`] field names, model keys carry a
//! `model.` prefix, `prompt` selects the conditioning label. Sweep files add:
//!
//! ```text
//! axis = draft_len            # draft_len | temperature | num_paths | structure | fuzzy
//! values = 6, 4, 3, 2, 1      # comma-separated, parsed per axis
//! trials = 5                  # seeded repetitions per value
//! budget_lock = 24            # optional: pin draft_len * num_paths
//! ```
//!
//! With `budget_lock = B`, a `draft_len` sweep derives `num_paths = B / L`
//! per cell (and a `num_paths` sweep derives `draft_len`); values that do not
//! divide B exactly are rejected. On any other axis the base config must
//! already satisfy `L * N = B`.
//!
//! Cell seeds are a pure function of `(base seed, axis value, trial index)`,
//! so any cell reruns independently. Each cell also runs one extra warm-up
//! session (trial index `trials`) whose measurements are discarded.
//!
//! # Output schema
//!
//! CSV header: `axis,value,trial_count,mean_accept_len,std_accept_len,`
//! `mean_draft_us,tokens_per_step`. Floats print with six decimals. The JSON
//! mirror is `{"rows": [{...}]}` with full-precision floats; parsing it back
//! reproduces the emitted [`SweepResult`] exactly. Accept-length statistics
//! are deterministic for a given spec; `mean_draft_us` is wall-clock.

use crate::config::{ConfigError, EngineConfig, PoolStructure, parse_kv_lines};
use crate::engine::{SessionTrace, run_session};
use crate::model::{SimModel, SimModelSpec};
use crate::rng::{GAMMA, fold_bytes, mix64};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// Sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    DraftLen,
    Temperature,
    NumPaths,
    Structure,
    Fuzzy,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::DraftLen => "draft_len",
            Axis::Temperature => "temperature",
            Axis::NumPaths => "num_paths",
            Axis::Structure => "structure",
            Axis::Fuzzy => "fuzzy",
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "draft_len" => Ok(Axis::DraftLen),
            "temperature" => Ok(Axis::Temperature),
            "num_paths" => Ok(Axis::NumPaths),
            "structure" => Ok(Axis::Structure),
            "fuzzy" => Ok(Axis::Fuzzy),
            other => Err(format!("unknown axis `{other}`")),
        }
    }
}

/// One value along an axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    Int(u64),
    Float(f64),
    Structure(PoolStructure),
    Flag(bool),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Int(v) => v.fmt(f),
            AxisValue::Float(v) => v.fmt(f),
            AxisValue::Structure(v) => v.fmt(f),
            AxisValue::Flag(v) => v.fmt(f),
        }
    }
}

impl AxisValue {
    fn parse(axis: Axis, text: &str, line: usize) -> Result<AxisValue, ConfigError> {
        let bad = |e: String| ConfigError::Parse {
            line,
            message: format!("bad value `{text}` for axis {}: {e}", axis.name()),
        };
        match axis {
            Axis::DraftLen | Axis::NumPaths => text
                .parse()
                .map(AxisValue::Int)
                .map_err(|e: std::num::ParseIntError| bad(e.to_string())),
            Axis::Temperature => text
                .parse()
                .map(AxisValue::Float)
                .map_err(|e: std::num::ParseFloatError| bad(e.to_string())),
            Axis::Structure => text.parse().map(AxisValue::Structure).map_err(bad),
            Axis::Fuzzy => text
                .parse()
                .map(AxisValue::Flag)
                .map_err(|e: std::str::ParseBoolError| bad(e.to_string())),
        }
    }
}

/// A configured sweep: base setup, one axis, its values, trials per value.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: EngineConfig,
    pub model: SimModelSpec,
    pub prompt: u64,
    pub axis: Axis,
    pub values: Vec<AxisValue>,
    pub trials: u32,
    /// When set, every cell must satisfy `max_draft_len * num_paths == B`.
    pub budget_lock: Option<u64>,
}

/// One derived sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub config: EngineConfig,
}

impl SweepSpec {
    /// Derive the per-value configs, enforcing the budget lock.
    pub fn cells(&self) -> Result<Vec<Cell>, ConfigError> {
        if self.values.is_empty() {
            return Err(ConfigError::Field {
                field: "values",
                reason: "must be nonempty".into(),
            });
        }
        if self.trials < 1 {
            return Err(ConfigError::Field {
                field: "trials",
                reason: "must be at least 1".into(),
            });
        }
        let mut cells = Vec::with_capacity(self.values.len());
        for value in &self.values {
            let mut cfg = self.base.clone();
            match (self.axis, value) {
                (Axis::DraftLen, AxisValue::Int(v)) => cfg.max_draft_len = *v as usize,
                (Axis::Temperature, AxisValue::Float(v)) => cfg.temperature = *v,
                (Axis::NumPaths, AxisValue::Int(v)) => cfg.num_paths = *v as u32,
                (Axis::Structure, AxisValue::Structure(v)) => cfg.pool_structure = *v,
                (Axis::Fuzzy, AxisValue::Flag(v)) => cfg.fuzzy = *v,
                _ => {
                    return Err(ConfigError::Field {
                        field: "values",
                        reason: format!("value {value} does not fit axis {}", self.axis.name()),
                    });
                }
            }
            if let Some(budget) = self.budget_lock {
                match self.axis {
                    Axis::DraftLen => {
                        let l = cfg.max_draft_len as u64;
                        if l == 0 || budget % l != 0 {
                            return Err(budget_error(budget, l));
                        }
                        cfg.num_paths = (budget / l) as u32;
                    }
                    Axis::NumPaths => {
                        let n = cfg.num_paths as u64;
                        if n == 0 || budget % n != 0 {
                            return Err(budget_error(budget, n));
                        }
                        cfg.max_draft_len = (budget / n) as usize;
                    }
                    _ => {
                        let product = cfg.max_draft_len as u64 * cfg.num_paths as u64;
                        if product != budget {
                            return Err(ConfigError::Field {
                                field: "budget_lock",
                                reason: format!(
                                    "base config has draft_len * num_paths = {product}, budget is {budget}"
                                ),
                            });
                        }
                    }
                }
            }
            let cfg = cfg.validated()?;
            cells.push(Cell {
                label: value.to_string(),
                config: cfg,
            });
        }
        Ok(cells)
    }

    /// Parse a sweep file: engine + model + prompt keys plus the sweep keys.
    pub fn from_kv_text(text: &str) -> Result<SweepSpec, ConfigError> {
        let mut base = EngineConfig::default();
        let mut model = SimModelSpec::default();
        let mut prompt = 0u64;
        let mut axis: Option<Axis> = None;
        let mut raw_values: Option<(usize, String)> = None;
        let mut trials = 1u32;
        let mut budget_lock = None;

        for (line, key, value) in parse_kv_lines(text)? {
            if base.apply_kv(&key, &value, line)? || model.apply_kv(&key, &value, line)? {
                continue;
            }
            match key.as_str() {
                "prompt" => {
                    prompt = value.parse().map_err(|e| ConfigError::Parse {
                        line,
                        message: format!("bad value `{value}` for `prompt`: {e}"),
                    })?
                }
                "axis" => {
                    axis = Some(
                        value
                            .parse()
                            .map_err(|e| ConfigError::Parse { line, message: e })?,
                    )
                }
                "values" => raw_values = Some((line, value)),
                "trials" => {
                    trials = value.parse().map_err(|e| ConfigError::Parse {
                        line,
                        message: format!("bad value `{value}` for `trials`: {e}"),
                    })?
                }
                "budget_lock" => {
                    budget_lock = Some(value.parse().map_err(|e| ConfigError::Parse {
                        line,
                        message: format!("bad value `{value}` for `budget_lock`: {e}"),
                    })?)
                }
                other => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("unknown key `{other}`"),
                    });
                }
            }
        }

        let axis = axis.ok_or(ConfigError::Field {
            field: "axis",
            reason: "missing".into(),
        })?;
        let (line, raw) = raw_values.ok_or(ConfigError::Field {
            field: "values",
            reason: "missing".into(),
        })?;
        let values = raw
            .split(',')
            .map(|v| AxisValue::parse(axis, v.trim(), line))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SweepSpec {
            base,
            model,
            prompt,
            axis,
            values,
            trials,
            budget_lock,
        })
    }
}

fn budget_error(budget: u64, value: u64) -> ConfigError {
    ConfigError::Field {
        field: "budget_lock",
        reason: format!("{value} does not divide the budget {budget} exactly"),
    }
}

/// Session setup for a single `run` invocation: engine + model + prompt.
#[derive(Debug, Clone, Default)]
pub struct RunSetup {
    pub engine: EngineConfig,
    pub model: SimModelSpec,
    pub prompt: u64,
}

impl RunSetup {
    /// Parse a run config file (engine + model + prompt keys only).
    pub fn from_kv_text(text: &str) -> Result<RunSetup, ConfigError> {
        let mut setup = RunSetup::default();
        for (line, key, value) in parse_kv_lines(text)? {
            if setup.engine.apply_kv(&key, &value, line)?
                || setup.model.apply_kv(&key, &value, line)?
            {
                continue;
            }
            if key == "prompt" {
                setup.prompt = value.parse().map_err(|e| ConfigError::Parse {
                    line,
                    message: format!("bad value `{value}` for `prompt`: {e}"),
                })?;
                continue;
            }
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        Ok(setup)
    }
}

/// Seed of one sweep trial: a pure function of base seed, the cell's value
/// label, and the trial index.
pub fn cell_seed(base_seed: u64, value_label: &str, trial: u32) -> u64 {
    mix64(
        mix64(base_seed ^ fold_bytes(value_label.as_bytes()))
            ^ GAMMA.wrapping_mul(trial as u64 + 1),
    )
}

/// Per-cell statistics across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub trial_count: u32,
    /// Mean over trials of the per-trial mean accepted length per step.
    pub mean_accept_len: f64,
    /// Sample standard deviation over trials (0 for a single trial).
    pub std_accept_len: f64,
    pub mean_draft_us: f64,
    pub tokens_per_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Run every cell x trial of the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, ConfigError> {
    let cells = spec.cells()?;
    let mut rows = Vec::with_capacity(cells.len());
    for cell in &cells {
        let model = SimModel::new(spec.model.clone())?;
        // warm-up trial: measurements discarded
        let mut warm = cell.config.clone();
        warm.rng_seed = cell_seed(spec.base.rng_seed, &cell.label, spec.trials);
        run_session(&warm, &model, spec.prompt)?;

        let mut accept_means = Vec::with_capacity(spec.trials as usize);
        let mut draft_us = Vec::with_capacity(spec.trials as usize);
        let mut tokens_per_step = Vec::with_capacity(spec.trials as usize);
        for trial in 0..spec.trials {
            let mut cfg = cell.config.clone();
            cfg.rng_seed = cell_seed(spec.base.rng_seed, &cell.label, trial);
            let trace = run_session(&cfg, &model, spec.prompt)?;
            let accept = trace.mean_accept_len();
            assert!(
                accept <= cell.config.max_draft_len as f64,
                "mean accept length {accept} exceeds the cell's draft cap"
            );
            accept_means.push(accept);
            draft_us.push(trace.mean_draft_us());
            tokens_per_step.push(trace.tokens_per_step());
        }
        rows.push(SweepRow {
            axis: spec.axis.name().to_string(),
            value: cell.label.clone(),
            trial_count: spec.trials,
            mean_accept_len: mean(&accept_means),
            std_accept_len: sample_std(&accept_means),
            mean_draft_us: mean(&draft_us),
            tokens_per_step: mean(&tokens_per_step),
        });
    }
    Ok(SweepResult { rows })
}

/// Structure x fuzzy ablation grid on a fixed base config: six cells labeled
/// `<structure>+<fuzzy|exact>`.
pub fn run_ablation(
    base: &EngineConfig,
    model_spec: &SimModelSpec,
    prompt: u64,
    trials: u32,
) -> Result<SweepResult, ConfigError> {
    let mut rows = Vec::new();
    let model = SimModel::new(model_spec.clone())?;
    for structure in [PoolStructure::Dag, PoolStructure::Tree, PoolStructure::List] {
        for fuzzy in [true, false] {
            let label = format!("{structure}+{}", if fuzzy { "fuzzy" } else { "exact" });
            let mut accept_means = Vec::new();
            let mut draft_us = Vec::new();
            let mut tokens = Vec::new();
            for trial in 0..trials.max(1) {
                let mut cfg = base.clone();
                cfg.pool_structure = structure;
                cfg.fuzzy = fuzzy;
                cfg.rng_seed = cell_seed(base.rng_seed, &label, trial);
                let trace = run_session(&cfg.validated()?, &model, prompt)?;
                accept_means.push(trace.mean_accept_len());
                draft_us.push(trace.mean_draft_us());
                tokens.push(trace.tokens_per_step());
            }
            rows.push(SweepRow {
                axis: "structure".to_string(),
                value: label,
                trial_count: trials.max(1),
                mean_accept_len: mean(&accept_means),
                std_accept_len: sample_std(&accept_means),
                mean_draft_us: mean(&draft_us),
                tokens_per_step: mean(&tokens),
            });
        }
    }
    Ok(SweepResult { rows })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

/// Convenience: mean accept length per trace, for harness-side checks.
pub fn trace_accept_len(trace: &SessionTrace) -> f64 {
    trace.mean_accept_len()
}

pub const CSV_HEADER: &str =
    "axis,value,trial_count,mean_accept_len,std_accept_len,mean_draft_us,tokens_per_step";

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Write the fixed-schema CSV. Stable row order, six-decimal floats:
/// emitting the same result twice yields identical bytes.
pub fn emit_csv(result: &SweepResult, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            r.axis,
            r.value,
            r.trial_count,
            r.mean_accept_len,
            r.std_accept_len,
            r.mean_draft_us,
            r.tokens_per_step
        )?;
    }
    Ok(())
}

pub fn emit_csv_file(result: &SweepResult, path: &Path) -> Result<(), EmitError> {
    let mut buf = Vec::new();
    emit_csv(result, &mut buf).expect("writing to memory cannot fail");
    std::fs::write(path, buf).map_err(|source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write the JSON mirror of the CSV schema, full float precision.
pub fn emit_json(result: &SweepResult, mut w: impl Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, result)?;
    w.write_all(b"\n")
}

pub fn emit_json_file(result: &SweepResult, path: &Path) -> Result<(), EmitError> {
    let mut buf = Vec::new();
    emit_json(result, &mut buf).expect("writing to memory cannot fail");
    std::fs::write(path, buf).map_err(|source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_json(text: &str) -> Result<SweepResult, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(axis: Axis, values: Vec<AxisValue>) -> SweepSpec {
        SweepSpec {
            base: EngineConfig {
                num_paths: 2,
                suffix_len: 2,
                max_draft_len: 3,
                max_seq_len: 24,
                ..EngineConfig::default()
            },
            model: SimModelSpec {
                vocab_size: 16,
                ..SimModelSpec::default()
            },
            prompt: 0,
            axis,
            values,
            trials: 2,
            budget_lock: None,
        }
    }

    #[test]
    fn budget_lock_generates_exact_product_grid() {
        let mut spec = tiny_spec(
            Axis::DraftLen,
            vec![6, 4, 3, 2, 1]
                .into_iter()
                .map(AxisValue::Int)
                .collect(),
        );
        spec.budget_lock = Some(24);
        let cells = spec.cells().unwrap();
        let pairs: Vec<(usize, u32)> = cells
            .iter()
            .map(|c| (c.config.max_draft_len, c.config.num_paths))
            .collect();
        assert_eq!(pairs, vec![(6, 4), (4, 6), (3, 8), (2, 12), (1, 24)]);
    }

    #[test]
    fn budget_lock_rejects_nondivisors() {
        let mut spec = tiny_spec(Axis::DraftLen, vec![AxisValue::Int(5)]);
        spec.budget_lock = Some(24);
        let err = spec.cells().unwrap_err();
        assert_eq!(err.field_name(), Some("budget_lock"));
    }

    #[test]
    fn budget_lock_on_other_axis_requires_base_product() {
        let mut spec = tiny_spec(Axis::Temperature, vec![AxisValue::Float(1.0)]);
        spec.budget_lock = Some(24);
        assert!(spec.cells().is_err());
        spec.base.max_draft_len = 6;
        spec.base.num_paths = 4;
        assert!(spec.cells().is_ok());
    }

    #[test]
    fn cell_seed_is_pure_and_distinct() {
        let a = cell_seed(42, "6", 0);
        assert_eq!(a, cell_seed(42, "6", 0));
        assert_ne!(a, cell_seed(42, "6", 1));
        assert_ne!(a, cell_seed(42, "4", 0));
        assert_ne!(a, cell_seed(43, "6", 0));
    }

    #[test]
    fn sweep_file_parses() {
        let text = "\
# sweep over draft length at the paper's budget
num_paths = 4
max_seq_len = 32
model.vocab_size = 16
axis = draft_len
values = 6, 4, 3
trials = 2
budget_lock = 24
";
        let spec = SweepSpec::from_kv_text(text).unwrap();
        assert_eq!(spec.axis, Axis::DraftLen);
        assert_eq!(spec.values.len(), 3);
        assert_eq!(spec.trials, 2);
        assert_eq!(spec.budget_lock, Some(24));
        assert_eq!(spec.model.vocab_size, 16);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = SweepSpec::from_kv_text("axis = fuzzy\nvalues = true\nnope = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }));
        let err = RunSetup::from_kv_text("axis = fuzzy\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn single_trial_has_zero_std() {
        let mut spec = tiny_spec(Axis::Fuzzy, vec![AxisValue::Flag(true)]);
        spec.trials = 1;
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 1);
        assert_eq!(result.rows[0].std_accept_len, 0.0);
        assert_eq!(result.rows[0].trial_count, 1);
    }

    #[test]
    fn csv_emission_is_deterministic() {
        let spec = tiny_spec(
            Axis::Structure,
            vec![
                AxisValue::Structure(PoolStructure::Dag),
                AxisValue::Structure(PoolStructure::List),
            ],
        );
        let result = run_sweep(&spec).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        emit_csv(&result, &mut a).unwrap();
        emit_csv(&result, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn empty_result_is_header_only() {
        let mut buf = Vec::new();
        emit_csv(&SweepResult { rows: vec![] }, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn json_round_trips_exactly() {
        let spec = tiny_spec(
            Axis::Temperature,
            vec![AxisValue::Float(0.7), AxisValue::Float(1.3)],
        );
        let result = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        emit_json(&result, &mut buf).unwrap();
        let back = parse_json(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(result, back);
    }

    #[test]
    fn accept_len_stays_within_cell_cap() {
        let spec = tiny_spec(
            Axis::DraftLen,
            vec![AxisValue::Int(1), AxisValue::Int(2), AxisValue::Int(3)],
        );
        for row in run_sweep(&spec).unwrap().rows {
            let cap: f64 = row.value.parse().unwrap();
            assert!(row.mean_accept_len <= cap);
        }
    }

    #[test]
    fn ablation_grid_has_six_cells() {
        let base = EngineConfig {
            num_paths: 2,
            suffix_len: 2,
            max_draft_len: 3,
            max_seq_len: 16,
            ..EngineConfig::default()
        };
        let model = SimModelSpec {
            vocab_size: 16,
            ..SimModelSpec::default()
        };
        let result = run_ablation(&base, &model, 0, 1).unwrap();
        let labels: Vec<&str> = result.rows.iter().map(|r| r.value.as_str()).collect();
        assert_eq!(
            labels,
            vec![
                "dag+fuzzy",
                "dag+exact",
                "tree+fuzzy",
                "tree+exact",
                "list+fuzzy",
                "list+exact"
            ]
        );
    }
}
