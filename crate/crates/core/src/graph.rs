//! Consensus structures over candidate continuations.
//!
//! Candidates are aligned at their match point: the token at offset `d` of
//! every candidate lives in layer `d`. The DAG merges identical tokens within
//! a layer and aggregates witness statistics on nodes and edges; the tree
//! keeps tokens with different prefixes distinct (candidates only share a
//! branch while they share a prefix); the list skips aggregation entirely and
//! ranks whole candidates. Tree and list exist for the structure ablation.
//!
//! Edge weight: `w(u, v) = alpha * prob_sum + (1 - alpha) * freq`, where
//! `prob_sum` sums the stored probability of the `v` occurrence over
//! witnessing candidates and `freq` is the witness count normalized over all
//! edges leaving `u`. Extraction is greedy: the layer-0 pick maximizes
//! `alpha * prob_sum + (1 - alpha) * count / num_candidates` (the same blend,
//! anchored at the root), every later pick maximizes `w(prev, v)` among the
//! successors of the previous pick, so the draft is a connected path. Ties
//! break toward the lower token id. Extraction stops at the length cap or at
//! a node with no successors.

use crate::config::TokenId;
use crate::pool::CandidateContinuation;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StructureError {
    #[error("cannot build a draft structure from an empty candidate set")]
    EmptyPool,
}

/// Witness statistics aggregated on an edge (or a node occurrence).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeStats {
    /// Sum of the stored probability of the target occurrence per witness.
    pub prob_sum: f64,
    /// Number of witnessing candidates.
    pub count: u32,
}

impl EdgeStats {
    fn absorb(&mut self, prob: f64) {
        self.prob_sum += prob;
        self.count += 1;
    }
}

#[derive(Debug, Clone)]
struct Node {
    stats: EdgeStats,
    out: BTreeMap<TokenId, EdgeStats>,
}

/// Extracted draft: a connected path through consecutive layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DraftSequence {
    pub tokens: Vec<TokenId>,
}

impl DraftSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Layered weighted DAG with per-layer token merging.
#[derive(Debug)]
pub struct ConsensusGraph {
    alpha: f64,
    num_candidates: u32,
    layers: Vec<BTreeMap<TokenId, Node>>,
}

/// Build the DAG from candidates, keeping at most `max_len` layers.
pub fn build_graph(
    candidates: &[CandidateContinuation],
    alpha: f64,
    max_len: usize,
) -> Result<ConsensusGraph, StructureError> {
    if candidates.is_empty() {
        return Err(StructureError::EmptyPool);
    }
    let mut layers: Vec<BTreeMap<TokenId, Node>> = Vec::new();
    for cand in candidates {
        let tokens = &cand.tokens[..cand.tokens.len().min(max_len)];
        for (d, record) in tokens.iter().enumerate() {
            if layers.len() <= d {
                layers.push(BTreeMap::new());
            }
            let node = layers[d].entry(record.token).or_insert_with(|| Node {
                stats: EdgeStats {
                    prob_sum: 0.0,
                    count: 0,
                },
                out: BTreeMap::new(),
            });
            node.stats.absorb(record.prob);
        }
        for d in 0..tokens.len().saturating_sub(1) {
            let (u, v) = (tokens[d], tokens[d + 1]);
            layers[d]
                .get_mut(&u.token)
                .expect("node registered by the pass above")
                .out
                .entry(v.token)
                .or_insert(EdgeStats {
                    prob_sum: 0.0,
                    count: 0,
                })
                .absorb(v.prob);
        }
    }
    Ok(ConsensusGraph {
        alpha,
        num_candidates: candidates.len() as u32,
        layers,
    })
}

impl ConsensusGraph {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_candidates(&self) -> u32 {
        self.num_candidates
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_tokens(&self, layer: usize) -> Vec<TokenId> {
        self.layers[layer].keys().copied().collect()
    }

    pub fn node_stats(&self, layer: usize, token: TokenId) -> Option<EdgeStats> {
        self.layers.get(layer)?.get(&token).map(|n| n.stats)
    }

    pub fn edge_stats(&self, layer: usize, u: TokenId, v: TokenId) -> Option<EdgeStats> {
        self.layers.get(layer)?.get(&u)?.out.get(&v).copied()
    }

    /// Blended weight of the edge `u -> v` out of `layer`.
    pub fn edge_weight(&self, layer: usize, u: TokenId, v: TokenId) -> Option<f64> {
        let node = self.layers.get(layer)?.get(&u)?;
        let stats = node.out.get(&v)?;
        let out_total: u32 = node.out.values().map(|e| e.count).sum();
        Some(blend(self.alpha, stats.prob_sum, stats.count, out_total))
    }

    /// Greedy highest-consensus draft of at most `max_len` tokens.
    pub fn extract(&self, max_len: usize) -> DraftSequence {
        let mut tokens = Vec::new();
        if self.layers.is_empty() || max_len == 0 {
            return DraftSequence { tokens };
        }

        let mut pick = best_entry(self.layers[0].iter().map(|(&t, node)| {
            (
                t,
                blend(
                    self.alpha,
                    node.stats.prob_sum,
                    node.stats.count,
                    self.num_candidates,
                ),
            )
        }))
        .expect("layer 0 of a built graph is nonempty");
        tokens.push(pick);

        for layer in self.layers.iter().take(max_len.saturating_sub(1)) {
            let node = &layer[&pick];
            if node.out.is_empty() {
                break;
            }
            let out_total: u32 = node.out.values().map(|e| e.count).sum();
            pick = best_entry(
                node.out
                    .iter()
                    .map(|(&v, e)| (v, blend(self.alpha, e.prob_sum, e.count, out_total))),
            )
            .unwrap();
            tokens.push(pick);
        }
        DraftSequence { tokens }
    }

    /// Line-oriented debug dump: one `layer` line and one `edges` line per
    /// layer, nodes and edges in ascending token order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "graph alpha={} candidates={} layers={}",
            self.alpha,
            self.num_candidates,
            self.layers.len()
        );
        for (d, layer) in self.layers.iter().enumerate() {
            let _ = write!(out, "layer {d}:");
            for (t, node) in layer {
                let _ = write!(
                    out,
                    " {t}[p={} n={}]",
                    node.stats.prob_sum, node.stats.count
                );
            }
            out.push('\n');
            let has_edges = layer.values().any(|n| !n.out.is_empty());
            if !has_edges {
                continue;
            }
            let _ = write!(out, "edges {d}:");
            for (u, node) in layer {
                for (v, e) in &node.out {
                    let w = self.edge_weight(d, *u, *v).unwrap();
                    let _ = write!(out, " {u}->{v}[w={w} p={} n={}]", e.prob_sum, e.count);
                }
            }
            out.push('\n');
        }
        out
    }
}

#[inline]
fn blend(alpha: f64, prob_sum: f64, count: u32, total: u32) -> f64 {
    let freq = if total > 0 {
        count as f64 / total as f64
    } else {
        0.0
    };
    alpha * prob_sum + (1.0 - alpha) * freq
}

/// Argmax over (token, score) pairs supplied in ascending token order;
/// ties keep the earlier (lower) token.
fn best_entry(entries: impl Iterator<Item = (TokenId, f64)>) -> Option<TokenId> {
    let mut best: Option<(TokenId, f64)> = None;
    for (t, score) in entries {
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((t, score)),
        }
    }
    best.map(|(t, _)| t)
}

/// Prefix tree over candidates: no cross-prefix merging.
#[derive(Debug)]
pub struct DraftTree {
    alpha: f64,
    num_candidates: u32,
    roots: BTreeMap<TokenId, TreeNode>,
}

#[derive(Debug, Clone)]
struct TreeNode {
    stats: EdgeStats,
    children: BTreeMap<TokenId, TreeNode>,
}

/// Build the prefix tree, keeping at most `max_len` levels.
pub fn build_tree(
    candidates: &[CandidateContinuation],
    alpha: f64,
    max_len: usize,
) -> Result<DraftTree, StructureError> {
    if candidates.is_empty() {
        return Err(StructureError::EmptyPool);
    }
    let mut roots: BTreeMap<TokenId, TreeNode> = BTreeMap::new();
    for cand in candidates {
        let tokens = &cand.tokens[..cand.tokens.len().min(max_len)];
        let mut level = &mut roots;
        for record in tokens {
            let node = level.entry(record.token).or_insert_with(|| TreeNode {
                stats: EdgeStats {
                    prob_sum: 0.0,
                    count: 0,
                },
                children: BTreeMap::new(),
            });
            node.stats.absorb(record.prob);
            level = &mut node.children;
        }
    }
    Ok(DraftTree {
        alpha,
        num_candidates: candidates.len() as u32,
        roots,
    })
}

impl DraftTree {
    pub fn num_candidates(&self) -> u32 {
        self.num_candidates
    }

    /// Total node count, for the merging-dominance comparison with the DAG.
    pub fn node_count(&self) -> usize {
        fn walk(level: &BTreeMap<TokenId, TreeNode>) -> usize {
            level.values().map(|n| 1 + walk(&n.children)).sum()
        }
        walk(&self.roots)
    }

    pub fn root_tokens(&self) -> Vec<TokenId> {
        self.roots.keys().copied().collect()
    }

    /// Same greedy rule as the DAG, over unmerged branches.
    pub fn extract(&self, max_len: usize) -> DraftSequence {
        let mut tokens = Vec::new();
        if max_len == 0 {
            return DraftSequence { tokens };
        }
        let Some(first) = best_entry(self.roots.iter().map(|(&t, node)| {
            (
                t,
                blend(
                    self.alpha,
                    node.stats.prob_sum,
                    node.stats.count,
                    self.num_candidates,
                ),
            )
        })) else {
            return DraftSequence { tokens };
        };
        tokens.push(first);
        let mut node = &self.roots[&first];
        while tokens.len() < max_len && !node.children.is_empty() {
            let out_total: u32 = node.children.values().map(|n| n.stats.count).sum();
            let pick = best_entry(node.children.iter().map(|(&t, child)| {
                (
                    t,
                    blend(
                        self.alpha,
                        child.stats.prob_sum,
                        child.stats.count,
                        out_total,
                    ),
                )
            }))
            .unwrap();
            tokens.push(pick);
            node = &node.children[&pick];
        }
        DraftSequence { tokens }
    }
}

/// List baseline: the first `max_len` tokens of the single best candidate,
/// ranked by `alpha * mean stored prob + (1 - alpha)`, then by lowest match
/// distance, then by lowest (source_path, match_end).
pub fn build_list(
    candidates: &[CandidateContinuation],
    alpha: f64,
    max_len: usize,
) -> Result<DraftSequence, StructureError> {
    let best = candidates
        .iter()
        .map(|c| {
            let mean: f64 = c.tokens.iter().map(|r| r.prob).sum::<f64>() / c.tokens.len() as f64;
            (c, alpha * mean + (1.0 - alpha))
        })
        .reduce(|best, cand| {
            let better = cand.1 > best.1
                || (cand.1 == best.1 && cand.0.hit.distance < best.0.hit.distance)
                || (cand.1 == best.1
                    && cand.0.hit.distance == best.0.hit.distance
                    && (cand.0.hit.source_path, cand.0.hit.match_end)
                        < (best.0.hit.source_path, best.0.hit.match_end));
            if better { cand } else { best }
        })
        .ok_or(StructureError::EmptyPool)?;
    let tokens = best.0.tokens[..best.0.tokens.len().min(max_len)]
        .iter()
        .map(|r| r.token)
        .collect();
    Ok(DraftSequence { tokens })
}

/// Build the configured structure and extract its draft. Returns the DAG
/// debug dump alongside the draft when `want_dump` is set (DAG only).
pub fn extract_with(
    structure: crate::config::PoolStructure,
    candidates: &[CandidateContinuation],
    alpha: f64,
    max_len: usize,
    want_dump: bool,
) -> Result<(DraftSequence, Option<String>), StructureError> {
    use crate::config::PoolStructure;
    match structure {
        PoolStructure::Dag => {
            let graph = build_graph(candidates, alpha, max_len)?;
            let dump = want_dump.then(|| graph.dump());
            Ok((graph.extract(max_len), dump))
        }
        PoolStructure::Tree => Ok((
            build_tree(candidates, alpha, max_len)?.extract(max_len),
            None,
        )),
        PoolStructure::List => Ok((build_list(candidates, alpha, max_len)?, None)),
    }
}
