//! Dynamic draft pool: an incremental index over all paths' token histories
//! answering suffix queries.
//!
//! Given the `k`-token suffix of one path, [`DraftPool::query`] returns, for
//! every *other* path, every window of its history within edit distance
//! `tolerance` of the suffix (tolerance 0 meaning exact), together with the
//! up-to-`max_harvest`-token continuation right after the window.
//!
//! A window matches the query when (a) its Levenshtein distance from the
//! query is within the tolerance, and (b) its final token equals the query's
//! final token. The end anchor is what makes a fuzzy hit usable: the
//! continuation is conditioned on how the window *ends*, and a window whose
//! end drifted off the query's end (the shifted frames that unanchored
//! matching admits around repetitions and near live path ends) harvests a
//! continuation that is systematically misaligned by one position — poison
//! for the consensus pool. Within the window, edits model genuine variation.
//! Matchable window lengths are `[max(1, k - tolerance), k + tolerance]`;
//! larger length differences cannot be within the tolerance, and zero-length
//! windows are never reported.
//!
//! Exact queries are answered from a `k`-gram hash index. Fuzzy queries use a
//! partition filter: the query is split into `tolerance + 1` blocks, and any
//! window within `tolerance` edits must contain at least one block verbatim
//! (pigeonhole over the edit script), shifted by at most `tolerance`
//! positions. Block occurrences come from gram indexes maintained alongside
//! the `k`-gram one; surviving candidates are checked against the anchor and
//! confirmed with a banded DP, so results are exactly those of a brute-force
//! scan over all windows with the same match predicate.

use crate::config::{TokenId, TokenRecord};
use std::collections::{BTreeMap, HashMap, HashSet};

/// One matched window in another path's history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MatchHit {
    pub source_path: u32,
    /// Exclusive end of the matched window; the continuation starts here.
    pub match_end: usize,
    /// Edit distance of the window from the query suffix (0 for exact).
    pub distance: usize,
}

/// A continuation slice harvested from a source path after a match.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateContinuation {
    pub hit: MatchHit,
    /// 1..=max_harvest records copied verbatim from the source path.
    pub tokens: Vec<TokenRecord>,
}

impl CandidateContinuation {
    pub fn token_ids(&self) -> Vec<TokenId> {
        self.tokens.iter().map(|r| r.token).collect()
    }
}

/// Gram occurrences: (path, exclusive end position).
type GramIndex = HashMap<Box<[TokenId]>, Vec<(u32, u32)>>;

pub struct DraftPool {
    suffix_len: usize,
    tolerance: usize,
    max_harvest: usize,
    histories: Vec<Vec<TokenRecord>>,
    /// One gram index per registered gram length.
    grams: BTreeMap<usize, GramIndex>,
}

impl DraftPool {
    /// `tolerance` is the effective edit tolerance (0 disables fuzzing);
    /// `max_harvest` caps continuation length at harvest time.
    pub fn new(num_paths: u32, suffix_len: usize, tolerance: usize, max_harvest: usize) -> Self {
        assert!(suffix_len >= 1 && max_harvest >= 1);
        let mut lens: Vec<usize> = vec![suffix_len];
        if tolerance >= 1 {
            let block = suffix_len / (tolerance + 1);
            if block >= 1 {
                lens.push(block);
                lens.push(suffix_len - tolerance * block);
            }
            // block == 0 (tolerance >= suffix_len): queries fall back to a scan
        }
        let grams = lens.into_iter().map(|l| (l, GramIndex::new())).collect();
        DraftPool {
            suffix_len,
            tolerance,
            max_harvest,
            histories: vec![Vec::new(); num_paths as usize],
            grams,
        }
    }

    pub fn suffix_len(&self) -> usize {
        self.suffix_len
    }

    pub fn tolerance(&self) -> usize {
        self.tolerance
    }

    /// Total tokens indexed across all paths.
    pub fn total_tokens(&self) -> usize {
        self.histories.iter().map(Vec::len).sum()
    }

    pub fn history(&self, path: u32) -> &[TokenRecord] {
        &self.histories[path as usize]
    }

    /// Number of full `suffix_len` windows indexed for a path.
    pub fn window_count(&self, path: u32) -> usize {
        let len = self.histories[path as usize].len();
        (len + 1).saturating_sub(self.suffix_len)
    }

    /// Append one record to a path's history, registering every gram that
    /// ends at the new position.
    pub fn append(&mut self, path: u32, record: TokenRecord) {
        let hist = &mut self.histories[path as usize];
        hist.push(record);
        let end = hist.len();
        for (&len, index) in self.grams.iter_mut() {
            if end >= len {
                let gram: Box<[TokenId]> = hist[end - len..end].iter().map(|r| r.token).collect();
                index.entry(gram).or_default().push((path, end as u32));
            }
        }
    }

    /// All end-anchored windows of other paths within the tolerance of
    /// `suffix`, with their continuations. Hits are deduplicated per
    /// (source_path, match_end) keeping the lowest distance, exclude windows
    /// at the live end of a path (empty continuation), and come back sorted
    /// by (source_path, match_end).
    pub fn query(&self, suffix: &[TokenId], requesting_path: u32) -> Vec<CandidateContinuation> {
        assert_eq!(
            suffix.len(),
            self.suffix_len,
            "query suffix must have exactly k tokens"
        );
        let hits = if self.tolerance == 0 {
            self.query_exact(suffix, requesting_path)
        } else {
            self.query_fuzzy(suffix, requesting_path)
        };

        hits.into_iter()
            .map(|((path, end), distance)| {
                let hist = &self.histories[path as usize];
                let tokens = hist[end..(end + self.max_harvest).min(hist.len())].to_vec();
                debug_assert!(!tokens.is_empty());
                CandidateContinuation {
                    hit: MatchHit {
                        source_path: path,
                        match_end: end,
                        distance,
                    },
                    tokens,
                }
            })
            .collect()
    }

    fn query_exact(
        &self,
        suffix: &[TokenId],
        requesting_path: u32,
    ) -> BTreeMap<(u32, usize), usize> {
        let mut hits = BTreeMap::new();
        if let Some(occurrences) = self.grams[&self.suffix_len].get(suffix) {
            for &(path, end) in occurrences {
                let end = end as usize;
                if path == requesting_path || end >= self.histories[path as usize].len() {
                    continue;
                }
                hits.insert((path, end), 0);
            }
        }
        hits
    }

    fn query_fuzzy(
        &self,
        suffix: &[TokenId],
        requesting_path: u32,
    ) -> BTreeMap<(u32, usize), usize> {
        let k = self.suffix_len;
        let tol = self.tolerance;
        let block = k / (tol + 1);

        // Candidate window ends per path.
        let mut candidates: HashSet<(u32, usize)> = HashSet::new();
        if block == 0 {
            // Degenerate tolerance >= k: every position of every other path
            // can end a window; fall back to enumerating them.
            for (path, hist) in self.histories.iter().enumerate() {
                if path as u32 == requesting_path {
                    continue;
                }
                for end in 1..=hist.len() {
                    candidates.insert((path as u32, end));
                }
            }
        } else {
            for block_idx in 0..=tol {
                let (start, len) = if block_idx < tol {
                    (block_idx * block, block)
                } else {
                    (tol * block, k - tol * block)
                };
                let gram = &suffix[start..start + len];
                let Some(occurrences) = self.grams[&len].get(gram) else {
                    continue;
                };
                for &(path, gram_end) in occurrences {
                    if path == requesting_path {
                        continue;
                    }
                    // The block sits at query offset `start`; in a matching
                    // window it shifts by at most `tol`, and window lengths
                    // span k +- tol, so candidate ends lie within 2*tol of
                    // the exact-alignment end.
                    let gram_start = gram_end as i64 - len as i64;
                    let aligned_end = gram_start - start as i64 + k as i64;
                    let lo = (aligned_end - 2 * tol as i64).max(1);
                    let hi = aligned_end + 2 * tol as i64;
                    for end in lo..=hi {
                        candidates.insert((path, end as usize));
                    }
                }
            }
        }

        let min_len = k.saturating_sub(tol).max(1);
        let max_len = k + tol;
        let anchor = suffix[k - 1];
        let mut hits = BTreeMap::new();
        for (path, end) in candidates {
            let hist = &self.histories[path as usize];
            if end >= hist.len() {
                continue; // live end: empty continuation (or out of range)
            }
            if hist[end - 1].token != anchor {
                continue;
            }
            let mut best: Option<usize> = None;
            for window_len in min_len..=max_len.min(end) {
                let window: Vec<TokenId> = hist[end - window_len..end]
                    .iter()
                    .map(|r| r.token)
                    .collect();
                if let Some(d) = edit_distance(suffix, &window, tol) {
                    best = Some(best.map_or(d, |b: usize| b.min(d)));
                }
            }
            if let Some(d) = best {
                hits.insert((path, end), d);
            }
        }
        hits
    }
}

/// Banded Levenshtein distance over token ids (unit-cost insert, delete,
/// substitute). Returns `None` when the distance exceeds `cap`; otherwise the
/// exact distance. Cost is O(len * cap).
pub fn edit_distance(a: &[TokenId], b: &[TokenId], cap: usize) -> Option<usize> {
    if a.len().abs_diff(b.len()) > cap {
        return None;
    }
    const INF: usize = usize::MAX / 2;
    let m = b.len();
    let mut prev = vec![INF; m + 1];
    let mut curr = vec![INF; m + 1];
    for (j, cell) in prev.iter_mut().enumerate().take(cap.min(m) + 1) {
        *cell = j;
    }
    for (i, &ai) in a.iter().enumerate() {
        let i = i + 1;
        let lo = i.saturating_sub(cap);
        let hi = (i + cap).min(m);
        curr.fill(INF);
        let mut row_min = INF;
        if lo == 0 {
            curr[0] = i;
            row_min = i;
        }
        for j in lo.max(1)..=hi {
            let sub = prev[j - 1] + usize::from(ai != b[j - 1]);
            let del = prev[j] + 1;
            let ins = curr[j - 1] + 1;
            let cell = sub.min(del).min(ins);
            curr[j] = cell;
            row_min = row_min.min(cell);
        }
        if row_min > cap {
            return None;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    (prev[m] <= cap).then_some(prev[m])
}
