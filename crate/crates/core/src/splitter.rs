//! Candidate split enumeration and best-split selection.
//!
//! Numeric features get binary threshold rules at the midpoints between
//! consecutive distinct values; categorical features get a single fan-out rule
//! with one branch per category observed at the node.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnKind, DataError, NodeView};
use crate::impurity::{self, ContingencyTable, Criterion, Score};

/// Views at least this large score their features in parallel.
const PARALLEL_MIN_CELLS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// `value <= t` goes to the first child, everything else to the second.
    Threshold(f64),
    /// One child per listed category code, in this order.
    Fanout(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature: usize,
    pub kind: RuleKind,
}

impl SplitRule {
    pub fn threshold(feature: usize, t: f64) -> Self {
        SplitRule {
            feature,
            kind: RuleKind::Threshold(t),
        }
    }

    pub fn fanout(feature: usize, categories: Vec<u32>) -> Self {
        SplitRule {
            feature,
            kind: RuleKind::Fanout(categories),
        }
    }

    pub fn arity(&self) -> usize {
        match &self.kind {
            RuleKind::Threshold(_) => 2,
            RuleKind::Fanout(c) => c.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub rule: SplitRule,
    pub score: Score,
    pub arity: usize,
    pub child_sizes: Vec<u64>,
}

impl SplitCandidate {
    fn new(rule: SplitRule, table: &ContingencyTable, criterion: Criterion) -> Self {
        let score = impurity::score(table, criterion).expect("candidate tables are nonempty");
        SplitCandidate {
            arity: rule.arity(),
            rule,
            score,
            child_sizes: table.row_totals().to_vec(),
        }
    }

    pub fn nonempty_children(&self) -> usize {
        self.child_sizes.iter().filter(|&&s| s > 0).count()
    }

    /// Positive score on a valid criterion with at least two nonempty children.
    pub fn is_valid(&self) -> bool {
        self.score.valid && self.score.value > 0.0 && self.nonempty_children() >= 2
    }
}

/// Orders candidates by score value, then raw gain. Candidates that compare
/// equal are resolved by enumeration order (lower feature index, lower
/// threshold), which callers preserve by only replacing on `Greater`.
pub fn compare_scores(a: &Score, b: &Score) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then_with(|| a.gain.total_cmp(&b.gain))
}

fn numeric_values<'v>(view: &'v NodeView<'_>, feature: usize) -> Result<&'v [f64], DataError> {
    let f = view
        .dataset()
        .feature(feature)
        .ok_or(DataError::UnknownFeature(feature))?;
    match &f.column {
        Column::Numeric(v) => Ok(v),
        other => Err(DataError::WrongKind {
            feature: f.name.clone(),
            expected: ColumnKind::Numeric,
            actual: other.kind(),
        }),
    }
}

fn categorical_codes<'v>(
    view: &'v NodeView<'_>,
    feature: usize,
) -> Result<(&'v [u32], usize), DataError> {
    let f = view
        .dataset()
        .feature(feature)
        .ok_or(DataError::UnknownFeature(feature))?;
    match &f.column {
        Column::Categorical { codes, values } => Ok((codes, values.len())),
        other => Err(DataError::WrongKind {
            feature: f.name.clone(),
            expected: ColumnKind::Categorical,
            actual: other.kind(),
        }),
    }
}

/// Midpoint of `lo < hi`, kept inside `[lo, hi)` so `hi` is never routed left.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi || m < lo {
        lo
    } else {
        m
    }
}

/// Sorted `(value, class)` pairs of the view's rows.
fn sorted_pairs(view: &NodeView<'_>, values: &[f64]) -> Vec<(f64, u32)> {
    let labels = view.dataset().labels();
    let mut pairs: Vec<(f64, u32)> = view
        .rows()
        .iter()
        .map(|&r| (values[r], labels[r]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    pairs
}

pub fn numeric_candidates(
    view: &NodeView<'_>,
    feature: usize,
) -> Result<Vec<SplitRule>, DataError> {
    let values = numeric_values(view, feature)?;
    let mut distinct: Vec<f64> = view.rows().iter().map(|&r| values[r]).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    Ok(distinct
        .windows(2)
        .map(|w| SplitRule::threshold(feature, midpoint(w[0], w[1])))
        .collect())
}

pub fn categorical_candidate(
    view: &NodeView<'_>,
    feature: usize,
) -> Result<Option<SplitRule>, DataError> {
    let (codes, n_values) = categorical_codes(view, feature)?;
    let mut seen = vec![false; n_values];
    for &r in view.rows() {
        seen[codes[r] as usize] = true;
    }
    let observed: Vec<u32> = (0..n_values as u32).filter(|&c| seen[c as usize]).collect();
    Ok((observed.len() >= 2).then(|| SplitRule::fanout(feature, observed)))
}

/// Best candidates of one search.
#[derive(Debug, Clone, Default)]
pub struct SplitSearch {
    /// Highest-scoring valid candidate.
    pub best: Option<SplitCandidate>,
    /// Highest raw gain among candidates with at least two nonempty children,
    /// regardless of score validity.
    pub best_by_gain: Option<SplitCandidate>,
}

impl SplitSearch {
    fn offer(&mut self, cand: SplitCandidate) {
        if cand.nonempty_children() < 2 {
            return;
        }
        let better_gain = match &self.best_by_gain {
            None => true,
            Some(b) => cand.score.gain.total_cmp(&b.score.gain) == Ordering::Greater,
        };
        let better = cand.is_valid()
            && match &self.best {
                None => true,
                Some(b) => compare_scores(&cand.score, &b.score) == Ordering::Greater,
            };
        match (better, better_gain) {
            (true, true) => {
                self.best_by_gain = Some(cand.clone());
                self.best = Some(cand);
            }
            (true, false) => self.best = Some(cand),
            (false, true) => self.best_by_gain = Some(cand),
            (false, false) => {}
        }
    }

    fn merge(&mut self, other: SplitSearch) {
        // `other` comes from a later feature, so it only wins on a strict improvement.
        if let Some(c) = other.best_by_gain {
            let better = match &self.best_by_gain {
                None => true,
                Some(b) => c.score.gain.total_cmp(&b.score.gain) == Ordering::Greater,
            };
            if better {
                self.best_by_gain = Some(c);
            }
        }
        if let Some(c) = other.best {
            let better = match &self.best {
                None => true,
                Some(b) => compare_scores(&c.score, &b.score) == Ordering::Greater,
            };
            if better {
                self.best = Some(c);
            }
        }
    }
}

fn search_numeric(
    view: &NodeView<'_>,
    feature: usize,
    values: &[f64],
    criterion: Criterion,
) -> SplitSearch {
    let k = view.dataset().n_classes();
    let pairs = sorted_pairs(view, values);
    let mut total = vec![0u64; k];
    for &(_, c) in &pairs {
        total[c as usize] += 1;
    }
    let mut left = vec![0u64; k];
    let mut right = total;
    let mut out = SplitSearch::default();
    for i in 0..pairs.len().saturating_sub(1) {
        let c = pairs[i].1 as usize;
        left[c] += 1;
        right[c] -= 1;
        let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
        if lo == hi {
            continue;
        }
        let table = ContingencyTable::binary(&left, &right);
        let rule = SplitRule::threshold(feature, midpoint(lo, hi));
        out.offer(SplitCandidate::new(rule, &table, criterion));
    }
    out
}

fn search_categorical(
    view: &NodeView<'_>,
    feature: usize,
    codes: &[u32],
    n_values: usize,
    criterion: Criterion,
) -> SplitSearch {
    let k = view.dataset().n_classes();
    let labels = view.dataset().labels();
    let mut counts = vec![0u64; n_values * k];
    for &r in view.rows() {
        counts[codes[r] as usize * k + labels[r] as usize] += 1;
    }
    let mut observed = Vec::new();
    let mut rows = Vec::new();
    for (code, row) in counts.chunks_exact(k).enumerate() {
        if row.iter().any(|&c| c > 0) {
            observed.push(code as u32);
            rows.push(row);
        }
    }
    let mut out = SplitSearch::default();
    if observed.len() >= 2 {
        let table = ContingencyTable::new(&rows).expect("rectangular");
        out.offer(SplitCandidate::new(
            SplitRule::fanout(feature, observed),
            &table,
            criterion,
        ));
    }
    out
}

fn search_feature(view: &NodeView<'_>, feature: usize, criterion: Criterion) -> SplitSearch {
    match &view.dataset().features()[feature].column {
        Column::Numeric(values) => search_numeric(view, feature, values, criterion),
        Column::Categorical { codes, values } => {
            search_categorical(view, feature, codes, values.len(), criterion)
        }
    }
}

/// Scores every candidate of every feature at this node.
pub fn search(view: &NodeView<'_>, criterion: Criterion) -> SplitSearch {
    let n_features = view.dataset().features().len();
    let per_feature: Vec<SplitSearch> = if view.len() * n_features >= PARALLEL_MIN_CELLS {
        (0..n_features)
            .into_par_iter()
            .map(|f| search_feature(view, f, criterion))
            .collect()
    } else {
        (0..n_features)
            .map(|f| search_feature(view, f, criterion))
            .collect()
    };
    let mut best = SplitSearch::default();
    for s in per_feature {
        best.merge(s);
    }
    best
}

/// Maximum-score valid split, or `None` when no candidate is valid.
pub fn best_split(view: &NodeView<'_>, criterion: Criterion) -> Option<SplitCandidate> {
    if view.len() < 2 {
        return None;
    }
    search(view, criterion).best
}
