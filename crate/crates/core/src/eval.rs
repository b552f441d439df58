//! Repeated stratified k-fold cross-validation and criterion comparison.
//!
//! # Fold assignment
//!
//! Folds are a pure function of `(seed, repeat_index)` so that runs replicate
//! exactly, including across implementations:
//!
//! 1. The repeat seed is the `(repeat_index + 1)`-th output of a SplitMix64
//!    generator whose state starts at `seed`.
//! 2. A second SplitMix64 generator is started from the repeat seed.
//! 3. Row indices are grouped by class id; each group lists its rows in
//!    ascending order. Groups are shuffled one after another in class-id
//!    order with Fisher-Yates (`for i in (1..len).rev()`), drawing
//!    `j = (next_u64() * (i + 1)) >> 64` (128-bit product).
//! 4. Rows are dealt round-robin to folds `0, 1, .., k-1, 0, ..`. The fold
//!    pointer carries over from one class to the next, so fold sizes differ
//!    by at most one and so do per-class counts.
//! 5. Each fold is reported in ascending row order.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::impurity::Criterion;
use crate::tree::{self, InductionConfig, TreeError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid cross-validation plan: {0}")]
    Plan(String),
    #[error("repeat {repeat}, fold {fold}: {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        #[source]
        source: TreeError,
    },
    #[error("comparison needs at least two criteria, got {0}")]
    TooFewCriteria(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for CvPlan {
    fn default() -> Self {
        CvPlan {
            folds: 5,
            repeats: 10,
            seed: 0,
        }
    }
}

impl CvPlan {
    pub fn new(folds: usize, repeats: usize, seed: u64) -> Self {
        CvPlan {
            folds,
            repeats,
            seed,
        }
    }

    fn validate(&self, n: usize) -> Result<(), EvalError> {
        if self.folds < 2 {
            return Err(EvalError::Plan(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if self.repeats == 0 {
            return Err(EvalError::Plan("need at least one repeat".into()));
        }
        if n < self.folds {
            return Err(EvalError::Plan(format!(
                "{n} rows cannot fill {} folds",
                self.folds
            )));
        }
        Ok(())
    }
}

fn repeat_rng(seed: u64, repeat_index: usize) -> SplitMix64 {
    let mut master = SplitMix64::seed_from_u64(seed);
    let mut s = 0;
    for _ in 0..=repeat_index {
        s = master.next_u64();
    }
    SplitMix64::seed_from_u64(s)
}

fn shuffle<T>(items: &mut [T], rng: &mut SplitMix64) {
    for i in (1..items.len()).rev() {
        let j = ((rng.next_u64() as u128 * (i as u128 + 1)) >> 64) as usize;
        items.swap(i, j);
    }
}

/// Test-fold row indices for one repeat.
pub fn stratified_folds(
    dataset: &Dataset,
    plan: &CvPlan,
    repeat_index: usize,
) -> Result<Vec<Vec<usize>>, EvalError> {
    plan.validate(dataset.len())?;
    let mut groups = vec![Vec::new(); dataset.n_classes()];
    for (row, &label) in dataset.labels().iter().enumerate() {
        groups[label as usize].push(row);
    }
    let mut rng = repeat_rng(plan.seed, repeat_index);
    let mut folds = vec![Vec::new(); plan.folds];
    let mut next = 0;
    for group in &mut groups {
        shuffle(group, &mut rng);
        for &row in group.iter() {
            folds[next].push(row);
            next = (next + 1) % plan.folds;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Outcome of one train/test cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub depth: usize,
    pub leaves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub config: InductionConfig,
    pub folds: Vec<FoldResult>,
    /// Arithmetic mean of fold accuracies, in percent.
    pub mean_accuracy: f64,
    /// Sample standard deviation of fold accuracies.
    pub stddev: f64,
    pub mean_depth: f64,
    pub max_depth: usize,
    pub mean_leaves: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CriterionReport {
    fn from_folds(config: InductionConfig, folds: Vec<FoldResult>, wall_time: Duration) -> Self {
        let n = folds.len() as f64;
        let mean = folds.iter().map(|f| f.accuracy).sum::<f64>() / n;
        let var = if folds.len() > 1 {
            folds
                .iter()
                .map(|f| (f.accuracy - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        CriterionReport {
            criterion: config.criterion,
            config,
            mean_accuracy: mean,
            stddev: var.sqrt(),
            mean_depth: folds.iter().map(|f| f.depth as f64).sum::<f64>() / n,
            max_depth: folds.iter().map(|f| f.depth).max().unwrap_or(0),
            mean_leaves: folds.iter().map(|f| f.leaves as f64).sum::<f64>() / n,
            folds,
            wall_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiff {
    pub baseline: Criterion,
    pub challenger: Criterion,
    /// `mean(challenger) - mean(baseline)`, in accuracy points.
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub rows: usize,
    pub plan: CvPlan,
    pub criteria: Vec<CriterionReport>,
    pub diffs: Vec<PairDiff>,
}

/// All folds of a plan, computed once so every criterion sees the same splits.
pub fn plan_folds(dataset: &Dataset, plan: &CvPlan) -> Result<Vec<Vec<Vec<usize>>>, EvalError> {
    (0..plan.repeats)
        .map(|r| stratified_folds(dataset, plan, r))
        .collect()
}

fn run_cells(
    dataset: &Dataset,
    config: &InductionConfig,
    folds: &[Vec<Vec<usize>>],
) -> Result<Vec<FoldResult>, EvalError> {
    let cells: Vec<(usize, usize)> = folds
        .iter()
        .enumerate()
        .flat_map(|(r, fs)| (0..fs.len()).map(move |f| (r, f)))
        .collect();
    cells
        .par_iter()
        .map(|&(repeat, fold)| {
            let test = &folds[repeat][fold];
            let train: Vec<usize> = folds[repeat]
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != fold)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            let tree = tree::induce_view(&dataset.view_of(train), config).map_err(|source| {
                EvalError::Fold {
                    repeat,
                    fold,
                    source,
                }
            })?;
            let stats = tree::tree_stats(&tree);
            Ok(FoldResult {
                repeat,
                fold,
                accuracy: tree::accuracy(&tree, dataset, test),
                depth: stats.depth,
                leaves: stats.leaf_count,
            })
        })
        .collect()
}

/// Repeated k-fold estimate for a single configuration.
pub fn cross_validate(
    dataset: &Dataset,
    config: &InductionConfig,
    plan: &CvPlan,
) -> Result<CriterionReport, EvalError> {
    let folds = plan_folds(dataset, plan)?;
    let start = Instant::now();
    let results = run_cells(dataset, config, &folds)?;
    Ok(CriterionReport::from_folds(
        *config,
        results,
        start.elapsed(),
    ))
}

/// Cross-validates each criterion on identical folds and reports pairwise
/// differences `mean(later) - mean(earlier)` in list order.
pub fn compare(
    dataset: &Dataset,
    criteria: &[Criterion],
    base: &InductionConfig,
    plan: &CvPlan,
) -> Result<EvaluationReport, EvalError> {
    if criteria.len() < 2 {
        return Err(EvalError::TooFewCriteria(criteria.len()));
    }
    let folds = plan_folds(dataset, plan)?;
    let mut reports = Vec::with_capacity(criteria.len());
    for &criterion in criteria {
        let config = InductionConfig { criterion, ..*base };
        let start = Instant::now();
        let results = run_cells(dataset, &config, &folds)?;
        reports.push(CriterionReport::from_folds(
            config,
            results,
            start.elapsed(),
        ));
    }
    let mut diffs = Vec::new();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            diffs.push(PairDiff {
                baseline: reports[i].criterion,
                challenger: reports[j].criterion,
                diff: reports[j].mean_accuracy - reports[i].mean_accuracy,
            });
        }
    }
    Ok(EvaluationReport {
        dataset: dataset.name().to_string(),
        rows: dataset.len(),
        plan: *plan,
        criteria: reports,
        diffs,
    })
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum ReportLine<'a> {
    Manifest(&'a serde_json::Value),
    Criterion {
        dataset: &'a str,
        criterion: Criterion,
        folds: usize,
        mean_accuracy: f64,
        stddev: f64,
        mean_depth: f64,
        max_depth: usize,
        mean_leaves: f64,
        fold_accuracies: Vec<f64>,
    },
    Diff {
        dataset: &'a str,
        baseline: Criterion,
        challenger: Criterion,
        diff: f64,
    },
}

impl EvaluationReport {
    pub fn criterion(&self, criterion: Criterion) -> Option<&CriterionReport> {
        self.criteria.iter().find(|c| c.criterion == criterion)
    }

    /// Structured line format. Timings are left out so that equal inputs
    /// give byte-identical output.
    pub fn to_json_lines(&self, manifest: Option<&serde_json::Value>) -> String {
        let mut lines = Vec::new();
        if let Some(m) = manifest {
            lines.push(ReportLine::Manifest(m));
        }
        for c in &self.criteria {
            lines.push(ReportLine::Criterion {
                dataset: &self.dataset,
                criterion: c.criterion,
                folds: c.folds.len(),
                mean_accuracy: c.mean_accuracy,
                stddev: c.stddev,
                mean_depth: c.mean_depth,
                max_depth: c.max_depth,
                mean_leaves: c.mean_leaves,
                fold_accuracies: c.folds.iter().map(|f| f.accuracy).collect(),
            });
        }
        for d in &self.diffs {
            lines.push(ReportLine::Diff {
                dataset: &self.dataset,
                baseline: d.baseline,
                challenger: d.challenger,
                diff: d.diff,
            });
        }
        let mut out = String::new();
        for l in lines {
            out.push_str(&serde_json::to_string(&l).expect("report lines serialize"));
            out.push('\n');
        }
        out
    }

    /// Accuracy comparison table followed by per-criterion tree statistics.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "| Data set |");
        for c in &self.criteria {
            let _ = write!(out, " {} Accuracy |", c.criterion.title());
        }
        let two = self.criteria.len() == 2;
        if two {
            out.push_str(" Diff. |");
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &self.criteria {
            out.push_str("---:|");
        }
        if two {
            out.push_str("---:|");
        }
        out.push('\n');
        let _ = write!(out, "| {} |", self.dataset);
        for c in &self.criteria {
            let _ = write!(out, " {:.2} |", c.mean_accuracy);
        }
        if two {
            let _ = write!(out, " {:+.2} |", self.diffs[0].diff);
        }
        out.push_str("\n\n");

        out.push_str("| Criterion | Mean | Std | Mean depth | Max depth | Mean leaves | Folds | Wall time (s) |\n");
        out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|\n");
        for c in &self.criteria {
            let _ = writeln!(
                out,
                "| {} | {:.2} | {:.2} | {:.1} | {} | {:.1} | {} | {:.2} |",
                c.criterion,
                c.mean_accuracy,
                c.stddev,
                c.mean_depth,
                c.max_depth,
                c.mean_leaves,
                c.folds.len(),
                c.wall_time.as_secs_f64()
            );
        }
        if !two {
            out.push_str("\n| Baseline | Challenger | Diff. |\n|---|---|---:|\n");
            for d in &self.diffs {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:+.2} |",
                    d.baseline, d.challenger, d.diff
                );
            }
        }
        out
    }
}
