//! Top-down induction, pessimistic error pruning, prediction and statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ClassHistogram, DataError, Dataset, NodeView, Sample};
use crate::impurity::Criterion;
use crate::splitter::{self, RuleKind, SplitRule};

/// Subtrees over at least this many rows grow their children in parallel.
const PARALLEL_MIN_ROWS: usize = 4096;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid induction config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("tree invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pruning {
    None,
    Pessimistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InductionConfig {
    pub criterion: Criterion,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub pruning: Pruning,
}

impl InductionConfig {
    pub fn new(criterion: Criterion) -> Self {
        InductionConfig {
            criterion,
            min_samples_split: 2,
            max_depth: None,
            pruning: Pruning::Pessimistic,
        }
    }

    pub fn unpruned(mut self) -> Self {
        self.pruning = Pruning::None;
        self
    }

    fn validate(&self) -> Result<(), TreeError> {
        if self.min_samples_split < 2 {
            return Err(TreeError::Config(format!(
                "min_samples_split must be at least 2, got {}",
                self.min_samples_split
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: u32,
        histogram: ClassHistogram,
    },
    Internal {
        rule: SplitRule,
        children: Vec<TreeNode>,
        majority: u32,
        histogram: ClassHistogram,
    },
}

impl TreeNode {
    pub fn histogram(&self) -> &ClassHistogram {
        match self {
            TreeNode::Leaf { histogram, .. } | TreeNode::Internal { histogram, .. } => histogram,
        }
    }

    /// The class this node predicts when treated as a leaf.
    pub fn label(&self) -> u32 {
        match self {
            TreeNode::Leaf { label, .. } => *label,
            TreeNode::Internal { majority, .. } => *majority,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn children(&self) -> &[TreeNode] {
        match self {
            TreeNode::Leaf { .. } => &[],
            TreeNode::Internal { children, .. } => children,
        }
    }

    /// Training samples at leaves that disagree with the leaf label.
    fn leaf_errors(&self) -> u64 {
        let h = self.histogram();
        h.total - h.counts.get(self.label() as usize).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub depth: usize,
    pub leaf_count: usize,
    pub node_count: usize,
}

/// Grows a tree on every row of `train`.
pub fn induce(train: &Dataset, config: &InductionConfig) -> Result<TreeNode, TreeError> {
    induce_view(&train.view(), config)
}

/// Grows a tree on the rows of `view`, pruning afterwards if configured.
pub fn induce_view(view: &NodeView<'_>, config: &InductionConfig) -> Result<TreeNode, TreeError> {
    config.validate()?;
    if view.is_empty() {
        return Err(TreeError::EmptyTrainingSet);
    }
    let tree = grow(view, config, 0)?;
    match config.pruning {
        Pruning::None => Ok(tree),
        Pruning::Pessimistic => prune_pessimistic(tree),
    }
}

fn grow(
    view: &NodeView<'_>,
    config: &InductionConfig,
    depth: usize,
) -> Result<TreeNode, TreeError> {
    let histogram = view.class_histogram()?;
    let majority = histogram.majority();
    let leaf = |histogram| TreeNode::Leaf {
        label: majority,
        histogram,
    };
    if histogram.is_pure()
        || view.len() < config.min_samples_split
        || config.max_depth.is_some_and(|d| depth >= d)
    {
        return Ok(leaf(histogram));
    }
    let search = splitter::search(view, config.criterion);
    // No positive-score candidate: fall back to the best raw gain, if any.
    let chosen = search
        .best
        .or_else(|| search.best_by_gain.filter(|c| c.score.gain > 0.0));
    let Some(candidate) = chosen else {
        return Ok(leaf(histogram));
    };
    let parts = view.partition(&candidate.rule)?;
    let n_classes = histogram.counts.len();
    let grow_child = |part: &NodeView<'_>| {
        if part.is_empty() {
            Ok(TreeNode::Leaf {
                label: majority,
                histogram: ClassHistogram::zeros(n_classes),
            })
        } else {
            grow(part, config, depth + 1)
        }
    };
    let children = if view.len() >= PARALLEL_MIN_ROWS {
        parts
            .par_iter()
            .map(grow_child)
            .collect::<Result<Vec<_>, _>>()?
    } else {
        parts
            .iter()
            .map(grow_child)
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(TreeNode::Internal {
        rule: candidate.rule,
        children,
        majority,
        histogram,
    })
}

/// Routes a sample to a leaf. A category with no branch at some node (unseen
/// there during training, or unknown altogether) gets that node's majority.
pub fn predict<S: Sample + ?Sized>(tree: &TreeNode, sample: &S) -> u32 {
    predict_traced(tree, sample).0
}

/// Like [`predict`], also reporting whether the majority fallback was used.
pub fn predict_traced<S: Sample + ?Sized>(tree: &TreeNode, sample: &S) -> (u32, bool) {
    let mut node = tree;
    loop {
        match node {
            TreeNode::Leaf { label, .. } => return (*label, false),
            TreeNode::Internal {
                rule,
                children,
                majority,
                ..
            } => {
                let branch = match &rule.kind {
                    RuleKind::Threshold(t) => Some(if sample.numeric(rule.feature) <= *t {
                        0
                    } else {
                        1
                    }),
                    RuleKind::Fanout(cats) => sample
                        .category(rule.feature)
                        .and_then(|c| cats.iter().position(|&b| b == c)),
                };
                match branch {
                    Some(b) => node = &children[b],
                    None => return (*majority, true),
                }
            }
        }
    }
}

/// Leaf count and summed leaf errors of a subtree.
fn subtree_errors(node: &TreeNode) -> (usize, u64) {
    match node {
        TreeNode::Leaf { .. } => (1, node.leaf_errors()),
        TreeNode::Internal { children, .. } => children.iter().fold((0, 0), |(l, e), c| {
            let (cl, ce) = subtree_errors(c);
            (l + cl, e + ce)
        }),
    }
}

fn check_node(node: &TreeNode) -> Result<(), TreeError> {
    if let TreeNode::Internal {
        rule,
        children,
        histogram,
        ..
    } = node
    {
        if children.len() != rule.arity() {
            return Err(TreeError::Invariant(format!(
                "node with arity {} has {} children",
                rule.arity(),
                children.len()
            )));
        }
        let mut sum = ClassHistogram::zeros(histogram.counts.len());
        for c in children {
            if c.histogram().counts.len() != histogram.counts.len() {
                return Err(TreeError::Invariant("histogram length mismatch".into()));
            }
            sum.merge(c.histogram());
        }
        if &sum != histogram {
            return Err(TreeError::Invariant(
                "node histogram is not the sum of its children".into(),
            ));
        }
    }
    Ok(())
}

/// Pessimistic error pruning, one top-down pass over training counts.
///
/// With `L` leaves under a node of `n` samples, the subtree's corrected error
/// is `E_sub = sum(leaf errors) + L/2` and the node-as-leaf error is
/// `E_leaf = errors(majority) + 1/2`. The node collapses to a majority leaf
/// when `E_leaf <= E_sub + sqrt(E_sub * (n - E_sub) / n)`; collapsed nodes are
/// not visited further.
pub fn prune_pessimistic(tree: TreeNode) -> Result<TreeNode, TreeError> {
    check_node(&tree)?;
    let TreeNode::Internal {
        rule,
        children,
        majority,
        histogram,
    } = tree
    else {
        return Ok(tree);
    };
    let n = histogram.total as f64;
    let (leaves, errors) = children.iter().fold((0, 0), |(l, e), c| {
        let (cl, ce) = subtree_errors(c);
        (l + cl, e + ce)
    });
    let e_sub = errors as f64 + 0.5 * leaves as f64;
    let e_leaf = histogram.errors() as f64 + 0.5;
    let std_err = if n > 0.0 {
        (e_sub * (n - e_sub) / n).max(0.0).sqrt()
    } else {
        0.0
    };
    if e_leaf <= e_sub + std_err {
        return Ok(TreeNode::Leaf {
            label: majority,
            histogram,
        });
    }
    let children = children
        .into_iter()
        .map(prune_pessimistic)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TreeNode::Internal {
        rule,
        children,
        majority,
        histogram,
    })
}

pub fn tree_stats(tree: &TreeNode) -> TreeStats {
    match tree {
        TreeNode::Leaf { .. } => TreeStats {
            depth: 0,
            leaf_count: 1,
            node_count: 1,
        },
        TreeNode::Internal { children, .. } => {
            let mut s = TreeStats {
                depth: 0,
                leaf_count: 0,
                node_count: 1,
            };
            for c in children {
                let cs = tree_stats(c);
                s.depth = s.depth.max(cs.depth + 1);
                s.leaf_count += cs.leaf_count;
                s.node_count += cs.node_count;
            }
            s
        }
    }
}

/// Percentage of `rows` whose prediction matches the label.
pub fn accuracy(tree: &TreeNode, data: &Dataset, rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let labels = data.labels();
    let hits = rows
        .iter()
        .filter(|&&r| predict(tree, &data.row(r)) == labels[r])
        .count();
    100.0 * hits as f64 / rows.len() as f64
}
