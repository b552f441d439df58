//! Decision-tree induction with interchangeable split-gain criteria.
//!
//! The pipeline is [`dataset`] (typed CSV tables and node views) →
//! [`splitter`] (candidate enumeration, scored through [`impurity`]) →
//! [`tree`] (recursive induction, pessimistic pruning, prediction) →
//! [`eval`] (repeated stratified cross-validation). [`cli`] wires them into the
//! `treegain` binary.

pub mod cli;
pub mod dataset;
pub mod eval;
pub mod impurity;
pub mod model;
pub mod splitter;
pub mod tree;

pub use dataset::{load_csv, ClassHistogram, Dataset, NodeView, Schema, SchemaSource};
pub use eval::{compare, cross_validate, stratified_folds, CvPlan, EvaluationReport};
pub use impurity::{ContingencyTable, Criterion, Score};
pub use model::TreeModel;
pub use splitter::{best_split, SplitCandidate, SplitRule};
pub use tree::{
    induce, predict, prune_pessimistic, tree_stats, InductionConfig, Pruning, TreeNode, TreeStats,
};
