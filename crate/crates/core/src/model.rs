//! A trained tree bundled with the dictionaries needed to read new rows, plus
//! its text and JSON renderings.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Column, ColumnKind, DataError, Dataset, Schema, MISSING_CATEGORY};
use crate::splitter::RuleKind;
use crate::tree::TreeNode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: ColumnKind,
    /// Category dictionary in code order; empty for numeric features.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub schema: Schema,
    pub features: Vec<FeatureMeta>,
    pub class_labels: Vec<String>,
    pub tree: TreeNode,
}

/// Rows encoded against a model's dictionaries.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedRows {
    pub rows: Vec<Vec<Cell>>,
    /// Per row, whether some categorical cell was absent from the dictionary.
    pub unseen: Vec<bool>,
}

impl TreeModel {
    pub fn new(data: &Dataset, tree: TreeNode) -> Self {
        let features = data
            .features()
            .iter()
            .map(|f| match &f.column {
                Column::Numeric(_) => FeatureMeta {
                    name: f.name.clone(),
                    kind: ColumnKind::Numeric,
                    categories: Vec::new(),
                },
                Column::Categorical { values, .. } => FeatureMeta {
                    name: f.name.clone(),
                    kind: ColumnKind::Categorical,
                    categories: values.clone(),
                },
            })
            .collect();
        TreeModel {
            schema: data.schema().clone(),
            features,
            class_labels: data.class_labels().to_vec(),
            tree,
        }
    }

    /// Encodes raw records whose columns are named by `header`. Columns are
    /// matched by name, so the target column and extra columns are optional.
    pub fn encode<R: AsRef<[S]>, S: AsRef<str>>(
        &self,
        header: &[String],
        records: &[R],
    ) -> Result<EncodedRows, DataError> {
        let positions: Vec<usize> = self
            .features
            .iter()
            .map(|f| {
                header.iter().position(|h| h == &f.name).ok_or_else(|| {
                    DataError::Schema(format!("input is missing feature column `{}`", f.name))
                })
            })
            .collect::<Result<_, _>>()?;
        let dicts: Vec<HashMap<&str, u32>> = self
            .features
            .iter()
            .map(|f| {
                f.categories
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.as_str(), i as u32))
                    .collect()
            })
            .collect();
        let mut out = EncodedRows {
            rows: Vec::with_capacity(records.len()),
            unseen: Vec::with_capacity(records.len()),
        };
        for (line, record) in (2u64..).zip(records) {
            let record = record.as_ref();
            let mut cells = Vec::with_capacity(self.features.len());
            let mut unseen = false;
            for ((f, &pos), dict) in self.features.iter().zip(&positions).zip(&dicts) {
                let raw = record.get(pos).map(|s| s.as_ref().trim()).unwrap_or("");
                match f.kind {
                    ColumnKind::Numeric => {
                        // Missing numerics route as NaN, which takes the `> t` branch.
                        let v = if raw.is_empty() || raw == MISSING_CATEGORY {
                            f64::NAN
                        } else {
                            raw.parse::<f64>().map_err(|_| DataError::NumericParse {
                                column: f.name.clone(),
                                line,
                                value: raw.to_string(),
                            })?
                        };
                        cells.push(Cell::Num(v));
                    }
                    ColumnKind::Categorical => {
                        let key = if raw.is_empty() {
                            MISSING_CATEGORY
                        } else {
                            raw
                        };
                        let code = dict.get(key).copied();
                        unseen |= code.is_none();
                        cells.push(Cell::Cat(code));
                    }
                }
            }
            out.rows.push(cells);
            out.unseen.push(unseen);
        }
        Ok(out)
    }

    /// Indented human-readable rendering, one node per line.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.render_node(&self.tree, 0, &mut out);
        out
    }

    fn counts(&self, node: &TreeNode) -> String {
        let h = node.histogram();
        let parts: Vec<String> = self
            .class_labels
            .iter()
            .zip(&h.counts)
            .map(|(l, c)| format!("{l}:{c}"))
            .collect();
        parts.join(" ")
    }

    fn render_node(&self, node: &TreeNode, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match node {
            TreeNode::Leaf { label, .. } => {
                let _ = writeln!(
                    out,
                    "{pad}leaf {} [{}]",
                    self.class_labels[*label as usize],
                    self.counts(node)
                );
            }
            TreeNode::Internal { rule, children, .. } => {
                let feature = &self.features[rule.feature];
                let _ = writeln!(out, "{pad}split {} [{}]", feature.name, self.counts(node));
                for (i, child) in children.iter().enumerate() {
                    let cond = match &rule.kind {
                        RuleKind::Threshold(t) if i == 0 => format!("{} <= {t}", feature.name),
                        RuleKind::Threshold(t) => format!("{} > {t}", feature.name),
                        RuleKind::Fanout(c) => {
                            format!("{} = {}", feature.name, feature.categories[c[i] as usize])
                        }
                    };
                    let _ = writeln!(out, "{pad}  if {cond}:");
                    self.render_node(child, indent + 2, out);
                }
            }
        }
    }
}
