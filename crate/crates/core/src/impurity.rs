//! Impurity measures and split-gain criteria over contingency tables.
//!
//! Logarithms are base 2 throughout. The base matters for the balanced gain
//! ratio, whose `1 +` term is not scale-free, so it is fixed here rather than
//! left to callers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ClassHistogram;

/// Gains within this distance of zero are treated as exactly zero.
pub const GAIN_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImpurityError {
    #[error("histogram has no samples")]
    EmptyHistogram,
    #[error("contingency table has no samples")]
    EmptyTable,
    #[error("contingency table is malformed: {0}")]
    Malformed(String),
}

/// Partition-by-class counts for one split: `cells[j][k]` samples of class
/// `k` routed to partition `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    n_classes: usize,
    cells: Vec<u64>,
    row_totals: Vec<u64>,
    col_totals: Vec<u64>,
    grand_total: u64,
}

impl ContingencyTable {
    pub fn new<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self, ImpurityError> {
        let n_classes = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.is_empty() || n_classes == 0 {
            return Err(ImpurityError::Malformed("need J >= 1 and K >= 1".into()));
        }
        let mut cells = Vec::with_capacity(rows.len() * n_classes);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_classes {
                return Err(ImpurityError::Malformed(format!(
                    "row of length {} in a table with {n_classes} classes",
                    r.len()
                )));
            }
            cells.extend_from_slice(r);
        }
        Ok(Self::from_flat(n_classes, cells))
    }

    /// Two-partition table; `left` and `right` must have equal length.
    pub fn binary(left: &[u64], right: &[u64]) -> Self {
        assert_eq!(left.len(), right.len());
        let mut cells = Vec::with_capacity(2 * left.len());
        cells.extend_from_slice(left);
        cells.extend_from_slice(right);
        Self::from_flat(left.len(), cells)
    }

    fn from_flat(n_classes: usize, cells: Vec<u64>) -> Self {
        let n_parts = cells.len() / n_classes;
        let mut row_totals = vec![0; n_parts];
        let mut col_totals = vec![0; n_classes];
        for (j, row) in cells.chunks_exact(n_classes).enumerate() {
            for (k, &c) in row.iter().enumerate() {
                row_totals[j] += c;
                col_totals[k] += c;
            }
        }
        let grand_total = row_totals.iter().sum();
        ContingencyTable {
            n_classes,
            cells,
            row_totals,
            col_totals,
            grand_total,
        }
    }

    pub fn n_partitions(&self) -> usize {
        self.row_totals.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, j: usize) -> &[u64] {
        &self.cells[j * self.n_classes..(j + 1) * self.n_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.cells.chunks_exact(self.n_classes)
    }

    pub fn row_totals(&self) -> &[u64] {
        &self.row_totals
    }

    pub fn col_totals(&self) -> &[u64] {
        &self.col_totals
    }

    pub fn grand_total(&self) -> u64 {
        self.grand_total
    }

    /// Partitions with at least one sample.
    pub fn nonempty_partitions(&self) -> usize {
        self.row_totals.iter().filter(|&&t| t > 0).count()
    }

    fn check(&self) -> Result<(), ImpurityError> {
        if self.grand_total == 0 {
            Err(ImpurityError::EmptyTable)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Entropy,
    Gini,
}

/// Split-gain criterion used for a whole induction run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    InformationGain,
    GainRatio,
    BalancedGainRatio,
    GiniGain,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::InformationGain,
        Criterion::GainRatio,
        Criterion::BalancedGainRatio,
        Criterion::GiniGain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::InformationGain => "information-gain",
            Criterion::GainRatio => "gain-ratio",
            Criterion::BalancedGainRatio => "balanced-gain-ratio",
            Criterion::GiniGain => "gini-gain",
        }
    }

    /// Column heading used in comparison tables.
    pub fn title(self) -> &'static str {
        match self {
            Criterion::InformationGain => "Information Gain",
            Criterion::GainRatio => "Gain Ratio",
            Criterion::BalancedGainRatio => "Balanced Gain Ratio",
            Criterion::GiniGain => "Gini Gain",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown criterion `{0}`; valid criteria are information-gain, gain-ratio, balanced-gain-ratio, gini-gain")]
pub struct UnknownCriterion(pub String);

impl FromStr for Criterion {
    type Err = UnknownCriterion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| UnknownCriterion(s.to_string()))
    }
}

/// Result of scoring one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    /// The value being maximised.
    pub value: f64,
    /// Unnormalised purity gain (entropy, or Gini for `gini-gain`).
    pub gain: f64,
    pub split_info: f64,
    /// False when the criterion is undefined for this split (gain ratio with
    /// zero split information).
    pub valid: bool,
}

fn entropy_counts(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

fn gini_counts(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

fn impurity_counts(counts: &[u64], total: u64, measure: Measure) -> f64 {
    match measure {
        Measure::Entropy => entropy_counts(counts, total),
        Measure::Gini => gini_counts(counts, total),
    }
}

/// Shannon entropy in bits.
pub fn entropy(hist: &ClassHistogram) -> Result<f64, ImpurityError> {
    if hist.total == 0 {
        return Err(ImpurityError::EmptyHistogram);
    }
    Ok(entropy_counts(&hist.counts, hist.total))
}

/// Gini impurity `1 - sum p_k^2`.
pub fn gini(hist: &ClassHistogram) -> Result<f64, ImpurityError> {
    if hist.total == 0 {
        return Err(ImpurityError::EmptyHistogram);
    }
    Ok(gini_counts(&hist.counts, hist.total))
}

/// Parent impurity minus the size-weighted child impurities, clamped at zero
/// within [`GAIN_EPSILON`].
pub fn purity_gain(table: &ContingencyTable, measure: Measure) -> Result<f64, ImpurityError> {
    table.check()?;
    let n = table.grand_total as f64;
    let parent = impurity_counts(&table.col_totals, table.grand_total, measure);
    let children: f64 = table
        .rows()
        .zip(&table.row_totals)
        .filter(|(_, &t)| t > 0)
        .map(|(row, &t)| t as f64 / n * impurity_counts(row, t, measure))
        .sum();
    let gain = parent - children;
    Ok(if gain < GAIN_EPSILON { 0.0 } else { gain })
}

/// Entropy, in bits, of the partition sizes.
pub fn split_information(table: &ContingencyTable) -> Result<f64, ImpurityError> {
    table.check()?;
    Ok(entropy_counts(&table.row_totals, table.grand_total))
}

pub fn information_gain(table: &ContingencyTable) -> Result<Score, ImpurityError> {
    let gain = purity_gain(table, Measure::Entropy)?;
    Ok(Score {
        value: gain,
        gain,
        split_info: split_information(table)?,
        valid: true,
    })
}

pub fn gini_gain(table: &ContingencyTable) -> Result<Score, ImpurityError> {
    let gain = purity_gain(table, Measure::Gini)?;
    Ok(Score {
        value: gain,
        gain,
        split_info: split_information(table)?,
        valid: true,
    })
}

/// Entropy gain over split information; zero and invalid when the split
/// information is zero.
pub fn gain_ratio(table: &ContingencyTable) -> Result<Score, ImpurityError> {
    let gain = purity_gain(table, Measure::Entropy)?;
    let split_info = split_information(table)?;
    if split_info <= 0.0 {
        return Ok(Score {
            value: 0.0,
            gain,
            split_info,
            valid: false,
        });
    }
    Ok(Score {
        value: gain / split_info,
        gain,
        split_info,
        valid: true,
    })
}

/// Entropy gain over `1 + split information`.
pub fn balanced_gain_ratio(table: &ContingencyTable) -> Result<Score, ImpurityError> {
    let gain = purity_gain(table, Measure::Entropy)?;
    let split_info = split_information(table)?;
    Ok(Score {
        value: gain / (1.0 + split_info),
        gain,
        split_info,
        valid: true,
    })
}

pub fn score(table: &ContingencyTable, criterion: Criterion) -> Result<Score, ImpurityError> {
    match criterion {
        Criterion::InformationGain => information_gain(table),
        Criterion::GainRatio => gain_ratio(table),
        Criterion::BalancedGainRatio => balanced_gain_ratio(table),
        Criterion::GiniGain => gini_gain(table),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(c: &[u64]) -> ClassHistogram {
        ClassHistogram::from_counts(c.to_vec())
    }

    fn table(rows: &[&[u64]]) -> ContingencyTable {
        ContingencyTable::new(rows).unwrap()
    }

    #[test]
    fn entropy_fixtures() {
        assert_eq!(entropy(&hist(&[8, 0])).unwrap(), 0.0);
        assert_eq!(entropy(&hist(&[4, 4])).unwrap(), 1.0);
        assert!((entropy(&hist(&[2, 6])).unwrap() - 0.811_278_124_459_132_9).abs() < 1e-12);
    }

    #[test]
    fn gini_fixtures() {
        assert_eq!(gini(&hist(&[8, 0])).unwrap(), 0.0);
        assert_eq!(gini(&hist(&[4, 4])).unwrap(), 0.5);
        assert!((gini(&hist(&[2, 6])).unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn empty_inputs_error() {
        assert_eq!(entropy(&hist(&[0, 0])), Err(ImpurityError::EmptyHistogram));
        assert_eq!(gini(&hist(&[0, 0])), Err(ImpurityError::EmptyHistogram));
        let t = table(&[&[0, 0], &[0, 0]]);
        assert_eq!(
            purity_gain(&t, Measure::Entropy),
            Err(ImpurityError::EmptyTable)
        );
        assert_eq!(split_information(&t), Err(ImpurityError::EmptyTable));
        for c in Criterion::ALL {
            assert_eq!(score(&t, c), Err(ImpurityError::EmptyTable));
        }
    }

    #[test]
    fn malformed_tables() {
        assert!(ContingencyTable::new::<&[u64]>(&[]).is_err());
        assert!(ContingencyTable::new(&[&[1u64, 2][..], &[1][..]]).is_err());
    }

    #[test]
    fn purity_gain_fixtures() {
        assert_eq!(
            purity_gain(&table(&[&[4, 0], &[0, 4]]), Measure::Entropy).unwrap(),
            1.0
        );
        assert_eq!(
            purity_gain(&table(&[&[3, 5]]), Measure::Entropy).unwrap(),
            0.0
        );
        let g = purity_gain(&table(&[&[3, 1], &[1, 3]]), Measure::Entropy).unwrap();
        assert!((g - 0.188_721_875_540_867_1).abs() < 1e-12);
    }

    #[test]
    fn split_information_fixtures() {
        assert_eq!(split_information(&table(&[&[3, 1], &[2, 2]])).unwrap(), 1.0);
        assert_eq!(split_information(&table(&[&[3, 1]])).unwrap(), 0.0);
        let singletons: Vec<[u64; 2]> = (0..8)
            .map(|i| if i < 4 { [1, 0] } else { [0, 1] })
            .collect();
        assert_eq!(
            split_information(&ContingencyTable::new(&singletons).unwrap()).unwrap(),
            3.0
        );
    }

    #[test]
    fn gain_ratio_fixtures() {
        let s = gain_ratio(&table(&[&[4, 0], &[0, 4]])).unwrap();
        assert_eq!(
            (s.value, s.gain, s.split_info, s.valid),
            (1.0, 1.0, 1.0, true)
        );
        assert_eq!(gain_ratio(&table(&[&[2, 2], &[2, 2]])).unwrap().value, 0.0);
        let s = gain_ratio(&table(&[&[4, 4], &[0, 0]])).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(!s.valid);
    }

    #[test]
    fn balanced_fixtures() {
        let s = balanced_gain_ratio(&table(&[&[4, 0], &[0, 4]])).unwrap();
        assert_eq!((s.value, s.gain, s.split_info), (0.5, 1.0, 1.0));
        let s = balanced_gain_ratio(&table(&[&[4, 4]])).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.valid);
    }

    #[test]
    fn dispatch() {
        let t = table(&[&[4, 0], &[0, 4]]);
        assert_eq!(score(&t, Criterion::InformationGain).unwrap().value, 1.0);
        assert_eq!(score(&t, Criterion::BalancedGainRatio).unwrap().value, 0.5);
        assert_eq!(score(&t, Criterion::GiniGain).unwrap().value, 0.5);
    }

    #[test]
    fn criterion_names() {
        for c in Criterion::ALL {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
            assert_eq!(
                serde_json::to_string(&c).unwrap(),
                format!("\"{}\"", c.name())
            );
        }
        let err = "entropy".parse::<Criterion>().unwrap_err().to_string();
        for c in Criterion::ALL {
            assert!(err.contains(c.name()));
        }
    }
}
