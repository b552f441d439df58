//! Test-only oracles and generators shared by the integration suites.
#![allow(dead_code)]

use std::path::PathBuf;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use treegain::dataset::{Column, ColumnKind, ColumnSpec, Dataset, Schema, SchemaSource};
use treegain::impurity::{self, ContingencyTable, Criterion, Score};

pub struct Rng(SplitMix64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(SplitMix64::seed_from_u64(seed))
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.0.next_u64() % (hi - lo + 1)
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Random table with `1..=max_j` partitions and `1..=max_k` classes whose
/// grand total is at most `max_n` (and at least 1).
pub fn random_table(rng: &mut Rng, max_j: u64, max_k: u64, max_n: u64) -> Vec<Vec<u64>> {
    let j = rng.range(1, max_j) as usize;
    let k = rng.range(1, max_k) as usize;
    let n = rng.range(1, max_n);
    let mut cells = vec![vec![0u64; k]; j];
    // Skew the cell weights so both lopsided and even tables show up.
    let weights: Vec<f64> = (0..j * k).map(|_| rng.unit().powi(3) + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut placed = 0;
    for (i, w) in weights.iter().enumerate() {
        let c = ((w / total) * n as f64).floor() as u64;
        cells[i / k][i % k] = c;
        placed += c;
    }
    while placed < n {
        let i = rng.range(0, (j * k - 1) as u64) as usize;
        cells[i / k][i % k] += 1;
        placed += 1;
    }
    cells
}

/// Dataset of `n` rows with up to 4 mixed features, built from strings.
pub fn random_dataset(rng: &mut Rng, max_rows: u64, max_features: u64) -> Dataset {
    let n = rng.range(2, max_rows) as usize;
    let n_features = rng.range(1, max_features) as usize;
    let n_classes = rng.range(2, 3);
    let mut cols = Vec::new();
    let mut kinds = Vec::new();
    for f in 0..n_features {
        let kind = match rng.range(0, 2) {
            0 => ColumnKind::Categorical,
            _ => ColumnKind::Numeric,
        };
        kinds.push((kind, rng.range(2, 6), rng.range(0, 1) == 0));
        cols.push(ColumnSpec {
            name: format!("f{f}"),
            kind,
        });
    }
    cols.push(ColumnSpec {
        name: "class".into(),
        kind: ColumnKind::Categorical,
    });
    let schema = Schema::new(cols, "class").unwrap();
    let rows: Vec<Vec<String>> = (0..n)
        .map(|_| {
            let mut r: Vec<String> = kinds
                .iter()
                .map(|&(kind, levels, coarse)| match kind {
                    ColumnKind::Categorical => format!("c{}", rng.range(0, levels - 1)),
                    ColumnKind::Numeric if coarse => rng.range(0, levels).to_string(),
                    ColumnKind::Numeric => format!("{:.4}", rng.unit() * 10.0 - 5.0),
                })
                .collect();
            r.push(format!("k{}", rng.range(0, n_classes - 1)));
            r
        })
        .collect();
    Dataset::from_records("random", schema, rows).unwrap()
}

/// One enumerated rule, described by the row sets it induces.
#[derive(Debug, Clone)]
pub struct BruteCandidate {
    pub feature: usize,
    pub children: Vec<Vec<usize>>,
    pub score: Score,
}

/// Exhaustive best split: every midpoint threshold and every fan-out, each
/// scored from counts tallied directly off the raw rows.
pub fn brute_force_best(
    data: &Dataset,
    rows: &[usize],
    criterion: Criterion,
) -> Option<BruteCandidate> {
    let k = data.n_classes();
    let labels = data.labels();
    let mut best: Option<BruteCandidate> = None;
    for (f, feature) in data.features().iter().enumerate() {
        let mut rules: Vec<Vec<Vec<usize>>> = Vec::new();
        match &feature.column {
            Column::Numeric(values) => {
                let mut distinct: Vec<f64> = rows.iter().map(|&r| values[r]).collect();
                distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
                distinct.dedup();
                for w in distinct.windows(2) {
                    let t = (w[0] + w[1]) / 2.0;
                    let left = rows.iter().copied().filter(|&r| values[r] <= t).collect();
                    let right = rows.iter().copied().filter(|&r| values[r] > t).collect();
                    rules.push(vec![left, right]);
                }
            }
            Column::Categorical { codes, values } => {
                let children: Vec<Vec<usize>> = (0..values.len() as u32)
                    .map(|c| {
                        rows.iter()
                            .copied()
                            .filter(|&r| codes[r] == c)
                            .collect::<Vec<_>>()
                    })
                    .filter(|v| !v.is_empty())
                    .collect();
                if children.len() >= 2 {
                    rules.push(children);
                }
            }
        }
        for children in rules {
            let table: Vec<Vec<u64>> = children
                .iter()
                .map(|ch| {
                    let mut counts = vec![0u64; k];
                    for &r in ch {
                        counts[labels[r] as usize] += 1;
                    }
                    counts
                })
                .collect();
            let table = ContingencyTable::new(&table).unwrap();
            let score = impurity::score(&table, criterion).unwrap();
            let nonempty = children.iter().filter(|c| !c.is_empty()).count();
            if !(score.valid && score.value > 0.0 && nonempty >= 2) {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => (score.value, score.gain) > (b.score.value, b.score.gain),
            };
            if better {
                best = Some(BruteCandidate {
                    feature: f,
                    children,
                    score,
                });
            }
        }
    }
    best
}

// Instances found by `oracle/trap_search.py`; their scores are frozen in the tests.

/// Twelve rows: a unique identifier per row and a binary feature whose
/// table against the class is [[6,1],[0,5]].
pub fn id_trap() -> Dataset {
    let schema = Schema::new(
        vec![
            ColumnSpec {
                name: "id".into(),
                kind: ColumnKind::Categorical,
            },
            ColumnSpec {
                name: "signal".into(),
                kind: ColumnKind::Categorical,
            },
            ColumnSpec {
                name: "class".into(),
                kind: ColumnKind::Categorical,
            },
        ],
        "class",
    )
    .unwrap();
    let rows: Vec<[String; 3]> = (0..12)
        .map(|i| {
            let signal = if i < 7 { "a" } else { "b" };
            let class = if i < 6 { "neg" } else { "pos" };
            [format!("r{i:02}"), signal.into(), class.into()]
        })
        .collect();
    Dataset::from_records("id-trap", schema, rows).unwrap()
}

/// Eight rows at x = 1..8 whose classes, in x order, are 1 0 0 0 1 1 1 0.
pub fn unbalance_trap() -> Dataset {
    let schema = Schema::new(
        vec![
            ColumnSpec {
                name: "x".into(),
                kind: ColumnKind::Numeric,
            },
            ColumnSpec {
                name: "class".into(),
                kind: ColumnKind::Categorical,
            },
        ],
        "class",
    )
    .unwrap();
    let labels = [1, 0, 0, 0, 1, 1, 1, 0];
    let rows: Vec<[String; 2]> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| [(i + 1).to_string(), l.to_string()])
        .collect();
    Dataset::from_records("unbalance-trap", schema, rows).unwrap()
}

pub fn data_dir() -> PathBuf {
    std::env::var_os("TREEGAIN_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            let crate_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
            crate_dir
                .ancestors()
                .nth(2)
                .unwrap_or(crate_dir)
                .join("data")
        })
}

/// Benchmark files written by `scripts/fetch_datasets.py`, with their targets.
pub const BENCHMARKS: &[(&str, &str)] = &[
    ("glass", "type"),
    ("bupa", "selector"),
    ("heart", "class"),
    ("balance", "class"),
    ("survival", "survival"),
    ("pima", "class"),
    ("wine", "class"),
    ("bank", "y"),
    ("income", "income"),
    ("letter", "lettr"),
];

pub fn load_benchmark(name: &str) -> Result<Dataset, String> {
    let target = BENCHMARKS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| format!("unknown benchmark {name}"))?;
    let path = data_dir().join(format!("{name}.csv"));
    if !path.exists() {
        return Err(format!(
            "{} not found; run scripts/fetch_datasets.py",
            path.display()
        ));
    }
    treegain::load_csv(
        &path,
        &SchemaSource::Infer {
            target: target.into(),
        },
    )
    .map_err(|e| e.to_string())
}
