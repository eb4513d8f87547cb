//! Exact cosine-similarity top-k search over a frozen vector table.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::vocab::{l2_norm, ResolvedVectorTable};

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub similarity: f64,
    /// 1 = most similar.
    pub rank: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn finish(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    (dot / (norm_a * norm_b)).clamp(-1.0, 1.0)
}

/// Cosine similarity in 64-bit. Zero-norm inputs are an error, never 0.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("zero-norm vector".into()));
    }
    Ok(finish(dot(a, b), na, nb))
}

#[derive(Debug, Clone, Copy)]
pub enum Query<'a> {
    /// An entry key or alias; its canonical entry is excluded from the result.
    Key(&'a str),
    Vector(&'a [f64]),
}

/// Heap element ordered so that the worst candidate is the greatest.
#[derive(Clone, Copy)]
struct Scored {
    sim: f64,
    row: usize,
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        // Rows are in key order, so the row index breaks ties lexicographically.
        other
            .sim
            .total_cmp(&self.sim)
            .then(self.row.cmp(&other.row))
    }
}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scored {}

/// The `k` entries most similar to `query`, best first.
///
/// Ties are broken by ascending key. Entries with a zero vector have no
/// defined cosine and are never returned. Names in `exclude` may be aliases.
pub fn top_k(
    table: &ResolvedVectorTable,
    query: Query<'_>,
    k: usize,
    exclude: &HashSet<String>,
) -> Result<Vec<Neighbor>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let (qvec, qnorm, self_row) = match query {
        Query::Key(name) => {
            let row = table
                .row_of(name)
                .ok_or_else(|| Error::NotFound(format!("query {name:?} not in vocabulary")))?;
            (table.row(row), table.norm(row), Some(row))
        }
        Query::Vector(v) => {
            if v.len() != table.dim() {
                return Err(Error::DimMismatch {
                    expected: table.dim(),
                    found: v.len(),
                });
            }
            (v, l2_norm(v), None)
        }
    };
    if qnorm == 0.0 {
        return Err(Error::Degenerate("query vector has zero norm".into()));
    }

    let mut skip = vec![false; table.len()];
    if let Some(r) = self_row {
        skip[r] = true;
    }
    for name in exclude {
        if let Some(r) = table.row_of(name) {
            skip[r] = true;
        }
    }

    let mut heap: BinaryHeap<Scored> = BinaryHeap::with_capacity(k.min(table.len()) + 1);
    for (row, &skipped) in skip.iter().enumerate() {
        let norm = table.norm(row);
        if skipped || norm == 0.0 {
            continue;
        }
        let cand = Scored {
            sim: finish(dot(qvec, table.row(row)), qnorm, norm),
            row,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if let Some(worst) = heap.peek() {
            if cand < *worst {
                heap.pop();
                heap.push(cand);
            }
        }
    }

    Ok(heap
        .into_sorted_vec()
        .into_iter()
        .enumerate()
        .map(|(i, s)| Neighbor {
            word: table.key(s.row).to_owned(),
            similarity: s.sim,
            rank: i + 1,
        })
        .collect())
}
