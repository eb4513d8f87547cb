//! Seed-based candidate acquisition: per-seed neighbour lists, average-rank
//! fusion, near-duplicate name filtering and truncation.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sim::{top_k, Neighbor, Query};
use crate::vocab::ResolvedVectorTable;

pub const DEFAULT_PER_SEED_K: usize = 2802;
pub const DEFAULT_FINAL_CUT: usize = 2802;
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.7;

fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(w1: &str, w2: &str) -> usize {
    let a: Vec<char> = w1.chars().collect();
    let b: Vec<char> = w2.chars().collect();
    levenshtein_chars(&a, &b)
}

fn overlap_from(ld: usize, max_len: usize) -> f64 {
    1.0 - ld as f64 / max_len as f64
}

/// `1 - LD(w1, w2) / max(len(w1), len(w2))`: 1.0 for identical names, 0.0
/// for equal-length names with no position in common. Grows with similarity.
pub fn name_overlap(w1: &str, w2: &str) -> Result<f64> {
    let a: Vec<char> = w1.chars().collect();
    let b: Vec<char> = w2.chars().collect();
    let m = a.len().max(b.len());
    if m == 0 {
        return Err(Error::InvalidArgument(
            "name overlap is undefined for two empty strings".into(),
        ));
    }
    Ok(overlap_from(levenshtein_chars(&a, &b), m))
}

/// Ordered, de-duplicated seed names.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    seeds: Vec<String>,
    label: String,
}

impl SeedSet {
    pub fn new<I, S>(seeds: I, label: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<String> = Vec::new();
        for s in seeds {
            let s = s.as_ref().trim().to_lowercase();
            if s.is_empty() {
                return Err(Error::InvalidArgument("empty seed name".into()));
            }
            if out.contains(&s) {
                return Err(Error::Integrity(format!("duplicate seed {s:?}")));
            }
            out.push(s);
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("seed set is empty".into()));
        }
        Ok(SeedSet {
            seeds: out,
            label: label.into(),
        })
    }

    pub fn seeds(&self) -> &[String] {
        &self.seeds
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Maps every seed to its canonical entry key.
    pub fn canonicalize(&self, table: &ResolvedVectorTable) -> Result<SeedSet> {
        let mut out: Vec<String> = Vec::with_capacity(self.seeds.len());
        for s in &self.seeds {
            let c = table
                .canonical(s)
                .ok_or_else(|| Error::NotFound(format!("seed {s:?} not in vocabulary")))?;
            if let Some(prev) = out.iter().position(|o| o == c) {
                return Err(Error::Integrity(format!(
                    "seeds {:?} and {s:?} are synonyms of {c:?}",
                    self.seeds[prev]
                )));
            }
            out.push(c.to_owned());
        }
        Ok(SeedSet {
            seeds: out,
            label: self.label.clone(),
        })
    }
}

/// Reads a seed list: one name per line, `#` comments, order preserved.
pub fn read_name_list<R: BufRead>(source: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in source.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.to_lowercase());
    }
    Ok(out)
}

/// The `size` best-ranked entries of a pre-ranked list.
pub fn sample_seeds<S: AsRef<str>>(ranked: &[S], size: usize) -> Result<SeedSet> {
    if size == 0 {
        return Err(Error::InvalidArgument(
            "seed sample size must be positive".into(),
        ));
    }
    if size > ranked.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {size} seeds from a list of {}",
            ranked.len()
        )));
    }
    SeedSet::new(&ranked[..size], format!("top-{size}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedCandidate {
    pub word: String,
    pub avg_rank: f64,
    /// Number of seed lists the word appeared in.
    pub support: usize,
    pub best_similarity: f64,
}

/// Average-rank fusion over the lists a word appears in.
///
/// Output order: `avg_rank` ascending, then `support` descending, then key.
pub fn fuse<S: AsRef<str>>(per_seed: &[(S, Vec<Neighbor>)]) -> Result<Vec<FusedCandidate>> {
    if per_seed.is_empty() {
        return Err(Error::InvalidArgument("no neighbour lists to fuse".into()));
    }
    struct Acc {
        rank_sum: u64,
        support: usize,
        best: f64,
    }
    let mut acc: HashMap<&str, Acc> = HashMap::new();
    for (_, list) in per_seed {
        for n in list {
            let e = acc.entry(n.word.as_str()).or_insert(Acc {
                rank_sum: 0,
                support: 0,
                best: f64::NEG_INFINITY,
            });
            e.rank_sum += n.rank as u64;
            e.support += 1;
            if n.similarity > e.best {
                e.best = n.similarity;
            }
        }
    }
    let mut out: Vec<FusedCandidate> = acc
        .into_iter()
        .map(|(w, a)| FusedCandidate {
            word: w.to_owned(),
            avg_rank: a.rank_sum as f64 / a.support as f64,
            support: a.support,
            best_similarity: a.best,
        })
        .collect();
    out.sort_by(|a, b| {
        a.avg_rank
            .total_cmp(&b.avg_rank)
            .then(b.support.cmp(&a.support))
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(out)
}

/// Scans best to worst, dropping any candidate whose name overlap with a
/// seed or an already kept candidate exceeds `threshold`. Stops after
/// `limit` kept candidates when given.
pub fn name_filter<S: AsRef<str>>(
    candidates: Vec<FusedCandidate>,
    seeds: &[S],
    threshold: f64,
    limit: Option<usize>,
) -> Result<Vec<FusedCandidate>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "overlap threshold {threshold} outside (0, 1]"
        )));
    }
    let limit = limit.unwrap_or(usize::MAX);
    let mut reference: Vec<Vec<char>> =
        seeds.iter().map(|s| s.as_ref().chars().collect()).collect();
    let mut kept = Vec::new();
    for cand in candidates {
        if kept.len() >= limit {
            break;
        }
        let c: Vec<char> = cand.word.chars().collect();
        let clash = reference.iter().any(|r| {
            let m = c.len().max(r.len());
            if m == 0 {
                return true;
            }
            // LD is at least the length difference; skip pairs that cannot clash.
            if overlap_from(c.len().abs_diff(r.len()), m) <= threshold {
                return false;
            }
            overlap_from(levenshtein_chars(&c, r), m) > threshold
        });
        if !clash {
            reference.push(c);
            kept.push(cand);
        }
    }
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquireParams {
    pub per_seed_k: usize,
    pub final_cut: usize,
    pub threshold: f64,
}

impl Default for AcquireParams {
    fn default() -> Self {
        AcquireParams {
            per_seed_k: DEFAULT_PER_SEED_K,
            final_cut: DEFAULT_FINAL_CUT,
            threshold: DEFAULT_OVERLAP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// Canonical seed keys.
    pub seeds: SeedSet,
    pub params: AcquireParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub candidates: Vec<FusedCandidate>,
    pub provenance: Provenance,
}

impl CandidateList {
    pub fn names(&self) -> Vec<String> {
        self.candidates.iter().map(|c| c.word.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rank\tcandidate\tavg_rank\tsupport\tbest_similarity")?;
        for (i, c) in self.candidates.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                i + 1,
                c.word,
                c.avg_rank,
                c.support,
                c.best_similarity
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads the candidate column of a candidate TSV, in row order.
pub fn read_candidate_names<R: BufRead>(source: R) -> Result<Vec<String>> {
    let mut lines = source.lines();
    let header = match lines.next() {
        Some(l) => l?,
        None => return Err(Error::parse(1, "missing header")),
    };
    let col = header
        .split('\t')
        .position(|h| h.trim() == "candidate")
        .ok_or_else(|| Error::parse(1, "no `candidate` column"))?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let name = line
            .split('\t')
            .nth(col)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::parse(i + 2, "missing candidate field"))?;
        out.push(name.to_lowercase());
    }
    Ok(out)
}

/// Per-seed neighbour lists (all seed-set members excluded), in seed order.
pub fn neighbor_lists(
    table: &ResolvedVectorTable,
    seeds: &SeedSet,
    per_seed_k: usize,
) -> Result<Vec<(String, Vec<Neighbor>)>> {
    let exclude: HashSet<String> = seeds.seeds().iter().cloned().collect();
    seeds
        .seeds()
        .par_iter()
        .map(|s| {
            Ok((
                s.clone(),
                top_k(table, Query::Key(s), per_seed_k, &exclude)?,
            ))
        })
        .collect()
}

/// End-to-end candidate acquisition for one seed set.
pub fn acquire(
    table: &ResolvedVectorTable,
    seeds: &SeedSet,
    params: AcquireParams,
) -> Result<CandidateList> {
    if params.per_seed_k == 0 || params.final_cut == 0 {
        return Err(Error::InvalidArgument(
            "per-seed k and final cut must be positive".into(),
        ));
    }
    let seeds = seeds.canonicalize(table)?;
    let lists = neighbor_lists(table, &seeds, params.per_seed_k)?;
    let fused = fuse(&lists)?;
    let kept = name_filter(
        fused,
        seeds.seeds(),
        params.threshold,
        Some(params.final_cut),
    )?;
    Ok(CandidateList {
        candidates: kept,
        provenance: Provenance { seeds, params },
    })
}
