//! Independent brute-force oracles and synthetic fixtures.
//!
//! Nothing here calls into the optimized code paths of `lbd-core`; only the
//! plain data types are shared.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use lbd_core::embstore::EmbeddingRecord;
use lbd_core::sim::Neighbor;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- streams

/// Encodes a `.cemb` stream byte by byte, without the library writer.
pub fn encode_cemb(dim: u32, records: &[EmbeddingRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"CEMB");
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for r in records {
        assert_eq!(r.vector.len(), dim as usize);
        out.extend_from_slice(&r.doc_id.to_le_bytes());
        out.extend_from_slice(&r.seq_id.to_le_bytes());
        out.extend_from_slice(&r.word_idx.to_le_bytes());
        out.extend_from_slice(&(r.word_text.len() as u16).to_le_bytes());
        out.extend_from_slice(r.word_text.as_bytes());
        for v in &r.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn word_name(i: usize) -> String {
    format!("w{i:04}")
}

/// Random subword stream: `n_words_total` word occurrences drawn from a
/// vocabulary of `vocab` words, each split into 1..=`max_pieces` records.
/// Documents hold a few sequences of a few words each.
pub fn random_records(
    rng: &mut impl Rng,
    vocab: usize,
    n_words_total: usize,
    dim: usize,
    max_pieces: usize,
) -> Vec<EmbeddingRecord> {
    let mut out = Vec::new();
    let (mut doc, mut seq, mut idx) = (0u32, 0u32, 0u32);
    for _ in 0..n_words_total {
        let word = word_name(rng.gen_range(0..vocab));
        let pieces = rng.gen_range(1..=max_pieces);
        for _ in 0..pieces {
            out.push(EmbeddingRecord {
                doc_id: doc,
                seq_id: seq,
                word_idx: idx,
                word_text: word.clone(),
                vector: (0..dim).map(|_| rng.gen_range(-2.0f32..2.0)).collect(),
            });
        }
        idx += 1;
        if rng.gen_bool(0.1) {
            idx = 0;
            seq += 1;
            if rng.gen_bool(0.3) {
                seq = 0;
                doc += 1;
            }
        }
    }
    out
}

/// Occurrences in stream order: buffers every record, groups by key.
pub fn oracle_occurrences(records: &[EmbeddingRecord]) -> Vec<(String, Vec<f64>)> {
    let mut groups: BTreeMap<(u32, u32, u32), Vec<&EmbeddingRecord>> = BTreeMap::new();
    let mut first_seen: Vec<(u32, u32, u32)> = Vec::new();
    for r in records {
        let key = (r.doc_id, r.seq_id, r.word_idx);
        let g = groups.entry(key).or_default();
        if g.is_empty() {
            first_seen.push(key);
        }
        g.push(r);
    }
    first_seen
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let dim = g[0].vector.len();
            let mut mean = vec![0.0f64; dim];
            for r in g {
                for (m, v) in mean.iter_mut().zip(&r.vector) {
                    *m += *v as f64;
                }
            }
            for m in &mut mean {
                *m /= g.len() as f64;
            }
            (g[0].word_text.clone(), mean)
        })
        .collect()
}

/// Materializes every word's occurrence list and averages it.
pub fn oracle_batch_mean(
    occurrences: &[(String, Vec<f64>)],
    min_count: u64,
) -> BTreeMap<String, (Vec<f64>, u64)> {
    let mut lists: BTreeMap<String, Vec<&Vec<f64>>> = BTreeMap::new();
    for (w, v) in occurrences {
        lists.entry(w.clone()).or_default().push(v);
    }
    lists
        .into_iter()
        .filter(|(_, l)| l.len() as u64 >= min_count)
        .map(|(w, l)| {
            let dim = l[0].len();
            let mean = (0..dim)
                .map(|d| l.iter().map(|v| v[d]).sum::<f64>() / l.len() as f64)
                .collect();
            (w, (mean, l.len() as u64))
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1e-300);
    (a - b).abs() <= tol * scale.max(1.0)
}

// ---------------------------------------------------------------- similarity

/// Dense vocabulary used by the similarity oracles: sorted keys with vectors.
#[derive(Debug, Clone)]
pub struct Vocab {
    pub keys: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl Vocab {
    pub fn index(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }
}

pub fn random_vocab(rng: &mut impl Rng, n: usize, dim: usize) -> Vocab {
    let mut names: BTreeSet<String> = BTreeSet::new();
    while names.len() < n {
        let len = rng.gen_range(2..8);
        let s: String = (0..len)
            .map(|_| rng.gen_range(b'a'..=b'z') as char)
            .collect();
        names.insert(s);
    }
    let keys: Vec<String> = names.into_iter().collect();
    let vectors = keys
        .iter()
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    Vocab { keys, vectors }
}

pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Exhaustive scan with a full total-order sort.
pub fn oracle_top_k(
    vocab: &Vocab,
    query: &[f64],
    self_key: Option<&str>,
    k: usize,
    exclude: &HashSet<String>,
) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = vocab
        .keys
        .iter()
        .zip(&vocab.vectors)
        .filter(|(key, v)| {
            Some(key.as_str()) != self_key && !exclude.contains(*key) && v.iter().any(|x| *x != 0.0)
        })
        .map(|(key, v)| (key.clone(), oracle_cosine(query, v)))
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

// ---------------------------------------------------------------- discovery

/// Full-matrix edit distance.
pub fn oracle_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1)
                .min(d[i][j - 1] + 1)
                .min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

pub fn oracle_overlap(a: &str, b: &str) -> f64 {
    let m = a.chars().count().max(b.chars().count());
    1.0 - oracle_levenshtein(a, b) as f64 / m as f64
}

/// (word, avg_rank, support, best_similarity) by concatenating all lists and grouping.
pub fn oracle_fuse(lists: &[Vec<Neighbor>]) -> Vec<(String, f64, usize, f64)> {
    let all: Vec<&Neighbor> = lists.iter().flatten().collect();
    let mut grouped: BTreeMap<&str, Vec<&Neighbor>> = BTreeMap::new();
    for n in all {
        grouped.entry(n.word.as_str()).or_default().push(n);
    }
    let mut out: Vec<(String, f64, usize, f64)> = grouped
        .into_iter()
        .map(|(w, ns)| {
            let ranks: u64 = ns.iter().map(|n| n.rank as u64).sum();
            let best = ns
                .iter()
                .map(|n| n.similarity)
                .fold(f64::NEG_INFINITY, f64::max);
            (w.to_owned(), ranks as f64 / ns.len() as f64, ns.len(), best)
        })
        .collect();
    out.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(b.2.cmp(&a.2))
            .then_with(|| a.0.cmp(&b.0))
    });
    out
}

pub fn oracle_filter(words: &[String], seeds: &[String], threshold: f64) -> Vec<String> {
    let mut kept: Vec<String> = Vec::new();
    for w in words {
        let clash = seeds
            .iter()
            .chain(kept.iter())
            .any(|x| oracle_overlap(w, x) > threshold);
        if !clash {
            kept.push(w.clone());
        }
    }
    kept
}

/// Neighbour lists from the exhaustive oracle, seeds excluded from every list.
pub fn oracle_neighbor_lists(vocab: &Vocab, seeds: &[String], k: usize) -> Vec<Vec<Neighbor>> {
    let exclude: HashSet<String> = seeds.iter().cloned().collect();
    seeds
        .iter()
        .map(|s| {
            let q = &vocab.vectors[vocab.index(s).expect("seed in vocab")];
            oracle_top_k(vocab, q, Some(s), k, &exclude)
                .into_iter()
                .enumerate()
                .map(|(i, (word, similarity))| Neighbor {
                    word,
                    similarity,
                    rank: i + 1,
                })
                .collect()
        })
        .collect()
}

/// top-k, fuse, filter, cut; each stage from the oracles above.
pub fn oracle_acquire(
    vocab: &Vocab,
    seeds: &[String],
    per_seed_k: usize,
    final_cut: usize,
    threshold: f64,
) -> Vec<(String, f64, usize, f64)> {
    let lists = oracle_neighbor_lists(vocab, seeds, per_seed_k);
    let fused = oracle_fuse(&lists);
    let names: Vec<String> = fused.iter().map(|f| f.0.clone()).collect();
    let kept: HashSet<String> = oracle_filter(&names, seeds, threshold)
        .into_iter()
        .collect();
    fused
        .into_iter()
        .filter(|f| kept.contains(&f.0))
        .take(final_cut)
        .collect()
}

/// Planted-structure vocabulary: `clusters` tight semantic clusters, some of
/// them holding name-variant families (`tmprss2`, `tmprss2a`, `tmprss11`, …),
/// padded with random background words.
pub struct PlantedVocab {
    pub vocab: Vocab,
    /// Cluster id to member keys, in creation order.
    pub clusters: Vec<Vec<String>>,
}

pub fn planted_vocab(
    rng: &mut impl Rng,
    n: usize,
    dim: usize,
    clusters: usize,
    cluster_size: usize,
) -> PlantedVocab {
    let stems = [
        "ace", "tmprss", "uba", "nckap", "eno", "atp", "pla", "sox", "cdk", "hdac", "mapk", "il",
        "tnf", "stat", "jak", "egfr", "bcl", "casp", "nfkb", "irf",
    ];
    let mut names: BTreeSet<String> = BTreeSet::new();
    let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
    let mut cluster_members = Vec::new();
    for c in 0..clusters {
        let centroid: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let stem = stems[c % stems.len()];
        let mut members = Vec::new();
        let mut attempt = 0;
        while members.len() < cluster_size {
            attempt += 1;
            let name = match attempt % 4 {
                // name-variant family members
                0 => format!("{stem}{}", rng.gen_range(1..30)),
                1 => format!(
                    "{stem}{}{}",
                    rng.gen_range(1..30),
                    ['a', 'b', 'm', 's'][rng.gen_range(0..4)]
                ),
                _ => {
                    let len = rng.gen_range(4..9);
                    (0..len)
                        .map(|_| rng.gen_range(b'a'..=b'z') as char)
                        .collect()
                }
            };
            if !names.insert(name.clone()) {
                continue;
            }
            let v: Vec<f64> = centroid
                .iter()
                .map(|x| x + rng.gen_range(-0.15..0.15))
                .collect();
            entries.push((name.clone(), v));
            members.push(name);
        }
        cluster_members.push(members);
    }
    while entries.len() < n {
        let len = rng.gen_range(3..9);
        let name: String = (0..len)
            .map(|_| rng.gen_range(b'a'..=b'z') as char)
            .collect();
        if !names.insert(name.clone()) {
            continue;
        }
        entries.push((name, (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()));
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let (keys, vectors) = entries.into_iter().unzip();
    PlantedVocab {
        vocab: Vocab { keys, vectors },
        clusters: cluster_members,
    }
}

pub fn shuffle<T>(rng: &mut impl Rng, v: &mut [T]) {
    v.shuffle(rng);
}
