//! Subword-to-word reconstruction and streaming mean aggregation.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::embstore::stream::EmbeddingRecord;
use crate::error::{Error, Result};

/// Minimum number of occurrences a word needs to receive a static vector.
pub const DEFAULT_MIN_COUNT: u64 = 5;

/// One contextual occurrence of a whole word.
#[derive(Debug, Clone, PartialEq)]
pub struct WordOccurrence {
    pub word_text: String,
    pub vector: Vec<f64>,
}

/// Iterator adapter merging subword records into word occurrences.
///
/// Each run of records sharing `(doc_id, seq_id, word_idx)` becomes one
/// occurrence whose vector is the element-wise mean of the run.
pub struct Reconstruct<I> {
    records: I,
    pending: Option<EmbeddingRecord>,
    current_seq: Option<(u32, u32)>,
    closed_words: HashSet<u32>,
    closed_seqs: HashSet<(u32, u32)>,
    failed: bool,
}

pub fn reconstruct_words<I>(records: I) -> Reconstruct<I::IntoIter>
where
    I: IntoIterator<Item = Result<EmbeddingRecord>>,
{
    Reconstruct {
        records: records.into_iter(),
        pending: None,
        current_seq: None,
        closed_words: HashSet::new(),
        closed_seqs: HashSet::new(),
        failed: false,
    }
}

impl<I> Reconstruct<I>
where
    I: Iterator<Item = Result<EmbeddingRecord>>,
{
    /// Called when a new group starts; rejects keys whose group already ended.
    fn open_group(&mut self, rec: &EmbeddingRecord) -> Result<()> {
        let seq = (rec.doc_id, rec.seq_id);
        if self.current_seq != Some(seq) {
            if let Some(prev) = self.current_seq.take() {
                self.closed_seqs.insert(prev);
            }
            if self.closed_seqs.contains(&seq) {
                return Err(Error::StreamOrder(format!(
                    "sequence (doc {}, seq {}) resumes after another sequence",
                    seq.0, seq.1
                )));
            }
            self.closed_words.clear();
            self.current_seq = Some(seq);
        }
        if self.closed_words.contains(&rec.word_idx) {
            return Err(Error::StreamOrder(format!(
                "word {} of (doc {}, seq {}) is not contiguous",
                rec.word_idx, seq.0, seq.1
            )));
        }
        Ok(())
    }

    fn next_group(&mut self) -> Result<Option<WordOccurrence>> {
        let first = match self.pending.take() {
            Some(r) => r,
            None => match self.records.next() {
                Some(r) => r?,
                None => return Ok(None),
            },
        };
        self.open_group(&first)?;
        let key = first.key();
        let mut sum: Vec<f64> = first.vector.iter().map(|&v| v as f64).collect();
        let mut pieces = 1usize;
        let word_text = first.word_text;

        loop {
            match self.records.next() {
                None => break,
                Some(r) => {
                    let r = r?;
                    if r.key() != key {
                        self.pending = Some(r);
                        break;
                    }
                    if r.word_text != word_text {
                        return Err(Error::StreamOrder(format!(
                            "records of one word disagree on text: {:?} vs {:?}",
                            word_text, r.word_text
                        )));
                    }
                    if r.vector.len() != sum.len() {
                        return Err(Error::DimMismatch {
                            expected: sum.len(),
                            found: r.vector.len(),
                        });
                    }
                    for (s, &v) in sum.iter_mut().zip(&r.vector) {
                        *s += v as f64;
                    }
                    pieces += 1;
                }
            }
        }
        self.closed_words.insert(key.2);

        let n = pieces as f64;
        for s in &mut sum {
            *s /= n;
        }
        Ok(Some(WordOccurrence {
            word_text,
            vector: sum,
        }))
    }
}

impl<I> Iterator for Reconstruct<I>
where
    I: Iterator<Item = Result<EmbeddingRecord>>,
{
    type Item = Result<WordOccurrence>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.next_group() {
            Ok(Some(o)) => Some(Ok(o)),
            Ok(None) => None,
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatorEntry {
    pub sum_vector: Vec<f64>,
    pub occurrence_count: u64,
}

/// Running per-word sums and counts. Mergeable across shards.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    dim: usize,
    entries: HashMap<String, AccumulatorEntry>,
}

impl Accumulator {
    pub fn new(dim: usize) -> Self {
        Accumulator {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&AccumulatorEntry> {
        self.entries.get(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &AccumulatorEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn total_occurrences(&self) -> u64 {
        self.entries.values().map(|e| e.occurrence_count).sum()
    }

    pub fn add(&mut self, word: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        let entry = match self.entries.get_mut(word) {
            Some(e) => e,
            None => self
                .entries
                .entry(word.to_owned())
                .or_insert_with(|| AccumulatorEntry {
                    sum_vector: vec![0.0; vector.len()],
                    occurrence_count: 0,
                }),
        };
        for (s, &v) in entry.sum_vector.iter_mut().zip(vector) {
            *s += v;
        }
        entry.occurrence_count += 1;
        Ok(())
    }

    pub fn add_occurrences<I>(&mut self, occurrences: I) -> Result<()>
    where
        I: IntoIterator<Item = Result<WordOccurrence>>,
    {
        for occ in occurrences {
            let occ = occ?;
            self.add(&occ.word_text, &occ.vector)?;
        }
        Ok(())
    }

    /// Folds `other` into `self`. Counts add exactly, sums element-wise.
    pub fn merge(&mut self, other: Accumulator) -> Result<()> {
        if other.is_empty() {
            return Ok(());
        }
        if self.is_empty() && self.dim != other.dim {
            *self = other;
            return Ok(());
        }
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        for (word, e) in other.entries {
            match self.entries.get_mut(&word) {
                Some(mine) => {
                    for (s, v) in mine.sum_vector.iter_mut().zip(e.sum_vector) {
                        *s += v;
                    }
                    mine.occurrence_count += e.occurrence_count;
                }
                None => {
                    self.entries.insert(word, e);
                }
            }
        }
        Ok(())
    }

    /// Drops words seen fewer than `min_count` times and averages the rest.
    pub fn finalize(self, min_count: u64) -> Result<WordVectorTable> {
        if min_count == 0 {
            return Err(Error::InvalidArgument("min_count must be positive".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let entries = self
            .entries
            .into_iter()
            .filter(|(_, e)| e.occurrence_count >= min_count)
            .map(|(word, e)| {
                let n = e.occurrence_count as f64;
                let vector = e.sum_vector.into_iter().map(|s| s / n).collect();
                (
                    word,
                    WordVector {
                        vector,
                        count: e.occurrence_count,
                    },
                )
            })
            .collect();
        Ok(WordVectorTable {
            dim: self.dim,
            entries,
        })
    }
}

/// Two accumulators folded into one; commutative and associative.
pub fn merge_accumulators(mut a: Accumulator, b: Accumulator) -> Result<Accumulator> {
    a.merge(b)?;
    Ok(a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordVector {
    pub vector: Vec<f64>,
    pub count: u64,
}

/// Static vector per vocabulary word, keyed in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    entries: BTreeMap<String, WordVector>,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Self {
        WordVectorTable {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&WordVector> {
        self.entries.get(word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &WordVector)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn total_count(&self) -> u64 {
        self.entries.values().map(|e| e.count).sum()
    }

    /// Inserts or replaces an entry.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>, count: u64) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if count == 0 {
            return Err(Error::InvalidArgument(
                "entry count must be positive".into(),
            ));
        }
        self.entries
            .insert(word.into(), WordVector { vector, count });
        Ok(())
    }

    pub fn remove(&mut self, word: &str) -> Option<WordVector> {
        self.entries.remove(word)
    }
}

/// Averages word occurrences into a table, keeping words seen at least `min_count` times.
pub fn aggregate<I>(occurrences: I, dim: usize, min_count: u64) -> Result<WordVectorTable>
where
    I: IntoIterator<Item = Result<WordOccurrence>>,
{
    let mut acc = Accumulator::new(dim);
    acc.add_occurrences(occurrences)?;
    acc.finalize(min_count)
}
