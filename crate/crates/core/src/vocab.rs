//! Gene synonym tables and pooling of synonym vectors into one canonical entry.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use crate::embstore::WordVectorTable;
use crate::error::{Error, Result};

/// Canonical gene symbol to member names, all lowercased.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymTable {
    groups: BTreeMap<String, Vec<String>>,
    reverse: HashMap<String, String>,
}

impl SynonymTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a group. The canonical symbol becomes its first member.
    pub fn add_group<I, S>(&mut self, canonical: &str, synonyms: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let canonical = canonical.trim().to_lowercase();
        if canonical.is_empty() {
            return Err(Error::InvalidArgument("empty canonical symbol".into()));
        }
        let mut members = vec![canonical.clone()];
        for s in synonyms {
            let s = s.as_ref().trim().to_lowercase();
            if !s.is_empty() && !members.contains(&s) {
                members.push(s);
            }
        }
        for m in &members {
            if let Some(owner) = self.reverse.get(m) {
                return Err(Error::Integrity(format!(
                    "name {m:?} belongs to both {owner:?} and {canonical:?}"
                )));
            }
        }
        for m in &members {
            self.reverse.insert(m.clone(), canonical.clone());
        }
        self.groups.insert(canonical, members);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn members(&self, canonical: &str) -> Option<&[String]> {
        self.groups.get(canonical).map(Vec::as_slice)
    }

    pub fn canonical_of(&self, name: &str) -> Option<&str> {
        self.reverse.get(name).map(String::as_str)
    }

    pub fn groups(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.groups.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// Parses tab-separated synonym lines: canonical symbol then zero or more
/// synonyms. Lines starting with `#` and blank lines are skipped.
pub fn load_synonyms<R: BufRead>(source: R) -> Result<SynonymTable> {
    let mut table = SynonymTable::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut fields = line.trim_end_matches(['\r', '\n']).split('\t');
        let canonical = fields.next().unwrap_or_default().trim();
        if canonical.is_empty() {
            return Err(Error::parse(lineno, "empty canonical symbol"));
        }
        table.add_group(canonical, fields)?;
    }
    Ok(table)
}

/// How member vectors are combined into the canonical vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Weighting {
    /// Weight each member by its occurrence count.
    #[default]
    Occurrence,
    /// Plain mean over members present in the table.
    Uniform,
}

/// Frozen vector table after synonym pooling.
///
/// Entries are stored row-major in key order with precomputed L2 norms, so
/// row index order equals lexicographic key order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedVectorTable {
    dim: usize,
    keys: Vec<String>,
    data: Vec<f64>,
    norms: Vec<f64>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    aliases: BTreeMap<String, String>,
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl ResolvedVectorTable {
    /// Freezes a table without any synonym pooling.
    pub fn unresolved(table: &WordVectorTable) -> Self {
        Self::build(table, BTreeMap::new())
    }

    fn build(table: &WordVectorTable, aliases: BTreeMap<String, String>) -> Self {
        let dim = table.dim();
        let mut keys = Vec::with_capacity(table.len());
        let mut data = Vec::with_capacity(table.len() * dim);
        let mut norms = Vec::with_capacity(table.len());
        let mut counts = Vec::with_capacity(table.len());
        let mut index = HashMap::with_capacity(table.len());
        for (i, (word, entry)) in table.iter().enumerate() {
            keys.push(word.to_owned());
            data.extend_from_slice(&entry.vector);
            norms.push(l2_norm(&entry.vector));
            counts.push(entry.count);
            index.insert(word.to_owned(), i);
        }
        ResolvedVectorTable {
            dim,
            keys,
            data,
            norms,
            counts,
            index,
            aliases,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// Entry key for a name: itself if it is an entry, its canonical symbol if an alias.
    pub fn canonical(&self, name: &str) -> Option<&str> {
        if let Some(&i) = self.index.get(name) {
            return Some(&self.keys[i]);
        }
        let c = self.aliases.get(name)?;
        self.index.get(c.as_str()).map(|&i| self.keys[i].as_str())
    }

    pub fn row_of(&self, name: &str) -> Option<usize> {
        self.canonical(name)
            .and_then(|c| self.index.get(c).copied())
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.row_of(name).map(|i| self.row(i))
    }

    pub fn count(&self, name: &str) -> Option<u64> {
        self.row_of(name).map(|i| self.counts[i])
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub fn key(&self, i: usize) -> &str {
        &self.keys[i]
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Canonical entries as a plain table (aliases dropped).
    pub fn to_word_table(&self) -> WordVectorTable {
        let mut t = WordVectorTable::new(self.dim);
        for (i, k) in self.keys.iter().enumerate() {
            t.insert(k.clone(), self.row(i).to_vec(), self.counts[i])
                .expect("rows have table dimension");
        }
        t
    }
}

/// Pools the vectors of every synonym group into its canonical symbol.
pub fn resolve(table: &WordVectorTable, syns: &SynonymTable) -> ResolvedVectorTable {
    resolve_with(table, syns, Weighting::Occurrence)
}

pub fn resolve_with(
    table: &WordVectorTable,
    syns: &SynonymTable,
    weighting: Weighting,
) -> ResolvedVectorTable {
    let mut out = table.clone();
    let mut aliases = BTreeMap::new();
    for (canonical, members) in syns.groups() {
        // Sorted member order keeps the pooled vector independent of file order.
        let mut present: Vec<&str> = members
            .iter()
            .map(String::as_str)
            .filter(|m| table.contains(m))
            .collect();
        if present.is_empty() {
            continue;
        }
        present.sort_unstable();

        let (vector, count) = if present.len() == 1 {
            let e = table.get(present[0]).unwrap();
            (e.vector.clone(), e.count)
        } else {
            let mut sum = vec![0.0; table.dim()];
            let mut weight_total = 0.0;
            let mut count = 0u64;
            for m in &present {
                let e = table.get(m).unwrap();
                let w = match weighting {
                    Weighting::Occurrence => e.count as f64,
                    Weighting::Uniform => 1.0,
                };
                for (s, v) in sum.iter_mut().zip(&e.vector) {
                    *s += w * v;
                }
                weight_total += w;
                count += e.count;
            }
            for s in &mut sum {
                *s /= weight_total;
            }
            (sum, count)
        };

        for m in &present {
            out.remove(m);
        }
        out.insert(canonical, vector, count)
            .expect("pooled vector has table dimension");
        for m in members.iter().filter(|m| m.as_str() != canonical) {
            aliases.insert(m.clone(), canonical.to_owned());
        }
    }
    ResolvedVectorTable::build(&out, aliases)
}
