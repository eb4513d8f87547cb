//! Precision/recall at k against a ground-truth target list, with exact and
//! gene-family (digit-free prefix) matching.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use crate::discover::{acquire, sample_seeds, AcquireParams};
use crate::error::{Error, Result};
use crate::vocab::ResolvedVectorTable;

pub const DEFAULT_KS: [usize; 2] = [100, 2802];
pub const DEFAULT_SWEEP_SIZES: [usize; 6] = [2, 4, 8, 16, 32, 64];
/// Shortest digit-free prefix accepted for a family match.
pub const MIN_PREFIX_LEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatchMode {
    Exact,
    Fuzzy,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Exact => "exact",
            MatchMode::Fuzzy => "fuzzy",
        })
    }
}

impl std::str::FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(MatchMode::Exact),
            "fuzzy" => Ok(MatchMode::Fuzzy),
            other => Err(Error::InvalidArgument(format!(
                "unknown match mode {other:?}"
            ))),
        }
    }
}

/// Whether a target may be credited by more than one candidate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CreditRule {
    #[default]
    OncePerTarget,
    EveryMatch,
}

/// Leading characters before the first decimal digit.
pub fn gene_prefix(name: &str) -> &str {
    match name.find(|c: char| c.is_ascii_digit()) {
        Some(i) => &name[..i],
        None => name,
    }
}

fn family_prefix(name: &str) -> Option<&str> {
    let p = gene_prefix(name);
    (p.chars().count() >= MIN_PREFIX_LEN).then_some(p)
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    targets: BTreeSet<String>,
    by_prefix: HashMap<String, Vec<String>>,
}

impl GroundTruth {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let targets: BTreeSet<String> = names
            .into_iter()
            .map(|s| s.as_ref().trim().to_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        if targets.is_empty() {
            return Err(Error::Integrity("ground truth is empty".into()));
        }
        let mut by_prefix: HashMap<String, Vec<String>> = HashMap::new();
        // BTreeSet iteration keeps each prefix bucket sorted.
        for t in &targets {
            if let Some(p) = family_prefix(t) {
                by_prefix.entry(p.to_owned()).or_default().push(t.clone());
            }
        }
        Ok(GroundTruth { targets, by_prefix })
    }

    /// One target per line, `#` comments; duplicates collapse.
    pub fn read<R: BufRead>(source: R) -> Result<Self> {
        let mut names = Vec::new();
        for line in source.lines() {
            let line = line?;
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                names.push(t.to_owned());
            }
        }
        Self::new(names)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.targets.contains(name)
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.targets.iter().map(String::as_str)
    }

    /// All targets that `candidate` matches under `mode`, preferred first:
    /// the candidate itself if it is a target, then family members in key order.
    fn witnesses<'a>(
        &'a self,
        candidate: &str,
        mode: MatchMode,
    ) -> (Vec<&'a str>, Option<&'a str>) {
        let mut out = Vec::new();
        if let Some(t) = self.targets.get(candidate) {
            out.push(t.as_str());
        }
        let mut prefix = None;
        if mode == MatchMode::Fuzzy {
            if let Some(p) = family_prefix(candidate) {
                if let Some((key, bucket)) = self.by_prefix.get_key_value(p) {
                    prefix = Some(key.as_str());
                    out.extend(
                        bucket
                            .iter()
                            .map(String::as_str)
                            .filter(|t| *t != candidate),
                    );
                }
            }
        }
        (out, prefix)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchAnnotation {
    pub candidate: String,
    pub mode: MatchMode,
    pub matched: bool,
    /// Whether this candidate earned a new target under the credit rule.
    pub credited: bool,
    pub matched_target: Option<String>,
    /// Set when the match came through a shared family prefix.
    pub prefix_used: Option<String>,
}

fn annotate(
    candidate: &str,
    truth: &GroundTruth,
    mode: MatchMode,
    credited: Option<&HashSet<String>>,
) -> MatchAnnotation {
    let candidate = candidate.trim().to_lowercase();
    let (witnesses, prefix) = truth.witnesses(&candidate, mode);
    let chosen = match credited {
        Some(done) => witnesses
            .iter()
            .find(|t| !done.contains(**t))
            .map(|t| (*t, true))
            .or_else(|| witnesses.first().map(|t| (*t, false))),
        None => witnesses.first().map(|t| (*t, true)),
    };
    match chosen {
        None => MatchAnnotation {
            candidate,
            mode,
            matched: false,
            credited: false,
            matched_target: None,
            prefix_used: None,
        },
        Some((target, fresh)) => {
            let via_prefix = target != candidate;
            MatchAnnotation {
                candidate,
                mode,
                matched: true,
                credited: fresh,
                matched_target: Some(target.to_owned()),
                prefix_used: if via_prefix {
                    prefix.map(str::to_owned)
                } else {
                    None
                },
            }
        }
    }
}

/// Matches a single candidate. Exact hits win; otherwise the
/// lexicographically smallest family member is the witness.
pub fn match_candidate(candidate: &str, truth: &GroundTruth, mode: MatchMode) -> MatchAnnotation {
    annotate(candidate, truth, mode, None)
}

/// Annotates a ranked list in order, tracking which targets are already credited.
pub fn annotate_list<S: AsRef<str>>(
    candidates: &[S],
    truth: &GroundTruth,
    mode: MatchMode,
    rule: CreditRule,
) -> Vec<MatchAnnotation> {
    let mut done: HashSet<String> = HashSet::new();
    candidates
        .iter()
        .map(|c| match rule {
            CreditRule::EveryMatch => annotate(c.as_ref(), truth, mode, None),
            CreditRule::OncePerTarget => {
                let a = annotate(c.as_ref(), truth, mode, Some(&done));
                if a.credited {
                    done.insert(a.matched_target.clone().unwrap());
                }
                a
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalEntry {
    pub k: usize,
    pub mode: MatchMode,
    pub returned: usize,
    pub relevant_at_k: usize,
    pub ground_truth_size: usize,
    /// `relevant_at_k / returned`, 0 when nothing was returned.
    pub precision: f64,
    pub recall: f64,
    /// `k` exceeded the number of candidates.
    pub truncated: bool,
}

impl EvalEntry {
    fn from_annotations(
        annotations: &[MatchAnnotation],
        n_candidates: usize,
        truth: &GroundTruth,
        k: usize,
        mode: MatchMode,
    ) -> Self {
        let returned = k.min(n_candidates);
        let relevant_at_k = annotations[..returned]
            .iter()
            .filter(|a| a.credited)
            .count();
        let precision = if returned == 0 {
            0.0
        } else {
            relevant_at_k as f64 / returned as f64
        };
        EvalEntry {
            k,
            mode,
            returned,
            relevant_at_k,
            ground_truth_size: truth.len(),
            precision,
            recall: relevant_at_k as f64 / truth.len() as f64,
            truncated: k > n_candidates,
        }
    }
}

/// precision@k and recall@k for one mode, one-credit rule.
pub fn precision_recall_at_k<S: AsRef<str>>(
    candidates: &[S],
    truth: &GroundTruth,
    k: usize,
    mode: MatchMode,
) -> Result<EvalEntry> {
    precision_recall_at_k_with(candidates, truth, k, mode, CreditRule::default())
}

pub fn precision_recall_at_k_with<S: AsRef<str>>(
    candidates: &[S],
    truth: &GroundTruth,
    k: usize,
    mode: MatchMode,
    rule: CreditRule,
) -> Result<EvalEntry> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = k.min(candidates.len());
    let ann = annotate_list(&candidates[..n], truth, mode, rule);
    Ok(EvalEntry::from_annotations(
        &ann,
        candidates.len(),
        truth,
        k,
        mode,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub entries: Vec<EvalEntry>,
    pub annotations: Vec<MatchAnnotation>,
}

/// Rounds to three decimals for human-readable output.
pub fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

impl EvalReport {
    /// Evaluates every `(k, mode)` pair. Entries are ordered by k, then mode.
    pub fn build<S: AsRef<str>>(
        candidates: &[S],
        truth: &GroundTruth,
        ks: &[usize],
        modes: &[MatchMode],
        rule: CreditRule,
    ) -> Result<Self> {
        if ks.is_empty() || modes.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one k and one mode".into(),
            ));
        }
        if ks.contains(&0) {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let max_k = *ks.iter().max().unwrap();
        let n = max_k.min(candidates.len());
        let mut ks = ks.to_vec();
        ks.sort_unstable();
        ks.dedup();
        let mut modes = modes.to_vec();
        modes.sort_unstable();
        modes.dedup();

        let mut per_mode = Vec::new();
        for &mode in &modes {
            per_mode.push((mode, annotate_list(&candidates[..n], truth, mode, rule)));
        }
        let mut entries = Vec::new();
        for &k in &ks {
            for (mode, ann) in &per_mode {
                entries.push(EvalEntry::from_annotations(
                    ann,
                    candidates.len(),
                    truth,
                    k,
                    *mode,
                ));
            }
        }
        let annotations = per_mode.into_iter().flat_map(|(_, a)| a).collect();
        Ok(EvalReport {
            entries,
            annotations,
        })
    }

    /// `k  mode  returned  relevant  precision  recall`, full precision.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k\tmode\treturned\trelevant\tprecision\trecall")?;
        for e in &self.entries {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.k, e.mode, e.returned, e.relevant_at_k, e.precision, e.recall
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_annotations_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "mode\trank\tcandidate\tmatched\tcredited\tmatched_target\tprefix"
        )?;
        let mut rank = 0;
        let mut last_mode = None;
        for a in &self.annotations {
            if last_mode != Some(a.mode) {
                rank = 0;
                last_mode = Some(a.mode);
            }
            rank += 1;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                a.mode,
                rank,
                a.candidate,
                a.matched,
                a.credited,
                a.matched_target.as_deref().unwrap_or(""),
                a.prefix_used.as_deref().unwrap_or("")
            )?;
        }
        out.flush()?;
        Ok(())
    }

    /// Three-decimal summary table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let flag = if e.truncated {
                " (list shorter than k)"
            } else {
                ""
            };
            s.push_str(&format!(
                "{} P@{} = {:.3}  R@{} = {:.3}  [{}/{} relevant]{}\n",
                e.mode.to_string().to_uppercase(),
                e.k,
                round3(e.precision),
                e.k,
                round3(e.recall),
                e.relevant_at_k,
                e.returned,
                flag
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub size: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Checks that sweep sizes are positive and strictly increasing.
pub fn validate_sweep_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no seed sizes given".into()));
    }
    if sizes[0] == 0 {
        return Err(Error::InvalidArgument("seed sizes must be positive".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "seed sizes must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Runs acquisition and evaluation for growing prefixes of a ranked seed list.
pub fn seed_sweep<S: AsRef<str>>(
    table: &ResolvedVectorTable,
    ranked_seeds: &[S],
    sizes: &[usize],
    truth: &GroundTruth,
    k: usize,
    mode: MatchMode,
    params: AcquireParams,
) -> Result<Vec<SweepRow>> {
    validate_sweep_sizes(sizes)?;
    sizes
        .iter()
        .map(|&size| {
            let seeds = sample_seeds(ranked_seeds, size)?;
            let list = acquire(table, &seeds, params)?;
            let e = precision_recall_at_k(&list.names(), truth, k, mode)?;
            Ok(SweepRow {
                size,
                precision: e.precision,
                recall: e.recall,
            })
        })
        .collect()
}

pub fn write_sweep_tsv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "size\tprecision\trecall")?;
    for r in rows {
        writeln!(out, "{}\t{}\t{}", r.size, r.precision, r.recall)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes() {
        assert_eq!(gene_prefix("pla2g4a"), "pla");
        assert_eq!(gene_prefix("tmprss2"), "tmprss");
        assert_eq!(gene_prefix("sox"), "sox");
        assert_eq!(gene_prefix("5htr"), "");
    }

    #[test]
    fn exact_membership() {
        let t = GroundTruth::new(["ACE2", "tmprss2"]).unwrap();
        let a = match_candidate("ace2", &t, MatchMode::Exact);
        assert!(a.matched);
        assert_eq!(a.matched_target.as_deref(), Some("ace2"));
        assert!(!match_candidate("ace", &t, MatchMode::Exact).matched);
    }

    #[test]
    fn fuzzy_family_match() {
        let t = GroundTruth::new(["pla2g2", "il2"]).unwrap();
        let a = match_candidate("pla2g4a", &t, MatchMode::Fuzzy);
        assert!(a.matched);
        assert_eq!(a.matched_target.as_deref(), Some("pla2g2"));
        assert_eq!(a.prefix_used.as_deref(), Some("pla"));
        assert!(!match_candidate("pla2g4a", &t, MatchMode::Exact).matched);
        assert!(!match_candidate("il6", &t, MatchMode::Fuzzy).matched);
    }

    #[test]
    fn fuzzy_witness_is_smallest() {
        let t = GroundTruth::new(["tmprss4", "tmprss11", "tmprss2"]).unwrap();
        let a = match_candidate("tmprss9", &t, MatchMode::Fuzzy);
        assert_eq!(a.matched_target.as_deref(), Some("tmprss11"));
        let a = match_candidate("tmprss4", &t, MatchMode::Fuzzy);
        assert_eq!(a.matched_target.as_deref(), Some("tmprss4"));
        assert_eq!(a.prefix_used, None);
    }

    #[test]
    fn short_exact_names_still_match_in_fuzzy_mode() {
        let t = GroundTruth::new(["il6"]).unwrap();
        assert!(match_candidate("il6", &t, MatchMode::Fuzzy).matched);
    }

    #[test]
    fn one_credit_rule() {
        let t = GroundTruth::new(["pla2g2"]).unwrap();
        let c = ["pla2g4a", "pla2g4b"];
        let e = precision_recall_at_k(&c, &t, 2, MatchMode::Fuzzy).unwrap();
        assert_eq!(e.relevant_at_k, 1);
        assert_eq!(e.recall, 1.0);
        let e = precision_recall_at_k_with(&c, &t, 2, MatchMode::Fuzzy, CreditRule::EveryMatch)
            .unwrap();
        assert_eq!(e.relevant_at_k, 2);
    }

    #[test]
    fn one_credit_spreads_over_family() {
        let t = GroundTruth::new(["pla2g2", "pla2g3"]).unwrap();
        let ann = annotate_list(
            &["pla2g4a", "pla2g4b", "pla2g4c"],
            &t,
            MatchMode::Fuzzy,
            CreditRule::OncePerTarget,
        );
        let credited: Vec<_> = ann.iter().map(|a| a.credited).collect();
        assert_eq!(credited, [true, true, false]);
        assert!(ann[2].matched);
        assert_eq!(ann[1].matched_target.as_deref(), Some("pla2g3"));
    }

    #[test]
    fn disjoint_is_zero() {
        let t = GroundTruth::new(["a1", "b1"]).unwrap();
        let e = precision_recall_at_k(&["x", "y"], &t, 100, MatchMode::Exact).unwrap();
        assert_eq!((e.precision, e.recall), (0.0, 0.0));
        assert_eq!(e.returned, 2);
        assert!(e.truncated);
    }

    #[test]
    fn empty_candidate_list() {
        let t = GroundTruth::new(["a"]).unwrap();
        let none: [&str; 0] = [];
        let e = precision_recall_at_k(&none, &t, 10, MatchMode::Exact).unwrap();
        assert_eq!(e.returned, 0);
        assert_eq!(e.precision, 0.0);
    }

    #[test]
    fn empty_truth_rejected() {
        assert!(GroundTruth::read("# only a comment\n\n".as_bytes()).is_err());
    }

    #[test]
    fn table_two_cell_arithmetic() {
        let truth: Vec<String> = (0..2802).map(|i| format!("t{i}")).collect();
        let t = GroundTruth::new(&truth).unwrap();
        let mut c: Vec<String> = (0..22).map(|i| format!("t{i}")).collect();
        c.extend((0..78).map(|i| format!("miss{i}")));
        let e = precision_recall_at_k(&c, &t, 100, MatchMode::Exact).unwrap();
        assert_eq!(e.relevant_at_k, 22);
        assert_eq!(format!("{:.3}", round3(e.precision)), "0.220");
        assert_eq!(format!("{:.3}", round3(e.recall)), "0.008");
    }

    #[test]
    fn report_cardinality_and_tsv() {
        let t = GroundTruth::new(["ace2", "tmprss11"]).unwrap();
        let c = ["ace2", "tmprss2", "foo"];
        let r = EvalReport::build(
            &c,
            &t,
            &[100, 2],
            &[MatchMode::Exact, MatchMode::Fuzzy],
            CreditRule::default(),
        )
        .unwrap();
        assert_eq!(r.entries.len(), 4);
        assert_eq!(r.entries[0].k, 2);
        assert_eq!(r.entries[0].mode, MatchMode::Exact);
        let mut buf = Vec::new();
        r.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with(
            "k\tmode\treturned\trelevant\tprecision\trecall\n2\texact\t2\t1\t0.5\t0.5\n"
        ));
        assert!(r.summary().contains("FUZZY P@2 = 1.000"));
    }

    #[test]
    fn sweep_sizes_validated() {
        assert!(validate_sweep_sizes(&[2, 4, 8]).is_ok());
        assert!(validate_sweep_sizes(&[4, 2]).is_err());
        assert!(validate_sweep_sizes(&[2, 2]).is_err());
        assert!(validate_sweep_sizes(&[]).is_err());
        assert!(validate_sweep_sizes(&[0, 1]).is_err());
    }
}
