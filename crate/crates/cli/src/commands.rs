use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lbd_core::discover::{
    acquire, read_candidate_names, read_name_list, sample_seeds, AcquireParams, SeedSet,
};
use lbd_core::embstore::{
    accumulate_stream, apply_counts, load_text_vectors, read_counts, write_counts,
    write_text_vectors, Accumulator, DEFAULT_MIN_COUNT,
};
use lbd_core::eval::{
    seed_sweep, validate_sweep_sizes, write_sweep_tsv, CreditRule, EvalReport, GroundTruth,
    MatchMode,
};
use lbd_core::vocab::{load_synonyms, resolve_with, ResolvedVectorTable, Weighting};
use rayon::prelude::*;
use serde_json::json;

use crate::manifest::{sibling, RunManifest};
use crate::{
    AcquireArgs, AggregateArgs, DiscoverArgs, EvaluateArgs, ModeArg, SweepArgs, TableArgs,
    UsageError, DATA_DIR_ENV,
};

fn resolve_input(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if !path.exists() && candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn aggregate(args: AggregateArgs) -> Result<()> {
    if args.min_count == 0 {
        return Err(UsageError("--min-count must be at least 1".into()).into());
    }
    let inputs: Vec<PathBuf> = args.inputs.iter().map(|p| resolve_input(p)).collect();

    let shards: Vec<Accumulator> = inputs
        .par_iter()
        .map(|p| {
            accumulate_stream(open(p)?).with_context(|| format!("while reading {}", p.display()))
        })
        .collect::<Result<_>>()?;
    let mut merged: Option<Accumulator> = None;
    for (shard, path) in shards.into_iter().zip(&inputs) {
        merged = Some(match merged {
            None => shard,
            Some(mut acc) => {
                acc.merge(shard)
                    .with_context(|| format!("while merging {}", path.display()))?;
                acc
            }
        });
    }
    let merged = merged.expect("clap requires at least one input");
    let occurrences = merged.total_occurrences();
    let table = merged.finalize(args.min_count)?;

    let mut out = create(&args.out)?;
    write_text_vectors(&table, &mut out)?;
    out.flush()?;
    let counts_path = sibling(&args.out, "counts");
    write_counts(&table, create(&counts_path)?)?;

    let mut manifest = RunManifest::new(
        "aggregate",
        json!({ "min_count": args.min_count, "dim": table.dim() }),
    );
    for p in &inputs {
        manifest.input("stream", p)?;
    }
    manifest.output("vectors", &args.out)?;
    manifest.output("counts", &counts_path)?;
    manifest.write_beside(&args.out)?;
    eprintln!(
        "aggregated {occurrences} word occurrences into {} vectors (dim {})",
        table.len(),
        table.dim()
    );
    Ok(())
}

fn load_table(args: &TableArgs, manifest: &mut RunManifest) -> Result<ResolvedVectorTable> {
    let vectors = resolve_input(&args.vectors);
    let mut table = load_text_vectors(open(&vectors)?, DEFAULT_MIN_COUNT)
        .with_context(|| format!("while reading {}", vectors.display()))?;
    manifest.input("vectors", &vectors)?;

    let counts = match &args.counts {
        Some(p) => Some(resolve_input(p)),
        None => Some(sibling(&vectors, "counts")).filter(|p| p.exists()),
    };
    if let Some(p) = counts {
        let c = read_counts(open(&p)?).with_context(|| format!("while reading {}", p.display()))?;
        apply_counts(&mut table, &c).with_context(|| format!("while applying {}", p.display()))?;
        manifest.input("counts", &p)?;
    }

    match &args.synonyms {
        Some(p) => {
            let p = resolve_input(p);
            let syns = load_synonyms(open(&p)?)
                .with_context(|| format!("while reading {}", p.display()))?;
            manifest.input("synonyms", &p)?;
            let weighting = if args.unweighted_synonyms {
                Weighting::Uniform
            } else {
                Weighting::Occurrence
            };
            Ok(resolve_with(&table, &syns, weighting))
        }
        None => Ok(ResolvedVectorTable::unresolved(&table)),
    }
}

fn acquire_params(a: &AcquireArgs) -> Result<AcquireParams> {
    if a.per_seed_k == 0 || a.cut == 0 {
        return Err(UsageError("--per-seed-k and --cut must be at least 1".into()).into());
    }
    if !(a.overlap_threshold > 0.0 && a.overlap_threshold <= 1.0) {
        return Err(UsageError("--overlap-threshold must lie in (0, 1]".into()).into());
    }
    Ok(AcquireParams {
        per_seed_k: a.per_seed_k,
        final_cut: a.cut,
        threshold: a.overlap_threshold,
    })
}

fn table_params(t: &TableArgs) -> serde_json::Value {
    json!({
        "synonym_weighting": if t.unweighted_synonyms { "uniform" } else { "occurrence" },
    })
}

pub fn discover(args: DiscoverArgs) -> Result<()> {
    let params = acquire_params(&args.acquire)?;
    let mut manifest = RunManifest::new(
        "discover",
        json!({
            "per_seed_k": params.per_seed_k,
            "cut": params.final_cut,
            "overlap_threshold": params.threshold,
            "seed_count": args.seed_count,
            "table": table_params(&args.table),
        }),
    );
    let table = load_table(&args.table, &mut manifest)?;

    let seeds_path = resolve_input(&args.seeds);
    let names = read_name_list(open(&seeds_path)?)?;
    manifest.input("seeds", &seeds_path)?;
    let seeds = match args.seed_count {
        Some(n) => sample_seeds(&names, n)?,
        None => SeedSet::new(&names, "all")?,
    };

    let list = acquire(&table, &seeds, params)?;
    let mut out = create(&args.out)?;
    list.write_tsv(&mut out)?;
    out.flush()?;
    drop(out);

    if let serde_json::Value::Object(m) = &mut manifest.params {
        m.insert("seeds".into(), json!(list.provenance.seeds.seeds()));
    }
    manifest.output("candidates", &args.out)?;
    manifest.write_beside(&args.out)?;
    eprintln!(
        "{} candidates from {} seeds written to {}",
        list.len(),
        list.provenance.seeds.len(),
        args.out.display()
    );
    Ok(())
}

fn modes(m: ModeArg) -> Vec<MatchMode> {
    match m {
        ModeArg::Exact => vec![MatchMode::Exact],
        ModeArg::Fuzzy => vec![MatchMode::Fuzzy],
        ModeArg::Both => vec![MatchMode::Exact, MatchMode::Fuzzy],
    }
}

fn load_truth(path: &Path, manifest: &mut RunManifest) -> Result<GroundTruth> {
    let path = resolve_input(path);
    let truth = GroundTruth::read(open(&path)?)
        .with_context(|| format!("while reading {}", path.display()))?;
    manifest.input("truth", &path)?;
    Ok(truth)
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    if args.ks.contains(&0) {
        return Err(UsageError("--k must be at least 1".into()).into());
    }
    let rule = if args.credit_every_match {
        CreditRule::EveryMatch
    } else {
        CreditRule::OncePerTarget
    };
    let mut manifest = RunManifest::new(
        "evaluate",
        json!({
            "k": args.ks,
            "mode": format!("{:?}", args.mode).to_lowercase(),
            "credit": if args.credit_every_match { "every_match" } else { "once_per_target" },
        }),
    );
    let cand_path = resolve_input(&args.candidates);
    let candidates = read_candidate_names(open(&cand_path)?)
        .with_context(|| format!("while reading {}", cand_path.display()))?;
    manifest.input("candidates", &cand_path)?;
    let truth = load_truth(&args.truth, &mut manifest)?;

    let report = EvalReport::build(&candidates, &truth, &args.ks, &modes(args.mode), rule)?;
    let mut out = create(&args.out)?;
    report.write_tsv(&mut out)?;
    out.flush()?;
    drop(out);
    let ann_path = sibling(&args.out, "annotations.tsv");
    report.write_annotations_tsv(create(&ann_path)?)?;

    manifest.output("report", &args.out)?;
    manifest.output("annotations", &ann_path)?;
    manifest.write_beside(&args.out)?;
    print!("{}", report.summary());
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    validate_sweep_sizes(&args.sizes).map_err(|e| UsageError(format!("--sizes: {e}")))?;
    if args.k == 0 {
        return Err(UsageError("--k must be at least 1".into()).into());
    }
    let mode = match args.mode {
        ModeArg::Exact => MatchMode::Exact,
        ModeArg::Fuzzy => MatchMode::Fuzzy,
        ModeArg::Both => {
            return Err(UsageError("sweep takes --mode exact or --mode fuzzy".into()).into())
        }
    };
    let params = acquire_params(&args.acquire)?;
    let mut manifest = RunManifest::new(
        "sweep",
        json!({
            "sizes": args.sizes,
            "k": args.k,
            "mode": mode.to_string(),
            "per_seed_k": params.per_seed_k,
            "cut": params.final_cut,
            "overlap_threshold": params.threshold,
            "table": table_params(&args.table),
        }),
    );
    let table = load_table(&args.table, &mut manifest)?;
    let ranked_path = resolve_input(&args.ranked_seeds);
    let ranked = read_name_list(open(&ranked_path)?)?;
    manifest.input("ranked_seeds", &ranked_path)?;
    let truth = load_truth(&args.truth, &mut manifest)?;

    let rows = seed_sweep(&table, &ranked, &args.sizes, &truth, args.k, mode, params)?;
    let mut out = create(&args.out)?;
    write_sweep_tsv(&rows, &mut out)?;
    out.flush()?;
    drop(out);
    manifest.output("sweep", &args.out)?;
    manifest.write_beside(&args.out)?;
    for r in &rows {
        println!(
            "{:>3} seeds  P@{} = {:.3}  R@{} = {:.3}",
            r.size, args.k, r.precision, args.k, r.recall
        );
    }
    Ok(())
}
