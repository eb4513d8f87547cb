#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lbd_core::embstore::{write_counts, write_text_vectors, WordVectorTable};
use lbd_testkit as kit;
use rand::Rng;

pub fn lbd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lbd"));
    c.env_remove("LBD_DATA_DIR");
    c
}

pub fn run(args: &[&str], dir: &Path) -> Output {
    lbd()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn lbd")
}

pub fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "lbd failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub clusters: Vec<Vec<String>>,
    pub table: WordVectorTable,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

/// Vectors (+counts), synonyms, seed list, 64-long ranked seed list and a
/// ground-truth file built from a planted-cluster vocabulary of `n` words.
pub fn fixture(seed: u64, n: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = kit::rng(seed);
    let planted = kit::planted_vocab(&mut rng, n, 16, 12, 20);
    let mut table = WordVectorTable::new(16);
    for (k, v) in planted.vocab.keys.iter().zip(&planted.vocab.vectors) {
        table
            .insert(k.clone(), v.clone(), rng.gen_range(5..500))
            .unwrap();
    }
    let mut f = fs::File::create(dir.path().join("vectors.txt")).unwrap();
    write_text_vectors(&table, &mut f).unwrap();
    write_counts(
        &table,
        fs::File::create(dir.path().join("vectors.txt.counts")).unwrap(),
    )
    .unwrap();

    let in_cluster: std::collections::HashSet<&String> =
        planted.clusters.iter().flatten().collect();
    let background: Vec<&String> = planted
        .vocab
        .keys
        .iter()
        .filter(|k| !in_cluster.contains(k))
        .collect();
    let mut syn = String::from("# canonical\tsynonyms\n");
    for pair in background.chunks(2).take(20) {
        if pair.len() == 2 {
            syn.push_str(&format!("{}\t{}\n", pair[0].to_uppercase(), pair[1]));
        }
    }
    syn.push_str(&format!("{}\tnotinvocab1\n", planted.clusters[0][0]));
    fs::write(dir.path().join("synonyms.tsv"), syn).unwrap();

    fs::write(
        dir.path().join("seeds.txt"),
        format!(
            "# seeds\n{}\n{}\n",
            planted.clusters[0][0], planted.clusters[1][0]
        ),
    )
    .unwrap();

    let mut ranked = Vec::new();
    for i in 0..20 {
        for c in &planted.clusters {
            if ranked.len() < 64 {
                ranked.push(c[i].clone());
            }
        }
    }
    fs::write(dir.path().join("ranked.txt"), ranked.join("\n") + "\n").unwrap();

    let mut truth: Vec<String> = planted.clusters[..6].iter().flatten().cloned().collect();
    truth.extend(background.iter().take(100).map(|s| s.to_string()));
    fs::write(dir.path().join("truth.txt"), truth.join("\n") + "\n").unwrap();

    Fixture {
        dir,
        clusters: planted.clusters,
        table,
    }
}
