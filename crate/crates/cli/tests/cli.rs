mod common;

use std::fs;

use common::{fixture, lbd, ok, run};
use lbd_core::discover::{acquire, read_name_list, sample_seeds, AcquireParams, SeedSet};
use lbd_core::embstore::{apply_counts, load_text_vectors, read_counts};
use lbd_core::vocab::{load_synonyms, resolve};
use lbd_testkit as kit;

fn tsv_rows(path: &std::path::Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn aggregate_is_shard_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = kit::rng(41);
    let records = kit::random_records(&mut rng, 30, 900, 4, 3);
    fs::write(dir.path().join("all.cemb"), kit::encode_cemb(4, &records)).unwrap();

    // Cut on word boundaries into three shards.
    let bounds: Vec<usize> = (1..records.len())
        .filter(|&i| {
            records[i].word_idx != records[i - 1].word_idx
                || records[i].seq_id != records[i - 1].seq_id
                || records[i].doc_id != records[i - 1].doc_id
        })
        .collect();
    let a = bounds[bounds.len() / 3];
    let b = bounds[2 * bounds.len() / 3];
    for (name, part) in [
        ("s1", &records[..a]),
        ("s2", &records[a..b]),
        ("s3", &records[b..]),
    ] {
        fs::write(
            dir.path().join(format!("{name}.cemb")),
            kit::encode_cemb(4, part),
        )
        .unwrap();
    }

    ok(&run(
        &["aggregate", "all.cemb", "--out", "one.txt"],
        dir.path(),
    ));
    ok(&run(
        &[
            "aggregate",
            "s1.cemb",
            "s2.cemb",
            "s3.cemb",
            "--out",
            "three.txt",
        ],
        dir.path(),
    ));
    // Summation order differs between shardings, so the f32 text may move by an ulp.
    let load = |name: &str| {
        load_text_vectors(
            std::io::BufReader::new(fs::File::open(dir.path().join(name)).unwrap()),
            1,
        )
        .unwrap()
    };
    let (one, three) = (load("one.txt"), load("three.txt"));
    assert_eq!(one.len(), three.len());
    for (w, v) in one.iter() {
        let other = three.get(w).expect("same vocabulary");
        for (a, b) in v.vector.iter().zip(&other.vector) {
            assert!(kit::rel_close(*a, *b, 1e-6), "{w}: {a} vs {b}");
        }
    }
    assert_eq!(
        fs::read(dir.path().join("one.txt.counts")).unwrap(),
        fs::read(dir.path().join("three.txt.counts")).unwrap()
    );
    assert!(dir.path().join("three.txt.manifest.json").exists());
}

#[test]
fn aggregate_min_count_one_single_record() {
    let dir = tempfile::tempdir().unwrap();
    let rec = lbd_core::embstore::EmbeddingRecord {
        doc_id: 0,
        seq_id: 0,
        word_idx: 0,
        word_text: "ace2".into(),
        vector: vec![0.5, -1.0],
    };
    fs::write(dir.path().join("one.cemb"), kit::encode_cemb(2, &[rec])).unwrap();
    ok(&run(
        &[
            "aggregate",
            "one.cemb",
            "--min-count",
            "1",
            "--out",
            "v.txt",
        ],
        dir.path(),
    ));
    assert_eq!(
        fs::read_to_string(dir.path().join("v.txt")).unwrap(),
        "1 2\nace2 0.5 -1\n"
    );
    let counts = read_counts(fs::File::open(dir.path().join("v.txt.counts")).unwrap()).unwrap();
    assert_eq!(counts, vec![("ace2".to_string(), 1)]);
}

#[test]
fn aggregate_missing_input_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["aggregate", "nope.cemb", "--out", "v.txt"], dir.path());
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.cemb"));
}

#[test]
fn aggregate_corrupt_input_reports_offset() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = kit::rng(42);
    let records = kit::random_records(&mut rng, 5, 10, 2, 1);
    let bytes = kit::encode_cemb(2, &records);
    fs::write(dir.path().join("bad.cemb"), &bytes[..bytes.len() - 2]).unwrap();
    let out = run(&["aggregate", "bad.cemb", "--out", "v.txt"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.cemb") && err.contains("offset"), "{err}");
}

#[test]
fn data_dir_env_resolves_relative_inputs() {
    let data = tempfile::tempdir().unwrap();
    let work = tempfile::tempdir().unwrap();
    let mut rng = kit::rng(43);
    let records = kit::random_records(&mut rng, 3, 40, 2, 2);
    fs::write(data.path().join("in.cemb"), kit::encode_cemb(2, &records)).unwrap();
    let out = lbd()
        .args(["aggregate", "in.cemb", "--min-count", "1", "--out", "v.txt"])
        .current_dir(work.path())
        .env("LBD_DATA_DIR", data.path())
        .output()
        .unwrap();
    ok(&out);
    assert!(work.path().join("v.txt").exists());
}

#[test]
fn discover_defaults_match_library() {
    let fx = fixture(44, 1500);
    ok(&run(
        &[
            "discover",
            "--vectors",
            "vectors.txt",
            "--synonyms",
            "synonyms.tsv",
            "--seeds",
            "seeds.txt",
            "--out",
            "cands.tsv",
        ],
        fx.dir.path(),
    ));

    let mut table = load_text_vectors(
        std::io::BufReader::new(fs::File::open(fx.path("vectors.txt")).unwrap()),
        5,
    )
    .unwrap();
    apply_counts(
        &mut table,
        &read_counts(fs::File::open(fx.path("vectors.txt.counts")).unwrap()).unwrap(),
    )
    .unwrap();
    let syns = load_synonyms(std::io::BufReader::new(
        fs::File::open(fx.path("synonyms.tsv")).unwrap(),
    ))
    .unwrap();
    let resolved = resolve(&table, &syns);
    let names = read_name_list(std::io::BufReader::new(
        fs::File::open(fx.path("seeds.txt")).unwrap(),
    ))
    .unwrap();
    let list = acquire(
        &resolved,
        &SeedSet::new(&names, "x").unwrap(),
        AcquireParams::default(),
    )
    .unwrap();
    let mut expected = Vec::new();
    list.write_tsv(&mut expected).unwrap();
    assert_eq!(fs::read(fx.path("cands.tsv")).unwrap(), expected);
}

#[test]
fn cut_100_is_prefix_of_cut_2802() {
    let fx = fixture(45, 3200);
    let base = [
        "discover",
        "--vectors",
        "vectors.txt",
        "--seeds",
        "seeds.txt",
    ];
    let mut a = base.to_vec();
    a.extend(["--cut", "100", "--out", "c100.tsv"]);
    let mut b = base.to_vec();
    b.extend(["--cut", "2802", "--out", "c2802.tsv"]);
    ok(&run(&a, fx.dir.path()));
    ok(&run(&b, fx.dir.path()));
    let short = tsv_rows(&fx.path("c100.tsv"));
    let long = tsv_rows(&fx.path("c2802.tsv"));
    assert_eq!(short.len(), 101);
    assert!(long.len() > 101);
    assert_eq!(&long[..101], &short[..]);
}

#[test]
fn seed_count_takes_top_of_ranked_file() {
    let fx = fixture(46, 800);
    ok(&run(
        &[
            "discover",
            "--vectors",
            "vectors.txt",
            "--seeds",
            "ranked.txt",
            "--seed-count",
            "2",
            "--per-seed-k",
            "50",
            "--cut",
            "50",
            "--out",
            "c.tsv",
        ],
        fx.dir.path(),
    ));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.path("c.tsv.manifest.json")).unwrap()).unwrap();
    let ranked = read_name_list(std::io::BufReader::new(
        fs::File::open(fx.path("ranked.txt")).unwrap(),
    ))
    .unwrap();
    let want = sample_seeds(&ranked, 2).unwrap();
    assert_eq!(manifest["params"]["seeds"], serde_json::json!(want.seeds()));
}

#[test]
fn discover_error_codes() {
    let fx = fixture(47, 300);
    fs::write(fx.path("unknown.txt"), "nosuchgene\n").unwrap();
    let out = run(
        &[
            "discover",
            "--vectors",
            "vectors.txt",
            "--seeds",
            "unknown.txt",
            "--out",
            "c.tsv",
        ],
        fx.dir.path(),
    );
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuchgene"));

    fs::write(fx.path("broken.txt"), "2 3\na 1 2 3\nb 1 2\n").unwrap();
    let out = run(
        &[
            "discover",
            "--vectors",
            "broken.txt",
            "--counts",
            "vectors.txt.counts",
            "--seeds",
            "seeds.txt",
            "--out",
            "c.tsv",
        ],
        fx.dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = run(
        &[
            "discover",
            "--vectors",
            "vectors.txt",
            "--seeds",
            "seeds.txt",
            "--overlap-threshold",
            "0",
            "--out",
            "c.tsv",
        ],
        fx.dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = run(
        &[
            "discover",
            "--vectors",
            "vectors.txt",
            "--seeds",
            "seeds.txt",
            "--seed-count",
            "9",
            "--out",
            "c.tsv",
        ],
        fx.dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_planted_table_cell() {
    let dir = tempfile::tempdir().unwrap();
    let truth: Vec<String> = (0..2802).map(|i| format!("target{i}")).collect();
    fs::write(dir.path().join("truth.txt"), truth.join("\n")).unwrap();
    let mut tsv = String::from("rank\tcandidate\tavg_rank\tsupport\tbest_similarity\n");
    for i in 0..100 {
        // every fourth-ish row until 22 hits
        let name = if i % 4 == 0 && i / 4 < 22 {
            format!("target{}", i * 7)
        } else {
            format!("decoy{i}")
        };
        tsv.push_str(&format!("{}\t{}\t{}\t1\t0.5\n", i + 1, name, i + 1));
    }
    fs::write(dir.path().join("c.tsv"), tsv).unwrap();
    let out = run(
        &[
            "evaluate",
            "--candidates",
            "c.tsv",
            "--truth",
            "truth.txt",
            "--k",
            "100",
            "--k",
            "2802",
            "--out",
            "r.tsv",
        ],
        dir.path(),
    );
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("EXACT P@100 = 0.220"), "{stdout}");
    assert!(stdout.contains("R@100 = 0.008"), "{stdout}");
    let rows = tsv_rows(&dir.path().join("r.tsv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0], "k\tmode\treturned\trelevant\tprecision\trecall");
    assert_eq!(rows[1], "100\texact\t100\t22\t0.22\t0.007851534618129907");
    assert!(dir.path().join("r.tsv.annotations.tsv").exists());
}

#[test]
fn evaluate_empty_truth_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("truth.txt"), "# nothing\n").unwrap();
    fs::write(dir.path().join("c.tsv"), "rank\tcandidate\n1\tace2\n").unwrap();
    let out = run(
        &[
            "evaluate",
            "--candidates",
            "c.tsv",
            "--truth",
            "truth.txt",
            "--out",
            "r.tsv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_default_sizes_and_composition() {
    let fx = fixture(48, 900);
    ok(&run(
        &[
            "sweep",
            "--vectors",
            "vectors.txt",
            "--synonyms",
            "synonyms.tsv",
            "--ranked-seeds",
            "ranked.txt",
            "--truth",
            "truth.txt",
            "--per-seed-k",
            "100",
            "--cut",
            "100",
            "--k",
            "100",
            "--out",
            "sweep.tsv",
        ],
        fx.dir.path(),
    ));
    let rows = tsv_rows(&fx.path("sweep.tsv"));
    assert_eq!(rows[0], "size\tprecision\trecall");
    let sizes: Vec<&str> = rows[1..]
        .iter()
        .map(|r| r.split('\t').next().unwrap())
        .collect();
    assert_eq!(sizes, ["2", "4", "8", "16", "32", "64"]);

    // size 2 row equals discover + evaluate
    ok(&run(
        &[
            "discover",
            "--vectors",
            "vectors.txt",
            "--synonyms",
            "synonyms.tsv",
            "--seeds",
            "ranked.txt",
            "--seed-count",
            "2",
            "--per-seed-k",
            "100",
            "--cut",
            "100",
            "--out",
            "c.tsv",
        ],
        fx.dir.path(),
    ));
    ok(&run(
        &[
            "evaluate",
            "--candidates",
            "c.tsv",
            "--truth",
            "truth.txt",
            "--k",
            "100",
            "--mode",
            "fuzzy",
            "--out",
            "r.tsv",
        ],
        fx.dir.path(),
    ));
    let report = tsv_rows(&fx.path("r.tsv"));
    let f: Vec<&str> = report[1].split('\t').collect();
    let s: Vec<&str> = rows[1].split('\t').collect();
    assert_eq!((f[4], f[5]), (s[1], s[2]));
}

#[test]
fn sweep_rejects_non_monotone_sizes() {
    let fx = fixture(49, 300);
    let out = run(
        &[
            "sweep",
            "--vectors",
            "vectors.txt",
            "--ranked-seeds",
            "ranked.txt",
            "--truth",
            "truth.txt",
            "--sizes",
            "4,2",
            "--out",
            "s.tsv",
        ],
        fx.dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}
