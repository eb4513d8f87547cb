use std::collections::HashSet;

use lbd_core::embstore::WordVectorTable;
use lbd_core::sim::{cosine, top_k, Query};
use lbd_core::vocab::ResolvedVectorTable;
use lbd_testkit as kit;
use proptest::prelude::*;
use rand::Rng;

fn freeze(vocab: &kit::Vocab, scale: f64) -> ResolvedVectorTable {
    let mut t = WordVectorTable::new(vocab.vectors[0].len());
    for (k, v) in vocab.keys.iter().zip(&vocab.vectors) {
        t.insert(k.clone(), v.iter().map(|x| x * scale).collect(), 5)
            .unwrap();
    }
    ResolvedVectorTable::unresolved(&t)
}

fn check_against_oracle(vocab: &kit::Vocab, query: usize, k: usize, exclude: &HashSet<String>) {
    let table = freeze(vocab, 1.0);
    let key = &vocab.keys[query];
    let got = top_k(&table, Query::Key(key), k, exclude).unwrap();
    let want = kit::oracle_top_k(vocab, &vocab.vectors[query], Some(key), k, exclude);
    assert_eq!(got.len(), want.len());
    for (i, (g, (w, s))) in got.iter().zip(&want).enumerate() {
        assert_eq!(&g.word, w, "position {i}");
        assert!((g.similarity - s).abs() <= 1e-9);
        assert_eq!(g.rank, i + 1);
    }
}

#[test]
fn five_hundred_vectors_k25() {
    let mut rng = kit::rng(11);
    let vocab = kit::random_vocab(&mut rng, 500, 16);
    for q in [0, 17, 250, 499] {
        check_against_oracle(&vocab, q, 25, &HashSet::new());
    }
}

#[test]
fn duplicate_vectors_tie_in_key_order() {
    let mut rng = kit::rng(12);
    let mut vocab = kit::random_vocab(&mut rng, 60, 4);
    let shared = vocab.vectors[3].clone();
    for i in [10, 20, 30, 40] {
        vocab.vectors[i] = shared.clone();
    }
    check_against_oracle(&vocab, 3, 59, &HashSet::new());
}

#[test]
fn scale_invariance_of_order() {
    let mut rng = kit::rng(13);
    let vocab = kit::random_vocab(&mut rng, 300, 8);
    let base = freeze(&vocab, 1.0);
    for scale in [2.0, 0.25, 3.0, 1e3] {
        let scaled = freeze(&vocab, scale);
        for q in [0, 99, 299] {
            let key = &vocab.keys[q];
            let a: Vec<_> = top_k(&base, Query::Key(key), 40, &HashSet::new())
                .unwrap()
                .into_iter()
                .map(|n| n.word)
                .collect();
            let b: Vec<_> = top_k(&scaled, Query::Key(key), 40, &HashSet::new())
                .unwrap()
                .into_iter()
                .map(|n| n.word)
                .collect();
            assert_eq!(a, b, "scale {scale}");
        }
    }
}

#[test]
fn repeated_queries_are_identical() {
    let mut rng = kit::rng(14);
    let vocab = kit::random_vocab(&mut rng, 400, 8);
    let table = freeze(&vocab, 1.0);
    let first = top_k(&table, Query::Key(&vocab.keys[5]), 50, &HashSet::new()).unwrap();
    for _ in 0..5 {
        assert_eq!(
            top_k(&table, Query::Key(&vocab.keys[5]), 50, &HashSet::new()).unwrap(),
            first
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimized_equals_exhaustive(seed in any::<u64>(), n in 2usize..400, dim in 1usize..24, k in 1usize..120) {
        let mut rng = kit::rng(seed);
        let vocab = kit::random_vocab(&mut rng, n, dim);
        let q = rng.gen_range(0..n);
        let exclude: HashSet<String> = (0..n).filter(|_| rng.gen_bool(0.05)).map(|i| vocab.keys[i].clone()).collect();
        check_against_oracle(&vocab, q, k, &exclude);
    }

    #[test]
    fn cosine_symmetry(a in prop::collection::vec(-10.0f64..10.0, 1..16), seed in any::<u64>()) {
        prop_assume!(a.iter().any(|x| *x != 0.0));
        let mut rng = kit::rng(seed);
        let b: Vec<f64> = a.iter().map(|_| rng.gen_range(-10.0..10.0)).collect();
        prop_assert_eq!(cosine(&a, &b).unwrap(), cosine(&b, &a).unwrap());
        let c = cosine(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
    }
}
