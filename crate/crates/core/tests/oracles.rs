mod support;

use support::*;
use tenderforge_core::corpus::Corpus;
use tenderforge_core::evaluation::{para_score, paragraph_score, table_score_single};
use tenderforge_core::reranker::{list_dist_by_name, rerank};
use tenderforge_core::retrieval::{build_index, retrieve, Requirement};
use tenderforge_core::text_metrics::{
    cosine_similarity, edit_dist, embedding_dist, ngram_dist, EmbeddingProvider, TestEmbedder,
};
use tenderforge_core::{PurchaseItem, ScoredCandidate, TableBlock, TenderDocument};

fn trigram_buckets(p: &TestEmbedder, text: &str) -> std::collections::BTreeSet<usize> {
    TestEmbedder::grams(text)
        .iter()
        .map(|g| p.bucket(g))
        .collect()
}

/// Searches fixture words for two texts with disjoint trigrams that also land
/// in disjoint buckets.
fn collision_free_pair(p: &TestEmbedder) -> (String, String) {
    let texts: Vec<String> = WORDS.iter().map(|w| w.to_string()).collect();
    for a in &texts {
        for b in &texts {
            let ga: std::collections::BTreeSet<_> = TestEmbedder::grams(a).into_iter().collect();
            let gb: std::collections::BTreeSet<_> = TestEmbedder::grams(b).into_iter().collect();
            if a != b
                && ga.is_disjoint(&gb)
                && trigram_buckets(p, a).is_disjoint(&trigram_buckets(p, b))
            {
                return (a.clone(), b.clone());
            }
        }
    }
    panic!("no collision-free pair among fixture words");
}

#[test]
fn disjoint_trigram_pair_has_zero_cosine() {
    let p = TestEmbedder::default();
    let (a, b) = collision_free_pair(&p);
    let c = cosine_similarity(&p.embed(&a).unwrap(), &p.embed(&b).unwrap()).unwrap();
    assert!(c.abs() < 1e-6, "{a} vs {b}: {c}");
    assert!((embedding_dist(&a, &b, &p).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn related_names_are_closer_than_unrelated() {
    let p = TestEmbedder::default();
    let near = embedding_dist("influenza A virus kit", "influenza A virus reagent", &p).unwrap();
    let far = embedding_dist("influenza A virus kit", "office desk chair", &p).unwrap();
    assert!(near < far, "{near} !< {far}");
}

#[test]
fn abcd_abce_components() {
    let p = TestEmbedder::default();
    let e = ref_embedding_dist("abcd", "abce", &p);
    let want = (e + 1.0 / 3.0 + 1.0 / 4.0) / 3.0;
    let got = tenderforge_core::reranker::name_dist("abcd", "abce", &p).unwrap();
    assert!((got - want).abs() < 1e-12);
    assert!((ngram_dist("abcd", "abce") - 1.0 / 3.0).abs() < 1e-12);
    assert!((edit_dist("kitten", "sitting") - 3.0 / 7.0).abs() < 1e-12);
}

#[test]
fn distances_match_reference() {
    let p = TestEmbedder::default();
    let mut r = rng(11);
    for _ in 0..300 {
        let (a, b) = (short_name(&mut r), short_name(&mut r));
        assert!(
            (ngram_dist(&a, &b) - ref_ngram_dist(&a, &b)).abs() < 1e-12,
            "{a:?} {b:?}"
        );
        assert!(
            (edit_dist(&a, &b) - ref_edit_dist(&a, &b)).abs() < 1e-12,
            "{a:?} {b:?}"
        );
        assert!(
            (embedding_dist(&a, &b, &p).unwrap() - ref_embedding_dist(&a, &b, &p)).abs() < 1e-12
        );
    }
}

#[test]
fn embedding_only_ordering_matches_exhaustive_cosine() {
    let p = TestEmbedder::default();
    let texts = [
        "influenza virus testing",
        "hospital bed supply",
        "pcr kit procurement",
        "annual lab gloves",
        "influenza detection kit",
    ];
    let docs: Vec<OracleDoc> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| OracleDoc {
            id: format!("d{i}"),
            fields: vec![("purpose".into(), t.to_string())],
        })
        .collect();
    let corpus = Corpus::new(docs.iter().map(OracleDoc::to_document).collect()).unwrap();
    let idx = build_index(&corpus, &p).unwrap();
    // No query term occurs as a whole word, so only the embedding channel varies.
    let query = "influenzas kits";
    let req = Requirement::new([("purpose", query)]);
    let got = retrieve(&req, &idx, &p, 5).unwrap();
    let q = p.embed(query).unwrap();
    let mut want: Vec<(String, f64)> = docs
        .iter()
        .map(|d| {
            let v = p.embed(&d.fields[0].1).unwrap();
            (
                d.id.clone(),
                ref_cosine(q.as_slice(), v.as_slice()).max(0.0),
            )
        })
        .collect();
    want.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    assert_eq!(
        got.iter().map(|c| c.doc_id.as_str()).collect::<Vec<_>>(),
        want.iter().map(|w| w.0.as_str()).collect::<Vec<_>>()
    );
    for (g, (_, w)) in got.iter().zip(&want) {
        assert_eq!(g.fields[0].vocab_score, 0.0);
        assert!((g.fields[0].embed_score - w).abs() < 1e-12);
    }
}

fn assert_retrieval_matches(docs: &[OracleDoc], query: &[(String, String)], p: &TestEmbedder) {
    let corpus = Corpus::new(docs.iter().map(OracleDoc::to_document).collect()).unwrap();
    let idx = build_index(&corpus, p).unwrap();
    let req = Requirement::new(query.iter().cloned());
    let got = retrieve(&req, &idx, p, docs.len()).unwrap();
    let want = ref_retrieve(docs, query, p);
    let got_ids: Vec<&str> = got.iter().map(|c| c.doc_id.as_str()).collect();
    let want_ids: Vec<&str> = want.iter().map(|(id, _)| id.as_str()).collect();
    assert_eq!(got_ids, want_ids, "query {query:?}");
    for (g, (_, w)) in got.iter().zip(&want) {
        assert!((g.d_score - w).abs() < 1e-9);
    }
}

#[test]
fn three_document_retrieval_matches_brute_force() {
    let p = TestEmbedder::default();
    let docs = vec![
        OracleDoc {
            id: "a".into(),
            fields: vec![(
                "project name".into(),
                "influenza virus testing project".into(),
            )],
        },
        OracleDoc {
            id: "b".into(),
            fields: vec![("project name".into(), "pcr kit supply".into())],
        },
        OracleDoc {
            id: "c".into(),
            fields: vec![("project name".into(), "influenza detection kit".into())],
        },
    ];
    assert_retrieval_matches(
        &docs,
        &[("project name".into(), "influenza kit".into())],
        &p,
    );
}

#[test]
fn random_corpora_match_brute_force() {
    let p = TestEmbedder::default();
    let mut r = rng(5);
    for _ in 0..40 {
        let docs = random_oracle_corpus(&mut r, 20);
        let query = random_query(&mut r);
        assert_retrieval_matches(&docs, &query, &p);
    }
}

#[test]
fn three_by_three_lists_match_enumeration() {
    let p = TestEmbedder::default();
    let mut r = rng(21);
    for _ in 0..50 {
        let c: Vec<String> = (0..3).map(|_| short_name(&mut r)).collect();
        let h: Vec<String> = (0..3).map(|_| short_name(&mut r)).collect();
        let got = list_dist_by_name(&c, &h, 0.5, &p).unwrap().value;
        assert!((got - ref_list_dist(&c, &h, 0.5, &p)).abs() < 1e-12);
    }
}

fn candidate_corpus(lists: &[(String, Vec<String>)]) -> Corpus {
    Corpus::new(
        lists
            .iter()
            .map(|(id, names)| {
                TenderDocument::new(
                    id.clone(),
                    [("project name".to_string(), id.clone())]
                        .into_iter()
                        .collect(),
                    vec![],
                    vec![],
                    names.iter().map(PurchaseItem::named).collect(),
                )
                .unwrap()
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn five_candidates_rerank_like_brute_force() {
    let p = TestEmbedder::default();
    let mut r = rng(8);
    for _ in 0..20 {
        let lists: Vec<(String, Vec<String>)> = (0..5)
            .map(|i| {
                let n = rand::Rng::random_range(&mut r, 0..=4);
                (
                    format!("c{i}"),
                    (0..n).map(|_| short_name(&mut r)).collect(),
                )
            })
            .collect();
        let c: Vec<String> = (0..3).map(|_| short_name(&mut r)).collect();
        let corpus = candidate_corpus(&lists);
        let cands = lists
            .iter()
            .map(|(id, _)| ScoredCandidate::unscored(id))
            .collect();
        let c_items: Vec<PurchaseItem> = c.iter().map(PurchaseItem::named).collect();
        let got = rerank(cands, &corpus, Some(&c_items), 0.5, &p).unwrap();
        let want = ref_rerank(&lists, &c, 0.5, &p);
        assert_eq!(
            got.iter().map(|g| g.doc_id.clone()).collect::<Vec<_>>(),
            want.iter().map(|w| w.0.clone()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn paragraph_score_is_exhaustive_max() {
    let p = TestEmbedder::default();
    let mut r = rng(3);
    for _ in 0..30 {
        let gold: Vec<String> = (0..4).map(|_| words(&mut r, 2, 8)).collect();
        let para = words(&mut r, 2, 8);
        let want = gold
            .iter()
            .map(|g| 1.0 - ref_embedding_dist(&para, g, &p))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((paragraph_score(&para, &gold, &p).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn para_score_three_vs_five_recomputed() {
    let p = TestEmbedder::default();
    let mut r = rng(4);
    for _ in 0..30 {
        let gen: Vec<String> = (0..3).map(|_| words(&mut r, 2, 8)).collect();
        let gold: Vec<String> = (0..5).map(|_| words(&mut r, 2, 8)).collect();
        let mean = gen
            .iter()
            .map(|g| {
                gold.iter()
                    .map(|s| 1.0 - ref_embedding_dist(g, s, &p))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum::<f64>()
            / 3.0;
        let want = (1.0 - 2.0 / 5.0) * mean * 100.0;
        assert!((para_score(&gen, &gold, &p).unwrap().value - want).abs() < 1e-9);
    }
}

#[test]
fn disjoint_single_rows_score_at_most_half() {
    let p = TestEmbedder::default();
    let (a, b) = collision_free_pair(&p);
    let gen = TableBlock::new(vec!["name".into()], vec![vec![a.clone()]]);
    let gold = TableBlock::new(vec!["name".into()], vec![vec![b.clone()]]);
    let row_dist = ref_list_dist(&[a], &[b], 0.5, &p);
    let c = table_score_single(&gen, &gold, &p, 0.5).unwrap();
    assert_eq!(c.field_sim, 1.0);
    assert!((c.row_sim - (1.0 - row_dist.min(1.0))).abs() < 1e-12);
    assert!((c.score - (1.0 + 1.0 - row_dist.min(1.0)) / 2.0).abs() < 1e-12);
    assert!(c.score <= 0.5 + (1.0 - row_dist.min(1.0)) / 2.0 + 1e-9);
}
