//! Invariants over generated stores and New patterns.

mod common;

use common::generated::instance;
use common::oracle;
use proptest::prelude::*;
use sp_core::inference::{decode, encode};
use sp_core::matcher::find_hit_sequences;
use sp_core::render::{parse_json, render_json};
use sp_core::{build_alignments, build_cost_table, encoding_of, parse_store, Pattern, SearchParams, Store};

fn names(alphabet: &[&'static str], max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(alphabet.to_vec()), 0..=max)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stores_survive_serialization(seed in any::<u64>()) {
        let store = instance(seed).store;
        prop_assert_eq!(parse_store(&store.serialize()).unwrap(), store);
    }

    #[test]
    fn scaling_frequencies_changes_nothing(seed in any::<u64>(), k in 2u64..50) {
        let inst = instance(seed);
        let params = SearchParams::default();
        let scaled = inst.store.with_scaled_frequencies(k);
        let a = build_cost_table(&inst.store, params.epsilon).unwrap();
        let b = build_cost_table(&scaled, params.epsilon).unwrap();
        for ((n, _, x), (m, _, y)) in a.entries().into_iter().zip(b.entries()) {
            prop_assert_eq!(n, m);
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        let ra = build_alignments(&inst.new, &inst.store, &params);
        let rb = build_alignments(&inst.new, &scaled, &params);
        prop_assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(&rb) {
            prop_assert_eq!(x.key(), y.key());
            prop_assert_eq!(x.score.cd.to_bits(), y.score.cd.to_bits());
        }
    }

    #[test]
    fn top_hit_is_the_brute_force_optimum(
        driving in names(&["a", "b", "c", "T", "#T"], 8),
        target in names(&["a", "b", "c"], 6),
        f in 1u64..9,
    ) {
        let mut body = target.clone();
        body.push("#T".into());
        let pattern = Pattern::old("T", &["T".to_string()], &body, f).unwrap();
        let store = Store::from_patterns([pattern.clone()]).unwrap();
        let costs = build_cost_table(&store, oracle::EPSILON).unwrap();
        let hits = find_hit_sequences(&driving, &pattern, &costs, 8);
        let d: Vec<&str> = driving.iter().map(String::as_str).collect();
        let t: Vec<&str> = pattern.names().collect();
        let brute = oracle::best_hit_score(&d, &t, &|n| costs.cost(n));
        let top = hits.first().map_or(0.0, |h| h.score);
        prop_assert!((top - brute).abs() < 1e-9, "matcher {} brute force {}", top, brute);
        for h in &hits {
            prop_assert!(h.pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
            prop_assert!(h.pairs.iter().all(|&(i, j)| driving[i] == t[j]));
            prop_assert!(h.score <= top + 1e-9);
        }
    }

    #[test]
    fn ranked_alignments_are_valid_and_scored_by_definition(seed in any::<u64>()) {
        let inst = instance(seed);
        let ranked = build_alignments(&inst.new, &inst.store, &SearchParams::default());
        let costs = oracle::costs(&inst.store);
        prop_assert!(ranked.windows(2).all(|w| w[0].score.cd >= w[1].score.cd));
        for s in &ranked {
            let a = &s.alignment;
            prop_assert!(a.validate().is_ok(), "{:?}", a.validate());
            let b_new: f64 = a.matched_new_indices().iter().map(|&i| costs[inst.new.name(i)]).sum();
            let b_code = oracle::code_bits(a, &costs);
            prop_assert!((s.score.cd - (b_new - b_code)).abs() < 1e-9);
        }
    }

    #[test]
    fn search_is_repeatable(seed in any::<u64>()) {
        let inst = instance(seed);
        let params = SearchParams::default();
        let a = build_alignments(&inst.new, &inst.store, &params);
        let b = build_alignments(&inst.new, &inst.store, &params);
        let keys = |r: &[sp_core::ScoredAlignment]| r.iter().map(|s| (s.key().to_string(), s.score.cd.to_bits())).collect::<Vec<_>>();
        prop_assert_eq!(keys(&a), keys(&b));
    }

    #[test]
    fn json_documents_rebuild_the_alignment(seed in any::<u64>()) {
        let inst = instance(seed);
        let costs = build_cost_table(&inst.store, oracle::EPSILON).unwrap();
        for s in build_alignments(&inst.new, &inst.store, &SearchParams::default()).iter().take(3) {
            let text = render_json(&s.alignment, &s.score, &encoding_of(&s.alignment, &costs), None);
            let rebuilt = parse_json(&text).unwrap().alignment().unwrap();
            prop_assert_eq!(rebuilt.key(), s.key());
        }
    }

    /// When every Old contents symbol is matched, the code carries all of the New pattern.
    #[test]
    fn complete_alignments_transmit_losslessly(seed in any::<u64>()) {
        let inst = instance(seed);
        let params = SearchParams::default();
        if let Ok(enc) = encode(&inst.new, &inst.store, &params) {
            let a = &enc.best.alignment;
            let complete = a.matched_new_indices().len() == inst.new.len()
                && (1..a.n_rows()).all(|r| {
                    a.row(r).symbols().iter().enumerate().all(|(i, s)| s.class.is_id() || a.is_matched(a.column_of(r, i)))
                });
            if complete {
                let back = decode(&enc.code.names(), &inst.store, &params, &common::letters()).unwrap();
                prop_assert_eq!(back, inst.new.names().collect::<Vec<_>>());
            }
        }
    }
}
