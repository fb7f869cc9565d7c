//! The `two kittens play` parse and its noisy variant.

mod common;

use common::*;
use sp_core::inference::{correct, decode, encode, inferred_fragments, probabilities};
use sp_core::render::render_text;
use sp_core::{build_alignments, SearchParams};

#[test]
fn clean_sentence_reproduces_the_published_parse() {
    let store = kittens_store();
    let ranked = build_alignments(&new(SENTENCE), &store, &SearchParams::default());
    let best = &ranked[0];
    let mut rows = best.alignment.old_pattern_ids();
    rows.sort();
    assert_eq!(rows, vec!["P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8"]);

    let mut expected = structural_groups();
    expected.extend(surface_groups(SENTENCE_SURFACE));
    assert_eq!(matched_groups(&best.alignment), expected.into_iter().collect());
    assert!(best.score.cd > 0.0);
    assert!(ranked[1].score.cd < best.score.cd, "the best parse is unique");
    best.alignment.validate().unwrap();
}

#[test]
fn clean_sentence_matches_the_golden_grid() {
    let ranked = build_alignments(&new(SENTENCE), &kittens_store(), &SearchParams::default());
    let golden = include_str!("../fixtures/kittens.golden");
    assert_eq!(render_text(&ranked[0].alignment), golden);
}

#[test]
fn noisy_sentence_uses_the_same_patterns() {
    let store = kittens_store();
    let ranked = build_alignments(&new(NOISY), &store, &SearchParams::default());
    let best = &ranked[0].alignment;
    let mut rows = best.old_pattern_ids();
    rows.sort();
    assert_eq!(rows, vec!["P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8"]);

    let mut expected = structural_groups();
    expected.extend(surface_groups(NOISY_SURFACE));
    assert_eq!(matched_groups(best), expected.into_iter().collect());

    let unmatched: Vec<&str> = (0..best.new_pattern().len())
        .filter(|&i| !best.is_matched(best.column_of(0, i)))
        .map(|i| best.new_pattern().name(i))
        .collect();
    assert_eq!(unmatched, vec!["m", "x"]);
}

#[test]
fn noisy_sentence_infers_the_missing_letters() {
    let ranked = build_alignments(&new(NOISY), &kittens_store(), &SearchParams::default());
    let best = &ranked[0].alignment;
    let fragments = inferred_fragments(best);
    let has = |pattern: &str, names: &[&str]| {
        fragments
            .iter()
            .any(|f| f.pattern == pattern && f.names.iter().map(String::as_str).eq(names.iter().copied()))
    };
    assert!(has("P3", &["w"]), "{fragments:?}");
    assert!(has("P1", &["n"]), "{fragments:?}");
    assert_eq!(correct(best, &letters()).join(" "), SENTENCE);
}

#[test]
fn clean_sentence_corrects_to_itself() {
    let ranked = build_alignments(&new(SENTENCE), &kittens_store(), &SearchParams::default());
    assert_eq!(correct(&ranked[0].alignment, &letters()).join(" "), SENTENCE);
}

#[test]
fn best_parse_dominates_its_group() {
    let ranked = build_alignments(&new(SENTENCE), &kittens_store(), &SearchParams::default());
    let report = probabilities(&ranked).unwrap();
    let g = report.entries[0].group;
    let best = report.entries[0].relative;
    for e in report.entries.iter().filter(|e| e.group == g).skip(1) {
        assert!(e.relative < best);
    }
}

#[test]
fn transmission_round_trip() {
    let store = kittens_store();
    let params = SearchParams::default();
    let sentence = new(SENTENCE);
    let enc = encode(&sentence, &store, &params).unwrap();
    assert!(enc.best.score.b_code < enc.best.score.b_new);
    assert!(enc.code.len() < sentence.len());
    let back = decode(&enc.code.names(), &store, &params, &letters()).unwrap();
    assert_eq!(back.join(" "), SENTENCE);
}

#[test]
fn fixture_files_hold_the_two_sentences() {
    let names = |p: sp_core::Pattern| p.names().collect::<Vec<_>>().join(" ");
    assert_eq!(names(fixture_new("kittens.new")), SENTENCE);
    assert_eq!(names(fixture_new("kittens_noisy.new")), NOISY);
}
