//! Stores a pattern after a single exposure and recognizes it the second time.

use sp_core::{build_alignments, learn, Corpus, LearnParams, Pattern, SearchParams, Store};

fn main() {
    let item = Pattern::parse_new("s u n f l o w e r").unwrap();
    let corpus = Corpus { news: vec![item.clone()] };
    let params = LearnParams::default();

    let once = learn(&corpus, &Store::new(), &params).store;
    print!("after one exposure:\n{}", once.serialize());

    let best = &build_alignments(&item, &once, &SearchParams::default())[0];
    println!(
        "second presentation: CD {:.3}, {} of {} symbols matched",
        best.score.cd,
        best.alignment.matched_new_indices().len(),
        item.len()
    );

    let twice = learn(&corpus, &once, &params).store;
    print!("after two exposures:\n{}", twice.serialize());
}
