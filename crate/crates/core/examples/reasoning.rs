//! Recognizes an individual from a few features and fills in everything it inherits
//! from its classes.

use sp_core::inference::{correct, inferred_fragments, Surface};
use sp_core::render::render_text;
use sp_core::{build_alignments, parse_corpus, parse_store, SearchParams};

fn main() {
    let store = parse_store(include_str!("../fixtures/hierarchy.sp")).unwrap();
    let seen = parse_corpus(include_str!("../fixtures/hierarchy.new")).unwrap().news.remove(0);
    let ranked = build_alignments(&seen, &store, &SearchParams::default());
    let best = &ranked[0].alignment;
    print!("{}", render_text(best));

    println!("observed: {}", seen.names().collect::<Vec<_>>().join(" "));
    for f in inferred_fragments(best) {
        println!("inherited from {}: {}", f.pattern, f.names.join(" "));
    }
    let words = Surface::new("[a-z-]+").unwrap();
    println!("complete: {}", correct(best, &words).join(" "));
}
