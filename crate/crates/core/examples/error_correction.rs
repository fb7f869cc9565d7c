//! Recovers a sentence with one letter missing, one substituted and one added.

use sp_core::inference::{correct, inferred_fragments, Surface};
use sp_core::render::render_text;
use sp_core::{build_alignments, parse_store, Pattern, SearchParams};

fn main() {
    let store = parse_store(include_str!("../fixtures/kittens.sp")).unwrap();
    let noisy = Pattern::parse_new("t o k i t t e m s p l a x y").unwrap();
    let ranked = build_alignments(&noisy, &store, &SearchParams::default());
    let best = &ranked[0].alignment;
    print!("{}", render_text(best));

    let unmatched: Vec<&str> = (0..noisy.len())
        .filter(|&i| !best.is_matched(best.column_of(0, i)))
        .map(|i| noisy.name(i))
        .collect();
    println!("not explained: {}", unmatched.join(" "));
    for f in inferred_fragments(best) {
        println!("supplied by {}: {}", f.pattern, f.names.join(" "));
    }
    let letters = Surface::new("[a-z]").unwrap();
    println!("heard:     {}", noisy.names().collect::<Vec<_>>().join(" "));
    println!("corrected: {}", correct(best, &letters).join(" "));
}
