//! Parses `two kittens play` against a small grammar and prints the best alignments.

use sp_core::render::render_text;
use sp_core::{build_alignments, build_cost_table, encoding_of, parse_store, Pattern, SearchParams};

fn main() {
    let store = parse_store(include_str!("../fixtures/kittens.sp")).unwrap();
    let sentence = Pattern::parse_new("t w o k i t t e n s p l a y").unwrap();
    let params = SearchParams::default();
    let costs = build_cost_table(&store, params.epsilon).unwrap();

    let ranked = build_alignments(&sentence, &store, &params);
    for (rank, s) in ranked.iter().take(3).enumerate() {
        println!(
            "rank {}  CD {:.3}  B_N {:.3}  B_E {:.3}",
            rank + 1,
            s.score.cd,
            s.score.b_new,
            s.score.b_code
        );
        print!("{}", render_text(&s.alignment));
        println!("code: {}\n", encoding_of(&s.alignment, &costs).names().join(" "));
    }
}
