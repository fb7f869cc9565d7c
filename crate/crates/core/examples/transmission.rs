//! Sends a sentence as a short code and rebuilds it on the other side from the
//! shared grammar.

use sp_core::inference::{decode, encode, Surface};
use sp_core::{parse_store, Pattern, SearchParams};

fn main() {
    let store = parse_store(include_str!("../fixtures/kittens.sp")).unwrap();
    let params = SearchParams::default();
    let sentence = Pattern::parse_new("t w o k i t t e n s p l a y").unwrap();

    let encoding = encode(&sentence, &store, &params).unwrap();
    let file = encoding.code_file();
    print!("{}", file.to_text());
    println!(
        "{} symbols ({:.2} bits) sent as {} symbols ({:.2} bits)",
        sentence.len(),
        encoding.best.score.b_new,
        encoding.code.len(),
        encoding.code.total_bits
    );

    let letters = Surface::new("[a-z]").unwrap();
    let received = decode(&file.symbols, &store, &params, &letters).unwrap();
    println!("decoded: {}", received.join(" "));
}
