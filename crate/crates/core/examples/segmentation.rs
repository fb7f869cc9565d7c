//! Learns the words of an unsegmented text. Usage: `segmentation [seed]`.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sp_core::learner::{grammars_tsv, null_grammar};
use sp_core::scoring::grammar_score;
use sp_core::{learn, Corpus, LearnParams, Pattern, Store};

fn main() {
    let seed: u64 = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed must be a number"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocabulary: Vec<String> = Vec::new();
    while vocabulary.len() < 4 {
        let len = rng.gen_range(3..=6);
        let word: String = (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
        if !vocabulary.contains(&word) {
            vocabulary.push(word);
        }
    }
    let texts: Vec<String> = (0..50)
        .map(|_| {
            let n = rng.gen_range(2..=4);
            (0..n).map(|_| vocabulary.choose(&mut rng).unwrap().as_str()).collect()
        })
        .collect();
    println!("vocabulary: {}", vocabulary.join(" "));
    println!("first items: {}", texts[..3].join(" | "));

    let news = texts
        .iter()
        .map(|t| Pattern::new_pattern("new", &t.chars().map(String::from).collect::<Vec<_>>()).unwrap())
        .collect();
    let corpus = Corpus { news };
    let params = LearnParams {
        derive_from: 3,
        ..LearnParams::default()
    };
    let started = Instant::now();
    let learned = learn(&corpus, &Store::new(), &params);
    println!("learned in {:.1?}\n", started.elapsed());

    print!("rank\tG\tE\ttotal\tpatterns\n{}", grammars_tsv(&learned.grammars));
    let null = grammar_score(&null_grammar(&corpus), &corpus, &params.search);
    println!("null grammar total {:.3}\n", null.total);
    let (best, _) = &learned.grammars[0];
    print!("best grammar:\n{}", best.serialize());
}
