#![allow(dead_code)]

use std::collections::BTreeSet;

use sp_core::inference::Surface;
use sp_core::{parse_corpus, parse_store, Alignment, Pattern, Store};

pub const KITTENS_STORE: &str = include_str!("../../fixtures/kittens.sp");
pub const SENTENCE: &str = "t w o k i t t e n s p l a y";
pub const NOISY: &str = "t o k i t t e m s p l a x y";

/// New positions and the Old cells they join in the clean and noisy parses.
pub const SENTENCE_SURFACE: &[(usize, &str)] = &[
    (0, "P3[3]"),
    (1, "P3[4]"),
    (2, "P3[5]"),
    (3, "P1[2]"),
    (4, "P1[3]"),
    (5, "P1[4]"),
    (6, "P1[5]"),
    (7, "P1[6]"),
    (8, "P1[7]"),
    (9, "P2[4]"),
    (10, "P5[2]"),
    (11, "P5[3]"),
    (12, "P5[4]"),
    (13, "P5[5]"),
];

pub const NOISY_SURFACE: &[(usize, &str)] = &[
    (0, "P3[3]"),
    (1, "P3[5]"),
    (2, "P1[2]"),
    (3, "P1[3]"),
    (4, "P1[4]"),
    (5, "P1[5]"),
    (6, "P1[6]"),
    (8, "P2[4]"),
    (9, "P5[2]"),
    (10, "P5[3]"),
    (11, "P5[4]"),
    (13, "P5[5]"),
];

pub fn kittens_store() -> Store {
    parse_store(KITTENS_STORE).unwrap()
}

pub fn new(text: &str) -> Pattern {
    Pattern::parse_new(text).unwrap()
}

pub fn letters() -> Surface {
    Surface::new("[a-z]").unwrap()
}

pub fn fixture_new(file: &str) -> Pattern {
    let path = format!("{}/fixtures/{file}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    parse_corpus(&text).unwrap().news.remove(0)
}

/// Matched columns as sets of `pattern-id[index]` labels (`new[i]` for row 0), so
/// the comparison ignores row numbering and column placement.
pub fn matched_groups(a: &Alignment) -> BTreeSet<BTreeSet<String>> {
    a.columns()
        .iter()
        .filter(|cells| cells.len() >= 2)
        .map(|cells| {
            cells
                .iter()
                .map(|c| {
                    if c.row == 0 {
                        format!("new[{}]", c.index)
                    } else {
                        format!("{}[{}]", a.row(c.row).id(), c.index)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn group(labels: &[&str]) -> BTreeSet<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

/// Columns joining Old rows to each other, identical in both parses.
pub fn structural_groups() -> Vec<BTreeSet<String>> {
    [
        ["P1[0]", "P2[2]"], // Nr
        ["P1[8]", "P2[3]"], // #Nr
        ["P3[0]", "P4[1]"], // D
        ["P3[6]", "P4[2]"], // #D
        ["P2[0]", "P4[3]"], // N
        ["P2[5]", "P4[4]"], // #N
        ["P4[0]", "P7[3]"], // NP
        ["P4[5]", "P7[4]"], // #NP
        ["P5[0]", "P6[2]"], // Vr
        ["P5[6]", "P6[3]"], // #Vr
        ["P6[0]", "P7[5]"], // V
        ["P6[4]", "P7[6]"], // #V
        ["P7[1]", "P8[0]"], // Num
        ["P7[2]", "P8[2]"], // ;
        ["P2[1]", "P8[3]"], // Np
        ["P6[1]", "P8[4]"], // Vp
    ]
    .iter()
    .map(|g| group(g))
    .collect()
}

pub fn surface_groups(pairs: &[(usize, &str)]) -> Vec<BTreeSet<String>> {
    pairs
        .iter()
        .map(|(i, cell)| group(&[&format!("new[{i}]"), cell]))
        .collect()
}

pub mod generated {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use sp_core::{Pattern, Store};

    /// A small store plus a New pattern built partly from the store's bodies.
    pub struct Instance {
        pub store: Store,
        pub new: Pattern,
    }

    const ALPHABET: &[&str] = &["a", "b", "c", "d", "e", "f"];

    pub fn instance(seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_patterns = rng.gen_range(1..=5);
        let mut patterns = Vec::new();
        let mut bodies: Vec<Vec<&str>> = Vec::new();
        for k in 0..n_patterns {
            let label = format!("X{k}");
            let close = format!("#X{k}");
            let body_len = rng.gen_range(1..=6);
            let body: Vec<&str> = (0..body_len).map(|_| *ALPHABET.choose(&mut rng).unwrap()).collect();
            let mut full: Vec<String> = body.iter().map(|s| s.to_string()).collect();
            full.push(close);
            let freq = rng.gen_range(1..=20);
            patterns.push(Pattern::old(format!("P{}", k + 1), &[label], &full, freq).unwrap());
            bodies.push(body);
        }
        let new_len = rng.gen_range(2..=8);
        let mut names: Vec<&str> = Vec::new();
        while names.len() < new_len {
            if rng.gen_bool(0.7) {
                let body = bodies.choose(&mut rng).unwrap();
                for name in body {
                    if rng.gen_bool(0.85) {
                        names.push(name);
                    }
                }
            } else {
                names.push(ALPHABET.choose(&mut rng).unwrap());
            }
        }
        names.truncate(new_len);
        Instance {
            store: Store::from_patterns(patterns).unwrap(),
            new: Pattern::new_pattern("new", &names).unwrap(),
        }
    }
}

/// Delimiter-free corpora of words from a small random vocabulary.
pub mod words {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use sp_core::{Corpus, Pattern};

    pub struct Segmentation {
        pub vocabulary: Vec<String>,
        pub corpus: Corpus,
    }

    const LETTERS: &str = "abcdefghijklmnopqrstuvwxyz";

    pub fn corpus(seed: u64, items: usize) -> Segmentation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let letters: Vec<char> = LETTERS.chars().collect();
        let mut vocabulary: Vec<String> = Vec::new();
        while vocabulary.len() < 4 {
            let len = rng.gen_range(3..=6);
            let w: String = (0..len).map(|_| *letters.choose(&mut rng).unwrap()).collect();
            if !vocabulary.contains(&w) {
                vocabulary.push(w);
            }
        }
        let news = (0..items)
            .map(|_| {
                let words = rng.gen_range(2..=4);
                let text: String = (0..words)
                    .map(|_| vocabulary.choose(&mut rng).unwrap().as_str())
                    .collect();
                let names: Vec<String> = text.chars().map(String::from).collect();
                Pattern::new_pattern("new", &names).unwrap()
            })
            .collect();
        Segmentation {
            vocabulary,
            corpus: Corpus { news },
        }
    }
}

/// Every fixture store with the New patterns that exercise it.
pub const FIXTURES: &[(&str, &str)] = &[
    ("kittens.sp", "kittens.new"),
    ("kittens.sp", "kittens_noisy.new"),
    ("hierarchy.sp", "hierarchy.new"),
    ("diagnosis.sp", "diagnosis.new"),
];

fn fixture_text(file: &str) -> String {
    std::fs::read_to_string(format!("{}/fixtures/{file}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub fn fixture_store(file: &str) -> Store {
    parse_store(&fixture_text(file)).unwrap()
}

pub fn fixture_news(file: &str) -> Vec<Pattern> {
    parse_corpus(&fixture_text(file)).unwrap().news
}

/// Reference implementations written directly from the definitions, sharing no code
/// with the library.
pub mod oracle {
    use std::collections::HashMap;

    use sp_core::{Alignment, Store};

    pub const EPSILON: f64 = 0.01;

    /// Bits per name: every occurrence of a name in a pattern contributes that
    /// pattern's frequency.
    pub fn costs(store: &Store) -> HashMap<String, f64> {
        let mut freq: HashMap<String, u64> = HashMap::new();
        for p in store.patterns() {
            for n in p.names() {
                *freq.entry(n.to_string()).or_default() += p.frequency();
            }
        }
        let total: u64 = freq.values().sum();
        freq.into_iter()
            .map(|(n, f)| (n, EPSILON.max(-(f as f64 / total as f64).log2())))
            .collect()
    }

    /// B_E: the bits of identification-class Old cells standing alone in a column.
    pub fn code_bits(alignment: &Alignment, costs: &HashMap<String, f64>) -> f64 {
        let mut bits = 0.0;
        for r in 1..alignment.n_rows() {
            let row = alignment.row(r);
            for (i, sym) in row.symbols().iter().enumerate() {
                if sym.class.is_id() && !alignment.is_matched(alignment.column_of(r, i)) {
                    bits += costs[&sym.name];
                }
            }
        }
        bits
    }

    /// Best total weight of an order-preserving matching of equal names, by trying
    /// every choice at every position.
    pub fn best_hit_score(driving: &[&str], target: &[&str], cost: &dyn Fn(&str) -> f64) -> f64 {
        fn go(d: &[&str], t: &[&str], cost: &dyn Fn(&str) -> f64) -> f64 {
            if d.is_empty() || t.is_empty() {
                return 0.0;
            }
            let mut best = go(&d[1..], t, cost).max(go(d, &t[1..], cost));
            if d[0] == t[0] {
                best = best.max(cost(d[0]) + go(&d[1..], &t[1..], cost));
            }
            best
        }
        go(driving, target, cost)
    }
}
