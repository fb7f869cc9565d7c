//! Bit costs, encodings and compression scores.
//!
//! A symbol name's cost is its Shannon information under the frequency-weighted Old
//! store: `max(eps, -log2(f(s) / F))`. An alignment is scored by the compression
//! difference `CD = B_N - B_E`, where `B_N` is the cost of the New symbols it matches
//! and `B_E` the cost of its code, the unmatched identification symbols of its Old rows.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aligner::{build_alignments, Alignment, SearchParams};
use crate::error::{Result, SpError};
use crate::knowledge::{Corpus, Pattern, Store};

pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    store_version: u64,
    frequencies: HashMap<String, u64>,
    costs: HashMap<String, f64>,
    unseen_cost: f64,
}

impl CostTable {
    pub fn store_version(&self) -> u64 {
        self.store_version
    }

    /// Cost of `name` in bits; names absent from the store cost `unseen_cost`.
    pub fn cost(&self, name: &str) -> f64 {
        self.costs.get(name).copied().unwrap_or(self.unseen_cost)
    }

    pub fn frequency(&self, name: &str) -> u64 {
        self.frequencies.get(name).copied().unwrap_or(0)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.costs.contains_key(name)
    }

    pub fn unseen_cost(&self) -> f64 {
        self.unseen_cost
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// `(name, f, bits)` sorted by name.
    pub fn entries(&self) -> Vec<(&str, u64, f64)> {
        let mut v: Vec<_> = self
            .costs
            .iter()
            .map(|(n, &c)| (n.as_str(), self.frequencies[n], c))
            .collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// `name<TAB>f<TAB>bits`, one line per name, sorted by name.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (n, f, c) in self.entries() {
            let _ = writeln!(out, "{n}\t{f}\t{c:.6}");
        }
        out
    }
}

pub fn build_cost_table(store: &Store, epsilon: f64) -> Result<CostTable> {
    if store.is_empty() {
        return Err(SpError::EmptyStore);
    }
    let mut frequencies: HashMap<String, u64> = HashMap::new();
    for p in store.patterns() {
        for name in p.names() {
            *frequencies.entry(name.to_string()).or_insert(0) += p.frequency();
        }
    }
    let total: u64 = frequencies.values().sum();
    let costs: HashMap<String, f64> = frequencies
        .iter()
        .map(|(n, &f)| (n.clone(), epsilon.max(-(f as f64 / total as f64).log2())))
        .collect();
    let max = costs.values().copied().fold(0.0f64, f64::max);
    Ok(CostTable {
        store_version: store.version(),
        frequencies,
        costs,
        unseen_cost: max + 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSymbol {
    pub row: usize,
    pub pattern: String,
    pub index: usize,
    pub name: String,
}

/// The unmatched identification symbols of an alignment, in column order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CodeSequence {
    pub symbols: Vec<CodeSymbol>,
    pub total_bits: f64,
}

impl CodeSequence {
    pub fn names(&self) -> Vec<&str> {
        self.symbols.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionScore {
    pub b_new: f64,
    pub b_code: f64,
    pub cd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrammarScore {
    pub g: f64,
    pub e: f64,
    pub total: f64,
}

impl GrammarScore {
    pub fn new(g: f64, e: f64) -> Self {
        GrammarScore { g, e, total: g + e }
    }
}

pub fn encoding_of(alignment: &Alignment, costs: &CostTable) -> CodeSequence {
    let mut symbols = Vec::new();
    let mut total_bits = 0.0;
    for column in alignment.columns() {
        if column.len() != 1 || column[0].row == 0 {
            continue;
        }
        let cell = column[0];
        let pattern = alignment.row(cell.row);
        let symbol = &pattern.symbols()[cell.index];
        if symbol.class.is_id() {
            total_bits += costs.cost(&symbol.name);
            symbols.push(CodeSymbol {
                row: cell.row,
                pattern: pattern.id().to_string(),
                index: cell.index,
                name: symbol.name.clone(),
            });
        }
    }
    CodeSequence {
        symbols,
        total_bits,
    }
}

/// Cost of the New symbols that sit in matched columns.
pub fn matched_new_bits(alignment: &Alignment, costs: &CostTable) -> f64 {
    let new = alignment.row(0);
    (0..new.len())
        .filter(|&i| alignment.is_matched(alignment.column_of(0, i)))
        .map(|i| costs.cost(new.name(i)))
        .sum()
}

/// Same total as `encoding_of(..).total_bits`, without building the sequence.
fn code_bits(alignment: &Alignment, costs: &CostTable) -> f64 {
    alignment
        .columns()
        .iter()
        .filter(|column| column.len() == 1 && column[0].row != 0)
        .map(|column| &alignment.row(column[0].row).symbols()[column[0].index])
        .filter(|symbol| symbol.class.is_id())
        .map(|symbol| costs.cost(&symbol.name))
        .sum()
}

pub fn compression_difference(alignment: &Alignment, costs: &CostTable) -> CompressionScore {
    let b_new = matched_new_bits(alignment, costs);
    let b_code = code_bits(alignment, costs);
    CompressionScore {
        b_new,
        b_code,
        cd: b_new - b_code,
    }
}

/// Raw cost of the New symbols left unmatched.
pub fn unmatched_new_bits(alignment: &Alignment, costs: &CostTable) -> f64 {
    let new = alignment.row(0);
    (0..new.len())
        .filter(|&i| !alignment.is_matched(alignment.column_of(0, i)))
        .map(|i| costs.cost(new.name(i)))
        .sum()
}

/// G: the summed cost of every symbol of every pattern in the grammar.
pub fn grammar_cost<'a>(grammar: impl IntoIterator<Item = &'a Pattern>, costs: &CostTable) -> f64 {
    grammar
        .into_iter()
        .flat_map(|p| p.names())
        .map(|n| costs.cost(n))
        .sum()
}

/// E for a single New pattern: the code of its best alignment plus the raw cost of
/// whatever that alignment leaves unmatched.
pub fn item_encoding_cost(
    grammar: &Store,
    new: &Pattern,
    costs: &CostTable,
    params: &SearchParams,
) -> f64 {
    let ranked = build_alignments(new, grammar, params);
    let best = &ranked[0];
    best.score.b_code + unmatched_new_bits(&best.alignment, costs)
}

/// E: the summed encoding cost of every corpus item under `grammar`.
pub fn corpus_encoding_cost(grammar: &Store, corpus: &Corpus, params: &SearchParams) -> f64 {
    if corpus.is_empty() {
        return 0.0;
    }
    if grammar.is_empty() {
        return 0.0;
    }
    let costs = match build_cost_table(grammar, params.epsilon) {
        Ok(c) => c,
        Err(_) => return 0.0,
    };
    corpus
        .news
        .iter()
        .map(|n| item_encoding_cost(grammar, n, &costs, params))
        .sum()
}

/// G + E for a grammar over a corpus.
pub fn grammar_score(grammar: &Store, corpus: &Corpus, params: &SearchParams) -> GrammarScore {
    if grammar.is_empty() {
        return GrammarScore::new(0.0, 0.0);
    }
    let costs = build_cost_table(grammar, params.epsilon).expect("non-empty grammar");
    let g = grammar_cost(grammar.patterns(), &costs);
    let e = corpus_encoding_cost(grammar, corpus, params);
    GrammarScore::new(g, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::parse_store;

    fn independent_bits(count: u64, total: u64) -> f64 {
        // log2 via natural logs, separate from the table's code path
        -((count as f64).ln() - (total as f64).ln()) / std::f64::consts::LN_2
    }

    #[test]
    fn two_equiprobable_names() {
        let t = build_cost_table(&parse_store("OLD 1 : a b").unwrap(), DEFAULT_EPSILON).unwrap();
        assert!((t.cost("a") - 1.0).abs() < 1e-12);
        assert!((t.cost("b") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skewed_counts_and_unseen_cost() {
        let t = build_cost_table(&parse_store("OLD 1 : a a a b").unwrap(), DEFAULT_EPSILON).unwrap();
        assert!((t.cost("a") - independent_bits(3, 4)).abs() < 1e-12);
        assert!((t.cost("a") - 0.415_037_499_278_843_8).abs() < 1e-12);
        assert!((t.cost("b") - 2.0).abs() < 1e-12);
        assert!((t.cost("z") - 3.0).abs() < 1e-12);
        assert_eq!(t.frequency("a"), 3);
    }

    #[test]
    fn epsilon_floor_applies() {
        let t = build_cost_table(&parse_store("OLD 1000000 : a\nOLD 1 : b").unwrap(), 0.01).unwrap();
        assert_eq!(t.cost("a"), 0.01);
        assert!(t.unseen_cost() >= t.cost("b"));
    }

    #[test]
    fn empty_store_is_an_error() {
        assert_eq!(build_cost_table(&Store::new(), 0.01), Err(SpError::EmptyStore));
    }

    #[test]
    fn tsv_is_sorted() {
        let t = build_cost_table(&parse_store("OLD 2 X : b a #X").unwrap(), 0.01).unwrap();
        let tsv = t.to_tsv();
        let names: Vec<&str> = tsv.lines().map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(names, vec!["#X", "X", "a", "b"]);
        assert!(tsv.starts_with("#X\t2\t2.000000\n"));
    }

    #[test]
    fn grammar_cost_with_uniform_costs() {
        let store = parse_store("OLD 1 : a b").unwrap();
        let t = build_cost_table(&store, 0.01).unwrap();
        assert!((grammar_cost(store.patterns(), &t) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_frequencies_keeps_costs_bitwise() {
        let store = parse_store("OLD 3 X : a b #X\nOLD 7 Y : b c c #Y\n").unwrap();
        let base = build_cost_table(&store, 0.01).unwrap();
        for k in [2, 10, 1000] {
            let scaled = build_cost_table(&store.with_scaled_frequencies(k), 0.01).unwrap();
            for (n, _, c) in base.entries() {
                assert_eq!(c.to_bits(), scaled.cost(n).to_bits());
            }
        }
    }
}
