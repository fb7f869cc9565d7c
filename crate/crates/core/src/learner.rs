//! Unsupervised learning: new Old patterns are cut from good alignments, and grammars
//! are sifted from the store by their two-part cost G + E.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::aligner::{build_alignments_with, Alignment, SearchParams};
use crate::knowledge::{Corpus, Pattern, Provenance, Store, SymbolClass};
use crate::scoring::{
    build_cost_table, compression_difference, grammar_cost, unmatched_new_bits, CostTable, GrammarScore,
};

pub const DEFAULT_DERIVE_FROM: usize = 1;
pub const DEFAULT_KEEP: usize = 5;
pub const DEFAULT_MAX_FRAGMENTS: usize = 16;
/// Learning aligns every item against a growing store and sifting realigns the
/// corpus many times over, so both search narrower than a one-off `align`.
pub const LEARN_BEAM_WIDTH: usize = 10;
pub const LEARN_MAX_HITS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct LearnParams {
    pub search: SearchParams,
    /// How many of the best alignments of each item patterns are derived from.
    pub derive_from: usize,
    /// How many grammars the sift returns.
    pub keep: usize,
    /// Upper limit on greedy removal steps while sifting.
    pub max_removals: usize,
    /// Alignments cut into more pieces than this get no abstract pattern.
    pub max_fragments: usize,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            search: SearchParams {
                beam_width: LEARN_BEAM_WIDTH,
                max_hits: LEARN_MAX_HITS,
                ..SearchParams::default()
            },
            derive_from: DEFAULT_DERIVE_FROM,
            keep: DEFAULT_KEEP,
            max_removals: usize::MAX,
            max_fragments: DEFAULT_MAX_FRAGMENTS,
        }
    }
}

/// Patterns to add and frequencies to bump, as derived from one alignment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub patterns: Vec<Pattern>,
    /// Pattern id and amount, each existing pattern at most once.
    pub increments: Vec<(String, u64)>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty() && self.increments.is_empty()
    }

    /// Adds the candidates to `store`.
    pub fn apply(self, store: &mut Store) {
        for (id, by) in &self.increments {
            store.increment(id, *by);
        }
        for p in self.patterns {
            store
                .insert(p)
                .expect("candidate ids are fresh labels and cannot collide");
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// New symbol matched by an Old row.
    Matched,
    /// New symbol nothing matched.
    NewGap,
    /// Old contents symbol with no New counterpart.
    OldGap,
}

/// One maximal run cut from an alignment.
#[derive(Debug, Clone)]
struct Run {
    kind: Kind,
    /// The Old row the run belongs to; 0 for New gaps.
    row: usize,
    names: Vec<String>,
}

/// Cuts the surface of an alignment into runs of matched New symbols, unmatched New
/// symbols, and unmatched contents of the Old rows that touch the New pattern.
fn cut_runs(a: &Alignment) -> Vec<Run> {
    let surface_rows: BTreeSet<usize> = a
        .columns()
        .iter()
        .filter(|cells| cells.len() >= 2 && cells.iter().any(|c| c.row == 0))
        .flat_map(|cells| cells.iter().map(|c| c.row).filter(|&r| r != 0))
        .collect();
    let mut runs: Vec<Run> = Vec::new();
    for (c, cells) in a.columns().iter().enumerate() {
        let (kind, row) = if cells.iter().any(|cell| cell.row == 0) {
            match cells.iter().map(|cell| cell.row).filter(|&r| r != 0).min() {
                Some(r) => (Kind::Matched, r),
                None => (Kind::NewGap, 0),
            }
        } else if cells.len() == 1
            && surface_rows.contains(&cells[0].row)
            && a.row(cells[0].row).symbols()[cells[0].index].class == SymbolClass::Contents
        {
            (Kind::OldGap, cells[0].row)
        } else {
            continue;
        };
        let name = a.column_name(c).to_string();
        match runs.last_mut() {
            Some(last) if last.kind == kind && last.row == row => last.names.push(name),
            _ => runs.push(Run {
                kind,
                row,
                names: vec![name],
            }),
        }
    }
    runs
}

/// The symbols other patterns use to refer to `p`: its first identification symbol,
/// followed by that symbol's boundary-close when the pattern has one.
fn reference(p: &Pattern) -> Vec<String> {
    let Some(first) = p.symbols().iter().find(|s| s.class == SymbolClass::Identification) else {
        return Vec::new();
    };
    let close = format!("#{}", first.name);
    let mut out = vec![first.name.clone()];
    if p.symbols().iter().any(|s| s.class == SymbolClass::BoundaryClose && s.name == close) {
        out.push(close);
    }
    out
}

/// Collects candidates while remembering what this derivation already made.
struct Deriver<'s> {
    store: &'s mut Store,
    out: CandidateSet,
    bumped: BTreeSet<String>,
}

impl Deriver<'_> {
    fn bump(&mut self, id: &str) {
        if self.bumped.insert(id.to_string()) {
            self.out.increments.push((id.to_string(), 1));
        }
    }

    /// Returns the reference symbols of a pattern whose contents are `body`, reusing an
    /// existing or already derived pattern when there is one.
    fn product(&mut self, body: &[String]) -> Vec<String> {
        let same = |p: &Pattern| p.contents_names().iter().copied().eq(body.iter().map(String::as_str));
        if let Some(p) = self.out.patterns.iter().find(|p| same(p)) {
            return reference(p);
        }
        if let Some(p) = self.store.patterns().iter().find(|p| same(p)) {
            let (id, refs) = (p.id().to_string(), reference(p));
            self.bump(&id);
            return refs;
        }
        let label = self.store.fresh_label();
        let mut full: Vec<String> = body.to_vec();
        full.push(format!("#{label}"));
        let p = Pattern::old(label.clone(), std::slice::from_ref(&label), &full, 1)
            .expect("fresh labels and existing names form a valid pattern")
            .with_provenance(Provenance::Learned);
        let refs = reference(&p);
        self.out.patterns.push(p);
        refs
    }
}

/// Derives candidate Old patterns from an alignment.
///
/// A New pattern that matched nothing is stored whole. Otherwise, when something is
/// left unmatched, each run of matched New symbols, of unmatched New symbols and of
/// unmatched Old contents becomes a pattern of its own, and abstract patterns record
/// how the runs combine: one for the New pattern's form and one for the Old rows'
/// form. Old patterns whose contents are fully matched gain one in frequency. Fresh
/// labels come from `store`, which is otherwise left unchanged.
pub fn derive_patterns(alignment: &Alignment, store: &mut Store, max_fragments: usize) -> CandidateSet {
    let mut d = Deriver {
        store,
        out: CandidateSet::default(),
        bumped: BTreeSet::new(),
    };
    for r in 1..alignment.n_rows() {
        let p = alignment.row(r);
        let complete = (0..p.len())
            .filter(|&i| p.symbols()[i].class == SymbolClass::Contents)
            .all(|i| alignment.is_matched(alignment.column_of(r, i)));
        if complete {
            d.bump(p.id());
        }
    }
    if alignment.n_rows() == 1 {
        let body: Vec<String> = alignment.new_pattern().names().map(str::to_string).collect();
        d.product(&body);
        return d.out;
    }
    let runs = cut_runs(alignment);
    if runs.iter().all(|r| r.kind == Kind::Matched) {
        return d.out;
    }

    let refs: Vec<Vec<String>> = runs.iter().map(|r| d.product(&r.names)).collect();
    if runs.len() <= max_fragments {
        for skip in [Kind::OldGap, Kind::NewGap] {
            let body: Vec<String> = runs
                .iter()
                .zip(&refs)
                .filter(|(r, _)| r.kind != skip)
                .flat_map(|(_, refs)| refs.iter().cloned())
                .collect();
            let pieces = runs.iter().filter(|r| r.kind != skip).count();
            if pieces >= 2 && !(skip == Kind::NewGap && !runs.iter().any(|r| r.kind == Kind::OldGap)) {
                d.product(&body);
            }
        }
    }
    d.out
}

/// Canonical key of a grammar: its pattern ids in store order.
pub fn grammar_key(grammar: &Store) -> String {
    let ids: Vec<&str> = grammar.patterns().iter().map(Pattern::id).collect();
    ids.join(",")
}

/// Per-item encoding state under one grammar: the ranked alignments the search
/// returned, the patterns each one uses, and E for the best of them.
struct ItemCode {
    ranked: Vec<Alignment>,
    used: Vec<BTreeSet<String>>,
    bits: f64,
}

/// E for one item: the code of its best alignment plus the raw cost of whatever that
/// alignment leaves unmatched.
fn item_bits(a: &Alignment, costs: &CostTable) -> f64 {
    compression_difference(a, costs).b_code + unmatched_new_bits(a, costs)
}

fn encode_item(new: &Pattern, grammar: &Store, costs: &CostTable, params: &SearchParams) -> ItemCode {
    let ranked: Vec<Alignment> = build_alignments_with(new, grammar, costs, params)
        .into_iter()
        .map(|s| s.alignment)
        .collect();
    let bits = item_bits(&ranked[0], costs);
    let used = ranked
        .iter()
        .map(|a| a.old_pattern_ids().into_iter().map(str::to_string).collect())
        .collect();
    ItemCode { ranked, used, bits }
}

/// Everything needed to score a grammar over the corpus.
struct Scored {
    grammar: Store,
    items: Vec<ItemCode>,
    score: GrammarScore,
}

fn score_grammar(grammar: Store, corpus: &Corpus, params: &SearchParams) -> Scored {
    if grammar.is_empty() {
        return Scored {
            score: GrammarScore::new(0.0, 0.0),
            grammar,
            items: Vec::new(),
        };
    }
    let costs = build_cost_table(&grammar, params.epsilon).expect("grammar is not empty");
    let items: Vec<ItemCode> = corpus
        .news
        .par_iter()
        .map(|n| encode_item(n, &grammar, &costs, params))
        .collect();
    let g = grammar_cost(grammar.patterns(), &costs);
    let e = items.iter().map(|i| i.bits).sum();
    Scored {
        score: GrammarScore::new(g, e),
        grammar,
        items,
    }
}

fn without(grammar: &Store, id: &str) -> Store {
    grammar.subset(grammar.patterns().iter().map(Pattern::id).filter(|&p| p != id))
}

/// Estimated total after removing `id`, without searching again: each item falls
/// back on the best of its cached alignments that avoids the pattern, rescored under
/// the smaller grammar's costs, or on no alignment at all.
fn removal_estimate(current: &Scored, id: &str, corpus: &Corpus, params: &SearchParams) -> Option<f64> {
    let grammar = without(&current.grammar, id);
    let costs = build_cost_table(&grammar, params.epsilon).ok()?;
    let g = grammar_cost(grammar.patterns(), &costs);
    let bits: Vec<f64> = current
        .items
        .par_iter()
        .zip(&corpus.news)
        .map(|(item, new)| {
            let mut best: Option<(f64, &Alignment)> = None;
            for (a, used) in item.ranked.iter().zip(&item.used) {
                if used.contains(id) {
                    continue;
                }
                let cd = compression_difference(a, &costs).cd;
                if best.is_none_or(|(top, _)| cd > top + 1e-9) {
                    best = Some((cd, a));
                }
            }
            match best {
                Some((_, a)) => item_bits(a, &costs),
                None => encode_item(new, &grammar, &costs, params).bits,
            }
        })
        .collect();
    Some(g + bits.iter().sum::<f64>())
}

/// Removals tried exactly per step, best estimates first.
const REMOVAL_TRIES: usize = 3;

/// Parameters for [`sift_grammars`].
#[derive(Debug, Clone, PartialEq)]
pub struct SiftParams {
    pub search: SearchParams,
    pub keep: usize,
    pub max_removals: usize,
}

/// Greedy search for grammars that encode `corpus` economically.
///
/// Starts from the patterns used by each item's best alignment under `store`, then
/// repeatedly drops the pattern whose removal lowers G + E the most, until no removal
/// helps. Returns the best `keep` grammars met on the way, by total then key.
pub fn sift_grammars(store: &Store, corpus: &Corpus, params: &SiftParams) -> Vec<(Store, GrammarScore)> {
    if corpus.is_empty() || store.is_empty() {
        return Vec::new();
    }
    let full = score_grammar(store.clone(), corpus, &params.search);
    let used: BTreeSet<&str> = full
        .items
        .iter()
        .flat_map(|i| i.used[0].iter().map(String::as_str))
        .collect();
    let mut current = score_grammar(store.subset(used), corpus, &params.search);

    let mut met: Vec<(Store, GrammarScore)> = vec![(current.grammar.clone(), current.score)];
    // Estimated change in total per removal. Entries survive accepted removals and
    // are refreshed only when they lead the queue (lazy greedy).
    let mut gain: HashMap<String, f64> = HashMap::new();
    let mut removals = 0;
    while removals < params.max_removals && current.grammar.len() > 1 {
        let ids: Vec<String> = current.grammar.patterns().iter().map(|p| p.id().to_string()).collect();
        let mut fresh: BTreeSet<String> = BTreeSet::new();
        let refresh = |targets: Vec<&String>, current: &Scored, gain: &mut HashMap<String, f64>, fresh: &mut BTreeSet<String>| {
            let values: Vec<Option<f64>> = targets
                .iter()
                .map(|id| removal_estimate(current, id, corpus, &params.search))
                .collect();
            for (id, v) in targets.into_iter().zip(values) {
                gain.insert(id.clone(), v.map_or(f64::INFINITY, |t| t - current.score.total));
                fresh.insert(id.clone());
            }
        };
        let missing: Vec<&String> = ids.iter().filter(|id| !gain.contains_key(*id)).collect();
        refresh(missing, &current, &mut gain, &mut fresh);

        let mut rejected: BTreeSet<&str> = BTreeSet::new();
        let mut accepted = None;
        loop {
            let lead = ids
                .iter()
                .enumerate()
                .filter(|(_, id)| !rejected.contains(id.as_str()))
                .min_by(|a, b| gain[a.1].total_cmp(&gain[b.1]).then(a.0.cmp(&b.0)))
                .map(|(_, id)| id);
            let Some(id) = lead else { break };
            if gain[id] >= 0.0 {
                let stale: Vec<&String> = ids.iter().filter(|id| !fresh.contains(*id)).collect();
                if stale.is_empty() {
                    break;
                }
                refresh(stale, &current, &mut gain, &mut fresh);
                continue;
            }
            if !fresh.contains(id) {
                refresh(vec![id], &current, &mut gain, &mut fresh);
                continue;
            }
            let next = score_grammar(without(&current.grammar, id), corpus, &params.search);
            if next.score.total < current.score.total {
                accepted = Some((id.clone(), next));
                break;
            }
            rejected.insert(id);
            if rejected.len() >= REMOVAL_TRIES {
                break;
            }
        }
        let Some((id, next)) = accepted else { break };
        gain.remove(&id);
        met.push((next.grammar.clone(), next.score));
        current = next;
        removals += 1;
    }
    met.sort_by(|a, b| {
        a.1.total
            .total_cmp(&b.1.total)
            .then_with(|| grammar_key(&a.0).cmp(&grammar_key(&b.0)))
    });
    met.truncate(params.keep.max(1));
    met
}

/// Outcome of a learning pass.
#[derive(Debug, Clone)]
pub struct Learned {
    /// The working store: every pattern loaded or derived, none forgotten.
    pub store: Store,
    /// The best grammars, best first.
    pub grammars: Vec<(Store, GrammarScore)>,
}

/// Learns from `corpus` in order, starting from `initial`.
pub fn learn(corpus: &Corpus, initial: &Store, params: &LearnParams) -> Learned {
    let mut store = initial.clone();
    let sift = SiftParams {
        search: params.search.clone(),
        keep: params.keep,
        max_removals: params.max_removals,
    };
    if corpus.is_empty() {
        return Learned {
            store,
            grammars: Vec::new(),
        };
    }
    for new in &corpus.news {
        let alignments: Vec<Alignment> = match build_cost_table(&store, params.search.epsilon) {
            Ok(costs) => build_alignments_with(new, &store, &costs, &params.search)
                .into_iter()
                .take(params.derive_from.max(1))
                .map(|s| s.alignment)
                .collect(),
            Err(_) => vec![Alignment::bare(new)],
        };
        for a in &alignments {
            derive_patterns(a, &mut store, params.max_fragments).apply(&mut store);
        }
    }
    let grammars = sift_grammars(&store, corpus, &sift);
    Learned { store, grammars }
}

/// Grammar ranking as `rank<TAB>G<TAB>E<TAB>total<TAB>pattern-ids`, ranks from 1.
pub fn grammars_tsv(grammars: &[(Store, GrammarScore)]) -> String {
    let mut out = String::new();
    for (rank, (g, s)) in grammars.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{}",
            rank + 1,
            s.g,
            s.e,
            s.total,
            grammar_key(g)
        );
    }
    out
}

/// The grammar that stores every distinct corpus item whole, with its frequency.
pub fn null_grammar(corpus: &Corpus) -> Store {
    let mut counts: BTreeMap<Vec<&str>, u64> = BTreeMap::new();
    let mut order: Vec<Vec<&str>> = Vec::new();
    for n in &corpus.news {
        let names: Vec<&str> = n.names().collect();
        let c = counts.entry(names.clone()).or_insert(0);
        if *c == 0 {
            order.push(names);
        }
        *c += 1;
    }
    let mut store = Store::new();
    for names in order {
        let label = store.fresh_label();
        let mut body: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        body.push(format!("#{label}"));
        let p = Pattern::old(label.clone(), std::slice::from_ref(&label), &body, counts[&names]).expect("valid pattern");
        store.insert(p).expect("fresh label");
    }
    store
}
