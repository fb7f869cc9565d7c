//! Symbols, patterns, stores and corpora, plus the line-oriented pattern file format.
//!
//! ```text
//! # comment
//! OLD <freq> [id=<token>] <id-sym>... : <sym>...
//! NEW <sym>...
//! ```
//!
//! Symbols left of the bare `:` are identification symbols. A body symbol `#X` is a
//! boundary-close symbol when `X` is an identification symbol earlier in the same
//! pattern; boundary-close symbols also belong to the pattern's ID set.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpError};

pub const STORE_HEADER: &str = "# SP pattern store";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolClass {
    Identification,
    Contents,
    BoundaryClose,
}

impl SymbolClass {
    /// Identification and boundary-close symbols together form a pattern's ID set.
    pub fn is_id(self) -> bool {
        !matches!(self, SymbolClass::Contents)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: String,
    pub class: SymbolClass,
}

impl Symbol {
    pub fn contents(name: impl Into<String>) -> Self {
        Symbol {
            name: name.into(),
            class: SymbolClass::Contents,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Loaded,
    Learned,
}

/// An ordered sequence of classified symbols with a frequency.
///
/// Equality ignores provenance.
#[derive(Debug, Clone)]
pub struct Pattern {
    id: String,
    symbols: Vec<Symbol>,
    /// Number of leading symbols declared left of the `:` separator.
    id_block: usize,
    frequency: u64,
    provenance: Provenance,
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.symbols == other.symbols
            && self.id_block == other.id_block
            && self.frequency == other.frequency
    }
}

impl Eq for Pattern {}

impl Pattern {
    /// Builds an Old pattern from its declared ID block and body, classifying every symbol.
    pub fn old<S: AsRef<str>>(
        id: impl Into<String>,
        id_block: &[S],
        body: &[S],
        frequency: u64,
    ) -> Result<Self> {
        let id = id.into();
        check_token(&id, 0)?;
        if frequency < 1 {
            return Err(SpError::format(0, format!("pattern {id}: frequency must be >= 1")));
        }
        if id_block.is_empty() && body.is_empty() {
            return Err(SpError::format(0, format!("pattern {id} is empty")));
        }
        let mut symbols: Vec<Symbol> = Vec::with_capacity(id_block.len() + body.len());
        for (pos, raw) in id_block.iter().chain(body.iter()).enumerate() {
            let name = raw.as_ref();
            check_token(name, 0)?;
            let declared = pos < id_block.len();
            let class = classify(name, declared, &symbols)
                .map_err(|m| SpError::format(0, format!("pattern {id}: {m}")))?;
            symbols.push(Symbol {
                name: name.to_string(),
                class,
            });
        }
        Ok(Pattern {
            id,
            symbols,
            id_block: id_block.len(),
            frequency,
            provenance: Provenance::Loaded,
        })
    }

    /// Builds a New pattern: frequency 1, every symbol contents-class.
    pub fn new_pattern<S: AsRef<str>>(id: impl Into<String>, names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return Err(SpError::EmptyInput("New pattern"));
        }
        let mut symbols = Vec::with_capacity(names.len());
        for n in names {
            check_token(n.as_ref(), 0)?;
            symbols.push(Symbol::contents(n.as_ref()));
        }
        Ok(Pattern {
            id: id.into(),
            symbols,
            id_block: 0,
            frequency: 1,
            provenance: Provenance::Loaded,
        })
    }

    /// Parses whitespace-separated names as a New pattern with id `new`.
    pub fn parse_new(text: &str) -> Result<Self> {
        let names: Vec<&str> = text.split_whitespace().collect();
        Pattern::new_pattern("new", &names)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.symbols[index].name
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(|s| s.name.as_str())
    }

    pub fn id_block(&self) -> usize {
        self.id_block
    }

    pub fn frequency(&self) -> u64 {
        self.frequency
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub(crate) fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Names of the identification-class symbols, in pattern order.
    pub fn id_names(&self) -> Vec<&str> {
        self.symbols
            .iter()
            .filter(|s| s.class.is_id())
            .map(|s| s.name.as_str())
            .collect()
    }

    /// Names of the contents-class symbols, in pattern order.
    pub fn contents_names(&self) -> Vec<&str> {
        self.symbols
            .iter()
            .filter(|s| s.class == SymbolClass::Contents)
            .map(|s| s.name.as_str())
            .collect()
    }

    fn to_line(&self) -> String {
        let mut line = format!("OLD {} id={}", self.frequency, self.id);
        for s in &self.symbols[..self.id_block] {
            line.push(' ');
            line.push_str(&s.name);
        }
        line.push_str(" :");
        for s in &self.symbols[self.id_block..] {
            line.push(' ');
            line.push_str(&s.name);
        }
        line
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if i == self.id_block && self.id_block > 0 {
                f.write_str(": ")?;
            }
            f.write_str(&s.name)?;
        }
        Ok(())
    }
}

fn check_token(name: &str, line: usize) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) || name == ":" {
        return Err(SpError::format(line, format!("invalid symbol {name:?}")));
    }
    Ok(())
}

fn classify(
    name: &str,
    declared: bool,
    earlier: &[Symbol],
) -> std::result::Result<SymbolClass, String> {
    if let Some(rest) = name.strip_prefix('#') {
        if !rest.is_empty() {
            let opens_id = earlier
                .iter()
                .any(|s| s.class == SymbolClass::Identification && s.name == rest);
            if opens_id {
                return Ok(SymbolClass::BoundaryClose);
            }
            if !earlier.iter().any(|s| s.name == rest) {
                return Err(format!("`{name}` closes `{rest}`, which does not occur earlier"));
            }
        }
    }
    Ok(if declared {
        SymbolClass::Identification
    } else {
        SymbolClass::Contents
    })
}

/// Compares ids so that numeric runs sort by value: `P2 < P10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut ai, mut bi) = (a.char_indices().peekable(), b.char_indices().peekable());
    loop {
        match (ai.peek().copied(), bi.peek().copied()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((sa, ca)), Some((sb, cb))) => {
                if ca.is_ascii_digit() && cb.is_ascii_digit() {
                    let ea = digit_run_end(a, sa);
                    let eb = digit_run_end(b, sb);
                    let (da, db) = (a[sa..ea].trim_start_matches('0'), b[sb..eb].trim_start_matches('0'));
                    let ord = da.len().cmp(&db.len()).then_with(|| da.cmp(db));
                    if ord != Ordering::Equal {
                        return ord;
                    }
                    while ai.peek().is_some_and(|&(i, _)| i < ea) {
                        ai.next();
                    }
                    while bi.peek().is_some_and(|&(i, _)| i < eb) {
                        bi.next();
                    }
                } else {
                    let ord = ca.cmp(&cb);
                    if ord != Ordering::Equal {
                        return ord;
                    }
                    ai.next();
                    bi.next();
                }
            }
        }
    }
}

fn digit_run_end(s: &str, start: usize) -> usize {
    s[start..]
        .find(|c: char| !c.is_ascii_digit())
        .map_or(s.len(), |off| start + off)
}

/// The collection of Old patterns, kept sorted by id.
#[derive(Debug, Clone, Default)]
pub struct Store {
    patterns: Vec<Pattern>,
    version: u64,
    label_counter: u64,
}

impl PartialEq for Store {
    fn eq(&self, other: &Self) -> bool {
        self.patterns.len() == other.patterns.len()
            && self.patterns == other.patterns
    }
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_patterns(patterns: impl IntoIterator<Item = Pattern>) -> Result<Self> {
        let mut store = Store::new();
        for p in patterns {
            store.insert(p)?;
        }
        store.version = 0;
        Ok(store)
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    fn position(&self, id: &str) -> std::result::Result<usize, usize> {
        self.patterns
            .binary_search_by(|p| natural_cmp(&p.id, id))
    }

    pub fn get(&self, id: &str) -> Option<&Pattern> {
        self.position(id).ok().map(|i| &self.patterns[i])
    }

    pub fn insert(&mut self, pattern: Pattern) -> Result<()> {
        match self.position(&pattern.id) {
            Ok(_) => Err(SpError::format(0, format!("duplicate id {}", pattern.id))),
            Err(at) => {
                self.patterns.insert(at, pattern);
                self.version += 1;
                Ok(())
            }
        }
    }

    /// Adds `by` to a pattern's frequency. Returns false when the id is unknown.
    pub fn increment(&mut self, id: &str, by: u64) -> bool {
        match self.position(id) {
            Ok(i) => {
                self.patterns[i].frequency += by;
                self.version += 1;
                true
            }
            Err(_) => false,
        }
    }

    /// All symbol names and pattern ids in use.
    pub fn names_in_use(&self) -> BTreeSet<&str> {
        let mut used = BTreeSet::new();
        for p in &self.patterns {
            used.insert(p.id.as_str());
            used.extend(p.names());
        }
        used
    }

    /// Next `L<k>` label such that neither `L<k>` nor `#L<k>` is in use.
    pub fn fresh_label(&mut self) -> String {
        let used: BTreeSet<String> = self.names_in_use().into_iter().map(str::to_string).collect();
        loop {
            self.label_counter += 1;
            let label = format!("L{}", self.label_counter);
            let close = format!("#{label}");
            if !used.contains(label.as_str()) && !used.contains(close.as_str()) {
                return label;
            }
        }
    }

    /// A store holding only the listed patterns (unknown ids are ignored).
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Store {
        let keep: BTreeSet<&str> = ids.into_iter().collect();
        Store {
            patterns: self
                .patterns
                .iter()
                .filter(|p| keep.contains(p.id.as_str()))
                .cloned()
                .collect(),
            version: self.version,
            label_counter: self.label_counter,
        }
    }

    /// Copy with every frequency multiplied by `k`.
    pub fn with_scaled_frequencies(&self, k: u64) -> Store {
        let mut out = self.clone();
        for p in &mut out.patterns {
            p.frequency *= k;
        }
        out
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from(STORE_HEADER);
        out.push('\n');
        for p in &self.patterns {
            out.push_str(&p.to_line());
            out.push('\n');
        }
        out
    }
}

impl FromStr for Store {
    type Err = SpError;

    fn from_str(s: &str) -> Result<Self> {
        parse_store(s)
    }
}

/// Input items in the order they were received.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub news: Vec<Pattern>,
}

impl Corpus {
    pub fn from_lines<S: AsRef<str>>(lines: &[S]) -> Result<Self> {
        let mut news = Vec::with_capacity(lines.len());
        for (i, l) in lines.iter().enumerate() {
            let names: Vec<&str> = l.as_ref().split_whitespace().collect();
            news.push(Pattern::new_pattern(format!("N{}", i + 1), &names)?);
        }
        Ok(Corpus { news })
    }

    pub fn len(&self) -> usize {
        self.news.len()
    }

    pub fn is_empty(&self) -> bool {
        self.news.is_empty()
    }
}

fn is_comment(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t == "#" || (t.starts_with('#') && t[1..].starts_with(char::is_whitespace))
}

fn at_line(e: SpError, line: usize) -> SpError {
    match e {
        SpError::Format { message, .. } => SpError::Format { line, message },
        SpError::EmptyInput(what) => SpError::format(line, format!("empty {what}")),
        other => other,
    }
}

pub fn parse_store(text: &str) -> Result<Store> {
    let mut store = Store::new();
    let mut ordinal = 0usize;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        if is_comment(raw) {
            continue;
        }
        let mut tokens = raw.split_whitespace();
        match tokens.next() {
            Some("OLD") => {}
            Some(other) => {
                return Err(SpError::format(line_no, format!("expected OLD, found {other:?}")))
            }
            None => continue,
        }
        ordinal += 1;
        let freq_tok = tokens
            .next()
            .ok_or_else(|| SpError::format(line_no, "missing frequency"))?;
        let frequency: i64 = freq_tok
            .parse()
            .map_err(|_| SpError::format(line_no, format!("bad frequency {freq_tok:?}")))?;
        if frequency < 1 {
            return Err(SpError::format(line_no, "frequency must be >= 1"));
        }
        let mut rest: Vec<&str> = tokens.collect();
        let mut id = format!("P{ordinal}");
        if let Some(explicit) = rest.first().and_then(|t| t.strip_prefix("id=")) {
            id = explicit.to_string();
            rest.remove(0);
        }
        let sep = rest
            .iter()
            .position(|t| *t == ":")
            .ok_or_else(|| SpError::format(line_no, "missing `:` separator"))?;
        if rest[sep + 1..].contains(&":") {
            return Err(SpError::format(line_no, "more than one `:` separator"));
        }
        let pattern = Pattern::old(id, &rest[..sep], &rest[sep + 1..], frequency as u64)
            .map_err(|e| at_line(e, line_no))?;
        store.insert(pattern).map_err(|e| at_line(e, line_no))?;
    }
    store.version = 0;
    Ok(store)
}

pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut news = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        if is_comment(raw) {
            continue;
        }
        let mut tokens = raw.split_whitespace();
        match tokens.next() {
            Some("NEW") => {}
            Some(other) => {
                return Err(SpError::format(line_no, format!("expected NEW, found {other:?}")))
            }
            None => continue,
        }
        let names: Vec<&str> = tokens.collect();
        if names.is_empty() {
            return Err(SpError::format(line_no, "empty NEW line"));
        }
        let p = Pattern::new_pattern(format!("N{}", news.len() + 1), &names)
            .map_err(|e| at_line(e, line_no))?;
        news.push(p);
    }
    Ok(Corpus { news })
}

pub fn serialize_store(store: &Store) -> String {
    store.serialize()
}

pub fn serialize_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for p in &corpus.news {
        out.push_str("NEW");
        for n in p.names() {
            out.push(' ');
            out.push_str(n);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(p: &Pattern) -> Vec<SymbolClass> {
        p.symbols().iter().map(|s| s.class).collect()
    }

    #[test]
    fn kitten_line_splits_ids_from_contents() {
        let store = parse_store("OLD 100 Nr 5 : k i t t e n #Nr\n").unwrap();
        let p = store.get("P1").unwrap();
        assert_eq!(p.id_names(), vec!["Nr", "5", "#Nr"]);
        assert_eq!(p.contents_names(), vec!["k", "i", "t", "t", "e", "n"]);
        assert_eq!(p.frequency(), 100);
    }

    #[test]
    fn minimal_line() {
        let store = parse_store("OLD 1 A : a").unwrap();
        let p = store.get("P1").unwrap();
        assert_eq!(p.frequency(), 1);
        assert_eq!(p.contents_names(), vec!["a"]);
        assert_eq!(p.id_names(), vec!["A"]);
    }

    #[test]
    fn close_of_contents_symbol_stays_contents() {
        let store = parse_store("OLD 100 N Np : Nr #Nr s #N").unwrap();
        let p = store.get("P1").unwrap();
        use SymbolClass::*;
        assert_eq!(
            classes(p),
            vec![Identification, Identification, Contents, Contents, Contents, BoundaryClose]
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("# c\nOLD 1 A : a\nOLD 1 id=P1 B : b\n", 3),
            ("OLD 0 A : a\n", 1),
            ("\n\nOLD 1 A : #B\n", 3),
            ("OLD 1 :\n", 1),
            ("OLD 1 A a\n", 1),
            ("NEW a\n", 1),
        ];
        for (text, line) in cases {
            match parse_store(text) {
                Err(SpError::Format { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("expected format error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn explicit_ids_and_auto_ids() {
        let store = parse_store("OLD 2 id=noun N : a #N\nOLD 1 B : b\n").unwrap();
        assert!(store.get("noun").is_some());
        assert!(store.get("P2").is_some());
    }

    #[test]
    fn corpus_parsing() {
        let c = parse_corpus("NEW t w o k i t t e n s p l a y\n").unwrap();
        assert_eq!(c.news[0].len(), 14);
        assert!(c.news[0]
            .symbols()
            .iter()
            .all(|s| s.class == SymbolClass::Contents));
        let c = parse_corpus("NEW a\n").unwrap();
        assert_eq!(c.news[0].len(), 1);
        let c = parse_corpus("NEW a b\n# x\nNEW c\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.news[1].name(0), "c");
        assert!(matches!(
            parse_corpus("NEW a\nNEW\n"),
            Err(SpError::Format { line: 2, .. })
        ));
    }

    #[test]
    fn empty_store_serializes_to_header() {
        assert_eq!(Store::new().serialize(), format!("{STORE_HEADER}\n"));
    }

    #[test]
    fn serialization_orders_naturally_and_round_trips() {
        let text = "OLD 3 id=P10 X : a #X\nOLD 1 id=P2 Y : b #Y\nOLD 1 id=Q : z\n";
        let s = parse_store(text).unwrap();
        let out = s.serialize();
        let ids: Vec<&str> = out.lines().skip(1).map(|l| l.split(' ').nth(2).unwrap()).collect();
        assert_eq!(ids, vec!["id=P2", "id=P10", "id=Q"]);
        assert_eq!(parse_store(&out).unwrap(), s);
        assert_eq!(parse_store(&out).unwrap().serialize(), out);
    }

    #[test]
    fn natural_order() {
        assert_eq!(natural_cmp("P2", "P10"), Ordering::Less);
        assert_eq!(natural_cmp("L9", "L9"), Ordering::Equal);
        assert_eq!(natural_cmp("a", "b"), Ordering::Less);
        assert_eq!(natural_cmp("P02", "P2"), Ordering::Less);
    }

    #[test]
    fn fresh_labels_skip_used_names() {
        let mut s = parse_store("OLD 1 L1 : a #L1\nOLD 1 X : L2 #L2 b\n").unwrap();
        assert_eq!(s.fresh_label(), "L3");
        assert_eq!(s.fresh_label(), "L4");
    }

    #[test]
    fn comments_are_not_symbols() {
        let s = parse_store("# a comment\n#\tanother\nOLD 1 A : a\n").unwrap();
        assert_eq!(s.len(), 1);
    }
}
