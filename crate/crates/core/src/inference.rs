//! What an alignment says beyond its score: probabilities, inferred fragments,
//! corrected inputs, and transmission codes.

use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::aligner::{build_alignments, Alignment, Cell, ScoredAlignment, SearchParams};
use crate::error::{Result, SpError};
use crate::knowledge::{Pattern, Store, SymbolClass};
use crate::scoring::{build_cost_table, encoding_of, CodeSequence};

pub const DEFAULT_SURFACE: &str = "[a-z0-9]";

/// Decides which symbol names are surface data (emitted by correction and decoding)
/// rather than grammatical markers. The expression must match the whole name.
#[derive(Debug, Clone)]
pub struct Surface {
    source: String,
    regex: Regex,
}

impl Surface {
    pub fn new(expr: &str) -> Result<Self> {
        let regex = Regex::new(&format!("^(?:{expr})$"))
            .map_err(|e| SpError::format(0, format!("surface expression: {e}")))?;
        Ok(Surface {
            source: expr.to_string(),
            regex,
        })
    }

    pub fn matches(&self, name: &str) -> bool {
        self.regex.is_match(name)
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }
}

impl Default for Surface {
    fn default() -> Self {
        Surface::new(DEFAULT_SURFACE).expect("default surface expression is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEntry {
    pub key: String,
    pub absolute: f64,
    pub relative: f64,
    /// Index into [`ProbabilityReport::groups`].
    pub group: usize,
}

/// Probabilities for a ranked list of alignments of one New pattern. Alignments
/// compete only with others that match exactly the same New symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityReport {
    /// One entry per input alignment, in input order.
    pub entries: Vec<ProbabilityEntry>,
    /// The matched New indices shared by each group, groups numbered by first appearance.
    pub groups: Vec<Vec<usize>>,
}

pub fn probabilities(alignments: &[ScoredAlignment]) -> Result<ProbabilityReport> {
    let Some(first) = alignments.first() else {
        return Err(SpError::EmptyInput("alignments"));
    };
    let new = first.alignment.new_pattern();
    if alignments.iter().any(|s| s.alignment.new_pattern() != new) {
        return Err(SpError::Incompatible("alignments of different New patterns".into()));
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let membership: Vec<usize> = alignments
        .iter()
        .map(|s| {
            let matched = s.alignment.matched_new_indices();
            *group_of.entry(matched.clone()).or_insert_with(|| {
                groups.push(matched);
                groups.len() - 1
            })
        })
        .collect();

    // Normalize against the cheapest code in each group so nothing underflows.
    let mut least = vec![f64::INFINITY; groups.len()];
    for (s, &g) in alignments.iter().zip(&membership) {
        least[g] = least[g].min(s.score.b_code);
    }
    let mut sums = vec![0.0; groups.len()];
    for (s, &g) in alignments.iter().zip(&membership) {
        sums[g] += (least[g] - s.score.b_code).exp2();
    }
    let entries = alignments
        .iter()
        .zip(&membership)
        .map(|(s, &g)| ProbabilityEntry {
            key: s.key().to_string(),
            absolute: (-s.score.b_code).exp2(),
            relative: (least[g] - s.score.b_code).exp2() / sums[g],
            group: g,
        })
        .collect();
    Ok(ProbabilityReport { entries, groups })
}

/// A maximal run of unmatched Old symbols in one row: material the alignment supplies
/// that the New pattern did not contain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferredFragment {
    pub row: usize,
    pub pattern: String,
    pub cells: Vec<Cell>,
    pub names: Vec<String>,
    /// Nearest matched column of the same row on each side.
    pub left: Option<usize>,
    pub right: Option<usize>,
}

impl fmt::Display for InferredFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {} ({}): {}", self.row, self.pattern, self.names.join(" "))
    }
}

pub fn inferred_fragments(alignment: &Alignment) -> Vec<InferredFragment> {
    let mut out = Vec::new();
    for r in 1..alignment.n_rows() {
        let pattern = alignment.row(r);
        let columns: Vec<usize> = (0..pattern.len()).map(|i| alignment.column_of(r, i)).collect();
        let mut i = 0;
        while i < pattern.len() {
            if alignment.is_matched(columns[i]) {
                i += 1;
                continue;
            }
            let start = i;
            while i < pattern.len() && !alignment.is_matched(columns[i]) {
                i += 1;
            }
            out.push(InferredFragment {
                row: r,
                pattern: pattern.id().to_string(),
                cells: (start..i).map(|index| Cell { row: r, index }).collect(),
                names: (start..i).map(|k| pattern.name(k).to_string()).collect(),
                left: start.checked_sub(1).map(|k| columns[k]),
                right: columns.get(i).copied(),
            });
        }
    }
    out
}

/// Reads the alignment back out as a symbol sequence, filling in what the Old
/// patterns imply and dropping what they do not explain.
///
/// Walking columns left to right: a matched column holding a New symbol is emitted
/// when the New symbol stands for data, i.e. some Old cell in the column is a
/// contents symbol; an unmatched Old contents symbol is emitted when it is surface.
/// Unmatched New symbols and identification symbols are dropped. An alignment with
/// no Old rows yields its New symbols filtered by `surface`.
pub fn correct(alignment: &Alignment, surface: &Surface) -> Vec<String> {
    if alignment.n_rows() == 1 {
        return alignment
            .new_pattern()
            .names()
            .filter(|n| surface.matches(n))
            .map(str::to_string)
            .collect();
    }
    let mut out = Vec::new();
    for (c, cells) in alignment.columns().iter().enumerate() {
        let name = alignment.column_name(c);
        let class_of = |cell: &Cell| alignment.row(cell.row).symbols()[cell.index].class;
        if cells.len() >= 2 {
            let has_new = cells.iter().any(|cell| cell.row == 0);
            let has_contents = cells
                .iter()
                .any(|cell| cell.row != 0 && class_of(cell) == SymbolClass::Contents);
            if has_new && has_contents {
                out.push(name.to_string());
            }
        } else if cells[0].row != 0 && class_of(&cells[0]) == SymbolClass::Contents && surface.matches(name) {
            out.push(name.to_string());
        }
    }
    out
}

/// The best alignment found for a New pattern together with its code.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub best: ScoredAlignment,
    pub code: CodeSequence,
    pub store_version: u64,
}

impl Encoding {
    pub fn code_file(&self) -> CodeFile {
        CodeFile {
            store_version: self.store_version,
            symbols: self.code.names().into_iter().map(str::to_string).collect(),
        }
    }
}

/// Encodes `new` as the unmatched identification symbols of its best alignment.
/// Fails with [`SpError::NoCompression`] when no alignment compresses it.
pub fn encode(new: &Pattern, store: &Store, params: &SearchParams) -> Result<Encoding> {
    let costs = build_cost_table(store, params.epsilon)?;
    let ranked = crate::aligner::build_alignments_with(new, store, &costs, params);
    let best = ranked.into_iter().next().expect("search returns at least the bare alignment");
    if best.score.cd <= 0.0 {
        return Err(SpError::NoCompression);
    }
    let code = encoding_of(&best.alignment, &costs);
    Ok(Encoding {
        best,
        code,
        store_version: store.version(),
    })
}

/// Rebuilds the data a code stands for: the code is aligned against the store as if it
/// were a New pattern, and the best alignment that accounts for every code symbol is
/// projected through [`correct`].
pub fn decode<S: AsRef<str>>(
    code: &[S],
    store: &Store,
    params: &SearchParams,
    surface: &Surface,
) -> Result<Vec<String>> {
    if store.is_empty() {
        return Err(SpError::EmptyStore);
    }
    let pattern = Pattern::new_pattern("code", code)?;
    if pattern.is_empty() {
        return Err(SpError::EmptyInput("code"));
    }
    let ranked = build_alignments(&pattern, store, params);
    // A code is only read through an alignment that accounts for every code symbol.
    let best = ranked
        .iter()
        .map(|s| &s.alignment)
        .find(|a| a.matched_new_indices().len() == pattern.len())
        .ok_or_else(|| {
            let matched = ranked[0].alignment.matched_new_indices().len();
            SpError::Undecodable(format!(
                "only {matched} of {} code symbols align with the store",
                pattern.len()
            ))
        })?;
    Ok(correct(best, surface))
}

/// On-disk form of a code: a `STORE-VERSION <n>` line and a `CODE <sym>...` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeFile {
    pub store_version: u64,
    pub symbols: Vec<String>,
}

impl CodeFile {
    pub fn to_text(&self) -> String {
        let mut out = format!("STORE-VERSION {}\nCODE", self.store_version);
        for s in &self.symbols {
            out.push(' ');
            out.push_str(s);
        }
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut symbols = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with("# ") || line == "#" {
                continue;
            }
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some("STORE-VERSION") => {
                    let v = tokens
                        .next()
                        .and_then(|t| t.parse::<u64>().ok())
                        .ok_or_else(|| SpError::format(line_no, "STORE-VERSION needs a number"))?;
                    if tokens.next().is_some() || version.replace(v).is_some() {
                        return Err(SpError::format(line_no, "malformed STORE-VERSION line"));
                    }
                }
                Some("CODE") => {
                    if symbols.replace(tokens.map(str::to_string).collect::<Vec<_>>()).is_some() {
                        return Err(SpError::format(line_no, "more than one CODE line"));
                    }
                }
                Some(other) => {
                    return Err(SpError::format(line_no, format!("unexpected `{other}`")));
                }
                None => {}
            }
        }
        Ok(CodeFile {
            store_version: version.ok_or_else(|| SpError::format(0, "missing STORE-VERSION line"))?,
            symbols: symbols.ok_or_else(|| SpError::format(0, "missing CODE line"))?,
        })
    }
}
