//! Multiple alignments and the searches that build them.
//!
//! An [`Alignment`] binds one New pattern (row 0) to instances of Old patterns (rows
//! 1..). Every symbol of every row sits in exactly one column; a column with two or
//! more cells is matched. The rows induce a partial order on columns (each row's
//! symbols must appear left to right). The stored column list is one deterministic
//! linear extension of that order, but merging consults the partial order itself, so
//! symbols that no row relates can still be interleaved by later merges.
//!
//! Rows are kept in canonical order: row 0, then Old rows sorted by pattern id and
//! column positions. Two alignments with the same structure therefore have the same
//! rows, columns and key no matter in which order they were assembled.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpError};
use crate::knowledge::{natural_cmp, Pattern, Store};
use crate::matcher::{self, quantize, Candidate, HitSequence};
use crate::scoring::{build_cost_table, compression_difference, CompressionScore, CostTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct Alignment {
    rows: Vec<Arc<Pattern>>,
    columns: Vec<Vec<Cell>>,
    positions: Vec<Vec<usize>>,
    key: String,
}

impl PartialEq for Alignment {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.rows == other.rows
    }
}

/// One entry per column of an alignment, in column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrivingSymbol {
    pub name: String,
    pub column: usize,
}

/// Strict "must come before" relation between the columns of an alignment.
#[derive(Debug, Clone)]
pub struct ColumnOrder {
    words: usize,
    after: Vec<u64>,
}

impl ColumnOrder {
    /// True when column `b` is forced to come after column `a`.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.after[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    /// True when `b` can be placed after `a` in some linear extension.
    pub fn may_follow(&self, a: usize, b: usize) -> bool {
        a != b && !self.precedes(b, a)
    }
}

impl Alignment {
    /// The alignment holding only the New pattern.
    pub fn bare(new: &Pattern) -> Alignment {
        Alignment::bare_arc(Arc::new(new.clone()))
    }

    fn bare_arc(new: Arc<Pattern>) -> Alignment {
        let n = new.len();
        let labels = vec![(0..n).collect()];
        assemble(vec![new], labels, n).expect("a single row always assembles")
    }

    /// Builds an alignment from explicit rows and columns (cells may be in any order).
    pub fn from_columns(rows: Vec<Pattern>, columns: &[Vec<Cell>]) -> Result<Alignment> {
        if rows.is_empty() {
            return Err(SpError::EmptyInput("alignment rows"));
        }
        let mut labels: Vec<Vec<usize>> = rows.iter().map(|p| vec![usize::MAX; p.len()]).collect();
        for (c, cells) in columns.iter().enumerate() {
            if cells.is_empty() {
                return Err(SpError::Incompatible(format!("column {c} is empty")));
            }
            for cell in cells {
                let slot = labels
                    .get_mut(cell.row)
                    .and_then(|r| r.get_mut(cell.index))
                    .ok_or_else(|| SpError::Incompatible(format!("cell {cell:?} out of range")))?;
                if *slot != usize::MAX {
                    return Err(SpError::Incompatible(format!("cell {cell:?} appears twice")));
                }
                *slot = c;
            }
        }
        if labels.iter().flatten().any(|&l| l == usize::MAX) {
            return Err(SpError::Incompatible("some symbol has no column".into()));
        }
        assemble(rows.into_iter().map(Arc::new).collect(), labels, columns.len())
    }

    pub fn rows(&self) -> &[Arc<Pattern>] {
        &self.rows
    }

    pub fn row(&self, r: usize) -> &Pattern {
        &self.rows[r]
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn new_pattern(&self) -> &Pattern {
        &self.rows[0]
    }

    pub fn columns(&self) -> &[Vec<Cell>] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_of(&self, row: usize, index: usize) -> usize {
        self.positions[row][index]
    }

    pub fn is_matched(&self, column: usize) -> bool {
        self.columns[column].len() >= 2
    }

    pub fn column_name(&self, column: usize) -> &str {
        let c = self.columns[column][0];
        self.rows[c.row].name(c.index)
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    /// Ids of the Old patterns used, one per Old row.
    pub fn old_pattern_ids(&self) -> Vec<&str> {
        self.rows[1..].iter().map(|p| p.id()).collect()
    }

    /// Indices of the New symbols that sit in matched columns.
    pub fn matched_new_indices(&self) -> Vec<usize> {
        (0..self.rows[0].len())
            .filter(|&i| self.is_matched(self.positions[0][i]))
            .collect()
    }

    /// Flattens the alignment into a driving sequence, one symbol per column.
    pub fn to_driving(&self) -> Vec<DrivingSymbol> {
        (0..self.columns.len())
            .map(|c| DrivingSymbol {
                name: self.column_name(c).to_string(),
                column: c,
            })
            .collect()
    }

    pub fn order(&self) -> ColumnOrder {
        let n = self.columns.len();
        let words = n.div_ceil(64).max(1);
        let mut after = vec![0u64; n * words];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for pos in &self.positions {
            for w in pos.windows(2) {
                succ[w[0]].push(w[1]);
            }
        }
        for c in (0..n).rev() {
            for &s in &succ[c] {
                after[c * words + s / 64] |= 1 << (s % 64);
                for w in 0..words {
                    let v = after[s * words + w];
                    after[c * words + w] |= v;
                }
            }
        }
        ColumnOrder { words, after }
    }

    fn column_has(&self, column: usize, pattern_id: &str, index: usize) -> bool {
        self.columns[column]
            .iter()
            .any(|c| c.row != 0 && c.index == index && self.rows[c.row].id() == pattern_id)
    }

    /// Adds `pattern` as a new row; each pair `(column, target index)` fuses that target
    /// symbol into the existing column.
    pub fn merge(&self, pairs: &[(usize, usize)], pattern: &Pattern) -> Result<Alignment> {
        self.merge_arc(pairs, Arc::new(pattern.clone()))
    }

    pub fn merge_hits(&self, hits: &HitSequence, pattern: &Pattern) -> Result<Alignment> {
        self.merge(&hits.pairs, pattern)
    }

    pub(crate) fn merge_arc(&self, pairs: &[(usize, usize)], pattern: Arc<Pattern>) -> Result<Alignment> {
        if pairs.is_empty() {
            return Err(SpError::Incompatible("no hits".into()));
        }
        let n = self.columns.len();
        let mut fused = vec![usize::MAX; pattern.len()];
        let mut used = HashSet::new();
        let mut last_t: Option<usize> = None;
        for &(c, t) in pairs {
            if c >= n || t >= pattern.len() {
                return Err(SpError::Incompatible(format!("hit ({c},{t}) out of range")));
            }
            if last_t.is_some_and(|lt| t <= lt) {
                return Err(SpError::Incompatible("target indices must increase".into()));
            }
            last_t = Some(t);
            if !used.insert(c) {
                return Err(SpError::Incompatible(format!("column {c} hit twice")));
            }
            if self.column_name(c) != pattern.name(t) {
                return Err(SpError::Incompatible(format!("names differ at ({c},{t})")));
            }
            if self.column_has(c, pattern.id(), t) {
                return Err(SpError::Incompatible(format!(
                    "{}[{t}] would be matched with itself",
                    pattern.id()
                )));
            }
            fused[t] = c;
        }
        let mut labels: Vec<Vec<usize>> = self.positions.clone();
        let mut next = n;
        let row: Vec<usize> = fused
            .iter()
            .map(|&c| {
                if c == usize::MAX {
                    next += 1;
                    next - 1
                } else {
                    c
                }
            })
            .collect();
        labels.push(row);
        let mut rows = self.rows.clone();
        rows.push(pattern);
        assemble(rows, labels, next)
    }

    /// Checks every structural invariant; returns a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut seen: Vec<Vec<bool>> = self.rows.iter().map(|p| vec![false; p.len()]).collect();
        for (c, cells) in self.columns.iter().enumerate() {
            if cells.is_empty() {
                return Err(format!("column {c} is empty"));
            }
            let name = self.rows[cells[0].row].name(cells[0].index);
            let mut rows_here = HashSet::new();
            for cell in cells {
                if !rows_here.insert(cell.row) {
                    return Err(format!("column {c} holds row {} twice", cell.row));
                }
                if self.rows[cell.row].name(cell.index) != name {
                    return Err(format!("column {c} mixes names"));
                }
                if seen[cell.row][cell.index] {
                    return Err(format!("cell {cell:?} in two columns"));
                }
                seen[cell.row][cell.index] = true;
                if self.positions[cell.row][cell.index] != c {
                    return Err(format!("position table disagrees for {cell:?}"));
                }
            }
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err("some symbol is in no column".into());
        }
        for (r, pos) in self.positions.iter().enumerate() {
            if pos.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("row {r} is out of order"));
            }
        }
        // connectivity: flood from row 0 through matched columns
        let mut reached = vec![false; self.rows.len()];
        reached[0] = true;
        let mut stack = vec![0usize];
        while let Some(r) = stack.pop() {
            for &c in &self.positions[r] {
                for cell in &self.columns[c] {
                    if !reached[cell.row] {
                        reached[cell.row] = true;
                        stack.push(cell.row);
                    }
                }
            }
        }
        if let Some(r) = reached.iter().position(|x| !x) {
            return Err(format!("row {r} is not connected to row 0"));
        }
        Ok(())
    }
}

/// Orders columns, canonicalizes rows and computes the key.
fn assemble(rows: Vec<Arc<Pattern>>, labels: Vec<Vec<usize>>, n: usize) -> Result<Alignment> {
    let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); n];
    for (r, row) in labels.iter().enumerate() {
        for (i, &l) in row.iter().enumerate() {
            cells[l].push(Cell { row: r, index: i });
        }
    }
    for (l, cs) in cells.iter().enumerate() {
        if cs.is_empty() {
            return Err(SpError::Incompatible(format!("column {l} is empty")));
        }
        let name = rows[cs[0].row].name(cs[0].index);
        for (k, a) in cs.iter().enumerate() {
            if rows[a.row].name(a.index) != name {
                return Err(SpError::Incompatible(format!("column {l} mixes names")));
            }
            for b in &cs[k + 1..] {
                if a.row == b.row {
                    return Err(SpError::Incompatible(format!("column {l} holds a row twice")));
                }
                if a.row != 0 && b.row != 0 && a.index == b.index && rows[a.row].id() == rows[b.row].id() {
                    return Err(SpError::Incompatible(format!("column {l} matches a symbol with itself")));
                }
            }
        }
    }

    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for row in &labels {
        for w in row.windows(2) {
            succ[w[0]].push(w[1]);
            pred[w[1]].push(w[0]);
        }
    }

    // plain topological order, to propagate anchors
    let mut indeg: Vec<usize> = pred.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&l| indeg[l] == 0).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(l) = queue.pop_front() {
        topo.push(l);
        for &s in &succ[l] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                queue.push_back(s);
            }
        }
    }
    if topo.len() != n {
        return Err(SpError::Incompatible("no column order preserves every row".into()));
    }

    // Columns holding a New symbol anchor at 2*index; others sit just right of their
    // latest anchored ancestor, or just left of their earliest anchored descendant.
    let anchor: Vec<Option<i64>> = (0..n)
        .map(|l| cells[l].iter().find(|c| c.row == 0).map(|c| 2 * c.index as i64))
        .collect();
    let mut fwd: Vec<Option<i64>> = anchor.clone();
    for &l in &topo {
        for &p in &pred[l] {
            fwd[l] = fwd[l].max(fwd[p]);
        }
    }
    let mut bwd: Vec<Option<i64>> = anchor.clone();
    for &l in topo.iter().rev() {
        for &s in &succ[l] {
            bwd[l] = match (bwd[l], bwd[s]) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
    }
    let est: Vec<i64> = (0..n)
        .map(|l| {
            if let Some(a) = anchor[l] {
                return a;
            }
            let from_pred = pred[l].iter().filter_map(|&p| fwd[p]).max();
            if let Some(a) = from_pred {
                return a + 1;
            }
            let from_succ = succ[l].iter().filter_map(|&s| bwd[s]).min();
            from_succ.map_or(i64::MAX, |a| a - 1)
        })
        .collect();

    // rank of each row's pattern id; rows of the same pattern share a rank
    let mut by_id: Vec<usize> = (0..rows.len()).collect();
    by_id.sort_by(|&a, &b| natural_cmp(rows[a].id(), rows[b].id()));
    let mut id_rank = vec![0usize; rows.len()];
    for k in 1..by_id.len() {
        let same = rows[by_id[k]].id() == rows[by_id[k - 1]].id();
        id_rank[by_id[k]] = id_rank[by_id[k - 1]] + usize::from(!same);
    }

    // structural signature: the smallest (pattern id, index) Old cell of the column
    let sig: Vec<(usize, usize)> = (0..n)
        .map(|l| {
            cells[l]
                .iter()
                .filter(|c| c.row != 0)
                .map(|c| (id_rank[c.row], c.index))
                .min()
                .unwrap_or((0, 0))
        })
        .collect();

    let mut indeg: Vec<usize> = pred.iter().map(Vec::len).collect();
    // Ready columns keyed by (estimated position, signature, column).
    let mut heap: BinaryHeap<Reverse<(i64, (usize, usize), usize)>> = (0..n)
        .filter(|&l| indeg[l] == 0)
        .map(|l| Reverse((est[l], sig[l], l)))
        .collect();
    let mut position = vec![0usize; n];
    let mut ordinal = 0;
    while let Some(Reverse((_, _, l))) = heap.pop() {
        position[l] = ordinal;
        ordinal += 1;
        for &s in &succ[l] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                heap.push(Reverse((est[s], sig[s], s)));
            }
        }
    }

    // canonical row order
    let row_positions: Vec<Vec<usize>> = labels
        .iter()
        .map(|row| row.iter().map(|&l| position[l]).collect())
        .collect();
    let mut order: Vec<usize> = (1..rows.len()).collect();
    order.sort_by(|&a, &b| {
        id_rank[a]
            .cmp(&id_rank[b])
            .then_with(|| row_positions[a].cmp(&row_positions[b]))
            .then(a.cmp(&b))
    });
    order.insert(0, 0);
    let mut new_index = vec![0usize; rows.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }

    let mut columns: Vec<Vec<Cell>> = vec![Vec::new(); n];
    for (l, cs) in cells.iter().enumerate() {
        let col = &mut columns[position[l]];
        col.extend(cs.iter().map(|c| Cell {
            row: new_index[c.row],
            index: c.index,
        }));
        col.sort();
    }
    let positions: Vec<Vec<usize>> = order.iter().map(|&old| row_positions[old].clone()).collect();
    let rows: Vec<Arc<Pattern>> = order.iter().map(|&old| rows[old].clone()).collect();

    let total_cells: usize = positions.iter().map(Vec::len).sum();
    let mut key = String::with_capacity(16 * rows.len() + 8 * total_cells);
    for (r, p) in rows.iter().enumerate().skip(1) {
        if r > 1 {
            key.push(',');
        }
        key.push_str(p.id());
    }
    key.push('|');
    for (c, cs) in columns.iter().enumerate() {
        if c > 0 {
            key.push(' ');
        }
        for (k, cell) in cs.iter().enumerate() {
            if k > 0 {
                key.push('+');
            }
            push_number(&mut key, cell.row);
            key.push('.');
            push_number(&mut key, cell.index);
        }
    }

    Ok(Alignment {
        rows,
        columns,
        positions,
        key,
    })
}

fn push_number(out: &mut String, mut v: usize) {
    let mut digits = [0u8; 20];
    let mut k = digits.len();
    loop {
        k -= 1;
        digits[k] = b'0' + (v % 10) as u8;
        v /= 10;
        if v == 0 {
            break;
        }
    }
    out.push_str(std::str::from_utf8(&digits[k..]).expect("ascii digits"));
}

/// Proposals turned into alignments per batch.
const ASSEMBLY_CHUNK: usize = 64;

pub const DEFAULT_BEAM_WIDTH: usize = 200;
pub const DEFAULT_MAX_CYCLES: usize = 12;
pub const DEFAULT_MAX_ALIGNMENTS: usize = 20;
pub const DEFAULT_PATIENCE: usize = 2;

/// Heuristic search parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub beam_width: usize,
    pub max_cycles: usize,
    pub max_hits: usize,
    pub max_alignments: usize,
    /// Consecutive cycles without a strictly better alignment before the search stops.
    pub patience: usize,
    pub epsilon: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            beam_width: DEFAULT_BEAM_WIDTH,
            max_cycles: DEFAULT_MAX_CYCLES,
            max_hits: matcher::DEFAULT_MAX_HITS,
            max_alignments: DEFAULT_MAX_ALIGNMENTS,
            patience: DEFAULT_PATIENCE,
            epsilon: crate::scoring::DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredAlignment {
    pub alignment: Alignment,
    pub score: CompressionScore,
}

impl ScoredAlignment {
    pub fn new(alignment: Alignment, costs: &CostTable) -> Self {
        let score = compression_difference(&alignment, costs);
        ScoredAlignment { alignment, score }
    }

    pub fn key(&self) -> &str {
        self.alignment.key()
    }
}

/// CD descending, then canonical key ascending.
pub fn rank_order(a: &ScoredAlignment, b: &ScoredAlignment) -> Ordering {
    b.score
        .cd
        .total_cmp(&a.score.cd)
        .then_with(|| a.alignment.key.cmp(&b.alignment.key))
}

/// All alignments reachable from `alignment` by one merge with any store pattern,
/// using up to `max_hits` hit sequences per pattern.
pub fn children(
    alignment: &Alignment,
    patterns: &[Arc<Pattern>],
    costs: &CostTable,
    max_hits: usize,
) -> Vec<Alignment> {
    merges(alignment, patterns, costs, max_hits)
        .into_iter()
        .filter_map(|(p, hits)| alignment.merge_arc(&hits.pairs, patterns[p].clone()).ok())
        .collect()
}

/// Candidate merges `(pattern index, hits)` for every pattern, in pattern order.
fn merges(
    alignment: &Alignment,
    patterns: &[Arc<Pattern>],
    costs: &CostTable,
    max_hits: usize,
) -> Vec<(usize, HitSequence)> {
    let order = alignment.order();
    let mut by_name: HashMap<&str, Vec<usize>> = HashMap::new();
    for c in 0..alignment.n_columns() {
        by_name.entry(alignment.column_name(c)).or_default().push(c);
    }
    let mut out = Vec::new();
    for (p, pattern) in patterns.iter().enumerate() {
        for hits in hit_sequences_into(alignment, &order, &by_name, pattern, costs, max_hits) {
            out.push((p, hits));
        }
    }
    out
}

/// CD change caused by merging `pattern` through `pairs`, computed without building
/// the child: newly matched New symbols and newly matched code symbols stop costing,
/// and the new row's unmatched identification symbols join the code.
fn merge_gain(alignment: &Alignment, pairs: &[(usize, usize)], pattern: &Pattern, costs: &CostTable) -> f64 {
    let mut gain = 0.0;
    let mut hit = vec![false; pattern.len()];
    for &(c, t) in pairs {
        hit[t] = true;
        let column = &alignment.columns[c];
        if column.len() == 1 {
            let cell = column[0];
            let symbol = &alignment.rows[cell.row].symbols()[cell.index];
            if cell.row == 0 || symbol.class.is_id() {
                gain += costs.cost(&symbol.name);
            }
        }
    }
    for (t, symbol) in pattern.symbols().iter().enumerate() {
        if !hit[t] && symbol.class.is_id() {
            gain -= costs.cost(&symbol.name);
        }
    }
    gain
}

struct Proposal {
    parent: usize,
    pattern: usize,
    pairs: Vec<(usize, usize)>,
    cd: f64,
}

/// Slack when comparing predicted and computed scores, which sum in different orders.
const SCORE_SLACK: f64 = 1e-9;

fn hit_sequences_into(
    alignment: &Alignment,
    order: &ColumnOrder,
    by_name: &HashMap<&str, Vec<usize>>,
    pattern: &Pattern,
    costs: &CostTable,
    max_hits: usize,
) -> Vec<HitSequence> {
    let mut candidates = Vec::new();
    for (t, name) in pattern.names().enumerate() {
        if let Some(cols) = by_name.get(name) {
            let bits = costs.cost(name);
            for &c in cols {
                if !alignment.column_has(c, pattern.id(), t) {
                    candidates.push(Candidate {
                        driving: c,
                        target: t,
                        weight: quantize(bits),
                        bits,
                    });
                }
            }
        }
    }
    matcher::k_best(candidates, |a, b| order.may_follow(a, b), max_hits)
}

fn arc_patterns(store: &Store) -> Vec<Arc<Pattern>> {
    store.patterns().iter().cloned().map(Arc::new).collect()
}

/// Beam search for good alignments of `new` against `store`, best first.
pub fn build_alignments(new: &Pattern, store: &Store, params: &SearchParams) -> Vec<ScoredAlignment> {
    match build_cost_table(store, params.epsilon) {
        Ok(costs) => build_alignments_with(new, store, &costs, params),
        Err(_) => {
            let bare = Alignment::bare(new);
            vec![ScoredAlignment {
                alignment: bare,
                score: CompressionScore {
                    b_new: 0.0,
                    b_code: 0.0,
                    cd: 0.0,
                },
            }]
        }
    }
}

/// As [`build_alignments`], with a precomputed cost table for `store`.
pub fn build_alignments_with(
    new: &Pattern,
    store: &Store,
    costs: &CostTable,
    params: &SearchParams,
) -> Vec<ScoredAlignment> {
    let patterns = arc_patterns(store);
    let bare = ScoredAlignment::new(Alignment::bare(new), costs);
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(bare.key().to_string());
    let mut expanded: HashSet<String> = HashSet::new();
    let mut best = bare.score.cd;
    let mut frontier = vec![bare];
    let mut stale = 0usize;
    let beam = params.beam_width.max(1);

    for _cycle in 0..params.max_cycles.max(1) {
        let work: Vec<&ScoredAlignment> = frontier
            .iter()
            .filter(|s| !expanded.contains(s.key()))
            .collect();
        if work.is_empty() || patterns.is_empty() {
            break;
        }
        let patterns = &patterns;
        let mut proposals: Vec<Proposal> = work
            .par_iter()
            .enumerate()
            .flat_map_iter(|(w, s)| {
                merges(&s.alignment, patterns, costs, params.max_hits)
                    .into_iter()
                    .map(move |(p, hits)| Proposal {
                        parent: w,
                        pattern: p,
                        cd: s.score.cd + merge_gain(&s.alignment, &hits.pairs, &patterns[p], costs),
                        pairs: hits.pairs,
                    })
            })
            .collect();
        if proposals.is_empty() {
            break;
        }
        proposals.sort_by(|a, b| {
            b.cd.total_cmp(&a.cd)
                .then(a.parent.cmp(&b.parent))
                .then(a.pattern.cmp(&b.pattern))
                .then_with(|| a.pairs.cmp(&b.pairs))
        });

        // Build children best first; stop once `beam` kept alignments beat every
        // remaining proposal, since none of those could enter the beam.
        let mut fresh: Vec<ScoredAlignment> = Vec::new();
        let mut start = 0;
        while start < proposals.len() {
            let threshold = proposals[start].cd + SCORE_SLACK;
            let above = frontier.iter().chain(&fresh).filter(|s| s.score.cd > threshold).count();
            if above >= beam {
                break;
            }
            let end = (start + ASSEMBLY_CHUNK).min(proposals.len());
            let built: Vec<Option<Alignment>> = proposals[start..end]
                .par_iter()
                .map(|p| {
                    work[p.parent]
                        .alignment
                        .merge_arc(&p.pairs, patterns[p.pattern].clone())
                        .ok()
                })
                .collect();
            for k in built.into_iter().flatten() {
                if seen.insert(k.key.clone()) {
                    fresh.push(ScoredAlignment::new(k, costs));
                }
            }
            start = end;
        }
        for s in &work {
            expanded.insert(s.key().to_string());
        }
        let improved = fresh.iter().any(|k| k.score.cd > best);
        let mut pool = frontier;
        pool.extend(fresh);
        pool.sort_by(rank_order);
        pool.truncate(beam);
        frontier = pool;
        if improved {
            best = frontier[0].score.cd;
            stale = 0;
        } else {
            stale += 1;
            if stale >= params.patience.max(1) {
                break;
            }
        }
    }
    frontier.truncate(params.max_alignments.max(1));
    frontier
}

/// Bounds for [`build_exhaustive`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveLimits {
    /// Maximum total length of the store's patterns.
    pub max_symbols: usize,
    /// Maximum number of Old rows in one alignment.
    pub max_rows: usize,
    /// Maximum number of distinct alignments enumerated.
    pub max_states: usize,
    /// How many of the best alignments to return.
    pub keep: usize,
    pub epsilon: f64,
}

impl Default for ExhaustiveLimits {
    fn default() -> Self {
        ExhaustiveLimits {
            max_symbols: 40,
            max_rows: DEFAULT_MAX_CYCLES,
            max_states: 1_000_000,
            keep: DEFAULT_MAX_ALIGNMENTS,
            epsilon: crate::scoring::DEFAULT_EPSILON,
        }
    }
}

/// Result of an exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct Exhaustive {
    /// The best `keep` alignments, ranked.
    pub ranked: Vec<ScoredAlignment>,
    /// Number of distinct alignments visited, the bare one included.
    pub states: usize,
}

/// Finds the best alignments reachable by merges with every hit sequence of every
/// pattern. Two kinds of branches are skipped, both provably unable to beat what is
/// kept: subtrees whose CD bound falls below the current top `keep` (see
/// [`Walk::bound`]), and merges containing a neutral pair (see [`is_neutral`]). The
/// first ranked entry is therefore the global CD optimum of the merge space.
pub fn build_exhaustive(new: &Pattern, store: &Store, limits: &ExhaustiveLimits) -> Result<Exhaustive> {
    let total: usize = store.patterns().iter().map(Pattern::len).sum();
    if total > limits.max_symbols {
        return Err(SpError::LimitExceeded(format!(
            "store holds {total} symbols, limit is {}",
            limits.max_symbols
        )));
    }
    let bare = Alignment::bare(new);
    let costs = match build_cost_table(store, limits.epsilon) {
        Ok(c) => c,
        Err(_) => {
            let score = CompressionScore { b_new: 0.0, b_code: 0.0, cd: 0.0 };
            return Ok(Exhaustive {
                ranked: vec![ScoredAlignment { alignment: bare, score }],
                states: 1,
            });
        }
    };
    let patterns = arc_patterns(store);
    let mut sites: HashMap<&str, Vec<(&str, usize)>> = HashMap::new();
    for p in store.patterns() {
        for (i, name) in p.names().enumerate() {
            sites.entry(name).or_default().push((p.id(), i));
        }
    }
    let mut walk = Walk {
        patterns: &patterns,
        costs: &costs,
        limits,
        sites,
        seen: HashSet::new(),
        best: Vec::new(),
    };
    let bare = ScoredAlignment::new(bare, &costs);
    walk.seen.insert(bare.key().to_string());
    walk.offer(bare.clone());
    walk.visit(&bare)?;
    Ok(Exhaustive {
        states: walk.seen.len(),
        ranked: walk.best,
    })
}

/// Depth-first enumeration state: only keys are remembered, plus the current best.
struct Walk<'a> {
    patterns: &'a [Arc<Pattern>],
    costs: &'a CostTable,
    limits: &'a ExhaustiveLimits,
    /// Every (pattern id, index) holding each name.
    sites: HashMap<&'a str, Vec<(&'a str, usize)>>,
    seen: HashSet<String>,
    best: Vec<ScoredAlignment>,
}

impl Walk<'_> {
    fn offer(&mut self, s: ScoredAlignment) {
        let keep = self.limits.keep.max(1);
        if self.best.len() == keep && rank_order(&s, &self.best[keep - 1]) != Ordering::Less {
            return;
        }
        let at = self.best.partition_point(|b| rank_order(b, &s) == Ordering::Less);
        self.best.insert(at, s);
        self.best.truncate(keep);
    }

    /// Upper bound on the CD of any alignment built on top of `s`. A merge gains only
    /// by matching a single-cell New symbol or code symbol, and costs the new row's
    /// unmatched identification symbols, which later merges can at best win back.
    /// So the bound adds every unmatched cell that some store symbol could still match.
    fn bound(&self, s: &ScoredAlignment) -> f64 {
        let a = &s.alignment;
        let mut extra = 0.0;
        for cells in a.columns() {
            if cells.len() != 1 {
                continue;
            }
            let cell = cells[0];
            let row = a.row(cell.row);
            let symbol = &row.symbols()[cell.index];
            if cell.row != 0 && !symbol.class.is_id() {
                continue;
            }
            let matchable = self.sites.get(symbol.name.as_str()).is_some_and(|sites| {
                cell.row == 0 || sites.iter().any(|&(id, i)| id != row.id() || i != cell.index)
            });
            if matchable {
                extra += self.costs.cost(&symbol.name);
            }
        }
        s.score.cd + extra
    }

    fn hopeless(&self, s: &ScoredAlignment) -> bool {
        let keep = self.limits.keep.max(1);
        self.best.len() == keep && self.bound(s) + SCORE_SLACK < self.best[keep - 1].score.cd
    }

    fn visit(&mut self, parent: &ScoredAlignment) -> Result<()> {
        if parent.alignment.n_rows() > self.limits.max_rows {
            return Ok(());
        }
        let mut kids: Vec<ScoredAlignment> = Vec::new();
        for (p, hits) in all_merges(&parent.alignment, self.patterns) {
            let Ok(child) = parent.alignment.merge_arc(&hits, self.patterns[p].clone()) else {
                continue;
            };
            if !self.seen.insert(child.key.clone()) {
                continue;
            }
            if self.seen.len() > self.limits.max_states {
                return Err(SpError::LimitExceeded(format!(
                    "more than {} alignments",
                    self.limits.max_states
                )));
            }
            kids.push(ScoredAlignment::new(child, self.costs));
        }
        // best first, so the threshold rises early
        kids.sort_by(rank_order);
        for kid in &kids {
            self.offer(kid.clone());
        }
        for kid in &kids {
            if !self.hopeless(kid) {
                self.visit(kid)?;
            }
        }
        Ok(())
    }
}

/// True when fusing target symbol `t` into column `c` cannot change the score: a
/// contents symbol joining a column that is already matched, or that holds a lone Old
/// contents symbol. Leaving such a pair out yields an alignment with the same CD and
/// fewer order constraints, whose descendants score at least as well.
fn is_neutral(alignment: &Alignment, c: usize, pattern: &Pattern, t: usize) -> bool {
    if pattern.symbols()[t].class.is_id() {
        return false;
    }
    let cells = &alignment.columns[c];
    cells.len() >= 2 || (cells[0].row != 0 && !alignment.rows[cells[0].row].symbols()[cells[0].index].class.is_id())
}

/// Every nonempty order-consistent hit set between `alignment` and each pattern,
/// except those containing a neutral pair.
fn all_merges(alignment: &Alignment, patterns: &[Arc<Pattern>]) -> Vec<(usize, Vec<(usize, usize)>)> {
    let order = alignment.order();
    let mut out = Vec::new();
    for (p, pattern) in patterns.iter().enumerate() {
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for (t, name) in pattern.names().enumerate() {
            for c in 0..alignment.n_columns() {
                if alignment.column_name(c) == name
                    && !alignment.column_has(c, pattern.id(), t)
                    && !is_neutral(alignment, c, pattern, t)
                {
                    candidates.push((c, t));
                }
            }
        }
        // extend chains by strictly increasing target index
        candidates.sort_by_key(|&(c, t)| (t, c));
        let mut stack: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        while let Some(chain) = stack.pop() {
            let last_t = chain.last().map(|&(_, t)| t);
            for &(c, t) in &candidates {
                if last_t.is_some_and(|lt| t <= lt) {
                    continue;
                }
                if chain.iter().all(|&(d, _)| order.may_follow(d, c)) {
                    let mut next = chain.clone();
                    next.push((c, t));
                    out.push((p, next.clone()));
                    stack.push(next);
                }
            }
        }
    }
    out
}
