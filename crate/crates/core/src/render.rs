//! Text and JSON renderings of alignments.
//!
//! The text grid prints one line per row, labelled with the row number at both
//! margins, and a connector line between consecutive rows. Every column owns a fixed
//! character span (widest name + 1) on every line; a connector line shows `|` in a
//! column's span when cells of that column sit both above and below it.

use serde::{Deserialize, Serialize};

use crate::aligner::{Alignment, Cell};
use crate::error::{Result, SpError};
use crate::knowledge::{Pattern, SymbolClass};
use crate::scoring::{CodeSequence, CompressionScore};

fn width(name: &str) -> usize {
    name.chars().count()
}

pub fn column_spans(alignment: &Alignment) -> Vec<usize> {
    alignment
        .columns()
        .iter()
        .map(|cells| {
            cells
                .iter()
                .map(|c| width(alignment.row(c.row).name(c.index)))
                .max()
                .unwrap_or(0)
                + 1
        })
        .collect()
}

pub fn render_text(alignment: &Alignment) -> String {
    let spans = column_spans(alignment);
    let n_rows = alignment.n_rows();
    let label_w = (n_rows - 1).to_string().len();
    let mut cell_at: Vec<Vec<Option<usize>>> = vec![vec![None; spans.len()]; n_rows];
    for (c, cells) in alignment.columns().iter().enumerate() {
        for cell in cells {
            cell_at[cell.row][c] = Some(cell.index);
        }
    }
    // first and last row holding a cell, per column
    let extent: Vec<(usize, usize)> = alignment
        .columns()
        .iter()
        .map(|cells| {
            let lo = cells.iter().map(|c| c.row).min().unwrap_or(0);
            let hi = cells.iter().map(|c| c.row).max().unwrap_or(0);
            (lo, hi)
        })
        .collect();

    let mut out = String::new();
    for r in 0..n_rows {
        let mut line = format!("{r:>label_w$} ");
        for (c, &span) in spans.iter().enumerate() {
            match cell_at[r][c] {
                Some(i) => {
                    let name = alignment.row(r).name(i);
                    line.push_str(name);
                    line.extend(std::iter::repeat_n(' ', span - width(name)));
                }
                None => line.extend(std::iter::repeat_n(' ', span)),
            }
        }
        line.push_str(&r.to_string());
        out.push_str(&line);
        out.push('\n');

        if r + 1 < n_rows {
            let mut conn = " ".repeat(label_w + 1);
            for (c, &span) in spans.iter().enumerate() {
                let (lo, hi) = extent[c];
                let mut slot = vec![' '; span];
                if lo <= r && hi > r {
                    slot[(span - 1) / 2] = '|';
                }
                conn.extend(slot);
            }
            out.push_str(conn.trim_end());
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDoc {
    pub pattern: String,
    pub frequency: u64,
    pub id_block: usize,
    pub symbols: Vec<String>,
    pub classes: Vec<SymbolClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDoc {
    pub absolute: f64,
    pub relative: f64,
}

/// Machine-readable form of one scored alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentDoc {
    pub key: String,
    pub rows: Vec<RowDoc>,
    pub columns: Vec<Vec<[usize; 2]>>,
    pub score: CompressionScore,
    pub code: Vec<String>,
    pub probability: Option<ProbabilityDoc>,
}

impl AlignmentDoc {
    pub fn new(
        alignment: &Alignment,
        score: &CompressionScore,
        code: &CodeSequence,
        probability: Option<ProbabilityDoc>,
    ) -> Self {
        let rows = alignment
            .rows()
            .iter()
            .map(|p| RowDoc {
                pattern: p.id().to_string(),
                frequency: p.frequency(),
                id_block: p.id_block(),
                symbols: p.names().map(str::to_string).collect(),
                classes: p.symbols().iter().map(|s| s.class).collect(),
            })
            .collect();
        let columns = alignment
            .columns()
            .iter()
            .map(|cells| cells.iter().map(|c| [c.row, c.index]).collect())
            .collect();
        AlignmentDoc {
            key: alignment.key().to_string(),
            rows,
            columns,
            score: *score,
            code: code.names().into_iter().map(str::to_string).collect(),
            probability,
        }
    }

    /// Rebuilds the alignment the document describes.
    pub fn alignment(&self) -> Result<Alignment> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for (r, doc) in self.rows.iter().enumerate() {
            let p = if r == 0 {
                Pattern::new_pattern(doc.pattern.clone(), &doc.symbols)?
            } else {
                if doc.id_block > doc.symbols.len() {
                    return Err(SpError::format(0, format!("row {r}: id_block out of range")));
                }
                let (ids, body) = doc.symbols.split_at(doc.id_block);
                Pattern::old(doc.pattern.clone(), ids, body, doc.frequency)?
            };
            let classes: Vec<SymbolClass> = p.symbols().iter().map(|s| s.class).collect();
            if classes != doc.classes {
                return Err(SpError::format(0, format!("row {r}: classes disagree with symbols")));
            }
            rows.push(p);
        }
        let columns: Vec<Vec<Cell>> = self
            .columns
            .iter()
            .map(|cells| cells.iter().map(|&[row, index]| Cell { row, index }).collect())
            .collect();
        let a = Alignment::from_columns(rows, &columns)?;
        if a.key() != self.key {
            return Err(SpError::format(0, "column structure is not canonical"));
        }
        Ok(a)
    }
}

pub fn render_json(
    alignment: &Alignment,
    score: &CompressionScore,
    code: &CodeSequence,
    probability: Option<ProbabilityDoc>,
) -> String {
    let doc = AlignmentDoc::new(alignment, score, code, probability);
    serde_json::to_string_pretty(&doc).expect("alignment documents always serialize")
}

pub fn parse_json(text: &str) -> Result<AlignmentDoc> {
    serde_json::from_str(text).map_err(|e| SpError::format(e.line(), e.to_string()))
}
