//! Compression-driven multiple alignment of symbol patterns.
//!
//! A New pattern is interpreted by aligning it against a store of Old patterns so
//! that matched symbols are unified and the New pattern can be recovered from a short
//! code. The same machinery drives error correction, transmission, probabilities and
//! unsupervised grammar learning by minimum description length.

pub mod aligner;
pub mod error;
pub mod inference;
pub mod knowledge;
pub mod learner;
pub mod matcher;
pub mod render;
pub mod scoring;
pub mod shell;

pub use aligner::{
    build_alignments, build_exhaustive, Alignment, Cell, ExhaustiveLimits, ScoredAlignment, SearchParams,
};
pub use error::{Result, SpError};
pub use learner::{learn, LearnParams, Learned};
pub use knowledge::{parse_corpus, parse_store, serialize_store, Corpus, Pattern, Store, Symbol, SymbolClass};
pub use scoring::{build_cost_table, compression_difference, encoding_of, CodeSequence, CompressionScore, CostTable};
