//! The `sp` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::aligner::{build_alignments_with, build_exhaustive, ExhaustiveLimits, ScoredAlignment, SearchParams};
use crate::error::SpError;
use crate::inference::{self, probabilities, CodeFile, Surface, DEFAULT_SURFACE};
use crate::knowledge::{parse_corpus, parse_store, Corpus, Pattern, Store};
use crate::learner::{self, grammars_tsv, LearnParams};
use crate::render::{render_text, AlignmentDoc, ProbabilityDoc};
use crate::scoring::{build_cost_table, encoding_of};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FORMAT: i32 = 2;
pub const EXIT_NO_COMPRESSION: i32 = 3;

/// Environment variable capping worker threads; 0 or unset means one per core.
pub const THREADS_VAR: &str = "SP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "sp", version, about = "Multiple alignment, learning and transmission of symbol patterns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Align each New pattern against a store and rank the alignments
    Align(AlignArgs),
    /// Learn Old patterns and grammars from a corpus
    Learn(LearnArgs),
    /// Encode a New pattern as a code file
    Encode(EncodeArgs),
    /// Decode a code file back into symbols
    Decode(DecodeArgs),
    /// Print each New pattern as the store would correct it
    Correct(CorrectArgs),
    /// Print the cost table of a store
    Costs(CostsArgs),
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    /// Alignments kept per search cycle
    #[arg(long = "beam", default_value_t = crate::aligner::DEFAULT_BEAM_WIDTH)]
    beam_width: usize,
    /// Upper limit on search cycles
    #[arg(long = "cycles", default_value_t = crate::aligner::DEFAULT_MAX_CYCLES)]
    max_cycles: usize,
    /// Hit sequences tried per alignment and Old pattern
    #[arg(long = "max-hits", default_value_t = crate::matcher::DEFAULT_MAX_HITS)]
    max_hits: usize,
    /// Cycles without improvement before the search stops
    #[arg(long, default_value_t = crate::aligner::DEFAULT_PATIENCE)]
    patience: usize,
}

impl SearchArgs {
    fn params(&self) -> SearchParams {
        SearchParams {
            beam_width: self.beam_width,
            max_cycles: self.max_cycles,
            max_hits: self.max_hits,
            patience: self.patience,
            ..SearchParams::default()
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct AlignArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    new: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Alignments printed per New pattern
    #[arg(long, default_value_t = 3)]
    top: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Enumerate the whole search space instead of the beam (small inputs only)
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args, Debug)]
struct LearnArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Store to start from; empty when omitted
    #[arg(long)]
    store: Option<PathBuf>,
    /// Best alignments per item that patterns are derived from
    #[arg(long = "derive-from", default_value_t = learner::DEFAULT_DERIVE_FROM)]
    derive_from: usize,
    /// Grammars to report
    #[arg(long, default_value_t = learner::DEFAULT_KEEP)]
    keep: usize,
    /// Upper limit on sifting steps
    #[arg(long = "max-removals")]
    max_removals: Option<usize>,
    /// Alignments cut into more pieces than this yield no abstract pattern
    #[arg(long = "max-fragments", default_value_t = learner::DEFAULT_MAX_FRAGMENTS)]
    max_fragments: usize,
    /// Alignments kept per search cycle
    #[arg(long = "beam", default_value_t = learner::LEARN_BEAM_WIDTH)]
    beam_width: usize,
    /// Hit sequences tried per alignment and Old pattern
    #[arg(long = "max-hits", default_value_t = learner::LEARN_MAX_HITS)]
    max_hits: usize,
    /// Where the learned store is written
    #[arg(long)]
    out: PathBuf,
    /// Where the best grammar is written, if anywhere
    #[arg(long = "grammar-out")]
    grammar_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    new: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    code: PathBuf,
    /// Pattern for names that are data rather than grammar
    #[arg(long, default_value = DEFAULT_SURFACE)]
    surface: String,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct CorrectArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    new: PathBuf,
    /// Pattern for names that are data rather than grammar
    #[arg(long, default_value = DEFAULT_SURFACE)]
    surface: String,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct CostsArgs {
    #[arg(long)]
    store: PathBuf,
}

/// A failed command: the exit code and what to tell the user.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<SpError> for Failure {
    fn from(e: SpError) -> Self {
        let code = match e {
            SpError::NoCompression => EXIT_NO_COMPRESSION,
            _ => EXIT_FORMAT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs `sp` with `args` (program name first), writing results to `out` and
/// diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, threads: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let result = thread_pool(threads)
        .and_then(|pool| pool.install(|| dispatch(cli.command)))
        .and_then(|text| {
            out.write_all(text.as_bytes())
                .map_err(|e| Failure::from(SpError::format(0, format!("cannot write output: {e}"))))
        });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "sp: {}", f.message);
            f.code
        }
    }
}

/// Entry point for the binary: process arguments, `SP_THREADS`, standard streams.
pub fn main() -> i32 {
    let threads = std::env::var(THREADS_VAR).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(std::env::args_os(), threads.as_deref(), &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}

fn thread_pool(threads: Option<&str>) -> std::result::Result<rayon::ThreadPool, Failure> {
    let n = match threads.map(str::trim) {
        None | Some("") => 0,
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| Failure::usage(format!("{THREADS_VAR} must be a non-negative integer, got {v:?}")))?,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Failure::usage(format!("cannot start worker threads: {e}")))
}

fn dispatch(command: Command) -> std::result::Result<String, Failure> {
    match command {
        Command::Align(a) => align(&a),
        Command::Learn(a) => learn(&a),
        Command::Encode(a) => encode(&a),
        Command::Decode(a) => decode(&a),
        Command::Correct(a) => correct(&a),
        Command::Costs(a) => costs(&a),
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_FORMAT,
        message: format!("{}: {e}", path.display()),
    })
}

fn write(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure {
        code: EXIT_FORMAT,
        message: format!("{}: {e}", path.display()),
    })
}

/// Prefixes format errors with the file they came from.
fn in_file<T>(path: &Path, r: crate::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn load_store(path: &Path) -> std::result::Result<Store, Failure> {
    let text = read(path)?;
    in_file(path, parse_store(&text))
}

fn load_corpus(path: &Path) -> std::result::Result<Corpus, Failure> {
    let text = read(path)?;
    let corpus = in_file(path, parse_corpus(&text))?;
    if corpus.is_empty() {
        return Err(Failure {
            code: EXIT_FORMAT,
            message: format!("{}: no NEW lines", path.display()),
        });
    }
    Ok(corpus)
}

fn surface(expr: &str) -> std::result::Result<Surface, Failure> {
    Surface::new(expr).map_err(|e| Failure::usage(format!("--surface: {e}")))
}

fn ranked(new: &Pattern, store: &Store, args: &AlignArgs) -> std::result::Result<Vec<ScoredAlignment>, Failure> {
    let params = args.search.params();
    if args.exhaustive {
        let limits = ExhaustiveLimits {
            epsilon: params.epsilon,
            ..ExhaustiveLimits::default()
        };
        return Ok(build_exhaustive(new, store, &limits)?.ranked);
    }
    let costs = build_cost_table(store, params.epsilon)?;
    Ok(build_alignments_with(new, store, &costs, &params))
}

#[derive(Serialize)]
struct AlignedItem {
    new: String,
    symbols: Vec<String>,
    alignments: Vec<AlignmentDoc>,
}

fn align(args: &AlignArgs) -> std::result::Result<String, Failure> {
    let store = load_store(&args.store)?;
    let corpus = load_corpus(&args.new)?;
    let costs = build_cost_table(&store, SearchParams::default().epsilon)?;
    let mut text = String::new();
    let mut items = Vec::new();
    for new in &corpus.news {
        let all = ranked(new, &store, args)?;
        let report = probabilities(&all)?;
        let shown = all.iter().zip(&report.entries).take(args.top.max(1));
        match args.format {
            Format::Text => {
                let names: Vec<&str> = new.names().collect();
                let _ = writeln!(text, "new {}: {}", new.id(), names.join(" "));
                for (rank, (s, p)) in shown.enumerate() {
                    let _ = writeln!(
                        text,
                        "\nrank {}  CD {:.6}  B_N {:.6}  B_E {:.6}  P {:.6e}  P_rel {:.6}",
                        rank + 1,
                        s.score.cd,
                        s.score.b_new,
                        s.score.b_code,
                        p.absolute,
                        p.relative
                    );
                    text.push_str(&render_text(&s.alignment));
                }
                text.push('\n');
            }
            Format::Json => {
                let alignments = shown
                    .map(|(s, p)| {
                        let code = encoding_of(&s.alignment, &costs);
                        let prob = ProbabilityDoc {
                            absolute: p.absolute,
                            relative: p.relative,
                        };
                        AlignmentDoc::new(&s.alignment, &s.score, &code, Some(prob))
                    })
                    .collect();
                items.push(AlignedItem {
                    new: new.id().to_string(),
                    symbols: new.names().map(str::to_string).collect(),
                    alignments,
                });
            }
        }
    }
    if args.format == Format::Json {
        text = serde_json::to_string_pretty(&items).expect("alignment documents always serialize");
        text.push('\n');
    }
    Ok(text)
}

fn learn(args: &LearnArgs) -> std::result::Result<String, Failure> {
    let corpus = load_corpus(&args.corpus)?;
    let initial = match &args.store {
        Some(p) => load_store(p)?,
        None => Store::new(),
    };
    let defaults = LearnParams::default();
    let params = LearnParams {
        search: SearchParams {
            beam_width: args.beam_width,
            max_hits: args.max_hits,
            ..defaults.search.clone()
        },
        derive_from: args.derive_from,
        keep: args.keep,
        max_removals: args.max_removals.unwrap_or(defaults.max_removals),
        max_fragments: args.max_fragments,
    };
    let learned = learner::learn(&corpus, &initial, &params);
    write(&args.out, &learned.store.serialize())?;
    if let Some(path) = &args.grammar_out {
        let best = learned.grammars.first().map(|(g, _)| g.serialize()).unwrap_or_default();
        write(path, &best)?;
    }
    Ok(grammars_tsv(&learned.grammars))
}

fn single(corpus: Corpus, path: &Path) -> std::result::Result<Pattern, Failure> {
    if corpus.len() != 1 {
        return Err(Failure {
            code: EXIT_FORMAT,
            message: format!("{}: expected exactly one NEW line, found {}", path.display(), corpus.len()),
        });
    }
    Ok(corpus.news.into_iter().next().expect("one item"))
}

fn encode(args: &EncodeArgs) -> std::result::Result<String, Failure> {
    let store = load_store(&args.store)?;
    let new = single(load_corpus(&args.new)?, &args.new)?;
    let encoding = inference::encode(&new, &store, &args.search.params())?;
    let text = encoding.code_file().to_text();
    write(&args.out, &text)?;
    Ok(text)
}

fn decode(args: &DecodeArgs) -> std::result::Result<String, Failure> {
    let surface = surface(&args.surface)?;
    let store = load_store(&args.store)?;
    let code = in_file(&args.code, CodeFile::parse(&read(&args.code)?))?;
    if code.store_version != store.version() {
        return Err(Failure::from(SpError::Incompatible(format!(
            "code was made with store version {}, store is version {}",
            code.store_version,
            store.version()
        ))));
    }
    let names = inference::decode(&code.symbols, &store, &args.search.params(), &surface)?;
    Ok(names.join(" ") + "\n")
}

fn correct(args: &CorrectArgs) -> std::result::Result<String, Failure> {
    let surface = surface(&args.surface)?;
    let store = load_store(&args.store)?;
    let corpus = load_corpus(&args.new)?;
    let params = args.search.params();
    let costs = build_cost_table(&store, params.epsilon)?;
    let mut text = String::new();
    for new in &corpus.news {
        let best = build_alignments_with(new, &store, &costs, &params).remove(0);
        text.push_str(&inference::correct(&best.alignment, &surface).join(" "));
        text.push('\n');
    }
    Ok(text)
}

fn costs(args: &CostsArgs) -> std::result::Result<String, Failure> {
    let store = load_store(&args.store)?;
    Ok(build_cost_table(&store, SearchParams::default().epsilon)?.to_tsv())
}
