//! Command-line entry points: `train`, `ppl`, `rerank` and `bleu`.
//!
//! Reports go to the given writer and are deterministic for fixed inputs.
//! Timings go to stderr. Exit codes: 0 success, 1 invariant failure, 2 usage
//! or i/o error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{load_training, load_with_vocabulary, read_aligned_lines, Corpus};
use crate::counts::count_phrase_ngrams_sharded;
use crate::error::{Error, Result};
use crate::logmath::perplexity;
use crate::phrase_lm::{MaxSelect, PhraseMode, PhraseScorer, DEFAULT_MAX_SENTENCE_LEN};
use crate::rerank::{
    corpus_bleu, parse_nbest, rescore, select_best, select_first, selected_hypotheses,
    selection_scores, BleuReport, ScoringMode, DEFAULT_MAX_N,
};
use crate::smoothing::{
    build_backoff_model, read_model, write_model, Backoff, BackoffModel, BuildOptions, ModelMode,
    DEFAULT_GT_MAX, DEFAULT_LAMBDA,
};
use crate::word_lm::word_corpus_logprobs;

#[derive(Debug, Parser)]
#[command(
    name = "phraselm",
    version,
    about = "Word and phrase n-gram language models"
)]
pub struct Cli {
    /// Worker threads for counting and scoring.
    #[arg(long, global = true, env = "PHRASELM_THREADS", default_value_t = 1)]
    pub threads: usize,

    /// Emit key=value lines instead of tables.
    #[arg(long, global = true)]
    pub porcelain: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from a corpus, one sentence per line.
    Train(TrainArgs),
    /// Perplexity of a test corpus.
    Ppl(PplArgs),
    /// Rerank an n-best list and compare BLEU against rank-1 selection.
    Rerank(RerankArgs),
    /// Corpus BLEU of a hypothesis file against a reference file.
    Bleu(BleuArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Word,
    Sum,
    Max,
}

impl From<ModeArg> for ScoringMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Word => ScoringMode::Word,
            ModeArg::Sum => ScoringMode::Sum,
            ModeArg::Max => ScoringMode::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectArg {
    Ppl,
    Prob,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub order: u32,
    /// Maximum phrase length; 1 trains a word model.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub mpl: u32,
    /// Weight of the phrase probability against the word-product term.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Highest raw count that gets Good-Turing discounted.
    #[arg(long, default_value_t = DEFAULT_GT_MAX)]
    pub gt_max: u64,
    /// Use d(h) = 1 - sum alpha without renormalizing the backoff.
    #[arg(long, alias = "paper-literal-backoff")]
    pub unnormalized_backoff: bool,
    /// Also write the raw counts to this file.
    #[arg(long)]
    pub dump_counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoringArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Defaults to `word` for word models; for phrase models `sum` when
    /// measuring perplexity and `max` when reranking.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// `off` scores phrases with the backoff probability alone (lambda = 1).
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub smoothing: Switch,
    #[arg(long, default_value_t = DEFAULT_MAX_SENTENCE_LEN)]
    pub max_sentence_length: usize,
    /// Max-model selection: lowest per-phrase perplexity or highest probability.
    #[arg(long, value_enum, default_value_t = SelectArg::Ppl)]
    pub max_select: SelectArg,
}

#[derive(Debug, Args)]
pub struct PplArgs {
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub test: PathBuf,
    /// One row per order limit 1..=order.
    #[arg(long)]
    pub sweep_order: bool,
    /// Word model for the baseline column of a sweep.
    #[arg(long)]
    pub word_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub nbest: PathBuf,
    #[arg(long)]
    pub refs: PathBuf,
    /// Selected hypotheses, one per line.
    #[arg(long)]
    pub out: PathBuf,
    /// Select on alpha * decoder + (1 - alpha) * LM instead of the LM alone.
    #[arg(long)]
    pub combine: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BleuArgs {
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
}

/// Runs a parsed command, returning the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> u8 {
    let threads = cli.threads.max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {threads} threads: {e}");
            return 2;
        }
    };
    let porcelain = cli.porcelain;
    let (result, report) = pool.install(|| {
        let mut buf = Vec::new();
        let result = match &cli.command {
            Command::Train(a) => cmd_train(a, threads, porcelain, &mut buf),
            Command::Ppl(a) => cmd_ppl(a, porcelain, &mut buf),
            Command::Rerank(a) => cmd_rerank(a, porcelain, &mut buf),
            Command::Bleu(a) => cmd_bleu(a, porcelain, &mut buf),
        };
        (result, buf)
    });
    let result = result.and_then(|()| {
        out.write_all(&report)?;
        out.flush()?;
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Structural(_) | Error::UndefinedHistogram { .. } => 1,
        _ => 2,
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn cmd_train(
    args: &TrainArgs,
    threads: usize,
    porcelain: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let started = Instant::now();
    if !(0.0..=1.0).contains(&args.lambda) {
        return Err(Error::InvalidArgument(format!(
            "--lambda {} is outside [0, 1]",
            args.lambda
        )));
    }
    let (vocab, corpus) = load_training(&args.corpus).map_err(|e| annotate(e, &args.corpus))?;
    if corpus.word_count() == 0 {
        return Err(Error::CannotTrain("training corpus has no words"));
    }
    let order = args.order as usize;
    let mpl = args.mpl as usize;
    let table = count_phrase_ngrams_sharded(&corpus, &vocab, order, mpl, threads);
    if let Some(path) = &args.dump_counts {
        let mut w = create(path)?;
        table.write_dump(&vocab, &mut w)?;
        w.flush()?;
    }
    let options = BuildOptions {
        lambda: args.lambda,
        gt_max: args.gt_max,
        backoff: if args.unnormalized_backoff {
            Backoff::Unnormalized
        } else {
            Backoff::Normalized
        },
    };
    let model = build_backoff_model(&table, &vocab, &options)?;
    let mut w = create(&args.model)?;
    write_model(&model, &mut w)?;

    let counts = model.ngram_counts();
    if porcelain {
        writeln!(out, "mode={}", model.mode().as_str())?;
        writeln!(out, "sentences={}", corpus.len())?;
        writeln!(out, "words={}", corpus.word_count())?;
        writeln!(out, "vocabulary={}", vocab.len())?;
        writeln!(out, "phrases={}", model.prediction_space().len())?;
        for (i, n) in counts.iter().enumerate() {
            writeln!(out, "ngrams.{}={}", i + 1, n)?;
        }
    } else {
        writeln!(out, "{:<12} {}", "mode", model.mode().as_str())?;
        writeln!(out, "{:<12} {}", "sentences", corpus.len())?;
        writeln!(out, "{:<12} {}", "words", corpus.word_count())?;
        writeln!(out, "{:<12} {}", "vocabulary", vocab.len())?;
        writeln!(out, "{:<12} {}", "phrases", model.prediction_space().len())?;
        for (i, n) in counts.iter().enumerate() {
            writeln!(out, "{:<12} {}", format!("{}-grams", i + 1), n)?;
        }
    }
    eprintln!("trained in {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn annotate(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    }
}

fn load_model(path: &Path) -> Result<BackoffModel> {
    read_model(BufReader::new(open(path)?))
}

struct Prepared {
    model: BackoffModel,
    mode: ScoringMode,
    max_len: usize,
    select: MaxSelect,
}

/// `phrase_default` is the mode used for a phrase model when none is given.
fn prepare(args: &ScoringArgs, phrase_default: ScoringMode) -> Result<Prepared> {
    let mut model = load_model(&args.model)?;
    let mode = match args.mode {
        Some(m) => m.into(),
        None if model.mode() == ModelMode::Word => ScoringMode::Word,
        None => phrase_default,
    };
    if mode == ScoringMode::Word && model.mode() != ModelMode::Word {
        return Err(Error::ModeMismatch(format!(
            "--mode word needs a word model (mpl 1), {} has mpl {}",
            args.model.display(),
            model.mpl()
        )));
    }
    if args.smoothing == Switch::Off {
        model.set_lambda(1.0)?;
    }
    Ok(Prepared {
        model,
        mode,
        max_len: args.max_sentence_length,
        select: match args.max_select {
            SelectArg::Ppl => MaxSelect::Perplexity,
            SelectArg::Prob => MaxSelect::Probability,
        },
    })
}

struct PplRow {
    log_prob: f64,
    units: usize,
    ppl: f64,
}

fn text_ppl(
    model: &BackoffModel,
    corpus: &Corpus,
    mode: ScoringMode,
    max_len: usize,
    select: MaxSelect,
) -> Result<PplRow> {
    if corpus.word_count() == 0 {
        return Err(Error::UndefinedPerplexity(
            "test corpus has no words to score",
        ));
    }
    let (log_prob, units) = match mode {
        ScoringMode::Word => {
            let lps = word_corpus_logprobs(model, corpus)?;
            (lps.iter().sum::<f64>(), corpus.word_count())
        }
        ScoringMode::Sum | ScoringMode::Max => {
            let phrase_mode = if mode == ScoringMode::Sum {
                PhraseMode::Sum
            } else {
                PhraseMode::Max
            };
            let scorer = PhraseScorer::new(model)
                .with_max_sentence_len(max_len)
                .with_selection(select);
            let results = scorer.corpus_results(corpus, phrase_mode)?;
            let lp = results.iter().map(|r| r.log_prob).sum::<f64>();
            let units = match phrase_mode {
                PhraseMode::Sum => corpus.word_count(),
                PhraseMode::Max => results.iter().map(|r| r.best_phrases.unwrap_or(0)).sum(),
            };
            (lp, units)
        }
    };
    if units == 0 {
        return Err(Error::UndefinedPerplexity("no scoring units"));
    }
    let ppl = perplexity(log_prob, units as f64);
    if !ppl.is_finite() {
        return Err(Error::Structural(format!(
            "non-finite perplexity from log10 P = {log_prob}"
        )));
    }
    Ok(PplRow {
        log_prob,
        units,
        ppl,
    })
}

pub fn cmd_ppl(args: &PplArgs, porcelain: bool, out: &mut dyn Write) -> Result<()> {
    let prep = prepare(&args.scoring, ScoringMode::Sum)?;
    let full = load_with_vocabulary(&args.test, prep.model.vocab())
        .map_err(|e| annotate(e, &args.test))?;
    let corpus = full.filter(|s| s.len() <= prep.max_len);
    let skipped = full.len() - corpus.len();
    if skipped > 0 {
        log::warn!(
            "{skipped} test sentences longer than {} words were left out",
            prep.max_len
        );
    }

    if args.sweep_order {
        return ppl_sweep(args, &prep, &corpus, skipped, porcelain, out);
    }

    let row = text_ppl(&prep.model, &corpus, prep.mode, prep.max_len, prep.select)?;
    if porcelain {
        writeln!(out, "mode={}", prep.mode.as_str())?;
        writeln!(out, "order={}", prep.model.max_order())?;
        writeln!(out, "lambda={}", prep.model.lambda())?;
        writeln!(out, "sentences={}", corpus.len())?;
        writeln!(out, "skipped={skipped}")?;
        writeln!(out, "words={}", corpus.word_count())?;
        writeln!(out, "units={}", row.units)?;
        writeln!(out, "logprob={}", row.log_prob)?;
        writeln!(out, "ppl={}", row.ppl)?;
    } else {
        writeln!(out, "{:<10} {}", "mode", prep.mode.as_str())?;
        writeln!(out, "{:<10} {}", "order", prep.model.max_order())?;
        writeln!(out, "{:<10} {}", "lambda", prep.model.lambda())?;
        writeln!(out, "{:<10} {}", "sentences", corpus.len())?;
        writeln!(out, "{:<10} {}", "skipped", skipped)?;
        writeln!(out, "{:<10} {}", "words", corpus.word_count())?;
        writeln!(out, "{:<10} {}", "units", row.units)?;
        writeln!(out, "{:<10} {:.6}", "logprob", row.log_prob)?;
        writeln!(out, "{:<10} {:.4}", "ppl", row.ppl)?;
    }
    Ok(())
}

/// Perplexity per order limit. A phrase model gets the four sum/max columns
/// with and without smoothing; a word model, or `--word-model`, adds the
/// word baseline column.
fn ppl_sweep(
    args: &PplArgs,
    prep: &Prepared,
    corpus: &Corpus,
    skipped: usize,
    porcelain: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let top = prep.model.max_order();
    let mut header: Vec<&str> = Vec::new();
    // columns[c][order - 1]
    let mut columns: Vec<Vec<f64>> = Vec::new();

    let word_model = match (&args.word_model, prep.model.mode()) {
        (Some(path), _) => Some(load_model(path)?),
        (None, ModelMode::Word) => Some(prep.model.clone()),
        (None, ModelMode::Phrase) => None,
    };
    if let Some(wm) = word_model {
        if wm.mode() != ModelMode::Word {
            return Err(Error::ModeMismatch(
                "--word-model must be a word model".into(),
            ));
        }
        header.push("Word");
        columns.push(sweep_column(&wm, top, corpus, ScoringMode::Word, prep)?);
    }
    if prep.model.mode() == ModelMode::Phrase {
        let mut plain = prep.model.clone();
        plain.set_lambda(1.0)?;
        for (name, mode, model) in [
            ("Sum", ScoringMode::Sum, &plain),
            ("Sum Smoo.", ScoringMode::Sum, &prep.model),
            ("Max", ScoringMode::Max, &plain),
            ("Max Smoo.", ScoringMode::Max, &prep.model),
        ] {
            header.push(name);
            columns.push(sweep_column(model, top, corpus, mode, prep)?);
        }
    }

    if porcelain {
        writeln!(out, "sentences={}", corpus.len())?;
        writeln!(out, "skipped={skipped}")?;
        for order in 1..=top {
            for (name, col) in header.iter().zip(&columns) {
                let key = name.to_lowercase().replace([' ', '.'], "");
                writeln!(out, "ppl.{order}.{key}={}", col[order - 1])?;
            }
        }
    } else {
        write!(out, "{:<8}", "Limit")?;
        for name in &header {
            write!(out, " {name:>12}")?;
        }
        writeln!(out)?;
        for order in 1..=top {
            write!(out, "{:<8}", order_label(order))?;
            for col in &columns {
                write!(out, " {:>12.2}", col[order - 1])?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

fn order_label(order: usize) -> String {
    match order {
        1 => "Unigram".into(),
        2 => "Bigram".into(),
        3 => "Trigram".into(),
        n => format!("{n}-gram"),
    }
}

fn sweep_column(
    model: &BackoffModel,
    top: usize,
    corpus: &Corpus,
    mode: ScoringMode,
    prep: &Prepared,
) -> Result<Vec<f64>> {
    let mut model = model.clone();
    let mut col = vec![f64::NAN; top];
    for order in (1..=top).rev() {
        if order < model.max_order() {
            model.truncate(order);
        }
        if order <= model.max_order() {
            col[order - 1] = text_ppl(&model, corpus, mode, prep.max_len, prep.select)?.ppl;
        }
    }
    Ok(col)
}

fn read_refs(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut refs = read_aligned_lines(open(path)?)?;
    while refs.last().is_some_and(Vec::is_empty) {
        refs.pop();
    }
    Ok(refs)
}

fn write_bleu(out: &mut dyn Write, label: &str, r: &BleuReport, porcelain: bool) -> Result<()> {
    if porcelain {
        let key = if label.is_empty() {
            String::new()
        } else {
            format!("{label}.")
        };
        writeln!(out, "{key}bleu={}", r.bleu)?;
        for (i, p) in r.precisions.iter().enumerate() {
            writeln!(out, "{key}p{}={p}", i + 1)?;
        }
        writeln!(out, "{key}bp={}", r.brevity_penalty)?;
        writeln!(out, "{key}hyp_len={}", r.hyp_length)?;
        writeln!(out, "{key}ref_len={}", r.ref_length)?;
    } else {
        let precisions: Vec<String> = r
            .precisions
            .iter()
            .map(|p| format!("{:.1}", 100.0 * p))
            .collect();
        let name = if label.is_empty() {
            String::new()
        } else {
            format!("{label:<10} ")
        };
        writeln!(
            out,
            "{name}BLEU = {:.2}, {} (BP={:.3}, hyp_len={}, ref_len={})",
            100.0 * r.bleu,
            precisions.join("/"),
            r.brevity_penalty,
            r.hyp_length,
            r.ref_length
        )?;
    }
    Ok(())
}

pub fn cmd_rerank(args: &RerankArgs, porcelain: bool, out: &mut dyn Write) -> Result<()> {
    let prep = prepare(&args.scoring, ScoringMode::Max)?;
    if let Some(alpha) = args.combine {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "--combine {alpha} is outside [0, 1]"
            )));
        }
    }
    let nbest = parse_nbest(BufReader::new(open(&args.nbest)?))?;
    let refs = read_refs(&args.refs)?;
    if refs.len() != nbest.len() {
        return Err(Error::InvalidArgument(format!(
            "{} n-best segments but {} reference lines",
            nbest.len(),
            refs.len()
        )));
    }
    let scorer = PhraseScorer::new(&prep.model)
        .with_max_sentence_len(prep.max_len)
        .with_selection(prep.select);
    let rescored = rescore(&scorer, &nbest, prep.mode)?;
    let fallbacks = rescored.iter().flatten().filter(|r| r.fallback).count();
    if fallbacks > 0 {
        log::warn!("{fallbacks} hypotheses over the length limit were scored as single words");
    }
    let scores = selection_scores(&nbest, &rescored, args.combine)?;
    let chosen = select_best(&nbest, &scores);
    let baseline = select_first(&nbest);

    let chosen_hyps = selected_hypotheses(&nbest, &chosen);
    let baseline_hyps = selected_hypotheses(&nbest, &baseline);
    let mut w = create(&args.out)?;
    for h in &chosen_hyps {
        writeln!(w, "{}", h.join(" "))?;
    }
    w.flush()?;

    let base_report = corpus_bleu(&baseline_hyps, &refs, DEFAULT_MAX_N)?;
    let lm_report = corpus_bleu(&chosen_hyps, &refs, DEFAULT_MAX_N)?;
    let changed = chosen.iter().filter(|s| s.index != 0).count();
    if porcelain {
        writeln!(out, "mode={}", prep.mode.as_str())?;
        writeln!(out, "segments={}", nbest.len())?;
        writeln!(out, "changed={changed}")?;
        writeln!(out, "fallbacks={fallbacks}")?;
        write_bleu(out, "baseline", &base_report, true)?;
        write_bleu(out, "lm", &lm_report, true)?;
        writeln!(out, "delta={}", lm_report.bleu - base_report.bleu)?;
    } else {
        writeln!(out, "{:<10} {}", "mode", prep.mode.as_str())?;
        writeln!(out, "{:<10} {}", "segments", nbest.len())?;
        writeln!(out, "{:<10} {}", "changed", changed)?;
        writeln!(out, "{:<10} {}", "fallbacks", fallbacks)?;
        write_bleu(out, "rank-1", &base_report, false)?;
        write_bleu(out, "lm", &lm_report, false)?;
        writeln!(
            out,
            "{:<10} {:+.2}",
            "delta",
            100.0 * (lm_report.bleu - base_report.bleu)
        )?;
    }
    Ok(())
}

pub fn cmd_bleu(args: &BleuArgs, porcelain: bool, out: &mut dyn Write) -> Result<()> {
    let hyps = read_refs(&args.hyp)?;
    let refs = read_refs(&args.reference)?;
    if hyps.len() != refs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} hypothesis lines but {} reference lines",
            hyps.len(),
            refs.len()
        )));
    }
    let report = corpus_bleu(&hyps, &refs, DEFAULT_MAX_N)?;
    write_bleu(out, "", &report, porcelain)
}
