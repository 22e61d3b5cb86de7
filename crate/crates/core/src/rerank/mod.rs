//! N-best list rescoring and selection.
//!
//! Wire format, one hypothesis per line:
//!
//! ```text
//! 0 ||| we need a way to success . ||| -12.7
//! 0 ||| but we need a success
//! ```
//!
//! The segment id is a decimal integer and the decoder score is optional.
//! Entries keep their file order within a segment; segments are ordered by
//! id.

mod bleu;

use std::collections::BTreeMap;
use std::io::BufRead;

use rayon::prelude::*;

use crate::corpus::{map_with_unk, tokenize, Sentence};
use crate::error::{Error, Result};
use crate::phrase_lm::{PhraseMode, PhraseScorer, Segmentation};
use crate::word_lm::{check_word_model, score_words};

pub use bleu::{corpus_bleu, BleuReport, DEFAULT_MAX_N};

#[derive(Debug, Clone, PartialEq)]
pub struct NBestEntry {
    pub segment_id: u64,
    pub hypothesis: Vec<String>,
    pub decoder_score: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NBestList {
    segments: Vec<(u64, Vec<NBestEntry>)>,
}

impl NBestList {
    pub fn from_segments(segments: Vec<(u64, Vec<NBestEntry>)>) -> Self {
        NBestList { segments }
    }

    pub fn segments(&self) -> &[(u64, Vec<NBestEntry>)] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

pub fn parse_nbest<R: BufRead>(input: R) -> Result<NBestList> {
    let mut grouped: BTreeMap<u64, Vec<NBestEntry>> = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::parse(n, "expected `id ||| hypothesis [||| score]`"));
        }
        let segment_id: u64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(n, format!("bad segment id `{}`", fields[0])))?;
        let hypothesis: Vec<String> = tokenize(fields[1]).into_iter().map(str::to_owned).collect();
        if hypothesis.is_empty() {
            return Err(Error::parse(n, "empty hypothesis"));
        }
        let decoder_score = match fields.get(2) {
            Some(s) if !s.is_empty() => Some(
                s.parse()
                    .map_err(|_| Error::parse(n, format!("bad decoder score `{s}`")))?,
            ),
            _ => None,
        };
        grouped.entry(segment_id).or_default().push(NBestEntry {
            segment_id,
            hypothesis,
            decoder_score,
        });
    }
    Ok(NBestList {
        segments: grouped.into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoringMode {
    Word,
    Sum,
    Max,
}

impl ScoringMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoringMode::Word => "word",
            ScoringMode::Sum => "sum",
            ScoringMode::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescored {
    /// log10 LM probability.
    pub lm_log_prob: f64,
    /// The hypothesis was over the phrase-scoring length limit and got its
    /// all-single-word segmentation chain score instead.
    pub fallback: bool,
}

/// Scores every hypothesis under `mode`, segment-parallel.
pub fn rescore(
    scorer: &PhraseScorer<'_>,
    nbest: &NBestList,
    mode: ScoringMode,
) -> Result<Vec<Vec<Rescored>>> {
    let model = scorer.model();
    if mode == ScoringMode::Word {
        check_word_model(model)?;
    }
    nbest
        .segments
        .par_iter()
        .map(|(_, entries)| {
            entries
                .iter()
                .map(|e| {
                    let sentence = map_with_unk(model.vocab(), &e.hypothesis);
                    score_entry(scorer, &sentence, mode)
                })
                .collect()
        })
        .collect()
}

fn score_entry(
    scorer: &PhraseScorer<'_>,
    sentence: &Sentence,
    mode: ScoringMode,
) -> Result<Rescored> {
    let phrase_mode = match mode {
        ScoringMode::Word => {
            return Ok(Rescored {
                lm_log_prob: score_words(scorer.model(), sentence).log_prob,
                fallback: false,
            })
        }
        ScoringMode::Sum => PhraseMode::Sum,
        ScoringMode::Max => PhraseMode::Max,
    };
    if sentence.len() > scorer.max_sentence_len() {
        let m = sentence.len();
        let singles = Segmentation::new((0..=m).collect(), m, scorer.model().mpl())?;
        return Ok(Rescored {
            lm_log_prob: scorer.segmentation_score(sentence, &singles)?.log_prob,
            fallback: true,
        });
    }
    Ok(Rescored {
        lm_log_prob: scorer.sentence_prob(sentence, phrase_mode)?.log_prob,
        fallback: false,
    })
}

/// Selection scores: the LM score alone, or `alpha * decoder + (1 - alpha) *
/// lm` when `combine` is set.
pub fn selection_scores(
    nbest: &NBestList,
    rescored: &[Vec<Rescored>],
    combine: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    nbest
        .segments
        .iter()
        .zip(rescored)
        .map(|((_, entries), scores)| {
            entries
                .iter()
                .zip(scores)
                .map(|(e, s)| match combine {
                    None => Ok(s.lm_log_prob),
                    Some(alpha) => {
                        let d = e.decoder_score.ok_or_else(|| {
                            Error::InvalidArgument(format!(
                                "segment {} has an entry without a decoder score",
                                e.segment_id
                            ))
                        })?;
                        Ok(alpha * d + (1.0 - alpha) * s.lm_log_prob)
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub segment_id: u64,
    /// Position of the chosen entry in its segment.
    pub index: usize,
}

/// Highest-scoring entry per segment; the earlier entry wins a tie. Empty
/// segments are skipped.
pub fn select_best(nbest: &NBestList, scores: &[Vec<f64>]) -> Vec<Selection> {
    let mut out = Vec::with_capacity(nbest.len());
    for ((segment_id, entries), seg_scores) in nbest.segments.iter().zip(scores) {
        if entries.is_empty() {
            log::warn!("segment {segment_id} has no hypotheses, skipped");
            continue;
        }
        let mut best = 0;
        for (i, &s) in seg_scores.iter().enumerate().skip(1) {
            if s > seg_scores[best] {
                best = i;
            }
        }
        out.push(Selection {
            segment_id: *segment_id,
            index: best,
        });
    }
    out
}

/// The first entry of each non-empty segment.
pub fn select_first(nbest: &NBestList) -> Vec<Selection> {
    nbest
        .segments
        .iter()
        .filter(|(_, e)| !e.is_empty())
        .map(|(id, _)| Selection {
            segment_id: *id,
            index: 0,
        })
        .collect()
}

/// Hypotheses for the given selections, in order.
pub fn selected_hypotheses<'a>(
    nbest: &'a NBestList,
    selections: &[Selection],
) -> Vec<&'a [String]> {
    let by_id: BTreeMap<u64, &Vec<NBestEntry>> =
        nbest.segments.iter().map(|(id, e)| (*id, e)).collect();
    selections
        .iter()
        .map(|s| by_id[&s.segment_id][s.index].hypothesis.as_slice())
        .collect()
}
