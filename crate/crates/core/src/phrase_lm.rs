//! Phrase language models over sentence segmentations.
//!
//! A sentence of m words has K segmentations into phrases of at most `mpl`
//! words. Each segmentation is scored as a phrase n-gram chain of
//! interpolated probabilities, the first phrase conditioned on the
//! begin-of-sentence sentinel.
//!
//! * The sum model averages the chain probabilities of all K segmentations
//!   under a uniform prior 1/K.
//! * The max model keeps the single segmentation with the lowest
//!   per-phrase perplexity `P(S_i)^(-1/J_i)` and reports its chain
//!   probability without the prior.
//!
//! Segmentations are visited depth-first in lexicographic order of their
//! boundary vectors, which fixes the index `i0` and breaks ties in favour of
//! the earlier vector. Scoring enumerates every segmentation explicitly, so
//! sentences longer than a configured limit are refused.

use rayon::prelude::*;

use crate::corpus::{Corpus, Sentence, WordId};
use crate::counts::PhraseId;
use crate::error::{Error, Result};
use crate::logmath::{log10_sum_exp, perplexity};
use crate::smoothing::BackoffModel;

pub const DEFAULT_MAX_SENTENCE_LEN: usize = 20;

/// Boundary vector `0 = b[0] < b[1] < ... < b[J] = m`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segmentation {
    boundaries: Vec<usize>,
}

impl Segmentation {
    /// Checks that the boundaries partition `m` words into phrases of at
    /// most `mpl` words.
    pub fn new(boundaries: Vec<usize>, m: usize, mpl: usize) -> Result<Self> {
        if boundaries.first() != Some(&0) || boundaries.last() != Some(&m) {
            return Err(Error::Structural(format!(
                "boundaries {boundaries:?} must run from 0 to {m}"
            )));
        }
        for w in boundaries.windows(2) {
            if w[1] <= w[0] || w[1] - w[0] > mpl {
                return Err(Error::Structural(format!(
                    "boundaries {boundaries:?} need increasing steps of at most {mpl}"
                )));
            }
        }
        Ok(Segmentation { boundaries })
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Phrase count J.
    pub fn phrase_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn spans(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.boundaries.windows(2).map(|w| (w[0], w[1]))
    }
}

/// All segmentations of `m` words in lexicographic boundary order. An empty
/// sentence has one empty segmentation.
pub fn enumerate_segmentations(m: usize, mpl: usize) -> Vec<Segmentation> {
    assert!(mpl >= 1);
    fn walk(pos: usize, m: usize, mpl: usize, cur: &mut Vec<usize>, out: &mut Vec<Segmentation>) {
        if pos == m {
            out.push(Segmentation {
                boundaries: cur.clone(),
            });
            return;
        }
        for next in pos + 1..=(pos + mpl).min(m) {
            cur.push(next);
            walk(next, m, mpl, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    walk(0, m, mpl, &mut vec![0], &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhraseMode {
    Sum,
    Max,
}

/// How the max model picks its segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaxSelect {
    /// Lowest per-phrase perplexity.
    #[default]
    Perplexity,
    /// Highest raw chain probability.
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhraseScore {
    /// log10 of the chain probability.
    pub log_prob: f64,
    /// Phrase count J of the segmentation.
    pub phrases: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhraseSentenceResult {
    pub mode: PhraseMode,
    pub log_prob: f64,
    /// Number of segmentations K.
    pub segmentations: u64,
    /// J of the selected segmentation (max mode).
    pub best_phrases: Option<usize>,
    /// Index i0 of the selected segmentation (max mode).
    pub best_index: Option<u64>,
}

/// Sentence perplexity: per word for the sum model, per phrase of the
/// selected segmentation for the max model.
pub fn phrase_sentence_ppl(result: &PhraseSentenceResult, m: usize) -> Result<f64> {
    match result.mode {
        PhraseMode::Sum => {
            if m == 0 {
                return Err(Error::UndefinedPerplexity("sentence has no words"));
            }
            Ok(perplexity(result.log_prob, m as f64))
        }
        PhraseMode::Max => match result.best_phrases {
            Some(j) if j > 0 => Ok(perplexity(result.log_prob, j as f64)),
            _ => Err(Error::UndefinedPerplexity(
                "selected segmentation has no phrases",
            )),
        },
    }
}

/// Scores sentences against a phrase model.
#[derive(Debug, Clone, Copy)]
pub struct PhraseScorer<'m> {
    model: &'m BackoffModel,
    max_sentence_len: usize,
    select: MaxSelect,
}

struct Spans<'s> {
    words: &'s [WordId],
    ids: Vec<PhraseId>,
    mpl: usize,
}

impl Spans<'_> {
    fn id(&self, start: usize, len: usize) -> PhraseId {
        self.ids[start * self.mpl + len - 1]
    }
}

impl<'m> PhraseScorer<'m> {
    pub fn new(model: &'m BackoffModel) -> Self {
        PhraseScorer {
            model,
            max_sentence_len: DEFAULT_MAX_SENTENCE_LEN,
            select: MaxSelect::default(),
        }
    }

    pub fn with_max_sentence_len(mut self, max: usize) -> Self {
        self.max_sentence_len = max;
        self
    }

    pub fn with_selection(mut self, select: MaxSelect) -> Self {
        self.select = select;
        self
    }

    pub fn model(&self) -> &'m BackoffModel {
        self.model
    }

    pub fn max_sentence_len(&self) -> usize {
        self.max_sentence_len
    }

    fn history_len(&self) -> usize {
        self.model.max_order() - 1
    }

    fn spans<'s>(&self, sentence: &'s Sentence) -> Spans<'s> {
        let words = sentence.tokens();
        let mpl = self.model.mpl();
        let mut ids = Vec::with_capacity(words.len() * mpl);
        for start in 0..words.len() {
            for len in 1..=mpl {
                ids.push(if start + len <= words.len() {
                    self.model.phrase_id(&words[start..start + len])
                } else {
                    self.model.unk()
                });
            }
        }
        Spans { words, ids, mpl }
    }

    /// Chain log probability of one segmentation.
    pub fn segmentation_score(
        &self,
        sentence: &Sentence,
        seg: &Segmentation,
    ) -> Result<PhraseScore> {
        let m = sentence.len();
        let seg = Segmentation::new(seg.boundaries.clone(), m, self.model.mpl())?;
        let spans = self.spans(sentence);
        let keep = self.history_len();
        let mut history = vec![self.model.bos()];
        let mut log_prob = 0.0;
        for (start, end) in seg.spans() {
            let id = spans.id(start, end - start);
            let ctx = &history[history.len().saturating_sub(keep)..];
            log_prob += self
                .model
                .interpolated_log_prob_id(&spans.words[start..end], id, ctx);
            history.push(id);
        }
        Ok(PhraseScore {
            log_prob,
            phrases: seg.phrase_count(),
        })
    }

    fn check_length(&self, sentence: &Sentence) -> Result<()> {
        if sentence.len() > self.max_sentence_len {
            return Err(Error::SentenceTooLong {
                len: sentence.len(),
                max: self.max_sentence_len,
            });
        }
        Ok(())
    }

    /// Visits the chain score and phrase count of every segmentation in
    /// lexicographic order. Prefix sums are shared between segmentations but
    /// accumulated left to right, exactly as `segmentation_score` does.
    fn visit(&self, sentence: &Sentence, f: &mut dyn FnMut(f64, usize)) {
        let spans = self.spans(sentence);
        let mut history = Vec::with_capacity(sentence.len() + 1);
        history.push(self.model.bos());
        self.visit_from(&spans, 0, 0.0, &mut history, f);
    }

    fn visit_from(
        &self,
        spans: &Spans<'_>,
        pos: usize,
        acc: f64,
        history: &mut Vec<PhraseId>,
        f: &mut dyn FnMut(f64, usize),
    ) {
        let m = spans.words.len();
        if pos == m {
            f(acc, history.len() - 1);
            return;
        }
        let keep = self.history_len();
        for len in 1..=spans.mpl.min(m - pos) {
            let id = spans.id(pos, len);
            let ctx = &history[history.len().saturating_sub(keep)..];
            let term = self
                .model
                .interpolated_log_prob_id(&spans.words[pos..pos + len], id, ctx);
            history.push(id);
            self.visit_from(spans, pos + len, acc + term, history, f);
            history.pop();
        }
    }

    /// log10 of (1/K) * sum over segmentations of the chain probability.
    pub fn sum_model_prob(&self, sentence: &Sentence) -> Result<PhraseSentenceResult> {
        self.check_length(sentence)?;
        let mut scores = Vec::new();
        self.visit(sentence, &mut |lp, _| scores.push(lp));
        let k = scores.len() as u64;
        Ok(PhraseSentenceResult {
            mode: PhraseMode::Sum,
            log_prob: log10_sum_exp(&scores) - (k as f64).log10(),
            segmentations: k,
            best_phrases: None,
            best_index: None,
        })
    }

    /// Chain log probability of the selected segmentation.
    pub fn max_model_prob(&self, sentence: &Sentence) -> Result<PhraseSentenceResult> {
        self.check_length(sentence)?;
        let select = self.select;
        let mut k = 0u64;
        let mut best: Option<(f64, f64, usize, u64)> = None;
        self.visit(sentence, &mut |lp, j| {
            let key = match select {
                MaxSelect::Perplexity if j > 0 => lp / j as f64,
                _ => lp,
            };
            if best.is_none_or(|(b, ..)| key > b) {
                best = Some((key, lp, j, k));
            }
            k += 1;
        });
        let (_, log_prob, j, index) = best.expect("at least one segmentation");
        Ok(PhraseSentenceResult {
            mode: PhraseMode::Max,
            log_prob,
            segmentations: k,
            best_phrases: Some(j),
            best_index: Some(index),
        })
    }

    pub fn sentence_prob(
        &self,
        sentence: &Sentence,
        mode: PhraseMode,
    ) -> Result<PhraseSentenceResult> {
        match mode {
            PhraseMode::Sum => self.sum_model_prob(sentence),
            PhraseMode::Max => self.max_model_prob(sentence),
        }
    }

    /// Per-sentence results in corpus order, computed in parallel.
    pub fn corpus_results(
        &self,
        corpus: &Corpus,
        mode: PhraseMode,
    ) -> Result<Vec<PhraseSentenceResult>> {
        corpus
            .sentences()
            .par_iter()
            .map(|s| self.sentence_prob(s, mode))
            .collect()
    }

    /// Text perplexity. The sum model divides by the word count N; the max
    /// model by N_0, the total phrase count of the selected segmentations.
    pub fn text_ppl(&self, corpus: &Corpus, mode: PhraseMode) -> Result<f64> {
        if corpus.word_count() == 0 {
            return Err(Error::UndefinedPerplexity("text has no words"));
        }
        let results = self.corpus_results(corpus, mode)?;
        Ok(text_ppl_from_results(&results, corpus.word_count()))
    }
}

/// Combines per-sentence results into a text perplexity.
pub fn text_ppl_from_results(results: &[PhraseSentenceResult], word_count: usize) -> f64 {
    let total: f64 = results.iter().map(|r| r.log_prob).sum();
    let units = match results.first().map(|r| r.mode) {
        Some(PhraseMode::Max) => results.iter().map(|r| r.best_phrases.unwrap_or(0)).sum(),
        _ => word_count,
    };
    perplexity(total, units as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, map_with_unk, tokenize};
    use crate::counts::{count_phrase_ngrams, count_word_ngrams};
    use crate::smoothing::{build_backoff_model, BuildOptions};
    use crate::word_lm::word_sentence_logprob;

    fn train(lines: &[&str], order: usize, mpl: usize, lambda: f64) -> BackoffModel {
        let toks: Vec<Vec<&str>> = lines.iter().map(|l| tokenize(l)).collect();
        let vocab = build_vocabulary(&toks);
        let corpus = Corpus::from_tokens(&vocab, &toks);
        let table = if mpl == 1 {
            count_word_ngrams(&corpus, &vocab, order)
        } else {
            count_phrase_ngrams(&corpus, &vocab, order, mpl)
        };
        let options = BuildOptions {
            lambda,
            ..BuildOptions::default()
        };
        build_backoff_model(&table, &vocab, &options).unwrap()
    }

    const LINES: [&str; 4] = ["a b c", "a b", "c a b", "b c c a"];

    fn sentence(m: &BackoffModel, text: &str) -> Sentence {
        map_with_unk(m.vocab(), &tokenize(text))
    }

    #[test]
    fn segmentation_counts() {
        assert_eq!(enumerate_segmentations(1, 3).len(), 1);
        assert_eq!(enumerate_segmentations(4, 3).len(), 7);
        assert_eq!(enumerate_segmentations(2, 1).len(), 1);
        assert_eq!(enumerate_segmentations(0, 3).len(), 1);
        let segs: Vec<Vec<usize>> = enumerate_segmentations(3, 3)
            .into_iter()
            .map(|s| s.boundaries().to_vec())
            .collect();
        assert_eq!(
            segs,
            vec![vec![0, 1, 2, 3], vec![0, 1, 3], vec![0, 2, 3], vec![0, 3]]
        );
    }

    #[test]
    fn segmentation_validation() {
        assert!(Segmentation::new(vec![0, 4], 4, 3).is_err());
        assert!(Segmentation::new(vec![0, 1, 1, 3], 3, 3).is_err());
        assert!(Segmentation::new(vec![0, 2], 3, 3).is_err());
        let m = train(&LINES, 2, 3, 0.43);
        let s = sentence(&m, "a b c");
        let bad = Segmentation {
            boundaries: vec![0, 2],
        };
        assert!(matches!(
            PhraseScorer::new(&m).segmentation_score(&s, &bad),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn singletons_match_word_model() {
        let m = train(&LINES, 3, 1, 1.0);
        let scorer = PhraseScorer::new(&m);
        let s = sentence(&m, "b c a b");
        let seg = Segmentation::new(vec![0, 1, 2, 3, 4], 4, 1).unwrap();
        let phrase = scorer.segmentation_score(&s, &seg).unwrap();
        let word = word_sentence_logprob(&m, &s).unwrap();
        assert_eq!(phrase.log_prob, word.log_prob);
        assert_eq!(scorer.sum_model_prob(&s).unwrap().log_prob, word.log_prob);
        assert_eq!(scorer.max_model_prob(&s).unwrap().log_prob, word.log_prob);
    }

    #[test]
    fn whole_sentence_phrase() {
        let m = train(&LINES, 2, 3, 0.43);
        let s = sentence(&m, "a b c");
        let seg = Segmentation::new(vec![0, 3], 3, 3).unwrap();
        let score = PhraseScorer::new(&m).segmentation_score(&s, &seg).unwrap();
        let expect = m.interpolated_log_prob(s.tokens(), &[m.bos()]);
        assert_eq!(score.log_prob, expect);
        assert_eq!(score.phrases, 1);
    }

    #[test]
    fn single_word_sentence() {
        let m = train(&LINES, 2, 3, 0.43);
        let scorer = PhraseScorer::new(&m);
        let s = sentence(&m, "c");
        let seg = Segmentation::new(vec![0, 1], 1, 3).unwrap();
        let only = scorer.segmentation_score(&s, &seg).unwrap().log_prob;
        let sum = scorer.sum_model_prob(&s).unwrap();
        assert_eq!(sum.log_prob, only);
        assert_eq!(sum.segmentations, 1);
        let max = scorer.max_model_prob(&s).unwrap();
        assert_eq!(max.best_index, Some(0));
        assert_eq!(max.best_phrases, Some(1));
    }

    #[test]
    fn sum_agrees_with_each_segmentation() {
        let m = train(&LINES, 3, 3, 0.43);
        let scorer = PhraseScorer::new(&m);
        let s = sentence(&m, "a b c");
        let probs: Vec<f64> = enumerate_segmentations(3, 3)
            .iter()
            .map(|seg| 10f64.powf(scorer.segmentation_score(&s, seg).unwrap().log_prob))
            .collect();
        let expect = (probs.iter().sum::<f64>() / 4.0).log10();
        let got = scorer.sum_model_prob(&s).unwrap();
        assert_eq!(got.segmentations, 4);
        assert!((got.log_prob - expect).abs() < 1e-12);
        let max_prob = probs.iter().copied().fold(0.0, f64::max);
        let p = 10f64.powf(got.log_prob);
        assert!(p <= max_prob && p >= max_prob / 4.0);
    }

    #[test]
    fn max_select_modes() {
        let m = train(&LINES, 2, 3, 0.43);
        let s = sentence(&m, "b c c a");
        let segs = enumerate_segmentations(4, 3);
        let scorer = PhraseScorer::new(&m);
        let scores: Vec<PhraseScore> = segs
            .iter()
            .map(|seg| scorer.segmentation_score(&s, seg).unwrap())
            .collect();
        let by_ppl = scorer.max_model_prob(&s).unwrap();
        let i = by_ppl.best_index.unwrap() as usize;
        for sc in &scores {
            assert!(
                sc.log_prob / sc.phrases as f64 <= scores[i].log_prob / scores[i].phrases as f64
            );
        }
        let by_prob = scorer
            .with_selection(MaxSelect::Probability)
            .max_model_prob(&s)
            .unwrap();
        let j = by_prob.best_index.unwrap() as usize;
        for sc in &scores {
            assert!(sc.log_prob <= scores[j].log_prob);
        }
    }

    #[test]
    fn length_limit() {
        let m = train(&LINES, 2, 3, 0.43);
        let s = sentence(&m, "a b c a b c");
        let scorer = PhraseScorer::new(&m).with_max_sentence_len(5);
        assert!(matches!(
            scorer.sum_model_prob(&s),
            Err(Error::SentenceTooLong { len: 6, max: 5 })
        ));
        assert!(scorer.max_model_prob(&s).is_err());
    }

    #[test]
    fn sentence_ppl_definitions() {
        let sum = PhraseSentenceResult {
            mode: PhraseMode::Sum,
            log_prob: -3.0,
            segmentations: 4,
            best_phrases: None,
            best_index: None,
        };
        assert!((phrase_sentence_ppl(&sum, 3).unwrap() - 10.0).abs() < 1e-12);
        assert!(phrase_sentence_ppl(&sum, 0).is_err());
        let max = PhraseSentenceResult {
            mode: PhraseMode::Max,
            log_prob: -0.5,
            segmentations: 4,
            best_phrases: Some(1),
            best_index: Some(3),
        };
        assert!((phrase_sentence_ppl(&max, 3).unwrap() - 10f64.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn text_ppl_duplication_and_single() {
        let m = train(&LINES, 3, 3, 0.43);
        let scorer = PhraseScorer::new(&m);
        let c = Corpus::new(vec![sentence(&m, "a b c"), sentence(&m, "c a")]);
        for mode in [PhraseMode::Sum, PhraseMode::Max] {
            let once = scorer.text_ppl(&c, mode).unwrap();
            let twice = scorer.text_ppl(&c.concat(&c), mode).unwrap();
            assert!((once - twice).abs() <= 1e-12 * once);
        }
        let single = Corpus::new(vec![sentence(&m, "a b c")]);
        let r = scorer.max_model_prob(&single.sentences()[0]).unwrap();
        let expect = phrase_sentence_ppl(&r, 3).unwrap();
        assert!((scorer.text_ppl(&single, PhraseMode::Max).unwrap() - expect).abs() < 1e-12);
        assert!(scorer
            .text_ppl(&Corpus::default(), PhraseMode::Sum)
            .is_err());
    }

    #[test]
    fn max_text_ppl_counts_selected_phrases() {
        let m = train(&LINES, 2, 3, 0.43);
        let scorer = PhraseScorer::new(&m);
        let c = Corpus::new(vec![sentence(&m, "a b c"), sentence(&m, "b c c a")]);
        let r: Vec<_> = c
            .sentences()
            .iter()
            .map(|s| scorer.max_model_prob(s).unwrap())
            .collect();
        let n0 = r[0].best_phrases.unwrap() + r[1].best_phrases.unwrap();
        let expect = 10f64.powf(-(r[0].log_prob + r[1].log_prob) / n0 as f64);
        assert!((scorer.text_ppl(&c, PhraseMode::Max).unwrap() - expect).abs() < 1e-9);
    }
}
