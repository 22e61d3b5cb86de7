//! Word n-gram scoring: the sentence probability is the product of each
//! word's backoff probability given at most n-1 previous words, with the
//! begin-of-sentence sentinel as the first word's only history.

use rayon::prelude::*;

use crate::corpus::{Corpus, Sentence};
use crate::counts::PhraseId;
use crate::error::{Error, Result};
use crate::logmath::perplexity;
use crate::smoothing::{BackoffModel, ModelMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSentence {
    /// log10 P(w_1^m).
    pub log_prob: f64,
    pub token_count: usize,
}

pub fn check_word_model(model: &BackoffModel) -> Result<()> {
    if model.mode() != ModelMode::Word {
        return Err(Error::ModeMismatch(format!(
            "word scoring needs a word model, this one has mpl {}",
            model.mpl()
        )));
    }
    Ok(())
}

pub fn word_sentence_logprob(model: &BackoffModel, sentence: &Sentence) -> Result<ScoredSentence> {
    check_word_model(model)?;
    Ok(score_words(model, sentence))
}

pub(crate) fn score_words(model: &BackoffModel, sentence: &Sentence) -> ScoredSentence {
    let history = model.max_order() - 1;
    let mut ids: Vec<PhraseId> = Vec::with_capacity(sentence.len() + 1);
    ids.push(model.bos());
    ids.extend(sentence.tokens().iter().map(|&w| model.phrase_id(&[w])));
    let mut log_prob = 0.0;
    for i in 1..ids.len() {
        let start = i.saturating_sub(history);
        log_prob += model.backoff_log_prob(ids[i], &ids[start..i]);
    }
    ScoredSentence {
        log_prob,
        token_count: sentence.len(),
    }
}

/// P^(-1/m).
pub fn word_sentence_ppl(scored: &ScoredSentence) -> Result<f64> {
    if scored.token_count == 0 {
        return Err(Error::UndefinedPerplexity("sentence has no words"));
    }
    Ok(perplexity(scored.log_prob, scored.token_count as f64))
}

/// log10 probability of every sentence, in corpus order.
pub fn word_corpus_logprobs(model: &BackoffModel, corpus: &Corpus) -> Result<Vec<f64>> {
    check_word_model(model)?;
    Ok(corpus
        .sentences()
        .par_iter()
        .map(|s| score_words(model, s).log_prob)
        .collect())
}

/// (prod P(s_i))^(-1/N) with N the corpus word count.
pub fn word_text_ppl(model: &BackoffModel, corpus: &Corpus) -> Result<f64> {
    if corpus.word_count() == 0 {
        return Err(Error::UndefinedPerplexity("text has no words"));
    }
    let total: f64 = word_corpus_logprobs(model, corpus)?.iter().sum();
    Ok(perplexity(total, corpus.word_count() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, map_with_unk, tokenize};
    use crate::counts::count_word_ngrams;
    use crate::smoothing::{build_backoff_model, read_model, BuildOptions};

    fn train(lines: &[&str], order: usize) -> BackoffModel {
        let toks: Vec<Vec<&str>> = lines.iter().map(|l| tokenize(l)).collect();
        let vocab = build_vocabulary(&toks);
        let corpus = Corpus::from_tokens(&vocab, &toks);
        let table = count_word_ngrams(&corpus, &vocab, order);
        build_backoff_model(&table, &vocab, &BuildOptions::default()).unwrap()
    }

    fn sentence(model: &BackoffModel, text: &str) -> Sentence {
        map_with_unk(model.vocab(), &tokenize(text))
    }

    #[test]
    fn bigram_unrolls() {
        let m = train(&["a b a c", "b c a"], 2);
        let s = sentence(&m, "a b");
        let a = PhraseId(m.vocab().get("a").unwrap().0);
        let b = PhraseId(m.vocab().get("b").unwrap().0);
        let expect = m.backoff_log_prob(a, &[m.bos()]) + m.backoff_log_prob(b, &[a]);
        assert_eq!(word_sentence_logprob(&m, &s).unwrap().log_prob, expect);
    }

    #[test]
    fn unigram_is_order_free() {
        let m = train(&["a b a c", "b c a"], 1);
        let x = word_sentence_logprob(&m, &sentence(&m, "a b c")).unwrap();
        let y = word_sentence_logprob(&m, &sentence(&m, "c a b")).unwrap();
        assert!((x.log_prob - y.log_prob).abs() < 1e-12);
    }

    #[test]
    fn golden_sentence() {
        // from the smoothing golden model: P(a|<s>) = 1/2, P(b|a) = 1/6
        let m = train(&["a a a b"], 2);
        let s = word_sentence_logprob(&m, &sentence(&m, "a b")).unwrap();
        assert!((s.log_prob - (1.0f64 / 12.0).log10()).abs() < 1e-12);
        let ppl = word_sentence_ppl(&s).unwrap();
        assert!((ppl - 12f64.sqrt()).abs() < 1e-9);
        // text: "a b" and "a", P(a|<s>) = 1/2 again, N = 3
        let c = Corpus::new(vec![sentence(&m, "a b"), sentence(&m, "a")]);
        let text = word_text_ppl(&m, &c).unwrap();
        assert!((text - 24f64.powf(1.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn ppl_identities() {
        let s = ScoredSentence {
            log_prob: -4.0,
            token_count: 4,
        };
        assert!((word_sentence_ppl(&s).unwrap() - 10.0).abs() < 1e-12);
        let empty = ScoredSentence {
            log_prob: 0.0,
            token_count: 0,
        };
        assert!(word_sentence_ppl(&empty).is_err());
    }

    #[test]
    fn uniform_model_ppl_is_vocab_size() {
        let lp = (0.25f64).log10();
        let text = format!(
            "\\order 1\n\\mpl 1\n\\lambda 1\n\\mode word\n\n\\1-grams:\n-99\t<s>\n{lp}\t<unk>\n{lp}\tx\n{lp}\ty\n{lp}\tz\n"
        );
        let m = read_model(text.as_bytes()).unwrap();
        let c = Corpus::new(vec![sentence(&m, "x y z q"), sentence(&m, "z z")]);
        assert!((word_text_ppl(&m, &c).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn single_sentence_text_matches_sentence() {
        let m = train(&["a b a c", "b c a"], 3);
        let s = sentence(&m, "c a b a");
        let c = Corpus::new(vec![s.clone()]);
        let one = word_sentence_ppl(&word_sentence_logprob(&m, &s).unwrap()).unwrap();
        assert!((word_text_ppl(&m, &c).unwrap() - one).abs() < 1e-12);
        let twice = c.concat(&c);
        assert!((word_text_ppl(&m, &twice).unwrap() - one).abs() < 1e-12);
        assert!(word_text_ppl(&m, &Corpus::default()).is_err());
    }

    #[test]
    fn rejects_phrase_model() {
        let toks = vec![tokenize("a b")];
        let vocab = build_vocabulary(&toks);
        let corpus = Corpus::from_tokens(&vocab, &toks);
        let table = crate::counts::count_phrase_ngrams(&corpus, &vocab, 2, 2);
        let m = build_backoff_model(&table, &vocab, &BuildOptions::default()).unwrap();
        assert!(matches!(
            word_sentence_logprob(&m, &Sentence::default()),
            Err(Error::ModeMismatch(_))
        ));
    }
}
