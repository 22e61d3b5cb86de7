//! Katz backoff over Good-Turing discounted counts, and the interpolation of
//! phrase probabilities with products of single-word probabilities.
//!
//! For an n-gram `h w` seen in training
//!
//! ```text
//! alpha(w | h) = C*(h w) / C(h)
//! ```
//!
//! and an unseen one backs off: `P(w | h) = d(h) * P(w | h[1..])`. The
//! denominator C(h) is the larger of the context's own count and the sum of
//! its continuation counts; in phrase mode one context occurrence can be
//! followed by up to `mpl` different phrases. By default `d(h)` spreads the
//! left-over mass over the lower-order probabilities of unseen continuations
//! only, so every context distribution sums to one. With
//! [`Backoff::Unnormalized`] it is the bare left-over mass `1 - sum alpha`.
//!
//! All probabilities are stored as log10 values.

mod good_turing;
mod model_file;

use std::collections::HashMap;

use crate::corpus::{Vocabulary, WordId};
use crate::counts::{counts_of_counts, CountTable, PhraseId, PhraseLexicon};
use crate::error::{Error, Result};
use crate::logmath::log10_add;

pub use good_turing::{
    good_turing_adjust, reserved_unseen_mass, turing_estimate, DiscountTable, DEFAULT_GT_MAX,
};
pub use model_file::{read_model, write_model};

/// Interpolation weight of the phrase probability against the word product.
pub const DEFAULT_LAMBDA: f64 = 0.43;

/// Placeholder log10 probability of the begin-of-sentence sentinel, which is
/// never predicted.
pub const BOS_LOG_PROB: f64 = -99.0;

/// A context whose continuations already take all of its mass reserves this
/// much for unseen ones by scaling the seen alphas.
const EXHAUSTED_MASS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMode {
    Word,
    Phrase,
}

impl ModelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelMode::Word => "word",
            ModelMode::Phrase => "phrase",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backoff {
    /// d(h) = (1 - sum of seen alpha) / (1 - sum of their lower-order probs).
    #[default]
    Normalized,
    /// d(h) = 1 - sum of seen alpha.
    Unnormalized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub lambda: f64,
    pub gt_max: u64,
    pub backoff: Backoff,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            lambda: DEFAULT_LAMBDA,
            gt_max: DEFAULT_GT_MAX,
            backoff: Backoff::Normalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramEntry {
    pub log_prob: f64,
    pub log_backoff: Option<f64>,
}

type OrderMap = HashMap<Box<[PhraseId]>, NgramEntry>;

#[derive(Debug, Clone, PartialEq)]
pub struct BackoffModel {
    mode: ModelMode,
    mpl: usize,
    lambda: f64,
    vocab: Vocabulary,
    lexicon: PhraseLexicon,
    orders: Vec<OrderMap>,
    bos: PhraseId,
    unk: PhraseId,
    unk_log_prob: f64,
    // log10 P_uni of each single word, indexed by word id
    word_log_probs: Vec<f64>,
    // log10 of the sum of single-word unigram probabilities
    log_word_mass: f64,
}

/// Trains a backoff model from counts.
pub fn build_backoff_model(
    table: &CountTable,
    vocab: &Vocabulary,
    options: &BuildOptions,
) -> Result<BackoffModel> {
    if !(0.0..=1.0).contains(&options.lambda) {
        return Err(Error::InvalidArgument(format!(
            "lambda must lie in [0, 1], got {}",
            options.lambda
        )));
    }
    if table.is_empty() {
        return Err(Error::CannotTrain("no order-1 counts"));
    }
    let bos = table.bos();
    let unk = table.lexicon().single(vocab.unk_id());
    let mut model = BackoffModel {
        mode: if table.mpl() == 1 {
            ModelMode::Word
        } else {
            ModelMode::Phrase
        },
        mpl: table.mpl(),
        lambda: options.lambda,
        vocab: vocab.clone(),
        lexicon: table.lexicon().clone(),
        orders: Vec::with_capacity(table.max_order()),
        bos,
        unk,
        unk_log_prob: f64::NEG_INFINITY,
        word_log_probs: Vec::new(),
        log_word_mass: 0.0,
    };

    model.orders.push(unigram_level(table, options.gt_max));
    model.refresh_caches();

    for order in 2..=table.max_order() {
        let coc = counts_of_counts(table, order);
        let discounts = DiscountTable::new(&coc, options.gt_max);
        let mut entries = OrderMap::new();
        let mut backoffs: Vec<(Box<[PhraseId]>, f64)> = Vec::new();

        table.root().walk_depth(order - 1, &mut |context, node| {
            if node.children.is_empty() {
                return;
            }
            let continuation: u64 = node.children.values().map(|c| c.count).sum();
            let denominator = node.count.max(continuation) as f64;
            let mut alphas: Vec<(PhraseId, f64)> = node
                .children
                .iter()
                .map(|(&id, child)| (id, discounts.adjust(child.count) / denominator))
                .collect();
            let seen: f64 = alphas.iter().map(|a| a.1).sum();
            let lower: f64 = alphas
                .iter()
                .map(|&(id, _)| 10f64.powf(model.backoff_log_prob(id, &context[1..])))
                .sum();

            let weight = if lower >= 1.0 - 1e-12 {
                // every predictable item is a seen continuation
                for a in &mut alphas {
                    a.1 /= seen;
                }
                1.0
            } else {
                let mut leftover = 1.0 - seen;
                if leftover < EXHAUSTED_MASS {
                    leftover = discounts.unseen_mass();
                    let scale = (1.0 - leftover) / seen;
                    for a in &mut alphas {
                        a.1 *= scale;
                    }
                }
                match options.backoff {
                    Backoff::Normalized => leftover / (1.0 - lower),
                    Backoff::Unnormalized => leftover,
                }
            };

            let mut key = context.to_vec();
            for (id, alpha) in alphas {
                key.push(id);
                entries.insert(
                    key.clone().into_boxed_slice(),
                    NgramEntry {
                        log_prob: alpha.log10(),
                        log_backoff: None,
                    },
                );
                key.pop();
            }
            backoffs.push((context.into(), weight.log10()));
        });

        let lower_map = &mut model.orders[order - 2];
        for (context, log_weight) in backoffs {
            lower_map
                .get_mut(&context)
                .expect("context of a stored n-gram is stored")
                .log_backoff = Some(log_weight);
        }
        model.orders.push(entries);
    }
    Ok(model)
}

/// Unigram distribution: discounted counts renormalized to the mass left
/// after reserving N_1 / N0 for unk.
fn unigram_level(table: &CountTable, gt_max: u64) -> OrderMap {
    let coc = counts_of_counts(table, 1);
    let discounts = DiscountTable::new(&coc, gt_max);
    let unk_mass = discounts.unseen_mass();
    let bos = table.bos();
    let unk = PhraseId(1);

    let mut adjusted = Vec::new();
    table.for_each_ngram(1, |key, count| {
        if key[0] != bos {
            adjusted.push((key[0], discounts.adjust(count)));
        }
    });
    let total: f64 = adjusted.iter().map(|a| a.1).sum();

    let mut map = OrderMap::new();
    let mut unk_prob = unk_mass;
    for (id, c) in adjusted {
        let p = (1.0 - unk_mass) * c / total;
        if id == unk {
            unk_prob += p;
        } else {
            map.insert(
                Box::new([id]),
                NgramEntry {
                    log_prob: p.log10(),
                    log_backoff: None,
                },
            );
        }
    }
    map.insert(
        Box::new([unk]),
        NgramEntry {
            log_prob: unk_prob.log10(),
            log_backoff: None,
        },
    );
    map.insert(
        Box::new([bos]),
        NgramEntry {
            log_prob: BOS_LOG_PROB,
            log_backoff: None,
        },
    );
    map
}

impl BackoffModel {
    pub(crate) fn from_parts(
        mpl: usize,
        lambda: f64,
        vocab: Vocabulary,
        lexicon: PhraseLexicon,
        orders: Vec<OrderMap>,
    ) -> Self {
        let mut model = BackoffModel {
            mode: if mpl == 1 {
                ModelMode::Word
            } else {
                ModelMode::Phrase
            },
            mpl,
            lambda,
            bos: PhraseId(vocab.bos_id().0),
            unk: PhraseId(vocab.unk_id().0),
            vocab,
            lexicon,
            orders,
            unk_log_prob: f64::NEG_INFINITY,
            word_log_probs: Vec::new(),
            log_word_mass: 0.0,
        };
        model.refresh_caches();
        model
    }

    fn refresh_caches(&mut self) {
        let unigrams = &self.orders[0];
        self.unk_log_prob = unigrams
            .get(&[self.unk][..])
            .map_or(f64::NEG_INFINITY, |e| e.log_prob);
        self.word_log_probs = self
            .vocab
            .ids()
            .map(|w| {
                if w == self.vocab.bos_id() {
                    f64::NEG_INFINITY
                } else {
                    unigrams
                        .get(&[PhraseId(w.0)][..])
                        .map_or(self.unk_log_prob, |e| e.log_prob)
                }
            })
            .collect();
        let mass: f64 = self
            .vocab
            .ids()
            .filter(|&w| w != self.vocab.bos_id())
            .filter(|&w| unigrams.contains_key(&[PhraseId(w.0)][..]))
            .map(|w| 10f64.powf(self.word_log_probs[w.index()]))
            .sum();
        self.log_word_mass = mass.log10();
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn mpl(&self) -> usize {
        self.mpl
    }

    pub fn max_order(&self) -> usize {
        self.orders.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Changes the interpolation weight used for phrase queries.
    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        self.lambda = lambda;
        Ok(())
    }

    /// Drops every order above `order`.
    pub fn truncate(&mut self, order: usize) {
        assert!(order >= 1);
        self.orders.truncate(order);
        if let Some(top) = self.orders.last_mut() {
            for e in top.values_mut() {
                e.log_backoff = None;
            }
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn lexicon(&self) -> &PhraseLexicon {
        &self.lexicon
    }

    pub fn bos(&self) -> PhraseId {
        self.bos
    }

    pub fn unk(&self) -> PhraseId {
        self.unk
    }

    pub fn entry(&self, ngram: &[PhraseId]) -> Option<&NgramEntry> {
        if ngram.is_empty() || ngram.len() > self.orders.len() {
            return None;
        }
        self.orders[ngram.len() - 1].get(ngram)
    }

    /// Number of stored n-grams at each order.
    pub fn ngram_counts(&self) -> Vec<usize> {
        self.orders.iter().map(HashMap::len).collect()
    }

    /// Items the model predicts: every stored unigram except the sentinel.
    /// Unknown words and unseen phrases all fall onto unk.
    pub fn prediction_space(&self) -> Vec<PhraseId> {
        let mut items: Vec<PhraseId> = self.orders[0]
            .keys()
            .map(|k| k[0])
            .filter(|&id| id != self.bos)
            .collect();
        items.sort_unstable();
        items
    }

    /// Contexts of `order` that carry a backoff weight, sorted.
    pub fn contexts(&self, order: usize) -> Vec<Vec<PhraseId>> {
        let mut out: Vec<Vec<PhraseId>> = self.orders[order - 1]
            .iter()
            .filter(|(_, e)| e.log_backoff.is_some())
            .map(|(k, _)| k.to_vec())
            .collect();
        out.sort_unstable();
        out
    }

    pub(crate) fn orders(&self) -> &[OrderMap] {
        &self.orders
    }

    /// Phrase id of a word sequence, unk when the phrase was never seen.
    pub fn phrase_id(&self, words: &[WordId]) -> PhraseId {
        match self.lexicon.get(words) {
            Some(id) if self.orders[0].contains_key(&[id][..]) => id,
            _ => self.unk,
        }
    }

    /// log10 P_BO(item | context). Only the last `max_order - 1` context
    /// items are used.
    pub fn backoff_log_prob(&self, item: PhraseId, context: &[PhraseId]) -> f64 {
        let keep = context.len().min(self.orders.len() - 1);
        let context = &context[context.len() - keep..];
        let mut key = Vec::with_capacity(keep + 1);
        key.extend_from_slice(context);
        key.push(item);

        let mut acc = 0.0;
        for start in 0..=keep {
            let ngram = &key[start..];
            if let Some(e) = self.orders[ngram.len() - 1].get(ngram) {
                return acc + e.log_prob;
            }
            if start < keep {
                let ctx = &context[start..];
                if let Some(w) = self.orders[ctx.len() - 1]
                    .get(ctx)
                    .and_then(|e| e.log_backoff)
                {
                    acc += w;
                }
            }
        }
        acc + self.unk_log_prob
    }

    /// P_BO(item | context) for a word sequence item.
    pub fn backoff_prob(&self, item: &[WordId], context: &[PhraseId]) -> f64 {
        10f64.powf(self.backoff_log_prob(self.phrase_id(item), context))
    }

    /// log10 P_uni(w) of a single word.
    pub fn word_log_prob(&self, word: WordId) -> f64 {
        self.word_log_probs
            .get(word.index())
            .copied()
            .unwrap_or(self.unk_log_prob)
    }

    /// log10 of the summed single-word unigram probabilities, unk included.
    pub fn log_word_mass(&self) -> f64 {
        self.log_word_mass
    }

    /// log10 of prod P_uni(w_i) / (sum_w P_uni(w))^k over the phrase's words.
    pub fn word_product_log_prob(&self, phrase: &[WordId]) -> f64 {
        let product: f64 = phrase.iter().map(|&w| self.word_log_prob(w)).sum();
        product - phrase.len() as f64 * self.log_word_mass
    }

    /// log10 P*(phrase | context) = log10(lambda P_BO + (1 - lambda) word
    /// product), using the model's current lambda.
    pub fn interpolated_log_prob(&self, phrase: &[WordId], context: &[PhraseId]) -> f64 {
        self.interpolated_log_prob_id(phrase, self.phrase_id(phrase), context)
    }

    pub(crate) fn interpolated_log_prob_id(
        &self,
        phrase: &[WordId],
        id: PhraseId,
        context: &[PhraseId],
    ) -> f64 {
        let lambda = self.lambda;
        if lambda == 1.0 {
            return self.backoff_log_prob(id, context);
        }
        let words = self.word_product_log_prob(phrase);
        if lambda == 0.0 {
            return words;
        }
        log10_add(
            lambda.log10() + self.backoff_log_prob(id, context),
            (1.0 - lambda).log10() + words,
        )
    }

    /// P*(phrase | context) as a probability.
    pub fn interpolate_phrase_prob(&self, phrase: &[WordId], context: &[PhraseId]) -> f64 {
        10f64.powf(self.interpolated_log_prob(phrase, context))
    }
}
