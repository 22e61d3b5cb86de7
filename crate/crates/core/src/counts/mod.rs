//! Word and phrase n-gram counting.
//!
//! Every n-gram is a sequence of phrase ids. Phrases are interned into a
//! [`PhraseLexicon`] whose first entries are the single-word phrases, one per
//! vocabulary id, so a word n-gram table is exactly a phrase table with a
//! maximum phrase length of one.
//!
//! The begin-of-sentence sentinel is a one-word phrase that only ever
//! appears first: it is counted once per sentence as a unigram and then
//! prefixes the n-grams that start at the first word.

mod enumerate;
mod trie;

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use rayon::prelude::*;

use crate::corpus::{Corpus, Sentence, Vocabulary, WordId};

pub use enumerate::{enumerate_phrase_kgrams, BoundaryTuples, PhraseKGram};
pub use trie::TrieNode;

/// Separates phrases inside one n-gram field of the dump and model formats.
pub const PHRASE_SEPARATOR: char = '\u{1f}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhraseId(pub u32);

impl PhraseId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseLexicon {
    phrases: Vec<Box<[WordId]>>,
    index: HashMap<Box<[WordId]>, PhraseId>,
    single_words: usize,
}

impl PhraseLexicon {
    /// A lexicon pre-populated with one single-word phrase per vocabulary id,
    /// so that `PhraseId(w) == WordId(w)` for single words.
    pub fn with_words(vocab_len: usize) -> Self {
        let mut lexicon = PhraseLexicon {
            phrases: Vec::with_capacity(vocab_len),
            index: HashMap::new(),
            single_words: vocab_len,
        };
        for w in 0..vocab_len as u32 {
            let key: Box<[WordId]> = Box::new([WordId(w)]);
            lexicon.index.insert(key.clone(), PhraseId(w));
            lexicon.phrases.push(key);
        }
        lexicon
    }

    pub fn intern(&mut self, words: &[WordId]) -> PhraseId {
        if let Some(id) = self.get(words) {
            return id;
        }
        let id = PhraseId(self.phrases.len() as u32);
        let key: Box<[WordId]> = words.into();
        self.index.insert(key.clone(), id);
        self.phrases.push(key);
        id
    }

    pub fn get(&self, words: &[WordId]) -> Option<PhraseId> {
        if let [w] = words {
            if w.index() < self.single_words {
                return Some(PhraseId(w.0));
            }
        }
        self.index.get(words).copied()
    }

    pub fn words(&self, id: PhraseId) -> &[WordId] {
        &self.phrases[id.index()]
    }

    pub fn single(&self, word: WordId) -> PhraseId {
        debug_assert!(word.index() < self.single_words);
        PhraseId(word.0)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Space-joined spelling of a phrase.
    pub fn spell(&self, id: PhraseId, vocab: &Vocabulary) -> String {
        let words: Vec<&str> = self.words(id).iter().map(|&w| vocab.word(w)).collect();
        words.join(" ")
    }
}

/// Order-stratified n-gram counts stored in a trie keyed by phrase ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    root: TrieNode,
    lexicon: PhraseLexicon,
    max_order: usize,
    mpl: usize,
    bos: PhraseId,
}

impl CountTable {
    pub fn new(vocab: &Vocabulary, max_order: usize, mpl: usize) -> Self {
        assert!(max_order >= 1, "max_order must be at least 1");
        assert!(mpl >= 1, "mpl must be at least 1");
        CountTable {
            root: TrieNode::default(),
            lexicon: PhraseLexicon::with_words(vocab.len()),
            max_order,
            mpl,
            bos: PhraseId(vocab.bos_id().0),
        }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn mpl(&self) -> usize {
        self.mpl
    }

    pub fn lexicon(&self) -> &PhraseLexicon {
        &self.lexicon
    }

    pub fn bos(&self) -> PhraseId {
        self.bos
    }

    pub fn root(&self) -> &TrieNode {
        &self.root
    }

    /// Raw count of an n-gram, zero if absent.
    pub fn get(&self, key: &[PhraseId]) -> u64 {
        if key.is_empty() {
            return 0;
        }
        self.root.find(key).map_or(0, |n| n.count)
    }

    /// Visits every stored n-gram of `order` in trie order.
    pub fn for_each_ngram(&self, order: usize, mut f: impl FnMut(&[PhraseId], u64)) {
        self.root
            .walk_depth(order, &mut |key, node| f(key, node.count));
    }

    /// Number of distinct n-grams stored at `order`.
    pub fn num_ngrams(&self, order: usize) -> usize {
        self.root.count_at_depth(order)
    }

    /// Sum of order-1 counts, the sentinel excluded.
    pub fn total_unigram_mass(&self) -> u64 {
        self.root
            .children
            .iter()
            .filter(|(&id, _)| id != self.bos)
            .map(|(_, n)| n.count)
            .sum()
    }

    /// Number of sentences counted, carried by the sentinel unigram.
    pub fn sentence_count(&self) -> u64 {
        self.get(&[self.bos])
    }

    pub fn is_empty(&self) -> bool {
        self.total_unigram_mass() == 0
    }

    /// Counts every phrase n-gram of one sentence.
    pub fn add_sentence(&mut self, sentence: &Sentence) {
        let words = sentence.tokens();
        let m = words.len();
        let mpl = self.mpl;
        // span_ids[start * mpl + len - 1]
        let mut span_ids = Vec::with_capacity(m * mpl);
        for start in 0..m {
            for len in 1..=mpl {
                span_ids.push(if start + len <= m {
                    self.lexicon.intern(&words[start..start + len])
                } else {
                    PhraseId(u32::MAX)
                });
            }
        }
        let spans = Spans {
            ids: &span_ids,
            m,
            mpl,
        };
        let bos_node = self.root.child_mut(self.bos);
        bos_node.count += 1;
        spans.insert_from(bos_node, 0, self.max_order - 1);
        for start in 0..m {
            spans.insert_from(&mut self.root, start, self.max_order);
        }
    }

    /// Adds another table's counts, re-interning its phrases in its own id
    /// order. Merging consecutive shards in order reproduces the ids that a
    /// single pass over the concatenated corpus assigns.
    pub fn merge(&mut self, other: &CountTable) {
        assert_eq!(self.max_order, other.max_order, "max_order differs");
        assert_eq!(self.mpl, other.mpl, "mpl differs");
        let remap: Vec<PhraseId> = (0..other.lexicon.len() as u32)
            .map(|id| self.lexicon.intern(other.lexicon.words(PhraseId(id))))
            .collect();
        self.root.merge_remapped(&other.root, &remap);
    }

    /// Counts keyed by word sequences, independent of phrase id assignment.
    pub fn resolved(&self) -> BTreeMap<Vec<Vec<WordId>>, u64> {
        let mut out = BTreeMap::new();
        for order in 1..=self.max_order {
            self.for_each_ngram(order, |key, count| {
                let phrases = key
                    .iter()
                    .map(|&p| self.lexicon.words(p).to_vec())
                    .collect();
                out.insert(phrases, count);
            });
        }
        out
    }

    /// Writes the debugging dump: `count TAB phrase 0x1F phrase ...`, one
    /// n-gram per line, orders ascending.
    pub fn write_dump<W: Write>(&self, vocab: &Vocabulary, mut out: W) -> io::Result<()> {
        let mut result = Ok(());
        for order in 1..=self.max_order {
            self.for_each_ngram(order, |key, count| {
                if result.is_err() {
                    return;
                }
                result = writeln!(out, "{}\t{}", count, self.spell_ngram(key, vocab));
            });
        }
        result
    }

    pub fn spell_ngram(&self, key: &[PhraseId], vocab: &Vocabulary) -> String {
        let mut s = String::new();
        for (i, &p) in key.iter().enumerate() {
            if i > 0 {
                s.push(PHRASE_SEPARATOR);
            }
            s.push_str(&self.lexicon.spell(p, vocab));
        }
        s
    }
}

struct Spans<'a> {
    ids: &'a [PhraseId],
    m: usize,
    mpl: usize,
}

impl Spans<'_> {
    fn insert_from(&self, node: &mut TrieNode, start: usize, depth_left: usize) {
        if depth_left == 0 || start >= self.m {
            return;
        }
        let longest = self.mpl.min(self.m - start);
        for len in 1..=longest {
            let id = self.ids[start * self.mpl + len - 1];
            let child = node.child_mut(id);
            child.count += 1;
            self.insert_from(child, start + len, depth_left - 1);
        }
    }
}

/// Word n-gram counts for every order up to `max_order`, contexts prefixed
/// with the begin-of-sentence sentinel.
pub fn count_word_ngrams(corpus: &Corpus, vocab: &Vocabulary, max_order: usize) -> CountTable {
    let mut table = CountTable::new(vocab, max_order, 1);
    let bos = table.bos;
    let mut padded = Vec::new();
    for sentence in corpus.sentences() {
        padded.clear();
        padded.push(bos);
        padded.extend(sentence.tokens().iter().map(|&w| PhraseId(w.0)));
        for start in 0..padded.len() {
            let mut node = &mut table.root;
            for &id in padded[start..].iter().take(max_order) {
                node = node.child_mut(id);
                node.count += 1;
            }
        }
    }
    table
}

/// Phrase n-gram counts aggregated over all sentences.
pub fn count_phrase_ngrams(
    corpus: &Corpus,
    vocab: &Vocabulary,
    max_order: usize,
    mpl: usize,
) -> CountTable {
    let mut table = CountTable::new(vocab, max_order, mpl);
    for sentence in corpus.sentences() {
        table.add_sentence(sentence);
    }
    table
}

/// Counts contiguous shards of the corpus on `threads` workers and merges
/// them in shard order. The result is identical to the single-threaded count.
pub fn count_phrase_ngrams_sharded(
    corpus: &Corpus,
    vocab: &Vocabulary,
    max_order: usize,
    mpl: usize,
    threads: usize,
) -> CountTable {
    let threads = threads.max(1);
    let sentences = corpus.sentences();
    if threads == 1 || sentences.len() < 2 {
        return count_phrase_ngrams(corpus, vocab, max_order, mpl);
    }
    let chunk = sentences.len().div_ceil(threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    let shards: Vec<CountTable> = pool.install(|| {
        sentences
            .par_chunks(chunk)
            .map(|part| {
                let mut table = CountTable::new(vocab, max_order, mpl);
                for s in part {
                    table.add_sentence(s);
                }
                table
            })
            .collect()
    });
    let mut iter = shards.into_iter();
    let mut table = iter.next().expect("at least one shard");
    for shard in iter {
        table.merge(&shard);
    }
    table
}

/// Histogram of counts at one order: N_r for r >= 1 and the total mass
/// N0 = sum of r * N_r.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountsOfCounts {
    histogram: BTreeMap<u64, u64>,
    total_mass: u64,
}

impl CountsOfCounts {
    pub fn from_counts(counts: impl IntoIterator<Item = u64>) -> Self {
        let mut coc = CountsOfCounts::default();
        for r in counts {
            if r > 0 {
                *coc.histogram.entry(r).or_insert(0) += 1;
                coc.total_mass += r;
            }
        }
        coc
    }

    /// Builds from explicit `(r, N_r)` pairs.
    pub fn from_histogram(pairs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut coc = CountsOfCounts::default();
        for (r, n) in pairs {
            if r > 0 && n > 0 {
                *coc.histogram.entry(r).or_insert(0) += n;
                coc.total_mass += r * n;
            }
        }
        coc
    }

    /// N_r for r >= 1; for r = 0 this is N0.
    pub fn n(&self, r: u64) -> u64 {
        if r == 0 {
            return self.total_mass;
        }
        self.histogram.get(&r).copied().unwrap_or(0)
    }

    /// Sum of i * N_i, the total token mass of the order.
    pub fn n0(&self) -> u64 {
        self.total_mass
    }

    pub fn max_count(&self) -> u64 {
        self.histogram.keys().next_back().copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.histogram.iter().map(|(&r, &n)| (r, n))
    }
}

/// Counts-of-counts at `order`. The sentinel unigram is not an event and is
/// left out at order 1.
pub fn counts_of_counts(table: &CountTable, order: usize) -> CountsOfCounts {
    assert!(order >= 1 && order <= table.max_order, "order out of range");
    let mut counts = Vec::new();
    let bos = table.bos;
    table.for_each_ngram(order, |key, count| {
        if !(order == 1 && key[0] == bos) {
            counts.push(count);
        }
    });
    CountsOfCounts::from_counts(counts)
}
