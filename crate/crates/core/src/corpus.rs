//! Plain-text corpora: tokenization, the vocabulary and its sentinel tokens.
//!
//! A corpus file holds one sentence per line with tokens separated by spaces
//! or tabs. Tokens are opaque: no case folding, no normalization. Blank lines
//! carry no sentence and are skipped on load.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::Result;

/// Spelling of the begin-of-sentence sentinel in model files.
pub const BOS: &str = "<s>";
/// Spelling of the unknown-word sentinel in model files.
pub const UNK: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordId(pub u32);

impl WordId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bidirectional word/id map. Ids are dense, sentinels first, then words in
/// order of first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    word_to_id: HashMap<String, WordId>,
    id_to_word: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    /// A vocabulary holding only the two sentinels.
    pub fn new() -> Self {
        let mut vocab = Vocabulary {
            word_to_id: HashMap::new(),
            id_to_word: Vec::new(),
        };
        vocab.push(BOS);
        vocab.push(UNK);
        vocab
    }

    fn push(&mut self, word: &str) -> WordId {
        let id = WordId(self.id_to_word.len() as u32);
        self.word_to_id.insert(word.to_owned(), id);
        self.id_to_word.push(word.to_owned());
        id
    }

    /// Adds `word` if absent. Sentinel spellings are not ordinary words and
    /// resolve to the unknown-word id instead.
    pub fn insert(&mut self, word: &str) -> WordId {
        if word == BOS {
            return self.unk_id();
        }
        match self.word_to_id.get(word) {
            Some(&id) => id,
            None => self.push(word),
        }
    }

    pub fn get(&self, word: &str) -> Option<WordId> {
        if word == BOS {
            return None;
        }
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.id_to_word[id.index()]
    }

    pub fn bos_id(&self) -> WordId {
        WordId(0)
    }

    pub fn unk_id(&self) -> WordId {
        WordId(1)
    }

    pub fn is_sentinel(&self, id: WordId) -> bool {
        id == self.bos_id() || id == self.unk_id()
    }

    /// Number of entries, sentinels included.
    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_word.is_empty()
    }

    /// All ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = WordId> + '_ {
        (0..self.id_to_word.len() as u32).map(WordId)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<WordId>,
}

impl Sentence {
    pub fn new(tokens: Vec<WordId>) -> Self {
        Sentence { tokens }
    }

    pub fn tokens(&self) -> &[WordId] {
        &self.tokens
    }

    /// Word count m; sentinels are never part of a sentence.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    word_count: usize,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        let word_count = sentences.iter().map(Sentence::len).sum();
        Corpus {
            sentences,
            word_count,
        }
    }

    /// Maps tokenized lines through `vocab`, sending unknown words to unk.
    pub fn from_tokens<S: AsRef<str>>(vocab: &Vocabulary, lines: &[Vec<S>]) -> Self {
        Corpus::new(lines.iter().map(|l| map_with_unk(vocab, l)).collect())
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    /// Total word count N over all sentences.
    pub fn word_count(&self) -> usize {
        self.word_count
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Keeps only sentences accepted by `keep`, recomputing N.
    pub fn filter(&self, mut keep: impl FnMut(&Sentence) -> bool) -> Corpus {
        Corpus::new(self.sentences.iter().filter(|s| keep(s)).cloned().collect())
    }

    /// Appends another corpus.
    pub fn concat(&self, other: &Corpus) -> Corpus {
        let mut sentences = self.sentences.clone();
        sentences.extend(other.sentences.iter().cloned());
        Corpus::new(sentences)
    }
}

/// Splits on runs of ASCII whitespace.
pub fn tokenize(line: &str) -> Vec<&str> {
    line.split_ascii_whitespace().collect()
}

pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

/// Assigns dense ids in first-occurrence order after the two sentinels.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &[Vec<S>]) -> Vocabulary {
    let mut vocab = Vocabulary::new();
    for line in corpus {
        for word in line {
            vocab.insert(word.as_ref());
        }
    }
    vocab
}

pub fn map_with_unk<S: AsRef<str>>(vocab: &Vocabulary, tokens: &[S]) -> Sentence {
    Sentence::new(
        tokens
            .iter()
            .map(|w| vocab.get(w.as_ref()).unwrap_or_else(|| vocab.unk_id()))
            .collect(),
    )
}

/// Reads tokenized lines, dropping blank ones.
pub fn read_token_lines<R: Read>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut lines = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let tokens: Vec<String> = tokenize(&line).into_iter().map(str::to_owned).collect();
        if !tokens.is_empty() {
            lines.push(tokens);
        }
    }
    Ok(lines)
}

/// Reads tokenized lines keeping blank ones, for line-aligned files such as
/// references.
pub fn read_aligned_lines<R: Read>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut lines = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        lines.push(tokenize(&line).into_iter().map(str::to_owned).collect());
    }
    Ok(lines)
}

pub fn read_token_file(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    read_token_lines(File::open(path)?)
}

/// Loads a training corpus, building its vocabulary.
pub fn load_training(path: impl AsRef<Path>) -> Result<(Vocabulary, Corpus)> {
    let lines = read_token_file(path)?;
    let vocab = build_vocabulary(&lines);
    let corpus = Corpus::from_tokens(&vocab, &lines);
    Ok((vocab, corpus))
}

/// Loads an evaluation corpus against an existing vocabulary.
pub fn load_with_vocabulary(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Corpus> {
    let lines = read_token_file(path)?;
    Ok(Corpus::from_tokens(vocab, &lines))
}
