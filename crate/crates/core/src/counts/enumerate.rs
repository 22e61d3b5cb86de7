//! Enumeration of phrase k-grams as boundary tuples.
//!
//! A phrase k-gram inside a sentence of m words is a strictly increasing
//! tuple `b[0] < b[1] < ... < b[k]` over `0..=m` where phrase i covers words
//! `b[i-1]..b[i]` and no phrase is longer than the maximum phrase length.
//! The iterator walks the tuples depth-first, so prefixes come before their
//! extensions and siblings come in ascending order.

use crate::corpus::{Sentence, WordId};

#[derive(Debug, Clone)]
pub struct BoundaryTuples {
    m: usize,
    max_order: usize,
    mpl: usize,
    bounds: Vec<usize>,
    started: bool,
}

impl BoundaryTuples {
    pub fn new(m: usize, max_order: usize, mpl: usize) -> Self {
        assert!(mpl >= 1 && max_order >= 1);
        BoundaryTuples {
            m,
            max_order,
            mpl,
            bounds: Vec::with_capacity(max_order + 1),
            started: false,
        }
    }

    fn descend(&mut self) -> bool {
        let last = *self.bounds.last().expect("non-empty");
        if self.bounds.len() - 1 < self.max_order && last < self.m {
            self.bounds.push(last + 1);
            true
        } else {
            false
        }
    }

    fn advance_sibling(&mut self) -> bool {
        loop {
            let len = self.bounds.len();
            if len >= 2 {
                let limit = (self.bounds[len - 2] + self.mpl).min(self.m);
                if self.bounds[len - 1] < limit {
                    self.bounds[len - 1] += 1;
                    return true;
                }
                self.bounds.pop();
            } else {
                // only b[0] is left: move the start
                let next = self.bounds[0] + 1;
                if next < self.m {
                    self.bounds.clear();
                    self.bounds.extend([next, next + 1]);
                    return true;
                }
                return false;
            }
        }
    }
}

impl Iterator for BoundaryTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let moved = if !self.started {
            self.started = true;
            if self.m == 0 {
                false
            } else {
                self.bounds.extend([0, 1]);
                true
            }
        } else if self.bounds.is_empty() {
            false
        } else {
            self.descend() || self.advance_sibling()
        };
        if moved {
            Some(self.bounds.clone())
        } else {
            self.bounds.clear();
            None
        }
    }
}

/// A phrase k-gram located inside a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseKGram<'s> {
    words: &'s [WordId],
    bounds: Vec<usize>,
}

impl<'s> PhraseKGram<'s> {
    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    /// Number of phrases k.
    pub fn order(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn phrases(&self) -> impl Iterator<Item = &'s [WordId]> + '_ {
        self.bounds.windows(2).map(|w| &self.words[w[0]..w[1]])
    }
}

/// Streams every phrase k-gram (1 <= k <= `max_order`) of `sentence` whose
/// phrases are at most `mpl` words long. Each boundary tuple is emitted once.
pub fn enumerate_phrase_kgrams(
    sentence: &Sentence,
    max_order: usize,
    mpl: usize,
) -> impl Iterator<Item = PhraseKGram<'_>> {
    let words = sentence.tokens();
    BoundaryTuples::new(words.len(), max_order, mpl)
        .map(move |bounds| PhraseKGram { words, bounds })
}
