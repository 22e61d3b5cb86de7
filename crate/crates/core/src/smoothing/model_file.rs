//! ARPA-style text model format.
//!
//! ```text
//! \order 3
//! \mpl 3
//! \lambda 0.43
//! \mode phrase
//!
//! \1-grams:
//! -0.69897<TAB>the cat<TAB>-0.30103
//! ...
//! ```
//!
//! Each record is a log10 probability, the n-gram's phrases (words joined
//! by spaces, phrases joined by 0x1F) and an optional log10 backoff weight.
//! Records are written in phrase-id order, so reading a file back assigns
//! the same ids and writing it again reproduces the same bytes.

use std::io::{BufRead, Write};

use crate::corpus::{Vocabulary, WordId, BOS};
use crate::counts::{PhraseId, PhraseLexicon, PHRASE_SEPARATOR};
use crate::error::{Error, Result};

use super::{BackoffModel, ModelMode, NgramEntry, OrderMap};

pub fn write_model<W: Write>(model: &BackoffModel, mut out: W) -> Result<()> {
    writeln!(out, "\\order {}", model.max_order())?;
    writeln!(out, "\\mpl {}", model.mpl())?;
    writeln!(out, "\\lambda {}", model.lambda())?;
    writeln!(out, "\\mode {}", model.mode().as_str())?;
    for (i, map) in model.orders().iter().enumerate() {
        writeln!(out)?;
        writeln!(out, "\\{}-grams:", i + 1)?;
        let mut keys: Vec<&Box<[PhraseId]>> = map.keys().collect();
        keys.sort_unstable();
        for key in keys {
            let e = &map[key];
            write!(out, "{}\t", e.log_prob)?;
            for (j, &p) in key.iter().enumerate() {
                if j > 0 {
                    write!(out, "{PHRASE_SEPARATOR}")?;
                }
                write!(out, "{}", model.lexicon().spell(p, model.vocab()))?;
            }
            match e.log_backoff {
                Some(b) => writeln!(out, "\t{b}")?,
                None => writeln!(out)?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

struct Record {
    line: usize,
    log_prob: f64,
    phrases: Vec<Vec<WordId>>,
    log_backoff: Option<f64>,
}

pub fn read_model<R: BufRead>(input: R) -> Result<BackoffModel> {
    let mut order = None;
    let mut mpl = None;
    let mut lambda = None;
    let mut mode = None;
    let mut sections: Vec<Vec<Record>> = Vec::new();
    let mut vocab = Vocabulary::new();

    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('\\') {
            if let Some(k) = rest.strip_suffix("-grams:") {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::parse(n, "bad section header"))?;
                if k != sections.len() + 1 {
                    return Err(Error::parse(
                        n,
                        format!("expected section {}", sections.len() + 1),
                    ));
                }
                sections.push(Vec::new());
                continue;
            }
            let (key, value) = rest
                .split_once(' ')
                .ok_or_else(|| Error::parse(n, "header needs a value"))?;
            let bad = |_| Error::parse(n, format!("bad value for \\{key}"));
            match key {
                "order" => {
                    order = Some(
                        value
                            .trim()
                            .parse::<usize>()
                            .map_err(|e| bad(e.to_string()))?,
                    )
                }
                "mpl" => {
                    mpl = Some(
                        value
                            .trim()
                            .parse::<usize>()
                            .map_err(|e| bad(e.to_string()))?,
                    )
                }
                "lambda" => {
                    lambda = Some(
                        value
                            .trim()
                            .parse::<f64>()
                            .map_err(|e| bad(e.to_string()))?,
                    )
                }
                "mode" => {
                    mode = Some(match value.trim() {
                        "word" => ModelMode::Word,
                        "phrase" => ModelMode::Phrase,
                        other => return Err(Error::parse(n, format!("unknown mode {other}"))),
                    })
                }
                other => return Err(Error::parse(n, format!("unknown header \\{other}"))),
            }
            continue;
        }
        let order = sections.len();
        let section = sections
            .last_mut()
            .ok_or_else(|| Error::parse(n, "record before any section"))?;
        let mut fields = line.split('\t');
        let log_prob: f64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::parse(n, "bad log probability"))?;
        let spelled = fields
            .next()
            .ok_or_else(|| Error::parse(n, "missing n-gram"))?;
        let log_backoff = match fields.next() {
            Some(f) => Some(
                f.parse()
                    .map_err(|_| Error::parse(n, "bad backoff weight"))?,
            ),
            None => None,
        };
        if fields.next().is_some() {
            return Err(Error::parse(n, "too many fields"));
        }
        if spelled
            .split(PHRASE_SEPARATOR)
            .any(|p| p.split(' ').any(str::is_empty))
        {
            return Err(Error::parse(n, "empty word in n-gram"));
        }
        let phrases: Vec<Vec<WordId>> = spelled
            .split(PHRASE_SEPARATOR)
            .map(|phrase| {
                phrase
                    .split(' ')
                    .map(|w| {
                        if w == BOS {
                            vocab.bos_id()
                        } else {
                            vocab.insert(w)
                        }
                    })
                    .collect()
            })
            .collect();
        if phrases.len() != order {
            return Err(Error::parse(n, "n-gram does not match its section"));
        }
        section.push(Record {
            line: n,
            log_prob,
            phrases,
            log_backoff,
        });
    }

    let order = order.ok_or_else(|| Error::parse(0, "missing \\order"))?;
    let mpl = mpl.ok_or_else(|| Error::parse(0, "missing \\mpl"))?;
    let lambda = lambda.ok_or_else(|| Error::parse(0, "missing \\lambda"))?;
    let mode = mode.ok_or_else(|| Error::parse(0, "missing \\mode"))?;
    if order == 0 || sections.len() != order {
        return Err(Error::parse(
            0,
            format!("\\order {order} but {} sections", sections.len()),
        ));
    }
    if mpl == 0 || (mode == ModelMode::Word) != (mpl == 1) {
        return Err(Error::parse(0, "\\mode disagrees with \\mpl"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::parse(0, "\\lambda outside [0, 1]"));
    }

    let mut lexicon = PhraseLexicon::with_words(vocab.len());
    let mut orders: Vec<OrderMap> = Vec::with_capacity(order);
    for records in sections {
        let mut map = OrderMap::with_capacity(records.len());
        for r in records {
            if r.phrases.iter().any(|p| p.len() > mpl) {
                return Err(Error::parse(r.line, "phrase longer than \\mpl"));
            }
            let key: Box<[PhraseId]> = r.phrases.iter().map(|p| lexicon.intern(p)).collect();
            let entry = NgramEntry {
                log_prob: r.log_prob,
                log_backoff: r.log_backoff,
            };
            if map.insert(key, entry).is_some() {
                return Err(Error::parse(r.line, "duplicate n-gram"));
            }
        }
        orders.push(map);
    }
    if !orders[0].contains_key(&[PhraseId(vocab.unk_id().0)][..]) {
        return Err(Error::parse(0, "model has no <unk> unigram"));
    }
    Ok(BackoffModel::from_parts(
        mpl, lambda, vocab, lexicon, orders,
    ))
}
