use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::model::Document;
use super::CorpusError;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Token ↔ index map. Index 0 is padding, index 1 the unknown token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocab {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;

    /// Builds a vocabulary from tokens listed in index order (specials
    /// excluded; they are always prepended).
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Result<Self, CorpusError> {
        let mut v = Vocab {
            index: HashMap::new(),
            tokens: Vec::new(),
        };
        for t in [PAD_TOKEN.to_string(), UNK_TOKEN.to_string()].into_iter().chain(tokens) {
            if v.index.contains_key(&t) {
                return Err(CorpusError::InvalidArgument(format!("duplicate vocabulary token {t:?}")));
            }
            v.index.insert(t.clone(), v.tokens.len());
            v.tokens.push(t);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or the unknown index.
    pub fn index_of(&self, token: &str) -> usize {
        self.get(token).unwrap_or(Self::UNK)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.index_of(t.as_ref())).collect()
    }

    /// One token per line, specials included.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, CorpusError> {
        let lines: Vec<String> = r
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| CorpusError::UnreadableFile(e.to_string()))?;
        if lines.len() < 2 || lines[0] != PAD_TOKEN || lines[1] != UNK_TOKEN {
            return Err(CorpusError::InvalidArgument("vocabulary file lacks special tokens".into()));
        }
        Vocab::from_tokens(lines.into_iter().skip(2))
    }
}

/// Collects every token with corpus frequency `≥ min_count` from sentences
/// and titles. Ordering: descending frequency, ties lexicographic.
pub fn build_vocab(docs: &[Document], min_count: usize) -> Result<Vocab, CorpusError> {
    if min_count == 0 {
        return Err(CorpusError::InvalidArgument("min_count must be at least 1".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for d in docs {
        for t in &d.title_tokens {
            *counts.entry(t).or_default() += 1;
        }
        for s in &d.sections {
            for t in &s.title_tokens {
                *counts.entry(t).or_default() += 1;
            }
        }
        for s in d.sentences() {
            for t in &s.tokens {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocab::from_tokens(kept.into_iter().map(|(t, _)| t.to_string()))
}
