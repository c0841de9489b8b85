use std::collections::{BTreeSet, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use super::CorpusError;

/// Deepest table-of-contents level accepted in a corpus.
pub const MAX_LEVEL: u8 = 7;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    /// Tokenizes `raw`; `None` when it yields no tokens.
    pub fn new(raw: &str) -> Option<Self> {
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            None
        } else {
            Some(Sentence {
                raw: raw.to_string(),
                tokens,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub title: String,
    pub title_tokens: Vec<String>,
    /// Nesting level in the table of contents, `1..=7`.
    pub level: u8,
    pub paragraphs: Vec<Vec<Sentence>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub title_tokens: Vec<String>,
    pub categories: BTreeSet<String>,
    pub sections: Vec<Section>,
}

impl Document {
    /// Sentences in document order.
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.sections
            .iter()
            .flat_map(|s| s.paragraphs.iter())
            .flat_map(|p| p.iter())
    }

    pub fn sentence_count(&self) -> usize {
        self.sections
            .iter()
            .flat_map(|s| s.paragraphs.iter())
            .map(|p| p.len())
            .sum()
    }

    pub fn paragraphs(&self) -> impl Iterator<Item = &Vec<Sentence>> {
        self.sections.iter().flat_map(|s| s.paragraphs.iter())
    }

    pub fn to_record(&self) -> DocumentRecord {
        DocumentRecord {
            id: self.id.clone(),
            title: self.title.clone(),
            categories: self.categories.iter().cloned().collect(),
            sections: self
                .sections
                .iter()
                .map(|s| SectionRecord {
                    title: s.title.clone(),
                    level: s.level as i64,
                    paragraphs: s
                        .paragraphs
                        .iter()
                        .map(|p| p.iter().map(|x| x.raw.clone()).collect())
                        .collect(),
                })
                .collect(),
        }
    }
}

/// One line of the corpus JSON Lines format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub categories: Vec<String>,
    pub sections: Vec<SectionRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionRecord {
    pub title: String,
    pub level: i64,
    pub paragraphs: Vec<Vec<String>>,
}

impl DocumentRecord {
    /// Validates the record. Empty paragraphs are dropped; empty sentences
    /// are rejected.
    pub fn into_document(self, line: usize) -> Result<Document, CorpusError> {
        let malformed = |reason: String| CorpusError::MalformedRecord { line, reason };
        if self.id.trim().is_empty() {
            return Err(malformed("empty id".into()));
        }
        let mut sections = Vec::with_capacity(self.sections.len());
        for (si, s) in self.sections.into_iter().enumerate() {
            if !(1..=MAX_LEVEL as i64).contains(&s.level) {
                return Err(CorpusError::LevelOutOfRange { line, level: s.level });
            }
            let mut paragraphs = Vec::new();
            for (pi, p) in s.paragraphs.into_iter().enumerate() {
                let mut sentences = Vec::with_capacity(p.len());
                for (k, raw) in p.into_iter().enumerate() {
                    let sentence = Sentence::new(&raw).ok_or_else(|| {
                        malformed(format!("section {si} paragraph {pi} sentence {k} is empty"))
                    })?;
                    sentences.push(sentence);
                }
                if !sentences.is_empty() {
                    paragraphs.push(sentences);
                }
            }
            sections.push(Section {
                title_tokens: tokenize(&s.title),
                title: s.title,
                level: s.level as u8,
                paragraphs,
            });
        }
        if !sections.iter().any(|s| !s.paragraphs.is_empty()) {
            return Err(malformed("document has no sentences".into()));
        }
        Ok(Document {
            id: self.id,
            title_tokens: tokenize(&self.title),
            title: self.title,
            categories: self.categories.into_iter().collect(),
            sections,
        })
    }
}

/// Parses a JSON Lines corpus. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        let doc = record.into_document(line_no)?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus<W: std::io::Write>(docs: &[Document], mut w: W) -> std::io::Result<()> {
    for d in docs {
        serde_json::to_writer(&mut w, &d.to_record())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn serialize_corpus(docs: &[Document]) -> String {
    let mut buf = Vec::new();
    write_corpus(docs, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"id":"d1","title":"Rome","categories":["History"],"sections":[{"title":"","level":1,"paragraphs":[["Rome was founded.","It grew."]]}]}"#;

    #[test]
    fn parses_a_single_record() {
        let docs = parse_corpus(ONE.as_bytes()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].sentence_count(), 2);
        assert_eq!(docs[0].title_tokens, vec!["rome"]);
        assert_eq!(docs[0].sections[0].paragraphs[0][1].tokens, vec!["it", "grew", "."]);
    }

    #[test]
    fn empty_stream() {
        assert!(parse_corpus("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn level_eight_is_rejected() {
        let rec = ONE.replace("\"level\":1", "\"level\":8");
        assert!(matches!(
            parse_corpus(rec.as_bytes()),
            Err(CorpusError::LevelOutOfRange { level: 8, .. })
        ));
        let rec = ONE.replace("\"level\":1", "\"level\":0");
        assert!(parse_corpus(rec.as_bytes()).is_err());
    }

    #[test]
    fn duplicate_ids() {
        let two = format!("{ONE}\n{ONE}\n");
        assert!(matches!(parse_corpus(two.as_bytes()), Err(CorpusError::DuplicateId(id)) if id == "d1"));
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let text = format!("{ONE}\n{{not json\n");
        assert!(matches!(
            parse_corpus(text.as_bytes()),
            Err(CorpusError::MalformedRecord { line: 2, .. })
        ));
        let no_sentences = r#"{"id":"x","title":"t","categories":[],"sections":[{"title":"a","level":1,"paragraphs":[[]]}]}"#;
        assert!(matches!(
            parse_corpus(no_sentences.as_bytes()),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
        let blank_sentence = ONE.replace("It grew.", "  ");
        assert!(parse_corpus(blank_sentence.as_bytes()).is_err());
    }

    #[test]
    fn round_trip() {
        let docs = parse_corpus(ONE.as_bytes()).unwrap();
        let again = parse_corpus(serialize_corpus(&docs).as_bytes()).unwrap();
        assert_eq!(docs, again);
    }
}
