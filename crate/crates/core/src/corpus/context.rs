use super::model::{Document, Sentence};

/// One encoder training example centred on `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingContext {
    pub doc_id: String,
    /// Position of `target` in the flattened document (0-based).
    pub index: usize,
    pub target: Sentence,
    pub prev: Sentence,
    pub next: Sentence,
    pub nesting_level: u8,
    /// Sentence position within its paragraph (0-based).
    pub sent_pos: usize,
    /// Paragraph position within the document (0-based).
    pub para_pos: usize,
    pub section_title: Vec<String>,
    pub doc_title: Vec<String>,
}

struct Located<'a> {
    sentence: &'a Sentence,
    level: u8,
    sent_pos: usize,
    para_pos: usize,
    section_title: &'a [String],
}

/// One context per sentence that has a predecessor and a successor in the
/// same document. Neighbors may cross paragraph and section boundaries.
pub fn context_windows(doc: &Document) -> Vec<TrainingContext> {
    let mut flat = Vec::with_capacity(doc.sentence_count());
    let mut para_pos = 0;
    for section in &doc.sections {
        for paragraph in &section.paragraphs {
            for (sent_pos, sentence) in paragraph.iter().enumerate() {
                flat.push(Located {
                    sentence,
                    level: section.level,
                    sent_pos,
                    para_pos,
                    section_title: &section.title_tokens,
                });
            }
            para_pos += 1;
        }
    }
    if flat.len() < 3 {
        return Vec::new();
    }
    (1..flat.len() - 1)
        .map(|i| {
            let cur = &flat[i];
            TrainingContext {
                doc_id: doc.id.clone(),
                index: i,
                target: cur.sentence.clone(),
                prev: flat[i - 1].sentence.clone(),
                next: flat[i + 1].sentence.clone(),
                nesting_level: cur.level,
                sent_pos: cur.sent_pos,
                para_pos: cur.para_pos,
                section_title: cur.section_title.to_vec(),
                doc_title: doc.title_tokens.clone(),
            }
        })
        .collect()
}
