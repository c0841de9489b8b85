use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// A conversation thread from a chat-style corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thread {
    pub thread_id: String,
    pub utterances: Vec<String>,
}

pub fn parse_threads<R: BufRead>(reader: R) -> Result<Vec<Thread>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Thread = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if t.thread_id.trim().is_empty() {
            return Err(CorpusError::MalformedRecord {
                line: i + 1,
                reason: "empty thread_id".into(),
            });
        }
        if !seen.insert(t.thread_id.clone()) {
            return Err(CorpusError::DuplicateId(t.thread_id));
        }
        out.push(t);
    }
    Ok(out)
}

pub fn write_threads<W: std::io::Write>(threads: &[Thread], mut w: W) -> std::io::Result<()> {
    for t in threads {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reject_duplicates() {
        let line = r#"{"thread_id":"t1","utterances":["hi there all","how do i mount"]}"#;
        let threads = parse_threads(line.as_bytes()).unwrap();
        assert_eq!(threads[0].utterances.len(), 2);
        let two = format!("{line}\n{line}");
        assert!(matches!(parse_threads(two.as_bytes()), Err(CorpusError::DuplicateId(_))));
    }
}
