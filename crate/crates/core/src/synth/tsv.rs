//! Dataset TSV files.
//!
//! `{name}.{split}.tsv` holds one instance per line: the integer label then
//! the raw sentences (RST rows: left EDUs and right EDUs, each joined by
//! ` ||| `). `{name}.labels.txt` lists label names in index order, and
//! `{name}.{split}.meta.tsv` keeps `instance_id`, `source_doc_id` and the DC
//! replaced slot (`-` when absent) on the matching line.

use std::fs;
use std::path::{Path, PathBuf};

use super::instance::{Dataset, DatasetSplit, InstanceBody, LabelSpace, Split, TaskInstance, TaskKind};
use super::SynthError;
use crate::io::write_string_atomic;

const EDU_SEP: &str = " ||| ";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

pub fn format_row(inst: &TaskInstance) -> String {
    let fields: Vec<String> = match &inst.body {
        InstanceBody::RstNode { left, right } => vec![
            left.iter().map(|s| escape(s)).collect::<Vec<_>>().join(EDU_SEP),
            right.iter().map(|s| escape(s)).collect::<Vec<_>>().join(EDU_SEP),
        ],
        body => body.sentences().into_iter().map(escape).collect(),
    };
    let mut row = inst.label.to_string();
    for f in fields {
        row.push('\t');
        row.push_str(&f);
    }
    row
}

fn arity(task: TaskKind) -> usize {
    match task {
        TaskKind::Sp => 5,
        TaskKind::Bso | TaskKind::PdtbExplicit | TaskKind::PdtbImplicit | TaskKind::Rst => 2,
        TaskKind::Dc => 6,
        TaskKind::Ssp => 1,
    }
}

/// Parses one row into its label and body. DC bodies come back without a
/// replaced slot; that lives in the sidecar.
pub fn parse_row(task: TaskKind, row: &str, line: usize) -> Result<(usize, InstanceBody), SynthError> {
    let malformed = |reason: String| SynthError::MalformedRow { line, reason };
    let mut parts = row.split('\t');
    let label = parts
        .next()
        .unwrap_or("")
        .parse::<usize>()
        .map_err(|e| malformed(format!("label: {e}")))?;
    let fields: Vec<&str> = parts.collect();
    if fields.len() != arity(task) {
        return Err(malformed(format!(
            "{} expects {} text columns, found {}",
            task,
            arity(task),
            fields.len()
        )));
    }
    let text: Vec<String> = fields.iter().map(|f| unescape(f)).collect();
    let body = match task {
        TaskKind::Sp => InstanceBody::Sp { sentences: text },
        TaskKind::Dc => InstanceBody::Dc {
            sentences: text,
            replaced_slot: None,
        },
        TaskKind::Bso => {
            let [first, second] = <[String; 2]>::try_from(text).expect("arity checked");
            InstanceBody::Bso { first, second }
        }
        TaskKind::Ssp => InstanceBody::Ssp {
            sentence: text.into_iter().next().expect("arity checked"),
        },
        TaskKind::PdtbExplicit | TaskKind::PdtbImplicit => {
            let [arg1, arg2] = <[String; 2]>::try_from(text).expect("arity checked");
            InstanceBody::PairRel { arg1, arg2 }
        }
        TaskKind::Rst => {
            let split = |f: &str| -> Result<Vec<String>, SynthError> {
                if f.is_empty() {
                    return Err(malformed("empty EDU span".into()));
                }
                Ok(f.split(EDU_SEP).map(unescape).collect())
            };
            InstanceBody::RstNode {
                left: split(fields[0])?,
                right: split(fields[1])?,
            }
        }
    };
    Ok((label, body))
}

/// Rows and sidecar rows for one split.
pub fn format_split(instances: &[TaskInstance]) -> (String, String) {
    let mut rows = String::new();
    let mut meta = String::new();
    for inst in instances {
        rows.push_str(&format_row(inst));
        rows.push('\n');
        let slot = match &inst.body {
            InstanceBody::Dc {
                replaced_slot: Some(s), ..
            } => s.to_string(),
            _ => "-".to_string(),
        };
        meta.push_str(&format!(
            "{}\t{}\t{}\n",
            escape(&inst.instance_id),
            escape(&inst.source_doc_id),
            slot
        ));
    }
    (rows, meta)
}

/// Inverse of [`format_split`]. Without a sidecar, ids are `{name}#{line}`
/// with the dataset name as source document.
pub fn parse_split(task: TaskKind, name: &str, rows: &str, meta: Option<&str>) -> Result<Vec<TaskInstance>, SynthError> {
    let meta_lines: Option<Vec<&str>> = meta.map(|m| m.lines().collect());
    let mut out = Vec::new();
    for (i, row) in rows.lines().enumerate() {
        let (label, mut body) = parse_row(task, row, i + 1)?;
        let (instance_id, source_doc_id) = match &meta_lines {
            None => (format!("{name}#{i}"), name.to_string()),
            Some(lines) => {
                let m = lines.get(i).ok_or_else(|| SynthError::MalformedRow {
                    line: i + 1,
                    reason: "no matching metadata row".into(),
                })?;
                let cols: Vec<&str> = m.split('\t').collect();
                let [id, doc, slot] = cols.as_slice() else {
                    return Err(SynthError::MalformedRow {
                        line: i + 1,
                        reason: format!("metadata row has {} columns, expected 3", cols.len()),
                    });
                };
                if *slot != "-" {
                    let s: usize = slot.parse().map_err(|e| SynthError::MalformedRow {
                        line: i + 1,
                        reason: format!("replaced slot: {e}"),
                    })?;
                    if let InstanceBody::Dc { replaced_slot, .. } = &mut body {
                        *replaced_slot = Some(s);
                    }
                }
                (unescape(id), unescape(doc))
            }
        };
        out.push(TaskInstance {
            instance_id,
            source_doc_id,
            label,
            body,
        });
    }
    if let Some(lines) = meta_lines {
        if lines.len() != out.len() {
            return Err(SynthError::MalformedRow {
                line: out.len() + 1,
                reason: format!("metadata has {} rows, dataset has {}", lines.len(), out.len()),
            });
        }
    }
    Ok(out)
}

pub fn split_path(dir: &Path, name: &str, split: Split) -> PathBuf {
    dir.join(format!("{name}.{}.tsv", split.name()))
}

fn meta_path(dir: &Path, name: &str, split: Split) -> PathBuf {
    dir.join(format!("{name}.{}.meta.tsv", split.name()))
}

pub fn labels_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.labels.txt"))
}

/// Writes the split files, sidecars and label file into `dir`. Returns the
/// paths written.
pub fn serialize_dataset(ds: &Dataset, dir: &Path) -> Result<Vec<PathBuf>, SynthError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for split in Split::ALL {
        let (rows, meta) = format_split(ds.splits.get(split));
        let p = split_path(dir, &ds.name, split);
        write_string_atomic(&p, &rows)?;
        written.push(p);
        let p = meta_path(dir, &ds.name, split);
        write_string_atomic(&p, &meta)?;
        written.push(p);
    }
    let mut labels = ds.labels.names.join("\n");
    labels.push('\n');
    let p = labels_path(dir, &ds.name);
    write_string_atomic(&p, &labels)?;
    written.push(p);
    Ok(written)
}

fn read(path: &Path) -> Result<String, SynthError> {
    fs::read_to_string(path).map_err(|e| SynthError::Io(format!("{}: {e}", path.display())))
}

pub fn deserialize_dataset(dir: &Path, name: &str, task: TaskKind) -> Result<Dataset, SynthError> {
    let names: Vec<String> = read(&labels_path(dir, name))?
        .lines()
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    let mut splits = DatasetSplit::default();
    for split in Split::ALL {
        let rows = read(&split_path(dir, name, split))?;
        let mp = meta_path(dir, name, split);
        let meta = if mp.exists() { Some(read(&mp)?) } else { None };
        *splits.get_mut(split) = parse_split(task, name, &rows, meta.as_deref())?;
    }
    Ok(Dataset {
        name: name.to_string(),
        task,
        labels: LabelSpace::new(name, names),
        splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn inst(label: usize, body: InstanceBody) -> TaskInstance {
        TaskInstance {
            instance_id: "doc#0".into(),
            source_doc_id: "doc".into(),
            label,
            body,
        }
    }

    #[test]
    fn sp_row_format() {
        let i = inst(
            3,
            InstanceBody::Sp {
                sentences: strs(&["D", "A", "B", "C", "E"]),
            },
        );
        assert_eq!(format_row(&i), "3\tD\tA\tB\tC\tE");
    }

    #[test]
    fn rst_row_format() {
        let i = inst(
            1,
            InstanceBody::RstNode {
                left: strs(&["e1", "e2"]),
                right: strs(&["e3"]),
            },
        );
        assert_eq!(format_row(&i), "1\te1 ||| e2\te3");
        let (label, body) = parse_row(TaskKind::Rst, &format_row(&i), 1).unwrap();
        assert_eq!((label, body), (1, i.body));
    }

    #[test]
    fn wrong_arity() {
        assert!(matches!(
            parse_row(TaskKind::Sp, "3\tA\tB\tC\tD", 7),
            Err(SynthError::MalformedRow { line: 7, .. })
        ));
        assert!(parse_row(TaskKind::Ssp, "x\tA", 1).is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut splits = DatasetSplit::default();
        splits.train.push(inst(
            0,
            InstanceBody::Dc {
                sentences: strs(&["a\tb", "c\\d", "e\nf", "g", "h", "i"]),
                replaced_slot: Some(4),
            },
        ));
        splits.test.push(TaskInstance {
            instance_id: "other#0".into(),
            source_doc_id: "other".into(),
            label: 1,
            body: InstanceBody::Dc {
                sentences: strs(&["1", "2", "3", "4", "5", "6"]),
                replaced_slot: None,
            },
        });
        let ds = Dataset {
            name: "dc".into(),
            task: TaskKind::Dc,
            labels: LabelSpace::numbered("dc", 2),
            splits,
        };
        serialize_dataset(&ds, dir.path()).unwrap();
        let back = deserialize_dataset(dir.path(), "dc", TaskKind::Dc).unwrap();
        assert_eq!(back, ds);
    }

    fn arb_text() -> impl Strategy<Value = String> {
        "[a-zA-Z .,\\t\\n\\\\|]{1,20}".prop_filter("no separator", |s| !s.contains(EDU_SEP))
    }

    proptest! {
        #[test]
        fn row_round_trip(sentences in prop::collection::vec(arb_text(), 6), label in 0usize..2) {
            let i = inst(label, InstanceBody::Dc { sentences, replaced_slot: None });
            let (l, body) = parse_row(TaskKind::Dc, &format_row(&i), 1).unwrap();
            prop_assert_eq!(l, label);
            prop_assert_eq!(body, i.body);
        }
    }
}
