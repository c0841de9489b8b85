use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::EvalError;
use crate::corpus::{tokenize, Vocab};
use crate::io::write_atomic;
use crate::nn::{bigru_encode, EncoderParams};
use crate::synth::{InstanceBody, TaskInstance};

/// Precomputed sentence vectors keyed by `(instance_id, slot)`.
///
/// File format: a `#dim d` header, then `instance_id<TAB>slot<TAB>v1 … vd`
/// rows with space-separated values. Slots index the instance's sentences
/// (RST: left EDUs, then right EDUs).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingCache {
    dim: usize,
    rows: HashMap<String, BTreeMap<usize, Vec<f64>>>,
}

impl EmbeddingCache {
    pub fn new(dim: usize) -> Self {
        EmbeddingCache {
            dim,
            rows: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, instance_id: &str, slot: usize, v: Vec<f64>) -> Result<(), EvalError> {
        if v.len() != self.dim {
            return Err(EvalError::DimMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        self.rows.entry(instance_id.to_string()).or_default().insert(slot, v);
        Ok(())
    }

    pub fn get(&self, instance_id: &str, slot: usize) -> Option<&[f64]> {
        self.rows.get(instance_id)?.get(&slot).map(Vec::as_slice)
    }

    /// Embeds every sentence of `instances` with a trained encoder.
    pub fn from_encoder(instances: &[TaskInstance], params: &EncoderParams<f32>, vocab: &Vocab) -> Result<Self, EvalError> {
        let mut cache = EmbeddingCache::new(params.embedding_dim());
        for inst in instances {
            for (slot, s) in inst.body.sentences().into_iter().enumerate() {
                cache.insert(&inst.instance_id, slot, encode_sentence(s, params, vocab)?)?;
            }
        }
        Ok(cache)
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self, EvalError> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l?,
            None => {
                return Err(EvalError::MalformedCache {
                    line: 1,
                    reason: "missing #dim header".into(),
                })
            }
        };
        let dim = header
            .strip_prefix("#dim")
            .and_then(|d| d.trim().parse::<usize>().ok())
            .ok_or_else(|| EvalError::MalformedCache {
                line: 1,
                reason: format!("expected \"#dim d\", found {header:?}"),
            })?;
        let mut cache = EmbeddingCache::new(dim);
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| EvalError::MalformedCache { line: i + 1, reason };
            let mut cols = line.splitn(3, '\t');
            let (Some(id), Some(slot), Some(values)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(bad("expected three tab-separated columns".into()));
            };
            let slot: usize = slot.parse().map_err(|e| bad(format!("slot: {e}")))?;
            let v: Vec<f64> = values
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|e| bad(format!("value {x:?}: {e}"))))
                .collect::<Result<_, _>>()?;
            if v.len() != dim {
                return Err(EvalError::DimMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            cache.insert(id, slot, v)?;
        }
        Ok(cache)
    }

    pub fn read(path: &Path) -> Result<Self, EvalError> {
        let f = File::open(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(BufReader::new(f))
    }

    /// Rows sorted by instance id, then slot.
    pub fn serialize(&self) -> String {
        let mut out = format!("#dim {}\n", self.dim);
        let mut ids: Vec<&String> = self.rows.keys().collect();
        ids.sort();
        for id in ids {
            for (slot, v) in &self.rows[id] {
                let values: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                out.push_str(&format!("{id}\t{slot}\t{}\n", values.join(" ")));
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = self.serialize();
        write_atomic(path, |w: &mut dyn Write| w.write_all(text.as_bytes()))
    }
}

/// Where sentence vectors come from.
#[derive(Clone, Debug)]
pub enum EmbeddingSource {
    Encoder { params: EncoderParams<f32>, vocab: Vocab },
    Cache(EmbeddingCache),
}

impl EmbeddingSource {
    pub fn dim(&self) -> usize {
        match self {
            EmbeddingSource::Encoder { params, .. } => params.embedding_dim(),
            EmbeddingSource::Cache(c) => c.dim(),
        }
    }
}

fn encode_sentence(s: &str, params: &EncoderParams<f32>, vocab: &Vocab) -> Result<Vec<f64>, EvalError> {
    let mut ids = vocab.encode(&tokenize(s));
    if ids.is_empty() {
        ids.push(Vocab::UNK);
    }
    Ok(bigru_encode(&ids, params)?.into_iter().map(f64::from).collect())
}

/// Slot vectors of one instance. RST nodes carry two vectors: the means of
/// their left and right EDU vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceEmbedding {
    pub instance_id: String,
    pub vectors: Vec<Vec<f64>>,
}

fn mean(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; vs[0].len()];
    for v in vs {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    let n = vs.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

pub fn embed_instances(instances: &[TaskInstance], source: &EmbeddingSource) -> Result<Vec<InstanceEmbedding>, EvalError> {
    let dim = source.dim();
    instances
        .iter()
        .map(|inst| {
            let sentences = inst.body.sentences();
            let mut vectors = Vec::with_capacity(sentences.len());
            for (slot, s) in sentences.iter().enumerate() {
                let v = match source {
                    EmbeddingSource::Encoder { params, vocab } => encode_sentence(s, params, vocab)?,
                    EmbeddingSource::Cache(c) => c
                        .get(&inst.instance_id, slot)
                        .ok_or_else(|| EvalError::MissingEmbedding(inst.instance_id.clone()))?
                        .to_vec(),
                };
                if v.len() != dim {
                    return Err(EvalError::DimMismatch {
                        expected: dim,
                        found: v.len(),
                    });
                }
                vectors.push(v);
            }
            if let InstanceBody::RstNode { left, .. } = &inst.body {
                let (l, r) = vectors.split_at(left.len());
                vectors = vec![mean(l), mean(r)];
            }
            Ok(InstanceEmbedding {
                instance_id: inst.instance_id.clone(),
                vectors,
            })
        })
        .collect()
}
