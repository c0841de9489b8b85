use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::Vocab;
use super::CorpusError;
use crate::nn::Tensor;

/// Range used for rows that the vector file does not cover.
pub const OOV_INIT_RANGE: f32 = 0.05;

/// Embedding table initialized from a text vector file.
#[derive(Clone, Debug)]
pub struct LoadedVectors {
    pub table: Tensor<f32>,
    /// Vocabulary rows copied from the file.
    pub coverage: usize,
}

pub fn load_word_vectors(path: &Path, vocab: &Vocab, dim: usize, seed: u64) -> Result<LoadedVectors, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::UnreadableFile(format!("{}: {e}", path.display())))?;
    read_word_vectors(BufReader::new(file), vocab, dim, seed)
}

/// Reads `token v1 … vd` lines. A leading `count dim` header line is
/// skipped. Rows absent from the file are drawn uniformly from
/// `[−0.05, 0.05]` with `seed`.
pub fn read_word_vectors<R: BufRead>(reader: R, vocab: &Vocab, dim: usize, seed: u64) -> Result<LoadedVectors, CorpusError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Tensor::zeros(&[vocab.len(), dim]);
    for v in table.data_mut() {
        *v = rng.random_range(-OOV_INIT_RANGE..=OOV_INIT_RANGE);
    }
    let mut filled = vec![false; vocab.len()];
    let mut coverage = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::UnreadableFile(e.to_string()))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if i == 0 && values.len() == 1 && token.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
            continue;
        }
        if values.len() != dim {
            return Err(CorpusError::DimMismatch {
                expected: dim,
                found: values.len(),
            });
        }
        let Some(row) = vocab.get(token) else { continue };
        if filled[row] {
            continue;
        }
        let parsed: Result<Vec<f32>, _> = values.iter().map(|v| v.parse::<f32>()).collect();
        let parsed = parsed.map_err(|e| CorpusError::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?;
        table.row_mut(row).copy_from_slice(&parsed);
        filled[row] = true;
        coverage += 1;
    }
    Ok(LoadedVectors { table, coverage })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocab {
        Vocab::from_tokens(["a".to_string(), "b".to_string()]).unwrap()
    }

    #[test]
    fn copies_rows_and_counts_coverage() {
        let v = vocab();
        let loaded = read_word_vectors("a 1.0 2.0\nzz 3 4\n".as_bytes(), &v, 2, 7).unwrap();
        assert_eq!(loaded.table.row(v.index_of("a")), &[1.0, 2.0]);
        assert_eq!(loaded.coverage, 1);
        let b = loaded.table.row(v.index_of("b"));
        assert!(b.iter().all(|x| x.abs() <= OOV_INIT_RANGE));
    }

    #[test]
    fn dim_mismatch() {
        assert!(matches!(
            read_word_vectors("a 1.0 2.0\n".as_bytes(), &vocab(), 3, 7),
            Err(CorpusError::DimMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn header_line_is_skipped() {
        let loaded = read_word_vectors("1 2\na 1 2\n".as_bytes(), &vocab(), 2, 7).unwrap();
        assert_eq!(loaded.coverage, 1);
    }

    #[test]
    fn seed_determines_oov_rows() {
        let v = vocab();
        let a = read_word_vectors("".as_bytes(), &v, 4, 3).unwrap();
        let b = read_word_vectors("".as_bytes(), &v, 4, 3).unwrap();
        assert_eq!(a.table, b.table);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_word_vectors(Path::new("/nonexistent/vectors.txt"), &vocab(), 2, 0),
            Err(CorpusError::UnreadableFile(_))
        ));
    }
}
