//! Binary checkpoint: 8-byte magic, one line of JSON header, then the
//! little-endian `f32` data of every tensor in header order.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encoder::{EncoderDims, EncoderParams, HeadKind};
use super::tensor::{Parameters, Tensor};
use super::NnError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DSEVCKP1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub dims: EncoderDims,
    pub vocab_size: usize,
    pub heads: Vec<HeadKind>,
    pub seed: u64,
    pub tensors: Vec<TensorEntry>,
}

pub fn encode_checkpoint(params: &EncoderParams<f32>, seed: u64) -> Vec<u8> {
    let header = CheckpointHeader {
        dims: params.dims.clone(),
        vocab_size: params.dims.vocab_size,
        heads: HeadKind::ALL.to_vec(),
        seed,
        tensors: params
            .tensor_names()
            .into_iter()
            .zip(params.tensors())
            .map(|(name, t)| TensorEntry {
                name,
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let mut out = Vec::with_capacity(16 + 4 * params.num_parameters());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(serde_json::to_string(&header).expect("header serializes").as_bytes());
    out.push(b'\n');
    for t in params.tensors() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint<R: Read>(reader: R) -> Result<(EncoderParams<f32>, CheckpointHeader), NnError> {
    let mut reader = BufReader::new(reader);
    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|_| NnError::Checkpoint("truncated magic".into()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let mut line = String::new();
    reader
        .read_line(&mut line)
        .map_err(|e| NnError::Checkpoint(format!("header: {e}")))?;
    let header: CheckpointHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| NnError::Checkpoint(format!("header: {e}")))?;
    if header.vocab_size != header.dims.vocab_size {
        return Err(NnError::Checkpoint("vocab size disagrees with dims".into()));
    }
    if header.heads != HeadKind::ALL {
        return Err(NnError::Checkpoint("unexpected head inventory".into()));
    }

    let mut params = EncoderParams::<f32>::zeros(header.dims.clone());
    let names = params.tensor_names();
    if names.len() != header.tensors.len() {
        return Err(NnError::Checkpoint(format!(
            "expected {} tensors, header declares {}",
            names.len(),
            header.tensors.len()
        )));
    }
    for ((entry, name), t) in header.tensors.iter().zip(&names).zip(params.tensors_mut()) {
        if &entry.name != name || entry.shape != t.shape() {
            return Err(NnError::Checkpoint(format!(
                "tensor {} declared {:?}, expected {} {:?}",
                entry.name,
                entry.shape,
                name,
                t.shape()
            )));
        }
        let mut buf = vec![0u8; 4 * t.len()];
        reader
            .read_exact(&mut buf)
            .map_err(|_| NnError::Checkpoint(format!("truncated data for {name}")))?;
        let values: Vec<f32> = buf
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        *t = Tensor::from_vec(entry.shape.as_slice(), values)?;
    }
    let mut rest = Vec::new();
    reader
        .read_to_end(&mut rest)
        .map_err(|e| NnError::Checkpoint(e.to_string()))?;
    if !rest.is_empty() {
        return Err(NnError::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    if !params.all_finite() {
        return Err(NnError::NonFinite("checkpoint tensor".into()));
    }
    Ok((params, header))
}

pub fn save_checkpoint(path: &Path, params: &EncoderParams<f32>, seed: u64) -> Result<(), NnError> {
    let bytes = encode_checkpoint(params, seed);
    crate::io::write_atomic(path, |w| w.write_all(&bytes)).map_err(|e| NnError::Checkpoint(e.to_string()))
}

pub fn load_checkpoint(path: &Path) -> Result<(EncoderParams<f32>, CheckpointHeader), NnError> {
    let file = std::fs::File::open(path).map_err(|e| NnError::Checkpoint(format!("{}: {e}", path.display())))?;
    decode_checkpoint(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> EncoderParams<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        EncoderParams::random(EncoderDims::new(15, 4, 3), &mut rng)
    }

    #[test]
    fn round_trip() {
        let p = params();
        let bytes = encode_checkpoint(&p, 13);
        assert_eq!(&bytes[..8], CHECKPOINT_MAGIC);
        let (q, header) = decode_checkpoint(bytes.as_slice()).unwrap();
        assert_eq!(p, q);
        assert_eq!(header.seed, 13);
        assert_eq!(header.vocab_size, 15);
    }

    #[test]
    fn rejects_corruption() {
        let p = params();
        let mut bytes = encode_checkpoint(&p, 1);
        bytes[0] = b'X';
        assert!(decode_checkpoint(bytes.as_slice()).is_err());

        let bytes = encode_checkpoint(&p, 1);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 3]).is_err());

        let mut bytes = encode_checkpoint(&p, 1);
        bytes.push(0);
        assert!(decode_checkpoint(bytes.as_slice()).is_err());
    }

    #[test]
    fn rejects_shape_tampering() {
        let p = params();
        let bytes = encode_checkpoint(&p, 1);
        let text = String::from_utf8_lossy(&bytes[8..]).to_string();
        let header_end = text.find('\n').unwrap();
        let tampered = text[..header_end].replacen("[15,4]", "[4,15]", 1);
        let mut out = CHECKPOINT_MAGIC.to_vec();
        out.extend_from_slice(tampered.as_bytes());
        out.extend_from_slice(&bytes[8 + header_end..]);
        assert!(decode_checkpoint(out.as_slice()).is_err());
    }
}
