use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::synth::TaskKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureConstruction {
    /// `[x1, x2, x1⊙x2, |x1−x2|]`
    Pair4,
    /// `[x1, x1−x2, x1−x3, x1−x4, x1−x5]`
    Sp5,
    /// `[x1, x2, x1−x2]`
    Bso3,
    /// `[x1 … x6]`
    Concat6,
    Single,
    /// `[x1]` of a five-sentence instance, discarding the context.
    Sp1,
}

impl FeatureConstruction {
    pub fn name(self) -> &'static str {
        match self {
            FeatureConstruction::Pair4 => "pair4",
            FeatureConstruction::Sp5 => "sp5",
            FeatureConstruction::Bso3 => "bso3",
            FeatureConstruction::Concat6 => "concat6",
            FeatureConstruction::Single => "single",
            FeatureConstruction::Sp1 => "sp1",
        }
    }

    /// Number of input vectors.
    pub fn arity(self) -> usize {
        match self {
            FeatureConstruction::Pair4 | FeatureConstruction::Bso3 => 2,
            FeatureConstruction::Sp5 | FeatureConstruction::Sp1 => 5,
            FeatureConstruction::Concat6 => 6,
            FeatureConstruction::Single => 1,
        }
    }

    /// Output width as a multiple of the embedding dim.
    pub fn multiple(self) -> usize {
        match self {
            FeatureConstruction::Pair4 => 4,
            FeatureConstruction::Sp5 => 5,
            FeatureConstruction::Bso3 => 3,
            FeatureConstruction::Concat6 => 6,
            FeatureConstruction::Single | FeatureConstruction::Sp1 => 1,
        }
    }

    pub fn for_task(task: TaskKind) -> Self {
        match task {
            TaskKind::Sp => FeatureConstruction::Sp5,
            TaskKind::Bso => FeatureConstruction::Bso3,
            TaskKind::Dc => FeatureConstruction::Concat6,
            TaskKind::Ssp => FeatureConstruction::Single,
            TaskKind::PdtbExplicit | TaskKind::PdtbImplicit | TaskKind::Rst => FeatureConstruction::Pair4,
        }
    }
}

impl fmt::Display for FeatureConstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureConstruction {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use FeatureConstruction::*;
        [Pair4, Sp5, Bso3, Concat6, Single, Sp1]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| EvalError::InvalidSpec(format!("unknown feature construction {s:?}")))
    }
}

pub fn build_features(vectors: &[Vec<f64>], construction: FeatureConstruction) -> Result<Vec<f64>, EvalError> {
    if vectors.len() != construction.arity() {
        return Err(EvalError::WrongArity {
            construction: construction.name().to_string(),
            expected: construction.arity(),
            got: vectors.len(),
        });
    }
    let d = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(EvalError::DimMismatch {
            expected: d,
            found: v.len(),
        });
    }
    let x1 = &vectors[0];
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<f64>>();
    let mut out = Vec::with_capacity(d * construction.multiple());
    match construction {
        FeatureConstruction::Pair4 => {
            let x2 = &vectors[1];
            out.extend_from_slice(x1);
            out.extend_from_slice(x2);
            out.extend(x1.iter().zip(x2).map(|(a, b)| a * b));
            out.extend(x1.iter().zip(x2).map(|(a, b)| (a - b).abs()));
        }
        FeatureConstruction::Sp5 => {
            out.extend_from_slice(x1);
            for x in &vectors[1..] {
                out.extend(diff(x1, x));
            }
        }
        FeatureConstruction::Bso3 => {
            out.extend_from_slice(x1);
            out.extend_from_slice(&vectors[1]);
            out.extend(diff(x1, &vectors[1]));
        }
        FeatureConstruction::Concat6 => vectors.iter().for_each(|v| out.extend_from_slice(v)),
        FeatureConstruction::Single | FeatureConstruction::Sp1 => out.extend_from_slice(x1),
    }
    Ok(out)
}
