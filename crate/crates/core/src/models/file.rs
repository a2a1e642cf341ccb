//! JSON model files.
//!
//! ```json
//! { "dimension": 2, "signature": [0, 2], "epsilon": [1, 0, 0, 1],
//!   "A": [ {"index": [0, 1, 0, 1], "value": 1.0} ] }
//! ```
//!
//! `epsilon` and `J` (optional, `J_i^a` with `J e_i = J_i^a e_a`) are row-major.
//! Indices are 0-based. Listed entries of `A` are completed over the symmetries
//! `A_ijkl = −A_jikl = −A_ijlk = A_klij`; conflicting entries are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

use super::{idx4, CurvatureModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub index: [usize; 4],
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dimension: usize,
    pub signature: [usize; 2],
    pub epsilon: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<ModelEntry>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<f64>>,
}

fn orbit(t: [usize; 4]) -> [([usize; 4], f64); 8] {
    let [i, j, k, l] = t;
    [
        ([i, j, k, l], 1.0),
        ([j, i, k, l], -1.0),
        ([i, j, l, k], -1.0),
        ([j, i, l, k], 1.0),
        ([k, l, i, j], 1.0),
        ([l, k, i, j], -1.0),
        ([k, l, j, i], -1.0),
        ([l, k, j, i], 1.0),
    ]
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// Complete, build and validate the model.
    pub fn to_model(&self) -> Result<CurvatureModel> {
        let m = self.dimension;
        let signature = (self.signature[0], self.signature[1]);
        if signature.0 + signature.1 != m {
            return Err(GeomError::Format(format!("signature {:?} does not add up to dimension {m}", self.signature)));
        }
        let mut set: BTreeMap<[usize; 4], f64> = BTreeMap::new();
        for e in &self.a {
            if e.index.iter().any(|i| *i >= m) {
                return Err(GeomError::IndexOutOfRange { index: *e.index.iter().max().expect("four"), dim: m });
            }
            for (t, s) in orbit(e.index) {
                let v = s * e.value;
                let degenerate = t[0] == t[1] || t[2] == t[3];
                let prev = set.get(&t).copied().or(if degenerate { Some(0.0) } else { None });
                if let Some(p) = prev {
                    if (p - v).abs() > 1e-12 * (1.0 + p.abs().max(v.abs())) {
                        return Err(GeomError::Format(format!("conflicting entries for A{t:?}: {p} and {v}")));
                    }
                }
                set.insert(t, v);
            }
        }
        let mut a = vec![0.0; m.pow(4)];
        for (t, v) in set {
            a[idx4(m, t[0], t[1], t[2], t[3])] = v;
        }
        let model = CurvatureModel::new(self.epsilon.clone(), signature, a, self.j.clone())?;
        model.require_valid()?;
        Ok(model)
    }

    /// Generating entries `i < j`, `k < l`, `(i, j) ≤ (k, l)` with nonzero values.
    pub fn from_model(model: &CurvatureModel) -> Self {
        let m = model.dim;
        let mut a = Vec::new();
        for t in crate::jets::index_tuples(m, 4) {
            let (i, j, k, l) = (t[0], t[1], t[2], t[3]);
            if i < j && k < l && (i, j) <= (k, l) {
                let value = model.get(i, j, k, l);
                if value != 0.0 {
                    a.push(ModelEntry { index: [i, j, k, l], value });
                }
            }
        }
        Self {
            dimension: m,
            signature: [model.signature.0, model.signature.1],
            epsilon: model.epsilon.clone(),
            a,
            j: model.j.clone(),
        }
    }
}
