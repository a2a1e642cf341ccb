//! JSON serialization of polynomial fields ("germ files").
//!
//! ```json
//! { "kind": "metric", "dimension": 2, "signature": [0, 2], "degree": 2,
//!   "coefficients": [ {"component": [0, 1], "multi_index": [1, 1], "value": 0.5} ] }
//! ```
//!
//! Metric components may be listed once for `i ≤ j`; the loader fills in the
//! mirror entry and rejects files whose two entries disagree.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::jets::Variance;
use crate::poly::Polynomial;

use super::{ConnectionField, EndoField, Field, MetricField, OneFormField, PolynomialField, StructureKind, Symmetry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GermKind {
    Metric,
    Endo,
    Connection,
    Oneform,
    Scalar,
    Tensor,
}

impl GermKind {
    fn default_slots(self) -> Option<Vec<Variance>> {
        use Variance::{Co, Contra};
        match self {
            GermKind::Metric => Some(vec![Co, Co]),
            GermKind::Endo => Some(vec![Co, Contra]),
            GermKind::Connection => Some(vec![Co, Co, Contra]),
            GermKind::Oneform => Some(vec![Co]),
            GermKind::Scalar => Some(vec![]),
            GermKind::Tensor => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub component: Vec<usize>,
    pub multi_index: Vec<u8>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GermFile {
    pub kind: GermKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<[usize; 2]>,
    /// `para` or `complex` for endomorphism fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureKind>,
    /// Slot variances, required for `tensor` files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<Variance>>,
    pub degree: usize,
    pub coefficients: Vec<Coefficient>,
}

impl GermFile {
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

    pub fn slots(&self) -> Result<Vec<Variance>> {
        self.kind
            .default_slots()
            .or_else(|| self.slots.clone())
            .ok_or_else(|| GeomError::Format("tensor germ files need a \"slots\" list".into()))
    }

    /// Serialize a polynomial field. Metric entries are written for `i ≤ j` only.
    pub fn from_field(
        kind: GermKind,
        field: &PolynomialField,
        signature: Option<(usize, usize)>,
        structure: Option<StructureKind>,
    ) -> Self {
        let m = field.dim();
        let rank = field.slots().len();
        let mut coefficients = Vec::new();
        for idx in crate::jets::index_tuples(m, rank) {
            if kind == GermKind::Metric && idx[0] > idx[1] {
                continue;
            }
            for (e, c) in field.component(&idx).terms() {
                coefficients.push(Coefficient { component: idx.clone(), multi_index: e.clone(), value: c });
            }
        }
        Self {
            kind,
            dimension: m,
            signature: signature.map(|(p, q)| [p, q]),
            structure,
            slots: if kind == GermKind::Tensor { Some(field.slots()) } else { None },
            degree: field.degree(),
            coefficients,
        }
    }

    /// Build the polynomial field, validating indices and symmetries.
    pub fn to_field(&self) -> Result<PolynomialField> {
        let m = self.dimension;
        if m == 0 || m > crate::jets::MAX_DIM {
            return Err(GeomError::UnsupportedDimension(m));
        }
        let slots = self.slots()?;
        let rank = slots.len();
        let mut table: BTreeMap<(Vec<usize>, Vec<u8>), f64> = BTreeMap::new();
        for c in &self.coefficients {
            if c.component.len() != rank {
                return Err(GeomError::Format(format!("component {:?} should have {rank} indices", c.component)));
            }
            if let Some(&i) = c.component.iter().find(|&&i| i >= m) {
                return Err(GeomError::IndexOutOfRange { index: i, dim: m });
            }
            if c.multi_index.len() != m {
                return Err(GeomError::Format(format!("multi-index {:?} should have {m} entries", c.multi_index)));
            }
            let d: usize = c.multi_index.iter().map(|&k| k as usize).sum();
            if d > self.degree {
                return Err(GeomError::Format(format!(
                    "multi-index {:?} exceeds the declared degree {}",
                    c.multi_index, self.degree
                )));
            }
            if !c.value.is_finite() {
                return Err(GeomError::Format(format!("non-finite coefficient for {:?}", c.component)));
            }
            let key = (c.component.clone(), c.multi_index.clone());
            if table.insert(key, c.value).is_some() {
                return Err(GeomError::Format(format!(
                    "duplicate coefficient for component {:?}, multi-index {:?}",
                    c.component, c.multi_index
                )));
            }
        }
        if self.kind == GermKind::Metric {
            let entries: Vec<_> = table.iter().map(|(k, v)| (k.clone(), *v)).collect();
            for ((comp, e), v) in entries {
                let mirror = (vec![comp[1], comp[0]], e.clone());
                match table.get(&mirror) {
                    Some(w) if *w != v => {
                        return Err(GeomError::SymmetryViolation(format!(
                            "g[{},{}] and g[{},{}] differ at multi-index {:?}",
                            comp[0], comp[1], comp[1], comp[0], e
                        )))
                    }
                    Some(_) => {}
                    None => {
                        table.insert(mirror, v);
                    }
                }
            }
        }
        let mut field = PolynomialField::zero(m, &slots);
        for ((comp, e), v) in table {
            field.component_mut(&comp).add_term(e, v);
        }
        if self.kind == GermKind::Metric {
            field = field.with_symmetries(vec![Symmetry::Symmetric(0, 1)]);
        }
        Ok(field)
    }

    fn expect_kind(&self, kind: GermKind) -> Result<()> {
        if self.kind != kind {
            return Err(GeomError::Format(format!("expected a {kind:?} germ, found {:?}", self.kind)));
        }
        Ok(())
    }

    pub fn metric(&self) -> Result<MetricField> {
        self.expect_kind(GermKind::Metric)?;
        let field: Arc<dyn Field> = Arc::new(self.to_field()?);
        match self.signature {
            Some([p, q]) => MetricField::new(field, (p, q)),
            None => MetricField::infer(field),
        }
    }

    pub fn endomorphism(&self) -> Result<EndoField> {
        self.expect_kind(GermKind::Endo)?;
        let kind = self
            .structure
            .ok_or_else(|| GeomError::Format("endomorphism germ needs \"structure\": \"para\" or \"complex\"".into()))?;
        EndoField::new(Arc::new(self.to_field()?), kind)
    }

    pub fn connection(&self) -> Result<ConnectionField> {
        self.expect_kind(GermKind::Connection)?;
        ConnectionField::new(Arc::new(self.to_field()?))
    }

    pub fn one_form(&self) -> Result<OneFormField> {
        self.expect_kind(GermKind::Oneform)?;
        OneFormField::new(Arc::new(self.to_field()?))
    }
}

/// Polynomial field from a list of `(component, exponents, value)` triples.
pub fn polynomial_field_from_terms(
    dim: usize,
    slots: &[Variance],
    terms: &[(Vec<usize>, Vec<u8>, f64)],
) -> Result<PolynomialField> {
    let mut field = PolynomialField::zero(dim, slots);
    for (comp, e, v) in terms {
        if e.len() != dim {
            return Err(GeomError::DimensionMismatch { expected: dim, found: e.len() });
        }
        field.component_mut(comp).add_term(e.clone(), *v);
    }
    Ok(field)
}

/// Symmetric polynomial 2-tensor from its upper-triangular components.
pub fn symmetric_from_upper(dim: usize, upper: &[((usize, usize), Polynomial)]) -> PolynomialField {
    let mut field = PolynomialField::zero(dim, &[Variance::Co, Variance::Co]);
    for ((i, j), p) in upper {
        *field.component_mut(&[*i, *j]) = p.clone();
        *field.component_mut(&[*j, *i]) = p.clone();
    }
    field.with_symmetries(vec![Symmetry::Symmetric(0, 1)])
}
