//! Built-in geometries for completeness experiments.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::fields::{constant_field, standard_metric, ConnectionField, FnField, MetricField, Symmetry};
use crate::jets::{JetTensor, Variance::{Co, Contra}};

use super::Geometry;

/// `cos x (dy² − dx²) + 2 sin x dx dy` on the plane (covering the torus).
pub fn misner_metric() -> MetricField {
    let f = FnField::new(2, &[Co, Co], |x| {
        let (c, s) = (x[0].cos(), x[0].sin());
        JetTensor::from_fn(2, &[Co, Co], |idx| {
            Ok(match (idx[0], idx[1]) {
                (0, 0) => -&c,
                (1, 1) => c.clone(),
                _ => s.clone(),
            })
        })
    })
    .with_symmetries(vec![Symmetry::Symmetric(0, 1)]);
    MetricField::new(Arc::new(f), (1, 1)).expect("Lorentzian at the origin")
}

/// `du dv / (u² + v²)` on the punctured plane.
pub fn meneghini_metric() -> MetricField {
    let f = FnField::new(2, &[Co, Co], |x| {
        let h = (&x[0] * &x[0] + &x[1] * &x[1]).recip()?;
        JetTensor::from_fn(2, &[Co, Co], |idx| Ok(if idx[0] == idx[1] { h.zero_like() } else { h.clone() }))
    })
    .with_symmetries(vec![Symmetry::Symmetric(0, 1)]);
    // the origin is excluded, so signature is checked away from it
    MetricField { field: Arc::new(f), signature: (1, 1) }
}

/// `Γ_11^1 = 1` on the line (covering the circle).
pub fn circle_connection() -> ConnectionField {
    ConnectionField::new(constant_field(1, &[Co, Co, Contra], vec![1.0])).expect("connection slots")
}

pub fn flat_metric(signature: (usize, usize)) -> MetricField {
    let m = signature.0 + signature.1;
    MetricField::new(constant_field(m, &[Co, Co], standard_metric(signature.0, signature.1)), signature)
        .expect("standard metric")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Misner,
    Meneghini,
    CircleGamma,
    Flat,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Misner, Scenario::Meneghini, Scenario::CircleGamma, Scenario::Flat];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Misner => "misner",
            Scenario::Meneghini => "meneghini",
            Scenario::CircleGamma => "circle-gamma",
            Scenario::Flat => "flat",
        }
    }

    pub fn geometry(self) -> Geometry {
        match self {
            Scenario::Misner => Geometry::Metric(misner_metric()),
            Scenario::Meneghini => Geometry::Metric(meneghini_metric()),
            Scenario::CircleGamma => Geometry::Connection(circle_connection()),
            Scenario::Flat => Geometry::Metric(flat_metric((0, 2))),
        }
    }

    pub fn expected_incomplete(self) -> bool {
        !matches!(self, Scenario::Flat)
    }

    pub fn basepoints(self) -> Vec<Vec<f64>> {
        match self {
            Scenario::Misner => vec![vec![0.0, 0.0], vec![1.0, 0.5]],
            Scenario::Meneghini => vec![vec![1.0, 0.5], vec![-0.5, 2.0]],
            Scenario::CircleGamma => vec![vec![0.0]],
            Scenario::Flat => vec![vec![0.0, 0.0], vec![3.0, -2.0]],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| GeomError::Format(format!("unknown scenario {s:?} (expected one of misner, meneghini, circle-gamma, flat)")))
    }
}
