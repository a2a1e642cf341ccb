//! Local geometry on coordinate charts: jets, tensor fields, curvature,
//! transplantation of geometric germs, curvature identities, curvature
//! models and geodesics.

pub mod error;
pub mod jets;
pub mod fields;
pub mod poly;
pub mod curvature;
pub mod fixtures;
pub mod linalg;
pub mod transplant;
pub mod identities;
pub mod models;
pub mod geodesics;

pub use error::{GeomError, Result};
