//! Truncated multivariate Taylor arithmetic and tensors of jets.

mod jet;
mod layout;
mod tensor;

pub use jet::{coordinate_jets, coordinate_point, Elementary, Jet};
pub use layout::{layout, Layout, MultiIndex, MAX_DIM, MAX_ORDER};
pub use tensor::{einsum, index_tuples, JetTensor, Variance};

/// Coordinate jet for `x^i` at a point (see [`Jet::variable`]).
pub fn jet_variable(i: usize, value: f64, dim: usize, order: usize) -> crate::Result<Jet> {
    Jet::variable(i, value, dim, order)
}

/// Compose an elementary function with a jet.
pub fn jet_apply(f: Elementary, x: &Jet) -> crate::Result<Jet> {
    x.apply(f)
}

/// Raw partial derivative `∂^α` recorded in a jet.
pub fn jet_extract(x: &Jet, alpha: &MultiIndex) -> crate::Result<f64> {
    x.derivative(alpha)
}
