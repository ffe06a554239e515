//! Exact calculus of parameter-dependent polyhomogeneous symbols.
//!
//! Symbols are finite sums of terms `c · ξ^α R^k ρ^p Π s^e` homogeneous in
//! `(ξ, R)`, where `ρ = (R² + |ξ|²)^{1/2}` is kept as a factor of its own and
//! the `s` are formal functions of `x`. Coefficients are Gaussian rationals,
//! so identities such as `a ∘ parametrix(a) = 1` hold exactly.

mod calculus;
mod coeff;
mod expectation;
mod parity;
mod poly;
mod term;
mod two_variable;

pub use calculus::{is_identity, parametrix, symbol_product};
pub use coeff::GaussRat;
pub use expectation::{expansion_value, expectation_expansion, Bindings, Manifold, QUADRATURE_NODES};
pub use parity::{parity_vanishing_check, Parity, ParityReport, ParityTerm};
pub use poly::{homogeneity_check, HomogeneityDiagnostic, HomogeneityReport, PolyhomSymbol, Term};
pub use term::{Monomial, Scalar};
pub use two_variable::{reduce_two_variable, TwoVariableSymbol};
