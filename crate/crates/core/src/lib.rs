//! Finite-instance construction of quantum theory from group actions on a
//! space of conceptual variables: focused parameters, parametric Hilbert
//! spaces, Born-rule measurement, unitary dynamics and equivariant
//! estimation, each with an exhaustive or oracle-based check.
//!
//! The linear-algebra layer is generic over [`scalar::Real`]; the aliases
//! below fix it to `f64`. Exact checks use [`Exact`] rationals.

// `!(x <= tol)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtin;
pub mod dynamics;
pub mod focusing;
pub mod group;
pub mod inference;
pub mod io;
pub mod measurement;
pub mod quantum_space;
pub mod report;
pub mod scalar;
pub mod scenarios;
pub mod spin;

pub use scalar::Exact;

/// Double-precision complex matrix.
pub type Matrix = scalar::CMatrix<f64>;
/// Double-precision complex vector.
pub type Vector = scalar::CVector<f64>;
pub type ParametricSpace = quantum_space::ParametricSpace<f64>;
pub type UnitaryFamily = quantum_space::UnitaryFamily<f64>;
pub type QuantumSpace = quantum_space::QuantumSpace<f64>;
pub type CharacterTable = quantum_space::CharacterTable<f64>;
pub type HermitianOperator = quantum_space::HermitianOperator<f64>;
pub type DensityOperator = measurement::DensityOperator<f64>;
pub type EffectOperator = measurement::EffectOperator<f64>;
pub type Hamiltonian = dynamics::Hamiltonian<f64>;
/// Inference over exact rationals.
pub type FiniteModel = inference::FiniteModel<Exact>;
pub type LossFunction = inference::LossFunction<Exact>;
