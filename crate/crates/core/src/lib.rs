//! Entanglement-generation analysis for bipartite open quantum systems.
//!
//! Two `d`-level systems coupled to a common bath evolve under a
//! Kossakowski–Lindblad generator `L`. This crate decides whether the
//! semigroup `exp(tL)` can entangle a given product state `|ψ⟩⟨ψ| ⊗ |φ⟩⟨φ|`
//! by looking at the partial-transpose conjugated generator
//! `L̃ = T⁽²⁾ ∘ L ∘ T⁽²⁾` and the principal minors of a small Hermitian
//! witness matrix built from it. Every first-order verdict can be
//! cross-checked against a brute-force evolution oracle ([`dynamics`]).
//!
//! Conventions used throughout:
//!
//! * Composite index of `|k⟩ ⊗ |ℓ⟩` is `k·d + ℓ` (party 1 is the slow index).
//! * Density matrices are vectorized by column stacking.
//! * The dissipator is written in Gorini–Kossakowski–Sudarshan order,
//!   `D[ρ] = Σ_ab K_ab (G_a ρ G_b − ½{G_b G_a, ρ})` with
//!   `G = (F₁⊗I, …, F_n⊗I, I⊗F₁, …, I⊗F_n)` and
//!   `K = [[A, B], [B†, C]]`.

pub mod basis;
pub mod cli;
pub mod dynamics;
pub mod generator;
pub mod linalg;
pub mod model;
pub mod presets;
pub mod search;
pub mod witness;

mod error;

pub use error::{Error, Result};

pub use basis::{gellmann_basis, pauli_basis, tensor_pauli_basis, BasisSet};
pub use dynamics::{
    entanglement_onset, evolve, negativity, partial_transpose, DensityMatrix, NegativityCurve,
    Onset,
};
pub use generator::{
    build_superoperator, partial_transpose_conjugate, validate_cp, CpReport, GeneratorModel,
    HamiltonianSpec, KossakowskiBlocks, Superoperator,
};
pub use search::{
    capability, find_entangling_state, sample_product_state, CapabilityReport, SearchReport,
    SearchVerdict,
};
pub use witness::{
    complement_basis, expansion_coefficient, first_order_verdict, flip_vectors, principal_minors,
    resolve_verdict, witness_matrix, FirstOrderVerdict, FlipVectors, MinorReport, ProductState,
    ResolvedVerdict, WitnessMatrix,
};
