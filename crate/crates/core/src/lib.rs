//! Free-fermion (Gaussian) simulation of an adaptive measurement-and-feedforward
//! protocol that steers a two-band lattice model into its Chern-insulator ground
//! state, together with the observables, effective Lindbladian analysis and
//! symmetry-class checks used to characterize it.
//!
//! Index convention: a correlation matrix stores `G[i][j] = <c_i^† c_j>` and a
//! [`gaussian::ModeVector`] `w` names the mode `χ = Σ_i w_i c_i`, so the occupation
//! of `χ` is `w^† G w`. See [`gaussian::CONVENTION`].

pub mod chern;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod lindblad;
pub mod observables;
pub mod protocol;
pub mod rng;
pub mod symmetry;

pub use error::{Error, Result};
