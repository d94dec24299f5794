//! Line-soliton solutions of the KP equation built from totally positive
//! Grassmannian data of Vandermonde-weighted form, together with the finite
//! Toda lattice they generate, the real divisors of the dressed wavefunction,
//! and the space-time inversion duality between orders `k` and `n - k`.

pub mod darboux_dressing;
pub mod divisor_lab;
pub mod duality;
pub mod error;
pub mod extended;
pub mod poly;
pub mod soliton_data;
mod subsets;
pub mod tau_engine;
pub mod toda_core;
pub mod tridiag;

pub use error::{Error, Result};
pub use soliton_data::{make_soliton_data, SolitonData};
pub use tau_engine::TimeVector;
pub use toda_core::{jacobi_matrix, TodaState};
