//! Discretized, truncated multi-mode photon Fock space.
//!
//! A brute-force counterpart of [`crate::radiation`]: currents are projected
//! onto a finite grid of photon modes, each mode is displaced exactly, and
//! overlaps, expectation values and interference terms are computed from the
//! truncated state vectors.

mod grid;
mod operator;
mod state;

pub use grid::{build_mode_grid, build_mode_grid_in_frame, Mode, ModeGrid};
pub use operator::{
    interference_term, matrix_element, observable_expectation, Monomial, OperatorSpec, OperatorTerm,
};
pub use state::{
    bogoliubov_residual, coherent_vector, displace_vacuum, displacement_matrix,
    displacement_residuals, fock_overlap, project_current, required_n_max, restricted_block,
    unitarity_residual, CoherentSpec, ProductState, TruncatedFockState, DISPLACEMENT_SIGN,
    LEAK_BOUND, MAX_PRODUCT_TERMS,
};
