//! Riccati solvers: scalar closed forms with an RK4 oracle, the matrix
//! exponential, coefficient assembly and the matrix block formula.

mod coefficients;
mod expm;
mod matrix;
mod scalar;

pub use coefficients::{assemble_coefficients, CoefficientMatrices, Matrix8};
pub use expm::matrix_exponential;
pub use matrix::{
    matrix_riccati_oracle, rde_rhs, solvability_check, solve_matrix_riccati, MatrixRiccatiTable, SolvabilityReport,
};
pub use scalar::{delta_roots, scalar_closed_form, scalar_riccati_oracle, DeltaRoots, ScalarRiccatiTable};
