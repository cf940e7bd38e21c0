//! Dense complex linear algebra for small matrices (n <= 64).

mod eigen;
mod lu;
mod matrix;
mod spectrum;
mod svd;

pub use eigen::{eigen_2x2, eigen_general, eigendecompose, eigenvalues_qr, sort_eigenvalues, Eigen, MAX_DIM};
pub use lu::{condition_number, inverse, inverse_with_cap, Lu, DEFAULT_CONDITION_CAP};
pub use matrix::{
    add_vec, canonical_gauge, first_nonzero, inner, norm, scale_vec, sub_vec, CMatrix, C64, I, ONE, ZERO,
};
pub use spectrum::{multiplicity_report, Cluster, SpectrumReport, DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL};
pub use svd::{rank, rank_scaled, singular_values};

pub(crate) use eigen::comes_before;
pub(crate) use spectrum::report_from_values;

/// Pauli matrices.
pub mod pauli {
    use super::{CMatrix, I, ONE, ZERO};

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_2x2(ZERO, ONE, ONE, ZERO)
    }

    pub fn sigma_y() -> CMatrix {
        CMatrix::from_2x2(ZERO, -I, I, ZERO)
    }

    pub fn sigma_z() -> CMatrix {
        CMatrix::from_2x2(ONE, ZERO, ZERO, -ONE)
    }
}
