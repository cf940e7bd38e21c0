//! Biorthonormal right/left eigenframes, the Hermitian metric and pseudo-norms.
//!
//! For a diagonalizable `H` with right eigenvectors `|psi_j>` (columns of `A`), the left
//! vectors are `|phi^j> = (A^-1)^dag |j>`, so that `<phi^i|psi_j> = delta_ij` and
//! `sum_j |psi_j><phi^j| = 1` hold to machine precision. The metric
//! `X = (A A^dag)^-1` maps `|psi_j>` to `|phi^j>`.
//!
//! Frames produced by [`build_frame`] use a fixed gauge so that band quantities are
//! single-valued functions of the Hamiltonian:
//!
//! * amplitude: `||psi_j|| = ||phi^j||` ("balanced"), which reduces to unit norm when `H`
//!   is Hermitian;
//! * phase: first nonzero component of `psi_j` real and positive.
//!
//! Energies are sorted by descending real part, ties by descending imaginary part.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    comes_before, eigendecompose, first_nonzero, inner, inverse_with_cap, norm, report_from_values, CMatrix, C64,
    DEFAULT_CLUSTER_TOL, DEFAULT_CONDITION_CAP, DEFAULT_RANK_TOL, ZERO,
};

/// Tolerances used when building frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameOptions {
    /// Eigenvalue merge distance relative to `||H||_F`.
    pub cluster_tol: f64,
    /// Singular-value threshold relative to the largest one.
    pub rank_tol: f64,
    /// Smallest admissible eigenvalue gap relative to `||H||_F`; closer spectra are
    /// treated as exceptional-point proximity.
    pub gap_floor: f64,
    /// `|Im E| <= reality_tol * (1 + |E|)` counts as real.
    pub reality_tol: f64,
    pub condition_cap: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions {
            cluster_tol: DEFAULT_CLUSTER_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            gap_floor: 1e-6,
            reality_tol: 1e-9,
            condition_cap: DEFAULT_CONDITION_CAP,
        }
    }
}

impl FrameOptions {
    /// Only requires diagonalizability; degenerate spectra are accepted.
    pub fn permissive() -> Self {
        FrameOptions { gap_floor: 0.0, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiorthFrame {
    energies: Vec<C64>,
    right: CMatrix,
    left: CMatrix,
    metric: CMatrix,
    real_spectrum: bool,
    min_gap: f64,
}

impl BiorthFrame {
    /// Frame from explicit right eigenvectors (columns of `right`) in whatever gauge they
    /// come in. The left vectors and metric follow from `right`.
    pub fn from_right_vectors(energies: Vec<C64>, right: CMatrix, opts: &FrameOptions) -> Result<Self> {
        let n = right.dim();
        if energies.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: energies.len() });
        }
        let inv = inverse_with_cap(&right, opts.condition_cap)?;
        let left = inv.adjoint();
        let metric = &left * &left.adjoint();
        let real_spectrum = energies.iter().all(|e| e.im.abs() <= opts.reality_tol * (1.0 + e.norm()));
        let mut min_gap = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                min_gap = min_gap.min((energies[i] - energies[j]).norm());
            }
        }
        Ok(BiorthFrame { energies, right, left, metric, real_spectrum, min_gap })
    }

    pub fn dim(&self) -> usize {
        self.right.dim()
    }

    pub fn energies(&self) -> &[C64] {
        &self.energies
    }

    pub fn energy(&self, j: usize) -> C64 {
        self.energies[j]
    }

    /// Matrix `A` whose columns are the right eigenvectors.
    pub fn right(&self) -> &CMatrix {
        &self.right
    }

    /// Matrix whose columns are the left eigenvectors.
    pub fn left(&self) -> &CMatrix {
        &self.left
    }

    /// `X = (A A^dag)^-1` of this frame.
    pub fn metric(&self) -> &CMatrix {
        &self.metric
    }

    pub fn real_spectrum(&self) -> bool {
        self.real_spectrum
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn psi(&self, j: usize) -> Vec<C64> {
        self.right.column(j)
    }

    pub fn phi(&self, j: usize) -> Vec<C64> {
        self.left.column(j)
    }

    /// `<phi^j(self)|psi_k(other)>`.
    pub fn overlap(&self, j: usize, other: &BiorthFrame, k: usize) -> C64 {
        let n = self.dim();
        (0..n).map(|i| self.left[(i, j)].conj() * other.right[(i, k)]).sum()
    }

    /// Applies `psi_j -> f psi_j`, `phi^j -> phi^j / conj(f)`.
    pub fn with_band_gauge(&self, j: usize, f: C64) -> Result<BiorthFrame> {
        if f.norm() == 0.0 || !f.re.is_finite() || !f.im.is_finite() {
            return Err(Error::ZeroFactor { index: j });
        }
        let mut right = self.right.clone();
        let mut left = self.left.clone();
        let g = f.conj().inv();
        for i in 0..self.dim() {
            right[(i, j)] *= f;
            left[(i, j)] *= g;
        }
        let metric = &left * &left.adjoint();
        Ok(BiorthFrame { right, left, metric, ..self.clone() })
    }

    /// Relabels bands: band `j` of the result is band `perm[j]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> BiorthFrame {
        let n = self.dim();
        assert_eq!(perm.len(), n);
        let mut right = CMatrix::zeros(n);
        let mut left = CMatrix::zeros(n);
        for (j, &k) in perm.iter().enumerate() {
            right.set_column(j, &self.right.column(k));
            left.set_column(j, &self.left.column(k));
        }
        let energies = perm.iter().map(|&k| self.energies[k]).collect();
        BiorthFrame { energies, right, left, ..self.clone() }
    }

    /// `max |<phi^i|psi_j> - delta_ij|`.
    pub fn biorthonormality_defect(&self) -> f64 {
        let g = &self.left.adjoint() * &self.right;
        (&g - &CMatrix::identity(self.dim())).max_abs()
    }

    /// `max |(sum_j |psi_j><phi^j| - 1)_{ab}|`.
    pub fn completeness_defect(&self) -> f64 {
        let p = &self.right * &self.left.adjoint();
        (&p - &CMatrix::identity(self.dim())).max_abs()
    }

    /// `max_j ||X psi_j - phi^j||`.
    pub fn metric_defect(&self) -> f64 {
        (0..self.dim())
            .map(|j| {
                let xp = self.metric.mul_vec(&self.psi(j));
                norm(&xp.iter().zip(self.phi(j)).map(|(a, b)| a - b).collect::<Vec<_>>())
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the biorthonormal frame of `h` in the balanced canonical gauge.
///
/// Fails with [`Error::NonDiagonalizable`] on defective `h` and with
/// [`Error::NearDefective`] when two energies are closer than `gap_floor * ||H||_F`.
pub fn build_frame(h: &CMatrix, opts: &FrameOptions) -> Result<BiorthFrame> {
    let eig = eigendecompose(h)?;
    let report = report_from_values(h, &eig.values, opts.cluster_tol, opts.rank_tol);
    if !report.diagonalizable {
        return Err(Error::NonDiagonalizable(Box::new(report)));
    }
    let scale = h.frobenius_norm();
    let floor = opts.gap_floor * scale;
    let n = h.dim();
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_gap = min_gap.min((eig.values[i] - eig.values[j]).norm());
        }
    }
    if n > 1 && min_gap < floor {
        return Err(Error::NearDefective { min_gap, floor });
    }
    let unit = CMatrix::from_columns(&eig.vectors);
    let inv = inverse_with_cap(&unit, opts.condition_cap)?;
    // Balance amplitudes: ||psi_j|| = ||phi^j|| (psi_j has unit norm here).
    let mut right = unit;
    for j in 0..n {
        let phi_norm = norm(inv.row(j));
        let s = phi_norm.sqrt();
        for i in 0..n {
            right[(i, j)] *= s;
        }
    }
    BiorthFrame::from_right_vectors(eig.values, right, opts)
}

/// `(A A^dag)^-1` recomputed from the frame's right vectors, Hermitized.
pub fn metric(frame: &BiorthFrame) -> Result<CMatrix> {
    let a = frame.right();
    let x = inverse_with_cap(&(a * &a.adjoint()), DEFAULT_CONDITION_CAP)?;
    Ok(x.hermitian_part())
}

/// Contravariant (`c^j = <phi^j|Psi>`) and covariant (`c_j = <psi_j|Psi>`) components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub contravariant: Vec<C64>,
    pub covariant: Vec<C64>,
}

impl Expansion {
    /// `sum_j conj(c_j) c^j`, which equals `<Psi|Psi>`.
    pub fn norm_sqr(&self) -> C64 {
        self.covariant.iter().zip(&self.contravariant).map(|(a, b)| a.conj() * b).sum()
    }
}

pub fn expand(frame: &BiorthFrame, psi: &[C64]) -> Result<Expansion> {
    check_dim(frame, psi)?;
    let n = frame.dim();
    let contravariant = (0..n).map(|j| inner(&frame.phi(j), psi)).collect();
    let covariant = (0..n).map(|j| inner(&frame.psi(j), psi)).collect();
    Ok(Expansion { contravariant, covariant })
}

/// `sum_j c^j |psi_j>`.
pub fn reconstruct(frame: &BiorthFrame, contravariant: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; frame.dim()];
    for (j, c) in contravariant.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate() {
            *o += c * frame.right()[(i, j)];
        }
    }
    out
}

/// `<Psi|X|Psi>` (real because `X` is Hermitian).
pub fn pseudo_norm(frame: &BiorthFrame, psi: &[C64]) -> Result<f64> {
    check_dim(frame, psi)?;
    Ok(inner(psi, &frame.metric().mul_vec(psi)).re)
}

fn check_dim(frame: &BiorthFrame, psi: &[C64]) -> Result<()> {
    if psi.len() != frame.dim() {
        return Err(Error::DimensionMismatch { expected: frame.dim(), got: psi.len() });
    }
    Ok(())
}

/// Normalized overlap `|<phi^j(prev)|psi_k(next)>| / (||phi^j|| ||psi_k||)`.
fn tracking_score(prev: &BiorthFrame, j: usize, next: &BiorthFrame, k: usize) -> f64 {
    let denom = norm(&prev.phi(j)) * norm(&next.psi(k));
    if denom == 0.0 {
        0.0
    } else {
        prev.overlap(j, next, k).norm() / denom
    }
}

/// Band assignment between neighbouring parameter points: `perm[j]` is the index in `next`
/// of the band continuing band `j` of `prev` (maximal total overlap).
pub fn track_bands(prev: &BiorthFrame, next: &BiorthFrame) -> Vec<usize> {
    let n = prev.dim();
    let score: Vec<Vec<f64>> =
        (0..n).map(|j| (0..n).map(|k| tracking_score(prev, j, next, k)).collect()).collect();
    if n <= 7 {
        let mut best = (f64::NEG_INFINITY, (0..n).collect::<Vec<_>>());
        let mut perm: Vec<usize> = (0..n).collect();
        permute(&mut perm, 0, &mut |p| {
            let s: f64 = p.iter().enumerate().map(|(j, &k)| score[j][k]).sum();
            if s > best.0 + 1e-14 {
                best = (s, p.to_vec());
            }
        });
        best.1
    } else {
        let mut taken = vec![false; n];
        let mut perm = vec![0; n];
        for j in 0..n {
            let k = (0..n)
                .filter(|&k| !taken[k])
                .max_by(|&a, &b| score[j][a].total_cmp(&score[j][b]))
                .expect("a free band remains");
            taken[k] = true;
            perm[j] = k;
        }
        perm
    }
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Component used to fix the phase of band `j`: the largest-modulus entry of `psi_j`.
pub(crate) fn phase_pivot(frame: &BiorthFrame, j: usize) -> usize {
    let v = frame.psi(j);
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() * (1.0 + 1e-9) {
            best = i;
        }
    }
    best
}

/// Re-phases band `j` of `frame` so that component `pivot` of `psi_j` is real positive.
/// The balanced amplitude is intrinsic and left untouched.
pub(crate) fn align_phase(frame: &BiorthFrame, j: usize, pivot: usize) -> Result<BiorthFrame> {
    let z = frame.right()[(pivot, j)];
    if z.norm() == 0.0 {
        return Err(Error::InvalidInput(format!("gauge pivot component {pivot} of band {j} vanishes")));
    }
    frame.with_band_gauge(j, z.conj() / z.norm())
}

/// Canonical-phase check used in tests: first nonzero component real positive.
pub fn has_canonical_phase(v: &[C64]) -> bool {
    match first_nonzero(v, 1e-12) {
        Some(k) => v[k].im.abs() <= 1e-12 * v[k].norm() && v[k].re > 0.0,
        None => true,
    }
}

pub(crate) fn energy_order_tie(scale: f64) -> f64 {
    1e-12 * scale.max(f64::MIN_POSITIVE)
}

/// True if the energies are in the frame sort order.
pub fn is_sorted_energies(e: &[C64], scale: f64) -> bool {
    e.windows(2).all(|w| !comes_before(w[1], w[0], energy_order_tie(scale)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli::{sigma_x, sigma_z};
    use crate::linalg::{I, ONE};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn hermitian_frame_is_orthonormal() {
        let f = build_frame(&sigma_z(), &FrameOptions::default()).unwrap();
        assert!(close(f.energy(0), ONE, 1e-15));
        assert_eq!(f.psi(0), vec![ONE, ZERO]);
        assert_eq!(f.phi(0), vec![ONE, ZERO]);
        assert_eq!(f.psi(1), vec![ZERO, ONE]);
        assert!((f.metric() - &CMatrix::identity(2)).max_abs() < 1e-15);
        assert!(f.real_spectrum());
    }

    #[test]
    fn defective_and_near_defective_are_rejected() {
        let j = CMatrix::from_2x2(I, ONE, ONE, -I);
        assert!(matches!(build_frame(&j, &FrameOptions::default()), Err(Error::NonDiagonalizable(_))));
        let near = CMatrix::from_2x2(ONE, C64::new(1e-7, 0.0), ZERO, ONE + C64::new(1e-7, 0.0));
        assert!(matches!(build_frame(&near, &FrameOptions::default()), Err(Error::NearDefective { .. })));
    }

    #[test]
    fn balanced_gauge() {
        let h = CMatrix::from_2x2(I, C64::new(2.0, 0.0), C64::new(2.0, 0.0), -I);
        let f = build_frame(&h, &FrameOptions::default()).unwrap();
        for j in 0..2 {
            assert!((norm(&f.psi(j)) - norm(&f.phi(j))).abs() < 1e-14);
            assert!(has_canonical_phase(&f.psi(j)));
        }
        assert!(f.biorthonormality_defect() < 1e-14);
        assert!(f.completeness_defect() < 1e-14);
        assert!(f.metric().hermiticity_defect() < 1e-15);
        assert!(f.metric_defect() < 1e-14);
    }

    #[test]
    fn metric_op_matches_frame_metric() {
        let h = CMatrix::from_2x2(C64::new(0.3, 0.2), ONE, C64::new(0.5, -1.0), C64::new(-1.0, 0.0));
        let f = build_frame(&h, &FrameOptions::default()).unwrap();
        let x = metric(&f).unwrap();
        assert!((&x - f.metric()).max_abs() < 1e-13);
        for i in 0..2 {
            for j in 0..2 {
                let v = inner(&f.psi(i), &x.mul_vec(&f.psi(j)));
                let d = if i == j { ONE } else { ZERO };
                assert!(close(v, d, 1e-12));
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let f = build_frame(&sigma_z(), &FrameOptions::default()).unwrap();
        let e = expand(&f, &[ONE, ZERO]).unwrap();
        assert_eq!(e.contravariant, vec![ONE, ZERO]);
        assert!(expand(&f, &[ONE]).is_err());

        let h = CMatrix::from_2x2(C64::new(0.3, 0.2), ONE, C64::new(0.5, -1.0), C64::new(-1.0, 0.0));
        let g = build_frame(&h, &FrameOptions::default()).unwrap();
        let psi: Vec<C64> = g.psi(0).iter().zip(g.psi(1)).map(|(a, b)| a + b).collect();
        let e = expand(&g, &psi).unwrap();
        assert!(close(e.contravariant[0], ONE, 1e-13));
        assert!(close(e.contravariant[1], ONE, 1e-13));
        assert!(close(e.norm_sqr(), C64::new(norm(&psi).powi(2), 0.0), 1e-12));
        let back = reconstruct(&g, &e.contravariant);
        assert!(back.iter().zip(&psi).all(|(a, b)| close(*a, *b, 1e-13)));
    }

    #[test]
    fn pseudo_norm_identity_metric() {
        let f = build_frame(&sigma_x(), &FrameOptions::default()).unwrap();
        assert!((pseudo_norm(&f, &[ONE, ZERO]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_gauge_factor_rejected() {
        let f = build_frame(&sigma_z(), &FrameOptions::default()).unwrap();
        assert!(matches!(f.with_band_gauge(0, ZERO), Err(Error::ZeroFactor { .. })));
    }

    #[test]
    fn tracking_follows_swapped_order() {
        let a = build_frame(&sigma_z(), &FrameOptions::default()).unwrap();
        let b = build_frame(&sigma_z().scale(-ONE), &FrameOptions::default()).unwrap();
        assert_eq!(track_bands(&a, &b), vec![1, 0]);
        assert_eq!(track_bands(&a, &a), vec![0, 1]);
    }
}
