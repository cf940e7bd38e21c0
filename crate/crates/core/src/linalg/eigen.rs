//! General complex eigensolver.
//!
//! Eigenvalues come from a Householder reduction to upper Hessenberg form followed by
//! single-shift complex QR sweeps (Wilkinson shift, exceptional shifts on stagnation).
//! Eigenvectors are recovered afterwards by inverse iteration on the original matrix with
//! a slightly perturbed shift. Matrices of dimension 2 take a closed-form path.
//!
//! Every eigenvector is returned in the canonical gauge: unit Euclidean norm, first
//! nonzero component real and positive. Defective matrices still produce `n` pairs; the
//! vectors belonging to a coalesced eigenvalue may then repeat.

use super::lu::Lu;
use super::matrix::{canonical_gauge, inner, norm, CMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Largest dimension handled by the dense solver.
pub const MAX_DIM: usize = 64;

const ITERATIONS_PER_EIGENVALUE: usize = 40;
const INVERSE_ITERATION_STEPS: usize = 3;

/// Eigenpairs sorted by descending real part, ties by descending imaginary part.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Right eigenvectors, one per eigenvalue, canonical gauge.
    pub vectors: Vec<Vec<C64>>,
}

impl Eigen {
    /// Largest `||M v - lambda v|| / ||M||` over the returned pairs.
    pub fn relative_residual(&self, m: &CMatrix) -> f64 {
        let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&l, v)| {
                let mv = m.mul_vec(v);
                norm(&mv.iter().zip(v).map(|(a, b)| a - l * b).collect::<Vec<_>>()) / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Eigendecomposition; uses the closed form for `n = 2` and Hessenberg-QR otherwise.
pub fn eigendecompose(m: &CMatrix) -> Result<Eigen> {
    check_input(m)?;
    if m.dim() == 2 {
        Ok(eigen_2x2(m))
    } else {
        eigen_general(m)
    }
}

/// Hessenberg-QR route for any dimension (also used to cross-check the 2x2 closed form).
pub fn eigen_general(m: &CMatrix) -> Result<Eigen> {
    check_input(m)?;
    let values = sort_eigenvalues(eigenvalues_qr(m)?, m.frobenius_norm());
    let vectors = inverse_iteration(m, &values);
    Ok(Eigen { values, vectors })
}

fn check_input(m: &CMatrix) -> Result<()> {
    if m.dim() > MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "dimension {} exceeds the dense solver limit {MAX_DIM}",
            m.dim()
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    Ok(())
}

/// Closed-form eigenpairs of a 2x2 matrix.
pub fn eigen_2x2(m: &CMatrix) -> Eigen {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_trace = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let root = (half_diff * half_diff + b * c).sqrt();
    // Larger-magnitude root first, the other from the determinant to avoid cancellation.
    let (big, other) = if (half_trace + root).norm() >= (half_trace - root).norm() {
        (half_trace + root, half_trace - root)
    } else {
        (half_trace - root, half_trace + root)
    };
    let det = a * d - b * c;
    let small = if big.norm() > 0.0 && other.norm() < 1e-3 * big.norm() { det / big } else { other };
    let values = sort_eigenvalues(vec![big, small], m.frobenius_norm());

    let scale = m.frobenius_norm();
    let vectors = values
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let v1 = [b, l - a];
            let v2 = [l - d, c];
            let v = if norm(&v1) >= norm(&v2) { v1 } else { v2 };
            if norm(&v) <= 1e-14 * scale || norm(&v) == 0.0 {
                // Scalar matrix: any basis works.
                let mut e = vec![ZERO; 2];
                e[k] = C64::new(1.0, 0.0);
                e
            } else {
                canonical_gauge(&v)
            }
        })
        .collect();
    Eigen { values, vectors }
}

/// Sorts by descending real part; real parts within `1e-12 * scale` count as tied and are
/// ordered by descending imaginary part.
pub fn sort_eigenvalues(mut values: Vec<C64>, scale: f64) -> Vec<C64> {
    let tie = 1e-12 * scale.max(f64::MIN_POSITIVE);
    // Insertion sort: the tolerant comparison is not a total order.
    for i in 1..values.len() {
        let mut j = i;
        while j > 0 && comes_before(values[j], values[j - 1], tie) {
            values.swap(j, j - 1);
            j -= 1;
        }
    }
    values
}

pub(crate) fn comes_before(x: C64, y: C64, tie: f64) -> bool {
    if (x.re - y.re).abs() > tie {
        x.re > y.re
    } else {
        x.im > y.im
    }
}

fn hessenberg(m: &CMatrix) -> CMatrix {
    let n = m.dim();
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let alpha = norm(&x);
        if alpha == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { C64::new(1.0, 0.0) };
        let mut v = x.clone();
        v[0] += phase * alpha;
        let vn = norm(&v);
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vn);
        // H <- P H P with P = I - 2 v v^dag acting on rows/cols k+1..n.
        for j in 0..n {
            let s: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= v[i] * s * 2.0;
            }
        }
        for i in 0..n {
            let s: C64 = (0..v.len()).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            for j in 0..v.len() {
                h[(i, k + 1 + j)] -= s * v[j].conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    h
}

/// Eigenvalues of a general complex matrix (unsorted).
pub fn eigenvalues_qr(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.dim();
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let mut h = hessenberg(m);
    let mut values = vec![ZERO; n];
    let max_iter = ITERATIONS_PER_EIGENVALUE * n;
    let mut hi = n - 1;
    let mut iter_since_deflation = 0usize;
    let mut total = 0usize;
    let scale = m.frobenius_norm();
    loop {
        if hi == 0 {
            values[0] = h[(0, 0)];
            break;
        }
        // Find the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let reference = if diag > 0.0 { diag } else { scale };
            if sub <= f64::EPSILON * reference {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            values[hi] = h[(hi, hi)];
            hi -= 1;
            iter_since_deflation = 0;
            continue;
        }
        total += 1;
        iter_since_deflation += 1;
        if total > max_iter {
            return Err(Error::NoConvergence { iterations: total });
        }
        let shift = if iter_since_deflation % 11 == 10 {
            // Exceptional shift breaks cycling.
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_sweep(&mut h, lo, hi, shift);
    }
    Ok(values)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_diff = (a - d) * 0.5;
    let root = (half_diff * half_diff + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + root;
    let l2 = mid - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit shifted QR step `H - s = QR, H <- RQ + s` on rows/cols `lo..=hi`.
fn qr_sweep(h: &mut CMatrix, lo: usize, hi: usize, shift: C64) {
    for i in lo..=hi {
        h[(i, i)] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = a.norm().hypot(b.norm());
        let (c, s) = if r == 0.0 {
            (1.0, ZERO)
        } else if a.norm() == 0.0 {
            (0.0, b.conj() / b.norm())
        } else {
            (a.norm() / r, (a / a.norm()) * b.conj() / r)
        };
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rotations.push((c, s));
    }
    for (idx, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + idx;
        let top = (k + 2).min(hi);
        for i in lo..=top {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s.conj();
            h[(i, k + 1)] = -s * x + y * c;
        }
    }
    for i in lo..=hi {
        h[(i, i)] += shift;
    }
}

fn inverse_iteration(m: &CMatrix, values: &[C64]) -> Vec<Vec<C64>> {
    let n = m.dim();
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let delta = C64::new(1.0, 0.5) * (1e-10 * scale);
    let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(n);
    for (k, &lambda) in values.iter().enumerate() {
        // Deterministic start, orthogonalized against earlier members of the same cluster so
        // that degenerate but diagonalizable eigenvalues get independent vectors.
        let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0 / (1.0 + i as f64), 0.1 * i as f64)).collect();
        x.rotate_left(k % n);
        for (j, prev) in vectors.iter().enumerate() {
            if (values[j] - lambda).norm() <= 1e-6 * scale {
                let p = inner(prev, &x);
                x.iter_mut().zip(prev).for_each(|(a, b)| *a -= p * b);
            }
        }
        if norm(&x) < 1e-8 {
            x = vec![ZERO; n];
            x[k % n] = C64::new(1.0, 0.0);
        }
        let lu = Lu::factor(&m.shifted(lambda + delta), true).expect("singular pivots are regularized");
        for _ in 0..INVERSE_ITERATION_STEPS {
            let y = lu.solve(&x);
            let ny = norm(&y);
            if !ny.is_finite() || ny == 0.0 {
                break;
            }
            x = y.iter().map(|z| z / ny).collect();
        }
        vectors.push(canonical_gauge(&x));
    }
    vectors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{I, ONE};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn pauli_x() {
        let sx = CMatrix::from_2x2(ZERO, ONE, ONE, ZERO);
        for e in [eigendecompose(&sx).unwrap(), eigen_general(&sx).unwrap()] {
            assert!(close(e.values[0], ONE, 1e-14));
            assert!(close(e.values[1], -ONE, 1e-14));
            let r = std::f64::consts::FRAC_1_SQRT_2;
            assert!(close(e.vectors[0][0], C64::new(r, 0.0), 1e-12));
            assert!(close(e.vectors[0][1], C64::new(r, 0.0), 1e-12));
            assert!(close(e.vectors[1][0], C64::new(r, 0.0), 1e-12));
            assert!(close(e.vectors[1][1], C64::new(-r, 0.0), 1e-12));
        }
    }

    #[test]
    fn jordan_block_is_total() {
        let j = CMatrix::from_2x2(ZERO, ONE, ZERO, ZERO);
        let e = eigendecompose(&j).unwrap();
        assert_eq!(e.values, vec![ZERO, ZERO]);
        assert!(close(e.vectors[0][0], ONE, 1e-15));
        assert_eq!(e.vectors[0], e.vectors[1]);
        let g = eigen_general(&j).unwrap();
        assert!(g.values.iter().all(|v| v.norm() < 1e-7));
    }

    #[test]
    fn dirac_point_with_real_spectrum() {
        // p = (sqrt2, 0, 0), s = 1: H = [[i, sqrt2], [sqrt2, -i]], E = +-1.
        let r2 = 2f64.sqrt();
        let h = CMatrix::from_2x2(I, C64::new(r2, 0.0), C64::new(r2, 0.0), -I);
        let e = eigendecompose(&h).unwrap();
        assert!(close(e.values[0], ONE, 1e-14));
        assert!(close(e.values[1], -ONE, 1e-14));
        assert!(e.relative_residual(&h) < 1e-14);
    }

    #[test]
    fn general_solver_on_triangular_and_dense() {
        let m = CMatrix::from_rows(&[
            vec![C64::new(3.0, 0.0), ONE, I, ZERO],
            vec![ZERO, C64::new(0.0, 2.0), ONE, ONE],
            vec![ZERO, ZERO, C64::new(-1.0, 0.5), ONE],
            vec![ZERO, ZERO, ZERO, C64::new(3.0, -1.0)],
        ])
        .unwrap();
        let e = eigendecompose(&m).unwrap();
        let expect = [C64::new(3.0, 0.0), C64::new(3.0, -1.0), C64::new(0.0, 2.0), C64::new(-1.0, 0.5)];
        for (a, b) in e.values.iter().zip(expect) {
            assert!(close(*a, b, 1e-12), "{a} vs {b}");
        }
        assert!(e.relative_residual(&m) < 1e-12);
    }

    #[test]
    fn identity_has_independent_vectors() {
        let e = eigendecompose(&CMatrix::identity(3)).unwrap();
        let a = CMatrix::from_columns(&e.vectors);
        assert_eq!(crate::linalg::rank(&a, 1e-10), 3);
    }

    #[test]
    fn one_by_one() {
        let m = CMatrix::from_diag(&[C64::new(2.0, -1.0)]);
        let e = eigendecompose(&m).unwrap();
        assert_eq!(e.values[0], C64::new(2.0, -1.0));
        assert!(close(e.vectors[0][0], ONE, 1e-15));
    }

    #[test]
    fn rejects_oversized() {
        assert!(eigendecompose(&CMatrix::identity(MAX_DIM + 1)).is_err());
    }
}
