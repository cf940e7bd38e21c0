//! Singular values by one-sided (Hestenes) Jacobi rotations, and numerical rank.

use super::matrix::{CMatrix, C64};

const MAX_SWEEPS: usize = 60;

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut cols = m.columns();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phase = gamma / g;
                for i in 0..n {
                    let ap = cols[p][i];
                    let aq = cols[q][i];
                    cols[p][i] = ap * c - aq * phase.conj() * s;
                    cols[q][i] = ap * phase * s + aq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rank_tol` times the largest one; 0 for the zero matrix.
pub fn rank(m: &CMatrix, rank_tol: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * top).count()
}

/// Rank with the threshold `rank_tol * max(sigma_max(m), scale)`.
pub fn rank_scaled(m: &CMatrix, rank_tol: f64, scale: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0).max(scale);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * top).count()
}
