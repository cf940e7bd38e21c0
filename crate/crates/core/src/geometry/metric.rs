use serde::{Deserialize, Serialize};

use super::{axis, check_band, check_step, frame_at, offset};
use crate::biorth::{BiorthFrame, FrameOptions};
use crate::error::{Error, Result};
use crate::linalg::{inner, CMatrix, C64, ZERO};
use crate::models::ModelHandle;
use crate::Point3;

/// Largest-magnitude component of `<psi_j| dX/dR_a |psi_j>` over `a = x, y, z`, central
/// differences of step `h`. The geometric phase of band `j` is real exactly when all
/// components vanish.
pub fn real_phase_condition(model: &ModelHandle, r: &Point3, j: usize, h: f64) -> Result<C64> {
    check_band(model, j)?;
    check_step(h)?;
    let opts = FrameOptions::default();
    let centre = frame_at(model, r, &opts)?;
    if !centre.real_spectrum() {
        let max_imag = centre.energies().iter().map(|e| e.im.abs()).fold(0.0, f64::max);
        return Err(Error::ComplexSpectrum { index: 0, max_imag }.at(*r));
    }
    let psi = centre.psi(j);
    let mut best = ZERO;
    for a in 0..3 {
        let xp = frame_at(model, &offset(r, &axis(a), h), &opts)?;
        let xm = frame_at(model, &offset(r, &axis(a), -h), &opts)?;
        let dx = (xp.metric() - xm.metric()).scale(C64::new(0.5 / h, 0.0));
        let v = inner(&psi, &dx.mul_vec(&psi));
        if v.norm() > best.norm() {
            best = v;
        }
    }
    Ok(best)
}

/// A parameter-independent Hermitian `Y` with `phi^j(R) = alpha_j Y psi_j(R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantY {
    pub y: CMatrix,
    pub alphas: Vec<i8>,
    /// `sqrt(sum |phi - alpha Y psi|^2 / sum |phi|^2)` of the least-squares fit.
    pub residual: f64,
}

const MAX_SIGN_BANDS: usize = 10;

/// Least-squares search for a constant `Y` over all sign patterns `alpha in {+1, -1}^n`.
///
/// `Y` is scaled by a real factor so that its largest-magnitude entry has modulus one and
/// nonnegative real part (flipping `alpha` together with `Y`). Returns `None` when the best
/// residual exceeds `tol`.
pub fn find_constant_y(model: &ModelHandle, points: &[Point3], tol: f64) -> Result<Option<ConstantY>> {
    if points.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: points.len() });
    }
    let n = model.dim();
    if n > MAX_SIGN_BANDS {
        return Err(Error::InvalidInput(format!("sign search limited to {MAX_SIGN_BANDS} bands")));
    }
    let opts = FrameOptions::default();
    let mut frames = Vec::with_capacity(points.len());
    for r in points {
        let f = frame_at(model, r, &opts)?;
        if !f.real_spectrum() {
            let max_imag = f.energies().iter().map(|e| e.im.abs()).fold(0.0, f64::max);
            return Err(Error::ComplexSpectrum { index: frames.len(), max_imag }.at(*r));
        }
        frames.push(f);
    }
    let mut best: Option<(f64, Vec<f64>, Vec<i8>)> = None;
    for pattern in 0..(1usize << n) {
        let alphas: Vec<i8> = (0..n).map(|j| if pattern >> j & 1 == 0 { 1 } else { -1 }).collect();
        let (params, residual) = fit(&frames, &alphas);
        if best.as_ref().is_none_or(|b| residual < b.0 - 1e-14) {
            best = Some((residual, params, alphas));
        }
    }
    let (residual, params, mut alphas) = best.expect("at least one sign pattern");
    if !(residual <= tol) {
        return Ok(None);
    }
    let mut y = hermitian_from_params(n, &params);
    let (mut k, mut top) = (0, 0.0);
    for (i, z) in y.as_slice().iter().enumerate() {
        if z.norm() > top * (1.0 + 1e-12) {
            (k, top) = (i, z.norm());
        }
    }
    if top == 0.0 {
        return Ok(None);
    }
    let mut factor = 1.0 / top;
    if y.as_slice()[k].re < 0.0 {
        factor = -factor;
        alphas.iter_mut().for_each(|a| *a = -*a);
    }
    y = y.scale(C64::new(factor, 0.0));
    Ok(Some(ConstantY { y, alphas, residual }))
}

/// Real parametrization: `n` diagonal entries, then `(re, im)` of each upper entry.
fn hermitian_from_params(n: usize, p: &[f64]) -> CMatrix {
    let mut y = CMatrix::zeros(n);
    let mut k = n;
    for i in 0..n {
        y[(i, i)] = C64::new(p[i], 0.0);
        for j in i + 1..n {
            y[(i, j)] = C64::new(p[k], p[k + 1]);
            y[(j, i)] = C64::new(p[k], -p[k + 1]);
            k += 2;
        }
    }
    y
}

/// Solves `Y psi_j = alpha_j phi^j` for Hermitian `Y` in the least-squares sense.
fn fit(frames: &[BiorthFrame], alphas: &[i8]) -> (Vec<f64>, f64) {
    let n = alphas.len();
    let unknowns = n * n;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut scale = 0.0;
    for f in frames {
        for (j, &alpha) in alphas.iter().enumerate() {
            let psi = f.psi(j);
            let phi = f.phi(j);
            for i in 0..n {
                // Row i of Y psi, as linear functions of the parameters.
                let mut re = vec![0.0; unknowns];
                let mut im = vec![0.0; unknowns];
                re[i] += psi[i].re;
                im[i] += psi[i].im;
                let mut k = n;
                for a in 0..n {
                    for b in a + 1..n {
                        // Y_ab = p + i q, Y_ba = p - i q.
                        if i == a {
                            let z = psi[b];
                            re[k] += z.re;
                            im[k] += z.im;
                            re[k + 1] -= z.im;
                            im[k + 1] += z.re;
                        }
                        if i == b {
                            let z = psi[a];
                            re[k] += z.re;
                            im[k] += z.im;
                            re[k + 1] += z.im;
                            im[k + 1] -= z.re;
                        }
                        k += 2;
                    }
                }
                let target = phi[i] * f64::from(alpha);
                rows.push(re);
                rhs.push(target.re);
                rows.push(im);
                rhs.push(target.im);
                scale += phi[i].norm_sqr();
            }
        }
    }
    let params = least_squares(rows.clone(), rhs.clone());
    let ss: f64 = rows
        .iter()
        .zip(&rhs)
        .map(|(row, b)| {
            let v: f64 = row.iter().zip(&params).map(|(a, x)| a * x).sum();
            (v - b) * (v - b)
        })
        .sum();
    (params, (ss / scale).sqrt())
}

/// Householder QR least squares for a tall real system; rank-deficient directions are
/// set to zero.
fn least_squares(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let mut diag = vec![0.0; n];
    for k in 0..n.min(m) {
        let alpha = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let sign = if a[k][k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] += sign * alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        for col in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][col]).sum();
            let f = 2.0 * dot / vv;
            for i in k..m {
                a[i][col] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vv;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
        diag[k] = a[k][k];
    }
    let top = diag.iter().fold(0.0f64, |t, d| t.max(d.abs()));
    let mut x = vec![0.0; n];
    for k in (0..n.min(m)).rev() {
        if diag[k].abs() <= 1e-12 * top {
            continue;
        }
        let s: f64 = (k + 1..n).map(|c| a[k][c] * x[c]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}
