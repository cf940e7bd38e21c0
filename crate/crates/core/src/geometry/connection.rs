use super::{check_band, check_step, offset, stencil_frames};
use crate::biorth::FrameOptions;
use crate::error::{Error, Result};
use crate::linalg::{inner, norm, CMatrix, C64, I};
use crate::models::ModelHandle;
use crate::Point3;

/// Largest tolerated roundoff in a central difference, relative to `1 + |A|`.
const ROUNDOFF_BOUND: f64 = 1e-6;

fn unit(direction: &Point3) -> Result<Point3> {
    let len = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::InvalidInput("direction must be a nonzero finite vector".into()));
    }
    Ok([direction[0] / len, direction[1] / len, direction[2] / len])
}

/// Central-difference derivative of `psi_j` along `d` in the stencil gauge, together with
/// the centre frame's `phi^j` and `psi_j`.
fn derivative(model: &ModelHandle, r: &Point3, d: &Point3, h: f64, j: usize) -> Result<(Vec<C64>, Vec<C64>, Vec<C64>)> {
    let (c, nb) = stencil_frames(model, r, &[offset(r, d, h), offset(r, d, -h)], &FrameOptions::default())?;
    let plus = nb[0].psi(j);
    let minus = nb[1].psi(j);
    let dpsi = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    Ok((c.phi(j), c.psi(j), dpsi))
}

fn roundoff(phi: &[C64], psi: &[C64], h: f64) -> f64 {
    8.0 * f64::EPSILON * norm(phi) * norm(psi) / h
}

/// Berry connection `A_j = i <phi^j| d psi_j / dR>` along `direction` by central
/// differences of step `h`. The value refers to the frame gauge at `r`
/// (pivot component of `psi_j` real positive on the whole stencil).
pub fn connection_fd(model: &ModelHandle, r: &Point3, direction: &Point3, h: f64, j: usize) -> Result<C64> {
    check_band(model, j)?;
    check_step(h)?;
    let d = unit(direction)?;
    let (phi, psi, dpsi) = derivative(model, r, &d, h, j)?;
    let a = I * inner(&phi, &dpsi);
    let err = roundoff(&phi, &psi, h);
    if err > ROUNDOFF_BOUND * (1.0 + a.norm()) {
        return Err(Error::StepDegenerate { h, roundoff: err }.at(*r));
    }
    Ok(a)
}

/// `i alpha <psi_j| Y |d psi_j>`, which equals [`connection_fd`] whenever
/// `phi^j = alpha Y psi_j` holds with a parameter-independent Hermitian `Y`.
pub fn connection_y_form(
    model: &ModelHandle,
    r: &Point3,
    direction: &Point3,
    h: f64,
    j: usize,
    y: &CMatrix,
    alpha: f64,
) -> Result<C64> {
    check_band(model, j)?;
    check_step(h)?;
    if y.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: y.dim() });
    }
    let d = unit(direction)?;
    let (_, psi, dpsi) = derivative(model, r, &d, h, j)?;
    Ok(I * alpha * inner(&psi, &y.mul_vec(&dpsi)))
}
