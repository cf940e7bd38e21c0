use super::{axis, check_band, check_step, frame_at, offset, tracked_frame_at};
use crate::biorth::{BiorthFrame, FrameOptions};
use crate::dynamics::check_plane;
use crate::error::{Error, Result};
use crate::linalg::{norm, C64, I};
use crate::models::ModelHandle;
use crate::Point3;

const ROUNDOFF_BOUND: f64 = 1e-6;

/// Gauge-invariant flux `i [Log(prod u) - 1/2 sum Log(u v)]` of band `j` through the
/// polygon spanned by the cyclic frame list.
pub(crate) fn polygon_flux(frames: &[&BiorthFrame], j: usize) -> C64 {
    let n = frames.len();
    let mut prod = C64::new(1.0, 0.0);
    let mut sym = C64::new(0.0, 0.0);
    for k in 0..n {
        let (a, b) = (frames[k], frames[(k + 1) % n]);
        let u = a.overlap(j, b, j);
        let v = b.overlap(j, a, j);
        prod *= u;
        sym += (u * v).ln();
    }
    I * (prod.ln() - 0.5 * sym)
}

/// Curvature component normal to the `(plane.0, plane.1)` plane from the flux through an
/// `h x h` plaquette centred at `r`, traversed counter-clockwise.
pub fn curvature_plaquette(model: &ModelHandle, r: &Point3, plane: (usize, usize), h: f64, j: usize) -> Result<C64> {
    check_band(model, j)?;
    check_step(h)?;
    check_plane(plane)?;
    let opts = FrameOptions::default();
    let centre = frame_at(model, r, &opts)?;
    let (ea, eb) = (axis(plane.0), axis(plane.1));
    let corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)].map(|(sa, sb)| offset(&offset(r, &ea, sa * h), &eb, sb * h));
    let mut frames = Vec::with_capacity(4);
    for c in &corners {
        frames.push(tracked_frame_at(model, c, &centre, &opts)?);
    }
    let b = polygon_flux(&frames.iter().collect::<Vec<_>>(), j) / (h * h);
    let err = 8.0 * f64::EPSILON * norm(&centre.phi(j)) * norm(&centre.psi(j)) / (h * h);
    if err > ROUNDOFF_BOUND * (1.0 + b.norm()) {
        return Err(Error::StepDegenerate { h, roundoff: err }.at(*r));
    }
    Ok(b)
}

/// `(B_x, B_y, B_z)` from plaquettes in the `yz`, `zx` and `xy` planes.
pub fn curvature_vector(model: &ModelHandle, r: &Point3, h: f64, j: usize) -> Result<[C64; 3]> {
    Ok([
        curvature_plaquette(model, r, (1, 2), h, j)?,
        curvature_plaquette(model, r, (2, 0), h, j)?,
        curvature_plaquette(model, r, (0, 1), h, j)?,
    ])
}
