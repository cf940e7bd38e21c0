//! Complex Berry connection and curvature, discrete holonomy, surface flux, the
//! auxiliary-operator identity, the real-phase criterion and `GL(1, C)` gauge tools.
//!
//! Discrete quantities are built from the gauge-covariant link
//!
//! ```text
//! L(a -> b) = Log u - 1/2 Log(u v),   u = <phi^j(a)|psi_j(b)>,  v = <phi^j(b)|psi_j(a)>
//! ```
//!
//! Under `psi_j -> f psi_j`, `phi^j -> phi^j / conj(f)` the product `u v` is invariant and
//! `Log u` shifts by `log(f_b / f_a)`, so closed sums are gauge invariant (the real part of
//! `beta` up to multiples of `2 pi`). Loops are traversed counter-clockwise and
//! `beta = i sum L`.

mod auxiliary;
mod connection;
mod curvature;
mod gauge;
mod holonomy;
mod metric;
mod surface;

use std::f64::consts::PI;

use crate::biorth::{align_phase, build_frame, phase_pivot, track_bands, BiorthFrame, FrameOptions};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::models::ModelHandle;
use crate::Point3;

pub use auxiliary::{auxiliary_operator_check, auxiliary_operator_residuals, AuxiliaryResiduals};
pub use connection::{connection_fd, connection_y_form};
pub use curvature::{curvature_plaquette, curvature_vector};
pub use gauge::{apply_gauge, GaugeAssignment};
pub use holonomy::{
    holonomy_discrete, holonomy_discrete_with, holonomy_of_frames, HolonomyOptions, HolonomyResult, ParameterLoop,
};
pub use metric::{find_constant_y, real_phase_condition, ConstantY};
pub use surface::{flux_surface, flux_surface_with, FluxOptions, TriangulatedSurface};

/// `Log u - 1/2 Log(u v)` for band `j` between two frames.
pub fn link(a: &BiorthFrame, b: &BiorthFrame, j: usize) -> C64 {
    let u = a.overlap(j, b, j);
    let v = b.overlap(j, a, j);
    u.ln() - 0.5 * (u * v).ln()
}

/// `|u v - 1|` for band `j`: gauge-invariant measure of how far apart two frames are.
pub fn link_deviation(a: &BiorthFrame, b: &BiorthFrame, j: usize) -> f64 {
    (a.overlap(j, b, j) * b.overlap(j, a, j) - 1.0).norm()
}

/// Maps `x` into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Distance between two geometric phases: the real part counts modulo `2 pi`.
pub fn phase_distance(a: C64, b: C64) -> f64 {
    let d = a - b;
    wrap_angle(d.re).hypot(d.im)
}

pub(crate) fn frame_at(model: &ModelHandle, r: &Point3, opts: &FrameOptions) -> Result<BiorthFrame> {
    build_frame(&model.hamiltonian(r), opts).map_err(|e| e.at(*r))
}

/// Frame at `r` with bands relabelled to continue those of `reference`.
pub(crate) fn tracked_frame_at(
    model: &ModelHandle,
    r: &Point3,
    reference: &BiorthFrame,
    opts: &FrameOptions,
) -> Result<BiorthFrame> {
    let raw = frame_at(model, r, opts)?;
    Ok(raw.permuted(&track_bands(reference, &raw)))
}

/// Frames on a finite-difference stencil around `centre`, band-tracked to the centre and
/// phase-aligned on the centre's pivot component for every band. The centre frame is
/// returned (aligned) as the first element.
pub(crate) fn stencil_frames(
    model: &ModelHandle,
    centre: &Point3,
    points: &[Point3],
    opts: &FrameOptions,
) -> Result<(BiorthFrame, Vec<BiorthFrame>)> {
    let c = frame_at(model, centre, opts)?;
    let pivots: Vec<usize> = (0..c.dim()).map(|j| phase_pivot(&c, j)).collect();
    let align = |mut f: BiorthFrame| -> Result<BiorthFrame> {
        for (j, &p) in pivots.iter().enumerate() {
            f = align_phase(&f, j, p)?;
        }
        Ok(f)
    };
    let mut out = Vec::with_capacity(points.len());
    for r in points {
        out.push(align(tracked_frame_at(model, r, &c, opts)?).map_err(|e| e.at(*r))?);
    }
    Ok((align(c)?, out))
}

pub(crate) fn check_band(model: &ModelHandle, j: usize) -> Result<()> {
    if j >= model.dim() {
        return Err(Error::InvalidInput(format!("band {j} out of range for dimension {}", model.dim())));
    }
    Ok(())
}

pub(crate) fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("step {h} must be positive and finite")));
    }
    Ok(())
}

pub(crate) fn axis(a: usize) -> Point3 {
    let mut e = [0.0; 3];
    e[a] = 1.0;
    e
}

pub(crate) fn offset(r: &Point3, d: &Point3, s: f64) -> Point3 {
    [r[0] + s * d[0], r[1] + s * d[1], r[2] + s * d[2]]
}
