use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curvature::polygon_flux;
use super::check_band;
use crate::biorth::{build_frame, track_bands, BiorthFrame, FrameOptions};
use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::models::ModelHandle;
use crate::Point3;

/// Oriented triangle mesh; each triangle `[a, b, c]` is counter-clockwise seen from the
/// side its normal points to (outward for closed surfaces).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangulatedSurface {
    vertices: Vec<Point3>,
    triangles: Vec<[usize; 3]>,
    closed: bool,
}

fn add(a: &Point3, b: &Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scaled(a: &Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

impl TriangulatedSurface {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>, closed: bool) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidInput("surface has no triangles".into()));
        }
        if let Some(t) = triangles.iter().position(|t| t.iter().any(|&i| i >= vertices.len())) {
            return Err(Error::InvalidInput(format!("triangle {t} references a missing vertex")));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("surface vertex is not finite".into()));
        }
        Ok(TriangulatedSurface { vertices, triangles, closed })
    }

    /// Axis-aligned cube surface with `n x n` squares per face, normals outward.
    pub fn cube(center: Point3, side: f64, n: usize) -> Result<Self> {
        let n = n.max(1);
        let e = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        // (normal axis, sign, u axis, v axis) with u x v along the outward normal.
        let faces = [(0, 1.0, 1, 2), (0, -1.0, 2, 1), (1, 1.0, 2, 0), (1, -1.0, 0, 2), (2, 1.0, 0, 1), (2, -1.0, 1, 0)];
        let half = side / 2.0;
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (normal, sign, u, v) in faces {
            let base = vertices.len();
            let face_centre = add(&center, &scaled(&e[normal], sign * half));
            for a in 0..=n {
                for b in 0..=n {
                    let su = -half + side * a as f64 / n as f64;
                    let sv = -half + side * b as f64 / n as f64;
                    vertices.push(add(&add(&face_centre, &scaled(&e[u], su)), &scaled(&e[v], sv)));
                }
            }
            let idx = |a: usize, b: usize| base + a * (n + 1) + b;
            for a in 0..n {
                for b in 0..n {
                    triangles.push([idx(a, b), idx(a + 1, b), idx(a + 1, b + 1)]);
                    triangles.push([idx(a, b), idx(a + 1, b + 1), idx(a, b + 1)]);
                }
            }
        }
        TriangulatedSurface::new(vertices, triangles, true)
    }

    /// Polar cap `theta <= theta_max` of the sphere of `radius` about `center`, around the
    /// `+z` direction, normals outward. The boundary runs counter-clockwise about `+z`.
    pub fn sphere_cap(center: Point3, radius: f64, theta_max: f64, n_theta: usize, n_phi: usize) -> Result<Self> {
        if !(theta_max > 0.0 && theta_max <= PI) {
            return Err(Error::InvalidInput("theta_max must lie in (0, pi]".into()));
        }
        Self::polar_mesh(center, radius, theta_max, n_theta.max(1), n_phi.max(3), false)
    }

    /// Closed sphere, normals outward.
    pub fn sphere(center: Point3, radius: f64, n_theta: usize, n_phi: usize) -> Result<Self> {
        Self::polar_mesh(center, radius, PI, n_theta.max(2), n_phi.max(3), true)
    }

    /// Flat disk in the `(plane.0, plane.1)` plane; the normal is `e_plane.0 x e_plane.1`.
    pub fn disk(center: Point3, radius: f64, plane: (usize, usize), n_r: usize, n_phi: usize) -> Result<Self> {
        crate::dynamics::check_plane(plane)?;
        let (n_r, n_phi) = (n_r.max(1), n_phi.max(3));
        let mut vertices = vec![center];
        for i in 1..=n_r {
            let rho = radius * i as f64 / n_r as f64;
            for k in 0..n_phi {
                let a = TAU * k as f64 / n_phi as f64;
                let mut p = center;
                p[plane.0] += rho * a.cos();
                p[plane.1] += rho * a.sin();
                vertices.push(p);
            }
        }
        let triangles = ring_triangles(n_r, n_phi, false);
        TriangulatedSurface::new(vertices, triangles, false)
    }

    fn polar_mesh(center: Point3, radius: f64, theta_max: f64, n_theta: usize, n_phi: usize, closed: bool) -> Result<Self> {
        let rings = if closed { n_theta - 1 } else { n_theta };
        let mut vertices = vec![add(&center, &[0.0, 0.0, radius])];
        for i in 1..=rings {
            let t = theta_max * i as f64 / n_theta as f64;
            for k in 0..n_phi {
                let p = TAU * k as f64 / n_phi as f64;
                vertices.push(add(&center, &scaled(&[t.sin() * p.cos(), t.sin() * p.sin(), t.cos()], radius)));
            }
        }
        if closed {
            vertices.push(add(&center, &[0.0, 0.0, -radius]));
        }
        TriangulatedSurface::new(vertices, ring_triangles(rings, n_phi, closed), closed)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn closed(&self) -> bool {
        self.closed
    }
}

/// Triangles for a pole (vertex 0) surrounded by `rings` rings of `n_phi` vertices, and
/// optionally a closing pole after the last ring.
fn ring_triangles(rings: usize, n_phi: usize, close: bool) -> Vec<[usize; 3]> {
    let ring = |i: usize, k: usize| 1 + (i - 1) * n_phi + k % n_phi;
    let mut t = Vec::new();
    for k in 0..n_phi {
        t.push([0, ring(1, k), ring(1, k + 1)]);
    }
    for i in 1..rings {
        for k in 0..n_phi {
            let (a, b, c, d) = (ring(i, k), ring(i + 1, k), ring(i + 1, k + 1), ring(i, k + 1));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    if close {
        let south = 1 + rings * n_phi;
        for k in 0..n_phi {
            t.push([ring(rings, k), south, ring(rings, k + 1)]);
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FluxOptions {
    /// `gap_floor` doubles as the exceptional-point margin.
    pub frame: FrameOptions,
}

pub fn flux_surface(model: &ModelHandle, surface: &TriangulatedSurface, j: usize) -> Result<C64> {
    flux_surface_with(model, surface, j, &FluxOptions::default())
}

/// Sum of per-triangle fluxes of band `j`. Triangles are evaluated in parallel and summed
/// in index order, so the result does not depend on the worker count.
pub fn flux_surface_with(model: &ModelHandle, surface: &TriangulatedSurface, j: usize, opts: &FluxOptions) -> Result<C64> {
    check_band(model, j)?;
    let reference = model.reference();
    let frames: Vec<BiorthFrame> = surface
        .vertices
        .par_iter()
        .enumerate()
        .map(|(index, r)| {
            let touches = || Error::SurfaceTouchesEP { index }.at(*r);
            if reference.is_some_and(|rf| rf.is_exceptional(r)) {
                return Err(touches());
            }
            build_frame(&model.hamiltonian(r), &opts.frame).map_err(|e| match e {
                Error::NearDefective { .. } | Error::NonDiagonalizable(_) | Error::Singular { .. } => touches(),
                other => other.at(*r),
            })
        })
        .collect::<Result<_>>()?;
    let fluxes: Vec<C64> = surface
        .triangles
        .par_iter()
        .map(|t| {
            let a = &frames[t[0]];
            let b = frames[t[1]].permuted(&track_bands(a, &frames[t[1]]));
            let c = frames[t[2]].permuted(&track_bands(a, &frames[t[2]]));
            polygon_flux(&[a, &b, &c], j)
        })
        .collect();
    Ok(fluxes.iter().fold(ZERO, |acc, z| acc + z))
}
