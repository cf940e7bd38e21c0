use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{check_band, frame_at, link, link_deviation, phase_distance, tracked_frame_at, GaugeAssignment};
use super::surface::TriangulatedSurface;
use crate::biorth::{track_bands, BiorthFrame, FrameOptions};
use crate::dynamics::{check_plane, lerp};
use crate::error::{Error, Result};
use crate::linalg::{C64, I, ZERO};
use crate::models::ModelHandle;
use crate::Point3;

const CLOSURE_TOL: f64 = 1e-12;

/// Closed polygon `R_0 .. R_K = R_0` in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterLoop {
    vertices: Vec<Point3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    enclosed_surface: Option<TriangulatedSurface>,
}

impl ParameterLoop {
    /// `vertices` must end with a repeat of the first one and contain at least three edges.
    pub fn new(vertices: Vec<Point3>) -> Result<Self> {
        if vertices.len() < 4 {
            return Err(Error::InsufficientSamples { needed: 4, got: vertices.len() });
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("loop vertex is not finite".into()));
        }
        let (a, b) = (vertices[0], vertices[vertices.len() - 1]);
        if (0..3).any(|i| (a[i] - b[i]).abs() > CLOSURE_TOL) {
            return Err(Error::NotClosed);
        }
        Ok(ParameterLoop { vertices, enclosed_surface: None })
    }

    /// Closes an open vertex list by repeating the first vertex.
    pub fn polygon(points: &[Point3]) -> Result<Self> {
        let mut v = points.to_vec();
        if let Some(first) = points.first() {
            v.push(*first);
        }
        ParameterLoop::new(v)
    }

    /// `k` edges on a counter-clockwise circle in the `(plane.0, plane.1)` plane.
    pub fn circle(center: Point3, radius: f64, plane: (usize, usize), k: usize) -> Result<Self> {
        check_plane(plane)?;
        let points: Vec<Point3> = (0..k)
            .map(|i| {
                let a = TAU * i as f64 / k as f64;
                let mut r = center;
                r[plane.0] += radius * a.cos();
                r[plane.1] += radius * a.sin();
                r
            })
            .collect();
        ParameterLoop::polygon(&points)
    }

    pub fn with_surface(mut self, surface: TriangulatedSurface) -> Self {
        self.enclosed_surface = Some(surface);
        self
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn enclosed_surface(&self) -> Option<&TriangulatedSurface> {
        self.enclosed_surface.as_ref()
    }

    /// Number of edges.
    pub fn edges(&self) -> usize {
        self.vertices.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolonomyOptions {
    pub frame: FrameOptions,
    /// Edges with `|u v - 1|` above this are bisected.
    pub max_deviation: f64,
    pub max_depth: u32,
    /// Randomized gauges used for the checksum (0 disables it).
    pub gauge_trials: usize,
    pub seed: u64,
}

impl Default for HolonomyOptions {
    fn default() -> Self {
        HolonomyOptions { frame: FrameOptions::default(), max_deviation: 0.5, max_depth: 16, gauge_trials: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyResult {
    pub beta: C64,
    pub band: usize,
    /// `i L(k -> k+1)` for every edge after refinement; sums to `beta`.
    pub per_step_increments: Vec<C64>,
    /// Largest change of `beta` (real part modulo `2 pi`) under randomized gauges.
    pub gauge_checksum: f64,
    /// Vertices after edge refinement, without the closing repeat.
    pub refined_vertices: Vec<Point3>,
}

pub fn holonomy_discrete(model: &ModelHandle, lp: &ParameterLoop, j: usize) -> Result<HolonomyResult> {
    holonomy_discrete_with(model, lp, j, &HolonomyOptions::default())
}

/// Discrete holonomy `beta = i sum_k L(R_k -> R_k+1)` of band `j` around the loop.
pub fn holonomy_discrete_with(
    model: &ModelHandle,
    lp: &ParameterLoop,
    j: usize,
    opts: &HolonomyOptions,
) -> Result<HolonomyResult> {
    check_band(model, j)?;
    let verts = lp.vertices();
    let first = frame_at(model, &verts[0], &opts.frame)?;
    let mut points = vec![verts[0]];
    let mut frames = vec![first.clone()];
    for k in 0..lp.edges() {
        let start = frames.last().expect("non-empty").clone();
        let mut segment = Vec::new();
        refine(model, (verts[k], &start), verts[k + 1], j, opts, 0, k, &mut segment)?;
        for (p, f) in segment {
            points.push(p);
            frames.push(f);
        }
    }
    let last = frames.pop().expect("closing frame");
    points.pop();
    let perm = track_bands(&first, &last);
    if perm[j] != j {
        return Err(Error::BandExchange { band: j, with: perm[j] }.at(verts[0]));
    }
    let per_step_increments: Vec<C64> =
        (0..frames.len()).map(|k| I * link(&frames[k], &frames[(k + 1) % frames.len()], j)).collect();
    let beta = per_step_increments.iter().fold(ZERO, |acc, z| acc + z);

    let mut gauge_checksum: f64 = 0.0;
    for t in 0..opts.gauge_trials {
        let gauge = GaugeAssignment::random(frames.len(), 0.5, 2.0, opts.seed.wrapping_add(t as u64));
        let regauged = super::apply_gauge(&frames, &gauge, j)?;
        gauge_checksum = gauge_checksum.max(phase_distance(holonomy_of_frames(&regauged, j), beta));
    }
    Ok(HolonomyResult { beta, band: j, per_step_increments, gauge_checksum, refined_vertices: points })
}

/// Appends the frames after `a` up to and including `b`, bisecting until every link is
/// resolved.
#[allow(clippy::too_many_arguments)]
fn refine(
    model: &ModelHandle,
    a: (Point3, &BiorthFrame),
    b: Point3,
    j: usize,
    opts: &HolonomyOptions,
    depth: u32,
    edge: usize,
    out: &mut Vec<(Point3, BiorthFrame)>,
) -> Result<()> {
    let fb = tracked_frame_at(model, &b, a.1, &opts.frame)?;
    if link_deviation(a.1, &fb, j) <= opts.max_deviation {
        out.push((b, fb));
        return Ok(());
    }
    if depth >= opts.max_depth {
        return Err(Error::EdgeTooLong { index: edge }.at(a.0));
    }
    let mid = lerp(&a.0, &b, 0.5);
    refine(model, a, mid, j, opts, depth + 1, edge, out)?;
    let last = out.last().map(|(_, f)| f.clone()).expect("midpoint frame");
    refine(model, (mid, &last), b, j, opts, depth + 1, edge, out)
}

/// `i sum_k L(k -> k+1)` over a cyclic frame sequence (the last frame links back to the
/// first).
pub fn holonomy_of_frames(frames: &[BiorthFrame], j: usize) -> C64 {
    let n = frames.len();
    (0..n).fold(ZERO, |acc, k| acc + I * link(&frames[k], &frames[(k + 1) % n], j))
}
