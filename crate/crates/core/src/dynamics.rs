//! Schrödinger evolution `i d/dt |Psi> = H(R(t)) |Psi>` (hbar = 1) along parameter paths,
//! adiabaticity monitoring and dynamical extraction of the geometric phase.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::biorth::{align_phase, build_frame, phase_pivot, track_bands, BiorthFrame, FrameOptions};
use crate::error::{Error, Result};
use crate::linalg::{inner, CMatrix, C64, I, ONE, ZERO};
use crate::models::ModelHandle;
use crate::Point3;

pub const DEFAULT_LEAKAGE_THRESHOLD: f64 = 0.05;
/// Bound on `|<phi^j_k|psi_j,k+1><phi^j_k+1|psi_j,k> - 1|` for a step to count as resolved.
pub const DEFAULT_STEP_DEVIATION: f64 = 0.5;
const CLOSURE_TOL: f64 = 1e-12;

/// Time-stamped parameter samples `(t_k, R_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPath {
    samples: Vec<(f64, Point3)>,
    closed: bool,
}

impl ParameterPath {
    pub fn new(samples: Vec<(f64, Point3)>, closed: bool) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: samples.len() });
        }
        for (k, (t, r)) in samples.iter().enumerate() {
            if !t.is_finite() || r.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("sample {k} is not finite")));
            }
            if k > 0 && *t <= samples[k - 1].0 {
                return Err(Error::InvalidInput(format!("sample times must increase strictly (sample {k})")));
            }
        }
        if closed {
            let (a, b) = (samples[0].1, samples[samples.len() - 1].1);
            if (0..3).any(|i| (a[i] - b[i]).abs() > CLOSURE_TOL) {
                return Err(Error::NotClosed);
            }
        }
        Ok(ParameterPath { samples, closed })
    }

    /// Points visited at uniform time spacing over `[0, total_time]`. The path is marked
    /// closed when the last point repeats the first.
    pub fn from_points(points: &[Point3], total_time: f64) -> Result<Self> {
        if !(total_time > 0.0) {
            return Err(Error::InvalidInput("total time must be positive".into()));
        }
        if points.len() < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: points.len() });
        }
        let steps = (points.len() - 1) as f64;
        let samples = points.iter().enumerate().map(|(k, r)| (total_time * k as f64 / steps, *r)).collect();
        let closed = points.len() > 2 && (0..3).all(|i| (points[0][i] - points[points.len() - 1][i]).abs() <= CLOSURE_TOL);
        ParameterPath::new(samples, closed)
    }

    /// The parameter held at `r` for `total_time`.
    pub fn constant(r: Point3, total_time: f64, steps: usize) -> Result<Self> {
        let steps = steps.max(1);
        let samples = (0..=steps).map(|k| (total_time * k as f64 / steps as f64, r)).collect();
        ParameterPath::new(samples, true)
    }

    /// One counter-clockwise turn (from axis `plane.0` toward axis `plane.1`) at constant
    /// angular speed.
    pub fn circle(center: Point3, radius: f64, plane: (usize, usize), total_time: f64, steps: usize) -> Result<Self> {
        check_plane(plane)?;
        if steps < 3 {
            return Err(Error::InsufficientSamples { needed: 3, got: steps });
        }
        let mut points: Vec<Point3> = (0..steps)
            .map(|k| {
                let a = TAU * k as f64 / steps as f64;
                let mut r = center;
                r[plane.0] += radius * a.cos();
                r[plane.1] += radius * a.sin();
                r
            })
            .collect();
        points.push(points[0]);
        let samples = points.into_iter().enumerate().map(|(k, r)| (total_time * k as f64 / steps as f64, r)).collect();
        ParameterPath::new(samples, true)
    }

    /// Straight segment from `from` to `to`.
    pub fn linear(from: Point3, to: Point3, total_time: f64, steps: usize) -> Result<Self> {
        let steps = steps.max(1);
        let points: Vec<Point3> = (0..=steps).map(|k| lerp(&from, &to, k as f64 / steps as f64)).collect();
        let samples = points.into_iter().enumerate().map(|(k, r)| (total_time * k as f64 / steps as f64, r)).collect();
        ParameterPath::new(samples, false)
    }

    /// `from -> to -> from`: a closed loop enclosing no area.
    pub fn back_and_forth(from: Point3, to: Point3, total_time: f64, steps: usize) -> Result<Self> {
        let half = (steps / 2).max(1);
        let mut points: Vec<Point3> = (0..=half).map(|k| lerp(&from, &to, k as f64 / half as f64)).collect();
        points.extend((0..half).rev().map(|k| lerp(&from, &to, k as f64 / half as f64)));
        let n = (points.len() - 1) as f64;
        let samples = points.into_iter().enumerate().map(|(k, r)| (total_time * k as f64 / n, r)).collect();
        ParameterPath::new(samples, true)
    }

    pub fn samples(&self) -> &[(f64, Point3)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn total_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].0 - self.samples[0].0
    }

    pub fn point(&self, k: usize) -> Point3 {
        self.samples[k].1
    }
}

pub(crate) fn check_plane(plane: (usize, usize)) -> Result<()> {
    if plane.0 > 2 || plane.1 > 2 || plane.0 == plane.1 {
        return Err(Error::InvalidInput(format!("invalid axis pair ({}, {})", plane.0, plane.1)));
    }
    Ok(())
}

pub(crate) fn lerp(a: &Point3, b: &Point3, s: f64) -> Point3 {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionMode {
    /// Refuses complex spectra anywhere on the path.
    Adiabatic,
    /// No spectral restriction.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub mode: EvolutionMode,
    pub frame: FrameOptions,
    pub max_step_deviation: f64,
}

impl EvolveOptions {
    pub fn new(mode: EvolutionMode) -> Self {
        EvolveOptions { mode, frame: FrameOptions::default(), max_step_deviation: DEFAULT_STEP_DEVIATION }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub points: Vec<Point3>,
    pub states: Vec<Vec<C64>>,
    /// `c^j(t_k) = <phi^j(R_k)|Psi(t_k)> exp(+i int_0^t_k E_j dt)`, bands labelled as at `t_0`.
    pub coefficients: Vec<Vec<C64>>,
    /// `<phi^j(R_k)|Psi(t_k)>` without the dynamical phase.
    pub amplitudes: Vec<Vec<C64>>,
    pub energies: Vec<Vec<C64>>,
    /// `<Psi|X(R_k)|Psi>`.
    pub pseudo_norm_trace: Vec<f64>,
    /// `int_0^T E_j dt` per band.
    pub dynamical_phases: Vec<C64>,
    /// Band carrying the largest initial weight.
    pub band: usize,
    /// `max_{k, j != band} |c^j(t_k)| / |c^band(0)|`.
    pub leakage: f64,
    pub closed: bool,
}

impl EvolutionRecord {
    pub fn dynamical_phase(&self) -> C64 {
        self.dynamical_phases[self.band]
    }

    pub fn final_state(&self) -> &[C64] {
        &self.states[self.states.len() - 1]
    }

    /// Leakage measured against band `m`.
    pub fn leakage_from(&self, m: usize) -> f64 {
        let c0 = self.coefficients[0][m].norm();
        if c0 == 0.0 {
            return f64::INFINITY;
        }
        self.coefficients
            .iter()
            .flat_map(|c| c.iter().enumerate().filter(move |(j, _)| *j != m).map(|(_, z)| z.norm()))
            .fold(0.0, f64::max)
            / c0
    }
}

/// Advances `psi` by `dt` under constant `h`: `A diag(exp(-i E_j dt)) A^-1 psi`.
pub fn propagate_step(h: &CMatrix, dt: f64, psi: &[C64]) -> Result<Vec<C64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput("time step must be positive".into()));
    }
    let frame = build_frame(h, &FrameOptions::permissive())?;
    propagate_in_frame(&frame, dt, psi)
}

fn propagate_in_frame(frame: &BiorthFrame, dt: f64, psi: &[C64]) -> Result<Vec<C64>> {
    let n = frame.dim();
    if psi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: psi.len() });
    }
    let mut out = vec![ZERO; n];
    for j in 0..n {
        let c = inner(&frame.phi(j), psi) * (-I * frame.energy(j) * dt).exp();
        for (o, p) in out.iter_mut().zip(frame.psi(j)) {
            *o += c * p;
        }
    }
    Ok(out)
}

fn max_imag(frame: &BiorthFrame) -> f64 {
    frame.energies().iter().map(|e| e.im.abs()).fold(0.0, f64::max)
}

/// Frame at `r` with bands relabelled to continue those of `prev`.
fn tracked_frame(model: &ModelHandle, r: &Point3, prev: Option<&BiorthFrame>, opts: &FrameOptions) -> Result<BiorthFrame> {
    let raw = build_frame(&model.hamiltonian(r), opts).map_err(|e| e.at(*r))?;
    Ok(match prev {
        Some(p) => raw.permuted(&track_bands(p, &raw)),
        None => raw,
    })
}

fn step_deviation(a: &BiorthFrame, b: &BiorthFrame, j: usize) -> f64 {
    (a.overlap(j, b, j) * b.overlap(j, a, j) - ONE).norm()
}

pub fn evolve_path(model: &ModelHandle, path: &ParameterPath, psi0: &[C64], mode: EvolutionMode) -> Result<EvolutionRecord> {
    evolve_path_with(model, path, psi0, &EvolveOptions::new(mode))
}

/// Piecewise-constant propagation: on `[t_k, t_k+1]` the Hamiltonian is frozen at the
/// chord midpoint `(R_k + R_k+1) / 2`.
pub fn evolve_path_with(
    model: &ModelHandle,
    path: &ParameterPath,
    psi0: &[C64],
    opts: &EvolveOptions,
) -> Result<EvolutionRecord> {
    let n = model.dim();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: psi0.len() });
    }
    let adiabatic = opts.mode == EvolutionMode::Adiabatic;
    let check_real = |frame: &BiorthFrame, index: usize, r: &Point3| -> Result<()> {
        if adiabatic && !frame.real_spectrum() {
            return Err(Error::ComplexSpectrum { index, max_imag: max_imag(frame) }.at(*r));
        }
        Ok(())
    };

    let samples = path.samples();
    let r0 = samples[0].1;
    let mut frame = tracked_frame(model, &r0, None, &opts.frame)?;
    check_real(&frame, 0, &r0)?;

    let mut phases = vec![ZERO; n];
    let mut psi = psi0.to_vec();
    let amp0: Vec<C64> = (0..n).map(|j| inner(&frame.phi(j), &psi)).collect();
    let band = (0..n).fold(0, |best, j| if amp0[j].norm() > amp0[best].norm() { j } else { best });

    let mut rec = EvolutionRecord {
        times: Vec::with_capacity(samples.len()),
        points: Vec::with_capacity(samples.len()),
        states: Vec::with_capacity(samples.len()),
        coefficients: Vec::with_capacity(samples.len()),
        amplitudes: Vec::with_capacity(samples.len()),
        energies: Vec::with_capacity(samples.len()),
        pseudo_norm_trace: Vec::with_capacity(samples.len()),
        dynamical_phases: Vec::new(),
        band,
        leakage: 0.0,
        closed: path.closed(),
    };
    let record = |rec: &mut EvolutionRecord, k: usize, frame: &BiorthFrame, psi: &[C64], phases: &[C64]| {
        let amps: Vec<C64> = (0..n).map(|j| inner(&frame.phi(j), psi)).collect();
        let coeffs: Vec<C64> = amps.iter().zip(phases).map(|(a, p)| a * (I * p).exp()).collect();
        rec.times.push(samples[k].0);
        rec.points.push(samples[k].1);
        rec.states.push(psi.to_vec());
        rec.pseudo_norm_trace.push(inner(psi, &frame.metric().mul_vec(psi)).re);
        rec.energies.push(frame.energies().to_vec());
        rec.amplitudes.push(amps);
        rec.coefficients.push(coeffs);
    };
    record(&mut rec, 0, &frame, &psi, &phases);

    for k in 0..samples.len() - 1 {
        let (t0, ra) = samples[k];
        let (t1, rb) = samples[k + 1];
        let dt = t1 - t0;
        let mid = lerp(&ra, &rb, 0.5);
        let mid_frame = tracked_frame(model, &mid, Some(&frame), &opts.frame)?;
        check_real(&mid_frame, k, &mid)?;
        let next = tracked_frame(model, &rb, Some(&mid_frame), &opts.frame)?;
        check_real(&next, k + 1, &rb)?;
        for j in 0..n {
            let deviation = step_deviation(&frame, &next, j);
            if deviation > opts.max_step_deviation {
                return Err(Error::StepTooCoarse { index: k, deviation }.at(rb));
            }
        }
        psi = propagate_in_frame(&mid_frame, dt, &psi)?;
        for (p, e) in phases.iter_mut().zip(mid_frame.energies()) {
            *p += e * dt;
        }
        frame = next;
        record(&mut rec, k + 1, &frame, &psi, &phases);
    }
    rec.dynamical_phases = phases;
    rec.leakage = rec.leakage_from(band);
    Ok(rec)
}

/// Geometric phase `beta` of band `m` with `c^m(T) = c^m(0) exp(i beta)`, accumulated from
/// per-sample increments so that `|beta| > pi` is unambiguous.
pub fn extract_geometric_phase(record: &EvolutionRecord, m: usize) -> Result<C64> {
    extract_geometric_phase_with(record, m, DEFAULT_LEAKAGE_THRESHOLD)
}

pub fn extract_geometric_phase_with(record: &EvolutionRecord, m: usize, threshold: f64) -> Result<C64> {
    if !record.closed {
        return Err(Error::NotClosed);
    }
    let n = record.coefficients.first().map_or(0, Vec::len);
    if m >= n {
        return Err(Error::InvalidInput(format!("band {m} out of range")));
    }
    let leakage = record.leakage_from(m);
    if !(leakage <= threshold) {
        return Err(Error::LeakageTooLarge { leakage, threshold });
    }
    let mut total = ZERO;
    for w in record.coefficients.windows(2) {
        total += (w[1][m] / w[0][m]).ln();
    }
    Ok(-I * total)
}

/// `max_k max_{j != m} |<phi^m|d psi_j/dt> / (E_m - E_j)|` along the path, with time
/// derivatives from central differences of phase-aligned neighbour frames.
pub fn adiabaticity_margin(model: &ModelHandle, path: &ParameterPath, m: usize) -> Result<f64> {
    let opts = FrameOptions::permissive();
    let floor = FrameOptions::default().gap_floor;
    let samples = path.samples();
    let count = samples.len();
    let mut frames: Vec<BiorthFrame> = Vec::with_capacity(count);
    for (k, (_, r)) in samples.iter().enumerate() {
        let f = tracked_frame(model, r, frames.last(), &opts)?;
        if !f.real_spectrum() {
            return Err(Error::ComplexSpectrum { index: k, max_imag: max_imag(&f) }.at(*r));
        }
        let scale = model.hamiltonian(r).frobenius_norm();
        for a in 0..f.dim() {
            for b in a + 1..f.dim() {
                let gap = (f.energy(a) - f.energy(b)).norm();
                if gap <= floor * scale {
                    return Err(Error::Degenerate { a, b, gap }.at(*r));
                }
            }
        }
        frames.push(f);
    }
    let n = model.dim();
    if m >= n {
        return Err(Error::InvalidInput(format!("band {m} out of range")));
    }
    let mut margin: f64 = 0.0;
    for k in 0..count {
        let (lo, hi) = match (k, path.closed()) {
            (0, true) => (count - 2, 1),
            (k, true) if k == count - 1 => (k - 1, 1),
            (0, false) => (0, 1),
            (k, false) if k == count - 1 => (k - 1, k),
            (k, _) => (k - 1, k + 1),
        };
        let span = if hi > lo {
            samples[hi].0 - samples[lo].0
        } else {
            samples[count - 1].0 - samples[lo].0 + samples[hi].0 - samples[0].0
        };
        let centre = &frames[k];
        for j in (0..n).filter(|&j| j != m) {
            let pivot = phase_pivot(centre, j);
            let a = align_phase(&frames[hi], j, pivot)?.psi(j);
            let b = align_phase(&frames[lo], j, pivot)?.psi(j);
            let dpsi: Vec<C64> = a.iter().zip(&b).map(|(x, y)| (x - y) / span).collect();
            let q = inner(&centre.phi(m), &dpsi) / (centre.energy(m) - centre.energy(j));
            margin = margin.max(q.norm());
        }
    }
    Ok(margin)
}
