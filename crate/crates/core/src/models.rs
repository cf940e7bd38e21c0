//! Parametric Hamiltonians: the non-Hermitian Dirac model, the two-mode bosonic
//! Bogoliubov-de Gennes (BdG) model, and user-supplied models.
//!
//! * Dirac: `H(p) = p_x sx + p_y sy + (p_z + i s) sz`, exceptional ring
//!   `p_x^2 + p_y^2 = s^2, p_z = 0`.
//! * BdG: `H(x, y, z) = i x sx + i y sy + z sz`, exceptional cone `z^2 = x^2 + y^2`.
//!
//! Both carry a [`Reference`] with closed-form energies, eigenvectors, metric and curvature.
//! Band 0 is the `+` branch (largest real part), band 1 the `-` branch.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::biorth::{BiorthFrame, FrameOptions};
use crate::error::{Error, Result};
use crate::linalg::{norm, CMatrix, C64, ONE, ZERO};
use crate::Point3;

const EP_EQUALITY_TOL: f64 = 1e-12;

type HamiltonianFn = dyn Fn(&Point3) -> CMatrix + Send + Sync;

#[derive(Clone)]
enum Kind {
    Dirac { s: f64 },
    Bdg,
    Custom(Arc<HamiltonianFn>),
}

/// An immutable parametric Hamiltonian `R -> H(R)`.
#[derive(Clone)]
pub struct ModelHandle {
    name: String,
    dim: usize,
    param_dim: usize,
    kind: Kind,
}

impl fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelHandle")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("param_dim", &self.param_dim)
            .field("constants", &self.constants())
            .finish()
    }
}

/// Model selector as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Dirac {
        s: f64,
    },
    Bdg,
    /// `H(R) = H0 + R_x Hx + R_y Hy + R_z Hz`; matrices as rows of `[re, im]` pairs.
    Custom {
        h0: Vec<Vec<[f64; 2]>>,
        #[serde(default)]
        hx: Option<Vec<Vec<[f64; 2]>>>,
        #[serde(default)]
        hy: Option<Vec<Vec<[f64; 2]>>>,
        #[serde(default)]
        hz: Option<Vec<Vec<[f64; 2]>>>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<ModelHandle> {
        match self {
            ModelSpec::Dirac { s } => {
                if !s.is_finite() {
                    return Err(Error::InvalidInput("dirac constant s must be finite".into()));
                }
                Ok(ModelHandle::dirac(*s))
            }
            ModelSpec::Bdg => Ok(ModelHandle::bdg()),
            ModelSpec::Custom { h0, hx, hy, hz } => {
                let to_matrix = |rows: &Vec<Vec<[f64; 2]>>| {
                    CMatrix::from_rows(
                        &rows.iter().map(|r| r.iter().map(|p| C64::new(p[0], p[1])).collect()).collect::<Vec<_>>(),
                    )
                };
                let base = to_matrix(h0)?;
                let n = base.dim();
                let mut terms = Vec::new();
                let mut param_dim = 0;
                for (axis, m) in [hx, hy, hz].into_iter().enumerate() {
                    if let Some(rows) = m {
                        let mat = to_matrix(rows)?;
                        if mat.dim() != n {
                            return Err(Error::DimensionMismatch { expected: n, got: mat.dim() });
                        }
                        param_dim = axis + 1;
                        terms.push((axis, mat));
                    }
                }
                ModelHandle::custom("custom", n, param_dim.max(1), move |r: &Point3| {
                    let mut h = base.clone();
                    for (axis, m) in &terms {
                        h = &h + &m.scale(C64::new(r[*axis], 0.0));
                    }
                    h
                })
            }
        }
    }
}

impl ModelHandle {
    pub fn dirac(s: f64) -> Self {
        ModelHandle { name: "dirac".into(), dim: 2, param_dim: 3, kind: Kind::Dirac { s } }
    }

    pub fn bdg() -> Self {
        ModelHandle { name: "bdg".into(), dim: 2, param_dim: 3, kind: Kind::Bdg }
    }

    /// User model from a reentrant matrix-valued callback. Parameters beyond `param_dim`
    /// are passed through as given (normally zero).
    pub fn custom<F>(name: &str, dim: usize, param_dim: usize, evaluate: F) -> Result<Self>
    where
        F: Fn(&Point3) -> CMatrix + Send + Sync + 'static,
    {
        if dim == 0 || dim > crate::linalg::MAX_DIM {
            return Err(Error::InvalidInput(format!("model dimension {dim} out of range")));
        }
        if !(1..=3).contains(&param_dim) {
            return Err(Error::InvalidInput(format!("param_dim {param_dim} must be 1, 2 or 3")));
        }
        Ok(ModelHandle { name: name.into(), dim, param_dim, kind: Kind::Custom(Arc::new(evaluate)) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    /// Model constants (the Dirac gain/loss `s`).
    pub fn constants(&self) -> Vec<(&'static str, f64)> {
        match self.kind {
            Kind::Dirac { s } => vec![("s", s)],
            _ => Vec::new(),
        }
    }

    pub fn hamiltonian(&self, r: &Point3) -> CMatrix {
        match &self.kind {
            Kind::Dirac { s } => dirac_hamiltonian(r, *s),
            Kind::Bdg => bdg_hamiltonian(r),
            Kind::Custom(f) => {
                let h = f(r);
                assert_eq!(h.dim(), self.dim, "custom model returned a matrix of the wrong dimension");
                h
            }
        }
    }

    pub fn reference(&self) -> Option<Reference> {
        match self.kind {
            Kind::Dirac { s } => Some(Reference::Dirac { s }),
            Kind::Bdg => Some(Reference::Bdg),
            Kind::Custom(_) => None,
        }
    }

    fn require_reference(&self) -> Result<Reference> {
        self.reference().ok_or_else(|| Error::NoReference(self.name.clone()))
    }
}

fn dirac_hamiltonian(p: &Point3, s: f64) -> CMatrix {
    let dz = C64::new(p[2], s);
    CMatrix::from_2x2(dz, C64::new(p[0], -p[1]), C64::new(p[0], p[1]), -dz)
}

fn bdg_hamiltonian(r: &Point3) -> CMatrix {
    let (x, y, z) = (r[0], r[1], r[2]);
    CMatrix::from_2x2(C64::new(z, 0.0), C64::new(y, x), C64::new(-y, x), C64::new(-z, 0.0))
}

/// `H(R)` for any model.
pub fn model_hamiltonian(model: &ModelHandle, r: &Point3) -> CMatrix {
    model.hamiltonian(r)
}

pub fn reference_energies(model: &ModelHandle, r: &Point3) -> Result<(C64, C64)> {
    Ok(model.require_reference()?.energies(r))
}

pub fn reference_curvature(model: &ModelHandle, r: &Point3, band: usize) -> Result<[C64; 3]> {
    model.require_reference()?.curvature(r, band)
}

pub fn is_exceptional(model: &ModelHandle, r: &Point3) -> Result<bool> {
    Ok(model.require_reference()?.is_exceptional(r))
}

/// Closed-form eigenvectors as printed: `psi[j]` right, `phi[j]` left, unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceVectors {
    pub psi: [Vec<C64>; 2],
    pub phi: [Vec<C64>; 2],
}

/// Closed-form results for the built-in models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Dirac { s: f64 },
    Bdg,
}

impl Reference {
    /// `(E_+, E_-)` with the principal square root.
    pub fn energies(&self, r: &Point3) -> (C64, C64) {
        let root = self.discriminant(r).sqrt();
        (root, -root)
    }

    /// `E^2`: `p^2 - s^2 + 2 i p_z s` (Dirac) or `z^2 - x^2 - y^2` (BdG).
    fn discriminant(&self, r: &Point3) -> C64 {
        match *self {
            Reference::Dirac { s } => {
                let p2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
                C64::new(p2 - s * s, 2.0 * r[2] * s)
            }
            Reference::Bdg => C64::new(r[2] * r[2] - r[0] * r[0] - r[1] * r[1], 0.0),
        }
    }

    pub fn is_exceptional(&self, r: &Point3) -> bool {
        match *self {
            Reference::Dirac { s } => {
                let rho2 = r[0] * r[0] + r[1] * r[1];
                s != 0.0 && r[2].abs() <= EP_EQUALITY_TOL && (rho2 - s * s).abs() <= EP_EQUALITY_TOL * (s * s).max(1.0)
            }
            Reference::Bdg => {
                let rho2 = r[0] * r[0] + r[1] * r[1];
                let z2 = r[2] * r[2];
                rho2 + z2 > 0.0 && (z2 - rho2).abs() <= EP_EQUALITY_TOL * (rho2 + z2).max(1.0)
            }
        }
    }

    /// Closed-form biorthonormal eigenvectors, verbatim (not normalized).
    ///
    /// Dirac requires `(p_x, p_y) != 0`; BdG requires the interior of the upper cone `z > sqrt(x^2 + y^2)`.
    pub fn eigenvectors(&self, r: &Point3) -> Result<ReferenceVectors> {
        if self.is_exceptional(r) {
            return Err(Error::OnExceptionalPoint);
        }
        match *self {
            Reference::Dirac { s } => {
                let (px, py, pz) = (r[0], r[1], r[2]);
                if px == 0.0 && py == 0.0 {
                    return Err(Error::OutOfValidity("dirac closed-form vectors need (p_x, p_y) != 0".into()));
                }
                let p2 = px * px + py * py + pz * pz;
                let q = C64::new(p2 - s * s, 2.0 * pz * s).sqrt();
                let qc = C64::new(p2 - s * s, -2.0 * pz * s).sqrt();
                if q.norm() == 0.0 {
                    return Err(Error::OnExceptionalPoint);
                }
                let is = C64::new(0.0, s);
                let p_minus = C64::new(px, -py);
                let p_plus = C64::new(px, py);
                let top = q + is + pz;
                let psi1 = vec![top, p_plus];
                let phi1 = vec![(qc * 2.0).inv(), (qc + is - pz) / (p_minus * qc * 2.0)];
                let psi2 = vec![-p_minus, top];
                let phi2 = vec![-(qc + is - pz) / (p_plus * qc * 2.0), (qc * 2.0).inv()];
                Ok(ReferenceVectors { psi: [psi1, psi2], phi: [phi1, phi2] })
            }
            Reference::Bdg => {
                let (x, y, z) = (r[0], r[1], r[2]);
                let rho2 = z * z - x * x - y * y;
                if rho2 <= 0.0 || z <= 0.0 {
                    return Err(Error::OutOfValidity("bdg closed-form vectors need z > sqrt(x^2 + y^2)".into()));
                }
                let (a, b) = bdg_ab(x, y, z);
                Ok(ReferenceVectors {
                    psi: [vec![a, b], vec![b.conj(), a.conj()]],
                    phi: [vec![a, -b], vec![-b.conj(), a.conj()]],
                })
            }
        }
    }

    /// Frame assembled from the verbatim closed-form right vectors.
    pub fn frame(&self, r: &Point3) -> Result<BiorthFrame> {
        let v = self.eigenvectors(r)?;
        let (e1, e2) = self.energies(r);
        BiorthFrame::from_right_vectors(
            vec![e1, e2],
            CMatrix::from_columns(&[v.psi[0].clone(), v.psi[1].clone()]),
            &FrameOptions::default(),
        )
    }

    /// Closed-form right vectors moved into the numerical frame gauge (balanced amplitude,
    /// first nonzero component real positive).
    pub fn gauge_aligned_vectors(&self, r: &Point3) -> Result<[Vec<C64>; 2]> {
        let v = self.eigenvectors(r)?;
        let align = |psi: &Vec<C64>, phi: &Vec<C64>| {
            let s = (norm(phi) / norm(psi)).sqrt();
            let k = crate::linalg::first_nonzero(psi, 1e-12).unwrap_or(0);
            let phase = psi[k].conj() / psi[k].norm();
            psi.iter().map(|z| z * phase * s).collect::<Vec<_>>()
        };
        Ok([align(&v.psi[0], &v.phi[0]), align(&v.psi[1], &v.phi[1])])
    }

    /// Closed-form metric `X` in the gauge of [`Reference::eigenvectors`].
    ///
    /// Dirac: only on the real-spectrum part of the `p_z = 0` plane.
    pub fn metric(&self, r: &Point3) -> Result<CMatrix> {
        match *self {
            Reference::Dirac { s } => {
                let (px, py) = (r[0], r[1]);
                let rho2 = px * px + py * py;
                if r[2].abs() > EP_EQUALITY_TOL || rho2 <= s * s {
                    return Err(Error::OutOfValidity("dirac closed-form metric needs p_z = 0 and p_x^2 + p_y^2 > s^2".into()));
                }
                let off_up = C64::new(py, px) * (-s / rho2);
                let off_dn = C64::new(py, -px) * (-s / rho2);
                Ok(CMatrix::from_2x2(ONE, off_up, off_dn, ONE).scale(C64::new(0.5, 0.0)))
            }
            Reference::Bdg => {
                let (x, y, z) = (r[0], r[1], r[2]);
                if self.is_exceptional(r) {
                    return Err(Error::OnExceptionalPoint);
                }
                if z * z - x * x - y * y <= 0.0 || z <= 0.0 {
                    return Err(Error::OutOfValidity("bdg closed-form metric needs z > sqrt(x^2 + y^2)".into()));
                }
                let (a, b) = bdg_ab(x, y, z);
                let d = C64::new(a.norm_sqr() + b.norm_sqr(), 0.0);
                Ok(CMatrix::from_2x2(d, a * b.conj() * -2.0, a.conj() * b * -2.0, d))
            }
        }
    }

    /// Closed-form Berry curvature of `band` (0 = `+` branch).
    ///
    /// Dirac: valid on the `p_z = 0` plane outside the ring; only the component normal to
    /// that plane has a closed form, `B_z = -+ (i/2) s / (p_x^2 + p_y^2 - s^2)^(3/2)`, and the
    /// in-plane entries of the returned vector are zero.
    ///
    /// BdG: valid inside the cone, `B = +- R / (2 (z^2 - x^2 - y^2)^(3/2))`.
    pub fn curvature(&self, r: &Point3, band: usize) -> Result<[C64; 3]> {
        if band > 1 {
            return Err(Error::InvalidInput(format!("band {band} out of range for a two-level model")));
        }
        if self.is_exceptional(r) {
            return Err(Error::OnExceptionalPoint);
        }
        let sign = if band == 0 { 1.0 } else { -1.0 };
        match *self {
            Reference::Dirac { s } => {
                let rho2 = r[0] * r[0] + r[1] * r[1];
                if r[2].abs() > EP_EQUALITY_TOL || rho2 <= s * s {
                    return Err(Error::OutOfValidity("dirac curvature needs p_z = 0 and p_x^2 + p_y^2 > s^2".into()));
                }
                let bz = -sign * 0.5 * s / (rho2 - s * s).powf(1.5);
                Ok([ZERO, ZERO, C64::new(0.0, bz)])
            }
            Reference::Bdg => {
                let rho2 = r[2] * r[2] - r[0] * r[0] - r[1] * r[1];
                if rho2 <= 0.0 {
                    return Err(Error::OutOfValidity("bdg curvature needs z^2 > x^2 + y^2".into()));
                }
                let f = sign * 0.5 / rho2.powf(1.5);
                Ok([C64::new(f * r[0], 0.0), C64::new(f * r[1], 0.0), C64::new(f * r[2], 0.0)])
            }
        }
    }

    /// Parameter-independent Hermitian `Y` with `phi^j = alpha_j Y psi_j`, where known.
    pub fn constant_y(&self) -> Option<(CMatrix, Vec<i8>)> {
        match self {
            Reference::Bdg => Some((crate::linalg::pauli::sigma_z(), vec![1, -1])),
            Reference::Dirac { .. } => None,
        }
    }
}

fn bdg_ab(x: f64, y: f64, z: f64) -> (C64, C64) {
    let rho = (z * z - x * x - y * y).sqrt();
    let denom = (rho * rho + z * rho).sqrt();
    let a = C64::new(-(z + rho) / (std::f64::consts::SQRT_2 * denom), 0.0);
    let b = C64::new(y, -x) / (std::f64::consts::SQRT_2 * denom);
    (a, b)
}
