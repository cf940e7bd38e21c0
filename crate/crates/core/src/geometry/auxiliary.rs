use serde::{Deserialize, Serialize};

use super::{axis, check_step, offset, stencil_frames};
use crate::biorth::FrameOptions;
use crate::error::Result;
use crate::linalg::{inverse, CMatrix, C64, I};
use crate::models::ModelHandle;
use crate::Point3;

/// Norms of the two candidate forms of the auxiliary-operator identity, maximized over
/// the three curl components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryResiduals {
    /// `max_c ||(curl F)_c - i (F x F)_c||_F`; vanishes as `O(h^2)`.
    pub identity: f64,
    /// `max_c ||(curl F)_c + i (F x F)_c||_F`.
    pub opposite_sign: f64,
    /// `max_c ||(F x F)_c||_F`, the scale both are measured against.
    pub cross: f64,
}

/// Residual of `curl F = i F x F` for `F_a = -i sum_n |d_a psi_n><phi^n| = -i (d_a A) A^-1`.
pub fn auxiliary_operator_check(model: &ModelHandle, r: &Point3, h: f64) -> Result<f64> {
    Ok(auxiliary_operator_residuals(model, r, h)?.identity)
}

pub fn auxiliary_operator_residuals(model: &ModelHandle, r: &Point3, h: f64) -> Result<AuxiliaryResiduals> {
    check_step(h)?;
    // Stencil: R +- h e_a, and R +- h e_a +- h e_b for a < b.
    let mut points = Vec::new();
    for a in 0..3 {
        for s in [1.0, -1.0] {
            points.push(offset(r, &axis(a), s * h));
        }
    }
    for a in 0..3 {
        for b in a + 1..3 {
            for sa in [1.0, -1.0] {
                for sb in [1.0, -1.0] {
                    points.push(offset(&offset(r, &axis(a), sa * h), &axis(b), sb * h));
                }
            }
        }
    }
    let (centre, frames) = stencil_frames(model, r, &points, &FrameOptions::default())?;
    let right = |p: &Point3| -> &CMatrix {
        let k = points.iter().position(|q| q == p).expect("stencil point");
        frames[k].right()
    };
    let at = |sa: (usize, f64), sb: Option<(usize, f64)>| -> Point3 {
        let p = offset(r, &axis(sa.0), sa.1 * h);
        match sb {
            Some((b, s)) => offset(&p, &axis(b), s * h),
            None => p,
        }
    };
    let diff = |a: &CMatrix, b: &CMatrix| (a - b).scale(C64::new(0.5 / h, 0.0));
    let minus_i = -I;

    // F_a at the centre.
    let a_inv = inverse(centre.right())?;
    let f: Vec<CMatrix> = (0..3)
        .map(|a| &diff(right(&at((a, 1.0), None)), right(&at((a, -1.0), None))).scale(minus_i) * &a_inv)
        .collect();
    // F_b at R +- h e_a.
    let f_shift = |b: usize, a: usize, s: f64| -> Result<CMatrix> {
        let base = at((a, s), None);
        let plus = right(&at((a, s), Some((b, 1.0))));
        let minus = right(&at((a, s), Some((b, -1.0))));
        Ok(&diff(plus, minus).scale(minus_i) * &inverse(right(&base))?)
    };
    let mut res = AuxiliaryResiduals { identity: 0.0, opposite_sign: 0.0, cross: 0.0 };
    for (a, b) in [(1, 2), (2, 0), (0, 1)] {
        let da_fb = diff(&f_shift(b, a, 1.0)?, &f_shift(b, a, -1.0)?);
        let db_fa = diff(&f_shift(a, b, 1.0)?, &f_shift(a, b, -1.0)?);
        let curl = &da_fb - &db_fa;
        let cross = f[a].commutator(&f[b]);
        let i_cross = cross.scale(I);
        res.identity = res.identity.max((&curl - &i_cross).frobenius_norm());
        res.opposite_sign = res.opposite_sign.max((&curl + &i_cross).frobenius_norm());
        res.cross = res.cross.max(cross.frobenius_norm());
    }
    Ok(res)
}
