//! LU factorization with partial pivoting, linear solves and inverses.

use super::matrix::{CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Condition-number cap above which [`inverse`] reports [`Error::Singular`].
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Factorizes `m`. A zero pivot is an error only when `allow_singular` is false;
    /// otherwise it is replaced by `eps * ||m||` (used by inverse iteration).
    pub fn factor(m: &CMatrix, allow_singular: bool) -> Result<Lu> {
        let n = m.dim();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = f64::EPSILON * m.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
            }
            if lu[(k, k)].norm() == 0.0 {
                if !allow_singular {
                    return Err(Error::Singular { condition: f64::INFINITY });
                }
                lu[(k, k)] = C64::new(tiny, 0.0);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != ZERO {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.dim();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

/// Inverse with the default condition cap.
pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    inverse_with_cap(m, DEFAULT_CONDITION_CAP)
}

pub fn inverse_with_cap(m: &CMatrix, condition_cap: f64) -> Result<CMatrix> {
    let n = m.dim();
    let lu = Lu::factor(m, false)?;
    let mut inv = CMatrix::zeros(n);
    let mut e = vec![ZERO; n];
    for j in 0..n {
        e.iter_mut().for_each(|z| *z = ZERO);
        e[j] = ONE;
        let col = lu.solve(&e);
        if col.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        inv.set_column(j, &col);
    }
    let condition = m.norm_1() * inv.norm_1();
    if !(condition <= condition_cap) {
        return Err(Error::Singular { condition });
    }
    Ok(inv)
}

/// One-norm condition estimate `||M||_1 ||M^-1||_1` (infinite for singular `M`).
pub fn condition_number(m: &CMatrix) -> f64 {
    match inverse_with_cap(m, f64::INFINITY) {
        Ok(inv) => m.norm_1() * inv.norm_1(),
        Err(_) => f64::INFINITY,
    }
}
