//! Algebraic/geometric multiplicities and the diagonalizability verdict.

use serde::{Deserialize, Serialize};

use super::eigen::{eigendecompose, sort_eigenvalues};
use super::matrix::{CMatrix, C64};
use super::svd::rank_scaled;
use crate::error::Result;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// One group of coalesced eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Mean of the merged eigenvalues.
    pub value: C64,
    /// Algebraic multiplicity.
    pub eta: usize,
    /// Geometric multiplicity, `n - rank(M - value I)`, clamped to `1..=eta`.
    pub zeta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub clusters: Vec<Cluster>,
    pub diagonalizable: bool,
    /// Absolute merge distance actually used (`cluster_tol * ||M||_F`).
    pub cluster_tol: f64,
}

impl SpectrumReport {
    pub fn exceptional_clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.zeta < c.eta)
    }
}

/// Classifies the spectrum of `m`.
///
/// Eigenvalues closer than `cluster_tol * ||M||_F` are merged (single linkage). Rank is
/// thresholded at `rank_tol * max(sigma_max(M - value I), ||M||_F)`.
pub fn multiplicity_report(m: &CMatrix, cluster_tol: f64, rank_tol: f64) -> Result<SpectrumReport> {
    let eig = eigendecompose(m)?;
    Ok(report_from_values(m, &eig.values, cluster_tol, rank_tol))
}

pub(crate) fn report_from_values(m: &CMatrix, values: &[C64], cluster_tol: f64, rank_tol: f64) -> SpectrumReport {
    let n = m.dim();
    let scale = m.frobenius_norm();
    let merge = cluster_tol * scale;
    let groups = single_linkage(values, merge);
    let mut clusters: Vec<Cluster> = groups
        .iter()
        .map(|g| {
            let value = g.iter().map(|&i| values[i]).sum::<C64>() / g.len() as f64;
            let eta = g.len();
            let zeta = (n - rank_scaled(&m.shifted(value), rank_tol, scale)).clamp(1, eta);
            Cluster { value, eta, zeta }
        })
        .collect();
    let order = sort_eigenvalues(clusters.iter().map(|c| c.value).collect(), scale);
    clusters.sort_by_key(|c| order.iter().position(|v| *v == c.value).unwrap_or(usize::MAX));
    let diagonalizable = clusters.iter().all(|c| c.zeta == c.eta);
    SpectrumReport { clusters, diagonalizable, cluster_tol: merge }
}

fn single_linkage(values: &[C64], merge: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= merge {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => groups[k].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}
