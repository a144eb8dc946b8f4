//! Collocation model of the Volterra operator `(Vf)(t) = ∫_0^t f(s) ds`.
//!
//! Functions are represented by their values at the `m` Gauss-Legendre nodes
//! of `[0, 1]`; `V` acts by integrating the interpolating polynomial exactly.
//! The matrix is built through the Legendre expansion of the Lagrange basis,
//! `ℓ_j(x) = w_j Σ_k (2k+1)/2 P_k(x_j) P_k(x)`, and the antiderivatives
//! `∫_{-1}^x P_k = (P_{k+1} - P_{k-1}) / (2k+1)`.

use nalgebra::DMatrix;

use crate::linalg::gauss_legendre;

pub struct VolterraModel {
    /// Nodes in `(0, 1)`, ascending.
    pub nodes: Vec<f64>,
    /// Quadrature weights on `[0, 1]`, summing to 1.
    pub weights: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

fn legendre_table(kmax: usize, x: &[f64]) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(kmax + 1, x.len());
    for (i, &xi) in x.iter().enumerate() {
        p[(0, i)] = 1.0;
        if kmax >= 1 {
            p[(1, i)] = xi;
        }
        for k in 2..=kmax {
            let kf = k as f64;
            p[(k, i)] = ((2.0 * kf - 1.0) * xi * p[(k - 1, i)] - (kf - 1.0) * p[(k - 2, i)]) / kf;
        }
    }
    p
}

pub fn build(m: usize) -> VolterraModel {
    let (x, w) = gauss_legendre(m);
    let p = legendre_table(m, &x);
    // j[(k, i)] = (2k+1)/2 ∫_{-1}^{x_i} P_k
    let j =
        DMatrix::from_fn(m, m, |k, i| if k == 0 { 0.5 * (x[i] + 1.0) } else { 0.5 * (p[(k + 1, i)] - p[(k - 1, i)]) });
    let pw = DMatrix::from_fn(m, m, |k, jj| p[(k, jj)] * w[jj]);
    // Half from the change of variables t = (x + 1) / 2.
    let matrix = 0.5 * j.transpose() * pw;
    VolterraModel {
        nodes: x.iter().map(|xi| 0.5 * (xi + 1.0)).collect(),
        weights: w.iter().map(|wi| 0.5 * wi).collect(),
        matrix,
    }
}
