//! Dense complex kernels shared by the operator, quadrature and certificate code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Solve `(z I - T) v = b` in place for upper-triangular `T`.
pub fn upper_shifted_solve(t: &DMatrix<Complex64>, z: Complex64, b: &mut [Complex64]) {
    let n = t.nrows();
    let data = t.as_slice();
    for k in (0..n).rev() {
        let col = &data[k * n..k * n + k + 1];
        let xk = b[k] / (z - col[k]);
        b[k] = xk;
        for i in 0..k {
            b[i] += col[i] * xk;
        }
    }
}

/// Solve `(z I - T)^H v = b` in place for upper-triangular `T`.
pub fn upper_shifted_solve_adjoint(t: &DMatrix<Complex64>, z: Complex64, b: &mut [Complex64]) {
    let n = t.nrows();
    let data = t.as_slice();
    let zc = z.conj();
    for k in 0..n {
        let col = &data[k * n..k * n + k + 1];
        let mut acc = b[k];
        for i in 0..k {
            acc += col[i].conj() * b[i];
        }
        b[k] = acc / (zc - col[k].conj());
    }
}

/// Offset of column `j` in packed upper-triangular column-major storage.
#[inline]
pub fn packed_offset(j: usize) -> usize {
    j * (j + 1) / 2
}

/// `(z I - T)^{-1}` for upper-triangular `T`, written to packed
/// upper-triangular column-major storage of length `n(n+1)/2`.
pub fn upper_shifted_inverse_packed(t: &DMatrix<Complex64>, z: Complex64, out: &mut [Complex64]) {
    let n = t.nrows();
    let data = t.as_slice();
    let inv_diag: Vec<Complex64> = (0..n).map(|k| Complex64::new(1.0, 0.0) / (z - data[k * n + k])).collect();
    for j in 0..n {
        let x = &mut out[packed_offset(j)..packed_offset(j) + j + 1];
        x.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        x[j] = Complex64::new(1.0, 0.0);
        for k in (0..=j).rev() {
            let xk = x[k] * inv_diag[k];
            x[k] = xk;
            let col = &data[k * n..k * n + k];
            for (xi, &tik) in x[..k].iter_mut().zip(col) {
                *xi += tik * xk;
            }
        }
    }
}

pub fn unpack_upper(packed: &[Complex64], n: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            m[(i, j)] = packed[packed_offset(j) + i];
        }
    }
    m
}

/// `(z I - T)^{-1}` for upper-triangular `T` as a full matrix.
pub fn upper_shifted_inverse(t: &DMatrix<Complex64>, z: Complex64) -> DMatrix<Complex64> {
    let n = t.nrows();
    let mut packed = vec![Complex64::new(0.0, 0.0); packed_offset(n)];
    upper_shifted_inverse_packed(t, z, &mut packed);
    unpack_upper(&packed, n)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Largest singular value of `(zI - t)^{-1}` for upper-triangular `t`.
///
/// Power iteration on `R^H R` through triangular solves, stopped once the
/// geometric tail of the remaining increments falls below `1e-13` of the
/// estimate. Slow convergence falls back to a full SVD.
pub fn shifted_inverse_norm(t: &DMatrix<Complex64>, z: Complex64) -> f64 {
    let n = t.nrows();
    if n <= 16 {
        return spectral_norm(&upper_shifted_inverse(t, z));
    }
    let mut x: Vec<Complex64> =
        (0..n).map(|i| Complex64::new(1.0 + 0.5 * (0.7 * i as f64).sin(), 0.3 * (1.3 * i as f64).cos())).collect();
    let scale = frobenius_norm(&x);
    x.iter_mut().for_each(|v| *v /= scale);
    let (mut estimate, mut last_step) = (0.0f64, f64::INFINITY);
    for _ in 0..200 {
        upper_shifted_solve(t, z, &mut x);
        upper_shifted_solve_adjoint(t, z, &mut x);
        let norm = frobenius_norm(&x);
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        let next = norm.sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let step = (next - estimate).abs();
        estimate = next;
        if step == 0.0 {
            return estimate;
        }
        let rho = step / last_step;
        if last_step.is_finite() && rho < 0.95 && step * rho / (1.0 - rho) <= 1e-13 * estimate {
            return estimate;
        }
        last_step = step;
    }
    spectral_norm(&upper_shifted_inverse(t, z))
}

pub fn frobenius_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Orthonormal basis for the column span of `a` via SVD, keeping singular
/// values above `cutoff`.
pub fn column_basis(a: &DMatrix<Complex64>, cutoff: f64) -> DMatrix<Complex64> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > cutoff).collect();
    DMatrix::from_fn(a.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

pub fn vector_norm(v: &DVector<Complex64>) -> f64 {
    v.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_upper(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |i, j| {
            if i <= j {
                Complex64::new(((i * 7 + j * 3) % 5) as f64 * 0.1, ((i + 2 * j) % 3) as f64 * 0.05)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn triangular_solves_match_lu() {
        let t = sample_upper(9);
        let z = Complex64::new(1.3, -0.4);
        let b = DVector::from_fn(9, |i, _| Complex64::new(i as f64, 1.0));
        let shifted = DMatrix::from_diagonal_element(9, 9, z) - &t;
        let oracle = shifted.clone().lu().solve(&b).unwrap();
        let mut v = b.as_slice().to_vec();
        upper_shifted_solve(&t, z, &mut v);
        for (a, o) in v.iter().zip(oracle.iter()) {
            assert!((a - o).norm() < 1e-12);
        }
        let oracle_h = shifted.adjoint().lu().solve(&b).unwrap();
        let mut v = b.as_slice().to_vec();
        upper_shifted_solve_adjoint(&t, z, &mut v);
        for (a, o) in v.iter().zip(oracle_h.iter()) {
            assert!((a - o).norm() < 1e-12);
        }
    }

    #[test]
    fn triangular_inverse_matches_lu() {
        let t = sample_upper(12);
        let z = Complex64::new(-0.7, 0.9);
        let inv = upper_shifted_inverse(&t, z);
        let shifted = DMatrix::from_diagonal_element(12, 12, z) - &t;
        let prod = shifted * inv;
        assert!((prod - DMatrix::identity(12, 12)).norm() < 1e-12);
    }

    #[test]
    fn inverse_norm_matches_svd() {
        for n in [4, 24, 60] {
            let t = sample_upper(n);
            for z in [Complex64::new(0.05, 0.02), Complex64::new(-0.3, 0.6), Complex64::new(2.0, -1.0)] {
                let oracle = upper_shifted_inverse(&t, z).singular_values().max();
                assert_relative_eq!(shifted_inverse_norm(&t, z), oracle, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for m in [1, 2, 5, 16, 64, 257] {
            let (x, w) = gauss_legendre(m);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * m - 2;
            let integral: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
            assert_relative_eq!(integral, 2.0 / (deg as f64 + 1.0), epsilon = 1e-12);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn five_point_rule_reference_values() {
        let (x, w) = gauss_legendre(5);
        assert_relative_eq!(x[4], 0.906_179_845_938_664, epsilon = 1e-15);
        assert_relative_eq!(w[2], 128.0 / 225.0, epsilon = 1e-15);
    }
}
