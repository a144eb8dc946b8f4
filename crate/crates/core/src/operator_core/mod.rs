//! Operators with resolvent application, and the model catalog.
//!
//! Every operator keeps its matrix in natural coordinates (the coordinates of
//! a [`VectorSample`]) together with a unitary triangularization in
//! orthonormal coordinates. For the Volterra model the orthonormal
//! coordinates are the values scaled by the square roots of the quadrature
//! weights, so Euclidean norms there are `L²[0,1]` norms.

mod volterra;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complex_plane::ensure_finite;
use crate::error::{Error, Result};
use crate::linalg::{self, upper_shifted_solve, upper_shifted_solve_adjoint};

/// Values of a vector (or of a function on the Volterra grid).
pub type VectorSample = DVector<Complex64>;

/// Distance below which a point counts as a spectral pole.
pub const POLE_GUARD: f64 = 1e-13;

/// Relative defect every returned resolvent application satisfies.
pub const DEFECT_CONTRACT: f64 = 1e-10;

/// Serializable description of a catalog operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum OperatorDescriptor {
    /// Square matrix given row by row as `[re, im]` entries.
    Dense {
        rows: Vec<Vec<[f64; 2]>>,
    },
    JordanNilpotent {
        n: usize,
    },
    VolterraAnalytic {
        m: usize,
    },
    /// `T e_k = w_k e_{k+1}` on `len(weights) + 1` coordinates.
    WeightedShift {
        weights: Vec<f64>,
    },
    /// `diag(phases)`, each phase given as `[re, im]` of modulus one.
    UnitaryDiagonal {
        phases: Vec<[f64; 2]>,
    },
}

impl OperatorDescriptor {
    pub fn kind_name(&self) -> &'static str {
        match self {
            OperatorDescriptor::Dense { .. } => "dense",
            OperatorDescriptor::JordanNilpotent { .. } => "jordanNilpotent",
            OperatorDescriptor::VolterraAnalytic { .. } => "volterraAnalytic",
            OperatorDescriptor::WeightedShift { .. } => "weightedShift",
            OperatorDescriptor::UnitaryDiagonal { .. } => "unitaryDiagonal",
        }
    }

    pub fn dense(m: &DMatrix<Complex64>) -> Self {
        OperatorDescriptor::Dense {
            rows: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect(),
        }
    }

    pub fn unitary_diagonal_from_angles(angles: &[f64]) -> Self {
        OperatorDescriptor::UnitaryDiagonal { phases: angles.iter().map(|t| [t.cos(), t.sin()]).collect() }
    }
}

/// Change of basis from the triangular frame to orthonormal coordinates.
#[derive(Debug, Clone)]
enum Basis {
    Identity,
    Reversal,
    Unitary(DMatrix<Complex64>),
}

impl Basis {
    /// `v <- Q v`
    fn apply(&self, v: &mut [Complex64]) {
        match self {
            Basis::Identity => {}
            Basis::Reversal => v.reverse(),
            Basis::Unitary(q) => {
                let out = q * DVector::from_column_slice(v);
                v.copy_from_slice(out.as_slice());
            }
        }
    }

    /// `v <- Q^H v`
    fn apply_adjoint(&self, v: &mut [Complex64]) {
        match self {
            Basis::Identity => {}
            Basis::Reversal => v.reverse(),
            Basis::Unitary(q) => {
                let out = q.ad_mul(&DVector::from_column_slice(v));
                v.copy_from_slice(out.as_slice());
            }
        }
    }

    /// `Q M Q^H`
    fn conjugate(&self, m: DMatrix<Complex64>) -> DMatrix<Complex64> {
        match self {
            Basis::Identity => m,
            Basis::Reversal => {
                let n = m.nrows();
                DMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)])
            }
            Basis::Unitary(q) => q * m * q.adjoint(),
        }
    }
}

/// An operator on `C^dim` with exact resolvent application.
#[derive(Debug, Clone)]
pub struct OperatorHandle {
    descriptor: OperatorDescriptor,
    dim: usize,
    matrix: DMatrix<Complex64>,
    sqrt_weights: Option<Vec<f64>>,
    grid: Option<Vec<f64>>,
    basis: Basis,
    triangular: DMatrix<Complex64>,
    diagonal: bool,
    spectrum_at_zero: bool,
    power_bound: Option<f64>,
}

pub fn make_model_operator(descriptor: &OperatorDescriptor) -> Result<OperatorHandle> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match descriptor {
        OperatorDescriptor::JordanNilpotent { n } => {
            if *n == 0 {
                return Err(Error::InvalidInput("jordanNilpotent needs n >= 1".into()));
            }
            let t = DMatrix::from_fn(*n, *n, |i, j| if j == i + 1 { one } else { zero });
            Ok(OperatorHandle::triangular(descriptor.clone(), t.clone(), t, Basis::Identity, true, None))
        }
        OperatorDescriptor::WeightedShift { weights } => {
            if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
                return Err(Error::InvalidInput(format!("weightedShift weights must be positive, got {w}")));
            }
            let n = weights.len() + 1;
            let t = DMatrix::from_fn(n, n, |i, j| if i == j + 1 { Complex64::new(weights[j], 0.0) } else { zero });
            // Reversing the basis turns the sub-diagonal shift upper triangular.
            let upper = DMatrix::from_fn(n, n, |i, j| t[(n - 1 - i, n - 1 - j)]);
            Ok(OperatorHandle::triangular(descriptor.clone(), t, upper, Basis::Reversal, true, None))
        }
        OperatorDescriptor::UnitaryDiagonal { phases } => {
            if phases.is_empty() {
                return Err(Error::InvalidInput("unitaryDiagonal needs at least one phase".into()));
            }
            let mut d = Vec::with_capacity(phases.len());
            for &[re, im] in phases {
                let p = ensure_finite(Complex64::new(re, im))?;
                if (p.norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!("unitaryDiagonal phase ({re}, {im}) is not unimodular")));
                }
                d.push(p);
            }
            let t = DMatrix::from_diagonal(&DVector::from_vec(d));
            let mut h = OperatorHandle::triangular(descriptor.clone(), t.clone(), t, Basis::Identity, false, Some(1.0));
            h.diagonal = true;
            Ok(h)
        }
        OperatorDescriptor::Dense { rows } => {
            let n = rows.len();
            if n == 0 || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidInput("dense operator must be a non-empty square matrix".into()));
            }
            let t = DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
            if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput("dense operator has non-finite entries".into()));
            }
            let (q, upper) = t.clone().schur().unpack();
            let upper = DMatrix::from_fn(n, n, |i, j| if i <= j { upper[(i, j)] } else { zero });
            let spectrum_at_zero = (0..n).all(|i| upper[(i, i)].norm() <= 1e-12 * (1.0 + t.norm()));
            Ok(OperatorHandle::triangular(descriptor.clone(), t, upper, Basis::Unitary(q), spectrum_at_zero, None))
        }
        OperatorDescriptor::VolterraAnalytic { m } => {
            if *m < 8 {
                return Err(Error::InvalidInput(format!(
                    "volterraAnalytic needs m >= 8 (quadrature too coarse), got {m}"
                )));
            }
            let model = volterra::build(*m);
            let sw: Vec<f64> = model.weights.iter().map(|w| w.sqrt()).collect();
            let natural = model.matrix.map(|v| Complex64::new(v, 0.0));
            let ortho = DMatrix::from_fn(*m, *m, |i, j| natural[(i, j)] * (sw[i] / sw[j]));
            let (q, upper) = ortho.schur().unpack();
            let upper = DMatrix::from_fn(*m, *m, |i, j| if i <= j { upper[(i, j)] } else { zero });
            let mut h = OperatorHandle::triangular(descriptor.clone(), natural, upper, Basis::Unitary(q), true, None);
            h.sqrt_weights = Some(sw);
            h.grid = Some(model.nodes);
            Ok(h)
        }
    }
}

impl OperatorHandle {
    fn triangular(
        descriptor: OperatorDescriptor,
        matrix: DMatrix<Complex64>,
        triangular: DMatrix<Complex64>,
        basis: Basis,
        spectrum_at_zero: bool,
        power_bound: Option<f64>,
    ) -> Self {
        OperatorHandle {
            descriptor,
            dim: matrix.nrows(),
            matrix,
            sqrt_weights: None,
            grid: None,
            basis,
            triangular,
            diagonal: false,
            spectrum_at_zero,
            power_bound,
        }
    }

    pub fn descriptor(&self) -> &OperatorDescriptor {
        &self.descriptor
    }

    pub fn kind_name(&self) -> &'static str {
        self.descriptor.kind_name()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Matrix in natural coordinates.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Volterra grid in `(0, 1)`.
    pub fn grid(&self) -> Option<&[f64]> {
        self.grid.as_deref()
    }

    /// Inner-product weights (all ones unless the operator lives on a grid).
    pub fn weights(&self) -> Vec<f64> {
        match &self.sqrt_weights {
            Some(sw) => sw.iter().map(|s| s * s).collect(),
            None => vec![1.0; self.dim],
        }
    }

    pub fn spectrum_at_zero(&self) -> bool {
        self.spectrum_at_zero
    }

    /// `sup_n ||T^n||` when known.
    pub fn power_bound(&self) -> Option<f64> {
        self.power_bound
    }

    /// Eigenvalues of the matrix model.
    pub fn spectrum(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.triangular[(i, i)]).collect()
    }

    /// Distance from `z` to the eigenvalues.
    pub fn spectral_distance(&self, z: Complex64) -> f64 {
        (0..self.dim).map(|i| (z - self.triangular[(i, i)]).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn check_pole(&self, z: Complex64) -> Result<()> {
        ensure_finite(z)?;
        let distance = self.spectral_distance(z);
        if distance < POLE_GUARD {
            return Err(Error::ResolventPole { re: z.re, im: z.im, distance });
        }
        Ok(())
    }

    fn check_len(&self, x: &VectorSample) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Sample a function on the Volterra grid.
    pub fn sample(&self, f: impl Fn(f64) -> Complex64) -> Option<VectorSample> {
        self.grid.as_ref().map(|g| DVector::from_iterator(g.len(), g.iter().map(|&t| f(t))))
    }

    /// Norm of the inner product attached to the operator.
    pub fn norm(&self, x: &VectorSample) -> f64 {
        match &self.sqrt_weights {
            Some(sw) => x.iter().zip(sw).map(|(v, s)| (v * s).norm_sqr()).sum::<f64>().sqrt(),
            None => x.norm(),
        }
    }

    pub fn inner(&self, x: &VectorSample, y: &VectorSample) -> Complex64 {
        let w = self.weights();
        x.iter().zip(y.iter()).zip(w).map(|((a, b), wi)| a.conj() * b * wi).sum()
    }

    pub fn apply(&self, x: &VectorSample) -> Result<VectorSample> {
        self.check_len(x)?;
        Ok(&self.matrix * x)
    }

    pub fn to_orthonormal(&self, x: &VectorSample) -> VectorSample {
        match &self.sqrt_weights {
            Some(sw) => DVector::from_iterator(self.dim, x.iter().zip(sw).map(|(v, s)| v * *s)),
            None => x.clone(),
        }
    }

    pub fn from_orthonormal(&self, x: &VectorSample) -> VectorSample {
        match &self.sqrt_weights {
            Some(sw) => DVector::from_iterator(self.dim, x.iter().zip(sw).map(|(v, s)| v / *s)),
            None => x.clone(),
        }
    }

    /// `D M D^{-1}` with `D` the square-root weights: the matrix of a
    /// natural-coordinate operator in orthonormal coordinates.
    pub fn matrix_to_orthonormal(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        match &self.sqrt_weights {
            Some(sw) => DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (sw[i] / sw[j])),
            None => m.clone(),
        }
    }

    pub fn matrix_from_orthonormal(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        match &self.sqrt_weights {
            Some(sw) => DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (sw[j] / sw[i])),
            None => m.clone(),
        }
    }

    /// Operator norm of a natural-coordinate matrix in the attached inner product.
    pub fn operator_norm(&self, m: &DMatrix<Complex64>) -> f64 {
        linalg::spectral_norm(&self.matrix_to_orthonormal(m))
    }

    /// Resolvent in orthonormal coordinates, no pole guard.
    pub(crate) fn ortho_resolvent_unchecked(&self, z: Complex64, v: &mut [Complex64]) {
        if self.diagonal {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi /= z - self.triangular[(i, i)];
            }
            return;
        }
        self.basis.apply_adjoint(v);
        upper_shifted_solve(&self.triangular, z, v);
        self.basis.apply(v);
    }

    /// Adjoint resolvent in orthonormal coordinates, no pole guard.
    pub(crate) fn ortho_resolvent_adjoint_unchecked(&self, z: Complex64, v: &mut [Complex64]) {
        if self.diagonal {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi /= (z - self.triangular[(i, i)]).conj();
            }
            return;
        }
        self.basis.apply_adjoint(v);
        upper_shifted_solve_adjoint(&self.triangular, z, v);
        self.basis.apply(v);
    }

    /// Upper-triangular factor, unitarily similar to the operator in
    /// orthonormal coordinates.
    pub(crate) fn triangular_factor(&self) -> &DMatrix<Complex64> {
        &self.triangular
    }

    /// Natural coordinates to the triangular frame.
    pub(crate) fn to_triangular_frame(&self, x: &VectorSample) -> VectorSample {
        let mut v = self.to_orthonormal(x);
        self.basis.apply_adjoint(v.as_mut_slice());
        v
    }

    pub(crate) fn leave_triangular_frame(&self, v: &VectorSample) -> VectorSample {
        let mut w = v.clone();
        self.basis.apply(w.as_mut_slice());
        self.from_orthonormal(&w)
    }

    /// Map a matrix expressed in the triangular frame to natural coordinates.
    pub(crate) fn triangular_frame_to_natural(&self, m: DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.matrix_from_orthonormal(&self.basis.conjugate(m))
    }

    /// The resolvent matrix in natural coordinates.
    pub fn resolvent_matrix(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.check_pole(z)?;
        Ok(self.triangular_frame_to_natural(linalg::upper_shifted_inverse(&self.triangular, z)))
    }

    /// Largest singular value of the resolvent in the attached inner product.
    pub fn resolvent_norm_dense(&self, z: Complex64) -> Result<f64> {
        self.check_pole(z)?;
        if self.diagonal {
            return Ok(1.0 / self.spectral_distance(z));
        }
        Ok(linalg::shifted_inverse_norm(&self.triangular, z))
    }

    fn solve(&self, z: Complex64, x: &VectorSample) -> VectorSample {
        let mut v = self.to_orthonormal(x);
        self.ortho_resolvent_unchecked(z, v.as_mut_slice());
        self.from_orthonormal(&v)
    }

    fn defect(&self, z: Complex64, x: &VectorSample, y: &VectorSample) -> VectorSample {
        x - (y * z - &self.matrix * y)
    }
}

/// `(z I - T)^{-1} x`, refined until the defect contract holds.
pub fn apply_resolvent(op: &OperatorHandle, z: Complex64, x: &VectorSample) -> Result<VectorSample> {
    op.check_len(x)?;
    op.check_pole(z)?;
    let scale = op.norm(x);
    let mut y = op.solve(z, x);
    let mut r = op.defect(z, x, &y);
    let mut defect = op.norm(&r);
    for _ in 0..3 {
        if defect <= 1e-3 * DEFECT_CONTRACT * scale {
            break;
        }
        let y_next = &y + op.solve(z, &r);
        let r_next = op.defect(z, x, &y_next);
        let d_next = op.norm(&r_next);
        if d_next >= defect {
            break;
        }
        y = y_next;
        r = r_next;
        defect = d_next;
    }
    if defect > DEFECT_CONTRACT * scale {
        return Err(Error::ResolventDefect { defect: defect / scale });
    }
    Ok(y)
}

/// `||R(z)x - R(w)x - (w - z) R(z) R(w) x|| / ||x||`.
pub fn resolvent_identity_residual(op: &OperatorHandle, z: Complex64, w: Complex64, x: &VectorSample) -> Result<f64> {
    if (z - w).norm() == 0.0 {
        return Err(Error::InvalidInput("resolvent identity needs z != w".into()));
    }
    let rz = apply_resolvent(op, z, x)?;
    let rw = apply_resolvent(op, w, x)?;
    let rzrw = apply_resolvent(op, z, &rw)?;
    let scale = op.norm(x);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(op.norm(&(rz - rw - rzrw * (w - z))) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn vecc(v: &[f64]) -> VectorSample {
        DVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)))
    }

    #[test]
    fn jordan_two_matrix() {
        let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 2 }).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(op.matrix(), &expect);
        assert!(op.spectrum_at_zero());
    }

    #[test]
    fn volterra_maps_one_to_t() {
        let op = make_model_operator(&OperatorDescriptor::VolterraAnalytic { m: 64 }).unwrap();
        let one = op.sample(|_| c(1.0, 0.0)).unwrap();
        let v = op.apply(&one).unwrap();
        let err = op.grid().unwrap().iter().zip(v.iter()).map(|(t, y)| (y - c(*t, 0.0)).norm()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn unitary_identity() {
        let op = make_model_operator(&OperatorDescriptor::unitary_diagonal_from_angles(&[0.0; 4])).unwrap();
        assert_eq!(op.matrix(), &DMatrix::identity(4, 4));
        assert_eq!(op.power_bound(), Some(1.0));
    }

    #[test]
    fn zero_operator_resolvent() {
        let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 1 }).unwrap();
        let y = apply_resolvent(&op, c(0.5, 0.0), &vecc(&[1.0])).unwrap();
        assert_relative_eq!(y[0].re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn jordan_two_neumann_series() {
        let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 2 }).unwrap();
        let y = apply_resolvent(&op, c(1.0, 0.0), &vecc(&[0.0, 1.0])).unwrap();
        assert!((y[0] - c(1.0, 0.0)).norm() < 1e-15 && (y[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn volterra_defect_on_the_left() {
        let op = make_model_operator(&OperatorDescriptor::VolterraAnalytic { m: 64 }).unwrap();
        let one = op.sample(|_| c(1.0, 0.0)).unwrap();
        let z = c(-0.1, 0.0);
        let y = apply_resolvent(&op, z, &one).unwrap();
        let defect = op.norm(&(&one - (&y * z - op.apply(&y).unwrap())));
        assert!(defect < 1e-8 * op.norm(&one));
    }

    #[test]
    fn poles_are_rejected() {
        let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 3 }).unwrap();
        let x = vecc(&[1.0, 0.0, 0.0]);
        assert!(matches!(apply_resolvent(&op, c(0.0, 0.0), &x), Err(Error::ResolventPole { .. })));
        let u = make_model_operator(&OperatorDescriptor::unitary_diagonal_from_angles(&[0.0, 1.0])).unwrap();
        let x = vecc(&[1.0, 1.0]);
        assert!(apply_resolvent(&u, Complex64::from_polar(1.0, 1.0), &x).is_err());
    }

    #[test]
    fn resolvent_identity_scalar() {
        let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 1 }).unwrap();
        let r = resolvent_identity_residual(&op, c(2.0, 0.0), c(3.0, 0.0), &vecc(&[1.0])).unwrap();
        assert!(r < 1e-14);
        assert!(resolvent_identity_residual(&op, c(2.0, 0.0), c(2.0, 0.0), &vecc(&[1.0])).is_err());
    }

    #[test]
    fn jordan_four_against_lu() {
        let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 4 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let z = Complex64::from_polar(1.0, rng.random_range(-3.0..3.0));
            let w = Complex64::from_polar(1.0, rng.random_range(-3.0..3.0));
            let x = DVector::from_fn(4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            assert!(resolvent_identity_residual(&op, z, w, &x).unwrap() < 1e-10);
            let oracle = (DMatrix::from_diagonal_element(4, 4, z) - op.matrix()).lu().solve(&x).unwrap();
            let y = apply_resolvent(&op, z, &x).unwrap();
            assert!((y - oracle).norm() < 1e-12);
        }
    }

    #[test]
    fn weighted_shift_structure() {
        let op = make_model_operator(&OperatorDescriptor::WeightedShift { weights: vec![0.5, 2.0, 1.0] }).unwrap();
        let e0 = vecc(&[1.0, 0.0, 0.0, 0.0]);
        let t = op.apply(&e0).unwrap();
        assert_eq!(t[1], c(0.5, 0.0));
        let z = c(0.4, 0.3);
        let oracle = (DMatrix::from_diagonal_element(4, 4, z) - op.matrix()).lu().solve(&e0).unwrap();
        assert!((apply_resolvent(&op, z, &e0).unwrap() - oracle).norm() < 1e-12);
        assert!(make_model_operator(&OperatorDescriptor::WeightedShift { weights: vec![1.0, 0.0] }).is_err());
    }

    #[test]
    fn dense_resolvent_matches_lu() {
        let m = DMatrix::from_fn(6, 6, |i, j| c(((i * 5 + j * 3) % 7) as f64 * 0.05, ((i + j) % 3) as f64 * 0.02));
        let op = make_model_operator(&OperatorDescriptor::dense(&m)).unwrap();
        let z = c(1.1, 0.2);
        let x = DVector::from_fn(6, |i, _| c(1.0, i as f64));
        let oracle = (DMatrix::from_diagonal_element(6, 6, z) - &m).lu().solve(&x).unwrap();
        assert!((apply_resolvent(&op, z, &x).unwrap() - oracle).norm() < 1e-12);
        let r = op.resolvent_matrix(z).unwrap();
        let oracle_m = (DMatrix::from_diagonal_element(6, 6, z) - &m).try_inverse().unwrap();
        assert!((r - oracle_m).norm() < 1e-12);
    }

    #[test]
    fn catalog_rejections() {
        assert!(make_model_operator(&OperatorDescriptor::VolterraAnalytic { m: 7 }).is_err());
        assert!(make_model_operator(&OperatorDescriptor::UnitaryDiagonal { phases: vec![[0.5, 0.0]] }).is_err());
        assert!(make_model_operator(&OperatorDescriptor::Dense { rows: vec![vec![[1.0, 0.0]], vec![]] }).is_err());
    }

    #[test]
    fn unitary_neumann_bound() {
        let op =
            make_model_operator(&OperatorDescriptor::unitary_diagonal_from_angles(&[0.1, 1.2, -2.0, 3.0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let z = Complex64::from_polar(rng.random_range(1.01..3.0), rng.random_range(-3.2..3.2));
            let x = DVector::from_fn(4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let y = apply_resolvent(&op, z, &x).unwrap();
            assert!(op.norm(&y) <= op.norm(&x) / (z.norm() - 1.0) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn descriptor_json() {
        let d: OperatorDescriptor = serde_json::from_str(r#"{"kind":"jordanNilpotent","n":3}"#).unwrap();
        assert_eq!(d, OperatorDescriptor::JordanNilpotent { n: 3 });
        let err = serde_json::from_str::<OperatorDescriptor>(r#"{"kind":"bogus"}"#).unwrap_err();
        assert!(err.to_string().contains("jordanNilpotent"));
    }
}
