//! Operator-valued contour integrals
//! `A = (1/2 pi i) ∫_Γ g(z) h(z) (zI - T)^{-1} dz`, their densification, and
//! the residual checks built on them.

mod quadrature;
mod weight;

pub use quadrature::{integrate, split_by_radius, Interval, QuadratureOptions, QuadratureOutcome};
pub use weight::{eval_weight, Multiplier, WeightFunction, CUT_GUARD};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::complex_plane::{Contour, Piece};
use crate::error::{Error, Result};
use crate::linalg::{packed_offset, unpack_upper, upper_shifted_inverse_packed, upper_shifted_solve};
use crate::operator_core::{OperatorHandle, VectorSample};

/// Integrand norms above this multiple of the input scale count as unbounded.
pub const INTEGRAND_CAP: f64 = 1e10;
/// Largest dimension [`densify_operator`] accepts.
pub const DENSIFY_CAP: usize = 512;
/// Halvings of the truncation radius tried before giving up.
const TRUNCATION_HALVINGS: usize = 60;

/// One integral `(1/2 pi i) ∫ g h R dz`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntegralSpec {
    pub weight: WeightFunction,
    pub multiplier: Multiplier,
    pub contour: Contour,
    /// Initial radius about the origin inside which the contour is dropped.
    pub truncation_radius: f64,
    /// Relative quadrature tolerance.
    pub tol: f64,
}

impl IntegralSpec {
    pub fn new(
        weight: WeightFunction,
        multiplier: Multiplier,
        contour: Contour,
        truncation_radius: f64,
        tol: f64,
    ) -> Result<Self> {
        if !(truncation_radius > 0.0 && truncation_radius.is_finite()) {
            return Err(Error::InvalidInput(format!("truncation radius must be positive, got {truncation_radius}")));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidInput(format!("quadrature tolerance must lie in (0, 1), got {tol}")));
        }
        Ok(IntegralSpec { weight, multiplier, contour, truncation_radius, tol })
    }

    pub fn with_multiplier(&self, multiplier: Multiplier) -> Self {
        IntegralSpec { multiplier, ..self.clone() }
    }

    pub fn with_contour(&self, contour: Contour) -> Self {
        IntegralSpec { contour, ..self.clone() }
    }

    pub fn with_weight(&self, weight: WeightFunction) -> Self {
        IntegralSpec { weight, ..self.clone() }
    }

    /// `g(z) h(z) / (2 pi i)`
    fn scalar_factor(&self, z: Complex64) -> Result<Complex64> {
        let h = eval_weight(&self.weight, z)?;
        if h == Complex64::new(0.0, 0.0) {
            return Ok(h);
        }
        Ok(self.multiplier.eval(z) * h / Complex64::new(0.0, 2.0 * PI))
    }
}

/// Bookkeeping shared by vector and dense integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntegralStats {
    pub error_estimate: f64,
    pub dropped_bound: f64,
    pub truncation_radius: f64,
    pub panels: usize,
    pub evaluations: usize,
    pub max_panel_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIntegral {
    pub value: VectorSample,
    pub stats: IntegralStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseIntegral {
    /// `A` in natural coordinates.
    pub matrix: DMatrix<Complex64>,
    pub stats: IntegralStats,
}

/// `f(z) = g h R(z) v / (2 pi i)` in the triangular frame, written to `out`.
trait Integrand {
    fn dim(&self) -> usize;
    fn eval(&self, z: Complex64, out: &mut [Complex64]) -> Result<()>;
}

struct VectorIntegrand<'a> {
    op: &'a OperatorHandle,
    spec: &'a IntegralSpec,
    y0: VectorSample,
    cap: f64,
}

impl Integrand for VectorIntegrand<'_> {
    fn dim(&self) -> usize {
        self.y0.len()
    }

    fn eval(&self, z: Complex64, out: &mut [Complex64]) -> Result<()> {
        let s = self.spec.scalar_factor(z)?;
        if s == Complex64::new(0.0, 0.0) {
            out.fill(s);
            return Ok(());
        }
        self.op.check_pole(z)?;
        out.copy_from_slice(self.y0.as_slice());
        upper_shifted_solve(self.op.triangular_factor(), z, out);
        scale_and_cap(out, s, self.cap, z)
    }
}

struct DenseIntegrand<'a> {
    op: &'a OperatorHandle,
    spec: &'a IntegralSpec,
    cap: f64,
}

impl Integrand for DenseIntegrand<'_> {
    fn dim(&self) -> usize {
        packed_offset(self.op.dim())
    }

    fn eval(&self, z: Complex64, out: &mut [Complex64]) -> Result<()> {
        let s = self.spec.scalar_factor(z)?;
        if s == Complex64::new(0.0, 0.0) {
            out.fill(s);
            return Ok(());
        }
        self.op.check_pole(z)?;
        upper_shifted_inverse_packed(self.op.triangular_factor(), z, out);
        scale_and_cap(out, s, self.cap, z)
    }
}

fn scale_and_cap(out: &mut [Complex64], s: Complex64, cap: f64, z: Complex64) -> Result<()> {
    let mut norm2 = 0.0;
    for v in out.iter_mut() {
        *v *= s;
        norm2 += v.norm_sqr();
    }
    let value = norm2.sqrt();
    if !(value <= cap) {
        return Err(Error::IntegrandUnbounded { value, re: z.re, im: z.im });
    }
    Ok(())
}

/// Arc-length parameter of the point of `iv` closest to the origin.
fn closest_to_origin(iv: &Interval) -> f64 {
    let mut best = (iv.piece.point_at(iv.s0).norm(), iv.s0);
    for k in 1..=64 {
        let s = iv.s0 + iv.length() * k as f64 / 64.0;
        let d = iv.piece.point_at(s).norm();
        if d < best.0 {
            best = (d, s);
        }
    }
    best.1
}

/// `sum_dropped length * max ||f||`, sampling geometrically toward the origin.
fn dropped_tail_bound(f: &impl Integrand, dropped: &[Interval]) -> Result<f64> {
    let mut out = vec![Complex64::new(0.0, 0.0); f.dim()];
    let mut bound = 0.0;
    for iv in dropped {
        let s_star = closest_to_origin(iv);
        let mut samples: Vec<f64> = (0..=16).map(|k| iv.s0 + iv.length() * k as f64 / 16.0).collect();
        for k in 0..=50 {
            let t = 0.5f64.powi(k);
            samples.push(s_star + (iv.s0 - s_star) * t);
            samples.push(s_star + (iv.s1 - s_star) * t);
        }
        let mut worst: f64 = 0.0;
        for s in samples {
            let z = iv.piece.point_at(s);
            if z.norm() == 0.0 {
                continue;
            }
            f.eval(z, &mut out)?;
            worst = worst.max(out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());
        }
        bound += iv.length() * worst;
    }
    Ok(bound)
}

/// Shrink the truncation radius until the dropped part is negligible.
fn truncate(f: &impl Integrand, pieces: &[Piece], r0: f64, limit: f64) -> Result<(Vec<Interval>, f64, f64)> {
    let mut r = r0;
    let mut bound = f64::INFINITY;
    for _ in 0..TRUNCATION_HALVINGS {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for p in pieces {
            let (k, d) = split_by_radius(p, r);
            kept.extend(k);
            dropped.extend(d);
        }
        bound = dropped_tail_bound(f, &dropped)?;
        if bound <= limit {
            return Ok((kept, r, bound));
        }
        r *= 0.5;
    }
    Err(Error::TruncationTooCoarse { bound, limit })
}

/// Sampled boundedness check along the kept contour.
fn probe_boundedness(f: &impl Integrand, kept: &[Interval]) -> Result<()> {
    let mut out = vec![Complex64::new(0.0, 0.0); f.dim()];
    for iv in kept {
        for k in 0..=8 {
            let z = iv.piece.point_at(iv.s0 + iv.length() * k as f64 / 8.0);
            f.eval(z, &mut out)?;
        }
    }
    Ok(())
}

fn run(f: &impl Integrand, spec: &IntegralSpec, scale: f64) -> Result<(Vec<Complex64>, IntegralStats)> {
    let budget = spec.tol * scale;
    let (kept, radius, dropped_bound) = truncate(f, spec.contour.pieces(), spec.truncation_radius, 0.5 * budget)?;
    probe_boundedness(f, &kept)?;
    let opts = QuadratureOptions { grade_toward_origin: true, ..QuadratureOptions::new(0.5 * budget) };
    let outcome = integrate(&kept, f.dim(), &opts, |z, out| f.eval(z, out))?;
    Ok((
        outcome.value,
        IntegralStats {
            error_estimate: outcome.error_estimate,
            dropped_bound,
            truncation_radius: radius,
            panels: outcome.panels,
            evaluations: outcome.evaluations,
            max_panel_length: outcome.max_panel_length,
        },
    ))
}

/// `A x` for the integral described by `spec`.
pub fn integrate_operator_vector(op: &OperatorHandle, spec: &IntegralSpec, x: &VectorSample) -> Result<VectorIntegral> {
    if x.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: x.len() });
    }
    let scale = op.norm(x);
    if scale == 0.0 {
        let stats = IntegralStats {
            error_estimate: 0.0,
            dropped_bound: 0.0,
            truncation_radius: spec.truncation_radius,
            panels: 0,
            evaluations: 0,
            max_panel_length: 0.0,
        };
        return Ok(VectorIntegral { value: x.clone(), stats });
    }
    let f = VectorIntegrand { op, spec, y0: op.to_triangular_frame(x), cap: INTEGRAND_CAP * scale };
    let (value, stats) = run(&f, spec, scale)?;
    Ok(VectorIntegral { value: op.leave_triangular_frame(&VectorSample::from_vec(value)), stats })
}

/// The integral as a dense matrix in natural coordinates.
pub fn densify_operator(op: &OperatorHandle, spec: &IntegralSpec) -> Result<DenseIntegral> {
    let n = op.dim();
    if n > DENSIFY_CAP {
        return Err(Error::DensifyCap { dim: n, cap: DENSIFY_CAP });
    }
    let scale = (n as f64).sqrt();
    let f = DenseIntegrand { op, spec, cap: INTEGRAND_CAP * scale };
    let (packed, stats) = run(&f, spec, scale)?;
    let matrix = op.triangular_frame_to_natural(unpack_upper(&packed, n));
    Ok(DenseIntegral { matrix, stats })
}

/// `||A T - T A||` in the operator's inner product.
pub fn commutation_residual(op: &OperatorHandle, a: &DMatrix<Complex64>) -> f64 {
    let t = op.matrix();
    op.operator_norm(&(a * t - t * a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CauchyCheck {
    #[serde(with = "crate::serde_complex")]
    pub w: Complex64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelfTestReport {
    /// `|∫ z^n dz|` for `n = 0, 1, 2`.
    pub moments: [f64; 3],
    /// `|(1/2 pi i) ∫ dz/(z - w) - 1|`
    pub interior: Vec<CauchyCheck>,
    /// `|∫ dz/(z - w)|`
    pub exterior: Vec<CauchyCheck>,
}

impl SelfTestReport {
    pub fn worst(&self) -> f64 {
        self.moments
            .iter()
            .chain(self.interior.iter().map(|c| &c.error))
            .chain(self.exterior.iter().map(|c| &c.error))
            .fold(0.0, |a, b| a.max(*b))
    }
}

fn contour_integral(contour: &Contour, g: impl Fn(Complex64) -> Complex64) -> Result<Complex64> {
    let iv: Vec<Interval> = contour.pieces().iter().copied().map(Interval::whole).collect();
    let scale = contour.total_length().max(1.0);
    let out = integrate(&iv, 1, &QuadratureOptions::new(1e-14 * scale), |z, out| {
        out[0] = g(z);
        Ok(())
    })?;
    Ok(out.value[0])
}

/// Moment and Cauchy checks at an interior point far from the curve and an
/// exterior point at twice the curve's radius.
pub fn quadrature_self_test(contour: &Contour) -> Result<SelfTestReport> {
    let v = contour.vertices();
    let (mut lo, mut hi) = (v[0], v[0]);
    for p in &v {
        lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let mut best: Option<(f64, Complex64)> = None;
    for i in 1..40 {
        for j in 1..40 {
            let z =
                Complex64::new(lo.re + (hi.re - lo.re) * i as f64 / 40.0, lo.im + (hi.im - lo.im) * j as f64 / 40.0);
            if let Ok(1) = contour.winding_number(z) {
                let d = contour.distance_to(z);
                if best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, z));
                }
            }
        }
    }
    let interior = best.map(|(_, z)| z).ok_or_else(|| Error::InvalidInput("no interior grid point found".into()))?;
    let center = 0.5 * (lo + hi);
    let radius = v.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    let exterior = center + Complex64::from_polar(2.0 * radius, 0.3);
    quadrature_self_test_at(contour, &[interior], &[exterior])
}

pub fn quadrature_self_test_at(
    contour: &Contour,
    interior: &[Complex64],
    exterior: &[Complex64],
) -> Result<SelfTestReport> {
    let mut moments = [0.0; 3];
    for (n, m) in moments.iter_mut().enumerate() {
        *m = contour_integral(contour, |z| z.powu(n as u32))?.norm();
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let interior = interior
        .iter()
        .map(|&w| {
            let v = contour_integral(contour, |z| 1.0 / (z - w))?;
            Ok(CauchyCheck { w, error: (v / two_pi_i - 1.0).norm() })
        })
        .collect::<Result<Vec<_>>>()?;
    let exterior = exterior
        .iter()
        .map(|&w| Ok(CauchyCheck { w, error: contour_integral(contour, |z| 1.0 / (z - w))?.norm() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SelfTestReport { moments, interior, exterior })
}

/// `||T^n (A x) - B_n x|| / ||x||` with `B_n` the integral of `z^n g h R`.
pub fn power_identity_residual(op: &OperatorHandle, spec: &IntegralSpec, n: usize, x: &VectorSample) -> Result<f64> {
    if n > 8 {
        return Err(Error::InvalidInput(format!("power identity checked for n <= 8, got {n}")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let scale = op.norm(x);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut lhs = integrate_operator_vector(op, spec, x)?.value;
    for _ in 0..n {
        lhs = op.apply(&lhs)?;
    }
    let rhs = integrate_operator_vector(op, &spec.with_multiplier(spec.multiplier.times_monomial(n)), x)?.value;
    Ok(op.norm(&(lhs - rhs)) / scale)
}

/// Points `r e^{i theta}` on a polar grid, radii geometric in `[r_lo, r_hi]`.
pub fn polar_probe_grid(r_lo: f64, r_hi: f64, radii: usize, angles: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(radii * angles);
    for i in 0..radii {
        let r = r_lo * (r_hi / r_lo).powf((i as f64 + 0.5) / radii as f64);
        for j in 0..angles {
            out.push(Complex64::from_polar(r, -PI + 2.0 * PI * (j as f64 + 0.5) / angles as f64));
        }
    }
    out
}

pub(crate) fn contour_radius(c: &Contour) -> f64 {
    c.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Sample points along the contour, skipping the neighbourhood of the origin.
pub(crate) fn boundary_samples(c: &Contour, skip_radius: f64) -> Vec<Complex64> {
    let mut out = Vec::new();
    for p in c.pieces() {
        for k in 0..16 {
            let z = p.point_at(p.length() * (k as f64 + 0.5) / 16.0);
            if z.norm() > skip_radius {
                out.push(z);
            }
        }
    }
    out
}

/// `Some(w)` for unambiguous winding numbers.
pub(crate) fn winding(c: &Contour, z: Complex64) -> Option<i64> {
    c.winding_number(z).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeformationReport {
    pub residual: f64,
    /// Largest `|g h| ||R x|| / ||x||` on the probe grid between the contours.
    pub region_max: f64,
    pub region_points: usize,
    pub inner: IntegralStats,
    pub outer: IntegralStats,
}

/// `||∫_Γ - ∫_{Γ0}|| x / ||x||` for `Γ = inner.contour` inside `outer`.
pub fn deformation_residual(
    op: &OperatorHandle,
    inner: &IntegralSpec,
    outer: &Contour,
    x: &VectorSample,
) -> Result<DeformationReport> {
    let skip = inner.truncation_radius;
    for z in boundary_samples(&inner.contour, skip) {
        let on_outer = outer.distance_to(z) <= 1e-9;
        if !on_outer && winding(outer, z) != Some(1) {
            return Err(Error::ContainmentViolated(format!(
                "point ({}, {}) of the inner contour lies outside the outer region",
                z.re, z.im
            )));
        }
    }
    let scale = op.norm(x);
    let y0 = op.to_triangular_frame(x);
    let probe = VectorIntegrand { op, spec: inner, y0, cap: INTEGRAND_CAP * scale.max(f64::MIN_POSITIVE) };
    let mut out = vec![Complex64::new(0.0, 0.0); op.dim()];
    let mut region_max: f64 = 0.0;
    let mut region_points = 0;
    for z in polar_probe_grid(skip, contour_radius(outer), 40, 96) {
        if winding(outer, z) == Some(1) && winding(&inner.contour, z) == Some(0) {
            probe.eval(z, &mut out)?;
            region_points += 1;
            // Undo the 1/(2 pi) of the integrand.
            let v = 2.0 * PI * out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            region_max = region_max.max(v / scale.max(f64::MIN_POSITIVE));
        }
    }
    let a = integrate_operator_vector(op, inner, x)?;
    let b = integrate_operator_vector(op, &inner.with_contour(outer.clone()), x)?;
    let residual = if scale == 0.0 { 0.0 } else { op.norm(&(&a.value - &b.value)) / scale };
    Ok(DeformationReport { residual, region_max, region_points, inner: a.stats, outer: b.stats })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductReport {
    pub residual: f64,
    /// `A_{g1}` on the inner contour.
    pub a1: DenseIntegral,
    /// `A_{g2}` on the outer contour.
    pub a2: DenseIntegral,
    /// Integral of `g1 g2 h²` on the inner contour.
    pub p: DenseIntegral,
}

/// `max(||A1 A2 - P||, ||A2 A1 - P||) / max(1, ||P||)`.
pub fn product_formula_residual(
    op: &OperatorHandle,
    spec: &IntegralSpec,
    g2: &Multiplier,
    outer: &Contour,
) -> Result<ProductReport> {
    let a1 = densify_operator(op, spec)?;
    product_formula_residual_with(op, spec, a1, g2, outer)
}

/// [`product_formula_residual`] with `A1` already densified from `spec`.
pub fn product_formula_residual_with(
    op: &OperatorHandle,
    spec: &IntegralSpec,
    a1: DenseIntegral,
    g2: &Multiplier,
    outer: &Contour,
) -> Result<ProductReport> {
    let a2 = densify_operator(op, &spec.with_multiplier(g2.clone()).with_contour(outer.clone()))?;
    let p_spec = spec.with_multiplier(spec.multiplier.product(g2)).with_weight(spec.weight.squared());
    let p = densify_operator(op, &p_spec)?;
    let p_norm = op.operator_norm(&p.matrix);
    let r12 = op.operator_norm(&(&a1.matrix * &a2.matrix - &p.matrix));
    let r21 = op.operator_norm(&(&a2.matrix * &a1.matrix - &p.matrix));
    Ok(ProductReport { residual: r12.max(r21) / p_norm.max(1.0), a1, a2, p })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnihilationReport {
    pub residual: f64,
    pub a1: DenseIntegral,
    pub a2: DenseIntegral,
    pub a1_norm: f64,
    pub a2_norm: f64,
}

/// Check on probe grids that the regions bounded by the two contours are
/// disjoint away from the origin.
pub fn check_disjoint(c1: &Contour, c2: &Contour, skip_radius: f64) -> Result<()> {
    let grid = polar_probe_grid(skip_radius.max(1e-9), contour_radius(c1).max(contour_radius(c2)), 40, 96);
    for (a, b) in [(c1, c2), (c2, c1)] {
        let mut probes = boundary_samples(a, skip_radius);
        probes.extend(grid.iter().copied().filter(|&z| winding(a, z) == Some(1)));
        if let Some(z) = probes.iter().find(|&&z| b.distance_to(z) > 1e-9 && winding(b, z) != Some(0)) {
            return Err(Error::DomainsOverlap(format!("point ({}, {}) lies in both regions", z.re, z.im)));
        }
    }
    Ok(())
}

/// `max(||A1 A2||, ||A2 A1||) / max(1, ||A1|| ||A2||)` for integrals over
/// disjoint regions.
pub fn annihilation_residual(
    op: &OperatorHandle,
    spec1: &IntegralSpec,
    spec2: &IntegralSpec,
) -> Result<AnnihilationReport> {
    check_disjoint(&spec1.contour, &spec2.contour, spec1.truncation_radius.min(spec2.truncation_radius))?;
    let a1 = densify_operator(op, spec1)?;
    let a2 = densify_operator(op, spec2)?;
    Ok(annihilation_from(op, a1, a2))
}

/// Annihilation residual of two integrals already densified.
pub fn annihilation_from(op: &OperatorHandle, a1: DenseIntegral, a2: DenseIntegral) -> AnnihilationReport {
    let a1_norm = op.operator_norm(&a1.matrix);
    let a2_norm = op.operator_norm(&a2.matrix);
    let r12 = op.operator_norm(&(&a1.matrix * &a2.matrix));
    let r21 = op.operator_norm(&(&a2.matrix * &a1.matrix));
    AnnihilationReport { residual: r12.max(r21) / (a1_norm * a2_norm).max(1.0), a1, a2, a1_norm, a2_norm }
}

/// Dense matrix as CSV with columns `row,col,re,im`.
pub fn matrix_csv(m: &DMatrix<Complex64>) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("row,col,re,im\n");
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let _ = writeln!(s, "{i},{j},{},{}", m[(i, j)].re, m[(i, j)].im);
        }
    }
    s
}
