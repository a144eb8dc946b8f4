//! Resolvent-norm estimation, growth-law fits along rays, trend tests for
//! weighted resolvent growth, and the power-bounded scalar estimates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::complex_plane::{unit, Sector};
use crate::error::{Error, Result};
use crate::operator_core::OperatorHandle;

/// Seed used by the iterative estimators unless the caller supplies one.
pub const DEFAULT_PROBE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ProbeMethod {
    DenseSvd,
    PowerIteration,
    RandomizedProbe,
}

impl ProbeMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeMethod::DenseSvd => "denseSVD",
            ProbeMethod::PowerIteration => "powerIteration",
            ProbeMethod::RandomizedProbe => "randomizedProbe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolventSample {
    #[serde(with = "crate::serde_complex")]
    pub z: Complex64,
    pub norm_estimate: f64,
    pub method: ProbeMethod,
    pub probes: usize,
    /// Relative change over the last iteration, for iterative methods.
    pub relative_error: Option<f64>,
}

/// `||(zI - T)^{-1}||` by dense SVD.
pub fn estimate_resolvent_norm(op: &OperatorHandle, z: Complex64) -> Result<ResolventSample> {
    estimate_resolvent_norm_with(op, z, ProbeMethod::DenseSvd, DEFAULT_PROBE_SEED)
}

pub fn estimate_resolvent_norm_with(
    op: &OperatorHandle,
    z: Complex64,
    method: ProbeMethod,
    seed: u64,
) -> Result<ResolventSample> {
    op.check_pole(z)?;
    match method {
        ProbeMethod::DenseSvd => Ok(ResolventSample {
            z,
            norm_estimate: op.resolvent_norm_dense(z)?,
            method,
            probes: op.dim(),
            relative_error: None,
        }),
        ProbeMethod::PowerIteration => block_power(op, z, 1, seed, method),
        ProbeMethod::RandomizedProbe => block_power(op, z, 4.min(op.dim()), seed, method),
    }
}

/// Block power iteration on `R R^H` in orthonormal coordinates.
fn block_power(op: &OperatorHandle, z: Complex64, k: usize, seed: u64, method: ProbeMethod) -> Result<ResolventSample> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, k, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    x = orthonormalize(x);
    let mut estimate = 0.0;
    let mut change = f64::INFINITY;
    let mut cap = 20;
    let mut it = 0;
    loop {
        let mut y = x.clone();
        for mut col in y.column_iter_mut() {
            op.ortho_resolvent_unchecked(z, col.as_mut_slice());
        }
        let next = y.clone().svd(false, false).singular_values.max();
        change = if estimate > 0.0 { (next - estimate).abs() / next } else { change };
        estimate = next;
        it += 1;
        if it >= 3 && change < 1e-6 {
            break;
        }
        if it >= cap {
            if change <= 0.05 {
                break;
            }
            if cap >= 640 {
                return Err(Error::PowerIterationStalled { iterations: it, last_estimate: estimate });
            }
            cap *= 2;
        }
        for mut col in y.column_iter_mut() {
            op.ortho_resolvent_adjoint_unchecked(z, col.as_mut_slice());
        }
        x = orthonormalize(y);
    }
    Ok(ResolventSample { z, norm_estimate: estimate, method, probes: it * k, relative_error: Some(change) })
}

fn orthonormalize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let k = m.ncols();
    let q = m.qr().q();
    q.columns(0, k).into_owned()
}

pub fn samples_csv(samples: &[ResolventSample]) -> String {
    let mut s = String::from("re,im,norm,method\n");
    for r in samples {
        let _ = writeln!(s, "{},{},{},{}", r.z.re, r.z.im, r.norm_estimate, r.method.name());
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GrowthForm {
    /// `log ||R|| ≈ log C + c r^{-p}`
    ExpPower,
    /// `log ||R|| ≈ log C - N log r`
    Power,
}

/// A fitted growth law along a ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GrowthModel {
    pub form: GrowthForm,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub c: Option<f64>,
    pub p: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    pub ray_angle: f64,
    #[serde(with = "crate::serde_complex")]
    pub direction: Complex64,
    pub fit_residual: f64,
}

impl GrowthModel {
    /// Fitted exponent minus `pi / (2 beta)`.
    pub fn p_deviation(&self, beta: f64) -> Option<f64> {
        self.p.map(|p| p - PI / (2.0 * beta))
    }

    pub fn predict_log(&self, r: f64) -> f64 {
        match self.form {
            GrowthForm::ExpPower => self.big_c.ln() + self.c.unwrap_or(0.0) * r.powf(-self.p.unwrap_or(1.0)),
            GrowthForm::Power => self.big_c.ln() - self.n.unwrap_or(0.0) * r.ln(),
        }
    }
}

/// Least squares `y ≈ a + b u`.
fn line_fit(u: &[f64], y: &[f64]) -> (f64, f64) {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|v| (v - mu) * (v - mu)).sum();
    let suy: f64 = u.iter().zip(y).map(|(v, w)| (v - mu) * (w - my)).sum();
    let b = if suu > 0.0 { suy / suu } else { 0.0 };
    (my - b * mu, b)
}

fn max_rel_log_dev(pred: impl Fn(f64) -> f64, radii: &[f64], y: &[f64]) -> f64 {
    radii.iter().zip(y).map(|(&r, &v)| (pred(r) - v).abs() / v.abs().max(1.0)).fold(0.0, f64::max)
}

fn fit_power(radii: &[f64], y: &[f64]) -> (f64, f64) {
    let u: Vec<f64> = radii.iter().map(|r| -r.ln()).collect();
    line_fit(&u, y)
}

fn sse_exp(radii: &[f64], y: &[f64], p: f64) -> (f64, f64, f64) {
    let u: Vec<f64> = radii.iter().map(|r| r.powf(-p)).collect();
    let (a, b) = line_fit(&u, y);
    let sse = u.iter().zip(y).map(|(ui, yi)| (a + b * ui - yi).powi(2)).sum();
    (a, b, sse)
}

fn fit_exp_power(radii: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let grid: Vec<f64> = (0..=240).map(|k| 0.05 * (120.0f64).powf(k as f64 / 240.0)).collect();
    let score = |p: f64| {
        let (_, b, sse) = sse_exp(radii, y, p);
        if b > 0.0 {
            sse
        } else {
            f64::INFINITY
        }
    };
    let mut best = 0;
    for k in 1..grid.len() {
        if score(grid[k]) < score(grid[best]) {
            best = k;
        }
    }
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if score(m1) <= score(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let p = 0.5 * (lo + hi);
    let (a, b, _) = sse_exp(radii, y, p);
    (a, b, p)
}

/// Fit `log ||R(r zeta e^{i ray_angle})||` over the radii.
pub fn fit_growth_model(
    op: &OperatorHandle,
    ray_angle: f64,
    direction: Complex64,
    radii: &[f64],
    form: GrowthForm,
) -> Result<GrowthModel> {
    if radii.len() < 8 {
        return Err(Error::InvalidInput(format!("growth fit needs at least 8 radii, got {}", radii.len())));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("growth-fit radii must be positive and strictly decreasing".into()));
    }
    let ray = direction * unit(ray_angle);
    let y = radii
        .iter()
        .map(|&r| Ok(estimate_resolvent_norm(op, ray * r)?.norm_estimate.ln()))
        .collect::<Result<Vec<f64>>>()?;

    let (log_k, n) = fit_power(radii, &y);
    let mut power = GrowthModel {
        form: GrowthForm::Power,
        big_c: log_k.exp(),
        c: None,
        p: None,
        n: Some(n),
        ray_angle,
        direction,
        fit_residual: 0.0,
    };
    power.fit_residual = max_rel_log_dev(|r| power.predict_log(r), radii, &y);

    let (log_c, c, p) = fit_exp_power(radii, &y);
    let mut exp = GrowthModel {
        form: GrowthForm::ExpPower,
        big_c: log_c.exp(),
        c: Some(c),
        p: Some(p),
        n: None,
        ray_angle,
        direction,
        fit_residual: 0.0,
    };
    exp.fit_residual = if c > 0.0 { max_rel_log_dev(|r| exp.predict_log(r), radii, &y) } else { f64::INFINITY };

    let (requested, alternative) = match form {
        GrowthForm::Power => (power, exp),
        GrowthForm::ExpPower => (exp, power),
    };
    if !(requested.fit_residual <= 0.5) {
        return Err(Error::ModelMismatch { requested: Box::new(requested), alternative: Box::new(alternative) });
    }
    Ok(requested)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnboundednessVerdict {
    pub c: f64,
    /// Largest `exp(-c/|z|^p) ||R(z)||` over the grid.
    pub max_value: f64,
    /// Least-squares slope of the per-radius maximum (log scale) against
    /// `log(1/r)` over the inner half of the radii.
    pub slope: f64,
    pub empirically_unbounded: bool,
}

/// Polar grid inside `sector`: `angles` equispaced interior angles per radius.
pub fn sector_grid(sector: &Sector, radii: &[f64], angles: usize) -> Vec<Complex64> {
    let beta = sector.half_angle();
    let mut out = Vec::with_capacity(radii.len() * angles);
    for &r in radii {
        for k in 0..angles {
            let t = -beta + (k as f64 + 0.5) * 2.0 * beta / angles as f64;
            out.push(sector.direction() * Complex64::from_polar(r, t));
        }
    }
    out
}

/// Trend test for `sup exp(-c/|z|^p) ||R(z)|| = ∞` over the sector.
pub fn check_unboundedness_hypothesis(
    op: &OperatorHandle,
    sector: &Sector,
    p: f64,
    c_list: &[f64],
    grid: &[Complex64],
) -> Result<Vec<UnboundednessVerdict>> {
    if let Some(z) = grid.iter().find(|z| !sector.contains(**z)) {
        return Err(Error::InvalidInput(format!("grid point ({}, {}) is outside the sector", z.re, z.im)));
    }
    let log_norms =
        grid.iter().map(|&z| Ok(estimate_resolvent_norm(op, z)?.norm_estimate.ln())).collect::<Result<Vec<f64>>>()?;
    // Shells of equal radius, outermost first.
    let mut radii: Vec<f64> = grid.iter().map(|z| z.norm()).collect();
    radii.sort_by(|a, b| b.total_cmp(a));
    radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    if radii.len() < 2 {
        return Err(Error::InvalidInput("trend test needs at least two distinct radii".into()));
    }
    let shell_of = |r: f64| radii.iter().position(|s| (r - s).abs() <= 1e-9 * s).expect("radius present");
    let tail = (radii.len() / 2).max(3).min(radii.len());
    let start = radii.len() - tail;

    Ok(c_list
        .iter()
        .map(|&c| {
            let mut shell_max = vec![f64::NEG_INFINITY; radii.len()];
            for (z, ln) in grid.iter().zip(&log_norms) {
                let r = z.norm();
                let v = -c / r.powf(p) + ln;
                let s = shell_of(r);
                shell_max[s] = shell_max[s].max(v);
            }
            let max_log = shell_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let u: Vec<f64> = radii[start..].iter().map(|r| -r.ln()).collect();
            let (_, slope) = line_fit(&u, &shell_max[start..]);
            UnboundednessVerdict { c, max_value: max_log.exp(), slope, empirically_unbounded: slope > 0.1 }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PowerBoundedReport {
    pub points: usize,
    /// `min (|w+1| - 1) - |w|²/3`, which must be non-negative.
    pub min_scalar_margin: f64,
    /// `max ||(wI - (T - I))^{-1}|| |w|² / (3 K0)`, which must not exceed 1.
    pub max_ratio: f64,
}

/// `|w + 1| - 1` without cancellation.
pub fn shifted_modulus_gap(w: Complex64) -> f64 {
    (2.0 * w.re + w.norm_sqr()) / ((w + 1.0).norm() + 1.0)
}

pub fn power_bounded_checks(op: &OperatorHandle, w_grid: &[Complex64]) -> Result<PowerBoundedReport> {
    let k0 = op.power_bound().ok_or(Error::NotPowerBounded)?;
    let mut min_margin = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for &w in w_grid {
        if !(w.re > 0.0 && w.norm() < 1.0) {
            return Err(Error::OutsideRegion { re: w.re, im: w.im });
        }
        min_margin = min_margin.min(shifted_modulus_gap(w) - w.norm_sqr() / 3.0);
        let norm = op.resolvent_norm_dense(w + 1.0)?;
        max_ratio = max_ratio.max(norm * w.norm_sqr() / (3.0 * k0));
    }
    Ok(PowerBoundedReport { points: w_grid.len(), min_scalar_margin: min_margin, max_ratio })
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton points in the open half-disk `{Re w > 0, |w| < 1}`.
pub fn half_disk_halton(n: usize) -> Vec<Complex64> {
    (1..=n as u64)
        .map(|i| {
            let r = radical_inverse(i, 2).sqrt();
            let theta = PI * (radical_inverse(i, 3) - 0.5);
            Complex64::from_polar(r, theta)
        })
        .collect()
}

/// Random complex vector with entries uniform in the unit square.
pub fn random_vector(dim: usize, rng: &mut impl Rng) -> DVector<Complex64> {
    DVector::from_fn(dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex_plane::make_sector;
    use crate::operator_core::{make_model_operator, OperatorDescriptor};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn op(d: OperatorDescriptor) -> OperatorHandle {
        make_model_operator(&d).unwrap()
    }

    #[test]
    fn zero_operator_norm() {
        let t = op(OperatorDescriptor::JordanNilpotent { n: 1 });
        assert_eq!(estimate_resolvent_norm(&t, c(0.25, 0.0)).unwrap().norm_estimate, 4.0);
        let p = estimate_resolvent_norm_with(&t, c(0.25, 0.0), ProbeMethod::PowerIteration, 1).unwrap();
        assert!((p.norm_estimate - 4.0).abs() < 0.05 * 4.0);
    }

    #[test]
    fn golden_ratio_for_jordan_two() {
        let t = op(OperatorDescriptor::JordanNilpotent { n: 2 });
        let s = estimate_resolvent_norm(&t, c(1.0, 0.0)).unwrap();
        assert_relative_eq!(s.norm_estimate, (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn volterra_right_vs_left() {
        let t = op(OperatorDescriptor::VolterraAnalytic { m: 128 });
        let right = estimate_resolvent_norm(&t, c(0.1, 0.0)).unwrap().norm_estimate;
        let left = estimate_resolvent_norm(&t, c(-0.1, 0.0)).unwrap().norm_estimate;
        assert!(right > 100.0 * left, "{right} vs {left}");
    }

    #[test]
    fn iterative_estimates_are_close_lower_bounds() {
        let t = op(OperatorDescriptor::JordanNilpotent { n: 6 });
        for (i, z) in [c(0.7, 0.2), c(-0.4, 0.9), c(1.5, -1.0)].into_iter().enumerate() {
            let dense = estimate_resolvent_norm(&t, z).unwrap().norm_estimate;
            for m in [ProbeMethod::PowerIteration, ProbeMethod::RandomizedProbe] {
                let s = estimate_resolvent_norm_with(&t, z, m, i as u64).unwrap();
                assert!(s.norm_estimate <= dense * (1.0 + 1e-12));
                assert!(s.norm_estimate >= 0.9 * dense);
                assert!(s.relative_error.unwrap() <= 0.05);
            }
        }
    }

    #[test]
    fn zero_operator_power_fit_is_exact() {
        let t = op(OperatorDescriptor::JordanNilpotent { n: 1 });
        let radii: Vec<f64> = (0..10).map(|k| 0.5 * 0.7f64.powi(k)).collect();
        let g = fit_growth_model(&t, 0.3, c(1.0, 0.0), &radii, GrowthForm::Power).unwrap();
        assert_relative_eq!(g.n.unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(g.big_c, 1.0, epsilon = 1e-12);
        assert!(g.fit_residual < 1e-12);
    }

    #[test]
    fn jordan_four_power_fit() {
        let t = op(OperatorDescriptor::JordanNilpotent { n: 4 });
        let radii: Vec<f64> = (0..10).map(|k| 0.05 * (0.1f64).powf(k as f64 / 9.0)).collect();
        for angle in [0.0, 1.0, 2.5] {
            let g = fit_growth_model(&t, angle, c(1.0, 0.0), &radii, GrowthForm::Power).unwrap();
            assert!((g.n.unwrap() - 4.0).abs() < 0.3, "{g:?}");
        }
    }

    #[test]
    fn volterra_exp_power_fit() {
        let t = op(OperatorDescriptor::VolterraAnalytic { m: 128 });
        let radii: Vec<f64> = (0..10).map(|k| 0.5 * (0.1f64).powf(k as f64 / 9.0)).collect();
        let g = fit_growth_model(&t, 0.0, c(1.0, 0.0), &radii, GrowthForm::ExpPower).unwrap();
        // Continuum resolvent on the positive axis: ||R(r)|| ~ e^{1/r} / (2r).
        let oracle: Vec<f64> = radii.iter().map(|r| 1.0 / r - r.ln() - 2f64.ln()).collect();
        let (_, c_ref, p_ref) = fit_exp_power(&radii, &oracle);
        assert!((g.p.unwrap() - p_ref).abs() < 0.1, "{g:?} vs p = {p_ref}");
        assert!((g.c.unwrap() - c_ref).abs() < 0.2, "{g:?} vs c = {c_ref}");
        assert!(g.p_deviation(PI / 2.0).unwrap().abs() < 0.15);
    }

    #[test]
    fn exp_law_rejects_power_form() {
        let t = op(OperatorDescriptor::VolterraAnalytic { m: 128 });
        let radii: Vec<f64> = (0..10).map(|k| 0.5 * (0.1f64).powf(k as f64 / 9.0)).collect();
        match fit_growth_model(&t, 0.0, c(1.0, 0.0), &radii, GrowthForm::Power) {
            Err(Error::ModelMismatch { requested, alternative }) => {
                assert_eq!(requested.form, GrowthForm::Power);
                assert_eq!(alternative.form, GrowthForm::ExpPower);
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn too_few_radii() {
        let t = op(OperatorDescriptor::JordanNilpotent { n: 2 });
        assert!(fit_growth_model(&t, 0.0, c(1.0, 0.0), &[0.5, 0.4], GrowthForm::Power).is_err());
    }

    #[test]
    fn volterra_trend_flags() {
        let t = op(OperatorDescriptor::VolterraAnalytic { m: 128 });
        let s = make_sector(c(1.0, 0.0), PI / 3.0, 1.0).unwrap();
        let radii: Vec<f64> = (0..10).map(|k| 0.5 * (0.1f64).powf(k as f64 / 9.0)).collect();
        let grid = sector_grid(&s, &radii, 9);
        let v = check_unboundedness_hypothesis(&t, &s, 1.0, &[0.5, 2.0], &grid).unwrap();
        assert!(v[0].empirically_unbounded && v[0].slope > 0.1, "{v:?}");
        assert!(!v[1].empirically_unbounded && v[1].slope < 0.0, "{v:?}");
    }

    #[test]
    fn jordan_trend_decreases() {
        let t = op(OperatorDescriptor::JordanNilpotent { n: 4 });
        let s = make_sector(c(0.0, 1.0), PI / 4.0, 1.0).unwrap();
        let radii: Vec<f64> = (0..12).map(|k| 0.5 * (1e-4f64).powf(k as f64 / 11.0)).collect();
        let grid = sector_grid(&s, &radii, 5);
        let v = check_unboundedness_hypothesis(&t, &s, 1.0, &[0.1], &grid).unwrap();
        assert!(!v[0].empirically_unbounded && v[0].slope < 0.0, "{v:?}");
    }

    #[test]
    fn grid_outside_sector_is_rejected() {
        let t = op(OperatorDescriptor::JordanNilpotent { n: 2 });
        let s = make_sector(c(1.0, 0.0), 0.3, 1.0).unwrap();
        assert!(check_unboundedness_hypothesis(&t, &s, 1.0, &[1.0], &[c(-0.5, 0.0)]).is_err());
    }

    #[test]
    fn scalar_estimate_examples() {
        assert_relative_eq!(shifted_modulus_gap(c(1.0, 0.0)), 1.0, epsilon = 1e-15);
        for t in [1e-2, 1e-4, 1e-6] {
            let margin = shifted_modulus_gap(c(0.0, t)) - t * t / 3.0;
            assert!(margin > 0.0);
            assert_relative_eq!(margin, t * t / 6.0, max_relative = 1e-3);
        }
    }

    #[test]
    fn power_bounded_identity() {
        let t = op(OperatorDescriptor::unitary_diagonal_from_angles(&[0.0; 4]));
        let r = power_bounded_checks(&t, &[c(0.5, 0.0)]).unwrap();
        // ||R|| = 2 against the bound 12.
        assert_relative_eq!(r.max_ratio, 2.0 * 0.25 / 3.0, epsilon = 1e-15);
        assert!(power_bounded_checks(&t, &[c(-0.1, 0.0)]).is_err());
        assert!(power_bounded_checks(&t, &[c(0.9, 0.9)]).is_err());
        let j = op(OperatorDescriptor::JordanNilpotent { n: 2 });
        assert!(matches!(power_bounded_checks(&j, &[c(0.5, 0.0)]), Err(Error::NotPowerBounded)));
    }

    #[test]
    fn halton_points_stay_in_region() {
        let g = half_disk_halton(2000);
        assert!(g.iter().all(|w| w.re > 0.0 && w.norm() < 1.0));
    }
}
