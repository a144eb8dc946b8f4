//! The Volterra model with exponential weights acts as a translation
//! semigroup: `A_c x (t) = x(t - c)` for `t > c` and zero before.

use std::sync::OnceLock;

use hyperlat_core::certify::{kernel_membership_test, membership_grids};
use hyperlat_core::contour_calculus::{
    deformation_residual, integrate_operator_vector, power_identity_residual, product_formula_residual, Multiplier,
};
use hyperlat_core::operator_core::{OperatorHandle, VectorSample};
use hyperlat_core::presets::{translated_indicator, volterra_translation, SectorSetup};
use num_complex::Complex64;

const M: usize = 128;

fn setup(shift: f64) -> &'static (OperatorHandle, SectorSetup) {
    static HALF: OnceLock<(OperatorHandle, SectorSetup)> = OnceLock::new();
    static THREE_TENTHS: OnceLock<(OperatorHandle, SectorSetup)> = OnceLock::new();
    let cell = if shift == 0.5 { &HALF } else { &THREE_TENTHS };
    cell.get_or_init(|| volterra_translation(M, shift, 1e-8).unwrap())
}

fn ones(op: &OperatorHandle) -> VectorSample {
    op.sample(|_| Complex64::new(1.0, 0.0)).unwrap()
}

/// Continuous piecewise-linear hat on `[0.1, 0.4]`.
fn hat(op: &OperatorHandle) -> VectorSample {
    op.sample(|t| Complex64::new((1.0 - ((t - 0.25) / 0.15).abs()).max(0.0), 0.0)).unwrap()
}

#[test]
fn constant_is_translated_to_an_indicator() {
    let (op, s) = setup(0.5);
    let ax = integrate_operator_vector(op, &s.spec, &ones(op)).unwrap();
    let err = op.norm(&(&ax.value - translated_indicator(op, 0.5).unwrap()));
    assert!(err < 5e-2, "L2 error {err}");
    assert!(ax.stats.error_estimate < 1e-6);
}

#[test]
fn smooth_bump_is_translated() {
    let (op, s) = setup(0.5);
    let x = hat(op);
    let ax = integrate_operator_vector(op, &s.spec, &x).unwrap();
    let expected = op.sample(|t| Complex64::new((1.0 - ((t - 0.75) / 0.15).abs()).max(0.0), 0.0)).unwrap();
    let err = op.norm(&(&ax.value - expected)) / op.norm(&x);
    assert!(err < 2e-2, "relative L2 error {err}");
}

#[test]
fn power_identity_on_the_translation() {
    let (op, s) = setup(0.5);
    for x in [ones(op), hat(op)] {
        for n in 1..=3 {
            let r = power_identity_residual(op, &s.spec, n, &x).unwrap();
            assert!(r < 1e-3, "n = {n}: {r}");
        }
    }
}

#[test]
fn deformation_to_the_enlarged_sector() {
    let (op, s) = setup(0.5);
    let r = deformation_residual(op, &s.spec, &s.full_contour, &ones(op)).unwrap();
    assert!(r.residual < 1e-2, "{}", r.residual);
    assert!(r.region_points > 0 && r.region_max.is_finite());
}

#[test]
fn semigroup_product() {
    let (op, s) = setup(0.3);
    let r = product_formula_residual(op, &s.spec, &Multiplier::one(), &s.full_contour).unwrap();
    assert!(r.residual < 5e-2, "{}", r.residual);
    let x = ones(op);
    let target = translated_indicator(op, 0.6).unwrap();
    let p_err = op.norm(&(&r.p.matrix * &x - &target));
    let composed_err = op.norm(&(&r.a1.matrix * (&r.a2.matrix * &x) - &target));
    assert!(p_err < 5e-2, "S_0.6 error {p_err}");
    assert!(composed_err < 5e-2, "S_0.3^2 error {composed_err}");
}

#[test]
fn non_kernel_vector_grows_toward_the_origin() {
    let (op, s) = setup(0.5);
    let x = ones(op);
    let (_, boundary) = membership_grids(&s.spec, 400);
    let mut previous = 0.0;
    for r in [0.3, 0.2, 0.12, 0.08] {
        let report = kernel_membership_test(op, &s.spec, &x, &[Complex64::new(r, 0.0)], &boundary).unwrap();
        assert!((report.ax_norm - 0.5f64.sqrt()).abs() < 5e-2, "{}", report.ax_norm);
        assert!(report.consistent);
        assert!(report.interior_sup > previous, "r = {r}: {} <= {previous}", report.interior_sup);
        previous = report.interior_sup;
    }
}
