use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hyperlat_core::comb_builder::{build_comb_set, CombBudget, Phi};
use hyperlat_core::complex_plane::Placement;
use hyperlat_core::contour_calculus::{integrate_operator_vector, quadrature_self_test};
use hyperlat_core::operator_core::{apply_resolvent, make_model_operator, OperatorDescriptor, VectorSample};
use hyperlat_core::presets::{build_sector_setup, opposite_plans, CalculusParams};
use hyperlat_core::resolvent_probe::{estimate_resolvent_norm_with, ProbeMethod, DEFAULT_PROBE_SEED};
use hyperlat_core::selftest::standard_contours;
use hyperlat_core::Complex64;

fn resolvent(c: &mut Criterion) {
    let op = make_model_operator(&OperatorDescriptor::VolterraAnalytic { m: 128 }).unwrap();
    let x = op.sample(|t| Complex64::new(t.cos(), 0.0)).unwrap();
    let z = Complex64::new(0.2, 0.1);
    c.bench_function("volterra128 apply_resolvent", |b| b.iter(|| apply_resolvent(&op, black_box(z), &x).unwrap()));
    for method in [ProbeMethod::DenseSvd, ProbeMethod::PowerIteration] {
        c.bench_function(&format!("volterra128 resolvent norm {}", method.name()), |b| {
            b.iter(|| estimate_resolvent_norm_with(&op, black_box(z), method, DEFAULT_PROBE_SEED).unwrap())
        });
    }
}

fn quadrature(c: &mut Criterion) {
    let contours = standard_contours().unwrap();
    let (_, comb_contour) = &contours[3];
    c.bench_function("self test on comb-excised sector", |b| {
        b.iter(|| quadrature_self_test(black_box(comb_contour)).unwrap())
    });
}

fn combs(c: &mut Criterion) {
    let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 4 }).unwrap();
    let budget = CombBudget::new(72.0, 144.0, Phi::ExpPower { c0: 1.0, p: 1.0 }, PI / 6.0).unwrap();
    let placement = Placement::new(Complex64::new(1.0, 0.0), 1, 1.2).unwrap();
    c.bench_function("jordan4 build_comb_set", |b| {
        b.iter(|| build_comb_set(&op, &placement, black_box(&budget)).unwrap())
    });
}

fn integral(c: &mut Criterion) {
    let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 8 }).unwrap();
    let (plan, _) = opposite_plans(PI / 3.0);
    let params = CalculusParams { beta: PI / 2.0, c0: 1.0, big_c0: None, c1_factor: 2.0, tol: 1e-8 };
    let setup = build_sector_setup(&op, &plan, &params, &[]).unwrap();
    let x = VectorSample::from_element(8, Complex64::new(1.0, 0.0));
    c.bench_function("jordan8 vector integral", |b| {
        b.iter(|| integrate_operator_vector(&op, &setup.spec, black_box(&x)).unwrap())
    });
}

criterion_group!(benches, resolvent, quadrature, combs, integral);
criterion_main!(benches);
