//! A quick run of the invariants of every module, for use as a build health
//! check from the command line.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::certify::{extract_subspaces, non_comparability_check, ProductNorms, VerdictKind};
use crate::comb_builder::{build_comb_set, validate_comb_set, CombBudget, Phi};
use crate::complex_plane::{build_boundary_contour, chord_arc_constant, make_sector, Contour, Placement};
use crate::contour_calculus::{
    eval_weight, integrate_operator_vector, quadrature_self_test, IntegralSpec, Multiplier, WeightFunction,
};
use crate::error::Result;
use crate::operator_core::{apply_resolvent, make_model_operator, resolvent_identity_residual, OperatorDescriptor};
use crate::resolvent_probe::{
    estimate_resolvent_norm, estimate_resolvent_norm_with, half_disk_halton, power_bounded_checks, random_vector,
    ProbeMethod, DEFAULT_PROBE_SEED,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelfCheck {
    pub module: String,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
    pub limit: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl SelfCheck {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.value.is_some_and(|v| v <= self.limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelfTestSummary {
    pub seed: u64,
    pub checks: Vec<SelfCheck>,
}

impl SelfTestSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(SelfCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SelfCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// One small operator of every catalog kind, plus the Volterra model at `m`.
pub fn catalog_samples(seed: u64, volterra_m: usize) -> Vec<OperatorDescriptor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense = DMatrix::from_fn(6, 6, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    vec![
        OperatorDescriptor::dense(&dense),
        OperatorDescriptor::JordanNilpotent { n: 6 },
        OperatorDescriptor::VolterraAnalytic { m: volterra_m },
        OperatorDescriptor::WeightedShift { weights: vec![0.5, 1.0, 2.0, 0.7] },
        OperatorDescriptor::unitary_diagonal_from_angles(&[0.3, 1.4, 2.9, -2.2, -0.8]),
    ]
}

/// Circle, square, sector, and two comb-excised sectors.
pub fn standard_contours() -> Result<Vec<(String, Contour)>> {
    let mut out = vec![
        ("unit circle".to_string(), Contour::circle(Complex64::new(0.0, 0.0), 1.0)?),
        (
            "square".to_string(),
            Contour::polygon(&[
                Complex64::new(-1.0, -1.0),
                Complex64::new(1.0, -1.0),
                Complex64::new(1.0, 1.0),
                Complex64::new(-1.0, 1.0),
            ])?,
        ),
        ("sector".to_string(), build_boundary_contour(&make_sector(Complex64::new(0.0, 1.0), 1.0, 1.0)?, &[], 1.0)?),
    ];
    let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 3 })?;
    for (name, beta) in [("comb-excised sector", 1.2), ("narrow comb-excised sector", 0.6)] {
        let sector = make_sector(Complex64::new(1.0, 0.0), beta, 1.0)?;
        let budget = CombBudget::new(72.0, 144.0, Phi::ExpPower { c0: 1.0, p: 1.0 }, beta / 4.0)?;
        let mut combs = Vec::new();
        for sign in [1, -1] {
            combs.push(build_comb_set(&op, &Placement::new(Complex64::new(1.0, 0.0), sign, beta)?, &budget)?.comb);
        }
        out.push((name.to_string(), build_boundary_contour(&sector, &combs, 1.0)?));
    }
    Ok(out)
}

struct Checks {
    out: Vec<SelfCheck>,
}

impl Checks {
    fn run(&mut self, module: &str, name: &str, limit: f64, f: impl FnOnce() -> Result<f64>) {
        let (value, error) = match f() {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        self.out.push(SelfCheck { module: module.into(), name: name.into(), value, limit, error });
    }
}

/// Run the invariant suite. Every check records a value and its limit.
pub fn run_selftest(seed: u64) -> SelfTestSummary {
    let mut checks = Checks { out: Vec::new() };
    let c = Complex64::new;

    checks.run("complex_plane", "winding numbers of standard contours", 0.0, || {
        let mut worst = 0;
        for (_, contour) in standard_contours()? {
            let outside = contour.winding_number(c(5.0, 5.0))?;
            worst = worst.max(outside.abs());
        }
        let circle = Contour::circle(c(0.0, 0.0), 1.0)?;
        worst = worst.max((circle.winding_number(c(0.2, -0.1))? - 1).abs());
        Ok(worst as f64)
    });
    checks.run("complex_plane", "chord-arc constant of the comb-excised sector", 100.0, || {
        let contours = standard_contours()?;
        chord_arc_constant(&contours[3].1, 400)
    });

    let catalog = catalog_samples(seed, 32);
    checks.run("operator_core", "resolvent defect on random points", 1e-10, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for d in &catalog {
            let op = make_model_operator(d)?;
            for _ in 0..10 {
                let z = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                if op.spectral_distance(z) < 1e-3 {
                    continue;
                }
                let x = random_vector(op.dim(), &mut rng);
                let y = apply_resolvent(&op, z, &x)?;
                let defect = &x - (&y * z - op.apply(&y)?);
                worst = worst.max(op.norm(&defect) / op.norm(&x));
            }
        }
        Ok(worst)
    });
    checks.run("operator_core", "first resolvent identity", 1e-9, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut worst: f64 = 0.0;
        for d in &catalog {
            let op = make_model_operator(d)?;
            for _ in 0..10 {
                let z = c(rng.random_range(0.5..2.0), rng.random_range(-2.0..2.0));
                let w = c(rng.random_range(-2.0..-0.5), rng.random_range(-2.0..2.0));
                let x = random_vector(op.dim(), &mut rng);
                worst = worst.max(resolvent_identity_residual(&op, z, w, &x)?);
            }
        }
        Ok(worst)
    });

    checks.run("resolvent_probe", "power iteration against dense SVD", 1e-5, || {
        let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 4 })?;
        let z = c(0.3, 0.2);
        let dense = estimate_resolvent_norm(&op, z)?.norm_estimate;
        let power =
            estimate_resolvent_norm_with(&op, z, ProbeMethod::PowerIteration, DEFAULT_PROBE_SEED)?.norm_estimate;
        Ok((dense - power).abs() / dense)
    });
    checks.run("resolvent_probe", "scalar and operator bounds on the half disk", 1.0, || {
        let op = make_model_operator(&OperatorDescriptor::unitary_diagonal_from_angles(&[0.0, 2.0, -2.5]))?;
        let report = power_bounded_checks(&op, &half_disk_halton(2000))?;
        // Pass iff the scalar margin is at least -1e-12 and the ratio at most 1.
        Ok(if report.min_scalar_margin >= -1e-12 { report.max_ratio } else { f64::INFINITY })
    });

    checks.run("comb_builder", "Jordan comb validated at four times the density", 1.05, || {
        let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 4 })?;
        let budget = CombBudget::new(72.0, 144.0, Phi::ExpPower { c0: 1.0, p: 1.0 }, PI / 6.0)?;
        let built = build_comb_set(&op, &Placement::new(c(1.0, 0.0), 1, 1.2)?, &budget)?;
        Ok(validate_comb_set(&op, &built.comb, &budget, 4.0))
    });

    checks.run("contour_calculus", "moments and Cauchy checks", 1e-10, || {
        let mut worst: f64 = 0.0;
        for (_, contour) in standard_contours()? {
            worst = worst.max(quadrature_self_test(&contour)?.worst());
        }
        Ok(worst)
    });
    checks.run("contour_calculus", "weight modulus identity", 1e-12, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let zeta = Complex64::from_polar(1.0, rng.random_range(-PI..PI));
            let w = WeightFunction::new(zeta, rng.random_range(0.5..3.0), rng.random_range(0.0..2.0))?;
            let r = rng.random_range(0.05..2.0);
            let t = rng.random_range(-PI / (2.0 * w.p)..PI / (2.0 * w.p)).clamp(-PI + 1e-6, PI - 1e-6);
            let value = eval_weight(&w, zeta * Complex64::from_polar(r, t))?.norm();
            let exact = w.modulus(r, t);
            worst = worst.max((value - exact).abs() / exact.max(1.0));
        }
        Ok(worst)
    });
    checks.run("contour_calculus", "nilpotent collapse of the integral", 1e-6, || {
        let op = make_model_operator(&OperatorDescriptor::JordanNilpotent { n: 6 })?;
        let contour = build_boundary_contour(&make_sector(c(1.0, 0.0), PI / 3.0, 1.0)?, &[], 1.0)?;
        let spec =
            IntegralSpec::new(WeightFunction::new(c(1.0, 0.0), 1.0, 1.0)?, Multiplier::one(), contour, 1e-3, 1e-9)?;
        let mut worst: f64 = 0.0;
        for j in 0..6 {
            let x = crate::operator_core::VectorSample::from_fn(6, |i, _| c(if i == j { 1.0 } else { 0.0 }, 0.0));
            worst = worst.max(op.norm(&integrate_operator_vector(&op, &spec, &x)?.value));
        }
        Ok(worst)
    });

    checks.run("certify", "non-comparability on the diagonal model", 0.0, || {
        let mut wrong = 0;
        for n in [2, 5, 16] {
            let a1 = DMatrix::from_fn(n, n, |i, j| c(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0));
            let a2 = DMatrix::from_fn(n, n, |i, j| c(if i == 1 && j == 1 { 1.0 } else { 0.0 }, 0.0));
            let zero = DMatrix::zeros(n, n);
            let p1 = extract_subspaces(&a1, 1e-6)?;
            let p2 = extract_subspaces(&a2, 1e-6)?;
            let pz = extract_subspaces(&zero, 1e-6)?;
            let certified = non_comparability_check(&p1, &p2, &ProductNorms::from_matrices(&a1, &a2))?;
            let zeroed = non_comparability_check(&pz, &pz, &ProductNorms::from_matrices(&zero, &zero))?;
            wrong += usize::from(certified.verdict.kind != VerdictKind::CertifiedNoncomparable);
            wrong += usize::from(zeroed.verdict.kind != VerdictKind::InconclusiveAkZero);
        }
        Ok(wrong as f64)
    });

    SelfTestSummary { seed, checks: checks.out }
}
