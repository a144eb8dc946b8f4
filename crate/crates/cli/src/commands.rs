//! The five verbs. Each writes its reports into the output directory and
//! returns the process exit code.

use std::f64::consts::PI;

use hyperlat_core::certify::{run_theorem_pipeline, Certificate, VerdictKind};
use hyperlat_core::certify::{COMMUTATION_FACTOR, DEFORMATION_FLOOR, POWER_IDENTITY_FLOOR};
use hyperlat_core::comb_builder::{validate_comb_set, BuiltComb};
use hyperlat_core::contour_calculus::{
    commutation_residual, deformation_residual, densify_operator, matrix_csv, power_identity_residual, IntegralStats,
    Multiplier,
};
use hyperlat_core::operator_core::{make_model_operator, OperatorHandle};
use hyperlat_core::presets::{build_sector_setup, SectorSetup};
use hyperlat_core::resolvent_probe::{
    check_unboundedness_hypothesis, estimate_resolvent_norm_with, fit_growth_model, random_vector, samples_csv,
    sector_grid, GrowthModel, ResolventSample, UnboundednessVerdict,
};
use hyperlat_core::selftest::{run_selftest, SelfTestSummary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::failure::{Failure, EXIT_CERTIFIED, EXIT_FAILED, EXIT_INCONCLUSIVE};
use crate::output::OutputDir;

fn operator(config: &RunConfig) -> Result<OperatorHandle, Failure> {
    make_model_operator(&config.operator).map_err(Failure::stage("operator"))
}

fn setups(op: &OperatorHandle, config: &RunConfig) -> Result<Vec<SectorSetup>, Failure> {
    let params = config.calculus_params();
    let mut out: Vec<SectorSetup> = Vec::with_capacity(config.sectors.len());
    for plan in &config.sectors {
        let shared: Vec<BuiltComb> = out.iter().flat_map(|s| s.combs.iter().cloned()).collect();
        out.push(build_sector_setup(op, plan, &params, &shared).map_err(Failure::stage("combs"))?);
    }
    Ok(out)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SectorGrowth {
    sector: usize,
    rays: Vec<GrowthModel>,
    /// Fitted exponent minus `pi / (2 beta)` per ray.
    p_deviation: Vec<Option<f64>>,
    unboundedness: Vec<UnboundednessVerdict>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ProbeReport {
    seed: u64,
    operator: &'static str,
    sectors: Vec<SectorGrowth>,
}

pub fn probe(config: &RunConfig, out: &OutputDir) -> Result<u8, Failure> {
    let op = operator(config)?;
    let pc = &config.probe;
    let mut samples: Vec<ResolventSample> = Vec::new();
    let mut sectors = Vec::with_capacity(config.sectors.len());
    for (k, plan) in config.sectors.iter().enumerate() {
        let sector = plan.sector().map_err(Failure::stage("probe"))?;
        let grid = sector_grid(&sector, &pc.radii, pc.angles);
        for &z in &grid {
            samples
                .push(estimate_resolvent_norm_with(&op, z, pc.method, config.seed).map_err(Failure::stage("probe"))?);
        }
        let mut rays = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let model = fit_growth_model(&op, sign * plan.half_angle, plan.direction(), &pc.radii, pc.form)
                .map_err(Failure::stage("fit"))?;
            rays.push(model);
        }
        let p_deviation = rays.iter().map(|m| m.p_deviation(config.calculus.beta)).collect();
        let unboundedness = if pc.c_list.is_empty() {
            Vec::new()
        } else {
            let p = PI / (2.0 * config.calculus.beta);
            check_unboundedness_hypothesis(&op, &sector, p, &pc.c_list, &grid)
                .map_err(Failure::stage("unboundedness"))?
        };
        sectors.push(SectorGrowth { sector: k, rays, p_deviation, unboundedness });
    }
    out.write_csv("samples.csv", config.seed, &samples_csv(&samples))?;
    out.write_json("growth.json", &ProbeReport { seed: config.seed, operator: op.kind_name(), sectors })?;
    Ok(EXIT_CERTIFIED)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SectorCombs {
    sector: usize,
    #[serde(rename = "C0")]
    big_c0: f64,
    #[serde(rename = "C1")]
    big_c1: f64,
    combs: Vec<BuiltComb>,
    /// Largest `||R|| / (C1 phi)` at the validation density; at most 1 passes.
    validation_ratio: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CombReport {
    seed: u64,
    validation_factor: f64,
    validated: bool,
    sectors: Vec<SectorCombs>,
}

pub fn comb(config: &RunConfig, out: &OutputDir) -> Result<u8, Failure> {
    let op = operator(config)?;
    let factor = config.comb.validation_factor;
    let mut sectors = Vec::new();
    for (k, s) in setups(&op, config)?.into_iter().enumerate() {
        let ratio = s.combs.iter().map(|b| validate_comb_set(&op, &b.comb, &s.budget, factor)).fold(0.0, f64::max);
        out.write_csv(&format!("contour_{k}.csv"), config.seed, &s.contour.vertices_csv())?;
        sectors.push(SectorCombs {
            sector: k,
            big_c0: s.budget.big_c0,
            big_c1: s.budget.big_c1,
            combs: s.combs,
            validation_ratio: ratio,
        });
    }
    let validated = sectors.iter().all(|s| s.validation_ratio <= 1.0);
    out.write_json("combs.json", &CombReport { seed: config.seed, validation_factor: factor, validated, sectors })?;
    Ok(if validated { EXIT_CERTIFIED } else { EXIT_FAILED })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Residual {
    name: String,
    value: f64,
    floor: f64,
    passed: bool,
}

impl Residual {
    fn new(name: impl Into<String>, value: f64, floor: f64) -> Self {
        Residual { name: name.into(), value, floor, passed: value <= floor }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct IntegrateReport {
    seed: u64,
    sector: usize,
    power: usize,
    norm: f64,
    stats: IntegralStats,
    residuals: Vec<Residual>,
}

pub fn integrate(config: &RunConfig, out: &OutputDir) -> Result<u8, Failure> {
    let op = operator(config)?;
    let k = config.integrate.sector;
    let setup = setups(&op, config)?.swap_remove(k);
    let spec = setup.spec.with_multiplier(Multiplier::monomial(config.integrate.power));
    let a = densify_operator(&op, &spec).map_err(Failure::stage("integrals"))?;
    let norm = op.operator_norm(&a.matrix);
    let mut residuals = vec![Residual::new(
        "commutation",
        commutation_residual(&op, &a.matrix),
        COMMUTATION_FACTOR * config.tol * norm.max(1.0),
    )];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = random_vector(op.dim(), &mut rng);
    for n in 1..=3 {
        let r = power_identity_residual(&op, &spec, n, &x).map_err(Failure::stage("residuals"))?;
        residuals.push(Residual::new(format!("powerIdentity[n={n}]"), r, POWER_IDENTITY_FLOOR));
    }
    let d = deformation_residual(&op, &spec, &setup.full_contour, &x).map_err(Failure::stage("residuals"))?;
    residuals.push(Residual::new("deformation", d.residual, DEFORMATION_FLOOR));
    out.write_csv("matrix.csv", config.seed, &matrix_csv(&a.matrix))?;
    let passed = residuals.iter().all(|r| r.passed);
    out.write_json(
        "integrate.json",
        &IntegrateReport {
            seed: config.seed,
            sector: k,
            power: config.integrate.power,
            norm,
            stats: a.stats,
            residuals,
        },
    )?;
    Ok(if passed { EXIT_CERTIFIED } else { EXIT_FAILED })
}

pub fn certify(config: &RunConfig, out: &OutputDir) -> Result<(u8, Certificate), Failure> {
    let op = operator(config)?;
    let cert = run_theorem_pipeline(&op, &config.pipeline()?);
    let json = cert.to_json().map_err(|e| Failure::Io(e.to_string()))?;
    std::fs::write(out.path("certificate.json"), json + "\n")?;
    let mut table = String::from("name,value,floor,passed\n");
    for r in &cert.residuals {
        table.push_str(&format!("{},{},{},{}\n", r.name, r.value, r.floor, r.passed()));
    }
    out.write_csv("summary.csv", config.seed, &table)?;
    let code = match cert.verdict.kind {
        VerdictKind::CertifiedNoncomparable => EXIT_CERTIFIED,
        VerdictKind::InconclusiveAkZero => EXIT_INCONCLUSIVE,
        VerdictKind::Failed => EXIT_FAILED,
    };
    Ok((code, cert))
}

pub fn selftest(seed: u64, out: &OutputDir) -> Result<(u8, SelfTestSummary), Failure> {
    let summary = run_selftest(seed);
    out.write_json("selftest.json", &summary)?;
    Ok((if summary.passed() { EXIT_CERTIFIED } else { EXIT_FAILED }, summary))
}
