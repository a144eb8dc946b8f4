//! Ready-made sector, comb and contour setups used by the certificate
//! pipeline, the command line and the test suites.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::comb_builder::{build_comb_set, calibrate_ray_constant, dyadic_schedule, BuiltComb, CombBudget, Phi};
use crate::complex_plane::{build_boundary_contour, make_sector, CombSet, Contour, Placement, Sector};
use crate::contour_calculus::{IntegralSpec, Multiplier, WeightFunction};
use crate::error::{Error, Result};
use crate::operator_core::{make_model_operator, OperatorDescriptor, OperatorHandle};

/// Geometry of one sector together with its comb parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SectorPlan {
    /// Axis direction `[re, im]`, normalized on use.
    pub direction: [f64; 2],
    pub half_angle: f64,
    /// Radius of the full sector used as the outer deformation contour.
    #[serde(default = "default_outer_radius")]
    pub outer_radius: f64,
    /// Radius at which the comb-excised contour is closed by an arc.
    #[serde(default = "default_clip_radius")]
    pub clip_radius: f64,
    /// Comb aperture.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_density")]
    pub probe_density: usize,
}

fn default_outer_radius() -> f64 {
    1.5
}

fn default_clip_radius() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    4f64.to_radians()
}

fn default_r_min() -> f64 {
    crate::comb_builder::DEFAULT_R_MIN
}

fn default_density() -> usize {
    25
}

impl SectorPlan {
    pub fn new(direction: Complex64, half_angle: f64) -> Self {
        SectorPlan {
            direction: [direction.re, direction.im],
            half_angle,
            outer_radius: default_outer_radius(),
            clip_radius: default_clip_radius(),
            alpha: default_alpha(),
            r_min: default_r_min(),
            probe_density: default_density(),
        }
    }

    pub fn direction(&self) -> Complex64 {
        let d = Complex64::new(self.direction[0], self.direction[1]);
        d / d.norm()
    }

    pub fn sector(&self) -> Result<Sector> {
        let d = Complex64::new(self.direction[0], self.direction[1]);
        if !(d.norm() > 0.0) {
            return Err(Error::InvalidInput("sector direction must be non-zero".into()));
        }
        make_sector(d / d.norm(), self.half_angle, self.outer_radius)
    }

    /// Dyadic schedule down to `r_min`.
    pub fn schedule(&self) -> Vec<f64> {
        let len = (1.0 / self.r_min).log2().floor().max(1.0) as usize + 1;
        dyadic_schedule(len)
    }

    pub fn placements(&self) -> Result<[Placement; 2]> {
        let z = self.direction();
        Ok([Placement::new(z, 1, self.half_angle)?, Placement::new(z, -1, self.half_angle)?])
    }
}

/// Parameters shared by both sectors of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CalculusParams {
    /// Aperture of the weights, `p = pi / (2 beta)`.
    pub beta: f64,
    /// Edge decay `|h| = exp(-c0 / r^p)`.
    pub c0: f64,
    /// Ray constant; calibrated from ray probes when absent.
    pub big_c0: Option<f64>,
    /// `C1 = c1_factor * C0`.
    pub c1_factor: f64,
    pub tol: f64,
}

/// Everything needed to integrate over one sector.
#[derive(Debug, Clone)]
pub struct SectorSetup {
    pub plan: SectorPlan,
    pub sector: Sector,
    pub weight: WeightFunction,
    pub budget: CombBudget,
    pub combs: Vec<BuiltComb>,
    /// Comb-excised contour.
    pub contour: Contour,
    /// Boundary of the full sector at the outer radius.
    pub full_contour: Contour,
    /// `g = 1` on the comb-excised contour.
    pub spec: IntegralSpec,
}

/// Calibration margin applied to the sampled ray constant.
const CALIBRATION_MARGIN: f64 = 1.05;

/// Build combs, contours and the weight for one sector. Combs listed in
/// `shared` are reused when they sit on the same geometric ray.
pub fn build_sector_setup(
    op: &OperatorHandle,
    plan: &SectorPlan,
    params: &CalculusParams,
    shared: &[BuiltComb],
) -> Result<SectorSetup> {
    let sector = plan.sector()?;
    let weight = WeightFunction::for_sector(sector.direction(), plan.half_angle, params.beta, params.c0)?;
    let phi = Phi::ExpPower { c0: params.c0, p: weight.p };
    let schedule = plan.schedule();
    let placements = plan.placements()?;
    let big_c0 = match params.big_c0 {
        Some(v) => v,
        None => {
            let mut worst: f64 = 0.0;
            for p in &placements {
                worst = worst.max(calibrate_ray_constant(op, p, &phi, &schedule, plan.r_min)?);
            }
            CALIBRATION_MARGIN * worst.max(f64::MIN_POSITIVE)
        }
    };
    let budget = CombBudget {
        a_schedule: schedule,
        probe_density: plan.probe_density,
        r_min: plan.r_min,
        max_rectangles: 64,
        ..CombBudget::new(big_c0, params.c1_factor * big_c0, phi, plan.alpha)?
    };
    let mut combs = Vec::with_capacity(2);
    for p in &placements {
        let reused = shared.iter().find(|b| b.comb.placement().coincides_with(p));
        let built = match reused {
            Some(b) => BuiltComb {
                comb: CombSet::new(b.comb.alpha(), b.comb.a().to_vec(), b.comb.delta().to_vec(), *p)?,
                certificates: b.certificates.clone(),
            },
            None => build_comb_set(op, p, &budget)?,
        };
        combs.push(built);
    }
    let comb_sets: Vec<CombSet> = combs.iter().map(|b| b.comb.clone()).collect();
    let contour = build_boundary_contour(&sector, &comb_sets, plan.clip_radius)?;
    let full_contour = build_boundary_contour(&sector, &[], plan.outer_radius)?;
    let truncation = comb_sets.iter().map(|c| c.inner_radius()).fold(f64::INFINITY, f64::min);
    let spec = IntegralSpec::new(weight, Multiplier::one(), contour.clone(), truncation, params.tol)?;
    Ok(SectorSetup { plan: plan.clone(), sector, weight, budget, combs, contour, full_contour, spec })
}

/// Half-angle of the sector about the positive reals in the translation setup.
pub const TRANSLATION_HALF_ANGLE_DEG: f64 = 89.0;
/// Half-angle of the sector about the negative reals in the two-sector setup.
pub const LEFT_HALF_ANGLE_DEG: f64 = 80.0;
/// Innermost comb radius for the Volterra setups.
pub const TRANSLATION_R_MIN: f64 = 5e-5;

pub fn volterra_right_plan() -> SectorPlan {
    SectorPlan {
        r_min: TRANSLATION_R_MIN,
        ..SectorPlan::new(Complex64::new(1.0, 0.0), TRANSLATION_HALF_ANGLE_DEG.to_radians())
    }
}

pub fn volterra_left_plan() -> SectorPlan {
    SectorPlan {
        r_min: TRANSLATION_R_MIN,
        ..SectorPlan::new(Complex64::new(-1.0, 0.0), LEFT_HALF_ANGLE_DEG.to_radians())
    }
}

/// `c0` giving the weight coefficient `c` on a sector of half-angle `beta_k`.
pub fn edge_decay_for(c: f64, beta_k: f64, beta: f64) -> f64 {
    c * (PI / (2.0 * beta) * beta_k).cos()
}

/// Volterra model with the sector about the positive reals set up so that
/// `A x` is the translation of `x` by `shift`.
pub fn volterra_translation(m: usize, shift: f64, tol: f64) -> Result<(OperatorHandle, SectorSetup)> {
    let op = make_model_operator(&OperatorDescriptor::VolterraAnalytic { m })?;
    let plan = volterra_right_plan();
    let beta = PI / 2.0;
    let params =
        CalculusParams { beta, c0: edge_decay_for(shift, plan.half_angle, beta), big_c0: None, c1_factor: 2.0, tol };
    let setup = build_sector_setup(&op, &plan, &params, &[])?;
    Ok((op, setup))
}

/// `x(t - shift)` on the grid, zero for `t < shift`.
pub fn translated_indicator(op: &OperatorHandle, shift: f64) -> Option<crate::operator_core::VectorSample> {
    op.sample(|t| Complex64::new(if t > shift { 1.0 } else { 0.0 }, 0.0))
}

/// Dense translation-by-`shift` matrix on the Volterra grid: the grid values
/// of `p(t - shift)` for the interpolating polynomial `p`, zero for
/// `t < shift`.
pub fn translation_matrix(op: &OperatorHandle, shift: f64) -> Option<nalgebra::DMatrix<Complex64>> {
    let grid = op.grid()?;
    let w = op.weights();
    let m = grid.len();
    // Barycentric weights of the Gauss-Legendre nodes.
    let lambda: Vec<f64> = (0..m)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * (grid[j] * (1.0 - grid[j]) * w[j]).sqrt()
        })
        .collect();
    let mut out = nalgebra::DMatrix::zeros(m, m);
    for i in 0..m {
        let t = grid[i] - shift;
        if t < 0.0 {
            continue;
        }
        if let Some(j) = grid.iter().position(|&g| g == t) {
            out[(i, j)] = Complex64::new(1.0, 0.0);
            continue;
        }
        let terms: Vec<f64> = (0..m).map(|j| lambda[j] / (t - grid[j])).collect();
        let total: f64 = terms.iter().sum();
        for j in 0..m {
            out[(i, j)] = Complex64::new(terms[j] / total, 0.0);
        }
    }
    Some(out)
}

/// Opposite sectors of half-angle `half_angle` about `±1`.
pub fn opposite_plans(half_angle: f64) -> (SectorPlan, SectorPlan) {
    (SectorPlan::new(Complex64::new(1.0, 0.0), half_angle), SectorPlan::new(Complex64::new(-1.0, 0.0), half_angle))
}
