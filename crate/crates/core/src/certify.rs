//! Kernel and range extraction for integrated operators, the
//! non-comparability test for two of them, and the end-to-end certificate
//! pipeline.
//!
//! Given operators `A1, A2` in the double commutant of `T` with
//! `A1 A2 = A2 A1 = 0` and `A_k^2 != 0`, the kernels `N_k` and range closures
//! `M_k` are hyperinvariant, `M2 ⊆ N1` and `M1 ⊆ N2`, and none of
//! `M1, M2, N1, N2` contains its counterpart. The checks here measure those
//! relations with principal-angle sines.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex_plane::{CombSet, Contour};
use crate::contour_calculus::{
    annihilation_from, check_disjoint, commutation_residual, contour_radius, deformation_residual, densify_operator,
    eval_weight, integrate_operator_vector, polar_probe_grid, power_identity_residual, product_formula_residual_with,
    winding, DenseIntegral, IntegralSpec, IntegralStats, Multiplier, WeightFunction,
};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::operator_core::{apply_resolvent, OperatorDescriptor, OperatorHandle, VectorSample};
use crate::presets::{build_sector_setup, CalculusParams, SectorPlan, SectorSetup};
use crate::resolvent_probe::random_vector;

/// Largest singular value below which an operator counts as zero.
pub const ZERO_FLOOR: f64 = 1e-9;
/// Principal-angle sine below which one subspace counts as contained in another.
pub const CONTAINMENT_MAX: f64 = 0.1;
/// Principal-angle sine above which one subspace counts as not contained.
pub const NON_CONTAINMENT_MIN: f64 = 0.5;
/// Relative product floor, scaled by `||A1|| ||A2||`.
pub const PRODUCT_FLOOR_REL: f64 = 1e-4;
/// `||A x|| / ||x||` below which `x` is treated as a kernel vector.
pub const KERNEL_TOL: f64 = 1e-6;
/// Slack allowed between the interior and boundary suprema.
pub const MEMBERSHIP_SLACK: f64 = 0.1;

/// Residual floors enforced by the pipeline.
pub const COMMUTATION_FACTOR: f64 = 50.0;
pub const POWER_IDENTITY_FLOOR: f64 = 1e-3;
pub const DEFORMATION_FLOOR: f64 = 1e-2;
pub const PRODUCT_FORMULA_FLOOR: f64 = 5e-2;
pub const ANNIHILATION_FLOOR: f64 = 1e-4;

/// Orthonormal bases for the numerical kernel and range of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePair {
    pub kernel_basis: DMatrix<Complex64>,
    pub range_basis: DMatrix<Complex64>,
    pub rank_threshold: f64,
    /// Set when the largest singular value is below [`ZERO_FLOOR`].
    pub numerically_zero: bool,
    pub singular_values: Vec<f64>,
}

impl SubspacePair {
    pub fn dim(&self) -> usize {
        self.kernel_basis.nrows()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.ncols()
    }

    pub fn range_dim(&self) -> usize {
        self.range_basis.ncols()
    }
}

/// Split `a` by SVD: singular values below `rank_threshold * sigma_max` count
/// as zero. The matrix is taken in orthonormal coordinates.
pub fn extract_subspaces(a: &DMatrix<Complex64>, rank_threshold: f64) -> Result<SubspacePair> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if !(rank_threshold > 0.0 && rank_threshold < 1.0) {
        return Err(Error::InvalidInput(format!("rank threshold must lie in (0, 1), got {rank_threshold}")));
    }
    if a.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(SubspacePair {
            kernel_basis: DMatrix::zeros(0, 0),
            range_basis: DMatrix::zeros(0, 0),
            rank_threshold,
            numerically_zero: true,
            singular_values: Vec::new(),
        });
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let numerically_zero = sigma_max < ZERO_FLOOR;
    let cut = rank_threshold * sigma_max;
    let kept: Vec<usize> = if numerically_zero { Vec::new() } else { (0..n).filter(|&i| sigma[i] >= cut).collect() };
    let dropped: Vec<usize> = (0..n).filter(|i| !kept.contains(i)).collect();
    let range_basis = DMatrix::from_fn(n, kept.len(), |i, j| u[(i, kept[j])]);
    let kernel_basis = DMatrix::from_fn(n, dropped.len(), |i, j| v_t[(dropped[j], i)].conj());
    Ok(SubspacePair { kernel_basis, range_basis, rank_threshold, numerically_zero, singular_values: sigma })
}

/// Largest principal-angle sine of `p` relative to `q`: `||(I - Q Q^H) P||`.
/// Zero when `p` is empty, one when `q` is empty and `p` is not.
pub fn containment_sine(p: &DMatrix<Complex64>, q: &DMatrix<Complex64>) -> f64 {
    if p.ncols() == 0 {
        return 0.0;
    }
    if q.ncols() == 0 {
        return 1.0;
    }
    let residual = p - q * (q.adjoint() * p);
    spectral_norm(&residual).min(1.0)
}

/// Norms entering the non-comparability test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProductNorms {
    pub a1_a2: f64,
    pub a2_a1: f64,
    pub a1_squared: f64,
    pub a2_squared: f64,
    pub a1: f64,
    pub a2: f64,
}

impl ProductNorms {
    /// Spectral norms of orthonormal-coordinate matrices.
    pub fn from_matrices(a1: &DMatrix<Complex64>, a2: &DMatrix<Complex64>) -> Self {
        ProductNorms {
            a1_a2: spectral_norm(&(a1 * a2)),
            a2_a1: spectral_norm(&(a2 * a1)),
            a1_squared: spectral_norm(&(a1 * a1)),
            a2_squared: spectral_norm(&(a2 * a2)),
            a1: spectral_norm(a1),
            a2: spectral_norm(a2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictKind {
    CertifiedNoncomparable,
    InconclusiveAkZero,
    Failed,
}

impl VerdictKind {
    pub fn name(&self) -> &'static str {
        match self {
            VerdictKind::CertifiedNoncomparable => "CERTIFIED_NONCOMPARABLE",
            VerdictKind::InconclusiveAkZero => "INCONCLUSIVE_AK_ZERO",
            VerdictKind::Failed => "FAILED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    pub kind: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl Verdict {
    fn new(kind: VerdictKind) -> Self {
        Verdict { kind, stage: None, reason: None }
    }

    fn failed(stage: &str, reason: impl Into<String>) -> Self {
        Verdict { kind: VerdictKind::Failed, stage: Some(stage.into()), reason: Some(reason.into()) }
    }
}

/// Everything the verdict of the non-comparability test depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Margins {
    /// `||A1^2||, ||A2^2||`
    pub square_norms: [f64; 2],
    /// `||A1 A2||, ||A2 A1||`
    pub product_norms: [f64; 2],
    pub product_floor: f64,
    /// Sines for `M2 ⊆ N1` and `M1 ⊆ N2`.
    pub containment: [f64; 2],
    /// Sines for `M1 ⊄ M2`, `M2 ⊄ M1`, `N1 ⊄ N2`, `N2 ⊄ N1`.
    pub non_containment: [f64; 4],
    pub kernel_dims: [usize; 2],
    pub range_dims: [usize; 2],
}

impl Margins {
    pub fn verdict(&self) -> Verdict {
        const STAGE: &str = "non-comparability";
        let all = self
            .square_norms
            .iter()
            .chain(&self.product_norms)
            .chain(&self.containment)
            .chain(&self.non_containment)
            .chain(std::iter::once(&self.product_floor));
        if all.into_iter().any(|v| !v.is_finite()) {
            return Verdict::failed(STAGE, "non-finite margin");
        }
        if let Some(k) = self.square_norms.iter().position(|&s| s <= ZERO_FLOOR) {
            return Verdict {
                reason: Some(format!("||A{}^2|| = {:.3e} is numerically zero", k + 1, self.square_norms[k])),
                ..Verdict::new(VerdictKind::InconclusiveAkZero)
            };
        }
        if let Some(k) = self.product_norms.iter().position(|&s| s > self.product_floor) {
            let name = if k == 0 { "A1 A2" } else { "A2 A1" };
            return Verdict::failed(
                STAGE,
                format!("||{name}|| = {:.3e} above floor {:.3e}", self.product_norms[k], self.product_floor),
            );
        }
        let contained = self.containment.iter().all(|&s| s < CONTAINMENT_MAX);
        let separated = self.non_containment.iter().all(|&s| s > NON_CONTAINMENT_MIN);
        if contained && separated {
            return Verdict::new(VerdictKind::CertifiedNoncomparable);
        }
        let dead_zone = |s: &f64| (CONTAINMENT_MAX..=NON_CONTAINMENT_MIN).contains(s);
        if self.containment.iter().chain(&self.non_containment).any(dead_zone) {
            return Verdict::failed(STAGE, "ambiguous geometry");
        }
        if !contained {
            Verdict::failed(STAGE, "range of one operator not inside the kernel of the other")
        } else {
            Verdict::failed(STAGE, "kernels or ranges comparable by inclusion")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NonComparability {
    pub verdict: Verdict,
    pub margins: Margins,
}

pub fn non_comparability_check(
    pair1: &SubspacePair,
    pair2: &SubspacePair,
    products: &ProductNorms,
) -> Result<NonComparability> {
    if pair1.dim() != pair2.dim() {
        return Err(Error::DimensionMismatch { expected: pair1.dim(), got: pair2.dim() });
    }
    let (m1, n1) = (&pair1.range_basis, &pair1.kernel_basis);
    let (m2, n2) = (&pair2.range_basis, &pair2.kernel_basis);
    let margins = Margins {
        square_norms: [products.a1_squared, products.a2_squared],
        product_norms: [products.a1_a2, products.a2_a1],
        product_floor: ZERO_FLOOR.max(PRODUCT_FLOOR_REL * products.a1 * products.a2),
        containment: [containment_sine(m2, n1), containment_sine(m1, n2)],
        non_containment: [
            containment_sine(m1, m2),
            containment_sine(m2, m1),
            containment_sine(n1, n2),
            containment_sine(n2, n1),
        ],
        kernel_dims: [pair1.kernel_dim(), pair2.kernel_dim()],
        range_dims: [pair1.range_dim(), pair2.range_dim()],
    };
    Ok(NonComparability { verdict: margins.verdict(), margins })
}

/// Suprema of `|g h| ||R(z) x||` inside the integration domain and on its
/// boundary, next to `||A x||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KernelMembershipReport {
    pub interior_sup: f64,
    pub boundary_sup: f64,
    pub ax_norm: f64,
    pub x_norm: f64,
    /// Grid points left out because the resolvent missed its defect contract.
    pub unresolved_points: usize,
    /// `||A x|| <= KERNEL_TOL ||x||` implies `interior_sup <= 1.1 boundary_sup`.
    pub consistent: bool,
}

pub fn kernel_membership_test(
    op: &OperatorHandle,
    spec: &IntegralSpec,
    x: &VectorSample,
    interior_grid: &[Complex64],
    boundary_grid: &[Complex64],
) -> Result<KernelMembershipReport> {
    let x_norm = op.norm(x);
    if x_norm == 0.0 {
        return Ok(KernelMembershipReport {
            interior_sup: 0.0,
            boundary_sup: 0.0,
            ax_norm: 0.0,
            x_norm,
            unresolved_points: 0,
            consistent: true,
        });
    }
    let mut unresolved_points = 0;
    let mut sup = |grid: &[Complex64]| -> Result<f64> {
        let mut best: f64 = 0.0;
        for &z in grid {
            let f = spec.multiplier.eval(z) * eval_weight(&spec.weight, z)?;
            if f.norm() == 0.0 {
                continue;
            }
            match apply_resolvent(op, z, x) {
                Ok(y) => best = best.max(f.norm() * op.norm(&y)),
                Err(Error::ResolventDefect { .. }) => unresolved_points += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(best)
    };
    let interior_sup = sup(interior_grid)?;
    let boundary_sup = sup(boundary_grid)?;
    let ax_norm = op.norm(&integrate_operator_vector(op, spec, x)?.value);
    let in_kernel = ax_norm <= KERNEL_TOL * x_norm;
    let consistent = !in_kernel || interior_sup <= (1.0 + MEMBERSHIP_SLACK) * boundary_sup;
    Ok(KernelMembershipReport { interior_sup, boundary_sup, ax_norm, x_norm, unresolved_points, consistent })
}

/// Default grids for [`kernel_membership_test`]: `boundary_points` points
/// spread by arc length over the contour, and a polar grid filtered to the
/// interior, both outside the truncation disc.
pub fn membership_grids(spec: &IntegralSpec, boundary_points: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let contour = &spec.contour;
    let skip = spec.truncation_radius;
    let len = contour.total_length();
    let boundary: Vec<Complex64> = (0..boundary_points)
        .map(|k| contour.point_at(len * (k as f64 + 0.5) / boundary_points as f64))
        .filter(|z| z.norm() > skip)
        .collect();
    let interior = polar_probe_grid(skip, contour_radius(contour), 32, 96)
        .into_iter()
        .filter(|&z| contour.distance_to(z) > 1e-6 * z.norm() && winding(contour, z) == Some(1))
        .collect();
    (interior, boundary)
}

/// Input of [`run_theorem_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineConfig {
    pub sectors: [SectorPlan; 2],
    pub calculus: CalculusParams,
    pub n_max: usize,
    pub rank_threshold: f64,
    /// Seed for the test vectors of the vector residuals.
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(sectors: [SectorPlan; 2], calculus: CalculusParams) -> Self {
        PipelineConfig { sectors, calculus, n_max: 4, rank_threshold: 1e-6, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SectorRecord {
    pub plan: SectorPlan,
    pub weight: WeightFunction,
    #[serde(rename = "C0")]
    pub big_c0: f64,
    #[serde(rename = "C1")]
    pub big_c1: f64,
    pub combs: Vec<CombSet>,
    pub contour: Contour,
    pub truncation_radius: f64,
}

impl SectorRecord {
    fn from_setup(s: &SectorSetup) -> Self {
        SectorRecord {
            plan: s.plan.clone(),
            weight: s.weight,
            big_c0: s.budget.big_c0,
            big_c1: s.budget.big_c1,
            combs: s.combs.iter().map(|b| b.comb.clone()).collect(),
            contour: s.contour.clone(),
            truncation_radius: s.spec.truncation_radius,
        }
    }
}

/// One residual against its floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualCheck {
    pub name: String,
    pub value: f64,
    pub floor: f64,
}

impl ResidualCheck {
    pub fn passed(&self) -> bool {
        self.value <= self.floor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OperatorRecord {
    pub norm: f64,
    /// `||A^n||` for `n = 1..=nMax`.
    pub power_norms: Vec<f64>,
    pub kernel_dim: usize,
    pub range_dim: usize,
    pub integral: IntegralStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

/// Result of one pipeline run. The verdict is a function of the stored
/// failure, residuals and margins; see [`rederive_verdict`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub operator: OperatorDescriptor,
    pub config: PipelineConfig,
    pub sectors: Vec<SectorRecord>,
    pub residuals: Vec<ResidualCheck>,
    pub operators: Vec<OperatorRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub margins: Option<Margins>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<StageFailure>,
    pub verdict: Verdict,
}

impl Certificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Residual with the given name.
    pub fn residual(&self, name: &str) -> Option<&ResidualCheck> {
        self.residuals.iter().find(|r| r.name == name)
    }
}

/// Verdict implied by the stored contents of a certificate.
pub fn rederive_verdict(cert: &Certificate) -> Verdict {
    if let Some(f) = &cert.failure {
        return Verdict::failed(&f.stage, f.message.clone());
    }
    if let Some(r) = cert.residuals.iter().find(|r| !r.passed()) {
        return Verdict::failed(
            "residuals",
            format!("{} residual {:.3e} above floor {:.3e}", r.name, r.value, r.floor),
        );
    }
    match &cert.margins {
        Some(m) => m.verdict(),
        None => Verdict::failed("verdict", "no margins recorded"),
    }
}

struct Run<'a> {
    op: &'a OperatorHandle,
    config: &'a PipelineConfig,
    sectors: Vec<SectorRecord>,
    residuals: Vec<ResidualCheck>,
    operators: Vec<OperatorRecord>,
    margins: Option<Margins>,
}

impl Run<'_> {
    fn check(&mut self, name: String, value: f64, floor: f64) {
        self.residuals.push(ResidualCheck { name, value, floor });
    }

    fn stages(&mut self) -> std::result::Result<(), (&'static str, Error)> {
        let op = self.op;
        let config = self.config;
        let params = &config.calculus;

        // precondition
        let stage = "precondition";
        let s1 = config.sectors[0].sector().map_err(|e| (stage, e))?;
        let s2 = config.sectors[1].sector().map_err(|e| (stage, e))?;
        let widest = s1.half_angle().max(s2.half_angle());
        if !(params.beta > widest && params.beta <= std::f64::consts::PI) {
            return Err((
                stage,
                Error::InvalidInput(format!(
                    "beta = {} must exceed the widest half-angle {widest} and not exceed pi",
                    params.beta
                )),
            ));
        }
        if !(s1.angular_gap(&s2) > 0.0) {
            return Err((
                stage,
                Error::DomainsOverlap(format!("sectors overlap, angular gap {:.3e}", s1.angular_gap(&s2))),
            ));
        }
        if !(config.n_max >= 2) {
            return Err((stage, Error::InvalidInput(format!("nMax must be at least 2, got {}", config.n_max))));
        }

        // combs
        let stage = "combs";
        let setup1 = build_sector_setup(op, &config.sectors[0], params, &[]).map_err(|e| (stage, e))?;
        let setup2 = build_sector_setup(op, &config.sectors[1], params, &setup1.combs).map_err(|e| (stage, e))?;
        let skip = setup1.spec.truncation_radius.min(setup2.spec.truncation_radius);
        check_disjoint(&setup1.contour, &setup2.contour, skip).map_err(|e| (stage, e))?;
        self.sectors = vec![SectorRecord::from_setup(&setup1), SectorRecord::from_setup(&setup2)];
        let setups = [&setup1, &setup2];

        // integrals
        let stage = "integrals";
        let mut dense: Vec<DenseIntegral> = Vec::with_capacity(2);
        for s in setups {
            dense.push(densify_operator(op, &s.spec).map_err(|e| (stage, e))?);
        }

        // residuals
        let stage = "residuals";
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for (k, s) in setups.iter().enumerate() {
            let a = &dense[k].matrix;
            let a_norm = op.operator_norm(a);
            let floor = COMMUTATION_FACTOR * params.tol * a_norm.max(1.0);
            self.check(format!("commutation[{}]", k + 1), commutation_residual(op, a), floor);
            let x = random_vector(op.dim(), &mut rng);
            for n in 1..=3 {
                let r = power_identity_residual(op, &s.spec, n, &x).map_err(|e| (stage, e))?;
                self.check(format!("powerIdentity[{}][n={n}]", k + 1), r, POWER_IDENTITY_FLOOR);
            }
            let d = deformation_residual(op, &s.spec, &s.full_contour, &x).map_err(|e| (stage, e))?;
            self.check(format!("deformation[{}]", k + 1), d.residual, DEFORMATION_FLOOR);
            let p = product_formula_residual_with(op, &s.spec, dense[k].clone(), &Multiplier::one(), &s.full_contour)
                .map_err(|e| (stage, e))?;
            self.check(format!("productFormula[{}]", k + 1), p.residual, PRODUCT_FORMULA_FLOOR);
        }
        let ann = annihilation_from(op, dense[0].clone(), dense[1].clone());
        self.check("annihilation".into(), ann.residual, ANNIHILATION_FLOOR);

        // subspaces
        let stage = "subspaces";
        let ortho: Vec<DMatrix<Complex64>> = dense.iter().map(|d| op.matrix_to_orthonormal(&d.matrix)).collect();
        let mut pairs = Vec::with_capacity(2);
        for (k, a) in ortho.iter().enumerate() {
            let pair = extract_subspaces(a, config.rank_threshold).map_err(|e| (stage, e))?;
            let mut power_norms = Vec::with_capacity(config.n_max);
            let mut power = a.clone();
            for n in 1..=config.n_max {
                if n > 1 {
                    power = &power * a;
                }
                power_norms.push(spectral_norm(&power));
            }
            self.operators.push(OperatorRecord {
                norm: power_norms[0],
                power_norms,
                kernel_dim: pair.kernel_dim(),
                range_dim: pair.range_dim(),
                integral: dense[k].stats.clone(),
            });
            pairs.push(pair);
        }

        // verdict
        let stage = "verdict";
        let products = ProductNorms::from_matrices(&ortho[0], &ortho[1]);
        let check = non_comparability_check(&pairs[0], &pairs[1], &products).map_err(|e| (stage, e))?;
        self.margins = Some(check.margins);
        Ok(())
    }
}

/// Build combs on both sectors, integrate `A1, A2`, run every residual check
/// and the non-comparability test, and collect the outcome. Stage errors are
/// recorded in the certificate rather than returned.
pub fn run_theorem_pipeline(op: &OperatorHandle, config: &PipelineConfig) -> Certificate {
    let mut run = Run { op, config, sectors: Vec::new(), residuals: Vec::new(), operators: Vec::new(), margins: None };
    let failure = run.stages().err().map(|(stage, e)| StageFailure { stage: stage.into(), message: e.to_string() });
    let mut cert = Certificate {
        operator: op.descriptor().clone(),
        config: config.clone(),
        sectors: run.sectors,
        residuals: run.residuals,
        operators: run.operators,
        margins: run.margins,
        failure,
        verdict: Verdict::new(VerdictKind::Failed),
    };
    cert.verdict = rederive_verdict(&cert);
    cert
}
