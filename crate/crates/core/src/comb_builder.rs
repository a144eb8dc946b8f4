//! Probe-and-bisect construction of comb sets on which the resolvent obeys a
//! relaxed growth bound `||R(w)|| <= C1 phi(|w|)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;

use crate::complex_plane::{CombSet, Placement};
use crate::error::{Error, Result};
use crate::operator_core::OperatorHandle;

/// Growth profile `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "camelCase", deny_unknown_fields)]
pub enum Phi {
    /// `exp(c0 / r^p)`
    ExpPower { c0: f64, p: f64 },
    /// `r^{-n}`
    Power { n: f64 },
}

impl Phi {
    pub fn ln(&self, r: f64) -> f64 {
        match *self {
            Phi::ExpPower { c0, p } => c0 / r.powf(p),
            Phi::Power { n } => -n * r.ln(),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.ln(r).exp()
    }
}

/// Default truncation radius for comb schedules.
pub const DEFAULT_R_MIN: f64 = 1e-3;
/// Default cap on the number of rectangles in a comb.
pub const MAX_RECTANGLES: usize = 12;
/// Half-heights below this count as a collapsed rectangle.
pub const COLLAPSE_FLOOR: f64 = 1e-9;
/// Fraction of the admissible cap tried first.
const CAP_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CombBudget {
    #[serde(rename = "C0")]
    pub big_c0: f64,
    #[serde(rename = "C1")]
    pub big_c1: f64,
    pub phi: Phi,
    pub alpha: f64,
    pub a_schedule: Vec<f64>,
    #[serde(default = "default_density")]
    pub probe_density: usize,
    #[serde(default = "default_bisections")]
    pub max_bisections: usize,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_max_rectangles")]
    pub max_rectangles: usize,
}

fn default_density() -> usize {
    25
}

fn default_bisections() -> usize {
    30
}

fn default_r_min() -> f64 {
    DEFAULT_R_MIN
}

fn default_max_rectangles() -> usize {
    MAX_RECTANGLES
}

/// `1, 1/2, 1/4, ...` with `len` entries.
pub fn dyadic_schedule(len: usize) -> Vec<f64> {
    (0..len).map(|n| 0.5f64.powi(n as i32)).collect()
}

impl CombBudget {
    pub fn new(big_c0: f64, big_c1: f64, phi: Phi, alpha: f64) -> Result<Self> {
        let b = CombBudget {
            big_c0,
            big_c1,
            phi,
            alpha,
            a_schedule: dyadic_schedule(MAX_RECTANGLES + 1),
            probe_density: default_density(),
            max_bisections: default_bisections(),
            r_min: DEFAULT_R_MIN,
            max_rectangles: MAX_RECTANGLES,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.big_c0 > 0.0 && self.big_c1 > self.big_c0 && self.big_c1.is_finite()) {
            return bad(format!("need 0 < C0 < C1, got C0 = {}, C1 = {}", self.big_c0, self.big_c1));
        }
        if !(self.alpha > 0.0 && self.alpha < std::f64::consts::FRAC_PI_2) {
            return bad(format!("alpha must lie in (0, pi/2), got {}", self.alpha));
        }
        if self.probe_density < 9 {
            return bad(format!("probe density must be at least 9, got {}", self.probe_density));
        }
        match self.phi {
            Phi::ExpPower { c0, p } if !(c0 > 0.0 && p > 0.0 && c0.is_finite() && p.is_finite()) => {
                return bad("exp-power profile needs c0 > 0 and p > 0".into());
            }
            Phi::Power { n } if !n.is_finite() => return bad("power profile needs a finite exponent".into()),
            _ => {}
        }
        let a = &self.a_schedule;
        if a.len() < 2 || a[0] != 1.0 {
            return bad("schedule must start at 1 and have at least two entries".into());
        }
        if let Some(k) = a.windows(2).position(|w| !(w[1] < w[0] && w[1] > 0.0)) {
            return bad(format!("schedule must be strictly decreasing and positive (a_{} >= a_{})", k + 1, k));
        }
        if !(self.r_min > 0.0) {
            return bad("r_min must be positive".into());
        }
        if self.max_rectangles == 0 {
            return bad("max_rectangles must be at least 1".into());
        }
        if a[1] < self.r_min {
            return bad(format!("no rectangle above r_min = {}", self.r_min));
        }
        Ok(())
    }

    /// Schedule entries kept after truncation at `r_min` and the rectangle cap.
    pub fn truncated_schedule(&self) -> Vec<f64> {
        let mut a = vec![self.a_schedule[0]];
        for &next in &self.a_schedule[1..] {
            if next < self.r_min || a.len() > self.max_rectangles {
                break;
            }
            a.push(next);
        }
        a
    }

    fn log_bound(&self, big_c: f64, r: f64) -> f64 {
        big_c.ln() + self.phi.ln(r)
    }
}

/// Smallest odd `k` with `k² >= density`.
fn grid_side(density: usize) -> usize {
    let mut k = (density as f64).sqrt().ceil() as usize;
    if k.is_multiple_of(2) {
        k += 1;
    }
    k.max(3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RectangleCertificate {
    pub index: usize,
    pub delta: f64,
    pub probes: usize,
    pub max_ratio: f64,
    pub bisections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BuiltComb {
    pub comb: CombSet,
    pub certificates: Vec<RectangleCertificate>,
}

/// `([x0, x1, delta], k, (ratio, probes))`
type MemoEntry = ([f64; 3], usize, (f64, usize));

struct Probe<'a> {
    op: &'a OperatorHandle,
    placement: &'a Placement,
    budget: &'a CombBudget,
    spectrum: Vec<Complex64>,
    /// Evaluated `(x0, x1, delta, k) -> (ratio, probes)`.
    memo: RefCell<Vec<MemoEntry>>,
}

impl Probe<'_> {
    /// Largest `||R(w)|| / (C1 phi(|w|))` over a `k × k` grid, or infinity when
    /// the rectangle holds an eigenvalue.
    fn rectangle_ratio(&self, x0: f64, x1: f64, delta: f64, k: usize) -> (f64, usize) {
        let key = [x0, x1, delta];
        if let Some(&(_, _, value)) = self.memo.borrow().iter().find(|(kk, n, _)| *kk == key && *n == k) {
            return value;
        }
        let value = self.rectangle_ratio_uncached(x0, x1, delta, k);
        self.memo.borrow_mut().push((key, k, value));
        value
    }

    fn rectangle_ratio_uncached(&self, x0: f64, x1: f64, delta: f64, k: usize) -> (f64, usize) {
        for &lam in &self.spectrum {
            let (x, y) = self.placement.to_ray_coords(lam);
            if x >= x0 && x <= x1 && y.abs() <= delta {
                return (f64::INFINITY, 0);
            }
        }
        let mut worst = f64::NEG_INFINITY;
        for i in 0..k {
            let x = x0 + (x1 - x0) * i as f64 / (k - 1) as f64;
            for j in 0..k {
                let y = -delta + 2.0 * delta * j as f64 / (k - 1) as f64;
                let w = self.placement.to_plane(x, y);
                let log_ratio = match self.op.resolvent_norm_dense(w) {
                    Ok(norm) => norm.ln() - self.budget.log_bound(self.budget.big_c1, w.norm()),
                    Err(_) => f64::INFINITY,
                };
                worst = worst.max(log_ratio);
            }
        }
        (worst.exp(), k * k)
    }
}

fn check_ray(op: &OperatorHandle, placement: &Placement, budget: &CombBudget, a: &[f64]) -> Result<()> {
    let mut radii: Vec<f64> = a.to_vec();
    radii.extend(a.windows(2).map(|w| (w[0] * w[1]).sqrt()));
    radii.sort_by(|x, y| y.total_cmp(x));
    for r in radii {
        let norm = op.resolvent_norm_dense(placement.ray() * r)?;
        let log_bound = budget.log_bound(budget.big_c0, r);
        if norm.ln() > log_bound {
            return Err(Error::RayBoundViolated { r, norm, bound: log_bound.exp() });
        }
    }
    Ok(())
}

/// Geometric bisection on `(COLLAPSE_FLOOR, hi)` for the largest passing
/// half-height, to 1% relative resolution. Returns 0 when nothing passes.
fn bisect(passes: &impl Fn(f64) -> bool, hi: f64, max_steps: usize, steps: &mut usize) -> f64 {
    let (mut lo, mut hi) = (COLLAPSE_FLOOR, hi);
    let mut passed = false;
    let mut taken = 0;
    while taken < max_steps && hi > 1.01 * lo {
        let mid = (lo * hi).sqrt();
        if passes(mid) {
            lo = mid;
            passed = true;
        } else {
            hi = mid;
        }
        taken += 1;
    }
    *steps += taken;
    if passed {
        lo
    } else {
        0.0
    }
}

/// Largest `||R(r ray)|| / phi(r)` over the schedule radii down to `r_min`
/// and their geometric midpoints: the smallest admissible `C0`.
pub fn calibrate_ray_constant(
    op: &OperatorHandle,
    placement: &Placement,
    phi: &Phi,
    schedule: &[f64],
    r_min: f64,
) -> Result<f64> {
    let a: Vec<f64> = schedule.iter().copied().take_while(|&r| r >= r_min).collect();
    let mut radii = a.clone();
    radii.extend(a.windows(2).map(|w| (w[0] * w[1]).sqrt()));
    let mut worst = f64::NEG_INFINITY;
    for r in radii {
        let norm = op.resolvent_norm_dense(placement.ray() * r)?;
        worst = worst.max(norm.ln() - phi.ln(r));
    }
    Ok(worst.exp())
}

/// Build a comb along `placement` whose rectangles satisfy the `C1` bound at
/// every probe point.
pub fn build_comb_set(op: &OperatorHandle, placement: &Placement, budget: &CombBudget) -> Result<BuiltComb> {
    budget.validate()?;
    let a = budget.truncated_schedule();
    check_ray(op, placement, budget, &a)?;
    let probe = Probe { op, placement, budget, spectrum: op.spectrum(), memo: RefCell::new(Vec::new()) };
    let k = grid_side(budget.probe_density);
    let sin_alpha = budget.alpha.sin();

    let mut delta: Vec<f64> = Vec::with_capacity(a.len() - 1);
    let mut certificates = Vec::with_capacity(a.len() - 1);
    for n in 0..a.len() - 1 {
        let (x0, x1) = (a[n + 1], a[n]);
        let geometric = CAP_FRACTION * x0 * sin_alpha;
        let passes = |d: f64| probe.rectangle_ratio(x0, x1, d, k).0 <= 1.0;

        // Bisect against the geometric cap alone, so that the result is
        // monotone in C1, then respect the previous half-height.
        let mut bisections = 0;
        let mut found = geometric;
        if !passes(geometric) {
            found = bisect(&passes, geometric, budget.max_bisections, &mut bisections);
        }
        let mut d = match delta.last() {
            Some(&prev) => found.min(CAP_FRACTION * prev),
            None => found,
        };
        if d < found && !passes(d) {
            d = bisect(&passes, d, budget.max_bisections, &mut bisections);
        }
        if d < COLLAPSE_FLOOR {
            return Err(Error::RectangleCollapsed { n: n + 1 });
        }
        let (max_ratio, probes) = probe.rectangle_ratio(x0, x1, d, k);
        certificates.push(RectangleCertificate { index: n + 1, delta: d, probes, max_ratio, bisections });
        delta.push(d);
    }
    let comb = CombSet::new(budget.alpha, a, delta, *placement)?;
    Ok(BuiltComb { comb, certificates })
}

/// Largest `||R(w)|| / (C1 phi(|w|))` over every rectangle of `comb`, probed at
/// `dense_factor` times the build density.
pub fn validate_comb_set(op: &OperatorHandle, comb: &CombSet, budget: &CombBudget, dense_factor: f64) -> f64 {
    let probe =
        Probe { op, placement: comb.placement(), budget, spectrum: op.spectrum(), memo: RefCell::new(Vec::new()) };
    let k = grid_side((budget.probe_density as f64 * dense_factor.max(1.0)).ceil() as usize);
    let a = comb.a();
    comb.delta().iter().enumerate().map(|(n, &d)| probe.rectangle_ratio(a[n + 1], a[n], d, k).0).fold(0.0, f64::max)
}
