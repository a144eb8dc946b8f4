//! Plane geometry: sectors, comb sets, segment/arc contours and winding-number
//! membership.

mod boundary;
mod comb;
mod contour;

pub use boundary::build_boundary_contour;
pub use comb::{comb_to_region, CombSet, Placement, Rectangle};
pub use contour::{chord_arc_constant, point_in_domain, Contour, Domain, Orientation, Piece};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Validated constructor for a finite complex point.
pub fn complex_point(re: f64, im: f64) -> Result<Complex64> {
    if re.is_finite() && im.is_finite() {
        Ok(Complex64::new(re, im))
    } else {
        Err(Error::NonFinitePoint { re, im })
    }
}

pub(crate) fn ensure_finite(z: Complex64) -> Result<Complex64> {
    complex_point(z.re, z.im)
}

/// `e^{i theta}`.
pub fn unit(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// The open sector `{ r * direction * e^{it} : 0 < r < radius, |t| < half_angle }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SectorRepr", into = "SectorRepr")]
pub struct Sector {
    direction: Complex64,
    half_angle: f64,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct SectorRepr {
    #[serde(with = "crate::serde_complex")]
    direction: Complex64,
    half_angle: f64,
    radius: f64,
}

impl TryFrom<SectorRepr> for Sector {
    type Error = Error;
    fn try_from(r: SectorRepr) -> Result<Self> {
        make_sector(r.direction, r.half_angle, r.radius)
    }
}

impl From<Sector> for SectorRepr {
    fn from(s: Sector) -> Self {
        SectorRepr { direction: s.direction, half_angle: s.half_angle, radius: s.radius }
    }
}

pub fn make_sector(direction: Complex64, half_angle: f64, radius: f64) -> Result<Sector> {
    ensure_finite(direction)?;
    if (direction.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("sector direction must be unit, |direction| = {}", direction.norm())));
    }
    if !(half_angle > 0.0 && half_angle <= PI) {
        return Err(Error::InvalidInput(format!("sector half-angle {half_angle} outside (0, pi]")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("sector radius {radius} must be positive")));
    }
    Ok(Sector { direction, half_angle, radius })
}

impl Sector {
    pub fn direction(&self) -> Complex64 {
        self.direction
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Angle of `z` measured from the sector axis, in `(-pi, pi]`.
    pub fn local_angle(&self, z: Complex64) -> f64 {
        (self.direction.conj() * z).arg()
    }

    /// Open-sector membership.
    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r > 0.0 && r < self.radius && self.local_angle(z).abs() < self.half_angle
    }

    /// Unit vector along the boundary ray `direction * e^{i sign half_angle}`.
    pub fn ray(&self, sign: i8) -> Complex64 {
        self.direction * unit(f64::from(sign) * self.half_angle)
    }

    /// Angular distance between the two sector axes minus both half-angles;
    /// non-negative exactly when the open sectors are disjoint.
    pub fn angular_gap(&self, other: &Sector) -> f64 {
        let axis_gap = (self.direction.conj() * other.direction).arg().abs();
        axis_gap - self.half_angle - other.half_angle
    }

    pub fn with_radius(&self, radius: f64) -> Result<Sector> {
        make_sector(self.direction, self.half_angle, radius)
    }
}
