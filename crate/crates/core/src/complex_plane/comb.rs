use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use super::unit;
use crate::error::{Error, Result};

/// Where a comb sits: on the ray `zeta * e^{i sign ray_angle}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    #[serde(with = "crate::serde_complex")]
    pub zeta: Complex64,
    pub sign: i8,
    pub ray_angle: f64,
}

impl Placement {
    pub fn new(zeta: Complex64, sign: i8, ray_angle: f64) -> Result<Self> {
        if (zeta.norm() - 1.0).abs() > 1e-12 || !zeta.re.is_finite() || !zeta.im.is_finite() {
            return Err(Error::InvalidInput("placement direction must be unit".into()));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidInput(format!("placement sign must be +1 or -1, got {sign}")));
        }
        if !ray_angle.is_finite() {
            return Err(Error::InvalidInput("placement ray angle must be finite".into()));
        }
        Ok(Placement { zeta, sign, ray_angle })
    }

    /// Unit vector along the ray.
    pub fn ray(&self) -> Complex64 {
        self.zeta * unit(f64::from(self.sign) * self.ray_angle)
    }

    /// Map ray coordinates `(x, y)` to the plane.
    pub fn to_plane(&self, x: f64, y: f64) -> Complex64 {
        self.ray() * Complex64::new(x, y)
    }

    /// Inverse of [`Placement::to_plane`].
    pub fn to_ray_coords(&self, z: Complex64) -> (f64, f64) {
        let w = self.ray().conj() * z;
        (w.re, w.im)
    }

    /// Sign of the ray-coordinate `y` that points into the sector the ray bounds.
    pub fn inward(&self) -> f64 {
        -f64::from(self.sign)
    }

    pub fn coincides_with(&self, other: &Placement) -> bool {
        (self.ray() - other.ray()).norm() < 1e-12
    }
}

/// Union of rectangles `[a_{n+1}, a_n] x [-delta_n, delta_n]` in ray coordinates.
///
/// `a` has one more entry than `delta`; rectangle `n` (zero based) spans
/// `a[n+1] <= x <= a[n]` with half-height `delta[n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CombRepr", into = "CombRepr")]
pub struct CombSet {
    alpha: f64,
    a: Vec<f64>,
    delta: Vec<f64>,
    placement: Placement,
}

#[derive(Serialize, Deserialize)]
struct CombRepr {
    alpha: f64,
    a: Vec<f64>,
    delta: Vec<f64>,
    placement: Placement,
}

impl TryFrom<CombRepr> for CombSet {
    type Error = Error;
    fn try_from(r: CombRepr) -> Result<Self> {
        CombSet::new(r.alpha, r.a, r.delta, r.placement)
    }
}

impl From<CombSet> for CombRepr {
    fn from(c: CombSet) -> Self {
        CombRepr { alpha: c.alpha, a: c.a, delta: c.delta, placement: c.placement }
    }
}

impl CombSet {
    pub fn new(alpha: f64, a: Vec<f64>, delta: Vec<f64>, placement: Placement) -> Result<Self> {
        if !(alpha > 0.0 && alpha < FRAC_PI_2) {
            return Err(Error::InvalidInput(format!("comb opening angle {alpha} outside (0, pi/2)")));
        }
        if a.len() != delta.len() + 1 || delta.is_empty() {
            return Err(Error::InvalidInput(format!(
                "comb needs len(a) = len(delta) + 1 >= 2, got {} and {}",
                a.len(),
                delta.len()
            )));
        }
        if (a[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("comb schedule must start at a_1 = 1, got {}", a[0])));
        }
        for n in 0..delta.len() {
            if !(a[n + 1] > 0.0 && a[n + 1] < a[n]) {
                return Err(Error::InvalidInput(format!(
                    "comb schedule not strictly decreasing at n = {}: {} then {}",
                    n + 1,
                    a[n],
                    a[n + 1]
                )));
            }
            let cap = a[n + 1] * alpha.sin();
            let d = delta[n];
            if !(d > 0.0 && d < cap) {
                return Err(Error::InvalidInput(format!(
                    "delta_{} = {d} violates 0 < delta < a_(n+1) sin(alpha) = {cap}",
                    n + 1
                )));
            }
            if n > 0 && d >= delta[n - 1] {
                return Err(Error::InvalidInput(format!(
                    "delta_{} = {d} is not below delta_{} = {}",
                    n + 1,
                    n,
                    delta[n - 1]
                )));
            }
        }
        Ok(CombSet { alpha, a, delta, placement })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    /// Number of rectangles.
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// Smallest radius reached by the rectangles.
    pub fn inner_radius(&self) -> f64 {
        *self.a.last().expect("non-empty schedule")
    }

    /// Does the closed comb contain `z`?
    pub fn contains(&self, z: Complex64) -> bool {
        let (x, y) = self.placement.to_ray_coords(z);
        (0..self.len()).any(|n| x >= self.a[n + 1] && x <= self.a[n] && y.abs() <= self.delta[n])
    }
}

/// A rectangle in the plane, vertices listed counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    #[serde(with = "crate::serde_complex::array4")]
    pub vertices: [Complex64; 4],
}

impl Rectangle {
    pub fn side_lengths(&self) -> [f64; 4] {
        let v = &self.vertices;
        [(v[1] - v[0]).norm(), (v[2] - v[1]).norm(), (v[3] - v[2]).norm(), (v[0] - v[3]).norm()]
    }

    /// Closed-rectangle membership.
    pub fn contains(&self, z: Complex64) -> bool {
        let v = &self.vertices;
        (0..4).all(|i| {
            let e = v[(i + 1) % 4] - v[i];
            let w = z - v[i];
            e.re * w.im - e.im * w.re >= -1e-15
        })
    }

    /// Do two closed convex quadrilaterals share a point?
    pub fn intersects(&self, other: &Rectangle) -> bool {
        // Separating-axis test over the edge normals of both rectangles.
        let axes = self.edge_normals().into_iter().chain(other.edge_normals());
        for axis in axes {
            let (lo1, hi1) = project(&self.vertices, axis);
            let (lo2, hi2) = project(&other.vertices, axis);
            if hi1 < lo2 || hi2 < lo1 {
                return false;
            }
        }
        true
    }

    fn edge_normals(&self) -> [Complex64; 4] {
        let v = &self.vertices;
        std::array::from_fn(|i| (v[(i + 1) % 4] - v[i]) * Complex64::i())
    }
}

fn project(vertices: &[Complex64; 4], axis: Complex64) -> (f64, f64) {
    vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let t = v.re * axis.re + v.im * axis.im;
        (lo.min(t), hi.max(t))
    })
}

/// Plane images of the comb rectangles under multiplication by
/// `zeta * e^{i sign ray_angle}`.
pub fn comb_to_region(comb: &CombSet) -> Vec<Rectangle> {
    let p = comb.placement();
    (0..comb.len())
        .map(|n| {
            let (x0, x1, d) = (comb.a[n + 1], comb.a[n], comb.delta[n]);
            Rectangle { vertices: [p.to_plane(x0, -d), p.to_plane(x1, -d), p.to_plane(x1, d), p.to_plane(x0, d)] }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn single(placement: Placement, d: f64) -> CombSet {
        CombSet::new(PI / 4.0, vec![1.0, 0.5], vec![d], placement).unwrap()
    }

    #[test]
    fn identity_placement_keeps_rectangle() {
        let comb = single(Placement::new(one(), 1, 0.0).unwrap(), 0.1);
        let r = comb_to_region(&comb);
        assert_eq!(r.len(), 1);
        let expect =
            [Complex64::new(0.5, -0.1), Complex64::new(1.0, -0.1), Complex64::new(1.0, 0.1), Complex64::new(0.5, 0.1)];
        for (v, e) in r[0].vertices.iter().zip(expect) {
            assert!((v - e).norm() < 1e-15);
        }
    }

    #[test]
    fn quarter_turn_multiplies_by_i() {
        let base = comb_to_region(&single(Placement::new(one(), 1, 0.0).unwrap(), 0.1));
        let turned = comb_to_region(&single(Placement::new(one(), 1, PI / 2.0).unwrap(), 0.1));
        for (v, w) in base[0].vertices.iter().zip(turned[0].vertices) {
            assert!((v * Complex64::i() - w).norm() < 1e-15);
        }
    }

    #[test]
    fn rotated_negative_sign_placement() {
        let p = Placement::new(Complex64::i(), -1, PI / 4.0).unwrap();
        let r = comb_to_region(&single(p, 0.1));
        let rot = Complex64::i() * unit(-PI / 4.0);
        let src =
            [Complex64::new(0.5, -0.1), Complex64::new(1.0, -0.1), Complex64::new(1.0, 0.1), Complex64::new(0.5, 0.1)];
        for (v, s) in r[0].vertices.iter().zip(src) {
            assert!((v - s * rot).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_decreasing_schedule() {
        let p = Placement::new(one(), 1, 0.0).unwrap();
        assert!(CombSet::new(0.5, vec![1.0, 1.0], vec![0.1], p).is_err());
        assert!(CombSet::new(0.5, vec![1.0, 0.5, 0.6], vec![0.1, 0.05], p).is_err());
    }

    #[test]
    fn rejects_cap_violations() {
        let p = Placement::new(one(), 1, 0.0).unwrap();
        let cap = 0.5 * (0.5f64).sin();
        assert!(CombSet::new(0.5, vec![1.0, 0.5], vec![cap], p).is_err());
        assert!(CombSet::new(0.5, vec![1.0, 0.5, 0.25], vec![0.1, 0.1], p).is_err());
        assert!(CombSet::new(0.5, vec![1.0, 0.5, 0.25], vec![0.1, 0.09], p).is_ok());
    }

    #[test]
    fn rectangle_overlap_detection() {
        let p = Placement::new(one(), 1, 0.0).unwrap();
        let a = comb_to_region(&single(p, 0.1))[0];
        let b = Rectangle { vertices: a.vertices.map(|v| v + Complex64::new(0.4, 0.0)) };
        let c = Rectangle { vertices: a.vertices.map(|v| v + Complex64::new(0.0, 0.3)) };
        assert!(a.intersects(&b));
        assert!(!a.intersects(&c));
        assert_relative_eq!(a.side_lengths()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn comb_json_round_trip() {
        let comb = single(Placement::new(unit(0.2), -1, 0.6).unwrap(), 0.1);
        let text = serde_json::to_string(&comb).unwrap();
        let back: CombSet = serde_json::from_str(&text).unwrap();
        assert_eq!(comb, back);
    }
}
