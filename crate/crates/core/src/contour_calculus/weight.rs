use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Points with `|arg(conj(zeta) z)|` above `PI - CUT_GUARD` are refused.
pub const CUT_GUARD: f64 = 1e-9;

/// `h(z) = exp(-c / (conj(zeta) z)^p)` on the principal branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WeightFunction {
    #[serde(with = "crate::serde_complex")]
    pub zeta: Complex64,
    pub p: f64,
    pub c: f64,
}

impl WeightFunction {
    pub fn new(zeta: Complex64, p: f64, c: f64) -> Result<Self> {
        if !((zeta.norm() - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidInput(format!("weight direction must be unimodular, |zeta| = {}", zeta.norm())));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("weight exponent must be positive, got {p}")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("weight coefficient must be non-negative, got {c}")));
        }
        Ok(WeightFunction { zeta, p, c })
    }

    /// Weight for a sector of half-angle `beta_k` about `zeta` inside the
    /// aperture `beta`: `p = pi / (2 beta)` and `c = c0 / cos(p beta_k)`, so
    /// that `|h| = exp(-c0 / r^p)` on the sector's edges.
    pub fn for_sector(zeta: Complex64, beta_k: f64, beta: f64, c0: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= PI && beta_k > 0.0 && beta_k < beta) {
            return Err(Error::InvalidInput(format!(
                "need 0 < beta_k < beta <= pi, got beta_k = {beta_k}, beta = {beta}"
            )));
        }
        let p = PI / (2.0 * beta);
        WeightFunction::new(zeta, p, c0 / (p * beta_k).cos())
    }

    /// `h²`
    pub fn squared(&self) -> Self {
        WeightFunction { c: 2.0 * self.c, ..*self }
    }

    /// `|h(r zeta e^{it})|`
    pub fn modulus(&self, r: f64, t: f64) -> f64 {
        (-self.c * (self.p * t).cos() / r.powf(self.p)).exp()
    }
}

pub fn eval_weight(w: &WeightFunction, z: Complex64) -> Result<Complex64> {
    let u = w.zeta.conj() * z;
    let r = u.norm();
    if r == 0.0 {
        return Ok(if w.c > 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(1.0, 0.0) });
    }
    let t = u.arg();
    if t.abs() > PI - CUT_GUARD {
        return Err(Error::BranchCut { arg: t });
    }
    // u^{-p} = r^{-p} e^{-i p t}
    let scale = w.c / r.powf(w.p);
    let exponent = Complex64::new(-scale * (w.p * t).cos(), scale * (w.p * t).sin());
    Ok(exponent.exp())
}

/// A bounded analytic multiplier `g`.
#[derive(Clone)]
pub enum Multiplier {
    /// Coefficients in ascending degree.
    Polynomial(Vec<Complex64>),
    /// Opaque evaluation callback.
    Function(Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplier::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            Multiplier::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Multiplier {
    pub fn one() -> Self {
        Multiplier::Polynomial(vec![Complex64::new(1.0, 0.0)])
    }

    pub fn monomial(n: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[n] = Complex64::new(1.0, 0.0);
        Multiplier::Polynomial(c)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Multiplier::Polynomial(c) => c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a),
            Multiplier::Function(f) => f(z),
        }
    }

    /// `z^n g(z)`
    pub fn times_monomial(&self, n: usize) -> Self {
        match self {
            Multiplier::Polynomial(c) => {
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                out.extend_from_slice(c);
                Multiplier::Polynomial(out)
            }
            Multiplier::Function(f) => {
                let f = Arc::clone(f);
                Multiplier::Function(Arc::new(move |z| z.powu(n as u32) * f(z)))
            }
        }
    }

    pub fn product(&self, other: &Multiplier) -> Self {
        match (self, other) {
            (Multiplier::Polynomial(a), Multiplier::Polynomial(b)) => {
                let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
                for (i, x) in a.iter().enumerate() {
                    for (j, y) in b.iter().enumerate() {
                        out[i + j] += x * y;
                    }
                }
                Multiplier::Polynomial(out)
            }
            _ => {
                let (f, g) = (self.clone(), other.clone());
                Multiplier::Function(Arc::new(move |z| f.eval(z) * g.eval(z)))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
enum MultiplierRepr {
    Polynomial(#[serde(with = "crate::serde_complex::vec")] Vec<Complex64>),
    Function(String),
}

impl Serialize for Multiplier {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Multiplier::Polynomial(c) => MultiplierRepr::Polynomial(c.clone()).serialize(s),
            Multiplier::Function(_) => MultiplierRepr::Function("callback".into()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Multiplier {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match MultiplierRepr::deserialize(d)? {
            MultiplierRepr::Polynomial(c) if !c.is_empty() => Ok(Multiplier::Polynomial(c)),
            MultiplierRepr::Polynomial(_) => Err(serde::de::Error::custom("polynomial multiplier needs a coefficient")),
            MultiplierRepr::Function(_) => {
                Err(serde::de::Error::custom("callback multipliers cannot be loaded from text"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_axis_value() {
        let w = WeightFunction::new(c(1.0, 0.0), 1.0, 1.0).unwrap();
        assert_relative_eq!(eval_weight(&w, c(0.5, 0.0)).unwrap().re, (-2.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!((-2.0f64).exp(), 0.135335, epsilon = 1e-6);
    }

    #[test]
    fn modulus_on_a_ray() {
        let w = WeightFunction::new(c(1.0, 0.0), 1.0, 1.0).unwrap();
        let z = Complex64::from_polar(0.5, PI / 3.0);
        assert_relative_eq!(eval_weight(&w, z).unwrap().norm(), (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn sector_edge_modulus() {
        let beta = PI / 2.0;
        let beta_k = 1.2;
        let c0 = 0.7;
        let zeta = Complex64::from_polar(1.0, 0.4);
        let w = WeightFunction::for_sector(zeta, beta_k, beta, c0).unwrap();
        for r in [0.9, 0.3, 0.05] {
            for sign in [-1.0, 1.0] {
                let z = zeta * Complex64::from_polar(r, sign * beta_k);
                assert_relative_eq!(eval_weight(&w, z).unwrap().norm(), (-c0 / r).exp(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn cut_is_refused() {
        let w = WeightFunction::new(c(1.0, 0.0), 1.0, 1.0).unwrap();
        assert!(matches!(eval_weight(&w, c(-0.5, 0.0)), Err(Error::BranchCut { .. })));
        assert!(eval_weight(&w, c(-0.5, 1e-6)).is_ok());
    }

    #[test]
    fn multiplier_algebra() {
        let g = Multiplier::Polynomial(vec![c(1.0, 0.0), c(0.0, 2.0)]);
        let z = c(0.3, -0.7);
        assert!((g.times_monomial(2).eval(z) - z * z * g.eval(z)).norm() < 1e-15);
        assert!((g.product(&g).eval(z) - g.eval(z) * g.eval(z)).norm() < 1e-15);
        let f = Multiplier::Function(Arc::new(|z: Complex64| z.exp()));
        assert!((f.times_monomial(3).eval(z) - z.powu(3) * z.exp()).norm() < 1e-14);
        assert!((f.product(&g).eval(z) - z.exp() * g.eval(z)).norm() < 1e-14);
    }

    #[test]
    fn multiplier_serde() {
        let g = Multiplier::monomial(2);
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(text, r#"{"polynomial":[[0.0,0.0],[0.0,0.0],[1.0,0.0]]}"#);
        let back: Multiplier = serde_json::from_str(&text).unwrap();
        assert!((back.eval(c(2.0, 0.0)) - 4.0).norm() == 0.0);
        assert!(serde_json::from_str::<Multiplier>(r#"{"function":"x"}"#).is_err());
    }
}
