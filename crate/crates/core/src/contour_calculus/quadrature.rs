//! Adaptive composite 5-point Gauss-Legendre quadrature of vector-valued
//! integrands along contour pieces.

use num_complex::Complex64;
use std::sync::OnceLock;

use crate::complex_plane::Piece;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MAX_DEPTH: usize = 48;
/// A halving counts as stagnant when the estimate shrinks by less than
/// `STAGNATION_RATIO` although it is already below `NOISE_RELATIVE` of the
/// panel's absolute integral. Panels whose ancestry holds `STAGNANT_LEVELS`
/// stagnant halvings are accepted as roundoff noise and flagged unresolved.
const STAGNATION_RATIO: f64 = 0.25;
const NOISE_RELATIVE: f64 = 1e-4;
const STAGNANT_LEVELS: u8 = 5;

fn gl5() -> &'static ([f64; 5], [f64; 5]) {
    static RULE: OnceLock<([f64; 5], [f64; 5])> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = crate::linalg::gauss_legendre(5);
        let mut nodes = [0.0; 5];
        let mut weights = [0.0; 5];
        nodes.copy_from_slice(&x);
        weights.copy_from_slice(&w);
        (nodes, weights)
    })
}

/// Arc-length window `[s0, s1]` of a piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub piece: Piece,
    pub s0: f64,
    pub s1: f64,
}

impl Interval {
    pub fn whole(piece: Piece) -> Self {
        Interval { piece, s0: 0.0, s1: piece.length() }
    }

    pub fn length(&self) -> f64 {
        self.s1 - self.s0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Target for the summed error estimate.
    pub tol: f64,
    /// Initial panels are no longer than this.
    pub max_panel_length: f64,
    /// Grade initial panels so that none is longer than half its distance to
    /// the origin.
    pub grade_toward_origin: bool,
    /// Halve panels until the estimate meets the tolerance. When false the
    /// initial partition is used as is.
    pub adaptive: bool,
    pub max_panels: usize,
}

impl QuadratureOptions {
    pub fn new(tol: f64) -> Self {
        QuadratureOptions {
            tol,
            max_panel_length: f64::INFINITY,
            grade_toward_origin: false,
            adaptive: true,
            max_panels: 400_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureOutcome {
    pub value: Vec<Complex64>,
    /// Sum over accepted panels of `||fine - coarse||`.
    pub error_estimate: f64,
    /// Integral of the integrand norm, for roundoff floors.
    pub abs_integral: f64,
    pub panels: usize,
    pub evaluations: usize,
    pub max_panel_length: f64,
}

/// Neumaier-compensated accumulator.
struct Accumulator {
    sum: Vec<Complex64>,
    comp: Vec<Complex64>,
}

impl Accumulator {
    fn new(dim: usize) -> Self {
        Accumulator { sum: vec![ZERO; dim], comp: vec![ZERO; dim] }
    }

    fn add(&mut self, v: &[Complex64]) {
        for ((s, c), &x) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(v) {
            c.re += two_sum(&mut s.re, x.re);
            c.im += two_sum(&mut s.im, x.im);
        }
    }

    fn finish(self) -> Vec<Complex64> {
        self.sum.into_iter().zip(self.comp).map(|(s, c)| s + c).collect()
    }
}

fn two_sum(s: &mut f64, x: f64) -> f64 {
    let t = *s + x;
    let err = if s.abs() >= x.abs() { (*s - t) + x } else { (x - t) + *s };
    *s = t;
    err
}

fn diff_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn initial_panels(intervals: &[Interval], opts: &QuadratureOptions) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for (k, iv) in intervals.iter().enumerate() {
        if iv.length() <= 0.0 {
            continue;
        }
        let mut cuts = vec![iv.s0];
        if opts.grade_toward_origin {
            let mut stack = vec![(iv.s0, iv.s1)];
            let mut leaves = Vec::new();
            while let Some((a, b)) = stack.pop() {
                let d = iv.piece.point_at(a).norm().min(iv.piece.point_at(b).norm());
                if b - a > 0.5 * d && b - a > 1e-14 * iv.length() && leaves.len() + stack.len() < 4096 {
                    let m = 0.5 * (a + b);
                    stack.push((m, b));
                    stack.push((a, m));
                } else {
                    leaves.push(b);
                }
            }
            cuts.extend(leaves);
        } else {
            cuts.push(iv.s1);
        }
        for w in cuts.windows(2) {
            let n = ((w[1] - w[0]) / opts.max_panel_length).ceil().max(1.0) as usize;
            for j in 0..n {
                let a = w[0] + (w[1] - w[0]) * j as f64 / n as f64;
                let b = w[0] + (w[1] - w[0]) * (j + 1) as f64 / n as f64;
                out.push((k, a, b));
            }
        }
    }
    out
}

struct Engine<'a, F> {
    intervals: &'a [Interval],
    f: F,
    buf: Vec<Complex64>,
    evaluations: usize,
}

impl<F> Engine<'_, F>
where
    F: FnMut(Complex64, &mut [Complex64]) -> Result<()>,
{
    /// GL5 over `[a, b]` of piece `k`; returns the value and the integral of
    /// the integrand norm.
    fn rule(&mut self, k: usize, a: f64, b: f64) -> Result<(Vec<Complex64>, f64)> {
        let (x, w) = gl5();
        let piece = self.intervals[k].piece;
        let half = 0.5 * (b - a);
        let mut out = vec![ZERO; self.buf.len()];
        let mut abs = 0.0;
        for i in 0..5 {
            let s = a + half * (1.0 + x[i]);
            let z = piece.point_at(s);
            let dz = piece.tangent_at(s) * (w[i] * half);
            (self.f)(z, &mut self.buf)?;
            self.evaluations += 1;
            let mut norm2 = 0.0;
            for (o, v) in out.iter_mut().zip(&self.buf) {
                *o += v * dz;
                norm2 += v.norm_sqr();
            }
            abs += w[i] * half * norm2.sqrt();
        }
        Ok((out, abs))
    }
}

/// Integrate `f(z) dz` over the intervals.
pub fn integrate<F>(intervals: &[Interval], dim: usize, opts: &QuadratureOptions, f: F) -> Result<QuadratureOutcome>
where
    F: FnMut(Complex64, &mut [Complex64]) -> Result<()>,
{
    let total_length: f64 = intervals.iter().map(|iv| iv.length().max(0.0)).sum();
    let mut engine = Engine { intervals, f, buf: vec![ZERO; dim], evaluations: 0 };
    let mut acc = Accumulator::new(dim);
    let mut error_estimate = 0.0;
    let mut abs_integral = 0.0;
    let mut panels = 0;
    let mut max_len: f64 = 0.0;
    let mut unresolved = false;

    for (k, a, b) in initial_panels(intervals, opts) {
        let (coarse, _) = engine.rule(k, a, b)?;
        let mut stack = vec![(a, b, coarse, 0usize, f64::INFINITY, 0u8)];
        while let Some((a, b, coarse, depth, parent_err, stagnant)) = stack.pop() {
            let m = 0.5 * (a + b);
            let (left, abs_l) = engine.rule(k, a, m)?;
            let (right, abs_r) = engine.rule(k, m, b)?;
            let fine: Vec<Complex64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
            let err = diff_norm(&fine, &coarse);
            let abs = abs_l + abs_r;
            let allowed = opts.tol * (b - a) / total_length;
            let floor = 100.0 * f64::EPSILON * abs;
            let converged = err <= allowed || err <= floor;
            let stagnant = stagnant + u8::from(err > STAGNATION_RATIO * parent_err && err <= NOISE_RELATIVE * abs);
            if !opts.adaptive
                || converged
                || depth >= MAX_DEPTH
                || stagnant >= STAGNANT_LEVELS
                || b - a <= 1e-15 * total_length
            {
                if opts.adaptive && !converged {
                    unresolved = true;
                }
                acc.add(&fine);
                error_estimate += err;
                abs_integral += abs;
                panels += 1;
                max_len = max_len.max(b - a);
            } else {
                stack.push((m, b, right, depth + 1, err, stagnant));
                stack.push((a, m, left, depth + 1, err, stagnant));
            }
            if panels + stack.len() > opts.max_panels {
                return Err(Error::QuadratureStalled { estimate: error_estimate, tol: opts.tol, panels });
            }
        }
    }
    let floor = 100.0 * f64::EPSILON * abs_integral;
    if unresolved && error_estimate > opts.tol.max(floor) {
        return Err(Error::QuadratureStalled { estimate: error_estimate, tol: opts.tol, panels });
    }
    Ok(QuadratureOutcome {
        value: acc.finish(),
        error_estimate,
        abs_integral,
        panels,
        evaluations: engine.evaluations,
        max_panel_length: max_len,
    })
}

/// Arc-length windows of `piece` at distance at least `r` from the origin,
/// together with the windows that were removed.
pub fn split_by_radius(piece: &Piece, r: f64) -> (Vec<Interval>, Vec<Interval>) {
    let len = piece.length();
    let mut removed: Vec<(f64, f64)> = Vec::new();
    match *piece {
        Piece::Segment { start, end } => {
            if len > 0.0 {
                let u = (end - start) / len;
                // |start + u s|² = s² + 2 b s + c
                let b = (start.conj() * u).re;
                let c = start.norm_sqr() - r * r;
                let disc = b * b - c;
                if disc > 0.0 {
                    let q = disc.sqrt();
                    let (lo, hi) = ((-b - q).max(0.0), (-b + q).min(len));
                    if lo < hi {
                        removed.push((lo, hi));
                    }
                }
            }
        }
        Piece::Arc { center, radius, theta0, theta1 } => {
            let a = center.norm_sqr() + radius * radius;
            let b = 2.0 * radius * center.norm();
            let dir = (theta1 - theta0).signum();
            if b == 0.0 {
                if radius < r {
                    removed.push((0.0, len));
                }
            } else {
                let kappa = (r * r - a) / b;
                if kappa >= 1.0 {
                    removed.push((0.0, len));
                } else if kappa > -1.0 {
                    // |z|² < r² where cos(theta - arg(center)) < kappa.
                    let gamma = kappa.acos();
                    let phi = center.arg();
                    for k in -3..=3 {
                        let lo_t = phi + gamma + std::f64::consts::TAU * k as f64;
                        let hi_t = phi + std::f64::consts::TAU - gamma + std::f64::consts::TAU * k as f64;
                        let (s_a, s_b) = ((lo_t - theta0) * dir * radius, (hi_t - theta0) * dir * radius);
                        let (lo, hi) = (s_a.min(s_b).max(0.0), s_a.max(s_b).min(len));
                        if lo < hi {
                            removed.push((lo, hi));
                        }
                    }
                    removed.sort_by(|x, y| x.0.total_cmp(&y.0));
                }
            }
        }
    }
    let mut kept = Vec::new();
    let mut cursor = 0.0;
    for &(lo, hi) in &removed {
        if lo > cursor {
            kept.push(Interval { piece: *piece, s0: cursor, s1: lo });
        }
        cursor = cursor.max(hi);
    }
    if cursor < len {
        kept.push(Interval { piece: *piece, s0: cursor, s1: len });
    }
    let dropped = removed.into_iter().map(|(s0, s1)| Interval { piece: *piece, s0, s1 }).collect();
    (kept, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex_plane::Contour;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(contour: &Contour, opts: &QuadratureOptions, g: impl Fn(Complex64) -> Complex64) -> QuadratureOutcome {
        let iv: Vec<Interval> = contour.pieces().iter().copied().map(Interval::whole).collect();
        integrate(&iv, 1, opts, |z, out| {
            out[0] = g(z);
            Ok(())
        })
        .unwrap()
    }

    #[test]
    fn cauchy_on_circle() {
        let circle = Contour::circle(c(0.2, -0.1), 1.3).unwrap();
        let opts = QuadratureOptions::new(1e-13);
        let r = scalar(&circle, &opts, |z| 1.0 / (z - c(0.5, 0.3)));
        assert!((r.value[0] / (2.0 * PI * Complex64::i()) - 1.0).norm() < 1e-12);
        let moment = scalar(&circle, &opts, |z| z * z);
        assert!(moment.value[0].norm() < 1e-12);
    }

    #[test]
    fn segment_integral_of_exponential() {
        let seg = Piece::segment(c(0.0, 0.0), c(1.0, 1.0));
        let iv = [Interval::whole(seg)];
        let r = integrate(&iv, 1, &QuadratureOptions::new(1e-13), |z, out| {
            out[0] = z.exp();
            Ok(())
        })
        .unwrap();
        assert!((r.value[0] - (c(1.0, 1.0).exp() - 1.0)).norm() < 1e-13);
    }

    #[test]
    fn noise_below_tolerance_fails_fast() {
        let seg = Piece::segment(c(0.0, 0.0), c(1.0, 0.0));
        let iv = [Interval::whole(seg)];
        let mut state: u64 = 7;
        let outcome = integrate(&iv, 1, &QuadratureOptions::new(1e-14), |_, out| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let jitter = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            out[0] = c(1.0 + 1e-8 * jitter, 0.0);
            Ok(())
        });
        match outcome {
            Err(Error::QuadratureStalled { panels, .. }) => assert!(panels < 1000, "{panels}"),
            other => panic!("expected a stall, got {other:?}"),
        }
        let relaxed = integrate(&iv, 1, &QuadratureOptions::new(1e-6), |_, out| {
            out[0] = c(1.0, 0.0);
            Ok(())
        })
        .unwrap();
        assert!((relaxed.value[0] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn halving_panels_cuts_the_estimate() {
        let circle = Contour::circle(c(0.0, 0.0), 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..4 {
            let opts = QuadratureOptions {
                max_panel_length: 1.0 / 2f64.powi(k),
                adaptive: false,
                ..QuadratureOptions::new(1.0)
            };
            let r = scalar(&circle, &opts, |z| (1.0 / (z - c(1.4, 0.0))).powi(2));
            assert!(r.error_estimate <= 0.5 * prev, "k = {k}: {} vs {prev}", r.error_estimate);
            prev = r.error_estimate;
        }
    }

    #[test]
    fn segment_split_by_radius() {
        let seg = Piece::segment(c(-1.0, 0.1), c(1.0, 0.1));
        let (kept, dropped) = split_by_radius(&seg, 0.2);
        assert_eq!(kept.len(), 2);
        let removed: f64 = dropped.iter().map(|d| d.length()).sum();
        assert!((removed - 2.0 * (0.04f64 - 0.01).sqrt()).abs() < 1e-14);
        let into_origin = Piece::segment(c(1.0, 1.0), c(0.0, 0.0));
        let (kept, _) = split_by_radius(&into_origin, 0.5);
        assert_eq!(kept.len(), 1);
        assert!((kept[0].s1 - (2f64.sqrt() - 0.5)).abs() < 1e-14);
    }

    #[test]
    fn arc_split_by_radius() {
        // Unit circle about 1 passes through the origin at theta = pi.
        let arc = Piece::arc(c(1.0, 0.0), 1.0, 0.0, 2.0 * PI);
        let (kept, dropped) = split_by_radius(&arc, 0.1);
        assert_eq!(dropped.len(), 1);
        for iv in &kept {
            for j in 0..=20 {
                let s = iv.s0 + iv.length() * j as f64 / 20.0;
                assert!(arc.point_at(s).norm() >= 0.1 - 1e-12);
            }
        }
        let mid = 0.5 * (dropped[0].s0 + dropped[0].s1);
        assert!(arc.point_at(mid).norm() < 1e-12);
    }

    #[test]
    fn grading_refines_toward_origin() {
        let seg = Piece::segment(c(1.0, 0.0), c(1e-6, 0.0));
        let opts = QuadratureOptions { grade_toward_origin: true, ..QuadratureOptions::new(1e-12) };
        let panels = initial_panels(&[Interval::whole(seg)], &opts);
        assert!(panels.len() > 15 && panels.len() < 80);
        let r = integrate(&[Interval::whole(seg)], 1, &opts, |z, out| {
            out[0] = 1.0 / z;
            Ok(())
        })
        .unwrap();
        assert!((r.value[0] + (1e6f64).ln()).norm() < 1e-10);
    }
}
