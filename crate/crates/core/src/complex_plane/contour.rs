use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use super::ensure_finite;
use crate::error::{Error, Result};

/// Slack used by closure, contiguity and simplicity tests.
pub const GEOMETRY_SLACK: f64 = 1e-12;

/// One smooth oriented piece of a contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Piece {
    Segment {
        #[serde(with = "crate::serde_complex")]
        start: Complex64,
        #[serde(with = "crate::serde_complex")]
        end: Complex64,
    },
    /// Circular arc `center + radius e^{i theta}` for theta running from
    /// `theta0` to `theta1` (clockwise when `theta1 < theta0`).
    Arc {
        #[serde(with = "crate::serde_complex")]
        center: Complex64,
        radius: f64,
        theta0: f64,
        theta1: f64,
    },
}

impl Piece {
    pub fn segment(start: Complex64, end: Complex64) -> Piece {
        Piece::Segment { start, end }
    }

    pub fn arc(center: Complex64, radius: f64, theta0: f64, theta1: f64) -> Piece {
        Piece::Arc { center, radius, theta0, theta1 }
    }

    pub fn start(&self) -> Complex64 {
        match *self {
            Piece::Segment { start, .. } => start,
            Piece::Arc { center, radius, theta0, .. } => center + Complex64::from_polar(radius, theta0),
        }
    }

    pub fn end(&self) -> Complex64 {
        match *self {
            Piece::Segment { end, .. } => end,
            Piece::Arc { center, radius, theta1, .. } => center + Complex64::from_polar(radius, theta1),
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Piece::Segment { start, end } => (end - start).norm(),
            Piece::Arc { radius, theta0, theta1, .. } => radius * (theta1 - theta0).abs(),
        }
    }

    /// Point at arc length `s` from the start.
    pub fn point_at(&self, s: f64) -> Complex64 {
        match *self {
            Piece::Segment { start, end } => {
                let len = (end - start).norm();
                if len == 0.0 {
                    start
                } else {
                    start + (end - start) * (s / len)
                }
            }
            Piece::Arc { center, radius, theta0, theta1 } => {
                let dir = (theta1 - theta0).signum();
                center + Complex64::from_polar(radius, theta0 + dir * s / radius)
            }
        }
    }

    /// Unit tangent `dz/ds` at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Complex64 {
        match *self {
            Piece::Segment { start, end } => {
                let d = end - start;
                d / d.norm()
            }
            Piece::Arc { radius, theta0, theta1, .. } => {
                let dir = (theta1 - theta0).signum();
                Complex64::i() * dir * Complex64::from_polar(1.0, theta0 + dir * s / radius)
            }
        }
    }

    /// Restriction to arc-length window `[s0, s1]`.
    pub fn sub(&self, s0: f64, s1: f64) -> Piece {
        match *self {
            Piece::Segment { .. } => Piece::segment(self.point_at(s0), self.point_at(s1)),
            Piece::Arc { center, radius, theta0, theta1 } => {
                let dir = (theta1 - theta0).signum();
                Piece::arc(center, radius, theta0 + dir * s0 / radius, theta0 + dir * s1 / radius)
            }
        }
    }

    /// Twice the signed area contribution `int x dy - y dx`.
    fn area_term(&self) -> f64 {
        match *self {
            Piece::Segment { start, end } => start.re * end.im - start.im * end.re,
            Piece::Arc { center, radius, theta0, theta1 } => {
                radius * radius * (theta1 - theta0) + center.re * radius * (theta1.sin() - theta0.sin())
                    - center.im * radius * (theta1.cos() - theta0.cos())
            }
        }
    }

    /// Euclidean distance from `p` to the piece.
    pub fn distance_to(&self, p: Complex64) -> f64 {
        match *self {
            Piece::Segment { start, end } => point_segment_distance(p, start, end),
            Piece::Arc { center, radius, theta0, theta1 } => {
                let v = p - center;
                if v.norm() > 0.0 && angle_in_arc(v.arg(), theta0, theta1) {
                    (v.norm() - radius).abs()
                } else {
                    (p - self.start()).norm().min((p - self.end()).norm())
                }
            }
        }
    }

    /// Change of `arg(z - w)` along the piece; `w` must be off the piece.
    fn arg_change(&self, w: Complex64) -> f64 {
        match *self {
            Piece::Segment { start, end } => ((end - w) / (start - w)).arg(),
            Piece::Arc { center, radius, theta0, theta1 } => arc_arg_change(w, center, radius, theta0, theta1, 0),
        }
    }

    fn is_valid(&self) -> bool {
        match *self {
            Piece::Segment { start, end } => {
                ensure_finite(start).is_ok() && ensure_finite(end).is_ok() && (end - start).norm() > 0.0
            }
            Piece::Arc { center, radius, theta0, theta1 } => {
                ensure_finite(center).is_ok()
                    && radius > 0.0
                    && radius.is_finite()
                    && theta0.is_finite()
                    && theta1.is_finite()
                    && theta0 != theta1
                    && (theta1 - theta0).abs() <= TAU + 1e-15
            }
        }
    }
}

fn arc_arg_change(w: Complex64, center: Complex64, radius: f64, t0: f64, t1: f64, depth: u32) -> f64 {
    let a = center + Complex64::from_polar(radius, t0);
    let b = center + Complex64::from_polar(radius, t1);
    let chord = 2.0 * radius * ((t1 - t0).abs() / 2.0).sin();
    let piece = Piece::arc(center, radius, t0, t1);
    if (t1 - t0).abs() < PI / 2.0 && (chord < piece.distance_to(w) || depth > 60) {
        return ((b - w) / (a - w)).arg();
    }
    let mid = 0.5 * (t0 + t1);
    arc_arg_change(w, center, radius, t0, mid, depth + 1) + arc_arg_change(w, center, radius, mid, t1, depth + 1)
}

fn angle_in_arc(theta: f64, t0: f64, t1: f64) -> bool {
    let span = (t1 - t0).abs();
    if span >= TAU {
        return true;
    }
    let offset = if t1 >= t0 { theta - t0 } else { t0 - theta };
    offset.rem_euclid(TAU) <= span
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

fn segment_segment_distance(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    let o1 = cross(b - a, c - a);
    let o2 = cross(b - a, d - a);
    let o3 = cross(d - c, a - c);
    let o4 = cross(d - c, b - c);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

fn segment_arc_distance(a: Complex64, b: Complex64, arc: &Piece) -> f64 {
    let Piece::Arc { center, radius, theta0, theta1 } = *arc else { unreachable!("arc expected") };
    let mut best = arc
        .distance_to(a)
        .min(arc.distance_to(b))
        .min(point_segment_distance(arc.start(), a, b))
        .min(point_segment_distance(arc.end(), a, b));
    let d = b - a;
    let len2 = d.norm_sqr();
    let t_closest = (((center - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    let q = a + d * t_closest;
    if (q - center).norm() > 0.0 && angle_in_arc((q - center).arg(), theta0, theta1) {
        best = best.min(((q - center).norm() - radius).abs());
    }
    // Line-circle intersections inside the segment.
    let f = a - center;
    let bq = 2.0 * (f * d.conj()).re;
    let cq = f.norm_sqr() - radius * radius;
    let disc = bq * bq - 4.0 * len2 * cq;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        for t in [(-bq - sq) / (2.0 * len2), (-bq + sq) / (2.0 * len2)] {
            if (0.0..=1.0).contains(&t) {
                let p = a + d * t;
                if angle_in_arc((p - center).arg(), theta0, theta1) {
                    return 0.0;
                }
            }
        }
    }
    best
}

fn polyline(piece: &Piece, chords: usize) -> Vec<Complex64> {
    let len = piece.length();
    (0..=chords).map(|k| piece.point_at(len * k as f64 / chords as f64)).collect()
}

fn piece_distance(p: &Piece, q: &Piece) -> f64 {
    match (p, q) {
        (Piece::Segment { start: a, end: b }, Piece::Segment { start: c, end: d }) => {
            segment_segment_distance(*a, *b, *c, *d)
        }
        (Piece::Segment { start, end }, arc @ Piece::Arc { .. })
        | (arc @ Piece::Arc { .. }, Piece::Segment { start, end }) => segment_arc_distance(*start, *end, arc),
        (Piece::Arc { .. }, Piece::Arc { .. }) => {
            let (pp, qp) = (polyline(p, 256), polyline(q, 256));
            let mut best = f64::INFINITY;
            for u in pp.windows(2) {
                for v in qp.windows(2) {
                    best = best.min(segment_segment_distance(u[0], u[1], v[0], v[1]));
                }
            }
            best
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Orientation {
    Positive,
    Negative,
}

/// A closed simple curve built from segments and circular arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContourRepr", into = "ContourRepr")]
pub struct Contour {
    pieces: Vec<Piece>,
    total_length: f64,
    orientation: Orientation,
    signed_area: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ContourRepr {
    segments: Vec<Piece>,
    total_length: f64,
    orientation: Orientation,
}

impl TryFrom<ContourRepr> for Contour {
    type Error = Error;
    fn try_from(r: ContourRepr) -> Result<Self> {
        Contour::new(r.segments)
    }
}

impl From<Contour> for ContourRepr {
    fn from(c: Contour) -> Self {
        ContourRepr { segments: c.pieces, total_length: c.total_length, orientation: c.orientation }
    }
}

impl Contour {
    /// Validates contiguity, closure and simplicity.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("contour needs at least one piece".into()));
        }
        for (i, p) in pieces.iter().enumerate() {
            if !p.is_valid() {
                return Err(Error::InvalidInput(format!("degenerate contour piece {i}")));
            }
        }
        for i in 0..pieces.len() - 1 {
            let gap = (pieces[i].end() - pieces[i + 1].start()).norm();
            if gap > GEOMETRY_SLACK {
                return Err(Error::InvalidInput(format!(
                    "contour pieces {i} and {} are not contiguous (gap {gap:.3e})",
                    i + 1
                )));
            }
        }
        let gap = (pieces[pieces.len() - 1].end() - pieces[0].start()).norm();
        if gap > GEOMETRY_SLACK {
            return Err(Error::NotClosed { gap });
        }
        check_simple(&pieces)?;
        let total_length = pieces.iter().map(Piece::length).sum();
        let signed_area = 0.5 * pieces.iter().map(Piece::area_term).sum::<f64>();
        let orientation = if signed_area > 0.0 { Orientation::Positive } else { Orientation::Negative };
        Ok(Contour { pieces, total_length, orientation, signed_area })
    }

    /// Positively oriented circle.
    pub fn circle(center: Complex64, radius: f64) -> Result<Self> {
        Contour::new(vec![Piece::arc(center, radius, -PI, PI)])
    }

    /// Closed polygon through `vertices` in order.
    pub fn polygon(vertices: &[Complex64]) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidInput("polygon needs at least three vertices".into()));
        }
        Contour::new((0..n).map(|i| Piece::segment(vertices[i], vertices[(i + 1) % n])).collect())
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn signed_area(&self) -> f64 {
        self.signed_area
    }

    /// Distance from `z` to the curve.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.pieces.iter().map(|p| p.distance_to(z)).fold(f64::INFINITY, f64::min)
    }

    /// Winding number about `z`, rejecting points within the slack of the curve.
    pub fn winding_number(&self, z: Complex64) -> Result<i64> {
        let d = self.distance_to(z);
        if d < GEOMETRY_SLACK {
            return Err(Error::BoundaryAmbiguous { distance: d });
        }
        let total: f64 = self.pieces.iter().map(|p| p.arg_change(z)).sum();
        Ok((total / TAU).round() as i64)
    }

    /// Point at global arc length `s` (wrapping).
    pub fn point_at(&self, s: f64) -> Complex64 {
        let mut s = s.rem_euclid(self.total_length);
        for p in &self.pieces {
            let len = p.length();
            if s <= len {
                return p.point_at(s);
            }
            s -= len;
        }
        self.pieces[0].start()
    }

    /// Vertex list for plotting; arcs are sampled every degree or so.
    pub fn vertices(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        for p in &self.pieces {
            out.push(p.start());
            if let Piece::Arc { theta0, theta1, .. } = *p {
                let steps = ((theta1 - theta0).abs() / (PI / 180.0)).ceil() as usize;
                for k in 1..steps {
                    out.push(p.point_at(p.length() * k as f64 / steps as f64));
                }
            }
        }
        out.push(self.pieces[0].start());
        out
    }

    pub fn vertices_csv(&self) -> String {
        let mut s = String::from("index,re,im\n");
        for (i, v) in self.vertices().iter().enumerate() {
            let _ = writeln!(s, "{i},{},{}", v.re, v.im);
        }
        s
    }
}

fn check_simple(pieces: &[Piece]) -> Result<()> {
    let n = pieces.len();
    if n == 1 {
        if let Piece::Arc { theta0, theta1, .. } = pieces[0] {
            if (theta1 - theta0).abs() <= TAU + 1e-15 {
                return Ok(());
            }
        }
        return Err(Error::NotSimple { first: 0, second: 0 });
    }
    // Adjacent pieces legitimately meet at their shared vertex; trimming a
    // relative sliver off the shared ends exposes any other contact.
    const TRIM: f64 = 1e-6;
    for i in 0..n {
        for j in i + 1..n {
            let after = j == i + 1;
            let before = i == 0 && j == n - 1;
            let (mut p, mut q) = (pieces[i], pieces[j]);
            if after || before {
                let (lp, lq) = (p.length(), q.length());
                let (mut p0, mut p1, mut q0, mut q1) = (0.0, lp, 0.0, lq);
                if after {
                    p1 -= TRIM * lp;
                    q0 += TRIM * lq;
                }
                if before {
                    p0 += TRIM * lp;
                    q1 -= TRIM * lq;
                }
                p = p.sub(p0, p1);
                q = q.sub(q0, q1);
            }
            if piece_distance(&p, &q) <= GEOMETRY_SLACK {
                return Err(Error::NotSimple { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// A bounded Jordan domain given by its boundary and a known interior point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Domain {
    boundary: Contour,
    #[serde(with = "crate::serde_complex")]
    interior_point: Complex64,
}

impl Domain {
    pub fn new(boundary: Contour, interior_point: Complex64) -> Result<Self> {
        let d = Domain { boundary, interior_point };
        if !point_in_domain(&d, interior_point)? {
            return Err(Error::InvalidInput("representative point is not inside the domain".into()));
        }
        Ok(d)
    }

    pub fn boundary(&self) -> &Contour {
        &self.boundary
    }

    pub fn interior_point(&self) -> Complex64 {
        self.interior_point
    }
}

/// True iff the boundary winds once around `z`.
pub fn point_in_domain(domain: &Domain, z: Complex64) -> Result<bool> {
    ensure_finite(z)?;
    Ok(domain.boundary.winding_number(z)? == 1)
}

/// Largest sampled ratio of shorter arc length to chord length.
pub fn chord_arc_constant(contour: &Contour, sample_pairs: usize) -> Result<f64> {
    if sample_pairs < 100 {
        return Err(Error::InvalidInput(format!("need at least 100 sample pairs, got {sample_pairs}")));
    }
    let total = contour.total_length();
    // Uniform samples plus every piece endpoint, as arc-length positions.
    let k = ((2.0 * sample_pairs as f64).sqrt().ceil() as usize + 1).max(4);
    let k = k + k % 2;
    let mut positions: Vec<f64> = (0..k).map(|i| total * i as f64 / k as f64).collect();
    let mut acc = 0.0;
    for p in contour.pieces() {
        positions.push(acc);
        acc += p.length();
    }
    positions.sort_by(f64::total_cmp);
    positions.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let points: Vec<Complex64> = positions.iter().map(|&s| contour.point_at(s)).collect();
    let mut best: f64 = 1.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let chord = (points[i] - points[j]).norm();
            if chord < 1e-14 {
                continue;
            }
            let ds = (positions[j] - positions[i]).abs();
            best = best.max(ds.min(total - ds) / chord);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_disk() -> Domain {
        Domain::new(Contour::circle(c(0.0, 0.0), 1.0).unwrap(), c(0.0, 0.0)).unwrap()
    }

    #[test]
    fn circle_basics() {
        let k = Contour::circle(c(0.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(k.total_length(), TAU, epsilon = 1e-14);
        assert_eq!(k.orientation(), Orientation::Positive);
        assert_relative_eq!(k.signed_area(), PI, epsilon = 1e-14);
    }

    #[test]
    fn unit_disk_membership() {
        let d = unit_disk();
        assert!(point_in_domain(&d, c(0.0, 0.0)).unwrap());
        assert!(!point_in_domain(&d, c(2.0, 0.0)).unwrap());
        assert!(matches!(point_in_domain(&d, c(1.0, 0.0)), Err(Error::BoundaryAmbiguous { .. })));
    }

    #[test]
    fn membership_close_to_an_arc() {
        let d = unit_disk();
        assert!(point_in_domain(&d, c(1.0 - 1e-9, 0.0)).unwrap());
        assert!(!point_in_domain(&d, c(0.0, 1.0 + 1e-9)).unwrap());
    }

    #[test]
    fn single_segment_is_not_closed() {
        let err = Contour::new(vec![Piece::segment(c(0.0, 0.0), c(1.0, 0.0))]).unwrap_err();
        assert!(matches!(err, Error::NotClosed { .. }));
    }

    #[test]
    fn bow_tie_is_not_simple() {
        let err = Contour::polygon(&[c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NotSimple { .. }));
    }

    #[test]
    fn backtracking_is_not_simple() {
        let err = Contour::polygon(&[c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NotSimple { .. }));
    }

    #[test]
    fn clockwise_polygon_is_negative() {
        let k = Contour::polygon(&[c(0.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(k.orientation(), Orientation::Negative);
        assert_eq!(k.winding_number(c(0.5, 0.5)).unwrap(), -1);
    }

    #[test]
    fn chord_arc_of_circle() {
        let k = Contour::circle(c(0.0, 0.0), 1.0).unwrap();
        let ca = chord_arc_constant(&k, 200).unwrap();
        assert!((ca - PI / 2.0).abs() < 0.02 * PI / 2.0, "{ca}");
    }

    #[test]
    fn chord_arc_of_square() {
        let k = Contour::polygon(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)]).unwrap();
        assert!(chord_arc_constant(&k, 100).unwrap() >= 2f64.sqrt() - 1e-12);
        assert!(chord_arc_constant(&k, 99).is_err());
    }

    #[test]
    fn half_disk_from_two_pieces() {
        let k = Contour::new(vec![Piece::segment(c(-1.0, 0.0), c(1.0, 0.0)), Piece::arc(c(0.0, 0.0), 1.0, 0.0, PI)])
            .unwrap();
        assert_eq!(k.orientation(), Orientation::Positive);
        assert_relative_eq!(k.signed_area(), PI / 2.0, epsilon = 1e-14);
        assert_eq!(k.winding_number(c(0.0, 0.5)).unwrap(), 1);
        assert_eq!(k.winding_number(c(0.0, -0.5)).unwrap(), 0);
    }

    #[test]
    fn segment_crossing_an_arc_is_detected() {
        let err = Contour::new(vec![
            Piece::segment(c(-1.0, 0.0), c(1.0, 0.0)),
            Piece::arc(c(0.0, 0.0), 1.0, 0.0, PI),
            Piece::segment(c(-1.0, 0.0), c(0.0, 2.0)),
            Piece::segment(c(0.0, 2.0), c(-1.0, 0.0)),
        ]);
        assert!(err.is_err());
    }

    #[test]
    fn contour_json_round_trip() {
        let k = Contour::polygon(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let text = serde_json::to_string(&k).unwrap();
        let back: Contour = serde_json::from_str(&text).unwrap();
        assert_eq!(k, back);
        assert!(k.vertices_csv().starts_with("index,re,im\n0,0,0\n"));
    }
}
