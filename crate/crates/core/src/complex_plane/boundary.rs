use num_complex::Complex64;

use super::{comb_to_region, unit, CombSet, Contour, Orientation, Piece, Sector};
use crate::error::{Error, Result};

/// Boundary of `(sector ∩ {|z| < clip_radius}) \ combs`, positively oriented.
///
/// Each boundary ray carries at most one comb. Along a comb the curve follows
/// the inner rectangle sides as a staircase and closes to 0 by a straight
/// segment from the innermost corner.
pub fn build_boundary_contour(sector: &Sector, combs: &[CombSet], clip_radius: f64) -> Result<Contour> {
    if !(clip_radius > 0.0 && clip_radius <= sector.radius()) {
        return Err(Error::InvalidInput(format!("clip radius {clip_radius} must lie in (0, {}]", sector.radius())));
    }
    let mut lower = None;
    let mut upper = None;
    for comb in combs {
        let p = comb.placement();
        if (p.zeta - sector.direction()).norm() > 1e-12 || (p.ray_angle - sector.half_angle()).abs() > 1e-12 {
            return Err(Error::InvalidInput("comb is not placed on a boundary ray of the sector".into()));
        }
        let slot = if p.sign < 0 { &mut lower } else { &mut upper };
        if slot.replace(comb).is_some() {
            return Err(Error::InvalidInput("two combs on the same boundary ray".into()));
        }
    }
    for comb in [lower, upper].into_iter().flatten() {
        check_inside_sector(sector, comb, clip_radius)?;
    }
    if let (Some(lo), Some(up)) = (lower, upper) {
        for (i, r) in comb_to_region(lo).iter().enumerate() {
            for (j, s) in comb_to_region(up).iter().enumerate() {
                if r.intersects(s) {
                    return Err(Error::CombsIntersect(format!(
                        "rectangle {} of the lower comb meets rectangle {} of the upper comb",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
    }

    let beta = sector.half_angle();
    let axis = sector.direction().arg();
    let lower_path = ray_path(sector, lower, -1, clip_radius)?;
    let mut upper_path = ray_path(sector, upper, 1, clip_radius)?;
    upper_path.reverse();

    let theta_lo = axis + (-beta + depth_angle(lower, clip_radius));
    let theta_hi = axis + (beta - depth_angle(upper, clip_radius));
    if theta_hi <= theta_lo {
        return Err(Error::CombsIntersect("combs close off the outer arc".into()));
    }

    let mut pieces = Vec::new();
    push_polyline(&mut pieces, &lower_path);
    pieces.push(Piece::arc(Complex64::new(0.0, 0.0), clip_radius, theta_lo, theta_hi));
    push_polyline(&mut pieces, &upper_path);
    let contour = Contour::new(pieces)?;
    if contour.orientation() != Orientation::Positive {
        return Err(Error::NegativeOrientation { area: contour.signed_area() });
    }
    Ok(contour)
}

fn push_polyline(pieces: &mut Vec<Piece>, pts: &[Complex64]) {
    for w in pts.windows(2) {
        pieces.push(Piece::segment(w[0], w[1]));
    }
}

/// Angle, seen from 0, between the ray and the point where the boundary leaves
/// it for the clip arc.
fn depth_angle(comb: Option<&CombSet>, clip: f64) -> f64 {
    match comb {
        Some(c) if outer_meets_arc(c, clip) => (c.delta()[0] / clip).asin(),
        _ => 0.0,
    }
}

fn outer_meets_arc(c: &CombSet, clip: f64) -> bool {
    c.a()[0].hypot(c.delta()[0]) >= clip
}

/// Points from 0 outward to the start of the clip arc along one ray.
fn ray_path(sector: &Sector, comb: Option<&CombSet>, sign: i8, clip: f64) -> Result<Vec<Complex64>> {
    let ray = sector.ray(sign);
    let origin = Complex64::new(0.0, 0.0);
    let Some(comb) = comb else {
        return Ok(vec![origin, ray * clip]);
    };
    let p = comb.placement();
    let inward = p.inward();
    let at = |x: f64, depth: f64| p.to_plane(x, inward * depth);
    let (a, d) = (comb.a(), comb.delta());
    let n = comb.len();
    let mut pts = vec![origin, at(a[n], d[n - 1])];
    for k in (0..n).rev() {
        let x_out = if k == 0 && outer_meets_arc(comb, clip) {
            let x = (clip * clip - d[0] * d[0]).sqrt();
            if x <= a[1] {
                return Err(Error::CombEscapesSector {
                    index: 1,
                    detail: "first rectangle is cut off by the clip arc".into(),
                });
            }
            x
        } else {
            a[k]
        };
        pts.push(at(x_out, d[k]));
        if k > 0 {
            pts.push(at(a[k], d[k - 1]));
        }
    }
    if !outer_meets_arc(comb, clip) {
        pts.push(at(a[0], 0.0));
        pts.push(ray * clip);
    } else {
        // Snap the last point onto the arc so the joint is exact.
        let theta = sector.direction().arg() + f64::from(sign) * (sector.half_angle() - depth_angle(Some(comb), clip));
        *pts.last_mut().expect("non-empty path") = clip * unit(theta);
    }
    Ok(pts)
}

fn check_inside_sector(sector: &Sector, comb: &CombSet, clip: f64) -> Result<()> {
    if comb.a()[0] > clip + 1e-12 {
        return Err(Error::CombEscapesSector {
            index: 1,
            detail: format!("a_1 = {} exceeds the clip radius {clip}", comb.a()[0]),
        });
    }
    let p = comb.placement();
    for n in 0..comb.len() {
        for x in [comb.a()[n + 1], comb.a()[n]] {
            let z = p.to_plane(x, p.inward() * comb.delta()[n]);
            if sector.local_angle(z).abs() >= sector.half_angle() {
                return Err(Error::CombEscapesSector {
                    index: n + 1,
                    detail: "inner corner lies outside the sector".into(),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex_plane::{make_sector, point_in_domain, Domain, Placement};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn plain_sector_length() {
        let s = make_sector(one(), PI / 4.0, 2.0).unwrap();
        let k = build_boundary_contour(&s, &[], 1.0).unwrap();
        assert_relative_eq!(k.total_length(), 2.0 + PI / 2.0, epsilon = 1e-14);
        assert_eq!(k.pieces().len(), 3);
        assert_eq!(k.orientation(), Orientation::Positive);
    }

    #[test]
    fn single_rectangle_polyline_length() {
        let s = make_sector(one(), PI / 4.0, 2.0).unwrap();
        let d = 0.05;
        let comb =
            CombSet::new(PI / 8.0, vec![1.0, 0.5], vec![d], Placement::new(one(), 1, PI / 4.0).unwrap()).unwrap();
        let k = build_boundary_contour(&s, &[comb], 1.0).unwrap();
        // lower ray + arc shortened by the depth angle + inner side + closing segment
        let x_star = (1.0 - d * d).sqrt();
        let expect = 1.0 + (PI / 2.0 - (d / 1.0f64).asin()) + (x_star - 0.5) + 0.5f64.hypot(d);
        assert_relative_eq!(k.total_length(), expect, epsilon = 1e-14);
    }

    #[test]
    fn staircase_excludes_comb_interior() {
        let s = make_sector(one(), PI / 3.0, 1.5).unwrap();
        let mk = |sign: i8| {
            CombSet::new(
                PI / 12.0,
                vec![1.0, 0.5, 0.25, 0.125],
                vec![0.1, 0.05, 0.02],
                Placement::new(one(), sign, PI / 3.0).unwrap(),
            )
            .unwrap()
        };
        let k = build_boundary_contour(&s, &[mk(1), mk(-1)], 1.0).unwrap();
        let dom = Domain::new(k, Complex64::new(0.5, 0.0)).unwrap();
        let p = Placement::new(one(), 1, PI / 3.0).unwrap();
        assert!(!point_in_domain(&dom, p.to_plane(0.7, -0.05)).unwrap());
        assert!(point_in_domain(&dom, p.to_plane(0.7, -0.15)).unwrap());
        assert!(!point_in_domain(&dom, p.to_plane(0.2, -0.01)).unwrap());
    }

    #[test]
    fn overlapping_combs_are_rejected() {
        let s = make_sector(one(), 0.2, 1.0).unwrap();
        let mk = |sign: i8| {
            CombSet::new(0.35, vec![1.0, 0.5], vec![0.15], Placement::new(one(), sign, 0.2).unwrap()).unwrap()
        };
        let err = build_boundary_contour(&s, &[mk(1), mk(-1)], 1.0).unwrap_err();
        assert!(matches!(err, Error::CombsIntersect(_)), "{err}");
    }

    #[test]
    fn comb_off_the_sector_rays_is_rejected() {
        let s = make_sector(one(), PI / 4.0, 2.0).unwrap();
        let comb = CombSet::new(0.3, vec![1.0, 0.5], vec![0.05], Placement::new(one(), 1, PI / 3.0).unwrap()).unwrap();
        assert!(build_boundary_contour(&s, &[comb], 1.0).is_err());
    }
}
