use super::{SamplingError, SamplingSpec};
use crate::Vec3;

fn axis_count(extent: f64, spacing: f64) -> Result<usize, SamplingError> {
    if extent == 0.0 {
        return Ok(0);
    }
    let ratio = extent / spacing;
    let rounded = ratio.round();
    if !(extent > 0.0) || (ratio - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(SamplingError::NonDivisible { extent, spacing });
    }
    Ok(rounded as usize)
}

/// Axis-aligned lattice of `extent_i / spacing + 1` points per axis, centred
/// on `center`, boundary inclusive, in lexicographic (x, y, z) order.
pub fn grid_points(center: &Vec3, extents: &[f64; 3], spacing: f64) -> Result<Vec<Vec3>, SamplingError> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(SamplingError::InvalidSpec(format!("spacing must be positive, got {spacing}")));
    }
    let cells = [axis_count(extents[0], spacing)?, axis_count(extents[1], spacing)?, axis_count(extents[2], spacing)?];
    // Offsets are (i - cells/2) * spacing, so a centre row exists only for
    // even cell counts; odd counts straddle the centre symmetrically.
    let offset = |i: usize, n: usize| (i as f64 - n as f64 / 2.0) * spacing;
    let mut out = Vec::with_capacity(cells.iter().map(|c| c + 1).product());
    for i in 0..=cells[0] {
        for j in 0..=cells[1] {
            for k in 0..=cells[2] {
                out.push(center + Vec3::new(offset(i, cells[0]), offset(j, cells[1]), offset(k, cells[2])));
            }
        }
    }
    Ok(out)
}

/// Right-handed orthonormal frame whose first axis is `axis`. The second axis
/// comes from the global axis least parallel to `axis` (lowest index on ties).
pub fn frame_from_axis(axis: &Vec3) -> Option<[Vec3; 3]> {
    let len = axis.norm();
    if !(len > 0.0 && len.is_finite()) {
        return None;
    }
    let e1 = axis / len;
    let pick = (0..3).min_by(|&a, &b| e1[a].abs().total_cmp(&e1[b].abs())).expect("three axes");
    let mut g = Vec3::zeros();
    g[pick] = 1.0;
    let e2 = (g - e1 * e1.dot(&g)).normalize();
    let e3 = e1.cross(&e2);
    Some([e1, e2, e3])
}

/// Lattice points (spacing `spec.spacing`, aligned with the frame of `v_fc`)
/// inside the spheroid with semi-axis `r_para` along `v_fc` and `r_perp`
/// across it, optionally keeping only offsets at an acute angle to the
/// normal filter.
pub fn ellipsoid_points(spec: &SamplingSpec, centroid: &Vec3, v_fc: &Vec3) -> Result<Vec<Vec3>, SamplingError> {
    let super::SamplingMode::Ellipsoid { r_para, r_perp } = spec.mode else {
        return Err(SamplingError::InvalidSpec("ellipsoid_points needs an ellipsoid spec".into()));
    };
    spec.validate()?;
    let [e1, e2, e3] = frame_from_axis(v_fc).ok_or_else(|| SamplingError::ZeroDirection(String::new()))?;
    let s = spec.spacing;
    let reach = (r_para.max(r_perp) / s + 1e-9).floor() as i64;
    let mut out = Vec::new();
    for i in -reach..=reach {
        for j in -reach..=reach {
            for k in -reach..=reach {
                let (a, b, c) = (i as f64 * s, j as f64 * s, k as f64 * s);
                let q = (a / r_para).powi(2) + (b * b + c * c) / (r_perp * r_perp);
                if q > 1.0 + 1e-12 {
                    continue;
                }
                let offset = e1 * a + e2 * b + e3 * c;
                if let Some(n) = &spec.normal_filter {
                    if offset.dot(n) <= 0.0 {
                        continue;
                    }
                }
                out.push(centroid + offset);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SamplingMode;

    fn ellipsoid(r_para: f64, r_perp: f64, spacing: f64, filter: Option<Vec3>) -> SamplingSpec {
        SamplingSpec {
            mode: SamplingMode::Ellipsoid { r_para, r_perp },
            spacing,
            normal_filter: filter,
            reference_length: 1.0,
        }
    }

    #[test]
    fn box_grid_counts() {
        let c = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(grid_points(&c, &[0.0, 0.0, 0.0], 0.1).unwrap(), vec![c]);
        assert_eq!(grid_points(&c, &[0.4, 0.2, 0.0], 0.1).unwrap().len(), 5 * 3);
        assert!(matches!(grid_points(&c, &[0.25, 0.2, 0.2], 0.1), Err(SamplingError::NonDivisible { .. })));
        assert!(grid_points(&c, &[0.2, 0.2, 0.2], 0.0).is_err());
    }

    #[test]
    fn box_grid_is_centred_and_lexicographic() {
        let pts = grid_points(&Vec3::zeros(), &[0.2, 0.2, 0.2], 0.1).unwrap();
        assert_eq!(pts[0], Vec3::new(-0.1, -0.1, -0.1));
        assert_eq!(pts[1], Vec3::new(-0.1, -0.1, 0.0));
        assert_eq!(pts[13], Vec3::zeros());
        let mean: Vec3 = pts.iter().sum::<Vec3>() / pts.len() as f64;
        assert!(mean.norm() < 1e-15);
    }

    #[test]
    fn frame_is_orthonormal() {
        for axis in [Vec3::x(), Vec3::new(0.3, -2.0, 0.5), Vec3::new(1.0, 1.0, 1.0)] {
            let [a, b, c] = frame_from_axis(&axis).unwrap();
            assert!((a - axis.normalize()).norm() < 1e-15);
            for (u, v) in [(a, b), (b, c), (a, c)] {
                assert!(u.dot(&v).abs() < 1e-15);
            }
            assert!((a.cross(&b) - c).norm() < 1e-15);
        }
        assert!(frame_from_axis(&Vec3::zeros()).is_none());
    }

    #[test]
    fn tiny_ellipsoid_keeps_only_centroid() {
        let c = Vec3::new(0.5, 0.1, 0.1);
        let pts = ellipsoid_points(&ellipsoid(0.04, 0.04, 0.1, None), &c, &Vec3::x()).unwrap();
        assert_eq!(pts, vec![c]);
        // The acute-angle test is strict, so the centroid itself is dropped.
        let pts = ellipsoid_points(&ellipsoid(0.04, 0.04, 0.1, Some(Vec3::z())), &c, &Vec3::x()).unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn normal_filter_keeps_one_side() {
        let n = Vec3::z();
        let pts = ellipsoid_points(&ellipsoid(0.3, 0.3, 0.1, Some(n)), &Vec3::zeros(), &Vec3::x()).unwrap();
        assert!(pts.iter().all(|p| p.dot(&n) > 0.0));
        assert!(!pts.iter().any(|p| (p - Vec3::new(0.0, 0.0, -0.1)).norm() < 1e-12));
        assert!(pts.iter().any(|p| (p - Vec3::new(0.0, 0.0, 0.1)).norm() < 1e-12));
    }

    #[test]
    fn sphere_matches_integer_enumeration() {
        let pts = ellipsoid_points(&ellipsoid(0.5, 0.5, 0.1, None), &Vec3::zeros(), &Vec3::new(1.0, 2.0, 2.0)).unwrap();
        let mut expected = 0;
        for i in -6i64..=6 {
            for j in -6i64..=6 {
                for k in -6i64..=6 {
                    if i * i + j * j + k * k <= 25 {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(pts.len(), expected);
        assert!(pts.iter().all(|p| p.norm() <= 0.5 + 1e-12));
    }
}
