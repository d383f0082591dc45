//! 2D convex hulls in the flexion/abduction plane.

use crate::error::{Error, Result};

pub type Point2 = [f64; 2];

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain. Returns a counterclockwise polygon without
/// collinear boundary points.
pub fn convex_hull_2d(points: &[Point2]) -> Result<Vec<Point2>> {
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateHull("non-finite point".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::DegenerateHull(format!("{} distinct points", pts.len())));
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::DegenerateHull("all points are collinear".into()));
    }
    Ok(hull)
}

/// Inside-or-on test for a counterclockwise convex polygon.
pub fn hull_contains(hull: &[Point2], p: Point2) -> bool {
    (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) >= 0.0)
}

fn closest_on_segment(a: Point2, b: Point2, p: Point2) -> Point2 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    [a[0] + t * d[0], a[1] + t * d[1]]
}

/// Distance from `p` to the hull and the nearest hull point (`p` itself
/// when inside).
pub fn hull_nearest(hull: &[Point2], p: Point2) -> (f64, Point2) {
    if hull_contains(hull, p) {
        return (0.0, p);
    }
    let mut best = (f64::INFINITY, p);
    for i in 0..hull.len() {
        let q = closest_on_segment(hull[i], hull[(i + 1) % hull.len()], p);
        let d = (p[0] - q[0]).hypot(p[1] - q[1]);
        if d < best.0 {
            best = (d, q);
        }
    }
    best
}

/// Euclidean distance to a convex polygon, 0 inside or on the boundary.
pub fn hull_distance(p: Point2, hull: &[Point2]) -> f64 {
    hull_nearest(hull, p).0
}

/// Checks that `poly` already is a counterclockwise convex polygon.
pub fn check_hull(poly: &[Point2]) -> Result<()> {
    let hull = convex_hull_2d(poly)?;
    if hull.len() != poly.len() {
        return Err(Error::DegenerateHull(format!(
            "polygon with {} vertices is not strictly convex ({} hull vertices)",
            poly.len(),
            hull.len()
        )));
    }
    let n = poly.len();
    if (0..n).any(|i| cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]) <= 0.0) {
        return Err(Error::DegenerateHull("polygon is not counterclockwise".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [Point2; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    #[test]
    fn square_with_center() {
        let mut pts = SQUARE.to_vec();
        pts.push([0.5, 0.5]);
        pts.push([0.5, 0.0]);
        let h = convex_hull_2d(&pts).unwrap();
        assert_eq!(h.len(), 4);
        check_hull(&h).unwrap();
        for c in SQUARE {
            assert!(h.contains(&c));
        }
    }

    #[test]
    fn triangle() {
        let pts = [[0.0, 0.0], [2.0, 0.1], [0.3, 1.0]];
        let h = convex_hull_2d(&pts).unwrap();
        assert_eq!(h.len(), 3);
        for p in pts {
            assert!(h.contains(&p));
        }
    }

    #[test]
    fn degenerate() {
        assert!(convex_hull_2d(&[[0.0, 0.0], [1.0, 1.0]]).is_err());
        assert!(convex_hull_2d(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn distances() {
        assert_eq!(hull_distance([0.5, 0.5], &SQUARE), 0.0);
        assert_eq!(hull_distance([1.0, 0.5], &SQUARE), 0.0);
        assert_eq!(hull_distance([2.0, 0.5], &SQUARE), 1.0);
        assert!((hull_distance([2.0, 2.0], &SQUARE) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn check_rejects_clockwise() {
        let mut cw = SQUARE.to_vec();
        cw.reverse();
        assert!(check_hull(&cw).is_err());
        assert!(check_hull(&SQUARE).is_ok());
    }
}
