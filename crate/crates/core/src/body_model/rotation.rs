//! Continuous 6D rotation parameterization.
//!
//! The two 3-vector halves are orthonormalized by Gram-Schmidt; the third
//! column is their cross product.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use crate::dual::{cross3, dot3, Dual, Real, V3};
use crate::error::{Error, Result};

/// 6D row of the identity rotation.
pub const IDENTITY_6D: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

const MIN_NORM: f64 = 1e-9;

/// Gram-Schmidt columns `(b1, b2, b3)` for any scalar type.
pub(crate) fn gram_schmidt<T: Real>(r: [T; 6]) -> [V3<T>; 3] {
    let a1 = [r[0], r[1], r[2]];
    let a2 = [r[3], r[4], r[5]];
    let n1 = dot3(a1, a1).sqrt();
    let b1 = a1.map(|x| x / n1);
    let d = dot3(b1, a2);
    let u = [a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]];
    let n2 = dot3(u, u).sqrt();
    let b2 = u.map(|x| x / n2);
    let b3 = cross3(b1, b2);
    [b1, b2, b3]
}

fn check_6d(r: &[f64; 6]) -> Result<()> {
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateRotation(format!("non-finite entry in {r:?}")));
    }
    let a1 = Vector3::new(r[0], r[1], r[2]);
    let a2 = Vector3::new(r[3], r[4], r[5]);
    let n1 = a1.norm();
    if n1 < MIN_NORM {
        return Err(Error::DegenerateRotation(format!("first column has norm {n1:e}")));
    }
    let u = a2 - a1 * (a1.dot(&a2) / (n1 * n1));
    if u.norm() < MIN_NORM * a2.norm().max(1.0) {
        return Err(Error::DegenerateRotation("columns are parallel".into()));
    }
    Ok(())
}

/// Maps a 6D row to a proper rotation matrix.
pub fn rot6d_to_matrix(r: &[f64; 6]) -> Result<Matrix3<f64>> {
    check_6d(r)?;
    let [b1, b2, b3] = gram_schmidt(*r);
    Ok(Matrix3::from_columns(&[
        Vector3::from(b1),
        Vector3::from(b2),
        Vector3::from(b3),
    ]))
}

/// Rotation matrix together with `dR[(i,j)]/dr[k]`, stored as `jac[k]`.
pub fn rot6d_with_jacobian(r: &[f64; 6]) -> Result<(Matrix3<f64>, [Matrix3<f64>; 6])> {
    check_6d(r)?;
    let cols = gram_schmidt(Dual::<6>::vars(*r));
    let m = Matrix3::from_fn(|i, j| cols[j][i].v);
    let jac = std::array::from_fn(|k| Matrix3::from_fn(|i, j| cols[j][i].d[k]));
    Ok((m, jac))
}

/// Pulls a matrix adjoint back onto the 6D row.
pub fn pullback_6d(jac: &[Matrix3<f64>; 6], adjoint: &Matrix3<f64>) -> [f64; 6] {
    std::array::from_fn(|k| jac[k].component_mul(adjoint).sum())
}

/// First two columns of a rotation matrix.
pub fn matrix_to_rot6d(m: &Matrix3<f64>) -> [f64; 6] {
    [m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(0, 1)], m[(1, 1)], m[(2, 1)]]
}

pub fn axis_angle_to_matrix(axis_angle: [f64; 3]) -> Matrix3<f64> {
    let v = Vector3::from(axis_angle);
    let angle = v.norm();
    if angle < 1e-15 {
        return Matrix3::identity();
    }
    Rotation3::from_axis_angle(&Unit::new_normalize(v), angle).into_inner()
}

pub fn axis_angle_to_rot6d(axis_angle: [f64; 3]) -> [f64; 6] {
    matrix_to_rot6d(&axis_angle_to_matrix(axis_angle))
}

/// Geodesic rotation angle in `[0, pi]`.
pub fn geodesic_angle(m: &Matrix3<f64>) -> f64 {
    ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_row() {
        let m = rot6d_to_matrix(&IDENTITY_6D).unwrap();
        assert_relative_eq!(m, Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn quarter_turn_about_z() {
        let m = rot6d_to_matrix(&[0.0, 1.0, 0.0, -1.0, 0.0, 0.0]).unwrap();
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(m, expected, epsilon = 1e-15);
    }

    #[test]
    fn scale_invariant() {
        let m = rot6d_to_matrix(&[2.0, 0.0, 0.0, 0.0, 3.0, 0.0]).unwrap();
        assert_relative_eq!(m, Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            rot6d_to_matrix(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
            Err(Error::DegenerateRotation(_))
        ));
        assert!(matches!(
            rot6d_to_matrix(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]),
            Err(Error::DegenerateRotation(_))
        ));
    }

    #[test]
    fn random_rows_are_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let r: [f64; 6] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let m = rot6d_to_matrix(&r).unwrap();
            assert_relative_eq!(m.transpose() * m, Matrix3::identity(), epsilon = 1e-10);
            assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let r = [0.9, 0.2, -0.3, 0.1, 1.1, 0.4];
        let (_, jac) = rot6d_with_jacobian(&r).unwrap();
        let h = 1e-6;
        for k in 0..6 {
            let mut rp = r;
            let mut rm = r;
            rp[k] += h;
            rm[k] -= h;
            let fd = (rot6d_to_matrix(&rp).unwrap() - rot6d_to_matrix(&rm).unwrap()) / (2.0 * h);
            assert_relative_eq!(jac[k], fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn roundtrip_through_matrix() {
        let m = axis_angle_to_matrix([0.3, -0.5, 0.9]);
        let back = rot6d_to_matrix(&matrix_to_rot6d(&m)).unwrap();
        assert_relative_eq!(m, back, epsilon = 1e-14);
        assert_relative_eq!(geodesic_angle(&m), (0.09f64 + 0.25 + 0.81).sqrt(), epsilon = 1e-12);
    }
}
