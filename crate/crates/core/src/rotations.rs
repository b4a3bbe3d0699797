//! Rotation representations and kinematic conversions.
//!
//! Rotations travel as 6d values (the first two columns of a rotation matrix,
//! column-major) and are orthonormalized back with Gram-Schmidt.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::num::{Real, M3, V3};

/// Norm below which a 6d input counts as degenerate.
const DEGENERATE_NORM: f64 = 1e-12;

/// Gram-Schmidt a 6d rotation into a proper rotation matrix, generically.
///
/// Returns `None` when the first vector (or the second after removing its
/// projection) has near-zero norm.
pub(crate) fn sixd_to_m3<T: Real>(r: &[T; 6]) -> Option<M3<T>> {
    let a = V3::new(r[0], r[1], r[2]);
    let b = V3::new(r[3], r[4], r[5]);
    let an = a.norm();
    if an.value() < DEGENERATE_NORM {
        return None;
    }
    let c0 = a.scale(T::one() / an);
    let b_perp = b - c0.scale(c0.dot(b));
    let bn = b_perp.norm();
    if bn.value() < DEGENERATE_NORM {
        return None;
    }
    let c1 = b_perp.scale(T::one() / bn);
    let c2 = c0.cross(c1);
    Some(M3::from_columns(c0, c1, c2))
}

/// Geodesic distance between two rotations, generically:
/// `arccos((tr(R1·R2ᵀ) − 1) / 2)`.
pub(crate) fn geodesic_m3<T: Real>(r1: M3<T>, r2: M3<T>) -> T {
    let trace = r1.trace_mul_transpose(r2);
    let half = T::from_f64(0.5);
    ((trace - T::one()) * half).acos_clamped()
}

/// Convert a 6d rotation to a rotation matrix via Gram-Schmidt.
pub fn sixd_to_matrix(r: &[f64; 6]) -> Result<Matrix3<f64>> {
    let m = sixd_to_m3::<f64>(r).ok_or_else(|| {
        Error::DegenerateRotation(format!("columns {:?} cannot be orthonormalized", r))
    })?;
    Ok(m3_to_matrix(&m))
}

/// First two columns of a rotation matrix, column-major.
pub fn matrix_to_sixd(r: &Matrix3<f64>) -> [f64; 6] {
    [
        r[(0, 0)],
        r[(1, 0)],
        r[(2, 0)],
        r[(0, 1)],
        r[(1, 1)],
        r[(2, 1)],
    ]
}

/// Geodesic distance in radians between two proper rotations. Clamped into
/// [0, π].
pub fn geodesic_distance(r1: &Matrix3<f64>, r2: &Matrix3<f64>) -> f64 {
    let trace = (r1 * r2.transpose()).trace();
    ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

pub(crate) fn m3_to_matrix(m: &M3<f64>) -> Matrix3<f64> {
    Matrix3::from_columns(&[
        Vector3::new(m.cols[0].x, m.cols[0].y, m.cols[0].z),
        Vector3::new(m.cols[1].x, m.cols[1].y, m.cols[1].z),
        Vector3::new(m.cols[2].x, m.cols[2].y, m.cols[2].z),
    ])
}

/// Rooted-forest parent map: `parent[j]` is `None` for roots.
#[derive(Clone, Debug)]
pub struct KinematicTree {
    pub parent: Vec<Option<usize>>,
}

impl KinematicTree {
    pub fn new(parent: Vec<Option<usize>>) -> Result<Self> {
        let tree = KinematicTree { parent };
        tree.check_acyclic()?;
        Ok(tree)
    }

    fn check_acyclic(&self) -> Result<()> {
        let n = self.parent.len();
        for start in 0..n {
            let mut hops = 0usize;
            let mut j = start;
            while let Some(p) = self.parent[j] {
                if p >= n {
                    return Err(Error::Shape(format!(
                        "joint {j} has parent {p} outside 0..{n}"
                    )));
                }
                j = p;
                hops += 1;
                if hops > n {
                    return Err(Error::CyclicTree { joint: start });
                }
            }
        }
        Ok(())
    }
}

/// Compose parent-relative joint rotations into root-relative ones.
///
/// The root-relative rotation of joint `j` is the product of the
/// parent-relative rotations along the chain from the root down to `j`,
/// excluding the root's own (global) rotation. Roots map to identity.
pub fn parent_relative_to_root_relative(
    pose: &[Matrix3<f64>],
    tree: &KinematicTree,
) -> Result<Vec<Matrix3<f64>>> {
    if pose.len() != tree.parent.len() {
        return Err(Error::Shape(format!(
            "pose has {} joints, tree has {}",
            pose.len(),
            tree.parent.len()
        )));
    }
    let n = pose.len();
    let mut out: Vec<Option<Matrix3<f64>>> = vec![None; n];

    fn resolve(
        j: usize,
        pose: &[Matrix3<f64>],
        parent: &[Option<usize>],
        out: &mut Vec<Option<Matrix3<f64>>>,
    ) -> Matrix3<f64> {
        if let Some(m) = out[j] {
            return m;
        }
        let m = match parent[j] {
            // Root: exclude the global orientation.
            None => Matrix3::identity(),
            Some(p) => match parent[p] {
                // Child of the root: the chain starts here.
                None => pose[j],
                Some(_) => resolve(p, pose, parent, out) * pose[j],
            },
        };
        out[j] = Some(m);
        m
    }

    for j in 0..n {
        resolve(j, pose, &tree.parent, &mut out);
    }
    Ok(out.into_iter().map(|m| m.unwrap()).collect())
}
