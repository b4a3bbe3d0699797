//! Lifting of motion data into a generic scalar type.
//!
//! The loss formulas run over [`Real`]; this module materializes a sequence
//! with a chosen scalar, optionally seeding one input component with a unit
//! tangent for forward-mode differentiation.

use nalgebra::Vector3;

use crate::num::{Dual, Real, V3};
use crate::types::{GroundPlane, MotionSequence};

#[derive(Clone, Debug)]
pub(crate) struct PlaneG<T> {
    pub origin: V3<T>,
    pub normal: V3<T>,
    pub gravity_magnitude: T,
}

impl<T: Real> PlaneG<T> {
    pub fn from_plane(p: &GroundPlane) -> Self {
        PlaneG {
            origin: V3::from_f64([p.origin.x, p.origin.y, p.origin.z]),
            normal: V3::from_f64([p.normal.x, p.normal.y, p.normal.z]),
            gravity_magnitude: T::from_f64(p.gravity_magnitude),
        }
    }

    #[inline]
    pub fn height(&self, p: V3<T>) -> T {
        (p - self.origin).dot(self.normal)
    }

    #[inline]
    pub fn project(&self, p: V3<T>) -> V3<T> {
        p - self.normal.scale(self.height(p))
    }

    #[inline]
    pub fn gravity(&self) -> V3<T> {
        -self.normal.scale(self.gravity_magnitude)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct FrameG<T> {
    pub verts: Vec<V3<T>>,
    pub joints: Vec<V3<T>>,
    pub rots: Vec<[T; 6]>,
    pub root: V3<T>,
}

#[derive(Clone, Debug)]
pub(crate) struct SeqG<T> {
    pub fps: f64,
    pub frames: Vec<FrameG<T>>,
}

/// Which input component carries the unit tangent.
///
/// `Root` models the body as rigidly attached to the root: perturbing the
/// root translation of a frame shifts that frame's vertices and joints with
/// it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Seed {
    Vertex { frame: usize, vertex: usize, axis: usize },
    Root { frame: usize, axis: usize },
    Rotation { frame: usize, joint: usize, component: usize },
}

pub(crate) fn lift<T: Real>(m: &MotionSequence) -> SeqG<T> {
    SeqG {
        fps: m.fps,
        frames: m
            .frames
            .iter()
            .map(|f| FrameG {
                verts: f
                    .vertex_positions
                    .iter()
                    .map(|v| V3::from_f64([v.x, v.y, v.z]))
                    .collect(),
                joints: f
                    .joint_positions
                    .iter()
                    .map(|v| V3::from_f64([v.x, v.y, v.z]))
                    .collect(),
                rots: f
                    .joint_rotations_6d
                    .iter()
                    .map(|r| std::array::from_fn(|i| T::from_f64(r[i])))
                    .collect(),
                root: V3::from_f64([
                    f.root_translation.x,
                    f.root_translation.y,
                    f.root_translation.z,
                ]),
            })
            .collect(),
    }
}

fn seed_axis(v: &mut V3<Dual>, axis: usize) {
    match axis {
        0 => v.x.du = 1.0,
        1 => v.y.du = 1.0,
        _ => v.z.du = 1.0,
    }
}

/// Lift to duals with one component seeded.
pub(crate) fn lift_seeded(m: &MotionSequence, seed: Seed) -> SeqG<Dual> {
    let mut seq = lift::<Dual>(m);
    match seed {
        Seed::Vertex { frame, vertex, axis } => {
            seed_axis(&mut seq.frames[frame].verts[vertex], axis);
        }
        Seed::Root { frame, axis } => {
            let f = &mut seq.frames[frame];
            seed_axis(&mut f.root, axis);
            for v in &mut f.verts {
                seed_axis(v, axis);
            }
            for j in &mut f.joints {
                seed_axis(j, axis);
            }
        }
        Seed::Rotation { frame, joint, component } => {
            seq.frames[frame].rots[joint][component].du = 1.0;
        }
    }
    seq
}

pub(crate) fn v3_of(v: &Vector3<f64>) -> V3<f64> {
    V3::new(v.x, v.y, v.z)
}

pub(crate) fn na_of(v: V3<f64>) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}
