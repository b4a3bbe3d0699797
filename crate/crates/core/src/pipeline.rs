//! Sequence-to-sequence preprocessing: resampling, ground-support filtering,
//! canonicalization, mirroring, and grounding.
//!
//! Transforms that change geometry drop or adjust the attached oracle traces
//! rather than leaving them stale.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::geometry::lowest_vertex_height;
use crate::rotations::{matrix_to_sixd, sixd_to_matrix};
use crate::types::{GroundPlane, MotionFrame, MotionSequence};

/// Sequences with at least this many frames above the height threshold are
/// rejected by [`support_filter`].
pub const SUPPORT_FILTER_MAX_FRAMES: usize = 5;
/// Lowest-vertex height above which a frame counts as unsupported.
pub const SUPPORT_FILTER_HEIGHT: f64 = 0.25;

/// Resample to a new frame rate. When the source rate is an integer multiple
/// of the target the frames are subsampled (and per-frame traces carried
/// along); otherwise positions interpolate linearly and rotations
/// spherically, and traces are dropped. The source rate returns a clone.
pub fn resample(m: &MotionSequence, target_fps: f64) -> Result<MotionSequence> {
    m.validate()?;
    if target_fps <= 0.0 || !target_fps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "target fps must be positive, got {target_fps}"
        )));
    }
    if target_fps == m.fps {
        return Ok(m.clone());
    }

    let ratio = m.fps / target_fps;
    let stride = ratio.round();
    if stride >= 1.0 && (ratio - stride).abs() < 1e-9 {
        let stride = stride as usize;
        let frames: Vec<MotionFrame> = m.frames.iter().step_by(stride).cloned().collect();
        if frames.len() < 3 {
            return Err(Error::TooShort {
                frames: frames.len(),
            });
        }
        let traces = m.traces.as_ref().map(|t| crate::types::OracleTraces {
            zmp_plane: t
                .zmp_plane
                .as_ref()
                .map(|v| v.iter().step_by(stride).copied().collect()),
            lowest_height: t
                .lowest_height
                .as_ref()
                .map(|v| v.iter().step_by(stride).copied().collect()),
            foot_speed: t.foot_speed,
        });
        let mut out = MotionSequence {
            fps: target_fps,
            body: m.body.clone(),
            frames,
            traces,
        };
        out.body.vertices = out.frames[0].vertex_positions.clone();
        return Ok(out);
    }

    // Fractional resampling: interpolate between source frames.
    let src_last = (m.frames.len() - 1) as f64;
    let new_len = (src_last * target_fps / m.fps).floor() as usize + 1;
    if new_len < 3 {
        return Err(Error::TooShort { frames: new_len });
    }
    let mut frames = Vec::with_capacity(new_len);
    for k in 0..new_len {
        let s = (k as f64 * m.fps / target_fps).min(src_last);
        let i0 = (s.floor() as usize).min(m.frames.len() - 2);
        let w = s - i0 as f64;
        frames.push(interpolate_frames(&m.frames[i0], &m.frames[i0 + 1], w)?);
    }
    let mut out = MotionSequence {
        fps: target_fps,
        body: m.body.clone(),
        frames,
        traces: None,
    };
    out.body.vertices = out.frames[0].vertex_positions.clone();
    out.validate()?;
    Ok(out)
}

fn interpolate_frames(a: &MotionFrame, b: &MotionFrame, w: f64) -> Result<MotionFrame> {
    if w == 0.0 {
        return Ok(a.clone());
    }
    let lerp3 = |p: &Vector3<f64>, q: &Vector3<f64>| p + (q - p) * w;
    let mut rots = Vec::with_capacity(a.joint_rotations_6d.len());
    for (ra, rb) in a.joint_rotations_6d.iter().zip(&b.joint_rotations_6d) {
        let ma = sixd_to_matrix(ra)?;
        let mb = sixd_to_matrix(rb)?;
        let qa = UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(
            ma,
        ));
        let qb = UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(
            mb,
        ));
        let q = qa.try_slerp(&qb, w, 1e-12).unwrap_or(qa);
        rots.push(matrix_to_sixd(&q.to_rotation_matrix().into_inner()));
    }
    Ok(MotionFrame {
        vertex_positions: a
            .vertex_positions
            .iter()
            .zip(&b.vertex_positions)
            .map(|(p, q)| lerp3(p, q))
            .collect(),
        joint_positions: a
            .joint_positions
            .iter()
            .zip(&b.joint_positions)
            .map(|(p, q)| lerp3(p, q))
            .collect(),
        joint_rotations_6d: rots,
        root_translation: lerp3(&a.root_translation, &b.root_translation),
    })
}

/// Accept or reject a sequence by ground support: reject when at least
/// [`SUPPORT_FILTER_MAX_FRAMES`] frames have their lowest vertex above
/// [`SUPPORT_FILTER_HEIGHT`].
pub fn support_filter(m: &MotionSequence, plane: &GroundPlane) -> bool {
    let offending = m
        .frames
        .iter()
        .filter(|f| lowest_vertex_height(&f.vertex_positions, plane) > SUPPORT_FILTER_HEIGHT)
        .count();
    offending < SUPPORT_FILTER_MAX_FRAMES
}

/// Apply one rigid transform `p ↦ R·p + t` to every frame: vertices, joints,
/// root translations, and the global root orientation slot. Root-relative
/// body rotations are unchanged by a global transform. Traces are dropped.
pub fn apply_rigid(
    m: &MotionSequence,
    rotation: &Matrix3<f64>,
    translation: &Vector3<f64>,
) -> Result<MotionSequence> {
    let ortho = (rotation.transpose() * rotation - Matrix3::identity()).norm();
    if ortho > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(
            "apply_rigid needs a proper rotation".into(),
        ));
    }
    let mut out = m.clone();
    for f in &mut out.frames {
        for v in &mut f.vertex_positions {
            *v = rotation * *v + translation;
        }
        for j in &mut f.joint_positions {
            *j = rotation * *j + translation;
        }
        f.root_translation = rotation * f.root_translation + translation;
        if !f.joint_rotations_6d.is_empty() {
            let root = sixd_to_matrix(&f.joint_rotations_6d[0])?;
            f.joint_rotations_6d[0] = matrix_to_sixd(&(rotation * root));
        }
    }
    out.body.vertices = out.frames[0].vertex_positions.clone();
    out.traces = None;
    Ok(out)
}

/// Twist (rotation about `axis`) component of a rotation, from the
/// swing-twist decomposition `R = R_twist · R_swing`. Falls back to the
/// identity when the twist is degenerate (180° swing).
fn twist_about(rotation: &Matrix3<f64>, axis: &Vector3<f64>) -> Matrix3<f64> {
    let q = UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(
        *rotation,
    ));
    let v = q.vector();
    let proj = axis * v.dot(axis);
    let raw = Quaternion::new(q.scalar(), proj.x, proj.y, proj.z);
    if raw.norm() < 1e-12 {
        return Matrix3::identity();
    }
    UnitQuaternion::from_quaternion(raw)
        .to_rotation_matrix()
        .into_inner()
}

/// Canonicalize a sequence: remove the first frame's yaw about the plane
/// normal and its horizontal offset from the plane origin, applying the same
/// rigid transform to every frame. Idempotent.
pub fn canonicalize(m: &MotionSequence, plane: &GroundPlane) -> Result<MotionSequence> {
    m.validate()?;
    let first = &m.frames[0];
    if first.joint_rotations_6d.is_empty() {
        return Err(Error::Shape("sequence has no joint rotation slots".into()));
    }
    let root = sixd_to_matrix(&first.joint_rotations_6d[0])?;
    let yaw = twist_about(&root, &plane.normal);
    let yaw_inv = yaw.transpose();

    let rel = first.root_translation - plane.origin;
    let horizontal = rel - plane.normal * rel.dot(&plane.normal);
    // p ↦ o + R⁻¹ (p − o − horizontal)
    let translation = plane.origin - yaw_inv * (plane.origin + horizontal);
    apply_rigid(m, &yaw_inv, &translation)
}

/// Mirror a sequence across the body's left-right plane (x = 0): positions
/// flip in x, rotations conjugate by the reflection, and declared left/right
/// joint slots and foot vertex sets swap. Face windings are reversed so part
/// volumes stay positive. An involution.
#[derive(Clone, Debug)]
pub struct Mirrored {
    pub sequence: MotionSequence,
    /// False when the body declares no left/right joint pairs; the geometry
    /// is mirrored anyway but no labels were swapped.
    pub labels_swapped: bool,
}

pub fn mirror(m: &MotionSequence) -> Result<Mirrored> {
    m.validate()?;
    let mut out = m.clone();
    out.traces = None;

    let pairs = &m.body.joint_lr_pairs;
    let labels_swapped = !pairs.is_empty();
    let j = m.num_joints();
    // Slot permutation from the left/right pair table.
    let mut perm: Vec<usize> = (0..j).collect();
    for &(l, r) in pairs {
        if l < j && r < j {
            perm[l] = r;
            perm[r] = l;
        }
    }

    let flip = |v: &Vector3<f64>| Vector3::new(-v.x, v.y, v.z);
    // 6d columns of M·R·M with M = diag(-1,1,1): c1 ↦ (c1x,-c1y,-c1z),
    // c2 ↦ (-c2x, c2y, c2z).
    let flip_rot = |r: &[f64; 6]| [r[0], -r[1], -r[2], -r[3], r[4], r[5]];

    for f in &mut out.frames {
        for v in &mut f.vertex_positions {
            *v = flip(v);
        }
        let src_joints = f.joint_positions.clone();
        let src_rots = f.joint_rotations_6d.clone();
        for slot in 0..j {
            f.joint_positions[slot] = flip(&src_joints[perm[slot]]);
            f.joint_rotations_6d[slot] = flip_rot(&src_rots[perm[slot]]);
        }
        f.root_translation = flip(&f.root_translation);
    }
    for face in &mut out.body.faces {
        face.swap(1, 2);
    }
    std::mem::swap(
        &mut out.body.left_foot_vertices,
        &mut out.body.right_foot_vertices,
    );
    out.body.vertices = out.frames[0].vertex_positions.clone();
    Ok(Mirrored {
        sequence: out,
        labels_swapped,
    })
}

/// Translate the whole sequence vertically so its lowest vertex over all
/// frames touches the ground. The attached lowest-height trace is shifted
/// accordingly; the ZMP trace (which depends on height) is dropped.
pub fn ground(m: &MotionSequence, plane: &GroundPlane) -> Result<MotionSequence> {
    m.validate()?;
    let global_min = m
        .frames
        .iter()
        .map(|f| lowest_vertex_height(&f.vertex_positions, plane))
        .fold(f64::INFINITY, f64::min);
    let shift = plane.normal * -global_min;
    let mut out = m.clone();
    for f in &mut out.frames {
        for v in &mut f.vertex_positions {
            *v += shift;
        }
        for j in &mut f.joint_positions {
            *j += shift;
        }
        f.root_translation += shift;
    }
    out.body.vertices = out.frames[0].vertex_positions.clone();
    out.traces = m.traces.as_ref().map(|t| crate::types::OracleTraces {
        zmp_plane: None,
        lowest_height: t
            .lowest_height
            .as_ref()
            .map(|v| v.iter().map(|h| h - global_min).collect()),
        foot_speed: t.foot_speed,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{bounce, glide, humanoid, static_stand, wander, HumanoidParams};
    use crate::types::AnalysisConfig;
    use approx::assert_relative_eq;

    fn body() -> crate::synth::SynthBody {
        humanoid(HumanoidParams::default()).unwrap()
    }

    fn frames_close(a: &MotionSequence, b: &MotionSequence, tol: f64) {
        assert_eq!(a.num_frames(), b.num_frames());
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (va, vb) in fa.vertex_positions.iter().zip(&fb.vertex_positions) {
                assert!((va - vb).norm() <= tol, "vertex {va:?} vs {vb:?}");
            }
            for (ja, jb) in fa.joint_positions.iter().zip(&fb.joint_positions) {
                assert!((ja - jb).norm() <= tol);
            }
            assert!((fa.root_translation - fb.root_translation).norm() <= tol);
            for (ra, rb) in fa.joint_rotations_6d.iter().zip(&fb.joint_rotations_6d) {
                for k in 0..6 {
                    assert!((ra[k] - rb[k]).abs() <= tol);
                }
            }
        }
    }

    #[test]
    fn resample_at_source_rate_is_identity() {
        let m = wander(&body(), 9, 20.0, 1).unwrap();
        let r = resample(&m, 20.0).unwrap();
        assert_eq!(m, r);
    }

    #[test]
    fn forty_to_twenty_keeps_every_second_frame() {
        let m = wander(&body(), 11, 40.0, 2).unwrap();
        let r = resample(&m, 20.0).unwrap();
        assert_eq!(r.fps, 20.0);
        assert_eq!(r.num_frames(), 6);
        for (k, f) in r.frames.iter().enumerate() {
            assert_eq!(f, &m.frames[2 * k]);
        }
    }

    #[test]
    fn thirty_to_twenty_matches_linear_trajectory() {
        // Linear motion: interpolation reproduces the analytic positions.
        let m = glide(&body(), 0.9, 31, 30.0).unwrap();
        let r = resample(&m, 20.0).unwrap();
        assert_eq!(r.num_frames(), 21);
        for (k, f) in r.frames.iter().enumerate() {
            let t = k as f64 / 20.0;
            let expect_dx = 0.9 * t;
            let got_dx = f.root_translation.x - m.frames[0].root_translation.x;
            assert_relative_eq!(got_dx, expect_dx, epsilon = 1e-12);
        }
    }

    #[test]
    fn support_filter_boundary() {
        let plane = GroundPlane::default();
        let b = body();
        let grounded = static_stand(&b, 12, 20.0).unwrap();
        assert!(support_filter(&grounded, &plane));

        let mut lift_frames = |count: usize| {
            let mut m = static_stand(&b, 12, 20.0).unwrap();
            for f in m.frames.iter_mut().take(count) {
                for v in &mut f.vertex_positions {
                    v.z += 0.3;
                }
            }
            m.body.vertices = m.frames[0].vertex_positions.clone();
            m
        };
        // Exactly 4 offending frames: accepted. 5: rejected.
        assert!(support_filter(&lift_frames(4), &plane));
        assert!(!support_filter(&lift_frames(5), &plane));
        // Height exactly at the threshold does not offend (strictly above).
        let mut at = static_stand(&b, 12, 20.0).unwrap();
        for f in at.frames.iter_mut().take(6) {
            for v in &mut f.vertex_positions {
                v.z += SUPPORT_FILTER_HEIGHT;
            }
        }
        at.body.vertices = at.frames[0].vertex_positions.clone();
        assert!(support_filter(&at, &plane));
    }

    #[test]
    fn canonicalize_is_idempotent_and_undoes_rigid_motion() {
        let plane = GroundPlane::default();
        let stand = static_stand(&body(), 5, 20.0).unwrap();

        // The stand is already canonical.
        let c = canonicalize(&stand, &plane).unwrap();
        frames_close(&c, &stand, 1e-12);

        // Yaw by 90° and offset by (3, 4, 0), then canonicalize back.
        let yaw = nalgebra::Rotation3::from_axis_angle(
            &Vector3::z_axis(),
            std::f64::consts::FRAC_PI_2,
        )
        .into_inner();
        let moved = apply_rigid(&stand, &yaw, &Vector3::new(3.0, 4.0, 0.0)).unwrap();
        let canon = canonicalize(&moved, &plane).unwrap();
        frames_close(&canon, &stand, 1e-12);

        // Round trip: re-applying the original transform recovers the input.
        let back = apply_rigid(&canon, &yaw, &Vector3::new(3.0, 4.0, 0.0)).unwrap();
        frames_close(&back, &moved, 1e-12);

        // Idempotence on a generic wander.
        let w = wander(&body(), 6, 20.0, 3).unwrap();
        let c1 = canonicalize(&w, &plane).unwrap();
        let c2 = canonicalize(&c1, &plane).unwrap();
        frames_close(&c1, &c2, 1e-12);
        // First-frame horizontal root offset is gone.
        assert!(c1.frames[0].root_translation.x.abs() < 1e-12);
        assert!(c1.frames[0].root_translation.y.abs() < 1e-12);
    }

    #[test]
    fn canonicalize_preserves_pairwise_distances() {
        let plane = GroundPlane::default();
        let w = wander(&body(), 5, 20.0, 7).unwrap();
        let c = canonicalize(&w, &plane).unwrap();
        for (fa, fb) in w.frames.iter().zip(&c.frames) {
            for k in (0..fa.vertex_positions.len()).step_by(17) {
                for l in (k + 1..fa.vertex_positions.len()).step_by(23) {
                    let da = (fa.vertex_positions[k] - fa.vertex_positions[l]).norm();
                    let db = (fb.vertex_positions[k] - fb.vertex_positions[l]).norm();
                    assert!((da - db).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn mirror_is_an_involution() {
        let m = wander(&body(), 6, 20.0, 5).unwrap();
        let once = mirror(&m).unwrap();
        assert!(once.labels_swapped);
        let twice = mirror(&once.sequence).unwrap();
        let mut original = m.clone();
        original.traces = None;
        assert_eq!(twice.sequence, original);
    }

    #[test]
    fn symmetric_stand_is_a_mirror_fixed_point() {
        let m = static_stand(&body(), 4, 20.0).unwrap();
        let mir = mirror(&m).unwrap().sequence;
        // Joint slots land on their mirrored partners' positions exactly.
        for (fa, fb) in m.frames.iter().zip(&mir.frames) {
            for (ja, jb) in fa.joint_positions.iter().zip(&fb.joint_positions) {
                assert!((ja - jb).norm() < 1e-12);
            }
            for (ra, rb) in fa.joint_rotations_6d.iter().zip(&fb.joint_rotations_6d) {
                assert_eq!(ra, rb);
            }
        }
        // The vertex multiset is unchanged.
        let key = |v: &Vector3<f64>| (v.x.to_bits(), v.y.to_bits(), v.z.to_bits());
        let mut a: Vec<_> = m.frames[0].vertex_positions.iter().map(key).collect();
        let mut b: Vec<_> = mir.frames[0].vertex_positions.iter().map(key).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn mirror_preserves_part_volumes() {
        let m = wander(&body(), 4, 20.0, 11).unwrap();
        let mir = mirror(&m).unwrap().sequence;
        let va = crate::geometry::part_volumes(&m.body, &m.frames[0].vertex_positions).unwrap();
        let vb =
            crate::geometry::part_volumes(&mir.body, &mir.frames[0].vertex_positions).unwrap();
        for (a, b) in va.iter().zip(&vb) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn ground_zeroes_the_global_minimum() {
        let plane = GroundPlane::default();
        let b = body();

        let mut hover = static_stand(&b, 5, 20.0).unwrap();
        for f in &mut hover.frames {
            for v in &mut f.vertex_positions {
                v.z += 0.1;
            }
        }
        hover.body.vertices = hover.frames[0].vertex_positions.clone();
        let g = ground(&hover, &plane).unwrap();
        let min = g
            .frames
            .iter()
            .map(|f| lowest_vertex_height(&f.vertex_positions, &plane))
            .fold(f64::INFINITY, f64::min);
        assert!(min.abs() < 1e-9);

        let mut sunk = static_stand(&b, 5, 20.0).unwrap();
        for f in &mut sunk.frames {
            for v in &mut f.vertex_positions {
                v.z -= 0.05;
            }
        }
        sunk.body.vertices = sunk.frames[0].vertex_positions.clone();
        let g = ground(&sunk, &plane).unwrap();
        assert!(
            (lowest_vertex_height(&g.frames[0].vertex_positions, &plane)).abs() < 1e-9
        );

        // Penetration metric is driven to zero on arbitrary input.
        let wobble = bounce(&b, 0.07, 20, 20.0, 0.4).unwrap();
        let g = ground(&wobble, &plane).unwrap();
        assert!(crate::metrics::penetrate_metric(&g, &plane) <= 1e-7);
    }

    #[test]
    fn ground_leaves_skate_unchanged() {
        let plane = GroundPlane::default();
        let config = AnalysisConfig::default();
        let m = glide(&body(), 0.8, 8, 20.0).unwrap();
        let mut hovered = m.clone();
        for f in &mut hovered.frames {
            for v in &mut f.vertex_positions {
                v.z += 0.04;
            }
            for j in &mut f.joint_positions {
                j.z += 0.04;
            }
        }
        hovered.body.vertices = hovered.frames[0].vertex_positions.clone();
        let g = ground(&hovered, &plane).unwrap();
        let a = crate::metrics::skate_metric(&m, &plane, &config);
        let b2 = crate::metrics::skate_metric(&g, &plane, &config);
        assert_eq!(a.percent, b2.percent);
        assert_eq!(a.contacting_pairs, b2.contacting_pairs);
    }
}
