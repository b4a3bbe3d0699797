//! Procedural bodies and analytic motions.
//!
//! Every generator is deterministic given its parameters and emits the
//! analytic ground-truth traces it knows about (ZMP path, lowest-vertex
//! height, foot speed) in the sequence metadata, so tests and the CLI can
//! check computed values against an independent closed form.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rotations::matrix_to_sixd;
use crate::types::{BodyMesh, MotionFrame, MotionSequence, OracleTraces, DEFAULT_JOINTS};

/// Eight-corner axis-aligned box with outward-oriented faces.
pub fn box_mesh(
    center: Vector3<f64>,
    half_extents: Vector3<f64>,
) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let c = center;
    let h = half_extents;
    let vertices = vec![
        c + Vector3::new(-h.x, -h.y, -h.z),
        c + Vector3::new(h.x, -h.y, -h.z),
        c + Vector3::new(h.x, h.y, -h.z),
        c + Vector3::new(-h.x, h.y, -h.z),
        c + Vector3::new(-h.x, -h.y, h.z),
        c + Vector3::new(h.x, -h.y, h.z),
        c + Vector3::new(h.x, h.y, h.z),
        c + Vector3::new(-h.x, h.y, h.z),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2], // bottom
        [4, 5, 6],
        [4, 6, 7], // top
        [0, 1, 5],
        [0, 5, 4], // y-
        [2, 3, 7],
        [2, 7, 6], // y+
        [0, 4, 7],
        [0, 7, 3], // x-
        [1, 2, 6],
        [1, 6, 5], // x+
    ];
    (vertices, faces)
}

/// Box with each face tessellated into an `s × s` grid (vertices are not
/// shared across faces; the surface is still geometrically closed and
/// consistently oriented, so signed volumes stay exact).
pub fn box_mesh_subdivided(
    center: Vector3<f64>,
    half_extents: Vector3<f64>,
    s: usize,
) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    if s <= 1 {
        return box_mesh(center, half_extents);
    }
    let h = half_extents;
    // (origin corner, u edge, v edge) per face, with u × v outward.
    let faces6 = [
        // bottom (z-): outward is -z
        (
            Vector3::new(-h.x, -h.y, -h.z),
            Vector3::new(0.0, 2.0 * h.y, 0.0),
            Vector3::new(2.0 * h.x, 0.0, 0.0),
        ),
        // top (z+)
        (
            Vector3::new(-h.x, -h.y, h.z),
            Vector3::new(2.0 * h.x, 0.0, 0.0),
            Vector3::new(0.0, 2.0 * h.y, 0.0),
        ),
        // y-
        (
            Vector3::new(-h.x, -h.y, -h.z),
            Vector3::new(2.0 * h.x, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 2.0 * h.z),
        ),
        // y+
        (
            Vector3::new(h.x, h.y, -h.z),
            Vector3::new(-2.0 * h.x, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 2.0 * h.z),
        ),
        // x-
        (
            Vector3::new(-h.x, h.y, -h.z),
            Vector3::new(0.0, -2.0 * h.y, 0.0),
            Vector3::new(0.0, 0.0, 2.0 * h.z),
        ),
        // x+
        (
            Vector3::new(h.x, -h.y, -h.z),
            Vector3::new(0.0, 2.0 * h.y, 0.0),
            Vector3::new(0.0, 0.0, 2.0 * h.z),
        ),
    ];
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (origin, u, v) in faces6 {
        let base = vertices.len();
        for i in 0..=s {
            for j in 0..=s {
                let p = center + origin + u * (i as f64 / s as f64) + v * (j as f64 / s as f64);
                vertices.push(p);
            }
        }
        let idx = |i: usize, j: usize| base + i * (s + 1) + j;
        for i in 0..s {
            for j in 0..s {
                faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }
    (vertices, faces)
}

/// Procedural body: mesh plus rest-pose joint positions.
#[derive(Clone, Debug)]
pub struct SynthBody {
    pub mesh: BodyMesh,
    pub rest_joints: Vec<Vector3<f64>>,
}

#[derive(Clone, Copy, Debug)]
pub struct HumanoidParams {
    /// Standing height, m.
    pub height: f64,
    /// Number of part labels, 1..=10. Fewer than 10 groups the canonical
    /// ten segments round-robin.
    pub parts: usize,
    /// Face tessellation factor; 0 or 1 keeps plain 8-corner boxes.
    pub subdivisions: usize,
}

impl Default for HumanoidParams {
    fn default() -> Self {
        HumanoidParams {
            height: 1.7,
            parts: 10,
            subdivisions: 0,
        }
    }
}

/// Blocky biped standing on the ground plane, feet at height zero,
/// bilaterally symmetric about x = 0. Ten box segments labeled
/// head, torso, upper arms, forearms, thighs, and lower legs (shin + foot).
pub fn humanoid(params: HumanoidParams) -> Result<SynthBody> {
    if params.height <= 0.0 {
        return Err(Error::InvalidInput("height must be positive".into()));
    }
    if params.parts == 0 || params.parts > 10 {
        return Err(Error::InvalidInput(format!(
            "parts must be in 1..=10, got {}",
            params.parts
        )));
    }
    let u = params.height / 1.7;

    // (canonical label, center, half extents); right-side segments are exact
    // x-negations of left-side ones.
    let mut boxes: Vec<(usize, Vector3<f64>, Vector3<f64>)> = vec![
        (1, Vector3::new(0.0, 0.0, 1.59 * u), Vector3::new(0.09, 0.10, 0.11) * u),
        (2, Vector3::new(0.0, 0.0, 1.175 * u), Vector3::new(0.17, 0.10, 0.275) * u),
    ];
    let mirrored = [
        (3, 4, Vector3::new(0.24 * u, 0.0, 1.24 * u), Vector3::new(0.045, 0.045, 0.14) * u),
        (5, 6, Vector3::new(0.24 * u, 0.0, 0.96 * u), Vector3::new(0.04, 0.04, 0.14) * u),
        (7, 8, Vector3::new(0.09 * u, 0.0, 0.675 * u), Vector3::new(0.075, 0.075, 0.225) * u),
        // shin
        (9, 10, Vector3::new(0.09 * u, 0.0, 0.265 * u), Vector3::new(0.055, 0.055, 0.185) * u),
        // foot (same labels as the shin: one lower-leg part each side)
        (9, 10, Vector3::new(0.10 * u, 0.075 * u, 0.04 * u), Vector3::new(0.05, 0.125, 0.04) * u),
    ];
    for (left, right, c, h) in mirrored {
        boxes.push((left, c, h));
        boxes.push((right, Vector3::new(-c.x, c.y, c.z), h));
    }

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut part_labels = Vec::new();
    let mut left_foot_vertices = Vec::new();
    let mut right_foot_vertices = Vec::new();
    for (i, (label, c, h)) in boxes.iter().enumerate() {
        let (v, f) = box_mesh_subdivided(*c, *h, params.subdivisions);
        let base = vertices.len();
        faces.extend(f.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        let is_foot = i >= boxes.len() - 2;
        for k in 0..v.len() {
            if is_foot {
                if *label == 9 {
                    left_foot_vertices.push(base + k);
                } else {
                    right_foot_vertices.push(base + k);
                }
            }
            part_labels.push(((*label - 1) % params.parts) + 1);
        }
        vertices.extend(v);
    }

    // SMPL-style 24 joint slots; feet are ankles (7, 8) and toes (10, 11).
    let rest_joints: Vec<Vector3<f64>> = [
        [0.0, 0.0, 0.90],   // 0 pelvis (root)
        [0.09, 0.0, 0.87],  // 1 left hip
        [-0.09, 0.0, 0.87], // 2 right hip
        [0.0, 0.0, 1.00],   // 3 spine1
        [0.09, 0.0, 0.45],  // 4 left knee
        [-0.09, 0.0, 0.45], // 5 right knee
        [0.0, 0.0, 1.10],   // 6 spine2
        [0.10, 0.0, 0.08],  // 7 left ankle
        [-0.10, 0.0, 0.08], // 8 right ankle
        [0.0, 0.0, 1.20],   // 9 spine3
        [0.10, 0.15, 0.02], // 10 left toe
        [-0.10, 0.15, 0.02], // 11 right toe
        [0.0, 0.0, 1.45],   // 12 neck
        [0.06, 0.0, 1.40],  // 13 left collar
        [-0.06, 0.0, 1.40], // 14 right collar
        [0.0, 0.0, 1.55],   // 15 head
        [0.22, 0.0, 1.38],  // 16 left shoulder
        [-0.22, 0.0, 1.38], // 17 right shoulder
        [0.24, 0.0, 1.10],  // 18 left elbow
        [-0.24, 0.0, 1.10], // 19 right elbow
        [0.24, 0.0, 0.82],  // 20 left wrist
        [-0.24, 0.0, 0.82], // 21 right wrist
        [0.24, 0.0, 0.72],  // 22 left hand
        [-0.24, 0.0, 0.72], // 23 right hand
    ]
    .iter()
    .map(|p| Vector3::new(p[0], p[1], p[2]) * u)
    .collect();
    debug_assert_eq!(rest_joints.len(), DEFAULT_JOINTS);

    let joint_lr_pairs = vec![
        (1, 2),
        (4, 5),
        (7, 8),
        (10, 11),
        (13, 14),
        (16, 17),
        (18, 19),
        (20, 21),
        (22, 23),
    ];

    let mesh = BodyMesh {
        vertices,
        faces,
        part_labels,
        num_parts: params.parts,
        left_foot_vertices,
        right_foot_vertices,
        joint_lr_pairs,
    };
    mesh.validate()?;
    Ok(SynthBody { mesh, rest_joints })
}

const IDENTITY_6D: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

fn finalize(
    mut body: BodyMesh,
    fps: f64,
    frames: Vec<MotionFrame>,
    traces: Option<OracleTraces>,
) -> Result<MotionSequence> {
    body.vertices = frames[0].vertex_positions.clone();
    let m = MotionSequence {
        fps,
        body,
        frames,
        traces,
    };
    m.validate()?;
    Ok(m)
}

/// Rigid translate of a body's rest pose by `offset`, root carried along.
fn offset_frame(body: &SynthBody, offset: Vector3<f64>) -> MotionFrame {
    MotionFrame {
        vertex_positions: body.mesh.vertices.iter().map(|v| v + offset).collect(),
        joint_positions: body.rest_joints.iter().map(|v| v + offset).collect(),
        joint_rotations_6d: vec![IDENTITY_6D; body.rest_joints.len()],
        root_translation: body.rest_joints[0] + offset,
    }
}

/// Identical frames of the rest pose, feet on the ground.
pub fn static_stand(body: &SynthBody, frames: usize, fps: f64) -> Result<MotionSequence> {
    if frames < 3 {
        return Err(Error::TooShort { frames });
    }
    let frame = offset_frame(body, Vector3::zeros());
    finalize(
        body.mesh.clone(),
        fps,
        vec![frame; frames],
        Some(OracleTraces {
            lowest_height: Some(vec![0.0; frames]),
            foot_speed: Some(0.0),
            ..Default::default()
        }),
    )
}

/// Rigid horizontal translation at constant speed, feet at height zero.
pub fn glide(body: &SynthBody, speed: f64, frames: usize, fps: f64) -> Result<MotionSequence> {
    if frames < 3 {
        return Err(Error::TooShort { frames });
    }
    let seq: Vec<MotionFrame> = (0..frames)
        .map(|t| offset_frame(body, Vector3::new(speed * t as f64 / fps, 0.0, 0.0)))
        .collect();
    finalize(
        body.mesh.clone(),
        fps,
        seq,
        Some(OracleTraces {
            lowest_height: Some(vec![0.0; frames]),
            foot_speed: Some(speed),
            ..Default::default()
        }),
    )
}

/// Sinusoidal vertical translation crossing the ground, one cycle per
/// second: offset(t) = amplitude · sin(2π·t/fps + phase).
pub fn bounce(
    body: &SynthBody,
    amplitude: f64,
    frames: usize,
    fps: f64,
    phase: f64,
) -> Result<MotionSequence> {
    if frames < 3 {
        return Err(Error::TooShort { frames });
    }
    let mut seq = Vec::with_capacity(frames);
    let mut h_min = Vec::with_capacity(frames);
    for t in 0..frames {
        let s = amplitude * (2.0 * std::f64::consts::PI * t as f64 / fps + phase).sin();
        seq.push(offset_frame(body, Vector3::new(0.0, 0.0, s)));
        h_min.push(s);
    }
    finalize(
        body.mesh.clone(),
        fps,
        seq,
        Some(OracleTraces {
            lowest_height: Some(h_min),
            ..Default::default()
        }),
    )
}

/// Sinusoidal horizontal acceleration profile for [`cart_table`].
#[derive(Clone, Copy, Debug)]
pub struct SinusoidProfile {
    /// Peak acceleration, m/s².
    pub accel_amplitude: f64,
    pub frequency_hz: f64,
    pub phase: f64,
}

/// Compact rigid box translating horizontally with a prescribed sinusoidal
/// acceleration at constant height. The analytic ZMP trace
/// `x(t) − (z/g)·ẍ(t)` (g = 9.81) is emitted alongside.
pub fn cart_table(
    mass_height: f64,
    profile: SinusoidProfile,
    frames: usize,
    fps: f64,
) -> Result<MotionSequence> {
    if frames < 3 {
        return Err(Error::TooShort { frames });
    }
    if mass_height <= 0.1 {
        return Err(Error::InvalidInput(
            "mass height must exceed the body half-extent".into(),
        ));
    }
    let omega = 2.0 * std::f64::consts::PI * profile.frequency_hz;
    if omega == 0.0 {
        return Err(Error::InvalidInput("frequency must be nonzero".into()));
    }
    // x(t) = -A/ω² · sin(ωt + φ) gives ẍ(t) = A · sin(ωt + φ).
    let pos_amp = -profile.accel_amplitude / (omega * omega);
    let g = 9.81;

    let (vertices, faces) = box_mesh(Vector3::zeros(), Vector3::new(0.05, 0.05, 0.05));
    let n = vertices.len();
    let body = BodyMesh {
        vertices: vertices.clone(),
        faces,
        part_labels: vec![1; n],
        num_parts: 1,
        left_foot_vertices: vec![],
        right_foot_vertices: vec![],
        joint_lr_pairs: vec![],
    };

    let mut seq = Vec::with_capacity(frames);
    let mut zmp = Vec::with_capacity(frames);
    for t in 0..frames {
        let tt = t as f64 / fps;
        let x = pos_amp * (omega * tt + profile.phase).sin();
        let accel = profile.accel_amplitude * (omega * tt + profile.phase).sin();
        let center = Vector3::new(x, 0.0, mass_height);
        seq.push(MotionFrame {
            vertex_positions: vertices.iter().map(|v| v + center).collect(),
            joint_positions: vec![center; DEFAULT_JOINTS],
            joint_rotations_6d: vec![IDENTITY_6D; DEFAULT_JOINTS],
            root_translation: center,
        });
        zmp.push([x - mass_height / g * accel, 0.0]);
    }
    finalize(
        body,
        fps,
        seq,
        Some(OracleTraces {
            zmp_plane: Some(zmp),
            ..Default::default()
        }),
    )
}

/// Seeded smooth random rigid motion: low-frequency translation plus yaw,
/// with a small vertical bob. Deterministic per seed.
pub fn wander(body: &SynthBody, frames: usize, fps: f64, seed: u64) -> Result<MotionSequence> {
    if frames < 3 {
        return Err(Error::TooShort { frames });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut harmonics = |amp: f64| -> [(f64, f64, f64); 2] {
        std::array::from_fn(|_| {
            (
                rng.gen_range(-amp..amp),
                rng.gen_range(0.2..0.8f64),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
    };
    let hx = harmonics(0.6);
    let hy = harmonics(0.6);
    let hz = harmonics(0.04);
    let hyaw = harmonics(0.7);
    let eval = |h: &[(f64, f64, f64); 2], t: f64| -> f64 {
        h.iter()
            .map(|(a, f, p)| a * (std::f64::consts::TAU * f * t + p).sin())
            .sum()
    };

    let mut seq = Vec::with_capacity(frames);
    for t in 0..frames {
        let tt = t as f64 / fps;
        let d = Vector3::new(eval(&hx, tt), eval(&hy, tt), eval(&hz, tt).max(-0.01));
        let yaw = eval(&hyaw, tt);
        let rot: Matrix3<f64> =
            nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), yaw).into_inner();
        let mut rots = vec![IDENTITY_6D; body.rest_joints.len()];
        rots[0] = matrix_to_sixd(&rot);
        seq.push(MotionFrame {
            vertex_positions: body.mesh.vertices.iter().map(|v| rot * v + d).collect(),
            joint_positions: body.rest_joints.iter().map(|v| rot * v + d).collect(),
            joint_rotations_6d: rots,
            root_translation: rot * body.rest_joints[0] + d,
        });
    }
    finalize(body.mesh.clone(), fps, seq, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::part_volumes;
    use approx::assert_relative_eq;

    #[test]
    fn humanoid_has_positive_part_volumes() {
        let b = humanoid(HumanoidParams::default()).unwrap();
        let v = part_volumes(&b.mesh, &b.mesh.vertices).unwrap();
        assert_eq!(v.len(), 10);
        assert!(v.iter().all(|&x| x > 0.0));
        // Feet rest exactly on the ground.
        let zmin = b
            .mesh
            .vertices
            .iter()
            .map(|v| v.z)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(zmin, 0.0);
    }

    #[test]
    fn humanoid_is_deterministic() {
        let a = humanoid(HumanoidParams::default()).unwrap();
        let b = humanoid(HumanoidParams::default()).unwrap();
        assert_eq!(a.mesh, b.mesh);
        assert_eq!(a.rest_joints, b.rest_joints);
    }

    #[test]
    fn single_part_humanoid() {
        let b = humanoid(HumanoidParams {
            parts: 1,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(b.mesh.num_parts, 1);
        let v = part_volumes(&b.mesh, &b.mesh.vertices).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0] > 0.05);
    }

    #[test]
    fn humanoid_is_x_symmetric() {
        let b = humanoid(HumanoidParams::default()).unwrap();
        // Every vertex's x-negation is also a vertex.
        let mut mirrored: Vec<[f64; 3]> = b
            .mesh
            .vertices
            .iter()
            .map(|v| [-v.x, v.y, v.z])
            .collect();
        let mut plain: Vec<[f64; 3]> = b.mesh.vertices.iter().map(|v| [v.x, v.y, v.z]).collect();
        let key = |p: &[f64; 3]| (p[0].to_bits(), p[1].to_bits(), p[2].to_bits());
        mirrored.sort_by_key(key);
        plain.sort_by_key(key);
        assert_eq!(mirrored, plain);
    }

    #[test]
    fn subdivided_box_volume_matches_plain() {
        let (v0, f0) = box_mesh(Vector3::new(0.3, -0.2, 0.9), Vector3::new(0.2, 0.3, 0.4));
        let (v3, f3) =
            box_mesh_subdivided(Vector3::new(0.3, -0.2, 0.9), Vector3::new(0.2, 0.3, 0.4), 3);
        let vol = |verts: &Vec<Vector3<f64>>, faces: &Vec<[usize; 3]>| -> f64 {
            faces
                .iter()
                .map(|f| verts[f[0]].dot(&verts[f[1]].cross(&verts[f[2]])) / 6.0)
                .sum()
        };
        assert_relative_eq!(vol(&v0, &f0), vol(&v3, &f3), max_relative = 1e-12);
        assert_eq!(v3.len(), 6 * 16);
    }

    #[test]
    fn generators_are_deterministic_and_loadable() {
        let b = humanoid(HumanoidParams::default()).unwrap();
        let m1 = glide(&b, 1.0, 10, 20.0).unwrap();
        let m2 = glide(&b, 1.0, 10, 20.0).unwrap();
        assert_eq!(m1, m2);

        let w1 = wander(&b, 8, 20.0, 42).unwrap();
        let w2 = wander(&b, 8, 20.0, 42).unwrap();
        assert_eq!(w1, w2);

        let mut buf = Vec::new();
        crate::io::write_motion(&w1, &mut buf).unwrap();
        let back = crate::io::read_motion(buf.as_slice()).unwrap();
        assert_eq!(w1, back);
    }

    #[test]
    fn cart_table_traces_are_consistent() {
        let m = cart_table(
            1.0,
            SinusoidProfile {
                accel_amplitude: 1.0,
                frequency_hz: 0.5,
                phase: 0.0,
            },
            50,
            20.0,
        )
        .unwrap();
        let zmp = m.traces.as_ref().unwrap().zmp_plane.as_ref().unwrap();
        assert_eq!(zmp.len(), 50);
        // Doubling the height doubles the ZMP offset from the body center.
        let m2 = cart_table(
            2.0,
            SinusoidProfile {
                accel_amplitude: 1.0,
                frequency_hz: 0.5,
                phase: 0.0,
            },
            50,
            20.0,
        )
        .unwrap();
        let zmp2 = m2.traces.as_ref().unwrap().zmp_plane.as_ref().unwrap();
        for t in 0..50 {
            let x = m.frames[t].root_translation.x;
            assert_relative_eq!(zmp2[t][0] - x, 2.0 * (zmp[t][0] - x), max_relative = 1e-9);
        }
    }

    #[test]
    fn bounce_trace_matches_mesh_minimum() {
        let b = humanoid(HumanoidParams::default()).unwrap();
        let m = bounce(&b, 0.05, 30, 20.0, 0.3).unwrap();
        let trace = m.traces.as_ref().unwrap().lowest_height.clone().unwrap();
        let plane = crate::types::GroundPlane::default();
        for (t, h) in trace.iter().enumerate() {
            let got = crate::geometry::lowest_vertex_height(&m.frames[t].vertex_positions, &plane);
            assert_relative_eq!(got, *h, epsilon = 1e-12);
        }
    }
}
