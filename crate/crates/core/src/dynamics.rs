//! Full-body dynamics: center of mass, accelerations, inertia force and
//! moment, angular-momentum rate, zero-moment point, pressure field, center
//! of pressure, and base of support.
//!
//! Accelerations use central differences; the first and last frame replicate
//! the nearest interior acceleration so boundary frames stay defined without
//! spurious spikes.
//!
//! Sign conventions: lever arms point from the reference toward the point
//! (`r = point - reference`), gravity is `-g·n`, and the ZMP solves the
//! horizontal torque balance `Z = C_m + (n × M) / (F · n)`. Verified against
//! the cart-table identity and a brute-force torque-balance search.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{convex_hull_2d, lowest_height_g, MassDistribution, SupportHull};
use crate::lift::{lift, na_of, v3_of, PlaneG, SeqG};
use crate::num::{Real, V3};
use crate::types::{AnalysisConfig, GroundPlane, MotionSequence};

/// Everything the dynamics chain derives for one frame.
#[derive(Clone, Debug)]
pub struct DynamicsFrame {
    /// Center of mass G.
    pub com: Vector3<f64>,
    /// G projected onto the ground plane.
    pub com_projection: Vector3<f64>,
    pub com_acceleration: Vector3<f64>,
    /// Gravity-plus-inertia force `m·g - m·a_G`, N.
    pub inertia_force: Vector3<f64>,
    /// Moment of that force system about the projected CoM, N·m.
    pub moment: Vector3<f64>,
    /// Rate of change of angular momentum about G, N·m.
    pub angular_momentum_rate: Vector3<f64>,
    /// Zero-moment point on the plane; `None` when the vertical force
    /// component is below the configured threshold (ballistic body).
    pub zmp: Option<Vector3<f64>>,
    /// Pressure-weighted center of pressure (not projected to the plane).
    pub cop: Vector3<f64>,
    /// Base of support: hull of ground-contact vertex projections.
    pub support: SupportHull,
    /// False when the lowest vertex exceeds the support-gate height;
    /// stability terms skip gated-out frames.
    pub support_gate: bool,
}

// ---------------------------------------------------------------------------
// Generic core (shared between f64 evaluation and dual-number gradients)
// ---------------------------------------------------------------------------

pub(crate) fn com_g<T: Real>(verts: &[V3<T>], masses: &[f64]) -> V3<T> {
    debug_assert_eq!(verts.len(), masses.len());
    let mut acc = V3::<T>::zeros();
    let mut total = 0.0;
    for (v, &m) in verts.iter().zip(masses) {
        acc = acc + v.scale(T::from_f64(m));
        total += m;
    }
    acc.scale(T::from_f64(1.0 / total))
}

/// Central difference at interior index `t`: `(s[t+1] - 2 s[t] + s[t-1])·fps²`.
#[inline]
pub(crate) fn central_diff_g<T: Real>(prev: V3<T>, cur: V3<T>, next: V3<T>, fps: f64) -> V3<T> {
    let two = T::from_f64(2.0);
    (next - cur.scale(two) + prev).scale(T::from_f64(fps * fps))
}

pub(crate) fn inertia_force_g<T: Real>(total_mass: f64, a_g: V3<T>, plane: &PlaneG<T>) -> V3<T> {
    let m = T::from_f64(total_mass);
    plane.gravity().scale(m) - a_g.scale(m)
}

pub(crate) fn angular_momentum_rate_g<T: Real>(
    verts: &[V3<T>],
    accels: &[V3<T>],
    masses: &[f64],
    com: V3<T>,
) -> V3<T> {
    let mut acc = V3::<T>::zeros();
    for ((v, a), &m) in verts.iter().zip(accels).zip(masses) {
        acc = acc + (*v - com).cross(a.scale(T::from_f64(m)));
    }
    acc
}

pub(crate) fn gi_moment_g<T: Real>(
    com_projection: V3<T>,
    com: V3<T>,
    total_mass: f64,
    a_g: V3<T>,
    h_dot: V3<T>,
    plane: &PlaneG<T>,
) -> V3<T> {
    let m = T::from_f64(total_mass);
    let lever = com - com_projection;
    lever.cross(plane.gravity().scale(m)) - lever.cross(a_g.scale(m)) - h_dot
}

/// Closed-form ZMP from the frame's force and moment. `None` when
/// `|F·n| <= eps` (the torque balance degenerates for a ballistic body).
pub(crate) fn zmp_g<T: Real>(
    com_projection: V3<T>,
    moment: V3<T>,
    force: V3<T>,
    plane: &PlaneG<T>,
    eps_vertical_force: f64,
) -> Option<V3<T>> {
    let denom = force.dot(plane.normal);
    if denom.value().abs() <= eps_vertical_force {
        return None;
    }
    Some(com_projection + plane.normal.cross(moment).scale(T::one() / denom))
}

/// Heuristic pressure weight of a point at height `h`:
/// `1 - α·h` below the plane, `exp(-γ·h)` above. Continuous at 0.
pub(crate) fn pressure_weight_g<T: Real>(h: T, alpha: f64, gamma: f64) -> T {
    if h.value() < 0.0 {
        T::one() - T::from_f64(alpha) * h
    } else {
        (-T::from_f64(gamma) * h).exp()
    }
}

pub(crate) fn cop_g<T: Real>(points: &[V3<T>], plane: &PlaneG<T>, alpha: f64, gamma: f64) -> V3<T> {
    let mut num = V3::<T>::zeros();
    let mut den = T::zero();
    for p in points {
        let w = pressure_weight_g(plane.height(*p), alpha, gamma);
        num = num + p.scale(w);
        den = den + w;
    }
    num.scale(T::one() / den)
}

/// Barycentric surface samples, area-weighted on the rest-frame geometry.
/// Deterministic per seed.
pub(crate) fn cop_surface_samples(
    faces: &[[usize; 3]],
    rest_vertices: &[Vector3<f64>],
    n: usize,
    seed: u64,
) -> Vec<(usize, [f64; 3])> {
    let mut cumulative = Vec::with_capacity(faces.len());
    let mut total = 0.0;
    for f in faces {
        let a = rest_vertices[f[0]];
        let b = rest_vertices[f[1]];
        let c = rest_vertices[f[2]];
        total += (b - a).cross(&(c - a)).norm() / 2.0;
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let target = rng.gen_range(0.0..total);
            let fi = cumulative.partition_point(|&c| c < target).min(faces.len() - 1);
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            let su = r1.sqrt();
            (fi, [1.0 - su, su * (1.0 - r2), su * r2])
        })
        .collect()
}

/// Materialize CoP evaluation points for one frame: either the mesh vertices
/// or the configured barycentric surface samples.
pub(crate) fn cop_points_g<T: Real>(
    verts: &[V3<T>],
    samples: Option<&[(usize, [f64; 3])]>,
    faces: &[[usize; 3]],
) -> Vec<V3<T>> {
    match samples {
        None => verts.to_vec(),
        Some(samples) => samples
            .iter()
            .map(|&(fi, w)| {
                let f = faces[fi];
                verts[f[0]].scale(T::from_f64(w[0]))
                    + verts[f[1]].scale(T::from_f64(w[1]))
                    + verts[f[2]].scale(T::from_f64(w[2]))
            })
            .collect(),
    }
}

/// Per-frame stability residual `‖C_p − Z‖` over gated interior frames,
/// generic over the scalar. Returns the per-frame residuals (gated-out or
/// ZMP-undefined frames yield `None`).
pub(crate) fn stability_residuals_g<T: Real>(
    seq: &SeqG<T>,
    masses: &MassDistribution,
    plane: &PlaneG<T>,
    config: &AnalysisConfig,
    samples: Option<&[(usize, [f64; 3])]>,
    faces: &[[usize; 3]],
) -> Vec<Option<T>> {
    let t_count = seq.frames.len();
    let coms: Vec<V3<T>> = seq
        .frames
        .iter()
        .map(|f| com_g(&f.verts, &masses.vertex_masses))
        .collect();

    let mut out = Vec::with_capacity(t_count.saturating_sub(2));
    for t in 1..t_count.saturating_sub(1) {
        let frame = &seq.frames[t];
        let h_min = lowest_height_g(&frame.verts, plane.origin, plane.normal);
        if h_min.value() > config.support_gate_height {
            out.push(None);
            continue;
        }
        let a_g = central_diff_g(coms[t - 1], coms[t], coms[t + 1], seq.fps);
        let force = inertia_force_g(masses.total_mass, a_g, plane);
        let accels: Vec<V3<T>> = (0..frame.verts.len())
            .map(|i| {
                central_diff_g(
                    seq.frames[t - 1].verts[i],
                    frame.verts[i],
                    seq.frames[t + 1].verts[i],
                    seq.fps,
                )
            })
            .collect();
        let h_dot = angular_momentum_rate_g(&frame.verts, &accels, &masses.vertex_masses, coms[t]);
        let c_m = plane.project(coms[t]);
        let moment = gi_moment_g(c_m, coms[t], masses.total_mass, a_g, h_dot, plane);
        let Some(zmp) = zmp_g(c_m, moment, force, plane, config.eps_vertical_force) else {
            out.push(None);
            continue;
        };
        let points = cop_points_g(&frame.verts, samples, faces);
        let cop = cop_g(&points, plane, config.alpha, config.gamma);
        out.push(Some((cop - zmp).norm()));
    }
    out
}

// ---------------------------------------------------------------------------
// Public f64 operations
// ---------------------------------------------------------------------------

/// Mass-weighted mean of the vertices.
pub fn center_of_mass(frame_vertices: &[Vector3<f64>], masses: &MassDistribution) -> Vector3<f64> {
    let verts: Vec<V3<f64>> = frame_vertices.iter().map(v3_of).collect();
    na_of(com_g(&verts, &masses.vertex_masses))
}

/// Central-difference acceleration of a position series; boundary entries
/// replicate the nearest interior value. Needs at least 3 samples.
pub fn com_acceleration(series: &[Vector3<f64>], fps: f64) -> Result<Vec<Vector3<f64>>> {
    if series.len() < 3 {
        return Err(Error::TooShort {
            frames: series.len(),
        });
    }
    let n = series.len();
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let ti = t.clamp(1, n - 2);
        out.push(na_of(central_diff_g(
            v3_of(&series[ti - 1]),
            v3_of(&series[ti]),
            v3_of(&series[ti + 1]),
            fps,
        )));
    }
    Ok(out)
}

/// Per-vertex central-difference accelerations across frames; boundary frames
/// replicate the nearest interior value.
pub fn vertex_accelerations(
    frames: &[Vec<Vector3<f64>>],
    fps: f64,
) -> Result<Vec<Vec<Vector3<f64>>>> {
    if frames.len() < 3 {
        return Err(Error::TooShort {
            frames: frames.len(),
        });
    }
    let t_count = frames.len();
    let n = frames[0].len();
    let mut out = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let ti = t.clamp(1, t_count - 2);
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            row.push(na_of(central_diff_g(
                v3_of(&frames[ti - 1][i]),
                v3_of(&frames[ti][i]),
                v3_of(&frames[ti + 1][i]),
                fps,
            )));
        }
        out.push(row);
    }
    Ok(out)
}

/// Gravity-plus-inertia force `m·g - m·a_G`.
pub fn inertia_force(total_mass: f64, a_g: &Vector3<f64>, plane: &GroundPlane) -> Vector3<f64> {
    plane.gravity() * total_mass - a_g * total_mass
}

/// `Σ (v_i - G) × m_i·a_i`.
pub fn angular_momentum_rate(
    frame_vertices: &[Vector3<f64>],
    vertex_accels: &[Vector3<f64>],
    masses: &MassDistribution,
    com: &Vector3<f64>,
) -> Vector3<f64> {
    let mut acc = Vector3::zeros();
    for ((v, a), &m) in frame_vertices
        .iter()
        .zip(vertex_accels)
        .zip(&masses.vertex_masses)
    {
        acc += (v - com).cross(&(a * m));
    }
    acc
}

/// Moment of the gravity-plus-inertia system about the projected CoM:
/// `(G - C_m) × m·g - (G - C_m) × m·a_G - Ḣ_G`.
pub fn gi_moment(
    com_projection: &Vector3<f64>,
    com: &Vector3<f64>,
    total_mass: f64,
    a_g: &Vector3<f64>,
    h_dot: &Vector3<f64>,
    plane: &GroundPlane,
) -> Vector3<f64> {
    let lever = com - com_projection;
    lever.cross(&(plane.gravity() * total_mass)) - lever.cross(&(a_g * total_mass)) - h_dot
}

/// Closed-form ZMP on the plane; `None` when `|F·n| <= eps_vertical_force`.
pub fn zmp(
    com_projection: &Vector3<f64>,
    moment: &Vector3<f64>,
    force: &Vector3<f64>,
    plane: &GroundPlane,
    eps_vertical_force: f64,
) -> Option<Vector3<f64>> {
    let denom = force.dot(&plane.normal);
    if denom.abs() <= eps_vertical_force {
        return None;
    }
    Some(com_projection + plane.normal.cross(moment) / denom)
}

/// Pressure weight at signed height `h`.
pub fn pressure_weight(h: f64, alpha: f64, gamma: f64) -> f64 {
    pressure_weight_g(h, alpha, gamma)
}

/// Pressure weights of a point set above the plane.
pub fn pressure_field(
    points: &[Vector3<f64>],
    plane: &GroundPlane,
    alpha: f64,
    gamma: f64,
) -> Vec<f64> {
    points
        .iter()
        .map(|p| pressure_weight(plane.height(p), alpha, gamma))
        .collect()
}

/// Weighted average of the points; a convex combination, so the result lies
/// in their convex hull.
pub fn center_of_pressure(points: &[Vector3<f64>], weights: &[f64]) -> Result<Vector3<f64>> {
    if points.len() != weights.len() || points.is_empty() {
        return Err(Error::Shape(format!(
            "{} points vs {} weights",
            points.len(),
            weights.len()
        )));
    }
    let den: f64 = weights.iter().sum();
    if den <= 0.0 {
        return Err(Error::InvalidInput("weights must sum to a positive value".into()));
    }
    let mut num = Vector3::zeros();
    for (p, &w) in points.iter().zip(weights) {
        num += p * w;
    }
    Ok(num / den)
}

/// Convex hull of the plane projections of all vertices lower than
/// `contact_height`. Empty when the body is airborne.
pub fn base_of_support(
    frame_vertices: &[Vector3<f64>],
    plane: &GroundPlane,
    contact_height: f64,
) -> SupportHull {
    let contacts: Vec<Vector2<f64>> = frame_vertices
        .iter()
        .filter(|v| plane.height(v) < contact_height)
        .map(|v| {
            let uv = plane.to_plane_coords(v);
            Vector2::new(uv[0], uv[1])
        })
        .collect();
    convex_hull_2d(&contacts)
}

/// Derive the full [`DynamicsFrame`] for frame `t` of a sequence.
pub fn analyze_frame(
    sequence: &MotionSequence,
    t: usize,
    masses: &MassDistribution,
    plane: &GroundPlane,
    config: &AnalysisConfig,
) -> Result<DynamicsFrame> {
    sequence.validate()?;
    if t >= sequence.num_frames() {
        return Err(Error::InvalidInput(format!(
            "frame {t} out of range 0..{}",
            sequence.num_frames()
        )));
    }
    let seq = lift::<f64>(sequence);
    let plane_g = PlaneG::from_plane(plane);
    let samples = config.cop_surface_samples.map(|n| {
        cop_surface_samples(
            &sequence.body.faces,
            &sequence.body.vertices,
            n,
            config.cop_sample_seed,
        )
    });
    Ok(frame_dynamics(
        &seq,
        t,
        masses,
        &plane_g,
        config,
        samples.as_deref(),
        &sequence.body.faces,
    ))
}

/// Derive [`DynamicsFrame`]s for every frame of a sequence.
pub fn analyze_sequence(
    sequence: &MotionSequence,
    masses: &MassDistribution,
    plane: &GroundPlane,
    config: &AnalysisConfig,
) -> Result<Vec<DynamicsFrame>> {
    sequence.validate()?;
    let seq = lift::<f64>(sequence);
    let plane_g = PlaneG::from_plane(plane);
    let samples = config.cop_surface_samples.map(|n| {
        cop_surface_samples(
            &sequence.body.faces,
            &sequence.body.vertices,
            n,
            config.cop_sample_seed,
        )
    });
    Ok((0..sequence.num_frames())
        .map(|t| {
            frame_dynamics(
                &seq,
                t,
                masses,
                &plane_g,
                config,
                samples.as_deref(),
                &sequence.body.faces,
            )
        })
        .collect())
}

fn frame_dynamics(
    seq: &SeqG<f64>,
    t: usize,
    masses: &MassDistribution,
    plane: &PlaneG<f64>,
    config: &AnalysisConfig,
    samples: Option<&[(usize, [f64; 3])]>,
    faces: &[[usize; 3]],
) -> DynamicsFrame {
    let t_count = seq.frames.len();
    // Boundary frames use the nearest interior accelerations.
    let ti = t.clamp(1, t_count - 2);
    let frame = &seq.frames[t];

    let com_at = |k: usize| com_g(&seq.frames[k].verts, &masses.vertex_masses);
    let com = com_at(t);
    let a_g = central_diff_g(com_at(ti - 1), com_at(ti), com_at(ti + 1), seq.fps);
    let accels: Vec<V3<f64>> = (0..frame.verts.len())
        .map(|i| {
            central_diff_g(
                seq.frames[ti - 1].verts[i],
                seq.frames[ti].verts[i],
                seq.frames[ti + 1].verts[i],
                seq.fps,
            )
        })
        .collect();

    let force = inertia_force_g(masses.total_mass, a_g, plane);
    let h_dot = angular_momentum_rate_g(&frame.verts, &accels, &masses.vertex_masses, com);
    let c_m = plane.project(com);
    let moment = gi_moment_g(c_m, com, masses.total_mass, a_g, h_dot, plane);
    let zmp = zmp_g(c_m, moment, force, plane, config.eps_vertical_force);

    let points = cop_points_g(&frame.verts, samples, faces);
    let cop = cop_g(&points, plane, config.alpha, config.gamma);

    let gp = GroundPlane {
        origin: na_of(plane.origin),
        normal: na_of(plane.normal),
        gravity_magnitude: plane.gravity_magnitude,
    };
    let verts_na: Vec<Vector3<f64>> = frame.verts.iter().map(|v| na_of(*v)).collect();
    let support = base_of_support(&verts_na, &gp, config.contact_height);
    let h_min = lowest_height_g(&frame.verts, plane.origin, plane.normal);

    DynamicsFrame {
        com: na_of(com),
        com_projection: na_of(c_m),
        com_acceleration: na_of(a_g),
        inertia_force: na_of(force),
        moment: na_of(moment),
        angular_momentum_rate: na_of(h_dot),
        zmp: zmp.map(na_of),
        cop: na_of(cop),
        support,
        support_gate: h_min <= config.support_gate_height,
    }
}
