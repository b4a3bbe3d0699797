//! Forward-mode gradients of every loss, plus the finite-difference harness
//! that verifies them.
//!
//! Gradients come from evaluating the generic loss implementations with dual
//! numbers, one seeded input component at a time. The primal side of a dual
//! evaluation performs the identical f64 operation sequence as the plain
//! path, so values agree exactly and the derivative is the exact derivative
//! of the implemented formulas (branch decisions held fixed at kinks).
//!
//! Differentiation targets:
//! - `VertexPositions`: individual vertex coordinates.
//! - `RootTranslation`: per-frame root shifts, with the frame's vertices and
//!   joints rigidly attached.
//! - `JointRotations6d`: raw 6d rotation components (the cycle rotation term
//!   is the only loss that depends on them).

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::MassDistribution;
use crate::lift::{lift, lift_seeded, PlaneG, Seed, SeqG};
use crate::losses::{
    dyn_stability_g, float_g, penetration_g, position_cycle_g, rotation_cycle_g, slide_g,
    GradientArray, LossValue,
};
use crate::num::{Dual, Real, V3};
use crate::types::{AnalysisConfig, GroundPlane, LossWeights, MotionSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    Penetrate,
    Float,
    Slide,
    DynStability,
    RotationCycle,
    PositionCycle,
    Total,
}

impl LossKind {
    pub const ALL: [LossKind; 7] = [
        LossKind::Penetrate,
        LossKind::Float,
        LossKind::Slide,
        LossKind::DynStability,
        LossKind::RotationCycle,
        LossKind::PositionCycle,
        LossKind::Total,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Penetrate => "penetrate",
            LossKind::Float => "float",
            LossKind::Slide => "slide",
            LossKind::DynStability => "dyn-stability",
            LossKind::RotationCycle => "rotation-cycle",
            LossKind::PositionCycle => "position-cycle",
            LossKind::Total => "total",
        }
    }

    pub fn parse(s: &str) -> Option<LossKind> {
        LossKind::ALL.iter().copied().find(|k| k.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wrt {
    VertexPositions,
    RootTranslation,
    JointRotations6d,
}

impl Wrt {
    pub fn name(&self) -> &'static str {
        match self {
            Wrt::VertexPositions => "vertex-positions",
            Wrt::RootTranslation => "root-translation",
            Wrt::JointRotations6d => "joint-rotations-6d",
        }
    }
}

/// Everything a loss evaluation may need. The cycle terms compare against
/// `reference` (zero without one); the stability term needs `masses`.
#[derive(Clone, Copy)]
pub struct GradientContext<'a> {
    pub sequence: &'a MotionSequence,
    pub reference: Option<&'a MotionSequence>,
    pub masses: Option<&'a MassDistribution>,
    pub plane: &'a GroundPlane,
    pub config: &'a AnalysisConfig,
    pub weights: LossWeights,
}

struct EvalData {
    ref_rots: Option<Vec<Vec<[f64; 6]>>>,
    ref_roots: Option<Vec<Vector3<f64>>>,
    samples: Option<Vec<(usize, [f64; 3])>>,
    faces: Vec<[usize; 3]>,
}

fn eval_data(ctx: &GradientContext) -> EvalData {
    EvalData {
        ref_rots: ctx.reference.map(|r| {
            r.frames
                .iter()
                .map(|f| f.joint_rotations_6d.clone())
                .collect()
        }),
        ref_roots: ctx
            .reference
            .map(|r| r.frames.iter().map(|f| f.root_translation).collect()),
        samples: ctx.config.cop_surface_samples.map(|n| {
            crate::dynamics::cop_surface_samples(
                &ctx.sequence.body.faces,
                &ctx.sequence.body.vertices,
                n,
                ctx.config.cop_sample_seed,
            )
        }),
        faces: ctx.sequence.body.faces.clone(),
    }
}

fn eval_g<T: Real>(
    kind: LossKind,
    seq: &SeqG<T>,
    ctx: &GradientContext,
    data: &EvalData,
) -> Result<T> {
    let plane = PlaneG::<T>::from_plane(ctx.plane);
    let term = |kind: LossKind, seq: &SeqG<T>| -> Result<T> {
        match kind {
            LossKind::Penetrate => Ok(penetration_g(seq, &plane)),
            LossKind::Float => Ok(float_g(seq, &plane)),
            LossKind::Slide => Ok(slide_g(seq, &plane, ctx.config).0),
            LossKind::DynStability => {
                let masses = ctx.masses.ok_or_else(|| {
                    Error::Config("dynamic stability loss needs a mass distribution".into())
                })?;
                Ok(dyn_stability_g(
                    seq,
                    masses,
                    &plane,
                    ctx.config,
                    data.samples.as_deref(),
                    &data.faces,
                )
                .0)
            }
            LossKind::RotationCycle => match &data.ref_rots {
                Some(ref_rots) => {
                    let rots: Vec<Vec<[T; 6]>> =
                        seq.frames.iter().map(|f| f.rots.clone()).collect();
                    rotation_cycle_g(ref_rots, &rots)
                }
                None => Ok(T::zero()),
            },
            LossKind::PositionCycle => match &data.ref_roots {
                Some(ref_roots) => {
                    let roots: Vec<V3<T>> = seq.frames.iter().map(|f| f.root).collect();
                    position_cycle_g(ref_roots, &roots, ctx.config.smooth_l1_delta)
                }
                None => Ok(T::zero()),
            },
            LossKind::Total => unreachable!("total handled below"),
        }
    };
    if kind != LossKind::Total {
        return term(kind, seq);
    }
    let w = ctx.weights;
    let cycle = term(LossKind::RotationCycle, seq)? + term(LossKind::PositionCycle, seq)?;
    let physics =
        term(LossKind::Penetrate, seq)? + term(LossKind::Float, seq)? + term(LossKind::Slide, seq)?;
    let dyn_term = if ctx.masses.is_some() {
        term(LossKind::DynStability, seq)?
    } else {
        T::zero()
    };
    Ok(cycle * T::from_f64(w.lambda_cycle)
        + physics * T::from_f64(w.lambda_physics)
        + dyn_term * T::from_f64(w.lambda_dyn))
}

/// Plain value of a loss.
pub fn loss_value(kind: LossKind, ctx: &GradientContext) -> Result<f64> {
    ctx.sequence.validate()?;
    let data = eval_data(ctx);
    eval_g::<f64>(kind, &lift::<f64>(ctx.sequence), ctx, &data)
}

fn seeds_for(ctx: &GradientContext, wrt: Wrt) -> (Vec<usize>, Vec<Seed>) {
    let t = ctx.sequence.num_frames();
    let n = ctx.sequence.num_vertices();
    let j = ctx.sequence.num_joints();
    match wrt {
        Wrt::VertexPositions => {
            let mut seeds = Vec::with_capacity(t * n * 3);
            for frame in 0..t {
                for vertex in 0..n {
                    for axis in 0..3 {
                        seeds.push(Seed::Vertex { frame, vertex, axis });
                    }
                }
            }
            (vec![t, n, 3], seeds)
        }
        Wrt::RootTranslation => {
            let mut seeds = Vec::with_capacity(t * 3);
            for frame in 0..t {
                for axis in 0..3 {
                    seeds.push(Seed::Root { frame, axis });
                }
            }
            (vec![t, 3], seeds)
        }
        Wrt::JointRotations6d => {
            let mut seeds = Vec::with_capacity(t * j * 6);
            for frame in 0..t {
                for joint in 0..j {
                    for component in 0..6 {
                        seeds.push(Seed::Rotation { frame, joint, component });
                    }
                }
            }
            (vec![t, j, 6], seeds)
        }
    }
}

/// Exact forward-mode gradient of the loss with respect to the chosen input.
pub fn gradient(kind: LossKind, ctx: &GradientContext, wrt: Wrt) -> Result<GradientArray> {
    ctx.sequence.validate()?;
    let data = eval_data(ctx);
    let (shape, seeds) = seeds_for(ctx, wrt);
    let mut out = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let seq = lift_seeded(ctx.sequence, seed);
        out.push(eval_g::<Dual>(kind, &seq, ctx, &data)?.du);
    }
    Ok(GradientArray { shape, data: out })
}

/// Loss value together with its gradient.
pub fn loss_with_gradient(kind: LossKind, ctx: &GradientContext, wrt: Wrt) -> Result<LossValue> {
    Ok(LossValue {
        value: loss_value(kind, ctx)?,
        gradient: Some(gradient(kind, ctx, wrt)?),
    })
}

fn perturbed(seq: &MotionSequence, seed: Seed, delta: f64) -> MotionSequence {
    let mut out = seq.clone();
    match seed {
        Seed::Vertex { frame, vertex, axis } => {
            out.frames[frame].vertex_positions[vertex][axis] += delta;
        }
        Seed::Root { frame, axis } => {
            let f = &mut out.frames[frame];
            f.root_translation[axis] += delta;
            for v in &mut f.vertex_positions {
                v[axis] += delta;
            }
            for p in &mut f.joint_positions {
                p[axis] += delta;
            }
        }
        Seed::Rotation { frame, joint, component } => {
            out.frames[frame].joint_rotations_6d[joint][component] += delta;
        }
    }
    out
}

/// Central finite differences of the plain (f64) loss. The independent
/// oracle for [`gradient`].
pub fn finite_difference_gradient(
    kind: LossKind,
    ctx: &GradientContext,
    wrt: Wrt,
    step: f64,
) -> Result<GradientArray> {
    ctx.sequence.validate()?;
    let data = eval_data(ctx);
    let (shape, seeds) = seeds_for(ctx, wrt);
    let mut out = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let plus = perturbed(ctx.sequence, seed, step);
        let minus = perturbed(ctx.sequence, seed, -step);
        let fp = eval_g::<f64>(kind, &lift::<f64>(&plus), ctx, &data)?;
        let fm = eval_g::<f64>(kind, &lift::<f64>(&minus), ctx, &data)?;
        out.push((fp - fm) / (2.0 * step));
    }
    Ok(GradientArray { shape, data: out })
}

/// Elementwise relative error, maximized: `|a-b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(a: &GradientArray, b: &GradientArray, floor: f64) -> f64 {
    assert_eq!(a.shape, b.shape);
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Gradient check harness
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    /// Finite-difference step (m).
    pub step: f64,
    /// Maximum allowed relative error.
    pub tolerance: f64,
    /// Relative-error denominator floor: components smaller than this are
    /// compared absolutely (at `tolerance · floor`), since the central
    /// difference of a loss with O(10) constant terms carries ~1e-10 of
    /// cancellation noise that would swamp a near-zero component.
    pub floor: f64,
    /// Test hook: added to every analytic gradient component, to prove the
    /// harness detects wrong gradients. Zero in normal use.
    pub perturb_hook: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-5,
            tolerance: 1e-4,
            floor: 1e-5,
            perturb_hook: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckCase {
    pub loss: LossKind,
    pub wrt: Wrt,
    pub max_rel_err: f64,
    /// Largest absolute analytic gradient component seen; guards against
    /// vacuous zero-vs-zero comparisons.
    pub max_abs_grad: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub cases: Vec<GradCheckCase>,
    pub trials: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.max_rel_err < self.tolerance)
    }
}

/// Loss / differentiation-target pairs exercised by the harness. Each loss
/// is checked against every input it actually depends on.
pub fn gradcheck_cases(kind: LossKind) -> Vec<(LossKind, Wrt)> {
    match kind {
        LossKind::Penetrate | LossKind::Float | LossKind::DynStability => {
            vec![(kind, Wrt::VertexPositions), (kind, Wrt::RootTranslation)]
        }
        LossKind::Slide | LossKind::PositionCycle => vec![(kind, Wrt::RootTranslation)],
        LossKind::RotationCycle => vec![(kind, Wrt::JointRotations6d)],
        LossKind::Total => vec![
            (kind, Wrt::VertexPositions),
            (kind, Wrt::RootTranslation),
            (kind, Wrt::JointRotations6d),
        ],
    }
}

/// A random trial instance: sequence, cycle reference, masses, and config,
/// constructed away from every branch kink (argmin ties, contact and gate
/// thresholds, smooth-L1 transition, geodesic arccos boundaries).
pub struct GradCheckTrial {
    pub sequence: MotionSequence,
    pub reference: MotionSequence,
    pub masses: MassDistribution,
    pub config: AnalysisConfig,
}

/// Deterministically build the `index`-th trial for a seed, retrying
/// sub-seeds until the kink-avoidance conditions hold.
pub fn gradcheck_trial(seed: u64, index: usize) -> GradCheckTrial {
    for attempt in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed ^ (index as u64).wrapping_mul(0x9E3779B97F4A7C15)
                ^ (attempt as u64).wrapping_mul(0xD1B54A32D192ED03),
        );
        if let Some(trial) = try_build_trial(&mut rng) {
            return trial;
        }
    }
    unreachable!("trial construction failed for every sub-seed");
}

fn try_build_trial(rng: &mut ChaCha8Rng) -> Option<GradCheckTrial> {
    let frames = 5;
    let n_verts = 12;
    // Moderate frame rate: central differences scale with fps², and the
    // finite-difference oracle's truncation error grows with its cube.
    let fps = 10.0;

    let config = AnalysisConfig {
        foot_joints: vec![0, 1],
        ..AnalysisConfig::default()
    };
    config.validate().ok()?;

    // Smooth global vertical offset: moderate accelerations, both
    // penetration and floating across frames.
    let off_amp = rng.gen_range(0.05..0.10);
    let off_freq = rng.gen_range(0.5..1.4);
    let off_phase = rng.gen_range(0.0..std::f64::consts::TAU);

    let base: Vec<Vector3<f64>> = (0..n_verts)
        .map(|_| {
            Vector3::new(
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(0.06..0.45),
            )
        })
        .collect();
    let vert_motion: Vec<[(f64, f64, f64); 3]> = (0..n_verts)
        .map(|_| {
            std::array::from_fn(|_| {
                (
                    rng.gen_range(-0.02..0.02),
                    rng.gen_range(0.3..1.2),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
        })
        .collect();

    // Four joints; 0 stays in contact, 1 hovers near but above the contact
    // threshold, 2 and 3 are far from the ground.
    let n_joints = 4;
    let joint_base: Vec<Vector3<f64>> = (0..n_joints)
        .map(|j| {
            let z = match j {
                0 => rng.gen_range(0.01..0.03),
                1 => rng.gen_range(0.08..0.2),
                _ => rng.gen_range(0.3..0.8),
            };
            Vector3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), z)
        })
        .collect();
    let joint_motion: Vec<[(f64, f64, f64); 2]> = (0..n_joints)
        .map(|_| {
            std::array::from_fn(|_| {
                (
                    rng.gen_range(0.05..0.12),
                    rng.gen_range(0.5..1.2),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
        })
        .collect();

    let root_motion: [(f64, f64, f64); 3] = std::array::from_fn(|_| {
        (
            rng.gen_range(-0.3..0.3),
            rng.gen_range(0.3..1.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        )
    });

    let wave = |a: f64, f: f64, p: f64, t: f64| a * (std::f64::consts::TAU * f * t + p).sin();

    let mut seq_frames = Vec::with_capacity(frames);
    for t in 0..frames {
        let tt = t as f64 / fps;
        let off = wave(off_amp, off_freq, off_phase, tt);
        let verts: Vec<Vector3<f64>> = (0..n_verts)
            .map(|i| {
                let m = &vert_motion[i];
                base[i]
                    + Vector3::new(
                        wave(m[0].0, m[0].1, m[0].2, tt),
                        wave(m[1].0, m[1].1, m[1].2, tt),
                        wave(m[2].0, m[2].1, m[2].2, tt) + off - 0.07,
                    )
            })
            .collect();
        let joints: Vec<Vector3<f64>> = (0..n_joints)
            .map(|j| {
                let m = &joint_motion[j];
                joint_base[j]
                    + Vector3::new(
                        wave(m[0].0, m[0].1, m[0].2, tt),
                        wave(m[1].0, m[1].1, m[1].2, tt),
                        0.0,
                    )
            })
            .collect();
        let root = Vector3::new(
            wave(root_motion[0].0, root_motion[0].1, root_motion[0].2, tt),
            wave(root_motion[1].0, root_motion[1].1, root_motion[1].2, tt),
            0.9 + wave(root_motion[2].0 * 0.2, root_motion[2].1, root_motion[2].2, tt),
        );
        let rots: Vec<[f64; 6]> = (0..n_joints)
            .map(|_| crate::rotations::matrix_to_sixd(&random_rotation(rng)))
            .collect();
        seq_frames.push(crate::types::MotionFrame {
            vertex_positions: verts,
            joint_positions: joints,
            joint_rotations_6d: rots,
            root_translation: root,
        });
    }

    // A nominal closed body so the sequence validates; the trial's faces are
    // a tetrahedron fan over the first four vertices (unused by the losses
    // under test unless surface sampling is enabled, which it is not here).
    let body = crate::types::BodyMesh {
        vertices: seq_frames[0].vertex_positions.clone(),
        faces: vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        part_labels: vec![1; n_verts],
        num_parts: 1,
        left_foot_vertices: vec![],
        right_foot_vertices: vec![],
        joint_lr_pairs: vec![],
    };
    let sequence = MotionSequence {
        fps,
        body,
        frames: seq_frames,
        traces: None,
    };
    sequence.validate().ok()?;

    // Reference for the cycle terms: rotations offset by a mid-range angle,
    // roots offset outside the smooth-L1 transition band.
    let mut reference = sequence.clone();
    for f in &mut reference.frames {
        for r in &mut f.joint_rotations_6d {
            let cur = crate::rotations::sixd_to_matrix(r).ok()?;
            let axis = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let angle = rng.gen_range(0.3..2.8) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let delta =
                nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
                    .into_inner();
            *r = crate::rotations::matrix_to_sixd(&(delta * cur));
        }
        for axis in 0..3 {
            let mag = rng.gen_range(0.1..0.85);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let big = if rng.gen_bool(0.3) { 1.1 } else { 0.0 };
            f.root_translation[axis] += sign * (mag + big);
        }
    }

    let masses = MassDistribution::from_vertex_masses(
        (0..n_verts).map(|_| rng.gen_range(0.5..3.0)).collect(),
        985.0,
    )
    .ok()?;

    trial_is_kink_free(&sequence, &masses, &config).then_some(GradCheckTrial {
        sequence,
        reference,
        masses,
        config,
    })
}

fn random_rotation(rng: &mut ChaCha8Rng) -> nalgebra::Matrix3<f64> {
    let axis = Vector3::new(
        rng.gen_range(-1.0..1.0f64),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
    .normalize();
    let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).into_inner()
}

fn trial_is_kink_free(
    seq: &MotionSequence,
    masses: &MassDistribution,
    config: &AnalysisConfig,
) -> bool {
    let plane = GroundPlane::default();
    for f in &seq.frames {
        let mut heights: Vec<f64> = f.vertex_positions.iter().map(|v| v.z).collect();
        heights.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Unique argmin with a clear gap; away from the max(0, ·) kink and
        // the support gate.
        if heights[0].abs() < 5e-4 || (heights[1] - heights[0]) < 1e-4 || heights[0] > 0.2 {
            return false;
        }
        // Every height clear of the pressure-field branch point at zero.
        if heights.iter().any(|h| h.abs() < 5e-4) {
            return false;
        }
        for &j in &config.foot_joints {
            if (f.joint_positions[j].z - config.slide_contact_height).abs() < 5e-3 {
                return false;
            }
        }
    }
    // Contacting feet move fast enough that the speed norm is locally
    // smooth; slow contacts blow up the finite-difference truncation error.
    for t in 0..seq.frames.len() - 1 {
        for &j in &config.foot_joints {
            let a = seq.frames[t].joint_positions[j];
            let b = seq.frames[t + 1].joint_positions[j];
            if a.z < config.slide_contact_height && b.z < config.slide_contact_height {
                let v = (b - a) * seq.fps;
                if (v.x * v.x + v.y * v.y).sqrt() < 0.2 {
                    return false;
                }
            }
        }
    }
    // Stability residuals defined and away from zero on every interior frame.
    let residuals = crate::dynamics::stability_residuals_g(
        &lift::<f64>(seq),
        masses,
        &PlaneG::from_plane(&plane),
        config,
        None,
        &seq.body.faces,
    );
    residuals.iter().all(|r| matches!(r, Some(x) if *x > 1e-3))
}

/// Run the finite-difference comparison for the requested losses.
pub fn run_gradcheck(
    losses: &[LossKind],
    trials: usize,
    seed: u64,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    if trials == 0 {
        return Err(Error::Config("gradient check needs at least one trial".into()));
    }
    let plane = GroundPlane::default();
    let mut cases: Vec<GradCheckCase> = losses
        .iter()
        .flat_map(|&k| gradcheck_cases(k))
        .map(|(loss, wrt)| GradCheckCase {
            loss,
            wrt,
            max_rel_err: 0.0,
            max_abs_grad: 0.0,
        })
        .collect();

    for index in 0..trials {
        let trial = gradcheck_trial(seed, index);
        let ctx = GradientContext {
            sequence: &trial.sequence,
            reference: Some(&trial.reference),
            masses: Some(&trial.masses),
            plane: &plane,
            config: &trial.config,
            weights: LossWeights::default(),
        };
        for case in &mut cases {
            let mut analytic = gradient(case.loss, &ctx, case.wrt)?;
            if opts.perturb_hook != 0.0 {
                for g in &mut analytic.data {
                    *g += opts.perturb_hook;
                }
            }
            let fd = finite_difference_gradient(case.loss, &ctx, case.wrt, opts.step)?;
            let err = max_relative_error(&analytic, &fd, opts.floor);
            case.max_rel_err = case.max_rel_err.max(err);
            case.max_abs_grad = case
                .max_abs_grad
                .max(analytic.data.iter().fold(0.0f64, |m, g| m.max(g.abs())));
        }
    }
    Ok(GradCheckReport {
        cases,
        trials,
        tolerance: opts.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{humanoid, static_stand, HumanoidParams};

    #[test]
    fn hovering_body_has_zero_penetration_gradient() {
        let b = humanoid(HumanoidParams::default()).unwrap();
        let mut m = static_stand(&b, 4, 20.0).unwrap();
        for f in &mut m.frames {
            for v in &mut f.vertex_positions {
                v.z += 0.1;
            }
        }
        m.body.vertices = m.frames[0].vertex_positions.clone();
        let plane = GroundPlane::default();
        let config = AnalysisConfig::default();
        let ctx = GradientContext {
            sequence: &m,
            reference: None,
            masses: None,
            plane: &plane,
            config: &config,
            weights: LossWeights::default(),
        };
        let g = gradient(LossKind::Penetrate, &ctx, Wrt::VertexPositions).unwrap();
        assert!(g.data.iter().all(|&x| x == 0.0));
        assert_eq!(g.shape, vec![4, m.num_vertices(), 3]);
    }

    #[test]
    fn float_gradient_wrt_vertical_root_shift() {
        // Hovering at 0.1 on every frame: d(float)/d(root z of frame t) = 1/T.
        let b = humanoid(HumanoidParams::default()).unwrap();
        let mut m = static_stand(&b, 5, 20.0).unwrap();
        for f in &mut m.frames {
            for v in &mut f.vertex_positions {
                v.z += 0.1;
            }
        }
        m.body.vertices = m.frames[0].vertex_positions.clone();
        let plane = GroundPlane::default();
        let config = AnalysisConfig::default();
        let ctx = GradientContext {
            sequence: &m,
            reference: None,
            masses: None,
            plane: &plane,
            config: &config,
            weights: LossWeights::default(),
        };
        let g = gradient(LossKind::Float, &ctx, Wrt::RootTranslation).unwrap();
        assert_eq!(g.shape, vec![5, 3]);
        for t in 0..5 {
            assert!((g.data[t * 3 + 2] - 0.2).abs() < 1e-12);
            assert_eq!(g.data[t * 3], 0.0);
            assert_eq!(g.data[t * 3 + 1], 0.0);
        }
    }

    #[test]
    fn value_of_dual_path_matches_plain_path() {
        let trial = gradcheck_trial(4, 0);
        let plane = GroundPlane::default();
        let ctx = GradientContext {
            sequence: &trial.sequence,
            reference: Some(&trial.reference),
            masses: Some(&trial.masses),
            plane: &plane,
            config: &trial.config,
            weights: LossWeights::default(),
        };
        for kind in LossKind::ALL {
            let plain = loss_value(kind, &ctx).unwrap();
            let data = eval_data(&ctx);
            let seq = lift_seeded(ctx.sequence, Seed::Vertex { frame: 1, vertex: 2, axis: 0 });
            let dual = eval_g::<Dual>(kind, &seq, &ctx, &data).unwrap();
            assert_eq!(plain, dual.re, "{}", kind.name());
        }
    }

    #[test]
    fn small_gradcheck_passes() {
        let report = run_gradcheck(
            &[LossKind::Penetrate, LossKind::PositionCycle, LossKind::RotationCycle],
            3,
            11,
            &GradCheckOptions::default(),
        )
        .unwrap();
        assert!(report.passed(), "{:#?}", report.cases);
        // Non-vacuous: some component actually moved.
        assert!(report.cases.iter().any(|c| c.max_abs_grad > 1e-3));
    }

    #[test]
    fn dyn_stability_gradcheck_passes() {
        let report = run_gradcheck(
            &[LossKind::DynStability],
            3,
            13,
            &GradCheckOptions::default(),
        )
        .unwrap();
        assert!(report.passed(), "{:#?}", report.cases);
    }

    #[test]
    fn perturb_hook_fails_the_check() {
        let report = run_gradcheck(
            &[LossKind::Penetrate],
            2,
            17,
            &GradCheckOptions {
                perturb_hook: 1e-2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn zero_trials_is_a_usage_error() {
        assert!(run_gradcheck(&[LossKind::Penetrate], 0, 1, &GradCheckOptions::default()).is_err());
    }
}
