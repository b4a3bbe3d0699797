//! Differentiable loss terms.
//!
//! Ground penetration, floating, foot slide, dynamic stability (Geman-McClure
//! on the CoP-ZMP gap), and the cycle-consistency geometry terms (geodesic
//! rotation distance, smooth-L1 root position). Each term is written once
//! over a generic scalar; `f64` gives plain values and dual numbers give the
//! forward-mode gradients in [`crate::grad`].
//!
//! Reductions: penetrate/float/slide/stability average over their
//! contributing frames (fps-independent); the cycle terms sum over frames.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{lowest_height_g, MassDistribution};
use crate::lift::{lift, PlaneG, SeqG};
use crate::num::{Real, V3};
use crate::rotations::sixd_to_m3;
use crate::types::{AnalysisConfig, GroundPlane, LossWeights, MotionSequence};

/// Row-major gradient array.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientArray {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl GradientArray {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        GradientArray {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// A scalar loss, optionally with its gradient with respect to one input.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Option<GradientArray>,
}

impl LossValue {
    pub fn scalar(value: f64) -> Self {
        LossValue {
            value,
            gradient: None,
        }
    }
}

/// Stability loss plus the gating bookkeeping. `supported_frames == 0` means
/// every interior frame was gated out and the loss is vacuously zero.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityLoss {
    pub loss: LossValue,
    pub supported_frames: usize,
    pub interior_frames: usize,
}

/// Slide loss plus the number of contributing (frame-pair, joint) samples.
/// Zero samples means no foot contact anywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SlideLoss {
    pub loss: LossValue,
    pub contact_samples: usize,
}

// ---------------------------------------------------------------------------
// Scalar building blocks
// ---------------------------------------------------------------------------

/// Geman-McClure penalty `σ²x² / (x² + σ²)`: quadratic near zero, saturating
/// at σ² for large residuals.
pub(crate) fn geman_mcclure_g<T: Real>(x: T, sigma: f64) -> T {
    let s2 = T::from_f64(sigma * sigma);
    let x2 = x * x;
    s2 * x2 / (x2 + s2)
}

/// Geman-McClure penalty for plain values.
pub fn geman_mcclure(x: f64, sigma: f64) -> f64 {
    geman_mcclure_g(x, sigma)
}

/// Smooth L1: `d²/(2δ)` for |d| < δ, `|d| - δ/2` beyond.
pub(crate) fn smooth_l1_g<T: Real>(d: T, delta: f64) -> T {
    let a = d.abs();
    if a.value() < delta {
        d * d * T::from_f64(0.5 / delta)
    } else {
        a - T::from_f64(delta / 2.0)
    }
}

// ---------------------------------------------------------------------------
// Generic loss cores
// ---------------------------------------------------------------------------

pub(crate) fn penetration_g<T: Real>(seq: &SeqG<T>, plane: &PlaneG<T>) -> T {
    let mut acc = T::zero();
    for f in &seq.frames {
        let h = lowest_height_g(&f.verts, plane.origin, plane.normal);
        acc = acc + T::zero().max(-h);
    }
    acc * T::from_f64(1.0 / seq.frames.len() as f64)
}

pub(crate) fn float_g<T: Real>(seq: &SeqG<T>, plane: &PlaneG<T>) -> T {
    let mut acc = T::zero();
    for f in &seq.frames {
        let h = lowest_height_g(&f.verts, plane.origin, plane.normal);
        acc = acc + T::zero().max(h);
    }
    acc * T::from_f64(1.0 / seq.frames.len() as f64)
}

/// Mean horizontal speed of foot joints over the (frame-pair, joint) samples
/// where the joint is in ground contact at both ends of the pair.
pub(crate) fn slide_g<T: Real>(
    seq: &SeqG<T>,
    plane: &PlaneG<T>,
    config: &AnalysisConfig,
) -> (T, usize) {
    let mut acc = T::zero();
    let mut count = 0usize;
    let fps = T::from_f64(seq.fps);
    for t in 0..seq.frames.len().saturating_sub(1) {
        for &j in &config.foot_joints {
            if j >= seq.frames[t].joints.len() {
                continue;
            }
            let a = seq.frames[t].joints[j];
            let b = seq.frames[t + 1].joints[j];
            let contact = plane.height(a).value() < config.slide_contact_height
                && plane.height(b).value() < config.slide_contact_height;
            if !contact {
                continue;
            }
            let v = (b - a).scale(fps);
            let horiz = v - plane.normal.scale(v.dot(plane.normal));
            acc = acc + horiz.norm();
            count += 1;
        }
    }
    if count == 0 {
        (T::zero(), 0)
    } else {
        (acc * T::from_f64(1.0 / count as f64), count)
    }
}

/// Geman-McClure of the CoP-ZMP gap, averaged over gated interior frames.
/// Returns (loss, supported frame count, interior frame count).
pub(crate) fn dyn_stability_g<T: Real>(
    seq: &SeqG<T>,
    masses: &MassDistribution,
    plane: &PlaneG<T>,
    config: &AnalysisConfig,
    samples: Option<&[(usize, [f64; 3])]>,
    faces: &[[usize; 3]],
) -> (T, usize, usize) {
    let residuals =
        crate::dynamics::stability_residuals_g(seq, masses, plane, config, samples, faces);
    let interior = residuals.len();
    let mut acc = T::zero();
    let mut count = 0usize;
    for r in residuals.into_iter().flatten() {
        acc = acc + geman_mcclure_g(r, config.sigma_gm);
        count += 1;
    }
    if count == 0 {
        (T::zero(), 0, interior)
    } else {
        (acc * T::from_f64(1.0 / count as f64), count, interior)
    }
}

/// Sum of per-frame per-joint geodesic distances between two 6d rotation
/// tracks. The reference track is held constant.
pub(crate) fn rotation_cycle_g<T: Real>(
    reference: &[Vec<[f64; 6]>],
    rots: &[Vec<[T; 6]>],
) -> Result<T> {
    if reference.len() != rots.len() {
        return Err(Error::Shape(format!(
            "rotation tracks have {} and {} frames",
            reference.len(),
            rots.len()
        )));
    }
    let mut acc = T::zero();
    for (t, (ra, rb)) in reference.iter().zip(rots).enumerate() {
        if ra.len() != rb.len() {
            return Err(Error::Shape(format!(
                "frame {t}: rotation tracks have {} and {} joints",
                ra.len(),
                rb.len()
            )));
        }
        for (j, (a, b)) in ra.iter().zip(rb).enumerate() {
            let lifted: [T; 6] = std::array::from_fn(|i| T::from_f64(a[i]));
            let ma = sixd_to_m3(&lifted).ok_or_else(|| {
                Error::DegenerateRotation(format!("reference frame {t}, joint {j}"))
            })?;
            let mb = sixd_to_m3(b)
                .ok_or_else(|| Error::DegenerateRotation(format!("frame {t}, joint {j}")))?;
            acc = acc + crate::rotations::geodesic_m3(ma, mb);
        }
    }
    Ok(acc)
}

/// Elementwise smooth-L1 between two root-translation tracks, summed over
/// frames and components. The reference track is held constant.
pub(crate) fn position_cycle_g<T: Real>(
    reference: &[Vector3<f64>],
    roots: &[V3<T>],
    delta: f64,
) -> Result<T> {
    if reference.len() != roots.len() {
        return Err(Error::Shape(format!(
            "position tracks have {} and {} frames",
            reference.len(),
            roots.len()
        )));
    }
    let mut acc = T::zero();
    for (a, b) in reference.iter().zip(roots) {
        acc = acc + smooth_l1_g(b.x - T::from_f64(a.x), delta);
        acc = acc + smooth_l1_g(b.y - T::from_f64(a.y), delta);
        acc = acc + smooth_l1_g(b.z - T::from_f64(a.z), delta);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Public f64 API
// ---------------------------------------------------------------------------

/// Mean over frames of how far the lowest vertex sits below the ground.
pub fn penetration_loss(sequence: &MotionSequence, plane: &GroundPlane) -> Result<LossValue> {
    sequence.validate()?;
    Ok(LossValue::scalar(penetration_g(
        &lift::<f64>(sequence),
        &PlaneG::from_plane(plane),
    )))
}

/// Mean over frames of how far the lowest vertex hovers above the ground.
pub fn float_loss(sequence: &MotionSequence, plane: &GroundPlane) -> Result<LossValue> {
    sequence.validate()?;
    Ok(LossValue::scalar(float_g(
        &lift::<f64>(sequence),
        &PlaneG::from_plane(plane),
    )))
}

/// Mean horizontal speed of ground-contacting foot joints.
pub fn slide_loss(
    sequence: &MotionSequence,
    plane: &GroundPlane,
    config: &AnalysisConfig,
) -> Result<SlideLoss> {
    sequence.validate()?;
    let (v, count) = slide_g(
        &lift::<f64>(sequence),
        &PlaneG::from_plane(plane),
        config,
    );
    Ok(SlideLoss {
        loss: LossValue::scalar(v),
        contact_samples: count,
    })
}

/// Geman-McClure penalty on the CoP-ZMP distance over supported interior
/// frames. Frames gated out (lowest vertex above the support-gate height) or
/// with an undefined ZMP contribute nothing.
pub fn dynamic_stability_loss(
    sequence: &MotionSequence,
    masses: &MassDistribution,
    plane: &GroundPlane,
    config: &AnalysisConfig,
) -> Result<StabilityLoss> {
    sequence.validate()?;
    let samples = config.cop_surface_samples.map(|n| {
        crate::dynamics::cop_surface_samples(
            &sequence.body.faces,
            &sequence.body.vertices,
            n,
            config.cop_sample_seed,
        )
    });
    let (v, supported, interior) = dyn_stability_g(
        &lift::<f64>(sequence),
        masses,
        &PlaneG::from_plane(plane),
        config,
        samples.as_deref(),
        &sequence.body.faces,
    );
    Ok(StabilityLoss {
        loss: LossValue::scalar(v),
        supported_frames: supported,
        interior_frames: interior,
    })
}

/// Sum over frames and joints of the geodesic distance between two 6d
/// rotation tracks.
pub fn rotation_cycle_loss(
    r_a: &[Vec<[f64; 6]>],
    r_b: &[Vec<[f64; 6]>],
) -> Result<LossValue> {
    let lifted: Vec<Vec<[f64; 6]>> = r_b.to_vec();
    Ok(LossValue::scalar(rotation_cycle_g(r_a, &lifted)?))
}

/// Sum over frames of the elementwise smooth-L1 distance between two root
/// position tracks.
pub fn position_cycle_loss(
    x_a: &[Vector3<f64>],
    x_b: &[Vector3<f64>],
    delta: f64,
) -> Result<LossValue> {
    let lifted: Vec<V3<f64>> = x_b.iter().map(|v| V3::new(v.x, v.y, v.z)).collect();
    Ok(LossValue::scalar(position_cycle_g(x_a, &lifted, delta)?))
}

/// The individual loss terms entering the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub rotation_cycle: f64,
    pub position_cycle: f64,
    pub penetrate: f64,
    pub float: f64,
    pub slide: f64,
    pub dyn_stability: f64,
}

/// `λ_cycle (L_rot + L_pos) + λ_physics (L_pen + L_float + L_slide)
///  + λ_dyn L_dyn`.
pub fn total_loss(terms: &LossTerms, weights: &LossWeights) -> f64 {
    weights.lambda_cycle * (terms.rotation_cycle + terms.position_cycle)
        + weights.lambda_physics * (terms.penetrate + terms.float + terms.slide)
        + weights.lambda_dyn * terms.dyn_stability
}

/// Evaluate every term for a sequence. The cycle terms compare against
/// `reference` and are zero when it is absent; the stability term requires
/// `masses`.
pub fn evaluate_terms(
    sequence: &MotionSequence,
    reference: Option<&MotionSequence>,
    masses: Option<&MassDistribution>,
    plane: &GroundPlane,
    config: &AnalysisConfig,
) -> Result<LossTerms> {
    let mut terms = LossTerms {
        penetrate: penetration_loss(sequence, plane)?.value,
        float: float_loss(sequence, plane)?.value,
        slide: slide_loss(sequence, plane, config)?.loss.value,
        ..Default::default()
    };
    if let Some(md) = masses {
        terms.dyn_stability = dynamic_stability_loss(sequence, md, plane, config)?.loss.value;
    }
    if let Some(r) = reference {
        let ra: Vec<Vec<[f64; 6]>> = r.frames.iter().map(|f| f.joint_rotations_6d.clone()).collect();
        let rb: Vec<Vec<[f64; 6]>> = sequence
            .frames
            .iter()
            .map(|f| f.joint_rotations_6d.clone())
            .collect();
        terms.rotation_cycle = rotation_cycle_loss(&ra, &rb)?.value;
        let xa: Vec<Vector3<f64>> = r.frames.iter().map(|f| f.root_translation).collect();
        let xb: Vec<Vector3<f64>> = sequence.frames.iter().map(|f| f.root_translation).collect();
        terms.position_cycle = position_cycle_loss(&xa, &xb, config.smooth_l1_delta)?.value;
    }
    Ok(terms)
}
