//! Shared domain types.
//!
//! Units are SI throughout (meters, seconds, kilograms, radians). Reports
//! convert to centimeters and percent at the boundary.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of body parts a default body is segmented into.
pub const DEFAULT_PARTS: usize = 10;

/// Joint slots per frame: one global root orientation plus 23 body joints.
pub const DEFAULT_JOINTS: usize = 24;

/// Flat ground plane with gravity acting along `-normal`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundPlane {
    pub origin: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub gravity_magnitude: f64,
}

impl Default for GroundPlane {
    /// z = 0 plane, z-up, g = 9.81 m/s².
    fn default() -> Self {
        GroundPlane {
            origin: Vector3::zeros(),
            normal: Vector3::new(0.0, 0.0, 1.0),
            gravity_magnitude: 9.81,
        }
    }
}

impl GroundPlane {
    pub fn new(origin: Vector3<f64>, normal: Vector3<f64>, gravity_magnitude: f64) -> Result<Self> {
        if (normal.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "ground normal must be unit length, got |n| = {}",
                normal.norm()
            )));
        }
        if gravity_magnitude <= 0.0 {
            return Err(Error::InvalidInput(
                "gravity magnitude must be positive".into(),
            ));
        }
        Ok(GroundPlane {
            origin,
            normal,
            gravity_magnitude,
        })
    }

    /// Signed height of a point above the plane.
    #[inline]
    pub fn height(&self, p: &Vector3<f64>) -> f64 {
        (p - self.origin).dot(&self.normal)
    }

    /// Orthogonal projection of a point onto the plane.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p - self.normal * self.height(p)
    }

    /// Gravity vector `-g·n`.
    #[inline]
    pub fn gravity(&self) -> Vector3<f64> {
        -self.normal * self.gravity_magnitude
    }

    /// Orthonormal in-plane basis `(e1, e2)` with `e1 × e2 = n`.
    ///
    /// For the default z-up plane this is exactly the x and y axes.
    pub fn basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.normal;
        if n.x == 0.0 && n.y == 0.0 {
            let sign = if n.z >= 0.0 { 1.0 } else { -1.0 };
            return (
                Vector3::new(sign, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            );
        }
        // Pick the world axis least aligned with n to seed the basis.
        let seed = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vector3::new(1.0, 0.0, 0.0)
        } else if n.y.abs() <= n.z.abs() {
            Vector3::new(0.0, 1.0, 0.0)
        } else {
            Vector3::new(0.0, 0.0, 1.0)
        };
        let e1 = (seed - n * seed.dot(&n)).normalize();
        let e2 = n.cross(&e1);
        (e1, e2)
    }

    /// In-plane coordinates of a point (its projection expressed in `basis`).
    pub fn to_plane_coords(&self, p: &Vector3<f64>) -> [f64; 2] {
        let (e1, e2) = self.basis();
        let d = p - self.origin;
        [d.dot(&e1), d.dot(&e2)]
    }

    /// Inverse of [`Self::to_plane_coords`] (point on the plane).
    pub fn from_plane_coords(&self, uv: [f64; 2]) -> Vector3<f64> {
        let (e1, e2) = self.basis();
        self.origin + e1 * uv[0] + e2 * uv[1]
    }
}

/// Watertight triangle mesh with per-vertex part labels.
///
/// `vertices` holds the rest-frame positions (the first frame's geometry);
/// per-frame positions live in [`MotionFrame::vertex_positions`].
#[derive(Clone, Debug, PartialEq)]
pub struct BodyMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Vertex-index triples; outward orientation.
    pub faces: Vec<[usize; 3]>,
    /// Per-vertex part label in `1..=num_parts`.
    pub part_labels: Vec<usize>,
    pub num_parts: usize,
    pub left_foot_vertices: Vec<usize>,
    pub right_foot_vertices: Vec<usize>,
    /// Left/right joint-slot pairs swapped when mirroring. Empty when the
    /// skeleton has no declared symmetry.
    pub joint_lr_pairs: Vec<(usize, usize)>,
}

impl BodyMesh {
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.part_labels.len() != n {
            return Err(Error::Shape(format!(
                "part_labels has {} entries for {} vertices",
                self.part_labels.len(),
                n
            )));
        }
        if self.num_parts == 0 {
            return Err(Error::Shape("num_parts must be at least 1".into()));
        }
        for (i, &l) in self.part_labels.iter().enumerate() {
            if l == 0 || l > self.num_parts {
                return Err(Error::Shape(format!(
                    "vertex {i} has part label {l} outside 1..={}",
                    self.num_parts
                )));
            }
        }
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::Shape(format!(
                        "face {fi} references vertex {v} but mesh has {n} vertices"
                    )));
                }
            }
        }
        for set in [&self.left_foot_vertices, &self.right_foot_vertices] {
            for &v in set {
                if v >= n {
                    return Err(Error::Shape(format!(
                        "foot vertex set references vertex {v} but mesh has {n} vertices"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
}

/// One time sample of a motion.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionFrame {
    pub vertex_positions: Vec<Vector3<f64>>,
    pub joint_positions: Vec<Vector3<f64>>,
    /// Per-joint 6d rotations: the first two columns of the rotation matrix,
    /// column-major. Slot 0 is the global root orientation; the remaining
    /// slots are root-relative.
    pub joint_rotations_6d: Vec<[f64; 6]>,
    pub root_translation: Vector3<f64>,
}

/// Analytic ground-truth traces a generator may attach to a sequence, so
/// tests and the CLI can compare against them without recomputing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleTraces {
    /// Per-frame analytic ZMP in ground-plane coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zmp_plane: Option<Vec<[f64; 2]>>,
    /// Per-frame analytic lowest-vertex height (m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lowest_height: Option<Vec<f64>>,
    /// Constant horizontal foot speed (m/s) for glide-style motions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foot_speed: Option<f64>,
}

impl OracleTraces {
    pub fn is_empty(&self) -> bool {
        self.zmp_plane.is_none() && self.lowest_height.is_none() && self.foot_speed.is_none()
    }
}

/// Time-ordered frames sharing one body topology.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionSequence {
    pub fps: f64,
    pub body: BodyMesh,
    pub frames: Vec<MotionFrame>,
    /// Optional analytic traces from a generator. Dropped by any transform
    /// that would invalidate them.
    pub traces: Option<OracleTraces>,
}

impl MotionSequence {
    pub fn validate(&self) -> Result<()> {
        if self.fps <= 0.0 || !self.fps.is_finite() {
            return Err(Error::InvalidInput(format!("fps must be positive, got {}", self.fps)));
        }
        if self.frames.len() < 3 {
            return Err(Error::TooShort {
                frames: self.frames.len(),
            });
        }
        self.body.validate()?;
        let n = self.body.num_vertices();
        let j = self.frames[0].joint_positions.len();
        for (t, f) in self.frames.iter().enumerate() {
            if f.vertex_positions.len() != n {
                return Err(Error::Shape(format!(
                    "frame {t} has {} vertices, expected {n}",
                    f.vertex_positions.len()
                )));
            }
            if f.joint_positions.len() != j || f.joint_rotations_6d.len() != j {
                return Err(Error::Shape(format!(
                    "frame {t} has {} joint positions and {} joint rotations, expected {j} of each",
                    f.joint_positions.len(),
                    f.joint_rotations_6d.len()
                )));
            }
        }
        Ok(())
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.body.num_vertices()
    }

    pub fn num_joints(&self) -> usize {
        self.frames.first().map_or(0, |f| f.joint_positions.len())
    }

    pub fn duration(&self) -> f64 {
        (self.num_frames().saturating_sub(1)) as f64 / self.fps
    }
}

/// Weights for the combined training loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_cycle: f64,
    pub lambda_physics: f64,
    pub lambda_dyn: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_cycle: 1.0,
            lambda_physics: 1.0,
            lambda_dyn: 1e-4,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_cycle < 0.0 || self.lambda_physics < 0.0 || self.lambda_dyn < 0.0 {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Tunable constants for dynamics, losses, and metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Pressure-field slope below the ground.
    pub alpha: f64,
    /// Pressure-field decay above the ground.
    pub gamma: f64,
    /// Body density (kg/m³) used to turn volume into mass.
    pub density: f64,
    /// Height below which a vertex counts as ground contact for the base of
    /// support (m).
    pub contact_height: f64,
    /// Lowest-vertex height above which the stability term is disabled (m).
    pub support_gate_height: f64,
    /// Minimum |F·n| for the ZMP to be defined (N).
    pub eps_vertical_force: f64,
    /// Geman-McClure scale for the stability loss (m).
    pub sigma_gm: f64,
    /// Smooth-L1 transition point for the position cycle loss (m).
    pub smooth_l1_delta: f64,
    /// Foot-joint height threshold for slide/skate contact (m).
    pub slide_contact_height: f64,
    /// Horizontal speed above which a contacting foot counts as skating (m/s).
    pub skate_velocity_eps: f64,
    /// Joint slots treated as feet.
    pub foot_joints: Vec<usize>,
    /// When set, the center of pressure is computed over this many
    /// area-weighted surface samples instead of the mesh vertices.
    pub cop_surface_samples: Option<usize>,
    /// Seed for the surface sampler.
    pub cop_sample_seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alpha: 100.0,
            gamma: 10.0,
            density: 985.0,
            contact_height: 0.02,
            support_gate_height: 0.25,
            eps_vertical_force: 1e-6,
            sigma_gm: 0.1,
            smooth_l1_delta: 1.0,
            slide_contact_height: 0.05,
            skate_velocity_eps: 0.10,
            foot_joints: vec![7, 8, 10, 11],
            cop_surface_samples: None,
            cop_sample_seed: 0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.gamma < 0.0 {
            return Err(Error::Config("alpha and gamma must be non-negative".into()));
        }
        if self.density <= 0.0 {
            return Err(Error::Config("density must be positive".into()));
        }
        if self.sigma_gm <= 0.0 {
            return Err(Error::Config("sigma_gm must be positive".into()));
        }
        if self.smooth_l1_delta <= 0.0 {
            return Err(Error::Config("smooth_l1_delta must be positive".into()));
        }
        if self.eps_vertical_force <= 0.0 {
            return Err(Error::Config("eps_vertical_force must be positive".into()));
        }
        Ok(())
    }
}

/// The five evaluation metrics for one sequence or a corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub penetrate_cm: f64,
    pub float_cm: f64,
    pub skate_pct: f64,
    pub dyn_stability_pct: f64,
    pub bos_dist_cm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_frame: Option<PerFrameTraces>,
}

/// Per-frame diagnostics behind a report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerFrameTraces {
    pub penetrate_cm: Vec<f64>,
    pub float_cm: Vec<f64>,
    /// Per adjacent pair: `None` when no foot contact, otherwise whether the
    /// contacting feet exceeded the skate velocity threshold.
    pub skate: Vec<Option<bool>>,
    /// Per interior frame: `None` when the frame is gated out or the ZMP or
    /// hull is undefined, otherwise whether the ZMP lies within the hull.
    pub stable: Vec<Option<bool>>,
    /// ZMP-to-hull distance (cm) for unstable evaluable frames, else 0.
    pub bos_dist_cm: Vec<f64>,
}

impl MetricsReport {
    pub fn validate(&self) -> Result<()> {
        let ok = self.penetrate_cm >= 0.0
            && self.float_cm >= 0.0
            && (0.0..=100.0).contains(&self.skate_pct)
            && (0.0..=100.0).contains(&self.dyn_stability_pct)
            && self.bos_dist_cm >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("metrics out of range".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plane_is_z_up() {
        let p = GroundPlane::default();
        assert_eq!(p.normal, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(p.gravity(), Vector3::new(0.0, 0.0, -9.81));
        assert_eq!(p.height(&Vector3::new(3.0, -2.0, 0.75)), 0.75);
    }

    #[test]
    fn plane_rejects_non_unit_normal() {
        assert!(GroundPlane::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 2.0), 9.81).is_err());
    }

    #[test]
    fn plane_basis_is_orthonormal() {
        for normal in [
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(1.0, 2.0, 3.0).normalize(),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
        ] {
            let plane = GroundPlane::new(Vector3::new(0.5, 0.0, -1.0), normal, 9.81).unwrap();
            let (e1, e2) = plane.basis();
            assert!(e1.dot(&e2).abs() < 1e-12);
            assert!(e1.dot(&normal).abs() < 1e-12);
            assert!((e1.norm() - 1.0).abs() < 1e-12);
            assert!((e1.cross(&e2) - normal).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_coords_round_trip() {
        let plane = GroundPlane::new(
            Vector3::new(1.0, -2.0, 0.5),
            Vector3::new(1.0, 1.0, 1.0).normalize(),
            9.81,
        )
        .unwrap();
        let p = Vector3::new(0.3, 0.7, -1.1);
        let uv = plane.to_plane_coords(&p);
        let q = plane.from_plane_coords(uv);
        assert!((plane.project(&p) - q).norm() < 1e-12);
    }

    #[test]
    fn default_weights_match_contract() {
        let w = LossWeights::default();
        assert_eq!(w.lambda_cycle, 1.0);
        assert_eq!(w.lambda_physics, 1.0);
        assert_eq!(w.lambda_dyn, 1e-4);
    }

    #[test]
    fn config_defaults() {
        let c = AnalysisConfig::default();
        assert_eq!(c.alpha, 100.0);
        assert_eq!(c.gamma, 10.0);
        assert_eq!(c.support_gate_height, 0.25);
        assert_eq!(c.contact_height, 0.02);
        c.validate().unwrap();
    }
}
