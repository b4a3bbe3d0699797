//! Mesh volumes, mass distribution, and 2d support-hull primitives.

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::num::{Real, V3};
use crate::types::{BodyMesh, GroundPlane};

/// Cross-product tolerance for hull collinearity and containment checks.
const HULL_EPS: f64 = 1e-12;

/// Ties within this height band share the argmin subgradient.
const TIE_EPS: f64 = 1e-12;

/// Per-part volumes and the point masses they induce at the vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct MassDistribution {
    /// Per-part volumes, m³, indexed by `label - 1`.
    pub part_volumes: Vec<f64>,
    /// Per-vertex point masses, kg.
    pub vertex_masses: Vec<f64>,
    /// Total body mass, kg.
    pub total_mass: f64,
    /// kg/m³.
    pub density: f64,
}

impl MassDistribution {
    /// Build directly from per-vertex masses (no mesh required). Used when a
    /// point cloud stands in for a body.
    pub fn from_vertex_masses(vertex_masses: Vec<f64>, density: f64) -> Result<Self> {
        if vertex_masses.iter().any(|&m| m < 0.0 || !m.is_finite()) {
            return Err(Error::InvalidInput(
                "vertex masses must be finite and non-negative".into(),
            ));
        }
        if density <= 0.0 {
            return Err(Error::InvalidInput("density must be positive".into()));
        }
        let total_mass: f64 = vertex_masses.iter().sum();
        if total_mass <= 0.0 {
            return Err(Error::InvalidInput("total mass must be positive".into()));
        }
        Ok(MassDistribution {
            part_volumes: vec![total_mass / density],
            vertex_masses,
            total_mass,
            density,
        })
    }
}

/// Signed volume of each part submesh, closed by a fan from the part's
/// vertex centroid (divergence theorem). Exact for watertight parts.
///
/// A face belongs to a part when all three of its vertices carry that label;
/// mixed-label seam faces belong to no part.
pub fn part_volumes(body: &BodyMesh, frame_vertices: &[Vector3<f64>]) -> Result<Vec<f64>> {
    if frame_vertices.len() != body.num_vertices() {
        return Err(Error::Shape(format!(
            "frame has {} vertices, body has {}",
            frame_vertices.len(),
            body.num_vertices()
        )));
    }
    let k = body.num_parts;

    // Vertex centroid per part, the fan apex.
    let mut centroid = vec![Vector3::zeros(); k];
    let mut counts = vec![0usize; k];
    for (v, &label) in frame_vertices.iter().zip(&body.part_labels) {
        centroid[label - 1] += v;
        counts[label - 1] += 1;
    }
    for p in 0..k {
        if counts[p] == 0 {
            return Err(Error::DegenerateGeometry {
                part: p + 1,
                message: "part has no vertices".into(),
            });
        }
        centroid[p] /= counts[p] as f64;
    }

    let mut volumes = vec![0.0f64; k];
    let mut face_counts = vec![0usize; k];
    for f in &body.faces {
        let l = body.part_labels[f[0]];
        if body.part_labels[f[1]] != l || body.part_labels[f[2]] != l {
            continue;
        }
        let c = centroid[l - 1];
        let a = frame_vertices[f[0]] - c;
        let b = frame_vertices[f[1]] - c;
        let d = frame_vertices[f[2]] - c;
        volumes[l - 1] += a.dot(&b.cross(&d)) / 6.0;
        face_counts[l - 1] += 1;
    }

    for p in 0..k {
        if face_counts[p] == 0 {
            return Err(Error::DegenerateGeometry {
                part: p + 1,
                message: "part has no faces".into(),
            });
        }
        if volumes[p] <= 1e-12 {
            return Err(Error::DegenerateGeometry {
                part: p + 1,
                message: format!("non-positive volume {:.3e} m³", volumes[p]),
            });
        }
    }
    Ok(volumes)
}

/// Distribute the body mass to point masses at the vertices, each vertex
/// weighted by its part's volume: `m_vi = V(part(i)) · m / Σ_j V(part(j))`
/// with `m = density · Σ_p V_p`.
pub fn mass_distribution(
    body: &BodyMesh,
    frame_vertices: &[Vector3<f64>],
    density: f64,
) -> Result<MassDistribution> {
    if density <= 0.0 {
        return Err(Error::InvalidInput("density must be positive".into()));
    }
    let part_volumes = self::part_volumes(body, frame_vertices)?;
    let total_mass = density * part_volumes.iter().sum::<f64>();
    let weight_sum: f64 = body
        .part_labels
        .iter()
        .map(|&l| part_volumes[l - 1])
        .sum();
    let vertex_masses: Vec<f64> = body
        .part_labels
        .iter()
        .map(|&l| part_volumes[l - 1] * total_mass / weight_sum)
        .collect();
    Ok(MassDistribution {
        part_volumes,
        vertex_masses,
        total_mass,
        density,
    })
}

/// Convex hull of ground-contact points, on the ground plane.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportHull {
    /// The contact points the hull was built from (plane coordinates).
    pub contact_points: Vec<Vector2<f64>>,
    /// Counter-clockwise hull vertices; interior collinear points dropped.
    /// Fewer than 3 vertices means a degenerate (point/segment) hull.
    pub hull: Vec<Vector2<f64>>,
}

impl SupportHull {
    pub fn is_empty(&self) -> bool {
        self.contact_points.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.hull.len() < 3
    }

    /// True when the point lies inside or on the hull boundary.
    /// Degenerate hulls contain only points on them; empty hulls, nothing.
    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        match self.hull.len() {
            0 => false,
            1 | 2 => self
                .edge_distance(p)
                .map(|d| d <= HULL_EPS)
                .unwrap_or(false),
            n => {
                for i in 0..n {
                    let a = self.hull[i];
                    let b = self.hull[(i + 1) % n];
                    if cross2(&(b - a), &(p - a)) < -HULL_EPS {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Distance from the point to the hull: 0 inside or on the boundary,
    /// otherwise the distance to the nearest boundary segment.
    /// `None` for an empty hull (no support).
    pub fn edge_distance(&self, p: &Vector2<f64>) -> Option<f64> {
        match self.hull.len() {
            0 => None,
            1 => Some((p - self.hull[0]).norm()),
            2 => Some(point_segment_distance(p, &self.hull[0], &self.hull[1])),
            n => {
                if self.contains(p) {
                    return Some(0.0);
                }
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let d = point_segment_distance(p, &self.hull[i], &self.hull[(i + 1) % n]);
                    best = best.min(d);
                }
                Some(best)
            }
        }
    }
}

#[inline]
fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

pub(crate) fn point_segment_distance(
    p: &Vector2<f64>,
    a: &Vector2<f64>,
    b: &Vector2<f64>,
) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Monotone-chain convex hull, counter-clockwise, collinear interior points
/// dropped. Zero to two distinct input points yield a degenerate hull.
pub fn convex_hull_2d(points: &[Vector2<f64>]) -> SupportHull {
    let contact_points = points.to_vec();
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| a == b);

    if pts.len() <= 2 {
        return SupportHull {
            contact_points,
            hull: pts,
        };
    }

    let mut lower: Vec<Vector2<f64>> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 {
            let a = lower[lower.len() - 2];
            let b = lower[lower.len() - 1];
            if cross2(&(b - a), &(p - a)) <= HULL_EPS {
                lower.pop();
            } else {
                break;
            }
        }
        lower.push(p);
    }
    let mut upper: Vec<Vector2<f64>> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 {
            let a = upper[upper.len() - 2];
            let b = upper[upper.len() - 1];
            if cross2(&(b - a), &(p - a)) <= HULL_EPS {
                upper.pop();
            } else {
                break;
            }
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    SupportHull {
        contact_points,
        hull: lower,
    }
}

/// Generic lowest-vertex height above the plane. When several vertices tie
/// for the minimum within 1e-12 the subgradient is averaged across them.
pub(crate) fn lowest_height_g<T: Real>(verts: &[V3<T>], origin: V3<T>, normal: V3<T>) -> T {
    debug_assert!(!verts.is_empty());
    let heights: Vec<T> = verts.iter().map(|v| (*v - origin).dot(normal)).collect();
    let mut min_idx = 0;
    for (i, h) in heights.iter().enumerate() {
        if h.value() < heights[min_idx].value() {
            min_idx = i;
        }
    }
    let min_val = heights[min_idx].value();
    let ties: Vec<T> = heights
        .iter()
        .copied()
        .filter(|h| (h.value() - min_val).abs() <= TIE_EPS)
        .collect();
    T::mean_tangent(heights[min_idx], &ties)
}

/// Signed height of the lowest vertex above the ground plane.
pub fn lowest_vertex_height(frame_vertices: &[Vector3<f64>], plane: &GroundPlane) -> f64 {
    lowest_height_g::<f64>(
        &frame_vertices
            .iter()
            .map(|v| V3::new(v.x, v.y, v.z))
            .collect::<Vec<_>>(),
        V3::new(plane.origin.x, plane.origin.y, plane.origin.z),
        V3::new(plane.normal.x, plane.normal.y, plane.normal.z),
    )
}
