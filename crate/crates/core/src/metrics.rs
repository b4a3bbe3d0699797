//! Evaluation metrics: Penetrate, Float, Skate, Dyn. Stability, BoS Dist.
//!
//! Distances report in centimeters and rates in percent. Dynamic stability
//! is the share of evaluable frames whose ZMP lies inside the base of
//! support (higher is better); frames that are gated out, have no support
//! hull, or an undefined ZMP are excluded from its denominator.

use nalgebra::Vector2;

use crate::dynamics::analyze_sequence;
use crate::error::{Error, Result};
use crate::geometry::{lowest_vertex_height, mass_distribution, MassDistribution};
use crate::types::{AnalysisConfig, GroundPlane, MetricsReport, MotionSequence, PerFrameTraces};

/// Mean depth of the lowest vertex below ground, cm.
pub fn penetrate_metric(sequence: &MotionSequence, plane: &GroundPlane) -> f64 {
    let t = sequence.frames.len() as f64;
    sequence
        .frames
        .iter()
        .map(|f| (-lowest_vertex_height(&f.vertex_positions, plane)).max(0.0))
        .sum::<f64>()
        / t
        * 100.0
}

/// Mean height of the lowest vertex above ground, cm.
pub fn float_metric(sequence: &MotionSequence, plane: &GroundPlane) -> f64 {
    let t = sequence.frames.len() as f64;
    sequence
        .frames
        .iter()
        .map(|f| lowest_vertex_height(&f.vertex_positions, plane).max(0.0))
        .sum::<f64>()
        / t
        * 100.0
}

/// Skate metric plus its denominator, so "no contact anywhere" is
/// distinguishable from "no skating".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkateMetric {
    /// Share of contacting adjacent-frame pairs whose feet moved faster
    /// than the velocity threshold, percent.
    pub percent: f64,
    /// Adjacent-frame pairs with at least one foot in contact at both ends.
    pub contacting_pairs: usize,
}

/// Percentage of adjacent frame pairs with foot contact whose contacting
/// feet have a mean horizontal speed above the threshold.
pub fn skate_metric(
    sequence: &MotionSequence,
    plane: &GroundPlane,
    config: &AnalysisConfig,
) -> SkateMetric {
    let mut contacting_pairs = 0usize;
    let mut skating_pairs = 0usize;
    for t in 0..sequence.frames.len().saturating_sub(1) {
        let a = &sequence.frames[t];
        let b = &sequence.frames[t + 1];
        let mut speed_sum = 0.0;
        let mut joints = 0usize;
        for &j in &config.foot_joints {
            if j >= a.joint_positions.len() {
                continue;
            }
            let pa = a.joint_positions[j];
            let pb = b.joint_positions[j];
            if plane.height(&pa) < config.slide_contact_height
                && plane.height(&pb) < config.slide_contact_height
            {
                let v = (pb - pa) * sequence.fps;
                let horiz = v - plane.normal * v.dot(&plane.normal);
                speed_sum += horiz.norm();
                joints += 1;
            }
        }
        if joints > 0 {
            contacting_pairs += 1;
            if speed_sum / joints as f64 > config.skate_velocity_eps {
                skating_pairs += 1;
            }
        }
    }
    let percent = if contacting_pairs == 0 {
        0.0
    } else {
        skating_pairs as f64 / contacting_pairs as f64 * 100.0
    };
    SkateMetric {
        percent,
        contacting_pairs,
    }
}

/// Stability bookkeeping shared by the Dyn. Stability and BoS Dist metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityStats {
    /// Interior frames that were gated in with a defined ZMP and a non-empty
    /// support hull.
    pub evaluable_frames: usize,
    pub stable_frames: usize,
    /// ZMP-to-hull distances (m) of the unstable evaluable frames.
    pub unstable_distances: Vec<f64>,
    /// Per interior frame: `None` if not evaluable, else stability.
    pub per_frame: Vec<Option<bool>>,
}

impl StabilityStats {
    /// Share of evaluable frames that are stable, percent. Vacuously 100
    /// when nothing is evaluable.
    pub fn stability_pct(&self) -> f64 {
        if self.evaluable_frames == 0 {
            100.0
        } else {
            self.stable_frames as f64 / self.evaluable_frames as f64 * 100.0
        }
    }

    /// Mean ZMP-to-hull distance over unstable frames, cm; 0 without any.
    pub fn bos_dist_cm(&self) -> f64 {
        if self.unstable_distances.is_empty() {
            0.0
        } else {
            self.unstable_distances.iter().sum::<f64>() / self.unstable_distances.len() as f64
                * 100.0
        }
    }
}

/// Evaluate ZMP-in-hull stability over the interior frames.
pub fn stability_stats(
    sequence: &MotionSequence,
    masses: &MassDistribution,
    plane: &GroundPlane,
    config: &AnalysisConfig,
) -> Result<StabilityStats> {
    let frames = analyze_sequence(sequence, masses, plane, config)?;
    let mut stats = StabilityStats {
        evaluable_frames: 0,
        stable_frames: 0,
        unstable_distances: Vec::new(),
        per_frame: Vec::new(),
    };
    for f in frames.iter().take(frames.len() - 1).skip(1) {
        if !f.support_gate || f.support.is_empty() {
            stats.per_frame.push(None);
            continue;
        }
        let Some(zmp) = f.zmp else {
            stats.per_frame.push(None);
            continue;
        };
        let uv = plane.to_plane_coords(&zmp);
        let p = Vector2::new(uv[0], uv[1]);
        stats.evaluable_frames += 1;
        if f.support.contains(&p) {
            stats.stable_frames += 1;
            stats.per_frame.push(Some(true));
        } else {
            let d = f
                .support
                .edge_distance(&p)
                .expect("non-empty hull has a distance");
            stats.unstable_distances.push(d);
            stats.per_frame.push(Some(false));
        }
    }
    Ok(stats)
}

/// Percentage of evaluable interior frames whose ZMP lies within the base
/// of support.
pub fn dyn_stability_metric(
    sequence: &MotionSequence,
    masses: &MassDistribution,
    plane: &GroundPlane,
    config: &AnalysisConfig,
) -> Result<f64> {
    Ok(stability_stats(sequence, masses, plane, config)?.stability_pct())
}

/// Mean distance (cm) from the ZMP to the nearest hull edge over the
/// unstable evaluable frames; 0 when every frame is stable.
pub fn bos_dist_metric(
    sequence: &MotionSequence,
    masses: &MassDistribution,
    plane: &GroundPlane,
    config: &AnalysisConfig,
) -> Result<f64> {
    Ok(stability_stats(sequence, masses, plane, config)?.bos_dist_cm())
}

/// All five metrics for one sequence. Masses come from the first frame's
/// part volumes at the configured density.
pub fn sequence_report(
    sequence: &MotionSequence,
    plane: &GroundPlane,
    config: &AnalysisConfig,
    with_traces: bool,
) -> Result<MetricsReport> {
    sequence.validate()?;
    let masses = mass_distribution(
        &sequence.body,
        &sequence.frames[0].vertex_positions,
        config.density,
    )?;
    sequence_report_with_masses(sequence, &masses, plane, config, with_traces)
}

/// As [`sequence_report`], with externally supplied masses.
pub fn sequence_report_with_masses(
    sequence: &MotionSequence,
    masses: &MassDistribution,
    plane: &GroundPlane,
    config: &AnalysisConfig,
    with_traces: bool,
) -> Result<MetricsReport> {
    let stats = stability_stats(sequence, masses, plane, config)?;
    let skate = skate_metric(sequence, plane, config);
    let mut report = MetricsReport {
        penetrate_cm: penetrate_metric(sequence, plane),
        float_cm: float_metric(sequence, plane),
        skate_pct: skate.percent,
        dyn_stability_pct: stats.stability_pct(),
        bos_dist_cm: stats.bos_dist_cm(),
        per_frame: None,
    };
    if with_traces {
        report.per_frame = Some(build_traces(sequence, plane, config, &stats));
    }
    report.validate()?;
    Ok(report)
}

fn build_traces(
    sequence: &MotionSequence,
    plane: &GroundPlane,
    config: &AnalysisConfig,
    stats: &StabilityStats,
) -> PerFrameTraces {
    let mut traces = PerFrameTraces::default();
    for f in &sequence.frames {
        let h = lowest_vertex_height(&f.vertex_positions, plane);
        traces.penetrate_cm.push((-h).max(0.0) * 100.0);
        traces.float_cm.push(h.max(0.0) * 100.0);
    }
    for t in 0..sequence.frames.len().saturating_sub(1) {
        let a = &sequence.frames[t];
        let b = &sequence.frames[t + 1];
        let mut speed_sum = 0.0;
        let mut joints = 0usize;
        for &j in &config.foot_joints {
            if j >= a.joint_positions.len() {
                continue;
            }
            let pa = a.joint_positions[j];
            let pb = b.joint_positions[j];
            if plane.height(&pa) < config.slide_contact_height
                && plane.height(&pb) < config.slide_contact_height
            {
                let v = (pb - pa) * sequence.fps;
                let horiz = v - plane.normal * v.dot(&plane.normal);
                speed_sum += horiz.norm();
                joints += 1;
            }
        }
        traces.skate.push(if joints == 0 {
            None
        } else {
            Some(speed_sum / joints as f64 > config.skate_velocity_eps)
        });
    }
    traces.stable = stats.per_frame.clone();
    let mut unstable_iter = stats.unstable_distances.iter();
    traces.bos_dist_cm = stats
        .per_frame
        .iter()
        .map(|s| match s {
            Some(false) => unstable_iter.next().copied().unwrap_or(0.0) * 100.0,
            _ => 0.0,
        })
        .collect();
    traces
}

/// Unweighted columnwise mean over per-sequence reports.
pub fn corpus_report(reports: &[MetricsReport]) -> Result<MetricsReport> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("empty corpus".into()));
    }
    let n = reports.len() as f64;
    let report = MetricsReport {
        penetrate_cm: reports.iter().map(|r| r.penetrate_cm).sum::<f64>() / n,
        float_cm: reports.iter().map(|r| r.float_cm).sum::<f64>() / n,
        skate_pct: reports.iter().map(|r| r.skate_pct).sum::<f64>() / n,
        dyn_stability_pct: reports.iter().map(|r| r.dyn_stability_pct).sum::<f64>() / n,
        bos_dist_cm: reports.iter().map(|r| r.bos_dist_cm).sum::<f64>() / n,
        per_frame: None,
    };
    report.validate()?;
    Ok(report)
}

/// Column headers in report order, with the better-direction arrows.
pub const TABLE_COLUMNS: [&str; 5] = [
    "Penetrate (cm) \u{2193}",
    "Float (cm) \u{2193}",
    "Skate (%) \u{2193}",
    "Dyn. Stability (%) \u{2191}",
    "BoS Dist (cm) \u{2193}",
];

/// Fixed-width table of labeled reports, one row per report.
pub fn render_table(rows: &[(String, MetricsReport)]) -> String {
    let name_width = rows
        .iter()
        .map(|(n, _)| n.chars().count())
        .chain(std::iter::once("Sequence".len()))
        .max()
        .unwrap_or(8)
        .max(8);
    let mut out = String::new();
    out.push_str(&format!("{:<name_width$}", "Sequence"));
    for c in TABLE_COLUMNS {
        out.push_str(&format!("  {:>width$}", c, width = c.chars().count().max(10)));
    }
    out.push('\n');
    for (name, r) in rows {
        out.push_str(&format!("{:<name_width$}", name));
        let values = [
            r.penetrate_cm,
            r.float_cm,
            r.skate_pct,
            r.dyn_stability_pct,
            r.bos_dist_cm,
        ];
        for (v, c) in values.iter().zip(TABLE_COLUMNS) {
            out.push_str(&format!(
                "  {:>width$.2}",
                v,
                width = c.chars().count().max(10)
            ));
        }
        out.push('\n');
    }
    out
}
