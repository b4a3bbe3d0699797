//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::Instant;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kinephys::dynamics::{analyze_sequence, center_of_mass, vertex_accelerations};
use kinephys::geometry::{mass_distribution, MassDistribution};
use kinephys::grad::{run_gradcheck, GradCheckOptions, LossKind};
use kinephys::io::{read_motion, write_motion};
use kinephys::losses::{float_loss, penetration_loss, slide_loss};
use kinephys::metrics::{
    dyn_stability_metric, float_metric, penetrate_metric, render_table, sequence_report,
    skate_metric, TABLE_COLUMNS,
};
use kinephys::pipeline::{apply_rigid, canonicalize, ground, mirror, resample, support_filter};
use kinephys::synth::{
    bounce, cart_table, glide, humanoid, static_stand, wander, HumanoidParams, SinusoidProfile,
    SynthBody,
};
use kinephys::types::{AnalysisConfig, GroundPlane, MetricsReport, MotionSequence};

fn criterion(n: usize, what: &str, pass: bool) {
    println!(
        "criterion {n} ({what}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({what}) failed");
}

fn body() -> SynthBody {
    humanoid(HumanoidParams::default()).unwrap()
}

/// Random static pose: the humanoid under a random yaw, offset, and smooth
/// per-vertex jitter, held constant over five frames.
fn random_static_pose(seed: u64) -> MotionSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = body();
    let base = static_stand(&b, 5, 20.0).unwrap();
    let yaw = nalgebra::Rotation3::from_axis_angle(
        &Vector3::z_axis(),
        rng.gen_range(-3.0..3.0),
    )
    .into_inner();
    let t = Vector3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.0);
    let mut m = apply_rigid(&base, &yaw, &t).unwrap();
    let jitter: Vec<Vector3<f64>> = (0..m.num_vertices())
        .map(|_| {
            Vector3::new(
                rng.gen_range(-0.01..0.01),
                rng.gen_range(-0.01..0.01),
                rng.gen_range(-0.01..0.01),
            )
        })
        .collect();
    for f in &mut m.frames {
        for (v, d) in f.vertex_positions.iter_mut().zip(&jitter) {
            *v += d;
        }
    }
    m.body.vertices = m.frames[0].vertex_positions.clone();
    m
}

#[test]
fn criterion_1_static_zmp_reduction() {
    let start = Instant::now();
    let plane = GroundPlane::default();
    let config = AnalysisConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let m = random_static_pose(seed);
        let masses =
            mass_distribution(&m.body, &m.frames[0].vertex_positions, config.density).unwrap();
        let frames = analyze_sequence(&m, &masses, &plane, &config).unwrap();
        for f in &frames[1..frames.len() - 1] {
            let z = f.zmp.expect("static pose has a defined ZMP");
            worst = worst.max((z - f.com_projection).norm());
        }
    }
    let elapsed = start.elapsed();
    println!("  static reduction worst |Z - C_m| = {worst:.3e}, elapsed {elapsed:?}");
    criterion(
        1,
        "static ZMP reduction",
        worst < 1e-9 && elapsed.as_secs_f64() < 5.0,
    );
}

#[test]
fn criterion_2_cart_table_identity() {
    let start = Instant::now();
    let plane = GroundPlane::default();
    let config = AnalysisConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let profile = SinusoidProfile {
            accel_amplitude: rng.gen_range(0.5..2.0),
            frequency_hz: rng.gen_range(0.25..0.45),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        };
        let z_height = rng.gen_range(0.6..1.2);
        let m = cart_table(z_height, profile, 100, 20.0).unwrap();
        let masses =
            mass_distribution(&m.body, &m.frames[0].vertex_positions, config.density).unwrap();
        let frames = analyze_sequence(&m, &masses, &plane, &config).unwrap();
        let trace = m.traces.as_ref().unwrap().zmp_plane.as_ref().unwrap();
        for t in 1..99 {
            let z = frames[t].zmp.expect("cart table ZMP defined");
            worst = worst.max((z.x - trace[t][0]).abs());
            worst = worst.max((z.y - trace[t][1]).abs());
        }
    }
    let elapsed = start.elapsed();
    println!("  cart-table worst error = {worst:.3e} m, elapsed {elapsed:?}");
    criterion(
        2,
        "cart-table identity",
        worst < 1e-3 && elapsed.as_secs_f64() < 10.0,
    );
}

/// Brute-force torque balance: grid + refinement over ground points,
/// minimizing the horizontal moment of Σ (v_i - p) × m_i (g - a_i).
fn torque_balance_point(
    verts: &[Vector3<f64>],
    accels: &[Vector3<f64>],
    masses: &[f64],
    plane: &GroundPlane,
    center: &Vector3<f64>,
) -> Vector2<f64> {
    let (e1, e2) = plane.basis();
    let g = plane.gravity();
    let anchor = plane.project(center);
    let objective = |u: f64, v: f64| -> f64 {
        let p = anchor + e1 * u + e2 * v;
        let mut m = Vector3::zeros();
        for i in 0..verts.len() {
            m += (verts[i] - p).cross(&((g - accels[i]) * masses[i]));
        }
        (m - plane.normal * m.dot(&plane.normal)).norm()
    };
    let mut best = (0.0f64, 0.0f64);
    let mut span = 2.0f64;
    let mut step = 0.1f64;
    for _ in 0..6 {
        let mut best_val = f64::INFINITY;
        let mut next = best;
        let n = (2.0 * span / step).round() as i64;
        for i in 0..=n {
            for j in 0..=n {
                let u = best.0 - span + i as f64 * step;
                let v = best.1 - span + j as f64 * step;
                let val = objective(u, v);
                if val < best_val {
                    best_val = val;
                    next = (u, v);
                }
            }
        }
        best = next;
        span = step * 1.5;
        step /= 10.0;
    }
    let p = anchor + e1 * best.0 + e2 * best.1;
    let uv = plane.to_plane_coords(&p);
    Vector2::new(uv[0], uv[1])
}

#[test]
fn criterion_3_torque_balance_oracle() {
    let start = Instant::now();
    let plane = GroundPlane::default();
    let config = AnalysisConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3033);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(5..=50);
        let frames = rng.gen_range(4..=10);
        let fps = 20.0;
        // Smooth sinusoidal per-vertex trajectories.
        let base: Vec<Vector3<f64>> = (0..n)
            .map(|_| {
                Vector3::new(
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(0.0..1.5),
                )
            })
            .collect();
        let motion: Vec<[(f64, f64, f64); 3]> = (0..n)
            .map(|_| {
                std::array::from_fn(|_| {
                    (
                        rng.gen_range(-0.05..0.05),
                        rng.gen_range(0.2..1.2),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
            })
            .collect();
        let masses: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..4.0)).collect();
        let md = MassDistribution::from_vertex_masses(masses.clone(), 985.0).unwrap();

        let verts_at = |t: usize| -> Vec<Vector3<f64>> {
            let tt = t as f64 / fps;
            (0..n)
                .map(|i| {
                    let m = &motion[i];
                    base[i]
                        + Vector3::new(
                            m[0].0 * (std::f64::consts::TAU * m[0].1 * tt + m[0].2).sin(),
                            m[1].0 * (std::f64::consts::TAU * m[1].1 * tt + m[1].2).sin(),
                            m[2].0 * (std::f64::consts::TAU * m[2].1 * tt + m[2].2).sin(),
                        )
                })
                .collect()
        };
        let all_frames: Vec<Vec<Vector3<f64>>> = (0..frames).map(verts_at).collect();
        let accels = vertex_accelerations(&all_frames, fps).unwrap();

        for t in 1..frames - 1 {
            let verts = &all_frames[t];
            let com = center_of_mass(verts, &md);
            let mut a_com = Vector3::zeros();
            for (a, m) in accels[t].iter().zip(&masses) {
                a_com += a * *m;
            }
            a_com /= md.total_mass;
            let force = kinephys::dynamics::inertia_force(md.total_mass, &a_com, &plane);
            let h_dot =
                kinephys::dynamics::angular_momentum_rate(verts, &accels[t], &md, &com);
            let c_m = plane.project(&com);
            let moment =
                kinephys::dynamics::gi_moment(&c_m, &com, md.total_mass, &a_com, &h_dot, &plane);
            let Some(z) = kinephys::dynamics::zmp(
                &c_m,
                &moment,
                &force,
                &plane,
                config.eps_vertical_force,
            ) else {
                continue;
            };
            let uv = plane.to_plane_coords(&z);
            let brute = torque_balance_point(verts, &accels[t], &masses, &plane, &com);
            worst = worst.max((Vector2::new(uv[0], uv[1]) - brute).norm());
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    println!("  torque-balance: {checked} frames, worst |Z - Z*| = {worst:.3e} m, elapsed {elapsed:?}");
    criterion(
        3,
        "torque-balance oracle",
        checked > 300 && worst < 1e-3 && elapsed.as_secs_f64() < 120.0,
    );
}

#[test]
fn criterion_4_gradient_suite() {
    let start = Instant::now();
    let report = run_gradcheck(&LossKind::ALL, 20, 404, &GradCheckOptions::default()).unwrap();
    let elapsed = start.elapsed();
    for case in &report.cases {
        println!(
            "  {:<14} wrt {:<18} max rel err {:.3e} (max |g| {:.3e})",
            case.loss.name(),
            case.wrt.name(),
            case.max_rel_err,
            case.max_abs_grad
        );
    }
    let nonvacuous = report.cases.iter().all(|c| c.max_abs_grad > 0.0);
    println!("  elapsed {elapsed:?}");
    criterion(
        4,
        "gradient suite",
        report.passed() && nonvacuous && elapsed.as_secs_f64() < 120.0,
    );
}

#[test]
fn criterion_5_metric_oracles() {
    let plane = GroundPlane::default();
    let config = AnalysisConfig::default();
    let b = body();
    let mut ok = true;

    // Glide: every contacting pair skates.
    let g = glide(&b, 1.0, 20, 20.0).unwrap();
    let skate = skate_metric(&g, &plane, &config);
    ok &= skate.percent == 100.0;

    // Stand: physics losses exactly zero, stability 100%.
    let s = static_stand(&b, 10, 20.0).unwrap();
    let masses = mass_distribution(&s.body, &s.frames[0].vertex_positions, config.density).unwrap();
    ok &= penetration_loss(&s, &plane).unwrap().value == 0.0;
    ok &= float_loss(&s, &plane).unwrap().value == 0.0;
    ok &= slide_loss(&s, &plane, &config).unwrap().loss.value == 0.0;
    ok &= dyn_stability_metric(&s, &masses, &plane, &config).unwrap() == 100.0;

    // Bounce: metrics match the analytic sinusoid trace means.
    let bn = bounce(&b, 0.06, 50, 20.0, 0.7).unwrap();
    let trace = bn.traces.as_ref().unwrap().lowest_height.clone().unwrap();
    let t = trace.len() as f64;
    let want_pen = trace.iter().map(|h| (-h).max(0.0)).sum::<f64>() / t * 100.0;
    let want_float = trace.iter().map(|h| h.max(0.0)).sum::<f64>() / t * 100.0;
    ok &= (penetrate_metric(&bn, &plane) - want_pen).abs() < 1e-9;
    ok &= (float_metric(&bn, &plane) - want_float).abs() < 1e-9;

    // Grounding drives penetration to zero on arbitrary inputs.
    for seed in 0..5 {
        let w = wander(&b, 15, 20.0, 100 + seed).unwrap();
        let grounded = ground(&w, &plane).unwrap();
        ok &= penetrate_metric(&grounded, &plane) <= 1e-7;
    }
    criterion(5, "metric oracles", ok);
}

fn report_for(m: &MotionSequence) -> MetricsReport {
    sequence_report(m, &GroundPlane::default(), &AnalysisConfig::default(), false).unwrap()
}

fn reports_close(a: &MetricsReport, b: &MetricsReport, tol: f64) -> bool {
    (a.penetrate_cm - b.penetrate_cm).abs() < tol
        && (a.float_cm - b.float_cm).abs() < tol
        && (a.skate_pct - b.skate_pct).abs() < tol
        && (a.dyn_stability_pct - b.dyn_stability_pct).abs() < tol
        && (a.bos_dist_cm - b.bos_dist_cm).abs() < tol
}

#[test]
fn criterion_6_equivariance_suite() {
    let b = body();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for seed in 0..20 {
        let m = wander(&b, 12, 20.0, 600 + seed).unwrap();
        let base = report_for(&m);

        let d = Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), 0.0);
        let translated = apply_rigid(&m, &nalgebra::Matrix3::identity(), &d).unwrap();
        let tr = report_for(&translated);
        if !reports_close(&base, &tr, 1e-9) {
            println!("  translation broke seed {seed}: {base:?} vs {tr:?}");
            ok = false;
        }

        let yaw = nalgebra::Rotation3::from_axis_angle(
            &Vector3::z_axis(),
            rng.gen_range(-3.0..3.0),
        )
        .into_inner();
        let yawed = apply_rigid(&m, &yaw, &Vector3::zeros()).unwrap();
        let yr = report_for(&yawed);
        if !reports_close(&base, &yr, 1e-9) {
            println!("  yaw broke seed {seed}: {base:?} vs {yr:?}");
            ok = false;
        }

        let mirrored = mirror(&m).unwrap();
        assert!(mirrored.labels_swapped);
        let mr = report_for(&mirrored.sequence);
        if !reports_close(&base, &mr, 1e-9) {
            println!("  mirror broke seed {seed}: {base:?} vs {mr:?}");
            ok = false;
        }
    }
    criterion(6, "equivariance suite", ok);
}

#[test]
fn criterion_7_pipeline_conformance() {
    let plane = GroundPlane::default();
    let b = body();
    let mut ok = true;

    // Support filter: exactly 4 offending frames accepted, 5 rejected.
    let mut with_offenders = |count: usize| {
        let mut m = static_stand(&b, 12, 20.0).unwrap();
        for f in m.frames.iter_mut().take(count) {
            for v in &mut f.vertex_positions {
                v.z += 0.26;
            }
        }
        m.body.vertices = m.frames[0].vertex_positions.clone();
        m
    };
    ok &= support_filter(&with_offenders(4), &plane);
    ok &= !support_filter(&with_offenders(5), &plane);

    // Canonicalize idempotence.
    let w = wander(&b, 8, 20.0, 707).unwrap();
    let c1 = canonicalize(&w, &plane).unwrap();
    let c2 = canonicalize(&c1, &plane).unwrap();
    for (fa, fb) in c1.frames.iter().zip(&c2.frames) {
        for (va, vb) in fa.vertex_positions.iter().zip(&fb.vertex_positions) {
            ok &= (va - vb).norm() < 1e-12;
        }
    }

    // Mirror involution is exact.
    let mm = mirror(&mirror(&w).unwrap().sequence).unwrap().sequence;
    let mut w_no_traces = w.clone();
    w_no_traces.traces = None;
    ok &= mm == w_no_traces;

    // Resampling at 20 fps is the identity.
    let r = resample(&w, 20.0).unwrap();
    ok &= r == w;

    criterion(7, "pipeline conformance", ok);
}

#[test]
fn criterion_8_report_fidelity() {
    let fixture = MetricsReport {
        penetrate_cm: 1.23,
        float_cm: 1.04,
        skate_pct: 7.37,
        dyn_stability_pct: 71.9,
        bos_dist_cm: 14.62,
        per_frame: None,
    };
    let table = render_table(&[("sample".to_string(), fixture)]);
    println!("{table}");
    let mut ok = true;

    // Header: all five columns, in order, with the right arrows.
    let mut pos = 0usize;
    for c in TABLE_COLUMNS {
        match table[pos..].find(c) {
            Some(p) => pos += p + c.len(),
            None => {
                ok = false;
                break;
            }
        }
    }
    ok &= table.contains("Penetrate (cm) \u{2193}")
        && table.contains("Float (cm) \u{2193}")
        && table.contains("Skate (%) \u{2193}")
        && table.contains("Dyn. Stability (%) \u{2191}")
        && table.contains("BoS Dist (cm) \u{2193}");

    // Row: the five values in column order.
    let row = table.lines().nth(1).unwrap_or("");
    let mut pos = 0usize;
    for v in ["1.23", "1.04", "7.37", "71.90", "14.62"] {
        match row[pos..].find(v) {
            Some(p) => pos += p + v.len(),
            None => {
                ok = false;
                break;
            }
        }
    }
    criterion(8, "report fidelity", ok);
}

#[test]
fn criterion_9_performance() {
    // A body at the scale of a full-resolution human mesh.
    let dense = humanoid(HumanoidParams {
        subdivisions: 10,
        ..Default::default()
    })
    .unwrap();
    assert!(
        dense.mesh.num_vertices() >= 6890,
        "dense body has {} vertices",
        dense.mesh.num_vertices()
    );
    let m = wander(&dense, 200, 20.0, 909).unwrap();
    let plane = GroundPlane::default();
    let config = AnalysisConfig::default();

    let start = Instant::now();
    let report = sequence_report(&m, &plane, &config, false).unwrap();
    let elapsed = start.elapsed();
    println!(
        "  {} vertices x {} frames analyzed in {elapsed:?} (report: pen {:.2} float {:.2} skate {:.1} stab {:.1} bos {:.2})",
        m.num_vertices(),
        m.num_frames(),
        report.penetrate_cm,
        report.float_cm,
        report.skate_pct,
        report.dyn_stability_pct,
        report.bos_dist_cm
    );
    criterion(9, "performance", elapsed.as_secs_f64() < 1.0);
}

#[test]
fn interchange_round_trip_on_generated_motions() {
    // Generated sequences survive save/load bit-for-bit.
    let b = body();
    for (i, m) in [
        static_stand(&b, 5, 20.0).unwrap(),
        glide(&b, 1.2, 8, 20.0).unwrap(),
        bounce(&b, 0.05, 9, 20.0, 0.3).unwrap(),
        wander(&b, 7, 20.0, 5).unwrap(),
        cart_table(
            0.8,
            SinusoidProfile {
                accel_amplitude: 1.0,
                frequency_hz: 0.4,
                phase: 0.1,
            },
            6,
            20.0,
        )
        .unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let mut buf = Vec::new();
        write_motion(m, &mut buf).unwrap();
        let back = read_motion(buf.as_slice()).unwrap();
        assert_eq!(m, &back, "round trip failed for generator {i}");
    }
}
