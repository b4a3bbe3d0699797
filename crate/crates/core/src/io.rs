//! Motion interchange format.
//!
//! A self-describing JSON document: one `header` object, one `frames` array,
//! and an optional `metadata` object carrying generator oracle traces.
//! All numeric arrays are row-major flattened. Numeric content round-trips
//! bit-for-bit through save/load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::types::{BodyMesh, MotionFrame, MotionSequence, OracleTraces};

#[derive(Serialize)]
struct FootSetsOut<'a> {
    left: &'a [usize],
    right: &'a [usize],
}

#[derive(Serialize)]
struct HeaderOut<'a> {
    fps: f64,
    #[serde(rename = "N_U")]
    n_u: usize,
    #[serde(rename = "J")]
    j: usize,
    #[serde(rename = "K")]
    k: usize,
    faces: Vec<usize>,
    part_labels: &'a [usize],
    foot_vertex_sets: FootSetsOut<'a>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    joint_lr_pairs: Vec<usize>,
}

#[derive(Serialize)]
struct FrameOut {
    vertex_positions: Vec<f64>,
    joint_positions: Vec<f64>,
    joint_rotations_6d: Vec<f64>,
    root_translation: [f64; 3],
}

#[derive(Serialize)]
struct DocOut<'a> {
    header: HeaderOut<'a>,
    frames: Vec<FrameOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<&'a OracleTraces>,
}

fn flatten_vec3(points: &[Vector3<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len() * 3);
    for p in points {
        out.extend_from_slice(&[p.x, p.y, p.z]);
    }
    out
}

fn check_finite(values: &[f64], field: &str) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Schema {
            field: format!("{field}[{i}]"),
            message: "value is not finite".into(),
        });
    }
    Ok(())
}

/// Serialize a sequence to the interchange document.
pub fn save_motion(m: &MotionSequence, path: &Path) -> Result<()> {
    m.validate()?;
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_motion(m, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Serialize to any writer; see [`save_motion`].
pub fn write_motion<W: Write>(m: &MotionSequence, w: W) -> Result<()> {
    let j = m.num_joints();
    let mut frames = Vec::with_capacity(m.frames.len());
    for (t, f) in m.frames.iter().enumerate() {
        let vp = flatten_vec3(&f.vertex_positions);
        let jp = flatten_vec3(&f.joint_positions);
        let mut rr = Vec::with_capacity(j * 6);
        for r in &f.joint_rotations_6d {
            rr.extend_from_slice(r);
        }
        check_finite(&vp, &format!("frames[{t}].vertex_positions"))?;
        check_finite(&jp, &format!("frames[{t}].joint_positions"))?;
        check_finite(&rr, &format!("frames[{t}].joint_rotations_6d"))?;
        let root = [f.root_translation.x, f.root_translation.y, f.root_translation.z];
        check_finite(&root, &format!("frames[{t}].root_translation"))?;
        frames.push(FrameOut {
            vertex_positions: vp,
            joint_positions: jp,
            joint_rotations_6d: rr,
            root_translation: root,
        });
    }
    let doc = DocOut {
        header: HeaderOut {
            fps: m.fps,
            n_u: m.body.num_vertices(),
            j,
            k: m.body.num_parts,
            faces: m.body.faces.iter().flat_map(|f| f.iter().copied()).collect(),
            part_labels: &m.body.part_labels,
            foot_vertex_sets: FootSetsOut {
                left: &m.body.left_foot_vertices,
                right: &m.body.right_foot_vertices,
            },
            joint_lr_pairs: m
                .body
                .joint_lr_pairs
                .iter()
                .flat_map(|&(l, r)| [l, r])
                .collect(),
        },
        frames,
        metadata: m.traces.as_ref().filter(|t| !t.is_empty()),
    };
    serde_json::to_writer(w, &doc)?;
    Ok(())
}

/// Load and validate a sequence from the interchange document.
pub fn load_motion(path: &Path) -> Result<MotionSequence> {
    let file = File::open(path)?;
    read_motion(BufReader::new(file))
}

/// Deserialize from any reader; see [`load_motion`].
pub fn read_motion<R: Read>(r: R) -> Result<MotionSequence> {
    let doc: Value = serde_json::from_reader(r)?;
    parse_document(&doc)
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn get_field<'v>(obj: &'v Value, field: &str, path: &str) -> Result<&'v Value> {
    obj.as_object()
        .ok_or_else(|| schema(path, "expected an object"))?
        .get(field)
        .ok_or_else(|| schema(format!("{path}.{field}"), "missing field"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| schema(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(schema(path, "value is not finite"));
    }
    Ok(x)
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(path, "expected a non-negative integer"))
}

fn as_f64_array(v: &Value, path: &str, expect_len: usize) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| schema(path, "expected an array"))?;
    if arr.len() != expect_len {
        return Err(schema(
            path,
            format!("expected {expect_len} entries, got {}", arr.len()),
        ));
    }
    arr.iter()
        .enumerate()
        .map(|(i, e)| as_f64(e, &format!("{path}[{i}]")))
        .collect()
}

fn as_usize_array(v: &Value, path: &str) -> Result<Vec<usize>> {
    let arr = v.as_array().ok_or_else(|| schema(path, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, e)| as_usize(e, &format!("{path}[{i}]")))
        .collect()
}

fn unflatten_vec3(flat: &[f64]) -> Vec<Vector3<f64>> {
    flat.chunks_exact(3)
        .map(|c| Vector3::new(c[0], c[1], c[2]))
        .collect()
}

fn parse_document(doc: &Value) -> Result<MotionSequence> {
    let header = get_field(doc, "header", "document")?;
    let fps = as_f64(get_field(header, "fps", "header")?, "header.fps")?;
    if fps <= 0.0 {
        return Err(schema("header.fps", "must be positive"));
    }
    let n_u = as_usize(get_field(header, "N_U", "header")?, "header.N_U")?;
    let j = as_usize(get_field(header, "J", "header")?, "header.J")?;
    let k = as_usize(get_field(header, "K", "header")?, "header.K")?;

    let faces_flat = as_usize_array(get_field(header, "faces", "header")?, "header.faces")?;
    if faces_flat.len() % 3 != 0 {
        return Err(schema("header.faces", "length must be a multiple of 3"));
    }
    let faces: Vec<[usize; 3]> = faces_flat
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();

    let part_labels = as_usize_array(
        get_field(header, "part_labels", "header")?,
        "header.part_labels",
    )?;
    if part_labels.len() != n_u {
        return Err(schema(
            "header.part_labels",
            format!("expected {n_u} labels, got {}", part_labels.len()),
        ));
    }

    let foot_sets = get_field(header, "foot_vertex_sets", "header")?;
    let left_foot_vertices = as_usize_array(
        get_field(foot_sets, "left", "header.foot_vertex_sets")?,
        "header.foot_vertex_sets.left",
    )?;
    let right_foot_vertices = as_usize_array(
        get_field(foot_sets, "right", "header.foot_vertex_sets")?,
        "header.foot_vertex_sets.right",
    )?;

    let joint_lr_pairs = match header.get("joint_lr_pairs") {
        Some(v) => {
            let flat = as_usize_array(v, "header.joint_lr_pairs")?;
            if flat.len() % 2 != 0 {
                return Err(schema(
                    "header.joint_lr_pairs",
                    "length must be a multiple of 2",
                ));
            }
            flat.chunks_exact(2).map(|c| (c[0], c[1])).collect()
        }
        None => Vec::new(),
    };

    let frames_val = get_field(doc, "frames", "document")?;
    let frames_arr = frames_val
        .as_array()
        .ok_or_else(|| schema("frames", "expected an array"))?;
    if frames_arr.len() < 3 {
        return Err(Error::TooShort {
            frames: frames_arr.len(),
        });
    }

    let mut frames = Vec::with_capacity(frames_arr.len());
    for (t, fv) in frames_arr.iter().enumerate() {
        let p = format!("frames[{t}]");
        let vp = as_f64_array(
            get_field(fv, "vertex_positions", &p)?,
            &format!("{p}.vertex_positions"),
            3 * n_u,
        )?;
        let jp = as_f64_array(
            get_field(fv, "joint_positions", &p)?,
            &format!("{p}.joint_positions"),
            3 * j,
        )?;
        let rr = as_f64_array(
            get_field(fv, "joint_rotations_6d", &p)?,
            &format!("{p}.joint_rotations_6d"),
            6 * j,
        )?;
        let root = as_f64_array(
            get_field(fv, "root_translation", &p)?,
            &format!("{p}.root_translation"),
            3,
        )?;
        frames.push(MotionFrame {
            vertex_positions: unflatten_vec3(&vp),
            joint_positions: unflatten_vec3(&jp),
            joint_rotations_6d: rr
                .chunks_exact(6)
                .map(|c| [c[0], c[1], c[2], c[3], c[4], c[5]])
                .collect(),
            root_translation: Vector3::new(root[0], root[1], root[2]),
        });
    }

    let traces = match doc.get("metadata") {
        Some(v) => {
            let t: OracleTraces = serde_json::from_value(v.clone())?;
            if t.is_empty() {
                None
            } else {
                Some(t)
            }
        }
        None => None,
    };

    let body = BodyMesh {
        vertices: frames[0].vertex_positions.clone(),
        faces,
        part_labels,
        num_parts: k,
        left_foot_vertices,
        right_foot_vertices,
        joint_lr_pairs,
    };
    let m = MotionSequence {
        fps,
        body,
        frames,
        traces,
    };
    m.validate()?;
    Ok(m)
}
