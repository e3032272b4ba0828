//! Binary little-endian point-cloud scenes in the common 3DGS layout.
//!
//! One `vertex` element with `float` properties, matched by name:
//!
//! | properties | meaning |
//! |---|---|
//! | `x y z` | mean |
//! | `nx ny nz` | optional, ignored |
//! | `f_dc_0..2` | degree-0 SH coefficient (RGB) |
//! | `f_rest_0..` | higher SH bands, channel-major, 0/9/24/45 entries |
//! | `opacity` | logit of the opacity |
//! | `scale_0..2` | natural log of the per-axis standard deviation |
//! | `rot_0..3` | rotation quaternion `(w, x, y, z)`, not necessarily unit |
//!
//! Other float properties are skipped.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::Quaternion;
use thiserror::Error;

use crate::gaussian::{normalize_rotation, Gaussian3D};
use crate::Vec3;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported field layout: {0}")]
    UnsupportedFieldLayout(String),
    #[error("file truncated: expected {expected} bytes of vertex data, found {actual}")]
    TruncatedFile { expected: usize, actual: usize },
}

/// One record as stored in the file, before activation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub position: [f32; 3],
    pub normal: [f32; 3],
    pub f_dc: [f32; 3],
    pub f_rest: Vec<f32>,
    pub opacity_logit: f32,
    pub log_scale: [f32; 3],
    pub rotation: [f32; 4],
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct SceneFileReport {
    pub gaussian_count: u64,
    pub normalized_quaternions: u64,
    pub rejected_records: u64,
    pub rejection_reasons: BTreeMap<String, u64>,
    pub sh_degree: usize,
}

struct Layout {
    stride: usize,
    count: usize,
    offsets: BTreeMap<String, usize>,
    rest: usize,
}

fn rest_len(degree: usize) -> usize {
    3 * ((degree + 1) * (degree + 1) - 1)
}

fn parse_header(bytes: &[u8]) -> Result<(Layout, usize), SceneError> {
    const END: &[u8] = b"end_header\n";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| SceneError::MalformedHeader("missing end_header".into()))?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| SceneError::MalformedHeader("header is not UTF-8".into()))?;
    let mut lines = text.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(SceneError::MalformedHeader("missing ply magic".into()));
    }
    let mut format = None;
    let mut count = None;
    let mut offsets = BTreeMap::new();
    let mut stride = 0;
    let mut in_vertex = false;
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", f, _] => format = Some(f.to_string()),
            ["element", "vertex", n] => {
                if count.is_some() {
                    return Err(SceneError::MalformedHeader("duplicate vertex element".into()));
                }
                count = Some(n.parse::<usize>().map_err(|_| SceneError::MalformedHeader(format!("bad vertex count {n}")))?);
                in_vertex = true;
            }
            ["element", name, _] => {
                return Err(SceneError::UnsupportedFieldLayout(format!("unexpected element {name}")));
            }
            ["property", ty, name] => {
                if !in_vertex {
                    return Err(SceneError::MalformedHeader("property outside an element".into()));
                }
                if !matches!(*ty, "float" | "float32") {
                    return Err(SceneError::UnsupportedFieldLayout(format!("property {name} has type {ty}, expected float")));
                }
                if offsets.insert(name.to_string(), stride).is_some() {
                    return Err(SceneError::MalformedHeader(format!("duplicate property {name}")));
                }
                stride += 4;
            }
            ["property", "list", ..] => {
                return Err(SceneError::UnsupportedFieldLayout("list properties are not supported".into()));
            }
            _ => return Err(SceneError::MalformedHeader(format!("unrecognized header line {line:?}"))),
        }
    }
    match format.as_deref() {
        Some("binary_little_endian") => {}
        Some(f) => return Err(SceneError::UnsupportedFieldLayout(format!("format {f}"))),
        None => return Err(SceneError::MalformedHeader("missing format line".into())),
    }
    let count = count.ok_or_else(|| SceneError::MalformedHeader("missing vertex element".into()))?;
    let required = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"];
    if let Some(missing) = required.iter().find(|n| !offsets.contains_key(**n)) {
        return Err(SceneError::UnsupportedFieldLayout(format!("missing property {missing}")));
    }
    let rest = (0..).take_while(|i| offsets.contains_key(&format!("f_rest_{i}"))).count();
    let extra_rest = offsets.keys().filter(|k| k.starts_with("f_rest_")).count();
    if extra_rest != rest || !(0..=3).any(|d| rest_len(d) == rest) {
        return Err(SceneError::UnsupportedFieldLayout(format!("{extra_rest} f_rest properties do not form SH degree 0-3")));
    }
    Ok((Layout { stride, count, offsets, rest }, end + END.len()))
}

/// Parses the raw records of a scene file.
pub fn parse_records(bytes: &[u8]) -> Result<Vec<RawRecord>, SceneError> {
    let (layout, start) = parse_header(bytes)?;
    let body = &bytes[start..];
    let expected = layout.stride.checked_mul(layout.count).ok_or_else(|| SceneError::MalformedHeader("vertex count overflows".into()))?;
    if body.len() < expected {
        return Err(SceneError::TruncatedFile { expected, actual: body.len() });
    }
    let field = |rec: &[u8], name: &str| -> f32 {
        let o = layout.offsets[name];
        f32::from_le_bytes(rec[o..o + 4].try_into().unwrap())
    };
    let opt = |rec: &[u8], name: &str| -> f32 { if layout.offsets.contains_key(name) { field(rec, name) } else { 0.0 } };
    let rest_names: Vec<String> = (0..layout.rest).map(|i| format!("f_rest_{i}")).collect();
    Ok(body[..expected]
        .chunks_exact(layout.stride.max(1))
        .take(layout.count)
        .map(|rec| RawRecord {
            position: [field(rec, "x"), field(rec, "y"), field(rec, "z")],
            normal: [opt(rec, "nx"), opt(rec, "ny"), opt(rec, "nz")],
            f_dc: [field(rec, "f_dc_0"), field(rec, "f_dc_1"), field(rec, "f_dc_2")],
            f_rest: rest_names.iter().map(|n| field(rec, n)).collect(),
            opacity_logit: field(rec, "opacity"),
            log_scale: [field(rec, "scale_0"), field(rec, "scale_1"), field(rec, "scale_2")],
            rotation: [field(rec, "rot_0"), field(rec, "rot_1"), field(rec, "rot_2"), field(rec, "rot_3")],
        })
        .collect())
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Opacities saturate slightly inside `(0, 1)` so extreme logits stay valid.
const OPACITY_EPS: f64 = 1e-12;

/// Converts raw records to Gaussians: exponentiated scales, sigmoid
/// opacities, normalized quaternions. Records with non-finite fields or
/// invalid activated values are dropped and counted.
pub fn activate(records: &[RawRecord]) -> (Vec<Gaussian3D>, SceneFileReport) {
    let mut report = SceneFileReport::default();
    let mut out = Vec::with_capacity(records.len());
    let reject = |report: &mut SceneFileReport, reason: &str| {
        report.rejected_records += 1;
        *report.rejection_reasons.entry(reason.to_string()).or_default() += 1;
    };
    for r in records {
        let all = r.position.iter().chain(&r.f_dc).chain(&r.f_rest).chain(&r.log_scale).chain(&r.rotation).chain([&r.opacity_logit]);
        if !all.copied().all(f32::is_finite) {
            reject(&mut report, "non-finite field");
            continue;
        }
        let q = Quaternion::new(r.rotation[0] as f64, r.rotation[1] as f64, r.rotation[2] as f64, r.rotation[3] as f64);
        let Ok((rotation, renormalized)) = normalize_rotation(q) else {
            reject(&mut report, "zero quaternion");
            continue;
        };
        let k = r.f_rest.len() / 3;
        let mut sh = vec![Vec3::new(r.f_dc[0] as f64, r.f_dc[1] as f64, r.f_dc[2] as f64)];
        for i in 0..k {
            sh.push(Vec3::new(r.f_rest[i] as f64, r.f_rest[k + i] as f64, r.f_rest[2 * k + i] as f64));
        }
        let scale = Vec3::new(r.log_scale[0] as f64, r.log_scale[1] as f64, r.log_scale[2] as f64).map(f64::exp);
        let opacity = sigmoid(r.opacity_logit as f64).clamp(OPACITY_EPS, 1.0 - OPACITY_EPS);
        let mean = Vec3::new(r.position[0] as f64, r.position[1] as f64, r.position[2] as f64);
        match Gaussian3D::new(mean, rotation, scale, opacity, sh) {
            Ok(g) => {
                report.normalized_quaternions += renormalized as u64;
                out.push(g);
            }
            Err(e) => reject(&mut report, &e.to_string()),
        }
    }
    report.gaussian_count = out.len() as u64;
    report.sh_degree = records.first().map_or(0, |r| ((r.f_rest.len() / 3 + 1) as f64).sqrt() as usize - 1);
    (out, report)
}

pub fn load_scene(path: &Path) -> Result<(Vec<Gaussian3D>, SceneFileReport), SceneError> {
    let bytes = std::fs::read(path).map_err(|source| SceneError::Io { path: path.to_path_buf(), source })?;
    let records = parse_records(&bytes)?;
    let (gaussians, mut report) = activate(&records);
    if records.is_empty() {
        report.sh_degree = parse_header(&bytes).map(|(l, _)| (0..=3).find(|&d| rest_len(d) == l.rest).unwrap_or(0)).unwrap_or(0);
    }
    Ok((gaussians, report))
}

/// Stored form of an activated Gaussian (inverse of [`activate`] up to
/// single-precision rounding).
pub fn deactivate(g: &Gaussian3D) -> RawRecord {
    let k = g.sh.len() - 1;
    let mut f_rest = vec![0f32; 3 * k];
    for i in 0..k {
        for c in 0..3 {
            f_rest[c * k + i] = g.sh[i + 1][c] as f32;
        }
    }
    let q = g.rotation.quaternion();
    RawRecord {
        position: [g.mean.x as f32, g.mean.y as f32, g.mean.z as f32],
        normal: [0.0; 3],
        f_dc: [g.sh[0].x as f32, g.sh[0].y as f32, g.sh[0].z as f32],
        f_rest,
        opacity_logit: (g.opacity / (1.0 - g.opacity)).ln() as f32,
        log_scale: [g.scale.x.ln() as f32, g.scale.y.ln() as f32, g.scale.z.ln() as f32],
        rotation: [q.w as f32, q.i as f32, q.j as f32, q.k as f32],
    }
}

/// Serializes records; all records must share one SH degree.
pub fn write_records(out: &mut impl Write, records: &[RawRecord]) -> std::io::Result<()> {
    let rest = records.first().map_or(0, |r| r.f_rest.len());
    assert!(records.iter().all(|r| r.f_rest.len() == rest), "records must share one SH degree");
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header += &format!("element vertex {}\n", records.len());
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"].iter().map(|s| s.to_string()).collect();
    names.extend((0..rest).map(|i| format!("f_rest_{i}")));
    names.extend(["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"].iter().map(|s| s.to_string()));
    for n in &names {
        header += &format!("property float {n}\n");
    }
    header += "end_header\n";
    out.write_all(header.as_bytes())?;
    let mut buf = Vec::with_capacity(names.len() * 4 * records.len());
    for r in records {
        let vals = r.position.iter().chain(&r.normal).chain(&r.f_dc).chain(&r.f_rest).chain([&r.opacity_logit]).chain(&r.log_scale).chain(&r.rotation);
        for v in vals {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)
}

/// Writes a binary PLY. Lower-degree Gaussians are padded with zero
/// coefficients up to the highest degree in the scene.
pub fn save_scene(path: &Path, gaussians: &[Gaussian3D]) -> std::io::Result<()> {
    let coeffs = gaussians.iter().map(|g| g.sh.len()).max().unwrap_or(1);
    let records: Vec<RawRecord> = gaussians
        .iter()
        .map(|g| {
            let mut r = deactivate(g);
            let k = g.sh.len() - 1;
            if k + 1 < coeffs {
                let mut rest = vec![0f32; 3 * (coeffs - 1)];
                for c in 0..3 {
                    rest[c * (coeffs - 1)..c * (coeffs - 1) + k].copy_from_slice(&r.f_rest[c * k..(c + 1) * k]);
                }
                r.f_rest = rest;
            }
            r
        })
        .collect();
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_records(&mut file, &records)?;
    file.flush()
}
