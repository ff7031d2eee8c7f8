//! PLY (ascii / binary little-endian) and OBJ mesh I/O, including per-vertex
//! label properties and BRep sample clouds.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ply_rs_bw::parser::Parser;
use ply_rs_bw::ply::{
    Addable, ElementDef, Encoding, Ply, Property, PropertyAccess, PropertyAccessResult, PropertyDef, PropertyType,
    ScalarType,
};
use ply_rs_bw::writer::Writer;
use serde::{Deserialize, Serialize};

use crate::annot::{LabelKind, LabelRecord};
use crate::brep::{BrepSample, BrepSamples, CurveClass, SampleSource, SurfaceClass};
use crate::geom::{Mat3, Vec3};

use super::{MeshError, ScanMesh};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlyFormat {
    #[default]
    PlyBinary,
    PlyAscii,
}

impl PlyFormat {
    fn encoding(self) -> Encoding {
        match self {
            PlyFormat::PlyBinary => Encoding::BinaryLittleEndian,
            PlyFormat::PlyAscii => Encoding::Ascii,
        }
    }
}

const LABEL_INTS: [&str; 6] = ["edge_id", "loop_id", "mate_loop_id", "face_id_a", "face_id_b", "face_id"];
const SAMPLE_F64: [&str; 17] =
    ["x", "y", "z", "tx", "ty", "tz", "ux", "uy", "uz", "nx", "ny", "nz", "param_0", "param_1", "scale", "k1", "k2"];

/// One PLY element of any kind this module writes: vertex, face or sample.
#[derive(Clone, Debug, Default)]
struct Elem {
    f: [f64; 17],
    ints: [i32; 6],
    bytes: [u8; 6],
    soft_prob: f32,
    indices: Vec<u32>,
    seen_normal: bool,
    seen_label: bool,
    seen_face_id: bool,
}

fn f_slot(name: &str) -> Option<usize> {
    SAMPLE_F64.iter().position(|n| *n == name)
}

fn int_slot(name: &str) -> Option<usize> {
    LABEL_INTS.iter().position(|n| *n == name).or(match name {
        "source_id" => Some(0),
        _ => None,
    })
}

fn byte_slot(name: &str) -> Option<usize> {
    ["is_boundary", "is_junction", "curve_class", "surface_class", "source", "has_curvature"]
        .iter()
        .position(|n| *n == name)
}

fn as_f64(p: &Property) -> Option<f64> {
    Some(match *p {
        Property::Char(v) => v as f64,
        Property::UChar(v) => v as f64,
        Property::Short(v) => v as f64,
        Property::UShort(v) => v as f64,
        Property::Int(v) => v as f64,
        Property::UInt(v) => v as f64,
        Property::Float(v) => v as f64,
        Property::Double(v) => v,
        _ => return None,
    })
}

fn as_indices(p: Property) -> Option<Vec<u32>> {
    Some(match p {
        Property::ListChar(v) => v.into_iter().map(|x| x as u32).collect(),
        Property::ListUChar(v) => v.into_iter().map(u32::from).collect(),
        Property::ListShort(v) => v.into_iter().map(|x| x as u32).collect(),
        Property::ListUShort(v) => v.into_iter().map(u32::from).collect(),
        Property::ListInt(v) => v.into_iter().map(|x| x as u32).collect(),
        Property::ListUInt(v) => v,
        _ => return None,
    })
}

impl PropertyAccess for Elem {
    fn new() -> Self {
        Elem::default()
    }

    fn set_property(&mut self, name: &str, p: Property) -> PropertyAccessResult {
        if name == "vertex_indices" || name == "vertex_index" {
            return match as_indices(p) {
                Some(ix) => {
                    self.indices = ix;
                    PropertyAccessResult::Set
                }
                None => PropertyAccessResult::UnsupportedType,
            };
        }
        let Some(v) = as_f64(&p) else { return PropertyAccessResult::Ignored };
        if let Some(i) = f_slot(name) {
            self.f[i] = v;
            self.seen_normal |= i == 9;
        } else if let Some(i) = int_slot(name) {
            self.ints[i] = v as i32;
            self.seen_face_id |= name == "face_id";
        } else if let Some(i) = byte_slot(name) {
            self.bytes[i] = v as u8;
            self.seen_label |= i == 0;
        } else if name == "soft_prob" {
            self.soft_prob = v as f32;
        } else {
            return PropertyAccessResult::Ignored;
        }
        PropertyAccessResult::Set
    }

    fn get_double(&self, name: &str) -> Option<f64> {
        f_slot(name).map(|i| self.f[i])
    }

    fn get_float(&self, name: &str) -> Option<f32> {
        if name == "soft_prob" {
            return Some(self.soft_prob);
        }
        f_slot(name).map(|i| self.f[i] as f32)
    }

    fn get_int(&self, name: &str) -> Option<i32> {
        int_slot(name).map(|i| self.ints[i])
    }

    fn get_uchar(&self, name: &str) -> Option<u8> {
        byte_slot(name).map(|i| self.bytes[i])
    }

    fn get_list_uint(&self, name: &str) -> Option<&[u32]> {
        (name == "vertex_indices").then_some(self.indices.as_slice())
    }
}

fn scalar(name: &str, t: ScalarType) -> PropertyDef {
    PropertyDef::new(name.to_string(), PropertyType::Scalar(t))
}

fn element(name: &str, props: Vec<PropertyDef>) -> ElementDef {
    let mut e = ElementDef::new(name.to_string());
    for p in props {
        e.properties.add(p);
    }
    e
}

fn write_elements(path: &Path, format: PlyFormat, elements: Vec<(ElementDef, Vec<Elem>)>) -> Result<(), MeshError> {
    let mut ply = Ply::<Elem>::new();
    ply.header.encoding = format.encoding();
    for (def, data) in elements {
        ply.payload.insert(def.name.clone(), data);
        ply.header.elements.add(def);
    }
    let mut w = BufWriter::new(File::create(path)?);
    Writer::new().write_ply(&mut w, &mut ply)?;
    w.flush()?;
    Ok(())
}

fn opt_i32(v: Option<usize>) -> i32 {
    v.map_or(-1, |x| x as i32)
}

fn opt_usize(v: i32) -> Option<usize> {
    (v >= 0).then_some(v as usize)
}

/// Writes a mesh with normals, optional per-vertex labels and optional
/// per-triangle face ids.
pub fn write_ply(path: impl AsRef<Path>, m: &ScanMesh, format: PlyFormat) -> Result<(), MeshError> {
    let mut vprops = vec![scalar("x", ScalarType::Double), scalar("y", ScalarType::Double), scalar("z", ScalarType::Double)];
    let has_normals = m.normals.len() == m.positions.len();
    if has_normals {
        vprops.extend(["nx", "ny", "nz"].map(|n| scalar(n, ScalarType::Float)));
    }
    if m.labels.is_some() {
        vprops.extend(["is_boundary", "is_junction"].map(|n| scalar(n, ScalarType::UChar)));
        vprops.extend(LABEL_INTS.map(|n| scalar(n, ScalarType::Int)));
        vprops.extend(["curve_class", "surface_class"].map(|n| scalar(n, ScalarType::UChar)));
        vprops.push(scalar("soft_prob", ScalarType::Float));
    }
    let verts: Vec<Elem> = (0..m.positions.len())
        .map(|i| {
            let mut e = Elem::default();
            e.f[..3].copy_from_slice(m.positions[i].as_slice());
            if has_normals {
                e.f[9..12].copy_from_slice(m.normals[i].as_slice());
            }
            if let Some(l) = m.labels.as_ref().map(|ls| &ls[i]) {
                e.bytes[0] = u8::from(l.kind != LabelKind::Face);
                e.bytes[1] = u8::from(l.kind == LabelKind::Junction);
                e.bytes[2] = l.curve_class.map_or(255, CurveClass::code);
                e.bytes[3] = l.surface_class.map_or(255, SurfaceClass::code);
                e.ints = [l.edge_id, l.loop_id, l.mate_loop_id, l.face_id_a, l.face_id_b, l.face_id].map(opt_i32);
                e.soft_prob = l.soft_prob as f32;
            }
            e
        })
        .collect();

    let mut fprops = vec![PropertyDef::new(
        "vertex_indices".to_string(),
        PropertyType::List(ScalarType::UChar, ScalarType::UInt),
    )];
    if m.triangle_faces.is_some() {
        fprops.push(scalar("face_id", ScalarType::Int));
    }
    let faces: Vec<Elem> = m
        .triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let mut e = Elem { indices: tri.to_vec(), ..Default::default() };
            if let Some(tf) = &m.triangle_faces {
                e.ints[5] = tf[t] as i32;
            }
            e
        })
        .collect();
    write_elements(path.as_ref(), format, vec![(element("vertex", vprops), verts), (element("face", fprops), faces)])
}

fn parse_ply(r: &mut impl Read) -> Result<Ply<Elem>, MeshError> {
    Parser::<Elem>::new().read_ply(r).map_err(|e| MeshError::Format(e.to_string()))
}

/// Reads a PLY triangle mesh. Polygons are fan-triangulated; label and
/// face-id properties are picked up when present.
pub fn read_ply(path: impl AsRef<Path>) -> Result<ScanMesh, MeshError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut ply = parse_ply(&mut r)?;
    let verts = ply.payload.swap_remove("vertex").ok_or_else(|| MeshError::Format("missing vertex element".into()))?;
    let faces = ply.payload.swap_remove("face").unwrap_or_default();
    let positions = verts.iter().map(|e| Vec3::new(e.f[0], e.f[1], e.f[2])).collect();
    let mut triangles = Vec::with_capacity(faces.len());
    let mut tri_faces = Vec::with_capacity(faces.len());
    let has_face_ids = faces.iter().any(|f| f.seen_face_id);
    for f in &faces {
        if f.indices.len() < 3 {
            return Err(MeshError::Format("face with fewer than three vertices".into()));
        }
        for k in 1..f.indices.len() - 1 {
            triangles.push([f.indices[0], f.indices[k], f.indices[k + 1]]);
            tri_faces.push(f.ints[5].max(0) as u32);
        }
    }
    let labels = verts.iter().any(|e| e.seen_label).then(|| {
        verts
            .iter()
            .map(|e| {
                let kind = match (e.bytes[0], e.bytes[1]) {
                    (_, 1) => LabelKind::Junction,
                    (1, _) => LabelKind::Boundary,
                    _ => LabelKind::Face,
                };
                let [edge_id, loop_id, mate_loop_id, face_id_a, face_id_b, face_id] = e.ints.map(opt_usize);
                LabelRecord {
                    kind,
                    edge_id,
                    loop_id,
                    mate_loop_id,
                    face_id_a,
                    face_id_b,
                    face_id,
                    curve_class: CurveClass::from_code(e.bytes[2]),
                    surface_class: SurfaceClass::from_code(e.bytes[3]),
                    soft_prob: e.soft_prob as f64,
                    ..LabelRecord::default()
                }
            })
            .collect()
    });
    let mut m = ScanMesh {
        positions,
        triangles,
        normals: Vec::new(),
        triangle_faces: has_face_ids.then_some(tri_faces),
        labels,
    };
    m.validate()?;
    if verts.iter().all(|e| e.seen_normal) && !verts.is_empty() {
        m.normals = verts.iter().map(|e| Vec3::new(e.f[9], e.f[10], e.f[11])).collect();
    } else {
        m.compute_normals();
    }
    Ok(m)
}

/// Reads an OBJ file, triangulating polygons and merging all objects.
pub fn read_obj(path: impl AsRef<Path>) -> Result<ScanMesh, MeshError> {
    let opts = tobj::LoadOptions { triangulate: true, single_index: true, ..Default::default() };
    let (models, _) = tobj::load_obj(path.as_ref(), &opts).map_err(|e| MeshError::Format(e.to_string()))?;
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for model in models {
        let base = positions.len() as u32;
        positions.extend(model.mesh.positions.chunks_exact(3).map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)));
        triangles.extend(model.mesh.indices.chunks_exact(3).map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }
    let m = ScanMesh::new(positions, triangles);
    m.validate()?;
    Ok(m)
}

/// Dispatches on the file extension (`.ply` or `.obj`).
pub fn read_mesh(path: impl AsRef<Path>) -> Result<ScanMesh, MeshError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("ply") => read_ply(path),
        Some("obj") => read_obj(path),
        _ => Err(MeshError::Format(format!("unsupported mesh extension: {}", path.display()))),
    }
}

/// Writes BRep samples with full frames, provenance and curvature.
pub fn write_samples_ply(path: impl AsRef<Path>, s: &BrepSamples, format: PlyFormat) -> Result<(), MeshError> {
    let mut props: Vec<PropertyDef> = SAMPLE_F64.iter().map(|n| scalar(n, ScalarType::Double)).collect();
    props.push(scalar("source", ScalarType::UChar));
    props.push(scalar("source_id", ScalarType::Int));
    props.push(scalar("has_curvature", ScalarType::UChar));
    let data = s
        .samples
        .iter()
        .map(|smp| {
            let mut e = Elem::default();
            e.f[..3].copy_from_slice(smp.position.as_slice());
            e.f[3..12].copy_from_slice(smp.frame.as_slice());
            e.f[12] = smp.param[0];
            e.f[13] = smp.param[1];
            e.f[14] = smp.scale;
            let (k1, k2) = smp.curvature.unwrap_or((0.0, 0.0));
            e.f[15] = k1;
            e.f[16] = k2;
            e.bytes[4] = smp.source.code();
            e.bytes[5] = u8::from(smp.curvature.is_some());
            e.ints[0] = smp.source_id as i32;
            e
        })
        .collect();
    write_elements(path.as_ref(), format, vec![(element("sample", props), data)])
}

pub fn read_samples_ply(path: impl AsRef<Path>) -> Result<BrepSamples, MeshError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut ply = parse_ply(&mut r)?;
    let data = ply.payload.swap_remove("sample").ok_or_else(|| MeshError::Format("missing sample element".into()))?;
    let samples = data
        .into_iter()
        .map(|e| {
            Ok(BrepSample {
                position: Vec3::new(e.f[0], e.f[1], e.f[2]),
                frame: Mat3::from_column_slice(&e.f[3..12]),
                source: SampleSource::from_code(e.bytes[4]).ok_or_else(|| MeshError::Format("bad sample source".into()))?,
                source_id: usize::try_from(e.ints[0]).map_err(|_| MeshError::Format("bad sample id".into()))?,
                param: [e.f[12], e.f[13]],
                scale: e.f[14],
                curvature: (e.bytes[5] == 1).then_some((e.f[15], e.f[16])),
            })
        })
        .collect::<Result<_, MeshError>>()?;
    Ok(BrepSamples { samples })
}

/// Writes a point cloud with a per-point `edge_id`.
pub fn write_points_ply(path: impl AsRef<Path>, points: &[(Vec3, usize)], format: PlyFormat) -> Result<(), MeshError> {
    let mut props: Vec<PropertyDef> = ["x", "y", "z"].iter().map(|n| scalar(n, ScalarType::Double)).collect();
    props.push(scalar("edge_id", ScalarType::Int));
    let data = points
        .iter()
        .map(|(p, id)| {
            let mut e = Elem::default();
            e.f[..3].copy_from_slice(p.as_slice());
            e.ints[0] = *id as i32;
            e
        })
        .collect();
    write_elements(path.as_ref(), format, vec![(element("vertex", props), data)])
}
