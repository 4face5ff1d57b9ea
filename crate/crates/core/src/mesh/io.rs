//! Mesh file interchange: OBJ (read/write), ASCII PLY (read), STL (read,
//! ASCII and binary).

use crate::geom::Vec3;
use crate::mesh::trimesh::DEGENERATE_TRIANGLE_AREA;
use crate::mesh::{MeshError, TriMesh};
use crate::num::{real, Real};

/// STL vertices closer than this are merged on load (mm).
const STL_WELD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
    Stl,
    Auto,
}

/// Parse mesh bytes in the given (or sniffed) format.
///
/// Post-conditions: polygonal faces are fan-triangulated, STL vertices are
/// welded at 1e-6 mm, and degenerate triangles (area < 1e-9 mm²) are
/// dropped.
pub fn load_mesh<T: Real>(bytes: &[u8], format: MeshFormat) -> Result<TriMesh<T>, MeshError> {
    let format = match format {
        MeshFormat::Auto => sniff_format(bytes),
        f => f,
    };
    let mut mesh = match format {
        MeshFormat::Obj => parse_obj(bytes)?,
        MeshFormat::Ply => parse_ply(bytes)?,
        MeshFormat::Stl => parse_stl(bytes)?,
        MeshFormat::Auto => unreachable!(),
    };
    mesh.drop_degenerate_triangles(real(DEGENERATE_TRIANGLE_AREA));
    if mesh.triangles.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    Ok(mesh)
}

fn sniff_format(bytes: &[u8]) -> MeshFormat {
    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(512)]);
    let first_token = head.split_whitespace().next().unwrap_or("");
    if first_token == "ply" {
        return MeshFormat::Ply;
    }
    if first_token == "solid" {
        return MeshFormat::Stl;
    }
    if looks_like_binary_stl(bytes) {
        return MeshFormat::Stl;
    }
    MeshFormat::Obj
}

fn looks_like_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    bytes.len() == 84 + count * 50
}

fn format_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Format {
        line,
        message: message.into(),
    }
}

fn parse_scalar<T: Real>(token: &str, line: usize) -> Result<T, MeshError> {
    token
        .parse::<f64>()
        .map(T::of)
        .map_err(|_| format_err(line, format!("invalid number '{token}'")))
}

fn text_of(bytes: &[u8]) -> Result<&str, MeshError> {
    std::str::from_utf8(bytes).map_err(|_| format_err(0, "file is not valid UTF-8 text"))
}

// ---------------------------------------------------------------------------
// OBJ
// ---------------------------------------------------------------------------

fn parse_obj<T: Real>(bytes: &[u8]) -> Result<TriMesh<T>, MeshError> {
    let text = text_of(bytes)?;
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("");
        let mut tokens = line.split_whitespace();
        let Some(keyword) = tokens.next() else {
            continue;
        };
        match keyword {
            "v" => {
                let mut coord = [T::zero(); 3];
                for c in &mut coord {
                    let tok = tokens.next().ok_or_else(|| {
                        format_err(line_no, "vertex with fewer than 3 coordinates")
                    })?;
                    *c = parse_scalar(tok, line_no)?;
                }
                vertices.push(Vec3::new(coord[0], coord[1], coord[2]));
            }
            "f" => {
                let mut face: Vec<u32> = Vec::new();
                for tok in tokens {
                    let index_part = tok.split('/').next().unwrap_or("");
                    let raw: i64 = index_part
                        .parse()
                        .map_err(|_| format_err(line_no, format!("invalid face index '{tok}'")))?;
                    let resolved = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        vertices.len() as i64 + raw
                    } else {
                        return Err(format_err(line_no, "face index 0 is not allowed"));
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(format_err(
                            line_no,
                            format!("face index {raw} out of range"),
                        ));
                    }
                    face.push(resolved as u32);
                }
                if face.len() < 3 {
                    return Err(format_err(line_no, "face with fewer than 3 vertices"));
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            // Normals, texture coordinates, grouping, materials, lines and
            // points carry no surface geometry for our purposes.
            "vn" | "vt" | "vp" | "o" | "g" | "s" | "usemtl" | "mtllib" | "l" | "p" => {}
            other => {
                return Err(format_err(
                    line_no,
                    format!("unsupported OBJ record '{other}'"),
                ));
            }
        }
    }
    TriMesh::new(vertices, triangles).map_err(|e| format_err(0, e.to_string()))
}

/// Format a number with 9 significant digits, plain decimal notation.
pub(crate) fn fmt_sig9(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v }; // normalize -0.0
    if v == 0.0 {
        return format!("{:.8}", 0.0);
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 32) as usize;
    format!("{v:.decimals$}")
}

/// Serialize a mesh as ASCII OBJ: `v` and `f` records, 1-based indices,
/// 9 significant digits. Deterministic.
pub fn write_obj<T: Real>(mesh: &TriMesh<T>) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        out.push_str(&format!(
            "v {} {} {}\n",
            fmt_sig9(v.x.to_f64_lossy()),
            fmt_sig9(v.y.to_f64_lossy()),
            fmt_sig9(v.z.to_f64_lossy())
        ));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    out
}

// ---------------------------------------------------------------------------
// PLY (ASCII)
// ---------------------------------------------------------------------------

fn parse_ply<T: Real>(bytes: &[u8]) -> Result<TriMesh<T>, MeshError> {
    let text = text_of(bytes)?;
    let mut lines = text.lines().enumerate();

    let (_, magic) = lines
        .next()
        .ok_or_else(|| format_err(1, "empty PLY file"))?;
    if magic.trim() != "ply" {
        return Err(format_err(1, "missing 'ply' magic"));
    }

    #[derive(PartialEq)]
    enum Element {
        None,
        Vertex,
        Face,
        Other,
    }
    let mut vertex_count = 0usize;
    let mut face_count = 0usize;
    // Positions of x/y/z among the vertex properties.
    let mut xyz_columns: [Option<usize>; 3] = [None; 3];
    let mut vertex_property_count = 0usize;
    let mut current = Element::None;
    let mut header_done_at = 0usize;

    for (i, raw) in lines.by_ref() {
        let line_no = i + 1;
        let mut tokens = raw.split_whitespace();
        match tokens.next() {
            Some("format") => {
                let rest: Vec<&str> = tokens.collect();
                if rest.first() != Some(&"ascii") {
                    return Err(format_err(line_no, "only ASCII PLY is supported"));
                }
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = tokens
                    .next()
                    .ok_or_else(|| format_err(line_no, "element without name"))?;
                let count: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| format_err(line_no, "element without count"))?;
                current = match name {
                    "vertex" => {
                        vertex_count = count;
                        Element::Vertex
                    }
                    "face" => {
                        face_count = count;
                        Element::Face
                    }
                    _ => Element::Other,
                };
            }
            Some("property") => {
                if current == Element::Vertex {
                    let tokens: Vec<&str> = tokens.collect();
                    if tokens.first() == Some(&"list") {
                        return Err(format_err(line_no, "list property on vertex element"));
                    }
                    if let Some(&name) = tokens.last() {
                        match name {
                            "x" => xyz_columns[0] = Some(vertex_property_count),
                            "y" => xyz_columns[1] = Some(vertex_property_count),
                            "z" => xyz_columns[2] = Some(vertex_property_count),
                            _ => {}
                        }
                    }
                    vertex_property_count += 1;
                }
            }
            Some("end_header") => {
                header_done_at = line_no;
                break;
            }
            Some(other) => {
                return Err(format_err(
                    line_no,
                    format!("unexpected header record '{other}'"),
                ));
            }
            None => {}
        }
    }
    if header_done_at == 0 {
        return Err(format_err(0, "PLY header never ends"));
    }
    let [Some(cx), Some(cy), Some(cz)] = xyz_columns else {
        return Err(format_err(
            header_done_at,
            "vertex element lacks x/y/z properties",
        ));
    };

    let mut vertices: Vec<Vec3<T>> = Vec::with_capacity(vertex_count);
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty());
    for _ in 0..vertex_count {
        let (i, raw) = body
            .next()
            .ok_or_else(|| format_err(0, "unexpected end of file in vertex list"))?;
        let line_no = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.len() < vertex_property_count {
            return Err(format_err(line_no, "short vertex record"));
        }
        vertices.push(Vec3::new(
            parse_scalar(tokens[cx], line_no)?,
            parse_scalar(tokens[cy], line_no)?,
            parse_scalar(tokens[cz], line_no)?,
        ));
    }
    for _ in 0..face_count {
        let (i, raw) = body
            .next()
            .ok_or_else(|| format_err(0, "unexpected end of file in face list"))?;
        let line_no = i + 1;
        let mut tokens = raw.split_whitespace();
        let n: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format_err(line_no, "face record without vertex count"))?;
        let mut face = Vec::with_capacity(n);
        for _ in 0..n {
            let idx: usize = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| format_err(line_no, "short face record"))?;
            if idx >= vertices.len() {
                return Err(format_err(
                    line_no,
                    format!("face index {idx} out of range"),
                ));
            }
            face.push(idx as u32);
        }
        if face.len() < 3 {
            return Err(format_err(line_no, "face with fewer than 3 vertices"));
        }
        for k in 1..face.len() - 1 {
            triangles.push([face[0], face[k], face[k + 1]]);
        }
    }
    TriMesh::new(vertices, triangles).map_err(|e| format_err(0, e.to_string()))
}

// ---------------------------------------------------------------------------
// STL (ASCII and binary)
// ---------------------------------------------------------------------------

fn parse_stl<T: Real>(bytes: &[u8]) -> Result<TriMesh<T>, MeshError> {
    let is_ascii = std::str::from_utf8(bytes)
        .map(|t| t.trim_start().starts_with("solid") && !looks_like_binary_stl(bytes))
        .unwrap_or(false);
    let mut mesh = if is_ascii {
        parse_stl_ascii(bytes)?
    } else {
        parse_stl_binary(bytes)?
    };
    mesh.weld(real(STL_WELD_TOLERANCE));
    Ok(mesh)
}

fn parse_stl_ascii<T: Real>(bytes: &[u8]) -> Result<TriMesh<T>, MeshError> {
    let text = text_of(bytes)?;
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut tokens = raw.split_whitespace();
        if tokens.next() == Some("vertex") {
            let mut coord = [T::zero(); 3];
            for c in &mut coord {
                let tok = tokens
                    .next()
                    .ok_or_else(|| format_err(line_no, "vertex with fewer than 3 coordinates"))?;
                *c = parse_scalar(tok, line_no)?;
            }
            vertices.push(Vec3::new(coord[0], coord[1], coord[2]));
        }
    }
    if !vertices.len().is_multiple_of(3) {
        return Err(format_err(0, "STL vertex count not a multiple of 3"));
    }
    let triangles = (0..vertices.len() / 3)
        .map(|t| [3 * t as u32, 3 * t as u32 + 1, 3 * t as u32 + 2])
        .collect();
    TriMesh::new(vertices, triangles).map_err(|e| format_err(0, e.to_string()))
}

fn parse_stl_binary<T: Real>(bytes: &[u8]) -> Result<TriMesh<T>, MeshError> {
    if bytes.len() < 84 {
        return Err(format_err(0, "binary STL shorter than its 84-byte header"));
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let expected = 84 + count * 50;
    if bytes.len() < expected {
        return Err(format_err(
            0,
            format!(
                "binary STL truncated: header promises {count} triangles ({expected} bytes), file has {}",
                bytes.len()
            ),
        ));
    }
    let mut vertices: Vec<Vec3<T>> = Vec::with_capacity(count * 3);
    let mut triangles: Vec<[u32; 3]> = Vec::with_capacity(count);
    for t in 0..count {
        let record = &bytes[84 + t * 50..84 + (t + 1) * 50];
        // Skip the 12-byte normal; read the three vertices.
        for v in 0..3 {
            let at = 12 + v * 12;
            let f = |o: usize| {
                f32::from_le_bytes([
                    record[at + o],
                    record[at + o + 1],
                    record[at + o + 2],
                    record[at + o + 3],
                ])
            };
            vertices.push(Vec3::new(
                T::of(f(0) as f64),
                T::of(f(4) as f64),
                T::of(f(8) as f64),
            ));
        }
        let base = (t * 3) as u32;
        triangles.push([base, base + 1, base + 2]);
    }
    TriMesh::new(vertices, triangles).map_err(|e| format_err(0, e.to_string()))
}
