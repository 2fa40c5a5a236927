//! Mesh export: binary glTF 2.0 with vertex colors, and OBJ.
//!
//! Both formats use the glTF axis convention (y up, camera looking down -z),
//! so positions are written as (x, -y, -z) of the internal y-down, z-forward
//! frame. `read_glb` undoes the flip.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::mesh::TexturedMesh;

const GLB_MAGIC: u32 = 0x4654_6C67;
const CHUNK_JSON: u32 = 0x4E4F_534A;
const CHUNK_BIN: u32 = 0x004E_4942;
const FLOAT: u32 = 5126;
const UNSIGNED_INT: u32 = 5125;
const ARRAY_BUFFER: u32 = 34962;
const ELEMENT_ARRAY_BUFFER: u32 = 34963;

fn flip(p: [f32; 3]) -> [f32; 3] {
    [p[0], -p[1], -p[2]]
}

fn pad4(v: &mut Vec<u8>, byte: u8) {
    while v.len() % 4 != 0 {
        v.push(byte);
    }
}

pub fn glb_bytes(mesh: &TexturedMesh) -> Result<Vec<u8>> {
    mesh.validate()?;
    let n = mesh.positions.len();
    let mut bin = Vec::with_capacity(n * 24 + mesh.triangles.len() * 12);
    let mut lo = [f32::INFINITY; 3];
    let mut hi = [f32::NEG_INFINITY; 3];
    for p in &mesh.positions {
        let q = flip(*p);
        for k in 0..3 {
            lo[k] = lo[k].min(q[k]);
            hi[k] = hi[k].max(q[k]);
            bin.extend_from_slice(&q[k].to_le_bytes());
        }
    }
    let color_offset = bin.len();
    for c in &mesh.colors {
        for k in c {
            bin.extend_from_slice(&(*k as f32 / 255.0).to_le_bytes());
        }
    }
    let index_offset = bin.len();
    for t in &mesh.triangles {
        for i in t {
            bin.extend_from_slice(&i.to_le_bytes());
        }
    }
    let bin_len = bin.len();

    let doc = if n == 0 {
        json!({
            "asset": {"version": "2.0", "generator": "photo3d"},
            "scene": 0,
            "scenes": [{"nodes": []}],
        })
    } else {
        let mut views = vec![
            json!({"buffer": 0, "byteOffset": 0, "byteLength": color_offset, "target": ARRAY_BUFFER}),
            json!({"buffer": 0, "byteOffset": color_offset, "byteLength": index_offset - color_offset, "target": ARRAY_BUFFER}),
        ];
        let mut accessors = vec![
            json!({"bufferView": 0, "componentType": FLOAT, "count": n, "type": "VEC3", "min": lo, "max": hi}),
            json!({"bufferView": 1, "componentType": FLOAT, "count": n, "type": "VEC3"}),
        ];
        let mut primitive = json!({"attributes": {"POSITION": 0, "COLOR_0": 1}, "mode": 0});
        if !mesh.triangles.is_empty() {
            views.push(json!({"buffer": 0, "byteOffset": index_offset, "byteLength": bin_len - index_offset, "target": ELEMENT_ARRAY_BUFFER}));
            accessors.push(json!({"bufferView": 2, "componentType": UNSIGNED_INT, "count": mesh.triangles.len() * 3, "type": "SCALAR"}));
            primitive["indices"] = json!(2);
            primitive["mode"] = json!(4);
        }
        json!({
            "asset": {"version": "2.0", "generator": "photo3d"},
            "scene": 0,
            "scenes": [{"nodes": [0]}],
            "nodes": [{"mesh": 0}],
            "meshes": [{"primitives": [primitive]}],
            "buffers": [{"byteLength": bin_len}],
            "bufferViews": views,
            "accessors": accessors,
        })
    };
    let mut json_chunk = serde_json::to_vec(&doc)?;
    pad4(&mut json_chunk, b' ');
    pad4(&mut bin, 0);

    let total = 12 + 8 + json_chunk.len() + if n == 0 { 0 } else { 8 + bin.len() };
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(&GLB_MAGIC.to_le_bytes());
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&(json_chunk.len() as u32).to_le_bytes());
    out.extend_from_slice(&CHUNK_JSON.to_le_bytes());
    out.extend_from_slice(&json_chunk);
    if n > 0 {
        out.extend_from_slice(&(bin.len() as u32).to_le_bytes());
        out.extend_from_slice(&CHUNK_BIN.to_le_bytes());
        out.extend_from_slice(&bin);
    }
    Ok(out)
}

pub fn write_glb(path: &Path, mesh: &TexturedMesh) -> Result<()> {
    let bytes = glb_bytes(mesh)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn u32_at(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes(s.try_into().unwrap()))
        .ok_or_else(|| Error::input("glb truncated"))
}

fn field(v: &Value, key: &str) -> Result<usize> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| Error::input(format!("glb: missing or invalid `{key}`")))
}

/// Slice of the binary chunk behind an accessor, with its element count.
fn accessor<'a>(doc: &Value, bin: &'a [u8], index: usize, component: u32, kind: &str) -> Result<(&'a [u8], usize)> {
    let acc = doc["accessors"]
        .get(index)
        .ok_or_else(|| Error::input(format!("glb: no accessor {index}")))?;
    if field(acc, "componentType")? as u32 != component || acc["type"] != kind {
        return Err(Error::input(format!("glb: accessor {index} is not {kind}/{component}")));
    }
    let count = field(acc, "count")?;
    let view = doc["bufferViews"]
        .get(field(acc, "bufferView")?)
        .ok_or_else(|| Error::input("glb: dangling bufferView"))?;
    let start = view.get("byteOffset").and_then(Value::as_u64).unwrap_or(0) as usize
        + acc.get("byteOffset").and_then(Value::as_u64).unwrap_or(0) as usize;
    let width = if kind == "VEC3" { 12 } else { 4 };
    let bytes = bin
        .get(start..start + count * width)
        .ok_or_else(|| Error::input("glb: accessor runs past the binary chunk"))?;
    Ok((bytes, count))
}

fn floats(b: &[u8]) -> impl Iterator<Item = f32> + '_ {
    b.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()))
}

/// Read a glb produced by `glb_bytes` (one primitive with float positions,
/// float vertex colors and optional u32 indices).
pub fn read_glb_bytes(bytes: &[u8]) -> Result<TexturedMesh> {
    if u32_at(bytes, 0)? != GLB_MAGIC || u32_at(bytes, 4)? != 2 {
        return Err(Error::input("not a glTF 2.0 binary file"));
    }
    let total = u32_at(bytes, 8)? as usize;
    if total != bytes.len() {
        return Err(Error::input(format!("glb header says {total} bytes, file has {}", bytes.len())));
    }
    let json_len = u32_at(bytes, 12)? as usize;
    if u32_at(bytes, 16)? != CHUNK_JSON {
        return Err(Error::input("glb: first chunk is not JSON"));
    }
    let json = bytes
        .get(20..20 + json_len)
        .ok_or_else(|| Error::input("glb truncated"))?;
    let doc: Value = serde_json::from_slice(json)?;
    let bin_at = 20 + json_len;
    let bin: &[u8] = if bin_at < bytes.len() {
        let len = u32_at(bytes, bin_at)? as usize;
        if u32_at(bytes, bin_at + 4)? != CHUNK_BIN {
            return Err(Error::input("glb: second chunk is not BIN"));
        }
        bytes
            .get(bin_at + 8..bin_at + 8 + len)
            .ok_or_else(|| Error::input("glb truncated"))?
    } else {
        &[]
    };

    let Some(prim) = doc["meshes"].get(0).and_then(|m| m["primitives"].get(0)) else {
        return Ok(TexturedMesh::default());
    };
    let pos_idx = field(&prim["attributes"], "POSITION")?;
    let col_idx = prim["attributes"]
        .get("COLOR_0")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::input("glb has no vertex colors"))? as usize;
    let (pos, n) = accessor(&doc, bin, pos_idx, FLOAT, "VEC3")?;
    let (col, nc) = accessor(&doc, bin, col_idx, FLOAT, "VEC3")?;
    if n != nc {
        return Err(Error::input("glb: color and position counts differ"));
    }
    let p: Vec<f32> = floats(pos).collect();
    let c: Vec<f32> = floats(col).collect();
    let mut mesh = TexturedMesh {
        positions: p.chunks_exact(3).map(|v| flip([v[0], v[1], v[2]])).collect(),
        colors: c
            .chunks_exact(3)
            .map(|v| [0, 1, 2].map(|k| (v[k] * 255.0).round().clamp(0.0, 255.0) as u8))
            .collect(),
        triangles: Vec::new(),
    };
    if let Some(idx) = prim.get("indices").and_then(Value::as_u64) {
        let (ind, count) = accessor(&doc, bin, idx as usize, UNSIGNED_INT, "SCALAR")?;
        if count % 3 != 0 {
            return Err(Error::input("glb: index count is not a multiple of 3"));
        }
        let ids: Vec<u32> = ind.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        mesh.triangles = ids.chunks_exact(3).map(|t| [t[0], t[1], t[2]]).collect();
    }
    mesh.validate()?;
    Ok(mesh)
}

pub fn read_glb(path: &Path) -> Result<TexturedMesh> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_glb_bytes(&bytes)
}

pub fn write_obj<W: Write>(mut w: W, mesh: &TexturedMesh) -> std::io::Result<()> {
    writeln!(w, "# photo3d mesh: {} vertices, {} triangles", mesh.positions.len(), mesh.triangles.len())?;
    for (p, c) in mesh.positions.iter().zip(&mesh.colors) {
        let q = flip(*p);
        writeln!(
            w,
            "v {} {} {} {:.6} {:.6} {:.6}",
            q[0],
            q[1],
            q[2],
            c[0] as f32 / 255.0,
            c[1] as f32 / 255.0,
            c[2] as f32 / 255.0
        )?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}
