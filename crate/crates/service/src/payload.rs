//! Compact indexed mesh transfer.
//!
//! Little-endian layout: the magic `TMSH`, `u32` version, `u32` vertex
//! count, `u32` triangle count, then `3·V` `f32` coordinates and `3·T`
//! `u32` indices. JSON bodies carry it base64-encoded.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use guidesmith::TriangleMesh;

pub const MAGIC: &[u8; 4] = b"TMSH";
pub const VERSION: u32 = 1;

pub fn encode_mesh(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 12 * mesh.vertex_count() + 12 * mesh.triangle_count());
    out.extend_from_slice(MAGIC);
    for n in [VERSION, mesh.vertex_count() as u32, mesh.triangle_count() as u32] {
        out.extend_from_slice(&n.to_le_bytes());
    }
    for p in mesh.vertices() {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    for t in mesh.triangles() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn encode_mesh_base64(mesh: &TriangleMesh) -> String {
    STANDARD.encode(encode_mesh(mesh))
}

/// Vertex coordinates and triangles of a decoded payload.
pub type Decoded = (Vec<[f32; 3]>, Vec<[u32; 3]>);

pub fn decode_mesh(bytes: &[u8]) -> Result<Decoded, String> {
    let word = |i: usize| -> Result<[u8; 4], String> {
        bytes.get(i..i + 4).map(|s| s.try_into().expect("4 bytes")).ok_or_else(|| format!("payload truncated at byte {i}"))
    };
    if word(0)? != *MAGIC {
        return Err("bad magic".into());
    }
    let version = u32::from_le_bytes(word(4)?);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let (nv, nt) = (u32::from_le_bytes(word(8)?) as usize, u32::from_le_bytes(word(12)?) as usize);
    let expected = 16 + 12 * nv + 12 * nt;
    if bytes.len() != expected {
        return Err(format!("payload is {} bytes, expected {expected}", bytes.len()));
    }
    let mut at = 16;
    let mut next = || {
        let w = word(at);
        at += 4;
        w
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push([f32::from_le_bytes(next()?), f32::from_le_bytes(next()?), f32::from_le_bytes(next()?)]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        triangles.push([u32::from_le_bytes(next()?), u32::from_le_bytes(next()?), u32::from_le_bytes(next()?)]);
    }
    Ok((vertices, triangles))
}

pub fn decode_mesh_base64(text: &str) -> Result<Decoded, String> {
    decode_mesh(&STANDARD.decode(text).map_err(|e| e.to_string())?)
}
