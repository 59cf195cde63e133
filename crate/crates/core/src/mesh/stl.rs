use std::io::Write;
use std::path::Path;

use super::{weld, MeshError, TriangleMesh, DEFAULT_WELD_EPSILON};
use crate::geometry::{triangle_cross, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlFormat {
    Binary,
    Ascii,
}

/// Reads an STL file, welds duplicate corners, builds adjacency and
/// normalizes winding.
pub fn load_stl(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    mesh_from_stl(&std::fs::read(path)?, DEFAULT_WELD_EPSILON)
}

/// [`load_stl`] on bytes already in memory, with an explicit weld tolerance.
pub fn mesh_from_stl(bytes: &[u8], weld_epsilon: f64) -> Result<TriangleMesh, MeshError> {
    let raw = parse_stl(bytes)?;
    weld(&raw, weld_epsilon).into_mesh()?.with_consistent_winding()
}

pub fn save_stl(mesh: &TriangleMesh, path: impl AsRef<Path>, format: StlFormat) -> Result<(), MeshError> {
    let mut buf = Vec::new();
    match format {
        StlFormat::Binary => write_stl_binary(mesh, &mut buf)?,
        StlFormat::Ascii => write_stl_ascii(mesh, &mut buf)?,
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Parses binary or text STL into raw corner triples.
pub fn parse_stl(bytes: &[u8]) -> Result<Vec<[Point3; 3]>, MeshError> {
    if looks_ascii(bytes) {
        parse_ascii(bytes)
    } else {
        parse_binary(bytes)
    }
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let start = bytes.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(bytes.len());
    if !bytes[start..].starts_with(b"solid") {
        return false;
    }
    // Some binary exporters also begin their header with "solid"; trust the
    // size arithmetic when it matches.
    if bytes.len() >= 84 {
        let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        if 84 + 50 * n == bytes.len() {
            return false;
        }
    }
    true
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<[Point3; 3]>, MeshError> {
    if bytes.len() < 84 {
        return Err(MeshError::Parse {
            offset: bytes.len(),
            message: "binary STL shorter than its 84-byte header".into(),
        });
    }
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let expected = 84 + 50 * n;
    if bytes.len() < expected {
        let complete = (bytes.len() - 84) / 50;
        return Err(MeshError::Parse {
            offset: 84 + complete * 50,
            message: format!("header declares {n} triangles but only {complete} complete records follow"),
        });
    }
    let f = |o: usize| f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let rec = 84 + 50 * i;
        let mut tri = [Point3::origin(); 3];
        for (k, p) in tri.iter_mut().enumerate() {
            let o = rec + 12 + 12 * k;
            *p = Point3::new(f(o), f(o + 4), f(o + 8));
            if !crate::geometry::is_finite(p) {
                return Err(MeshError::Parse { offset: o, message: "non-finite vertex coordinate".into() });
            }
        }
        out.push(tri);
    }
    Ok(out)
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<[Point3; 3]>, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| MeshError::Parse {
        offset: e.valid_up_to(),
        message: "text STL is not valid UTF-8".into(),
    })?;
    let mut tokens = Tokens { text, pos: 0 };
    let mut out = Vec::new();
    tokens.expect("solid")?;
    tokens.skip_line();
    loop {
        let (off, tok) = tokens.next().ok_or(MeshError::Parse {
            offset: text.len(),
            message: "unexpected end of file, missing 'endsolid'".into(),
        })?;
        match tok {
            "endsolid" => break,
            "facet" => {
                tokens.expect("normal")?;
                for _ in 0..3 {
                    tokens.number()?;
                }
                tokens.expect("outer")?;
                tokens.expect("loop")?;
                let mut tri = [Point3::origin(); 3];
                for p in tri.iter_mut() {
                    tokens.expect("vertex")?;
                    *p = Point3::new(tokens.number()?, tokens.number()?, tokens.number()?);
                }
                tokens.expect("endloop")?;
                tokens.expect("endfacet")?;
                out.push(tri);
            }
            other => {
                return Err(MeshError::Parse { offset: off, message: format!("expected 'facet', found '{other}'") })
            }
        }
    }
    Ok(out)
}

struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let rest = &self.text[self.pos..];
        let skip = rest.find(|c: char| !c.is_whitespace())?;
        let start = self.pos + skip;
        let len = self.text[start..].find(char::is_whitespace).unwrap_or(self.text.len() - start);
        self.pos = start + len;
        Some((start, &self.text[start..start + len]))
    }

    fn skip_line(&mut self) {
        match self.text[self.pos..].find('\n') {
            Some(i) => self.pos += i + 1,
            None => self.pos = self.text.len(),
        }
    }

    fn expect(&mut self, word: &str) -> Result<(), MeshError> {
        match self.next() {
            Some((_, t)) if t == word => Ok(()),
            Some((off, t)) => Err(MeshError::Parse { offset: off, message: format!("expected '{word}', found '{t}'") }),
            None => Err(MeshError::Parse { offset: self.text.len(), message: format!("expected '{word}', found end of file") }),
        }
    }

    fn number(&mut self) -> Result<f64, MeshError> {
        match self.next() {
            Some((off, t)) => match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(MeshError::Parse { offset: off, message: format!("invalid number '{t}'") }),
            },
            None => Err(MeshError::Parse { offset: self.text.len(), message: "expected number, found end of file".into() }),
        }
    }
}

fn facet_normal(mesh: &TriangleMesh, t: usize) -> [f32; 3] {
    let [a, b, c] = mesh.corners(t);
    let n = triangle_cross(&a, &b, &c).try_normalize(0.0).unwrap_or_default();
    [n.x as f32, n.y as f32, n.z as f32]
}

/// 80-byte header, little-endian count, 50-byte records with zero attributes.
pub fn write_stl_binary(mesh: &TriangleMesh, w: &mut impl Write) -> std::io::Result<()> {
    let mut header = [0u8; 80];
    let tag = b"binary STL";
    header[..tag.len()].copy_from_slice(tag);
    w.write_all(&header)?;
    w.write_all(&(mesh.triangle_count() as u32).to_le_bytes())?;
    let mut rec = [0u8; 50];
    for t in 0..mesh.triangle_count() {
        let n = facet_normal(mesh, t);
        let mut o = 0;
        for v in n {
            rec[o..o + 4].copy_from_slice(&v.to_le_bytes());
            o += 4;
        }
        for p in mesh.corners(t) {
            for v in [p.x, p.y, p.z] {
                rec[o..o + 4].copy_from_slice(&(v as f32).to_le_bytes());
                o += 4;
            }
        }
        rec[48] = 0;
        rec[49] = 0;
        w.write_all(&rec)?;
    }
    Ok(())
}

pub fn write_stl_ascii(mesh: &TriangleMesh, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "solid mesh")?;
    for t in 0..mesh.triangle_count() {
        let n = facet_normal(mesh, t);
        writeln!(w, "  facet normal {:e} {:e} {:e}", n[0], n[1], n[2])?;
        writeln!(w, "    outer loop")?;
        for p in mesh.corners(t) {
            writeln!(w, "      vertex {:e} {:e} {:e}", p.x, p.y, p.z)?;
        }
        writeln!(w, "    endloop")?;
        writeln!(w, "  endfacet")?;
    }
    writeln!(w, "endsolid mesh")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::extract_boundary_loops;

    const ONE_TRIANGLE: &str = "solid t\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n  endloop\n endfacet\nendsolid t\n";

    #[test]
    fn single_triangle_text_stl() {
        let raw = parse_stl(ONE_TRIANGLE.as_bytes()).unwrap();
        let mesh = weld(&raw, DEFAULT_WELD_EPSILON).into_mesh().unwrap();
        assert_eq!(mesh.vertex_count(), 3);
        assert_eq!(mesh.triangle_count(), 1);
        assert_eq!(extract_boundary_loops(&mesh).unwrap().len(), 1);
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let mut bytes = vec![0u8; 80];
        bytes.extend_from_slice(&100u32.to_le_bytes());
        bytes.extend(std::iter::repeat_n(0u8, 50 * 50));
        match parse_stl(&bytes) {
            Err(MeshError::Parse { offset, message }) => {
                assert_eq!(offset, 84 + 50 * 50);
                assert!(message.contains("100"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_text_reports_offset() {
        let bad = ONE_TRIANGLE.replace("vertex 1 0 0", "vertex 1 x 0");
        match parse_stl(bad.as_bytes()) {
            Err(MeshError::Parse { offset, .. }) => assert_eq!(&bad[offset..offset + 1], "x"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn binary_header_starting_with_solid_is_binary() {
        let mesh = weld(&parse_stl(ONE_TRIANGLE.as_bytes()).unwrap(), 0.0).into_mesh().unwrap();
        let mut buf = Vec::new();
        write_stl_binary(&mesh, &mut buf).unwrap();
        buf[..5].copy_from_slice(b"solid");
        assert_eq!(parse_stl(&buf).unwrap().len(), 1);
    }
}
