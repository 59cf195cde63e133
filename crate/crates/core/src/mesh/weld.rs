use std::collections::HashMap;

use super::{MeshError, TriangleMesh};
use crate::geometry::Point3;

/// Default weld tolerance for float32 STL input, millimeters.
pub const DEFAULT_WELD_EPSILON: f64 = 1e-6;

/// Indexed geometry produced by [`weld`].
#[derive(Debug, Clone)]
pub struct Welded {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
    /// Triangles dropped because welding collapsed two of their corners.
    pub dropped: usize,
}

impl Welded {
    pub fn into_mesh(self) -> Result<TriangleMesh, MeshError> {
        TriangleMesh::new(self.vertices, self.triangles)
    }
}

/// Merges corner points lying within `epsilon` of an earlier representative.
///
/// Points are bucketed on a grid of cell size `epsilon`; each point is
/// compared against representatives in the 27 surrounding cells, so the
/// result does not depend on where cell boundaries fall. With `epsilon == 0`
/// only bit-identical coordinates merge.
pub fn weld(raw: &[[Point3; 3]], epsilon: f64) -> Welded {
    let epsilon = epsilon.max(0.0);
    let mut vertices: Vec<Point3> = Vec::new();
    let mut triangles = Vec::with_capacity(raw.len());
    let mut dropped = 0;

    if epsilon == 0.0 {
        let mut index: HashMap<[u64; 3], u32> = HashMap::new();
        for tri in raw {
            let ids = tri.map(|p| {
                // adding 0.0 folds -0.0 into 0.0
                let key = [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()];
                *index.entry(key).or_insert_with(|| {
                    vertices.push(p);
                    (vertices.len() - 1) as u32
                })
            });
            push_if_valid(&mut triangles, &mut dropped, ids);
        }
    } else {
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        let eps2 = epsilon * epsilon;
        let cell_of = |p: &Point3| {
            [
                (p.x / epsilon).floor() as i64,
                (p.y / epsilon).floor() as i64,
                (p.z / epsilon).floor() as i64,
            ]
        };
        for tri in raw {
            let ids = tri.map(|p| {
                let c = cell_of(&p);
                let mut found: Option<u32> = None;
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            if let Some(list) = cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                                for &id in list {
                                    if (vertices[id as usize] - p).norm_squared() <= eps2
                                        && found.is_none_or(|f| id < f)
                                    {
                                        found = Some(id);
                                    }
                                }
                            }
                        }
                    }
                }
                found.unwrap_or_else(|| {
                    vertices.push(p);
                    let id = (vertices.len() - 1) as u32;
                    cells.entry(c).or_default().push(id);
                    id
                })
            });
            push_if_valid(&mut triangles, &mut dropped, ids);
        }
    }
    Welded { vertices, triangles, dropped }
}

fn push_if_valid(out: &mut Vec<[u32; 3]>, dropped: &mut usize, ids: [u32; 3]) {
    if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
        *dropped += 1;
    } else {
        out.push(ids);
    }
}
