//! Indexed triangle meshes with edge and vertex adjacency.
//!
//! A [`TriangleMesh`] is immutable once built. Construction validates indices
//! and coordinates, and rejects edges shared by more than two triangles.

mod stl;
mod topology;
mod weld;

use std::sync::OnceLock;

use thiserror::Error;

use crate::bvh::TriangleBvh;
use crate::geometry::{triangle_cross, Aabb, Point3, Vec3};

pub use stl::{load_stl, mesh_from_stl, parse_stl, save_stl, write_stl_ascii, write_stl_binary, StlFormat};
pub use topology::{
    connected_component, connected_components, euler_characteristic, extract_boundary_loops,
    is_closed, submesh,
};
pub use weld::{weld, Welded, DEFAULT_WELD_EPSILON};

/// Sentinel for "no triangle" on the far side of a boundary edge.
pub const NO_TRIANGLE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("STL parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("non-manifold edge ({a}, {b}) shared by {count} triangles")]
    NonManifoldEdge { a: u32, b: u32, count: usize },
    #[error("triangle {triangle} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange { triangle: usize, index: u32, vertex_count: usize },
    #[error("triangle {triangle} repeats a vertex index")]
    DegenerateTriangle { triangle: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("boundary chain through vertex {vertex} does not close")]
    OpenBoundary { vertex: u32 },
    #[error("component containing triangle {triangle} is not orientable")]
    NonOrientable { triangle: usize },
}

/// An ordered cycle of vertex indices along mesh boundary edges, oriented
/// the same way as the triangles it borders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryLoop {
    pub vertices: Vec<u32>,
}

impl BoundaryLoop {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn points(&self, mesh: &TriangleMesh) -> Vec<Point3> {
        self.vertices.iter().map(|&v| mesh.vertex(v)).collect()
    }
}

#[derive(Debug, Clone)]
struct Adjacency {
    nbr_start: Vec<u32>,
    nbrs: Vec<u32>,
    vtri_start: Vec<u32>,
    vtris: Vec<u32>,
    edges: Vec<[u32; 2]>,
    edge_tris: Vec<[u32; 2]>,
    tri_edges: Vec<[u32; 3]>,
}

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[u32; 3]>,
    adj: Adjacency,
    bvh: OnceLock<TriangleBvh>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        if let Some(i) = vertices.iter().position(|p| !crate::geometry::is_finite(p)) {
            return Err(MeshError::NonFinite { vertex: i });
        }
        for (ti, t) in triangles.iter().enumerate() {
            for &i in t {
                if i as usize >= n {
                    return Err(MeshError::IndexOutOfRange { triangle: ti, index: i, vertex_count: n });
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MeshError::DegenerateTriangle { triangle: ti });
            }
        }
        let adj = Adjacency::build(n, &triangles)?;
        Ok(TriangleMesh { vertices, triangles, adj, bvh: OnceLock::new() })
    }

    pub fn empty() -> Self {
        TriangleMesh::new(Vec::new(), Vec::new()).expect("empty mesh is valid")
    }

    #[inline]
    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    #[inline]
    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn vertex(&self, v: u32) -> Point3 {
        self.vertices[v as usize]
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Point3; 3] {
        let tri = self.triangles[t];
        [self.vertex(tri[0]), self.vertex(tri[1]), self.vertex(tri[2])]
    }

    /// Sorted neighbor vertices of `v`.
    #[inline]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        let s = self.adj.nbr_start[v as usize] as usize;
        let e = self.adj.nbr_start[v as usize + 1] as usize;
        &self.adj.nbrs[s..e]
    }

    /// Triangles incident to `v`, ascending.
    #[inline]
    pub fn vertex_triangles(&self, v: u32) -> &[u32] {
        let s = self.adj.vtri_start[v as usize] as usize;
        let e = self.adj.vtri_start[v as usize + 1] as usize;
        &self.adj.vtris[s..e]
    }

    /// Unique undirected edges, each stored as `[lo, hi]`, sorted.
    #[inline]
    pub fn edges(&self) -> &[[u32; 2]] {
        &self.adj.edges
    }

    /// The one or two triangles incident to edge `e`; the second slot is
    /// [`NO_TRIANGLE`] on boundary edges.
    #[inline]
    pub fn edge_triangles(&self, e: usize) -> [u32; 2] {
        self.adj.edge_tris[e]
    }

    /// Edge ids of `(t0,t1)`, `(t1,t2)`, `(t2,t0)` of triangle `t`.
    #[inline]
    pub fn triangle_edges(&self, t: usize) -> [u32; 3] {
        self.adj.tri_edges[t]
    }

    pub fn edge_id(&self, a: u32, b: u32) -> Option<usize> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.adj.edges.binary_search(&key).ok()
    }

    #[inline]
    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.adj.edge_tris[e][1] == NO_TRIANGLE
    }

    pub fn boundary_edge_count(&self) -> usize {
        (0..self.adj.edges.len()).filter(|&e| self.is_boundary_edge(e)).count()
    }

    /// Triangle across edge `e` from `t`, if any.
    pub fn opposite_triangle(&self, e: usize, t: u32) -> Option<u32> {
        let [a, b] = self.adj.edge_tris[e];
        let o = if a == t { b } else { a };
        (o != NO_TRIANGLE && o != t).then_some(o)
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        triangle_cross(&a, &b, &c).try_normalize(0.0).unwrap_or_else(Vec3::zeros)
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        crate::geometry::triangle_area(&a, &b, &c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Area-weighted vertex normals (unit length; zero for isolated vertices).
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = self.corners(t);
            let n = triangle_cross(&a, &b, &c);
            for &v in tri {
                acc[v as usize] += n;
            }
        }
        acc.into_iter().map(|n| n.try_normalize(0.0).unwrap_or_else(Vec3::zeros)).collect()
    }

    pub fn mean_edge_length(&self) -> f64 {
        if self.adj.edges.is_empty() {
            return 0.0;
        }
        let sum: f64 = self
            .adj
            .edges
            .iter()
            .map(|&[a, b]| (self.vertex(a) - self.vertex(b)).norm())
            .sum();
        sum / self.adj.edges.len() as f64
    }

    pub fn max_edge_length(&self) -> f64 {
        self.adj
            .edges
            .iter()
            .map(|&[a, b]| (self.vertex(a) - self.vertex(b)).norm())
            .fold(0.0, f64::max)
    }

    /// Signed enclosed volume; positive for outward-oriented closed meshes.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let a = self.vertex(t[0]).coords;
                let b = self.vertex(t[1]).coords;
                let c = self.vertex(t[2]).coords;
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Same surface with every triangle's winding reversed.
    pub fn flipped(&self) -> TriangleMesh {
        let tris = self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect();
        TriangleMesh::new(self.vertices.clone(), tris).expect("flipping preserves validity")
    }

    /// True when every interior edge is traversed in opposite directions by
    /// its two triangles.
    pub fn is_consistently_oriented(&self) -> bool {
        (0..self.adj.edges.len()).all(|e| {
            let [t0, t1] = self.adj.edge_tris[e];
            if t1 == NO_TRIANGLE {
                return true;
            }
            let [a, b] = self.adj.edges[e];
            directed(&self.triangles[t0 as usize], a, b) != directed(&self.triangles[t1 as usize], a, b)
        })
    }

    /// Lazily built bounding volume hierarchy over the triangles.
    pub fn bvh(&self) -> &TriangleBvh {
        self.bvh.get_or_init(|| TriangleBvh::new(&self.vertices, &self.triangles))
    }

    /// Reorients triangles so each connected component is consistently
    /// wound. A component keeps whichever orientation the majority of its
    /// input triangles already had; closed components are then turned to
    /// enclose positive volume.
    pub fn with_consistent_winding(self) -> Result<TriangleMesh, MeshError> {
        let tcount = self.triangles.len();
        let mut flip = vec![false; tcount];
        let mut seen = vec![false; tcount];
        let mut tris = self.triangles.clone();
        for start in 0..tcount {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut component = vec![start];
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(t) = queue.pop_front() {
                let tri = self.triangles[t];
                for (k, &e) in self.adj.tri_edges[t].iter().enumerate() {
                    let Some(o) = self.opposite_triangle(e as usize, t as u32) else { continue };
                    let o = o as usize;
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    // effective direction of a->b in t after its own flip
                    let t_fwd = !flip[t];
                    let o_has_ab = directed(&self.triangles[o], a, b);
                    // o must traverse a->b opposite to t
                    let want_flip = o_has_ab == t_fwd;
                    if seen[o] {
                        if flip[o] != want_flip {
                            return Err(MeshError::NonOrientable { triangle: o });
                        }
                    } else {
                        seen[o] = true;
                        flip[o] = want_flip;
                        component.push(o);
                        queue.push_back(o);
                    }
                }
            }
            let flipped = component.iter().filter(|&&t| flip[t]).count();
            if 2 * flipped > component.len() {
                for &t in &component {
                    flip[t] = !flip[t];
                }
            }
            for &t in &component {
                if flip[t] {
                    let x = tris[t];
                    tris[t] = [x[0], x[2], x[1]];
                }
            }
            let closed = component.iter().all(|&t| {
                self.adj.tri_edges[t].iter().all(|&e| !self.is_boundary_edge(e as usize))
            });
            if closed {
                let vol: f64 = component
                    .iter()
                    .map(|&t| {
                        let x = tris[t];
                        let a = self.vertices[x[0] as usize].coords;
                        let b = self.vertices[x[1] as usize].coords;
                        let c = self.vertices[x[2] as usize].coords;
                        a.dot(&b.cross(&c))
                    })
                    .sum();
                if vol < 0.0 {
                    for &t in &component {
                        let x = tris[t];
                        tris[t] = [x[0], x[2], x[1]];
                    }
                }
            }
        }
        TriangleMesh::new(self.vertices, tris)
    }

    /// Appends `other` as disjoint geometry (no welding).
    pub fn disjoint_union(&self, other: &TriangleMesh) -> TriangleMesh {
        let off = self.vertices.len() as u32;
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices);
        let mut t = self.triangles.clone();
        t.extend(other.triangles.iter().map(|x| [x[0] + off, x[1] + off, x[2] + off]));
        TriangleMesh::new(v, t).expect("disjoint union of valid meshes is valid")
    }

    pub fn into_parts(self) -> (Vec<Point3>, Vec<[u32; 3]>) {
        (self.vertices, self.triangles)
    }
}

/// Whether triangle `t` contains the directed edge `a -> b`.
#[inline]
pub(crate) fn directed(t: &[u32; 3], a: u32, b: u32) -> bool {
    (t[0] == a && t[1] == b) || (t[1] == a && t[2] == b) || (t[2] == a && t[0] == b)
}

impl Adjacency {
    fn build(nv: usize, triangles: &[[u32; 3]]) -> Result<Adjacency, MeshError> {
        let mut half: Vec<(u32, u32, u32, u8)> = Vec::with_capacity(triangles.len() * 3);
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                half.push((a.min(b), a.max(b), ti as u32, k as u8));
            }
        }
        half.sort_unstable();
        let mut edges = Vec::with_capacity(half.len() / 2 + 1);
        let mut edge_tris = Vec::with_capacity(half.len() / 2 + 1);
        let mut tri_edges = vec![[0u32; 3]; triangles.len()];
        let mut i = 0;
        while i < half.len() {
            let (a, b, _, _) = half[i];
            let mut j = i;
            while j < half.len() && half[j].0 == a && half[j].1 == b {
                j += 1;
            }
            if j - i > 2 {
                return Err(MeshError::NonManifoldEdge { a, b, count: j - i });
            }
            let eid = edges.len() as u32;
            edges.push([a, b]);
            let t0 = half[i].2;
            let t1 = if j - i == 2 { half[i + 1].2 } else { NO_TRIANGLE };
            edge_tris.push([t0, t1]);
            for h in &half[i..j] {
                tri_edges[h.2 as usize][h.3 as usize] = eid;
            }
            i = j;
        }

        let mut deg = vec![0u32; nv + 1];
        for &[a, b] in &edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        let nbr_start = prefix_sum(&deg, nv);
        let mut fill = nbr_start.clone();
        let mut nbrs = vec![0u32; edges.len() * 2];
        for &[a, b] in &edges {
            nbrs[fill[a as usize] as usize] = b;
            fill[a as usize] += 1;
            nbrs[fill[b as usize] as usize] = a;
            fill[b as usize] += 1;
        }
        for v in 0..nv {
            nbrs[nbr_start[v] as usize..nbr_start[v + 1] as usize].sort_unstable();
        }

        let mut tdeg = vec![0u32; nv + 1];
        for t in triangles {
            for &v in t {
                tdeg[v as usize] += 1;
            }
        }
        let vtri_start = prefix_sum(&tdeg, nv);
        let mut fill = vtri_start.clone();
        let mut vtris = vec![0u32; triangles.len() * 3];
        for (ti, t) in triangles.iter().enumerate() {
            for &v in t {
                vtris[fill[v as usize] as usize] = ti as u32;
                fill[v as usize] += 1;
            }
        }
        Ok(Adjacency { nbr_start, nbrs, vtri_start, vtris, edges, edge_tris, tri_edges })
    }
}

fn prefix_sum(counts: &[u32], n: usize) -> Vec<u32> {
    let mut start = vec![0u32; n + 1];
    for v in 0..n {
        start[v + 1] = start[v] + counts[v];
    }
    start
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> TriangleMesh {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        TriangleMesh::new(v, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn adjacency_is_symmetric() {
        let m = quad();
        for v in 0..m.vertex_count() as u32 {
            for &u in m.neighbors(v) {
                assert!(m.neighbors(u).contains(&v));
            }
        }
        assert_eq!(m.edges().len(), 5);
        let diag = m.edge_id(2, 0).unwrap();
        assert!(!m.is_boundary_edge(diag));
        assert_eq!(m.boundary_edge_count(), 4);
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, -1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let err = TriangleMesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldEdge { a: 0, b: 1, count: 3 }));
    }

    #[test]
    fn rejects_bad_indices() {
        let v = vec![Point3::origin(); 3];
        assert!(matches!(
            TriangleMesh::new(v.clone(), vec![[0, 1, 3]]),
            Err(MeshError::IndexOutOfRange { .. })
        ));
        assert!(matches!(TriangleMesh::new(v, vec![[0, 1, 1]]), Err(MeshError::DegenerateTriangle { .. })));
    }

    #[test]
    fn winding_fix_uses_majority() {
        let m = quad();
        let (v, mut t) = m.into_parts();
        t[1] = [0, 3, 2];
        let fixed = TriangleMesh::new(v, t).unwrap().with_consistent_winding().unwrap();
        assert!(fixed.is_consistently_oriented());
        // tie: the seed triangle's orientation wins
        assert_eq!(fixed.triangles()[0], [0, 1, 2]);
    }
}
