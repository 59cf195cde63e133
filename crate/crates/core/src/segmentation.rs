//! Cutting a region out of a mesh along a closed contour.
//!
//! The contour is first snapped to a loop of mesh edges. That loop splits
//! the vertices into two sides, which sign a per-vertex distance to the
//! contour polyline. Triangles are then clipped where the signed scalar
//! crosses zero; the negative side is the kept region.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use thiserror::Error;

use crate::bvh::{Hierarchy, PointIndex};
use crate::contour::ContourLoop;
use crate::geometry::{closest_point_on_segment, point_line_distance, Aabb, Point3};
use crate::mesh::{connected_components, extract_boundary_loops, submesh, BoundaryLoop, MeshError, TriangleMesh};

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("cannot segment an empty mesh")]
    EmptyMesh,
    #[error("contour maps to only {0} distinct mesh vertices; at least 3 are needed")]
    DegenerateLoop(usize),
    #[error("no edge path from vertex {from} to vertex {to}; they lie in different components")]
    Unreachable { from: u32, to: u32 },
    #[error("the edge loop does not separate the mesh into two sides")]
    LoopDoesNotSeparate,
    #[error("seed vertex {0} is not reachable from either side of the edge loop")]
    SeedUnreachable(u32),
    #[error("clipping left no region on the kept side")]
    EmptyRegion,
    #[error("the clipped region has no boundary along the contour")]
    NoBoundary,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Cyclic sequence of vertices joined by mesh edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeLoop {
    pub vertices: Vec<u32>,
}

impl EdgeLoop {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Consecutive vertices (cyclically) share an edge and no vertex repeats.
    pub fn is_valid(&self, mesh: &TriangleMesh) -> bool {
        let n = self.vertices.len();
        let distinct: HashSet<u32> = self.vertices.iter().copied().collect();
        n >= 3
            && distinct.len() == n
            && (0..n).all(|i| mesh.edge_id(self.vertices[i], self.vertices[(i + 1) % n]).is_some())
    }
}

/// Nearest mesh vertex for each contour point, with consecutive repeats
/// (including across the wrap) collapsed.
pub fn closest_vertices(points: &[Point3], mesh: &TriangleMesh) -> Result<Vec<u32>, SegmentationError> {
    if mesh.is_empty() {
        return Err(SegmentationError::EmptyMesh);
    }
    let index = PointIndex::new(mesh.vertices());
    let mut out: Vec<u32> = Vec::with_capacity(points.len());
    for p in points {
        let (v, _) = index.nearest(p).expect("non-empty mesh");
        let v = v as u32;
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    let distinct: HashSet<u32> = out.iter().copied().collect();
    if distinct.len() < 3 {
        return Err(SegmentationError::DegenerateLoop(distinct.len()));
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, u32);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then vertex index
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest edge path from `from` to `to` weighted by Euclidean edge
/// length, endpoints included.
pub fn shortest_edge_path(mesh: &TriangleMesh, from: u32, to: u32) -> Option<Vec<u32>> {
    let mut dist: HashMap<u32, f64> = HashMap::new();
    let mut prev: HashMap<u32, u32> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(from, 0.0);
    heap.push(HeapItem(0.0, from));
    while let Some(HeapItem(d, v)) = heap.pop() {
        if v == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[&cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        if d > dist[&v] {
            continue;
        }
        let pv = mesh.vertex(v);
        for &u in mesh.neighbors(v) {
            let nd = d + (mesh.vertex(u) - pv).norm();
            let better = match dist.get(&u) {
                None => true,
                Some(&old) => nd < old || (nd == old && prev.get(&u).is_some_and(|&p| v < p)),
            };
            if better {
                dist.insert(u, nd);
                prev.insert(u, v);
                heap.push(HeapItem(nd, u));
            }
        }
    }
    None
}

/// Greedy walk from `a` toward `b`: each step goes to the neighbor that
/// does not point backward and lies closest to line `ab`. Falls back to a
/// shortest edge path when no neighbor qualifies, a vertex would repeat, or
/// the walk passes `b`. Appends the vertices after `a`, ending with `b`.
fn walk_segment(mesh: &TriangleMesh, a: u32, b: u32, out: &mut Vec<u32>) -> Result<(), SegmentationError> {
    let pa = mesh.vertex(a);
    let pb = mesh.vertex(b);
    let dir = pb - pa;
    let len2 = dir.norm_squared();
    let mut p = a;
    let mut visited: HashSet<u32> = HashSet::from([a]);
    loop {
        if p == b {
            return Ok(());
        }
        let pp = mesh.vertex(p);
        let passed = (pp - pa).dot(&dir) >= len2;
        let mut best: Option<(u32, f64)> = None;
        if !passed {
            for &nb in mesh.neighbors(p) {
                let q = mesh.vertex(nb);
                if dir.dot(&(q - pp)) < 0.0 {
                    continue;
                }
                let d = point_line_distance(&q, &pa, &pb);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((nb, d));
                }
            }
        }
        match best {
            Some((nb, _)) if !visited.contains(&nb) => {
                visited.insert(nb);
                out.push(nb);
                p = nb;
            }
            _ => {
                let path = shortest_edge_path(mesh, p, b).ok_or(SegmentationError::Unreachable { from: p, to: b })?;
                out.extend_from_slice(&path[1..]);
                return Ok(());
            }
        }
    }
}

/// Removes sub-loops: wherever a vertex repeats, the shorter of the two
/// cycles through it is cut out. Backtracks `v, u, v` are the two-vertex
/// case.
fn remove_repeats(mut seq: Vec<u32>) -> Vec<u32> {
    loop {
        let mut first: HashMap<u32, usize> = HashMap::with_capacity(seq.len());
        let mut found = None;
        for (i, &v) in seq.iter().enumerate() {
            if let Some(&j) = first.get(&v) {
                found = Some((j, i));
                break;
            }
            first.insert(v, i);
        }
        let Some((p, q)) = found else { return seq };
        if q - p <= seq.len() - (q - p) {
            seq.drain(p..q);
        } else {
            seq = seq[p..q].to_vec();
        }
    }
}

/// Connects consecutive anchors along mesh edges and closes the loop.
pub fn track_edge_loop(anchors: &[u32], mesh: &TriangleMesh) -> Result<EdgeLoop, SegmentationError> {
    let k = anchors.len();
    if k < 3 {
        return Err(SegmentationError::DegenerateLoop(k));
    }
    let mut seq = vec![anchors[0]];
    for i in 0..k {
        let (a, b) = (anchors[i], anchors[(i + 1) % k]);
        walk_segment(mesh, a, b, &mut seq)?;
    }
    seq.pop(); // the walk ends back at anchors[0]
    let seq = remove_repeats(seq);
    if seq.len() < 3 {
        return Err(SegmentationError::DegenerateLoop(seq.len()));
    }
    Ok(EdgeLoop { vertices: seq })
}

/// Unsigned distance from each vertex to the contour polyline and the
/// index of the segment attaining it (ties to the lower index).
#[derive(Debug, Clone, PartialEq)]
pub struct UnsignedScalars {
    pub distance: Vec<f64>,
    pub segment: Vec<u32>,
}

impl UnsignedScalars {
    /// Closest point on the polyline to vertex `v`.
    pub fn closest_point(&self, v: u32, polyline: &ContourLoop, mesh: &TriangleMesh) -> Point3 {
        let (a, b) = polyline.segment(self.segment[v as usize] as usize);
        closest_point_on_segment(&mesh.vertex(v), &a, &b).0
    }
}

fn segment_d2(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    (p - closest_point_on_segment(p, a, b).0).norm_squared()
}

/// Minimum distance from every vertex to the polyline segments. A box
/// hierarchy over the segments prunes the search; the result is identical
/// to [`compute_scalars_brute`].
pub fn compute_scalars(polyline: &ContourLoop, mesh: &TriangleMesh) -> UnsignedScalars {
    let n = polyline.len();
    let segs: Vec<(Point3, Point3)> = (0..n).map(|i| polyline.segment(i)).collect();
    let bounds: Vec<Aabb> = segs.iter().map(|(a, b)| Aabb::from_points([a, b])).collect();
    let tree = Hierarchy::build(&bounds);
    let (distance, segment) = mesh
        .vertices()
        .par_iter()
        .map(|p| {
            let (i, d2) = tree.nearest(p, |i| segment_d2(p, &segs[i].0, &segs[i].1)).expect("non-empty polyline");
            (d2.sqrt(), i as u32)
        })
        .unzip();
    UnsignedScalars { distance, segment }
}

/// The direct O(vertices × segments) evaluation.
pub fn compute_scalars_brute(polyline: &ContourLoop, mesh: &TriangleMesh) -> UnsignedScalars {
    let n = polyline.len();
    let segs: Vec<(Point3, Point3)> = (0..n).map(|i| polyline.segment(i)).collect();
    let (distance, segment) = mesh
        .vertices()
        .par_iter()
        .map(|p| {
            let mut best = (f64::INFINITY, 0u32);
            for (i, (a, b)) in segs.iter().enumerate() {
                let d2 = segment_d2(p, a, b);
                if d2 < best.0 {
                    best = (d2, i as u32);
                }
            }
            (best.0.sqrt(), best.1)
        })
        .unzip();
    UnsignedScalars { distance, segment }
}

/// A mesh with one signed scalar per vertex; negative marks the kept side.
#[derive(Debug, Clone)]
pub struct ScalarMesh<'a> {
    pub mesh: &'a TriangleMesh,
    pub scalar: Vec<f64>,
}

/// Vertex nearest to the surface point closest to the contour centroid.
pub fn default_seed(polyline: &ContourLoop, mesh: &TriangleMesh) -> u32 {
    let c = polyline.points.iter().fold(nalgebra::Vector3::zeros(), |acc, p| acc + p.coords) / polyline.len() as f64;
    seed_vertex(&Point3::from(c), mesh)
}

/// Corner nearest to `p` of the triangle closest to `p`.
pub fn seed_vertex(p: &Point3, mesh: &TriangleMesh) -> u32 {
    let hit = mesh.bvh().closest_point(p).expect("non-empty mesh");
    let tri = mesh.triangles()[hit.triangle];
    *tri.iter()
        .min_by(|&&a, &&b| (mesh.vertex(a) - hit.point).norm_squared().total_cmp(&(mesh.vertex(b) - hit.point).norm_squared()))
        .expect("three corners")
}

const UNSET: u8 = 0;
const LEFT: u8 = 1;
const RIGHT: u8 = 2;

/// Signs the distances. Off-loop vertices are flood-filled from the two
/// sides of the edge loop; the side holding `seed` becomes negative. Each
/// loop vertex `P` takes its sign from the off-loop neighbor `N` with the
/// largest distance: the same sign when `P` is nearer to `N` than `P`'s
/// closest polyline point `Q` is, the opposite sign otherwise. Exact zeros
/// are nudged to a tiny negative value.
pub fn assign_signs<'a>(
    distances: &UnsignedScalars,
    edge_loop: &EdgeLoop,
    polyline: &ContourLoop,
    mesh: &'a TriangleMesh,
    seed: u32,
) -> Result<ScalarMesh<'a>, SegmentationError> {
    let nv = mesh.vertex_count();
    let mut on_loop = vec![false; nv];
    for &v in &edge_loop.vertices {
        on_loop[v as usize] = true;
    }
    let mut side = vec![UNSET; nv];
    let mut seeds: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    let n = edge_loop.len();
    for i in 0..n {
        let (a, b) = (edge_loop.vertices[i], edge_loop.vertices[(i + 1) % n]);
        let Some(e) = mesh.edge_id(a, b) else { continue };
        for t in mesh.edge_triangles(e) {
            if t == crate::mesh::NO_TRIANGLE {
                continue;
            }
            let tri = mesh.triangles()[t as usize];
            let third = tri.iter().copied().find(|&x| x != a && x != b).expect("triangle has a third corner");
            if on_loop[third as usize] {
                continue;
            }
            let left = crate::mesh::directed(&tri, a, b);
            seeds[if left { 0 } else { 1 }].push(third);
        }
    }
    if seeds[0].is_empty() || seeds[1].is_empty() {
        return Err(SegmentationError::LoopDoesNotSeparate);
    }
    for (label, starts) in [(LEFT, &seeds[0]), (RIGHT, &seeds[1])] {
        let mut queue: VecDeque<u32> = VecDeque::new();
        for &s in starts {
            if side[s as usize] == UNSET {
                side[s as usize] = label;
                queue.push_back(s);
            } else if side[s as usize] != label {
                return Err(SegmentationError::LoopDoesNotSeparate);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &u in mesh.neighbors(v) {
                if on_loop[u as usize] {
                    continue;
                }
                match side[u as usize] {
                    UNSET => {
                        side[u as usize] = label;
                        queue.push_back(u);
                    }
                    s if s != label => return Err(SegmentationError::LoopDoesNotSeparate),
                    _ => {}
                }
            }
        }
    }

    let mut seed_side = side[seed as usize];
    if on_loop[seed as usize] {
        seed_side = mesh.neighbors(seed).iter().map(|&u| side[u as usize]).find(|&s| s != UNSET).unwrap_or(UNSET);
    }
    if seed_side == UNSET {
        return Err(SegmentationError::SeedUnreachable(seed));
    }
    // unreached vertices (other components) fall on the discarded side
    let mut sign: Vec<f64> = side.iter().map(|&s| if s == seed_side { -1.0 } else { 1.0 }).collect();

    for &p in &edge_loop.vertices {
        let nb = mesh
            .neighbors(p)
            .iter()
            .copied()
            .filter(|&u| !on_loop[u as usize])
            .fold(None::<u32>, |best, u| match best {
                Some(b) if distances.distance[b as usize] >= distances.distance[u as usize] => Some(b),
                _ => Some(u),
            });
        sign[p as usize] = match nb {
            Some(nv) => {
                let pp = mesh.vertex(p);
                let pn = mesh.vertex(nv);
                let q = distances.closest_point(p, polyline, mesh);
                let s = sign[nv as usize];
                if (pn - pp).norm() < (pn - q).norm() {
                    s
                } else {
                    -s
                }
            }
            None => nearest_off_loop_sign(mesh, p, &on_loop, &sign),
        };
    }

    let eps = 1e-12 * mesh.bounds().diagonal();
    let scalar = (0..nv)
        .map(|v| {
            let s = sign[v] * distances.distance[v];
            if s == 0.0 {
                -eps
            } else {
                s
            }
        })
        .collect();
    Ok(ScalarMesh { mesh, scalar })
}

fn nearest_off_loop_sign(mesh: &TriangleMesh, start: u32, on_loop: &[bool], sign: &[f64]) -> f64 {
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &u in mesh.neighbors(v) {
            if !on_loop[u as usize] {
                return sign[u as usize];
            }
            if seen.insert(u) {
                queue.push_back(u);
            }
        }
    }
    -1.0
}

/// Where a clipped-mesh vertex came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexOrigin {
    Original(u32),
    /// Zero crossing at `a + t (b - a)` on input edge `(a, b)`, `a < b`.
    OnEdge { a: u32, b: u32, t: f64 },
}

#[derive(Debug, Clone)]
pub struct ClipPart {
    pub mesh: TriangleMesh,
    pub origin: Vec<VertexOrigin>,
}

/// Both sides of a clip: `region` holds the negative scalars.
#[derive(Debug, Clone)]
pub struct Clipped {
    pub region: ClipPart,
    pub complement: ClipPart,
}

/// Splits every triangle whose corner signs differ at the zero crossings of
/// its edges. The lone corner `L` with neighbors `A`, `B` (in winding
/// order) gets crossing `X` on `LA` and `Y` on `BL`; the pieces are
/// `(L, X, Y)` on `L`'s side and `(X, A, B)`, `(X, B, Y)` on the other.
/// Crossings are shared between the two triangles of an edge.
pub fn clip_by_scalar(sm: &ScalarMesh) -> Clipped {
    let mesh = sm.mesh;
    let s = &sm.scalar;
    let mut points: Vec<Point3> = mesh.vertices().to_vec();
    let mut origin: Vec<VertexOrigin> = (0..mesh.vertex_count() as u32).map(VertexOrigin::Original).collect();
    let mut crossing: HashMap<usize, u32> = HashMap::new();
    let mut neg: Vec<[u32; 3]> = Vec::new();
    let mut pos: Vec<[u32; 3]> = Vec::new();
    let mut cross = |u: u32, v: u32, points: &mut Vec<Point3>, origin: &mut Vec<VertexOrigin>| -> u32 {
        let e = mesh.edge_id(u, v).expect("triangle edge");
        *crossing.entry(e).or_insert_with(|| {
            let (a, b) = (u.min(v), u.max(v));
            let (sa, sb) = (s[a as usize], s[b as usize]);
            let t = sa / (sa - sb);
            let pa = mesh.vertex(a);
            points.push(pa + (mesh.vertex(b) - pa) * t);
            origin.push(VertexOrigin::OnEdge { a, b, t });
            (points.len() - 1) as u32
        })
    };
    for tri in mesh.triangles() {
        let negs = tri.map(|v| s[v as usize] < 0.0);
        let count = negs.iter().filter(|&&n| n).count();
        if count == 3 {
            neg.push(*tri);
            continue;
        }
        if count == 0 {
            pos.push(*tri);
            continue;
        }
        // the corner whose sign differs from the other two
        let k = (0..3).find(|&k| negs[k] != negs[(k + 1) % 3] && negs[k] != negs[(k + 2) % 3]).expect("one lone corner");
        let (l, a, b) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
        let x = cross(l, a, &mut points, &mut origin);
        let y = cross(b, l, &mut points, &mut origin);
        let (lone, rest) = if negs[k] { (&mut neg, &mut pos) } else { (&mut pos, &mut neg) };
        lone.push([l, x, y]);
        rest.push([x, a, b]);
        rest.push([x, b, y]);
    }
    let part = |tris: Vec<[u32; 3]>| {
        let all = TriangleMesh::new(points.clone(), tris).expect("clipped triangles are valid");
        let ids: Vec<u32> = (0..all.triangle_count() as u32).collect();
        let (m, map) = submesh(&all, &ids);
        ClipPart { mesh: m, origin: map.iter().map(|&v| origin[v as usize]).collect() }
    };
    Clipped { region: part(neg), complement: part(pos) }
}

/// The kept region of a segmentation and its new border.
#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub region: TriangleMesh,
    /// Border loop of interpolated zero-scalar vertices.
    pub boundary: BoundaryLoop,
    pub complement: TriangleMesh,
    pub edge_loop: EdgeLoop,
}

/// Runs the whole cut: closest vertices, edge loop, scalars, signs, clip.
/// `seed` picks the kept side; by default the vertex nearest the contour
/// centroid's surface projection. Only the largest connected piece of the
/// kept side is returned.
pub fn segment(mesh: &TriangleMesh, contour: &ContourLoop, seed: Option<Point3>) -> Result<SegmentationResult, SegmentationError> {
    if mesh.is_empty() {
        return Err(SegmentationError::EmptyMesh);
    }
    let anchors = closest_vertices(&contour.points, mesh)?;
    let edge_loop = track_edge_loop(&anchors, mesh)?;
    let distances = compute_scalars(contour, mesh);
    let seed = match seed {
        Some(p) => seed_vertex(&p, mesh),
        None => default_seed(contour, mesh),
    };
    let sm = assign_signs(&distances, &edge_loop, contour, mesh, seed)?;
    let clipped = clip_by_scalar(&sm);
    let (region, origin) = largest_piece(&clipped.region);
    if region.is_empty() {
        return Err(SegmentationError::EmptyRegion);
    }
    let loops = extract_boundary_loops(&region)?;
    let boundary = loops
        .into_iter()
        .filter(|l| l.vertices.iter().all(|&v| matches!(origin[v as usize], VertexOrigin::OnEdge { .. })))
        .max_by_key(|l| l.len())
        .ok_or(SegmentationError::NoBoundary)?;
    Ok(SegmentationResult { region, boundary, complement: clipped.complement.mesh, edge_loop })
}

fn largest_piece(part: &ClipPart) -> (TriangleMesh, Vec<VertexOrigin>) {
    let comps = connected_components(&part.mesh);
    let Some(best) = comps.iter().max_by_key(|c| c.len()) else {
        return (TriangleMesh::empty(), Vec::new());
    };
    if comps.len() == 1 {
        return (part.mesh.clone(), part.origin.clone());
    }
    let (m, map) = submesh(&part.mesh, best);
    let origin = map.iter().map(|&v| part.origin[v as usize]).collect();
    (m, origin)
}
