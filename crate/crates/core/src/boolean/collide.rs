//! Triangle-triangle crossings between two meshes and the closed
//! polylines they form.

use std::collections::{BTreeMap, HashMap};

use crate::geometry::{orient3d, Aabb, Point3};
use crate::mesh::{TriangleMesh, NO_TRIANGLE};

use super::obb::{build_obb_tree, overlapping_leaves, DEFAULT_LEAF_SIZE};
use super::BooleanError;

/// Identifies a crossing: an edge of one mesh through a triangle of the
/// other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CrossingKey {
    /// Edge of the first mesh through a triangle of the second.
    AEdge { edge: u32, tri: u32 },
    /// Edge of the second mesh through a triangle of the first.
    BEdge { edge: u32, tri: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionPoint {
    pub point: Point3,
    pub key: CrossingKey,
}

/// The piece of the intersection curve inside one triangle pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveSegment {
    pub tri_a: u32,
    pub tri_b: u32,
    pub ends: [usize; 2],
}

#[derive(Debug, Clone, Default)]
pub struct CollisionResult {
    /// Sorted by key.
    pub points: Vec<IntersectionPoint>,
    pub segments: Vec<CurveSegment>,
    /// Sorted, distinct triangle indices of each mesh.
    pub marked_a: Vec<u32>,
    pub marked_b: Vec<u32>,
    /// Closed loops of indices into `points`.
    pub polylines: Vec<Vec<usize>>,
}

impl CollisionResult {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn polyline_points(&self, k: usize) -> Vec<Point3> {
        self.polylines[k].iter().map(|&i| self.points[i].point).collect()
    }
}

enum Crossing {
    None,
    At(Point3),
    Degenerate,
}

/// Exact-sign test of segment `pq` against triangle `abc`.
fn edge_triangle(p: &Point3, q: &Point3, a: &Point3, b: &Point3, c: &Point3) -> Crossing {
    let op = orient3d(a, b, c, p);
    let oq = orient3d(a, b, c, q);
    if (op > 0.0 && oq > 0.0) || (op < 0.0 && oq < 0.0) {
        return Crossing::None;
    }
    if op == 0.0 && oq == 0.0 {
        let seg = Aabb::from_points([p, q]);
        let tri = Aabb::from_points([a, b, c]);
        return if seg.overlaps(&tri) { Crossing::Degenerate } else { Crossing::None };
    }
    let s = [orient3d(p, q, a, b), orient3d(p, q, b, c), orient3d(p, q, c, a)];
    let pos = s.iter().any(|&x| x > 0.0);
    let neg = s.iter().any(|&x| x < 0.0);
    if pos && neg {
        return Crossing::None;
    }
    if s.contains(&0.0) || op == 0.0 || oq == 0.0 {
        return Crossing::Degenerate;
    }
    let t = op / (op - oq);
    Crossing::At(p + (q - p) * t)
}

fn triangle_box(m: &TriangleMesh, t: u32) -> Aabb {
    let c = m.corners(t as usize);
    Aabb::from_points(c.iter())
}

/// Candidate triangle pairs: overlapping OBB leaves, then overlapping
/// triangle boxes. Sorted and distinct.
pub fn candidate_pairs(a: &TriangleMesh, b: &TriangleMesh) -> Vec<(u32, u32)> {
    let ta = build_obb_tree(a, DEFAULT_LEAF_SIZE);
    let tb = build_obb_tree(b, DEFAULT_LEAF_SIZE);
    let mut out = Vec::new();
    for (la, lb) in overlapping_leaves(&ta, &tb) {
        for &x in ta.leaf_triangles(la) {
            let bx = triangle_box(a, x);
            for &y in tb.leaf_triangles(lb) {
                if bx.overlaps(&triangle_box(b, y)) {
                    out.push((x, y));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Finds every edge-through-triangle crossing between `a` and `b`, in
/// both directions, and chains them into closed polylines. Any exactly
/// degenerate contact (a vertex on a face, coplanar overlap, an edge
/// through an edge) is reported as [`BooleanError::Degenerate`] so the
/// caller can perturb and retry.
pub fn detect_collisions(a: &TriangleMesh, b: &TriangleMesh) -> Result<CollisionResult, BooleanError> {
    collide_pairs(a, b, &candidate_pairs(a, b))
}

/// Same as [`detect_collisions`] over an explicit candidate list.
pub fn collide_pairs(a: &TriangleMesh, b: &TriangleMesh, pairs: &[(u32, u32)]) -> Result<CollisionResult, BooleanError> {
    let mut cache: HashMap<CrossingKey, Option<Point3>> = HashMap::new();
    let mut lookup = |key: CrossingKey| -> Result<Option<Point3>, BooleanError> {
        if let Some(&hit) = cache.get(&key) {
            return Ok(hit);
        }
        let (em, tm, edge, tri) = match key {
            CrossingKey::AEdge { edge, tri } => (a, b, edge, tri),
            CrossingKey::BEdge { edge, tri } => (b, a, edge, tri),
        };
        let [u, v] = em.edges()[edge as usize];
        let (p, q) = (em.vertex(u.min(v)), em.vertex(u.max(v)));
        let [x, y, z] = tm.corners(tri as usize);
        let hit = match edge_triangle(&p, &q, &x, &y, &z) {
            Crossing::None => None,
            Crossing::At(pt) => Some(pt),
            Crossing::Degenerate => return Err(BooleanError::Degenerate),
        };
        cache.insert(key, hit);
        Ok(hit)
    };
    let mut found: Vec<(u32, u32, [CrossingKey; 2])> = Vec::new();
    let mut keys: BTreeMap<CrossingKey, Point3> = BTreeMap::new();
    for &(ta, tb) in pairs {
        let mut hits: Vec<(CrossingKey, Point3)> = Vec::with_capacity(2);
        for e in a.triangle_edges(ta as usize) {
            let k = CrossingKey::AEdge { edge: e, tri: tb };
            if let Some(p) = lookup(k)? {
                hits.push((k, p));
            }
        }
        for e in b.triangle_edges(tb as usize) {
            let k = CrossingKey::BEdge { edge: e, tri: ta };
            if let Some(p) = lookup(k)? {
                hits.push((k, p));
            }
        }
        match hits.len() {
            0 => {}
            2 => {
                for &(k, p) in &hits {
                    keys.insert(k, p);
                }
                found.push((ta, tb, [hits[0].0, hits[1].0]));
            }
            _ => return Err(BooleanError::Degenerate),
        }
    }
    let points: Vec<IntersectionPoint> = keys.iter().map(|(&key, &point)| IntersectionPoint { point, key }).collect();
    let index: HashMap<CrossingKey, usize> = points.iter().enumerate().map(|(i, p)| (p.key, i)).collect();
    let segments: Vec<CurveSegment> =
        found.iter().map(|&(tri_a, tri_b, [k0, k1])| CurveSegment { tri_a, tri_b, ends: [index[&k0], index[&k1]] }).collect();
    let mut marked_a: Vec<u32> = segments.iter().map(|s| s.tri_a).collect();
    let mut marked_b: Vec<u32> = segments.iter().map(|s| s.tri_b).collect();
    marked_a.sort_unstable();
    marked_a.dedup();
    marked_b.sort_unstable();
    marked_b.dedup();
    let polylines = assemble_polylines(points.len(), &segments, |i| points[i].point)?;
    Ok(CollisionResult { points, segments, marked_a, marked_b, polylines })
}

/// Chains segments into closed loops. Every point must join exactly two
/// segments; a loose end is reported with its location.
pub fn assemble_polylines(
    point_count: usize,
    segments: &[CurveSegment],
    position: impl Fn(usize) -> Point3,
) -> Result<Vec<Vec<usize>>, BooleanError> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); point_count];
    for s in segments {
        adj[s.ends[0]].push(s.ends[1]);
        adj[s.ends[1]].push(s.ends[0]);
    }
    if let Some(i) = (0..point_count).find(|&i| adj[i].len() != 2) {
        return Err(BooleanError::OpenChain { at: position(i) });
    }
    let mut seen = vec![false; point_count];
    let mut loops = Vec::new();
    for start in 0..point_count {
        if seen[start] {
            continue;
        }
        let mut lp = vec![start];
        seen[start] = true;
        let (mut prev, mut cur) = (start, adj[start][0].min(adj[start][1]));
        while cur != start {
            if seen[cur] {
                return Err(BooleanError::OpenChain { at: position(cur) });
            }
            seen[cur] = true;
            lp.push(cur);
            let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
            prev = cur;
            cur = next;
        }
        loops.push(lp);
    }
    Ok(loops)
}

/// The triangle on the other side of edge `(u, v)` from `t`, if any.
pub(crate) fn across(m: &TriangleMesh, u: u32, v: u32, t: u32) -> Option<u32> {
    let e = m.edge_id(u, v)?;
    m.edge_triangles(e).into_iter().find(|&x| x != t && x != NO_TRIANGLE)
}
