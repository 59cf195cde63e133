//! Fusing drilling tubes into the template body.
//!
//! Both meshes lose the triangles the intersection curve passes through.
//! What remains falls apart into fragments; each is kept or dropped by an
//! inside/outside test against the other mesh, and every kept fragment's
//! ragged border is stitched to the shared intersection polyline with a
//! ruled strip. Since both sides stitch to the same polyline vertices the
//! result is closed by construction.

mod collide;
mod obb;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::geometry::{Point3, Vec3};
use crate::mesh::{extract_boundary_loops, is_closed, submesh, MeshError, TriangleMesh};
use crate::ruled::{stitch_loops, Corner, RuledError};
use crate::tube::{tube_mesh, DrillAxis, TubeError};

pub use collide::{assemble_polylines, candidate_pairs, collide_pairs, detect_collisions, CollisionResult, CrossingKey, CurveSegment, IntersectionPoint};
pub use obb::{build_obb_tree, overlapping_leaves, Obb, ObbNode, ObbTree, DEFAULT_LEAF_SIZE};

/// Attempts at nudging the tool off an exactly degenerate contact.
const PERTURB_ATTEMPTS: usize = 6;
/// Rounds of local refinement when a fragment border is ambiguous.
const REFINE_ROUNDS: usize = 6;

#[derive(Debug, Error)]
pub enum BooleanError {
    #[error("exactly degenerate contact between the meshes")]
    Degenerate,
    #[error("intersection curve does not close near ({}, {}, {})", at.x, at.y, at.z)]
    OpenChain { at: Point3 },
    #[error("the meshes do not intersect")]
    NoCollision,
    #[error("cannot decide whether a fragment lies inside the other mesh")]
    Ambiguous,
    #[error("fragment borders could not be matched to intersection curves: {0}")]
    Unmatched(String),
    #[error("merged mesh is not closed")]
    NotClosed,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Ruled(#[from] RuledError),
    #[error(transparent)]
    Tube(#[from] TubeError),
}

/// Splits the marked triangles at their edge midpoints. Neighbors that
/// share a split edge are split too, so the result stays conforming.
/// Returns the refined mesh and each new triangle's source triangle.
pub fn refine(mesh: &TriangleMesh, marked: &[bool]) -> (TriangleMesh, Vec<u32>) {
    let mut verts = mesh.vertices().to_vec();
    let mut mid: HashMap<usize, u32> = HashMap::new();
    for (t, &m) in marked.iter().enumerate() {
        if !m {
            continue;
        }
        for e in mesh.triangle_edges(t) {
            mid.entry(e as usize).or_insert_with(|| {
                let [u, v] = mesh.edges()[e as usize];
                verts.push(Point3::from((mesh.vertex(u).coords + mesh.vertex(v).coords) / 2.0));
                (verts.len() - 1) as u32
            });
        }
    }
    let mut tris = Vec::with_capacity(mesh.triangle_count() + 3 * mid.len());
    let mut origin = Vec::with_capacity(tris.capacity());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let es = mesh.triangle_edges(t);
        // edge k runs from corner k to corner k + 1
        let split: Vec<Option<u32>> = (0..3)
            .map(|k| {
                let e = mesh.edge_id(tri[k], tri[(k + 1) % 3]).expect("triangle edge");
                debug_assert!(es.contains(&(e as u32)));
                mid.get(&e).copied()
            })
            .collect();
        let count = split.iter().flatten().count();
        let before = tris.len();
        match count {
            0 => tris.push(*tri),
            1 => {
                let k = (0..3).find(|&k| split[k].is_some()).expect("one split");
                let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let m = split[k].expect("split");
                tris.push([a, m, c]);
                tris.push([m, b, c]);
            }
            2 => {
                let k = (0..3).find(|&k| split[k].is_none()).expect("one whole edge");
                // whole edge is (c, a); split edges (a, b) and (b, c)
                let (c, a, b) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let m0 = split[(k + 1) % 3].expect("split");
                let m1 = split[(k + 2) % 3].expect("split");
                tris.push([m0, b, m1]);
                tris.push([a, m0, m1]);
                tris.push([a, m1, c]);
            }
            _ => {
                let [a, b, c] = *tri;
                let (m0, m1, m2) = (split[0].unwrap(), split[1].unwrap(), split[2].unwrap());
                tris.push([a, m0, m2]);
                tris.push([m0, b, m1]);
                tris.push([m2, m1, c]);
                tris.push([m0, m1, m2]);
            }
        }
        origin.extend(std::iter::repeat_n(t as u32, tris.len() - before));
    }
    (TriangleMesh::new(verts, tris).expect("refinement keeps the mesh valid"), origin)
}

const RAY_DIRECTIONS: [[f64; 3]; 5] = [
    [0.5377, 0.8131, 0.2241],
    [-0.3162, 0.2785, 0.9069],
    [0.6963, -0.5816, -0.4207],
    [-0.8017, -0.2673, 0.5345],
    [0.1543, -0.9258, 0.3450],
];

/// Ray-parity point-in-mesh test for a closed mesh. Rays grazing an edge or
/// starting on the surface are discarded; the vote of the first three clean
/// rays decides. `None` when no clean ray is found.
pub fn point_inside(mesh: &TriangleMesh, p: &Point3) -> Option<bool> {
    let bvh = mesh.bvh();
    let eps = 1e-10 * mesh.bounds().diagonal().max(1e-300);
    let mut votes = Vec::new();
    'dirs: for d in RAY_DIRECTIONS {
        let dir = Vec3::new(d[0], d[1], d[2]).normalize();
        let hits = bvh.ray_hits(p, &dir, 0.0);
        for h in &hits {
            if h.t < eps {
                continue 'dirs;
            }
            let [a, b, c] = mesh.corners(h.triangle);
            let x = p + dir * h.t;
            let n = (b - a).cross(&(c - a));
            let area2 = n.norm_squared();
            if area2 == 0.0 {
                continue 'dirs;
            }
            let bary = [(c - b).cross(&(x - b)), (a - c).cross(&(x - c)), (b - a).cross(&(x - a))].map(|w| w.dot(&n) / area2);
            if bary.iter().any(|&w| w.abs() < 1e-9) {
                continue 'dirs;
            }
        }
        votes.push(hits.len() % 2 == 1);
        if votes.len() == 3 {
            break;
        }
    }
    if votes.is_empty() {
        return None;
    }
    let inside = votes.iter().filter(|&&v| v).count();
    Some(2 * inside > votes.len())
}

/// Triangles grouped into pieces connected across edges (not just
/// vertices), ordered by first triangle.
fn edge_components(mesh: &TriangleMesh, alive: &[bool]) -> Vec<Vec<u32>> {
    let n = mesh.triangle_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for e in 0..mesh.edges().len() {
        let [t0, t1] = mesh.edge_triangles(e);
        if t1 == crate::mesh::NO_TRIANGLE || !alive[t0 as usize] || !alive[t1 as usize] {
            continue;
        }
        let (r0, r1) = (find(&mut parent, t0 as usize), find(&mut parent, t1 as usize));
        if r0 != r1 {
            parent[r0.max(r1)] = r0.min(r1);
        }
    }
    let mut groups: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (t, &live) in alive.iter().enumerate() {
        if live {
            let r = find(&mut parent, t);
            groups.entry(r).or_default().push(t as u32);
        }
    }
    let mut out: Vec<Vec<u32>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// A sample point of `fragment` as far from `other` as a strided scan of
/// its triangle centroids finds.
fn fragment_sample(mesh: &TriangleMesh, fragment: &[u32], other: &TriangleMesh) -> Option<Point3> {
    let stride = (fragment.len() / 64).max(1);
    let tol = 1e-9 * mesh.bounds().merge(&other.bounds()).diagonal();
    fragment
        .iter()
        .step_by(stride)
        .map(|&t| {
            let [a, b, c] = mesh.corners(t as usize);
            let p = Point3::from((a.coords + b.coords + c.coords) / 3.0);
            let d = other.bvh().closest_point(&p).map_or(f64::INFINITY, |h| h.distance);
            (p, d)
        })
        .filter(|&(_, d)| d > tol)
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(p, _)| p)
}

/// Which fragments of the tool survive.
#[derive(Debug, Clone, Copy)]
enum Rule<'a> {
    /// Plain union: each side keeps what lies outside the other.
    Union,
    /// Union with a tube whose bore is also drilled through the body.
    Drill { axis: &'a DrillAxis, bore: &'a [bool] },
}

enum Attempt {
    Done(Box<TriangleMesh>),
    Refine { a: Vec<bool>, b: Vec<bool> },
}

/// Union of two closed meshes.
pub fn merge_union(body: &TriangleMesh, tool: &TriangleMesh) -> Result<TriangleMesh, BooleanError> {
    fuse(body, tool, None)
}

/// Adds a tube around `axis` to `body` and clears its bore: the result is
/// `(body − bore) ∪ tube`. The tube walls are banded along the axis so no
/// wall triangle spans the whole body.
pub fn merge_tube(body: &TriangleMesh, axis: &DrillAxis, segments: usize) -> Result<TriangleMesh, BooleanError> {
    let axis = axis.validated()?;
    let step = std::f64::consts::TAU * axis.outer_radius / segments.max(1) as f64;
    let rings = ((axis.length / step).ceil() as usize).clamp(1, 512);
    let (tube, bore) = tube_mesh(&axis, segments, rings)?;
    fuse(body, &tube, Some((&axis, &bore)))
}

/// Merges each tube in turn.
pub fn merge_tubes(body: &TriangleMesh, axes: &[DrillAxis], segments: usize) -> Result<TriangleMesh, BooleanError> {
    let mut out = body.clone();
    for a in axes {
        out = merge_tube(&out, a, segments)?;
    }
    Ok(out)
}

fn fuse(body: &TriangleMesh, tool: &TriangleMesh, drill: Option<(&DrillAxis, &[bool])>) -> Result<TriangleMesh, BooleanError> {
    let mut a = body.clone();
    let mut b = tool.clone();
    let mut b_origin: Vec<u32> = (0..tool.triangle_count() as u32).collect();
    let diag = body.bounds().merge(&tool.bounds()).diagonal();
    let mut nudges = 0;
    let mut rounds = 0;
    loop {
        let col = match detect_collisions(&a, &b) {
            Ok(c) => c,
            Err(BooleanError::Degenerate) if nudges < PERTURB_ATTEMPTS => {
                nudges += 1;
                let d = RAY_DIRECTIONS[nudges % RAY_DIRECTIONS.len()];
                let shift = Vec3::new(d[0], d[1], d[2]) * (1e-9 * diag * nudges as f64);
                let (v, t) = b.into_parts();
                b = TriangleMesh::new(v.into_iter().map(|p| p + shift).collect(), t)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        if col.is_empty() {
            return Err(BooleanError::NoCollision);
        }
        let bore: Vec<bool>;
        let rule = match drill {
            None => Rule::Union,
            Some((axis, tags)) => {
                bore = b_origin.iter().map(|&t| tags[t as usize]).collect();
                Rule::Drill { axis, bore: &bore }
            }
        };
        match stitch(&a, &b, &col, rule)? {
            Attempt::Done(m) => return Ok(*m),
            Attempt::Refine { a: ra, b: rb } if rounds < REFINE_ROUNDS => {
                rounds += 1;
                if ra.iter().any(|&x| x) {
                    a = refine(&a, &ra).0;
                }
                if rb.iter().any(|&x| x) {
                    let (nb, origin) = refine(&b, &rb);
                    b_origin = origin.iter().map(|&t| b_origin[t as usize]).collect();
                    b = nb;
                }
            }
            Attempt::Refine { .. } => {
                return Err(BooleanError::Unmatched("fragment borders stay ambiguous after refinement".into()));
            }
        }
    }
}

/// One side's kept fragment border, paired with a polyline.
struct Seam {
    from_a: bool,
    border: Vec<u32>,
    polyline: usize,
}

fn stitch(a: &TriangleMesh, b: &TriangleMesh, col: &CollisionResult, rule: Rule) -> Result<Attempt, BooleanError> {
    let mut loop_of_point = vec![usize::MAX; col.points.len()];
    for (k, lp) in col.polylines.iter().enumerate() {
        for &i in lp {
            loop_of_point[i] = k;
        }
    }
    let mut labels_a: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut labels_b: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for s in &col.segments {
        let k = loop_of_point[s.ends[0]];
        labels_a.entry(s.tri_a).or_default().push(k);
        labels_b.entry(s.tri_b).or_default().push(k);
    }
    for l in labels_a.values_mut().chain(labels_b.values_mut()) {
        l.sort_unstable();
        l.dedup();
    }
    let mark = |m: &TriangleMesh, labels: &BTreeMap<u32, Vec<usize>>| {
        let mut v = vec![false; m.triangle_count()];
        for &t in labels.keys() {
            v[t as usize] = true;
        }
        v
    };
    let (marked_a, marked_b) = (mark(a, &labels_a), mark(b, &labels_b));
    let refine_all = || Attempt::Refine { a: marked_a.clone(), b: marked_b.clone() };
    if labels_a.values().chain(labels_b.values()).any(|l| l.len() > 1) {
        return Ok(refine_all());
    }

    let mut seams: Vec<Seam> = Vec::new();
    let mut kept: Vec<(bool, Vec<u32>)> = Vec::new();
    for (from_a, mesh, other, marked, labels) in [(true, a, b, &marked_a, &labels_a), (false, b, a, &marked_b, &labels_b)] {
        let alive: Vec<bool> = marked.iter().map(|&m| !m).collect();
        for frag in edge_components(mesh, &alive) {
            if !keep_fragment(from_a, mesh, &frag, other, rule)? {
                continue;
            }
            let (sub, old) = submesh(mesh, &frag);
            let sub_loops = match extract_boundary_loops(&sub) {
                Ok(l) => l,
                Err(_) => return Ok(refine_all()),
            };
            for lp in sub_loops {
                let border: Vec<u32> = lp.vertices.iter().map(|&v| old[v as usize]).collect();
                let mut found: Vec<usize> = Vec::new();
                for i in 0..border.len() {
                    let (u, v) = (border[i], border[(i + 1) % border.len()]);
                    let inside = frag_triangle_on(mesh, &frag, u, v);
                    match inside.and_then(|t| collide::across(mesh, u, v, t)) {
                        Some(t) => found.extend(labels.get(&t).into_iter().flatten().copied()),
                        None => return Err(BooleanError::Unmatched("fragment border is not next to a removed triangle".into())),
                    }
                }
                found.sort_unstable();
                found.dedup();
                if found.len() != 1 {
                    return Ok(refine_all());
                }
                seams.push(Seam { from_a, border, polyline: found[0] });
            }
            kept.push((from_a, frag));
        }
    }
    let mut per_loop = vec![0usize; col.polylines.len()];
    for s in &seams {
        per_loop[s.polyline] += 1;
    }
    if per_loop.iter().any(|&c| c != 2 && c != 0) {
        return Ok(refine_all());
    }

    // assemble: kept triangles, then one strip per seam
    let mut verts: Vec<Point3> = Vec::new();
    let mut map_a: HashMap<u32, u32> = HashMap::new();
    let mut map_b: HashMap<u32, u32> = HashMap::new();
    let mut map_p: HashMap<usize, u32> = HashMap::new();
    let mut tris: Vec<[u32; 3]> = Vec::new();
    let mut id = |from_a: bool, v: u32, verts: &mut Vec<Point3>| -> u32 {
        let (map, mesh) = if from_a { (&mut map_a, a) } else { (&mut map_b, b) };
        *map.entry(v).or_insert_with(|| {
            verts.push(mesh.vertex(v));
            (verts.len() - 1) as u32
        })
    };
    for (from_a, frag) in &kept {
        let mesh = if *from_a { a } else { b };
        for &t in frag {
            let tri = mesh.triangles()[t as usize];
            tris.push(tri.map(|v| id(*from_a, v, &mut verts)));
        }
    }
    for seam in &seams {
        let mesh = if seam.from_a { a } else { b };
        let line = &col.polylines[seam.polyline];
        let p: Vec<Point3> = seam.border.iter().map(|&v| mesh.vertex(v)).collect();
        let q: Vec<Point3> = line.iter().map(|&i| col.points[i].point).collect();
        let strip = stitch_loops(&p, &q)?;
        // the strip must run each border edge against the fragment
        let flip = strip
            .iter()
            .find_map(|t| match t {
                [Corner::P(x), Corner::P(y), Corner::Q(_)] => Some((seam.border[*x], seam.border[*y])),
                _ => None,
            })
            .is_some_and(|(u, v)| {
                mesh.edge_id(u, v).is_some_and(|e| {
                    mesh.edge_triangles(e).iter().any(|&t| {
                        t != crate::mesh::NO_TRIANGLE
                            && !(if seam.from_a { &marked_a } else { &marked_b })[t as usize]
                            && crate::mesh::directed(&mesh.triangles()[t as usize], u, v)
                    })
                })
            });
        for t in strip {
            let mut tri = t.map(|c| match c {
                Corner::P(i) => id(seam.from_a, seam.border[i], &mut verts),
                Corner::Q(j) => *map_p.entry(line[j]).or_insert_with(|| {
                    verts.push(col.points[line[j]].point);
                    (verts.len() - 1) as u32
                }),
            });
            if flip {
                tri.swap(1, 2);
            }
            tris.push(tri);
        }
    }
    let merged = match TriangleMesh::new(verts, tris) {
        Ok(m) => m,
        Err(MeshError::NonManifoldEdge { .. }) => return Ok(refine_all()),
        Err(e) => return Err(e.into()),
    };
    if !is_closed(&merged) || !merged.is_consistently_oriented() {
        return Err(BooleanError::NotClosed);
    }
    Ok(Attempt::Done(Box::new(merged)))
}

/// The fragment triangle holding edge `(u, v)`.
fn frag_triangle_on(mesh: &TriangleMesh, frag: &[u32], u: u32, v: u32) -> Option<u32> {
    let e = mesh.edge_id(u, v)?;
    mesh.edge_triangles(e).into_iter().find(|t| frag.binary_search(t).is_ok())
}

fn keep_fragment(from_a: bool, mesh: &TriangleMesh, frag: &[u32], other: &TriangleMesh, rule: Rule) -> Result<bool, BooleanError> {
    if let Rule::Drill { bore, .. } = rule {
        // the bore wall bounds the drilled hole wherever it runs
        if !from_a && frag.iter().any(|&t| bore[t as usize]) {
            return Ok(true);
        }
    }
    let p = fragment_sample(mesh, frag, other).ok_or(BooleanError::Ambiguous)?;
    let inside = point_inside(other, &p).ok_or(BooleanError::Ambiguous)?;
    if inside {
        return Ok(false);
    }
    if let (true, Rule::Drill { axis, .. }) = (from_a, rule) {
        return Ok(!axis.in_bore(&p, 0.0));
    }
    Ok(true)
}
