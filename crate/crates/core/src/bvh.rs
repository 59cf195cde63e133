//! Axis-aligned bounding volume hierarchy over triangles.
//!
//! Serves closest-point queries (contour projection, distance fields) and ray
//! casts (border projection, inside tests). Median splits along the widest
//! centroid axis; leaves hold at most [`LEAF_SIZE`] triangles.

use crate::geometry::{closest_point_on_triangle, ray_triangle, Aabb, Point3, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct ClosestHit {
    pub triangle: usize,
    pub point: Point3,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RayHit {
    pub triangle: usize,
    pub t: f64,
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    // Leaf when `count > 0`: triangles `order[start..start + count]`.
    // Interior: children at `start` and `start + 1`.
    start: u32,
    count: u32,
}

#[derive(Debug, Clone)]
pub struct TriangleBvh {
    corners: Vec<[Point3; 3]>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(vertices: &[Point3], triangles: &[[u32; 3]]) -> Self {
        let corners: Vec<[Point3; 3]> = triangles
            .iter()
            .map(|t| [vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize]])
            .collect();
        let centroids: Vec<Point3> = corners
            .iter()
            .map(|c| Point3::from((c[0].coords + c[1].coords + c[2].coords) / 3.0))
            .collect();
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        if !triangles.is_empty() {
            nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
            let mut stack = vec![(0usize, 0usize, triangles.len())];
            while let Some((node, lo, hi)) = stack.pop() {
                let mut bounds = Aabb::empty();
                let mut cbounds = Aabb::empty();
                for &t in &order[lo..hi] {
                    for p in &corners[t as usize] {
                        bounds.grow(p);
                    }
                    cbounds.grow(&centroids[t as usize]);
                }
                nodes[node].bounds = bounds;
                if hi - lo <= LEAF_SIZE {
                    nodes[node].start = lo as u32;
                    nodes[node].count = (hi - lo) as u32;
                    continue;
                }
                let ext = cbounds.extent();
                let axis = if ext.x >= ext.y && ext.x >= ext.z {
                    0
                } else if ext.y >= ext.z {
                    1
                } else {
                    2
                };
                let mid = (lo + hi) / 2;
                order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                    centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis])
                });
                let left = nodes.len();
                nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
                nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
                nodes[node].start = left as u32;
                stack.push((left, lo, mid));
                stack.push((left + 1, mid, hi));
            }
        }
        TriangleBvh { corners, order, nodes }
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map(|n| n.bounds).unwrap_or_else(Aabb::empty)
    }

    /// Closest surface point to `p`.
    pub fn closest_point(&self, p: &Point3) -> Option<ClosestHit> {
        self.closest_point_within(p, f64::INFINITY)
    }

    /// Closest surface point to `p` no farther than `max_distance`.
    pub fn closest_point_within(&self, p: &Point3, max_distance: f64) -> Option<ClosestHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best_d2 = if max_distance.is_finite() {
            max_distance * max_distance
        } else {
            f64::INFINITY
        };
        let mut best: Option<(usize, Point3)> = None;
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds.distance_squared(p)));
        while let Some((ni, d2)) = stack.pop() {
            if d2 > best_d2 {
                continue;
            }
            let node = &self.nodes[ni];
            if node.count > 0 {
                let s = node.start as usize;
                for &t in &self.order[s..s + node.count as usize] {
                    let c = &self.corners[t as usize];
                    let q = closest_point_on_triangle(p, &c[0], &c[1], &c[2]);
                    let dq = (p - q).norm_squared();
                    if dq < best_d2 || (dq == best_d2 && best.is_none_or(|(bt, _)| (t as usize) < bt)) {
                        best_d2 = dq;
                        best = Some((t as usize, q));
                    }
                }
            } else {
                let l = node.start as usize;
                let dl = self.nodes[l].bounds.distance_squared(p);
                let dr = self.nodes[l + 1].bounds.distance_squared(p);
                // push farther first so the nearer child pops next
                if dl <= dr {
                    stack.push((l + 1, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((l + 1, dr));
                }
            }
        }
        best.map(|(triangle, point)| ClosestHit { triangle, point, distance: best_d2.sqrt() })
    }

    /// Every two-sided hit along the ray with `t > t_min`, sorted by `t`
    /// (ties by triangle index).
    pub fn ray_hits(&self, origin: &Point3, dir: &Vec3, t_min: f64) -> Vec<RayHit> {
        let mut hits = Vec::new();
        if self.nodes.is_empty() {
            return hits;
        }
        let inv = dir.map(|v| 1.0 / v);
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.ray_entry(origin, &inv, f64::INFINITY).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &t in &self.order[s..s + node.count as usize] {
                    let c = &self.corners[t as usize];
                    if let Some(tt) = ray_triangle(origin, dir, &c[0], &c[1], &c[2], t_min) {
                        hits.push(RayHit { triangle: t as usize, t: tt });
                    }
                }
            } else {
                stack.push(node.start as usize);
                stack.push(node.start as usize + 1);
            }
        }
        hits.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.triangle.cmp(&b.triangle)));
        hits
    }

    /// Nearest hit with `t > t_min`.
    pub fn first_hit(&self, origin: &Point3, dir: &Vec3, t_min: f64) -> Option<RayHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = dir.map(|v| 1.0 / v);
        let mut best: Option<RayHit> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            let limit = best.map_or(f64::INFINITY, |b| b.t);
            if node.bounds.ray_entry(origin, &inv, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &t in &self.order[s..s + node.count as usize] {
                    let c = &self.corners[t as usize];
                    if let Some(tt) = ray_triangle(origin, dir, &c[0], &c[1], &c[2], t_min) {
                        let better = match best {
                            None => true,
                            Some(b) => tt < b.t || (tt == b.t && (t as usize) < b.triangle),
                        };
                        if better {
                            best = Some(RayHit { triangle: t as usize, t: tt });
                        }
                    }
                }
            } else {
                stack.push(node.start as usize);
                stack.push(node.start as usize + 1);
            }
        }
        best
    }

    /// Indices of triangles whose bounds overlap `query`.
    pub fn overlapping(&self, query: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &t in &self.order[s..s + node.count as usize] {
                    if Aabb::from_points(&self.corners[t as usize]).overlaps(query) {
                        out.push(t as usize);
                    }
                }
            } else {
                stack.push(node.start as usize);
                stack.push(node.start as usize + 1);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Bounding hierarchy over arbitrary primitives given by their boxes, for
/// nearest-primitive queries with a caller-supplied distance.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl Hierarchy {
    pub fn build(bounds: &[Aabb]) -> Self {
        let centers: Vec<Point3> = bounds.iter().map(Aabb::center).collect();
        let mut order: Vec<u32> = (0..bounds.len() as u32).collect();
        let mut nodes = Vec::new();
        if !bounds.is_empty() {
            nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
            let mut stack = vec![(0usize, 0usize, bounds.len())];
            while let Some((node, lo, hi)) = stack.pop() {
                let mut b = Aabb::empty();
                let mut cb = Aabb::empty();
                for &i in &order[lo..hi] {
                    b = b.merge(&bounds[i as usize]);
                    cb.grow(&centers[i as usize]);
                }
                nodes[node].bounds = b;
                if hi - lo <= LEAF_SIZE {
                    nodes[node].start = lo as u32;
                    nodes[node].count = (hi - lo) as u32;
                    continue;
                }
                let ext = cb.extent();
                let axis = if ext.x >= ext.y && ext.x >= ext.z {
                    0
                } else if ext.y >= ext.z {
                    1
                } else {
                    2
                };
                let mid = (lo + hi) / 2;
                order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                    centers[a as usize][axis].total_cmp(&centers[b as usize][axis]).then(a.cmp(&b))
                });
                let left = nodes.len();
                nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
                nodes.push(Node { bounds: Aabb::empty(), start: 0, count: 0 });
                nodes[node].start = left as u32;
                stack.push((left, lo, mid));
                stack.push((left + 1, mid, hi));
            }
        }
        Hierarchy { order, nodes }
    }

    /// Primitive minimizing `dist2(i)` (squared distance to `p`), ties to
    /// the smaller index.
    pub fn nearest(&self, p: &Point3, mut dist2: impl FnMut(usize) -> f64) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds.distance_squared(p)));
        while let Some((ni, d2)) = stack.pop() {
            if best.is_some_and(|(_, b)| d2 > b) {
                continue;
            }
            let node = &self.nodes[ni];
            if node.count > 0 {
                let s = node.start as usize;
                for &i in &self.order[s..s + node.count as usize] {
                    let i = i as usize;
                    let d = dist2(i);
                    let better = match best {
                        None => true,
                        Some((bi, bd)) => d < bd || (d == bd && i < bi),
                    };
                    if better {
                        best = Some((i, d));
                    }
                }
            } else {
                let l = node.start as usize;
                let dl = self.nodes[l].bounds.distance_squared(p);
                let dr = self.nodes[l + 1].bounds.distance_squared(p);
                if dl <= dr {
                    stack.push((l + 1, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((l + 1, dr));
                }
            }
        }
        best
    }
}

/// Nearest-point index over a fixed point set.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<Point3>,
    tree: Hierarchy,
}

impl PointIndex {
    pub fn new(points: &[Point3]) -> Self {
        let bounds: Vec<Aabb> = points.iter().map(|p| Aabb { min: *p, max: *p }).collect();
        PointIndex { points: points.to_vec(), tree: Hierarchy::build(&bounds) }
    }

    /// Index and distance of the nearest point; ties to the smaller index.
    pub fn nearest(&self, p: &Point3) -> Option<(usize, f64)> {
        self.tree.nearest(p, |i| (self.points[i] - p).norm_squared()).map(|(i, d2)| (i, d2.sqrt()))
    }
}
