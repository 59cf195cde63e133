//! Oriented bounding box trees over triangles.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::geometry::{Point3, Vec3};
use crate::mesh::TriangleMesh;

pub const DEFAULT_LEAF_SIZE: usize = 4;

/// A box with orthonormal `axes` (columns) and `half` extents about
/// `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Point3,
    pub axes: Matrix3<f64>,
    pub half: Vec3,
}

impl Obb {
    /// Box aligned with the principal axes of `points`.
    pub fn fit(points: &[Point3]) -> Obb {
        let n = points.len().max(1) as f64;
        let mean = points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords) / n;
        let mut cov = Matrix3::zeros();
        for p in points {
            let d = p.coords - mean;
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov / n);
        let mut axes = eig.eigenvectors;
        if !axes.iter().all(|v| v.is_finite()) {
            axes = Matrix3::identity();
        }
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in points {
            let local = axes.transpose() * p.coords;
            lo = lo.inf(&local);
            hi = hi.sup(&local);
        }
        let mid = (lo + hi) / 2.0;
        Obb { center: Point3::from(axes * mid), axes, half: (hi - lo) / 2.0 }
    }

    /// Whether `p` is inside the box grown by `slack`.
    pub fn contains(&self, p: &Point3, slack: f64) -> bool {
        let local = self.axes.transpose() * (p - self.center);
        (0..3).all(|k| local[k].abs() <= self.half[k] + slack)
    }

    /// Separating-axis test over the 15 candidate axes.
    pub fn overlaps(&self, other: &Obb) -> bool {
        let a = &self.axes;
        let b = &other.axes;
        let r = a.transpose() * b;
        let eps = 1e-12;
        let abs_r = r.map(|x| x.abs() + eps);
        let t = a.transpose() * (other.center - self.center);
        let (ha, hb) = (self.half, other.half);
        for i in 0..3 {
            let ra = ha[i];
            let rb = hb[0] * abs_r[(i, 0)] + hb[1] * abs_r[(i, 1)] + hb[2] * abs_r[(i, 2)];
            if t[i].abs() > ra + rb {
                return false;
            }
        }
        for j in 0..3 {
            let ra = ha[0] * abs_r[(0, j)] + ha[1] * abs_r[(1, j)] + ha[2] * abs_r[(2, j)];
            let rb = hb[j];
            let tj = t[0] * r[(0, j)] + t[1] * r[(1, j)] + t[2] * r[(2, j)];
            if tj.abs() > ra + rb {
                return false;
            }
        }
        for i in 0..3 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            for j in 0..3 {
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                let ra = ha[i1] * abs_r[(i2, j)] + ha[i2] * abs_r[(i1, j)];
                let rb = hb[j1] * abs_r[(i, j2)] + hb[j2] * abs_r[(i, j1)];
                let tl = (t[i2] * r[(i1, j)] - t[i1] * r[(i2, j)]).abs();
                if tl > ra + rb {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct ObbNode {
    pub obb: Obb,
    /// Children, or `None` for a leaf.
    pub children: Option<(usize, usize)>,
    /// Range into [`ObbTree::order`] covered by this node.
    pub start: usize,
    pub count: usize,
}

/// Binary tree of boxes; leaves hold at most `leaf_size` triangles.
#[derive(Debug, Clone)]
pub struct ObbTree {
    pub nodes: Vec<ObbNode>,
    pub order: Vec<u32>,
}

impl ObbTree {
    pub fn leaf_triangles(&self, node: usize) -> &[u32] {
        let n = &self.nodes[node];
        &self.order[n.start..n.start + n.count]
    }

    pub fn depth(&self) -> usize {
        fn go(t: &ObbTree, i: usize) -> usize {
            match t.nodes[i].children {
                None => 1,
                Some((a, b)) => 1 + go(t, a).max(go(t, b)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(self, 0)
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].children.is_none())
    }
}

/// Splits at the median triangle centroid along the box's longest axis.
pub fn build_obb_tree(mesh: &TriangleMesh, leaf_size: usize) -> ObbTree {
    let leaf_size = leaf_size.max(1);
    let centroids: Vec<Point3> = (0..mesh.triangle_count())
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            Point3::from((a.coords + b.coords + c.coords) / 3.0)
        })
        .collect();
    let mut tree = ObbTree { nodes: Vec::new(), order: (0..mesh.triangle_count() as u32).collect() };
    if mesh.is_empty() {
        return tree;
    }
    let mut stack = vec![(0usize, mesh.triangle_count(), usize::MAX, false)];
    while let Some((start, count, parent, second)) = stack.pop() {
        let points: Vec<Point3> = tree.order[start..start + count].iter().flat_map(|&t| mesh.corners(t as usize)).collect();
        let obb = Obb::fit(&points);
        let id = tree.nodes.len();
        tree.nodes.push(ObbNode { obb, children: None, start, count });
        if parent != usize::MAX {
            let c = tree.nodes[parent].children.get_or_insert((usize::MAX, usize::MAX));
            if second {
                c.1 = id;
            } else {
                c.0 = id;
            }
        }
        if count <= leaf_size {
            continue;
        }
        let axis = (0..3).max_by(|&i, &j| obb.half[i].total_cmp(&obb.half[j]).then(j.cmp(&i))).unwrap_or(0);
        let dir = obb.axes.column(axis).into_owned();
        let slice = &mut tree.order[start..start + count];
        slice.sort_by(|&a, &b| {
            centroids[a as usize].coords.dot(&dir).total_cmp(&centroids[b as usize].coords.dot(&dir)).then(a.cmp(&b))
        });
        let half = count / 2;
        stack.push((start + half, count - half, id, true));
        stack.push((start, half, id, false));
    }
    tree
}

/// Pairs of leaves (one per tree) whose boxes overlap.
pub fn overlapping_leaves(a: &ObbTree, b: &ObbTree) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if a.nodes.is_empty() || b.nodes.is_empty() {
        return out;
    }
    let mut stack = vec![(0usize, 0usize)];
    while let Some((i, j)) = stack.pop() {
        let (na, nb) = (&a.nodes[i], &b.nodes[j]);
        if !na.obb.overlaps(&nb.obb) {
            continue;
        }
        match (na.children, nb.children) {
            (None, None) => out.push((i, j)),
            (Some((a0, a1)), None) => {
                stack.push((a1, j));
                stack.push((a0, j));
            }
            (None, Some((b0, b1))) => {
                stack.push((i, b1));
                stack.push((i, b0));
            }
            (Some((a0, a1)), Some((b0, b1))) => {
                if na.count >= nb.count {
                    stack.push((a1, j));
                    stack.push((a0, j));
                } else {
                    stack.push((i, b1));
                    stack.push((i, b0));
                }
            }
        }
    }
    out
}
