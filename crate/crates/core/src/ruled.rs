//! Ruled strips between two point loops.
//!
//! Each strip triangle uses one segment of one loop and two spans to the
//! other loop. Choosing the strip is a shortest path through the `m × n`
//! grid of spans `P_i Q_j`, where moving up (in `i`) consumes a `P` segment
//! and moving right (in `j`) consumes a `Q` segment. Both loops are opened
//! at `P_0` / `Q_0` and the remaining quad is closed with two triangles.

use thiserror::Error;

use crate::geometry::{Point3, Vec3};
use crate::mesh::{extract_boundary_loops, is_closed, MeshError, TriangleMesh};

#[derive(Debug, Error)]
pub enum RuledError {
    #[error("loops need at least 2 points each, got {m} and {n}")]
    TooShort { m: usize, n: usize },
    #[error("C({total}, {choose}) does not fit in 128 bits")]
    CountOverflow { total: usize, choose: usize },
    #[error("path is not a monotone walk from (0, 0) to ({0}, {1})")]
    MalformedPath(usize, usize),
    #[error("{which} surface has {loops} boundary loops; exactly one is required")]
    BoundaryCount { which: &'static str, loops: usize },
    #[error("joined shells are not closed")]
    NotClosed,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Two opened loops; `P_0` follows `P_{m-1}` and `Q_0` follows `Q_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopPair {
    pub p: Vec<Point3>,
    pub q: Vec<Point3>,
}

impl LoopPair {
    pub fn span(&self, i: usize, j: usize) -> f64 {
        (self.p[i] - self.q[j]).norm()
    }
}

/// Normal-like vector of a closed polygon (twice its vector area).
fn vector_area(points: &[Point3]) -> Vec3 {
    let n = points.len();
    let c = points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords) / n as f64;
    (0..n).map(|i| (points[i].coords - c).cross(&(points[(i + 1) % n].coords - c))).sum()
}

/// Order in which to read `q` so it starts at the point nearest `p[0]` and
/// runs the same way around as `p`.
pub fn align_order(p: &[Point3], q: &[Point3]) -> Vec<usize> {
    let n = q.len();
    let start = (0..n).min_by(|&a, &b| (q[a] - p[0]).norm_squared().total_cmp(&(q[b] - p[0]).norm_squared())).unwrap_or(0);
    let reverse = vector_area(p).dot(&vector_area(q)) < 0.0;
    (0..n).map(|k| if reverse { (start + n - k) % n } else { (start + k) % n }).collect()
}

pub fn align_loops(p: &[Point3], q: &[Point3]) -> LoopPair {
    let order = align_order(p, q);
    LoopPair { p: p.to_vec(), q: order.iter().map(|&k| q[k]).collect() }
}

/// Number of monotone span sequences, `C(m + n − 2, m − 1)`.
pub fn count_sequences(m: usize, n: usize) -> Result<u128, RuledError> {
    if m < 2 || n < 2 {
        return Err(RuledError::TooShort { m, n });
    }
    let overflow = || RuledError::CountOverflow { total: m + n - 2, choose: m - 1 };
    let mut c: u128 = 1;
    // C(n - 1 + k, k) from C(n - 2 + k, k - 1)
    for k in 1..m as u128 {
        c = c.checked_mul(n as u128 - 1 + k).ok_or_else(overflow)? / k;
    }
    Ok(c)
}

/// Where the best path into a node came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prev {
    Start,
    /// From `(i - 1, j)`.
    Below,
    /// From `(i, j - 1)`.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanLabel {
    pub length: f64,
    pub dis: f64,
    pub prev: Prev,
}

/// Labels for every node of the span grid, row-major in `i`.
#[derive(Debug, Clone)]
pub struct LabelGrid {
    pub m: usize,
    pub n: usize,
    pub labels: Vec<SpanLabel>,
}

impl LabelGrid {
    pub fn label(&self, i: usize, j: usize) -> &SpanLabel {
        &self.labels[i * self.n + j]
    }

    /// Accumulated distance at the target node; the source contributes 0.
    pub fn target_dis(&self) -> f64 {
        self.label(self.m - 1, self.n - 1).dis
    }

    /// Sum of every span on the optimal path, source included.
    pub fn total_span_length(&self) -> f64 {
        self.target_dis() + self.label(0, 0).length
    }

    /// Nodes of the optimal path from `(0, 0)` to `(m − 1, n − 1)`.
    pub fn path(&self) -> Vec<(usize, usize)> {
        let (mut i, mut j) = (self.m - 1, self.n - 1);
        let mut path = vec![(i, j)];
        loop {
            match self.label(i, j).prev {
                Prev::Start => break,
                Prev::Below => i -= 1,
                Prev::Left => j -= 1,
            }
            path.push((i, j));
        }
        path.reverse();
        path
    }
}

/// Fills the span grid: the first row and column have a single
/// predecessor, every other node takes the cheaper of below and left, with
/// ties going left.
pub fn label_setting_shortest_path(pair: &LoopPair) -> Result<LabelGrid, RuledError> {
    let (m, n) = (pair.p.len(), pair.q.len());
    if m < 2 || n < 2 {
        return Err(RuledError::TooShort { m, n });
    }
    let mut labels: Vec<SpanLabel> = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let length = pair.span(i, j);
            let (dis, prev) = match (i, j) {
                (0, 0) => (0.0, Prev::Start),
                (0, _) => (labels[j - 1].dis + length, Prev::Left),
                (_, 0) => (lab(&labels, n, i - 1, 0).dis + length, Prev::Below),
                _ => {
                    let below = lab(&labels, n, i - 1, j).dis;
                    let left = lab(&labels, n, i, j - 1).dis;
                    if below < left {
                        (below + length, Prev::Below)
                    } else {
                        (left + length, Prev::Left)
                    }
                }
            };
            labels.push(SpanLabel { length, dis, prev });
        }
    }
    Ok(LabelGrid { m, n, labels })
}

fn lab(labels: &[SpanLabel], n: usize, i: usize, j: usize) -> &SpanLabel {
    &labels[i * n + j]
}

/// A vertex of a strip triangle: index into `p` or `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Corner {
    P(usize),
    Q(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuledStrip {
    pub m: usize,
    pub n: usize,
    pub triangles: Vec<[Corner; 3]>,
}

impl RuledStrip {
    /// The two triangles over the quad `P_{m−1} P_0 Q_0 Q_{n−1}`.
    pub fn closing_triangles(&self) -> [[Corner; 3]; 2] {
        let (m, n) = (self.m, self.n);
        [[Corner::P(0), Corner::P(m - 1), Corner::Q(n - 1)], [Corner::P(0), Corner::Q(n - 1), Corner::Q(0)]]
    }

    /// Open strip followed by the closing pair.
    pub fn closed_triangles(&self) -> Vec<[Corner; 3]> {
        let mut t = self.triangles.clone();
        t.extend(self.closing_triangles());
        t
    }
}

/// One triangle per arc: `(P_{i+1}, P_i, Q_j)` going up and
/// `(P_i, Q_j, Q_{j+1})` going right.
pub fn path_to_strip(m: usize, n: usize, path: &[(usize, usize)]) -> Result<RuledStrip, RuledError> {
    let bad = RuledError::MalformedPath(m.saturating_sub(1), n.saturating_sub(1));
    if m < 2 || n < 2 {
        return Err(RuledError::TooShort { m, n });
    }
    if path.len() != m + n - 1 || path.first() != Some(&(0, 0)) || path.last() != Some(&(m - 1, n - 1)) {
        return Err(bad);
    }
    let mut triangles = Vec::with_capacity(m + n - 2);
    for w in path.windows(2) {
        let ((i, j), (a, b)) = (w[0], w[1]);
        if (a, b) == (i + 1, j) {
            triangles.push([Corner::P(i + 1), Corner::P(i), Corner::Q(j)]);
        } else if (a, b) == (i, j + 1) {
            triangles.push([Corner::P(i), Corner::Q(j), Corner::Q(j + 1)]);
        } else {
            return Err(bad);
        }
    }
    Ok(RuledStrip { m, n, triangles })
}

/// Aligns `q` to `p` and returns the optimal closed strip, with `Q`
/// indices referring to the caller's original `q` order.
pub fn stitch_loops(p: &[Point3], q: &[Point3]) -> Result<Vec<[Corner; 3]>, RuledError> {
    let order = align_order(p, q);
    let pair = LoopPair { p: p.to_vec(), q: order.iter().map(|&k| q[k]).collect() };
    let grid = label_setting_shortest_path(&pair)?;
    let strip = path_to_strip(pair.p.len(), pair.q.len(), &grid.path())?;
    Ok(strip
        .closed_triangles()
        .into_iter()
        .map(|t| {
            t.map(|c| match c {
                Corner::Q(j) => Corner::Q(order[j]),
                c => c,
            })
        })
        .collect())
}

/// Joins an inner and an outer shell, each with one border, into a closed
/// body. The inner shell is flipped so the body's normals face out; the
/// strip is wound to match.
pub fn connect_shells(inner: &TriangleMesh, outer: &TriangleMesh) -> Result<TriangleMesh, RuledError> {
    let inner_f = inner.flipped();
    let ib = extract_boundary_loops(&inner_f)?;
    let ob = extract_boundary_loops(outer)?;
    if ib.len() != 1 {
        return Err(RuledError::BoundaryCount { which: "inner", loops: ib.len() });
    }
    if ob.len() != 1 {
        return Err(RuledError::BoundaryCount { which: "outer", loops: ob.len() });
    }
    let (pl, ql) = (&ib[0].vertices, &ob[0].vertices);
    let strip = stitch_loops(&ib[0].points(&inner_f), &ob[0].points(outer))?;
    let offset = inner_f.vertex_count() as u32;
    let id = |c: Corner| match c {
        Corner::P(i) => pl[i],
        Corner::Q(j) => ql[j] + offset,
    };
    let mut tris: Vec<[u32; 3]> = strip.iter().map(|t| t.map(id)).collect();
    // an up-move triangle (P_{i+1}, P_i, Q_j) runs the inner border from
    // P_{i+1} to P_i; the shell must run it the other way
    let first_p = strip.iter().find_map(|t| match t {
        [Corner::P(a), Corner::P(b), Corner::Q(_)] => Some((pl[*a], pl[*b])),
        _ => None,
    });
    if let Some((a, b)) = first_p {
        let e = inner_f.edge_id(a, b).ok_or(RuledError::NotClosed)?;
        let same = inner_f.edge_triangles(e).iter().any(|&t| {
            t != crate::mesh::NO_TRIANGLE && crate::mesh::directed(&inner_f.triangles()[t as usize], a, b)
        });
        if same {
            for t in &mut tris {
                t.swap(1, 2);
            }
        }
    }
    let body = inner_f.disjoint_union(outer);
    let (v, mut all) = body.into_parts();
    all.extend(tris);
    let joined = TriangleMesh::new(v, all)?;
    if !is_closed(&joined) {
        return Err(RuledError::NotClosed);
    }
    Ok(joined)
}
