//! Outer shell construction.
//!
//! An unsigned distance field of the inner surface is sampled on a regular
//! grid, the isosurface at the template thickness is extracted with marching
//! cubes, and the part of that closed shell lying on the outward side of the
//! inner surface is cut free along the projected inner border.

mod tables;

use std::collections::HashMap;
use std::io::{self, BufRead, Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::contour::ContourLoop;
use crate::geometry::{Point3, Vec3};
use crate::mesh::{connected_components, submesh, BoundaryLoop, TriangleMesh};
use crate::segmentation::{self, SegmentationError};
use tables::{EDGE_TABLE, TRIANGLE_TABLE};

/// Default cap on grid samples (512³).
pub const DEFAULT_MAX_SAMPLES: usize = 512 * 512 * 512;
pub const DEFAULT_K_NEIGHBORS: usize = 5;

#[derive(Debug, Error)]
pub enum OffsetError {
    #[error("invalid offset parameters: {0}")]
    Params(String),
    #[error("inner surface is empty")]
    EmptyInner,
    #[error("distance grid {dims:?} has {samples} samples, above the cap of {cap}; use a larger spacing")]
    GridTooLarge { dims: [usize; 3], samples: usize, cap: usize },
    #[error("isovalue {0} does not cross the field; the isosurface is empty")]
    EmptyIsosurface(f64),
    #[error("projection ray from border vertex {vertex} misses the offset surface")]
    ProjectionMiss { vertex: u32 },
    #[error("only {0} projected border points; at least 3 are needed")]
    TooFewPoints(usize),
    #[error("both offset parts are equally far along the inner normals; cannot pick the outer side")]
    AmbiguousSide,
    #[error("malformed distance field dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetParams {
    pub thickness: f64,
    pub spacing: f64,
    pub margin: f64,
    pub max_samples: usize,
}

impl OffsetParams {
    /// Spacing `thickness / 4` and margin `thickness + 4 · spacing`.
    pub fn new(thickness: f64) -> Self {
        let spacing = thickness / 4.0;
        OffsetParams { thickness, spacing, margin: thickness + 4.0 * spacing, max_samples: DEFAULT_MAX_SAMPLES }
    }

    /// Overrides the spacing and resets the margin to match.
    pub fn with_spacing(self, spacing: f64) -> Self {
        OffsetParams { spacing, margin: self.thickness + 4.0 * spacing, ..self }
    }

    pub fn validate(&self) -> Result<(), OffsetError> {
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return Err(OffsetError::Params(format!("thickness must be positive, got {}", self.thickness)));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(OffsetError::Params(format!("spacing must be positive, got {}", self.spacing)));
        }
        if self.margin.partial_cmp(&(self.thickness + 2.0 * self.spacing)) == Some(std::cmp::Ordering::Less) || !self.margin.is_finite() {
            return Err(OffsetError::Params(format!(
                "margin {} must be at least thickness + 2 * spacing = {}",
                self.margin,
                self.thickness + 2.0 * self.spacing
            )));
        }
        Ok(())
    }
}

/// Samples on a regular grid, x varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub origin: Point3,
    pub spacing: f64,
    pub dims: [usize; 3],
    pub values: Vec<f64>,
}

impl DistanceField {
    /// Samples `f` at every grid point.
    pub fn from_fn(origin: Point3, spacing: f64, dims: [usize; 3], f: impl Fn(&Point3) -> f64 + Sync) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        let values = (0..n)
            .into_par_iter()
            .map(|i| {
                let [x, y, z] = unflatten(i, dims);
                f(&grid_point(&origin, spacing, x, y, z))
            })
            .collect();
        DistanceField { origin, spacing, dims, values }
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn value(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.index(x, y, z)]
    }

    pub fn point(&self, x: usize, y: usize, z: usize) -> Point3 {
        grid_point(&self.origin, self.spacing, x, y, z)
    }

    /// Text header (origin, spacing, dims) followed by little-endian `f32`
    /// samples.
    pub fn write_dump(&self, mut w: impl Write) -> io::Result<()> {
        let o = self.origin;
        writeln!(w, "guidesmith-field 1")?;
        writeln!(w, "origin {} {} {}", o.x, o.y, o.z)?;
        writeln!(w, "spacing {}", self.spacing)?;
        writeln!(w, "dims {} {} {}", self.dims[0], self.dims[1], self.dims[2])?;
        writeln!(w, "data f32le")?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_dump(r: impl Read) -> Result<DistanceField, OffsetError> {
        let mut r = io::BufReader::new(r);
        let mut line = String::new();
        let mut next = |r: &mut io::BufReader<_>, key: &str| -> Result<Vec<String>, OffsetError> {
            line.clear();
            r.read_line(&mut line)?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(OffsetError::Dump(format!("expected `{key}` line")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let bad = |what: &str| OffsetError::Dump(format!("bad {what}"));
        if next(&mut r, "guidesmith-field")? != ["1"] {
            return Err(bad("version"));
        }
        let o: Vec<f64> = next(&mut r, "origin")?.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| bad("origin"))?;
        let spacing: f64 = next(&mut r, "spacing")?.first().and_then(|s| s.parse().ok()).ok_or_else(|| bad("spacing"))?;
        let d: Vec<usize> = next(&mut r, "dims")?.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| bad("dims"))?;
        next(&mut r, "data")?;
        if o.len() != 3 || d.len() != 3 {
            return Err(bad("header"));
        }
        let n = d[0] * d[1] * d[2];
        let mut raw = vec![0u8; n * 4];
        r.read_exact(&mut raw)?;
        let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
        Ok(DistanceField { origin: Point3::new(o[0], o[1], o[2]), spacing, dims: [d[0], d[1], d[2]], values })
    }
}

fn grid_point(origin: &Point3, spacing: f64, x: usize, y: usize, z: usize) -> Point3 {
    origin + Vec3::new(x as f64, y as f64, z as f64) * spacing
}

fn unflatten(i: usize, dims: [usize; 3]) -> [usize; 3] {
    [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])]
}

fn grid_for(inner: &TriangleMesh, params: &OffsetParams) -> Result<(Point3, [usize; 3]), OffsetError> {
    params.validate()?;
    if inner.is_empty() {
        return Err(OffsetError::EmptyInner);
    }
    let b = inner.bounds().expanded(params.margin);
    let ext = b.extent();
    let dims = [0, 1, 2].map(|a| (ext[a] / params.spacing).ceil() as usize + 1);
    let samples = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
    if samples > params.max_samples {
        return Err(OffsetError::GridTooLarge { dims, samples, cap: params.max_samples });
    }
    Ok((b.min, dims))
}

/// Exact unsigned distance from every grid sample to the inner surface.
/// The grid covers the inner bounding box grown by `params.margin`.
pub fn build_distance_field(inner: &TriangleMesh, params: &OffsetParams) -> Result<DistanceField, OffsetError> {
    let (origin, dims) = grid_for(inner, params)?;
    let bvh = inner.bvh();
    Ok(DistanceField::from_fn(origin, params.spacing, dims, |p| bvh.closest_point(p).expect("non-empty").distance))
}

/// Like [`build_distance_field`], but samples farther than `clamp` store
/// `clamp` instead of their distance. Since distance changes by at most the
/// spacing between neighbors, any `clamp ≥ isovalue + spacing` yields the
/// same isosurface while pruning the far-field searches.
pub fn build_distance_field_clamped(inner: &TriangleMesh, params: &OffsetParams, clamp: f64) -> Result<DistanceField, OffsetError> {
    let (origin, dims) = grid_for(inner, params)?;
    let bvh = inner.bvh();
    Ok(DistanceField::from_fn(origin, params.spacing, dims, |p| {
        bvh.closest_point_within(p, clamp).map_or(clamp, |h| h.distance.min(clamp))
    }))
}

const CORNERS: [[usize; 3]; 8] =
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]];
const EDGES: [[usize; 2]; 12] =
    [[0, 1], [1, 2], [2, 3], [3, 0], [4, 5], [5, 6], [6, 7], [7, 4], [0, 4], [1, 5], [2, 6], [3, 7]];

/// Isosurface at `isovalue` with vertices shared across cubes and
/// triangles facing increasing field value.
pub fn marching_cubes(field: &DistanceField, isovalue: f64) -> Result<TriangleMesh, OffsetError> {
    let [nx, ny, nz] = field.dims;
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(OffsetError::EmptyIsosurface(isovalue));
    }
    // a sample exactly at the isovalue counts as outside; nudge so the
    // crossing never lands on the sample itself
    let nudge = 1e-9 * field.spacing;
    let value = |x: usize, y: usize, z: usize| {
        let v = field.value(x, y, z);
        if v == isovalue {
            v + nudge
        } else {
            v
        }
    };
    let mut vertices: Vec<Point3> = Vec::new();
    let mut edge_vertex: HashMap<usize, u32> = HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    for z in 0..nz - 1 {
        for y in 0..ny - 1 {
            for x in 0..nx - 1 {
                let corner = CORNERS.map(|[dx, dy, dz]| (x + dx, y + dy, z + dz));
                let vals = corner.map(|(a, b, c)| value(a, b, c));
                let case = (0..8).filter(|&k| vals[k] < isovalue).fold(0usize, |acc, k| acc | 1 << k);
                if EDGE_TABLE[case] == 0 {
                    continue;
                }
                let mut vid = [u32::MAX; 12];
                for (e, [c0, c1]) in EDGES.iter().enumerate() {
                    if EDGE_TABLE[case] & (1 << e) == 0 {
                        continue;
                    }
                    // canonical orientation: lower grid corner first
                    let (lo, hi) = if corner[*c0] < corner[*c1] { (*c0, *c1) } else { (*c1, *c0) };
                    let (a, b) = (corner[lo], corner[hi]);
                    let axis = if a.0 != b.0 {
                        0
                    } else if a.1 != b.1 {
                        1
                    } else {
                        2
                    };
                    let key = 3 * field.index(a.0, a.1, a.2) + axis;
                    vid[e] = *edge_vertex.entry(key).or_insert_with(|| {
                        let (va, vb) = (vals[lo], vals[hi]);
                        let t = (isovalue - va) / (vb - va);
                        let pa = field.point(a.0, a.1, a.2);
                        let pb = field.point(b.0, b.1, b.2);
                        vertices.push(pa + (pb - pa) * t);
                        (vertices.len() - 1) as u32
                    });
                }
                for tri in TRIANGLE_TABLE[case].chunks(3) {
                    if tri[0] < 0 {
                        break;
                    }
                    // the table winds toward the low side
                    triangles.push([vid[tri[0] as usize], vid[tri[2] as usize], vid[tri[1] as usize]]);
                }
            }
        }
    }
    if triangles.is_empty() {
        return Err(OffsetError::EmptyIsosurface(isovalue));
    }
    TriangleMesh::new(vertices, triangles).map_err(|e| OffsetError::Params(format!("isosurface topology: {e}")))
}

/// Casts rays from every `sampling_step`-th border vertex along the mean
/// vertex normal of a centered window of `k_neighbors` border vertices and
/// keeps the first hit on `offset`.
pub fn project_border_points(
    inner_boundary: &BoundaryLoop,
    inner: &TriangleMesh,
    offset: &TriangleMesh,
    sampling_step: usize,
    k_neighbors: usize,
) -> Result<ContourLoop, OffsetError> {
    if sampling_step == 0 {
        return Err(OffsetError::Params("sampling step must be at least 1".into()));
    }
    let n = inner_boundary.len();
    let picked: Vec<usize> = (0..n).step_by(sampling_step).collect();
    if picked.len() < 3 {
        return Err(OffsetError::TooFewPoints(picked.len()));
    }
    let normals = inner.vertex_normals();
    let k = k_neighbors.max(1);
    let before = (k - 1) / 2;
    let bvh = offset.bvh();
    let points = picked
        .par_iter()
        .map(|&i| {
            let v = inner_boundary.vertices[i];
            let dir: Vec3 = (0..k).map(|j| normals[inner_boundary.vertices[(i + n + j - before) % n] as usize]).sum();
            let dir = dir.try_normalize(0.0).ok_or(OffsetError::ProjectionMiss { vertex: v })?;
            let origin = inner.vertex(v);
            let hit = bvh.first_hit(&origin, &dir, 0.0).ok_or(OffsetError::ProjectionMiss { vertex: v })?;
            Ok(origin + dir * hit.t)
        })
        .collect::<Result<Vec<_>, OffsetError>>()?;
    Ok(ContourLoop::from_points(points))
}

/// Cuts `offset` along `projected_loop` and returns the part lying on the
/// outward side of `inner`: the part whose vertices sit farther along the
/// inner normals on average.
pub fn clip_outer_surface(offset: &TriangleMesh, projected_loop: &ContourLoop, inner: &TriangleMesh) -> Result<TriangleMesh, OffsetError> {
    let anchors = segmentation::closest_vertices(&projected_loop.points, offset)?;
    let edge_loop = segmentation::track_edge_loop(&anchors, offset)?;
    let distances = segmentation::compute_scalars(projected_loop, offset);
    let seed = segmentation::default_seed(projected_loop, offset);
    let signed = segmentation::assign_signs(&distances, &edge_loop, projected_loop, offset, seed)?;
    let clipped = segmentation::clip_by_scalar(&signed);
    let bvh = inner.bvh();
    let side = |m: &TriangleMesh| -> f64 {
        if m.is_empty() {
            return f64::NEG_INFINITY;
        }
        let total: f64 = m
            .vertices()
            .par_iter()
            .map(|p| {
                let hit = bvh.closest_point(p).expect("non-empty inner");
                (p - hit.point).dot(&inner.triangle_normal(hit.triangle))
            })
            .sum();
        total / m.vertex_count() as f64
    };
    let a = side(&clipped.region.mesh);
    let b = side(&clipped.complement.mesh);
    let tol = 1e-9 * offset.bounds().diagonal();
    if (a - b).abs() <= tol {
        return Err(OffsetError::AmbiguousSide);
    }
    let chosen = if a > b { clipped.region.mesh } else { clipped.complement.mesh };
    let comps = connected_components(&chosen);
    if comps.len() <= 1 {
        return Ok(chosen);
    }
    let largest = comps.iter().max_by_key(|c| c.len()).expect("non-empty");
    Ok(submesh(&chosen, largest).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{flat_grid, icosphere, open_hemisphere};
    use crate::geometry::point_triangle_distance;
    use crate::mesh::{euler_characteristic, extract_boundary_loops, is_closed};
    use proptest::prelude::*;

    fn brute_distance(mesh: &TriangleMesh, p: &Point3) -> f64 {
        (0..mesh.triangle_count())
            .map(|t| {
                let [a, b, c] = mesh.corners(t);
                point_triangle_distance(p, &a, &b, &c)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn field_matches_brute_force() {
        let m = TriangleMesh::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.2, 0.1), Point3::new(0.3, 0.9, -0.2)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let params = OffsetParams::new(0.5);
        let f = build_distance_field(&m, &params).unwrap();
        assert!(f.dims.iter().all(|&d| d >= 2));
        for z in 0..f.dims[2] {
            for y in 0..f.dims[1] {
                for x in 0..f.dims[0] {
                    let d = brute_distance(&m, &f.point(x, y, z));
                    assert!((f.value(x, y, z) - d).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn clamped_field_agrees_below_the_clamp() {
        let m = icosphere(1.0, 2);
        let params = OffsetParams::new(0.4);
        let exact = build_distance_field(&m, &params).unwrap();
        let clamped = build_distance_field_clamped(&m, &params, 0.5).unwrap();
        for (e, c) in exact.values.iter().zip(&clamped.values) {
            assert!(if *e < 0.5 { e == c } else { *c == 0.5 });
        }
        let a = marching_cubes(&exact, 0.4).unwrap();
        let b = marching_cubes(&clamped, 0.4).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_eq!(a.triangles(), b.triangles());
    }

    #[test]
    fn sample_on_surface_and_sphere_center() {
        let s = icosphere(1.0, 3);
        let f = DistanceField::from_fn(Point3::new(-1.0, -1.0, -1.0), 1.0, [3, 3, 3], |p| s.bvh().closest_point(p).unwrap().distance);
        assert!((f.value(1, 1, 1) - 1.0).abs() < 0.01);
        let v = s.vertex(0);
        assert!(s.bvh().closest_point(&v).unwrap().distance < 1e-12);
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let g = flat_grid(2, 2, 100.0);
        let params = OffsetParams { max_samples: 1000, ..OffsetParams::new(1.0) };
        assert!(matches!(build_distance_field(&g, &params), Err(OffsetError::GridTooLarge { .. })));
    }

    #[test]
    fn analytic_sphere_isosurface() {
        let h = 0.1;
        let f = DistanceField::from_fn(Point3::new(-1.5, -1.5, -1.5), h, [31, 31, 31], |p| p.coords.norm());
        let m = marching_cubes(&f, 1.0).unwrap();
        assert!(is_closed(&m));
        assert_eq!(euler_characteristic(&m), 2);
        assert!(m.is_consistently_oriented());
        // faces point toward increasing distance: outward
        assert!(m.signed_volume() > 0.0);
        for p in m.vertices() {
            assert!((p.coords.norm() - 1.0).abs() <= h * 3f64.sqrt() / 2.0);
        }
    }

    #[test]
    fn point_field_gives_a_sphere() {
        let f = DistanceField::from_fn(Point3::new(-2.0, -2.0, -2.0), 0.25, [17, 17, 17], |p| (p - Point3::new(0.1, -0.05, 0.02)).norm());
        let m = marching_cubes(&f, 1.3).unwrap();
        assert!(is_closed(&m));
        assert_eq!(euler_characteristic(&m), 2);
    }

    #[test]
    fn isovalue_outside_range_is_empty() {
        let f = DistanceField::from_fn(Point3::origin(), 1.0, [4, 4, 4], |p| 1.0 + p.x);
        assert!(matches!(marching_cubes(&f, 0.5), Err(OffsetError::EmptyIsosurface(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_fields_give_closed_surfaces(values in proptest::collection::vec(0.0f64..1.0, 216)) {
            // a random 6³ interior wrapped in a layer above the isovalue
            let f = DistanceField::from_fn(Point3::origin(), 1.0, [8, 8, 8], |p| {
                let (x, y, z) = (p.x as usize, p.y as usize, p.z as usize);
                if [x, y, z].iter().any(|&c| c == 0 || c == 7) {
                    2.0
                } else {
                    values[(x - 1) + 6 * ((y - 1) + 6 * (z - 1))]
                }
            });
            if let Ok(m) = marching_cubes(&f, 0.5) {
                prop_assert!(is_closed(&m));
                prop_assert!(m.is_consistently_oriented());
            }
        }
    }

    #[test]
    fn dump_round_trip() {
        let f = DistanceField::from_fn(Point3::new(1.0, 2.0, 3.0), 0.5, [3, 4, 5], |p| p.x + p.y * p.z);
        let mut buf = Vec::new();
        f.write_dump(&mut buf).unwrap();
        let g = DistanceField::read_dump(buf.as_slice()).unwrap();
        assert_eq!(g.dims, f.dims);
        assert_eq!(g.origin, f.origin);
        for (a, b) in f.values.iter().zip(&g.values) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    fn flat_patch() -> TriangleMesh {
        let g = flat_grid(10, 10, 1.0);
        let (v, t) = g.into_parts();
        TriangleMesh::new(v.into_iter().map(|p| Point3::new(p.x - 5.0, p.y - 5.0, 0.0)).collect(), t).unwrap()
    }

    #[test]
    fn flat_patch_projects_straight_up() {
        let inner = flat_patch();
        let t = 1.0;
        // the offset plane stands in for the isosurface
        let plane = TriangleMesh::new(
            vec![Point3::new(-20.0, -20.0, t), Point3::new(20.0, -20.0, t), Point3::new(20.0, 20.0, t), Point3::new(-20.0, 20.0, t)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let border = extract_boundary_loops(&inner).unwrap().remove(0);
        let lp = project_border_points(&border, &inner, &plane, 1, 5).unwrap();
        assert_eq!(lp.len(), border.len());
        for (p, &v) in lp.points.iter().zip(&border.vertices) {
            let q = inner.vertex(v);
            assert!((p - (q + Vec3::z() * t)).norm() < 1e-12);
        }
        assert!(matches!(project_border_points(&border, &inner, &plane, border.len(), 5), Err(OffsetError::TooFewPoints(1))));
    }

    #[test]
    fn flat_patch_keeps_upper_sheet() {
        let inner = flat_patch();
        let params = OffsetParams::new(1.0);
        let field = build_distance_field(&inner, &params).unwrap();
        let offset = marching_cubes(&field, 1.0).unwrap();
        assert!(is_closed(&offset));
        let border = extract_boundary_loops(&inner).unwrap().remove(0);
        let lp = project_border_points(&border, &inner, &offset, 2, 5).unwrap();
        let outer = clip_outer_surface(&offset, &lp, &inner).unwrap();
        assert!(outer.vertices().iter().all(|p| p.z > 0.5));
        assert_eq!(extract_boundary_loops(&outer).unwrap().len(), 1);
        // flipped normals select the other part: lower sheet plus the rim
        let lower = clip_outer_surface(&offset, &lp, &inner.flipped()).unwrap();
        let mean_z = lower.vertices().iter().map(|p| p.z).sum::<f64>() / lower.vertex_count() as f64;
        assert!(mean_z < 0.0);
        assert!((lower.area() + outer.area() - offset.area()).abs() < 1e-9 * offset.area());
    }

    #[test]
    fn hemisphere_offset_cap() {
        let inner = open_hemisphere(1.0, 12, 48);
        let t = 0.25;
        let params = OffsetParams::new(t);
        let field = build_distance_field(&inner, &params).unwrap();
        let offset = marching_cubes(&field, t).unwrap();
        for p in offset.vertices() {
            assert!((brute_distance(&inner, p) - t).abs() <= params.spacing * 3f64.sqrt());
        }
        let border = extract_boundary_loops(&inner).unwrap().remove(0);
        let lp = project_border_points(&border, &inner, &offset, 1, 5).unwrap();
        for p in &lp.points {
            assert!((p.coords.norm() - (1.0 + t)).abs() < params.spacing);
        }
        let outer = clip_outer_surface(&offset, &lp, &inner).unwrap();
        assert_eq!(extract_boundary_loops(&outer).unwrap().len(), 1);
        assert!(outer.vertices().iter().all(|p| p.coords.norm() > 1.0));
    }

    #[test]
    fn isosurface_ignores_inner_tessellation() {
        let coarse = open_hemisphere(1.0, 16, 64);
        let fine = open_hemisphere(1.0, 32, 128);
        let params = OffsetParams::new(0.25);
        let a = marching_cubes(&build_distance_field(&coarse, &params).unwrap(), 0.25).unwrap();
        let b = marching_cubes(&build_distance_field(&fine, &params).unwrap(), 0.25).unwrap();
        let ratio = b.vertex_count() as f64 / a.vertex_count() as f64;
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }
}
