//! Synthetic meshes, contours and drill axes for tests, examples and the
//! `fixtures` CLI command.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::geometry::{Point3, Vec3};
use crate::mesh::{weld, TriangleMesh};
use crate::tube::DrillAxis;

fn on_sphere(radius: f64, theta: f64, phi: f64) -> Point3 {
    Point3::new(radius * theta.sin() * phi.cos(), radius * theta.sin() * phi.sin(), radius * theta.cos())
}

/// Rings `1..=rings` of `segments` points between the pole and polar angle
/// `theta_max`, plus the pole as the last vertex; triangles wound outward.
fn cap(radius: f64, theta_max: f64, rings: usize, segments: usize) -> (Vec<Point3>, Vec<[u32; 3]>) {
    let s = segments;
    let mut v = Vec::with_capacity(rings * s + 1);
    for k in 1..=rings {
        let theta = theta_max * k as f64 / rings as f64;
        for i in 0..s {
            v.push(on_sphere(radius, theta, TAU * i as f64 / s as f64));
        }
    }
    let pole = v.len() as u32;
    v.push(Point3::new(0.0, 0.0, radius));
    let id = |k: usize, i: usize| ((k - 1) * s + i % s) as u32;
    let mut t = Vec::new();
    for i in 0..s {
        t.push([pole, id(1, i), id(1, i + 1)]);
    }
    for k in 1..rings {
        for i in 0..s {
            let (a_i, a_j, b_i, b_j) = (id(k, i), id(k, i + 1), id(k + 1, i), id(k + 1, i + 1));
            t.push([a_i, b_i, b_j]);
            t.push([a_i, b_j, a_j]);
        }
    }
    (v, t)
}

/// Open hemisphere of the given radius centered at the origin, pole on +z,
/// boundary on the equator.
pub fn open_hemisphere(radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let (v, t) = cap(radius, FRAC_PI_2, rings, segments);
    TriangleMesh::new(v, t).expect("valid cap")
}

/// Closed dome: a hemisphere with a flat disk base at `z = 0`.
pub fn dome(radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let s = segments;
    let (mut v, mut t) = cap(radius, FRAC_PI_2, rings, s);
    let equator = |i: usize| ((rings - 1) * s + i % s) as u32;
    let base_rings = rings.max(2);
    let mut prev: Vec<u32> = (0..s).map(equator).collect();
    for k in 1..base_rings {
        let r = radius * (1.0 - k as f64 / base_rings as f64);
        let start = v.len() as u32;
        for i in 0..s {
            let phi = TAU * i as f64 / s as f64;
            v.push(Point3::new(r * phi.cos(), r * phi.sin(), 0.0));
        }
        let next: Vec<u32> = (0..s as u32).map(|i| start + i).collect();
        for i in 0..s {
            let j = (i + 1) % s;
            t.push([prev[i], next[i], next[j]]);
            t.push([prev[i], next[j], prev[j]]);
        }
        prev = next;
    }
    let c = v.len() as u32;
    v.push(Point3::origin());
    for i in 0..s {
        t.push([prev[i], c, prev[(i + 1) % s]]);
    }
    TriangleMesh::new(v, t).expect("valid dome")
}

/// Latitude/longitude sphere with `2 * segments * (rings - 1)` triangles.
pub fn uv_sphere(radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let rings = rings.max(2);
    let s = segments.max(3);
    let mut v = Vec::with_capacity((rings - 1) * s + 2);
    for k in 1..rings {
        let theta = PI * k as f64 / rings as f64;
        for i in 0..s {
            v.push(on_sphere(radius, theta, TAU * i as f64 / s as f64));
        }
    }
    let north = v.len() as u32;
    v.push(Point3::new(0.0, 0.0, radius));
    let south = v.len() as u32;
    v.push(Point3::new(0.0, 0.0, -radius));
    let id = |k: usize, i: usize| ((k - 1) * s + i % s) as u32;
    let mut t = Vec::with_capacity(2 * s * (rings - 1));
    for i in 0..s {
        t.push([north, id(1, i), id(1, i + 1)]);
        t.push([south, id(rings - 1, i + 1), id(rings - 1, i)]);
    }
    for k in 1..rings - 1 {
        for i in 0..s {
            let (a_i, a_j, b_i, b_j) = (id(k, i), id(k, i + 1), id(k + 1, i), id(k + 1, i + 1));
            t.push([a_i, b_i, b_j]);
            t.push([a_i, b_j, a_j]);
        }
    }
    TriangleMesh::new(v, t).expect("valid sphere")
}

/// Subdivided icosahedron projected to a sphere: `20 * 4^subdivisions`
/// triangles.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Point3> = [
        (-1.0, g, 0.0),
        (1.0, g, 0.0),
        (-1.0, -g, 0.0),
        (1.0, -g, 0.0),
        (0.0, -1.0, g),
        (0.0, 1.0, g),
        (0.0, -1.0, -g),
        (0.0, 1.0, -g),
        (g, 0.0, -1.0),
        (g, 0.0, 1.0),
        (-g, 0.0, -1.0),
        (-g, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(Vec3::new(x, y, z).normalize()))
    .collect();
    let mut t: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, v: &mut Vec<Point3>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let m = (v[a as usize].coords + v[b as usize].coords).normalize();
                v.push(Point3::from(m));
                (v.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(t.len() * 4);
        for &[a, b, c] in &t {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        t = next;
    }
    for p in &mut v {
        *p = Point3::from(p.coords * radius);
    }
    TriangleMesh::new(v, t).expect("valid icosphere")
}

/// Open planar grid in `z = 0` from the origin, `nx * ny` cells of size
/// `cell`, normals along +z.
pub fn flat_grid(nx: usize, ny: usize, cell: f64) -> TriangleMesh {
    height_grid(nx, ny, cell, |_, _| 0.0)
}

/// Open grid centered at the origin with `z = (x² − y²) / size`.
pub fn saddle(n: usize, size: f64) -> TriangleMesh {
    let cell = size / n as f64;
    let half = size / 2.0;
    let g = height_grid(n, n, cell, |x, y| {
        let (x, y) = (x - half, y - half);
        (x * x - y * y) / size
    });
    let (v, t) = g.into_parts();
    let v = v.into_iter().map(|p| Point3::new(p.x - half, p.y - half, p.z)).collect();
    TriangleMesh::new(v, t).expect("valid saddle")
}

fn height_grid(nx: usize, ny: usize, cell: f64, z: impl Fn(f64, f64) -> f64) -> TriangleMesh {
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let (x, y) = (i as f64 * cell, j as f64 * cell);
            v.push(Point3::new(x, y, z(x, y)));
        }
    }
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut t = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(v, t).expect("valid grid")
}

/// Closed axis-aligned box from `min` to `max`; the top and bottom faces
/// are split into `n × n` cells, the sides into `n × 1`.
pub fn slab(min: Point3, max: Point3, n: usize) -> TriangleMesh {
    let n = n.max(1);
    let e = max - min;
    let mut raw: Vec<[Point3; 3]> = Vec::new();
    let mut face = |o: Point3, du: Vec3, dv: Vec3, nu: usize, nv: usize| {
        let at = |i: usize, j: usize| o + du * (i as f64 / nu as f64) + dv * (j as f64 / nv as f64);
        for j in 0..nv {
            for i in 0..nu {
                raw.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
                raw.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
            }
        }
    };
    let (x, y, z) = (Vec3::x() * e.x, Vec3::y() * e.y, Vec3::z() * e.z);
    face(min, y, x, n, n); // bottom, -z
    face(min + z, x, y, n, n); // top, +z
    face(min, x, z, n, 1); // -y
    face(min + y, z, x, 1, n); // +y
    face(min, z, y, 1, n); // -x
    face(min + x, y, z, n, 1); // +x
    let eps = 1e-9 * e.norm();
    weld(&raw, eps).into_mesh().expect("valid slab")
}

/// `count` points on a circle of polar angle `polar_deg` around the +z axis
/// of a sphere centered at the origin.
pub fn latitude_circle(radius: f64, polar_deg: f64, count: usize) -> Vec<Point3> {
    let theta = polar_deg.to_radians();
    (0..count).map(|i| on_sphere(radius, theta, TAU * (i as f64 + 0.5) / count as f64)).collect()
}

/// Axis along the outward sphere normal at the given polar/azimuth angles,
/// entering at the sphere surface.
pub fn radial_axis(radius: f64, polar_deg: f64, azimuth_deg: f64, inner: f64, outer: f64, length: f64) -> DrillAxis {
    let p = on_sphere(radius, polar_deg.to_radians(), azimuth_deg.to_radians());
    DrillAxis { entry: p, direction: p.coords.normalize(), inner_radius: inner, outer_radius: outer, length }
}

/// The dome test case: radius 10 mm, contour at 40° from the pole, and
/// up to two drill axes. One tube goes through the pole; two tubes sit
/// 18° off the pole on opposite sides.
pub fn dome_axes(radius: f64, tubes: usize) -> Vec<DrillAxis> {
    let (inner, outer, length) = (0.1 * radius, 0.2 * radius, radius);
    match tubes {
        0 => Vec::new(),
        1 => vec![radial_axis(radius, 0.0, 0.0, inner, outer, length)],
        _ => vec![
            radial_axis(radius, 18.0, 0.0, inner, outer, length),
            radial_axis(radius, 18.0, 180.0, inner, outer, length),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{euler_characteristic, extract_boundary_loops, is_closed};

    #[test]
    fn closed_fixtures_are_spheres() {
        for m in [dome(10.0, 12, 48), uv_sphere(1.0, 10, 20), icosphere(1.0, 2), slab(Point3::origin(), Point3::new(4.0, 3.0, 1.0), 5)]
        {
            assert!(is_closed(&m));
            assert!(m.is_consistently_oriented());
            assert_eq!(euler_characteristic(&m), 2);
            assert!(m.signed_volume() > 0.0);
        }
    }

    #[test]
    fn slab_volume() {
        let m = slab(Point3::new(-1.0, -1.0, 0.0), Point3::new(3.0, 2.0, 0.5), 4);
        assert!((m.signed_volume() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn hemisphere_boundary_is_the_equator() {
        let m = open_hemisphere(2.0, 8, 32);
        let loops = extract_boundary_loops(&m).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 32);
        assert!(loops[0].points(&m).iter().all(|p| p.z.abs() < 1e-12));
        assert_eq!(icosphere(1.0, 3).triangle_count(), 1280);
    }

    #[test]
    fn open_grids() {
        let g = flat_grid(4, 3, 0.5);
        assert_eq!(g.triangle_count(), 24);
        assert_eq!(extract_boundary_loops(&g).unwrap().len(), 1);
        let s = saddle(6, 2.0);
        assert_eq!(euler_characteristic(&s), 1);
    }
}
