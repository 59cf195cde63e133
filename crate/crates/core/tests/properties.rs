//! Property tests for the invariants each stage promises.

use std::collections::HashMap;

use guidesmith::boolean::{merge_union, point_inside};
use guidesmith::contour::{project_to_surface, resample_spline, ContourLoop};
use guidesmith::fixtures::{icosphere, slab, uv_sphere};
use guidesmith::geometry::point_triangle_distance;
use guidesmith::mesh::{euler_characteristic, is_closed, mesh_from_stl, write_stl_binary};
use guidesmith::ruled::{label_setting_shortest_path, path_to_strip, Corner, LoopPair};
use guidesmith::segmentation::{clip_by_scalar, compute_scalars, compute_scalars_brute, segment, ScalarMesh, VertexOrigin};
use guidesmith::tube::{make_rod, make_tube, DrillAxis};
use guidesmith::{Point3, TriangleMesh, Vec3};
use proptest::prelude::*;

fn point(r: f64) -> impl Strategy<Value = Point3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-zero", |(x, y, z)| x * x + y * y + z * z > 0.01)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
}

/// Smallest span sum over all monotone paths, source span excluded.
fn enumerate(pair: &LoopPair, i: usize, j: usize) -> f64 {
    let (m, n) = (pair.p.len(), pair.q.len());
    if (i, j) == (m - 1, n - 1) {
        return 0.0;
    }
    let up = if i + 1 < m { pair.span(i + 1, j) + enumerate(pair, i + 1, j) } else { f64::INFINITY };
    let right = if j + 1 < n { pair.span(i, j + 1) + enumerate(pair, i, j + 1) } else { f64::INFINITY };
    up.min(right)
}

/// A ring of `k` points around `axis` through `center`.
fn ring(center: Point3, axis: Vec3, radius: f64, k: usize, phase: f64) -> Vec<Point3> {
    let u = axis.cross(&Vec3::new(0.3, 0.5, 0.8)).normalize();
    let v = axis.cross(&u);
    (0..k)
        .map(|i| {
            let a = phase + std::f64::consts::TAU * i as f64 / k as f64;
            center + (u * a.cos() + v * a.sin()) * radius
        })
        .collect()
}

fn contour_on_sphere(mesh: &TriangleMesh, axis: Vec3, polar_deg: f64, k: usize) -> ContourLoop {
    let a = polar_deg.to_radians();
    let controls = ring(Point3::from(axis * a.cos()), axis, a.sin(), k, 0.1);
    project_to_surface(&resample_spline(&controls, 40.0).unwrap(), mesh, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn label_setting_is_optimal(p in prop::collection::vec(point(5.0), 2..7), q in prop::collection::vec(point(5.0), 2..7)) {
        let (m, n) = (p.len(), q.len());
        let pair = LoopPair { p, q };
        let grid = label_setting_shortest_path(&pair).unwrap();
        let best = enumerate(&pair, 0, 0);
        prop_assert!((grid.target_dis() - best).abs() <= 1e-12 * best.max(1.0));
        prop_assert_eq!(grid.total_span_length(), grid.target_dis() + pair.span(0, 0));
        let strip = path_to_strip(m, n, &grid.path()).unwrap();
        prop_assert_eq!(strip.triangles.len(), m + n - 2);
    }

    #[test]
    fn closed_strip_runs_every_border_edge_once(m in 2usize..12, n in 2usize..12, seed in 0u64..1000) {
        let pair = LoopPair {
            p: ring(Point3::origin(), Vec3::z(), 1.0, m, seed as f64),
            q: ring(Point3::new(0.0, 0.0, 1.0), Vec3::z(), 1.3, n, 0.7 * seed as f64),
        };
        let grid = label_setting_shortest_path(&pair).unwrap();
        let strip = path_to_strip(m, n, &grid.path()).unwrap();
        let mut uses: HashMap<(Corner, Corner), usize> = HashMap::new();
        for t in strip.closed_triangles() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let same_loop = matches!((a, b), (Corner::P(_), Corner::P(_)) | (Corner::Q(_), Corner::Q(_)));
                if same_loop {
                    *uses.entry((a, b)).or_default() += 1;
                }
            }
        }
        prop_assert_eq!(uses.len(), m + n);
        prop_assert!(uses.values().all(|&c| c == 1));
    }

    #[test]
    fn clipping_conserves_area_and_zeroes_crossings(normal in unit(), offset in -0.8..0.8f64) {
        let mesh = icosphere(1.0, 3);
        let field = |p: &Point3| p.coords.dot(&normal) - offset;
        let c = clip_by_scalar(&ScalarMesh { mesh: &mesh, scalar: mesh.vertices().iter().map(field).collect() });
        let area = c.region.mesh.area() + c.complement.mesh.area();
        prop_assert!((area - mesh.area()).abs() < 1e-9 * mesh.area());
        for part in [&c.region, &c.complement] {
            for (v, o) in part.origin.iter().enumerate() {
                if let VertexOrigin::OnEdge { t, .. } = o {
                    prop_assert!((0.0..=1.0).contains(t));
                    prop_assert!(field(&part.mesh.vertex(v as u32)).abs() < 1e-12);
                }
            }
        }
        // region corners are never on the positive side
        for (v, o) in c.region.origin.iter().enumerate() {
            if let VertexOrigin::Original(_) = o {
                prop_assert!(field(&c.region.mesh.vertex(v as u32)) < 0.0);
            }
        }
    }

    #[test]
    fn accelerated_scalars_are_exact(axis in unit(), polar in 15.0..75.0f64) {
        let mesh = icosphere(1.0, 3);
        let contour = contour_on_sphere(&mesh, axis, polar, 7);
        let fast = compute_scalars(&contour, &mesh);
        let slow = compute_scalars_brute(&contour, &mesh);
        prop_assert_eq!(fast.distance, slow.distance);
    }

    #[test]
    fn segmentation_splits_the_surface(axis in unit(), polar in 20.0..70.0f64) {
        let mesh = uv_sphere(1.0, 24, 48);
        let contour = contour_on_sphere(&mesh, axis, polar, 8);
        let cut = segment(&mesh, &contour, Some(Point3::from(axis))).unwrap();
        let total = cut.region.area() + cut.complement.area();
        prop_assert!((total - mesh.area()).abs() < 1e-9 * mesh.area());
        // the seeded cap is on the axis side of the contour plane
        let plane = polar.to_radians().cos();
        for p in cut.region.vertices() {
            prop_assert!(p.coords.dot(&axis) > plane - 0.1);
        }
        // each border vertex lies on the contour's loop of edges
        prop_assert!(cut.boundary.len() >= 3);
    }

    #[test]
    fn spline_interpolates_controls(jitter in prop::collection::vec(-0.2..0.2f64, 8), k in 3usize..8) {
        let controls: Vec<Point3> = ring(Point3::origin(), Vec3::z(), 2.0, k, 0.0)
            .into_iter()
            .zip(&jitter)
            .map(|(p, j)| p + Vec3::new(*j, -*j, *j))
            .collect();
        let samples = resample_spline(&controls, 10.0).unwrap();
        for c in &controls {
            prop_assert!(samples.points.contains(c));
        }
        prop_assert!(samples.max_gap() <= 0.1 + 1e-9);
    }

    #[test]
    fn tubes_are_closed_annuli(
        entry in point(10.0),
        dir in unit(),
        inner in 0.2..2.0f64,
        wall in 0.1..2.0f64,
        length in 0.5..20.0f64,
        segments in 8usize..80,
    ) {
        let axis = DrillAxis { entry, direction: dir, inner_radius: inner, outer_radius: inner + wall, length };
        let tube = make_tube(&axis, segments).unwrap();
        prop_assert_eq!(tube.triangle_count(), 8 * segments);
        prop_assert!(is_closed(&tube));
        prop_assert_eq!(euler_characteristic(&tube), 0);
        let expected = std::f64::consts::PI * ((inner + wall).powi(2) - inner * inner) * length;
        // the polygonal annulus is a little smaller than the round one
        prop_assert!(tube.signed_volume() > 0.9 * expected && tube.signed_volume() <= expected);
        for p in tube.vertices() {
            let r = p - entry;
            let h = r.dot(&dir);
            let radial = (r - dir * h).norm();
            let on_radius = (radial - inner).abs() < 1e-9 || (radial - inner - wall).abs() < 1e-9;
            let on_end = h.abs() < 1e-9 || (h - length).abs() < 1e-9;
            prop_assert!(on_radius && on_end);
        }
    }

    #[test]
    fn stl_round_trip_keeps_topology(radius in 0.5..50.0f64, level in 0u32..3, shift in point(100.0)) {
        let m = icosphere(radius, level);
        let moved = TriangleMesh::new(m.vertices().iter().map(|p| p + shift.coords).collect(), m.triangles().to_vec()).unwrap();
        let mut bytes = Vec::new();
        write_stl_binary(&moved, &mut bytes).unwrap();
        let back = mesh_from_stl(&bytes, 1e-6).unwrap();
        prop_assert_eq!(back.triangle_count(), moved.triangle_count());
        prop_assert_eq!(back.vertex_count(), moved.vertex_count());
        prop_assert!(is_closed(&back));
        prop_assert!(back.is_consistently_oriented());
    }

    #[test]
    fn closest_point_query_is_exact(q in point(3.0)) {
        let m = icosphere(1.0, 2);
        let hit = m.bvh().closest_point(&q).unwrap();
        let brute = (0..m.triangle_count())
            .map(|t| {
                let [a, b, c] = m.corners(t);
                point_triangle_distance(&q, &a, &b, &c)
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!((hit.distance - brute).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn union_is_closed_and_covers_both(x in -3.0..3.0f64, y in -3.0..3.0f64, tx in -0.3..0.3f64, ty in -0.3..0.3f64, samples in prop::collection::vec(point(6.0), 200)) {
        let plate = slab(Point3::new(-5.0, -5.0, 0.0), Point3::new(5.0, 5.0, 1.0), 6);
        let rod = make_rod(Point3::new(x, y, -2.0), Vec3::new(tx, ty, 1.0), 0.8, 5.0, 20);
        let u = merge_union(&plate, &rod).unwrap();
        prop_assert!(is_closed(&u));
        prop_assert_eq!(euler_characteristic(&u), 2);
        for p in &samples {
            let near = |m: &TriangleMesh| m.bvh().closest_point(p).unwrap().distance < 1e-3;
            if near(&plate) || near(&rod) || near(&u) {
                continue;
            }
            let expect = point_inside(&plate, p).unwrap() || point_inside(&rod, p).unwrap();
            prop_assert_eq!(point_inside(&u, p).unwrap(), expect);
        }
    }
}
