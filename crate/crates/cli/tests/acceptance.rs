//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use guidesmith::boolean::detect_collisions;
use guidesmith::contour::{project_to_surface, resample_spline};
use guidesmith::fixtures::{dome, dome_axes, icosphere, latitude_circle, open_hemisphere, slab, uv_sphere};
use guidesmith::geometry::point_triangle_distance;
use guidesmith::mesh::{euler_characteristic, is_closed};
use guidesmith::offset::{build_distance_field, marching_cubes, OffsetParams};
use guidesmith::pipeline::{generate_template, prepare_contour, TemplateParams};
use guidesmith::ruled::{count_sequences, label_setting_shortest_path, path_to_strip, LoopPair};
use guidesmith::segmentation::{clip_by_scalar, compute_scalars, segment, ScalarMesh, VertexOrigin};
use guidesmith::tube::{make_tube, DrillAxis};
use guidesmith::{Point3, TriangleMesh, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_point(rng: &mut ChaCha8Rng, scale: f64) -> Point3 {
    Point3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

/// Minimum span sum over every monotone path, excluding the source span,
/// added in path order, and the number of paths visited.
fn enumerate_paths(pair: &LoopPair) -> (f64, u128) {
    fn go(pair: &LoopPair, i: usize, j: usize, acc: f64, best: &mut f64, count: &mut u128) {
        let (m, n) = (pair.p.len(), pair.q.len());
        if (i, j) == (m - 1, n - 1) {
            *count += 1;
            *best = best.min(acc);
            return;
        }
        if i + 1 < m {
            go(pair, i + 1, j, acc + pair.span(i + 1, j), best, count);
        }
        if j + 1 < n {
            go(pair, i, j + 1, acc + pair.span(i, j + 1), best, count);
        }
    }
    let (mut best, mut count) = (f64::INFINITY, 0);
    go(pair, 0, 0, 0.0, &mut best, &mut count);
    (best, count)
}

fn ruled_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..200 {
        let (m, n) = (rng.random_range(2..=7), rng.random_range(2..=7));
        let pair = LoopPair {
            p: (0..m).map(|_| random_point(&mut rng, 5.0)).collect(),
            q: (0..n).map(|_| random_point(&mut rng, 5.0)).collect(),
        };
        let grid = label_setting_shortest_path(&pair).map_err(|e| e.to_string())?;
        let (best, count) = enumerate_paths(&pair);
        check(grid.target_dis() == best, || format!("case {case} ({m}x{n}): label {} vs enumeration {best}", grid.target_dis()))?;
        check(count == count_sequences(m, n).unwrap(), || format!("case {case}: enumerated {count} paths"))?;
        let strip = path_to_strip(m, n, &grid.path()).map_err(|e| e.to_string())?;
        check(strip.triangles.len() == m + n - 2, || format!("case {case}: {} triangles", strip.triangles.len()))?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("200 pairs exact, {elapsed:.2?}"))
}

fn clipping_correctness() -> Outcome {
    let mesh = icosphere(1.0, 5);
    let normal = Vec3::new(0.1, 0.2, 1.0).normalize();
    let field = |p: &Point3| p.coords.dot(&normal);
    let sm = ScalarMesh { mesh: &mesh, scalar: mesh.vertices().iter().map(field).collect() };
    let c = clip_by_scalar(&sm);
    let mut worst: f64 = 0.0;
    let mut generated = 0;
    for part in [&c.region, &c.complement] {
        for (v, o) in part.origin.iter().enumerate() {
            if matches!(o, VertexOrigin::OnEdge { .. }) {
                generated += 1;
                worst = worst.max(field(&part.mesh.vertex(v as u32)).abs());
            }
        }
    }
    check(generated > 0 && worst < 1e-9, || format!("{generated} crossings, worst |scalar| {worst:e}"))?;
    let rel = (c.region.mesh.area() + c.complement.mesh.area() - mesh.area()).abs() / mesh.area();
    check(rel < 1e-6, || format!("area mismatch {rel:e}"))?;

    // one triangle with corner values (-5, 3, 8)
    let tri = TriangleMesh::new(vec![Point3::new(0.0, 0.0, 0.0), Point3::new(8.0, 0.0, 0.0), Point3::new(0.0, 13.0, 0.0)], vec![[0, 1, 2]])
        .unwrap();
    let c3 = clip_by_scalar(&ScalarMesh { mesh: &tri, scalar: vec![-5.0, 3.0, 8.0] });
    check(c3.region.mesh.triangle_count() == 1 && c3.complement.mesh.triangle_count() == 2, || "not split into three".into())?;
    let mut params: Vec<(u32, u32, f64)> = c3
        .region
        .origin
        .iter()
        .filter_map(|o| match *o {
            VertexOrigin::OnEdge { a, b, t } => Some((a, b, t)),
            _ => None,
        })
        .collect();
    params.sort_by_key(|&(a, b, _)| (a, b));
    // t runs from the lower vertex index; from the positive corner it is 1 - t on edge (0, 2)
    let from_l = params.iter().find(|p| (p.0, p.1) == (0, 1)).map(|p| p.2);
    let from_y = params.iter().find(|p| (p.0, p.1) == (0, 2)).map(|p| 1.0 - p.2);
    check(from_l == Some(5.0 / 8.0) && from_y.is_some_and(|t| (t - 8.0 / 13.0).abs() < 1e-15), || format!("{params:?}"))?;
    Ok(format!("{} triangles, {generated} crossings, max |scalar| {worst:.1e}, area rel {rel:.1e}, 5/8 and 8/13", mesh.triangle_count()))
}

/// Distance to the open upper hemisphere of radius `r` about the origin.
fn hemisphere_distance(p: &Point3, r: f64) -> f64 {
    if p.z >= 0.0 {
        (p.coords.norm() - r).abs()
    } else {
        let rho = (p.x * p.x + p.y * p.y).sqrt();
        ((rho - r).powi(2) + p.z * p.z).sqrt()
    }
}

fn offset_fidelity() -> Outcome {
    let start = Instant::now();
    let inner = open_hemisphere(10.0, 64, 256);
    let params = OffsetParams::new(2.5).with_spacing(0.625);
    let field = build_distance_field(&inner, &params).map_err(|e| e.to_string())?;
    let shell = marching_cubes(&field, 2.5).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut errors: Vec<f64> = shell.vertices().iter().map(|p| (hemisphere_distance(p, 10.0) - 2.5).abs()).collect();
    errors.sort_by(f64::total_cmp);
    let (max, median) = (errors[errors.len() - 1], errors[errors.len() / 2]);
    let bound = 0.625 * 3f64.sqrt();
    check(max <= bound, || format!("max error {max} above {bound}"))?;
    check(median < 0.3125, || format!("median error {median}"))?;
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{} vertices, max {max:.4} mm, median {median:.4} mm, {elapsed:.2?}", shell.vertex_count()))
}

/// Plain floating-point segment/triangle crossing.
fn brute_cross(p: Point3, q: Point3, a: Point3, b: Point3, c: Point3) -> bool {
    let n = (b - a).cross(&(c - a));
    let (dp, dq) = (n.dot(&(p - a)), n.dot(&(q - a)));
    if dp * dq >= 0.0 {
        return false;
    }
    let x = p + (q - p) * (dp / (dp - dq));
    let inside = |u: Point3, v: Point3| n.dot(&(v - u).cross(&(x - u))) > 0.0;
    inside(a, b) && inside(b, c) && inside(c, a)
}

fn brute_pairs(a: &TriangleMesh, b: &TriangleMesh) -> BTreeSet<(u32, u32)> {
    let mut out = BTreeSet::new();
    for ta in 0..a.triangle_count() {
        let ca = a.corners(ta);
        for tb in 0..b.triangle_count() {
            let cb = b.corners(tb);
            let hit = (0..3).any(|k| {
                brute_cross(ca[k], ca[(k + 1) % 3], cb[0], cb[1], cb[2]) || brute_cross(cb[k], cb[(k + 1) % 3], ca[0], ca[1], ca[2])
            });
            if hit {
                out.insert((ta as u32, tb as u32));
            }
        }
    }
    out
}

fn collision_fixture(rng: &mut ChaCha8Rng, case: usize) -> (TriangleMesh, TriangleMesh) {
    let inner = rng.random_range(0.3..1.0);
    let outer = inner + rng.random_range(0.2..1.0);
    let segments = rng.random_range(8..=64);
    let tilt = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 1.0);
    if case.is_multiple_of(2) {
        let n = rng.random_range(3..=12);
        let plate = slab(Point3::new(-5.0, -5.0, 0.0), Point3::new(5.0, 5.0, rng.random_range(0.5..2.0)), n);
        let entry = Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), -2.0);
        let axis = DrillAxis { entry, direction: tilt, inner_radius: inner, outer_radius: outer, length: rng.random_range(3.0..7.0) };
        (plate, make_tube(&axis, segments).unwrap())
    } else {
        let shell = icosphere(4.0, 3);
        // start outside and aim through the shell wall
        let dir = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
        let entry = Point3::from(dir * 6.0);
        let aim = -dir + tilt * 0.1;
        let axis = DrillAxis { entry, direction: aim, inner_radius: inner, outer_radius: outer, length: rng.random_range(3.0..5.0) };
        (shell, make_tube(&axis, segments).unwrap())
    }
}

fn collision_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc011);
    let (mut tested, mut loops, mut redrawn) = (0, 0, 0);
    while tested < 50 {
        let (a, b) = collision_fixture(&mut rng, tested);
        check(a.triangle_count() <= 2000 && b.triangle_count() <= 2000, || "fixture too large".into())?;
        let col = match detect_collisions(&a, &b) {
            Ok(c) => c,
            // an exactly degenerate contact is not a generic fixture
            Err(guidesmith::boolean::BooleanError::Degenerate) => {
                redrawn += 1;
                continue;
            }
            Err(e) => return Err(format!("fixture {tested}: {e}")),
        };
        let found: BTreeSet<(u32, u32)> = col.segments.iter().map(|s| (s.tri_a, s.tri_b)).collect();
        let expected = brute_pairs(&a, &b);
        check(found == expected, || format!("fixture {tested}: {} pairs vs brute force {}", found.len(), expected.len()))?;
        check(!found.is_empty(), || format!("fixture {tested} does not intersect"))?;
        let edges: BTreeSet<(usize, usize)> = col.segments.iter().map(|s| (s.ends[0].min(s.ends[1]), s.ends[0].max(s.ends[1]))).collect();
        let mut covered = 0;
        for line in &col.polylines {
            for k in 0..line.len() {
                let (u, v) = (line[k], line[(k + 1) % line.len()]);
                check(edges.contains(&(u.min(v), u.max(v))), || format!("fixture {tested}: polyline not closed at point {u}"))?;
            }
            covered += line.len();
        }
        check(covered == col.points.len(), || format!("fixture {tested}: polylines miss points"))?;
        for p in &col.points {
            let d = |m: &TriangleMesh| {
                (0..m.triangle_count())
                    .map(|t| {
                        let [x, y, z] = m.corners(t);
                        point_triangle_distance(&p.point, &x, &y, &z)
                    })
                    .fold(f64::INFINITY, f64::min)
            };
            check(d(&a) < 1e-6 && d(&b) < 1e-6, || format!("fixture {tested}: point off the surfaces"))?;
        }
        loops += col.polylines.len();
        tested += 1;
    }
    Ok(format!("50 fixtures match brute force, {loops} closed loops, {redrawn} degenerate draws replaced"))
}

fn dome_template(tubes: usize) -> Result<TriangleMesh, String> {
    let mesh = dome(10.0, 24, 96);
    let controls = latitude_circle(10.0, 40.0, 8);
    generate_template(&mesh, &controls, &TemplateParams::new(2.5), &dome_axes(10.0, tubes)).map(|t| t.mesh).map_err(|e| e.to_string())
}

fn end_to_end_watertight() -> Outcome {
    let mut found = Vec::new();
    for (tubes, euler) in [(0, 2), (1, 0), (2, -2)] {
        let m = dome_template(tubes)?;
        let chi = euler_characteristic(&m);
        check(is_closed(&m) && chi == euler, || format!("{tubes} tubes: closed {} euler {chi}", is_closed(&m)))?;
        found.push(format!("{tubes} tubes: euler {chi}"));
    }
    Ok(found.join(", "))
}

fn scalars_time(mesh: &TriangleMesh, controls: &[Point3]) -> Duration {
    // fixed sample spacing so the contour does not depend on the mesh
    let samples = resample_spline(controls, 4.0).unwrap();
    let contour = project_to_surface(&samples, mesh, Some(1.0)).unwrap();
    (0..5)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(compute_scalars(&contour, mesh));
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn cap_controls(radius: f64, alpha_deg: f64) -> Vec<Point3> {
    let a = alpha_deg.to_radians();
    (0..8)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / 8.0;
            Point3::new(radius * a.cos(), radius * a.sin() * phi.cos(), radius * a.sin() * phi.sin())
        })
        .collect()
}

fn scaling_envelope() -> Outcome {
    let controls = latitude_circle(10.0, 40.0, 8);
    let small = uv_sphere(10.0, 180, 360);
    let large = uv_sphere(10.0, 255, 508);
    let ratio_v = large.vertex_count() as f64 / small.vertex_count() as f64;
    let (ts, tl) = (scalars_time(&small, &controls), scalars_time(&large, &controls));
    let ratio = tl.as_secs_f64() / ts.as_secs_f64();
    check(ratio <= 2.5, || format!("{ratio_v:.2}x vertices took {ratio:.2}x time ({ts:?} -> {tl:?})"))?;

    let mesh = uv_sphere(50.0, 489, 1024);
    let controls = cap_controls(50.0, 14.6);
    let contour = prepare_contour(&mesh, &controls).map_err(|e| e.to_string())?;
    let border = segment(&mesh, &contour, None).map_err(|e| e.to_string())?.boundary.len();
    let template = generate_template(&mesh, &controls, &TemplateParams::new(2.5), &[]).map_err(|e| e.to_string())?;
    let total = template.timings.initial_template();
    check(is_closed(&template.mesh), || "1M template not closed".into())?;
    check(total < Duration::from_secs(60), || format!("1M-triangle template took {total:?}"))?;
    Ok(format!(
        "scalars {ratio_v:.2}x vertices -> {ratio:.2}x time; {} triangles, {border} border points, initial template {total:.2?}",
        mesh.triangle_count()
    ))
}

fn run_cli(dir: &Path, out: &str) -> Result<Vec<u8>, String> {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_owned();
    let status = Command::new(env!("CARGO_BIN_EXE_guidesmith"))
        .args(["--mesh", &p("dome.stl"), "--contour", &p("dome_contour.txt"), "--axes", &p("dome_axes_2.txt")])
        .args(["--thickness", "2.5", "--out", &p(out)])
        .status()
        .map_err(|e| e.to_string())?;
    check(status.success(), || format!("cli exited with {status}"))?;
    std::fs::read(dir.join(out)).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_guidesmith"))
        .args(["fixtures", "--out-dir", dir.path().to_str().unwrap()])
        .status()
        .map_err(|e| e.to_string())?;
    check(status.success(), || "fixtures failed".into())?;
    let (a, b) = (run_cli(dir.path(), "a.stl")?, run_cli(dir.path(), "b.stl")?);
    check(a == b, || "outputs differ".into())?;
    Ok(format!("two runs, {} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("ruled-surface optimality", ruled_optimality),
        ("clipping correctness", clipping_correctness),
        ("offset fidelity", offset_fidelity),
        ("collision oracle equivalence", collision_oracle),
        ("end-to-end watertightness", end_to_end_watertight),
        ("scaling envelope", scaling_envelope),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
