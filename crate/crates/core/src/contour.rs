//! Closed contours on a surface: Catmull–Rom resampling of sparse control
//! points, closest-point projection onto the mesh, and loop validation.

use thiserror::Error;

use crate::geometry::{closest_point_on_segment, segment_segment_distance, Point3};
use crate::mesh::TriangleMesh;

/// Samples per mean edge length used when no density is given.
pub const DEFAULT_SAMPLES_PER_EDGE: f64 = 4.0;
/// Projection distance bound, in mean edge lengths.
pub const DEFAULT_PROJECTION_BOUND: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum ContourError {
    #[error("a closed contour needs at least 3 control points, got {0}")]
    TooFewControls(usize),
    #[error("control points {0} and {1} coincide")]
    RepeatedControl(usize, usize),
    #[error("sample density must be positive and finite, got {0}")]
    BadDensity(f64),
    #[error("cannot project onto an empty mesh")]
    EmptyMesh,
    #[error("sample {sample} lies {distance:.4} mm from the surface (bound {bound:.4} mm)")]
    ProjectionTooFar { sample: usize, distance: f64, bound: f64 },
    #[error("contour collapsed to {0} distinct points after projection")]
    Collapsed(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// User control points, each with its closest surface point.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPointSet {
    pub points: Vec<Point3>,
    pub surface: Vec<Point3>,
    pub closed: bool,
}

impl ControlPointSet {
    /// Attaches raw points to `mesh` by recording their nearest surface
    /// points. The set is closed once it has three points.
    pub fn attach(points: Vec<Point3>, mesh: &TriangleMesh) -> Result<Self, ContourError> {
        if mesh.is_empty() {
            return Err(ContourError::EmptyMesh);
        }
        let bvh = mesh.bvh();
        let surface = points.iter().map(|p| bvh.closest_point(p).expect("non-empty mesh").point).collect();
        let closed = points.len() >= 3;
        Ok(ControlPointSet { points, surface, closed })
    }
}

/// Ordered closed point loop; `source[k]` is the index of the control point
/// that starts the spline segment point `k` was sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourLoop {
    pub points: Vec<Point3>,
    pub source: Vec<usize>,
}

impl ContourLoop {
    /// Wraps a plain point loop, tagging each point as its own source.
    pub fn from_points(points: Vec<Point3>) -> Self {
        let source = (0..points.len()).collect();
        ContourLoop { points, source }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Segment `i` runs from point `i` to point `i + 1` (wrapping).
    pub fn segment(&self, i: usize) -> (Point3, Point3) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    pub fn length(&self) -> f64 {
        (0..self.len()).map(|i| {
            let (a, b) = self.segment(i);
            (b - a).norm()
        }).sum()
    }

    pub fn max_gap(&self) -> f64 {
        (0..self.len()).map(|i| {
            let (a, b) = self.segment(i);
            (b - a).norm()
        }).fold(0.0, f64::max)
    }
}

/// Uniform Catmull–Rom point on segment `p1 -> p2` at `t` in `[0, 1]`.
pub fn catmull_rom(p0: &Point3, p1: &Point3, p2: &Point3, p3: &Point3, t: f64) -> Point3 {
    let m1 = (p2 - p0) * 0.5;
    let m2 = (p3 - p1) * 0.5;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    Point3::from(p1.coords * h00 + m1 * h10 + p2.coords * h01 + m2 * h11)
}

/// Samples the closed Catmull–Rom spline through `controls` so consecutive
/// samples are at most `1 / density` apart. Every control point appears
/// verbatim as the first sample of its segment.
pub fn resample_spline(controls: &[Point3], density: f64) -> Result<ContourLoop, ContourError> {
    let n = controls.len();
    if n < 3 {
        return Err(ContourError::TooFewControls(n));
    }
    if !(density > 0.0 && density.is_finite()) {
        return Err(ContourError::BadDensity(density));
    }
    for i in 0..n {
        if controls[i] == controls[(i + 1) % n] {
            return Err(ContourError::RepeatedControl(i, (i + 1) % n));
        }
    }
    const TABLE: usize = 256;
    let mut points = Vec::new();
    let mut source = Vec::new();
    let mut arc = vec![0.0; TABLE + 1];
    for i in 0..n {
        let p0 = &controls[(i + n - 1) % n];
        let p1 = &controls[i];
        let p2 = &controls[(i + 1) % n];
        let p3 = &controls[(i + 2) % n];
        let mut prev = *p1;
        for k in 1..=TABLE {
            let q = catmull_rom(p0, p1, p2, p3, k as f64 / TABLE as f64);
            arc[k] = arc[k - 1] + (q - prev).norm();
            prev = q;
        }
        let total = arc[TABLE];
        // 2% headroom covers the gap between table arc and true chords
        let count = ((total * density * 1.02).ceil() as usize).max(1);
        points.push(*p1);
        source.push(i);
        let mut cursor = 0;
        for s in 1..count {
            let target = total * s as f64 / count as f64;
            while arc[cursor + 1] < target {
                cursor += 1;
            }
            let span = arc[cursor + 1] - arc[cursor];
            let f = if span > 0.0 { (target - arc[cursor]) / span } else { 0.0 };
            let t = (cursor as f64 + f) / TABLE as f64;
            points.push(catmull_rom(p0, p1, p2, p3, t));
            source.push(i);
        }
    }
    Ok(ContourLoop { points, source })
}

/// Default sampling density for `mesh`: four samples per mean edge length.
pub fn default_density(mesh: &TriangleMesh) -> f64 {
    let e = mesh.mean_edge_length();
    if e > 0.0 {
        DEFAULT_SAMPLES_PER_EDGE / e
    } else {
        1.0
    }
}

/// Snaps every sample to its closest surface point and drops consecutive
/// duplicates. `bound` defaults to ten mean edge lengths.
pub fn project_to_surface(samples: &ContourLoop, mesh: &TriangleMesh, bound: Option<f64>) -> Result<ContourLoop, ContourError> {
    if mesh.is_empty() {
        return Err(ContourError::EmptyMesh);
    }
    let bound = bound.unwrap_or_else(|| DEFAULT_PROJECTION_BOUND * mesh.mean_edge_length());
    let bvh = mesh.bvh();
    let same = 1e-12 * mesh.bounds().diagonal().max(f64::MIN_POSITIVE);
    let mut points: Vec<Point3> = Vec::with_capacity(samples.len());
    let mut source = Vec::with_capacity(samples.len());
    for (k, p) in samples.points.iter().enumerate() {
        let hit = bvh.closest_point(p).expect("non-empty mesh");
        if hit.distance > bound {
            return Err(ContourError::ProjectionTooFar { sample: k, distance: hit.distance, bound });
        }
        // zero-distance projections keep the exact input coordinates
        let q = if hit.distance == 0.0 { *p } else { hit.point };
        if points.last().is_some_and(|l| (l - q).norm() <= same) {
            continue;
        }
        points.push(q);
        source.push(samples.source[k]);
    }
    while points.len() > 1 && (points[0] - points[points.len() - 1]).norm() <= same {
        points.pop();
        source.pop();
    }
    if points.len() < 3 {
        return Err(ContourError::Collapsed(points.len()));
    }
    Ok(ContourLoop { points, source })
}

/// Findings of [`validate_loop`]; an empty report means the loop is usable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Pairs of non-adjacent segments closer than the crossing tolerance.
    pub self_intersections: Vec<(usize, usize)>,
    /// Points farther from the surface than the on-surface tolerance.
    pub off_surface: Vec<usize>,
    /// Points within two mean edge lengths of a mesh boundary edge.
    pub near_hole: Vec<usize>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.self_intersections.is_empty() && self.off_surface.is_empty() && self.near_hole.is_empty()
    }

    /// Human-readable one-line findings.
    pub fn messages(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(&(a, b)) = self.self_intersections.first() {
            out.push(format!(
                "contour self-intersects: segments {a} and {b} cross ({} crossing pairs)",
                self.self_intersections.len()
            ));
        }
        if let Some(&i) = self.off_surface.first() {
            out.push(format!("contour point {i} is off the surface ({} points)", self.off_surface.len()));
        }
        if let Some(&i) = self.near_hole.first() {
            out.push(format!("contour point {i} runs close to a mesh hole ({} points)", self.near_hole.len()));
        }
        out
    }
}

/// Checks a projected loop for self-crossings, off-surface points and
/// proximity to holes in the mesh.
pub fn validate_loop(contour: &ContourLoop, mesh: &TriangleMesh) -> ValidationReport {
    let n = contour.len();
    let mut report = ValidationReport::default();
    if n < 3 || mesh.is_empty() {
        return report;
    }
    let mean_seg = contour.length() / n as f64;
    let cross_tol = 1e-3 * mean_seg;
    for i in 0..n {
        let (a, b) = contour.segment(i);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = contour.segment(j);
            if segment_segment_distance(&a, &b, &c, &d) <= cross_tol {
                report.self_intersections.push((i, j));
            }
        }
    }
    let on_tol = 1e-6 * mesh.bounds().diagonal();
    let bvh = mesh.bvh();
    for (i, p) in contour.points.iter().enumerate() {
        if bvh.closest_point(p).is_some_and(|h| h.distance > on_tol) {
            report.off_surface.push(i);
        }
    }
    let boundary: Vec<[u32; 2]> = (0..mesh.edges().len())
        .filter(|&e| mesh.is_boundary_edge(e))
        .map(|e| mesh.edges()[e])
        .collect();
    if !boundary.is_empty() {
        let reach = 2.0 * mesh.mean_edge_length();
        for (i, p) in contour.points.iter().enumerate() {
            let close = boundary.iter().any(|&[a, b]| {
                let (q, _) = closest_point_on_segment(p, &mesh.vertex(a), &mesh.vertex(b));
                (p - q).norm() <= reach
            });
            if close {
                report.near_hole.push(i);
            }
        }
    }
    report
}

/// Parses `x y z` lines; blank lines and `#` comments are skipped.
pub fn parse_control_points(text: &str) -> Result<Vec<Point3>, ContourError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        match vals {
            Ok(v) if v.len() == 3 && v.iter().all(|x| x.is_finite()) => out.push(Point3::new(v[0], v[1], v[2])),
            Ok(v) => {
                return Err(ContourError::Parse { line: k + 1, message: format!("expected 3 finite numbers, found {}", v.len()) })
            }
            Err(e) => return Err(ContourError::Parse { line: k + 1, message: e.to_string() }),
        }
    }
    Ok(out)
}

pub fn format_control_points(points: &[Point3]) -> String {
    points.iter().map(|p| format!("{} {} {}\n", p.x, p.y, p.z)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{flat_grid, icosphere};
    use crate::geometry::point_triangle_distance;

    fn square() -> Vec<Point3> {
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn spline_passes_through_square_corners() {
        let s = resample_spline(&square(), 50.0).unwrap();
        for c in square() {
            assert!(s.points.contains(&c));
        }
        assert!(s.max_gap() <= 1.0 / 50.0);
    }

    #[test]
    fn spline_hits_controls_at_their_parameters() {
        let c = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.05, 0.0), Point3::new(2.0, -0.02, 0.0)];
        let s = resample_spline(&c, 20.0).unwrap();
        for (i, p) in c.iter().enumerate() {
            let first = s.source.iter().position(|&k| k == i).unwrap();
            // independent evaluation at t = 0 of segment i
            let n = c.len();
            let q = catmull_rom(&c[(i + n - 1) % n], &c[i], &c[(i + 1) % n], &c[(i + 2) % n], 0.0);
            assert_eq!(s.points[first], *p);
            assert!((q - p).norm() < 1e-15);
        }
        // overshoot stays within a band around the control hull
        assert!(s.points.iter().all(|p| p.x > -0.5 && p.x < 2.5 && p.y.abs() < 0.5 && p.z == 0.0));
    }

    #[test]
    fn circle_controls_stay_near_circle() {
        let c: Vec<Point3> = (0..8)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 8.0;
                Point3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        let s = resample_spline(&c, 100.0).unwrap();
        let worst = s.points.iter().map(|p| (p.coords.norm() - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 0.05);
        assert!(s.max_gap() <= 0.01);
    }

    #[test]
    fn doubling_density_never_widens_gaps() {
        let c: Vec<Point3> = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(3.0, 0.5, 0.0),
            Point3::new(2.0, 4.0, 1.0),
            Point3::new(-1.0, 2.0, 0.5),
        ];
        let mut prev = f64::INFINITY;
        for d in [1.0, 2.0, 4.0, 8.0] {
            let g = resample_spline(&c, d).unwrap().max_gap();
            assert!(g <= prev + 1e-12);
            assert!(g <= 1.0 / d);
            prev = g;
        }
    }

    #[test]
    fn too_few_controls() {
        assert_eq!(resample_spline(&square()[..2], 1.0), Err(ContourError::TooFewControls(2)));
    }

    #[test]
    fn projection_onto_flat_grid_matches_brute_force() {
        let g = flat_grid(10, 10, 0.5);
        let samples: Vec<Point3> = (0..100)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 100.0;
                Point3::new(2.5 + 2.0 * a.cos(), 2.5 + 2.0 * a.sin(), 0.01)
            })
            .collect();
        let out = project_to_surface(&ContourLoop::from_points(samples.clone()), &g, None).unwrap();
        assert_eq!(out.len(), 100);
        for (p, q) in samples.iter().zip(&out.points) {
            let brute = (0..g.triangle_count())
                .map(|t| {
                    let [a, b, c] = g.corners(t);
                    point_triangle_distance(p, &a, &b, &c)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(q.z.abs() < 1e-9);
            assert!(((p - q).norm() - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent_and_keeps_on_surface_points() {
        let s = icosphere(1.0, 3);
        let raw: Vec<Point3> = (0..40)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 40.0;
                Point3::new(1.1 * a.cos(), 1.1 * a.sin(), 0.3)
            })
            .collect();
        let once = project_to_surface(&ContourLoop::from_points(raw), &s, None).unwrap();
        let twice = project_to_surface(&once, &s, None).unwrap();
        assert_eq!(once.len(), twice.len());
        for (a, b) in once.points.iter().zip(&twice.points) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_from_center_lands_on_sphere() {
        let s = icosphere(1.0, 3);
        let center = ContourLoop::from_points(vec![Point3::origin(); 3]);
        match project_to_surface(&center, &s, None) {
            Err(ContourError::ProjectionTooFar { .. }) | Err(ContourError::Collapsed(_)) => {}
            other => panic!("{other:?}"),
        }
        let hit = s.bvh().closest_point(&Point3::origin()).unwrap();
        assert!((hit.point.coords.norm() - 1.0).abs() < 0.02);
    }

    #[test]
    fn figure_eight_is_flagged_at_the_crossing() {
        let g = flat_grid(8, 8, 1.0);
        // lemniscate-like loop crossing itself at (4, 4)
        let pts: Vec<Point3> = (0..64)
            .map(|i| {
                let t = std::f64::consts::TAU * (i as f64 + 0.5) / 64.0;
                Point3::new(4.0 + 3.0 * t.sin(), 4.0 + 2.0 * t.sin() * t.cos(), 0.0)
            })
            .collect();
        let lp = ContourLoop::from_points(pts);
        let report = validate_loop(&lp, &g);
        assert!(!report.self_intersections.is_empty());
        // independent brute-force check of which pairs really cross
        for &(i, j) in &report.self_intersections {
            let (a, b) = lp.segment(i);
            let (c, d) = lp.segment(j);
            assert!(segment_segment_distance(&a, &b, &c, &d) < 1e-3);
            let mid = |p: Point3, q: Point3| Point3::from((p.coords + q.coords) / 2.0);
            assert!((mid(a, b) - Point3::new(4.0, 4.0, 0.0)).norm() < 0.5);
            assert!((mid(c, d) - Point3::new(4.0, 4.0, 0.0)).norm() < 0.5);
        }
    }

    #[test]
    fn clean_loop_on_sphere_and_near_hole_warning() {
        let s = icosphere(1.0, 3);
        let ring: Vec<Point3> = (0..60)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 60.0;
                Point3::new(0.8 * a.cos(), 0.8 * a.sin(), 0.6)
            })
            .collect();
        let lp = project_to_surface(&ContourLoop::from_points(ring.clone()), &s, None).unwrap();
        assert!(validate_loop(&lp, &s).is_clean());

        // punch a hole next to the loop
        let hole_center = lp.points[0];
        let keep: Vec<u32> = (0..s.triangle_count() as u32)
            .filter(|&t| {
                let [a, b, c] = s.corners(t as usize);
                let centroid = Point3::from((a.coords + b.coords + c.coords) / 3.0);
                (centroid - hole_center).norm() > 0.15 || centroid.z < hole_center.z
            })
            .collect();
        let holed = crate::mesh::submesh(&s, &keep).0;
        let lp2 = project_to_surface(&ContourLoop::from_points(ring), &holed, None).unwrap();
        let report = validate_loop(&lp2, &holed);
        assert!(!report.near_hole.is_empty());
        assert!(report.messages().iter().any(|m| m.contains("hole")));
    }

    #[test]
    fn control_point_text_round_trip() {
        let text = "# dome\n1 2 3\n\n4.5 -1 0 # tail\n";
        let p = parse_control_points(text).unwrap();
        assert_eq!(p, vec![Point3::new(1.0, 2.0, 3.0), Point3::new(4.5, -1.0, 0.0)]);
        assert_eq!(parse_control_points(&format_control_points(&p)).unwrap(), p);
        assert!(matches!(parse_control_points("1 2\n"), Err(ContourError::Parse { line: 1, .. })));
    }
}
