//! Drilling tubes: annular cylinders around planned drill axes.

use thiserror::Error;

use crate::geometry::{Point3, Vec3};
use crate::mesh::TriangleMesh;

pub const DEFAULT_TUBE_SEGMENTS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum TubeError {
    #[error("inner radius {inner} must be positive and below outer radius {outer}")]
    Radii { inner: f64, outer: f64 },
    #[error("tube length {0} must be positive")]
    Length(f64),
    #[error("axis direction must be a non-zero finite vector")]
    Direction,
    #[error("entry point must be finite")]
    Entry,
    #[error("a tube needs at least 8 segments, got {0}")]
    Segments(usize),
    #[error("axis file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A planned drill axis. The tube runs from `entry` along `direction` for
/// `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrillAxis {
    pub entry: Point3,
    pub direction: Vec3,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub length: f64,
}

impl DrillAxis {
    /// Checks radii, length and direction; returns the axis with a unit
    /// direction.
    pub fn validated(&self) -> Result<DrillAxis, TubeError> {
        if !(self.inner_radius > 0.0 && self.inner_radius < self.outer_radius && self.outer_radius.is_finite()) {
            return Err(TubeError::Radii { inner: self.inner_radius, outer: self.outer_radius });
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(TubeError::Length(self.length));
        }
        if !crate::geometry::is_finite(&self.entry) {
            return Err(TubeError::Entry);
        }
        let direction = self
            .direction
            .try_normalize(1e-300)
            .filter(|d| d.iter().all(|c| c.is_finite()))
            .ok_or(TubeError::Direction)?;
        Ok(DrillAxis { direction, ..*self })
    }

    /// The same axis started `depth` earlier, so the tube also reaches
    /// `depth` below the entry point.
    pub fn extended_below(&self, depth: f64) -> DrillAxis {
        let d = self.direction.try_normalize(1e-300).unwrap_or(self.direction);
        DrillAxis { entry: self.entry - d * depth, length: self.length + depth, ..*self }
    }

    /// Whether `p` lies strictly inside the bore, the cylinder of
    /// `inner_radius` between the two tube ends, shrunk by `slack`.
    pub fn in_bore(&self, p: &Point3, slack: f64) -> bool {
        let d = self.direction.normalize();
        let r = p - self.entry;
        let h = r.dot(&d);
        let radial = r - d * h;
        h > slack && h < self.length - slack && radial.norm() < self.inner_radius - slack
    }
}

/// Orthonormal `(u, v)` with `u × v = d`.
pub(crate) fn frame(d: &Vec3) -> (Vec3, Vec3) {
    let helper = if d.x.abs() <= d.y.abs() && d.x.abs() <= d.z.abs() {
        Vec3::x()
    } else if d.y.abs() <= d.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let u = d.cross(&helper).normalize();
    let v = d.cross(&u);
    (u, v)
}

/// Closed annular cylinder with `8 * segments` triangles: outer wall, bore
/// wall and two end rings, wound outward.
pub fn make_tube(axis: &DrillAxis, segments: usize) -> Result<TriangleMesh, TubeError> {
    Ok(tube_mesh(axis, segments, 1)?.0)
}

/// Tube whose walls are cut into `rings` bands along the axis. Also
/// returns, per triangle, whether it lies on the bore wall.
pub fn tube_mesh(axis: &DrillAxis, segments: usize, rings: usize) -> Result<(TriangleMesh, Vec<bool>), TubeError> {
    if segments < 8 {
        return Err(TubeError::Segments(segments));
    }
    let axis = axis.validated()?;
    let d = axis.direction;
    let (u, v) = frame(&d);
    let (s, r) = (segments, rings.max(1));
    let mut verts = Vec::with_capacity(2 * s * (r + 1));
    // outer circles bottom to top, then bore circles bottom to top
    for radius in [axis.outer_radius, axis.inner_radius] {
        for k in 0..=r {
            let base = axis.entry + d * (axis.length * k as f64 / r as f64);
            for i in 0..s {
                let a = std::f64::consts::TAU * i as f64 / s as f64;
                verts.push(base + (u * a.cos() + v * a.sin()) * radius);
            }
        }
    }
    let outer = |k: usize, i: usize| (k * s + i % s) as u32;
    let bore = |k: usize, i: usize| ((r + 1 + k) * s + i % s) as u32;
    let mut tris = Vec::with_capacity(4 * s * (r + 1));
    let mut is_bore = Vec::with_capacity(4 * s * (r + 1));
    for k in 0..r {
        for i in 0..s {
            let j = i + 1;
            tris.push([outer(k, i), outer(k, j), outer(k + 1, j)]);
            tris.push([outer(k, i), outer(k + 1, j), outer(k + 1, i)]);
            tris.push([bore(k, i), bore(k + 1, j), bore(k, j)]);
            tris.push([bore(k, i), bore(k + 1, i), bore(k + 1, j)]);
            is_bore.extend([false, false, true, true]);
        }
    }
    for i in 0..s {
        let j = i + 1;
        tris.push([bore(r, i), outer(r, i), outer(r, j)]);
        tris.push([bore(r, i), outer(r, j), bore(r, j)]);
        tris.push([bore(0, i), outer(0, j), outer(0, i)]);
        tris.push([bore(0, i), bore(0, j), outer(0, j)]);
        is_bore.extend([false; 4]);
    }
    Ok((TriangleMesh::new(verts, tris).expect("tube topology is valid"), is_bore))
}

/// Closed solid cylinder (`4 * segments` triangles) for union tests.
pub fn make_rod(base: Point3, direction: Vec3, radius: f64, length: f64, segments: usize) -> TriangleMesh {
    let d = direction.normalize();
    let (u, v) = frame(&d);
    let s = segments.max(3);
    let top = base + d * length;
    let mut verts = Vec::with_capacity(2 * s + 2);
    for c in [base, top] {
        for i in 0..s {
            let a = std::f64::consts::TAU * i as f64 / s as f64;
            verts.push(c + (u * a.cos() + v * a.sin()) * radius);
        }
    }
    verts.push(base);
    verts.push(top);
    let (cb, ct) = ((2 * s) as u32, (2 * s + 1) as u32);
    let id = |ring: usize, i: usize| (ring * s + i % s) as u32;
    let mut tris = Vec::with_capacity(4 * s);
    for i in 0..s {
        let j = i + 1;
        tris.push([id(0, i), id(0, j), id(1, j)]);
        tris.push([id(0, i), id(1, j), id(1, i)]);
        tris.push([ct, id(1, i), id(1, j)]);
        tris.push([cb, id(0, j), id(0, i)]);
    }
    TriangleMesh::new(verts, tris).expect("rod topology is valid")
}

/// Parses an axis file: one tube per line as
/// `ex ey ez dx dy dz inner_r outer_r length`. Blank lines and `#` comments
/// are skipped. Each axis is validated.
pub fn parse_axes(text: &str) -> Result<Vec<DrillAxis>, TubeError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| TubeError::Parse { line: k + 1, message };
        let v = line.split_whitespace().map(str::parse::<f64>).collect::<Result<Vec<_>, _>>().map_err(|e| parse_err(e.to_string()))?;
        if v.len() != 9 {
            return Err(parse_err(format!("expected 9 numbers, found {}", v.len())));
        }
        let axis = DrillAxis {
            entry: Point3::new(v[0], v[1], v[2]),
            direction: Vec3::new(v[3], v[4], v[5]),
            inner_radius: v[6],
            outer_radius: v[7],
            length: v[8],
        };
        out.push(axis.validated().map_err(|e| parse_err(e.to_string()))?);
    }
    Ok(out)
}

pub fn format_axes(axes: &[DrillAxis]) -> String {
    axes.iter()
        .map(|a| {
            let (e, d) = (a.entry, a.direction);
            format!("{} {} {} {} {} {} {} {} {}\n", e.x, e.y, e.z, d.x, d.y, d.z, a.inner_radius, a.outer_radius, a.length)
        })
        .collect()
}
