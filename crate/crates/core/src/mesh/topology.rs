use super::{BoundaryLoop, MeshError, TriangleMesh};

/// Triangle sets of each component connected through shared vertices,
/// ordered by their smallest triangle index.
pub fn connected_components(mesh: &TriangleMesh) -> Vec<Vec<u32>> {
    let n = mesh.vertex_count();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(p: &mut [u32], mut i: u32) -> u32 {
        while p[i as usize] != i {
            p[i as usize] = p[p[i as usize] as usize];
            i = p[i as usize];
        }
        i
    }
    for t in mesh.triangles() {
        let r0 = find(&mut parent, t[0]);
        for &v in &t[1..] {
            let r = find(&mut parent, v);
            if r != r0 {
                let (lo, hi) = if r < r0 { (r, r0) } else { (r0, r) };
                parent[hi as usize] = lo;
            }
        }
        // re-find so later unions use the current root
        let _ = find(&mut parent, t[0]);
    }
    let mut slot = vec![u32::MAX; n];
    let mut out: Vec<Vec<u32>> = Vec::new();
    for (ti, t) in mesh.triangles().iter().enumerate() {
        let r = find(&mut parent, t[0]) as usize;
        if slot[r] == u32::MAX {
            slot[r] = out.len() as u32;
            out.push(Vec::new());
        }
        out[slot[r] as usize].push(ti as u32);
    }
    out
}

/// Extracts the listed triangles as a new mesh. Returns the mesh and, for
/// each new vertex, its index in `mesh`.
pub fn submesh(mesh: &TriangleMesh, triangles: &[u32]) -> (TriangleMesh, Vec<u32>) {
    let mut remap = vec![u32::MAX; mesh.vertex_count()];
    let mut old_of_new = Vec::new();
    let mut verts = Vec::new();
    let mut tris = Vec::with_capacity(triangles.len());
    for &t in triangles {
        let tri = mesh.triangles()[t as usize];
        tris.push(tri.map(|v| {
            if remap[v as usize] == u32::MAX {
                remap[v as usize] = verts.len() as u32;
                verts.push(mesh.vertex(v));
                old_of_new.push(v);
            }
            remap[v as usize]
        }));
    }
    let sub = TriangleMesh::new(verts, tris).expect("sub-mesh of a valid mesh is valid");
    (sub, old_of_new)
}

/// All triangles reachable from `seed_vertex` through shared vertices,
/// reindexed.
pub fn connected_component(mesh: &TriangleMesh, seed_vertex: u32) -> TriangleMesh {
    let comps = connected_components(mesh);
    let seed_tris = mesh.vertex_triangles(seed_vertex);
    let Some(&first) = seed_tris.first() else {
        return TriangleMesh::empty();
    };
    let comp = comps.into_iter().find(|c| c.binary_search(&first).is_ok()).unwrap_or_default();
    submesh(mesh, &comp).0
}

pub fn is_closed(mesh: &TriangleMesh) -> bool {
    !mesh.is_empty() && mesh.boundary_edge_count() == 0
}

/// V − E + F over referenced vertices.
pub fn euler_characteristic(mesh: &TriangleMesh) -> i64 {
    let used = (0..mesh.vertex_count() as u32).filter(|&v| !mesh.vertex_triangles(v).is_empty()).count();
    used as i64 - mesh.edges().len() as i64 + mesh.triangle_count() as i64
}

/// Boundary edges grouped into closed loops. Each loop runs in the direction
/// its bordering triangles traverse those edges. At vertices where several
/// boundary chains meet, the walk turns through the triangle fan so each
/// loop follows its own side.
pub fn extract_boundary_loops(mesh: &TriangleMesh) -> Result<Vec<BoundaryLoop>, MeshError> {
    let ne = mesh.edges().len();
    let mut used = vec![false; ne];
    let mut loops = Vec::new();
    for start in 0..ne {
        if !mesh.is_boundary_edge(start) || used[start] {
            continue;
        }
        let t0 = mesh.edge_triangles(start)[0];
        let (a0, b0) = directed_edge(mesh, start, t0);
        let mut verts = vec![a0];
        used[start] = true;
        let (mut a, mut b, mut t) = (a0, b0, t0);
        loop {
            let (e, c, tn) = next_boundary(mesh, a, b, t)?;
            if e == start {
                break;
            }
            if used[e] {
                return Err(MeshError::OpenBoundary { vertex: b });
            }
            used[e] = true;
            verts.push(b);
            a = b;
            b = c;
            t = tn;
        }
        loops.push(BoundaryLoop { vertices: verts });
    }
    Ok(loops)
}

fn directed_edge(mesh: &TriangleMesh, e: usize, t: u32) -> (u32, u32) {
    let [x, y] = mesh.edges()[e];
    if super::directed(&mesh.triangles()[t as usize], x, y) {
        (x, y)
    } else {
        (y, x)
    }
}

/// From boundary half-edge `a -> b` in triangle `t`, rotates around `b`
/// to the next boundary half-edge `b -> c`.
fn next_boundary(mesh: &TriangleMesh, a: u32, b: u32, t: u32) -> Result<(usize, u32, u32), MeshError> {
    let _ = a;
    let mut cur = t;
    for _ in 0..=mesh.vertex_triangles(b).len() {
        let tri = mesh.triangles()[cur as usize];
        let k = tri.iter().position(|&v| v == b).expect("triangle contains b");
        let c = tri[(k + 1) % 3];
        let e = mesh.edge_id(b, c).expect("triangle edge exists");
        if mesh.is_boundary_edge(e) {
            return Ok((e, c, cur));
        }
        match mesh.opposite_triangle(e, cur) {
            Some(o) => cur = o,
            None => return Ok((e, c, cur)),
        }
    }
    Err(MeshError::OpenBoundary { vertex: b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::mesh::weld;

    fn strip(n: usize, rows: usize) -> TriangleMesh {
        // planar grid (n+1) x (rows+1)
        let mut v = Vec::new();
        for j in 0..=rows {
            for i in 0..=n {
                v.push(Point3::new(i as f64, j as f64, 0.0));
            }
        }
        let id = |i: usize, j: usize| (j * (n + 1) + i) as u32;
        let mut t = Vec::new();
        for j in 0..rows {
            for i in 0..n {
                t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        TriangleMesh::new(v, t).unwrap()
    }

    #[test]
    fn grid_has_one_ccw_loop() {
        let m = strip(3, 2);
        let loops = extract_boundary_loops(&m).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 10);
        // counterclockwise in the xy-plane: positive shoelace area
        let pts = loops[0].points(&m);
        let area: f64 = (0..pts.len())
            .map(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
                p.x * q.y - q.x * p.y
            })
            .sum();
        assert!(area > 0.0);
    }

    #[test]
    fn annulus_has_two_loops() {
        // 3x3 grid with the center cell removed
        let full = strip(3, 3);
        let keep: Vec<u32> = (0..full.triangle_count() as u32).filter(|&t| t / 2 != 4).collect();
        let (ring, _) = submesh(&full, &keep);
        let loops = extract_boundary_loops(&ring).unwrap();
        assert_eq!(loops.len(), 2);
        let mut lens: Vec<usize> = loops.iter().map(|l| l.len()).collect();
        lens.sort();
        assert_eq!(lens, vec![4, 12]);
        assert_eq!(euler_characteristic(&ring), 0);
    }

    #[test]
    fn bowtie_vertex_splits_into_two_loops() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, -1.0, 0.0),
        ];
        let m = TriangleMesh::new(v, vec![[0, 1, 2], [0, 3, 4]]).unwrap();
        let loops = extract_boundary_loops(&m).unwrap();
        assert_eq!(loops.len(), 2);
        assert!(loops.iter().all(|l| l.len() == 3));
    }

    #[test]
    fn components_and_seeded_extraction() {
        let a = strip(2, 2);
        let shifted: Vec<[Point3; 3]> = (0..a.triangle_count())
            .map(|t| a.corners(t).map(|p| p + crate::geometry::Vec3::new(10.0, 0.0, 0.0)))
            .collect();
        let b = weld(&shifted, 0.0).into_mesh().unwrap();
        let both = a.disjoint_union(&b);
        assert_eq!(connected_components(&both).len(), 2);
        let first = connected_component(&both, 0);
        assert_eq!(first.triangle_count(), a.triangle_count());
        assert_eq!(first.vertex_count(), a.vertex_count());
    }
}
