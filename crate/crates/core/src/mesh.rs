//! Structured tetrahedral meshes of the unit cube.
//!
//! Every cube of an `n × n × n` grid is split into six tetrahedra by the Kuhn
//! (Freudenthal) rule, all with the same main diagonal. Because the split is the
//! arrangement of the planes `x_i = c·h` and `x_i − x_j = c·h`, the mesh with
//! `m·n` cells per axis refines the one with `n` cells per axis.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Local edge numbering of a tetrahedron: pairs of local vertex indices.
pub const LOCAL_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Local faces, each listed by the local vertices it contains.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Axis orderings of the six Kuhn tetrahedra in a cell.
const KUHN_PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Side of the unit cube a boundary face lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CubeSide {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl CubeSide {
    pub fn outward_normal(self) -> Point {
        match self {
            CubeSide::XMin => [-1.0, 0.0, 0.0],
            CubeSide::XMax => [1.0, 0.0, 0.0],
            CubeSide::YMin => [0.0, -1.0, 0.0],
            CubeSide::YMax => [0.0, 1.0, 0.0],
            CubeSide::ZMin => [0.0, 0.0, -1.0],
            CubeSide::ZMax => [0.0, 0.0, 1.0],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundaryFace {
    pub face: usize,
    pub vertices: [usize; 3],
    pub side: CubeSide,
    /// The unique tetrahedron containing this face.
    pub tet: usize,
}

/// Signed reference from a tetrahedron to one of its global edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeRef {
    pub edge: usize,
    /// +1 when the local edge direction agrees with the global low → high one.
    pub sign: i8,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub cells_per_axis: usize,
    pub vertices: Vec<Point>,
    pub tets: Vec<[usize; 4]>,
    /// Vertex pairs `(low, high)`, sorted lexicographically.
    pub edges: Vec<[usize; 2]>,
    pub tet_edges: Vec<[EdgeRef; 6]>,
    /// Sorted vertex triples.
    pub faces: Vec<[usize; 3]>,
    pub tet_faces: Vec<[usize; 4]>,
    /// Tetrahedra sharing each face; the second entry is `None` on ∂Ω.
    pub face_tets: Vec<(usize, Option<usize>)>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub boundary_edge_flags: Vec<bool>,
    /// Tetrahedra incident to each edge, ascending.
    pub edge_tets: Vec<Vec<usize>>,
}

impl Mesh {
    /// Kuhn triangulation of the unit cube with `n` cells per axis.
    pub fn cube(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidArgument("cells per axis must be positive".into()));
        }
        let np = n + 1;
        let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        let inv_n = 1.0 / n as f64;

        let mut vertices = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    vertices.push([i as f64 * inv_n, j as f64 * inv_n, k as f64 * inv_n]);
                }
            }
        }

        let mut tets = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for perm in KUHN_PERMS.iter() {
                        let mut c = [i, j, k];
                        let mut tet = [0usize; 4];
                        tet[0] = vid(c[0], c[1], c[2]);
                        for (step, &axis) in perm.iter().enumerate() {
                            c[axis] += 1;
                            tet[step + 1] = vid(c[0], c[1], c[2]);
                        }
                        if permutation_is_odd(perm) {
                            tet.swap(2, 3);
                        }
                        tets.push(tet);
                    }
                }
            }
        }

        let mut mesh = Mesh {
            cells_per_axis: n,
            vertices,
            tets,
            edges: Vec::new(),
            tet_edges: Vec::new(),
            faces: Vec::new(),
            tet_faces: Vec::new(),
            face_tets: Vec::new(),
            boundary_faces: Vec::new(),
            boundary_edge_flags: Vec::new(),
            edge_tets: Vec::new(),
        };
        mesh.build_topology()?;
        Ok(mesh)
    }

    fn build_topology(&mut self) -> Result<()> {
        for t in 0..self.tets.len() {
            let vol = self.signed_volume(t);
            if vol <= 0.0 {
                return Err(Error::DegenerateElement { tet: t, volume: vol });
            }
        }

        let mut edges: Vec<[usize; 2]> = self
            .tets
            .iter()
            .flat_map(|tet| {
                LOCAL_EDGES.iter().map(move |&(a, b)| {
                    let (u, v) = (tet[a], tet[b]);
                    [u.min(v), u.max(v)]
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let tet_edges: Vec<[EdgeRef; 6]> = self
            .tets
            .iter()
            .map(|tet| {
                let mut refs = [EdgeRef { edge: 0, sign: 1 }; 6];
                for (slot, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
                    let (u, v) = (tet[a], tet[b]);
                    let key = [u.min(v), u.max(v)];
                    let edge = edges.binary_search(&key).expect("edge collected above");
                    refs[slot] = EdgeRef { edge, sign: if u < v { 1 } else { -1 } };
                }
                refs
            })
            .collect();

        let mut edge_tets = vec![Vec::new(); edges.len()];
        for (t, refs) in tet_edges.iter().enumerate() {
            for r in refs {
                edge_tets[r.edge].push(t);
            }
        }

        let mut face_index: HashMap<[usize; 3], usize> = HashMap::new();
        let mut faces = Vec::new();
        let mut face_tets: Vec<(usize, Option<usize>)> = Vec::new();
        let mut tet_faces = Vec::with_capacity(self.tets.len());
        for (t, tet) in self.tets.iter().enumerate() {
            let mut local = [0usize; 4];
            for (slot, lf) in LOCAL_FACES.iter().enumerate() {
                let mut key = [tet[lf[0]], tet[lf[1]], tet[lf[2]]];
                key.sort_unstable();
                let f = *face_index.entry(key).or_insert_with(|| {
                    faces.push(key);
                    face_tets.push((t, None));
                    faces.len() - 1
                });
                if face_tets[f].0 != t {
                    face_tets[f].1 = Some(t);
                }
                local[slot] = f;
            }
            tet_faces.push(local);
        }

        let n = self.cells_per_axis;
        let mut boundary_faces = Vec::new();
        let mut boundary_edge_flags = vec![false; edges.len()];
        for (f, verts) in faces.iter().enumerate() {
            if face_tets[f].1.is_some() {
                continue;
            }
            let g: Vec<[usize; 3]> = verts.iter().map(|&v| self.vertex_grid(v)).collect();
            let side = (0..3)
                .find_map(|axis| {
                    if g.iter().all(|p| p[axis] == 0) {
                        Some([CubeSide::XMin, CubeSide::YMin, CubeSide::ZMin][axis])
                    } else if g.iter().all(|p| p[axis] == n) {
                        Some([CubeSide::XMax, CubeSide::YMax, CubeSide::ZMax][axis])
                    } else {
                        None
                    }
                })
                .expect("an unshared face of the cube mesh lies on the cube boundary");
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let key = [verts[a], verts[b]];
                let e = edges.binary_search(&key).expect("face edge exists");
                boundary_edge_flags[e] = true;
            }
            boundary_faces.push(BoundaryFace {
                face: f,
                vertices: *verts,
                side,
                tet: face_tets[f].0,
            });
        }

        self.edges = edges;
        self.tet_edges = tet_edges;
        self.faces = faces;
        self.tet_faces = tet_faces;
        self.face_tets = face_tets;
        self.boundary_faces = boundary_faces;
        self.boundary_edge_flags = boundary_edge_flags;
        self.edge_tets = edge_tets;
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Mesh diameter `h = √3 / n`.
    pub fn diameter(&self) -> f64 {
        3f64.sqrt() / self.cells_per_axis as f64
    }

    /// Integer grid coordinates of a vertex.
    pub fn vertex_grid(&self, v: usize) -> [usize; 3] {
        let np = self.cells_per_axis + 1;
        [v % np, (v / np) % np, v / (np * np)]
    }

    pub fn tet_points(&self, t: usize) -> [Point; 4] {
        let tet = &self.tets[t];
        [
            self.vertices[tet[0]],
            self.vertices[tet[1]],
            self.vertices[tet[2]],
            self.vertices[tet[3]],
        ]
    }

    pub fn signed_volume(&self, t: usize) -> f64 {
        let p = self.tet_points(t);
        signed_volume(&p)
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let p = self.tet_points(t);
        let mut c = [0.0; 3];
        for q in &p {
            for d in 0..3 {
                c[d] += 0.25 * q[d];
            }
        }
        c
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
            - self.num_tets() as i64
    }

    /// Index of the tetrahedron containing `x` (ties resolved towards the
    /// lower cell and the first matching Kuhn ordering).
    pub fn locate(&self, x: Point) -> usize {
        let n = self.cells_per_axis;
        let nf = n as f64;
        let mut cell = [0usize; 3];
        let mut local = [0.0f64; 3];
        for d in 0..3 {
            let s = x[d] * nf;
            let c = (s.floor().max(0.0) as usize).min(n - 1);
            cell[d] = c;
            local[d] = s - c as f64;
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| local[b].partial_cmp(&local[a]).unwrap().then(a.cmp(&b)));
        let p = KUHN_PERMS.iter().position(|q| *q == order).expect("all orderings listed");
        6 * (cell[0] + n * (cell[1] + n * cell[2])) + p
    }

    /// Barycentric coordinates of `x` with respect to tetrahedron `t`.
    pub fn barycentric(&self, t: usize, x: Point) -> [f64; 4] {
        let p = self.tet_points(t);
        let vol = signed_volume(&p);
        let mut lam = [0.0; 4];
        for i in 0..4 {
            let mut q = p;
            q[i] = x;
            lam[i] = signed_volume(&q) / vol;
        }
        lam
    }

    /// Debug dump with `VERTICES`, `TETS` and `EDGES` sections.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "VERTICES {}", self.num_vertices())?;
        for v in &self.vertices {
            writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
        }
        writeln!(w, "TETS {}", self.num_tets())?;
        for t in &self.tets {
            writeln!(w, "{} {} {} {}", t[0], t[1], t[2], t[3])?;
        }
        writeln!(w, "EDGES {}", self.num_edges())?;
        for (e, ed) in self.edges.iter().enumerate() {
            writeln!(w, "{} {} {}", ed[0], ed[1], u8::from(self.boundary_edge_flags[e]))?;
        }
        Ok(())
    }
}

fn permutation_is_odd(p: &[usize; 3]) -> bool {
    let mut inversions = 0;
    for i in 0..3 {
        for j in i + 1..3 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn signed_volume(p: &[Point; 4]) -> f64 {
    let a = sub(p[1], p[0]);
    let b = sub(p[2], p[0]);
    let c = sub(p[3], p[0]);
    dot(a, cross(b, c)) / 6.0
}

/// Maps every fine tetrahedron to the coarse tetrahedron that contains it.
///
/// Containment of all four fine vertices is checked in barycentric
/// coordinates with tolerance `1e-12`.
pub fn nesting_map(coarse: &Mesh, fine: &Mesh) -> Result<Vec<usize>> {
    let (nc, nf) = (coarse.cells_per_axis, fine.cells_per_axis);
    if nf % nc != 0 {
        return Err(Error::NotDivisible { fine: nf, coarse: nc });
    }
    (0..fine.num_tets())
        .map(|t| {
            let c = coarse.locate(fine.barycenter(t));
            for x in fine.tet_points(t) {
                if coarse.barycentric(c, x).iter().any(|&l| l < -1e-12) {
                    return Err(Error::NestingFailure { fine: t, coarse: c });
                }
            }
            Ok(c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cube_counts() {
        let m = Mesh::cube(1).unwrap();
        assert_eq!(m.num_vertices(), 8);
        assert_eq!(m.num_tets(), 6);
        assert_eq!(m.num_edges(), 19);
        assert_eq!(m.num_faces(), 18);
        assert_eq!(m.euler_characteristic(), 1);
        // every edge of a single cube lies on its surface except the body diagonal
        assert_eq!(m.boundary_edge_flags.iter().filter(|&&b| b).count(), 18);
    }

    #[test]
    fn rejects_zero_cells() {
        assert!(matches!(Mesh::cube(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn volumes_positive_and_sum_to_one() {
        for n in 1..=4 {
            let m = Mesh::cube(n).unwrap();
            let total: f64 = (0..m.num_tets()).map(|t| m.signed_volume(t)).sum();
            assert!((0..m.num_tets()).all(|t| m.signed_volume(t) > 0.0));
            assert!((total - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn locate_finds_barycenters() {
        let m = Mesh::cube(3).unwrap();
        for t in 0..m.num_tets() {
            assert_eq!(m.locate(m.barycenter(t)), t);
        }
    }

    #[test]
    fn non_divisible_nesting_rejected() {
        let c = Mesh::cube(2).unwrap();
        let f = Mesh::cube(3).unwrap();
        assert!(matches!(nesting_map(&c, &f), Err(Error::NotDivisible { .. })));
    }

    #[test]
    fn dump_has_sections() {
        let m = Mesh::cube(1).unwrap();
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("VERTICES 8\n"));
        assert!(s.contains("TETS 6\n"));
        assert!(s.contains("EDGES 19\n"));
    }
}
