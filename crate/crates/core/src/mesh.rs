//! Affine tetrahedral meshes with oriented sub-entities and boundary tags.
//!
//! Faces and edges carry a globally fixed orientation: face normals point
//! from the lower-indexed incident cell to the higher one (outward on the
//! boundary), edge tangents run from the lower global vertex id to the
//! higher. Entity vertex lists are stored sorted by global id, which also
//! fixes the parametrization every incident cell uses when evaluating shared
//! moments.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Point3, Vector3};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Boundary region labels. The Dirichlet part must be nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryRegion {
    Dirichlet,
    Neumann,
}

/// The six axis-aligned sides of the unit cube, used to pick Γ_D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CubeFace {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] = [
        CubeFace::XMin,
        CubeFace::XMax,
        CubeFace::YMin,
        CubeFace::YMax,
        CubeFace::ZMin,
        CubeFace::ZMax,
    ];
}

/// Reference tetrahedron vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1).
pub const REF_VERTS: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

/// Local face `lf` is opposite local vertex `lf`; vertices ascend locally.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Local edges in ascending local vertex order.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Outward unit normal of the reference tetrahedron on local face `lf`.
pub fn ref_face_normal(lf: usize) -> Vector3<f64> {
    let s = 1.0 / 3f64.sqrt();
    match lf {
        0 => Vector3::new(s, s, s),
        1 => Vector3::new(-1.0, 0.0, 0.0),
        2 => Vector3::new(0.0, -1.0, 0.0),
        3 => Vector3::new(0.0, 0.0, -1.0),
        _ => panic!("local face index {lf}"),
    }
}

/// Area of reference face `lf`.
pub fn ref_face_area(lf: usize) -> f64 {
    if lf == 0 {
        0.75f64.sqrt()
    } else {
        0.5
    }
}

/// Length of reference edge `le`.
pub fn ref_edge_length(le: usize) -> f64 {
    if le < 3 {
        1.0
    } else {
        2f64.sqrt()
    }
}

/// Tetrahedral simplicial complex of a polyhedral domain.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point3<f64>>,
    pub cells: Vec<[usize; 4]>,
    /// face vertex triples, ascending global ids
    pub faces: Vec<[usize; 3]>,
    /// edge vertex pairs, ascending global ids
    pub edges: Vec<[usize; 2]>,
    /// cell → global face, indexed by local face (opposite local vertex)
    pub cell_faces: Vec<[usize; 4]>,
    /// +1 when the cell's outward normal equals the stored global normal
    pub cell_face_sign: Vec<[i8; 4]>,
    /// cell → global edge, indexed by local edge
    pub cell_edges: Vec<[usize; 6]>,
    /// +1 when the local edge direction agrees with the global one
    pub cell_edge_sign: Vec<[i8; 6]>,
    /// incident cells, lower index first
    pub face_cells: Vec<(usize, Option<usize>)>,
    /// global unit normal per face
    pub face_normal: Vec<Vector3<f64>>,
    pub face_area: Vec<f64>,
    pub edge_length: Vec<f64>,
    /// region label for boundary faces, None for interior ones
    pub boundary: Vec<Option<BoundaryRegion>>,
}

/// Per-cell affine transformation data derived from the vertex positions.
#[derive(Debug, Clone)]
pub struct ElementTransform {
    /// Jacobian of the map from the reference tetrahedron
    pub f: Matrix3<f64>,
    pub f_inv: Matrix3<f64>,
    pub f_inv_t: Matrix3<f64>,
    /// Jacobi determinant, strictly positive
    pub det: f64,
    /// local mesh size: spectral norm of the Jacobian
    pub h: f64,
    /// measure factor of reference face → physical face, per local face
    pub face_jacobian: [f64; 4],
    /// outward unit normal per local face
    pub face_normal_out: [Vector3<f64>; 4],
    /// measure factor of reference edge → physical edge
    pub edge_jacobian: [f64; 6],
    /// unit tangent along the local edge direction
    pub edge_tangent: [Vector3<f64>; 6],
}

impl ElementTransform {
    /// Map a reference point to the physical cell.
    pub fn push_point(&self, v0: &Point3<f64>, xhat: &Vector3<f64>) -> Point3<f64> {
        v0 + self.f * xhat
    }

    /// Map a physical point back to reference coordinates.
    pub fn pull_point(&self, v0: &Point3<f64>, x: &Point3<f64>) -> Vector3<f64> {
        self.f_inv * (x - v0)
    }
}

fn signed_volume(v: &[Point3<f64>; 4]) -> f64 {
    let a = v[1] - v[0];
    let b = v[2] - v[0];
    let c = v[3] - v[0];
    a.cross(&b).dot(&c) / 6.0
}

impl Mesh {
    /// Assemble a mesh from raw vertices, cells and boundary tags.
    ///
    /// `boundary` lists each boundary face (any vertex order) with its
    /// region; the set must match the topological boundary exactly and the
    /// Dirichlet part must be nonempty.
    pub fn from_parts(
        vertices: Vec<Point3<f64>>,
        cells: Vec<[usize; 4]>,
        boundary: &[([usize; 3], BoundaryRegion)],
    ) -> Result<Mesh> {
        if cells.is_empty() {
            return Err(Error::MeshValidation("mesh has no cells".into()));
        }
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= vertices.len() {
                    return Err(Error::MeshValidation(format!(
                        "cell {c} references vertex {v} out of range"
                    )));
                }
            }
            let verts = [
                vertices[cell[0]],
                vertices[cell[1]],
                vertices[cell[2]],
                vertices[cell[3]],
            ];
            let vol = signed_volume(&verts);
            if vol <= 0.0 {
                return Err(Error::MeshValidation(format!(
                    "cell {c} has non-positive signed volume {vol:.3e}"
                )));
            }
        }

        // enumerate faces and edges by sorted vertex tuples
        let mut face_index: BTreeMap<[usize; 3], usize> = BTreeMap::new();
        let mut edge_index: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut faces: Vec<[usize; 3]> = Vec::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut face_cells: Vec<(usize, Option<usize>)> = Vec::new();
        let mut cell_faces = vec![[0usize; 4]; cells.len()];
        let mut cell_edges = vec![[0usize; 6]; cells.len()];

        for (c, cell) in cells.iter().enumerate() {
            for (lf, local) in LOCAL_FACES.iter().enumerate() {
                let mut tri = [cell[local[0]], cell[local[1]], cell[local[2]]];
                tri.sort_unstable();
                let fid = *face_index.entry(tri).or_insert_with(|| {
                    faces.push(tri);
                    face_cells.push((c, None));
                    faces.len() - 1
                });
                cell_faces[c][lf] = fid;
                if face_cells[fid].0 != c {
                    match face_cells[fid].1 {
                        None => face_cells[fid].1 = Some(c),
                        Some(_) => {
                            return Err(Error::MeshValidation(format!(
                                "face {tri:?} shared by more than two cells"
                            )))
                        }
                    }
                }
            }
            for (le, local) in LOCAL_EDGES.iter().enumerate() {
                let mut pair = [cell[local[0]], cell[local[1]]];
                pair.sort_unstable();
                let eid = *edge_index.entry(pair).or_insert_with(|| {
                    edges.push(pair);
                    edges.len() - 1
                });
                cell_edges[c][le] = eid;
            }
        }

        // geometric data and orientation: outward of the lower incident cell
        let mut face_normal = Vec::with_capacity(faces.len());
        let mut face_area = Vec::with_capacity(faces.len());
        for (fid, tri) in faces.iter().enumerate() {
            let a = vertices[tri[0]];
            let raw = (vertices[tri[1]] - a).cross(&(vertices[tri[2]] - a));
            let norm = raw.norm();
            if norm <= 0.0 {
                return Err(Error::MeshValidation(format!(
                    "degenerate face {tri:?}"
                )));
            }
            let mut unit = raw / norm;
            let owner = face_cells[fid].0;
            let lf = cell_faces[owner].iter().position(|&f| f == fid).unwrap();
            let opposite = vertices[cells[owner][lf]];
            let centroid = Point3::from(
                (vertices[tri[0]].coords + vertices[tri[1]].coords + vertices[tri[2]].coords)
                    / 3.0,
            );
            if unit.dot(&(opposite - centroid)) > 0.0 {
                unit = -unit;
            }
            face_normal.push(unit);
            face_area.push(0.5 * norm);
        }

        let edge_length = edges
            .iter()
            .map(|e| (vertices[e[1]] - vertices[e[0]]).norm())
            .collect::<Vec<_>>();

        let mut cell_face_sign = vec![[0i8; 4]; cells.len()];
        let mut cell_edge_sign = vec![[0i8; 6]; cells.len()];
        for (c, cell) in cells.iter().enumerate() {
            for lf in 0..4 {
                let fid = cell_faces[c][lf];
                let tri = faces[fid];
                let centroid = Point3::from(
                    (vertices[tri[0]].coords + vertices[tri[1]].coords + vertices[tri[2]].coords)
                        / 3.0,
                );
                let opposite = vertices[cell[lf]];
                let outward_pointing = face_normal[fid].dot(&(opposite - centroid)) < 0.0;
                cell_face_sign[c][lf] = if outward_pointing { 1 } else { -1 };
            }
            for (le, local) in LOCAL_EDGES.iter().enumerate() {
                cell_edge_sign[c][le] = if cell[local[0]] < cell[local[1]] { 1 } else { -1 };
            }
        }

        // boundary tags
        let mut tags = vec![None; faces.len()];
        for (tri_raw, region) in boundary {
            let mut tri = *tri_raw;
            tri.sort_unstable();
            let fid = *face_index.get(&tri).ok_or_else(|| {
                Error::MeshValidation(format!("boundary tag references unknown face {tri:?}"))
            })?;
            if face_cells[fid].1.is_some() {
                return Err(Error::MeshValidation(format!(
                    "boundary tag on interior face {tri:?}"
                )));
            }
            if tags[fid].is_some() {
                return Err(Error::MeshValidation(format!(
                    "duplicate boundary tag for face {tri:?}"
                )));
            }
            tags[fid] = Some(*region);
        }
        let mut has_dirichlet = false;
        for fid in 0..faces.len() {
            let is_boundary = face_cells[fid].1.is_none();
            match (is_boundary, tags[fid]) {
                (true, None) => {
                    return Err(Error::MeshValidation(format!(
                        "boundary face {:?} is untagged",
                        faces[fid]
                    )))
                }
                (true, Some(BoundaryRegion::Dirichlet)) => has_dirichlet = true,
                _ => {}
            }
        }
        if !has_dirichlet {
            return Err(Error::MeshValidation(
                "Dirichlet boundary region is empty".into(),
            ));
        }

        Ok(Mesh {
            vertices,
            cells,
            faces,
            edges,
            cell_faces,
            cell_face_sign,
            cell_edges,
            cell_edge_sign,
            face_cells,
            face_normal,
            face_area,
            edge_length,
            boundary: tags,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f].1.is_none()
    }

    pub fn region(&self, f: usize) -> Option<BoundaryRegion> {
        self.boundary[f]
    }

    pub fn cell_vertices(&self, c: usize) -> [Point3<f64>; 4] {
        let cell = self.cells[c];
        [
            self.vertices[cell[0]],
            self.vertices[cell[1]],
            self.vertices[cell[2]],
            self.vertices[cell[3]],
        ]
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(&self.cell_vertices(c))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    /// Affine transform data of a cell.
    pub fn element_transform(&self, c: usize) -> Result<ElementTransform> {
        let v = self.cell_vertices(c);
        let f = Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
        let det = f.determinant();
        if det <= 0.0 {
            return Err(Error::MeshValidation(format!(
                "cell {c} has non-positive Jacobian determinant {det:.3e}"
            )));
        }
        let f_inv = f.try_inverse().ok_or_else(|| {
            Error::MeshValidation(format!("cell {c} Jacobian is singular"))
        })?;
        let f_inv_t = f_inv.transpose();
        let h = f.singular_values().max();

        let mut face_jacobian = [0.0; 4];
        let mut face_normal_out = [Vector3::zeros(); 4];
        for lf in 0..4 {
            let fid = self.cell_faces[c][lf];
            face_jacobian[lf] = self.face_area[fid] / ref_face_area(lf);
            face_normal_out[lf] = self.face_normal[fid] * self.cell_face_sign[c][lf] as f64;
        }
        let mut edge_jacobian = [0.0; 6];
        let mut edge_tangent = [Vector3::zeros(); 6];
        for (le, local) in LOCAL_EDGES.iter().enumerate() {
            let d = v[local[1]] - v[local[0]];
            edge_jacobian[le] = d.norm() / ref_edge_length(le);
            edge_tangent[le] = d / d.norm();
        }

        Ok(ElementTransform {
            f,
            f_inv,
            f_inv_t,
            det,
            h,
            face_jacobian,
            face_normal_out,
            edge_jacobian,
            edge_tangent,
        })
    }

    /// Diameter of a face: the longest edge of the triangle.
    pub fn face_diameter(&self, f: usize) -> f64 {
        let tri = self.faces[f];
        let (a, b, c) = (
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        );
        (b - a).norm().max((c - a).norm()).max((c - b).norm())
    }

    /// Largest local mesh size over all cells.
    pub fn mesh_size(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| self.element_transform(c).map(|t| t.h).unwrap_or(0.0))
            .fold(0.0, f64::max)
    }

    /// Shape diagnostics: (min, max) of h_T / (2 · inradius) over cells.
    /// Loaded meshes are reported, never rejected.
    pub fn aspect_ratio_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for c in 0..self.n_cells() {
            let xf = self.element_transform(c).expect("validated cell");
            let area: f64 = (0..4)
                .map(|lf| self.face_area[self.cell_faces[c][lf]])
                .sum();
            let inradius = 3.0 * self.cell_volume(c) / area;
            let ratio = xf.h / (2.0 * inradius);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        (lo, hi)
    }

    /// Euler characteristic V - E + F - C (1 for a solid ball).
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
            - self.n_cells() as i64
    }

    /// Parse the plain-text format: `nv nc nb`, then vertex, cell and tagged
    /// boundary-face lines. Indices are 0-based, tags are `D` or `N`.
    pub fn parse_text(input: &str) -> Result<Mesh> {
        let mut lines = input
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .ok_or_else(|| Error::MeshParse {
                    line: 0,
                    msg: format!("unexpected end of file, expected {what}"),
                })
        };

        let (line, header) = next("header `nv nc nb`")?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 {
            return Err(Error::MeshParse {
                line,
                msg: format!("expected `nv nc nb`, got {} fields", head.len()),
            });
        }
        let parse_count = |line: usize, s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::MeshParse {
                line,
                msg: format!("invalid {what} `{s}`"),
            })
        };
        let nv = parse_count(line, head[0], "vertex count")?;
        let nc = parse_count(line, head[1], "cell count")?;
        let nb = parse_count(line, head[2], "boundary face count")?;

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, l) = next("vertex line `x y z`")?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::MeshParse {
                    line,
                    msg: format!("expected 3 coordinates, got {}", parts.len()),
                });
            }
            let mut xyz = [0.0; 3];
            for (k, p) in parts.iter().enumerate() {
                xyz[k] = p.parse().map_err(|_| Error::MeshParse {
                    line,
                    msg: format!("invalid coordinate `{p}`"),
                })?;
            }
            vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
        }

        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (line, l) = next("cell line `v0 v1 v2 v3`")?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::MeshParse {
                    line,
                    msg: format!("expected 4 vertex indices, got {}", parts.len()),
                });
            }
            let mut cell = [0usize; 4];
            for (k, p) in parts.iter().enumerate() {
                cell[k] = parse_count(line, p, "vertex index")?;
            }
            cells.push(cell);
        }

        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (line, l) = next("boundary line `v0 v1 v2 tag`")?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::MeshParse {
                    line,
                    msg: format!("expected `v0 v1 v2 tag`, got {} fields", parts.len()),
                });
            }
            let mut tri = [0usize; 3];
            for (k, p) in parts.iter().take(3).enumerate() {
                tri[k] = parse_count(line, p, "vertex index")?;
            }
            let region = match parts[3] {
                "D" => BoundaryRegion::Dirichlet,
                "N" => BoundaryRegion::Neumann,
                other => {
                    return Err(Error::MeshParse {
                        line,
                        msg: format!("unknown boundary tag `{other}`, expected D or N"),
                    })
                }
            };
            boundary.push((tri, region));
        }

        if let Some((line, _)) = lines.next() {
            return Err(Error::MeshParse {
                line,
                msg: "trailing content after declared records".into(),
            });
        }

        Mesh::from_parts(vertices, cells, &boundary)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Mesh> {
        let text = std::fs::read_to_string(path)?;
        Mesh::parse_text(&text)
    }

    /// Serialize in the plain-text format accepted by [`Mesh::parse_text`].
    pub fn to_text(&self) -> String {
        let nb = self.boundary.iter().filter(|t| t.is_some()).count();
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.n_vertices(), self.n_cells(), nb).unwrap();
        for v in &self.vertices {
            writeln!(out, "{} {} {}", v.x, v.y, v.z).unwrap();
        }
        for c in &self.cells {
            writeln!(out, "{} {} {} {}", c[0], c[1], c[2], c[3]).unwrap();
        }
        for (f, tag) in self.boundary.iter().enumerate() {
            if let Some(region) = tag {
                let tri = self.faces[f];
                let t = match region {
                    BoundaryRegion::Dirichlet => "D",
                    BoundaryRegion::Neumann => "N",
                };
                writeln!(out, "{} {} {} {}", tri[0], tri[1], tri[2], t).unwrap();
            }
        }
        out
    }
}

/// Uniform Kuhn (6-tetrahedra) subdivision of the unit cube, n cells per
/// axis. Sides listed in `dirichlet_spec` are tagged Dirichlet, the rest
/// Neumann.
pub fn build_structured_cube(n: usize, dirichlet_spec: &[CubeFace]) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "subdivision count must be at least 1".into(),
        ));
    }
    if dirichlet_spec.is_empty() {
        return Err(Error::InvalidArgument(
            "Dirichlet specification must not be empty".into(),
        ));
    }

    let np = n + 1;
    let idx = |i: usize, j: usize, k: usize| (k * np + j) * np + i;
    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push(Point3::new(
                    i as f64 / n as f64,
                    j as f64 / n as f64,
                    k as f64 / n as f64,
                ));
            }
        }
    }

    // the six permutations of the axis path 000 → 111
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let perm_sign = |p: &[usize; 3]| -> bool {
        // true for even permutations
        matches!(p, [0, 1, 2] | [1, 2, 0] | [2, 0, 1])
    };

    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in &PERMS {
                    let mut corner = [i, j, k];
                    let v0 = idx(corner[0], corner[1], corner[2]);
                    corner[perm[0]] += 1;
                    let v1 = idx(corner[0], corner[1], corner[2]);
                    corner[perm[1]] += 1;
                    let v2 = idx(corner[0], corner[1], corner[2]);
                    corner[perm[2]] += 1;
                    let v3 = idx(corner[0], corner[1], corner[2]);
                    if perm_sign(perm) {
                        cells.push([v0, v1, v2, v3]);
                    } else {
                        cells.push([v0, v2, v1, v3]);
                    }
                }
            }
        }
    }

    // tag boundary faces by the cube side they lie on
    let on_side = |p: &Point3<f64>, side: CubeFace| -> bool {
        let eps = 1e-12;
        match side {
            CubeFace::XMin => p.x.abs() < eps,
            CubeFace::XMax => (p.x - 1.0).abs() < eps,
            CubeFace::YMin => p.y.abs() < eps,
            CubeFace::YMax => (p.y - 1.0).abs() < eps,
            CubeFace::ZMin => p.z.abs() < eps,
            CubeFace::ZMax => (p.z - 1.0).abs() < eps,
        }
    };

    // boundary faces: collect from cell faces whose triple lies on a side
    let mut boundary = Vec::new();
    let mut seen: BTreeMap<[usize; 3], ()> = BTreeMap::new();
    for cell in &cells {
        for local in &LOCAL_FACES {
            let mut tri = [cell[local[0]], cell[local[1]], cell[local[2]]];
            tri.sort_unstable();
            if seen.contains_key(&tri) {
                continue;
            }
            let side = CubeFace::ALL.into_iter().find(|&s| {
                tri.iter().all(|&v| on_side(&vertices[v], s))
            });
            if let Some(side) = side {
                seen.insert(tri, ());
                let region = if dirichlet_spec.contains(&side) {
                    BoundaryRegion::Dirichlet
                } else {
                    BoundaryRegion::Neumann
                };
                boundary.push((tri, region));
            }
        }
    }

    Mesh::from_parts(vertices, cells, &boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kuhn_split_counts_n1() {
        let mesh = build_structured_cube(1, &CubeFace::ALL).unwrap();
        assert_eq!(mesh.n_cells(), 6);
        assert_eq!(mesh.n_vertices(), 8);
        assert_eq!(mesh.n_faces(), 18);
        assert_eq!(mesh.n_edges(), 19);
        let n_boundary = (0..mesh.n_faces())
            .filter(|&f| mesh.is_boundary_face(f))
            .count();
        assert_eq!(n_boundary, 12);
    }

    #[test]
    fn kuhn_split_counts_n2() {
        let mesh = build_structured_cube(2, &CubeFace::ALL).unwrap();
        assert_eq!(mesh.n_cells(), 48);
        assert_eq!(mesh.n_vertices(), 27);
    }

    #[test]
    fn volumes_partition_unit_cube() {
        for n in 1..=3 {
            let mesh = build_structured_cube(n, &[CubeFace::XMin]).unwrap();
            assert_abs_diff_eq!(mesh.total_volume(), 1.0, epsilon = 1e-12);
            for c in 0..mesh.n_cells() {
                assert!(mesh.cell_volume(c) > 0.0);
            }
        }
    }

    #[test]
    fn euler_characteristic_is_one() {
        for n in 1..=3 {
            let mesh = build_structured_cube(n, &CubeFace::ALL).unwrap();
            assert_eq!(mesh.euler_characteristic(), 1, "n = {n}");
        }
    }

    #[test]
    fn invalid_arguments_rejected() {
        assert!(matches!(
            build_structured_cube(0, &CubeFace::ALL),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            build_structured_cube(1, &[]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn reflected_cell_rejected() {
        let vertices = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        // swapped vertex order → negative volume
        let cells = vec![[0, 2, 1, 3]];
        let boundary: Vec<([usize; 3], BoundaryRegion)> = vec![];
        assert!(matches!(
            Mesh::from_parts(vertices, cells, &boundary),
            Err(Error::MeshValidation(_))
        ));
    }

    #[test]
    fn interior_normals_antiparallel() {
        let mesh = build_structured_cube(2, &CubeFace::ALL).unwrap();
        for f in 0..mesh.n_faces() {
            if let (c1, Some(c2)) = mesh.face_cells[f] {
                let lf1 = mesh.cell_faces[c1].iter().position(|&g| g == f).unwrap();
                let lf2 = mesh.cell_faces[c2].iter().position(|&g| g == f).unwrap();
                let n1 = mesh.element_transform(c1).unwrap().face_normal_out[lf1];
                let n2 = mesh.element_transform(c2).unwrap().face_normal_out[lf2];
                assert!((n1 + n2).norm() < 1e-14, "face {f}: normals not antiparallel");
                // stored normal equals one of them, per the recorded signs
                let s1 = mesh.cell_face_sign[c1][lf1] as f64;
                assert!((mesh.face_normal[f] - n1 * s1).norm() < 1e-14);
                // lower cell owns the orientation
                assert_eq!(mesh.cell_face_sign[c1.min(c2)][if c1 < c2 { lf1 } else { lf2 }], 1);
            } else {
                // boundary: stored normal is outward
                let (c1, _) = mesh.face_cells[f];
                let lf1 = mesh.cell_faces[c1].iter().position(|&g| g == f).unwrap();
                assert_eq!(mesh.cell_face_sign[c1][lf1], 1);
            }
        }
    }

    #[test]
    fn refinement_scales_areas_and_sizes() {
        let coarse = build_structured_cube(1, &CubeFace::ALL).unwrap();
        let fine = build_structured_cube(2, &CubeFace::ALL).unwrap();
        let mut areas_c: Vec<f64> = coarse.face_area.clone();
        let mut areas_f: Vec<f64> = fine.face_area.iter().map(|a| a * 4.0).collect();
        areas_c.sort_by(f64::total_cmp);
        areas_c.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        areas_f.sort_by(f64::total_cmp);
        areas_f.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        assert_eq!(areas_c.len(), areas_f.len());
        for (a, b) in areas_c.iter().zip(&areas_f) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }

        let h_c = coarse.mesh_size();
        let h_f = fine.mesh_size();
        assert_abs_diff_eq!(h_c, 2.0 * h_f, epsilon = 1e-13);
    }

    #[test]
    fn transform_identity_and_scaling() {
        // reference tetrahedron as a single cell, slanted face Dirichlet
        let vertices = REF_VERTS.iter().map(|v| Point3::new(v[0], v[1], v[2])).collect();
        let cells = vec![[0, 1, 2, 3]];
        let boundary = vec![
            ([1, 2, 3], BoundaryRegion::Dirichlet),
            ([0, 2, 3], BoundaryRegion::Neumann),
            ([0, 1, 3], BoundaryRegion::Neumann),
            ([0, 1, 2], BoundaryRegion::Neumann),
        ];
        let mesh = Mesh::from_parts(vertices, cells, &boundary).unwrap();
        let xf = mesh.element_transform(0).unwrap();
        assert_abs_diff_eq!(xf.det, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(xf.h, 1.0, epsilon = 1e-14);
        assert!((xf.f - Matrix3::identity()).norm() < 1e-15);

        // scaled by 2
        let vertices2 = REF_VERTS
            .iter()
            .map(|v| Point3::new(2.0 * v[0], 2.0 * v[1], 2.0 * v[2]))
            .collect();
        let mesh2 = Mesh::from_parts(vertices2, vec![[0, 1, 2, 3]], &boundary).unwrap();
        let xf2 = mesh2.element_transform(0).unwrap();
        assert_abs_diff_eq!(xf2.det, 8.0, epsilon = 1e-13);
        assert_abs_diff_eq!(xf2.h, 2.0, epsilon = 1e-13);
        for lf in 0..4 {
            assert_abs_diff_eq!(xf2.face_jacobian[lf], 4.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn normal_transform_formula() {
        // n_F = (J_T / J_F) F^{-T} n̂ normalized matches the geometric normal
        let mesh = build_structured_cube(1, &CubeFace::ALL).unwrap();
        for c in 0..mesh.n_cells() {
            let xf = mesh.element_transform(c).unwrap();
            for lf in 0..4 {
                let formula = (xf.det / xf.face_jacobian[lf]) * (xf.f_inv_t * ref_face_normal(lf));
                assert!(
                    (formula - xf.face_normal_out[lf]).norm() < 1e-12,
                    "cell {c} face {lf}"
                );
                assert_abs_diff_eq!(formula.norm(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tangent_transform_formula() {
        let mesh = build_structured_cube(2, &CubeFace::ALL).unwrap();
        for c in [0usize, 17, 30] {
            let xf = mesh.element_transform(c).unwrap();
            for (le, local) in LOCAL_EDGES.iter().enumerate() {
                let that = Vector3::from_row_slice(&REF_VERTS[local[1]])
                    - Vector3::from_row_slice(&REF_VERTS[local[0]]);
                let that = that / that.norm();
                // J_E is the measure ratio, so (1/J_E) F t̂ comes out unit
                let formula = (xf.f * that) / xf.edge_jacobian[le];
                assert!((formula - xf.edge_tangent[le]).norm() < 1e-12);
                assert_abs_diff_eq!(formula.norm(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn face_diameter_examples() {
        // unit right triangle face: diameter sqrt(2)
        let mesh = build_structured_cube(1, &CubeFace::ALL).unwrap();
        let diam: Vec<f64> = (0..mesh.n_faces()).map(|f| mesh.face_diameter(f)).collect();
        let max = diam.iter().fold(0.0f64, |a, &b| a.max(b));
        let min = diam.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert_abs_diff_eq!(min, 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(max, 3f64.sqrt(), epsilon = 1e-14); // diagonal faces
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let mesh = build_structured_cube(1, &[CubeFace::XMin]).unwrap();
        let text = mesh.to_text();
        let reparsed = Mesh::parse_text(&text).unwrap();
        assert_eq!(reparsed.n_cells(), mesh.n_cells());
        assert_eq!(reparsed.n_faces(), mesh.n_faces());

        let bad = "2 1 0\n0 0 0\n";
        match Mesh::parse_text(bad) {
            Err(Error::MeshParse { .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }

        let bad_tag = "4 1 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3\n1 2 3 D\n0 2 3 N\n0 1 3 N\n0 1 2 X\n";
        match Mesh::parse_text(bad_tag) {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 10),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
