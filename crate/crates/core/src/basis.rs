//! Construction of the local dual bases and their evaluation tables.
//!
//! Degree-of-freedom functionals are defined on the physical element using
//! the globally fixed entity parametrizations (vertices sorted by global
//! id). Each cell's shape functions are the exact dual of its functional
//! set, obtained by inverting the DOF-Vandermonde matrix over pushed
//! candidate fields. Shared entities therefore receive identical functionals
//! from all incident cells, which makes normal-normal and tangential
//! continuity hold by construction.
//!
//! The canonical reference basis is the same construction run on the
//! reference tetrahedron with identity geometry and ascending local vertex
//! order.

use crate::error::{Error, Result};
use crate::mesh::{
    ref_edge_length, ref_face_area, ref_face_normal, ElementTransform, Mesh, LOCAL_EDGES,
    LOCAL_FACES, REF_VERTS,
};
use crate::poly::{IntervalPolyBasis, TetPolyBasis, TriPolyBasis};
use crate::quadrature::{edge_rule, tet_rule, tri_rule, QuadRule};
use crate::reference::{
    dof_list, reference_tensors, Candidates, DofKind, ReferenceBasis, Space, SymTensor3,
};
use crate::transform::{push_sigma, push_v, push_w};
use nalgebra::{DMatrix, DVector, Matrix3, Point3, Vector3};
use std::sync::Arc;

/// Geometry of one face of a cell: the global parametrization of the face
/// pulled back to reference coordinates, plus physical frame data.
#[derive(Debug, Clone)]
pub struct FaceGeom {
    /// reference coordinates of the parametrization origin (first global vertex)
    pub origin_ref: Vector3<f64>,
    pub u_ref: Vector3<f64>,
    pub v_ref: Vector3<f64>,
    /// physical edge vectors of the parametrization
    pub origin_phys: Point3<f64>,
    pub u_phys: Vector3<f64>,
    pub v_phys: Vector3<f64>,
    pub area: f64,
    /// constant J_F weight in the stress face moments (2 · area)
    pub jf_weight: f64,
    /// globally oriented unit normal
    pub normal: Vector3<f64>,
    /// orthonormal in-plane frame
    pub frame_u: Vector3<f64>,
    pub frame_v: Vector3<f64>,
    pub diameter: f64,
}

impl FaceGeom {
    pub fn ref_point(&self, u: f64, v: f64) -> Vector3<f64> {
        self.origin_ref + self.u_ref * u + self.v_ref * v
    }

    pub fn phys_point(&self, u: f64, v: f64) -> Point3<f64> {
        self.origin_phys + self.u_phys * u + self.v_phys * v
    }

    /// Test field of the displacement face moments.
    pub fn v_test_field(&self, component: usize, u: f64, v: f64) -> Vector3<f64> {
        match component {
            0 => self.frame_u,
            1 => self.frame_v,
            2 => (self.u_phys * u + self.v_phys * v) / self.diameter,
            _ => panic!("face moment component {component}"),
        }
    }
}

/// Geometry of one edge of a cell in global orientation.
#[derive(Debug, Clone)]
pub struct EdgeGeom {
    pub a_ref: Vector3<f64>,
    pub b_ref: Vector3<f64>,
    pub a_phys: Point3<f64>,
    pub d_phys: Vector3<f64>,
    pub length: f64,
    /// unit tangent in global direction (ascending vertex ids)
    pub tangent: Vector3<f64>,
}

impl EdgeGeom {
    pub fn ref_point(&self, s: f64) -> Vector3<f64> {
        self.a_ref + (self.b_ref - self.a_ref) * s
    }

    pub fn phys_point(&self, s: f64) -> Point3<f64> {
        self.a_phys + self.d_phys * s
    }
}

/// Geometry context of one cell: transform plus globally oriented entities.
#[derive(Debug, Clone)]
pub struct GeomCtx {
    pub xf: ElementTransform,
    pub v0: Point3<f64>,
    pub faces: [FaceGeom; 4],
    pub edges: [EdgeGeom; 6],
}

fn orthonormal_frame(u: Vector3<f64>, v: Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let fu = u / u.norm();
    let proj = v - fu * v.dot(&fu);
    (fu, proj / proj.norm())
}

/// Global parametrization data of a mesh face, independent of any cell.
#[derive(Debug, Clone)]
pub struct GlobalFace {
    pub a: Point3<f64>,
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
    pub area: f64,
    pub jf_weight: f64,
    pub normal: Vector3<f64>,
    pub frame_u: Vector3<f64>,
    pub frame_v: Vector3<f64>,
    pub diameter: f64,
}

impl GlobalFace {
    pub fn phys_point(&self, u: f64, v: f64) -> Point3<f64> {
        self.a + self.u * u + self.v * v
    }

    pub fn v_test_field(&self, component: usize, u: f64, v: f64) -> Vector3<f64> {
        match component {
            0 => self.frame_u,
            1 => self.frame_v,
            2 => (self.u * u + self.v * v) / self.diameter,
            _ => panic!("face moment component {component}"),
        }
    }
}

pub fn global_face(mesh: &Mesh, fid: usize) -> GlobalFace {
    let tri = mesh.faces[fid];
    let a = mesh.vertices[tri[0]];
    let u = mesh.vertices[tri[1]] - a;
    let v = mesh.vertices[tri[2]] - a;
    let (fu, fv) = orthonormal_frame(u, v);
    GlobalFace {
        a,
        u,
        v,
        area: mesh.face_area[fid],
        jf_weight: 2.0 * mesh.face_area[fid],
        normal: mesh.face_normal[fid],
        frame_u: fu,
        frame_v: fv,
        diameter: mesh.face_diameter(fid),
    }
}

/// Global parametrization data of a mesh edge.
#[derive(Debug, Clone)]
pub struct GlobalEdge {
    pub a: Point3<f64>,
    pub d: Vector3<f64>,
    pub length: f64,
    pub tangent: Vector3<f64>,
}

impl GlobalEdge {
    pub fn phys_point(&self, s: f64) -> Point3<f64> {
        self.a + self.d * s
    }
}

pub fn global_edge(mesh: &Mesh, eid: usize) -> GlobalEdge {
    let [a, b] = mesh.edges[eid];
    let pa = mesh.vertices[a];
    let d = mesh.vertices[b] - pa;
    let length = mesh.edge_length[eid];
    GlobalEdge {
        a: pa,
        d,
        length,
        tangent: d / length,
    }
}

/// Identity-geometry context with ascending local vertex order.
pub fn canonical_ctx() -> GeomCtx {
    let refv = |i: usize| Vector3::from_row_slice(&REF_VERTS[i]);
    let faces = std::array::from_fn(|lf| {
        let [a, b, c] = LOCAL_FACES[lf];
        let origin = refv(a);
        let u = refv(b) - origin;
        let v = refv(c) - origin;
        let area = ref_face_area(lf);
        let (fu, fv) = orthonormal_frame(u, v);
        FaceGeom {
            origin_ref: origin,
            u_ref: u,
            v_ref: v,
            origin_phys: Point3::from(origin),
            u_phys: u,
            v_phys: v,
            area,
            jf_weight: 2.0 * area,
            normal: ref_face_normal(lf),
            frame_u: fu,
            frame_v: fv,
            diameter: 2f64.sqrt(),
        }
    });
    let edges = std::array::from_fn(|le| {
        let [a, b] = LOCAL_EDGES[le];
        let (ar, br) = (refv(a), refv(b));
        let d = br - ar;
        EdgeGeom {
            a_ref: ar,
            b_ref: br,
            a_phys: Point3::from(ar),
            d_phys: d,
            length: ref_edge_length(le),
            tangent: d / d.norm(),
        }
    });
    GeomCtx {
        xf: identity_transform(),
        v0: Point3::origin(),
        faces,
        edges,
    }
}

fn identity_transform() -> ElementTransform {
    ElementTransform {
        f: Matrix3::identity(),
        f_inv: Matrix3::identity(),
        f_inv_t: Matrix3::identity(),
        det: 1.0,
        h: 1.0,
        face_jacobian: [1.0; 4],
        face_normal_out: std::array::from_fn(ref_face_normal),
        edge_jacobian: [1.0; 6],
        edge_tangent: std::array::from_fn(|le| {
            let [a, b] = LOCAL_EDGES[le];
            let d = Vector3::from_row_slice(&REF_VERTS[b]) - Vector3::from_row_slice(&REF_VERTS[a]);
            d / d.norm()
        }),
    }
}

/// Geometry context of a mesh cell.
pub fn cell_ctx(mesh: &Mesh, c: usize) -> Result<GeomCtx> {
    let xf = mesh.element_transform(c)?;
    let cell = mesh.cells[c];
    let refv = |i: usize| Vector3::from_row_slice(&REF_VERTS[i]);
    let local_of = |g: usize| -> usize {
        cell.iter()
            .position(|&v| v == g)
            .expect("global vertex belongs to cell")
    };

    let mut faces = Vec::with_capacity(4);
    for lf in 0..4 {
        let fid = mesh.cell_faces[c][lf];
        let tri = mesh.faces[fid];
        let gf = global_face(mesh, fid);
        let origin_ref = refv(local_of(tri[0]));
        let u_ref = refv(local_of(tri[1])) - origin_ref;
        let v_ref = refv(local_of(tri[2])) - origin_ref;
        faces.push(FaceGeom {
            origin_ref,
            u_ref,
            v_ref,
            origin_phys: gf.a,
            u_phys: gf.u,
            v_phys: gf.v,
            area: gf.area,
            jf_weight: gf.jf_weight,
            normal: gf.normal,
            frame_u: gf.frame_u,
            frame_v: gf.frame_v,
            diameter: gf.diameter,
        });
    }

    let mut edges = Vec::with_capacity(6);
    for le in 0..6 {
        let eid = mesh.cell_edges[c][le];
        let [a, b] = mesh.edges[eid];
        let ge = global_edge(mesh, eid);
        let a_ref = refv(local_of(a));
        let b_ref = refv(local_of(b));
        edges.push(EdgeGeom {
            a_ref,
            b_ref,
            a_phys: ge.a,
            d_phys: ge.d,
            length: ge.length,
            tangent: ge.tangent,
        });
    }

    Ok(GeomCtx {
        xf,
        v0: mesh.vertices[cell[0]],
        faces: faces.try_into().unwrap(),
        edges: edges.try_into().unwrap(),
    })
}

/// Field handed to a DOF functional: physical values as a function of
/// reference coordinates of the owning cell.
pub enum FieldEval<'a> {
    Stress(&'a mut dyn FnMut(&Vector3<f64>) -> SymTensor3),
    Vector(&'a mut dyn FnMut(&Vector3<f64>) -> Vector3<f64>),
    Scalar(&'a mut dyn FnMut(&Vector3<f64>) -> f64),
}

/// Moment polynomials and quadrature rules needed to apply the DOF
/// functionals of one space at one quadrature degree.
pub struct FunctionalEngine {
    pub space: Space,
    pub k: usize,
    tri_basis: TriPolyBasis,
    interval: IntervalPolyBasis,
    p_lo: Option<TetPolyBasis>,
    p_hi: Option<TetPolyBasis>,
    tensors: [SymTensor3; 6],
    tri_quad: QuadRule,
    tet_quad: QuadRule,
    edge_quad: (Vec<f64>, Vec<f64>),
}

impl FunctionalEngine {
    /// `degree`: quadrature exactness used for all entity integrals.
    pub fn new(space: Space, k: usize, degree: usize) -> Result<Self> {
        order_check(k)?;
        Ok(FunctionalEngine {
            space,
            k,
            tri_basis: TriPolyBasis::new(k),
            interval: IntervalPolyBasis::new(k.max(1)),
            p_lo: (space == Space::Sigma).then(|| TetPolyBasis::new(k - 1)),
            p_hi: (space == Space::Sigma).then(|| TetPolyBasis::new(k)),
            tensors: reference_tensors(),
            tri_quad: tri_rule(degree)?,
            tet_quad: tet_rule(degree)?,
            edge_quad: edge_rule(degree),
        })
    }

    /// Apply one functional to a field given in the cell's reference frame.
    pub fn apply(&self, dof: &DofKind, ctx: &GeomCtx, field: &mut FieldEval) -> f64 {
        match (dof, field) {
            (DofKind::SigmaFace { local_face, moment }, FieldEval::Stress(f)) => {
                let fg = &ctx.faces[*local_face];
                let mut acc = 0.0;
                for q in 0..self.tri_quad.len() {
                    let uv = self.tri_quad.point_uv(q);
                    let w = self.tri_quad.weights[q];
                    let tau = f(&fg.ref_point(uv.x, uv.y));
                    acc += w * tau.nn(&fg.normal) * self.tri_basis.eval(*moment, &uv);
                }
                fg.jf_weight * 2.0 * fg.area * acc
            }
            (DofKind::SigmaInterior { tensor, moment }, FieldEval::Stress(f)) => {
                let poly = if *tensor < 4 {
                    self.p_lo.as_ref().unwrap()
                } else {
                    self.p_hi.as_ref().unwrap()
                };
                let s_phys = self.tensors[*tensor].congruence(&ctx.xf.f_inv_t);
                let jt = ctx.xf.det;
                let mut acc = 0.0;
                for q in 0..self.tet_quad.len() {
                    let p = self.tet_quad.point_xyz(q);
                    let w = self.tet_quad.weights[q];
                    acc += w * f(&p).frob_dot(&s_phys) * poly.eval(*moment, &p);
                }
                jt * jt * acc
            }
            (DofKind::VEdge { local_edge, moment }, FieldEval::Vector(f)) => {
                let eg = &ctx.edges[*local_edge];
                let (pts, wts) = &self.edge_quad;
                let mut acc = 0.0;
                for (s, w) in pts.iter().zip(wts) {
                    let v = f(&eg.ref_point(*s));
                    acc += w * v.dot(&eg.tangent) * self.interval.eval(*moment, *s);
                }
                eg.length * acc
            }
            (DofKind::VFace { local_face, component }, FieldEval::Vector(f)) => {
                let fg = &ctx.faces[*local_face];
                let mut acc = 0.0;
                for q in 0..self.tri_quad.len() {
                    let uv = self.tri_quad.point_uv(q);
                    let w = self.tri_quad.weights[q];
                    let v = f(&fg.ref_point(uv.x, uv.y));
                    acc += w * v.dot(&fg.v_test_field(*component, uv.x, uv.y));
                }
                2.0 * fg.area * acc
            }
            (DofKind::WVertex { local_vertex }, FieldEval::Scalar(f)) => {
                f(&Vector3::from_row_slice(&REF_VERTS[*local_vertex]))
            }
            (DofKind::WEdge { local_edge, moment }, FieldEval::Scalar(f)) => {
                let eg = &ctx.edges[*local_edge];
                let (pts, wts) = &self.edge_quad;
                let mut acc = 0.0;
                for (s, w) in pts.iter().zip(wts) {
                    // averaged moments with weights {1, 1 + Legendre_m}; every
                    // functional maps the constant 1 to 1
                    let weight = if *moment == 0 {
                        1.0
                    } else {
                        1.0 + self.interval.eval(*moment, *s)
                    };
                    acc += w * f(&eg.ref_point(*s)) * weight;
                }
                acc
            }
            (DofKind::WFace { local_face }, FieldEval::Scalar(f)) => {
                let fg = &ctx.faces[*local_face];
                let mut acc = 0.0;
                for q in 0..self.tri_quad.len() {
                    let uv = self.tri_quad.point_uv(q);
                    acc += self.tri_quad.weights[q] * f(&fg.ref_point(uv.x, uv.y));
                }
                2.0 * acc
            }
            _ => panic!("functional {dof:?} applied to a field of the wrong kind"),
        }
    }
}

fn order_check(k: usize) -> Result<()> {
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidArgument(format!("unsupported order k = {k}")));
    }
    Ok(())
}

/// Build the DOF-Vandermonde over pushed candidates and invert it.
///
/// Returns the coefficient matrix (column j = candidate weights of shape j)
/// and the condition number of the Vandermonde matrix.
fn build_dual(
    space: Space,
    k: usize,
    ctx: &GeomCtx,
    engine: &FunctionalEngine,
    candidates: &Candidates,
    dofs: &[DofKind],
    cell: Option<usize>,
) -> Result<(DMatrix<f64>, f64)> {
    let n = dofs.len();
    assert_eq!(n, candidates.len(), "DOF count must match space dimension");
    let mut vand = DMatrix::zeros(n, n);
    for j in 0..n {
        match space {
            Space::Sigma => {
                let mut f = |p: &Vector3<f64>| {
                    push_sigma(&candidates.sigma_value(j, p), &ctx.xf).value
                };
                let mut field = FieldEval::Stress(&mut f);
                for (i, dof) in dofs.iter().enumerate() {
                    vand[(i, j)] = engine.apply(dof, ctx, &mut field);
                }
            }
            Space::V => {
                let mut f = |p: &Vector3<f64>| {
                    push_v(&candidates.v_value(j, p), &candidates.v_grad(j, p), &ctx.xf).value
                };
                let mut field = FieldEval::Vector(&mut f);
                for (i, dof) in dofs.iter().enumerate() {
                    vand[(i, j)] = engine.apply(dof, ctx, &mut field);
                }
            }
            Space::W => {
                let mut f = |p: &Vector3<f64>| {
                    push_w(candidates.w_value(j, p), &candidates.w_grad(j, p), &ctx.xf).value
                };
                let mut field = FieldEval::Scalar(&mut f);
                for (i, dof) in dofs.iter().enumerate() {
                    vand[(i, j)] = engine.apply(dof, ctx, &mut field);
                }
            }
        }
    }

    let svd = vand.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * smax {
        return Err(Error::SingularVandermonde {
            space: space.name(),
            order: k,
            cell,
        });
    }
    let cond = smax / smin;

    let lu = vand.lu();
    let coeffs = lu
        .solve(&DMatrix::identity(n, n))
        .ok_or(Error::SingularVandermonde {
            space: space.name(),
            order: k,
            cell,
        })?;
    Ok((coeffs, cond))
}

/// Canonical reference basis: identity geometry, ascending local order.
pub fn build_reference_basis(space: Space, k: usize) -> Result<ReferenceBasis> {
    let order = match space {
        Space::W => k + 1,
        _ => k,
    };
    let candidates = Candidates::new(space, order);
    let dofs = dof_list(space, k);
    let ctx = canonical_ctx();
    let engine = FunctionalEngine::new(space, k, 2 * order + 2)?;
    let (coeffs, cond) = build_dual(space, k, &ctx, &engine, &candidates, &dofs, None)?;
    Ok(ReferenceBasis {
        space,
        order,
        dofs,
        candidates,
        coeffs,
        vandermonde_condition: cond,
    })
}

/// Dual bases of every cell of a mesh for one space.
pub struct ElementBases {
    pub space: Space,
    /// spec order k; the W space has polynomial order k+1
    pub k: usize,
    pub reference: Arc<ReferenceBasis>,
    pub dofs: Vec<DofKind>,
    pub cell_coeffs: Vec<DMatrix<f64>>,
    pub ctxs: Vec<GeomCtx>,
}

impl ElementBases {
    pub fn n_local(&self) -> usize {
        self.dofs.len()
    }
}

/// Build the per-cell dual bases, validating unisolvence on every cell.
pub fn build_element_bases(mesh: &Mesh, space: Space, k: usize) -> Result<ElementBases> {
    let reference = match space {
        Space::Sigma => crate::reference::build_sigma_basis(k)?,
        Space::V => crate::reference::build_v_basis(k)?,
        Space::W => crate::reference::build_w_basis(k + 1)?,
    };
    let dofs = dof_list(space, k);
    let order = reference.order;
    let engine = FunctionalEngine::new(space, k, 2 * order + 2)?;
    let mut cell_coeffs = Vec::with_capacity(mesh.n_cells());
    let mut ctxs = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let ctx = cell_ctx(mesh, c)?;
        let (coeffs, _) = build_dual(
            space,
            k,
            &ctx,
            &engine,
            &reference.candidates,
            &dofs,
            Some(c),
        )?;
        cell_coeffs.push(coeffs);
        ctxs.push(ctx);
    }
    Ok(ElementBases {
        space,
        k,
        reference,
        dofs,
        cell_coeffs,
        ctxs,
    })
}

/// Physical stress shape values at reference points, shape-major.
pub fn sigma_tables(bases: &ElementBases, c: usize, pts: &[Vector3<f64>]) -> Vec<SymTensor3> {
    let cand = &bases.reference.candidates;
    let coeffs = &bases.cell_coeffs[c];
    let xf = &bases.ctxs[c].xf;
    let n = bases.n_local();
    let ncand = cand.len();
    // candidate reference values once per point
    let cand_vals: Vec<SymTensor3> = pts
        .iter()
        .flat_map(|p| (0..ncand).map(move |i| cand.sigma_value(i, p)))
        .collect();
    let mut out = vec![SymTensor3::ZERO; n * pts.len()];
    for (q, _) in pts.iter().enumerate() {
        for j in 0..n {
            let mut acc = SymTensor3::ZERO;
            for i in 0..ncand {
                let w = coeffs[(i, j)];
                if w != 0.0 {
                    acc += cand_vals[q * ncand + i] * w;
                }
            }
            out[j * pts.len() + q] = push_sigma(&acc, xf).value;
        }
    }
    out
}

/// Physical displacement shape values, strains and curls at reference points.
pub struct VTables {
    pub value: Vec<Vector3<f64>>,
    pub strain: Vec<SymTensor3>,
    pub curl: Vec<Vector3<f64>>,
    pub n_pts: usize,
}

pub fn v_tables(bases: &ElementBases, c: usize, pts: &[Vector3<f64>]) -> VTables {
    let cand = &bases.reference.candidates;
    let coeffs = &bases.cell_coeffs[c];
    let xf = &bases.ctxs[c].xf;
    let n = bases.n_local();
    let ncand = cand.len();
    let mut value = vec![Vector3::zeros(); n * pts.len()];
    let mut strain = vec![SymTensor3::ZERO; n * pts.len()];
    let mut curl = vec![Vector3::zeros(); n * pts.len()];
    for (q, p) in pts.iter().enumerate() {
        let vals: Vec<Vector3<f64>> = (0..ncand).map(|i| cand.v_value(i, p)).collect();
        let grads: Vec<Matrix3<f64>> = (0..ncand).map(|i| cand.v_grad(i, p)).collect();
        for j in 0..n {
            let mut v = Vector3::zeros();
            let mut g = Matrix3::zeros();
            for i in 0..ncand {
                let w = coeffs[(i, j)];
                if w != 0.0 {
                    v += vals[i] * w;
                    g += grads[i] * w;
                }
            }
            let pushed = push_v(&v, &g, xf);
            value[j * pts.len() + q] = pushed.value;
            strain[j * pts.len() + q] = pushed.strain;
            curl[j * pts.len() + q] = pushed.curl;
        }
    }
    VTables {
        value,
        strain,
        curl,
        n_pts: pts.len(),
    }
}

/// Physical scalar shape values and gradients at reference points.
pub struct WTables {
    pub value: Vec<f64>,
    pub grad: Vec<Vector3<f64>>,
    pub n_pts: usize,
}

pub fn w_tables(bases: &ElementBases, c: usize, pts: &[Vector3<f64>]) -> WTables {
    let cand = &bases.reference.candidates;
    let coeffs = &bases.cell_coeffs[c];
    let xf = &bases.ctxs[c].xf;
    let n = bases.n_local();
    let ncand = cand.len();
    let mut value = vec![0.0; n * pts.len()];
    let mut grad = vec![Vector3::zeros(); n * pts.len()];
    for (q, p) in pts.iter().enumerate() {
        let vals: Vec<f64> = (0..ncand).map(|i| cand.w_value(i, p)).collect();
        let grads: Vec<Vector3<f64>> = (0..ncand).map(|i| cand.w_grad(i, p)).collect();
        for j in 0..n {
            let mut v = 0.0;
            let mut g = Vector3::zeros();
            for i in 0..ncand {
                let w = coeffs[(i, j)];
                if w != 0.0 {
                    v += vals[i] * w;
                    g += grads[i] * w;
                }
            }
            let pushed = push_w(v, &g, xf);
            value[j * pts.len() + q] = pushed.value;
            grad[j * pts.len() + q] = pushed.gradient;
        }
    }
    WTables {
        value,
        grad,
        n_pts: pts.len(),
    }
}

/// Physical Hessians ε(∇φ) of the scalar shapes at reference points.
pub fn w_hessian_tables(bases: &ElementBases, c: usize, pts: &[Vector3<f64>]) -> Vec<SymTensor3> {
    let cand = &bases.reference.candidates;
    let coeffs = &bases.cell_coeffs[c];
    let xf = &bases.ctxs[c].xf;
    let n = bases.n_local();
    let ncand = cand.len();
    let mut out = vec![SymTensor3::ZERO; n * pts.len()];
    for (q, p) in pts.iter().enumerate() {
        let hess: Vec<SymTensor3> = (0..ncand)
            .map(|i| scalar_hessian(&cand.scalar, i, p))
            .collect();
        for j in 0..n {
            let mut h = SymTensor3::ZERO;
            for i in 0..ncand {
                let w = coeffs[(i, j)];
                if w != 0.0 {
                    h += hess[i] * w;
                }
            }
            out[j * pts.len() + q] = crate::transform::push_hessian(&h, xf);
        }
    }
    out
}

fn scalar_hessian(basis: &TetPolyBasis, i: usize, p: &Vector3<f64>) -> SymTensor3 {
    use crate::poly::powi;
    let mut h = [0.0; 6];
    for (j, m) in basis.monomials.iter().enumerate() {
        let c = basis.coeffs[(i, j)];
        if c == 0.0 {
            continue;
        }
        let [a, b, d] = *m;
        let term = |da: usize, db: usize, dd: usize| -> f64 {
            if a < da || b < db || d < dd {
                return 0.0;
            }
            let mut coef = 1.0;
            for t in 0..da {
                coef *= (a - t) as f64;
            }
            for t in 0..db {
                coef *= (b - t) as f64;
            }
            for t in 0..dd {
                coef *= (d - t) as f64;
            }
            coef * powi(p.x, a - da) * powi(p.y, b - db) * powi(p.z, d - dd)
        };
        h[0] += c * term(2, 0, 0);
        h[1] += c * term(0, 2, 0);
        h[2] += c * term(0, 0, 2);
        h[3] += c * term(1, 1, 0);
        h[4] += c * term(1, 0, 1);
        h[5] += c * term(0, 1, 1);
    }
    SymTensor3(h)
}

/// Reference points of the local parametrization of face `lf`
/// (used for cell-local face integrals where orientation is irrelevant).
pub fn local_face_points(lf: usize, rule: &QuadRule) -> Vec<Vector3<f64>> {
    let [a, b, c] = LOCAL_FACES[lf];
    let refv = |i: usize| Vector3::from_row_slice(&REF_VERTS[i]);
    let (pa, pb, pc) = (refv(a), refv(b), refv(c));
    (0..rule.len())
        .map(|q| {
            let uv = rule.point_uv(q);
            pa + (pb - pa) * uv.x + (pc - pa) * uv.y
        })
        .collect()
}

/// Reference points (in cell `c`) of the global parametrization of face `fid`.
pub fn global_face_points(
    mesh: &Mesh,
    c: usize,
    fid: usize,
    rule: &QuadRule,
) -> Vec<Vector3<f64>> {
    let cell = mesh.cells[c];
    let tri = mesh.faces[fid];
    let refv = |g: usize| {
        let l = cell.iter().position(|&v| v == g).expect("face vertex in cell");
        Vector3::from_row_slice(&REF_VERTS[l])
    };
    let (pa, pb, pc) = (refv(tri[0]), refv(tri[1]), refv(tri[2]));
    (0..rule.len())
        .map(|q| {
            let uv = rule.point_uv(q);
            pa + (pb - pa) * uv.x + (pc - pa) * uv.y
        })
        .collect()
}

/// Evaluate a finite element stress field from global coefficients.
pub fn eval_sigma_fe(
    bases: &ElementBases,
    cell_dofs: &[usize],
    coeffs: &DVector<f64>,
    c: usize,
    p: &Vector3<f64>,
) -> SymTensor3 {
    let tables = sigma_tables(bases, c, std::slice::from_ref(p));
    let mut acc = SymTensor3::ZERO;
    for (j, &g) in cell_dofs.iter().enumerate() {
        acc += tables[j] * coeffs[g];
    }
    acc
}

/// Evaluate a finite element displacement field from global coefficients.
pub fn eval_v_fe(
    bases: &ElementBases,
    cell_dofs: &[usize],
    coeffs: &DVector<f64>,
    c: usize,
    p: &Vector3<f64>,
) -> Vector3<f64> {
    let tables = v_tables(bases, c, std::slice::from_ref(p));
    let mut acc = Vector3::zeros();
    for (j, &g) in cell_dofs.iter().enumerate() {
        acc += tables.value[j] * coeffs[g];
    }
    acc
}

/// Evaluate a finite element scalar field from global coefficients.
pub fn eval_w_fe(
    bases: &ElementBases,
    cell_dofs: &[usize],
    coeffs: &DVector<f64>,
    c: usize,
    p: &Vector3<f64>,
) -> (f64, Vector3<f64>) {
    let tables = w_tables(bases, c, std::slice::from_ref(p));
    let mut val = 0.0;
    let mut grad = Vector3::zeros();
    for (j, &g) in cell_dofs.iter().enumerate() {
        val += tables.value[j] * coeffs[g];
        grad += tables.grad[j] * coeffs[g];
    }
    (val, grad)
}
