//! The three interpolation operators: nodal/moment scalar interpolation,
//! moment-based displacement interpolation and the weighted stress
//! interpolant defined by vanishing face and interior moments.
//!
//! Coefficients are the DOF functionals applied to the input field. Because
//! each cell's basis is dual to exactly these functionals, the defining
//! orthogonality conditions hold by construction and piecewise polynomials
//! of the local space are reproduced.

use crate::basis::{global_edge, global_face};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::poly::{dim_p3, IntervalPolyBasis, TetPolyBasis, TriPolyBasis};
use crate::quadrature::{edge_rule, tet_rule, tri_rule, MAX_DEGREE};
use crate::reference::{reference_tensors, SymTensor3};
use nalgebra::{DVector, Matrix3, Point3, Vector3};

use crate::assembly::DofMap;

/// Smooth scalar input field with point values and gradients.
pub trait ScalarField: Sync {
    fn value(&self, x: &Point3<f64>) -> f64;
    fn gradient(&self, x: &Point3<f64>) -> Vector3<f64>;
}

/// Smooth vector input field; strain and curl derive from the Jacobian.
pub trait VectorField: Sync {
    fn value(&self, x: &Point3<f64>) -> Vector3<f64>;
    /// Jacobian g with g[(i, j)] = ∂v_i/∂x_j.
    fn gradient(&self, x: &Point3<f64>) -> Matrix3<f64>;

    fn strain(&self, x: &Point3<f64>) -> SymTensor3 {
        SymTensor3::from_matrix(&self.gradient(x))
    }

    fn curl(&self, x: &Point3<f64>) -> Vector3<f64> {
        let g = self.gradient(x);
        Vector3::new(
            g[(2, 1)] - g[(1, 2)],
            g[(0, 2)] - g[(2, 0)],
            g[(1, 0)] - g[(0, 1)],
        )
    }
}

/// Smooth symmetric-tensor input field.
pub trait StressField: Sync {
    fn value(&self, x: &Point3<f64>) -> SymTensor3;
}

/// Closure-backed fields, convenient for manufactured cases.
pub struct ClosureScalar {
    pub value: Box<dyn Fn(&Point3<f64>) -> f64 + Sync>,
    pub gradient: Box<dyn Fn(&Point3<f64>) -> Vector3<f64> + Sync>,
}

impl ScalarField for ClosureScalar {
    fn value(&self, x: &Point3<f64>) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &Point3<f64>) -> Vector3<f64> {
        (self.gradient)(x)
    }
}

pub struct ClosureVector {
    pub value: Box<dyn Fn(&Point3<f64>) -> Vector3<f64> + Sync>,
    pub gradient: Box<dyn Fn(&Point3<f64>) -> Matrix3<f64> + Sync>,
}

impl VectorField for ClosureVector {
    fn value(&self, x: &Point3<f64>) -> Vector3<f64> {
        (self.value)(x)
    }
    fn gradient(&self, x: &Point3<f64>) -> Matrix3<f64> {
        (self.gradient)(x)
    }
}

pub struct ClosureStress {
    pub value: Box<dyn Fn(&Point3<f64>) -> SymTensor3 + Sync>,
}

impl StressField for ClosureStress {
    fn value(&self, x: &Point3<f64>) -> SymTensor3 {
        (self.value)(x)
    }
}

/// Weighted face moments ∫_F J_F τ_nn q ds for q a basis of P^k(F).
pub(crate) fn sigma_face_moments(
    mesh: &Mesh,
    f: usize,
    k: usize,
    degree: usize,
    field: &mut dyn FnMut(&Point3<f64>) -> SymTensor3,
) -> Result<Vec<f64>> {
    let gf = global_face(mesh, f);
    let rule = tri_rule(degree)?;
    let tri_basis = TriPolyBasis::new(k);
    let mut out = vec![0.0; tri_basis.len()];
    for q in 0..rule.len() {
        let uv = rule.point_uv(q);
        let x = gf.phys_point(uv.x, uv.y);
        let nn = field(&x).nn(&gf.normal);
        let w = rule.weights[q] * gf.jf_weight * 2.0 * gf.area;
        for (m, slot) in out.iter_mut().enumerate() {
            *slot += w * nn * tri_basis.eval(m, &uv);
        }
    }
    Ok(out)
}

/// Interior moments ∫_T J_T τ : (q F^{-T} Ŝ F^{-1}) dx in ordinal order:
/// the four face-family tensors against P^{k-1}, then the two interior
/// tensors against P^k.
pub(crate) fn sigma_interior_moments(
    mesh: &Mesh,
    c: usize,
    k: usize,
    degree: usize,
    field: &mut dyn FnMut(&Point3<f64>) -> SymTensor3,
) -> Result<Vec<f64>> {
    let xf = mesh.element_transform(c)?;
    let v0 = mesh.cell_vertices(c)[0];
    let rule = tet_rule(degree)?;
    let p_lo = TetPolyBasis::new(k - 1);
    let p_hi = TetPolyBasis::new(k);
    let tensors = reference_tensors();
    let s_phys: Vec<SymTensor3> = tensors.iter().map(|s| s.congruence(&xf.f_inv_t)).collect();
    let n_lo = dim_p3(k - 1);
    let n_hi = dim_p3(k);
    let mut out = vec![0.0; 4 * n_lo + 2 * n_hi];
    let jt2 = xf.det * xf.det;
    for q in 0..rule.len() {
        let p = rule.point_xyz(q);
        let x = xf.push_point(&v0, &p);
        let tau = field(&x);
        let w = rule.weights[q] * jt2;
        for t in 0..4 {
            let pairing = tau.frob_dot(&s_phys[t]);
            for m in 0..n_lo {
                out[t * n_lo + m] += w * pairing * p_lo.eval(m, &p);
            }
        }
        for t in 4..6 {
            let pairing = tau.frob_dot(&s_phys[t]);
            for m in 0..n_hi {
                out[4 * n_lo + (t - 4) * n_hi + m] += w * pairing * p_hi.eval(m, &p);
            }
        }
    }
    Ok(out)
}

/// Edge moments ∫_E (v·t) q ds for q a Legendre basis of P^k(E).
pub(crate) fn v_edge_moments(
    mesh: &Mesh,
    e: usize,
    k: usize,
    degree: usize,
    field: &mut dyn FnMut(&Point3<f64>) -> Vector3<f64>,
) -> Vec<f64> {
    let ge = global_edge(mesh, e);
    let (pts, wts) = edge_rule(degree);
    let interval = IntervalPolyBasis::new(k);
    let mut out = vec![0.0; k + 1];
    for (s, w) in pts.iter().zip(&wts) {
        let x = ge.phys_point(*s);
        let vt = field(&x).dot(&ge.tangent);
        for (m, slot) in out.iter_mut().enumerate() {
            *slot += w * ge.length * vt * interval.eval(m, *s);
        }
    }
    out
}

/// Face moments ∫_F v·q ds against the two frame constants and the in-plane
/// radial field.
pub(crate) fn v_face_moments(
    mesh: &Mesh,
    f: usize,
    degree: usize,
    field: &mut dyn FnMut(&Point3<f64>) -> Vector3<f64>,
) -> Result<Vec<f64>> {
    let gf = global_face(mesh, f);
    let rule = tri_rule(degree)?;
    let mut out = vec![0.0; 3];
    for q in 0..rule.len() {
        let uv = rule.point_uv(q);
        let x = gf.phys_point(uv.x, uv.y);
        let v = field(&x);
        let w = rule.weights[q] * 2.0 * gf.area;
        for (comp, slot) in out.iter_mut().enumerate() {
            *slot += w * v.dot(&gf.v_test_field(comp, uv.x, uv.y));
        }
    }
    Ok(out)
}

/// Averaged edge moments with weights {1, 1 + Legendre_m}.
pub(crate) fn w_edge_moments(
    mesh: &Mesh,
    e: usize,
    n_moments: usize,
    degree: usize,
    field: &mut dyn FnMut(&Point3<f64>) -> f64,
) -> Vec<f64> {
    let ge = global_edge(mesh, e);
    let (pts, wts) = edge_rule(degree);
    let interval = IntervalPolyBasis::new(n_moments.max(1));
    let mut out = vec![0.0; n_moments];
    for (s, w) in pts.iter().zip(&wts) {
        let g = field(&ge.phys_point(*s));
        for (m, slot) in out.iter_mut().enumerate() {
            let weight = if m == 0 {
                1.0
            } else {
                1.0 + interval.eval(m, *s)
            };
            *slot += w * g * weight;
        }
    }
    out
}

/// Face mean value.
pub(crate) fn w_face_mean(
    mesh: &Mesh,
    f: usize,
    degree: usize,
    field: &mut dyn FnMut(&Point3<f64>) -> f64,
) -> Result<f64> {
    let gf = global_face(mesh, f);
    let rule = tri_rule(degree)?;
    let mut acc = 0.0;
    for q in 0..rule.len() {
        let uv = rule.point_uv(q);
        acc += rule.weights[q] * 2.0 * field(&gf.phys_point(uv.x, uv.y));
    }
    Ok(acc)
}

fn default_degree(k: usize) -> usize {
    (2 * k + 4).min(MAX_DEGREE)
}

/// Stress interpolant of a smooth tensor field.
pub fn interpolate_sigma(
    field: &dyn StressField,
    mesh: &Mesh,
    map: &DofMap,
) -> Result<DVector<f64>> {
    interpolate_sigma_cellwise(mesh, map, default_degree(map.k), &mut |_, x| field.value(x))
}

/// Stress interpolant of a piecewise-smooth field; `eval` receives the cell
/// owning the integration entity.
pub fn interpolate_sigma_cellwise(
    mesh: &Mesh,
    map: &DofMap,
    degree: usize,
    eval: &mut dyn FnMut(usize, &Point3<f64>) -> SymTensor3,
) -> Result<DVector<f64>> {
    let k = map.k;
    let mut out = DVector::zeros(map.n_dofs);
    for f in 0..mesh.n_faces() {
        let owner = mesh.face_cells[f].0;
        let moments = sigma_face_moments(mesh, f, k, degree, &mut |x| eval(owner, x))?;
        for (m, val) in moments.iter().enumerate() {
            out[map.sigma_face_dof(f, m)] = *val;
        }
    }
    for c in 0..mesh.n_cells() {
        let moments = sigma_interior_moments(mesh, c, k, degree, &mut |x| eval(c, x))?;
        for (ord, val) in moments.iter().enumerate() {
            out[map.sigma_interior_dof(c, ord)] = *val;
        }
    }
    Ok(out)
}

/// Displacement interpolant of a smooth vector field.
pub fn interpolate_v(field: &dyn VectorField, mesh: &Mesh, map: &DofMap) -> Result<DVector<f64>> {
    interpolate_v_cellwise(mesh, map, default_degree(map.k), &mut |_, x| field.value(x))
}

pub fn interpolate_v_cellwise(
    mesh: &Mesh,
    map: &DofMap,
    degree: usize,
    eval: &mut dyn FnMut(usize, &Point3<f64>) -> Vector3<f64>,
) -> Result<DVector<f64>> {
    let k = map.k;
    let edge_owner = edge_owners(mesh);
    let mut out = DVector::zeros(map.n_dofs);
    for e in 0..mesh.n_edges() {
        let owner = edge_owner[e];
        let moments = v_edge_moments(mesh, e, k, degree, &mut |x| eval(owner, x));
        for (m, val) in moments.iter().enumerate() {
            out[map.v_edge_dof(e, m)] = *val;
        }
    }
    if k >= 2 {
        for f in 0..mesh.n_faces() {
            let owner = mesh.face_cells[f].0;
            let moments = v_face_moments(mesh, f, degree, &mut |x| eval(owner, x))?;
            for (comp, val) in moments.iter().enumerate() {
                out[map.v_face_dof(f, comp)] = *val;
            }
        }
    }
    Ok(out)
}

/// Scalar interpolant of a smooth field into the order-(k+1) space.
pub fn interpolate_w(field: &dyn ScalarField, mesh: &Mesh, map: &DofMap) -> Result<DVector<f64>> {
    interpolate_w_cellwise(mesh, map, default_degree(map.k), &mut |_, x| field.value(x))
}

pub fn interpolate_w_cellwise(
    mesh: &Mesh,
    map: &DofMap,
    degree: usize,
    eval: &mut dyn FnMut(usize, &Point3<f64>) -> f64,
) -> Result<DVector<f64>> {
    let k = map.k;
    let order = k + 1;
    let vertex_owner = vertex_owners(mesh);
    let edge_owner = edge_owners(mesh);
    let mut out = DVector::zeros(map.n_dofs);
    for v in 0..mesh.n_vertices() {
        out[map.w_vertex_dof(v)] = eval(vertex_owner[v], &mesh.vertices[v]);
    }
    for e in 0..mesh.n_edges() {
        let owner = edge_owner[e];
        let moments = w_edge_moments(mesh, e, k, degree, &mut |x| eval(owner, x));
        for (m, val) in moments.iter().enumerate() {
            out[map.w_edge_dof(e, m)] = *val;
        }
    }
    if order >= 3 {
        for f in 0..mesh.n_faces() {
            let owner = mesh.face_cells[f].0;
            out[map.w_face_dof(f)] = w_face_mean(mesh, f, degree, &mut |x| eval(owner, x))?;
        }
    }
    Ok(out)
}

fn vertex_owners(mesh: &Mesh) -> Vec<usize> {
    let mut owner = vec![usize::MAX; mesh.n_vertices()];
    for (c, cell) in mesh.cells.iter().enumerate() {
        for &v in cell {
            if owner[v] == usize::MAX {
                owner[v] = c;
            }
        }
    }
    owner
}

fn edge_owners(mesh: &Mesh) -> Vec<usize> {
    let mut owner = vec![usize::MAX; mesh.n_edges()];
    for c in 0..mesh.n_cells() {
        for &e in &mesh.cell_edges[c] {
            if owner[e] == usize::MAX {
                owner[e] = c;
            }
        }
    }
    owner
}
