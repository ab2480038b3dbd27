//! Assembly of the global saddle-point system
//! [[A, Bᵀ], [B, 0]] [σ; u] = [rhs_σ; rhs_v]
//! with the distributional divergence pairing
//! b(τ, v) = -Σ_T ( ∫_T τ : ε(v) - ∮_{∂T} τ_nn v_n ).
//!
//! All four face terms of every cell are accumulated, interior faces
//! included; for conforming arguments the shared contributions realize the
//! distributional pairing. Essential constraints (tangential displacement on
//! Γ_D, normal-normal stress on Γ_N) are eliminated by moving prescribed
//! columns to the right-hand side.

use crate::basis::{self, ElementBases};
use crate::error::{Error, Result};
use crate::interpolation::{StressField, VectorField};
use crate::mesh::{BoundaryRegion, Mesh};
use crate::poly::dim_p3;
use crate::quadrature::{tet_rule, tri_rule};
use crate::reference::{entity_dof_counts, DofKind, Space, SymTensor3};
use nalgebra::{DMatrix, DVector, Point3, Vector3};
use std::collections::BTreeMap;
use std::io::Write;

/// Isotropic material with Young's modulus E and Poisson ratio ν < 1/2.
#[derive(Debug, Clone, Copy)]
pub struct MaterialLaw {
    e: f64,
    nu: f64,
}

impl MaterialLaw {
    pub fn new(e: f64, nu: f64) -> Result<Self> {
        if !(e > 0.0) {
            return Err(Error::MaterialValidation(format!(
                "Young's modulus must be positive, got {e}"
            )));
        }
        if !(nu > -1.0 && nu < 0.5) {
            return Err(Error::MaterialValidation(format!(
                "Poisson ratio must lie in (-1, 1/2), got {nu}"
            )));
        }
        Ok(MaterialLaw { e, nu })
    }

    pub fn youngs_modulus(&self) -> f64 {
        self.e
    }

    pub fn poisson_ratio(&self) -> f64 {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.e * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))
    }

    pub fn mu(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }

    /// Compliance action A σ = ((1+ν)/E) σ - (ν/E) tr(σ) I.
    pub fn compliance(&self, s: &SymTensor3) -> SymTensor3 {
        let a = (1.0 + self.nu) / self.e;
        let b = self.nu / self.e * s.trace();
        let mut out = *s * a;
        out.0[0] -= b;
        out.0[1] -= b;
        out.0[2] -= b;
        out
    }

    /// Stiffness action C ε = λ tr(ε) I + 2μ ε.
    pub fn stiffness(&self, eps: &SymTensor3) -> SymTensor3 {
        let tr = self.lambda() * eps.trace();
        let mut out = *eps * (2.0 * self.mu());
        out.0[0] += tr;
        out.0[1] += tr;
        out.0[2] += tr;
        out
    }
}

/// Sparse matrix in coordinate form; duplicate entries add up.
#[derive(Debug, Clone)]
pub struct CooMat {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl CooMat {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CooMat {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((r, c, v));
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.nrows);
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn mul_vec_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.ncols);
        for &(r, c, v) in &self.entries {
            y[c] += v * x[r];
        }
        y
    }

    /// Max-norm of the coefficient array (duplicates summed).
    pub fn max_abs(&self) -> f64 {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(r, c, v) in &self.entries {
            *acc.entry((r, c)).or_insert(0.0) += v;
        }
        acc.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Global numbering of one space's DOFs with essential-constraint marks.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub space: Space,
    pub k: usize,
    pub n_dofs: usize,
    /// cell → global indices, in the local functional order of `dof_list`
    pub cell_dofs: Vec<Vec<usize>>,
    /// orientation signs of the local-to-global pairing; the globally
    /// parametrized functionals make every sign +1
    pub cell_signs: Vec<Vec<f64>>,
    pub constrained: Vec<bool>,
    per_edge: usize,
    per_face: usize,
    per_cell: usize,
    n_vertices: usize,
    n_edges: usize,
    n_faces: usize,
}

impl DofMap {
    pub fn build(mesh: &Mesh, space: Space, k: usize) -> DofMap {
        let counts = entity_dof_counts(space, k);
        let (nv, ne, nf, nc) = (
            mesh.n_vertices(),
            mesh.n_edges(),
            mesh.n_faces(),
            mesh.n_cells(),
        );
        let n_dofs = counts.per_vertex * nv
            + counts.per_edge * ne
            + counts.per_face * nf
            + counts.per_cell * nc;

        let mut map = DofMap {
            space,
            k,
            n_dofs,
            cell_dofs: Vec::with_capacity(nc),
            cell_signs: Vec::with_capacity(nc),
            constrained: vec![false; n_dofs],
            per_edge: counts.per_edge,
            per_face: counts.per_face,
            per_cell: counts.per_cell,
            n_vertices: nv,
            n_edges: ne,
            n_faces: nf,
        };

        let dofs = crate::reference::dof_list(space, k);
        let n_lo = if space == Space::Sigma { dim_p3(k - 1) } else { 0 };
        let n_hi = if space == Space::Sigma { dim_p3(k) } else { 0 };
        for c in 0..nc {
            let mut local = Vec::with_capacity(dofs.len());
            for dof in &dofs {
                let g = match *dof {
                    DofKind::SigmaFace { local_face, moment } => {
                        map.sigma_face_dof(mesh.cell_faces[c][local_face], moment)
                    }
                    DofKind::SigmaInterior { tensor, moment } => {
                        let ordinal = if tensor < 4 {
                            tensor * n_lo + moment
                        } else {
                            4 * n_lo + (tensor - 4) * n_hi + moment
                        };
                        map.sigma_interior_dof(c, ordinal)
                    }
                    DofKind::VEdge { local_edge, moment } => {
                        map.v_edge_dof(mesh.cell_edges[c][local_edge], moment)
                    }
                    DofKind::VFace { local_face, component } => {
                        map.v_face_dof(mesh.cell_faces[c][local_face], component)
                    }
                    DofKind::WVertex { local_vertex } => {
                        map.w_vertex_dof(mesh.cells[c][local_vertex])
                    }
                    DofKind::WEdge { local_edge, moment } => {
                        map.w_edge_dof(mesh.cell_edges[c][local_edge], moment)
                    }
                    DofKind::WFace { local_face } => {
                        map.w_face_dof(mesh.cell_faces[c][local_face])
                    }
                };
                local.push(g);
            }
            map.cell_signs.push(vec![1.0; local.len()]);
            map.cell_dofs.push(local);
        }

        // essential constraints
        let mut edge_lookup: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for (e, pair) in mesh.edges.iter().enumerate() {
            edge_lookup.insert(*pair, e);
        }
        for f in 0..nf {
            match (space, mesh.region(f)) {
                (Space::Sigma, Some(BoundaryRegion::Neumann)) => {
                    for m in 0..map.per_face {
                        let g = map.sigma_face_dof(f, m);
                        map.constrained[g] = true;
                    }
                }
                (Space::V, Some(BoundaryRegion::Dirichlet)) => {
                    let tri = mesh.faces[f];
                    for pair in [[tri[0], tri[1]], [tri[0], tri[2]], [tri[1], tri[2]]] {
                        let e = edge_lookup[&pair];
                        for m in 0..map.per_edge {
                            let g = map.v_edge_dof(e, m);
                            map.constrained[g] = true;
                        }
                    }
                    for comp in 0..map.per_face {
                        let g = map.v_face_dof(f, comp);
                        map.constrained[g] = true;
                    }
                }
                (Space::W, Some(BoundaryRegion::Dirichlet)) => {
                    let tri = mesh.faces[f];
                    for v in tri {
                        let g = map.w_vertex_dof(v);
                        map.constrained[g] = true;
                    }
                    for pair in [[tri[0], tri[1]], [tri[0], tri[2]], [tri[1], tri[2]]] {
                        let e = edge_lookup[&pair];
                        for m in 0..map.per_edge {
                            let g = map.w_edge_dof(e, m);
                            map.constrained[g] = true;
                        }
                    }
                    if map.per_face > 0 {
                        let g = map.w_face_dof(f);
                        map.constrained[g] = true;
                    }
                }
                _ => {}
            }
        }
        map
    }

    pub fn sigma_face_dof(&self, f: usize, moment: usize) -> usize {
        debug_assert_eq!(self.space, Space::Sigma);
        f * self.per_face + moment
    }

    pub fn sigma_interior_dof(&self, c: usize, ordinal: usize) -> usize {
        debug_assert_eq!(self.space, Space::Sigma);
        self.n_faces * self.per_face + c * self.per_cell + ordinal
    }

    pub fn v_edge_dof(&self, e: usize, moment: usize) -> usize {
        debug_assert_eq!(self.space, Space::V);
        e * self.per_edge + moment
    }

    pub fn v_face_dof(&self, f: usize, component: usize) -> usize {
        debug_assert_eq!(self.space, Space::V);
        self.n_edges * self.per_edge + f * self.per_face + component
    }

    pub fn w_vertex_dof(&self, v: usize) -> usize {
        debug_assert_eq!(self.space, Space::W);
        v
    }

    pub fn w_edge_dof(&self, e: usize, moment: usize) -> usize {
        debug_assert_eq!(self.space, Space::W);
        self.n_vertices + e * self.per_edge + moment
    }

    pub fn w_face_dof(&self, f: usize) -> usize {
        debug_assert_eq!(self.space, Space::W);
        self.n_vertices + self.n_edges * self.per_edge + f * self.per_face
    }

    pub fn n_face_moments(&self) -> usize {
        self.per_face
    }

    pub fn n_free(&self) -> usize {
        self.constrained.iter().filter(|&&c| !c).count()
    }
}

/// A_ij = ∫_Ω (A σ_j) : σ_i; symmetric positive definite on Σ_h.
pub fn assemble_a(
    mesh: &Mesh,
    material: &MaterialLaw,
    bases: &ElementBases,
    map: &DofMap,
) -> Result<CooMat> {
    assemble_sigma_bilinear(mesh, bases, map, |s| material.compliance(s))
}

/// L² Gram matrix of the stress basis: M_ij = ∫ σ_j : σ_i.
pub fn assemble_sigma_mass(mesh: &Mesh, bases: &ElementBases, map: &DofMap) -> Result<CooMat> {
    assemble_sigma_bilinear(mesh, bases, map, |s| *s)
}

fn assemble_sigma_bilinear(
    mesh: &Mesh,
    bases: &ElementBases,
    map: &DofMap,
    action: impl Fn(&SymTensor3) -> SymTensor3,
) -> Result<CooMat> {
    let k = bases.k;
    let rule = tet_rule(2 * k)?;
    let pts: Vec<Vector3<f64>> = (0..rule.len()).map(|q| rule.point_xyz(q)).collect();
    let n = bases.n_local();
    let mut out = CooMat::new(map.n_dofs, map.n_dofs);
    for c in 0..mesh.n_cells() {
        let jt = bases.ctxs[c].xf.det;
        let tables = basis::sigma_tables(bases, c, &pts);
        let acted: Vec<SymTensor3> = tables.iter().map(|s| action(s)).collect();
        let gdofs = &map.cell_dofs[c];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for q in 0..pts.len() {
                    acc += rule.weights[q]
                        * acted[j * pts.len() + q].frob_dot(&tables[i * pts.len() + q]);
                }
                out.push(gdofs[i], gdofs[j], jt * acc);
            }
        }
    }
    Ok(out)
}

/// Face-term Gram matrix Σ_F h_F ∫_F nn_i nn_j, one contribution per face.
pub fn assemble_sigma_face_gram(
    mesh: &Mesh,
    bases: &ElementBases,
    map: &DofMap,
) -> Result<CooMat> {
    let k = bases.k;
    let rule = tri_rule(2 * k)?;
    let nfm = map.n_face_moments();
    let mut out = CooMat::new(map.n_dofs, map.n_dofs);
    for f in 0..mesh.n_faces() {
        let owner = mesh.face_cells[f].0;
        let lf = mesh.cell_faces[owner].iter().position(|&g| g == f).unwrap();
        let pts = basis::local_face_points(lf, &rule);
        let tables = basis::sigma_tables(bases, owner, &pts);
        let h_f = mesh.face_diameter(f);
        let area = mesh.face_area[f];
        let normal = mesh.face_normal[f];
        // only this face's DOFs have a nonzero normal-normal trace on it
        for mi in 0..nfm {
            let li = lf * nfm + mi;
            let gi = map.sigma_face_dof(f, mi);
            for mj in 0..nfm {
                let lj = lf * nfm + mj;
                let gj = map.sigma_face_dof(f, mj);
                let mut acc = 0.0;
                for q in 0..pts.len() {
                    acc += rule.weights[q]
                        * tables[li * pts.len() + q].nn(&normal)
                        * tables[lj * pts.len() + q].nn(&normal);
                }
                out.push(gi, gj, h_f * 2.0 * area * acc);
            }
        }
    }
    Ok(out)
}

/// B[v_i, σ_j] = b(σ_j, v_i) = -Σ_T ( ∫_T σ_j : ε(v_i) - ∮_{∂T} σ_nn v·n ).
pub fn assemble_b(
    mesh: &Mesh,
    sigma_bases: &ElementBases,
    v_bases: &ElementBases,
    sigma_map: &DofMap,
    v_map: &DofMap,
) -> Result<CooMat> {
    let k = sigma_bases.k;
    let vol_rule = tet_rule(2 * k)?;
    let vol_pts: Vec<Vector3<f64>> = (0..vol_rule.len()).map(|q| vol_rule.point_xyz(q)).collect();
    let face_rule = tri_rule(2 * k)?;
    let n_s = sigma_bases.n_local();
    let n_v = v_bases.n_local();
    let mut out = CooMat::new(v_map.n_dofs, sigma_map.n_dofs);

    for c in 0..mesh.n_cells() {
        let ctx = &sigma_bases.ctxs[c];
        let jt = ctx.xf.det;
        let sig_vol = basis::sigma_tables(sigma_bases, c, &vol_pts);
        let v_vol = basis::v_tables(v_bases, c, &vol_pts);
        let mut local = DMatrix::zeros(n_v, n_s);

        for i in 0..n_v {
            for j in 0..n_s {
                let mut acc = 0.0;
                for q in 0..vol_pts.len() {
                    acc += vol_rule.weights[q]
                        * sig_vol[j * vol_pts.len() + q]
                            .frob_dot(&v_vol.strain[i * vol_pts.len() + q]);
                }
                local[(i, j)] -= jt * acc;
            }
        }

        for lf in 0..4 {
            let fid = mesh.cell_faces[c][lf];
            let pts = basis::local_face_points(lf, &face_rule);
            let sig_face = basis::sigma_tables(sigma_bases, c, &pts);
            let v_face = basis::v_tables(v_bases, c, &pts);
            let n_out = ctx.xf.face_normal_out[lf];
            let area = mesh.face_area[fid];
            for i in 0..n_v {
                for j in 0..n_s {
                    let mut acc = 0.0;
                    for q in 0..pts.len() {
                        acc += face_rule.weights[q]
                            * sig_face[j * pts.len() + q].nn(&n_out)
                            * v_face.value[i * pts.len() + q].dot(&n_out);
                    }
                    local[(i, j)] += 2.0 * area * acc;
                }
            }
        }

        let gs = &sigma_map.cell_dofs[c];
        let gv = &v_map.cell_dofs[c];
        for i in 0..n_v {
            for j in 0..n_s {
                out.push(gv[i], gs[j], local[(i, j)]);
            }
        }
    }
    Ok(out)
}

/// H(curl) Gram matrix of the displacement basis.
pub fn assemble_v_hcurl_gram(mesh: &Mesh, bases: &ElementBases, map: &DofMap) -> Result<CooMat> {
    let rule = tet_rule(2 * bases.k)?;
    let pts: Vec<Vector3<f64>> = (0..rule.len()).map(|q| rule.point_xyz(q)).collect();
    let n = bases.n_local();
    let mut out = CooMat::new(map.n_dofs, map.n_dofs);
    for c in 0..mesh.n_cells() {
        let jt = bases.ctxs[c].xf.det;
        let t = basis::v_tables(bases, c, &pts);
        let gdofs = &map.cell_dofs[c];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for q in 0..pts.len() {
                    acc += rule.weights[q]
                        * (t.value[i * pts.len() + q].dot(&t.value[j * pts.len() + q])
                            + t.curl[i * pts.len() + q].dot(&t.curl[j * pts.len() + q]));
                }
                out.push(gdofs[i], gdofs[j], jt * acc);
            }
        }
    }
    Ok(out)
}

/// Gradient stiffness of the scalar space: K_ij = ∫ ∇φ_i · ∇φ_j.
pub fn assemble_w_stiffness(mesh: &Mesh, bases: &ElementBases, map: &DofMap) -> Result<CooMat> {
    let rule = tet_rule(2 * bases.k)?;
    let pts: Vec<Vector3<f64>> = (0..rule.len()).map(|q| rule.point_xyz(q)).collect();
    let n = bases.n_local();
    let mut out = CooMat::new(map.n_dofs, map.n_dofs);
    for c in 0..mesh.n_cells() {
        let jt = bases.ctxs[c].xf.det;
        let t = basis::w_tables(bases, c, &pts);
        let gdofs = &map.cell_dofs[c];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for q in 0..pts.len() {
                    acc += rule.weights[q]
                        * t.grad[i * pts.len() + q].dot(&t.grad[j * pts.len() + q]);
                }
                out.push(gdofs[i], gdofs[j], jt * acc);
            }
        }
    }
    Ok(out)
}

/// Embedding matrix of ∇W_h ⊂ V_h: column j holds the V-coefficients of
/// ∇φ_j. Shared entries are written identically by every incident cell and
/// averaged by multiplicity.
pub fn assemble_grad_embedding(
    mesh: &Mesh,
    v_bases: &ElementBases,
    w_bases: &ElementBases,
    v_map: &DofMap,
    w_map: &DofMap,
) -> Result<CooMat> {
    let k = v_bases.k;
    let engine = basis::FunctionalEngine::new(Space::V, k, 2 * (k + 1) + 2)?;
    let v_dofs = crate::reference::dof_list(Space::V, k);
    let mut acc: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for c in 0..mesh.n_cells() {
        let ctx = &v_bases.ctxs[c];
        for (jl, &gj) in w_map.cell_dofs[c].iter().enumerate() {
            let mut grad_field = |p: &Vector3<f64>| -> Vector3<f64> {
                let t = basis::w_tables(w_bases, c, std::slice::from_ref(p));
                t.grad[jl]
            };
            let mut field = basis::FieldEval::Vector(&mut grad_field);
            for (il, dof) in v_dofs.iter().enumerate() {
                let val = engine.apply(dof, ctx, &mut field);
                let gi = v_map.cell_dofs[c][il];
                let slot = acc.entry((gi, gj)).or_insert((0.0, 0));
                slot.0 += val;
                slot.1 += 1;
            }
        }
    }
    let mut out = CooMat::new(v_map.n_dofs, w_map.n_dofs);
    for ((r, c), (sum, count)) in acc {
        let avg = sum / count as f64;
        if avg.abs() > 1e-14 {
            out.push(r, c, avg);
        }
    }
    Ok(out)
}

/// Right-hand sides of the discrete problem for manufactured data:
/// rhs_σ_i = ∫_{Γ_D} (σ_i)_nn u_D·n and
/// rhs_v_j = -∫_Ω f · v_j - ∫_{Γ_N} t_N,t · (v_j)_t.
pub fn assemble_rhs(
    mesh: &Mesh,
    sigma_bases: &ElementBases,
    v_bases: &ElementBases,
    sigma_map: &DofMap,
    v_map: &DofMap,
    u_d: &dyn VectorField,
    body_force: &dyn Fn(&Point3<f64>) -> Vector3<f64>,
    traction_stress: &dyn StressField,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let k = sigma_bases.k;
    let vol_rule = tet_rule((3 * k + 1).min(crate::quadrature::MAX_DEGREE))?;
    let face_rule = tri_rule((3 * k + 1).min(crate::quadrature::MAX_DEGREE))?;
    let vol_pts: Vec<Vector3<f64>> = (0..vol_rule.len()).map(|q| vol_rule.point_xyz(q)).collect();

    let mut rhs_sigma = DVector::zeros(sigma_map.n_dofs);
    let mut rhs_v = DVector::zeros(v_map.n_dofs);

    for c in 0..mesh.n_cells() {
        let ctx = &v_bases.ctxs[c];
        let jt = ctx.xf.det;
        let v0 = ctx.v0;
        let v_vol = basis::v_tables(v_bases, c, &vol_pts);
        let gv = &v_map.cell_dofs[c];
        for (q, p) in vol_pts.iter().enumerate() {
            let x = ctx.xf.push_point(&v0, p);
            let f_val = body_force(&x);
            let w = vol_rule.weights[q] * jt;
            for i in 0..v_bases.n_local() {
                rhs_v[gv[i]] -= w * f_val.dot(&v_vol.value[i * vol_pts.len() + q]);
            }
        }
    }

    for f in 0..mesh.n_faces() {
        let Some(region) = mesh.region(f) else { continue };
        let owner = mesh.face_cells[f].0;
        let ctx = &sigma_bases.ctxs[owner];
        let lf = mesh.cell_faces[owner].iter().position(|&g| g == f).unwrap();
        let pts = basis::local_face_points(lf, &face_rule);
        let area = mesh.face_area[f];
        // boundary normals are outward by construction
        let n = mesh.face_normal[f];
        match region {
            BoundaryRegion::Dirichlet => {
                let tables = basis::sigma_tables(sigma_bases, owner, &pts);
                let gs = &sigma_map.cell_dofs[owner];
                for (q, p) in pts.iter().enumerate() {
                    let x = ctx.xf.push_point(&ctx.v0, p);
                    let udn = u_d.value(&x).dot(&n);
                    let w = face_rule.weights[q] * 2.0 * area;
                    for i in 0..sigma_bases.n_local() {
                        rhs_sigma[gs[i]] += w * tables[i * pts.len() + q].nn(&n) * udn;
                    }
                }
            }
            BoundaryRegion::Neumann => {
                let tables = basis::v_tables(v_bases, owner, &pts);
                let gv = &v_map.cell_dofs[owner];
                for (q, p) in pts.iter().enumerate() {
                    let x = ctx.xf.push_point(&ctx.v0, p);
                    let t_n = traction_stress.value(&x).dot_vec(&n);
                    let t_tang = t_n - n * t_n.dot(&n);
                    let w = face_rule.weights[q] * 2.0 * area;
                    for i in 0..v_bases.n_local() {
                        let v = tables.value[i * pts.len() + q];
                        let v_tang = v - n * v.dot(&n);
                        rhs_v[gv[i]] -= w * t_tang.dot(&v_tang);
                    }
                }
            }
        }
    }

    Ok((rhs_sigma, rhs_v))
}

/// Prescribed values of the constrained stress DOFs: weighted face moments
/// of t_N·n = σ_nn on Neumann faces.
pub fn sigma_essential_values(
    mesh: &Mesh,
    map: &DofMap,
    traction_stress: &dyn StressField,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(map.n_dofs);
    let degree = (2 * map.k + 4).min(crate::quadrature::MAX_DEGREE);
    for f in 0..mesh.n_faces() {
        if mesh.region(f) != Some(BoundaryRegion::Neumann) {
            continue;
        }
        let moments = crate::interpolation::sigma_face_moments(mesh, f, map.k, degree, &mut |x| {
            traction_stress.value(x)
        })?;
        for (m, val) in moments.iter().enumerate() {
            out[map.sigma_face_dof(f, m)] = *val;
        }
    }
    Ok(out)
}

/// Prescribed values of the constrained displacement DOFs: edge and face
/// moments of u_D on Dirichlet entities.
pub fn v_essential_values(
    mesh: &Mesh,
    map: &DofMap,
    u_d: &dyn VectorField,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(map.n_dofs);
    let degree = (2 * map.k + 4).min(crate::quadrature::MAX_DEGREE);
    // interpolate on every constrained entity; constrained marks are
    // entity-complete, so compute moments for edges/faces of Γ_D only
    let mut edge_lookup: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    for (e, pair) in mesh.edges.iter().enumerate() {
        edge_lookup.insert(*pair, e);
    }
    let mut edge_done = vec![false; mesh.n_edges()];
    for f in 0..mesh.n_faces() {
        if mesh.region(f) != Some(BoundaryRegion::Dirichlet) {
            continue;
        }
        let tri = mesh.faces[f];
        for pair in [[tri[0], tri[1]], [tri[0], tri[2]], [tri[1], tri[2]]] {
            let e = edge_lookup[&pair];
            if edge_done[e] {
                continue;
            }
            edge_done[e] = true;
            let moments =
                crate::interpolation::v_edge_moments(mesh, e, map.k, degree, &mut |x| {
                    u_d.value(x)
                });
            for (m, val) in moments.iter().enumerate() {
                out[map.v_edge_dof(e, m)] = *val;
            }
        }
        if map.per_face > 0 {
            let moments =
                crate::interpolation::v_face_moments(mesh, f, degree, &mut |x| u_d.value(x))?;
            for (comp, val) in moments.iter().enumerate() {
                out[map.v_face_dof(f, comp)] = *val;
            }
        }
    }
    Ok(out)
}

/// Assembled saddle-point system after essential-constraint elimination.
pub struct SparseSymSystem {
    pub n_sigma: usize,
    pub n_v: usize,
    /// free index → global index
    pub sigma_free: Vec<usize>,
    pub v_free: Vec<usize>,
    /// global index → free index
    pub sigma_free_of: Vec<Option<usize>>,
    pub v_free_of: Vec<Option<usize>>,
    pub a_ff: CooMat,
    /// rows: free V, cols: free Σ
    pub b_ff: CooMat,
    pub rhs_sigma_f: DVector<f64>,
    pub rhs_v_f: DVector<f64>,
    /// full-length prescribed values (zero on free DOFs)
    pub sigma_prescribed: DVector<f64>,
    pub v_prescribed: DVector<f64>,
}

/// Eliminate essential DOFs: keep free rows/columns, move prescribed columns
/// to the right-hand side.
pub fn apply_essential(
    a: &CooMat,
    b: &CooMat,
    rhs_sigma: &DVector<f64>,
    rhs_v: &DVector<f64>,
    sigma_map: &DofMap,
    v_map: &DofMap,
    sigma_prescribed: DVector<f64>,
    v_prescribed: DVector<f64>,
) -> SparseSymSystem {
    let free_index = |constrained: &[bool]| -> (Vec<usize>, Vec<Option<usize>>) {
        let mut fwd = Vec::new();
        let mut back = vec![None; constrained.len()];
        for (g, &c) in constrained.iter().enumerate() {
            if !c {
                back[g] = Some(fwd.len());
                fwd.push(g);
            }
        }
        (fwd, back)
    };
    let (sigma_free, sigma_free_of) = free_index(&sigma_map.constrained);
    let (v_free, v_free_of) = free_index(&v_map.constrained);

    let mut rhs_sigma_f = DVector::zeros(sigma_free.len());
    for (i, &g) in sigma_free.iter().enumerate() {
        rhs_sigma_f[i] = rhs_sigma[g];
    }
    let mut rhs_v_f = DVector::zeros(v_free.len());
    for (i, &g) in v_free.iter().enumerate() {
        rhs_v_f[i] = rhs_v[g];
    }

    let mut a_ff = CooMat::new(sigma_free.len(), sigma_free.len());
    for &(r, c, v) in &a.entries {
        match (sigma_free_of[r], sigma_free_of[c]) {
            (Some(fr), Some(fc)) => a_ff.push(fr, fc, v),
            (Some(fr), None) => rhs_sigma_f[fr] -= v * sigma_prescribed[c],
            _ => {}
        }
    }
    let mut b_ff = CooMat::new(v_free.len(), sigma_free.len());
    for &(r, c, v) in &b.entries {
        match (v_free_of[r], sigma_free_of[c]) {
            (Some(fr), Some(fc)) => b_ff.push(fr, fc, v),
            // B row constrained, σ column free: contributes to the first
            // block equation through Bᵀ
            (None, Some(fc)) => rhs_sigma_f[fc] -= v * v_prescribed[r],
            // B row free, σ column constrained: second block equation
            (Some(fr), None) => rhs_v_f[fr] -= v * sigma_prescribed[c],
            (None, None) => {}
        }
    }

    SparseSymSystem {
        n_sigma: sigma_map.n_dofs,
        n_v: v_map.n_dofs,
        sigma_free,
        v_free,
        sigma_free_of,
        v_free_of,
        a_ff,
        b_ff,
        rhs_sigma_f,
        rhs_v_f,
        sigma_prescribed,
        v_prescribed,
    }
}

impl SparseSymSystem {
    pub fn n_free(&self) -> usize {
        self.sigma_free.len() + self.v_free.len()
    }

    /// The free saddle matrix [[A, Bᵀ], [B, 0]] in coordinate form.
    pub fn saddle_coo(&self) -> CooMat {
        let ns = self.sigma_free.len();
        let n = self.n_free();
        let mut coo = CooMat::new(n, n);
        for &(r, c, v) in &self.a_ff.entries {
            coo.push(r, c, v);
        }
        for &(r, c, v) in &self.b_ff.entries {
            coo.push(ns + r, c, v);
            coo.push(c, ns + r, v);
        }
        coo
    }

    pub fn rhs_free(&self) -> DVector<f64> {
        let ns = self.sigma_free.len();
        let mut rhs = DVector::zeros(self.n_free());
        for i in 0..ns {
            rhs[i] = self.rhs_sigma_f[i];
        }
        for i in 0..self.v_free.len() {
            rhs[ns + i] = self.rhs_v_f[i];
        }
        rhs
    }

    /// Dump the free saddle matrix as `row col value` lines (0-based).
    pub fn write_coo(&self, w: &mut dyn Write) -> std::io::Result<()> {
        let coo = self.saddle_coo();
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(r, c, v) in &coo.entries {
            *acc.entry((r, c)).or_insert(0.0) += v;
        }
        for ((r, c), v) in acc {
            writeln!(w, "{r} {c} {v:.16e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn compliance_inverts_stiffness() {
        let mat = MaterialLaw::new(7.3, 0.31).unwrap();
        let s = SymTensor3([1.0, -0.4, 2.2, 0.7, -1.1, 0.3]);
        let roundtrip = mat.compliance(&mat.stiffness(&s));
        for i in 0..6 {
            assert_abs_diff_eq!(roundtrip.0[i], s.0[i], epsilon = 1e-13);
        }
        let other = mat.stiffness(&mat.compliance(&s));
        for i in 0..6 {
            assert_abs_diff_eq!(other.0[i], s.0[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn material_validation() {
        assert!(MaterialLaw::new(0.0, 0.3).is_err());
        assert!(MaterialLaw::new(-1.0, 0.3).is_err());
        assert!(MaterialLaw::new(1.0, 0.5).is_err());
        assert!(MaterialLaw::new(1.0, 0.7).is_err());
        assert!(MaterialLaw::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn lame_constants() {
        let mat = MaterialLaw::new(1.0, 0.3).unwrap();
        assert_abs_diff_eq!(mat.lambda(), 15.0 / 26.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mat.mu(), 5.0 / 13.0, epsilon = 1e-15);
    }
}
