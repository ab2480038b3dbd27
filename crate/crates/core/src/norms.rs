//! Discrete norms of the analysis: the stress norm
//! ‖τ‖² = ‖τ‖²_{L²} + Σ_F h_F ‖τ_nn‖²_{L²(F)} + (sup_{w_h} b(τ, ∇w_h)/‖∇w_h‖)²,
//! the H(curl) norm and the broken H¹ norm with h_F^{-1}-weighted
//! normal-jump terms on interior faces.

use crate::assembly::{assemble_w_stiffness, CooMat, DofMap};
use crate::basis::{self, ElementBases};
use crate::error::{Error, Result};
use crate::interpolation::{ScalarField, StressField, VectorField};
use crate::mesh::Mesh;
use crate::quadrature::{tet_rule, tri_rule, MAX_DEGREE};
use crate::reference::{Space, SymTensor3};
use crate::solver::coo_to_faer;
use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use nalgebra::{DVector, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Components of the discrete stress norm; total² = l2² + face² + dual².
#[derive(Debug, Clone, Copy)]
pub struct NormReport {
    pub l2_sigma: f64,
    pub face_term: f64,
    pub dual_term: f64,
    pub total: f64,
}

impl NormReport {
    fn from_parts(l2_sq: f64, face_sq: f64, dual_sq: f64) -> Self {
        NormReport {
            l2_sigma: l2_sq.max(0.0).sqrt(),
            face_term: face_sq.max(0.0).sqrt(),
            dual_term: dual_sq.max(0.0).sqrt(),
            total: (l2_sq + face_sq + dual_sq).max(0.0).sqrt(),
        }
    }
}

/// Gradient stiffness of the scalar space restricted to free DOFs, with a
/// sparse Cholesky factorization for the dual-norm supremum.
pub struct DualNormContext {
    pub w_map: DofMap,
    pub w_bases: ElementBases,
    pub free: Vec<usize>,
    pub free_of: Vec<Option<usize>>,
    k_free: CooMat,
    llt: Llt<usize, f64>,
}

impl DualNormContext {
    pub fn new(mesh: &Mesh, k: usize) -> Result<Self> {
        let w_map = DofMap::build(mesh, Space::W, k);
        let w_bases = basis::build_element_bases(mesh, Space::W, k)?;
        let k_full = assemble_w_stiffness(mesh, &w_bases, &w_map)?;

        let mut free = Vec::new();
        let mut free_of = vec![None; w_map.n_dofs];
        for g in 0..w_map.n_dofs {
            if !w_map.constrained[g] {
                free_of[g] = Some(free.len());
                free.push(g);
            }
        }
        if free.is_empty() {
            return Err(Error::SingularSystem(
                "no free scalar DOFs; the Dirichlet region covers everything".into(),
            ));
        }
        let mut k_free = CooMat::new(free.len(), free.len());
        for &(r, c, v) in &k_full.entries {
            if let (Some(fr), Some(fc)) = (free_of[r], free_of[c]) {
                k_free.push(fr, fc, v);
            }
        }
        let mat = coo_to_faer(&k_free)?;
        let symbolic = SymbolicLlt::try_new(mat.symbolic(), faer::Side::Lower)
            .map_err(|e| Error::SingularSystem(format!("symbolic Cholesky failed: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic, mat.as_ref(), faer::Side::Lower)
            .map_err(|e| {
                Error::SingularSystem(format!("gradient stiffness not positive definite: {e:?}"))
            })?;
        Ok(DualNormContext {
            w_map,
            w_bases,
            free,
            free_of,
            k_free,
            llt,
        })
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// dual² = gᵀ K⁻¹ g for a free-DOF load vector g; the solve residual
    /// must stay below 1e-12 relative.
    pub fn dual_sq(&self, g: &DVector<f64>) -> Result<f64> {
        assert_eq!(g.len(), self.free.len());
        let g_norm = g.norm();
        if g_norm == 0.0 {
            return Ok(0.0);
        }
        let rhs = faer::Mat::<f64>::from_fn(g.len(), 1, |i, _| g[i]);
        let x = self.llt.solve(&rhs);
        let xv = DVector::from_fn(g.len(), |i, _| x[(i, 0)]);
        let residual = (self.k_free.mul_vec(&xv) - g).norm() / g_norm;
        if residual > 1e-12 {
            return Err(Error::IllConditioned {
                residual,
                limit: 1e-12,
            });
        }
        Ok(g.dot(&xv))
    }

    /// Dense copy of the free gradient stiffness (stability analysis).
    pub fn k_dense(&self) -> nalgebra::DMatrix<f64> {
        self.k_free.to_dense()
    }
}

/// Stress argument: finite element coefficients, an analytic field, or the
/// pointwise difference field − coefficients (error evaluation).
pub enum StressArg<'a> {
    Coeffs(&'a DVector<f64>),
    Field(&'a dyn StressField),
    Error(&'a dyn StressField, &'a DVector<f64>),
}

impl StressArg<'_> {
    fn needs_field_quadrature(&self) -> bool {
        !matches!(self, StressArg::Coeffs(_))
    }

    fn eval(
        &self,
        bases: &ElementBases,
        map: &DofMap,
        c: usize,
        pts: &[Vector3<f64>],
    ) -> Vec<SymTensor3> {
        let fe = |coeffs: &DVector<f64>| -> Vec<SymTensor3> {
            let tables = basis::sigma_tables(bases, c, pts);
            let gdofs = &map.cell_dofs[c];
            (0..pts.len())
                .map(|q| {
                    let mut acc = SymTensor3::ZERO;
                    for (j, &g) in gdofs.iter().enumerate() {
                        acc += tables[j * pts.len() + q] * coeffs[g];
                    }
                    acc
                })
                .collect()
        };
        let analytic = |field: &dyn StressField| -> Vec<SymTensor3> {
            let ctx = &bases.ctxs[c];
            pts.iter()
                .map(|p| field.value(&ctx.xf.push_point(&ctx.v0, p)))
                .collect()
        };
        match self {
            StressArg::Coeffs(coeffs) => fe(coeffs),
            StressArg::Field(field) => analytic(*field),
            StressArg::Error(field, coeffs) => {
                let mut vals = analytic(*field);
                for (v, fe_v) in vals.iter_mut().zip(fe(coeffs)) {
                    *v = *v - fe_v;
                }
                vals
            }
        }
    }
}

/// Displacement argument, analogous to [`StressArg`].
pub enum VectorArg<'a> {
    Coeffs(&'a DVector<f64>),
    Field(&'a dyn VectorField),
    Error(&'a dyn VectorField, &'a DVector<f64>),
}

struct VectorSamples {
    value: Vec<Vector3<f64>>,
    strain: Vec<SymTensor3>,
    curl: Vec<Vector3<f64>>,
}

impl VectorArg<'_> {
    fn needs_field_quadrature(&self) -> bool {
        !matches!(self, VectorArg::Coeffs(_))
    }

    fn eval(
        &self,
        bases: &ElementBases,
        map: &DofMap,
        c: usize,
        pts: &[Vector3<f64>],
    ) -> VectorSamples {
        let fe = |coeffs: &DVector<f64>| -> VectorSamples {
            let t = basis::v_tables(bases, c, pts);
            let gdofs = &map.cell_dofs[c];
            let mut out = VectorSamples {
                value: vec![Vector3::zeros(); pts.len()],
                strain: vec![SymTensor3::ZERO; pts.len()],
                curl: vec![Vector3::zeros(); pts.len()],
            };
            for q in 0..pts.len() {
                for (j, &g) in gdofs.iter().enumerate() {
                    out.value[q] += t.value[j * pts.len() + q] * coeffs[g];
                    out.strain[q] += t.strain[j * pts.len() + q] * coeffs[g];
                    out.curl[q] += t.curl[j * pts.len() + q] * coeffs[g];
                }
            }
            out
        };
        let analytic = |field: &dyn VectorField| -> VectorSamples {
            let ctx = &bases.ctxs[c];
            let xs: Vec<_> = pts.iter().map(|p| ctx.xf.push_point(&ctx.v0, p)).collect();
            VectorSamples {
                value: xs.iter().map(|x| field.value(x)).collect(),
                strain: xs.iter().map(|x| field.strain(x)).collect(),
                curl: xs.iter().map(|x| field.curl(x)).collect(),
            }
        };
        match self {
            VectorArg::Coeffs(coeffs) => fe(coeffs),
            VectorArg::Field(field) => analytic(*field),
            VectorArg::Error(field, coeffs) => {
                let mut out = analytic(*field);
                let fe_out = fe(coeffs);
                for q in 0..pts.len() {
                    out.value[q] -= fe_out.value[q];
                    out.strain[q] = out.strain[q] - fe_out.strain[q];
                    out.curl[q] -= fe_out.curl[q];
                }
                out
            }
        }
    }
}

fn volume_degree(k: usize, field_arg: bool) -> usize {
    if field_arg {
        (2 * k + 4).min(MAX_DEGREE)
    } else {
        2 * k
    }
}

/// Discrete stress norm of the argument.
pub fn sigma_h_norm(
    arg: &StressArg,
    mesh: &Mesh,
    bases: &ElementBases,
    map: &DofMap,
    dual: &DualNormContext,
) -> Result<NormReport> {
    let k = bases.k;
    let degree = volume_degree(k, arg.needs_field_quadrature());
    let vol_rule = tet_rule(degree)?;
    let vol_pts: Vec<Vector3<f64>> = (0..vol_rule.len()).map(|q| vol_rule.point_xyz(q)).collect();
    let face_rule = tri_rule(degree)?;

    let mut l2_sq = 0.0;
    let mut g = DVector::<f64>::zeros(dual.n_free());
    let n_w = dual.w_bases.n_local();

    for c in 0..mesh.n_cells() {
        let jt = bases.ctxs[c].xf.det;
        let tau = arg.eval(bases, map, c, &vol_pts);
        for q in 0..vol_pts.len() {
            l2_sq += jt * vol_rule.weights[q] * tau[q].frob_dot(&tau[q]);
        }

        // volume part of b(τ, ∇φ_j) = -∫_T τ : ε(∇φ_j) + ∮ τ_nn ∂φ/∂n
        let hess = basis::w_hessian_tables(&dual.w_bases, c, &vol_pts);
        for (jl, &gj) in dual.w_map.cell_dofs[c].iter().enumerate() {
            let Some(fj) = dual.free_of[gj] else { continue };
            let mut acc = 0.0;
            for q in 0..vol_pts.len() {
                acc += vol_rule.weights[q] * tau[q].frob_dot(&hess[jl * vol_pts.len() + q]);
            }
            g[fj] -= jt * acc;
        }

        for lf in 0..4 {
            let fid = mesh.cell_faces[c][lf];
            let pts = basis::local_face_points(lf, &face_rule);
            let tau_f = arg.eval(bases, map, c, &pts);
            let n_out = bases.ctxs[c].xf.face_normal_out[lf];
            let area = mesh.face_area[fid];
            let wt = basis::w_tables(&dual.w_bases, c, &pts);
            for (jl, &gj) in dual.w_map.cell_dofs[c].iter().take(n_w).enumerate() {
                let Some(fj) = dual.free_of[gj] else { continue };
                let mut acc = 0.0;
                for q in 0..pts.len() {
                    acc += face_rule.weights[q]
                        * tau_f[q].nn(&n_out)
                        * wt.grad[jl * pts.len() + q].dot(&n_out);
                }
                g[fj] += 2.0 * area * acc;
            }
        }
    }

    // face term, one contribution per face from the owning cell
    let mut face_sq = 0.0;
    for f in 0..mesh.n_faces() {
        let owner = mesh.face_cells[f].0;
        let lf = mesh.cell_faces[owner].iter().position(|&x| x == f).unwrap();
        let pts = basis::local_face_points(lf, &face_rule);
        let tau = arg.eval(bases, map, owner, &pts);
        let n = mesh.face_normal[f];
        let h_f = mesh.face_diameter(f);
        let area = mesh.face_area[f];
        let mut acc = 0.0;
        for q in 0..pts.len() {
            let nn = tau[q].nn(&n);
            acc += face_rule.weights[q] * nn * nn;
        }
        face_sq += h_f * 2.0 * area * acc;
    }

    let dual_sq = dual.dual_sq(&g)?;
    Ok(NormReport::from_parts(l2_sq, face_sq, dual_sq))
}

/// ‖v‖² = ∫ |v|² + |curl v|².
pub fn hcurl_norm(
    arg: &VectorArg,
    mesh: &Mesh,
    bases: &ElementBases,
    map: &DofMap,
) -> Result<f64> {
    let degree = volume_degree(bases.k, arg.needs_field_quadrature());
    let rule = tet_rule(degree)?;
    let pts: Vec<Vector3<f64>> = (0..rule.len()).map(|q| rule.point_xyz(q)).collect();
    let mut acc = 0.0;
    for c in 0..mesh.n_cells() {
        let jt = bases.ctxs[c].xf.det;
        let s = arg.eval(bases, map, c, &pts);
        for q in 0..pts.len() {
            acc += jt
                * rule.weights[q]
                * (s.value[q].norm_squared() + s.curl[q].norm_squared());
        }
    }
    Ok(acc.sqrt())
}

/// Broken H¹ norm: elementwise strain energy plus h_F^{-1}-weighted normal
/// jumps across interior faces.
pub fn broken_h1_norm(
    arg: &VectorArg,
    mesh: &Mesh,
    bases: &ElementBases,
    map: &DofMap,
) -> Result<f64> {
    let degree = volume_degree(bases.k, arg.needs_field_quadrature());
    let vol_rule = tet_rule(degree)?;
    let vol_pts: Vec<Vector3<f64>> = (0..vol_rule.len()).map(|q| vol_rule.point_xyz(q)).collect();
    let mut acc = 0.0;
    for c in 0..mesh.n_cells() {
        let jt = bases.ctxs[c].xf.det;
        let s = arg.eval(bases, map, c, &vol_pts);
        for q in 0..vol_pts.len() {
            acc += jt * vol_rule.weights[q] * s.strain[q].frob_dot(&s.strain[q]);
        }
    }

    let face_rule = tri_rule(degree)?;
    for f in 0..mesh.n_faces() {
        let (c1, Some(c2)) = mesh.face_cells[f] else { continue };
        let pts1 = basis::global_face_points(mesh, c1, f, &face_rule);
        let pts2 = basis::global_face_points(mesh, c2, f, &face_rule);
        let s1 = arg.eval(bases, map, c1, &pts1);
        let s2 = arg.eval(bases, map, c2, &pts2);
        let n = mesh.face_normal[f];
        let area = mesh.face_area[f];
        let h_f = mesh.face_diameter(f);
        let mut jump_sq = 0.0;
        for q in 0..pts1.len() {
            let jn = (s1.value[q] - s2.value[q]).dot(&n);
            jump_sq += face_rule.weights[q] * jn * jn;
        }
        acc += 2.0 * area * jump_sq / h_f;
    }
    Ok(acc.sqrt())
}

/// Scalar argument for H¹ error evaluation.
pub enum ScalarArg<'a> {
    Field(&'a dyn ScalarField),
    Error(&'a dyn ScalarField, &'a DVector<f64>),
}

/// Full H¹ norm ( ∫ w² + |∇w|² )^{1/2} of a scalar argument over the
/// order-(k+1) space machinery.
pub fn w_h1_norm(
    arg: &ScalarArg,
    mesh: &Mesh,
    bases: &ElementBases,
    map: &DofMap,
) -> Result<f64> {
    let degree = (2 * bases.k + 4).min(MAX_DEGREE);
    let rule = tet_rule(degree)?;
    let pts: Vec<Vector3<f64>> = (0..rule.len()).map(|q| rule.point_xyz(q)).collect();
    let mut acc = 0.0;
    for c in 0..mesh.n_cells() {
        let ctx = &bases.ctxs[c];
        let jt = ctx.xf.det;
        let (vals, grads): (Vec<f64>, Vec<Vector3<f64>>) = match arg {
            ScalarArg::Field(field) => pts
                .iter()
                .map(|p| {
                    let x = ctx.xf.push_point(&ctx.v0, p);
                    (field.value(&x), field.gradient(&x))
                })
                .unzip(),
            ScalarArg::Error(field, coeffs) => {
                let t = basis::w_tables(bases, c, &pts);
                let gdofs = &map.cell_dofs[c];
                pts.iter()
                    .enumerate()
                    .map(|(q, p)| {
                        let x = ctx.xf.push_point(&ctx.v0, p);
                        let mut v = field.value(&x);
                        let mut g = field.gradient(&x);
                        for (j, &gd) in gdofs.iter().enumerate() {
                            v -= t.value[j * pts.len() + q] * coeffs[gd];
                            g -= t.grad[j * pts.len() + q] * coeffs[gd];
                        }
                        (v, g)
                    })
                    .unzip()
            }
        };
        for q in 0..pts.len() {
            acc += jt * rule.weights[q] * (vals[q] * vals[q] + grads[q].norm_squared());
        }
    }
    Ok(acc.sqrt())
}

/// λ_max of the face-term Gram against the L² Gram: the constant C with
/// face² ≤ C · L²² for finite element stresses. Diagnostic.
pub fn face_domination_constant(
    mesh: &Mesh,
    bases: &ElementBases,
    map: &DofMap,
) -> Result<f64> {
    let m_face = crate::assembly::assemble_sigma_face_gram(mesh, bases, map)?.to_dense();
    let m_l2 = crate::assembly::assemble_sigma_mass(mesh, bases, map)?.to_dense();
    let (_, max) = crate::solver::generalized_symmetric_eig_range(&m_face, &m_l2)?;
    Ok(max)
}

/// Ratios ‖v_h‖_{H¹,h} / ‖v_h‖_{H(curl)} for random finite element
/// displacements. Reported, never asserted: the equivalence constant is not
/// quantified by the theory.
pub fn norm_equivalence_ratios(
    mesh: &Mesh,
    bases: &ElementBases,
    map: &DofMap,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut coeffs = DVector::zeros(map.n_dofs);
        for g in 0..map.n_dofs {
            if !map.constrained[g] {
                coeffs[g] = rng.gen_range(-1.0..1.0);
            }
        }
        let broken = broken_h1_norm(&VectorArg::Coeffs(&coeffs), mesh, bases, map)?;
        let hcurl = hcurl_norm(&VectorArg::Coeffs(&coeffs), mesh, bases, map)?;
        if hcurl > 0.0 {
            out.push(broken / hcurl);
        }
    }
    Ok(out)
}
