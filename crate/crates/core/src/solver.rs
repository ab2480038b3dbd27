//! Direct solution of the saddle-point system and numerical stability
//! constants (inf-sup, kernel coercivity, continuity) via dense generalized
//! eigenproblems.

use crate::assembly::{
    assemble_a, assemble_b, assemble_grad_embedding, assemble_sigma_face_gram,
    assemble_sigma_mass, assemble_v_hcurl_gram, CooMat, DofMap, MaterialLaw, SparseSymSystem,
};
use crate::basis::{self};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::norms::DualNormContext;
use crate::reference::Space;
use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};

/// Default cap on free unknowns for the dense eigensolves.
pub const EIGEN_SIZE_CAP: usize = 3000;

pub(crate) fn coo_to_faer(coo: &CooMat) -> Result<SparseColMat<usize, f64>> {
    let triplets: Vec<Triplet<usize, usize, f64>> = coo
        .entries
        .iter()
        .map(|&(r, c, v)| Triplet::new(r, c, v))
        .collect();
    SparseColMat::try_new_from_triplets(coo.nrows, coo.ncols, &triplets)
        .map_err(|e| Error::SingularSystem(format!("sparse matrix construction failed: {e:?}")))
}

/// Coefficients of the discrete solution with solve diagnostics.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    /// full-length stress coefficients, prescribed values filled in
    pub sigma: DVector<f64>,
    /// full-length displacement coefficients
    pub u: DVector<f64>,
    pub residual_abs: f64,
    pub residual_rel: f64,
}

/// Factorize and solve the reduced saddle system with one step of iterative
/// refinement. The relative residual is checked against 1e-8.
pub fn solve_saddle(sys: &SparseSymSystem) -> Result<SaddleSolution> {
    let n = sys.n_free();
    let rhs = sys.rhs_free();
    let mut x = DVector::zeros(n);

    if n > 0 && rhs.norm() > 0.0 {
        let coo = sys.saddle_coo();
        let mat = coo_to_faer(&coo)?;
        let symbolic = SymbolicLu::try_new(mat.symbolic())
            .map_err(|e| Error::SingularSystem(format!("symbolic factorization: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(symbolic, mat.as_ref())
            .map_err(|e| Error::SingularSystem(format!("saddle factorization: {e:?}")))?;

        let rhs_mat = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let sol = lu.solve(&rhs_mat);
        for i in 0..n {
            x[i] = sol[(i, 0)];
        }
        // one refinement step
        let r = &rhs - coo.mul_vec(&x);
        let r_mat = faer::Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
        let dx = lu.solve(&r_mat);
        for i in 0..n {
            x[i] += dx[(i, 0)];
        }
    }

    let (residual_abs, residual_rel) = if n > 0 {
        let coo = sys.saddle_coo();
        let r = (&rhs - coo.mul_vec(&x)).norm();
        let denom = rhs.norm();
        (r, if denom > 0.0 { r / denom } else { 0.0 })
    } else {
        (0.0, 0.0)
    };
    if residual_rel > 1e-8 {
        return Err(Error::IllConditioned {
            residual: residual_rel,
            limit: 1e-8,
        });
    }

    let mut sigma = sys.sigma_prescribed.clone();
    for (i, &g) in sys.sigma_free.iter().enumerate() {
        sigma[g] = x[i];
    }
    let ns = sys.sigma_free.len();
    let mut u = sys.v_prescribed.clone();
    for (i, &g) in sys.v_free.iter().enumerate() {
        u[g] = x[ns + i];
    }

    Ok(SaddleSolution {
        sigma,
        u,
        residual_abs,
        residual_rel,
    })
}

/// Inertia (positive, negative, zero eigenvalue counts) of the free saddle
/// matrix by dense symmetric eigendecomposition. Small meshes only.
pub fn saddle_inertia(sys: &SparseSymSystem) -> Result<(usize, usize, usize)> {
    let n = sys.n_free();
    if n > EIGEN_SIZE_CAP {
        return Err(Error::EigenSizeCap {
            size: n,
            cap: EIGEN_SIZE_CAP,
        });
    }
    let dense = sys.saddle_coo().to_dense();
    let sym = (&dense + dense.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let tol = 1e-10 * max_abs.max(1e-300);
    let mut counts = (0usize, 0usize, 0usize);
    for &ev in eig.eigenvalues.iter() {
        if ev > tol {
            counts.0 += 1;
        } else if ev < -tol {
            counts.1 += 1;
        } else {
            counts.2 += 1;
        }
    }
    Ok(counts)
}

/// Extremal generalized eigenvalues of the pencil (P, Q) with Q SPD.
pub(crate) fn generalized_symmetric_eig_range(
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Result<(f64, f64)> {
    let chol = q
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("Gram matrix not positive definite".into()))?;
    let n = q.nrows();
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::SingularSystem("triangular solve failed".into()))?;
    let s = &l_inv * p * l_inv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// Orthonormal basis of the kernel of B (columns), via the eigendecomposition
/// of BᵀB with threshold `tol_rel`·‖B‖ on singular values.
pub fn kernel_basis(b: &DMatrix<f64>, tol_rel: f64) -> DMatrix<f64> {
    let btb = b.transpose() * b;
    let btb = (&btb + btb.transpose()) * 0.5;
    let eig = btb.symmetric_eigen();
    let smax_sq = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let tol_sq = tol_rel * tol_rel * smax_sq.max(1e-300);
    let cols: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] <= tol_sq)
        .collect();
    let mut z = DMatrix::zeros(b.ncols(), cols.len());
    for (j, &i) in cols.iter().enumerate() {
        z.set_column(j, &eig.eigenvectors.column(i));
    }
    z
}

/// Discrete stability constants on one mesh.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub infsup: f64,
    pub kernel_coercivity: f64,
    pub continuity: f64,
    pub n_sigma_free: usize,
    pub n_v_free: usize,
    pub kernel_dim: usize,
}

/// Compute inf-sup, kernel-coercivity and continuity constants of the
/// discrete problem by dense generalized eigensolves. The stress norm is the
/// full discrete norm including the face term and the dual-term correction
/// G K⁻¹ Gᵀ.
pub fn stability_constants(
    mesh: &Mesh,
    material: &MaterialLaw,
    k: usize,
    cap: usize,
) -> Result<StabilityReport> {
    let sigma_map = DofMap::build(mesh, Space::Sigma, k);
    let v_map = DofMap::build(mesh, Space::V, k);
    let sigma_bases = basis::build_element_bases(mesh, Space::Sigma, k)?;
    let v_bases = basis::build_element_bases(mesh, Space::V, k)?;
    let dual = DualNormContext::new(mesh, k)?;

    let free =
        |map: &DofMap| -> Vec<usize> { (0..map.n_dofs).filter(|&g| !map.constrained[g]).collect() };
    let sigma_free = free(&sigma_map);
    let v_free = free(&v_map);
    let w_free = &dual.free;
    let size = sigma_free.len() + v_free.len();
    if size > cap {
        return Err(Error::EigenSizeCap { size, cap });
    }

    let restrict = |m: &DMatrix<f64>, rows: &[usize], cols: &[usize]| -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
    };

    let a_full = assemble_a(mesh, material, &sigma_bases, &sigma_map)?.to_dense();
    let b_full = assemble_b(mesh, &sigma_bases, &v_bases, &sigma_map, &v_map)?.to_dense();
    let m_l2_full = assemble_sigma_mass(mesh, &sigma_bases, &sigma_map)?.to_dense();
    let m_face_full = assemble_sigma_face_gram(mesh, &sigma_bases, &sigma_map)?.to_dense();
    let n_v_full = assemble_v_hcurl_gram(mesh, &v_bases, &v_map)?.to_dense();
    let emb_full =
        assemble_grad_embedding(mesh, &v_bases, &dual.w_bases, &v_map, &dual.w_map)?.to_dense();

    let a_ff = restrict(&a_full, &sigma_free, &sigma_free);
    let b_ff = restrict(&b_full, &v_free, &sigma_free);
    let n_v_ff = restrict(&n_v_full, &v_free, &v_free);

    // discrete stress Gram: L² + face + G K⁻¹ Gᵀ with G = Bᵀ Emb
    let g_full = b_full.transpose() * &emb_full;
    let g_ff = restrict(&g_full, &sigma_free, w_free);
    let k_ff = dual.k_dense();
    let k_chol = k_ff
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("gradient stiffness not SPD".into()))?;
    let kinv_gt = k_chol.solve(&g_ff.transpose());
    let mut m_sigma = restrict(&m_l2_full, &sigma_free, &sigma_free)
        + restrict(&m_face_full, &sigma_free, &sigma_free)
        + &g_ff * kinv_gt;
    m_sigma = (&m_sigma + m_sigma.transpose()) * 0.5;

    // inf-sup and continuity: extremal eigenvalues of (B M_Σ⁻¹ Bᵀ, N_V)
    let m_sigma_chol = m_sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("stress Gram not SPD".into()))?;
    let x = m_sigma_chol.solve(&b_ff.transpose());
    let p = &b_ff * x;
    let p = (&p + p.transpose()) * 0.5;
    let (lam_min, lam_max) = generalized_symmetric_eig_range(&p, &n_v_ff)?;
    let infsup = lam_min.max(0.0).sqrt();
    let continuity = lam_max.max(0.0).sqrt();

    // kernel coercivity: min of a(τ,τ)/‖τ‖²_Σ over ker(B)
    let z = kernel_basis(&b_ff, 1e-10);
    let kernel_dim = z.ncols();
    let kernel_coercivity = if kernel_dim > 0 {
        let az = z.transpose() * &a_ff * &z;
        let mz = z.transpose() * &m_sigma * &z;
        let (min, _) = generalized_symmetric_eig_range(
            &((&az + az.transpose()) * 0.5),
            &((&mz + mz.transpose()) * 0.5),
        )?;
        min
    } else {
        f64::INFINITY
    };

    Ok(StabilityReport {
        infsup,
        kernel_coercivity,
        continuity,
        n_sigma_free: sigma_free.len(),
        n_v_free: v_free.len(),
        kernel_dim,
    })
}

