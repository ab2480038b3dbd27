//! Conforming transformations from the reference tetrahedron to physical
//! elements.
//!
//! Scalars map directly, displacements covariantly (preserving tangential
//! traces) and stresses with the normal-normal-trace preserving map
//! τ = (1/J²) F τ̂ Fᵀ. Gradients, strains and curls transform accordingly;
//! all formulas are in their constant-Jacobian (affine) form.

use crate::mesh::ElementTransform;
use crate::reference::SymTensor3;
use nalgebra::{Matrix3, Vector3};

/// Physical value and derivative of a scalar shape function.
#[derive(Debug, Clone, Copy)]
pub struct PushedScalar {
    pub value: f64,
    pub gradient: Vector3<f64>,
}

/// Physical value, strain and curl of a displacement shape function.
#[derive(Debug, Clone, Copy)]
pub struct PushedVector {
    pub value: Vector3<f64>,
    pub strain: SymTensor3,
    pub curl: Vector3<f64>,
}

/// Physical value of a stress shape function.
#[derive(Debug, Clone, Copy)]
pub struct PushedStress {
    pub value: SymTensor3,
}

/// w(x) = ŵ(x̂), ∇w = F^{-T} ∇̂ŵ.
pub fn push_w(value: f64, grad: &Vector3<f64>, xf: &ElementTransform) -> PushedScalar {
    PushedScalar {
        value,
        gradient: xf.f_inv_t * grad,
    }
}

/// v = F^{-T} v̂, ε(v) = F^{-T} ε̂ F^{-1}, curl v = (1/J) F curl̂ v̂.
pub fn push_v(
    value: &Vector3<f64>,
    ref_grad: &Matrix3<f64>,
    xf: &ElementTransform,
) -> PushedVector {
    let strain_ref = SymTensor3::from_matrix(ref_grad);
    let curl_ref = Vector3::new(
        ref_grad[(2, 1)] - ref_grad[(1, 2)],
        ref_grad[(0, 2)] - ref_grad[(2, 0)],
        ref_grad[(1, 0)] - ref_grad[(0, 1)],
    );
    PushedVector {
        value: xf.f_inv_t * value,
        strain: strain_ref.congruence(&xf.f_inv_t),
        curl: (xf.f * curl_ref) / xf.det,
    }
}

/// τ = (1/J²) F τ̂ Fᵀ.
pub fn push_sigma(value: &SymTensor3, xf: &ElementTransform) -> PushedStress {
    PushedStress {
        value: value.congruence(&xf.f) * (1.0 / (xf.det * xf.det)),
    }
}

/// Hessian of a scalar: H = F^{-T} Ĥ F^{-1}.
pub fn push_hessian(ref_hessian: &SymTensor3, xf: &ElementTransform) -> SymTensor3 {
    ref_hessian.congruence(&xf.f_inv_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_cube, CubeFace, Mesh};
    use approx::assert_abs_diff_eq;
    use nalgebra::Point3;

    fn scaled_ref_tet(s: f64) -> Mesh {
        use crate::mesh::{BoundaryRegion, REF_VERTS};
        let vertices = REF_VERTS
            .iter()
            .map(|v| Point3::new(s * v[0], s * v[1], s * v[2]))
            .collect();
        let boundary = vec![
            ([1, 2, 3], BoundaryRegion::Dirichlet),
            ([0, 2, 3], BoundaryRegion::Neumann),
            ([0, 1, 3], BoundaryRegion::Neumann),
            ([0, 1, 2], BoundaryRegion::Neumann),
        ];
        Mesh::from_parts(vertices, vec![[0, 1, 2, 3]], &boundary).unwrap()
    }

    #[test]
    fn identity_transform_is_noop() {
        let xf = scaled_ref_tet(1.0).element_transform(0).unwrap();
        let g = Vector3::new(0.3, -0.2, 0.9);
        let pushed = push_w(2.5, &g, &xf);
        assert_abs_diff_eq!(pushed.value, 2.5);
        assert!((pushed.gradient - g).norm() < 1e-15);

        let v = Vector3::new(1.0, 2.0, 3.0);
        let grad = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let pv = push_v(&v, &grad, &xf);
        assert!((pv.value - v).norm() < 1e-15);
        assert!((pv.curl - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-15);

        let t = SymTensor3([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(push_sigma(&t, &xf).value, t);
    }

    #[test]
    fn uniform_scaling() {
        let xf = scaled_ref_tet(2.0).element_transform(0).unwrap();
        // gradient of λ̂4 = 1 - x̂ - ŷ - ẑ pushed through F = 2I
        let ghat = Vector3::new(-1.0, -1.0, -1.0);
        let pushed = push_w(0.0, &ghat, &xf);
        assert!((pushed.gradient - Vector3::new(-0.5, -0.5, -0.5)).norm() < 1e-14);

        // constant vector halves, strain of a constant field vanishes
        let pv = push_v(&Vector3::new(1.0, 0.0, 0.0), &Matrix3::zeros(), &xf);
        assert!((pv.value - Vector3::new(0.5, 0.0, 0.0)).norm() < 1e-14);
        assert_abs_diff_eq!(pv.strain.frob_norm(), 0.0);

        // J = 8: τ = (1/64)·4·τ̂ = τ̂/16
        let t = SymTensor3::identity();
        let ps = push_sigma(&t, &xf);
        assert!((ps.value.to_matrix() - t.to_matrix() / 16.0).norm() < 1e-14);
    }

    #[test]
    fn gradient_commutes_with_push_by_finite_differences() {
        // scalar ŵ = x̂² ŷ + ẑ on a generic cell of a structured mesh
        let mesh = build_structured_cube(2, &CubeFace::ALL).unwrap();
        let c = 13;
        let xf = mesh.element_transform(c).unwrap();
        let v0 = mesh.cell_vertices(c)[0];
        let what = |p: &Vector3<f64>| p.x * p.x * p.y + p.z;
        let grad_hat = |p: &Vector3<f64>| Vector3::new(2.0 * p.x * p.y, p.x * p.x, 1.0);

        let p = Vector3::new(0.2, 0.3, 0.1);
        let pushed = push_w(what(&p), &grad_hat(&p), &xf);

        // finite differences of w(x) = ŵ(F^{-1}(x - v0)) in physical space
        let x0 = xf.push_point(&v0, &p);
        let h = 1e-6;
        for d in 0..3 {
            let mut xp = x0;
            let mut xm = x0;
            xp[d] += h;
            xm[d] -= h;
            let fd = (what(&xf.pull_point(&v0, &xp)) - what(&xf.pull_point(&v0, &xm))) / (2.0 * h);
            assert!(
                (fd - pushed.gradient[d]).abs() < 1e-5,
                "component {d}: fd {fd} vs {symbolic}",
                symbolic = pushed.gradient[d]
            );
        }
    }

    #[test]
    fn stress_push_keeps_symmetry() {
        let mesh = build_structured_cube(1, &CubeFace::ALL).unwrap();
        for c in 0..mesh.n_cells() {
            let xf = mesh.element_transform(c).unwrap();
            let t = SymTensor3([0.3, -1.2, 0.8, 2.0, -0.5, 0.1]);
            let m = push_sigma(&t, &xf).value.to_matrix();
            assert!((m - m.transpose()).norm() < 1e-15);
        }
    }
}
