//! End-to-end pipeline checks: basis duality on real cells, polynomial
//! reproduction, and the patch test that certifies the sign conventions of
//! the discrete problem.

use nalgebra::{DVector, Point3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tdnns_core::assembly::{DofMap, MaterialLaw};
use tdnns_core::basis;
use tdnns_core::harness::{build_case, solve_case_on_level, solution_errors};
use tdnns_core::interpolation::interpolate_sigma_cellwise;
use tdnns_core::mesh::{build_structured_cube, CubeFace};
use tdnns_core::reference::Space;
use tdnns_core::SymTensor3;

/// Reference bases exist, are dual, and report modest condition numbers.
#[test]
fn reference_bases_build() {
    for k in 1..=2 {
        let sig = tdnns_core::build_sigma_basis(k).unwrap();
        assert_eq!(sig.n_shapes(), if k == 1 { 24 } else { 60 });
        let v = tdnns_core::build_v_basis(k).unwrap();
        assert_eq!(v.n_shapes(), if k == 1 { 12 } else { 30 });
        let w = tdnns_core::build_w_basis(k + 1).unwrap();
        assert_eq!(w.n_shapes(), if k == 1 { 10 } else { 20 });
        assert!(sig.vandermonde_condition < 1e6);
        assert!(v.vandermonde_condition < 1e6);
        assert!(w.vandermonde_condition < 1e6);
    }
}

/// Stress interpolation reproduces random members of the discrete space.
#[test]
fn sigma_interpolation_reproduces_fe_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for k in 1..=2usize {
        let mesh = build_structured_cube(1, &CubeFace::ALL).unwrap();
        let map = DofMap::build(&mesh, Space::Sigma, k);
        let bases = basis::build_element_bases(&mesh, Space::Sigma, k).unwrap();
        for _ in 0..3 {
            let coeffs = DVector::from_fn(map.n_dofs, |_, _| rng.gen_range(-1.0..1.0));
            let reproduced = interpolate_sigma_cellwise(&mesh, &map, 2 * k + 2, &mut |c, x| {
                let xf = mesh.element_transform(c).unwrap();
                let v0 = mesh.cell_vertices(c)[0];
                let p = xf.pull_point(&v0, x);
                basis::eval_sigma_fe(&bases, &map.cell_dofs[c], &coeffs, c, &p)
            })
            .unwrap();
            let err = (&reproduced - &coeffs).amax();
            let scale = coeffs.amax();
            assert!(
                err <= 1e-10 * scale.max(1.0),
                "k={k}: reproduction error {err:.3e}"
            );
        }
    }
}

/// Interior shape functions have vanishing normal-normal traces.
#[test]
fn interior_shapes_have_zero_nn_trace() {
    let basis = tdnns_core::build_sigma_basis(2).unwrap();
    let nfm = 6; // P^2 on a face
    let rule = tdnns_core::quadrature::tri_rule(4).unwrap();
    for lf in 0..4 {
        let pts = basis::local_face_points(lf, &rule);
        let n = tdnns_core::mesh::ref_face_normal(lf);
        for shape in 4 * nfm..basis.n_shapes() {
            for p in &pts {
                let s = basis.eval_sigma(shape, p);
                assert!(
                    s.nn(&n).abs() < 1e-12,
                    "interior shape {shape} has nn-trace {:.2e} on face {lf}",
                    s.nn(&n)
                );
            }
        }
    }
}

/// LINEAR case at k=1: the discrete solution reproduces the closed form.
#[test]
fn patch_test_linear() {
    let material = MaterialLaw::new(1.0, 0.3).unwrap();
    let case = build_case("LINEAR", material).unwrap();
    for n in [1usize, 2] {
        let level = solve_case_on_level(&case, n, 1).unwrap();
        let errors = solution_errors(&case, &level).unwrap();
        assert!(
            errors.combined <= 1e-9,
            "n={n}: combined error {:.3e}",
            errors.combined
        );
    }
}

/// Zero data produces the zero solution.
#[test]
fn zero_data_zero_solution() {
    let material = MaterialLaw::new(2.0, 0.25).unwrap();
    let zero_case = tdnns_core::harness::ManufacturedCase {
        name: "ZERO".into(),
        material,
        dirichlet_spec: CubeFace::ALL.to_vec(),
        u: Box::new(tdnns_core::interpolation::ClosureVector {
            value: Box::new(|_| Vector3::zeros()),
            gradient: Box::new(|_| nalgebra::Matrix3::zeros()),
        }),
        sigma: Box::new(tdnns_core::interpolation::ClosureStress {
            value: Box::new(|_| SymTensor3::ZERO),
        }),
        f: Box::new(|_| Vector3::zeros()),
        w: Box::new(tdnns_core::interpolation::ClosureScalar {
            value: Box::new(|_| 0.0),
            gradient: Box::new(|_| Vector3::zeros()),
        }),
    };
    let level = solve_case_on_level(&zero_case, 1, 1).unwrap();
    assert!(level.solution.sigma.amax() <= 1e-12);
    assert!(level.solution.u.amax() <= 1e-12);
}

/// Rigid motion: zero stress, exact displacement reproduction.
#[test]
fn rigid_motion_zero_stress() {
    let material = MaterialLaw::new(1.0, 0.3).unwrap();
    let b = Vector3::new(0.4, -0.2, 0.7);
    let rigid = tdnns_core::harness::ManufacturedCase {
        name: "RIGID".into(),
        material,
        dirichlet_spec: CubeFace::ALL.to_vec(),
        u: Box::new(tdnns_core::interpolation::ClosureVector {
            value: Box::new(move |x: &Point3<f64>| {
                Vector3::new(1.0, 2.0, -1.0) + b.cross(&x.coords)
            }),
            gradient: Box::new(move |_| {
                nalgebra::Matrix3::new(0.0, -b.z, b.y, b.z, 0.0, -b.x, -b.y, b.x, 0.0)
            }),
        }),
        sigma: Box::new(tdnns_core::interpolation::ClosureStress {
            value: Box::new(|_| SymTensor3::ZERO),
        }),
        f: Box::new(|_| Vector3::zeros()),
        w: Box::new(tdnns_core::interpolation::ClosureScalar {
            value: Box::new(|_| 0.0),
            gradient: Box::new(|_| Vector3::zeros()),
        }),
    };
    let level = solve_case_on_level(&rigid, 1, 1).unwrap();
    assert!(
        level.solution.sigma.amax() <= 1e-9,
        "stress amax {:.3e}",
        level.solution.sigma.amax()
    );
}
