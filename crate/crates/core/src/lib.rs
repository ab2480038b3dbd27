//! Mixed finite elements for 3D linear elasticity with tangentially
//! continuous displacements and normal-normal continuous symmetric
//! stresses, plus the machinery to verify stability and optimal-order
//! convergence numerically: interpolation operators, discrete norms,
//! a sparse saddle-point solver and study drivers.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod harness;
pub mod interpolation;
pub mod mesh;
pub mod norms;
pub mod poly;
pub mod quadrature;
pub mod reference;
pub mod solver;
pub mod transform;
pub mod vtk;

pub use error::{Error, Result};
pub use mesh::{build_structured_cube, BoundaryRegion, CubeFace, ElementTransform, Mesh};
pub use reference::{
    build_sigma_basis, build_v_basis, build_w_basis, reference_tensors, Space, SymTensor3,
};
