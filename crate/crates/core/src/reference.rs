//! Reference-element data: symmetric tensors, candidate polynomial fields,
//! degree-of-freedom descriptors and the canonical dual bases for the three
//! spaces (stresses of order k, displacements of order k, scalars of order
//! k+1) on the reference tetrahedron.

use crate::basis;
use crate::error::Result;
use crate::poly::TetPolyBasis;
use nalgebra::{DMatrix, Matrix3, Vector3};
use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Symmetric 3×3 tensor storing the six independent entries
/// (xx, yy, zz, xy, xz, yz). Symmetry is structural.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor3(pub [f64; 6]);

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3([0.0; 6]);

    pub fn identity() -> Self {
        SymTensor3([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        SymTensor3([
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(1, 2)] + m[(2, 1)]),
        ])
    }

    pub fn to_matrix(self) -> Matrix3<f64> {
        let [xx, yy, zz, xy, xz, yz] = self.0;
        Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.0[0],
            (1, 1) => self.0[1],
            (2, 2) => self.0[2],
            (0, 1) => self.0[3],
            (0, 2) => self.0[4],
            (1, 2) => self.0[5],
            _ => panic!("index ({i},{j})"),
        }
    }

    /// Frobenius inner product S : T (off-diagonals counted twice).
    pub fn frob_dot(&self, other: &SymTensor3) -> f64 {
        let a = &self.0;
        let b = &other.0;
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_dot(self).sqrt()
    }

    /// Normal-normal component nᵀ S n.
    pub fn nn(&self, n: &Vector3<f64>) -> f64 {
        let [xx, yy, zz, xy, xz, yz] = self.0;
        xx * n.x * n.x
            + yy * n.y * n.y
            + zz * n.z * n.z
            + 2.0 * (xy * n.x * n.y + xz * n.x * n.z + yz * n.y * n.z)
    }

    /// S n.
    pub fn dot_vec(&self, n: &Vector3<f64>) -> Vector3<f64> {
        let [xx, yy, zz, xy, xz, yz] = self.0;
        Vector3::new(
            xx * n.x + xy * n.y + xz * n.z,
            xy * n.x + yy * n.y + yz * n.z,
            xz * n.x + yz * n.y + zz * n.z,
        )
    }

    /// Congruence transform C S Cᵀ (exactly symmetric by construction).
    pub fn congruence(&self, c: &Matrix3<f64>) -> SymTensor3 {
        let m = c * self.to_matrix() * c.transpose();
        SymTensor3([
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(1, 2)] + m[(2, 1)]),
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(self, rhs: SymTensor3) -> SymTensor3 {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        SymTensor3(out)
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, rhs: SymTensor3) {
        for (o, r) in self.0.iter_mut().zip(rhs.0) {
            *o += r;
        }
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(self, rhs: SymTensor3) -> SymTensor3 {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o -= r;
        }
        SymTensor3(out)
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = SymTensor3;
    fn mul(self, s: f64) -> SymTensor3 {
        SymTensor3(self.0.map(|v| v * s))
    }
}

impl Neg for SymTensor3 {
    type Output = SymTensor3;
    fn neg(self) -> SymTensor3 {
        SymTensor3(self.0.map(|v| -v))
    }
}

/// The six canonical constant tensors on the reference tetrahedron. The
/// first four are associated with the faces (normal-normal trace constant on
/// their own face, zero on the others), the last two have vanishing
/// normal-normal trace on every face.
pub fn reference_tensors() -> [SymTensor3; 6] {
    [
        SymTensor3([-6.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
        SymTensor3([0.0, -6.0, 0.0, 1.0, 1.0, 1.0]),
        SymTensor3([0.0, 0.0, -6.0, 1.0, 1.0, 1.0]),
        SymTensor3([0.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
        SymTensor3([0.0, 0.0, 0.0, 0.0, -1.0, 1.0]),
        SymTensor3([0.0, 0.0, 0.0, -1.0, 0.0, 1.0]),
    ]
}

/// Normal-normal trace of face tensor m on its own face: (-6, -6, -6, 2).
pub fn face_tensor_nn_constant(m: usize) -> f64 {
    if m == 3 {
        2.0
    } else {
        -6.0
    }
}

/// Tensor index (into [`reference_tensors`]) associated with local face `lf`
/// of the reference tetrahedron. Local face 0 is the slanted one.
pub fn face_tensor_index(lf: usize) -> usize {
    if lf == 0 {
        3
    } else {
        lf - 1
    }
}

/// The three finite element spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    /// symmetric stresses, normal-normal continuous
    Sigma,
    /// displacements, tangentially continuous
    V,
    /// continuous scalars of order k+1
    W,
}

impl Space {
    pub fn name(&self) -> &'static str {
        match self {
            Space::Sigma => "sigma",
            Space::V => "v",
            Space::W => "w",
        }
    }
}

/// Degree-of-freedom functional descriptor: the entity it lives on and the
/// moment it takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    /// weighted moment of the normal-normal trace against P^k on a face
    SigmaFace { local_face: usize, moment: usize },
    /// volume moment against q · F^{-T} Ŝ F^{-1}; tensors 0..4 pair with
    /// P^{k-1}, tensors 4..6 with P^k
    SigmaInterior { tensor: usize, moment: usize },
    /// moment of the tangential component against P^k along an edge
    VEdge { local_edge: usize, moment: usize },
    /// face moment against {two constant tangents, the in-plane radial field}
    VFace { local_face: usize, component: usize },
    /// point value
    WVertex { local_vertex: usize },
    /// averaged edge moment (weights 1, 1 + Legendre)
    WEdge { local_edge: usize, moment: usize },
    /// face mean value
    WFace { local_face: usize },
}

impl DofKind {
    /// Entity class used by constraint marking: 0 vertex, 1 edge, 2 face,
    /// 3 interior.
    pub fn entity_dim(&self) -> usize {
        match self {
            DofKind::WVertex { .. } => 0,
            DofKind::VEdge { .. } | DofKind::WEdge { .. } => 1,
            DofKind::SigmaFace { .. } | DofKind::VFace { .. } | DofKind::WFace { .. } => 2,
            DofKind::SigmaInterior { .. } => 3,
        }
    }
}

/// Per-entity DOF counts for a space at order k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntityDofCounts {
    pub per_vertex: usize,
    pub per_edge: usize,
    pub per_face: usize,
    pub per_cell: usize,
}

pub fn entity_dof_counts(space: Space, k: usize) -> EntityDofCounts {
    match space {
        Space::Sigma => EntityDofCounts {
            per_vertex: 0,
            per_edge: 0,
            per_face: crate::poly::dim_p2(k),
            per_cell: 4 * crate::poly::dim_p3(k - 1) + 2 * crate::poly::dim_p3(k),
        },
        Space::V => EntityDofCounts {
            per_vertex: 0,
            per_edge: k + 1,
            per_face: if k >= 2 { 3 } else { 0 },
            per_cell: 0,
        },
        // order of the W space is k+1
        Space::W => EntityDofCounts {
            per_vertex: 1,
            per_edge: k, // = (k+1) - 1 moments per edge
            per_face: if k + 1 >= 3 { 1 } else { 0 },
            per_cell: 0,
        },
    }
}

/// Fixed enumeration of the local DOF functionals; assembly and the global
/// numbering rely on this order.
pub fn dof_list(space: Space, k: usize) -> Vec<DofKind> {
    let counts = entity_dof_counts(space, k);
    let mut dofs = Vec::new();
    match space {
        Space::Sigma => {
            for lf in 0..4 {
                for m in 0..counts.per_face {
                    dofs.push(DofKind::SigmaFace {
                        local_face: lf,
                        moment: m,
                    });
                }
            }
            let n_lo = crate::poly::dim_p3(k - 1);
            let n_hi = crate::poly::dim_p3(k);
            for t in 0..4 {
                for m in 0..n_lo {
                    dofs.push(DofKind::SigmaInterior { tensor: t, moment: m });
                }
            }
            for t in 4..6 {
                for m in 0..n_hi {
                    dofs.push(DofKind::SigmaInterior { tensor: t, moment: m });
                }
            }
        }
        Space::V => {
            for le in 0..6 {
                for m in 0..counts.per_edge {
                    dofs.push(DofKind::VEdge {
                        local_edge: le,
                        moment: m,
                    });
                }
            }
            for lf in 0..4 {
                for c in 0..counts.per_face {
                    dofs.push(DofKind::VFace {
                        local_face: lf,
                        component: c,
                    });
                }
            }
        }
        Space::W => {
            for lv in 0..4 {
                dofs.push(DofKind::WVertex { local_vertex: lv });
            }
            for le in 0..6 {
                for m in 0..counts.per_edge {
                    dofs.push(DofKind::WEdge {
                        local_edge: le,
                        moment: m,
                    });
                }
            }
            for lf in 0..4 {
                for _ in 0..counts.per_face {
                    dofs.push(DofKind::WFace { local_face: lf });
                }
            }
        }
    }
    dofs
}

/// Candidate spanning set of the local polynomial space: orthonormalized
/// scalar polynomials times constant unit tensors/vectors.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub space: Space,
    /// polynomial order of the local space (k, or k+1 for W)
    pub order: usize,
    pub scalar: TetPolyBasis,
}

const UNIT_SYM: [SymTensor3; 6] = [
    SymTensor3([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
    SymTensor3([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
    SymTensor3([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
    SymTensor3([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
    SymTensor3([0.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
    SymTensor3([0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
];

impl Candidates {
    pub fn new(space: Space, order: usize) -> Self {
        Candidates {
            space,
            order,
            scalar: TetPolyBasis::new(order),
        }
    }

    pub fn len(&self) -> usize {
        let np = self.scalar.len();
        match self.space {
            Space::Sigma => 6 * np,
            Space::V => 3 * np,
            Space::W => np,
        }
    }

    pub fn sigma_value(&self, idx: usize, p: &Vector3<f64>) -> SymTensor3 {
        let np = self.scalar.len();
        UNIT_SYM[idx / np] * self.scalar.eval(idx % np, p)
    }

    pub fn v_value(&self, idx: usize, p: &Vector3<f64>) -> Vector3<f64> {
        let np = self.scalar.len();
        let mut v = Vector3::zeros();
        v[idx / np] = self.scalar.eval(idx % np, p);
        v
    }

    /// Jacobian ∂v_i/∂x_j of a vector candidate.
    pub fn v_grad(&self, idx: usize, p: &Vector3<f64>) -> Matrix3<f64> {
        let np = self.scalar.len();
        let g = self.scalar.grad(idx % np, p);
        let mut m = Matrix3::zeros();
        let row = idx / np;
        for j in 0..3 {
            m[(row, j)] = g[j];
        }
        m
    }

    pub fn w_value(&self, idx: usize, p: &Vector3<f64>) -> f64 {
        self.scalar.eval(idx, p)
    }

    pub fn w_grad(&self, idx: usize, p: &Vector3<f64>) -> Vector3<f64> {
        self.scalar.grad(idx, p)
    }
}

/// Shape functions, DOF functionals and evaluation tables for one space on
/// the reference tetrahedron (canonical orientation, identity geometry).
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    pub space: Space,
    /// polynomial order of the local space
    pub order: usize,
    pub dofs: Vec<DofKind>,
    pub candidates: Candidates,
    /// column j holds the candidate weights of shape function j
    pub coeffs: DMatrix<f64>,
    /// condition number of the DOF-Vandermonde matrix
    pub vandermonde_condition: f64,
}

impl ReferenceBasis {
    pub fn n_shapes(&self) -> usize {
        self.dofs.len()
    }

    pub fn eval_sigma(&self, shape: usize, p: &Vector3<f64>) -> SymTensor3 {
        let mut acc = SymTensor3::ZERO;
        for c in 0..self.candidates.len() {
            let w = self.coeffs[(c, shape)];
            if w != 0.0 {
                acc += self.candidates.sigma_value(c, p) * w;
            }
        }
        acc
    }

    pub fn eval_v(&self, shape: usize, p: &Vector3<f64>) -> Vector3<f64> {
        let mut acc = Vector3::zeros();
        for c in 0..self.candidates.len() {
            let w = self.coeffs[(c, shape)];
            if w != 0.0 {
                acc += self.candidates.v_value(c, p) * w;
            }
        }
        acc
    }

    pub fn eval_v_grad(&self, shape: usize, p: &Vector3<f64>) -> Matrix3<f64> {
        let mut acc = Matrix3::zeros();
        for c in 0..self.candidates.len() {
            let w = self.coeffs[(c, shape)];
            if w != 0.0 {
                acc += self.candidates.v_grad(c, p) * w;
            }
        }
        acc
    }

    pub fn eval_w(&self, shape: usize, p: &Vector3<f64>) -> f64 {
        (0..self.candidates.len())
            .map(|c| self.coeffs[(c, shape)] * self.candidates.w_value(c, p))
            .sum()
    }

    pub fn eval_w_grad(&self, shape: usize, p: &Vector3<f64>) -> Vector3<f64> {
        let mut acc = Vector3::zeros();
        for c in 0..self.candidates.len() {
            let w = self.coeffs[(c, shape)];
            if w != 0.0 {
                acc += self.candidates.w_grad(c, p) * w;
            }
        }
        acc
    }
}

fn basis_cache() -> &'static Mutex<HashMap<(Space, usize), Arc<ReferenceBasis>>> {
    static CACHE: OnceLock<Mutex<HashMap<(Space, usize), Arc<ReferenceBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn build_cached(space: Space, k: usize) -> Result<Arc<ReferenceBasis>> {
    if let Some(b) = basis_cache().lock().unwrap().get(&(space, k)) {
        return Ok(b.clone());
    }
    let built = Arc::new(basis::build_reference_basis(space, k)?);
    basis_cache()
        .lock()
        .unwrap()
        .insert((space, k), built.clone());
    Ok(built)
}

/// Stress basis of order k ∈ {1, 2}: full symmetric P^k, dual to the
/// weighted face moments and interior tensor moments.
pub fn build_sigma_basis(k: usize) -> Result<Arc<ReferenceBasis>> {
    check_order(k)?;
    build_cached(Space::Sigma, k)
}

/// Displacement basis of order k ∈ {1, 2}: full vector P^k, dual to edge
/// tangential moments plus (k = 2) face moments.
pub fn build_v_basis(k: usize) -> Result<Arc<ReferenceBasis>> {
    check_order(k)?;
    build_cached(Space::V, k)
}

/// Scalar basis of order k+1 for k ∈ {1, 2}: vertex values plus entity
/// moments, chosen so the functionals all map the constant 1 to 1.
pub fn build_w_basis(k_plus_1: usize) -> Result<Arc<ReferenceBasis>> {
    check_order(k_plus_1 - 1)?;
    build_cached(Space::W, k_plus_1 - 1)
}

fn check_order(k: usize) -> Result<()> {
    if !(1..=2).contains(&k) {
        return Err(crate::error::Error::InvalidArgument(format!(
            "order k = {k} unsupported; k must be 1 or 2"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{ref_face_normal, LOCAL_FACES};
    use approx::assert_abs_diff_eq;

    #[test]
    fn printed_tensors() {
        let s = reference_tensors();
        assert_eq!(
            s[0].to_matrix(),
            Matrix3::new(-6.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0)
        );
        assert_eq!(
            s[4].to_matrix(),
            Matrix3::new(0.0, 0.0, -1.0, 0.0, 0.0, 1.0, -1.0, 1.0, 0.0)
        );
        assert_eq!(
            s[5].to_matrix(),
            Matrix3::new(0.0, -1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0)
        );
    }

    #[test]
    fn face_interior_orthogonality() {
        let s = reference_tensors();
        for m in 0..4 {
            for n in 4..6 {
                assert_eq!(s[m].frob_dot(&s[n]), 0.0, "S^F{m} : S^T{} != 0", n - 3);
            }
        }
    }

    #[test]
    fn nn_trace_pattern() {
        let s = reference_tensors();
        for lf in 0..4 {
            let n = ref_face_normal(lf);
            for m in 0..4 {
                let expect = if face_tensor_index(lf) == m {
                    face_tensor_nn_constant(m)
                } else {
                    0.0
                };
                assert_abs_diff_eq!(s[m].nn(&n), expect, epsilon = 1e-14);
            }
            for t in 4..6 {
                assert_abs_diff_eq!(s[t].nn(&n), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn tensors_span_constants() {
        let s = reference_tensors();
        let m = DMatrix::from_fn(6, 6, |i, j| s[j].0[i]);
        let rank = m.svd(true, true).rank(1e-10);
        assert_eq!(rank, 6);
    }

    #[test]
    fn sym_tensor_algebra() {
        let t = SymTensor3([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let m = t.to_matrix();
        assert_eq!(SymTensor3::from_matrix(&m), t);
        let n = Vector3::new(1.0, 1.0, 1.0) / 3f64.sqrt();
        assert_abs_diff_eq!(t.nn(&n), m.dot(&Matrix3::from_fn(|_, _| 1.0 / 3.0)), epsilon = 1e-14);
        // congruence with identity is a no-op
        assert_eq!(t.congruence(&Matrix3::identity()), t);
    }

    #[test]
    fn dof_counts_match_spec() {
        // Sigma: k=1 → 24 = 12 face + 12 interior; k=2 → 60 = 24 + 36
        let d1 = dof_list(Space::Sigma, 1);
        assert_eq!(d1.len(), 24);
        assert_eq!(
            d1.iter().filter(|d| matches!(d, DofKind::SigmaFace { .. })).count(),
            12
        );
        let d2 = dof_list(Space::Sigma, 2);
        assert_eq!(d2.len(), 60);
        assert_eq!(
            d2.iter().filter(|d| matches!(d, DofKind::SigmaFace { .. })).count(),
            24
        );
        // V: k=1 → 12 all edges; k=2 → 30 = 18 edge + 12 face
        assert_eq!(dof_list(Space::V, 1).len(), 12);
        let v2 = dof_list(Space::V, 2);
        assert_eq!(v2.len(), 30);
        assert_eq!(
            v2.iter().filter(|d| matches!(d, DofKind::VEdge { .. })).count(),
            18
        );
        // W: order 2 → 10; order 3 → 20
        assert_eq!(dof_list(Space::W, 1).len(), 10);
        assert_eq!(dof_list(Space::W, 2).len(), 20);
    }

    #[test]
    fn local_faces_ascend() {
        for f in LOCAL_FACES {
            assert!(f[0] < f[1] && f[1] < f[2]);
        }
    }

    #[test]
    fn invalid_orders_rejected() {
        assert!(build_sigma_basis(0).is_err());
        assert!(build_sigma_basis(3).is_err());
        assert!(build_w_basis(4).is_err());
    }
}
