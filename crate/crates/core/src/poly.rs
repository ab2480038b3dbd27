//! Scalar polynomial bases on the reference tetrahedron, the unit triangle
//! and the unit interval.
//!
//! Bases are orthonormalized monomials (Gram matrices are known in closed
//! form from the factorial integral of barycentric monomials), which keeps
//! the DOF-Vandermonde matrices well conditioned.

use nalgebra::{DMatrix, Vector2, Vector3};

/// dim P^k on a tetrahedron.
pub fn dim_p3(k: usize) -> usize {
    (k + 1) * (k + 2) * (k + 3) / 6
}

/// dim P^k on a triangle.
pub fn dim_p2(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// ∫_{T̂} x^a y^b z^c dx̂ over the reference tetrahedron.
pub fn tet_monomial_integral(a: usize, b: usize, c: usize) -> f64 {
    factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
}

/// ∫_{Δ} u^a v^b du dv over the unit triangle {u,v ≥ 0, u+v ≤ 1}.
pub fn tri_monomial_integral(a: usize, b: usize) -> f64 {
    factorial(a) * factorial(b) / factorial(a + b + 2)
}

/// ∫_{T̂} λ1^a λ2^b λ3^c λ4^d dx̂ (barycentric monomial, Dirichlet integral).
pub fn tet_barycentric_integral(a: usize, b: usize, c: usize, d: usize) -> f64 {
    factorial(a) * factorial(b) * factorial(c) * factorial(d) / factorial(a + b + c + d + 3)
}

/// ∫_{Δ} λ1^a λ2^b λ3^c ds (barycentric monomial on the unit triangle).
pub fn tri_barycentric_integral(a: usize, b: usize, c: usize) -> f64 {
    factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
}

/// Monomial exponents of P^k in 3 variables, ordered by total degree then lex.
pub fn tet_monomials(k: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(dim_p3(k));
    for deg in 0..=k {
        for a in (0..=deg).rev() {
            for b in (0..=deg - a).rev() {
                out.push([a, b, deg - a - b]);
            }
        }
    }
    out
}

/// Monomial exponents of P^k in 2 variables.
pub fn tri_monomials(k: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::with_capacity(dim_p2(k));
    for deg in 0..=k {
        for a in (0..=deg).rev() {
            out.push([a, deg - a]);
        }
    }
    out
}

/// Orthonormal basis of P^k on the reference tetrahedron.
///
/// `coeffs[(i, j)]` is the weight of monomial `j` in basis function `i`.
#[derive(Debug, Clone)]
pub struct TetPolyBasis {
    pub order: usize,
    pub monomials: Vec<[usize; 3]>,
    pub coeffs: DMatrix<f64>,
}

impl TetPolyBasis {
    pub fn new(order: usize) -> Self {
        let monomials = tet_monomials(order);
        let n = monomials.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            let (m, l) = (monomials[i], monomials[j]);
            tet_monomial_integral(m[0] + l[0], m[1] + l[1], m[2] + l[2])
        });
        Self {
            order,
            coeffs: orthonormal_from_gram(&gram),
            monomials,
        }
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn eval(&self, i: usize, p: &Vector3<f64>) -> f64 {
        let mut acc = 0.0;
        for (j, m) in self.monomials.iter().enumerate() {
            acc += self.coeffs[(i, j)] * powi(p.x, m[0]) * powi(p.y, m[1]) * powi(p.z, m[2]);
        }
        acc
    }

    pub fn grad(&self, i: usize, p: &Vector3<f64>) -> Vector3<f64> {
        let mut g = Vector3::zeros();
        for (j, m) in self.monomials.iter().enumerate() {
            let c = self.coeffs[(i, j)];
            if c == 0.0 {
                continue;
            }
            if m[0] > 0 {
                g.x += c * m[0] as f64 * powi(p.x, m[0] - 1) * powi(p.y, m[1]) * powi(p.z, m[2]);
            }
            if m[1] > 0 {
                g.y += c * m[1] as f64 * powi(p.x, m[0]) * powi(p.y, m[1] - 1) * powi(p.z, m[2]);
            }
            if m[2] > 0 {
                g.z += c * m[2] as f64 * powi(p.x, m[0]) * powi(p.y, m[1]) * powi(p.z, m[2] - 1);
            }
        }
        g
    }
}

/// Orthonormal basis of P^k on the unit triangle.
#[derive(Debug, Clone)]
pub struct TriPolyBasis {
    pub order: usize,
    pub monomials: Vec<[usize; 2]>,
    pub coeffs: DMatrix<f64>,
}

impl TriPolyBasis {
    pub fn new(order: usize) -> Self {
        let monomials = tri_monomials(order);
        let n = monomials.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            let (m, l) = (monomials[i], monomials[j]);
            tri_monomial_integral(m[0] + l[0], m[1] + l[1])
        });
        Self {
            order,
            coeffs: orthonormal_from_gram(&gram),
            monomials,
        }
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn eval(&self, i: usize, p: &Vector2<f64>) -> f64 {
        let mut acc = 0.0;
        for (j, m) in self.monomials.iter().enumerate() {
            acc += self.coeffs[(i, j)] * powi(p.x, m[0]) * powi(p.y, m[1]);
        }
        acc
    }
}

/// Orthonormal (shifted Legendre) basis on [0, 1], degrees 0..=order.
#[derive(Debug, Clone)]
pub struct IntervalPolyBasis {
    /// coeffs[i][j]: weight of s^j in basis polynomial i
    pub coeffs: Vec<Vec<f64>>,
}

impl IntervalPolyBasis {
    pub fn new(order: usize) -> Self {
        let n = order + 1;
        let gram = DMatrix::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64);
        let c = orthonormal_from_gram(&gram);
        let coeffs = (0..n).map(|i| (0..n).map(|j| c[(i, j)]).collect()).collect();
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, i: usize, s: f64) -> f64 {
        let mut acc = 0.0;
        let mut p = 1.0;
        for &c in &self.coeffs[i] {
            acc += c * p;
            p *= s;
        }
        acc
    }
}

/// Cholesky-based orthonormalization: returns C with C G Cᵀ = I, rows being
/// the orthonormal basis in terms of the original one.
fn orthonormal_from_gram(gram: &DMatrix<f64>) -> DMatrix<f64> {
    let chol = gram
        .clone()
        .cholesky()
        .expect("polynomial Gram matrix must be SPD");
    chol.l()
        .solve_lower_triangular(&DMatrix::identity(gram.nrows(), gram.ncols()))
        .expect("triangular solve")
}

#[inline]
pub fn powi(x: f64, n: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dimensions() {
        assert_eq!(dim_p3(1), 4);
        assert_eq!(dim_p3(2), 10);
        assert_eq!(dim_p3(3), 20);
        assert_eq!(dim_p2(2), 6);
        assert_eq!(tet_monomials(2).len(), 10);
    }

    #[test]
    fn monomial_integrals() {
        assert_abs_diff_eq!(tet_monomial_integral(0, 0, 0), 1.0 / 6.0, epsilon = 1e-16);
        assert_abs_diff_eq!(tet_monomial_integral(1, 0, 0), 1.0 / 24.0, epsilon = 1e-16);
        assert_abs_diff_eq!(tet_monomial_integral(1, 1, 0), 1.0 / 120.0, epsilon = 1e-17);
        assert_abs_diff_eq!(tri_monomial_integral(0, 0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(tri_monomial_integral(1, 0), 1.0 / 6.0, epsilon = 1e-16);
        assert_abs_diff_eq!(tri_monomial_integral(2, 0), 1.0 / 12.0, epsilon = 1e-16);
    }

    #[test]
    fn tet_basis_orthonormal() {
        let basis = TetPolyBasis::new(2);
        let n = basis.len();
        // exact Gram of the orthonormal basis via monomial integrals
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for (a, ma) in basis.monomials.iter().enumerate() {
                    for (b, mb) in basis.monomials.iter().enumerate() {
                        acc += basis.coeffs[(i, a)]
                            * basis.coeffs[(j, b)]
                            * tet_monomial_integral(ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]);
                    }
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(acc, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn interval_basis_is_shifted_legendre() {
        let basis = IntervalPolyBasis::new(2);
        // degree 1: sqrt(3)(2s-1)
        assert_abs_diff_eq!(basis.eval(1, 1.0), 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(basis.eval(1, 0.5), 0.0, epsilon = 1e-12);
        // degree 2: sqrt(5)(6s^2-6s+1)
        assert_abs_diff_eq!(basis.eval(2, 0.0), 5f64.sqrt(), epsilon = 1e-12);
    }
}
