//! Integration rules on the reference tetrahedron and the unit triangle.
//!
//! Rules are built by the conical-product (Duffy collapse) construction from
//! 1D Gauss-Legendre nodes, so any requested exactness degree up to the
//! supported cap is available without tabulated point sets. The collapse maps
//! the unit cube/square onto the simplex; the Jacobian raises the required 1D
//! degrees by the amounts accounted for below.

use crate::error::{Error, Result};
use nalgebra::{Vector2, Vector3};

/// Highest exactness degree any caller needs (2k+4 with k ≤ 2).
pub const MAX_DEGREE: usize = 8;

/// Quadrature rule on a reference simplex.
///
/// Points are stored in barycentric coordinates; weights sum to the reference
/// measure (1/6 for the tetrahedron, 1/2 for the triangle).
#[derive(Debug, Clone)]
pub struct QuadRule {
    /// barycentric coordinates (λ1, λ2, λ3, λ4); triangles use λ4 = 0
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cartesian reference coordinates (x̂, ŷ, ẑ) = (λ1, λ2, λ3).
    pub fn point_xyz(&self, q: usize) -> Vector3<f64> {
        let p = self.points[q];
        Vector3::new(p[0], p[1], p[2])
    }

    /// Triangle parameter coordinates (u, v) = (λ1, λ2).
    pub fn point_uv(&self, q: usize) -> Vector2<f64> {
        let p = self.points[q];
        Vector2::new(p[0], p[1])
    }

    /// Integrate a function given in barycentric coordinates.
    pub fn integrate(&self, f: impl Fn(&[f64; 4]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on [0, 1]; exact for degree 2n-1.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // initial guess on [-1, 1], then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x); // map and flip so nodes come out increasing
        weights[i] = 0.5 * w;
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Rule on the reference tetrahedron, exact for polynomials of `degree`.
pub fn tet_rule(degree: usize) -> Result<QuadRule> {
    if degree > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "tet rule degree {degree} exceeds supported maximum {MAX_DEGREE}"
        )));
    }
    // x = a, y = b(1-a), z = c(1-a)(1-b); Jacobian (1-a)^2 (1-b).
    // A monomial of total degree d pulls back to degree d+2 in a, d+1 in b, d in c.
    let na = (degree + 3).div_ceil(2);
    let nb = (degree + 2).div_ceil(2);
    let nc = (degree + 1).div_ceil(2);
    let (xa, wa) = gauss_legendre_01(na);
    let (xb, wb) = gauss_legendre_01(nb);
    let (xc, wc) = gauss_legendre_01(nc);
    let mut points = Vec::with_capacity(na * nb * nc);
    let mut weights = Vec::with_capacity(na * nb * nc);
    for (ia, &a) in xa.iter().enumerate() {
        for (ib, &b) in xb.iter().enumerate() {
            for (ic, &c) in xc.iter().enumerate() {
                let x = a;
                let y = b * (1.0 - a);
                let z = c * (1.0 - a) * (1.0 - b);
                let jac = (1.0 - a) * (1.0 - a) * (1.0 - b);
                points.push([x, y, z, 1.0 - x - y - z]);
                weights.push(wa[ia] * wb[ib] * wc[ic] * jac);
            }
        }
    }
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}

/// Rule on the unit triangle, exact for polynomials of `degree`.
pub fn tri_rule(degree: usize) -> Result<QuadRule> {
    if degree > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "triangle rule degree {degree} exceeds supported maximum {MAX_DEGREE}"
        )));
    }
    // u = a, v = b(1-a); Jacobian (1-a).
    let na = (degree + 2).div_ceil(2);
    let nb = (degree + 1).div_ceil(2);
    let (xa, wa) = gauss_legendre_01(na);
    let (xb, wb) = gauss_legendre_01(nb);
    let mut points = Vec::with_capacity(na * nb);
    let mut weights = Vec::with_capacity(na * nb);
    for (ia, &a) in xa.iter().enumerate() {
        for (ib, &b) in xb.iter().enumerate() {
            let u = a;
            let v = b * (1.0 - a);
            points.push([u, v, 1.0 - u - v, 0.0]);
            weights.push(wa[ia] * wb[ib] * (1.0 - a));
        }
    }
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}

/// Gauss rule on [0, 1] wrapped for edge moments, exact for `degree`.
pub fn edge_rule(degree: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre_01((degree + 1).div_ceil(2).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{tet_monomial_integral, tri_monomial_integral};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_nodes_symmetric_and_exact() {
        let (x, w) = gauss_legendre_01(4);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[0] + x[3], 1.0, epsilon = 1e-14);
        // degree 7 monomial
        let val: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert_abs_diff_eq!(val, 0.125, epsilon = 1e-14);
    }

    #[test]
    fn tet_rule_reference_measure() {
        for deg in 0..=MAX_DEGREE {
            let rule = tet_rule(deg).unwrap();
            assert_abs_diff_eq!(rule.weights.iter().sum::<f64>(), 1.0 / 6.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn tri_rule_reference_measure() {
        for deg in 0..=MAX_DEGREE {
            let rule = tri_rule(deg).unwrap();
            assert_abs_diff_eq!(rule.weights.iter().sum::<f64>(), 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn tet_examples() {
        let rule = tet_rule(2).unwrap();
        assert_abs_diff_eq!(rule.integrate(|_| 1.0), 1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.integrate(|p| p[0]), 1.0 / 24.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rule.integrate(|p| p[0] * p[1]), 1.0 / 120.0, epsilon = 1e-15);
    }

    #[test]
    fn tri_examples() {
        let rule = tri_rule(2).unwrap();
        assert_abs_diff_eq!(rule.integrate(|_| 1.0), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.integrate(|p| p[0]), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rule.integrate(|p| p[0] * p[0]), 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn degree_cap_rejected() {
        assert!(tet_rule(MAX_DEGREE + 1).is_err());
        assert!(tri_rule(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn monomials_exact_up_to_degree() {
        for deg in 0..=MAX_DEGREE {
            let rule = tet_rule(deg).unwrap();
            for a in 0..=deg {
                for b in 0..=deg - a {
                    for c in 0..=deg - a - b {
                        let got = rule.integrate(|p| {
                            p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32)
                        });
                        let want = tet_monomial_integral(a, b, c);
                        assert!(
                            (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                            "deg {deg} monomial ({a},{b},{c}): {got} vs {want}"
                        );
                    }
                }
            }
            let rule = tri_rule(deg).unwrap();
            for a in 0..=deg {
                for b in 0..=deg - a {
                    let got = rule.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let want = tri_monomial_integral(a, b);
                    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
                }
            }
        }
    }
}
