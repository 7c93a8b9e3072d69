//! Whitney (lowest-order Nédélec) element integrals.

use crate::error::{Error, Result};
use crate::mesh::{cross, dot, signed_volume, sub, Point, LOCAL_EDGES};

/// Gradients of the four barycentric coordinates and the volume of a tetrahedron.
pub fn barycentric_gradients(p: &[Point; 4]) -> Result<([Point; 4], f64)> {
    let vol = signed_volume(p);
    if vol <= 0.0 {
        return Err(Error::DegenerateElement { tet: usize::MAX, volume: vol });
    }
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let e3 = sub(p[3], p[0]);
    let det = 6.0 * vol;
    // rows of the inverse Jacobian
    let g1 = cross(e2, e3).map(|v| v / det);
    let g2 = cross(e3, e1).map(|v| v / det);
    let g3 = cross(e1, e2).map(|v| v / det);
    let g0 = [-(g1[0] + g2[0] + g3[0]), -(g1[1] + g2[1] + g3[1]), -(g1[2] + g2[2] + g3[2])];
    Ok(([g0, g1, g2, g3], vol))
}

/// Curl-curl and mass matrices of the six local Whitney functions
/// `w_ab = λ_a ∇λ_b − λ_b ∇λ_a`, in `LOCAL_EDGES` order.
pub fn element_matrices(p: &[Point; 4]) -> Result<([[f64; 6]; 6], [[f64; 6]; 6])> {
    let (g, vol) = barycentric_gradients(p)?;
    let mut gg = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            gg[i][j] = dot(g[i], g[j]);
        }
    }
    // ∫ λ_i λ_j = |T| (1 + δ_ij) / 20
    let ll = |i: usize, j: usize| if i == j { vol / 10.0 } else { vol / 20.0 };
    let curls: Vec<Point> = LOCAL_EDGES.iter().map(|&(a, b)| cross(g[a], g[b])).collect();

    let mut s = [[0.0; 6]; 6];
    let mut m = [[0.0; 6]; 6];
    for (e, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
        for (f, &(c, d)) in LOCAL_EDGES.iter().enumerate().skip(e) {
            s[e][f] = 4.0 * vol * dot(curls[e], curls[f]);
            m[e][f] = ll(a, c) * gg[b][d] - ll(a, d) * gg[b][c] - ll(b, c) * gg[a][d] + ll(b, d) * gg[a][c];
            s[f][e] = s[e][f];
            m[f][e] = m[e][f];
        }
    }
    Ok((s, m))
}

/// Value of the local Whitney function `w_ab` at barycentric point `lam`.
pub fn whitney_value(g: &[Point; 4], a: usize, b: usize, lam: &[f64; 4]) -> Point {
    let mut w = [0.0; 3];
    for d in 0..3 {
        w[d] = lam[a] * g[b][d] - lam[b] * g[a][d];
    }
    w
}

/// Symmetric 4-point rule of degree 2 on a tetrahedron: barycentric points and
/// weights relative to the volume.
pub fn tet_rule_degree2() -> [([f64; 4], f64); 4] {
    let a = (5.0 + 3.0 * 5f64.sqrt()) / 20.0;
    let b = (5.0 - 5f64.sqrt()) / 20.0;
    [
        ([a, b, b, b], 0.25),
        ([b, a, b, b], 0.25),
        ([b, b, a, b], 0.25),
        ([b, b, b, a], 0.25),
    ]
}

/// Tangential-trace mass matrix of the three Whitney functions of a triangle,
/// in the edge order `(0,1), (0,2), (1,2)`, computed with the edge-midpoint rule
/// (exact for the quadratic integrand).
pub fn face_mass(q: &[Point; 3]) -> [[f64; 3]; 3] {
    let e1 = sub(q[1], q[0]);
    let e2 = sub(q[2], q[0]);
    let (g11, g12, g22) = (dot(e1, e1), dot(e1, e2), dot(e2, e2));
    let det = g11 * g22 - g12 * g12;
    let area = 0.5 * det.sqrt();
    let (i11, i12, i22) = (g22 / det, -g12 / det, g11 / det);
    let grad1: Point = std::array::from_fn(|d| i11 * e1[d] + i12 * e2[d]);
    let grad2: Point = std::array::from_fn(|d| i12 * e1[d] + i22 * e2[d]);
    let grad0: Point = std::array::from_fn(|d| -grad1[d] - grad2[d]);
    let grads = [grad0, grad1, grad2];
    const FACE_EDGES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let midpoints = [[0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]];

    let mut mb = [[0.0; 3]; 3];
    for lam in &midpoints {
        let w: Vec<Point> = FACE_EDGES
            .iter()
            .map(|&(a, b)| std::array::from_fn(|d| lam[a] * grads[b][d] - lam[b] * grads[a][d]))
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                mb[i][j] += area / 3.0 * dot(w[i], w[j]);
            }
        }
    }
    mb
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: [Point; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    #[test]
    fn reference_tet_first_edge() {
        let (s, m) = element_matrices(&REF).unwrap();
        assert!((s[0][0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((m[0][0] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn matrices_are_symmetric() {
        let p = [[0.1, 0.0, 0.2], [1.0, 0.3, 0.0], [0.2, 1.1, 0.1], [0.3, 0.2, 0.9]];
        let (s, m) = element_matrices(&p).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((s[i][j] - s[j][i]).abs() < 1e-14);
                assert!((m[i][j] - m[j][i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn curl_annihilates_gradients() {
        let p = [[0.1, 0.0, 0.2], [1.0, 0.3, 0.0], [0.2, 1.1, 0.1], [0.3, 0.2, 0.9]];
        let (s, _) = element_matrices(&p).unwrap();
        // coefficients of grad(λ_0): edge (a,b) carries λ_0(b) − λ_0(a)
        let phi = [1.0, 0.0, 0.0, 0.0];
        let c: Vec<f64> = LOCAL_EDGES.iter().map(|&(a, b)| phi[b] - phi[a]).collect();
        for row in &s {
            let v: f64 = row.iter().zip(&c).map(|(x, y)| x * y).sum();
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn inverted_tet_rejected() {
        let mut p = REF;
        p.swap(1, 2);
        assert!(element_matrices(&p).is_err());
    }
}
