//! Independent quadrature and Whitney-function oracles shared by the
//! integration tests.
#![allow(dead_code)]

pub mod precond;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

pub type P = [f64; 3];

/// Gauss–Legendre nodes and weights on [0, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out
}

/// Collapsed-coordinate rule on the reference tetrahedron: barycentric points
/// and weights summing to 1.
pub fn tet_rule(n: usize) -> Vec<([f64; 4], f64)> {
    let g = gauss_legendre(n);
    let mut out = Vec::new();
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            for &(w, ww) in &g {
                let x = u;
                let y = v * (1.0 - u);
                let z = w * (1.0 - u) * (1.0 - v);
                let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                out.push(([1.0 - x - y - z, x, y, z], 6.0 * wu * wv * ww * jac));
            }
        }
    }
    out
}

/// Collapsed rule on the reference triangle; weights sum to 1.
pub fn tri_rule(n: usize) -> Vec<([f64; 3], f64)> {
    let g = gauss_legendre(n);
    let mut out = Vec::new();
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let x = u;
            let y = v * (1.0 - u);
            out.push(([1.0 - x - y, x, y], 2.0 * wu * wv * (1.0 - u)));
        }
    }
    out
}

pub fn volume(p: &[P; 4]) -> f64 {
    let m = Matrix3::from_fn(|i, j| p[j + 1][i] - p[0][i]);
    m.determinant() / 6.0
}

/// Barycentric coordinates of `x` in the tetrahedron `p` from a 4×4 solve.
pub fn barycentric(p: &[P; 4], x: P) -> [f64; 4] {
    let m = Matrix4::from_fn(|i, j| if i == 0 { 1.0 } else { p[j][i - 1] });
    let rhs = Vector4::new(1.0, x[0], x[1], x[2]);
    let l = m.lu().solve(&rhs).expect("nondegenerate tetrahedron");
    [l[0], l[1], l[2], l[3]]
}

/// Gradients of the barycentric coordinates by finite differencing the exact
/// affine map (differences of a linear function are exact).
pub fn bary_gradients(p: &[P; 4]) -> [Vector3<f64>; 4] {
    let c: P = std::array::from_fn(|d| p.iter().map(|q| q[d]).sum::<f64>() / 4.0);
    let base = barycentric(p, c);
    let mut g = [Vector3::zeros(); 4];
    for d in 0..3 {
        let mut x = c;
        x[d] += 1.0;
        let l = barycentric(p, x);
        for i in 0..4 {
            g[i][d] = l[i] - base[i];
        }
    }
    g
}

pub const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub fn whitney(g: &[Vector3<f64>; 4], lam: &[f64; 4], a: usize, b: usize) -> Vector3<f64> {
    g[b] * lam[a] - g[a] * lam[b]
}

/// Curl of the affine field `w` recovered from its values at the vertices.
pub fn curl_from_vertices(p: &[P; 4], a: usize, b: usize) -> Vector3<f64> {
    let g = bary_gradients(p);
    let vals: Vec<Vector3<f64>> = (0..4)
        .map(|v| {
            let mut lam = [0.0; 4];
            lam[v] = 1.0;
            whitney(&g, &lam, a, b)
        })
        .collect();
    let e = Matrix3::from_fn(|i, j| p[j + 1][i] - p[0][i]);
    let dw = Matrix3::from_fn(|i, j| vals[j + 1][i] - vals[0][i]);
    let jac = dw * e.try_inverse().expect("nondegenerate");
    Vector3::new(jac[(2, 1)] - jac[(1, 2)], jac[(0, 2)] - jac[(2, 0)], jac[(1, 0)] - jac[(0, 1)])
}

/// Element curl-curl and mass matrices from quadrature.
pub fn element_oracle(p: &[P; 4], order: usize) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let vol = volume(p);
    let g = bary_gradients(p);
    let curls: Vec<Vector3<f64>> = EDGES.iter().map(|&(a, b)| curl_from_vertices(p, a, b)).collect();
    let mut s = [[0.0; 6]; 6];
    let mut m = [[0.0; 6]; 6];
    for (lam, w) in tet_rule(order) {
        let ws: Vec<Vector3<f64>> = EDGES.iter().map(|&(a, b)| whitney(&g, &lam, a, b)).collect();
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] += w * vol * ws[i].dot(&ws[j]);
                s[i][j] += w * vol * curls[i].dot(&curls[j]);
            }
        }
    }
    (s, m)
}
