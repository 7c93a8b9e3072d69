//! Theory-validation toolkit: the shifted wavenumber `z`, the coercivity
//! identity, weighted fields of values, Elman-type GMRES bounds, the
//! projection-operator identity and the absorption error sweep.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomp::Decomposition;
use crate::error::{Error, Result};
use crate::fem::{assemble, BoundaryCondition, Coefficients, EdgeSpace};
use crate::linalg::{weighted_dot, weighted_norm, CsrMatrix, DenseLu, DenseMatrix, LinearOperator, SparseComplexMatrix, C64};

/// Default row cap of the dense field-of-values and projection computations.
pub const DEFAULT_FOV_CAP: usize = 2000;

/// `z = √(k² + iξ)` (branch cut on the positive real axis) and `Θ = −z̄/|z|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZTheta {
    pub z: C64,
    pub theta: C64,
}

pub fn z_theta(k: f64, xi: f64) -> Result<ZTheta> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
    }
    // arg(k² + i|ξ|) ∈ [0, π/2], halved; ξ < 0 follows from z(k, −ξ) = −z̄(k, ξ)
    let w = C64::new(k * k, xi.abs());
    let upper = C64::from_polar(w.norm().sqrt(), w.arg() / 2.0);
    let z = if xi < 0.0 { -upper.conj() } else { upper };
    let theta = -z.conj() / z.norm();
    Ok(ZTheta { z, theta })
}

/// `(|z|/k, (Im z/|z|) / (|ξ|/k²))`, the two ratios bounded by the absorption
/// estimates.
pub fn absorption_ratios(k: f64, xi: f64) -> Result<(f64, f64)> {
    let z = z_theta(k, xi)?.z;
    Ok((z.norm() / k, (z.im / z.norm()) / (xi.abs() / (k * k))))
}

/// Random complex probes with entries uniform in `[-1,1] + i[-1,1]`.
pub fn random_probes(n: usize, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect()
}

fn quad<T>(m: &CsrMatrix<T>, v: &[C64]) -> Result<C64>
where
    T: crate::linalg::Scalar,
    C64: std::ops::Mul<T, Output = C64>,
{
    let mv: Vec<C64> = m.mul_vec(v)?;
    Ok(crate::linalg::inner(&mv, v))
}

/// Largest relative violation over `probes` of
/// `Im(Θ v*Av) = (Im z/|z|)(v*Sv + |z|² v*Mv)` for the homogeneous PEC matrix `A`.
pub fn coercivity_check(
    a: &SparseComplexMatrix,
    s: &CsrMatrix<f64>,
    m: &CsrMatrix<f64>,
    k: f64,
    xi: f64,
    probes: &[Vec<C64>],
) -> Result<f64> {
    let zt = z_theta(k, xi)?;
    let (z, zabs) = (zt.z, zt.z.norm());
    let mut worst = 0.0f64;
    for v in probes {
        let lhs = (zt.theta * quad(a, v)?).im;
        let rhs = z.im / zabs * (quad(s, v)?.re + zabs * zabs * quad(m, v)?.re);
        let dev = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Sampled boundary of the weighted field of values `W_D(C)`.
#[derive(Clone, Debug)]
pub struct FovResult {
    /// One Rayleigh quotient per angle, in angle order.
    pub boundary_points: Vec<C64>,
    /// `max_{w ∈ W} Re(e^{iθ} w)` per angle `θ_j = 2πj / n_angles`.
    pub support: Vec<f64>,
    /// Distance from 0 to the convex hull of the boundary points.
    pub dist_to_origin: f64,
    /// `max(0, max_θ −support(θ))`, a lower bound on the true distance.
    pub dist_lower_bound: f64,
    pub norm_d: f64,
    pub n_angles: usize,
    /// Largest relative gap between a boundary point and the Rayleigh quotient
    /// recomputed from `C` and `D` directly.
    pub rayleigh_mismatch: f64,
}

fn to_na(c: &DenseMatrix<C64>) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)])
}

/// Matrices up to this size use a full Hermitian eigensolver per angle; larger
/// ones use Lanczos and fall back to the full solver if it stalls.
pub const DENSE_EIG_LIMIT: usize = 400;

type CVec = DVector<Complex<f64>>;

/// Largest eigenpair of a Hermitian operator by Lanczos with full
/// reorthogonalization. `None` if not converged within `max_steps`.
fn lanczos_max(apply: &dyn Fn(&CVec) -> CVec, n: usize, max_steps: usize, tol: f64) -> Option<(f64, CVec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut q = CVec::from_fn(n, |_, _| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    q /= Complex::new(q.norm(), 0.0);
    let mut basis: Vec<CVec> = Vec::new();
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let steps = max_steps.min(n);
    for m in 0..steps {
        let mut w = apply(&q);
        let a = q.dotc(&w).re;
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dotc(&w);
                w.axpy(-c, v, Complex::new(1.0, 0.0));
            }
        }
        let b = w.norm();
        let size = m + 1;
        let check = size == steps || b == 0.0 || size % 10 == 0;
        if check {
            let t = DMatrix::<f64>::from_fn(size, size, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let eig = t.symmetric_eigen();
            let (imax, &theta) = eig.eigenvalues.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1))?;
            let scale = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
            let s = eig.eigenvectors.column(imax);
            let residual = b * s[size - 1].abs();
            if residual <= tol * scale || b <= f64::EPSILON * scale || size == n {
                let mut y = CVec::zeros(n);
                for (v, &c) in basis.iter().zip(s.iter()) {
                    y.axpy(Complex::new(c, 0.0), v, Complex::new(1.0, 0.0));
                }
                let ny = y.norm();
                return Some((theta, y / Complex::new(ny, 0.0)));
            }
        }
        if b == 0.0 {
            return None;
        }
        beta.push(b);
        q = w / Complex::new(b, 0.0);
    }
    None
}

fn dense_max(h: &DMatrix<Complex<f64>>) -> (f64, CVec) {
    let eig = h.clone().symmetric_eigen();
    let (imax, &lmax) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    (lmax, eig.eigenvectors.column(imax).into_owned())
}

/// Field of values of `C` in `⟨x, y⟩_D = y* D x` from an angle sweep of
/// Hermitian eigenproblems.
pub fn fov(c: &DenseMatrix<C64>, d: &DenseMatrix<f64>, n_angles: usize, cap: usize) -> Result<FovResult> {
    let n = c.nrows();
    if c.ncols() != n || d.nrows() != n || d.ncols() != n {
        return Err(Error::DimensionMismatch { op: "fov", expected: n, got: d.nrows() });
    }
    if n > cap {
        return Err(Error::SizeCap { what: "field of values".into(), size: n, cap });
    }
    if n_angles < 8 {
        return Err(Error::InvalidArgument(format!("at least 8 angles required, got {n_angles}")));
    }
    let dm = DMatrix::from_fn(n, n, |i, j| d[(i, j)]);
    let chol = dm.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite("fov weight".into()))?;
    let l = chol.l().map(|x| Complex::new(x, 0.0));
    let cm = to_na(c);
    // K = Lᵀ C L⁻ᵀ, so that W_D(C) = W(K)
    let xt = l.solve_lower_triangular(&cm.transpose()).expect("Cholesky factor is nonsingular");
    let k = l.transpose() * xt.transpose();
    let kh = k.adjoint();
    let dmc = dm.map(|x| Complex::new(x, 0.0));
    let rayleigh = |x: &CVec| -> C64 { x.dotc(&(&dmc * (&cm * x))) / x.dotc(&(&dmc * x)) };
    let lanczos_tol = 1e-12;
    let max_steps = 600;

    let mut points = Vec::with_capacity(n_angles);
    let mut support = Vec::with_capacity(n_angles);
    let mut mismatch = 0.0f64;
    for j in 0..n_angles {
        let th = 2.0 * PI * j as f64 / n_angles as f64;
        let e = Complex::from_polar(1.0, th);
        let half = Complex::new(0.5, 0.0);
        let (lmax, y) = if n <= DENSE_EIG_LIMIT {
            dense_max(&((&k * e + &kh * e.conj()) * half))
        } else {
            let op = |v: &CVec| -> CVec { (&k * v * e + &kh * v * e.conj()) * half };
            match lanczos_max(&op, n, max_steps, lanczos_tol) {
                Some(pair) => pair,
                None => dense_max(&((&k * e + &kh * e.conj()) * half)),
            }
        };
        let p = y.dotc(&(&k * &y)) / y.dotc(&y);
        let x = l.transpose().solve_upper_triangular(&y).expect("Cholesky factor is nonsingular");
        let q = rayleigh(&x);
        mismatch = mismatch.max((q - p).norm() / p.norm().max(f64::MIN_POSITIVE));
        points.push(p);
        support.push(lmax);
    }
    let ktk_max = if n <= DENSE_EIG_LIMIT {
        (&kh * &k).symmetric_eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b))
    } else {
        let op = |v: &CVec| -> CVec { &kh * (&k * v) };
        match lanczos_max(&op, n, max_steps, lanczos_tol) {
            Some((lmax, _)) => lmax,
            None => (&kh * &k).symmetric_eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b)),
        }
    };
    let norm_d = ktk_max.max(0.0).sqrt();
    let dist_lower_bound = support.iter().fold(0.0f64, |a, &s| a.max(-s));
    Ok(FovResult {
        dist_to_origin: hull_distance(&points),
        boundary_points: points,
        support,
        dist_lower_bound,
        norm_d,
        n_angles,
        rayleigh_mismatch: mismatch,
    })
}

fn cross(o: C64, a: C64, b: C64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

fn segment_distance(a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return a.norm();
    }
    let t = (-(a.re * ab.re + a.im * ab.im) / len2).clamp(0.0, 1.0);
    (a + ab * t).norm()
}

/// Distance from the origin to the convex hull of `points` (0 if inside).
pub fn hull_distance(points: &[C64]) -> f64 {
    let mut p: Vec<C64> = points.to_vec();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() == 1 {
        return p[0].norm();
    }
    // Andrew's monotone chain, counter-clockwise
    let mut hull: Vec<C64> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &C64>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    let m = hull.len();
    let edges = (0..m).map(|i| (hull[i], hull[(i + 1) % m]));
    if m >= 3 && (0..m).all(|i| cross(hull[i], hull[(i + 1) % m], C64::new(0.0, 0.0)) >= 0.0) {
        return 0.0;
    }
    edges.map(|(a, b)| segment_distance(a, b)).fold(f64::INFINITY, f64::min)
}

/// Elman-type residual bound `(2 + 2/√3)(2 + γ_β) γ_β^m`, `cos β = dist/‖C‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElmanBound {
    pub beta: f64,
    pub gamma_beta: f64,
}

const ELMAN_PREFACTOR: f64 = 2.0 + 2.0 / 1.732_050_807_568_877_2;

impl ElmanBound {
    pub fn bound(&self, m: usize) -> f64 {
        ELMAN_PREFACTOR * (2.0 + self.gamma_beta) * self.gamma_beta.powi(m as i32)
    }

    /// Smallest `m` with `bound(m) ≤ target`, `None` when the bound does not decay.
    pub fn m_for_target(&self, target: f64) -> Option<usize> {
        if !(target > 0.0) || self.gamma_beta >= 1.0 {
            return None;
        }
        if self.gamma_beta == 0.0 {
            return Some(if self.bound(0) <= target { 0 } else { 1 });
        }
        let c = ELMAN_PREFACTOR * (2.0 + self.gamma_beta);
        let estimate = ((target / c).ln() / self.gamma_beta.ln()).ceil().max(0.0);
        if estimate > i32::MAX as f64 / 2.0 {
            return None;
        }
        let mut m = estimate as usize;
        while m > 0 && self.bound(m - 1) <= target {
            m -= 1;
        }
        while self.bound(m) > target {
            m += 1;
        }
        Some(m)
    }
}

pub fn elman(norm_d: f64, dist: f64) -> Result<ElmanBound> {
    if !(dist > 0.0) {
        return Err(Error::FovContainsOrigin);
    }
    if !(norm_d > 0.0) || dist > norm_d * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("need 0 < dist ≤ norm, got dist={dist}, norm={norm_d}")));
    }
    let beta = (dist / norm_d).min(1.0).acos();
    Ok(elman_from_beta(beta))
}

pub fn elman_from_beta(beta: f64) -> ElmanBound {
    let mut gamma_beta = (2.0 * (beta / (4.0 - 2.0 * beta / PI)).sin()).clamp(0.0, 1.0);
    if 1.0 - gamma_beta <= 4.0 * f64::EPSILON {
        gamma_beta = 1.0;
    }
    ElmanBound { beta, gamma_beta }
}

/// Dense `Σ_ℓ R_ℓᵀ (R_ℓ A R_ℓᵀ)⁻¹ R_ℓ + R₀ᵀ (R₀ A R₀ᵀ)⁻¹ R₀` built with
/// independent (nalgebra) inverses.
pub fn dense_two_level_as(a: &SparseComplexMatrix, decomp: &Decomposition, cap: usize) -> Result<DMatrix<Complex<f64>>> {
    let n = a.nrows();
    if n > cap {
        return Err(Error::SizeCap { what: "dense two-level operator".into(), size: n, cap });
    }
    let ad = to_na(&a.to_dense());
    let mut b = DMatrix::<Complex<f64>>::zeros(n, n);
    for (l, dofs) in decomp.subdomain_dofs.iter().enumerate() {
        let minor = DMatrix::from_fn(dofs.len(), dofs.len(), |i, j| ad[(dofs[i], dofs[j])]);
        let inv = minor.try_inverse().ok_or_else(|| Error::Singular {
            context: format!("subdomain {l}"),
            pivot: 0,
            magnitude: 0.0,
        })?;
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                b[(gi, gj)] += inv[(i, j)];
            }
        }
    }
    if let Some(link) = &decomp.coarse {
        let r0 = link.r0.to_dense();
        let r = DMatrix::from_fn(r0.nrows(), n, |i, j| Complex::new(r0[(i, j)], 0.0));
        let a0 = &r * &ad * r.transpose();
        let inv = a0
            .try_inverse()
            .ok_or_else(|| Error::Singular { context: "coarse space".into(), pivot: 0, magnitude: 0.0 })?;
        b += r.transpose() * inv * &r;
    }
    Ok(b)
}

/// Largest relative gap between `⟨V, B⁻¹AV⟩_D` from the preconditioner and
/// from the dense oracle `Σ T_ℓ V`.
pub fn projection_consistency(
    a: &SparseComplexMatrix,
    dk: &CsrMatrix<f64>,
    decomp: &Decomposition,
    precond: &dyn LinearOperator,
    probes: &[Vec<C64>],
    cap: usize,
) -> Result<f64> {
    let b = dense_two_level_as(a, decomp, cap)?;
    let t = b * to_na(&a.to_dense());
    let mut worst = 0.0f64;
    for v in probes {
        let piped = precond.apply(&a.mul_vec(v)?)?;
        let lhs = weighted_dot(dk, v, &piped)?;
        let tv: Vec<C64> = (&t * DVector::from_column_slice(v)).iter().copied().collect();
        let rhs = weighted_dot(dk, v, &tv)?;
        let scale = rhs.norm().max(lhs.norm());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).norm() / scale);
        }
    }
    Ok(worst)
}

/// `(ξ, ‖E − E_ξ‖_{D_k} / ‖E‖_{D_k})` for the impedance problem on an
/// `n`-cell mesh, solved directly.
pub fn relative_error_sweep(k: f64, xi_list: &[f64], n: usize, cap: usize) -> Result<Vec<(f64, f64)>> {
    let space = EdgeSpace::new(std::sync::Arc::new(crate::mesh::Mesh::cube(n)?), BoundaryCondition::Impedance);
    if space.ndofs() > cap {
        return Err(Error::SizeCap { what: "direct solve".into(), size: space.ndofs(), cap });
    }
    let ntets = space.mesh().num_tets();
    let solve = |xi: f64| -> Result<(Vec<C64>, CsrMatrix<f64>)> {
        let sys = assemble(&space, &Coefficients::homogeneous(ntets, k, xi))?;
        let lu = DenseLu::factor(sys.a.to_dense(), &format!("impedance system at xi={xi}"))?;
        Ok((lu.solve(&sys.rhs)?, sys.dk))
    };
    let (e0, dk) = solve(0.0)?;
    let base = weighted_norm(&dk, &e0)?;
    xi_list
        .iter()
        .map(|&xi| {
            if xi == 0.0 {
                return Ok((xi, 0.0));
            }
            let (exi, _) = solve(xi)?;
            let diff: Vec<C64> = e0.iter().zip(&exi).map(|(a, b)| a - b).collect();
            Ok((xi, weighted_norm(&dk, &diff)? / base))
        })
        .collect()
}
