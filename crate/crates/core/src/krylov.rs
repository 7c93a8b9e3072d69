//! Full (non-restarted) GMRES in a possibly weighted inner product.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LinearOperator, C64};

/// Seed used when a random initial guess is requested without one.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Side {
    Left,
    #[default]
    Right,
}

#[derive(Clone, Debug, Default)]
pub enum Weight {
    #[default]
    Identity,
    /// Real SPD matrix `D`; inner product `⟨x, y⟩_D = y* D x`.
    Matrix(std::sync::Arc<CsrMatrix<f64>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialGuess {
    Zero,
    /// Entries i.i.d. uniform on the unit square `[0,1) + i[0,1)`.
    Random { seed: u64 },
}

#[derive(Clone, Debug)]
pub struct KrylovConfig {
    pub tol: f64,
    pub maxit: usize,
    pub weight: Weight,
    pub side: Side,
    pub initial_guess: InitialGuess,
    /// Measure `max |⟨v_i, v_j⟩ − δ_ij|` of the Arnoldi basis.
    pub check_orthogonality: bool,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            maxit: 200,
            weight: Weight::Identity,
            side: Side::Right,
            initial_guess: InitialGuess::Random { seed: DEFAULT_SEED },
            check_orthogonality: true,
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidArgument("maxit must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct KrylovReport {
    pub solution: Vec<C64>,
    /// `‖r_m‖ / ‖r_0‖` in the minimized norm, starting with `m = 0`.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Recomputed `‖b − A x‖ / ‖b − A x₀‖` (right) or its preconditioned
    /// counterpart (left), in the weighted norm.
    pub final_relative_residual: f64,
    pub max_orthogonality_loss: f64,
    pub warnings: Vec<String>,
    pub elapsed: Duration,
    pub side: Side,
    pub weighted: bool,
    pub seed: Option<u64>,
}

struct InnerProduct<'a> {
    weight: Option<&'a CsrMatrix<f64>>,
}

impl InnerProduct<'_> {
    /// `D x` (a copy for the identity weight).
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        match self.weight {
            None => Ok(x.to_vec()),
            Some(d) => d.mul_vec(x),
        }
    }

    fn norm(&self, x: &[C64]) -> Result<f64> {
        let dx = self.apply(x)?;
        let q = dot(&dx, x).re;
        if q < 0.0 {
            return Err(Error::NotPositiveDefinite(format!("negative weighted norm² {q}")));
        }
        Ok(q.sqrt())
    }
}

/// `Σ conj(a_i) b_i`.
fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

pub fn initial_vector(n: usize, guess: InitialGuess) -> Vec<C64> {
    match guess {
        InitialGuess::Zero => vec![C64::new(0.0, 0.0); n],
        InitialGuess::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| C64::new(rng.gen::<f64>(), rng.gen::<f64>())).collect()
        }
    }
}

/// Stable complex Givens rotation zeroing `b` in `(a, b)`: returns `(c, s, r)`
/// with `c` real, `c·a + s·b = r`, `−conj(s)·a + c·b = 0`.
fn givens(a: C64, b: C64) -> (f64, C64, C64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, C64::new(0.0, 0.0), a);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb, C64::new(nb, 0.0));
    }
    let t = na.hypot(nb);
    let phase = a / na;
    let c = na / t;
    let s = phase * b.conj() / t;
    (c, s, phase * t)
}

/// Solves `A x = b`, optionally preconditioned by `B⁻¹`.
pub fn gmres(
    a: &dyn LinearOperator,
    b: &[C64],
    precond: Option<&dyn LinearOperator>,
    config: &KrylovConfig,
) -> Result<KrylovReport> {
    config.validate()?;
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { op: "gmres rhs", expected: n, got: b.len() });
    }
    if let Some(p) = precond {
        if p.dim() != n {
            return Err(Error::DimensionMismatch { op: "gmres preconditioner", expected: n, got: p.dim() });
        }
    }
    let ip = InnerProduct {
        weight: match &config.weight {
            Weight::Identity => None,
            Weight::Matrix(d) => Some(d.as_ref()),
        },
    };
    let start = Instant::now();
    let precondition = |v: &[C64]| -> Result<Vec<C64>> {
        match precond {
            Some(p) => p.apply(v),
            None => Ok(v.to_vec()),
        }
    };
    let operator = |v: &[C64]| -> Result<Vec<C64>> {
        match config.side {
            Side::Right => a.apply(&precondition(v)?),
            Side::Left => precondition(&a.apply(v)?),
        }
    };
    let residual = |x: &[C64]| -> Result<Vec<C64>> {
        let ax = a.apply(x)?;
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, yi)| bi - yi).collect();
        match config.side {
            Side::Right => Ok(r),
            Side::Left => precondition(&r),
        }
    };

    let x0 = initial_vector(n, config.initial_guess);
    let seed = match config.initial_guess {
        InitialGuess::Random { seed } => Some(seed),
        InitialGuess::Zero => None,
    };
    let r0 = residual(&x0)?;
    let beta = ip.norm(&r0)?;
    let mut report = KrylovReport {
        solution: x0.clone(),
        residual_history: vec![1.0],
        iterations: 0,
        converged: false,
        final_relative_residual: 1.0,
        max_orthogonality_loss: 0.0,
        warnings: Vec::new(),
        elapsed: Duration::ZERO,
        side: config.side,
        weighted: ip.weight.is_some(),
        seed,
    };
    if beta == 0.0 {
        report.converged = true;
        report.final_relative_residual = 0.0;
        report.residual_history[0] = 0.0;
        report.elapsed = start.elapsed();
        return Ok(report);
    }

    let mut basis: Vec<Vec<C64>> = vec![r0.iter().map(|v| v / beta).collect()];
    let mut dbasis: Vec<Vec<C64>> = vec![ip.apply(&basis[0])?];
    // columns of the rotated Hessenberg matrix (upper triangular part)
    let mut r_cols: Vec<Vec<C64>> = Vec::new();
    let mut rotations: Vec<(f64, C64)> = Vec::new();
    let mut g = vec![C64::new(beta, 0.0)];
    let mut orth_loss = 0.0f64;

    for m in 0..config.maxit {
        let mut w = operator(&basis[m])?;
        let mut h = vec![C64::new(0.0, 0.0); m + 2];
        for _pass in 0..2 {
            for i in 0..=m {
                let hij = dot(&dbasis[i], &w);
                h[i] += hij;
                w.iter_mut().zip(&basis[i]).for_each(|(wk, vk)| *wk -= hij * vk);
            }
        }
        let hnext = ip.norm(&w)?;
        h[m + 1] = C64::new(hnext, 0.0);

        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (x, y) = (h[i], h[i + 1]);
            h[i] = x * c + s * y;
            h[i + 1] = -s.conj() * x + y * c;
        }
        let (c, s, rr) = givens(h[m], h[m + 1]);
        h[m] = rr;
        h.truncate(m + 1);
        rotations.push((c, s));
        let gm = g[m];
        g[m] = gm * c;
        g.push(-s.conj() * gm);
        r_cols.push(h);

        let rel = g[m + 1].norm() / beta;
        report.residual_history.push(rel);
        report.iterations = m + 1;
        let breakdown = hnext <= 1e-14 * beta.max(f64::MIN_POSITIVE) || rr.norm() == 0.0;
        if rel <= config.tol || breakdown || m + 1 == config.maxit {
            break;
        }
        let vnext: Vec<C64> = w.iter().map(|v| v / hnext).collect();
        let dnext = ip.apply(&vnext)?;
        if config.check_orthogonality {
            for dv in &dbasis {
                orth_loss = orth_loss.max(dot(dv, &vnext).norm());
            }
            orth_loss = orth_loss.max((dot(&dnext, &vnext).re - 1.0).abs());
        }
        basis.push(vnext);
        dbasis.push(dnext);
    }

    let k = report.iterations;
    let mut y = vec![C64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in i + 1..k {
            acc -= r_cols[j][i] * y[j];
        }
        if r_cols[i][i].norm() == 0.0 {
            return Err(Error::Singular { context: "gmres least squares".into(), pivot: i, magnitude: 0.0 });
        }
        y[i] = acc / r_cols[i][i];
    }
    let mut update = vec![C64::new(0.0, 0.0); n];
    for (yj, vj) in y.iter().zip(&basis) {
        update.iter_mut().zip(vj).for_each(|(u, v)| *u += yj * v);
    }
    if config.side == Side::Right {
        update = precondition(&update)?;
    }
    let x: Vec<C64> = x0.iter().zip(&update).map(|(a, b)| a + b).collect();
    let rfinal = residual(&x)?;
    report.final_relative_residual = ip.norm(&rfinal)? / beta;
    report.converged = *report.residual_history.last().expect("nonempty history") <= config.tol;
    report.max_orthogonality_loss = orth_loss;
    if orth_loss > 1e-8 {
        report.warnings.push(format!("Arnoldi basis lost orthogonality: {orth_loss:.3e}"));
    }
    report.solution = x;
    report.elapsed = start.elapsed();
    Ok(report)
}
