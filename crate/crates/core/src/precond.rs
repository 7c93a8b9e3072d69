//! One- and two-level overlapping Schwarz preconditioners.
//!
//! The one-level part `B₁⁻¹` is one of
//!
//! * AS: `Σ Rᵀ A_ℓ⁻¹ R` with `A_ℓ` the Galerkin minor,
//! * RAS: `Σ Rᵀ D_ℓ A_ℓ⁻¹ R`,
//! * ImpRAS: RAS with local matrices carrying an impedance condition on the
//!   subdomain's internal boundary.
//!
//! With a coarse solve `G = R₀ᵀ A₀⁻¹ R₀` the two-level operators are
//!
//! * additive: `B₁⁻¹ + G`,
//! * hybrid: `(I − G A) B₁⁻¹ (I − A G) + G`,
//! * ADEF1: `B₁⁻¹ (I − A G) + G`.
//!
//! Local and coarse factors are held behind `Arc`s so that several variants can
//! share one setup.

use std::sync::Arc;

use crate::decomp::{global_boundary_faces, internal_boundary_faces, subdomain_edge_dofs, CoarseLink, Decomposition};
use crate::error::{Error, Result};
use crate::fem::{assemble_parts, impedance_sign, BoundaryCondition, Coefficients, EdgeSpace};
use crate::linalg::{DenseLu, LinearOperator, SparseComplexMatrix, C64};

pub use crate::krylov::Side;

/// Default row cap for dense local and coarse factorizations.
pub const DEFAULT_DENSE_CAP: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    As,
    Ras,
    ImpRas,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoarseCorrection {
    Additive,
    Hybrid,
    Adef1,
}

/// Which matrix plays `A` inside the hybrid and deflation corrections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CorrectionMatrix {
    /// The system being solved, `A_{ξ_prob}`.
    #[default]
    Problem,
    /// The matrix the preconditioner was built from, `A_{ξ_prec}`.
    Preconditioner,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreconditionerSpec {
    pub family: Family,
    /// `None` for one-level methods.
    pub coarse: Option<CoarseCorrection>,
    pub xi_prec: f64,
    pub side: Side,
    pub correction_matrix: CorrectionMatrix,
    pub dense_cap: usize,
}

impl PreconditionerSpec {
    pub fn new(family: Family, coarse: Option<CoarseCorrection>, xi_prec: f64) -> Self {
        Self {
            family,
            coarse,
            xi_prec,
            side: Side::Right,
            correction_matrix: CorrectionMatrix::Problem,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }

    /// Short identifier such as `as2`, `hras` or `adef1-impras`.
    pub fn id(&self) -> String {
        let base = match self.family {
            Family::As => "as",
            Family::Ras => "ras",
            Family::ImpRas => "impras",
        };
        match self.coarse {
            None => format!("{base}1"),
            Some(CoarseCorrection::Additive) => format!("{base}2"),
            Some(CoarseCorrection::Hybrid) if self.family == Family::ImpRas => "imphras".into(),
            Some(CoarseCorrection::Hybrid) => format!("h{base}"),
            Some(CoarseCorrection::Adef1) => format!("adef1-{base}"),
        }
    }

    /// Inverse of [`PreconditionerSpec::id`] (family and levels only).
    pub fn parse_id(id: &str, xi_prec: f64) -> Result<Self> {
        let (family, coarse) = match id {
            "as1" => (Family::As, None),
            "as2" => (Family::As, Some(CoarseCorrection::Additive)),
            "has" => (Family::As, Some(CoarseCorrection::Hybrid)),
            "adef1-as" => (Family::As, Some(CoarseCorrection::Adef1)),
            "ras1" => (Family::Ras, None),
            "ras2" => (Family::Ras, Some(CoarseCorrection::Additive)),
            "hras" => (Family::Ras, Some(CoarseCorrection::Hybrid)),
            "adef1-ras" => (Family::Ras, Some(CoarseCorrection::Adef1)),
            "impras1" => (Family::ImpRas, None),
            "impras2" => (Family::ImpRas, Some(CoarseCorrection::Additive)),
            "imphras" => (Family::ImpRas, Some(CoarseCorrection::Hybrid)),
            "adef1-impras" => (Family::ImpRas, Some(CoarseCorrection::Adef1)),
            other => return Err(Error::Config(format!("unknown preconditioner id `{other}`"))),
        };
        Ok(Self::new(family, coarse, xi_prec))
    }
}

/// Dense LU of one local matrix and the global DOFs it acts on.
#[derive(Clone, Debug)]
pub struct LocalSolver {
    pub dofs: Vec<usize>,
    pub lu: DenseLu,
}

impl LocalSolver {
    fn solve_restricted(&self, v: &[C64]) -> Result<Vec<C64>> {
        let mut x: Vec<C64> = self.dofs.iter().map(|&j| v[j]).collect();
        self.lu.solve_in_place(&mut x)?;
        Ok(x)
    }
}

fn check_cap(what: String, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        return Err(Error::SizeCap { what, size, cap });
    }
    Ok(())
}

/// Factorized Galerkin minors `R_ℓ A R_ℓᵀ` of every subdomain.
pub fn minor_factors(a: &SparseComplexMatrix, decomp: &Decomposition, cap: usize) -> Result<Vec<LocalSolver>> {
    decomp
        .subdomain_dofs
        .iter()
        .enumerate()
        .map(|(l, dofs)| {
            check_cap(format!("subdomain {l}"), dofs.len(), cap)?;
            let local = a.minor(dofs)?.to_dense();
            let lu = DenseLu::factor(local, &format!("subdomain {l}"))?;
            Ok(LocalSolver { dofs: dofs.clone(), lu })
        })
        .collect()
}

/// Local matrix of subdomain `set` with an impedance condition on its internal
/// boundary, over all its edges except globally eliminated ones.
pub fn impedance_local_matrix(
    space: &EdgeSpace,
    coeffs: &Coefficients,
    set: &[usize],
) -> Result<(Vec<usize>, SparseComplexMatrix)> {
    let mesh = space.mesh();
    let dofs = subdomain_edge_dofs(space, set);
    let mut edge_to_local = vec![None; mesh.num_edges()];
    for (li, &g) in dofs.iter().enumerate() {
        edge_to_local[space.kept_edges()[g]] = Some(li);
    }
    let mut faces = internal_boundary_faces(mesh, set);
    if space.bc() == BoundaryCondition::Impedance {
        faces.extend(global_boundary_faces(mesh, set));
    }
    let parts = assemble_parts(mesh, set, &edge_to_local, dofs.len(), coeffs, &faces)?;
    let a = parts.galerkin(coeffs.k, coeffs.xi, impedance_sign(coeffs.xi))?;
    Ok((dofs, a))
}

/// Factorized impedance-subdomain matrices; `coeffs` carries `ξ_prec`.
pub fn impedance_factors(
    space: &EdgeSpace,
    coeffs: &Coefficients,
    decomp: &Decomposition,
    cap: usize,
) -> Result<Vec<LocalSolver>> {
    decomp
        .subdomain_elements
        .iter()
        .enumerate()
        .map(|(l, set)| {
            let (dofs, a) = impedance_local_matrix(space, coeffs, set)?;
            check_cap(format!("impedance subdomain {l}"), dofs.len(), cap)?;
            let lu = DenseLu::factor(a.to_dense(), &format!("impedance subdomain {l}"))?;
            Ok(LocalSolver { dofs, lu })
        })
        .collect()
}

/// `G = R₀ᵀ A₀⁻¹ R₀` with `A₀ = R₀ A R₀ᵀ`.
#[derive(Clone, Debug)]
pub struct CoarseSolver {
    r0: crate::linalg::CsrMatrix<f64>,
    r0t: crate::linalg::CsrMatrix<f64>,
    lu: DenseLu,
}

impl CoarseSolver {
    pub fn new(a: &SparseComplexMatrix, link: &CoarseLink, cap: usize) -> Result<Self> {
        check_cap("coarse space".into(), link.ndofs(), cap)?;
        let a0 = a.galerkin(&link.r0)?;
        let lu = DenseLu::factor(a0.to_dense(), "coarse space")?;
        Ok(Self { r0: link.r0.clone(), r0t: link.r0.transpose(), lu })
    }

    pub fn ndofs(&self) -> usize {
        self.lu.size()
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let mut c = self.r0.mul_vec(v)?;
        self.lu.solve_in_place(&mut c)?;
        self.r0t.mul_vec(&c)
    }
}

/// A ready-to-apply Schwarz preconditioner.
#[derive(Clone, Debug)]
pub struct Schwarz {
    spec: PreconditionerSpec,
    n: usize,
    locals: Arc<Vec<LocalSolver>>,
    /// Prolongation weights per subdomain (`None` = unweighted).
    weights: Vec<Option<Vec<f64>>>,
    coarse: Option<Arc<CoarseSolver>>,
    correction: Option<Arc<SparseComplexMatrix>>,
}

impl Schwarz {
    /// Builds every factor from scratch. `problem` is the system being solved;
    /// the local and coarse matrices are reassembled at `spec.xi_prec`.
    pub fn setup(
        space: &EdgeSpace,
        coeffs: &Coefficients,
        problem: Arc<SparseComplexMatrix>,
        decomp: &Decomposition,
        spec: &PreconditionerSpec,
    ) -> Result<Self> {
        let prec_coeffs = coeffs.with_xi(spec.xi_prec);
        let a_prec = Arc::new(crate::fem::assemble(space, &prec_coeffs)?.a);
        let locals = Arc::new(match spec.family {
            Family::As | Family::Ras => minor_factors(&a_prec, decomp, spec.dense_cap)?,
            Family::ImpRas => impedance_factors(space, &prec_coeffs, decomp, spec.dense_cap)?,
        });
        let coarse = match spec.coarse {
            None => None,
            Some(_) => {
                let link = decomp
                    .coarse
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("two-level method without a coarse space".into()))?;
                Some(Arc::new(CoarseSolver::new(&a_prec, link, spec.dense_cap)?))
            }
        };
        let correction = match spec.correction_matrix {
            CorrectionMatrix::Problem => problem,
            CorrectionMatrix::Preconditioner => a_prec,
        };
        Self::from_parts(spec.clone(), decomp, locals, coarse, correction)
    }

    /// Assembles a preconditioner from shared factors. `locals` must come from
    /// [`minor_factors`] for AS/RAS and [`impedance_factors`] for ImpRAS.
    pub fn from_parts(
        spec: PreconditionerSpec,
        decomp: &Decomposition,
        locals: Arc<Vec<LocalSolver>>,
        coarse: Option<Arc<CoarseSolver>>,
        correction: Arc<SparseComplexMatrix>,
    ) -> Result<Self> {
        let n = correction.nrows();
        if locals.len() != decomp.num_subdomains() {
            return Err(Error::DimensionMismatch {
                op: "local solvers",
                expected: decomp.num_subdomains(),
                got: locals.len(),
            });
        }
        if spec.coarse.is_some() != coarse.is_some() {
            return Err(Error::InvalidArgument("coarse solver presence does not match the spec".into()));
        }
        let weights = locals
            .iter()
            .enumerate()
            .map(|(l, loc)| match spec.family {
                Family::As => None,
                Family::Ras | Family::ImpRas => Some(prolongation_weights(&loc.dofs, &decomp.subdomain_dofs[l], &decomp.pou[l])),
            })
            .collect();
        let needs_correction = matches!(spec.coarse, Some(CoarseCorrection::Hybrid | CoarseCorrection::Adef1));
        Ok(Self { spec, n, locals, weights, coarse, correction: needs_correction.then_some(correction) })
    }

    pub fn spec(&self) -> &PreconditionerSpec {
        &self.spec
    }

    pub fn locals(&self) -> &Arc<Vec<LocalSolver>> {
        &self.locals
    }

    pub fn coarse(&self) -> Option<&Arc<CoarseSolver>> {
        self.coarse.as_ref()
    }

    /// `B₁⁻¹ v`.
    pub fn apply_one_level(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.check(v)?;
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for (loc, w) in self.locals.iter().zip(&self.weights) {
            let x = loc.solve_restricted(v)?;
            match w {
                None => loc.dofs.iter().zip(&x).for_each(|(&j, &xi)| out[j] += xi),
                Some(w) => loc.dofs.iter().zip(&x).zip(w).for_each(|((&j, &xi), &wi)| out[j] += xi * wi),
            }
        }
        Ok(out)
    }

    fn check(&self, v: &[C64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { op: "preconditioner apply", expected: self.n, got: v.len() });
        }
        Ok(())
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.check(v)?;
        let (Some(kind), Some(coarse)) = (self.spec.coarse, &self.coarse) else {
            return self.apply_one_level(v);
        };
        let gv = coarse.apply(v)?;
        let mut out = match kind {
            CoarseCorrection::Additive => self.apply_one_level(v)?,
            CoarseCorrection::Hybrid | CoarseCorrection::Adef1 => {
                let a = self.correction.as_ref().expect("correction matrix present");
                let agv = a.mul_vec(&gv)?;
                let w: Vec<C64> = v.iter().zip(&agv).map(|(x, y)| x - y).collect();
                let mut u = self.apply_one_level(&w)?;
                if kind == CoarseCorrection::Hybrid {
                    let gau = coarse.apply(&a.mul_vec(&u)?)?;
                    u.iter_mut().zip(&gau).for_each(|(x, y)| *x -= y);
                }
                u
            }
        };
        out.iter_mut().zip(&gv).for_each(|(x, y)| *x += y);
        Ok(out)
    }
}

/// PoU weight of each local DOF; DOFs outside `I^h(Ω_ℓ)` get weight 0.
fn prolongation_weights(local: &[usize], interior: &[usize], pou: &[f64]) -> Vec<f64> {
    local
        .iter()
        .map(|j| interior.binary_search(j).map_or(0.0, |pos| pou[pos]))
        .collect()
}

impl LinearOperator for Schwarz {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        Schwarz::apply(self, x)
    }
}
