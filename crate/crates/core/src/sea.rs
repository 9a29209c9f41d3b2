//! The steepest-entropy-ascent equation of motion for composite systems.
//!
//! ```text
//! dρ/dt = −(i/ħ)[H, ρ] − Σ_J {D^J, ρ_J} ⊗ ρ_J̄
//! ```
//!
//! Each local dissipator `D^J` is the component of the perceived entropy
//! operator `(Bln ρ)^J` orthogonal (in the inner product `Tr[ρ_J {A, B}]`) to
//! the perceived conserved operators `(C_k)^J`, scaled by `1/(4τ_J)`:
//!
//! ```text
//! 4 τ_J D^J = (Bln ρ)^J + Σ_ℓ β_ℓ (C_ℓ)^J
//! ```
//!
//! with the multipliers `β` fixed by `Tr[{D^J, ρ_J} (C_k)^J] = 0`. The same
//! normalization gives the determinant form used by [`SeaSystem::dissipator_compact`]
//! and the Gram-determinant entropy production.

use nalgebra::{DMatrix, DVector};

use crate::composite::CompositeModel;
use crate::error::{Result, SeaError};
use crate::linalg::{
    anticommutator, commutator, ensure_hermitian, identity, partial_trace, raw_matrix_bln, trace_product, CMat,
    DensityMatrix, C64, EPS_BLN,
};
use crate::perception::LocalFrame;

/// Conserved observables `C_1 = I`, `C_2 = H`, then any extras.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservedSet {
    ops: Vec<CMat>,
}

impl ConservedSet {
    pub fn new(hamiltonian: &CMat, extras: &[CMat]) -> Result<Self> {
        let d = hamiltonian.nrows();
        ensure_hermitian(hamiltonian)?;
        let mut ops = vec![identity(d), hamiltonian.clone()];
        for (k, extra) in extras.iter().enumerate() {
            if extra.nrows() != d || extra.ncols() != d {
                return Err(SeaError::DimensionMismatch(format!("conserved operator {} is not {d}x{d}", k + 3)));
            }
            ensure_hermitian(extra)?;
            ops.push(extra.clone());
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeaParams {
    /// Relaxation time per subsystem.
    pub tau: Vec<f64>,
    /// Conserved observables beyond `I` and `H`.
    pub extra_conserved: Vec<CMat>,
    /// Relative eigenvalue cutoff for the multiplier pseudo-inverse.
    pub gram_rcond: f64,
    pub eps_bln: f64,
    pub hbar: f64,
    /// Scale of entropy outputs; the dynamics do not depend on it.
    pub boltzmann: f64,
}

impl SeaParams {
    pub fn uniform(count: usize, tau: f64) -> Self {
        Self {
            tau: vec![tau; count],
            extra_conserved: Vec::new(),
            gram_rcond: 1e-10,
            eps_bln: EPS_BLN,
            hbar: 1.0,
            boltzmann: 1.0,
        }
    }

    pub fn validate(&self, count: usize) -> Result<()> {
        if self.tau.len() != count {
            return Err(SeaError::InvalidParameters(format!("{} relaxation times for {count} subsystems", self.tau.len())));
        }
        if let Some(j) = self.tau.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(SeaError::InvalidParameters(format!("tau[{j}] = {} must be positive", self.tau[j])));
        }
        for (name, value) in [("gram_rcond", self.gram_rcond), ("hbar", self.hbar), ("boltzmann", self.boltzmann)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(SeaError::InvalidParameters(format!("{name} = {value} must be positive")));
            }
        }
        if !(self.eps_bln.is_finite() && self.eps_bln >= 0.0) {
            return Err(SeaError::InvalidParameters(format!("eps_bln = {} must be non-negative", self.eps_bln)));
        }
        Ok(())
    }
}

/// Lagrange multipliers for one subsystem.
#[derive(Clone, Debug)]
pub struct MultiplierSolution {
    pub beta: Vec<f64>,
    /// `λ_max / λ_min` of the Gram matrix (infinite when singular).
    pub gram_condition: f64,
    /// Number of Gram eigenvalues kept by the pseudo-inverse.
    pub gram_rank: usize,
}

#[derive(Clone, Debug)]
pub struct DissipatorResult {
    pub subsystem: usize,
    /// `D^J` on `ℋ_J`.
    pub operator: CMat,
    pub multipliers: Vec<f64>,
    /// `{D^J, ρ_J}`
    pub anticommutator: CMat,
    pub gram_condition: f64,
    pub gram_rank: usize,
}

/// Rate of change of the overall entropy, total and per subsystem.
#[derive(Clone, Debug)]
pub struct EntropyProduction {
    /// `−Σ_J Tr[{D^J, ρ_J} (S(ρ))^J]`
    pub total: f64,
    pub per_subsystem: Vec<f64>,
    /// Same quantity from ratios of Gram determinants of covariances.
    pub gram_total: f64,
    pub gram_per_subsystem: Vec<f64>,
}

/// A composite model equipped with SEA parameters.
#[derive(Clone, Debug)]
pub struct SeaSystem {
    model: CompositeModel,
    params: SeaParams,
    conserved: ConservedSet,
}

/// Quantities shared by every subsystem within one rhs evaluation.
struct Snapshot<'a> {
    rho: &'a CMat,
    bln: CMat,
}

impl SeaSystem {
    pub fn new(model: CompositeModel, params: SeaParams) -> Result<Self> {
        params.validate(model.structure().count())?;
        let conserved = ConservedSet::new(model.hamiltonian(), &params.extra_conserved)?;
        Ok(Self { model, params, conserved })
    }

    /// Same parameters on a different model (e.g. with a modified remote Hamiltonian).
    pub fn with_model(&self, model: CompositeModel) -> Result<Self> {
        Self::new(model, self.params.clone())
    }

    pub fn with_params(&self, params: SeaParams) -> Result<Self> {
        Self::new(self.model.clone(), params)
    }

    pub fn model(&self) -> &CompositeModel {
        &self.model
    }

    pub fn params(&self) -> &SeaParams {
        &self.params
    }

    pub fn conserved(&self) -> &ConservedSet {
        &self.conserved
    }

    fn snapshot<'a>(&self, rho: &'a CMat) -> Result<Snapshot<'a>> {
        self.model.structure().check_operator(rho)?;
        Ok(Snapshot { rho, bln: raw_matrix_bln(rho, self.params.eps_bln)? })
    }

    fn frame(&self, rho: &CMat, j: usize) -> Result<LocalFrame> {
        LocalFrame::from_matrix(rho, j, self.model.structure())
    }

    fn multipliers_in(&self, frame: &LocalFrame, perceived_bln: &CMat) -> (MultiplierSolution, Vec<CMat>) {
        let perceived: Vec<CMat> = self.conserved.ops().iter().map(|c| frame.perceive(c)).collect();
        let n = perceived.len();
        let rho_j = frame.rho_local();
        let anti_mean = |a: &CMat, b: &CMat| trace_product(rho_j, &anticommutator(a, b)).re;
        let gram = DMatrix::from_fn(n, n, |k, l| anti_mean(&perceived[l], &perceived[k]));
        let rhs = DVector::from_fn(n, |k, _| -anti_mean(perceived_bln, &perceived[k]));
        let (beta, gram_condition, gram_rank) = pinv_solve(&gram, &rhs, self.params.gram_rcond);
        (MultiplierSolution { beta: beta.iter().copied().collect(), gram_condition, gram_rank }, perceived)
    }

    fn dissipator_in(&self, snap: &Snapshot<'_>, j: usize) -> Result<DissipatorResult> {
        let frame = self.frame(snap.rho, j)?;
        let perceived_bln = frame.perceive(&snap.bln);
        let (solution, perceived) = self.multipliers_in(&frame, &perceived_bln);
        let mut numerator = perceived_bln;
        for (beta, p) in solution.beta.iter().zip(&perceived) {
            numerator += p.scale(*beta);
        }
        let operator = numerator.unscale(4.0 * self.params.tau[j]);
        let anticommutator = anticommutator(&operator, frame.rho_local());
        Ok(DissipatorResult {
            subsystem: j,
            operator,
            multipliers: solution.beta,
            anticommutator,
            gram_condition: solution.gram_condition,
            gram_rank: solution.gram_rank,
        })
    }

    pub fn solve_multipliers(&self, rho: &DensityMatrix, j: usize) -> Result<MultiplierSolution> {
        self.model.structure().check_index(j)?;
        let snap = self.snapshot(rho.matrix())?;
        let frame = self.frame(rho.matrix(), j)?;
        Ok(self.multipliers_in(&frame, &frame.perceive(&snap.bln)).0)
    }

    /// `D^J` from the constrained multiplier solve.
    pub fn dissipator(&self, rho: &DensityMatrix, j: usize) -> Result<DissipatorResult> {
        self.model.structure().check_index(j)?;
        self.dissipator_in(&self.snapshot(rho.matrix())?, j)
    }

    /// `D^J` for every subsystem, sharing one `Bln(ρ)` evaluation.
    pub fn dissipators(&self, rho: &DensityMatrix) -> Result<Vec<DissipatorResult>> {
        self.dissipators_raw(rho.matrix())
    }

    pub(crate) fn dissipators_raw(&self, rho: &CMat) -> Result<Vec<DissipatorResult>> {
        let snap = self.snapshot(rho)?;
        (0..self.model.structure().count()).map(|j| self.dissipator_in(&snap, j)).collect()
    }

    /// Determinant form for `C = {I, H}`:
    ///
    /// ```text
    /// D^J = 1/(4τ_J) · | Δ(Bln ρ)^J   Δ(H)^J |  /  (H,H)^J
    ///                  | (H,Bln ρ)^J  (H,H)^J |
    /// ```
    ///
    /// Fails with [`SeaError::DegenerateHamiltonian`] when `(H,H)^J ≤ gram_rcond`.
    pub fn dissipator_compact(&self, rho: &DensityMatrix, j: usize) -> Result<CMat> {
        self.model.structure().check_index(j)?;
        let snap = self.snapshot(rho.matrix())?;
        let frame = self.frame(rho.matrix(), j)?;
        let dev_bln = frame.deviation(&snap.bln);
        let dev_h = frame.deviation(self.model.hamiltonian());
        let hh = frame.local_covariance(&dev_h, &dev_h);
        if !(hh > self.params.gram_rcond) {
            return Err(SeaError::DegenerateHamiltonian { variance: hh });
        }
        let hb = frame.local_covariance(&dev_h, &dev_bln);
        let det = dev_bln.scale(hh) - dev_h.scale(hb);
        Ok(det.unscale(4.0 * self.params.tau[j] * hh))
    }

    /// `−(i/ħ)[H, ρ]`
    pub fn hamiltonian_rhs(&self, rho: &CMat) -> CMat {
        commutator(self.model.hamiltonian(), rho) * C64::new(0.0, -1.0 / self.params.hbar)
    }

    /// `−Σ_J {D^J, ρ_J} ⊗ ρ_J̄`
    pub fn dissipative_rhs(&self, rho: &DensityMatrix) -> Result<CMat> {
        self.dissipative_rhs_raw(rho.matrix())
    }

    pub(crate) fn dissipative_rhs_raw(&self, rho: &CMat) -> Result<CMat> {
        let structure = self.model.structure();
        let mut out = CMat::zeros(rho.nrows(), rho.ncols());
        for d in self.dissipators_raw(rho)? {
            let split = structure.split(&[d.subsystem])?;
            let rest = partial_trace(rho, structure, &[d.subsystem])?;
            out -= split.product(&d.anticommutator, &rest);
        }
        Ok(out)
    }

    /// Full right-hand side of the equation of motion.
    pub fn rhs(&self, rho: &DensityMatrix) -> Result<CMat> {
        Ok(self.hamiltonian_rhs(rho.matrix()) + self.dissipative_rhs(rho)?)
    }

    /// `dρ_J/dt = −(i/ħ)[H_J, ρ_J] − (i/ħ) Tr_J̄[V, ρ] − {D^J, ρ_J}`
    pub fn local_rhs(&self, rho: &DensityMatrix, j: usize) -> Result<CMat> {
        let structure = self.model.structure();
        structure.check_index(j)?;
        let minus_i = C64::new(0.0, -1.0 / self.params.hbar);
        let d = self.dissipator(rho, j)?;
        let rho_j = crate::composite::marginal(rho.matrix(), j, structure)?;
        let local = commutator(self.model.local_hamiltonian(j), &rho_j) * minus_i;
        let coupling = partial_trace(&commutator(self.model.interaction(), rho.matrix()), structure, &structure.complement(j))?
            * minus_i;
        Ok(local + coupling - d.anticommutator)
    }

    /// Entropy production from both the dissipators and the Gram-determinant form.
    pub fn entropy_production(&self, rho: &DensityMatrix) -> Result<EntropyProduction> {
        let snap = self.snapshot(rho.matrix())?;
        let count = self.model.structure().count();
        let kb = self.params.boltzmann;
        let mut per_subsystem = Vec::with_capacity(count);
        let mut gram_per_subsystem = Vec::with_capacity(count);
        for j in 0..count {
            let frame = self.frame(rho.matrix(), j)?;
            let perceived_bln = frame.perceive(&snap.bln);
            let d = self.dissipator_in(&snap, j)?;
            // S(ρ) = −k_B Bln(ρ), so −Tr[{D, ρ_J} (S)^J] = k_B Tr[{D, ρ_J} (Bln)^J].
            per_subsystem.push(kb * trace_product(&d.anticommutator, &perceived_bln).re);
            gram_per_subsystem.push(kb * self.gram_rate(&frame, &perceived_bln, j));
        }
        Ok(EntropyProduction {
            total: per_subsystem.iter().sum(),
            per_subsystem,
            gram_total: gram_per_subsystem.iter().sum(),
            gram_per_subsystem,
        })
    }

    /// `1/(2τ_J) · Gram(Bln, C_2, …) / Gram(C_2, …)` as a Schur complement.
    fn gram_rate(&self, frame: &LocalFrame, perceived_bln: &CMat, j: usize) -> f64 {
        let dev_bln = frame.center(perceived_bln);
        let devs: Vec<CMat> = self.conserved.ops()[1..].iter().map(|c| frame.deviation(c)).collect();
        let n = devs.len();
        let bb = frame.local_covariance(&dev_bln, &dev_bln);
        let gamma = DMatrix::from_fn(n, n, |k, l| frame.local_covariance(&devs[k], &devs[l]));
        let cross = DVector::from_fn(n, |k, _| frame.local_covariance(&devs[k], &dev_bln));
        let (x, _, _) = pinv_solve(&gamma, &cross, self.params.gram_rcond);
        (bb - cross.dot(&x)) / (2.0 * self.params.tau[j])
    }
}

/// Minimum-norm solution of a symmetric positive-semidefinite system.
///
/// Eigenvalues below `rcond · λ_max` are discarded. Returns the solution,
/// the condition number `λ_max/λ_min` and the numerical rank.
fn pinv_solve(g: &DMatrix<f64>, rhs: &DVector<f64>, rcond: f64) -> (DVector<f64>, f64, usize) {
    let n = g.nrows();
    if n == 0 {
        return (DVector::zeros(0), 1.0, 0);
    }
    let sym = (g + g.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &x| m.min(x.abs()));
    let cutoff = rcond * max;
    let mut out = DVector::zeros(n);
    let mut rank = 0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff && lambda > 0.0 {
            let v = eig.eigenvectors.column(i);
            out += v * (v.dot(rhs) / lambda);
            rank += 1;
        }
    }
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    (out, condition, rank)
}
