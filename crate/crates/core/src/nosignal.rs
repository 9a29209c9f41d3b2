//! Randomized certification that operations confined to `J̄` leave every
//! locally accessible quantity of `J` unchanged.
//!
//! Two scenarios are covered:
//!
//! * a local unitary `U` on `J̄` applied to the state, `ρ′ = (I_J ⊗ U) ρ (I_J ⊗ U†)`;
//! * a change of the Hamiltonian that acts trivially on `J`.
//!
//! Each trial compares the relevant local quantities before and after; the
//! report keeps the maximum deviation per check and the failing inputs.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::composite::{embed_on, is_noninteracting, marginal, CompositeStructure, PauliState2Q};
use crate::error::{Result, SeaError};
use crate::linalg::{
    c, hermitian_part, partial_trace, raw_matrix_bln, unitarity_residual, CMat, DensityMatrix,
};
use crate::perception::LocalFrame;
use crate::random::{random_density_with, random_unitary_with, rng_from_seed};
use crate::sea::SeaSystem;

pub const CERTIFICATION_TOL: f64 = 1e-9;
pub const UNITARITY_TOL: f64 = 1e-12;
/// Tolerance used when checking that a subsystem is decoupled.
pub const DECOUPLING_TOL: f64 = 1e-12;
const MAX_WITNESSES: usize = 5;

/// `(I ⊗ U) ρ (I ⊗ U†)` with `U` acting on the (ascending) `subset`.
pub fn apply_local_unitary(
    rho: &DensityMatrix,
    u: &CMat,
    subset: &[usize],
    structure: &CompositeStructure,
) -> Result<DensityMatrix> {
    let residual = unitarity_residual(u);
    if !(residual <= UNITARITY_TOL) {
        return Err(SeaError::NonUnitary { residual });
    }
    let full = embed_on(u, subset, structure)?;
    let out = &full * rho.matrix() * full.adjoint();
    Ok(DensityMatrix::assume_valid(hermitian_part(&out)))
}

/// What a subsystem can access of a nonlinear evolution law.
pub trait LocalDynamics: Sync {
    fn structure(&self) -> &CompositeStructure;
    fn hamiltonian(&self) -> &CMat;
    /// Dissipative contribution to `dρ_J/dt`, with the sign convention `dρ_J/dt = … − term`.
    fn local_dissipation(&self, rho: &DensityMatrix, j: usize) -> Result<CMat>;
    fn local_rhs(&self, rho: &DensityMatrix, j: usize) -> Result<CMat>;
}

impl LocalDynamics for SeaSystem {
    fn structure(&self) -> &CompositeStructure {
        self.model().structure()
    }

    fn hamiltonian(&self) -> &CMat {
        self.model().hamiltonian()
    }

    fn local_dissipation(&self, rho: &DensityMatrix, j: usize) -> Result<CMat> {
        Ok(self.dissipator(rho, j)?.anticommutator)
    }

    fn local_rhs(&self, rho: &DensityMatrix, j: usize) -> Result<CMat> {
        SeaSystem::local_rhs(self, rho, j)
    }
}

/// SEA plus a term in `J` driven directly by `ρ_J̄`, bypassing perception:
/// `strength · Re Tr(ρ_J̄ X) · Y` with `X = |0⟩⟨1| + |1⟩⟨0|` on `ℋ_J̄` and
/// `Y = −i|0⟩⟨1| + i|1⟩⟨0|` on `ℋ_J`. For qubits this is `b_x σ_y`.
#[derive(Clone, Debug)]
pub struct SignalingMutant {
    inner: SeaSystem,
    strength: f64,
}

impl SignalingMutant {
    pub fn new(inner: SeaSystem, strength: f64) -> Self {
        Self { inner, strength }
    }

    fn extra(&self, rho: &DensityMatrix, j: usize) -> Result<CMat> {
        let structure = self.inner.model().structure();
        let rest = partial_trace(rho.matrix(), structure, &[j])?;
        let dj = structure.dim(j);
        let mut y = CMat::zeros(dj, dj);
        y[(0, 1)] = c(0.0, -1.0);
        y[(1, 0)] = c(0.0, 1.0);
        let drive = if rest.nrows() > 1 { 2.0 * rest[(1, 0)].re } else { 0.0 };
        Ok(y.scale(self.strength * drive))
    }
}

impl LocalDynamics for SignalingMutant {
    fn structure(&self) -> &CompositeStructure {
        self.inner.model().structure()
    }

    fn hamiltonian(&self) -> &CMat {
        self.inner.model().hamiltonian()
    }

    fn local_dissipation(&self, rho: &DensityMatrix, j: usize) -> Result<CMat> {
        Ok(self.inner.local_dissipation(rho, j)? + self.extra(rho, j)?)
    }

    fn local_rhs(&self, rho: &DensityMatrix, j: usize) -> Result<CMat> {
        Ok(SeaSystem::local_rhs(&self.inner, rho, j)? - self.extra(rho, j)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckVerdict {
    pub max_deviation: f64,
    pub pass: bool,
}

/// A failing trial, with enough data to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub trial: usize,
    pub seed: u64,
    pub check: String,
    pub deviation: f64,
    /// State as rows of `[re, im]` pairs.
    pub state: Vec<Vec<[f64; 2]>>,
    /// The applied unitary, for local-unitary trials.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub scenario: String,
    pub subsystem: usize,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub checks: BTreeMap<String, CheckVerdict>,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
}

impl CertificationReport {
    pub fn max_deviation(&self, check: &str) -> Option<f64> {
        self.checks.get(check).map(|c| c.max_deviation)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificationOptions {
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Replace the random unitary by the identity.
    pub identity_unitary: bool,
}

impl Default for CertificationOptions {
    fn default() -> Self {
        Self { trials: 200, seed: 0, tolerance: CERTIFICATION_TOL, identity_unitary: false }
    }
}

pub fn matrix_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|k| [m[(i, k)].re, m[(i, k)].im]).collect()).collect()
}

/// Per-trial seeds derived from the master seed.
pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = rng_from_seed(seed);
    (0..trials).map(|_| rng.random()).collect()
}

/// Random state from the certification ensemble: half full-rank Ginibre, a
/// quarter rank-deficient, a quarter from the two-qubit Pauli family (on other
/// structures, rank-2 Ginibre).
pub fn ensemble_state<R: Rng + ?Sized>(structure: &CompositeStructure, rng: &mut R) -> Result<DensityMatrix> {
    let dim = structure.total_dim();
    let u: f64 = rng.random();
    if u < 0.5 || dim < 2 {
        random_density_with(dim, dim, rng)
    } else if u < 0.75 {
        let rank = rng.random_range(1..dim);
        random_density_with(dim, rank, rng)
    } else if structure.dims() == [2, 2] {
        random_pauli_state(rng)
    } else {
        random_density_with(dim, 2, rng)
    }
}

/// Rejection-sampled valid member of the two-qubit Pauli family.
pub fn random_pauli_state<R: Rng + ?Sized>(rng: &mut R) -> Result<DensityMatrix> {
    let mut scale = 1.0;
    loop {
        for _ in 0..100 {
            let mut draw = || std::array::from_fn(|_| scale * rng.random_range(-0.6..0.6));
            let p = PauliState2Q { a: draw(), b: draw(), c: draw() };
            if let Ok(rho) = crate::composite::assemble_pauli_state(&p) {
                return Ok(rho);
            }
        }
        scale *= 0.5;
    }
}

struct TrialOutcome {
    trial: usize,
    seed: u64,
    deviations: Vec<(&'static str, f64)>,
    state: CMat,
    unitary: Option<CMat>,
}

fn assemble_report(
    scenario: &str,
    j: usize,
    opts: &CertificationOptions,
    seeds: Vec<u64>,
    outcomes: Vec<TrialOutcome>,
    names: &[&str],
) -> CertificationReport {
    let mut checks: BTreeMap<String, CheckVerdict> =
        names.iter().map(|n| (n.to_string(), CheckVerdict { max_deviation: 0.0, pass: true })).collect();
    let mut witnesses = Vec::new();
    for o in &outcomes {
        for &(name, dev) in &o.deviations {
            let entry = checks.get_mut(name).expect("known check");
            entry.max_deviation = entry.max_deviation.max(dev);
            let failed = !(dev < opts.tolerance);
            if failed {
                entry.pass = false;
                if witnesses.len() < MAX_WITNESSES {
                    witnesses.push(Witness {
                        trial: o.trial,
                        seed: o.seed,
                        check: name.to_string(),
                        deviation: dev,
                        state: matrix_rows(&o.state),
                        unitary: o.unitary.as_ref().map(matrix_rows),
                    });
                }
            }
        }
    }
    let pass = checks.values().all(|c| c.pass);
    CertificationReport {
        scenario: scenario.into(),
        subsystem: j,
        trials: opts.trials,
        tolerance: opts.tolerance,
        seed: opts.seed,
        seeds,
        checks,
        pass,
        witnesses,
    }
}

fn spectrum_deviation(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    a.spectrum().iter().zip(b.spectrum()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn perceived_bln(rho: &DensityMatrix, j: usize, structure: &CompositeStructure, eps: f64) -> Result<CMat> {
    let frame = LocalFrame::new(rho, j, structure)?;
    Ok(frame.perceive(&raw_matrix_bln(rho.matrix(), eps)?))
}

/// Local unitaries on `J̄` against marginal, `(Bln ρ)^J`, local rhs and spectrum.
pub fn certify_unitary_invariance<D: LocalDynamics>(
    dynamics: &D,
    j: usize,
    eps_bln: f64,
    opts: &CertificationOptions,
) -> Result<CertificationReport> {
    let structure = dynamics.structure();
    structure.check_index(j)?;
    if !is_noninteracting(dynamics.hamiltonian(), j, structure, DECOUPLING_TOL)? {
        return Err(SeaError::Precondition(format!("subsystem {j} interacts with the rest")));
    }
    let rest = structure.complement(j);
    let rest_dim = structure.complement_dim(j);
    let seeds = trial_seeds(opts.seed, opts.trials);
    let outcomes = seeds
        .par_iter()
        .enumerate()
        .map(|(trial, &seed)| -> Result<TrialOutcome> {
            let mut rng = rng_from_seed(seed);
            let rho = ensemble_state(structure, &mut rng)?;
            let u = if opts.identity_unitary {
                crate::linalg::identity(rest_dim)
            } else {
                random_unitary_with(rest_dim, &mut rng)
            };
            let moved = apply_local_unitary(&rho, &u, &rest, structure)?;
            let marginal_dev = (marginal(rho.matrix(), j, structure)? - marginal(moved.matrix(), j, structure)?).norm();
            let perception_dev =
                (perceived_bln(&rho, j, structure, eps_bln)? - perceived_bln(&moved, j, structure, eps_bln)?).norm();
            let rhs_dev = (dynamics.local_rhs(&rho, j)? - dynamics.local_rhs(&moved, j)?).norm();
            Ok(TrialOutcome {
                trial,
                seed,
                deviations: vec![
                    ("marginal", marginal_dev),
                    ("perception", perception_dev),
                    ("local_rhs", rhs_dev),
                    ("spectrum", spectrum_deviation(&rho, &moved)),
                ],
                state: rho.into_matrix(),
                unitary: Some(u),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(
        "local-unitary",
        j,
        opts,
        seeds,
        outcomes,
        &["marginal", "perception", "local_rhs", "spectrum"],
    ))
}

/// True when `m = I_J ⊗ K` for some `K` on `ℋ_J̄`.
pub fn acts_trivially_on(m: &CMat, j: usize, structure: &CompositeStructure, tol: f64) -> Result<bool> {
    structure.check_operator(m)?;
    let k = partial_trace(m, structure, &[j])?.unscale(structure.dim(j) as f64);
    let rebuilt = embed_on(&k, &structure.complement(j), structure)?;
    Ok((m - rebuilt).norm() <= tol * m.norm().max(1.0))
}

/// Two models differing only on `J̄`, compared through `D^J` and the local rhs.
pub fn certify_remote_interaction_invariance<D: LocalDynamics>(
    base: &D,
    modified: &D,
    j: usize,
    opts: &CertificationOptions,
) -> Result<CertificationReport> {
    let structure = base.structure();
    structure.check_index(j)?;
    if structure != modified.structure() {
        return Err(SeaError::Precondition("models have different composite structures".into()));
    }
    let delta = modified.hamiltonian() - base.hamiltonian();
    if !acts_trivially_on(&delta, j, structure, DECOUPLING_TOL)? {
        return Err(SeaError::Precondition(format!("the Hamiltonian change acts on subsystem {j}")));
    }
    let seeds = trial_seeds(opts.seed, opts.trials);
    let outcomes = seeds
        .par_iter()
        .enumerate()
        .map(|(trial, &seed)| -> Result<TrialOutcome> {
            let mut rng = rng_from_seed(seed);
            let rho = ensemble_state(structure, &mut rng)?;
            let frame = LocalFrame::new(&rho, j, structure)?;
            let perception_dev = (frame.deviation(base.hamiltonian()) - frame.deviation(modified.hamiltonian())).norm();
            let dissipator_dev = (base.local_dissipation(&rho, j)? - modified.local_dissipation(&rho, j)?).norm();
            let rhs_dev = (base.local_rhs(&rho, j)? - modified.local_rhs(&rho, j)?).norm();
            Ok(TrialOutcome {
                trial,
                seed,
                deviations: vec![("perception", perception_dev), ("dissipator", dissipator_dev), ("local_rhs", rhs_dev)],
                state: rho.into_matrix(),
                unitary: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_report("remote-interaction", j, opts, seeds, outcomes, &["perception", "dissipator", "local_rhs"]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{bloch_vector, reduced_state, CompositeModel, HamiltonianSpec};
    use crate::linalg::{identity, pauli, EPS_BLN};
    use crate::oracles::{example1_state, Example1Params};
    use crate::sea::SeaParams;

    fn sigma_z() -> SeaSystem {
        SeaSystem::new(CompositeModel::two_qubit_sigma_z(), SeaParams::uniform(2, 1.0)).unwrap()
    }

    #[test]
    fn identity_unitary_is_noop() {
        let s = CompositeStructure::qubits(2);
        let rho = crate::random::random_density(4, 3, 1).unwrap();
        let out = apply_local_unitary(&rho, &identity(2), &[1], &s).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn sigma_x_on_b_flips_b_x() {
        let s = CompositeStructure::qubits(2);
        let rho = example1_state(&Example1Params::new(0.4, 0.2).unwrap());
        let out = apply_local_unitary(&rho, &pauli::x(), &[1], &s).unwrap();
        let bb = bloch_vector(reduced_state(&out, 1, &s).unwrap().matrix());
        assert!((bb[0] - 0.2).abs() < 1e-14);
        let out = apply_local_unitary(&rho, &pauli::z(), &[1], &s).unwrap();
        let bb = bloch_vector(reduced_state(&out, 1, &s).unwrap().matrix());
        assert!((bb[0] + 0.2).abs() < 1e-14);
        let ra = reduced_state(&out, 0, &s).unwrap();
        assert!((ra.matrix() - reduced_state(&rho, 0, &s).unwrap().matrix()).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_unitary() {
        let s = CompositeStructure::qubits(2);
        let rho = DensityMatrix::maximally_mixed(4);
        let err = apply_local_unitary(&rho, &pauli::x().scale(1.1), &[1], &s).unwrap_err();
        assert!(matches!(err, SeaError::NonUnitary { .. }));
    }

    #[test]
    fn identity_trials_have_zero_deviation() {
        let opts = CertificationOptions { trials: 20, identity_unitary: true, ..Default::default() };
        let report = certify_unitary_invariance(&sigma_z(), 0, EPS_BLN, &opts).unwrap();
        assert!(report.pass);
        for check in report.checks.values() {
            assert_eq!(check.max_deviation, 0.0);
        }
    }

    #[test]
    fn interacting_model_is_rejected() {
        let s = CompositeStructure::qubits(2);
        let v = crate::linalg::tensor(&pauli::x(), &pauli::x());
        let spec = HamiltonianSpec::new(vec![pauli::z(), pauli::z()], v, &s).unwrap();
        let sys = SeaSystem::new(CompositeModel::new(s, spec).unwrap(), SeaParams::uniform(2, 1.0)).unwrap();
        let err = certify_unitary_invariance(&sys, 0, EPS_BLN, &CertificationOptions::default()).unwrap_err();
        assert!(matches!(err, SeaError::Precondition(_)));
    }

    #[test]
    fn deterministic_per_seed() {
        let opts = CertificationOptions { trials: 12, seed: 7, ..Default::default() };
        let a = certify_unitary_invariance(&sigma_z(), 1, EPS_BLN, &opts).unwrap();
        let b = certify_unitary_invariance(&sigma_z(), 1, EPS_BLN, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mutant_fails_with_witness() {
        let mutant = SignalingMutant::new(sigma_z(), 0.5);
        let opts = CertificationOptions { trials: 20, seed: 3, ..Default::default() };
        let report = certify_unitary_invariance(&mutant, 0, EPS_BLN, &opts).unwrap();
        assert!(!report.pass);
        assert!(report.max_deviation("local_rhs").unwrap() > 1e-3);
        assert!(!report.witnesses.is_empty());
        assert!(report.checks["marginal"].pass);
    }

    #[test]
    fn trivial_action_detection() {
        let s = CompositeStructure::qubits(2);
        let on_b = crate::linalg::tensor(&identity(2), &pauli::x());
        let on_a = crate::linalg::tensor(&pauli::x(), &identity(2));
        assert!(acts_trivially_on(&on_b, 0, &s, 1e-12).unwrap());
        assert!(!acts_trivially_on(&on_a, 0, &s, 1e-12).unwrap());
    }
}
