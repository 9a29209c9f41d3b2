//! Local perception operators, their deviations and covariance functionals.
//!
//! For an overall observable `X` and state `ρ`, the perception of `X` within
//! subsystem `J` is the operator on `ℋ_J`
//!
//! ```text
//! (X)^J_ρ = Tr_J̄[(I_J ⊗ ρ_J̄) X]
//! ```
//!
//! i.e. `X` averaged over the other subsystems with the weight `ρ_J̄ = Tr_J ρ`.
//! When `J̄` holds several subsystems they are weighted as one block.

use crate::composite::{CompositeStructure, FactorSplit};
use crate::error::Result;
use crate::linalg::{ensure_hermitian, identity, matrix_bln, partial_trace, trace_product, CMat, DensityMatrix, C64};

/// A perceived operator on `ℋ_J` together with what it was perceived from.
#[derive(Clone, Debug)]
pub struct PerceptionResult {
    pub operator: CMat,
    pub subsystem: usize,
    pub source_label: String,
}

/// Cached marginals of one state as seen from one subsystem.
#[derive(Clone, Debug)]
pub struct LocalFrame {
    subsystem: usize,
    split: FactorSplit,
    rho_local: CMat,
    rho_rest: CMat,
}

impl LocalFrame {
    pub fn new(rho: &DensityMatrix, j: usize, structure: &CompositeStructure) -> Result<Self> {
        Self::from_matrix(rho.matrix(), j, structure)
    }

    /// Same as [`LocalFrame::new`] for a raw (e.g. intermediate-stage) matrix.
    pub fn from_matrix(rho: &CMat, j: usize, structure: &CompositeStructure) -> Result<Self> {
        structure.check_operator(rho)?;
        let split = structure.split(&[j])?;
        let rho_local = partial_trace(rho, structure, &structure.complement(j))?;
        let rho_rest = partial_trace(rho, structure, &[j])?;
        Ok(Self { subsystem: j, split, rho_local, rho_rest })
    }

    pub fn subsystem(&self) -> usize {
        self.subsystem
    }

    pub fn split(&self) -> &FactorSplit {
        &self.split
    }

    /// `ρ_J`
    pub fn rho_local(&self) -> &CMat {
        &self.rho_local
    }

    /// `ρ_J̄`
    pub fn rho_rest(&self) -> &CMat {
        &self.rho_rest
    }

    /// `(X)^J_ρ`
    pub fn perceive(&self, x: &CMat) -> CMat {
        let (dj, dr) = (self.split.sub_dim(), self.split.rest_dim());
        let mut out = CMat::zeros(dj, dj);
        for a in 0..dj {
            for b in 0..dj {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..dr {
                    let col = self.split.full(b, r);
                    for t in 0..dr {
                        acc += self.rho_rest[(r, t)] * x[(self.split.full(a, t), col)];
                    }
                }
                out[(a, b)] = acc;
            }
        }
        out
    }

    /// `Tr(ρ_J A)` for a local operator.
    pub fn local_mean(&self, local: &CMat) -> f64 {
        trace_product(&self.rho_local, local).re
    }

    /// `Δ(A) = A − I Tr(ρ_J A)` for an already perceived (local) operator.
    pub fn center(&self, local: &CMat) -> CMat {
        let mean = self.local_mean(local);
        local - identity(local.nrows()).scale(mean)
    }

    /// `Δ(X)^J_ρ`
    pub fn deviation(&self, x: &CMat) -> CMat {
        self.center(&self.perceive(x))
    }

    /// `½ Tr[ρ_J {A, B}]` for two local operators.
    pub fn local_covariance(&self, a: &CMat, b: &CMat) -> f64 {
        let ab = a * b;
        let ba = b * a;
        0.5 * (trace_product(&self.rho_local, &ab).re + trace_product(&self.rho_local, &ba).re)
    }

    /// `(X, Y)^J_ρ`
    pub fn covariance(&self, x: &CMat, y: &CMat) -> f64 {
        self.local_covariance(&self.deviation(x), &self.deviation(y))
    }

    /// `ρ_J ⊗ ρ_J̄` in composite ordering.
    pub fn uncorrelated_product(&self) -> CMat {
        self.split.product(&self.rho_local, &self.rho_rest)
    }
}

pub fn perceive(x: &CMat, rho: &DensityMatrix, j: usize, structure: &CompositeStructure) -> Result<PerceptionResult> {
    perceive_labeled(x, rho, j, structure, "X")
}

pub fn perceive_labeled(
    x: &CMat,
    rho: &DensityMatrix,
    j: usize,
    structure: &CompositeStructure,
    label: &str,
) -> Result<PerceptionResult> {
    structure.check_operator(x)?;
    ensure_hermitian(x)?;
    let frame = LocalFrame::new(rho, j, structure)?;
    Ok(PerceptionResult { operator: frame.perceive(x), subsystem: j, source_label: label.to_owned() })
}

pub fn deviation(x: &CMat, rho: &DensityMatrix, j: usize, structure: &CompositeStructure) -> Result<CMat> {
    structure.check_operator(x)?;
    ensure_hermitian(x)?;
    Ok(LocalFrame::new(rho, j, structure)?.deviation(x))
}

pub fn covariance(x: &CMat, y: &CMat, rho: &DensityMatrix, j: usize, structure: &CompositeStructure) -> Result<f64> {
    for op in [x, y] {
        structure.check_operator(op)?;
        ensure_hermitian(op)?;
    }
    Ok(LocalFrame::new(rho, j, structure)?.covariance(x, y))
}

/// `(S(ρ))^J_ρ` with `S(ρ) = −Bln(ρ)` in units of `k_B`.
pub fn perceived_entropy_operator(
    rho: &DensityMatrix,
    j: usize,
    structure: &CompositeStructure,
    eps_bln: f64,
) -> Result<PerceptionResult> {
    let entropy_op = -matrix_bln(rho, eps_bln);
    let frame = LocalFrame::new(rho, j, structure)?;
    Ok(PerceptionResult { operator: frame.perceive(&entropy_op), subsystem: j, source_label: "S(rho)".into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{assemble_pauli_state, embed_local, reduced_state, PauliState2Q};
    use crate::linalg::{pauli, tensor, EPS_BLN};
    use crate::random::{random_density, random_hermitian_with, rng_from_seed};

    #[test]
    fn local_observable_perceives_to_itself() {
        let s = CompositeStructure::qubits(2);
        let rho = random_density(4, 3, 1).unwrap();
        let xa = pauli::x() + pauli::z().scale(0.4);
        let p = perceive(&embed_local(&xa, 0, &s).unwrap(), &rho, 0, &s).unwrap();
        assert!((p.operator - xa).norm() < 1e-14);
    }

    #[test]
    fn mean_value_identity() {
        let s = CompositeStructure::new(vec![2, 3]).unwrap();
        let mut rng = rng_from_seed(9);
        let rho = random_density(6, 6, 2).unwrap();
        let x = random_hermitian_with(6, &mut rng);
        for j in 0..2 {
            let frame = LocalFrame::new(&rho, j, &s).unwrap();
            let lhs = frame.local_mean(&frame.perceive(&x));
            let rhs = trace_product(&frame.uncorrelated_product(), &x).re;
            assert!((lhs - rhs).abs() < 1e-12, "J={j}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn identity_has_zero_deviation_and_covariance() {
        let s = CompositeStructure::qubits(2);
        let rho = random_density(4, 4, 3).unwrap();
        let mut rng = rng_from_seed(4);
        let x = random_hermitian_with(4, &mut rng);
        assert!(deviation(&identity(4), &rho, 0, &s).unwrap().norm() < 1e-14);
        assert!(covariance(&identity(4), &x, &rho, 1, &s).unwrap().abs() < 1e-14);
        let frame = LocalFrame::new(&rho, 0, &s).unwrap();
        assert!(frame.local_mean(&frame.deviation(&x)).abs() < 1e-12);
        assert!(frame.covariance(&x, &x) >= 0.0);
    }

    #[test]
    fn pure_state_has_zero_perceived_entropy() {
        let s = CompositeStructure::qubits(2);
        let rho = random_density(4, 1, 5).unwrap();
        let p = perceived_entropy_operator(&rho, 0, &s, EPS_BLN).unwrap();
        assert!(p.operator.norm() < 1e-12);
    }

    #[test]
    fn product_state_perceived_entropy_is_additive() {
        let s = CompositeStructure::qubits(2);
        let ra = random_density(2, 2, 6).unwrap();
        let rb = random_density(2, 2, 7).unwrap();
        let rho = DensityMatrix::new(tensor(ra.matrix(), rb.matrix())).unwrap();
        let p = perceived_entropy_operator(&rho, 0, &s, EPS_BLN).unwrap();
        let mean = trace_product(ra.matrix(), &p.operator).re;
        assert!((mean - (ra.entropy() + rb.entropy())).abs() < 1e-12);
    }

    #[test]
    fn correlated_state_perceived_entropy_differs_from_local() {
        let s = CompositeStructure::qubits(2);
        let rho = assemble_pauli_state(&PauliState2Q { a: [0.4, 0.0, 0.0], b: [0.2, 0.0, 0.0], c: [0.0; 3] }).unwrap();
        let p = perceived_entropy_operator(&rho, 0, &s, EPS_BLN).unwrap();
        let ra = reduced_state(&rho, 0, &s).unwrap();
        let perceived = trace_product(ra.matrix(), &p.operator).re;
        assert!((perceived - ra.entropy()).abs() > 1e-3);
    }
}
