//! Subsystem layout, local Hamiltonians and the two-qubit Pauli state family.

use crate::error::{Result, SeaError};
use crate::linalg::{
    self, ensure_hermitian, identity, partial_trace, pauli, tensor, trace_product, CMat, DensityMatrix,
};

/// Default cap on the total Hilbert-space dimension.
pub const DEFAULT_DIM_CAP: usize = 256;

/// Ordered subsystem dimensions. Subsystem 0 is the leftmost tensor factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeStructure {
    dims: Vec<usize>,
}

impl CompositeStructure {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(dims: Vec<usize>, cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(SeaError::InvalidStructure("at least one subsystem is required".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(SeaError::InvalidStructure(format!("subsystem {pos} has dimension 0")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= cap)
            .ok_or_else(|| SeaError::InvalidStructure(format!("total dimension of {dims:?} exceeds cap {cap}")))?;
        debug_assert!(total >= 1);
        Ok(Self { dims })
    }

    pub fn qubits(count: usize) -> Self {
        Self::new(vec![2; count]).expect("qubit register within cap")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn count(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, j: usize) -> usize {
        self.dims[j]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_qubit(&self, j: usize) -> bool {
        self.dims.get(j) == Some(&2)
    }

    /// Every subsystem except `j`, ascending.
    pub fn complement(&self, j: usize) -> Vec<usize> {
        (0..self.count()).filter(|&k| k != j).collect()
    }

    pub fn complement_dim(&self, j: usize) -> usize {
        self.total_dim() / self.dims[j]
    }

    pub fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.count() {
            return Err(SeaError::IndexOutOfRange { index: j, count: self.count() });
        }
        Ok(())
    }

    pub fn check_operator(&self, m: &CMat) -> Result<()> {
        let d = self.total_dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(SeaError::DimensionMismatch(format!(
                "operator is {}x{}, structure {:?} needs {d}x{d}",
                m.nrows(),
                m.ncols(),
                self.dims
            )));
        }
        Ok(())
    }

    pub fn check_local_operator(&self, m: &CMat, j: usize) -> Result<()> {
        self.check_index(j)?;
        let d = self.dims[j];
        if m.nrows() != d || m.ncols() != d {
            return Err(SeaError::DimensionMismatch(format!(
                "local operator for subsystem {j} is {}x{}, expected {d}x{d}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }

    /// Mixed-radix digits of a composite index, most significant first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.count()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Index map between the composite space and `subset ⊗ rest`.
    pub fn split(&self, subset: &[usize]) -> Result<FactorSplit> {
        for &k in subset {
            self.check_index(k)?;
        }
        if subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SeaError::InvalidStructure(format!(
                "subsystem subset {subset:?} must be strictly ascending"
            )));
        }
        let rest: Vec<usize> = (0..self.count()).filter(|k| !subset.contains(k)).collect();
        let sub_dim: usize = subset.iter().map(|&k| self.dims[k]).product();
        let rest_dim: usize = rest.iter().map(|&k| self.dims[k]).product();
        let mut map = vec![0; sub_dim * rest_dim];
        for i in 0..self.total_dim() {
            let digits = self.digits(i);
            let a = subset.iter().fold(0, |acc, &k| acc * self.dims[k] + digits[k]);
            let r = rest.iter().fold(0, |acc, &k| acc * self.dims[k] + digits[k]);
            map[a * rest_dim + r] = i;
        }
        Ok(FactorSplit { sub_dim, rest_dim, map })
    }
}

/// Bijection `(a, r) ↦ i` between a subset/complement pair and composite indices.
#[derive(Clone, Debug)]
pub struct FactorSplit {
    sub_dim: usize,
    rest_dim: usize,
    map: Vec<usize>,
}

impl FactorSplit {
    pub fn sub_dim(&self) -> usize {
        self.sub_dim
    }

    pub fn rest_dim(&self) -> usize {
        self.rest_dim
    }

    #[inline]
    pub fn full(&self, a: usize, r: usize) -> usize {
        self.map[a * self.rest_dim + r]
    }

    /// `A ⊗ R` with `A` on the subset and `R` on the rest, in composite ordering.
    pub fn product(&self, on_subset: &CMat, on_rest: &CMat) -> CMat {
        let n = self.sub_dim * self.rest_dim;
        let mut out = CMat::zeros(n, n);
        for a in 0..self.sub_dim {
            for b in 0..self.sub_dim {
                let x = on_subset[(a, b)];
                if x == linalg::c(0.0, 0.0) {
                    continue;
                }
                for r in 0..self.rest_dim {
                    for s in 0..self.rest_dim {
                        out[(self.full(a, r), self.full(b, s))] = x * on_rest[(r, s)];
                    }
                }
            }
        }
        out
    }
}

/// `X_J ⊗ I_J̄` placed on factor `j`.
pub fn embed_local(x: &CMat, j: usize, structure: &CompositeStructure) -> Result<CMat> {
    structure.check_local_operator(x, j)?;
    embed_on(x, &[j], structure)
}

/// Operator acting as `x` on the (ascending) `subset` and as the identity elsewhere.
pub fn embed_on(x: &CMat, subset: &[usize], structure: &CompositeStructure) -> Result<CMat> {
    let split = structure.split(subset)?;
    if x.nrows() != split.sub_dim() || x.ncols() != split.sub_dim() {
        return Err(SeaError::DimensionMismatch(format!(
            "operator is {}x{}, subset {subset:?} has dimension {}",
            x.nrows(),
            x.ncols(),
            split.sub_dim()
        )));
    }
    Ok(split.product(x, &identity(split.rest_dim())))
}

/// `ρ_J = Tr_J̄ ρ` as a raw matrix.
pub fn marginal(m: &CMat, j: usize, structure: &CompositeStructure) -> Result<CMat> {
    structure.check_index(j)?;
    partial_trace(m, structure, &structure.complement(j))
}

/// `ρ_J̄ = Tr_J ρ` as a raw matrix.
pub fn complement_marginal(m: &CMat, j: usize, structure: &CompositeStructure) -> Result<CMat> {
    structure.check_index(j)?;
    partial_trace(m, structure, &[j])
}

pub fn reduced_state(rho: &DensityMatrix, j: usize, structure: &CompositeStructure) -> Result<DensityMatrix> {
    Ok(DensityMatrix::assume_valid(marginal(rho.matrix(), j, structure)?))
}

pub fn complement_state(rho: &DensityMatrix, j: usize, structure: &CompositeStructure) -> Result<DensityMatrix> {
    Ok(DensityMatrix::assume_valid(complement_marginal(rho.matrix(), j, structure)?))
}

/// Local Hamiltonians `H_J` plus an interaction `V` on the full space.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub locals: Vec<CMat>,
    pub interaction: CMat,
}

impl HamiltonianSpec {
    pub fn new(locals: Vec<CMat>, interaction: CMat, structure: &CompositeStructure) -> Result<Self> {
        let spec = Self { locals, interaction };
        spec.validate(structure)?;
        Ok(spec)
    }

    /// Local terms only, `V = 0`.
    pub fn noninteracting(locals: Vec<CMat>, structure: &CompositeStructure) -> Result<Self> {
        let d = structure.total_dim();
        Self::new(locals, CMat::zeros(d, d), structure)
    }

    pub fn validate(&self, structure: &CompositeStructure) -> Result<()> {
        if self.locals.len() != structure.count() {
            return Err(SeaError::DimensionMismatch(format!(
                "{} local Hamiltonians for {} subsystems",
                self.locals.len(),
                structure.count()
            )));
        }
        for (j, h) in self.locals.iter().enumerate() {
            structure.check_local_operator(h, j)?;
            ensure_hermitian(h)?;
        }
        structure.check_operator(&self.interaction)?;
        ensure_hermitian(&self.interaction)?;
        Ok(())
    }
}

/// `H = Σ_J H_J ⊗ I_J̄ + V`
pub fn assemble_hamiltonian(spec: &HamiltonianSpec, structure: &CompositeStructure) -> Result<CMat> {
    spec.validate(structure)?;
    let mut h = spec.interaction.clone();
    for (j, local) in spec.locals.iter().enumerate() {
        h += embed_local(local, j, structure)?;
    }
    Ok(h)
}

/// A composite system: its layout, its Hamiltonian terms and the assembled `H`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeModel {
    structure: CompositeStructure,
    spec: HamiltonianSpec,
    hamiltonian: CMat,
}

impl CompositeModel {
    pub fn new(structure: CompositeStructure, spec: HamiltonianSpec) -> Result<Self> {
        let hamiltonian = assemble_hamiltonian(&spec, &structure)?;
        Ok(Self { structure, spec, hamiltonian })
    }

    /// Two qubits with `H_A = H_B = σ_z` and no interaction.
    pub fn two_qubit_sigma_z() -> Self {
        let structure = CompositeStructure::qubits(2);
        let spec = HamiltonianSpec::noninteracting(vec![pauli::z(), pauli::z()], &structure)
            .expect("σ_z locals are valid");
        Self::new(structure, spec).expect("valid model")
    }

    pub fn structure(&self) -> &CompositeStructure {
        &self.structure
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    pub fn local_hamiltonian(&self, j: usize) -> &CMat {
        &self.spec.locals[j]
    }

    pub fn interaction(&self) -> &CMat {
        &self.spec.interaction
    }

    /// Same structure, different Hamiltonian terms.
    pub fn with_spec(&self, spec: HamiltonianSpec) -> Result<Self> {
        Self::new(self.structure.clone(), spec)
    }
}

/// Canonical split of `H` relative to subsystem `J`.
#[derive(Clone, Debug)]
pub struct InteractionSplit {
    /// Effective local part on `ℋ_J`.
    pub local: CMat,
    /// Effective part on `ℋ_J̄`.
    pub complement: CMat,
    /// Remainder, Frobenius-orthogonal to every operator of the form `X_J ⊗ I + I ⊗ Y_J̄`.
    pub residual: CMat,
}

/// Splits `H = H_J ⊗ I + I ⊗ H_J̄ + V_res`, assigning half of `Tr H` to each side.
pub fn interaction_split(h: &CMat, j: usize, structure: &CompositeStructure) -> Result<InteractionSplit> {
    structure.check_index(j)?;
    structure.check_operator(h)?;
    let d = structure.total_dim() as f64;
    let dj = structure.dim(j);
    let dr = structure.complement_dim(j);
    let half_mean = h.trace() / (2.0 * d);
    let local = marginal(h, j, structure)?.unscale(dr as f64) - identity(dj) * half_mean;
    let complement = complement_marginal(h, j, structure)?.unscale(dj as f64) - identity(dr) * half_mean;
    let rest = structure.complement(j);
    let residual = h - embed_local(&local, j, structure)? - embed_on(&complement, &rest, structure)?;
    Ok(InteractionSplit { local, complement, residual })
}

/// True iff `H` has no coupling between `J` and `J̄` beyond `tol` (Frobenius).
pub fn is_noninteracting(h: &CMat, j: usize, structure: &CompositeStructure, tol: f64) -> Result<bool> {
    Ok(interaction_split(h, j, structure)?.residual.norm() < tol)
}

/// Two-qubit state `¼[I + Σ_j (a_j σ_j⊗I + b_j I⊗σ_j + c_j σ_j⊗σ_j)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliState2Q {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
}

impl PauliState2Q {
    pub fn matrix(&self) -> CMat {
        let id = identity(2);
        let mut m = identity(4);
        for (j, s) in pauli::all().iter().enumerate() {
            m += tensor(s, &id).scale(self.a[j]);
            m += tensor(&id, s).scale(self.b[j]);
            m += tensor(s, s).scale(self.c[j]);
        }
        m.scale(0.25)
    }
}

pub fn assemble_pauli_state(p: &PauliState2Q) -> Result<DensityMatrix> {
    DensityMatrix::new(p.matrix()).map_err(|e| match e {
        SeaError::InvalidState(msg) => SeaError::InvalidState(format!("Pauli parameters {p:?}: {msg}")),
        other => other,
    })
}

/// `(Tr ρσ_x, Tr ρσ_y, Tr ρσ_z)` of a qubit operator.
pub fn bloch_vector(rho: &CMat) -> [f64; 3] {
    pauli::all().map(|s| trace_product(rho, &s).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_diagonal};

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn structure_validation() {
        assert!(CompositeStructure::new(vec![]).is_err());
        assert!(CompositeStructure::new(vec![2, 0]).is_err());
        assert!(CompositeStructure::new(vec![16, 17]).is_err());
        assert!(CompositeStructure::with_cap(vec![16, 17], 512).is_ok());
        let s = CompositeStructure::new(vec![2, 3, 2]).unwrap();
        assert_eq!(s.total_dim(), 12);
        assert_eq!(s.digits(7), vec![1, 0, 1]);
        assert_eq!(s.complement(1), vec![0, 2]);
    }

    #[test]
    fn embed_matches_kronecker_layout() {
        let s = CompositeStructure::qubits(2);
        assert!(close(&embed_local(&pauli::z(), 0, &s).unwrap(), &tensor(&pauli::z(), &identity(2)), 1e-15));
        assert!(close(&embed_local(&pauli::z(), 1, &s).unwrap(), &tensor(&identity(2), &pauli::z()), 1e-15));
        assert!(embed_local(&pauli::z(), 2, &s).is_err());
    }

    #[test]
    fn embed_middle_factor_against_index_oracle() {
        let s = CompositeStructure::qubits(3);
        let got = embed_local(&pauli::x(), 1, &s).unwrap();
        let sx = pauli::x();
        for i in 0..8 {
            for j in 0..8 {
                let (di, dj) = ([i >> 2, (i >> 1) & 1, i & 1], [j >> 2, (j >> 1) & 1, j & 1]);
                let expected = if di[0] == dj[0] && di[2] == dj[2] { sx[(di[1], dj[1])] } else { c(0.0, 0.0) };
                assert_eq!(got[(i, j)], expected);
            }
        }
    }

    #[test]
    fn assemble_examples() {
        let s = CompositeStructure::qubits(2);
        let spec = HamiltonianSpec::noninteracting(vec![pauli::z(), pauli::z()], &s).unwrap();
        let h = assemble_hamiltonian(&spec, &s).unwrap();
        assert!(close(&h, &from_real_diagonal(&[2.0, 0.0, 0.0, -2.0]), 1e-15));

        let xx = tensor(&pauli::x(), &pauli::x());
        let spec = HamiltonianSpec::new(vec![CMat::zeros(2, 2), CMat::zeros(2, 2)], xx.clone(), &s).unwrap();
        assert!(close(&assemble_hamiltonian(&spec, &s).unwrap(), &xx, 1e-15));

        // σ_z⊗I + I⊗σ_z + g σ_x⊗σ_x written out by hand.
        let g = 0.37;
        let spec = HamiltonianSpec::new(vec![pauli::z(), pauli::z()], xx.scale(g), &s).unwrap();
        let h = assemble_hamiltonian(&spec, &s).unwrap();
        #[rustfmt::skip]
        let by_hand = [
            2.0, 0.0, 0.0, g,
            0.0, 0.0, g,   0.0,
            0.0, g,   0.0, 0.0,
            g,   0.0, 0.0, -2.0,
        ];
        let by_hand = CMat::from_row_slice(4, 4, &by_hand.map(|x| c(x, 0.0)));
        assert!(close(&h, &by_hand, 1e-15));
    }

    #[test]
    fn spec_rejects_bad_dimensions() {
        let s = CompositeStructure::qubits(2);
        assert!(HamiltonianSpec::noninteracting(vec![pauli::z()], &s).is_err());
        assert!(HamiltonianSpec::noninteracting(vec![pauli::z(), identity(3)], &s).is_err());
    }

    #[test]
    fn split_examples() {
        let s = CompositeStructure::qubits(2);
        let h = tensor(&pauli::z(), &identity(2)) + tensor(&identity(2), &pauli::z());
        let split = interaction_split(&h, 0, &s).unwrap();
        assert!(split.residual.norm() < 1e-15);
        assert!(is_noninteracting(&h, 0, &s, 1e-12).unwrap());

        let xx = tensor(&pauli::x(), &pauli::x());
        let split = interaction_split(&xx, 0, &s).unwrap();
        assert!(close(&split.residual, &xx, 1e-15));
        assert!(!is_noninteracting(&xx, 0, &s, 1e-12).unwrap());

        let full = &h + xx.scale(0.1);
        let split = interaction_split(&full, 0, &s).unwrap();
        assert!(close(&split.local, &pauli::z(), 1e-15));
        assert!(close(&split.complement, &pauli::z(), 1e-15));
        assert!(close(&split.residual, &xx.scale(0.1), 1e-15));
    }

    #[test]
    fn pauli_state_marginals_and_validation() {
        let p = PauliState2Q { a: [0.1, -0.2, 0.3], b: [0.0, 0.25, -0.1], c: [0.1, 0.0, -0.2] };
        let rho = assemble_pauli_state(&p).unwrap();
        let s = CompositeStructure::qubits(2);
        let ra = reduced_state(&rho, 0, &s).unwrap();
        let rb = reduced_state(&rho, 1, &s).unwrap();
        let (ba, bb) = (bloch_vector(ra.matrix()), bloch_vector(rb.matrix()));
        for j in 0..3 {
            assert!((ba[j] - p.a[j]).abs() < 1e-12);
            assert!((bb[j] - p.b[j]).abs() < 1e-12);
        }
        let zero = assemble_pauli_state(&PauliState2Q { a: [0.0; 3], b: [0.0; 3], c: [0.0; 3] }).unwrap();
        assert!(close(zero.matrix(), &identity(4).scale(0.25), 1e-15));
        assert!(assemble_pauli_state(&PauliState2Q { a: [0.9, 0.0, 0.0], b: [0.9, 0.0, 0.0], c: [0.0; 3] }).is_err());
    }
}
