//! Dense complex-matrix kernel.
//!
//! Everything here works on `DMatrix<Complex64>`. Tensor products follow the
//! convention that subsystem 0 is the slowest-varying (leftmost) factor, which
//! is what `nalgebra`'s Kronecker product produces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::composite::CompositeStructure;
use crate::error::{Result, SeaError};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative Frobenius tolerance for Hermiticity checks.
pub const HERM_TOL: f64 = 1e-12;
/// Negative eigenvalues above `-CLIP_TOL` are treated as integrator noise.
pub const CLIP_TOL: f64 = 1e-10;
/// Eigenvalues at or below this threshold take the `Bln(0) = 0` branch.
pub const EPS_BLN: f64 = 1e-14;
/// Absolute trace tolerance for validated states.
pub const TRACE_TOL: f64 = 1e-12;
/// Largest trace error `project_to_state` will silently renormalize.
pub const PROJECTION_TRACE_LIMIT: f64 = 1e-6;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMat {
    CMat::zeros(dim, dim)
}

pub fn from_real_diagonal(diag: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x, 0.0))))
}

/// Pauli matrices.
pub mod pauli {
    use super::{c, CMat};

    pub fn x() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn y() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn z() -> CMat {
        CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    /// `[σ_x, σ_y, σ_z]`
    pub fn all() -> [CMat; 3] {
        [x(), y(), z()]
    }

    /// Real coefficients of a Hermitian 2×2 matrix in the basis `{I, σ_x, σ_y, σ_z}`.
    pub fn decompose(m: &CMat) -> [f64; 4] {
        let [sx, sy, sz] = all();
        [
            m.trace().re / 2.0,
            super::trace_product(m, &sx).re / 2.0,
            super::trace_product(m, &sy).re / 2.0,
            super::trace_product(m, &sz).re / 2.0,
        ]
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, first factor slowest-varying.
pub fn tensor_all<'a, I>(factors: I) -> CMat
where
    I: IntoIterator<Item = &'a CMat>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius(m: &CMat) -> f64 {
    m.norm()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// `(m + m†)/2`
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// `‖m − m†‖_F / ‖m‖_F`, zero for the zero matrix.
pub fn hermitian_residual(m: &CMat) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

pub fn ensure_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(SeaError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn ensure_hermitian(m: &CMat) -> Result<()> {
    ensure_square(m)?;
    let residual = hermitian_residual(m);
    if residual > HERM_TOL {
        return Err(SeaError::NotHermitian { residual });
    }
    Ok(())
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    (u.adjoint() * u - identity(u.nrows())).norm()
}

/// Eigendecomposition `M = V diag(λ) V†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMat,
}

impl SpectralDecomposition {
    /// `V diag(f(λ)) V†`
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> CMat {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for j in 0..n {
            let fj = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * v.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply(|x| x)
    }
}

/// Hermitian eigensolver. Input must be Hermitian within [`HERM_TOL`].
pub fn herm_eig(m: &CMat) -> Result<SpectralDecomposition> {
    ensure_hermitian(m)?;
    eig_of_hermitian_part(m)
}

/// Eigendecomposition of `(m + m†)/2`; skips the Hermiticity check.
pub(crate) fn eig_of_hermitian_part(m: &CMat) -> Result<SpectralDecomposition> {
    ensure_square(m)?;
    let n = m.nrows();
    let sym = hermitian_part(m);
    let norm = sym.norm();
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 10_000 * n.max(1))
        .ok_or(SeaError::EigenFailure { dim: n, norm })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    Ok(herm_eig(m)?.eigenvalues.iter().copied().collect())
}

/// The discontinuous logarithm: `ln x` for `x > eps`, `0` otherwise.
pub fn bln(x: f64, eps: f64) -> f64 {
    if x > eps {
        x.ln()
    } else {
        0.0
    }
}

/// `x Bln(x)` with the convention `0 ln 0 = 0`.
pub fn x_bln(x: f64, eps: f64) -> f64 {
    x * bln(x, eps)
}

/// `Bln(ρ)` as a matrix function.
pub fn matrix_bln(rho: &DensityMatrix, eps_bln: f64) -> CMat {
    raw_matrix_bln(rho.matrix(), eps_bln).expect("eigendecomposition of a validated state")
}

pub(crate) fn raw_matrix_bln(m: &CMat, eps_bln: f64) -> Result<CMat> {
    Ok(eig_of_hermitian_part(m)?.apply(|x| bln(x, eps_bln)))
}

/// von Neumann entropy `−Tr ρ ln ρ` from a spectrum.
pub fn entropy_of_spectrum(eigenvalues: &[f64], eps_bln: f64) -> f64 {
    -eigenvalues.iter().map(|&x| x_bln(x, eps_bln)).sum::<f64>()
}

/// Density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and eigenvalues `≥ −CLIP_TOL`.
    pub fn new(m: CMat) -> Result<Self> {
        ensure_hermitian(&m)?;
        let tr = m.trace();
        let deviation = (tr - C64::new(1.0, 0.0)).norm();
        if deviation > TRACE_TOL {
            return Err(SeaError::InvalidState(format!("trace {tr} differs from 1 by {deviation:.3e}")));
        }
        let eig = eig_of_hermitian_part(&m)?;
        let min = eig.eigenvalues.min();
        if min < -CLIP_TOL {
            return Err(SeaError::InvalidState(format!("eigenvalue {min:.6e} is negative")));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix the caller already knows to be a valid state.
    pub(crate) fn assume_valid(m: CMat) -> Self {
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim).scale(1.0 / dim as f64))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(SeaError::InvalidState("zero state vector".into()));
        }
        let psi = psi.unscale(norm);
        Ok(Self(&psi * psi.adjoint()))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn spectrum(&self) -> Vec<f64> {
        eig_of_hermitian_part(&self.0)
            .map(|e| e.eigenvalues.iter().copied().collect())
            .expect("eigendecomposition of a validated state")
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.0, &self.0).re
    }

    /// `−Tr ρ ln ρ` in units of `k_B`.
    pub fn entropy(&self) -> f64 {
        entropy_of_spectrum(&self.spectrum(), EPS_BLN)
    }

    pub fn expectation(&self, op: &CMat) -> f64 {
        trace_product(&self.0, op).re
    }
}

impl AsRef<CMat> for DensityMatrix {
    fn as_ref(&self) -> &CMat {
        &self.0
    }
}

/// Numerical hygiene for integrated states.
///
/// Symmetrizes, clips eigenvalues in `[−clip_tol, 0)` to zero and
/// renormalizes to unit trace.
pub fn project_to_state(m: &CMat, clip_tol: f64) -> Result<DensityMatrix> {
    ensure_square(m)?;
    let sym = hermitian_part(m);
    let tr = sym.trace().re;
    let deviation = (tr - 1.0).abs();
    if !(deviation <= PROJECTION_TRACE_LIMIT) {
        return Err(SeaError::TraceDeviation { deviation, limit: PROJECTION_TRACE_LIMIT });
    }
    let eig = eig_of_hermitian_part(&sym)?;
    let min = eig.eigenvalues.min();
    if min < -clip_tol {
        return Err(SeaError::PositivityBlowUp { eigenvalue: min, clip_tol });
    }
    if min >= 0.0 {
        return Ok(DensityMatrix(sym.unscale(tr)));
    }
    let total: f64 = eig.eigenvalues.iter().map(|&x| x.max(0.0)).sum();
    Ok(DensityMatrix(eig.apply(|x| x.max(0.0) / total)))
}

/// Partial trace over the `traced` subsystems; the kept factors stay in order.
pub fn partial_trace(m: &CMat, structure: &CompositeStructure, traced: &[usize]) -> Result<CMat> {
    structure.check_operator(m)?;
    let kept: Vec<usize> = (0..structure.count()).filter(|k| !traced.contains(k)).collect();
    for &k in traced {
        structure.check_index(k)?;
    }
    let split = structure.split(&kept)?;
    let (dk, dr) = (split.sub_dim(), split.rest_dim());
    let mut out = CMat::zeros(dk, dk);
    for r in 0..dr {
        for a in 0..dk {
            let i = split.full(a, r);
            for b in 0..dk {
                out[(a, b)] += m[(i, split.full(b, r))];
            }
        }
    }
    Ok(out)
}

/// Transposes the factor `subsystem` in place of the composite index.
pub fn partial_transpose(m: &CMat, structure: &CompositeStructure, subsystem: usize) -> Result<CMat> {
    structure.check_operator(m)?;
    let split = structure.split(&[subsystem])?;
    let (dk, dr) = (split.sub_dim(), split.rest_dim());
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for a in 0..dk {
        for b in 0..dk {
            for r in 0..dr {
                for s in 0..dr {
                    out[(split.full(a, r), split.full(b, s))] = m[(split.full(b, r), split.full(a, s))];
                }
            }
        }
    }
    Ok(out)
}
