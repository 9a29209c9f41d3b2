//! Seeded random states, unitaries and Hermitian operators.
//!
//! All generators are deterministic per seed (ChaCha8).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SeaError};
use crate::linalg::{c, CMat, DensityMatrix};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows × cols` matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / std::f64::consts::SQRT_2
    })
}

/// `G G† / Tr(G G†)` with `G` of shape `dim × rank`.
pub fn random_density_with<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(SeaError::InvalidRank { rank, dim });
    }
    let g = ginibre(dim, rank, rng);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    let m = crate::linalg::hermitian_part(&w.unscale(tr));
    Ok(DensityMatrix::assume_valid(m))
}

pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(dim, rank, &mut rng_from_seed(seed))
}

/// Haar unitary: QR of a Ginibre matrix with the phases of `diag(R)` removed.
pub fn random_unitary_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let qr = ginibre(dim, dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_unitary(dim: usize, seed: u64) -> CMat {
    random_unitary_with(dim, &mut rng_from_seed(seed))
}

/// Hermitian matrix `(G + G†)/2` from a Ginibre draw.
pub fn random_hermitian_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = ginibre(dim, dim, rng);
    (&g + g.adjoint()).scale(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, unitarity_residual};

    #[test]
    fn rank_one_is_pure() {
        let rho = random_density(4, 1, 7).unwrap();
        let spec = rho.spectrum();
        assert!((spec[3] - 1.0).abs() < 1e-12);
        assert!(spec[..3].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn full_rank_normalized() {
        let rho = random_density(4, 4, 11).unwrap();
        let spec = rho.spectrum();
        assert!((spec.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(spec[0] > 0.0);
        DensityMatrix::new(rho.into_matrix()).unwrap();
    }

    #[test]
    fn unitary_contract_and_determinism() {
        let u = random_unitary(2, 3);
        assert!(unitarity_residual(&u) < 1e-12);
        assert_eq!(u, random_unitary(2, 3));
        assert_ne!(u, random_unitary(2, 4));
        let big = random_unitary(16, 5);
        assert!((big.adjoint() * &big - identity(16)).norm() < 1e-12);
    }

    #[test]
    fn invalid_rank() {
        assert!(matches!(random_density(3, 0, 1), Err(SeaError::InvalidRank { .. })));
        assert!(matches!(random_density(3, 4, 1), Err(SeaError::InvalidRank { .. })));
    }
}
