//! Brute-force reference computations used as independent oracles.
//!
//! Everything here works from raw index arithmetic on row-major composite
//! indices and never calls the library's partial trace, embedding or
//! perception routines.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type M = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Digits of a composite index, most significant (subsystem 0) first.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

pub fn compose(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x)
}

/// Reduced operator on the `keep` subsystems (ascending) by explicit summation.
pub fn reduce(m: &M, dims: &[usize], keep: &[usize]) -> M {
    let total: usize = dims.iter().product();
    let kdims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let kd: usize = kdims.iter().product();
    let mut out = M::zeros(kd, kd);
    for i in 0..total {
        let di = digits(i, dims);
        for k in 0..total {
            let dk = digits(k, dims);
            let traced_equal = (0..dims.len()).filter(|s| !keep.contains(s)).all(|s| di[s] == dk[s]);
            if !traced_equal {
                continue;
            }
            let a = compose(&keep.iter().map(|&s| di[s]).collect::<Vec<_>>(), &kdims);
            let b = compose(&keep.iter().map(|&s| dk[s]).collect::<Vec<_>>(), &kdims);
            out[(a, b)] += m[(i, k)];
        }
    }
    out
}

/// `A_J ⊗ B_J̄` placed in composite order.
pub fn product_in_order(a: &M, b: &M, j: usize, dims: &[usize]) -> M {
    let total: usize = dims.iter().product();
    let rest: Vec<usize> = (0..dims.len()).filter(|&s| s != j).collect();
    let rdims: Vec<usize> = rest.iter().map(|&s| dims[s]).collect();
    M::from_fn(total, total, |i, k| {
        let di = digits(i, dims);
        let dk = digits(k, dims);
        let ri = compose(&rest.iter().map(|&s| di[s]).collect::<Vec<_>>(), &rdims);
        let rk = compose(&rest.iter().map(|&s| dk[s]).collect::<Vec<_>>(), &rdims);
        a[(di[j], dk[j])] * b[(ri, rk)]
    })
}

/// Operator `x` on subsystem `j`, identity elsewhere.
pub fn embed(x: &M, j: usize, dims: &[usize]) -> M {
    let total: usize = dims.iter().product();
    M::from_fn(total, total, |i, k| {
        let di = digits(i, dims);
        let dk = digits(k, dims);
        if (0..dims.len()).all(|s| s == j || di[s] == dk[s]) {
            x[(di[j], dk[j])]
        } else {
            c(0.0, 0.0)
        }
    })
}

pub fn tr(m: &M) -> Complex64 {
    m.trace()
}

pub fn gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> M {
    let g = M::from_fn(n, n, |_, _| gaussian(rng));
    (&g + g.adjoint()).scale(0.5)
}

/// Random density matrix of given rank, `G G† / Tr`.
pub fn random_state<R: Rng>(n: usize, rank: usize, rng: &mut R) -> M {
    let g = M::from_fn(n, rank, |_, _| gaussian(rng));
    let p = &g * g.adjoint();
    let t = p.trace();
    p / t
}

pub fn pauli() -> [M; 4] {
    [
        M::identity(2, 2),
        M::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        M::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
        M::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
    ]
}

/// `σ_i ⊗ σ_k` by explicit 4×4 indexing.
pub fn pauli_pair(i: usize, k: usize) -> M {
    let p = pauli();
    M::from_fn(4, 4, |r, s| p[i][(r / 2, s / 2)] * p[k][(r % 2, s % 2)])
}

/// Von Neumann entropy of the Hermitian part.
pub fn entropy(m: &M) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigen().eigenvalues.iter().filter(|&&x| x > 1e-300).map(|&x| -x * x.ln()).sum()
}
