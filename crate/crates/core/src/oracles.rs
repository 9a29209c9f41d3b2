//! Closed-form two-qubit families with analytic spectra and dissipators.
//!
//! All states are members of
//!
//! ```text
//! ρ = ¼ [I + Σ_j (a_j σ_j⊗I + b_j I⊗σ_j + c_j σ_j⊗σ_j)]
//! ```
//!
//! The dissipator formulas assume `H = σ_z⊗I + I⊗σ_z` and `τ_A = τ_B = 1`.
//! They are built from the analytic eigenvalues only, never from the engine.

use serde::{Deserialize, Serialize};

use crate::composite::{assemble_pauli_state, CompositeStructure, PauliState2Q};
use crate::error::{Result, SeaError};
use crate::linalg::{bln, eigenvalues, partial_transpose, pauli, CMat, DensityMatrix};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    Separable,
    Entangled,
}

/// `a_x = a`, `b_x = b`, everything else zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example1Params {
    a: f64,
    b: f64,
}

impl Example1Params {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.abs() < 1.0 && b.abs() < 1.0) {
            return Err(SeaError::InvalidParameters(format!("a = {a}, b = {b} must lie in (-1, 1)")));
        }
        let p = Self { a, b };
        check_spectrum(&p.eigenvalues(), "example1")?;
        Ok(p)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `4λ = 1−a−b, 1−a+b, 1+a−b, 1+a+b`
    pub fn eigenvalues(&self) -> [f64; 4] {
        let (a, b) = (self.a, self.b);
        [(1.0 - a - b) / 4.0, (1.0 - a + b) / 4.0, (1.0 + a - b) / 4.0, (1.0 + a + b) / 4.0]
    }

    /// `(f, g, h)` with the sign patterns `(+−−+)`, `(++−−)`, `(+−+−)`.
    pub fn fgh(&self, eps_bln: f64) -> (f64, f64, f64) {
        let l = self.eigenvalues().map(|x| bln(x, eps_bln));
        (l[0] - l[1] - l[2] + l[3], l[0] + l[1] - l[2] - l[3], l[0] - l[1] + l[2] - l[3])
    }

    pub fn pauli(&self) -> PauliState2Q {
        PauliState2Q { a: [self.a, 0.0, 0.0], b: [self.b, 0.0, 0.0], c: [0.0; 3] }
    }
}

pub fn example1_state(p: &Example1Params) -> DensityMatrix {
    assemble_pauli_state(&p.pauli()).expect("validated parameters give a state")
}

/// `[{D^A, ρ_A}, {D^B, ρ_B}]`
pub fn example1_dissipators(p: &Example1Params, eps_bln: f64) -> [CMat; 2] {
    let (a, b) = (p.a, p.b);
    let (f, g, h) = p.fgh(eps_bln);
    let ka = (1.0 - a * a) / 16.0 * (b * f - g);
    let kb = (1.0 - b * b) / 16.0 * (a * f - h);
    [pauli::x().scale(ka), pauli::x().scale(kb)]
}

/// `a_x = a_z = a/√2`, `b_x = b_z = b/√2`, `c_j = 2(a−b)/3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example2Params {
    a: f64,
    b: f64,
}

impl Example2Params {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(SeaError::InvalidParameters(format!("a = {a}, b = {b} must be finite")));
        }
        let p = Self { a, b };
        check_spectrum(&p.eigenvalues(), "example2")?;
        Ok(p)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `4λ₁ = 1+a−b`, `12λ₂ = 3−a−5b`, `12λ₃ = 3+5a+b`, `12λ₄ = 3−7a+7b`
    pub fn eigenvalues(&self) -> [f64; 4] {
        let (a, b) = (self.a, self.b);
        [(1.0 + a - b) / 4.0, (3.0 - a - 5.0 * b) / 12.0, (3.0 + 5.0 * a + b) / 12.0, (3.0 - 7.0 * a + 7.0 * b) / 12.0]
    }

    /// Spectrum of the partial transpose on either qubit.
    pub fn partial_transpose_eigenvalues(&self) -> [f64; 4] {
        let (a, b) = (self.a, self.b);
        let d = 25.0 * a * a - 14.0 * a * b + 25.0 * b * b;
        let s = d.sqrt();
        [
            (3.0 + a - b) / 12.0,
            (3.0 - 5.0 * a + 5.0 * b) / 12.0,
            (3.0 + 2.0 * a - 2.0 * b + s) / 12.0,
            (3.0 + 2.0 * a - 2.0 * b - s) / 12.0,
        ]
    }

    /// `(f, g, h)` with weights `(3,−5,5,−3)`, `(3,5,−5,−3)`, `(1,−1,−1,1)`.
    pub fn fgh(&self, eps_bln: f64) -> (f64, f64, f64) {
        let l = self.eigenvalues().map(|x| bln(x, eps_bln));
        (
            3.0 * l[0] - 5.0 * l[1] + 5.0 * l[2] - 3.0 * l[3],
            3.0 * l[0] + 5.0 * l[1] - 5.0 * l[2] - 3.0 * l[3],
            l[0] - l[1] - l[2] + l[3],
        )
    }

    pub fn pauli(&self) -> PauliState2Q {
        let (a, b) = (self.a / SQRT_2, self.b / SQRT_2);
        let c = 2.0 * (self.a - self.b) / 3.0;
        PauliState2Q { a: [a, 0.0, a], b: [b, 0.0, b], c: [c; 3] }
    }
}

pub fn example2_state(p: &Example2Params) -> DensityMatrix {
    assemble_pauli_state(&p.pauli()).expect("validated parameters give a state")
}

/// `[{D^A, ρ_A}, {D^B, ρ_B}]`
pub fn example2_dissipators(p: &Example2Params, eps_bln: f64) -> [CMat; 2] {
    let (a, b) = (p.a, p.b);
    let (f, g, h) = p.fgh(eps_bln);
    let ka = SQRT_2 * (1.0 - a * a) / (80.0 * (2.0 - a * a)) * (f - 5.0 * b * h);
    let kb = -SQRT_2 * (1.0 - b * b) / (80.0 * (2.0 - b * b)) * (g + 5.0 * a * h);
    [pauli::x().scale(ka), pauli::x().scale(kb)]
}

/// Sign of the smallest analytic partial-transpose eigenvalue, with a
/// tolerance so that the separable boundary itself counts as separable.
pub fn example2_entanglement(p: &Example2Params, tol: f64) -> Entanglement {
    let min = p.partial_transpose_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
    if min < -tol {
        Entanglement::Entangled
    } else {
        Entanglement::Separable
    }
}

/// PPT test on a two-qubit state computed from the numerical partial transpose.
pub fn ppt_classification(rho: &DensityMatrix, tol: f64) -> Result<(Entanglement, f64)> {
    let structure = CompositeStructure::qubits(2);
    structure.check_operator(rho.matrix())?;
    let pt = partial_transpose(rho.matrix(), &structure, 1)?;
    let min = eigenvalues(&pt)?[0];
    let class = if min < -tol { Entanglement::Entangled } else { Entanglement::Separable };
    Ok((class, min))
}

/// `4λ = 1−c_x−c_y−c_z, 1−c_x+c_y+c_z, 1+c_x−c_y+c_z, 1+c_x+c_y−c_z`
pub fn bell_diagonal_eigenvalues(c: [f64; 3]) -> [f64; 4] {
    let [x, y, z] = c;
    [(1.0 - x - y - z) / 4.0, (1.0 - x + y + z) / 4.0, (1.0 + x - y + z) / 4.0, (1.0 + x + y - z) / 4.0]
}

pub fn bell_diagonal(c: [f64; 3]) -> Result<DensityMatrix> {
    if c.iter().any(|x| !x.is_finite()) {
        return Err(SeaError::InvalidParameters(format!("correlation vector {c:?} is not finite")));
    }
    check_spectrum(&bell_diagonal_eigenvalues(c), "bell_diagonal")?;
    assemble_pauli_state(&PauliState2Q { a: [0.0; 3], b: [0.0; 3], c })
}

/// Werner family `c_j = 4w/3 − 1`, valid for `w ∈ [0, 1]`.
pub fn werner(w: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&w) {
        return Err(SeaError::InvalidParameters(format!("werner weight {w} outside [0, 1]")));
    }
    bell_diagonal([4.0 * w / 3.0 - 1.0; 3])
}

fn check_spectrum(eigs: &[f64; 4], family: &str) -> Result<()> {
    match eigs.iter().copied().find(|&x| x < 0.0) {
        Some(neg) => Err(SeaError::InvalidParameters(format!("{family}: eigenvalue {neg:.6} is negative"))),
        None => Ok(()),
    }
}
