//! Time integration of the SEA equation of motion with trajectory monitors.
//!
//! By default the state is propagated in the interaction frame of the full
//! Hamiltonian, `ρ̃ = U(t)† ρ U(t)` with `U(t) = exp(−iHt/ħ)` evaluated exactly
//! from the spectrum of `H`. Only the dissipative part is then integrated
//! numerically:
//!
//! ```text
//! dρ̃/dt = U† 𝒟(U ρ̃ U†) U
//! ```
//!
//! which keeps nondissipative limit cycles (pure and Bell-diagonal states)
//! stationary in the integrated variable. Lab-frame stepping is available via
//! [`Frame::Lab`].

use serde::{Deserialize, Serialize};

use crate::composite::{bloch_vector, marginal};
use crate::error::{Result, SeaError};
use crate::linalg::{commutator, entropy_of_spectrum, herm_eig, project_to_state, CMat, DensityMatrix, C64, CLIP_TOL};
use crate::sea::SeaSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    /// Adaptive Dormand–Prince 5(4).
    Dp45,
    /// Classical fourth-order Runge–Kutta with constant `dt_initial`.
    Rk4Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Interaction,
    Lab,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt_initial: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_final: f64,
    /// Accepted steps between projections onto the state space.
    pub projection_interval: usize,
    /// Default threshold for [`detect_fixed_point`].
    pub fixed_point_tol: f64,
    pub stepper: Stepper,
    pub frame: Frame,
    pub dt_max: f64,
    pub dt_min: f64,
    pub max_steps: usize,
    /// Accepted steps between stored states (monitors are kept at every step).
    pub store_stride: usize,
    pub clip_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt_initial: 1e-2,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            t_final: 50.0,
            projection_interval: 1,
            fixed_point_tol: 1e-8,
            stepper: Stepper::Dp45,
            frame: Frame::Interaction,
            dt_max: 0.5,
            dt_min: 1e-12,
            max_steps: 1_000_000,
            store_stride: 1,
            clip_tol: CLIP_TOL,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_initial", self.dt_initial),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("fixed_point_tol", self.fixed_point_tol),
            ("dt_max", self.dt_max),
            ("dt_min", self.dt_min),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(SeaError::InvalidParameters(format!("{name} = {value} must be positive")));
            }
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(SeaError::InvalidParameters(format!("t_final = {} must be non-negative", self.t_final)));
        }
        if !(self.clip_tol.is_finite() && self.clip_tol >= 0.0) {
            return Err(SeaError::InvalidParameters(format!("clip_tol = {} must be non-negative", self.clip_tol)));
        }
        for (name, value) in [
            ("projection_interval", self.projection_interval),
            ("max_steps", self.max_steps),
            ("store_stride", self.store_stride),
        ] {
            if value == 0 {
                return Err(SeaError::InvalidParameters(format!("{name} must be at least 1")));
            }
        }
        if self.dt_min > self.dt_max {
            return Err(SeaError::InvalidParameters("dt_min exceeds dt_max".into()));
        }
        Ok(())
    }
}

/// Monitors recorded at one accepted step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    /// Trace of the stepped state before projection.
    pub trace: f64,
    /// `s(ρ) = −k_B Tr ρ ln ρ`
    pub entropy: f64,
    /// `Tr(ρH)`
    pub energy: f64,
    /// `Tr(ρ_J H_J)` per subsystem.
    pub local_energies: Vec<f64>,
    pub entropy_production: f64,
    /// `‖{D^J, ρ_J}‖_F` per subsystem.
    pub dissipator_norms: Vec<f64>,
    /// Bloch vector of each qubit subsystem (`None` for other dimensions).
    pub bloch: Vec<Option<[f64; 3]>>,
    /// `Σ_J s(ρ_J) − s(ρ)`
    pub mutual_information: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub purity: f64,
    /// `‖[H, ρ]‖_F`
    pub commutator_norm: f64,
    /// Frobenius norm of the full right-hand side.
    pub rhs_norm: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// `(t, ρ(t))` every `store_stride` accepted steps, plus the endpoints.
    pub states: Vec<(f64, DensityMatrix)>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        &self.states.last().expect("trajectory holds the initial state").1
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory holds the initial sample")
    }

    /// Largest `|Tr ρ(t) − Tr ρ(0)|` over all samples.
    pub fn max_trace_drift(&self) -> f64 {
        let t0 = self.first().trace;
        self.samples.iter().map(|s| (s.trace - t0).abs()).fold(0.0, f64::max)
    }

    /// Largest `|Tr ρ(t)H − Tr ρ(0)H|` over all samples.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.first().energy;
        self.samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max)
    }

    /// Largest entropy decrease between consecutive samples (0 if monotone).
    pub fn max_entropy_decrease(&self) -> f64 {
        self.samples.windows(2).map(|w| w[0].entropy - w[1].entropy).fold(0.0, f64::max)
    }

    pub fn max_dissipator_norm(&self) -> f64 {
        self.samples.iter().flat_map(|s| s.dissipator_norms.iter().copied()).fold(0.0, f64::max)
    }

    /// Earliest time after which every dissipator norm stays below `tol`.
    pub fn settling_time(&self, tol: f64) -> Option<f64> {
        let below = |s: &Sample| s.dissipator_norms.iter().all(|&n| n < tol);
        if !below(self.last()) {
            return None;
        }
        let idx = self.samples.iter().rposition(|s| !below(s)).map_or(0, |i| i + 1);
        Some(self.samples[idx].t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    DissipativeTransient,
    NondissipativeLimitCycle,
    Stationary,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DissipativeTransient => "dissipative-transient",
            Self::NondissipativeLimitCycle => "nondissipative-limit-cycle",
            Self::Stationary => "stationary",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies the trailing tenth (in time) of a trajectory.
pub fn detect_fixed_point(traj: &Trajectory, tol: f64) -> Result<Classification> {
    classify_samples(&traj.samples, tol)
}

/// [`detect_fixed_point`] on an arbitrary run of samples, e.g. a prefix.
pub fn classify_samples(samples: &[Sample], tol: f64) -> Result<Classification> {
    if samples.len() < 2 {
        return Err(SeaError::Precondition(format!("{} samples; at least 2 required", samples.len())));
    }
    let (t0, t1) = (samples[0].t, samples[samples.len() - 1].t);
    let start = t1 - 0.1 * (t1 - t0);
    let mut first = samples.iter().position(|s| s.t >= start).unwrap_or(0);
    first = first.min(samples.len() - 2);
    let window = &samples[first..];
    if window.iter().all(|s| s.rhs_norm < tol) {
        return Ok(Classification::Stationary);
    }
    let quiet = window.iter().all(|s| s.dissipator_norms.iter().all(|&n| n < tol));
    if quiet && window.iter().all(|s| s.commutator_norm >= tol) {
        Ok(Classification::NondissipativeLimitCycle)
    } else {
        Ok(Classification::DissipativeTransient)
    }
}

/// `U(t) = exp(−iHt/ħ)` from a fixed eigendecomposition.
struct Propagator {
    vectors: CMat,
    energies: Vec<f64>,
    hbar: f64,
}

impl Propagator {
    fn new(h: &CMat, hbar: f64) -> Result<Self> {
        let eig = herm_eig(h)?;
        Ok(Self { vectors: eig.eigenvectors, energies: eig.eigenvalues.iter().copied().collect(), hbar })
    }

    fn at(&self, t: f64) -> CMat {
        let mut scaled = self.vectors.clone();
        for (j, e) in self.energies.iter().enumerate() {
            let phase = C64::from_polar(1.0, -e * t / self.hbar);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= phase;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// The integrated vector field in the chosen frame.
struct Flow<'a> {
    sys: &'a SeaSystem,
    propagator: Option<Propagator>,
    evaluations: usize,
}

impl<'a> Flow<'a> {
    fn new(sys: &'a SeaSystem, frame: Frame) -> Result<Self> {
        let propagator = match frame {
            Frame::Interaction => Some(Propagator::new(sys.model().hamiltonian(), sys.params().hbar)?),
            Frame::Lab => None,
        };
        Ok(Self { sys, propagator, evaluations: 0 })
    }

    fn eval(&mut self, t: f64, y: &CMat) -> Result<CMat> {
        self.evaluations += 1;
        match &self.propagator {
            None => Ok(self.sys.hamiltonian_rhs(y) + self.sys.dissipative_rhs_raw(y)?),
            Some(p) => {
                let u = p.at(t);
                let lab = &u * y * u.adjoint();
                let d = self.sys.dissipative_rhs_raw(&lab)?;
                Ok(u.adjoint() * d * u)
            }
        }
    }

    fn to_lab(&self, t: f64, y: &CMat) -> CMat {
        match &self.propagator {
            None => y.clone(),
            Some(p) => {
                let u = p.at(t);
                &u * y * u.adjoint()
            }
        }
    }
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step; returns the fifth-order solution and the scaled error norm.
fn dp45_step(flow: &mut Flow<'_>, t: f64, y: &CMat, dt: f64, cfg: &IntegratorConfig) -> Result<(CMat, f64)> {
    let mut k: Vec<CMat> = Vec::with_capacity(7);
    let mut y_new = y.clone();
    for stage in 0..7 {
        let mut ys = y.clone();
        for (j, kj) in k.iter().enumerate() {
            let a = DP_A[stage][j];
            if a != 0.0 {
                ys += kj * C64::new(a * dt, 0.0);
            }
        }
        if stage == 6 {
            y_new = ys.clone();
        }
        k.push(flow.eval(t + DP_C[stage] * dt, &ys)?);
    }
    let mut err = y.clone() * C64::new(0.0, 0.0);
    for (e, kj) in DP_E.iter().zip(&k) {
        if *e != 0.0 {
            err += kj * C64::new(e * dt, 0.0);
        }
    }
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y.iter().zip(y_new.iter()))
        .map(|(e, (a, b))| {
            let scale = cfg.abs_tol + cfg.rel_tol * a.norm().max(b.norm());
            (e.norm() / scale).powi(2)
        })
        .sum();
    Ok((y_new, (sum / n).sqrt()))
}

fn rk4_step(flow: &mut Flow<'_>, t: f64, y: &CMat, dt: f64) -> Result<CMat> {
    let h = C64::new(dt, 0.0);
    let half = C64::new(dt / 2.0, 0.0);
    let k1 = flow.eval(t, y)?;
    let k2 = flow.eval(t + dt / 2.0, &(y + &k1 * half))?;
    let k3 = flow.eval(t + dt / 2.0, &(y + &k2 * half))?;
    let k4 = flow.eval(t + dt, &(y + &k3 * h))?;
    Ok(y + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0))
}

/// Evaluates every monitor at a (valid) state.
pub fn sample(sys: &SeaSystem, t: f64, rho: &DensityMatrix, trace: f64) -> Result<Sample> {
    let model = sys.model();
    let structure = model.structure();
    let params = sys.params();
    let kb = params.boltzmann;
    let h = model.hamiltonian();
    let spectrum = rho.spectrum();
    let entropy = kb * entropy_of_spectrum(&spectrum, params.eps_bln);
    let mut local_energies = Vec::with_capacity(structure.count());
    let mut bloch = Vec::with_capacity(structure.count());
    let mut local_entropy = 0.0;
    for j in 0..structure.count() {
        let rho_j = marginal(rho.matrix(), j, structure)?;
        local_energies.push(crate::linalg::trace_product(&rho_j, model.local_hamiltonian(j)).re);
        bloch.push(structure.is_qubit(j).then(|| bloch_vector(&rho_j)));
        let local_spectrum = crate::linalg::eigenvalues(&crate::linalg::hermitian_part(&rho_j))?;
        local_entropy += kb * entropy_of_spectrum(&local_spectrum, params.eps_bln);
    }
    let dissipators = sys.dissipators(rho)?;
    let ep = sys.entropy_production(rho)?;
    let rhs = sys.rhs(rho)?;
    Ok(Sample {
        t,
        trace,
        entropy,
        energy: rho.expectation(h),
        local_energies,
        entropy_production: ep.total,
        dissipator_norms: dissipators.iter().map(|d| d.anticommutator.norm()).collect(),
        bloch,
        mutual_information: local_entropy - entropy,
        min_eigenvalue: spectrum[0],
        max_eigenvalue: spectrum[spectrum.len() - 1],
        purity: rho.purity(),
        commutator_norm: commutator(h, rho.matrix()).norm(),
        rhs_norm: rhs.norm(),
    })
}

/// Integrates `ρ0` to `config.t_final`.
pub fn evolve(rho0: &DensityMatrix, sys: &SeaSystem, config: &IntegratorConfig) -> Result<Trajectory> {
    config.validate()?;
    sys.model().structure().check_operator(rho0.matrix())?;
    let mut flow = Flow::new(sys, config.frame)?;
    let mut traj = Trajectory {
        samples: vec![sample(sys, 0.0, rho0, rho0.matrix().trace().re)?],
        states: vec![(0.0, rho0.clone())],
        accepted_steps: 0,
        rejected_steps: 0,
        rhs_evaluations: 0,
    };
    let mut t = 0.0;
    let mut y = rho0.matrix().clone();
    let mut dt = config.dt_initial.min(config.dt_max);
    let mut since_projection = 0;
    let mut last_stored = 0;

    while t < config.t_final {
        if traj.accepted_steps >= config.max_steps {
            return Err(SeaError::MaxStepsExceeded { t, max_steps: config.max_steps });
        }
        let remaining = config.t_final - t;
        let final_step = dt >= remaining * (1.0 - 1e-12);
        let h = if final_step { remaining } else { dt };

        let (candidate, factor) = match config.stepper {
            Stepper::Rk4Fixed => (rk4_step(&mut flow, t, &y, h)?, 1.0),
            Stepper::Dp45 => {
                let (y_new, err) = dp45_step(&mut flow, t, &y, h, config)?;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !(err <= 1.0) {
                    traj.rejected_steps += 1;
                    dt = h * factor.min(0.9);
                    if dt < config.dt_min {
                        return Err(SeaError::StepSizeUnderflow { t, dt });
                    }
                    continue;
                }
                (y_new, factor)
            }
        };

        let t_new = if final_step { config.t_final } else { t + h };
        let trace = candidate.trace().re;
        since_projection += 1;
        let stepped = if since_projection >= config.projection_interval {
            match project_to_state(&candidate, config.clip_tol) {
                Ok(p) => {
                    since_projection = 0;
                    p.into_matrix()
                }
                Err(e @ SeaError::PositivityBlowUp { .. }) if config.stepper == Stepper::Dp45 => {
                    // Overshoot through a small eigenvalue: retry with a shorter step.
                    traj.rejected_steps += 1;
                    since_projection -= 1;
                    dt = h * 0.5;
                    if dt < config.dt_min {
                        return Err(e);
                    }
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else {
            candidate
        };

        t = t_new;
        y = stepped;
        traj.accepted_steps += 1;
        let lab = flow.to_lab(t, &y);
        let rho = project_to_state(&lab, config.clip_tol)?;
        traj.samples.push(sample(sys, t, &rho, trace)?);
        if traj.accepted_steps - last_stored >= config.store_stride || t >= config.t_final {
            traj.states.push((t, rho));
            last_stored = traj.accepted_steps;
        }
        if config.stepper == Stepper::Dp45 {
            dt = (h * factor).min(config.dt_max);
        }
    }
    traj.rhs_evaluations = flow.evaluations;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::CompositeModel;
    use crate::linalg::trace_product;
    use crate::random::{random_density, random_hermitian_with, rng_from_seed};
    use crate::sea::SeaParams;

    fn sigma_z_system() -> SeaSystem {
        SeaSystem::new(CompositeModel::two_qubit_sigma_z(), SeaParams::uniform(2, 1.0)).unwrap()
    }

    #[test]
    fn propagator_is_unitary_exponential() {
        let mut rng = rng_from_seed(3);
        let h = random_hermitian_with(4, &mut rng);
        let p = Propagator::new(&h, 1.0).unwrap();
        let u = p.at(0.7);
        assert!(crate::linalg::unitarity_residual(&u) < 1e-12);
        // dU/dt = −iHU
        let eps = 1e-6;
        let du = (p.at(0.7 + eps) - p.at(0.7 - eps)) / C64::new(2.0 * eps, 0.0);
        assert!((du - &h * &u * C64::new(0.0, -1.0)).norm() < 1e-8);
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        let bad = IntegratorConfig { dt_initial: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig { projection_interval: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn frames_agree() {
        let sys = sigma_z_system();
        let rho0 = random_density(4, 4, 11).unwrap();
        let base = IntegratorConfig { t_final: 2.0, ..Default::default() };
        let a = evolve(&rho0, &sys, &base).unwrap();
        let b = evolve(&rho0, &sys, &IntegratorConfig { frame: Frame::Lab, ..base.clone() }).unwrap();
        let c = evolve(&rho0, &sys, &IntegratorConfig { stepper: Stepper::Rk4Fixed, ..base }).unwrap();
        let fa = a.final_state().matrix();
        assert!((fa - b.final_state().matrix()).norm() < 1e-8);
        assert!((fa - c.final_state().matrix()).norm() < 1e-7);
    }

    #[test]
    fn maximally_mixed_is_stationary() {
        let sys = sigma_z_system();
        let cfg = IntegratorConfig { t_final: 1.0, ..Default::default() };
        let traj = evolve(&DensityMatrix::maximally_mixed(4), &sys, &cfg).unwrap();
        assert_eq!(detect_fixed_point(&traj, 1e-8).unwrap(), Classification::Stationary);
    }

    #[test]
    fn conservation_and_monotone_entropy() {
        let sys = sigma_z_system();
        let rho0 = random_density(4, 4, 12).unwrap();
        let traj = evolve(&rho0, &sys, &IntegratorConfig { t_final: 5.0, ..Default::default() }).unwrap();
        assert!(traj.max_trace_drift() < 1e-10);
        assert!(traj.max_energy_drift() < 1e-8);
        assert!(traj.max_entropy_decrease() < 1e-9);
        assert!(traj.last().entropy > traj.first().entropy);
        let h = sys.model().hamiltonian();
        let e0 = trace_product(rho0.matrix(), h).re;
        assert!((traj.final_state().expectation(h) - e0).abs() < 1e-8);
    }

    #[test]
    fn short_trajectory_classification_requires_two_samples() {
        assert!(classify_samples(&[], 1e-8).is_err());
    }
}
