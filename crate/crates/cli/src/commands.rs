use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use sea_core::integrator::{detect_fixed_point, Sample};
use sea_core::linalg::{pauli, DensityMatrix};
use sea_core::nosignal::{
    certify_remote_interaction_invariance, certify_unitary_invariance, matrix_rows, CertificationOptions,
    CertificationReport, LocalDynamics, SignalingMutant,
};
use sea_core::{evolve, Classification, CompositeStructure, SeaSystem};

use crate::config::{build_hamiltonian, NosignalConfig, RunConfig, Scenario};
use crate::error::{CliError, CliResult};
use crate::json::{self, fmt_f64};

type Rows = Vec<Vec<[f64; 2]>>;

/// Column layout of `trajectory.csv`; `<j>` runs over subsystems, Bloch columns over qubits only.
pub const TRAJECTORY_COLUMNS: &[&str] = &[
    "t",
    "trace",
    "entropy",
    "energy",
    "energy_<j>",
    "entropy_production",
    "dissipator_norm_<j>",
    "bloch_<j>_x",
    "bloch_<j>_y",
    "bloch_<j>_z",
    "mutual_information",
    "min_eigenvalue",
    "max_eigenvalue",
    "purity",
    "commutator_norm",
    "rhs_norm",
];

/// Expands [`TRAJECTORY_COLUMNS`] for a concrete structure.
pub fn trajectory_header(s: &CompositeStructure) -> Vec<String> {
    let mut out = Vec::new();
    for col in TRAJECTORY_COLUMNS {
        if !col.contains("<j>") {
            out.push(col.to_string());
            continue;
        }
        for j in 0..s.count() {
            if col.starts_with("bloch") && !s.is_qubit(j) {
                continue;
            }
            out.push(col.replace("<j>", &j.to_string()));
        }
    }
    out
}

fn trajectory_row(s: &CompositeStructure, sample: &Sample) -> Vec<String> {
    let mut row = vec![fmt_f64(sample.t), fmt_f64(sample.trace), fmt_f64(sample.entropy), fmt_f64(sample.energy)];
    row.extend(sample.local_energies.iter().map(|&x| fmt_f64(x)));
    row.push(fmt_f64(sample.entropy_production));
    row.extend(sample.dissipator_norms.iter().map(|&x| fmt_f64(x)));
    for axis in 0..3 {
        for j in 0..s.count() {
            if let Some(b) = sample.bloch[j] {
                row.push(fmt_f64(b[axis]));
            }
        }
    }
    for x in [
        sample.mutual_information,
        sample.min_eigenvalue,
        sample.max_eigenvalue,
        sample.purity,
        sample.commutator_norm,
        sample.rhs_norm,
    ] {
        row.push(fmt_f64(x));
    }
    row
}

pub fn write_csv<W: std::io::Write>(out: W, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Numeric(format!("writing CSV: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io("writing CSV", e))
}

pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(&dir.display().to_string(), e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    info!("wrote {}", path.display());
    Ok(path)
}

#[derive(Serialize)]
struct StateSnapshot {
    t: f64,
    entropy: f64,
    energy: f64,
    purity: f64,
    mutual_information: f64,
    spectrum: Vec<f64>,
    state: Rows,
}

impl StateSnapshot {
    fn new(sample: &Sample, rho: &DensityMatrix) -> Self {
        Self {
            t: sample.t,
            entropy: sample.entropy,
            energy: sample.energy,
            purity: sample.purity,
            mutual_information: sample.mutual_information,
            spectrum: rho.spectrum(),
            state: matrix_rows(rho.matrix()),
        }
    }
}

#[derive(Serialize)]
struct EvolveSummary {
    schema: &'static str,
    dims: Vec<usize>,
    t_final: f64,
    classification: Classification,
    accepted_steps: usize,
    rejected_steps: usize,
    rhs_evaluations: usize,
    samples: usize,
    max_trace_drift: f64,
    max_energy_drift: f64,
    max_entropy_decrease: f64,
    max_dissipator_norm: f64,
    /// First time after which every dissipator norm stays below `fixed_point_tol`.
    settling_time: Option<f64>,
    initial: StateSnapshot,
    #[serde(rename = "final")]
    last: StateSnapshot,
}

pub fn cmd_evolve(cfg: &RunConfig, out: Option<&Path>) -> CliResult<i32> {
    cfg.validate()?;
    let system = cfg.system()?;
    let rho0 = cfg.initial_state()?;
    let icfg = cfg.integrator()?;
    let s = system.model().structure().clone();
    info!("evolving {:?} to t = {}", s.dims(), icfg.t_final);
    let traj = evolve(&rho0, &system, &icfg).map_err(CliError::run)?;
    let classification = detect_fixed_point(&traj, icfg.fixed_point_tol).map_err(CliError::run)?;
    let summary = EvolveSummary {
        schema: crate::config::SCHEMA,
        dims: s.dims().to_vec(),
        t_final: icfg.t_final,
        classification,
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        rhs_evaluations: traj.rhs_evaluations,
        samples: traj.samples.len(),
        max_trace_drift: traj.max_trace_drift(),
        max_energy_drift: traj.max_energy_drift(),
        max_entropy_decrease: traj.max_entropy_decrease(),
        max_dissipator_norm: traj.max_dissipator_norm(),
        settling_time: traj.settling_time(icfg.fixed_point_tol),
        initial: StateSnapshot::new(traj.first(), &rho0),
        last: StateSnapshot::new(traj.last(), traj.final_state()),
    };
    let text = json::to_string(&summary);
    if let Some(dir) = out.or(cfg.output.dir.as_deref()) {
        let stride = cfg.output.sample_stride.max(1);
        let n = traj.samples.len();
        let rows: Vec<Vec<String>> = traj
            .samples
            .iter()
            .enumerate()
            .filter(|(k, _)| k % stride == 0 || *k + 1 == n)
            .map(|(_, sample)| trajectory_row(&s, sample))
            .collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &trajectory_header(&s), &rows)?;
        write_file(dir, "trajectory.csv", &buf)?;
        write_file(dir, "summary.json", text.as_bytes())?;
        if cfg.output.states {
            let states: Vec<(f64, Rows)> = traj.states.iter().map(|(t, rho)| (*t, matrix_rows(rho.matrix()))).collect();
            write_file(dir, "states.json", json::to_string(&states).as_bytes())?;
        }
    }
    print!("{text}");
    Ok(0)
}

#[derive(Serialize)]
struct SubsystemDissipator {
    subsystem: usize,
    dissipator: Rows,
    anticommutator: Rows,
    /// `{D, ρ_J}` in the basis `I, σ_x, σ_y, σ_z` (qubits only).
    anticommutator_pauli: Option<[f64; 4]>,
    multipliers: Vec<f64>,
    gram_condition: f64,
    gram_rank: usize,
    /// Dissipator from the closed two-constraint form, when it applies.
    compact: Option<Rows>,
    compact_residual: Option<f64>,
    compact_error: Option<String>,
}

#[derive(Serialize)]
struct EntropyProductionReport {
    total: f64,
    per_subsystem: Vec<f64>,
    gram_total: f64,
    gram_per_subsystem: Vec<f64>,
    form_residual: f64,
}

#[derive(Serialize)]
struct DissipatorReport {
    schema: &'static str,
    dims: Vec<usize>,
    spectrum: Vec<f64>,
    entropy: f64,
    entropy_production: EntropyProductionReport,
    subsystems: Vec<SubsystemDissipator>,
}

pub fn cmd_dissipator(cfg: &RunConfig, out: Option<&Path>) -> CliResult<i32> {
    cfg.validate()?;
    let system = cfg.system()?;
    let rho = cfg.initial_state()?;
    let s = system.model().structure().clone();
    let mut subsystems = Vec::with_capacity(s.count());
    for d in system.dissipators(&rho).map_err(CliError::run)? {
        let j = d.subsystem;
        let (compact, compact_residual, compact_error) = match system.dissipator_compact(&rho, j) {
            Ok(m) => {
                let residual = (&m - &d.operator).norm();
                (Some(matrix_rows(&m)), Some(residual), None)
            }
            Err(e) => (None, None, Some(e.to_string())),
        };
        subsystems.push(SubsystemDissipator {
            subsystem: j,
            dissipator: matrix_rows(&d.operator),
            anticommutator_pauli: s.is_qubit(j).then(|| pauli::decompose(&d.anticommutator)),
            anticommutator: matrix_rows(&d.anticommutator),
            multipliers: d.multipliers,
            gram_condition: d.gram_condition,
            gram_rank: d.gram_rank,
            compact,
            compact_residual,
            compact_error,
        });
    }
    let ep = system.entropy_production(&rho).map_err(CliError::run)?;
    let report = DissipatorReport {
        schema: crate::config::SCHEMA,
        dims: s.dims().to_vec(),
        spectrum: rho.spectrum(),
        entropy: system.params().boltzmann * rho.entropy(),
        entropy_production: EntropyProductionReport {
            form_residual: (ep.total - ep.gram_total).abs(),
            total: ep.total,
            per_subsystem: ep.per_subsystem,
            gram_total: ep.gram_total,
            gram_per_subsystem: ep.gram_per_subsystem,
        },
        subsystems,
    };
    let text = json::to_string(&report);
    if let Some(dir) = out.or(cfg.output.dir.as_deref()) {
        write_file(dir, "dissipator.json", text.as_bytes())?;
    }
    print!("{text}");
    Ok(0)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NosignalOverrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub mutant: bool,
}

pub fn cmd_nosignal(cfg: &RunConfig, overrides: NosignalOverrides, out: Option<&Path>) -> CliResult<i32> {
    let mut cfg = cfg.clone();
    let ns = cfg.nosignal.get_or_insert(NosignalConfig {
        scenario: Scenario::UnitaryInvariance,
        subsystem: 0,
        trials: 200,
        seed: 0,
        tolerance: sea_core::nosignal::CERTIFICATION_TOL,
        modified_hamiltonian: None,
        mutant_strength: 0.5,
    });
    if let Some(t) = overrides.trials {
        ns.trials = t;
    }
    if let Some(seed) = overrides.seed {
        ns.seed = seed;
    }
    let ns = ns.clone();
    cfg.validate()?;
    let system = cfg.system()?;
    let opts = CertificationOptions { trials: ns.trials, seed: ns.seed, tolerance: ns.tolerance, identity_unitary: false };
    let modified = match ns.scenario {
        Scenario::UnitaryInvariance => None,
        Scenario::RemoteInteraction => {
            let Some(h) = &ns.modified_hamiltonian else {
                return Err(CliError::config("nosignal.modified_hamiltonian", "required by the remote_interaction scenario"));
            };
            let spec = build_hamiltonian(h, system.model().structure(), "nosignal.modified_hamiltonian")?;
            let model = system.model().with_spec(spec).map_err(|e| CliError::config("nosignal.modified_hamiltonian", e))?;
            Some(system.with_model(model).map_err(|e| CliError::config("nosignal.modified_hamiltonian", e))?)
        }
    };
    info!("certifying {:?} on subsystem {} with {} trials (seed {})", ns.scenario, ns.subsystem, ns.trials, ns.seed);
    let report = if overrides.mutant {
        let wrap = |sys: SeaSystem| SignalingMutant::new(sys, ns.mutant_strength);
        certify(&wrap(system.clone()), modified.map(wrap).as_ref(), ns.subsystem, system.params().eps_bln, &opts)
    } else {
        certify(&system, modified.as_ref(), ns.subsystem, system.params().eps_bln, &opts)
    }
    .map_err(CliError::run)?;
    for w in &report.witnesses {
        warn!("witness: trial {} (seed {}) check {} deviation {:.3e}", w.trial, w.seed, w.check, w.deviation);
    }
    let text = json::to_string(&report);
    if let Some(dir) = out.or(cfg.output.dir.as_deref()) {
        write_file(dir, "nosignal.json", text.as_bytes())?;
    }
    print!("{text}");
    Ok(if report.pass { 0 } else { 1 })
}

fn certify<D: LocalDynamics>(
    base: &D,
    modified: Option<&D>,
    j: usize,
    eps_bln: f64,
    opts: &CertificationOptions,
) -> sea_core::Result<CertificationReport> {
    match modified {
        None => certify_unitary_invariance(base, j, eps_bln, opts),
        Some(m) => certify_remote_interaction_invariance(base, m, j, opts),
    }
}
