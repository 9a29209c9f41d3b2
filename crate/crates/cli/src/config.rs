//! Run configuration: JSON schema, validation and model construction.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use sea_core::composite::{assemble_pauli_state, CompositeStructure, HamiltonianSpec};
use sea_core::linalg::{c, ensure_hermitian, identity, pauli, tensor_all, CMat, DensityMatrix, C64, EPS_BLN};
use sea_core::oracles::{bell_diagonal, example1_state, example2_state, werner, Example1Params, Example2Params};
use sea_core::random::random_density;
use sea_core::{CompositeModel, IntegratorConfig, PauliState2Q, SeaParams, SeaSystem};

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "sea-dyn/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub structure: StructureConfig,
    pub hamiltonian: HamiltonianConfig,
    pub initial_state: StateConfig,
    #[serde(default)]
    pub sea: SeaConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nosignal: Option<NosignalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    /// One operator per subsystem, acting on that factor alone.
    pub locals: Vec<OperatorSpec>,
    /// Operator on the full space.
    #[serde(default)]
    pub interaction: OperatorSpec,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub interaction_scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Identity,
    SigmaX,
    SigmaY,
    SigmaZ,
    /// `diag(0, 1, …, d−1)`
    Number,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliTerm {
    /// One of `i`, `x`, `y`, `z` per qubit, subsystem 0 first.
    pub string: String,
    pub coefficient: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    #[default]
    Zero,
    Generator {
        name: Generator,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Rows of `[re, im]` pairs.
    Matrix(Vec<Vec<[f64; 2]>>),
    PauliStrings(Vec<PauliTerm>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    Example1 {
        a: f64,
        b: f64,
    },
    Example2 {
        a: f64,
        b: f64,
    },
    BellDiagonal {
        c: [f64; 3],
    },
    Werner {
        w: f64,
    },
    Pauli {
        #[serde(default)]
        a: [f64; 3],
        #[serde(default)]
        b: [f64; 3],
        #[serde(default)]
        c: [f64; 3],
    },
    Matrix {
        rows: Vec<Vec<[f64; 2]>>,
    },
    /// Normalized on input.
    Pure {
        amplitudes: Vec<[f64; 2]>,
    },
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank: Option<usize>,
        seed: u64,
    },
    MaximallyMixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeaConfig {
    /// Defaults to 1 for every subsystem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
    /// Full-space operators conserved in addition to `I` and `H`.
    pub extra_conserved: Vec<OperatorSpec>,
    pub gram_rcond: f64,
    pub eps_bln: f64,
    pub hbar: f64,
    pub boltzmann: f64,
}

impl Default for SeaConfig {
    fn default() -> Self {
        Self { tau: None, extra_conserved: Vec::new(), gram_rcond: 1e-10, eps_bln: EPS_BLN, hbar: 1.0, boltzmann: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for written files; `--out` overrides it. Nothing is written when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Keep every n-th trajectory sample in the CSV (the last one always).
    pub sample_stride: usize,
    /// Also write the stored states of `evolve` as JSON.
    pub states: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, sample_stride: 1, states: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Random local unitaries on the complement of the subsystem.
    UnitaryInvariance,
    /// Base model against `modified_hamiltonian`.
    RemoteInteraction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NosignalConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub subsystem: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_certification_tol")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modified_hamiltonian: Option<HamiltonianConfig>,
    /// Coupling of the signaling term added under `--mutant`.
    #[serde(default = "default_mutant_strength")]
    pub mutant_strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// One grid axis: the axis value `v` sets each named parameter to `k·v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub set: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<AxisConfig>,
    /// Integrate every grid point as well as evaluating its initial state.
    #[serde(default)]
    pub evolve: bool,
    /// Partial-transpose eigenvalues below `−ppt_tol` count as entangled.
    #[serde(default = "default_ppt_tol")]
    pub ppt_tol: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

fn default_trials() -> usize {
    200
}

fn default_certification_tol() -> f64 {
    sea_core::nosignal::CERTIFICATION_TOL
}

fn default_mutant_strength() -> f64 {
    0.5
}

fn default_ppt_tol() -> f64 {
    1e-12
}

impl AxisConfig {
    pub fn grid_values(&self, field: &str) -> CliResult<Vec<f64>> {
        if self.set.is_empty() {
            return Err(CliError::config(&format!("{field}.set"), "names no parameter"));
        }
        match (&self.values, &self.range) {
            (Some(v), None) => {
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return Err(CliError::config(&format!("{field}.values"), format!("{x} is not finite")));
                }
                Ok(v.clone())
            }
            (None, Some(r)) => r.values().map_err(|e| CliError::config(&format!("{field}.range"), e)),
            _ => Err(CliError::config(field, "exactly one of `values` and `range` is required")),
        }
    }
}

impl RangeSpec {
    /// Inclusive of `stop` up to a relative slack of 1e-9 steps.
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let RangeSpec { start, stop, step } = *self;
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err("start, stop and step must be finite".into());
        }
        if step == 0.0 || (stop - start) * step < 0.0 {
            return Err(format!("step {step} does not lead from {start} to {stop}"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| start + k as f64 * step).collect())
    }
}

impl RunConfig {
    /// Small two-qubit template used by `dump-config` without `--config`.
    pub fn template() -> Self {
        let sz = OperatorSpec::Generator { name: Generator::SigmaZ, scale: 1.0 };
        Self {
            schema: SCHEMA.into(),
            structure: StructureConfig { dims: vec![2, 2] },
            hamiltonian: HamiltonianConfig { locals: vec![sz.clone(), sz], interaction: OperatorSpec::Zero, interaction_scale: 1.0 },
            initial_state: StateConfig::Example1 { a: 0.5, b: 0.3 },
            sea: SeaConfig::default(),
            integrator: IntegratorConfig::default(),
            output: OutputConfig::default(),
            nosignal: None,
            sweep: None,
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { "config" } else { &path }, e.into_inner())
        })?;
        if cfg.schema != SCHEMA {
            return Err(CliError::config("schema", format!("unsupported schema {:?}, expected {SCHEMA:?}", cfg.schema)));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(&path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn structure(&self) -> CliResult<CompositeStructure> {
        CompositeStructure::new(self.structure.dims.clone()).map_err(|e| CliError::config("structure.dims", e))
    }

    pub fn model(&self) -> CliResult<CompositeModel> {
        let s = self.structure()?;
        let spec = build_hamiltonian(&self.hamiltonian, &s, "hamiltonian")?;
        CompositeModel::new(s, spec).map_err(|e| CliError::config("hamiltonian", e))
    }

    pub fn params(&self) -> CliResult<SeaParams> {
        let s = self.structure()?;
        let count = s.count();
        let sea = &self.sea;
        let tau = sea.tau.clone().unwrap_or_else(|| vec![1.0; count]);
        let mut extra = Vec::with_capacity(sea.extra_conserved.len());
        for (k, op) in sea.extra_conserved.iter().enumerate() {
            let field = format!("sea.extra_conserved[{k}]");
            let m = build_operator(op, s.dims(), &field)?;
            ensure_hermitian(&m).map_err(|e| CliError::config(&field, e))?;
            extra.push(m);
        }
        let params = SeaParams {
            tau,
            extra_conserved: extra,
            gram_rcond: sea.gram_rcond,
            eps_bln: sea.eps_bln,
            hbar: sea.hbar,
            boltzmann: sea.boltzmann,
        };
        params.validate(count).map_err(|e| CliError::config("sea", e))?;
        if !(params.eps_bln.is_finite() && params.eps_bln >= 0.0) {
            return Err(CliError::config("sea.eps_bln", "must be nonnegative"));
        }
        Ok(params)
    }

    pub fn system(&self) -> CliResult<SeaSystem> {
        SeaSystem::new(self.model()?, self.params()?).map_err(|e| CliError::config("sea", e))
    }

    pub fn initial_state(&self) -> CliResult<DensityMatrix> {
        let s = self.structure()?;
        build_state(&self.initial_state, &s)
    }

    pub fn integrator(&self) -> CliResult<IntegratorConfig> {
        self.integrator.validate().map_err(|e| CliError::config("integrator", e))?;
        Ok(self.integrator.clone())
    }

    /// Validates every section that a run would touch.
    pub fn validate(&self) -> CliResult<()> {
        self.system()?;
        self.initial_state()?;
        self.integrator()?;
        if self.output.sample_stride == 0 {
            return Err(CliError::config("output.sample_stride", "must be at least 1"));
        }
        if let Some(ns) = &self.nosignal {
            let s = self.structure()?;
            s.check_index(ns.subsystem).map_err(|e| CliError::config("nosignal.subsystem", e))?;
            if ns.trials == 0 {
                return Err(CliError::config("nosignal.trials", "must be at least 1"));
            }
            if !(ns.tolerance.is_finite() && ns.tolerance > 0.0) {
                return Err(CliError::config("nosignal.tolerance", "must be positive"));
            }
            if let Some(h) = &ns.modified_hamiltonian {
                build_hamiltonian(h, &s, "nosignal.modified_hamiltonian")?;
            }
        }
        if let Some(sweep) = &self.sweep {
            for (k, axis) in sweep.axes.iter().enumerate() {
                axis.grid_values(&format!("sweep.axes[{k}]"))?;
            }
        }
        Ok(())
    }

    /// Sets a named sweep parameter.
    pub fn set_parameter(&mut self, name: &str, value: f64) -> CliResult<()> {
        let field = format!("sweep parameter {name:?}");
        let bad = |what: &str| CliError::config(&field, what.to_string());
        match (name, &mut self.initial_state) {
            ("a", StateConfig::Example1 { a, .. } | StateConfig::Example2 { a, .. }) => *a = value,
            ("b", StateConfig::Example1 { b, .. } | StateConfig::Example2 { b, .. }) => *b = value,
            ("w", StateConfig::Werner { w }) => *w = value,
            ("c_x", StateConfig::BellDiagonal { c }) => c[0] = value,
            ("c_y", StateConfig::BellDiagonal { c }) => c[1] = value,
            ("c_z", StateConfig::BellDiagonal { c }) => c[2] = value,
            ("a" | "b" | "w" | "c_x" | "c_y" | "c_z", _) => return Err(bad("does not apply to the initial_state preset")),
            ("tau", _) => {
                let count = self.structure.dims.len();
                self.sea.tau = Some(vec![value; count]);
            }
            ("interaction_scale", _) => self.hamiltonian.interaction_scale = value,
            ("t_final", _) => self.integrator.t_final = value,
            _ => {
                let Some(j) = name.strip_prefix("tau_").and_then(|k| k.parse::<usize>().ok()) else {
                    return Err(bad("unknown parameter"));
                };
                let count = self.structure.dims.len();
                if j >= count {
                    return Err(bad("subsystem out of range"));
                }
                let tau = self.sea.tau.get_or_insert_with(|| vec![1.0; count]);
                if tau.len() != count {
                    return Err(CliError::config("sea.tau", format!("{} entries for {count} subsystems", tau.len())));
                }
                tau[j] = value;
            }
        }
        Ok(())
    }
}

pub fn build_hamiltonian(h: &HamiltonianConfig, s: &CompositeStructure, field: &str) -> CliResult<HamiltonianSpec> {
    if h.locals.len() != s.count() {
        return Err(CliError::config(
            &format!("{field}.locals"),
            format!("{} operators for {} subsystems", h.locals.len(), s.count()),
        ));
    }
    let mut locals = Vec::with_capacity(s.count());
    for (j, op) in h.locals.iter().enumerate() {
        let f = format!("{field}.locals[{j}]");
        let m = build_operator(op, &[s.dim(j)], &f)?;
        ensure_hermitian(&m).map_err(|e| CliError::config(&f, e))?;
        locals.push(m);
    }
    if !h.interaction_scale.is_finite() {
        return Err(CliError::config(&format!("{field}.interaction_scale"), "must be finite"));
    }
    let f = format!("{field}.interaction");
    let v = build_operator(&h.interaction, s.dims(), &f)?.scale(h.interaction_scale);
    ensure_hermitian(&v).map_err(|e| CliError::config(&f, e))?;
    HamiltonianSpec::new(locals, v, s).map_err(|e| CliError::config(field, e))
}

/// Operator on the product of `dims`.
pub fn build_operator(op: &OperatorSpec, dims: &[usize], field: &str) -> CliResult<CMat> {
    let n: usize = dims.iter().product();
    match op {
        OperatorSpec::Zero => Ok(CMat::zeros(n, n)),
        OperatorSpec::Generator { name, scale } => {
            if !scale.is_finite() {
                return Err(CliError::config(&format!("{field}.scale"), "must be finite"));
            }
            let m = match name {
                Generator::Identity => identity(n),
                Generator::Number => CMat::from_fn(n, n, |i, k| if i == k { c(i as f64, 0.0) } else { c(0.0, 0.0) }),
                Generator::SigmaX | Generator::SigmaY | Generator::SigmaZ => {
                    if n != 2 {
                        return Err(CliError::config(field, format!("{name:?} needs a qubit, dimension is {n}")));
                    }
                    match name {
                        Generator::SigmaX => pauli::x(),
                        Generator::SigmaY => pauli::y(),
                        _ => pauli::z(),
                    }
                }
            };
            Ok(m.scale(*scale))
        }
        OperatorSpec::Matrix(rows) => matrix_from_rows(rows, n, field),
        OperatorSpec::PauliStrings(terms) => {
            if dims.iter().any(|&d| d != 2) {
                return Err(CliError::config(field, "pauli_strings need every factor to be a qubit"));
            }
            let mut out = CMat::zeros(n, n);
            for (k, term) in terms.iter().enumerate() {
                let f = format!("{field}.pauli_strings[{k}]");
                if !term.coefficient.is_finite() {
                    return Err(CliError::config(&format!("{f}.coefficient"), "must be finite"));
                }
                let chars: Vec<char> = term.string.to_ascii_lowercase().chars().collect();
                if chars.len() != dims.len() {
                    return Err(CliError::config(
                        &format!("{f}.string"),
                        format!("{:?} has {} letters for {} qubits", term.string, chars.len(), dims.len()),
                    ));
                }
                let mut factors = Vec::with_capacity(chars.len());
                for ch in chars {
                    factors.push(match ch {
                        'i' => identity(2),
                        'x' => pauli::x(),
                        'y' => pauli::y(),
                        'z' => pauli::z(),
                        _ => return Err(CliError::config(&format!("{f}.string"), format!("letter {ch:?} is not one of i, x, y, z"))),
                    });
                }
                out += tensor_all(factors.iter()).scale(term.coefficient);
            }
            Ok(out)
        }
    }
}

fn matrix_from_rows(rows: &[Vec<[f64; 2]>], n: usize, field: &str) -> CliResult<CMat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::config(field, format!("expected a {n}x{n} matrix of [re, im] pairs")));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::config(field, "entries must be finite"));
    }
    Ok(CMat::from_fn(n, n, |i, k| C64::new(rows[i][k][0], rows[i][k][1])))
}

pub fn build_state(state: &StateConfig, s: &CompositeStructure) -> CliResult<DensityMatrix> {
    let field = "initial_state";
    let two_qubits = || {
        if s.dims() == [2, 2] {
            Ok(())
        } else {
            Err(CliError::config(field, format!("preset needs dims [2, 2], got {:?}", s.dims())))
        }
    };
    let wrap = |e: sea_core::SeaError| CliError::config(field, e);
    let n = s.total_dim();
    match state {
        StateConfig::Example1 { a, b } => {
            two_qubits()?;
            Ok(example1_state(&Example1Params::new(*a, *b).map_err(wrap)?))
        }
        StateConfig::Example2 { a, b } => {
            two_qubits()?;
            Ok(example2_state(&Example2Params::new(*a, *b).map_err(wrap)?))
        }
        StateConfig::BellDiagonal { c } => {
            two_qubits()?;
            bell_diagonal(*c).map_err(wrap)
        }
        StateConfig::Werner { w } => {
            two_qubits()?;
            werner(*w).map_err(wrap)
        }
        StateConfig::Pauli { a, b, c } => {
            two_qubits()?;
            assemble_pauli_state(&PauliState2Q { a: *a, b: *b, c: *c }).map_err(wrap)
        }
        StateConfig::Matrix { rows } => {
            let m = matrix_from_rows(rows, n, "initial_state.rows")?;
            DensityMatrix::new(m).map_err(|e| CliError::config("initial_state.rows", e))
        }
        StateConfig::Pure { amplitudes } => {
            if amplitudes.len() != n {
                return Err(CliError::config("initial_state.amplitudes", format!("{} amplitudes for dimension {n}", amplitudes.len())));
            }
            let psi = nalgebra_vector(amplitudes);
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(CliError::config("initial_state.amplitudes", "must be a finite nonzero vector"));
            }
            DensityMatrix::pure(&psi.unscale(norm)).map_err(|e| CliError::config("initial_state.amplitudes", e))
        }
        StateConfig::Random { rank, seed } => {
            random_density(n, rank.unwrap_or(n), *seed).map_err(|e| CliError::config("initial_state.rank", e))
        }
        StateConfig::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(n)),
    }
}

fn nalgebra_vector(amplitudes: &[[f64; 2]]) -> sea_core::linalg::CVec {
    sea_core::linalg::CVec::from_iterator(amplitudes.len(), amplitudes.iter().map(|[re, im]| C64::new(*re, *im)))
}
