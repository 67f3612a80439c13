//! The JSON experiment document and its validation.

use std::path::{Path, PathBuf};

use mpscoll::json;
use mpscoll::linalg::{hermiticity_residual, min_eigenvalue, unitarity_residual};
use mpscoll::{c64, CMatrix, CaseInteraction, CollisionModel, Interaction, ModelSpec, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Interaction: a case-study name, or an explicit unitary or generator on
/// system ⊗ mode (system most significant, system dimension 2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InteractionSpec {
    Named(CaseInteraction),
    Unitary {
        #[serde(with = "json::matrix")]
        unitary: CMatrix,
    },
    /// `U = exp(−i gτ H)`; required for the perturbative kernels and `gksl`.
    Hamiltonian {
        #[serde(with = "json::matrix")]
        hamiltonian: CMatrix,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedState {
    Ground,
    Excited,
    Plus,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Named(NamedState),
    Matrix {
        #[serde(with = "json::matrix")]
        matrix: CMatrix,
    },
}

impl Default for InitialState {
    fn default() -> Self {
        Self::Named(NamedState::Ground)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedObservable {
    /// `⟨e|ρ|e⟩`.
    ExcitedPopulation,
    /// `2 Re⟨+|ρ|−⟩` with `|±⟩ = (|g⟩ ± |e⟩)/√2`, the coherence between the
    /// pointer states of a σ_x-coupled dephasing channel.
    Coherence,
    /// `q` in `ρ = q ρ₀ + (1 − q) I/2`, read off along the initial Bloch vector.
    Depolarization,
    /// `⟨σ_z⟩ = ⟨g|ρ|g⟩ − ⟨e|ρ|e⟩`.
    SigmaZ,
}

impl NamedObservable {
    pub fn column(self) -> &'static str {
        match self {
            Self::ExcitedPopulation => "excited_population",
            Self::Coherence => "coherence",
            Self::Depolarization => "depolarization",
            Self::SigmaZ => "sigma_z",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomObservable {
    pub name: String,
    #[serde(with = "json::matrix")]
    pub matrix: CMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Named(NamedObservable),
    Custom { custom: CustomObservable },
}

impl ObservableSpec {
    pub fn column(&self) -> &str {
        match self {
            Self::Named(n) => n.column(),
            Self::Custom { custom } => &custom.name,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// System-bond recurrence.
    #[default]
    Embedding,
    /// Brute-force state vector.
    Oracle,
    /// Exact memory-kernel master equation.
    Nz,
    /// Stroboscopic GKSL semigroup.
    Gksl,
    /// Embedding with environment correlations removed.
    Decorrelated,
}

fn one() -> f64 {
    1.0
}

fn default_observables() -> Vec<ObservableSpec> {
    vec![ObservableSpec::Named(NamedObservable::ExcitedPopulation)]
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Defaults to the model's case-study interaction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<InteractionSpec>,
    pub g_tau: f64,
    /// Collision time; only `g = g_tau / tau` depends on it.
    #[serde(default = "one")]
    pub tau: f64,
    pub k_max: usize,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default = "default_observables")]
    pub observables: Vec<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub method: Method,
    /// Chain length for `oracle` (default `k_max`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    /// Number of decorrelated sites for `decorrelated` (default `k_max`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Raise the Fock cutoff until observables settle (photonic models only).
    #[serde(default, skip_serializing_if = "is_default")]
    pub converge_cutoff: bool,
    /// Output points per collision for `gksl`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_step: Option<usize>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, g_tau: f64, k_max: usize) -> Self {
        Self {
            model,
            interaction: None,
            g_tau,
            tau: 1.0,
            k_max,
            initial_state: InitialState::default(),
            observables: default_observables(),
            output: None,
            method: Method::default(),
            n_sites: None,
            horizon: None,
            converge_cutoff: false,
            samples_per_step: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field that can be checked without running dynamics.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        self.model.validate().map_err(CliError::Config)?;
        if !self.g_tau.is_finite() || self.g_tau < 0.0 {
            return bad("g_tau", format!("must be finite and non-negative, got {}", self.g_tau));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad("tau", format!("must be positive, got {}", self.tau));
        }
        if self.k_max < 1 {
            return bad("k_max", "must be at least 1".into());
        }
        let tol = &self.tolerances;
        if !(tol.exact > 0.0) || !(tol.dynamics > 0.0) {
            return bad("tolerances", "must be positive".into());
        }
        if self.observables.is_empty() {
            return bad("observables", "at least one observable is required".into());
        }
        let mut names: Vec<&str> = self.observables.iter().map(ObservableSpec::column).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("observables", "column names must be unique".into());
        }
        for obs in &self.observables {
            if let ObservableSpec::Custom { custom } = obs {
                let m = &custom.matrix;
                if custom.name.is_empty() || custom.name.contains(',') || matches!(custom.name.as_str(), "k" | "g_t") {
                    return bad("observables.custom.name", format!("unusable column name {:?}", custom.name));
                }
                if m.shape() != (2, 2) {
                    return bad("observables.custom.matrix", format!("must be 2x2, got {:?}", m.shape()));
                }
                if hermiticity_residual(m) > tol.exact {
                    return bad("observables.custom.matrix", "must be Hermitian".into());
                }
            }
        }
        let rho0 = self.initial_matrix()?;
        if self.observables.contains(&ObservableSpec::Named(NamedObservable::Depolarization))
            && bloch(&rho0).iter().map(|x| x * x).sum::<f64>() < 1e-12
        {
            return bad("observables", "depolarization needs an initial state with a non-zero Bloch vector".into());
        }
        match self.method {
            Method::Oracle => {
                let n = self.n_sites.unwrap_or(self.k_max);
                if n < self.k_max {
                    return bad("n_sites", format!("must be at least k_max = {}, got {n}", self.k_max));
                }
            }
            Method::Decorrelated => {
                if let Some(h) = self.horizon {
                    if h < self.k_max {
                        return bad("horizon", format!("must be at least k_max = {}, got {h}", self.k_max));
                    }
                }
            }
            _ => {}
        }
        if self.samples_per_step.is_some() && self.method != Method::Gksl {
            return bad("samples_per_step", "only applies to method gksl".into());
        }
        if self.samples_per_step == Some(0) {
            return bad("samples_per_step", "must be at least 1".into());
        }
        if self.converge_cutoff && !self.model_is_photonic() {
            return bad("converge_cutoff", "only applies to models with a truncated Fock space".into());
        }
        if self.converge_cutoff && !matches!(self.method, Method::Embedding | Method::Decorrelated) {
            return bad("converge_cutoff", "only applies to methods embedding and decorrelated".into());
        }
        let model = self.build_model()?;
        if let Some(n) = model.max_steps() {
            let needed = match self.method {
                Method::Oracle => self.n_sites.unwrap_or(self.k_max),
                _ => self.k_max,
            };
            if needed > n {
                return bad("k_max", format!("the environment has only {n} sites, {needed} requested"));
            }
        }
        Ok(())
    }

    pub fn model_is_photonic(&self) -> bool {
        let adjustable = match &self.interaction {
            None => true,
            Some(InteractionSpec::Named(i)) => !i.is_spin1(),
            Some(_) => false,
        };
        adjustable && self.model.name != mpscoll::ModelName::Aklt
    }

    pub fn initial_matrix(&self) -> Result<CMatrix, CliError> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = match &self.initial_state {
            InitialState::Named(NamedState::Ground) => mpscoll::linalg::diag(&[1.0, 0.0]),
            InitialState::Named(NamedState::Excited) => mpscoll::linalg::diag(&[0.0, 1.0]),
            InitialState::Named(NamedState::Mixed) => mpscoll::linalg::diag(&[0.5, 0.5]),
            InitialState::Named(NamedState::Plus) => {
                let v = CMatrix::from_column_slice(2, 1, &[c64(h, 0.0), c64(h, 0.0)]);
                &v * v.adjoint()
            }
            InitialState::Matrix { matrix } => matrix.clone(),
        };
        let field = "initial_state.matrix";
        if m.shape() != (2, 2) {
            return Err(CliError::Config(format!("{field}: must be 2x2, got {:?}", m.shape())));
        }
        let tol = self.tolerances.exact.max(1e-12);
        if hermiticity_residual(&m) > tol {
            return Err(CliError::Config(format!("{field}: must be Hermitian")));
        }
        if (m.trace() - c64(1.0, 0.0)).norm() > tol {
            return Err(CliError::Config(format!("{field}: trace must be 1, got {}", m.trace())));
        }
        let low = min_eigenvalue(&m).map_err(|e| CliError::Config(format!("{field}: {e}")))?;
        if low < -tol {
            return Err(CliError::Config(format!("{field}: not positive semidefinite (eigenvalue {low:e})")));
        }
        Ok(m)
    }

    /// Mode dimension at the model's default Fock cutoff, or from an explicit
    /// matrix.
    pub fn mode_dim(&self) -> usize {
        match &self.interaction {
            Some(InteractionSpec::Unitary { unitary: m }) | Some(InteractionSpec::Hamiltonian { hamiltonian: m }) => {
                m.nrows() / 2
            }
            Some(InteractionSpec::Named(i)) => i.mode_dim(self.model.mode_dim()),
            None => self.model.default_interaction().mode_dim(self.model.mode_dim()),
        }
    }

    pub fn build_interaction(&self, mode_dim: usize) -> Result<Interaction, CliError> {
        let cfg = |e: mpscoll::Error| CliError::Config(format!("interaction: {e}"));
        match &self.interaction {
            None => self.model.default_interaction().build(self.g_tau, mode_dim).map_err(cfg),
            Some(InteractionSpec::Named(i)) => i.build(self.g_tau, mode_dim).map_err(cfg),
            Some(InteractionSpec::Unitary { unitary }) => {
                check_square_even(unitary, "interaction.unitary")?;
                let residual = unitarity_residual(unitary);
                if residual > self.tolerances.exact.max(1e-12) {
                    return Err(CliError::Config(format!("interaction.unitary: not unitary (residual {residual:e})")));
                }
                Interaction::from_unitary(unitary.clone(), 2).map_err(cfg)
            }
            Some(InteractionSpec::Hamiltonian { hamiltonian }) => {
                check_square_even(hamiltonian, "interaction.hamiltonian")?;
                Interaction::from_hamiltonian(hamiltonian.clone(), self.g_tau, 2).map_err(cfg)
            }
        }
    }

    /// The collision model at the given Fock cutoff (ignored for spin-1 and
    /// explicit interactions).
    pub fn build_model_at(&self, cutoff: usize) -> Result<CollisionModel, CliError> {
        let mut spec = self.model.clone();
        if self.model_is_photonic() {
            spec.parameters.fock_cutoff = Some(cutoff);
        }
        let env = spec.environment().map_err(|e| CliError::Config(format!("model: {e}")))?;
        let mode_dim = match &self.interaction {
            Some(InteractionSpec::Unitary { .. }) | Some(InteractionSpec::Hamiltonian { .. }) => self.mode_dim(),
            Some(InteractionSpec::Named(i)) => i.mode_dim(spec.mode_dim()),
            None => spec.default_interaction().mode_dim(spec.mode_dim()),
        };
        let interaction = self.build_interaction(mode_dim)?;
        CollisionModel::new(env, interaction, self.g_tau, self.tau).map_err(|e| CliError::Config(format!("model: {e}")))
    }

    pub fn build_model(&self) -> Result<CollisionModel, CliError> {
        self.build_model_at(self.model.mode_dim())
    }
}

fn check_square_even(m: &CMatrix, field: &str) -> Result<(), CliError> {
    if m.nrows() != m.ncols() || m.nrows() < 4 || !m.nrows().is_multiple_of(2) {
        return Err(CliError::Config(format!(
            "{field}: must be a square matrix on qubit ⊗ mode (even dimension ≥ 4), got {:?}",
            m.shape()
        )));
    }
    Ok(())
}

/// Bloch vector `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)`.
pub fn bloch(rho: &CMatrix) -> [f64; 3] {
    let off = rho[(1, 0)];
    [2.0 * off.re, 2.0 * off.im, (rho[(0, 0)] - rho[(1, 1)]).re]
}
