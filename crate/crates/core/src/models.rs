//! Case-study environments, interactions and closed-form references.
//!
//! Qubit basis: index 0 is `|g⟩`, index 1 is `|e⟩`, `σ_z = diag(1, −1)`.
//! Spin-1 basis: `(+1, 0, −1)`.

use serde::{Deserialize, Serialize};

use crate::embedding::Interaction;
use crate::error::{Error, Result};
use crate::linalg::{c64, diag, hermiticity_residual, identity, kron, real_matrix, CMatrix, C64};
use crate::mps::{right_canonicalize, MpsEnvironment, RawMps, SiteTensor};

pub fn sigma_x() -> CMatrix {
    real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)])
}

pub fn sigma_z() -> CMatrix {
    diag(&[1.0, -1.0])
}

/// `|e⟩⟨g|`.
pub fn sigma_plus() -> CMatrix {
    real_matrix(2, 2, &[0.0, 0.0, 1.0, 0.0])
}

/// `|g⟩⟨e|`.
pub fn sigma_minus() -> CMatrix {
    real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])
}

/// `(J_x, J_y, J_z)` for spin 1.
pub fn spin1() -> (CMatrix, CMatrix, CMatrix) {
    let r = std::f64::consts::SQRT_2;
    let jp = real_matrix(3, 3, &[0.0, r, 0.0, 0.0, 0.0, r, 0.0, 0.0, 0.0]);
    let jm = jp.adjoint();
    let jx = (&jp + &jm).scale(0.5);
    let jy = (&jp - &jm).map(|z| z * c64(0.0, -0.5));
    (jx, jy, diag(&[1.0, 0.0, -1.0]))
}

/// Truncated bosonic annihilation operator on photon numbers `0..n`.
pub fn annihilation(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| if c == r + 1 { c64((c as f64).sqrt(), 0.0) } else { C64::default() })
}

/// Homogeneous two-photon wavepacket of rank 3 with `χ_0 = diag(1, 0, 0)`.
pub fn two_photon_env(tau_over_t1: f64, tau_over_t2: f64) -> Result<MpsEnvironment> {
    if !(tau_over_t1 > 0.0) || !(tau_over_t2 > 0.0) {
        return Err(Error::InvalidArgument("two-photon rates must be positive".into()));
    }
    let (e1, e2) = ((-tau_over_t1).exp(), (-tau_over_t2).exp());
    let b0 = diag(&[e1, e2, 1.0]);
    let mut b1 = CMatrix::zeros(3, 3);
    b1[(0, 1)] = c64((1.0 - e1 * e1).sqrt(), 0.0);
    b1[(1, 2)] = c64((1.0 - e2 * e2).sqrt(), 0.0);
    MpsEnvironment::homogeneous(SiteTensor::new(vec![b0, b1])?, diag(&[1.0, 0.0, 0.0]))
}

/// Homogeneous photonic cluster state with `χ_0 = diag(1, 0)`.
pub fn cluster_env() -> MpsEnvironment {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let b0 = real_matrix(2, 2, &[h, 0.0, h, 0.0]);
    let b1 = real_matrix(2, 2, &[0.0, h, 0.0, -h]);
    MpsEnvironment::homogeneous(SiteTensor::new(vec![b0, b1]).expect("static tensors"), diag(&[1.0, 0.0]))
        .expect("cluster tensors are right-canonical")
}

/// AKLT tensors in the physical order `(+1, 0, −1)`.
pub fn aklt_site() -> SiteTensor {
    let r = (2.0f64 / 3.0).sqrt();
    let s = 1.0 / 3f64.sqrt();
    SiteTensor::new(vec![
        real_matrix(2, 2, &[0.0, r, 0.0, 0.0]),
        diag(&[-s, s]),
        real_matrix(2, 2, &[0.0, 0.0, -r, 0.0]),
    ])
    .expect("static tensors")
}

/// Infinite AKLT chain entered at the bulk: `χ_0` is the numerically computed
/// fixed point of the bond free evolution (which is `I/2`).
pub fn aklt_env() -> MpsEnvironment {
    let provisional = MpsEnvironment::homogeneous(aklt_site(), identity(2).scale(0.5)).expect("canonical");
    let fixed = provisional.stationary_bond_state().expect("AKLT has a unique fixed point");
    debug_assert!((&fixed.matrix - identity(2).scale(0.5)).norm() < 1e-12);
    MpsEnvironment::homogeneous(aklt_site(), fixed.matrix).expect("canonical")
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n ≥ 2` qubits, bond dimension 2.
pub fn ghz_env(n: usize) -> Result<MpsEnvironment> {
    if n < 2 {
        return Err(Error::InvalidArgument("GHZ state needs at least two sites".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut sites = Vec::with_capacity(n);
    sites.push(SiteTensor::new(vec![real_matrix(1, 2, &[h, 0.0]), real_matrix(1, 2, &[0.0, h])])?);
    for _ in 1..n - 1 {
        sites.push(SiteTensor::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])])?);
    }
    sites.push(SiteTensor::new(vec![real_matrix(2, 1, &[1.0, 0.0]), real_matrix(2, 1, &[0.0, 1.0])])?);
    MpsEnvironment::finite(sites, identity(1))
}

/// `Σ_k c_k |0…1_k…0⟩`, normalized by the canonicalization sweep.
pub fn single_photon_env(amplitudes: &[C64]) -> Result<MpsEnvironment> {
    let n = amplitudes.len();
    if n == 0 || amplitudes.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::ZeroNorm);
    }
    let one = c64(1.0, 0.0);
    let raw = if n == 1 {
        vec![vec![CMatrix::zeros(1, 1), CMatrix::from_element(1, 1, amplitudes[0])]]
    } else {
        let mut sites = Vec::with_capacity(n);
        sites.push(vec![
            CMatrix::from_row_slice(1, 2, &[one, C64::default()]),
            CMatrix::from_row_slice(1, 2, &[C64::default(), amplitudes[0]]),
        ]);
        for &c in &amplitudes[1..n - 1] {
            let mut b1 = CMatrix::zeros(2, 2);
            b1[(0, 1)] = c;
            sites.push(vec![identity(2), b1]);
        }
        sites.push(vec![
            CMatrix::from_column_slice(2, 1, &[C64::default(), one]),
            CMatrix::from_column_slice(2, 1, &[amplitudes[n - 1], C64::default()]),
        ]);
        sites
    };
    right_canonicalize(&[(1.0, RawMps::new(raw)?)])
}

/// `H = i(σ₊⊗a − σ₋⊗a†)`, so that `exp(−i gτ H) = exp[gτ(σ₊⊗a − σ₋⊗a†)]`
/// moves an excitation between the mode and the qubit.
pub fn exchange_hamiltonian(mode_dim: usize) -> CMatrix {
    let a = annihilation(mode_dim);
    (kron(&sigma_plus(), &a) - kron(&sigma_minus(), &a.adjoint())).map(|z| z * c64(0.0, 1.0))
}

/// `H = i σ_x⊗(a − a†)`, so that `exp(−i gτ H) = exp[gτ σ_x⊗(a − a†)]`.
pub fn cluster_hamiltonian(mode_dim: usize) -> CMatrix {
    let a = annihilation(mode_dim);
    kron(&sigma_x(), &(&a - a.adjoint())).map(|z| z * c64(0.0, 1.0))
}

/// `H = ½ Σ_α σ_α⊗J_α`.
pub fn heisenberg_hamiltonian() -> CMatrix {
    let (jx, jy, jz) = spin1();
    (kron(&sigma_x(), &jx) + kron(&sigma_y(), &jy) + kron(&sigma_z(), &jz)).scale(0.5)
}

/// `H = σ_x⊗|+1⟩⟨+1| + σ_y⊗|0⟩⟨0| + σ_z⊗|−1⟩⟨−1|`.
pub fn controlled_hamiltonian() -> CMatrix {
    kron(&sigma_x(), &diag(&[1.0, 0.0, 0.0]))
        + kron(&sigma_y(), &diag(&[0.0, 1.0, 0.0]))
        + kron(&sigma_z(), &diag(&[0.0, 0.0, 1.0]))
}

/// The interactions of the case studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseInteraction {
    Exchange,
    ClusterCoupling,
    Heisenberg,
    Controlled,
}

impl CaseInteraction {
    pub fn is_spin1(self) -> bool {
        matches!(self, Self::Heisenberg | Self::Controlled)
    }

    /// Mode dimension the interaction acts on (fixed at 3 for spin-1 models).
    pub fn mode_dim(self, requested: usize) -> usize {
        if self.is_spin1() {
            3
        } else {
            requested
        }
    }

    pub fn hamiltonian(self, mode_dim: usize) -> Result<CMatrix> {
        let min = if self.is_spin1() { 3 } else { 2 };
        if mode_dim < min {
            return Err(Error::InvalidArgument(format!("{self:?} needs mode_dim ≥ {min}, got {mode_dim}")));
        }
        Ok(match self {
            Self::Exchange => exchange_hamiltonian(mode_dim),
            Self::ClusterCoupling => cluster_hamiltonian(mode_dim),
            Self::Heisenberg => heisenberg_hamiltonian(),
            Self::Controlled => controlled_hamiltonian(),
        })
    }

    pub fn build(self, g_tau: f64, mode_dim: usize) -> Result<Interaction> {
        let h = self.hamiltonian(self.mode_dim(mode_dim))?;
        Interaction::from_hamiltonian(h, g_tau, 2)
    }
}

/// The four case-study unitaries at one coupling.
#[derive(Clone, Debug)]
pub struct InteractionSet {
    pub exchange: CMatrix,
    pub cluster: CMatrix,
    pub heisenberg: CMatrix,
    pub controlled: CMatrix,
}

pub fn interaction_unitaries(g_tau: f64, mode_dim: usize) -> Result<InteractionSet> {
    if mode_dim < 2 {
        return Err(Error::InvalidArgument(format!("mode_dim must be at least 2, got {mode_dim}")));
    }
    let u = |c: CaseInteraction| c.build(g_tau, mode_dim).map(|i| i.unitary().clone());
    Ok(InteractionSet {
        exchange: u(CaseInteraction::Exchange)?,
        cluster: u(CaseInteraction::ClusterCoupling)?,
        heisenberg: u(CaseInteraction::Heisenberg)?,
        controlled: u(CaseInteraction::Controlled)?,
    })
}

/// Exact AKLT depolarization function after `k` Heisenberg collisions.
pub fn aklt_exact_q(k: usize, g_tau: f64) -> f64 {
    let phase = 1.5 * g_tau;
    let x = 2.0 + 7.0 * phase.cos();
    let y = 7.0 + 2.0 * phase.cos();
    let z = 2.0 * (y * y + 27.0 * phase.sin().powi(2)).sqrt();
    let k = k as i32;
    (0.5 + x / z) * ((y + z) / 27.0).powi(k) + (0.5 - x / z) * ((y - z) / 27.0).powi(k)
}

/// Depolarization function when AKLT correlations are ignored.
pub fn aklt_markov_q(k: usize, g_tau: f64) -> f64 {
    ((11.0 + 16.0 * (1.5 * g_tau).cos()) / 27.0).powi(k as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    TwoPhoton,
    Cluster,
    Aklt,
    Ghz,
    SinglePhoton,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParameters {
    #[serde(rename = "tau_over_T1", default, skip_serializing_if = "Option::is_none")]
    pub tau_over_t1: Option<f64>,
    #[serde(rename = "tau_over_T2", default, skip_serializing_if = "Option::is_none")]
    pub tau_over_t2: Option<f64>,
    /// Mode dimension for photonic interactions (photon numbers `0..fock_cutoff`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_cutoff: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    /// Complex amplitudes as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

/// A named case-study environment with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: ModelName,
    #[serde(default)]
    pub parameters: ModelParameters,
}

/// Default Fock cutoff for photon-creating interactions.
pub const DEFAULT_FOCK_CUTOFF: usize = 5;

impl ModelSpec {
    pub fn new(name: ModelName) -> Self {
        Self { name, parameters: ModelParameters::default() }
    }

    /// Field-level validation; the message names the offending parameter.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let p = &self.parameters;
        let positive = |v: Option<f64>, field: &str| match v {
            None => Err(format!("model.parameters.{field}: required for {:?}", self.name)),
            Some(x) if !(x > 0.0) || !x.is_finite() => Err(format!("model.parameters.{field}: must be positive, got {x}")),
            Some(_) => Ok(()),
        };
        if let Some(c) = p.fock_cutoff {
            if c < 2 {
                return Err(format!("model.parameters.fock_cutoff: must be at least 2, got {c}"));
            }
        }
        match self.name {
            ModelName::TwoPhoton => {
                positive(p.tau_over_t1, "tau_over_T1")?;
                positive(p.tau_over_t2, "tau_over_T2")?;
            }
            ModelName::Ghz => match p.n_sites {
                Some(n) if n >= 2 => {}
                Some(n) => return Err(format!("model.parameters.n_sites: must be at least 2, got {n}")),
                None => return Err("model.parameters.n_sites: required for ghz".into()),
            },
            ModelName::SinglePhoton => match &p.amplitudes {
                None => return Err("model.parameters.amplitudes: required for single_photon".into()),
                Some(a) if a.is_empty() => return Err("model.parameters.amplitudes: empty".into()),
                Some(a) => {
                    if a.iter().flatten().any(|x| !x.is_finite()) {
                        return Err("model.parameters.amplitudes: entries must be finite".into());
                    }
                    let norm: f64 = a.iter().map(|z| z[0] * z[0] + z[1] * z[1]).sum();
                    if (norm - 1.0).abs() > 1e-10 {
                        return Err(format!("model.parameters.amplitudes: squared norm is {norm}, expected 1"));
                    }
                }
            },
            ModelName::Cluster | ModelName::Aklt => {}
        }
        Ok(())
    }

    pub fn environment(&self) -> Result<MpsEnvironment> {
        self.validate().map_err(Error::InvalidArgument)?;
        let p = &self.parameters;
        match self.name {
            ModelName::TwoPhoton => two_photon_env(p.tau_over_t1.unwrap_or(0.0), p.tau_over_t2.unwrap_or(0.0)),
            ModelName::Cluster => Ok(cluster_env()),
            ModelName::Aklt => Ok(aklt_env()),
            ModelName::Ghz => ghz_env(p.n_sites.unwrap_or(0)),
            ModelName::SinglePhoton => {
                let amps: Vec<C64> =
                    p.amplitudes.as_deref().unwrap_or(&[]).iter().map(|z| c64(z[0], z[1])).collect();
                single_photon_env(&amps)
            }
        }
    }

    /// The interaction used with this environment in the case studies.
    pub fn default_interaction(&self) -> CaseInteraction {
        match self.name {
            ModelName::TwoPhoton | ModelName::Ghz | ModelName::SinglePhoton => CaseInteraction::Exchange,
            ModelName::Cluster => CaseInteraction::ClusterCoupling,
            ModelName::Aklt => CaseInteraction::Heisenberg,
        }
    }

    /// Mode dimension: the Fock cutoff for photonic models, 3 for spin 1.
    pub fn mode_dim(&self) -> usize {
        match self.name {
            ModelName::Aklt => 3,
            ModelName::TwoPhoton | ModelName::Ghz | ModelName::SinglePhoton => self.parameters.fock_cutoff.unwrap_or(3),
            ModelName::Cluster => self.parameters.fock_cutoff.unwrap_or(DEFAULT_FOCK_CUTOFF),
        }
    }
}

/// Residual of `H` from Hermiticity, exposed for config validation.
pub fn hamiltonian_residual(h: &CMatrix) -> f64 {
    hermiticity_residual(h)
}
