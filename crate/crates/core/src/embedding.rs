//! Markovian embedding: the joint system-bond state obeys a step-local
//! recurrence `R_k = Σ_j A_j R_{k−1} A_j†` whose system marginal is the
//! exact reduced dynamics.

use crate::error::{Error, Result};
use crate::linalg::{
    expm_hermitian_generator, hermitian_part, identity, kron, min_eigenvalue, trace_distance, trace_out_second,
    unitarity_residual, CMatrix, C64,
};
use crate::mps::MpsEnvironment;

/// Unitarity tolerance for interaction matrices.
pub const UNITARITY_TOL: f64 = 1e-12;
/// Positivity slack of system-bond states.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// One collision unitary on `system ⊗ mode`, optionally with the Hermitian
/// generator it was built from (`U = exp(−i gτ H)`).
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    unitary: CMatrix,
    hamiltonian: Option<CMatrix>,
    system_dim: usize,
    mode_dim: usize,
}

impl Interaction {
    pub fn from_unitary(unitary: CMatrix, system_dim: usize) -> Result<Self> {
        if system_dim == 0 || !unitary.is_square() || !unitary.nrows().is_multiple_of(system_dim) {
            return Err(Error::DimensionMismatch(format!(
                "unitary of shape {:?} does not factor over a system of dim {system_dim}",
                unitary.shape()
            )));
        }
        let residual = unitarity_residual(&unitary);
        if residual > UNITARITY_TOL {
            return Err(Error::InvalidArgument(format!("interaction is not unitary (residual {residual:e})")));
        }
        let mode_dim = unitary.nrows() / system_dim;
        Ok(Self { unitary, hamiltonian: None, system_dim, mode_dim })
    }

    pub fn from_hamiltonian(hamiltonian: CMatrix, g_tau: f64, system_dim: usize) -> Result<Self> {
        let unitary = expm_hermitian_generator(&hamiltonian, g_tau)?;
        let mut out = Self::from_unitary(unitary, system_dim)?;
        out.hamiltonian = Some(hamiltonian);
        Ok(out)
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn hamiltonian(&self) -> Option<&CMatrix> {
        self.hamiltonian.as_ref()
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn mode_dim(&self) -> usize {
        self.mode_dim
    }

    /// `⟨j|U|i⟩` as a `d_S × d_S` block.
    pub fn block(&self, j: usize, i: usize) -> CMatrix {
        let m = self.mode_dim;
        CMatrix::from_fn(self.system_dim, self.system_dim, |s, t| self.unitary[(s * m + j, t * m + i)])
    }

    /// `tr_mode[U (ρ ⊗ σ) U†]` with `σ` zero-padded to the mode dimension.
    pub fn channel(&self, rho: &CMatrix, sigma: &CMatrix) -> Result<CMatrix> {
        let padded = pad_square(sigma, self.mode_dim)?;
        let joint = &self.unitary * kron(rho, &padded) * self.unitary.adjoint();
        trace_out_second(&joint, self.system_dim, self.mode_dim)
    }
}

/// Embeds a `d × d` matrix into the top-left corner of an `n × n` one.
pub fn pad_square(m: &CMatrix, n: usize) -> Result<CMatrix> {
    if m.nrows() > n || !m.is_square() {
        return Err(Error::DimensionMismatch(format!("cannot pad {:?} to {n}x{n}", m.shape())));
    }
    let mut out = CMatrix::zeros(n, n);
    out.view_mut((0, 0), m.shape()).copy_from(m);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
enum Schedule {
    Homogeneous(Interaction),
    PerStep(Vec<Interaction>),
}

/// Environment plus collision unitaries, coupling and step.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionModel {
    env: MpsEnvironment,
    schedule: Schedule,
    system_dim: usize,
    mode_dim: usize,
    g_tau: f64,
    tau: f64,
}

/// `R(kτ)` on `system ⊗ bond#k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemBondState {
    pub step: usize,
    pub system_dim: usize,
    pub bond_dim: usize,
    pub matrix: CMatrix,
}

impl SystemBondState {
    /// `R = ρ_S ⊗ χ`.
    pub fn product(step: usize, rho: &CMatrix, chi: &CMatrix) -> Self {
        Self { step, system_dim: rho.nrows(), bond_dim: chi.nrows(), matrix: kron(rho, chi) }
    }

    /// `ρ_S = tr_bond R`.
    pub fn system_state(&self) -> CMatrix {
        trace_out_second(&self.matrix, self.system_dim, self.bond_dim).expect("consistent dims")
    }

    pub fn bond_marginal(&self) -> CMatrix {
        crate::linalg::trace_out_first(&self.matrix, self.system_dim, self.bond_dim).expect("consistent dims")
    }
}

/// `tr_bond R`.
pub fn system_state(r: &SystemBondState) -> CMatrix {
    r.system_state()
}

impl CollisionModel {
    pub fn new(env: MpsEnvironment, interaction: Interaction, g_tau: f64, tau: f64) -> Result<Self> {
        Self::build(env, Schedule::Homogeneous(interaction), g_tau, tau)
    }

    /// One unitary per collision; the model is valid for `interactions.len()` steps.
    pub fn with_schedule(env: MpsEnvironment, interactions: Vec<Interaction>, g_tau: f64, tau: f64) -> Result<Self> {
        if interactions.is_empty() {
            return Err(Error::InvalidArgument("empty interaction schedule".into()));
        }
        Self::build(env, Schedule::PerStep(interactions), g_tau, tau)
    }

    fn build(env: MpsEnvironment, schedule: Schedule, g_tau: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() || !g_tau.is_finite() {
            return Err(Error::InvalidArgument(format!("need τ > 0 and finite gτ, got τ = {tau}, gτ = {g_tau}")));
        }
        let list: &[Interaction] = match &schedule {
            Schedule::Homogeneous(i) => std::slice::from_ref(i),
            Schedule::PerStep(v) => v,
        };
        let (system_dim, mode_dim) = (list[0].system_dim, list[0].mode_dim);
        if list.iter().any(|i| i.system_dim != system_dim || i.mode_dim != mode_dim) {
            return Err(Error::DimensionMismatch("interactions differ in dimensions".into()));
        }
        let level = env.max_level_dim();
        if mode_dim < level {
            return Err(Error::DimensionMismatch(format!(
                "mode dimension {mode_dim} is smaller than the environment's physical dimension {level}"
            )));
        }
        Ok(Self { env, schedule, system_dim, mode_dim, g_tau, tau })
    }

    pub fn env(&self) -> &MpsEnvironment {
        &self.env
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn mode_dim(&self) -> usize {
        self.mode_dim
    }

    pub fn g_tau(&self) -> f64 {
        self.g_tau
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Coupling `g = gτ / τ`.
    pub fn g(&self) -> f64 {
        self.g_tau / self.tau
    }

    /// Same interactions on a different environment.
    pub fn with_env(&self, env: MpsEnvironment) -> Result<Self> {
        Self::build(env, self.schedule.clone(), self.g_tau, self.tau)
    }

    /// The model with every inter-site correlation removed.
    pub fn decorrelated(&self, horizon: usize) -> Result<Self> {
        self.with_env(self.env.decorrelate(horizon)?)
    }

    /// Number of collisions the model supports, `None` if unbounded.
    pub fn max_steps(&self) -> Option<usize> {
        let sched = match &self.schedule {
            Schedule::Homogeneous(_) => None,
            Schedule::PerStep(v) => Some(v.len()),
        };
        match (sched, self.env.len()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Interaction of collision `k ≥ 1`.
    pub fn interaction(&self, k: usize) -> Result<&Interaction> {
        match &self.schedule {
            Schedule::Homogeneous(i) if k >= 1 => Ok(i),
            Schedule::PerStep(v) if k >= 1 && k <= v.len() => Ok(&v[k - 1]),
            Schedule::Homogeneous(_) => Err(Error::SiteOutOfRange { site: k, len: usize::MAX }),
            Schedule::PerStep(v) => Err(Error::SiteOutOfRange { site: k, len: v.len() }),
        }
    }

    /// Kraus operators of collision `k`, mapping `S ⊗ bond#(k−1)` to
    /// `S ⊗ bond#k`: `A_{j,c} = Σ_i ⟨j|U|i⟩ ⊗ (B[k][i,c])ᵀ`, where `c` runs over
    /// spectator levels (a single value for ordinary environments). Physical
    /// levels beyond the environment's dimension contribute zero.
    pub fn kraus_operators(&self, k: usize) -> Result<Vec<CMatrix>> {
        let interaction = self.interaction(k)?;
        let site = self.env.site(k)?;
        let s = self.env.spectator_dim();
        let levels = site.physical_dim() / s;
        let (left, right) = (site.left_dim(), site.right_dim());
        let ds = self.system_dim;
        let transposed: Vec<CMatrix> = site.matrices().iter().map(|b| b.transpose()).collect();
        let mut out = Vec::with_capacity(self.mode_dim * s);
        for j in 0..self.mode_dim {
            let blocks: Vec<CMatrix> = (0..levels).map(|i| interaction.block(j, i)).collect();
            for c in 0..s {
                let mut a = CMatrix::zeros(ds * right, ds * left);
                for (i, block) in blocks.iter().enumerate() {
                    a += kron(block, &transposed[i * s + c]);
                }
                out.push(a);
            }
        }
        Ok(out)
    }

    /// `‖Σ_j A_j†A_j − I‖_F` for collision `k`.
    pub fn kraus_completeness_residual(&self, k: usize) -> Result<f64> {
        let ops = self.kraus_operators(k)?;
        let n = ops[0].ncols();
        let sum = ops.iter().fold(CMatrix::zeros(n, n), |acc, a| acc + a.adjoint() * a);
        Ok((sum - identity(n)).norm())
    }

    /// `R(0) = ρ_S(0) ⊗ χ_0`.
    pub fn initial_state(&self, rho0: &CMatrix) -> Result<SystemBondState> {
        crate::mps::validate_density(rho0, 1e-10)?;
        if rho0.nrows() != self.system_dim {
            return Err(Error::DimensionMismatch(format!(
                "initial state of dim {} for a system of dim {}",
                rho0.nrows(),
                self.system_dim
            )));
        }
        Ok(SystemBondState::product(0, rho0, self.env.chi0()))
    }

    /// One collision.
    pub fn step(&self, r: &SystemBondState) -> Result<SystemBondState> {
        let k = r.step + 1;
        if let Some(n) = self.max_steps() {
            if k > n {
                return Err(Error::SiteOutOfRange { site: k, len: n });
            }
        }
        let expected = self.env.bond_dim(r.step)?;
        if r.bond_dim != expected || r.system_dim != self.system_dim {
            return Err(Error::DimensionMismatch(format!(
                "state on {}⊗{} entering collision {k} expecting {}⊗{expected}",
                r.system_dim, r.bond_dim, self.system_dim
            )));
        }
        let ops = self.kraus_operators(k)?;
        let bond_dim = self.env.bond_dim(k)?;
        let n = self.system_dim * bond_dim;
        let matrix = ops.iter().fold(CMatrix::zeros(n, n), |acc, a| acc + a * &r.matrix * a.adjoint());
        let next = SystemBondState { step: k, system_dim: self.system_dim, bond_dim, matrix };
        check_positivity(&next.matrix, k);
        Ok(next)
    }

    /// `ρ_S(kτ)` for `k = 0 … k_max`.
    pub fn trajectory(&self, rho0: &CMatrix, k_max: usize) -> Result<Vec<CMatrix>> {
        let mut r = self.initial_state(rho0)?;
        let mut out = Vec::with_capacity(k_max + 1);
        out.push(rho0.clone());
        for _ in 0..k_max {
            r = self.step(&r)?;
            out.push(r.system_state());
        }
        Ok(out)
    }

    /// Single-particle channel `Φ̃_k[ρ] = tr_k[U (ρ ⊗ ρ_k) U†]` given `χ_{k−1}`.
    pub fn single_site_channel(&self, k: usize, chi: &crate::mps::BondState, rho: &CMatrix) -> Result<CMatrix> {
        let marginal = self.env.site_reduced_state(chi)?;
        self.interaction(k)?.channel(rho, &marginal)
    }
}

fn check_positivity(m: &CMatrix, k: usize) {
    if let Ok(min) = min_eigenvalue(m) {
        if min < -POSITIVITY_TOL {
            log::warn!("system-bond state after collision {k} has eigenvalue {min:e}");
            debug_assert!(min >= -POSITIVITY_TOL, "negative eigenvalue {min:e} after collision {k}");
        }
    }
}

/// `tr(ρ_k O)` along a trajectory.
pub fn observable_series(trajectory: &[CMatrix], observable: &CMatrix) -> Result<Vec<f64>> {
    let residual = crate::linalg::hermiticity_residual(observable);
    if residual > 1e-12 {
        return Err(Error::NotHermitian(residual));
    }
    trajectory
        .iter()
        .map(|rho| {
            let v: C64 = (rho * observable).trace();
            if v.im.abs() > 1e-10 {
                return Err(Error::Numerical(format!("expectation value has imaginary part {:e}", v.im)));
            }
            Ok(v.re)
        })
        .collect()
}

/// Largest trace distance between two trajectories of equal length.
pub fn max_trace_distance(a: &[CMatrix], b: &[CMatrix]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch("trajectories differ in length".into()));
    }
    a.iter().zip(b).try_fold(0.0f64, |acc, (x, y)| Ok(acc.max(trace_distance(&hermitian_part(x), &hermitian_part(y))?)))
}

/// Convergence threshold of the Fock-cutoff escalation.
pub const CUTOFF_SHIFT_TOL: f64 = 1e-6;
/// Largest Fock cutoff tried.
pub const MAX_FOCK_CUTOFF: usize = 24;

/// Result of a cutoff-converged run.
#[derive(Clone, Debug)]
pub struct ConvergedRun {
    pub cutoff: usize,
    pub trajectory: Vec<CMatrix>,
    /// Largest observable shift between the accepted cutoff and the next.
    pub shift: f64,
}

/// Runs `build(cutoff)` at increasing cutoffs until the listed observables
/// move by less than [`CUTOFF_SHIFT_TOL`] between consecutive cutoffs two
/// apart. The smaller of the two cutoffs is reported.
pub fn converge_cutoff(
    build: impl Fn(usize) -> Result<CollisionModel>,
    rho0: &CMatrix,
    k_max: usize,
    observables: &[CMatrix],
    start: usize,
) -> Result<ConvergedRun> {
    let series = |traj: &[CMatrix]| -> Result<Vec<Vec<f64>>> {
        observables.iter().map(|o| observable_series(traj, o)).collect()
    };
    let mut cutoff = start;
    let mut current = build(cutoff)?.trajectory(rho0, k_max)?;
    let mut current_obs = series(&current)?;
    let mut shift = f64::INFINITY;
    while cutoff + 2 <= MAX_FOCK_CUTOFF {
        let next = build(cutoff + 2)?.trajectory(rho0, k_max)?;
        let next_obs = series(&next)?;
        shift = current_obs
            .iter()
            .flatten()
            .zip(next_obs.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if shift < CUTOFF_SHIFT_TOL {
            return Ok(ConvergedRun { cutoff, trajectory: current, shift });
        }
        log::info!("Fock cutoff {cutoff}: observables shift by {shift:e} at cutoff {}", cutoff + 2);
        cutoff += 2;
        current = next;
        current_obs = next_obs;
    }
    Err(Error::CutoffNotConverged { cutoff, shift })
}
