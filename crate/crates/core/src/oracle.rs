//! Brute-force reference: the whole environment as one state vector.
//!
//! The vector is ordered `[system][χ₀ ancilla][site 1]…[site n][right bond]`.
//! The `χ₀` ancilla purifies the initial bond state and the right ancilla keeps
//! the open bond of a truncated chain, so tracing both reproduces exactly the
//! environment seen by the first `n` collisions. Nothing here shares code with
//! the Kraus or propagator paths of the embedding.

use crate::embedding::CollisionModel;
use crate::error::{Error, Result};
use crate::linalg::{eigh, sqrt_psd, CMatrix, C64};

/// Largest state vector the oracle will allocate.
pub const ORACLE_GUARD: usize = 1 << 23;

#[derive(Clone, Debug)]
pub struct OracleRun {
    pub model: CollisionModel,
    pub rho0: CMatrix,
    pub n_sites: usize,
    pub k_max: usize,
}

impl OracleRun {
    pub fn new(model: CollisionModel, rho0: CMatrix, n_sites: usize, k_max: usize) -> Self {
        Self { model, rho0, n_sites, k_max }
    }

    /// Number of amplitudes of the purified state vector.
    pub fn vector_len(&self) -> Option<usize> {
        let env = self.model.env();
        let site = self.model.mode_dim().checked_mul(env.spectator_dim())?;
        let mut len = self.model.system_dim().checked_mul(env.chi0().nrows())?;
        for _ in 0..self.n_sites {
            len = len.checked_mul(site)?;
        }
        len.checked_mul(env.bond_dim(self.n_sites).ok()?)
    }
}

/// `ρ_S(kτ)` for `k = 0 … k_max` by direct unitary evolution.
pub fn brute_force_trajectory(run: &OracleRun) -> Result<Vec<CMatrix>> {
    let model = &run.model;
    let env = model.env();
    if run.k_max > run.n_sites {
        return Err(Error::InvalidArgument(format!("k_max = {} exceeds n_sites = {}", run.k_max, run.n_sites)));
    }
    if let Some(n) = env.len() {
        if run.n_sites > n {
            return Err(Error::SiteOutOfRange { site: run.n_sites, len: n });
        }
    }
    let len = run.vector_len().unwrap_or(usize::MAX);
    if len > ORACLE_GUARD {
        return Err(Error::SizeGuard(format!("oracle state vector of {len} entries exceeds {ORACLE_GUARD}")));
    }
    crate::mps::validate_density(&run.rho0, 1e-10)?;
    let ds = model.system_dim();
    if run.rho0.nrows() != ds {
        return Err(Error::DimensionMismatch("initial state does not match the system".into()));
    }
    let environment = environment_vector(run)?;
    let (weights, vectors) = eigh(&run.rho0)?;
    let mut out = vec![CMatrix::zeros(ds, ds); run.k_max + 1];
    for (p, col) in weights.iter().zip(vectors.column_iter()) {
        if *p <= 1e-15 {
            continue;
        }
        let mut psi = CMatrix::zeros(ds, environment.len());
        for s in 0..ds {
            for (e, amp) in environment.iter().enumerate() {
                psi[(s, e)] = col[s] * amp;
            }
        }
        out[0] += (&psi * psi.adjoint()).scale(*p);
        for k in 1..=run.k_max {
            apply_collision(model, &mut psi, k, run.n_sites)?;
            out[k] += (&psi * psi.adjoint()).scale(*p);
        }
    }
    Ok(out)
}

/// Environment amplitudes `[c][site 1]…[site n][b]`, sites padded to the mode
/// dimension.
fn environment_vector(run: &OracleRun) -> Result<Vec<C64>> {
    let model = &run.model;
    let env = model.env();
    let s = env.spectator_dim();
    let mode = model.mode_dim();
    let root = sqrt_psd(env.chi0())?;
    let d0 = root.nrows();
    // ancilla value c carries the bond vector Σ_a √χ₀[a,c] ⟨a|
    let mut partial: Vec<CMatrix> =
        (0..d0).map(|c| CMatrix::from_fn(1, d0, |_, a| root[(a, c)])).collect();
    for k in 1..=run.n_sites {
        let site = env.site(k)?;
        let levels = site.physical_dim() / s;
        let zero = CMatrix::zeros(1, site.right_dim());
        let mut next = Vec::with_capacity(partial.len() * mode * s);
        for row in &partial {
            for i in 0..mode {
                for c in 0..s {
                    if i < levels {
                        next.push(row * &site.matrices()[i * s + c]);
                    } else {
                        next.push(zero.clone());
                    }
                }
            }
        }
        partial = next;
    }
    Ok(partial.iter().flat_map(|row| row.iter().copied().collect::<Vec<_>>()).collect())
}

/// Applies `U_Sk` to the system and the coupling level of site `k`.
fn apply_collision(model: &CollisionModel, psi: &mut CMatrix, k: usize, n_sites: usize) -> Result<()> {
    let env = model.env();
    let u = model.interaction(k)?.unitary();
    let ds = model.system_dim();
    let mode = model.mode_dim();
    let s = env.spectator_dim();
    let site = mode * s;
    let dn = env.bond_dim(n_sites)?;
    // environment index = ((outer · site + i·s + c) · inner), outer covers χ₀ ancilla and sites < k
    let inner = site.pow((n_sites - k) as u32) * dn;
    let outer = psi.ncols() / (site * inner);
    let mut buf = vec![C64::default(); ds * mode];
    for o in 0..outer {
        for c in 0..s {
            for r in 0..inner {
                let col = |i: usize| (o * site + i * s + c) * inner + r;
                for sys in 0..ds {
                    for i in 0..mode {
                        buf[sys * mode + i] = psi[(sys, col(i))];
                    }
                }
                for sys in 0..ds {
                    for i in 0..mode {
                        let mut acc = C64::default();
                        let row = sys * mode + i;
                        for (j, b) in buf.iter().enumerate() {
                            acc += u[(row, j)] * b;
                        }
                        psi[(sys, col(i))] = acc;
                    }
                }
            }
        }
    }
    Ok(())
}
