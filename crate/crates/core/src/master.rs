//! Exact discrete memory kernels, their second-order approximation, the
//! time-convolution solver and the stroboscopic generator.
//!
//! With `P_k[R] = tr_bond(R) ⊗ χ_k` and `Q_k = Id − P_k`, the reduced dynamics
//! obeys `ρ_{k+1} = ρ_k + τ Σ_{m=0}^{k} K_km[ρ_{k−m}]` where
//!
//! * `K_k0 = (Φ̃_{k+1} − Id)/τ`, `Φ̃_{k+1}[ρ] = tr_bond E_{k+1}[ρ ⊗ χ_k]`,
//! * `K_km = (1/τ) tr_bond E_{k+1} Q_k E_k ⋯ Q_{k−m+1} E_{k−m+1}[· ⊗ χ_{k−m}]`.

use crate::embedding::{pad_square, CollisionModel};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, embed_operator, hermiticity_residual, identity, kron, logm, trace_out_second, CMatrix, MultiIndexOperator,
    C64,
};
use crate::mps::{BondState, TransferSpectrum};
use crate::superop::Superoperator;

fn apply_kraus(ops: &[CMatrix], x: &CMatrix) -> CMatrix {
    let n = ops[0].nrows();
    ops.iter().fold(CMatrix::zeros(n, n), |acc, a| acc + a * x * a.adjoint())
}

/// Matrix of `E^{[k]}`: `X ↦ Σ_j A_j X A_j†` on `system ⊗ bond`.
pub fn propagator_superop(model: &CollisionModel, k: usize) -> Result<Superoperator> {
    Superoperator::from_kraus(&model.kraus_operators(k)?)
}

/// `P[R] = tr_bond(R) ⊗ χ`.
pub fn projection_p(system_dim: usize, chi: &BondState) -> Result<Superoperator> {
    let d = chi.dim();
    Superoperator::from_fn(system_dim * d, system_dim * d, |x| {
        Ok(kron(&trace_out_second(x, system_dim, d)?, &chi.matrix))
    })
}

/// `Q = Id − P`.
pub fn projection_q(system_dim: usize, chi: &BondState) -> Result<Superoperator> {
    Superoperator::identity(system_dim * chi.dim()).sub(&projection_p(system_dim, chi)?)
}

/// Bond states and Kraus maps of the first `k_max` collisions.
struct Chain {
    bonds: Vec<BondState>,
    kraus: Vec<Vec<CMatrix>>,
    system_dim: usize,
    tau: f64,
}

impl Chain {
    fn new(model: &CollisionModel, k_max: usize) -> Result<Self> {
        let bonds = model.env().bond_states(k_max)?;
        let kraus = (1..=k_max).map(|k| model.kraus_operators(k)).collect::<Result<Vec<_>>>()?;
        Ok(Self { bonds, kraus, system_dim: model.system_dim(), tau: model.tau() })
    }

    fn trace_bond(&self, r: &CMatrix) -> Result<CMatrix> {
        trace_out_second(r, self.system_dim, r.nrows() / self.system_dim)
    }

    /// `K_km`, needing collisions up to `k + 1`.
    fn kernel(&self, k: usize, m: usize) -> Result<Superoperator> {
        if m > k {
            return Err(Error::InvalidArgument(format!("kernel index m = {m} exceeds k = {k}")));
        }
        if k + 1 > self.kraus.len() {
            return Err(Error::MissingKernel { k, m });
        }
        let ds = self.system_dim;
        let inv_tau = 1.0 / self.tau;
        let body = Superoperator::from_fn(ds, ds, |rho| {
            let mut r = kron(rho, &self.bonds[k - m].matrix);
            r = apply_kraus(&self.kraus[k - m], &r);
            for j in (k - m + 1)..=k {
                let marginal = self.trace_bond(&r)?;
                r -= kron(&marginal, &self.bonds[j].matrix);
                r = apply_kraus(&self.kraus[j], &r);
            }
            Ok(self.trace_bond(&r)?.scale(inv_tau))
        })?;
        if m == 0 {
            body.sub(&Superoperator::identity(ds).scale(inv_tau))
        } else {
            Ok(body)
        }
    }
}

/// `K_km` for `0 ≤ m ≤ k`.
pub fn memory_kernel(model: &CollisionModel, k: usize, m: usize) -> Result<Superoperator> {
    if m > k {
        return Err(Error::InvalidArgument(format!("kernel index m = {m} exceeds k = {k}")));
    }
    Chain::new(model, k + 1)?.kernel(k, m)
}

/// `Φ̃_{k+1}` built from the single-site marginal at `χ_k`.
pub fn single_site_channel_superop(model: &CollisionModel, k: usize) -> Result<Superoperator> {
    let chi = model.env().bond_state(k)?;
    let ds = model.system_dim();
    Superoperator::from_fn(ds, ds, |rho| model.single_site_channel(k + 1, &chi, rho))
}

/// Kernel maps `K_km` indexed by `(k, m)`, `m ≤ k`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    pub tau: f64,
    entries: Vec<Vec<Superoperator>>,
}

impl KernelTable {
    /// `entries[k][m]` must hold `m = 0 … k`.
    pub fn new(tau: f64, entries: Vec<Vec<Superoperator>>) -> Result<Self> {
        let dim = entries.first().and_then(|row| row.first()).map(Superoperator::in_dim);
        for (k, row) in entries.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::InvalidArgument(format!("kernel row {k} has {} entries", row.len())));
            }
            if row.iter().any(|s| Some(s.in_dim()) != dim || s.out_dim() != s.in_dim()) {
                return Err(Error::DimensionMismatch(format!("kernel row {k} acts on a different space")));
            }
        }
        Ok(Self { tau, entries })
    }

    /// Exact kernels for `k < k_max`.
    pub fn exact(model: &CollisionModel, k_max: usize) -> Result<Self> {
        let chain = Chain::new(model, k_max)?;
        let entries = (0..k_max)
            .map(|k| (0..=k).map(|m| chain.kernel(k, m)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tau: model.tau(), entries })
    }

    pub fn zero(system_dim: usize, tau: f64, k_max: usize) -> Self {
        let entries = (0..k_max).map(|k| vec![Superoperator::zero(system_dim, system_dim); k + 1]).collect();
        Self { tau, entries }
    }

    /// Number of rows `k`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: usize, m: usize) -> Result<&Superoperator> {
        self.entries.get(k).and_then(|row| row.get(m)).ok_or(Error::MissingKernel { k, m })
    }

    pub fn set(&mut self, k: usize, m: usize, value: Superoperator) -> Result<()> {
        let slot = self.entries.get_mut(k).and_then(|row| row.get_mut(m)).ok_or(Error::MissingKernel { k, m })?;
        *slot = value;
        Ok(())
    }
}

/// Iterates `ρ_{k+1} = ρ_k + τ Σ_m K_km[ρ_{k−m}]` for `k < k_max`.
pub fn solve_nz(kernels: &KernelTable, rho0: &CMatrix, k_max: usize) -> Result<Vec<CMatrix>> {
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(rho0.clone());
    for k in 0..k_max {
        let mut next = out[k].clone();
        for m in 0..=k {
            next += kernels.get(k, m)?.apply(&out[k - m])?.scale(kernels.tau);
        }
        out.push(next);
    }
    Ok(out)
}

/// Hilbert-Schmidt orthonormal generalized Gell-Mann basis, identity first.
pub fn gell_mann_basis(d: usize) -> Vec<CMatrix> {
    let mut out = vec![identity(d).scale(1.0 / (d as f64).sqrt())];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = CMatrix::zeros(d, d);
            sym[(j, k)] = c64(h, 0.0);
            sym[(k, j)] = c64(h, 0.0);
            out.push(sym);
            let mut anti = CMatrix::zeros(d, d);
            anti[(j, k)] = c64(0.0, -h);
            anti[(k, j)] = c64(0.0, h);
            out.push(anti);
        }
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = c64(norm, 0.0);
        }
        m[(l, l)] = c64(-(l as f64) * norm, 0.0);
        out.push(m);
    }
    out
}

/// `S_α = tr_mode[H (I ⊗ E_α†)]`, so that `H = Σ_α S_α ⊗ E_α`.
pub fn system_components(h: &CMatrix, system_dim: usize, basis: &[CMatrix]) -> Vec<CMatrix> {
    let m = h.nrows() / system_dim;
    basis
        .iter()
        .map(|e| {
            CMatrix::from_fn(system_dim, system_dim, |s, t| {
                let mut acc = C64::default();
                for a in 0..m {
                    for b in 0..m {
                        acc += h[(s * m + a, t * m + b)] * e[(a, b)].conj();
                    }
                }
                acc
            })
        })
        .collect()
}

/// Zero-pads a bipartite `d₁d₂ × d₁d₂` state to `m·m × m·m` keeping the
/// factor structure.
fn pad_pair(rho: &CMatrix, d1: usize, d2: usize, m: usize) -> Result<CMatrix> {
    if d1 > m || d2 > m || rho.nrows() != d1 * d2 {
        return Err(Error::DimensionMismatch("two-site state does not fit the mode space".into()));
    }
    let mut out = CMatrix::zeros(m * m, m * m);
    for i in 0..d1 {
        for j in 0..d2 {
            for ip in 0..d1 {
                for jp in 0..d2 {
                    out[(i * m + j, ip * m + jp)] = rho[(i * d2 + j, ip * d2 + jp)];
                }
            }
        }
    }
    Ok(out)
}

/// `X ↦ tr_{l',l}[ [H_l, [H_{l'}, X ⊗ I]] (I ⊗ W) ]` for a two-site operator
/// `W` on `l' ⊗ l`, expanded as `Σ c_αβ (S_α S'_β X − S_α X S'_β − S'_β X S_α
/// + X S'_β S_α)` with `c_αβ = tr[(E_β ⊗ E_α) W]`.
fn double_commutator(
    h_l: &CMatrix,
    h_lp: &CMatrix,
    w: &CMatrix,
    system_dim: usize,
    basis: &[CMatrix],
) -> Result<Superoperator> {
    let s_l = system_components(h_l, system_dim, basis);
    let s_lp = system_components(h_lp, system_dim, basis);
    let n = basis.len();
    let mut coeff = vec![C64::default(); n * n];
    for (beta, eb) in basis.iter().enumerate() {
        for (alpha, ea) in basis.iter().enumerate() {
            coeff[alpha * n + beta] = (kron(eb, ea) * w).trace();
        }
    }
    Superoperator::from_fn(system_dim, system_dim, |x| {
        let mut acc = CMatrix::zeros(system_dim, system_dim);
        for alpha in 0..n {
            for beta in 0..n {
                let c = coeff[alpha * n + beta];
                if c.norm() == 0.0 {
                    continue;
                }
                let (sa, sb) = (&s_l[alpha], &s_lp[beta]);
                let term = sa * sb * x - sa * x * sb - sb * x * sa + x * sb * sa;
                acc += term.map(|z| z * c);
            }
        }
        Ok(acc)
    })
}

fn hamiltonian_of(model: &CollisionModel, k: usize) -> Result<CMatrix> {
    let h = model.interaction(k)?.hamiltonian().cloned().ok_or(Error::MissingHamiltonian)?;
    let residual = hermiticity_residual(&h);
    if residual > 1e-12 {
        return Err(Error::NotHermitian(residual));
    }
    let norm = h.clone().svd(false, false).singular_values.max();
    if norm > 1.0 + 1e-12 {
        log::warn!("interaction generator has operator norm {norm} > 1");
    }
    Ok(h)
}

/// Connected two-site state `ρ_{l'l} − ρ_{l'} ⊗ ρ_l` padded to the mode space,
/// with `chi = χ_{l'−1}`.
fn connected_pair(model: &CollisionModel, lp: usize, l: usize, chi: &BondState) -> Result<CMatrix> {
    let env = model.env();
    let m = model.mode_dim();
    let (d1, d2) = (env.level_dim(lp)?, env.level_dim(l)?);
    let pair = env.two_site_reduced_state(lp, l, chi)?;
    let first = crate::linalg::trace_out_second(&pair, d1, d2)?;
    let second = crate::linalg::trace_out_first(&pair, d1, d2)?;
    let full = pad_pair(&pair, d1, d2, m)?;
    let product = kron(&pad_square(&first, m)?, &pad_square(&second, m)?);
    Ok(full - product)
}

/// Leading-order kernel `K⁽²⁾_km[ρ] = −g²τ C_{l'l}([H_l, [H_{l'}, ρ]])` with
/// `l = k + 1`, `l' = k − m + 1`, expanded in the Gell-Mann basis.
pub fn second_order_kernel(model: &CollisionModel, k: usize, m: usize) -> Result<Superoperator> {
    second_order_kernel_in_basis(model, k, m, &gell_mann_basis(model.mode_dim()))
}

/// As [`second_order_kernel`] with a caller-supplied orthonormal operator
/// basis of the mode space; the result does not depend on the choice.
pub fn second_order_kernel_in_basis(
    model: &CollisionModel,
    k: usize,
    m: usize,
    basis: &[CMatrix],
) -> Result<Superoperator> {
    if m == 0 || m > k {
        return Err(Error::InvalidArgument(format!("second-order kernel needs 1 ≤ m ≤ k, got k = {k}, m = {m}")));
    }
    let (l, lp) = (k + 1, k - m + 1);
    let h_l = hamiltonian_of(model, l)?;
    let h_lp = hamiltonian_of(model, lp)?;
    let chi = model.env().bond_state(lp - 1)?;
    let w = connected_pair(model, lp, l, &chi)?;
    let g = model.g();
    Ok(double_commutator(&h_l, &h_lp, &w, model.system_dim(), basis)?.scale(-g * g * model.tau()))
}

/// Stationary correlation kernel `K_m[ρ] = [⟨H⟩,[⟨H⟩,ρ]] − ⟨[H_{m+1},[H_1, ρ ⊗ I]]⟩`
/// evaluated at the fixed point `χ*` of the bond free evolution.
pub fn correlation_kernel(model: &CollisionModel, m: usize) -> Result<Superoperator> {
    if m == 0 {
        return Err(Error::InvalidArgument("correlation kernel needs m ≥ 1".into()));
    }
    let stationary = model.env().stationary_bond_state()?;
    correlation_kernel_at(model, m, &stationary)
}

fn correlation_kernel_at(model: &CollisionModel, m: usize, chi: &BondState) -> Result<Superoperator> {
    let h1 = hamiltonian_of(model, 1)?;
    let h2 = hamiltonian_of(model, m + 1)?;
    let chi = BondState { site_index: 0, matrix: chi.matrix.clone() };
    let w = connected_pair(model, 1, m + 1, &chi)?;
    Ok(double_commutator(&h2, &h1, &w, model.system_dim(), &gell_mann_basis(model.mode_dim()))?.scale(-1.0))
}

/// How `L_local` is obtained from the two-collision map `Φ̃₁₂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LocalForm {
    /// `log(Φ̃₁₂)/(2τ)`: exact generator of the two-collision map.
    #[default]
    Logarithm,
    /// `(Φ̃₁₂ − Id)/(2τ)`.
    Difference,
}

/// Joint state of the two particles entering `Φ̃₁₂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairState {
    #[default]
    Correlated,
    Product,
}

/// Weight attached to the correlation kernel `K₁`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NonlocalWeight {
    /// `g²τ [1/(1 − λ) − ½ λ⁰·[correlated pair]] K₁`: the geometric tail of
    /// `K_m = λ^{m−1} K₁` minus the `m = 1` term already inside a correlated
    /// `Φ̃₁₂`.
    #[default]
    Consistent,
    /// `½ g²τ (1/λ − 1)⁻¹ L_nonlocal` with `L_nonlocal = K₁/λ`.
    Printed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StroboscopicOptions {
    pub local: LocalForm,
    pub pair_state: PairState,
    pub weight: NonlocalWeight,
}

#[derive(Clone, Debug)]
pub struct StroboscopicGenerator {
    pub l: Superoperator,
    pub l_local: Superoperator,
    /// `K₁/λ₂`; zero when `K₁` vanishes, `None` when `λ₂ = 0` but `K₁ ≠ 0`.
    pub l_nonlocal: Option<Superoperator>,
    pub k1: Superoperator,
    pub spectrum: TransferSpectrum,
    pub stationary: BondState,
}

/// GKSL generator of the stroboscopic limit for a homogeneous model.
pub fn stroboscopic_generator(model: &CollisionModel, options: StroboscopicOptions) -> Result<StroboscopicGenerator> {
    let env = model.env();
    let spectrum = env.transfer_spectrum()?;
    let stationary = env.stationary_bond_state()?;
    let ds = model.system_dim();
    let md = model.mode_dim();
    let tau = model.tau();
    let g = model.g();

    let chi = BondState { site_index: 0, matrix: stationary.matrix.clone() };
    let d1 = env.level_dim(1)?;
    let d2 = env.level_dim(2)?;
    let pair = match options.pair_state {
        PairState::Correlated => env.two_site_reduced_state(1, 2, &chi)?,
        PairState::Product => {
            let r1 = env.site_reduced_state(&chi)?;
            let chi1 = env.evolve_bond_state(&chi)?;
            kron(&r1, &env.site_reduced_state(&chi1)?)
        }
    };
    let pair = pad_pair(&pair, d1, d2, md)?;
    let dims = [ds, md, md];
    let u1 = embed_operator(model.interaction(1)?.unitary(), &[0, 1], &dims)?;
    let u2 = embed_operator(model.interaction(2)?.unitary(), &[0, 2], &dims)?;
    let u = &u2 * &u1;
    let phi12 = Superoperator::from_fn(ds, ds, |rho| {
        let joint = &u * kron(rho, &pair) * u.adjoint();
        Ok(MultiIndexOperator::new(dims.to_vec(), joint)?.partial_trace(&[0])?.into_matrix())
    })?;
    let l_local = match options.local {
        LocalForm::Logarithm => Superoperator::new(ds, ds, logm(phi12.matrix())?)?.scale(0.5 / tau),
        LocalForm::Difference => phi12.sub(&Superoperator::identity(ds))?.scale(0.5 / tau),
    };

    let k1 = correlation_kernel_at(model, 1, &stationary)?;
    let lambda = spectrum.signed_ratio();
    let k1_vanishes = k1.norm() < 1e-14;
    let l_nonlocal = if k1_vanishes {
        Some(Superoperator::zero(ds, ds))
    } else if lambda.abs() > 1e-14 {
        Some(k1.scale(1.0 / lambda))
    } else {
        None
    };
    let weight = match options.weight {
        NonlocalWeight::Consistent => {
            let overlap = if options.pair_state == PairState::Correlated { 0.5 } else { 0.0 };
            g * g * tau * (1.0 / (1.0 - lambda) - overlap)
        }
        NonlocalWeight::Printed => 0.5 * g * g * tau / (1.0 - lambda),
    };
    let l = l_local.add(&k1.scale(weight))?;
    let residual = l.trace_annihilation_residual();
    if residual > 1e-10 {
        return Err(Error::Numerical(format!("generator does not annihilate the trace (residual {residual:e})")));
    }
    Ok(StroboscopicGenerator { l, l_local, l_nonlocal, k1, spectrum, stationary })
}

/// `ρ(t) = exp(tL)[ρ₀]`.
pub fn evolve_gksl(l: &Superoperator, rho0: &CMatrix, t: f64) -> Result<CMatrix> {
    let rho = l.exp(t)?.apply(rho0)?;
    let tr = rho.trace();
    if (tr - rho0.trace()).norm() > 1e-10 {
        return Err(Error::Numerical(format!("GKSL evolution changed the trace to {tr}")));
    }
    Ok(rho)
}
