//! Correlated environments as right-canonical matrix product states.
//!
//! Site `k` (1-based) carries matrices `B[k][p]` of shape `D_{k-1} × D_k`, one
//! per physical index `p`. The environment also carries `chi0`, the density
//! matrix of the leftmost bond, which encodes both mixtures (direct sums of
//! pure MPSs) and the traced-out past of an infinite chain.
//!
//! A physical index may be split as `p = level · spectator_dim + c`, where
//! only the level part couples to the system and the spectator part is a
//! purifying ancilla that is always traced out. Ordinary environments have
//! `spectator_dim = 1`; [`MpsEnvironment::decorrelate`] uses spectators to
//! write mixed product states with unit bond dimension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{
    c64, eigenvalues, eigh, hermitian_part, hermiticity_residual, identity, lq_factorize,
    min_eigenvalue, null_vector, sqrt_psd, CMatrix, MultiIndexOperator, C64,
};

/// Residual accepted when validating right-canonical input.
pub const CANONICAL_TOL: f64 = 1e-10;
/// Relative singular-value cutoff of the canonicalization sweep.
pub const RANK_CUTOFF: f64 = 1e-12;
/// `|λ₂|` at or above `1 − INFINITE_CORRELATION_GAP` counts as infinite
/// correlation length.
pub const INFINITE_CORRELATION_GAP: f64 = 1e-10;
/// Upper bound on `d^k` for [`MpsEnvironment::reduced_density_prefix`].
pub const PREFIX_GUARD: usize = 1 << 14;

/// The matrices `B[p]` of one site.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    matrices: Vec<CMatrix>,
}

impl SiteTensor {
    pub fn new(matrices: Vec<CMatrix>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidArgument("site tensor without physical levels".into()))?;
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::DimensionMismatch("site matrices must be non-empty".into()));
        }
        if matrices.iter().any(|m| m.shape() != shape) {
            return Err(Error::DimensionMismatch("site matrices differ in shape".into()));
        }
        if matrices.iter().any(|m| !crate::linalg::is_finite(m)) {
            return Err(Error::InvalidArgument("site matrices must be finite".into()));
        }
        Ok(Self { matrices })
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, p: usize) -> Option<&CMatrix> {
        self.matrices.get(p)
    }

    pub fn physical_dim(&self) -> usize {
        self.matrices.len()
    }

    pub fn left_dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn right_dim(&self) -> usize {
        self.matrices[0].ncols()
    }

    /// `‖Σ_p B[p] B[p]† − I‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.left_dim();
        let sum = self
            .matrices
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, b| acc + b * b.adjoint());
        (sum - identity(d)).norm()
    }

    /// Bond free evolution `χ ↦ Σ_p B[p]ᵀ χ B[p]*`.
    pub fn free_evolve(&self, chi: &CMatrix) -> CMatrix {
        let d = self.right_dim();
        self.matrices
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, b| acc + b.transpose() * chi * b.conjugate())
    }

    /// Superoperator matrix of the free evolution on column-stacked bond
    /// operators.
    pub fn free_map_matrix(&self) -> CMatrix {
        let (l, r) = (self.left_dim(), self.right_dim());
        self.matrices
            .iter()
            .fold(CMatrix::zeros(r * r, l * l), |acc, b| acc + b.adjoint().kronecker(&b.transpose()))
    }

    /// Transfer matrix `T[(a,a'),(b,b')] = Σ_p B[p]_{ab} B[p]*_{a'b'}`.
    pub fn transfer_matrix(&self) -> CMatrix {
        let (l, r) = (self.left_dim(), self.right_dim());
        self.matrices
            .iter()
            .fold(CMatrix::zeros(l * l, r * r), |acc, b| acc + b.kronecker(&b.conjugate()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Chain {
    /// One tensor repeated forever.
    Homogeneous(SiteTensor),
    Finite(Vec<SiteTensor>),
}

/// Density matrix `χ_k` of bond `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BondState {
    pub site_index: usize,
    pub matrix: CMatrix,
}

impl BondState {
    pub fn new(site_index: usize, matrix: CMatrix) -> Result<Self> {
        validate_density(&matrix, 1e-10)?;
        Ok(Self { site_index, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub(crate) fn validate_density(m: &CMatrix, tol: f64) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidState(format!("density matrix has shape {:?}", m.shape())));
    }
    let herm = hermiticity_residual(m);
    if herm > tol {
        return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
    }
    let tr = m.trace();
    if (tr - c64(1.0, 0.0)).norm() > tol {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let min = min_eigenvalue(m)?;
    if min < -tol {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Spectrum summary of a homogeneous transfer matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferSpectrum {
    /// All eigenvalues sorted by decreasing modulus.
    pub eigenvalues: Vec<C64>,
    pub second: C64,
    /// `−1 / ln|λ₂|`; zero when `λ₂ = 0`.
    pub correlation_length: f64,
    /// Sign of `Re λ₂`.
    pub sign: f64,
}

impl TransferSpectrum {
    /// Real ratio `±|λ₂|` by which successive two-point correlations scale.
    pub fn signed_ratio(&self) -> f64 {
        self.sign * self.second.norm()
    }

    pub fn is_complex(&self) -> bool {
        self.second.im.abs() > 1e-10
    }
}

/// A correlated environment: site tensors in right-canonical form plus the
/// initial bond density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsEnvironment {
    chain: Chain,
    chi0: CMatrix,
    spectator_dim: usize,
}

impl MpsEnvironment {
    pub fn homogeneous(site: SiteTensor, chi0: CMatrix) -> Result<Self> {
        Self::build(Chain::Homogeneous(site), chi0, 1)
    }

    pub fn finite(sites: Vec<SiteTensor>, chi0: CMatrix) -> Result<Self> {
        Self::build(Chain::Finite(sites), chi0, 1)
    }

    /// Same as the plain constructors but with a purifying spectator factor of
    /// dimension `spectator_dim` in every physical index.
    pub fn with_spectators(chain: Chain, chi0: CMatrix, spectator_dim: usize) -> Result<Self> {
        Self::build(chain, chi0, spectator_dim)
    }

    fn build(chain: Chain, chi0: CMatrix, spectator_dim: usize) -> Result<Self> {
        validate_density(&chi0, 1e-12)?;
        if spectator_dim == 0 {
            return Err(Error::InvalidArgument("spectator dimension must be positive".into()));
        }
        let sites: &[SiteTensor] = match &chain {
            Chain::Homogeneous(s) => std::slice::from_ref(s),
            Chain::Finite(v) => v,
        };
        if sites.is_empty() {
            return Err(Error::InvalidArgument("environment without sites".into()));
        }
        let mut left = chi0.nrows();
        for (k, site) in sites.iter().enumerate() {
            if site.left_dim() != left {
                return Err(Error::DimensionMismatch(format!(
                    "site {} has left bond {} but the preceding bond is {}",
                    k + 1,
                    site.left_dim(),
                    left
                )));
            }
            if site.physical_dim() % spectator_dim != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "site {} physical dim {} is not a multiple of spectator dim {}",
                    k + 1,
                    site.physical_dim(),
                    spectator_dim
                )));
            }
            left = site.right_dim();
        }
        if let Chain::Homogeneous(s) = &chain {
            if s.left_dim() != s.right_dim() {
                return Err(Error::DimensionMismatch("homogeneous site must be square".into()));
            }
        }
        let env = Self { chain, chi0, spectator_dim };
        let residual = env.check_right_canonical();
        if residual > CANONICAL_TOL {
            return Err(Error::NotCanonical(residual));
        }
        Ok(env)
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn chi0(&self) -> &CMatrix {
        &self.chi0
    }

    pub fn spectator_dim(&self) -> usize {
        self.spectator_dim
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.chain, Chain::Homogeneous(_))
    }

    /// Number of sites; `None` for an unbounded homogeneous chain.
    pub fn len(&self) -> Option<usize> {
        match &self.chain {
            Chain::Homogeneous(_) => None,
            Chain::Finite(v) => Some(v.len()),
        }
    }

    /// Site `k ≥ 1`.
    pub fn site(&self, k: usize) -> Result<&SiteTensor> {
        match &self.chain {
            Chain::Homogeneous(s) if k >= 1 => Ok(s),
            Chain::Finite(v) if k >= 1 && k <= v.len() => Ok(&v[k - 1]),
            Chain::Homogeneous(_) => Err(Error::SiteOutOfRange { site: k, len: usize::MAX }),
            Chain::Finite(v) => Err(Error::SiteOutOfRange { site: k, len: v.len() }),
        }
    }

    /// Dimension of bond `k` (bond 0 is the one carrying `chi0`).
    pub fn bond_dim(&self, k: usize) -> Result<usize> {
        if k == 0 {
            Ok(self.chi0.nrows())
        } else {
            Ok(self.site(k)?.right_dim())
        }
    }

    /// Number of coupling levels at site `k` (physical dim without spectators).
    pub fn level_dim(&self, k: usize) -> Result<usize> {
        Ok(self.site(k)?.physical_dim() / self.spectator_dim)
    }

    /// Largest level dimension over the chain.
    pub fn max_level_dim(&self) -> usize {
        let sites: &[SiteTensor] = match &self.chain {
            Chain::Homogeneous(s) => std::slice::from_ref(s),
            Chain::Finite(v) => v,
        };
        sites.iter().map(|s| s.physical_dim() / self.spectator_dim).max().unwrap_or(0)
    }

    /// `max_k ‖Σ_p B[k][p] B[k][p]† − I‖_F`.
    pub fn check_right_canonical(&self) -> f64 {
        match &self.chain {
            Chain::Homogeneous(s) => s.completeness_residual(),
            Chain::Finite(v) => v.iter().map(SiteTensor::completeness_residual).fold(0.0, f64::max),
        }
    }

    pub fn initial_bond_state(&self) -> BondState {
        BondState { site_index: 0, matrix: self.chi0.clone() }
    }

    /// `χ_k = Σ_p B[k][p]ᵀ χ_{k−1} B[k][p]*`.
    pub fn evolve_bond_state(&self, chi: &BondState) -> Result<BondState> {
        let site = self.site(chi.site_index + 1)?;
        if site.left_dim() != chi.dim() {
            return Err(Error::DimensionMismatch(format!(
                "bond state of dim {} entering site {} with left bond {}",
                chi.dim(),
                chi.site_index + 1,
                site.left_dim()
            )));
        }
        Ok(BondState { site_index: chi.site_index + 1, matrix: site.free_evolve(&chi.matrix) })
    }

    /// `χ_k` obtained by free evolution from `χ_0`.
    pub fn bond_state(&self, k: usize) -> Result<BondState> {
        let mut chi = self.initial_bond_state();
        for _ in 0..k {
            chi = self.evolve_bond_state(&chi)?;
        }
        Ok(chi)
    }

    /// All bond states `χ_0 … χ_k`.
    pub fn bond_states(&self, k: usize) -> Result<Vec<BondState>> {
        let mut out = Vec::with_capacity(k + 1);
        out.push(self.initial_bond_state());
        for j in 0..k {
            let next = self.evolve_bond_state(&out[j])?;
            out.push(next);
        }
        Ok(out)
    }

    /// `X[p][p'] = B[p]ᵀ χ B[p']*` for every pair of physical indices.
    fn pair_blocks(site: &SiteTensor, chi: &CMatrix) -> Vec<Vec<CMatrix>> {
        let left: Vec<CMatrix> = site.matrices.iter().map(|b| b.transpose() * chi).collect();
        left.iter()
            .map(|l| site.matrices.iter().map(|b| l * b.conjugate()).collect())
            .collect()
    }

    /// Reduced state of site `k = χ.site_index + 1` over its coupling levels.
    pub fn site_reduced_state(&self, chi: &BondState) -> Result<CMatrix> {
        let k = chi.site_index + 1;
        let site = self.site(k)?;
        if site.left_dim() != chi.dim() {
            return Err(Error::DimensionMismatch(format!(
                "bond state of dim {} entering site {k} with left bond {}",
                chi.dim(),
                site.left_dim()
            )));
        }
        let s = self.spectator_dim;
        let d = site.physical_dim() / s;
        let mut rho = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::default();
                for c in 0..s {
                    let x = site.matrices[i * s + c].transpose() * &chi.matrix;
                    acc += (x * site.matrices[j * s + c].conjugate()).trace();
                }
                rho[(i, j)] = acc;
            }
        }
        Ok(rho)
    }

    /// Joint reduced state of sites `l < l2`, level indices with site `l` most
    /// significant. `chi` must be `χ_{l−1}`.
    pub fn two_site_reduced_state(&self, l: usize, l2: usize, chi: &BondState) -> Result<CMatrix> {
        if l == 0 || l >= l2 {
            return Err(Error::InvalidArgument(format!("two-site state needs 1 ≤ l < l', got ({l}, {l2})")));
        }
        if chi.site_index + 1 != l {
            return Err(Error::InvalidArgument(format!(
                "bond state is χ_{} but χ_{} is required",
                chi.site_index,
                l - 1
            )));
        }
        let first = self.site(l)?;
        let last = self.site(l2)?;
        if first.left_dim() != chi.dim() {
            return Err(Error::DimensionMismatch("bond state does not match site l".into()));
        }
        let s = self.spectator_dim;
        let d1 = first.physical_dim() / s;
        let d2 = last.physical_dim() / s;
        let mut blocks = Self::pair_blocks(first, &chi.matrix);
        for k in (l + 1)..l2 {
            let mid = self.site(k)?;
            for row in blocks.iter_mut() {
                for x in row.iter_mut() {
                    *x = mid.free_evolve(x);
                }
            }
        }
        let mut rho = CMatrix::zeros(d1 * d2, d1 * d2);
        for i in 0..d1 {
            for ip in 0..d1 {
                // spectators of site l are traced: sum the diagonal spectator blocks
                let mut x = CMatrix::zeros(first.right_dim(), first.right_dim());
                for c in 0..s {
                    x += &blocks[i * s + c][ip * s + c];
                }
                for j in 0..d2 {
                    for jp in 0..d2 {
                        let mut acc = C64::default();
                        for c in 0..s {
                            let y = last.matrices[j * s + c].transpose() * &x;
                            acc += (y * last.matrices[jp * s + c].conjugate()).trace();
                        }
                        rho[(i * d2 + j, ip * d2 + jp)] = acc;
                    }
                }
            }
        }
        Ok(rho)
    }

    /// Exact `ρ_{1…k}` on coupling levels, with the future replaced by the
    /// identity line and the past by `χ_0`.
    pub fn reduced_density_prefix(&self, k: usize) -> Result<MultiIndexOperator> {
        if k == 0 {
            return Err(Error::InvalidArgument("prefix of zero sites".into()));
        }
        let s = self.spectator_dim;
        let mut level_dims = Vec::with_capacity(k);
        for j in 1..=k {
            level_dims.push(self.level_dim(j)?);
        }
        let total: usize = level_dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
        if total > PREFIX_GUARD {
            return Err(Error::SizeGuard(format!("d^k = {total} exceeds {PREFIX_GUARD}")));
        }
        // amplitudes W[(levels),(spectators)] = sqrt(χ0)ᵀ B[1] ... B[k], a D0 × Dk matrix each
        let root = sqrt_psd(&self.chi0)?.transpose();
        let mut amps: Vec<(usize, usize, CMatrix)> = vec![(0, 0, root)];
        let mut spect_total = 1usize;
        for j in 1..=k {
            let site = self.site(j)?;
            let d = level_dims[j - 1];
            let mut next = Vec::with_capacity(amps.len() * site.physical_dim());
            for (lev, spec, m) in &amps {
                for i in 0..d {
                    for c in 0..s {
                        next.push((lev * d + i, spec * s + c, m * &site.matrices[i * s + c]));
                    }
                }
            }
            amps = next;
            spect_total *= s;
        }
        let d0 = self.chi0.nrows();
        let dk = self.bond_dim(k)?;
        let cols = spect_total * d0 * dk;
        let mut v = CMatrix::zeros(total, cols);
        for (lev, spec, m) in &amps {
            for a in 0..d0 {
                for b in 0..dk {
                    v[(*lev, (spec * d0 + a) * dk + b)] = m[(a, b)];
                }
            }
        }
        MultiIndexOperator::new(level_dims, &v * v.adjoint())
    }

    /// The repeating bulk tensor: the homogeneous site, or the common interior
    /// tensor of a finite chain with at least three sites.
    pub fn bulk_tensor(&self) -> Result<&SiteTensor> {
        match &self.chain {
            Chain::Homogeneous(s) => Ok(s),
            Chain::Finite(v) if v.len() >= 3 => {
                let interior = &v[1..v.len() - 1];
                let first = &interior[0];
                if interior.iter().all(|t| t == first) {
                    Ok(first)
                } else {
                    Err(Error::NotHomogeneous)
                }
            }
            Chain::Finite(_) => Err(Error::NotHomogeneous),
        }
    }

    pub fn transfer_matrix(&self) -> Result<CMatrix> {
        Ok(self.bulk_tensor()?.transfer_matrix())
    }

    /// Second eigenvalue of the transfer matrix and the correlation length.
    pub fn transfer_spectrum(&self) -> Result<TransferSpectrum> {
        let t = self.transfer_matrix()?;
        let mut values = eigenvalues(&t)?;
        values.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        let leading = values[0];
        if (leading - c64(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::Numerical(format!("leading transfer eigenvalue {leading} differs from 1")));
        }
        let second = values.get(1).copied().unwrap_or_default();
        let modulus = second.norm();
        if modulus >= 1.0 - INFINITE_CORRELATION_GAP {
            return Err(Error::InfiniteCorrelationLength(modulus));
        }
        if second.im.abs() > 1e-10 {
            log::warn!("complex second transfer eigenvalue {second}; using |λ₂| with the sign of Re λ₂");
        }
        let correlation_length = if modulus < 1e-300 { 0.0 } else { -1.0 / modulus.ln() };
        let sign = if second.re < 0.0 { -1.0 } else { 1.0 };
        Ok(TransferSpectrum { eigenvalues: values, second, correlation_length, sign })
    }

    /// Fixed point of the bulk free evolution.
    pub fn stationary_bond_state(&self) -> Result<BondState> {
        self.transfer_spectrum()?;
        let site = self.bulk_tensor()?;
        let d = site.left_dim();
        let f = site.free_map_matrix() - identity(d * d);
        let v = null_vector(&f)?;
        let chi = CMatrix::from_column_slice(d, d, v.as_slice());
        let tr = chi.trace();
        if tr.norm() < 1e-12 {
            return Err(Error::Numerical("stationary bond state has zero trace".into()));
        }
        let chi = hermitian_part(&chi.unscale(1.0).map(|z| z / tr));
        BondState::new(0, chi)
    }

    /// Product environment with the same single-site marginals and no
    /// inter-site correlations. Homogeneous chains whose `χ_0` is already
    /// stationary stay homogeneous; otherwise the first `horizon` sites are
    /// kept (finite chains keep their own length).
    pub fn decorrelate(&self, horizon: usize) -> Result<MpsEnvironment> {
        let all_unit = match &self.chain {
            Chain::Homogeneous(s) => s.left_dim() == 1,
            Chain::Finite(v) => v.iter().all(|s| s.left_dim() == 1 && s.right_dim() == 1),
        };
        if all_unit && self.chi0.nrows() == 1 {
            return Ok(self.clone());
        }
        let stationary = self.is_homogeneous() && {
            let next = self.evolve_bond_state(&self.initial_bond_state())?;
            (next.matrix - &self.chi0).norm() < 1e-12
        };
        let n = match self.len() {
            Some(n) => n,
            None if stationary => 1,
            None => horizon,
        };
        if n == 0 {
            return Err(Error::InvalidArgument("decorrelation horizon must be positive".into()));
        }
        let mut marginals = Vec::with_capacity(n);
        let mut chi = self.initial_bond_state();
        for _ in 0..n {
            marginals.push(self.site_reduced_state(&chi)?);
            if marginals.len() < n {
                chi = self.evolve_bond_state(&chi)?;
            }
        }
        let decomps: Vec<(Vec<f64>, CMatrix)> = marginals.iter().map(eigh).collect::<Result<_>>()?;
        let rank = decomps
            .iter()
            .map(|(vals, _)| vals.iter().filter(|&&v| v > 1e-14).count())
            .max()
            .unwrap_or(1)
            .max(1);
        let sites = decomps
            .iter()
            .map(|(vals, vecs)| {
                let d = vals.len();
                let mut mats = Vec::with_capacity(d * rank);
                for i in 0..d {
                    for c in 0..rank {
                        // eigenvalues ascend: take the `rank` largest
                        let col = d - 1 - c;
                        let w = vals[col].max(0.0).sqrt();
                        mats.push(CMatrix::from_element(1, 1, vecs[(i, col)] * w));
                    }
                }
                SiteTensor::new(mats)
            })
            .collect::<Result<Vec<_>>>()?;
        let chain = if stationary {
            Chain::Homogeneous(sites.into_iter().next().expect("one site"))
        } else {
            Chain::Finite(sites)
        };
        Self::with_spectators(chain, identity(1), rank)
    }

    /// Amplitude tensor of the first `n` sites: rows index the physical
    /// configuration `(p_1 … p_n)` (first site most significant) times the
    /// left boundary `a_0`, columns the open right bond `a_n`. Row
    /// `a_0 · d^n + config`.
    pub fn amplitudes(&self, n: usize) -> Result<CMatrix> {
        let d0 = self.chi0.nrows();
        let mut blocks: Vec<CMatrix> = (0..d0)
            .map(|a| {
                let mut row = CMatrix::zeros(1, d0);
                row[(0, a)] = c64(1.0, 0.0);
                row
            })
            .collect();
        for k in 1..=n {
            let site = self.site(k)?;
            blocks = blocks
                .iter()
                .flat_map(|m| site.matrices.iter().map(move |b| m * b))
                .collect();
        }
        let dn = self.bond_dim(n)?;
        let mut out = CMatrix::zeros(blocks.len(), dn);
        for (r, m) in blocks.iter().enumerate() {
            out.set_row(r, &m.row(0));
        }
        Ok(out)
    }

    pub fn to_document(&self) -> EnvironmentDocument {
        let (sites, homogeneous) = match &self.chain {
            Chain::Homogeneous(s) => (vec![s.matrices.iter().map(json::to_rows).collect()], true),
            Chain::Finite(v) => (
                v.iter().map(|s| s.matrices.iter().map(json::to_rows).collect()).collect(),
                false,
            ),
        };
        EnvironmentDocument {
            sites,
            chi0: json::to_rows(&self.chi0),
            homogeneous,
            spectator_dim: self.spectator_dim,
        }
    }

    pub fn from_document(doc: &EnvironmentDocument) -> Result<Self> {
        let sites = doc
            .sites
            .iter()
            .map(|s| {
                let mats = s
                    .iter()
                    .map(|r| json::from_rows(r).map_err(Error::InvalidArgument))
                    .collect::<Result<Vec<_>>>()?;
                SiteTensor::new(mats)
            })
            .collect::<Result<Vec<_>>>()?;
        let chi0 = json::from_rows(&doc.chi0).map_err(Error::InvalidArgument)?;
        let chain = if doc.homogeneous {
            if sites.len() != 1 {
                return Err(Error::InvalidArgument("a homogeneous environment lists exactly one site".into()));
            }
            Chain::Homogeneous(sites.into_iter().next().expect("one site"))
        } else {
            Chain::Finite(sites)
        };
        Self::with_spectators(chain, chi0, doc.spectator_dim)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EnvironmentDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }
}

/// Serialized environment: `{sites: [[matrix per physical index]], chi0,
/// homogeneous}` with matrices as row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentDocument {
    pub sites: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
    pub chi0: Vec<Vec<[f64; 2]>>,
    pub homogeneous: bool,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub spectator_dim: usize,
}

fn one() -> usize {
    1
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

/// An open-boundary MPS in arbitrary gauge: site 1 is `1 × D_1`, site `n` is
/// `D_{n−1} × 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawMps {
    pub sites: Vec<Vec<CMatrix>>,
}

impl RawMps {
    pub fn new(sites: Vec<Vec<CMatrix>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("MPS without sites".into()));
        }
        let mut left = 1usize;
        for (k, site) in sites.iter().enumerate() {
            let st = SiteTensor::new(site.clone())?;
            if st.left_dim() != left {
                return Err(Error::DimensionMismatch(format!("site {} left bond {} ≠ {left}", k + 1, st.left_dim())));
            }
            left = st.right_dim();
        }
        if left != 1 {
            return Err(Error::DimensionMismatch("last site must close the chain".into()));
        }
        Ok(Self { sites })
    }

    /// A pure finite environment viewed as a raw MPS.
    pub fn from_environment(env: &MpsEnvironment) -> Result<Self> {
        match &env.chain {
            Chain::Finite(v) if env.chi0.nrows() == 1 && env.spectator_dim == 1 => {
                Self::new(v.iter().map(|s| s.matrices.clone()).collect())
            }
            _ => Err(Error::InvalidArgument("only pure finite environments convert to a raw MPS".into())),
        }
    }
}

/// Right-to-left LQ sweep of a single pure MPS. The norm is dropped.
fn canonicalize_pure(raw: &RawMps) -> Result<Vec<SiteTensor>> {
    let n = raw.sites.len();
    let mut sites: Vec<Vec<CMatrix>> = raw.sites.clone();
    for k in (0..n).rev() {
        let d = sites[k].len();
        let (left, right) = sites[k][0].shape();
        let mut m = CMatrix::zeros(left, d * right);
        for (i, b) in sites[k].iter().enumerate() {
            m.view_mut((0, i * right), (left, right)).copy_from(b);
        }
        let (l, q) = lq_factorize(&m);
        if k == 0 {
            let norm = l.norm();
            if norm < 1e-300 || !norm.is_finite() {
                return Err(Error::ZeroNorm);
            }
            // rows of q are orthonormal; l is the 1×1 norm-and-phase factor
            let phase = l[(0, 0)] / norm;
            let q = q.map(|z| z * phase);
            sites[0] = (0..d).map(|i| q.view((0, i * right), (1, right)).into_owned()).collect();
            break;
        }
        // rank revelation on the small factor L
        let svd = l.clone().svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::Numerical("SVD failed in canonicalization".into())),
        };
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        if smax < 1e-300 {
            return Err(Error::ZeroNorm);
        }
        let rank = svd.singular_values.iter().filter(|&&s| s > RANK_CUTOFF * smax).count();
        let mut l_kept = CMatrix::zeros(left, rank);
        let mut q_kept = CMatrix::zeros(rank, d * right);
        let mut col = 0;
        for (j, &s) in svd.singular_values.iter().enumerate() {
            if s > RANK_CUTOFF * smax {
                l_kept.set_column(col, &u.column(j).scale(s));
                q_kept.set_row(col, &(v_t.row(j) * &q));
                col += 1;
            }
        }
        sites[k] = (0..d).map(|i| q_kept.view((0, i * right), (rank, right)).into_owned()).collect();
        sites[k - 1] = sites[k - 1].iter().map(|b| b * &l_kept).collect();
    }
    sites.into_iter().map(SiteTensor::new).collect()
}

/// Right-canonical environment for the mixture `Σ_q w_q |ψ_q⟩⟨ψ_q|` of pure
/// MPSs. Weights are normalized; each component is canonicalized separately
/// and the results are joined by a direct sum with `χ_0 = diag(w_q)`.
pub fn right_canonicalize(components: &[(f64, RawMps)]) -> Result<MpsEnvironment> {
    let kept: Vec<&(f64, RawMps)> = components.iter().filter(|(w, _)| *w > 0.0).collect();
    if kept.is_empty() {
        return Err(Error::ZeroNorm);
    }
    if components.iter().any(|(w, _)| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidArgument("mixture weights must be finite and non-negative".into()));
    }
    let n = kept[0].1.sites.len();
    let dims: Vec<usize> = kept[0].1.sites.iter().map(Vec::len).collect();
    for (_, raw) in &kept {
        if raw.sites.iter().map(Vec::len).collect::<Vec<_>>() != dims {
            return Err(Error::DimensionMismatch("mixture components differ in physical dims".into()));
        }
    }
    let total: f64 = kept.iter().map(|(w, _)| w).sum();
    let canon: Vec<Vec<SiteTensor>> = kept.iter().map(|(_, raw)| canonicalize_pure(raw)).collect::<Result<_>>()?;
    let mut sites = Vec::with_capacity(n);
    for k in 0..n {
        let mats = (0..dims[k])
            .map(|i| direct_sum(canon.iter().map(|c| &c[k].matrices[i])))
            .collect();
        sites.push(SiteTensor::new(mats)?);
    }
    let weights: Vec<f64> = kept.iter().map(|(w, _)| w / total).collect();
    MpsEnvironment::finite(sites, crate::linalg::diag(&weights))
}

fn direct_sum<'a>(blocks: impl Iterator<Item = &'a CMatrix> + Clone) -> CMatrix {
    let rows: usize = blocks.clone().map(|b| b.nrows()).sum();
    let cols: usize = blocks.clone().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, kron, real_matrix, CVector};
    use crate::models::{aklt_env, cluster_env, ghz_env, single_photon_env, spin1, two_photon_env};

    fn dm_close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    /// Brute-force single-site marginal from a full state vector.
    fn marginal_from_vector(psi: &CVector, n: usize, d: usize, site: usize) -> CMatrix {
        let rho = psi * psi.adjoint();
        let op = MultiIndexOperator::new(vec![d; n], rho).unwrap();
        op.partial_trace(&[site]).unwrap().into_matrix()
    }

    fn pure_vector(env: &MpsEnvironment) -> CVector {
        let n = env.len().unwrap();
        let amps = env.amplitudes(n).unwrap();
        CVector::from_column_slice(amps.column(0).as_slice())
    }

    #[test]
    fn aklt_and_cluster_are_canonical() {
        assert!(aklt_env().check_right_canonical() < 1e-15);
        assert!(cluster_env().check_right_canonical() < 1e-15);
    }

    #[test]
    fn scaled_tensors_report_residual() {
        let site = cluster_env().bulk_tensor().unwrap().clone();
        let scaled = SiteTensor::new(site.matrices().iter().map(|b| b.scale(2.0)).collect()).unwrap();
        assert!((scaled.completeness_residual() - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        let err = MpsEnvironment::homogeneous(scaled, diag(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::NotCanonical(_)));
    }

    #[test]
    fn single_photon_canonicalization_reproduces_amplitudes() {
        let raw = [0.3, -0.5, 0.2, 0.7, 0.1];
        let norm = raw.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        let amps: Vec<C64> = raw.iter().map(|&x| c64(x / norm, 0.0)).collect();
        let env = single_photon_env(&amps).unwrap();
        assert!(env.check_right_canonical() < 1e-12);
        let psi = pure_vector(&env);
        let n = amps.len();
        let mut expect = CVector::zeros(1 << n);
        for (k, a) in amps.iter().enumerate() {
            expect[1 << (n - 1 - k)] = *a;
        }
        // global phase
        let overlap = expect.dotc(&psi);
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
        assert!((psi.scale(1.0) - expect.map(|z| z * overlap)).norm() < 1e-12);
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let env = ghz_env(5).unwrap();
        let raw = RawMps::from_environment(&env).unwrap();
        let again = right_canonicalize(&[(1.0, raw)]).unwrap();
        assert!(again.check_right_canonical() < 1e-12);
        for k in 1..=5 {
            let a = env.reduced_density_prefix(k).unwrap();
            let b = again.reduced_density_prefix(k).unwrap();
            assert!(dm_close(a.matrix(), b.matrix(), 1e-10));
        }
    }

    #[test]
    fn ghz_marginals_are_maximally_mixed() {
        let n = 6;
        let env = ghz_env(n).unwrap();
        assert_eq!(env.bond_dim(2).unwrap(), 2);
        let psi = pure_vector(&env);
        let bond = env.bond_states(n).unwrap();
        for k in 0..n {
            let brute = marginal_from_vector(&psi, n, 2, k);
            assert!(dm_close(&brute, &identity(2).scale(0.5), 1e-12));
            let fast = env.site_reduced_state(&bond[k]).unwrap();
            assert!(dm_close(&fast, &brute, 1e-12));
        }
    }

    #[test]
    fn zero_state_is_rejected() {
        let z = CMatrix::zeros(1, 1);
        let raw = RawMps::new(vec![vec![z.clone(), z.clone()], vec![z.clone(), z]]).unwrap();
        assert!(matches!(right_canonicalize(&[(1.0, raw)]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn mixture_builds_direct_sum() {
        let up = RawMps::new(vec![vec![real_matrix(1, 1, &[1.0]), real_matrix(1, 1, &[0.0])]]).unwrap();
        let down = RawMps::new(vec![vec![real_matrix(1, 1, &[0.0]), real_matrix(1, 1, &[1.0])]]).unwrap();
        let env = right_canonicalize(&[(3.0, up), (1.0, down)]).unwrap();
        assert!(dm_close(env.chi0(), &diag(&[0.75, 0.25]), 1e-15));
        let rho = env.site_reduced_state(&env.initial_bond_state()).unwrap();
        assert!(dm_close(&rho, &diag(&[0.75, 0.25]), 1e-14));
    }

    #[test]
    fn aklt_bond_fixed_point() {
        let env = aklt_env();
        let chi1 = env.evolve_bond_state(&env.initial_bond_state()).unwrap();
        assert!(dm_close(&chi1.matrix, &identity(2).scale(0.5), 1e-15));
        let stat = env.stationary_bond_state().unwrap();
        assert!(dm_close(&stat.matrix, &identity(2).scale(0.5), 1e-12));
    }

    #[test]
    fn two_photon_first_bond_step() {
        let (r1, r2) = (0.3 / 2.3, 0.3 / 59.9);
        let env = two_photon_env(r1, r2).unwrap();
        let chi1 = env.evolve_bond_state(&env.initial_bond_state()).unwrap();
        let e = (-2.0 * r1).exp();
        assert!(dm_close(&chi1.matrix, &diag(&[e, 1.0 - e, 0.0]), 1e-14));
    }

    #[test]
    fn bond_trace_preserved_over_many_steps() {
        for env in [aklt_env(), cluster_env(), two_photon_env(0.2, 0.01).unwrap()] {
            let states = env.bond_states(100).unwrap();
            for chi in &states {
                assert!((chi.matrix.trace() - c64(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn site_marginals_of_case_studies() {
        let aklt = aklt_env();
        let rho = aklt.site_reduced_state(&aklt.initial_bond_state()).unwrap();
        assert!(dm_close(&rho, &identity(3).scale(1.0 / 3.0), 1e-15));

        let cl = cluster_env();
        let rho = cl.site_reduced_state(&cl.initial_bond_state()).unwrap();
        assert!(dm_close(&rho, &diag(&[0.5, 0.5]), 1e-15));

        let amps = [c64(0.6, 0.0), c64(0.0, 0.8)];
        let product = MpsEnvironment::homogeneous(
            SiteTensor::new(amps.iter().map(|&a| CMatrix::from_element(1, 1, a)).collect()).unwrap(),
            identity(1),
        )
        .unwrap();
        let rho = product.site_reduced_state(&product.initial_bond_state()).unwrap();
        let v = CVector::from_column_slice(&amps);
        assert!(dm_close(&rho, &(&v * v.adjoint()), 1e-15));
    }

    #[test]
    fn two_site_state_of_aklt_decays_as_minus_one_third() {
        let env = aklt_env();
        let (jx, jy, jz) = spin1();
        let jj = kron(&jx, &jx) + kron(&jy, &jy) + kron(&jz, &jz);
        let chi = env.initial_bond_state();
        for m in 1..=6 {
            let rho = env.two_site_reduced_state(1, 1 + m, &chi).unwrap();
            let coeff = (-1.0f64 / 3.0).powi(m as i32) / 3.0;
            let expect = identity(9).scale(1.0 / 9.0) + jj.scale(coeff);
            assert!(dm_close(&rho, &expect, 1e-12), "m = {m}");
        }
    }

    #[test]
    fn two_site_state_of_product_env_factorizes() {
        let site = SiteTensor::new(vec![
            CMatrix::from_element(1, 1, c64(0.6, 0.0)),
            CMatrix::from_element(1, 1, c64(0.0, 0.8)),
        ])
        .unwrap();
        let env = MpsEnvironment::homogeneous(site, identity(1)).unwrap();
        let chi = env.initial_bond_state();
        let rho1 = env.site_reduced_state(&chi).unwrap();
        let rho = env.two_site_reduced_state(1, 4, &chi).unwrap();
        assert!(dm_close(&rho, &kron(&rho1, &rho1), 1e-15));
    }

    #[test]
    fn two_site_state_of_cluster_matches_brute_force() {
        // ten-site truncation, open right bond traced through its ancilla
        let env = cluster_env();
        let n = 10;
        let amps = env.amplitudes(n).unwrap();
        let d0 = env.chi0().nrows();
        let dn = env.bond_dim(n).unwrap();
        let sq = sqrt_psd(env.chi0()).unwrap();
        // |Φ⟩ = Σ_{c,a,b} sqrt(χ0)_{a c} |ψ_{a,b}⟩ |c⟩ |b⟩, environment first
        let dim = 1usize << n;
        let mut full = CMatrix::zeros(dim, d0 * dn);
        for a in 0..d0 {
            for c in 0..d0 {
                for b in 0..dn {
                    for cfg in 0..dim {
                        full[(cfg, c * dn + b)] += sq[(a, c)] * amps[(a * dim + cfg, b)];
                    }
                }
            }
        }
        let rho_env = &full * full.adjoint();
        let op = MultiIndexOperator::new(vec![2; n], rho_env).unwrap();
        let bonds = env.bond_states(n).unwrap();
        for l in 1..n {
            let brute = op.partial_trace(&[l - 1, l]).unwrap().into_matrix();
            let fast = env.two_site_reduced_state(l, l + 1, &bonds[l - 1]).unwrap();
            assert!(dm_close(&brute, &fast, 1e-12), "l = {l}");
        }
    }

    #[test]
    fn two_site_marginals_match_single_site() {
        let env = two_photon_env(0.3, 0.05).unwrap();
        let bonds = env.bond_states(6).unwrap();
        let rho = env.two_site_reduced_state(2, 5, &bonds[1]).unwrap();
        let first = crate::linalg::trace_out_second(&rho, 2, 2).unwrap();
        let second = crate::linalg::trace_out_first(&rho, 2, 2).unwrap();
        assert!(dm_close(&first, &env.site_reduced_state(&bonds[1]).unwrap(), 1e-12));
        assert!(dm_close(&second, &env.site_reduced_state(&bonds[4]).unwrap(), 1e-12));
        assert!(env.two_site_reduced_state(3, 3, &bonds[2]).is_err());
    }

    #[test]
    fn prefix_density_consistency() {
        for env in [aklt_env(), cluster_env(), two_photon_env(0.3, 0.05).unwrap(), ghz_env(6).unwrap()] {
            let bonds = env.bond_states(6).unwrap();
            let first = env.reduced_density_prefix(1).unwrap();
            assert!(dm_close(first.matrix(), &env.site_reduced_state(&bonds[0]).unwrap(), 1e-13));
            for k in 1..=6 {
                let prefix = env.reduced_density_prefix(k).unwrap();
                assert!((prefix.matrix().trace() - c64(1.0, 0.0)).norm() < 1e-12);
                let last = prefix.partial_trace(&[k - 1]).unwrap();
                let chained = env.site_reduced_state(&bonds[k - 1]).unwrap();
                assert!(dm_close(last.matrix(), &chained, 1e-12), "k = {k}");
            }
        }
    }

    #[test]
    fn prefix_of_pure_env_is_projector() {
        let env = ghz_env(4).unwrap();
        let psi = pure_vector(&env);
        let prefix = env.reduced_density_prefix(4).unwrap();
        assert!(dm_close(prefix.matrix(), &(&psi * psi.adjoint()), 1e-12));
    }

    #[test]
    fn prefix_guard() {
        let env = aklt_env();
        assert!(matches!(env.reduced_density_prefix(9), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn transfer_spectra() {
        let s = aklt_env().transfer_spectrum().unwrap();
        assert!((s.second - c64(-1.0 / 3.0, 0.0)).norm() < 1e-12);
        assert!((s.correlation_length - 1.0 / 3f64.ln()).abs() < 1e-12);
        assert_eq!(s.sign, -1.0);

        let s = cluster_env().transfer_spectrum().unwrap();
        assert!(s.second.norm() < 1e-7);

        assert!(matches!(ghz_env(6).unwrap().transfer_spectrum(), Err(Error::InfiniteCorrelationLength(_))));

        let finite = single_photon_env(&[c64(0.5, 0.0), c64(0.0, 0.5), c64(0.5, 0.0), c64(-0.5, 0.0)]);
        assert!(matches!(finite.unwrap().transfer_spectrum(), Err(Error::NotHomogeneous)));
    }

    #[test]
    fn decorrelate_keeps_marginals() {
        let aklt = aklt_env().decorrelate(10).unwrap();
        assert!(aklt.is_homogeneous());
        let rho = aklt.site_reduced_state(&aklt.initial_bond_state()).unwrap();
        assert!(dm_close(&rho, &identity(3).scale(1.0 / 3.0), 1e-14));

        let env = two_photon_env(0.3 / 2.3, 0.3 / 59.9).unwrap();
        let dec = env.decorrelate(12).unwrap();
        assert_eq!(dec.len(), Some(12));
        let bonds = env.bond_states(12).unwrap();
        let dbonds = dec.bond_states(12).unwrap();
        for k in 0..12 {
            let a = env.site_reduced_state(&bonds[k]).unwrap();
            let b = dec.site_reduced_state(&dbonds[k]).unwrap();
            assert!(dm_close(&a, &b, 1e-12));
        }
        // no correlations left
        let rho12 = dec.two_site_reduced_state(1, 2, &dbonds[0]).unwrap();
        let r1 = dec.site_reduced_state(&dbonds[0]).unwrap();
        let r2 = dec.site_reduced_state(&dbonds[1]).unwrap();
        assert!(dm_close(&rho12, &kron(&r1, &r2), 1e-14));
    }

    #[test]
    fn decorrelate_product_is_identity() {
        let site = SiteTensor::new(vec![
            CMatrix::from_element(1, 1, c64(0.6, 0.0)),
            CMatrix::from_element(1, 1, c64(0.8, 0.0)),
        ])
        .unwrap();
        let env = MpsEnvironment::homogeneous(site, identity(1)).unwrap();
        assert_eq!(env.decorrelate(5).unwrap(), env);
    }

    #[test]
    fn json_round_trip() {
        let env = two_photon_env(0.2, 0.1).unwrap();
        let text = env.to_json().unwrap();
        assert_eq!(MpsEnvironment::from_json(&text).unwrap(), env);
        let dec = aklt_env().decorrelate(3).unwrap();
        assert_eq!(MpsEnvironment::from_json(&dec.to_json().unwrap()).unwrap(), dec);
    }

    #[test]
    fn invalid_chi0_rejected() {
        let site = cluster_env().bulk_tensor().unwrap().clone();
        assert!(MpsEnvironment::homogeneous(site.clone(), diag(&[1.0, 1.0])).is_err());
        assert!(MpsEnvironment::homogeneous(site, diag(&[1.0])).is_err());
    }

    #[test]
    fn evolve_rejects_wrong_dimension() {
        let env = aklt_env();
        let chi = BondState::new(0, diag(&[1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(env.evolve_bond_state(&chi), Err(Error::DimensionMismatch(_))));
    }
}
