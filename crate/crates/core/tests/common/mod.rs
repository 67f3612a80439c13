//! Seeded random objects shared by the integration tests.
#![allow(dead_code)]

use mpscoll::linalg::{c64, CMatrix};
use mpscoll::mps::SiteTensor;
use mpscoll::{Interaction, MpsEnvironment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = random_matrix(rng, n, n);
    (&a + a.adjoint()).scale(0.5)
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    random_matrix(rng, n, n).qr().q()
}

/// Full-rank density matrix.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = random_matrix(rng, n, n);
    let rho = &a * a.adjoint();
    let t = rho.trace();
    rho.map(|z| z / t)
}

pub fn random_pure(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let v = random_matrix(rng, n, 1);
    let v = v.scale(1.0 / v.norm());
    &v * v.adjoint()
}

/// Right-canonical site tensor, `Σ_p B[p] B[p]† = I`.
pub fn random_site(rng: &mut ChaCha8Rng, left: usize, phys: usize, right: usize) -> SiteTensor {
    assert!(phys * right >= left);
    let q = random_matrix(rng, phys * right, left).qr().q();
    let stacked = q.adjoint();
    let matrices = (0..phys).map(|p| stacked.view((0, p * right), (left, right)).into_owned()).collect();
    SiteTensor::new(matrices).unwrap()
}

pub fn random_homogeneous_env(rng: &mut ChaCha8Rng, bond: usize, phys: usize) -> MpsEnvironment {
    let site = random_site(rng, bond, phys, bond);
    let chi0 = random_density(rng, bond);
    MpsEnvironment::homogeneous(site, chi0).unwrap()
}

/// Finite chain with bond dimensions bounded by `bond`, closed on the right.
pub fn random_finite_env(rng: &mut ChaCha8Rng, n: usize, bond: usize, phys: usize) -> MpsEnvironment {
    let mut dims = vec![bond; n + 1];
    dims[n] = 1;
    for k in (0..n).rev() {
        dims[k] = dims[k].min(dims[k + 1] * phys);
    }
    let sites = (0..n).map(|k| random_site(rng, dims[k], phys, dims[k + 1])).collect();
    let chi0 = random_density(rng, dims[0]);
    MpsEnvironment::finite(sites, chi0).unwrap()
}

/// Interaction generated by a random Hermitian `H` with `‖H‖ ≤ 1`.
pub fn random_interaction(rng: &mut ChaCha8Rng, system_dim: usize, mode_dim: usize, g_tau: f64) -> Interaction {
    let h = random_hermitian(rng, system_dim * mode_dim);
    let norm = h.clone().svd(false, false).singular_values.max();
    Interaction::from_hamiltonian(h.scale(1.0 / norm), g_tau, system_dim).unwrap()
}

/// Open-boundary MPS in a random, non-canonical gauge.
pub fn random_raw_mps(rng: &mut ChaCha8Rng, n: usize, bond: usize, phys: usize) -> mpscoll::RawMps {
    let sites = (0..n)
        .map(|k| {
            let left = if k == 0 { 1 } else { bond };
            let right = if k == n - 1 { 1 } else { bond };
            (0..phys).map(|_| random_matrix(rng, left, right)).collect()
        })
        .collect();
    mpscoll::RawMps::new(sites).unwrap()
}
