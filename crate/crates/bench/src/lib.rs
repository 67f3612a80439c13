//! Fixed workloads shared by the benchmarks in `benches/`.

use mpscoll::linalg::diag;
use mpscoll::models::{aklt_env, cluster_env, two_photon_env};
use mpscoll::{CMatrix, CaseInteraction, CollisionModel};

pub fn ground() -> CMatrix {
    diag(&[1.0, 0.0])
}

pub fn aklt(interaction: CaseInteraction, g_tau: f64) -> CollisionModel {
    CollisionModel::new(aklt_env(), interaction.build(g_tau, 3).expect("spin-1 interaction"), g_tau, 1.0)
        .expect("AKLT model")
}

/// Two-photon wavepacket at gτ = 0.3, gT₁ = 2.3, gT₂ = 59.9.
pub fn two_photon() -> CollisionModel {
    let env = two_photon_env(0.3 / 2.3, 0.3 / 59.9).expect("two-photon environment");
    CollisionModel::new(env, CaseInteraction::Exchange.build(0.3, 3).expect("exchange"), 0.3, 1.0)
        .expect("two-photon model")
}

pub fn cluster(g_tau: f64, cutoff: usize) -> CollisionModel {
    let inter = CaseInteraction::ClusterCoupling.build(g_tau, cutoff).expect("cluster coupling");
    CollisionModel::new(cluster_env(), inter, g_tau, 1.0).expect("cluster model")
}
