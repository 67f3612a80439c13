//! Reference values. Closed forms first, then regression numbers from runs
//! already cross-checked against the brute-force oracle.

#![allow(clippy::excessive_precision)]

use mpscoll::embedding::observable_series;
use mpscoll::linalg::{diag, kron};
use mpscoll::master::{memory_kernel, second_order_kernel};
use mpscoll::models::{aklt_env, cluster_env, sigma_z, spin1, two_photon_env, CaseInteraction};
use mpscoll::CollisionModel;

fn close(actual: f64, expected: f64, tol: f64) {
    assert!((actual - expected).abs() <= tol * (1.0 + expected.abs()), "{actual:.17e} vs {expected:.17e}");
}

#[test]
fn aklt_transfer_spectrum() {
    let spec = aklt_env().transfer_spectrum().unwrap();
    let mut re: Vec<f64> = spec.eigenvalues.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    for (v, e) in re.iter().zip([-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 1.0]) {
        close(*v, e, 1e-12);
    }
    close(spec.correlation_length, 1.0 / 3f64.ln(), 1e-12);
    assert_eq!(spec.sign, -1.0);
}

#[test]
fn aklt_spin_correlations() {
    // ⟨S_1 · S_{1+m}⟩ = 4 (−1/3)^m
    let env = aklt_env();
    let (jx, jy, jz) = spin1();
    let jj = kron(&jx, &jx) + kron(&jy, &jy) + kron(&jz, &jz);
    let chi = env.initial_bond_state();
    for m in 1..=8 {
        let rho = env.two_site_reduced_state(1, 1 + m, &chi).unwrap();
        close((&rho * &jj).trace().re, 4.0 * (-1.0f64 / 3.0).powi(m as i32), 1e-12);
    }
}

#[test]
fn cluster_transfer_matrix_is_nilpotent_beyond_the_fixed_point() {
    let spec = cluster_env().transfer_spectrum().unwrap();
    assert!(spec.second.norm() < 1e-7);
}

#[test]
fn two_photon_excitation() {
    let model = CollisionModel::new(
        two_photon_env(0.3 / 2.3, 0.3 / 59.9).unwrap(),
        CaseInteraction::Exchange.build(0.3, 3).unwrap(),
        0.3,
        1.0,
    )
    .unwrap();
    let p = observable_series(&model.trajectory(&diag(&[1.0, 0.0]), 40).unwrap(), &diag(&[0.0, 1.0])).unwrap();
    let frozen = [
        (1, 2.00530959974334622e-2),
        (5, 2.54577454927885360e-1),
        (10, 4.53442653338000323e-1),
        (20, 4.03814472959785453e-1),
        (40, 1.93035446706942615e-1),
    ];
    for (k, v) in frozen {
        close(p[k], v, 1e-12);
    }
}

#[test]
fn cluster_coherence() {
    let model =
        CollisionModel::new(cluster_env(), CaseInteraction::ClusterCoupling.build(0.6, 5).unwrap(), 0.6, 1.0).unwrap();
    let z = observable_series(&model.trajectory(&diag(&[1.0, 0.0]), 10).unwrap(), &sigma_z()).unwrap();
    let frozen = [
        (1, 1.32491373128607592e-1),
        (2, 1.75539639535038372e-2),
        (3, -1.18119653839664496e-1),
        (10, -3.24309263326660879e-4),
    ];
    for (k, v) in frozen {
        close(z[k], v, 1e-12);
    }
}

#[test]
fn aklt_kernel_norms() {
    let model = CollisionModel::new(aklt_env(), CaseInteraction::Heisenberg.build(0.5, 3).unwrap(), 0.5, 1.0).unwrap();
    close(memory_kernel(&model, 3, 1).unwrap().norm(), 3.17931926971885825e-1, 1e-12);
    close(second_order_kernel(&model, 3, 1).unwrap().norm(), 3.84900179459750691e-1, 1e-12);
}
