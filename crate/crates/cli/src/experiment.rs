//! Runs a validated configuration and renders the result as CSV.

use std::fmt::Write as _;

use mpscoll::embedding::{converge_cutoff, observable_series};
use mpscoll::master::{memory_kernel, second_order_kernel, solve_nz, stroboscopic_generator};
use mpscoll::models::{sigma_x, sigma_y, sigma_z};
use mpscoll::oracle::{brute_force_trajectory, OracleRun};
use mpscoll::{CMatrix, KernelTable, StroboscopicOptions};

use crate::config::{bloch, ExperimentConfig, Method, NamedObservable, ObservableSpec};
use crate::error::CliError;

/// Observable columns on a common step grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// Collision count; fractional on sub-step grids.
    pub k: String,
    pub g_t: f64,
    pub values: Vec<f64>,
}

impl Table {
    /// `k,g_t,<column>...`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,g_t");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{:.16e}", row.k, row.g_t);
            for v in &row.values {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    /// Appends the columns of `other`, which must share the step grid.
    pub fn join(&mut self, other: Table) -> Result<(), CliError> {
        if self.rows.len() != other.rows.len() || self.rows.iter().zip(&other.rows).any(|(a, b)| a.k != b.k) {
            return Err(CliError::Config("joined curves must share the step grid".into()));
        }
        self.columns.extend(other.columns);
        for (a, b) in self.rows.iter_mut().zip(other.rows) {
            a.values.extend(b.values);
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }
}

/// Matrix `O` with the observable equal to `Re tr(O ρ)`.
fn observable_matrix(obs: &ObservableSpec, rho0: &CMatrix) -> CMatrix {
    match obs {
        ObservableSpec::Named(NamedObservable::ExcitedPopulation) => mpscoll::linalg::diag(&[0.0, 1.0]),
        ObservableSpec::Named(NamedObservable::Coherence) | ObservableSpec::Named(NamedObservable::SigmaZ) => {
            sigma_z()
        }
        ObservableSpec::Named(NamedObservable::Depolarization) => {
            // q = r·r₀ / |r₀|², linear in ρ
            let r0 = bloch(rho0);
            let norm2: f64 = r0.iter().map(|x| x * x).sum();
            (sigma_x().scale(r0[0]) + sigma_y().scale(r0[1]) + sigma_z().scale(r0[2])).scale(1.0 / norm2)
        }
        ObservableSpec::Custom { custom } => custom.matrix.clone(),
    }
}

/// System states on the output grid together with the grid labels.
fn trajectory(config: &ExperimentConfig, rho0: &CMatrix, observables: &[CMatrix]) -> Result<(Vec<CMatrix>, usize), CliError> {
    let k_max = config.k_max;
    let states = match config.method {
        Method::Embedding | Method::Decorrelated if config.converge_cutoff => {
            let build = |cutoff: usize| {
                let model =
                    config.build_model_at(cutoff).map_err(|e| mpscoll::Error::InvalidArgument(e.to_string()))?;
                match config.method {
                    Method::Decorrelated => model.decorrelated(config.horizon.unwrap_or(k_max)),
                    _ => Ok(model),
                }
            };
            let run = converge_cutoff(build, rho0, k_max, observables, config.mode_dim())?;
            log::info!("Fock cutoff {} accepted (shift {:e})", run.cutoff, run.shift);
            run.trajectory
        }
        Method::Embedding => config.build_model()?.trajectory(rho0, k_max)?,
        Method::Decorrelated => {
            let model = config.build_model()?.decorrelated(config.horizon.unwrap_or(k_max))?;
            model.trajectory(rho0, k_max)?
        }
        Method::Oracle => {
            let n = config.n_sites.unwrap_or(k_max);
            brute_force_trajectory(&OracleRun::new(config.build_model()?, rho0.clone(), n, k_max))?
        }
        Method::Nz => {
            let model = config.build_model()?;
            solve_nz(&KernelTable::exact(&model, k_max)?, rho0, k_max)?
        }
        Method::Gksl => {
            let model = config.build_model()?;
            let samples = config.samples_per_step.unwrap_or(1);
            let generator = stroboscopic_generator(&model, StroboscopicOptions::default())?;
            let step = generator.l.exp(config.tau / samples as f64)?;
            let mut out = Vec::with_capacity(samples * k_max + 1);
            let mut rho = rho0.clone();
            out.push(rho.clone());
            for _ in 0..samples * k_max {
                rho = step.apply(&rho)?;
                out.push(rho.clone());
            }
            return Ok((out, samples));
        }
    };
    Ok((states, 1))
}

/// Executes the experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<Table, CliError> {
    config.validate()?;
    let rho0 = config.initial_matrix()?;
    let observables: Vec<CMatrix> = config.observables.iter().map(|o| observable_matrix(o, &rho0)).collect();
    let (states, samples) = trajectory(config, &rho0, &observables)?;
    let series: Vec<Vec<f64>> =
        observables.iter().map(|o| observable_series(&states, o)).collect::<Result<_, _>>()?;
    let rows = (0..states.len())
        .map(|j| {
            let k = if samples == 1 { j.to_string() } else { format!("{}", j as f64 / samples as f64) };
            Row { k, g_t: config.g_tau * j as f64 / samples as f64, values: series.iter().map(|s| s[j]).collect() }
        })
        .collect();
    Ok(Table { columns: config.observables.iter().map(|o| o.column().to_string()).collect(), rows })
}

/// Frobenius norms of the exact kernel and its second-order approximation
/// at step `k` for `m = 1 … m_max`, as CSV `m,exact_norm,second_order_norm`.
pub fn kernel_norms(config: &ExperimentConfig, k: usize, m_max: usize) -> Result<String, CliError> {
    config.validate()?;
    if m_max < 1 || m_max > k {
        return Err(CliError::Config(format!("m-max must satisfy 1 ≤ m-max ≤ k = {k}, got {m_max}")));
    }
    let model = config.build_model()?;
    if let Some(n) = model.max_steps() {
        if k + 1 > n {
            return Err(CliError::Config(format!("k = {k} needs {} sites, the environment has {n}", k + 1)));
        }
    }
    let mut out = String::from("m,exact_norm,second_order_norm\n");
    for m in 1..=m_max {
        let exact = memory_kernel(&model, k, m)?.norm();
        let approx = second_order_kernel(&model, k, m)?.norm();
        let _ = writeln!(out, "{m},{exact:.16e},{approx:.16e}");
    }
    Ok(out)
}

/// Largest per-cell difference between two tables with the same layout.
pub fn max_cell_difference(a: &Table, b: &Table) -> Option<f64> {
    if a.columns != b.columns || a.rows.len() != b.rows.len() {
        return None;
    }
    let mut worst = 0.0f64;
    for (x, y) in a.rows.iter().zip(&b.rows) {
        if x.k != y.k {
            return None;
        }
        worst = worst.max((x.g_t - y.g_t).abs());
        for (u, v) in x.values.iter().zip(&y.values) {
            worst = worst.max((u - v).abs());
        }
    }
    Some(worst)
}

