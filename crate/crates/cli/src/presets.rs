//! Named parameter sets for the `reproduce` subcommand.

use std::path::{Path, PathBuf};

use mpscoll::models::{aklt_exact_q, aklt_markov_q};
use mpscoll::{CaseInteraction, ModelName, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, InteractionSpec, Method, NamedObservable, ObservableSpec};
use crate::error::CliError;
use crate::experiment::{run, Row, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    /// Excited population, correlated vs decorrelated two-photon wavepacket.
    Fig5a,
    /// Coherence function for the cluster state at gτ = 0.3 and 0.6.
    Fig5b,
    /// AKLT depolarization function, exact vs decorrelated.
    Fig6a,
    /// Controlled-unitary AKLT dynamics, collisional vs stroboscopic GKSL.
    Fig6b,
}

/// Closed-form columns evaluated on the step grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    AkltExact,
    AkltMarkov,
}

/// One CSV file: labelled curves sharing a step grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub file: String,
    pub curves: Vec<(String, ExperimentConfig)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub closed_forms: Vec<(String, ClosedForm)>,
}

fn curve(label: &str, mut config: ExperimentConfig, method: Method, observable: NamedObservable) -> (String, ExperimentConfig) {
    config.method = method;
    config.observables = vec![ObservableSpec::Named(observable)];
    (label.to_string(), config)
}

fn two_photon() -> ExperimentConfig {
    // gτ = 0.3, gT₁ = 2.3, gT₂ = 59.9
    let mut spec = ModelSpec::new(ModelName::TwoPhoton);
    spec.parameters.tau_over_t1 = Some(0.3 / 2.3);
    spec.parameters.tau_over_t2 = Some(0.3 / 59.9);
    spec.parameters.fock_cutoff = Some(3);
    ExperimentConfig::new(spec, 0.3, 400)
}

fn cluster(g_tau: f64) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(ModelSpec::new(ModelName::Cluster), g_tau, 20);
    config.converge_cutoff = true;
    config
}

fn aklt(interaction: CaseInteraction, g_tau: f64, tau: f64, k_max: usize) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(ModelSpec::new(ModelName::Aklt), g_tau, k_max);
    config.interaction = Some(InteractionSpec::Named(interaction));
    config.tau = tau;
    config
}

pub fn presets(figure: Figure) -> Vec<Preset> {
    use Method::{Decorrelated, Embedding, Gksl};
    use NamedObservable::{Coherence, Depolarization, ExcitedPopulation, SigmaZ};
    match figure {
        Figure::Fig5a => vec![Preset {
            file: "fig5a.csv".into(),
            curves: vec![
                curve("correlated", two_photon(), Embedding, ExcitedPopulation),
                curve("decorrelated", two_photon(), Decorrelated, ExcitedPopulation),
            ],
            closed_forms: vec![],
        }],
        Figure::Fig5b => [0.3, 0.6]
            .iter()
            .map(|&gt| {
                Preset {
                    file: format!("fig5b_gt{:02}.csv", (gt * 10.0f64).round() as u32),
                    curves: vec![
                        curve("correlated", cluster(gt), Embedding, Coherence),
                        curve("decorrelated", cluster(gt), Decorrelated, Coherence),
                    ],
                    closed_forms: vec![],
                }
            })
            .collect(),
        Figure::Fig6a => {
            let base = aklt(CaseInteraction::Heisenberg, 0.5, 1.0, 100);
            vec![Preset {
                file: "fig6a.csv".into(),
                curves: vec![
                    curve("exact", base.clone(), Embedding, Depolarization),
                    curve("markov", base, Decorrelated, Depolarization),
                ],
                closed_forms: vec![
                    ("exact_closed_form".into(), ClosedForm::AkltExact),
                    ("markov_closed_form".into(), ClosedForm::AkltMarkov),
                ],
            }]
        }
        Figure::Fig6b => {
            // gτ = 0.1 with g = 1, so g·t ∈ [0, 20] takes 200 collisions
            let base = aklt(CaseInteraction::Controlled, 0.1, 0.1, 200);
            let mut line = base.clone();
            line.samples_per_step = Some(10);
            vec![
                Preset {
                    file: "fig6b_exact.csv".into(),
                    curves: vec![curve("exact", base, Embedding, SigmaZ)],
                    closed_forms: vec![],
                },
                Preset {
                    file: "fig6b_gksl.csv".into(),
                    curves: vec![curve("gksl", line, Gksl, SigmaZ)],
                    closed_forms: vec![],
                },
            ]
        }
    }
}

/// Evaluates every curve of a preset, curves concurrently, and relabels the
/// columns.
pub fn evaluate(preset: &Preset) -> Result<Table, CliError> {
    let tables: Vec<Result<Table, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = preset.curves.iter().map(|(_, c)| s.spawn(move || run(c))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(CliError::Numerical("worker panicked".into())))).collect()
    });
    let mut joined: Option<Table> = None;
    for ((label, _), table) in preset.curves.iter().zip(tables) {
        let mut table = table?;
        table.columns = vec![label.clone()];
        match &mut joined {
            None => joined = Some(table),
            Some(j) => j.join(table)?,
        }
    }
    let mut table = joined.ok_or_else(|| CliError::Config("preset without curves".into()))?;
    if let Some((_, first)) = preset.curves.first() {
        for (label, form) in &preset.closed_forms {
            let column: Vec<f64> = (0..table.rows.len())
                .map(|k| match form {
                    ClosedForm::AkltExact => aklt_exact_q(k, first.g_tau),
                    ClosedForm::AkltMarkov => aklt_markov_q(k, first.g_tau),
                })
                .collect();
            table.join(Table {
                columns: vec![label.clone()],
                rows: table
                    .rows
                    .iter()
                    .zip(column)
                    .map(|(r, v)| Row { k: r.k.clone(), g_t: r.g_t, values: vec![v] })
                    .collect(),
            })?;
        }
    }
    Ok(table)
}

/// Writes each CSV of `figure` and the configs that produced it into `dir`.
pub fn reproduce(figure: Figure, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let presets = presets(figure);
    let tables: Vec<Result<Table, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = presets.iter().map(|p| s.spawn(move || evaluate(p))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(CliError::Numerical("worker panicked".into())))).collect()
    });
    let mut written = Vec::new();
    for (preset, table) in presets.iter().zip(tables) {
        let path = dir.join(&preset.file);
        std::fs::write(&path, table?.to_csv())?;
        let config_path = dir.join(format!("{}.json", preset.file.trim_end_matches(".csv")));
        let doc = serde_json::to_string_pretty(preset).map_err(|e| CliError::Numerical(e.to_string()))?;
        std::fs::write(&config_path, doc)?;
        written.push(path);
        written.push(config_path);
    }
    Ok(written)
}
