// SPDX-License-Identifier: Apache-2.0

//! Multi-seed experiment runner.
//!
//! Every run is a pure function of the config and its master seed. Run `i`
//! uses the seed `derive(master, "seed", i)`; inside a run, streams are
//! keyed by scenario, client, round and purpose:
//!
//! * `split` / `synth`: data partition or generation;
//! * `run/client/<k>/{init,pretrain}`: initialization and isolated training
//!   shared by AAFV and the local baseline;
//! * `run/aafv/client/<k>/round/<e>/...`: AAFV rounds;
//! * `fedavg/<federation>/client/<k>/...`: the FedAvg baselines.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ConfigError, DatasetConfig, ExperimentConfig, FedAvgFederation, RosterEntry};
use crate::dataio::{
    load_csv, split, synth_biased_shards, zscore_fit, DataError, FeatureMatrix, LabeledDataset, SplitParts, SplitPlan,
};
use crate::ldp::PrivacyBudget;
use crate::learners::ModelKind;
use crate::metrics::{
    emit_report, seed_results_csv, summarize, Comparison, LdpAccounting, MetricsError, Report, Scenario, SeedResult,
    REPORT_SCHEMA_VERSION,
};
use crate::protocol::{
    evaluate, run_aafv, run_fedavg, run_local, Client, FedAvgRound, FederationSetup, ProtocolError, RoundTrace,
};
use crate::seed::SeedStream;
use crate::voting::Threshold;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Inconsistencies between the config and the data, found before any
    /// training or output.
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("seed {seed_index}: {source}")]
    Protocol {
        seed_index: usize,
        #[source]
        source: ProtocolError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Everything one seed produced.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed_index: usize,
    pub seed: u64,
    pub public_rows: usize,
    pub results: Vec<SeedResult>,
    pub aafv_traces: Vec<RoundTrace>,
    pub fedavg_traces: Vec<(String, Vec<FedAvgRound>)>,
}

/// The inputs shared by all seeds: a loaded CSV, or nothing for synth data.
#[derive(Clone, Debug)]
pub enum Source {
    Csv(LabeledDataset),
    Synth,
}

/// Loads the dataset and checks it against the config. Nothing is written.
pub fn prepare(config: &ExperimentConfig) -> Result<Source, ExperimentError> {
    match &config.dataset {
        DatasetConfig::Synth(_) => Ok(Source::Synth),
        DatasetConfig::Csv { label_column, .. } => {
            let path = config.dataset_path().expect("csv dataset has a path");
            let data = load_csv(&path, label_column)?;
            let plan = split_plan(config, 0);
            plan.validate(data.len())
                .map_err(|e| ExperimentError::Invalid(format!("{}: {e}", path.display())))?;
            Ok(Source::Csv(data))
        }
    }
}

fn split_plan(config: &ExperimentConfig, shuffle_seed: u64) -> SplitPlan {
    let s = config.split.as_ref().expect("validated csv config has a split");
    SplitPlan {
        test_count: s.test_count,
        unlabeled_count: s.unlabeled_count,
        client_counts: s.client_counts.clone(),
        shuffle_seed,
    }
}

/// Master seed of run `index`.
pub fn run_seed(master: u64, index: usize) -> u64 {
    SeedStream::new(master).indexed("seed", index).derive_u64()
}

/// Z-scores every part with statistics fitted on the pooled client shards.
pub fn normalize_parts(parts: &SplitParts) -> Result<SplitParts, DataError> {
    let shards: Vec<&FeatureMatrix> = parts.clients.iter().map(|c| c.features()).collect();
    let stats = zscore_fit(&FeatureMatrix::vstack(&shards)?)?;
    Ok(SplitParts {
        test: parts.test.with_features(stats.apply(parts.test.features())?),
        unlabeled: parts.unlabeled.with_features(stats.apply(parts.unlabeled.features())?),
        clients: parts
            .clients
            .iter()
            .map(|c| Ok(c.with_features(stats.apply(c.features())?)))
            .collect::<Result<_, DataError>>()?,
    })
}

/// The normalized data partition of one run.
pub fn run_data(config: &ExperimentConfig, source: &Source, seed: u64) -> Result<SplitParts, DataError> {
    let streams = SeedStream::new(seed);
    let raw = match (source, &config.dataset) {
        (Source::Csv(data), _) => split(data, &split_plan(config, streams.child("split").derive_u64()))?,
        (Source::Synth, DatasetConfig::Synth(s)) => synth_biased_shards(&s.spec(streams.child("synth").derive_u64()))?,
        (Source::Synth, DatasetConfig::Csv { .. }) => {
            return Err(DataError::Invalid("csv dataset was not loaded".into()))
        }
    };
    normalize_parts(&raw)
}

fn build_clients(
    entries: &[&RosterEntry],
    shards: &[LabeledDataset],
    scope: &SeedStream,
) -> Result<Vec<Client>, ProtocolError> {
    entries
        .iter()
        .zip(shards)
        .enumerate()
        .map(|(k, (entry, shard))| {
            let arch = entry.arch(shard.cols());
            let mut rng = scope.indexed("client", k).child("init").rng();
            let learner = arch.init(entry.train, &mut rng)?;
            Client::new(k, learner, shard.clone())
        })
        .collect()
}

/// FedAvg federations as (name, roster position reported, entries).
fn federations(config: &ExperimentConfig) -> Vec<(String, usize, Vec<&RosterEntry>)> {
    let k = config.roster.len();
    match config.fedavg.federation {
        FedAvgFederation::Roster => vec![("roster".into(), 0, config.roster.iter().collect())],
        FedAvgFederation::PerKind => {
            let mut seen = BTreeSet::new();
            config
                .roster
                .iter()
                .enumerate()
                .filter(|(_, e)| seen.insert(e.kind))
                .map(|(i, e)| (e.kind.name().to_string(), i, vec![e; k]))
                .collect()
        }
    }
}

/// Runs every requested scenario under run seed `seed`.
pub fn run_one_seed(config: &ExperimentConfig, source: &Source, seed_index: usize) -> Result<SeedRun, ExperimentError> {
    let seed = run_seed(config.master_seed, seed_index);
    let parts = run_data(config, source, seed)?;
    let protocol = |source| ExperimentError::Protocol { seed_index, source };
    let streams = SeedStream::new(seed);
    let run_scope = streams.child("run");
    let entries: Vec<&RosterEntry> = config.roster.iter().collect();
    let epsilon = PrivacyBudget::new(config.epsilon).map_err(|e| protocol(e.into()))?;
    let tau = Threshold::new(config.tau).map_err(|e| protocol(e.into()))?;
    let setup = |clients| FederationSetup {
        clients,
        unlabeled: parts.unlabeled.clone(),
        test: parts.test.clone(),
        epsilon,
        tau,
        e_com: config.e_com,
        pretrain_epochs: config.pretrain_epochs,
        local_epochs_per_round: config.local_epochs_per_round,
    };
    let result = |scenario, model, client, accuracy, curve| SeedResult {
        seed_index,
        seed,
        scenario,
        model,
        client,
        accuracy,
        curve,
    };

    let mut results = Vec::new();
    let mut aafv_traces = Vec::new();
    let mut fedavg_traces = Vec::new();

    if config.runs(Scenario::Aafv) {
        let clients = build_clients(&entries, &parts.clients, &run_scope).map_err(protocol)?;
        let out = run_aafv(setup(clients), &run_scope).map_err(protocol)?;
        for (k, learner) in out.learners.iter().enumerate() {
            let curve: Vec<f64> = out.traces.iter().map(|t| t.client_accuracy[k]).collect();
            let accuracy = evaluate(learner.as_ref(), &parts.test).map_err(protocol)?;
            results.push(result(Scenario::Aafv, learner.kind(), k, accuracy, curve));
        }
        aafv_traces = out.traces;
    }

    if config.runs(Scenario::Fedavg) {
        let scope = streams.child("fedavg");
        for (name, position, members) in federations(config) {
            let fed_scope = scope.child(name.as_str());
            let clients = build_clients(&members, &parts.clients, &fed_scope).map_err(protocol)?;
            let out = run_fedavg(setup(clients), config.fedavg.clip, &fed_scope).map_err(protocol)?;
            let accuracy = evaluate(out.model.as_ref(), &parts.test).map_err(protocol)?;
            let curve = out.traces.iter().map(|r| r.accuracy).collect();
            results.push(result(Scenario::Fedavg, out.model.kind(), position, accuracy, curve));
            fedavg_traces.push((name, out.traces));
        }
    }

    if config.runs(Scenario::Local) {
        let clients = build_clients(&entries, &parts.clients, &run_scope).map_err(protocol)?;
        let learners = run_local(clients, config.local_epochs, &run_scope).map_err(protocol)?;
        for (k, learner) in learners.iter().enumerate() {
            let accuracy = evaluate(learner.as_ref(), &parts.test).map_err(protocol)?;
            results.push(result(Scenario::Local, learner.kind(), k, accuracy, vec![]));
        }
    }

    log::info!("seed {seed_index} done");
    Ok(SeedRun {
        seed_index,
        seed,
        public_rows: parts.unlabeled.len(),
        results,
        aafv_traces,
        fedavg_traces,
    })
}

/// Runs all seeds on a pool of `parallel` threads (0 = rayon's default).
pub fn run_seeds(config: &ExperimentConfig, source: &Source, parallel: usize) -> Result<Vec<SeedRun>, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    pool.install(|| {
        (0..config.seed_count)
            .into_par_iter()
            .map(|i| run_one_seed(config, source, i))
            .collect()
    })
}

/// Assembles the report from finished runs.
pub fn build_report(config: &ExperimentConfig, runs: &[SeedRun]) -> Result<Report, ExperimentError> {
    let results: Vec<SeedResult> = runs.iter().flat_map(|r| r.results.iter().cloned()).collect();
    let comparisons = Comparison::collect_all(&results);
    let public_rows = runs.first().map_or(0, |r| r.public_rows);
    let aafv_rounds = if config.runs(Scenario::Aafv) { config.e_com } else { 0 };
    let mut notes = vec![
        "epsilon is spent per mechanism invocation; the invocation counts are reported and no composed \
         budget across rounds is claimed"
            .to_string(),
        "mean_p_value averages per-model Welch p-values across model kinds; this is not a valid combined \
         test and is reported for comparability only"
            .to_string(),
        format!(
            "tau = {} is a user choice with no reference value; results depend on it",
            config.tau
        ),
    ];
    if config.runs(Scenario::Fedavg) && config.fedavg.federation == FedAvgFederation::PerKind {
        notes.push("fedavg federates one homogeneous copy of each roster kind across all client shards".into());
    }
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.echo(),
        epsilon: config.epsilon,
        tau: config.tau,
        master_seed: config.master_seed,
        seeds: runs.iter().map(|r| r.seed).collect(),
        ldp: LdpAccounting {
            epsilon_per_invocation: config.epsilon,
            piecewise_per_client_round: if aafv_rounds > 0 { public_rows } else { 0 },
            rounds: config.e_com,
            piecewise_per_client: public_rows * aafv_rounds,
            laplace_uploads_per_client: if config.runs(Scenario::Fedavg) { config.e_com } else { 0 },
            fedavg_clip: config.fedavg.clip,
        },
        summaries: summarize(&results)?,
        mean_p_value: Report::mean_p_values(&comparisons),
        comparisons,
        notes,
    })
}

fn write(path: PathBuf, body: &str) -> Result<(), ExperimentError> {
    std::fs::write(&path, body).map_err(|source| ExperimentError::Io { path, source })
}

fn aafv_trace_csv(run: &SeedRun, kinds: &[ModelKind]) -> String {
    let mut out = String::from("round,client,model,abstains,global_abstains,pseudo_size,revisit_skipped,accuracy\n");
    for t in &run.aafv_traces {
        for (k, kind) in kinds.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{k},{kind},{},{},{},{},{}",
                t.round,
                t.client_abstains[k],
                t.global_abstains,
                t.pseudo_size,
                t.revisit_skipped,
                t.client_accuracy[k]
            );
        }
    }
    out
}

fn fedavg_trace_csv(run: &SeedRun) -> String {
    let mut out = String::from("federation,round,accuracy\n");
    for (name, rounds) in &run.fedavg_traces {
        for r in rounds {
            let _ = writeln!(out, "{name},{},{}", r.round, r.accuracy);
        }
    }
    out
}

/// Writes the run bundle: `config.json`, `seed_results.csv`, `report.json`,
/// `summary.txt` and `traces/seed_<i>_{aafv,fedavg}.csv`.
pub fn write_bundle(
    config: &ExperimentConfig,
    runs: &[SeedRun],
    report: &Report,
    out_dir: &Path,
) -> Result<(), ExperimentError> {
    let traces = out_dir.join("traces");
    std::fs::create_dir_all(&traces).map_err(|source| ExperimentError::Io {
        path: traces.clone(),
        source,
    })?;
    let mut echo = serde_json::to_string_pretty(&config.echo()).map_err(MetricsError::from)?;
    echo.push('\n');
    write(out_dir.join("config.json"), &echo)?;
    let results: Vec<SeedResult> = runs.iter().flat_map(|r| r.results.iter().cloned()).collect();
    write(out_dir.join("seed_results.csv"), &seed_results_csv(&results))?;
    let kinds: Vec<ModelKind> = config.roster.iter().map(|e| e.kind).collect();
    for run in runs {
        if !run.aafv_traces.is_empty() {
            write(
                traces.join(format!("seed_{}_aafv.csv", run.seed_index)),
                &aafv_trace_csv(run, &kinds),
            )?;
        }
        if !run.fedavg_traces.is_empty() {
            write(
                traces.join(format!("seed_{}_fedavg.csv", run.seed_index)),
                &fedavg_trace_csv(run),
            )?;
        }
    }
    emit_report(report, out_dir)?;
    Ok(())
}

/// Runs the whole experiment and writes its bundle into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, parallel: usize) -> Result<Report, ExperimentError> {
    let source = prepare(config)?;
    let runs = run_seeds(config, &source, parallel)?;
    let report = build_report(config, &runs)?;
    write_bundle(config, &runs, &report, out_dir)?;
    Ok(report)
}
