//! Replication loop, worker pool and resumable CSV output.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use gbcal_core::dgp::{DependentErrorsDgp, LogisticTarget, MixtureLogisticDgp, TErrorsDgp, ToyDgp};
use gbcal_core::lrate::{
    gpc_select, holmes_walker_select, lyddon_select, safebayes_select, LearningRateResult,
    LyddonConfig, Method,
};
use gbcal_core::models::{
    GaussianLocationModel, GibbsMcidModel, LinearRegressionModel, LogisticMcidModel,
};
use gbcal_core::uq::{replication_metrics, RegionBuilder, ReplicationRecord, Target};
use gbcal_core::{Dataset, Model, RandomStream};

use crate::config::{Experiment, ExperimentConfig};
use crate::summary::{read_records, summarize_records, SummaryTable};
use crate::BenchError;

pub const HEADER: [&str; 13] = [
    "experiment",
    "degree",
    "n",
    "method",
    "rep",
    "eta_hat",
    "covered",
    "mse",
    "avg_marginal_var",
    "interval_length",
    "degenerate",
    "seed_path",
    "wall_ms",
];

/// One (degree, n, replication) cell of the design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    pub degree: f64,
    pub n: usize,
    pub rep: usize,
}

/// Units in output order: degree, then n, then replication.
pub fn units(cfg: &ExperimentConfig) -> Vec<Unit> {
    let mut out = Vec::with_capacity(cfg.degrees.len() * cfg.sample_sizes.len() * cfg.replications);
    for &degree in &cfg.degrees {
        for &n in &cfg.sample_sizes {
            for rep in 0..cfg.replications {
                out.push(Unit { degree, n, rep });
            }
        }
    }
    out
}

/// Stream `(base_seed, [experiment, round(1000·degree), n, rep])`.
pub fn unit_stream(cfg: &ExperimentConfig, unit: &Unit) -> RandomStream {
    let degree_key = (unit.degree * 1000.0).round() as u64;
    RandomStream::with_path(
        cfg.base_seed,
        &[
            cfg.experiment.id(),
            degree_key,
            unit.n as u64,
            unit.rep as u64,
        ],
    )
}

fn method_index(m: Method) -> u64 {
    Method::ALL
        .iter()
        .position(|&x| x == m)
        .expect("known method") as u64
}

struct Setup<M: Model> {
    model: M,
    gpc_model: M,
    builder: RegionBuilder,
    truth: Vec<f64>,
    lyddon: LyddonConfig,
}

/// All method rows for one unit. Failures become degenerate rows.
pub fn run_unit(cfg: &ExperimentConfig, unit: &Unit) -> Vec<ReplicationRecord> {
    let stream = unit_stream(cfg, unit);
    let data_stream = stream.child(0);
    let level = 1.0 - cfg.alpha;
    let degree = unit.degree as u32;
    let outcome: Result<Vec<ReplicationRecord>, gbcal_core::Error> = (|| match cfg.experiment {
        Experiment::ToyCurve => {
            let dgp = ToyDgp::with_eta_star(unit.degree, cfg.toy.sigma, cfg.toy.theta_star)?;
            let model = match cfg.toy.prior {
                Some(p) => GaussianLocationModel::new(cfg.toy.sigma, p.mean, p.var)?,
                None => GaussianLocationModel::flat(cfg.toy.sigma)?,
            };
            let setup = Setup {
                gpc_model: model.clone(),
                model,
                builder: RegionBuilder::new(Target::Full, level),
                truth: dgp.true_target().as_slice().to_vec(),
                lyddon: LyddonConfig::default(),
            };
            Ok(evaluate(
                cfg,
                unit,
                &dgp.generate(unit.n, &data_stream)?,
                &setup,
                &stream,
            ))
        }
        Experiment::LinearDependent | Experiment::LinearT => {
            let (data, truth) = if cfg.experiment == Experiment::LinearDependent {
                let dgp = DependentErrorsDgp::degree(degree)?;
                (dgp.generate(unit.n, &data_stream)?, dgp.true_target())
            } else {
                let dgp = TErrorsDgp::degree(degree)?;
                (dgp.generate(unit.n, &data_stream)?, dgp.true_target())
            };
            let p = data.p();
            let setup = Setup {
                model: LinearRegressionModel::default(),
                gpc_model: LinearRegressionModel::default(),
                builder: RegionBuilder::new(Target::Leading(p), level),
                truth: truth.as_slice().to_vec(),
                lyddon: LyddonConfig {
                    coordinates: if cfg.lyddon.full_parameter {
                        None
                    } else {
                        Some(p)
                    },
                    ..LyddonConfig::default()
                },
            };
            Ok(evaluate(cfg, unit, &data, &setup, &stream))
        }
        Experiment::LogisticMcid => {
            let dgp = MixtureLogisticDgp::degree(degree)?;
            let truth = match cfg.logistic_target {
                LogisticTarget::Mcid => dgp.mcid()?,
                LogisticTarget::Projection => dgp.projection_ratio()?,
            };
            let o = &cfg.logistic;
            let model = LogisticMcidModel {
                burn_in: o.burn_in,
                chain_length: cfg.posterior_draws,
                proposal_scale: None,
                smc_particles: o.smc_particles,
                smc_moves: o.smc_moves,
            };
            let gpc_model = LogisticMcidModel {
                burn_in: o.gpc_burn_in,
                chain_length: o.gpc_chain_length,
                ..model.clone()
            };
            let setup = Setup {
                model,
                gpc_model,
                builder: RegionBuilder::new(Target::NegRatio, level),
                truth: vec![truth],
                lyddon: LyddonConfig::default(),
            };
            Ok(evaluate(
                cfg,
                unit,
                &dgp.generate(unit.n, &data_stream)?,
                &setup,
                &stream,
            ))
        }
        Experiment::GibbsMcid => {
            let dgp = MixtureLogisticDgp::degree(degree)?;
            let setup = Setup {
                model: GibbsMcidModel,
                gpc_model: GibbsMcidModel,
                builder: RegionBuilder::new(Target::Full, level),
                truth: vec![dgp.mcid()?],
                lyddon: LyddonConfig::default(),
            };
            Ok(evaluate(
                cfg,
                unit,
                &dgp.generate(unit.n, &data_stream)?,
                &setup,
                &stream,
            ))
        }
    })();
    outcome.unwrap_or_else(|_| {
        cfg.methods
            .iter()
            .map(|&m| degenerate_row(cfg, unit, m, &stream))
            .collect()
    })
}

fn degenerate_row(
    cfg: &ExperimentConfig,
    unit: &Unit,
    method: Method,
    stream: &RandomStream,
) -> ReplicationRecord {
    ReplicationRecord::degenerate(
        cfg.experiment.as_str(),
        unit.degree,
        unit.n,
        method,
        unit.rep,
        seed_path(stream.child(1 + method_index(method))),
    )
}

fn seed_path(stream: RandomStream) -> String {
    format!("{}:{}", stream.base_seed(), stream.path_string())
}

fn select<M: Model>(
    cfg: &ExperimentConfig,
    method: Method,
    data: &Dataset,
    setup: &Setup<M>,
    stream: &RandomStream,
) -> gbcal_core::Result<LearningRateResult> {
    match method {
        Method::Gpc => gpc_select(&setup.gpc_model, data, &setup.builder, &cfg.gpc, stream),
        Method::SafeBayes => safebayes_select(&setup.model, data, &cfg.safebayes_grid, stream),
        Method::HolmesWalker => {
            holmes_walker_select(&setup.model, data, &cfg.holmes_walker, stream)
        }
        Method::Lyddon => lyddon_select(&setup.model, data, &setup.lyddon),
    }
}

fn evaluate<M: Model>(
    cfg: &ExperimentConfig,
    unit: &Unit,
    data: &Dataset,
    setup: &Setup<M>,
    stream: &RandomStream,
) -> Vec<ReplicationRecord> {
    let prepared = setup.model.prepare(data);
    cfg.methods
        .iter()
        .map(|&method| {
            let method_stream = stream.child(1 + method_index(method));
            let start = Instant::now();
            let row = (|| {
                let prepared = prepared.as_ref().map_err(Clone::clone)?;
                let chosen = select(cfg, method, data, setup, &method_stream.child(0))?;
                let post = setup.model.posterior_prepared(
                    prepared,
                    chosen.eta_hat,
                    &method_stream.child(1),
                )?;
                let (target, region) = setup.builder.build(&post)?;
                let metrics = replication_metrics(&target, &region, &setup.truth)?;
                let all_finite = chosen.eta_hat.is_finite()
                    && metrics.mse.is_finite()
                    && metrics.avg_marginal_var.is_finite();
                if !all_finite {
                    return Err(gbcal_core::Error::Numerical("non-finite metric".into()));
                }
                Ok::<_, gbcal_core::Error>((chosen.eta_hat, metrics))
            })();
            let wall_ms = if cfg.record_timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            };
            match row {
                Ok((eta_hat, m)) => ReplicationRecord {
                    experiment: cfg.experiment.as_str().to_string(),
                    degree: unit.degree,
                    n: unit.n,
                    method,
                    rep: unit.rep,
                    eta_hat,
                    covered: m.covered,
                    mse: m.mse,
                    avg_marginal_var: m.avg_marginal_var,
                    interval_length: m.interval_length,
                    degenerate: false,
                    seed_path: seed_path(method_stream),
                    wall_ms,
                },
                Err(_) => ReplicationRecord {
                    wall_ms,
                    ..degenerate_row(cfg, unit, method, stream)
                },
            }
        })
        .collect()
}

/// Runs `todo` over `cfg.workers` threads and hands results to `sink` in
/// the order of `todo`.
fn execute<F>(cfg: &ExperimentConfig, todo: &[Unit], mut sink: F) -> Result<(), BenchError>
where
    F: FnMut(&Unit, Vec<ReplicationRecord>) -> Result<(), BenchError>,
{
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Vec<ReplicationRecord>)>();
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.min(todo.len()).max(1) {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= todo.len() {
                    break;
                }
                if tx.send((i, run_unit(cfg, &todo[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut want = 0;
        for (i, records) in rx {
            pending.insert(i, records);
            while let Some(records) = pending.remove(&want) {
                sink(&todo[want], records)?;
                want += 1;
            }
        }
        Ok(())
    })
}

/// All records in output order, without touching the filesystem.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<ReplicationRecord>, BenchError> {
    cfg.validate()?;
    let todo = units(cfg);
    let mut out = Vec::with_capacity(cfg.expected_rows());
    execute(cfg, &todo, |_, records| {
        out.extend(records);
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub resume: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub written: usize,
    pub skipped: usize,
    /// Degenerate rows in the finished file.
    pub degenerate: usize,
}

/// Drops a trailing partial line left by an interrupted writer.
fn truncate_partial_line(path: &Path) -> Result<(), BenchError> {
    let mut file = OpenOptions::new().read(true).write(true).open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.last().is_some_and(|&b| b != b'\n') {
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        file.set_len(keep as u64)?;
        file.seek(SeekFrom::Start(keep as u64))?;
    }
    Ok(())
}

/// Streams records to `cfg.out_path`, one unit at a time. With `resume`,
/// rows already in the file are kept and their units are not recomputed.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunSummary, BenchError> {
    cfg.validate()?;
    let path = cfg.out_path.as_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut done = HashSet::new();
    let resuming = opts.resume && path.exists() && std::fs::metadata(path)?.len() > 0;
    if resuming {
        truncate_partial_line(path)?;
        if std::fs::metadata(path)?.len() > 0 {
            for r in read_records(path)? {
                done.insert(r.key());
            }
        }
    }
    let needs_header = !resuming || std::fs::metadata(path)?.len() == 0;
    let file = if resuming {
        OpenOptions::new().append(true).open(path)?
    } else {
        File::create(path)?
    };
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    if needs_header {
        writer.write_record(HEADER).map_err(csv_io)?;
        writer.flush()?;
    }

    let all = units(cfg);
    let key_of = |u: &Unit, m: Method| {
        (
            cfg.experiment.as_str().to_string(),
            u.degree.to_bits(),
            u.n,
            m,
            u.rep,
        )
    };
    let todo: Vec<Unit> = all
        .into_iter()
        .filter(|u| !cfg.methods.iter().all(|&m| done.contains(&key_of(u, m))))
        .collect();
    let mut summary = RunSummary {
        skipped: done.len(),
        ..RunSummary::default()
    };
    execute(cfg, &todo, |_, records| {
        for r in records.iter().filter(|r| !done.contains(&r.key())) {
            writer.serialize(r).map_err(csv_io)?;
            summary.written += 1;
        }
        writer.flush()?;
        Ok(())
    })?;
    drop(writer);
    summary.degenerate = read_records(path)?.iter().filter(|r| r.degenerate).count();
    Ok(summary)
}

fn csv_io(e: csv::Error) -> BenchError {
    BenchError::Io(std::io::Error::other(e.to_string()))
}

/// Runs a toy-curve study and summarizes it by (η*, n, method).
pub fn toy_curve(cfg: &ExperimentConfig) -> Result<SummaryTable, BenchError> {
    if cfg.experiment != Experiment::ToyCurve {
        return Err(BenchError::Config(format!(
            "toy-curve needs experiment toy_curve, got {}",
            cfg.experiment
        )));
    }
    run_experiment(cfg, RunOptions::default())?;
    Ok(summarize_records(&read_records(&cfg.out_path)?))
}
