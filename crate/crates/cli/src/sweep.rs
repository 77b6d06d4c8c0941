use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use log::{info, warn};
use rayon::prelude::*;
use serde::Deserialize;

use fqaoa::ansatz::MixerBackend;
use fqaoa::problem::DEFAULT_LAMBDA;
use fqaoa::run::{ResultRow, RunConfig, Runner, RESULT_COLUMNS};

use crate::error::{CliError, CliResult};
use crate::SweepArgs;

/// Grid of runs on one instance family. Every combination of `seeds`,
/// `methods`, `optimize`, `delta_t` and `p` becomes one row, in that nesting
/// order.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D", default = "two")]
    pub d: usize,
    #[serde(rename = "M")]
    pub m: i64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(rename = "A", default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub p: Vec<usize>,
    /// Time steps in units of `1/W`.
    #[serde(default)]
    pub delta_t: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "fixed_only")]
    pub optimize: Vec<bool>,
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default)]
    pub restarts: usize,
    #[serde(default)]
    pub instance_file: Option<PathBuf>,
    #[serde(default)]
    pub mixer: MixerBackend,
}

fn two() -> usize {
    2
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn fixed_only() -> Vec<bool> {
    vec![false]
}

fn default_optimizer() -> String {
    "bfgs".into()
}

impl SweepPlan {
    pub fn expand(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &seed in &self.seeds {
            for method in &self.methods {
                for &optimize in &self.optimize {
                    for &delta_t in &self.delta_t {
                        for &p in &self.p {
                            out.push(RunConfig {
                                method: method.clone(),
                                n: self.n,
                                d: self.d,
                                m: self.m,
                                lambda: self.lambda,
                                a: self.a,
                                p,
                                delta_t,
                                optimize,
                                optimizer: self.optimizer.clone(),
                                restarts: self.restarts,
                                seed,
                                instance_file: self.instance_file.clone(),
                                mixer: self.mixer,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

fn execute(runner: &Runner, cfg: &RunConfig) -> ResultRow {
    match runner.run(cfg) {
        Ok(r) => ResultRow::from_record(cfg, &r),
        Err(e) => {
            warn!("{} p={} seed={}: {e}", cfg.method, cfg.p, cfg.seed);
            ResultRow::failed(cfg, &e)
        }
    }
}

pub fn sweep(args: &SweepArgs, out_dir: &Path) -> CliResult<()> {
    let text = fs::read_to_string(&args.plan).map_err(CliError::io(&args.plan))?;
    let plan: SweepPlan = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", args.plan.display())))?;
    let output = match &args.output {
        Some(p) => p.clone(),
        None => {
            crate::commands::ensure_dir(out_dir)?;
            let stem = args.plan.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
            out_dir.join(format!("{stem}.csv"))
        }
    };
    let grid = plan.expand();
    info!("{} grid points", grid.len());

    let mut writer =
        csv::WriterBuilder::new().has_headers(false).from_path(&output).map_err(CliError::csv(&output))?;
    writer.write_record(RESULT_COLUMNS).map_err(CliError::csv(&output))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<(usize, ResultRow)>();
    let runner = Runner::default();
    let mut failed = 0usize;
    let written = std::thread::scope(|scope| -> CliResult<usize> {
        let grid = &grid;
        let runner = &runner;
        scope.spawn(move || {
            pool.install(|| {
                grid.par_iter().enumerate().for_each_with(tx, |tx, (i, cfg)| {
                    // the receiver only disappears after a write error
                    let _ = tx.send((i, execute(runner, cfg)));
                });
            });
        });
        // single writer: rows are released in grid order
        let mut pending = BTreeMap::new();
        let mut next = 0usize;
        for (i, row) in rx {
            pending.insert(i, row);
            while let Some(row) = pending.remove(&next) {
                if row.status != "ok" {
                    failed += 1;
                }
                writer.serialize(&row).map_err(CliError::csv(&output))?;
                writer.flush().map_err(CliError::io(&output))?;
                next += 1;
            }
        }
        Ok(next)
    })?;
    println!("{} rows ({} failed) -> {}", written, failed, output.display());
    Ok(())
}
