//! One run end to end: configuration, ansatz evaluation, optional
//! optimization, metrics and the result row.

use std::path::PathBuf;
use std::sync::Arc;

use log::info;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{BoxStats, EnergyDistribution};
use crate::ansatz::{evaluate_ansatz, Ansatz, AnsatzOptions, AnsatzRegistry, ComponentCounts, MixerBackend, Problem};
use crate::baselines::DEFAULT_PENALTY;
use crate::error::{Error, Result};
use crate::optimize::{optimize, OptimizerRegistry, Settings, StartRecord};
use crate::problem::{generate_instance, PortfolioInstance, RiskModel, DEFAULT_LAMBDA};
use crate::schedule::Schedule;
use crate::sim::{GateCounts, StateVector};

/// Tolerance below which a constrained run's residual energy counts as negative.
pub const RESIDUAL_FLOOR: f64 = -1e-9;
/// Feasibility at which the integral identity is checked.
pub const FULL_FEASIBILITY: f64 = 1.0 - 1e-10;

/// `seed`'s `stream`-th independent substream, reduced to one `u64`.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Substream used for optimizer restarts.
pub const RESTART_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "M")]
    pub m: i64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Penalty amplitude for penalized methods.
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    pub p: usize,
    /// Time step in units of `1/W`.
    pub delta_t: f64,
    #[serde(default)]
    pub optimize: bool,
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default)]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_file: Option<PathBuf>,
    #[serde(default)]
    pub mixer: MixerBackend,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_optimizer() -> String {
    "bfgs".into()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Loads `instance_file` when given, otherwise draws the seeded instance.
    pub fn instance(&self) -> Result<PortfolioInstance> {
        let inst = match &self.instance_file {
            Some(path) => PortfolioInstance::load(path)?,
            None => generate_instance(self.seed, self.n, self.d, self.m, self.lambda, &RiskModel::default())?,
        };
        if (inst.n, inst.d, inst.m) != (self.n, self.d, self.m) {
            return Err(Error::InvalidArgument(format!(
                "instance is N={} D={} M={}, config asks for N={} D={} M={}",
                inst.n, inst.d, inst.m, self.n, self.d, self.m
            )));
        }
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 && self.optimize {
            return Err(Error::InvalidArgument("nothing to optimize at p = 0".into()));
        }
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta_t must be positive, got {}", self.delta_t)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRef {
    pub n: usize,
    pub d: usize,
    pub m: i64,
    pub lambda: f64,
    pub seed: Option<u64>,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub optimizer: String,
    pub initial_objective: f64,
    pub objective: f64,
    pub best_start: usize,
    pub starts: Vec<StartRecord>,
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub instance: InstanceRef,
    pub penalty: Option<f64>,
    pub initial_schedule: Schedule,
    pub schedule: Schedule,
    pub optimized: bool,
    /// `<H_p>` without penalty.
    pub e_p: f64,
    pub e_min: f64,
    pub w: f64,
    pub delta_e: f64,
    pub feasibility: f64,
    pub f_w_over_100: f64,
    /// Quantiles of `(E - E_min) / W` over the output distribution, with
    /// penalized energies on infeasible strings for penalized methods.
    pub spread: BoxStats,
    /// `|Delta E - int_0^W (1 - F)|`, on fully feasible runs.
    pub integral_gap: Option<f64>,
    pub counts: Option<ComponentCounts>,
    pub total_counts: Option<GateCounts>,
    pub optimizer: Option<OptimizerTrace>,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// Metrics of a prepared state.
pub fn summarize(ansatz: &dyn Ansatz, state: &StateVector) -> Result<(f64, EnergyDistribution)> {
    let ham = &ansatz.problem().ham;
    let e_p = state.expectation_diagonal(&ham.energies)?;
    if !e_p.is_finite() {
        return Err(Error::NonFinite("energy expectation"));
    }
    let dist = EnergyDistribution::from_state_with(state, ham, ansatz.objective())?;
    Ok((e_p, dist))
}

pub struct Runner {
    pub methods: AnsatzRegistry,
    pub optimizers: OptimizerRegistry,
    pub settings: Settings,
}

impl Default for Runner {
    fn default() -> Self {
        Self { methods: AnsatzRegistry::default(), optimizers: OptimizerRegistry::default(), settings: Settings::default() }
    }
}

impl Runner {
    pub fn build(&self, cfg: &RunConfig, problem: Arc<Problem>) -> Result<Box<dyn Ansatz>> {
        let opts = AnsatzOptions { penalty: cfg.a.unwrap_or(DEFAULT_PENALTY), mixer: cfg.mixer };
        self.methods.build(&cfg.method, problem, &opts)
    }

    pub fn run(&self, cfg: &RunConfig) -> Result<RunRecord> {
        cfg.validate()?;
        let optimizer = if cfg.optimize { Some(self.optimizers.build(&cfg.optimizer)?) } else { None };
        let instance = cfg.instance()?;
        let problem = Problem::new(instance)?;
        let ansatz = self.build(cfg, problem.clone())?;
        if !cfg.optimize && !ansatz.supports_fixed_angle() {
            return Err(Error::Incompatible {
                method: cfg.method.clone(),
                reason: "the initial state is not a driver ground state; fixed-angle runs are not offered, use optimize"
                    .into(),
            });
        }
        let w = problem.ham.w;
        let initial_schedule = if cfg.p == 0 {
            Schedule::new(vec![], vec![])?
        } else {
            Schedule::fixed_angles(cfg.p, cfg.delta_t / w)?
        };
        let (schedule, trace) = match &optimizer {
            Some(opt) => {
                let seed = stream_seed(cfg.seed, RESTART_STREAM);
                let out = optimize(ansatz.as_ref(), &initial_schedule, opt.as_ref(), cfg.restarts, seed, &self.settings)?;
                let trace = OptimizerTrace {
                    optimizer: opt.name().to_string(),
                    initial_objective: out.initial_objective,
                    objective: out.objective,
                    best_start: out.best_start,
                    starts: out.starts,
                    trace: out.trace,
                };
                (out.schedule, Some(trace))
            }
            None => (initial_schedule.clone(), None),
        };
        let (e_p, state) = evaluate_ansatz(ansatz.as_ref(), &schedule)?;
        let (_, dist) = summarize(ansatz.as_ref(), &state)?;
        let delta_e = e_p - problem.ham.e_min;
        if ansatz.hard_constraint() && delta_e < RESIDUAL_FLOOR {
            return Err(Error::Pathology(format!("constrained run below the feasible optimum: dE = {delta_e:e}")));
        }
        let integral_gap =
            (dist.feasibility >= FULL_FEASIBILITY).then(|| (delta_e - dist.integral_of_complement()).abs());
        let spread = BoxStats::from_weighted(&dist.all_points())?.scaled(1.0 / w);
        let counts = ansatz.gate_counts().ok();
        let mut notes = ansatz.notes();
        if let Some(path) = &cfg.instance_file {
            notes.push(format!("instance from {}", path.display()));
        }
        info!("{} p={} dE/W={:.6} feasibility={:.6}", cfg.method, cfg.p, delta_e / w, dist.feasibility);
        Ok(RunRecord {
            method: cfg.method.clone(),
            instance: InstanceRef {
                n: problem.instance.n,
                d: problem.instance.d,
                m: problem.instance.m,
                lambda: problem.instance.lambda,
                seed: problem.instance.seed,
                file: cfg.instance_file.clone(),
            },
            penalty: (cfg.method == "x_qaoa").then(|| cfg.a.unwrap_or(DEFAULT_PENALTY)),
            initial_schedule,
            optimized: cfg.optimize,
            e_p,
            e_min: problem.ham.e_min,
            w,
            delta_e,
            feasibility: dist.feasibility,
            f_w_over_100: dist.f_of_e(w / 100.0),
            spread,
            integral_gap,
            total_counts: counts.map(|c| c.total(schedule.p)),
            counts,
            schedule,
            optimizer: trace,
            seed: cfg.seed,
            notes,
        })
    }
}

/// One CSV line of a results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "M")]
    pub m: i64,
    pub p: usize,
    /// In units of `1/W`.
    pub delta_t: f64,
    pub optimized: bool,
    #[serde(rename = "E_p")]
    pub e_p: Option<f64>,
    #[serde(rename = "dE_over_W")]
    pub de_over_w: Option<f64>,
    pub feasibility: Option<f64>,
    #[serde(rename = "F_W_over_100")]
    pub f_w_over_100: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub w5: Option<f64>,
    pub w95: Option<f64>,
    pub singles: Option<i64>,
    pub twos: Option<i64>,
    pub seed: u64,
    /// `ok`, or the error that stopped the run.
    pub status: String,
}

pub const RESULT_COLUMNS: [&str; 20] = [
    "method",
    "N",
    "D",
    "M",
    "p",
    "delta_t",
    "optimized",
    "E_p",
    "dE_over_W",
    "feasibility",
    "F_W_over_100",
    "q1",
    "median",
    "q3",
    "w5",
    "w95",
    "singles",
    "twos",
    "seed",
    "status",
];

impl ResultRow {
    pub fn from_record(cfg: &RunConfig, r: &RunRecord) -> Self {
        Self {
            method: cfg.method.clone(),
            n: cfg.n,
            d: cfg.d,
            m: cfg.m,
            p: cfg.p,
            delta_t: cfg.delta_t,
            optimized: cfg.optimize,
            e_p: Some(r.e_p),
            de_over_w: Some(r.delta_e / r.w),
            feasibility: Some(r.feasibility),
            f_w_over_100: Some(r.f_w_over_100),
            q1: Some(r.spread.q1),
            median: Some(r.spread.median),
            q3: Some(r.spread.q3),
            w5: Some(r.spread.w5),
            w95: Some(r.spread.w95),
            singles: r.total_counts.map(|c| c.single),
            twos: r.total_counts.map(|c| c.two),
            seed: cfg.seed,
            status: "ok".into(),
        }
    }

    pub fn failed(cfg: &RunConfig, err: &Error) -> Self {
        Self {
            method: cfg.method.clone(),
            n: cfg.n,
            d: cfg.d,
            m: cfg.m,
            p: cfg.p,
            delta_t: cfg.delta_t,
            optimized: cfg.optimize,
            e_p: None,
            de_over_w: None,
            feasibility: None,
            f_w_over_100: None,
            q1: None,
            median: None,
            q3: None,
            w5: None,
            w95: None,
            singles: None,
            twos: None,
            seed: cfg.seed,
            status: format!("error: {err}").replace(['\n', '\r'], " "),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(method: &str) -> RunConfig {
        RunConfig::from_toml(&format!(
            "method = \"{method}\"\nN = 4\nD = 2\nM = 1\np = 2\ndelta_t = 1.0\nseed = 11\n"
        ))
        .unwrap()
    }

    #[test]
    fn toml_defaults_and_round_trip() {
        let c = config("fqaoa");
        assert_eq!(c.lambda, DEFAULT_LAMBDA);
        assert_eq!(c.optimizer, "bfgs");
        assert!(!c.optimize && c.a.is_none() && c.instance_file.is_none());
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        assert!(RunConfig::from_toml("method = \"fqaoa\"\nN = 4\nD = 2\nM = 1\np = 2\ndelta_t = 1.0\nbogus = 1\n").is_err());
    }

    #[test]
    fn fixed_angle_fqaoa_record() {
        let r = Runner::default().run(&config("fqaoa")).unwrap();
        assert!((r.feasibility - 1.0).abs() < 1e-10);
        assert!(r.delta_e >= RESIDUAL_FLOOR);
        assert!(r.integral_gap.unwrap() < 1e-12);
        assert_eq!(r.schedule.p, 2);
        assert!(r.total_counts.is_some());
        assert!((r.schedule.gammas[0] * r.w - 0.25).abs() < 1e-12);
    }

    #[test]
    fn xy_fixed_angle_refused() {
        let err = Runner::default().run(&config("xy_qaoa_2")).unwrap_err();
        assert!(matches!(err, Error::Incompatible { .. }));
        let mut c = config("xy_qaoa_2");
        c.optimize = true;
        c.restarts = 1;
        let r = Runner::default().run(&c).unwrap();
        assert!((r.feasibility - 1.0).abs() < 1e-10);
    }

    #[test]
    fn x_qaoa_leaks_and_reports_penalty() {
        let r = Runner::default().run(&config("x_qaoa")).unwrap();
        assert!(r.feasibility < 1.0);
        assert_eq!(r.penalty, Some(DEFAULT_PENALTY));
        assert!(r.integral_gap.is_none());
    }

    #[test]
    fn optimization_never_hurts() {
        let base = Runner::default().run(&config("fqaoa")).unwrap();
        let mut c = config("fqaoa");
        c.optimize = true;
        let r = Runner::default().run(&c).unwrap();
        assert!(r.e_p <= base.e_p + 1e-12);
        let t = r.optimizer.unwrap();
        assert!(t.objective <= t.initial_objective + 1e-12);
    }

    #[test]
    fn stream_seeds_differ() {
        assert_ne!(stream_seed(3, 0), stream_seed(3, 1));
        assert_eq!(stream_seed(3, 1), stream_seed(3, 1));
    }

    #[test]
    fn failed_row_keeps_identity() {
        let c = config("nope");
        let err = Runner::default().run(&c).unwrap_err();
        let row = ResultRow::failed(&c, &err);
        assert!(row.status.starts_with("error: unknown method"));
        assert!(row.e_p.is_none());
    }
}
