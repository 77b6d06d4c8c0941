use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use fqaoa::analysis::{certify_gate_counts, power_law_slope, BoxStats};
use fqaoa::ansatz::{reference_circuits, MixerBackend};
use fqaoa::evolution::{fswap_gates, MixerLayout};
use fqaoa::problem::{binomial, generate_instance, PortfolioInstance, RiskModel, DEFAULT_LAMBDA};
use fqaoa::run::{ResultRow, RunConfig, Runner};
use fqaoa::LatticeShape;

use crate::error::{CliError, CliResult};
use crate::{AnalyzeArgs, CertifyArgs, GenArgs, RunArgs};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(CliError::csv(path))?;
    w.write_record(header).map_err(CliError::csv(path))?;
    for r in rows {
        w.serialize(r).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn gen(args: &GenArgs, out_dir: &Path) -> CliResult<()> {
    let inst = generate_instance(args.seed, args.n, args.d, args.m, args.lambda, &RiskModel::default())?;
    let path = match &args.output {
        Some(p) => p.clone(),
        None => {
            ensure_dir(out_dir)?;
            out_dir.join(format!("instance_N{}_D{}_M{}_s{}.toml", args.n, args.d, args.m, args.seed))
        }
    };
    let nd = inst.num_qubits();
    let text = format!(
        "# portfolio instance N={} D={} M={} seed={}\n# feasible strings: C({}, {}) = {}\n{}",
        args.n,
        args.d,
        args.m,
        args.seed,
        nd,
        inst.m_prime(),
        binomial(nd, inst.m_prime()),
        inst.to_toml()?
    );
    let mut open = OpenOptions::new();
    open.write(true);
    if args.force {
        open.create(true).truncate(true);
    } else {
        open.create_new(true);
    }
    let mut file = open.open(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            CliError::Config(format!("{} exists; pass --force to overwrite", path.display()))
        } else {
            CliError::Io { path: path.clone(), source: e }
        }
    })?;
    file.write_all(text.as_bytes()).map_err(CliError::io(&path))?;
    println!("{}", path.display());
    Ok(())
}

fn run_config(args: &RunArgs) -> CliResult<RunConfig> {
    let missing = |flag: &str| CliError::Config(format!("missing --{flag} (or a --config file)"));
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(CliError::io(path))?;
            RunConfig::from_toml(&text)?
        }
        None => {
            let from_file = match &args.instance {
                Some(path) => Some(PortfolioInstance::load(path)?),
                None => None,
            };
            let pick = |flag: Option<usize>, file: Option<usize>, name: &str| flag.or(file).ok_or_else(|| missing(name));
            RunConfig {
                method: args.method.clone().ok_or_else(|| missing("method"))?,
                n: pick(args.n, from_file.as_ref().map(|i| i.n), "n")?,
                d: pick(args.d, from_file.as_ref().map(|i| i.d), "d").unwrap_or(2),
                m: args.m.or(from_file.as_ref().map(|i| i.m)).ok_or_else(|| missing("m"))?,
                lambda: args.lambda.or(from_file.as_ref().map(|i| i.lambda)).unwrap_or(DEFAULT_LAMBDA),
                a: None,
                p: args.p.ok_or_else(|| missing("p"))?,
                delta_t: args.wdt.ok_or_else(|| missing("wdt"))?,
                optimize: false,
                optimizer: "bfgs".into(),
                restarts: 0,
                seed: 0,
                instance_file: None,
                mixer: MixerBackend::Trotter,
            }
        }
    };
    if let Some(v) = &args.method {
        cfg.method = v.clone();
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.d {
        cfg.d = v;
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    if args.penalty.is_some() {
        cfg.a = args.penalty;
    }
    if let Some(v) = args.p {
        cfg.p = v;
    }
    if let Some(v) = args.wdt {
        cfg.delta_t = v;
    }
    if args.optimize {
        cfg.optimize = true;
    }
    if args.no_optimize {
        cfg.optimize = false;
    }
    if let Some(v) = &args.optimizer {
        cfg.optimizer = v.clone();
    }
    if let Some(v) = args.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.instance {
        cfg.instance_file = Some(v.clone());
    }
    if let Some(v) = &args.mixer {
        cfg.mixer = match v.as_str() {
            "trotter" => MixerBackend::Trotter,
            "exact" => MixerBackend::Exact,
            other => return Err(CliError::Config(format!("unknown mixer `{other}` (known: trotter, exact)"))),
        };
    }
    Ok(cfg)
}

pub fn run(args: &RunArgs, out_dir: &Path) -> CliResult<()> {
    let cfg = run_config(args)?;
    let record = Runner::default().run(&cfg)?;
    ensure_dir(out_dir)?;
    let stem = args.name.clone().unwrap_or_else(|| {
        format!(
            "run_{}_N{}_D{}_M{}_p{}_s{}{}",
            cfg.method,
            cfg.n,
            cfg.d,
            cfg.m,
            cfg.p,
            cfg.seed,
            if cfg.optimize { "_opt" } else { "" }
        )
    });
    let json_path = out_dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&record).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(&json_path, text + "\n").map_err(CliError::io(&json_path))?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    write_rows(&csv_path, &[ResultRow::from_record(&cfg, &record)], &fqaoa::run::RESULT_COLUMNS)?;

    println!("method        {}", record.method);
    println!("E_p           {:.12e}", record.e_p);
    println!("dE/W          {:.6}", record.delta_e / record.w);
    println!("feasibility   {:.6}", record.feasibility);
    println!("F(W/100)      {:.6}", record.f_w_over_100);
    if let Some(t) = record.total_counts {
        println!("gates         {} single-qubit, {} two-qubit", t.single, t.two);
    }
    if let Some(o) = &record.optimizer {
        println!("objective     {:.9} -> {:.9} ({})", o.initial_objective, o.objective, o.optimizer);
    }
    println!("record        {}", json_path.display());
    println!("row           {}", csv_path.display());
    Ok(())
}

pub fn certify(args: &CertifyArgs) -> CliResult<()> {
    let mut first_failure = None;
    let mut checked = 0;
    for &d in &args.d {
        for &n in &args.n {
            let shape = LatticeShape::new(n, d)?;
            shape.require_even()?;
            let half = (n * d / 2) as i64;
            for m in (-half..=half).filter(|&m| m != 0) {
                let inst = generate_instance(0, n, d, m, DEFAULT_LAMBDA, &RiskModel::default())?;
                let mut circuits = reference_circuits(&inst)?;
                if args.corrupt_rung_fswaps {
                    let layout = MixerLayout::new(shape)?;
                    for _ in 0..layout.v_split.0 + layout.v_split.1 {
                        for &site in &layout.rung_hops {
                            fswap_gates(site, site + 1)?.into_iter().for_each(|g| circuits.mixer.push(g));
                        }
                    }
                }
                checked += 1;
                match certify_gate_counts(&circuits, shape, m, args.p) {
                    Ok(r) => {
                        let c = r.counts;
                        println!(
                            "N={n} D={d} M={m:>3}  U_init {}  U_p {}  U_m {}  total(p={}) {}  ok",
                            c.init, c.phase, c.mixer, args.p, r.total
                        );
                        if (n, d, m) == (8, 2, 4) {
                            println!(
                                "anchor N=8 D=2 M=4 p={}: {} single-qubit and {} two-qubit gates",
                                args.p, r.total.single, r.total.two
                            );
                        }
                    }
                    Err(e) => {
                        println!("N={n} D={d} M={m:>3}  FAILED: {e}");
                        first_failure.get_or_insert(e);
                    }
                }
            }
        }
    }
    match first_failure {
        Some(e) => Err(e.into()),
        None => {
            println!("{checked} configurations certified");
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    method: String,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "D")]
    d: usize,
    #[serde(rename = "M")]
    m: i64,
    optimized: bool,
    delta_t: f64,
    p: usize,
    runs: usize,
    failed: usize,
    #[serde(rename = "dE_over_W_mean")]
    mean: Option<f64>,
    q1: Option<f64>,
    median: Option<f64>,
    q3: Option<f64>,
    w5: Option<f64>,
    w95: Option<f64>,
    #[serde(rename = "F_W_over_100_mean")]
    f_mean: Option<f64>,
    feasibility_mean: Option<f64>,
}

const SUMMARY_COLUMNS: [&str; 17] = [
    "method",
    "N",
    "D",
    "M",
    "optimized",
    "delta_t",
    "p",
    "runs",
    "failed",
    "dE_over_W_mean",
    "q1",
    "median",
    "q3",
    "w5",
    "w95",
    "F_W_over_100_mean",
    "feasibility_mean",
];

#[derive(Debug, Serialize)]
struct FitRow {
    method: String,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "D")]
    d: usize,
    #[serde(rename = "M")]
    m: i64,
    optimized: bool,
    delta_t: f64,
    points: usize,
    slope: f64,
}

const FIT_COLUMNS: [&str; 8] = ["method", "N", "D", "M", "optimized", "delta_t", "points", "slope"];

type SeriesKey = (String, usize, usize, i64, bool, u64);

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sibling(input: &Path, suffix: &str) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    input.with_file_name(format!("{stem}{suffix}.csv"))
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let path = &args.input;
    let mut reader = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    let mut groups: BTreeMap<(SeriesKey, usize), Vec<ResultRow>> = BTreeMap::new();
    for row in reader.deserialize::<ResultRow>() {
        let row = row.map_err(CliError::csv(path))?;
        let key = (row.method.clone(), row.n, row.d, row.m, row.optimized, row.delta_t.to_bits());
        groups.entry((key, row.p)).or_default().push(row);
    }
    let mut summary = Vec::new();
    let mut series: BTreeMap<SeriesKey, Vec<(f64, f64)>> = BTreeMap::new();
    for ((key, p), rows) in &groups {
        let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.status == "ok").collect();
        let de: Vec<f64> = ok.iter().filter_map(|r| r.de_over_w).collect();
        let stats = BoxStats::from_samples(&de).ok();
        let m = mean(&de);
        if let Some(m) = m {
            series.entry(key.clone()).or_default().push((*p as f64 * f64::from_bits(key.5), m));
        }
        summary.push(SummaryRow {
            method: key.0.clone(),
            n: key.1,
            d: key.2,
            m: key.3,
            optimized: key.4,
            delta_t: f64::from_bits(key.5),
            p: *p,
            runs: rows.len(),
            failed: rows.len() - ok.len(),
            mean: m,
            q1: stats.map(|s| s.q1),
            median: stats.map(|s| s.median),
            q3: stats.map(|s| s.q3),
            w5: stats.map(|s| s.w5),
            w95: stats.map(|s| s.w95),
            f_mean: mean(&ok.iter().filter_map(|r| r.f_w_over_100).collect::<Vec<_>>()),
            feasibility_mean: mean(&ok.iter().filter_map(|r| r.feasibility).collect::<Vec<_>>()),
        });
    }
    let out = args.output.clone().unwrap_or_else(|| sibling(path, "_summary"));
    write_rows(&out, &summary, &SUMMARY_COLUMNS)?;
    println!("summary       {} ({} groups)", out.display(), summary.len());

    let window = (args.window[0], args.window[1]);
    let mut fits = Vec::new();
    for (key, points) in &series {
        if let Ok(slope) = power_law_slope(points, window) {
            let used = points.iter().filter(|p| p.0 >= window.0 && p.0 <= window.1).count();
            println!(
                "fit           {} N={} D={} M={} optimized={} W*dt={}: slope {:.4} over {} points",
                key.0,
                key.1,
                key.2,
                key.3,
                key.4,
                f64::from_bits(key.5),
                slope,
                used
            );
            fits.push(FitRow {
                method: key.0.clone(),
                n: key.1,
                d: key.2,
                m: key.3,
                optimized: key.4,
                delta_t: f64::from_bits(key.5),
                points: used,
                slope,
            });
        }
    }
    if !fits.is_empty() {
        let fit_path = sibling(&out, "_fits");
        write_rows(&fit_path, &fits, &FIT_COLUMNS)?;
        println!("fits          {}", fit_path.display());
    }
    Ok(())
}
