//! Subcommand execution and exit codes.

use super::checks::{build_ensemble, convergence_suite, dmz_case, property_suite, CheckContext, CheckError, CheckLevel};
use super::config::{ConfigError, ExperimentConfig, OutputFormat};
use super::io::{field_to_binary, field_to_csv, trace_to_csv, ArtifactWriter};
use super::report::RunReport;
use super::rng::stream;
use crate::filter::{bayes_filter_at, zakai_curve_integrate, FilterError, TraceRow};
use crate::gaussfield::{FbsCholesky, KernelCache};
use crate::lattice::Field2D;
use crate::model::{delta_2d, likelihood, simulate_observation};
use serde_json::{json, Value};
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    FilterBayes,
    FilterCurve,
    DmzCheck,
    Properties,
    Convergence,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::FilterBayes => "filter-bayes",
            Subcommand::FilterCurve => "filter-curve",
            Subcommand::DmzCheck => "dmz-check",
            Subcommand::Properties => "properties",
            Subcommand::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Default config when `None`.
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Overrides `outputs.directory`.
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when `None`.
    pub jobs: Option<usize>,
    pub level: CheckLevel,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { config: None, seed: None, out: None, jobs: None, level: CheckLevel::Full }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(String),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_INVALID_CONFIG,
            RunError::Numerical(_) | RunError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(e) => write!(f, "cannot write artifacts: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<CheckError> for RunError {
    fn from(e: CheckError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<FilterError> for RunError {
    fn from(e: FilterError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<crate::model::ModelError> for RunError {
    fn from(e: crate::model::ModelError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<crate::gaussfield::GaussError> for RunError {
    fn from(e: crate::gaussfield::GaussError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Loaded, seed-overridden and validated config.
pub fn resolve_config(opts: &RunOptions) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &opts.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg = cfg.with_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `cmd` and writes its artifacts.
pub fn execute(cmd: Subcommand, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let cfg = resolve_config(opts)?;
    let out_dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.outputs.directory));
    let work = || -> Result<RunOutcome, RunError> {
        let mut w = ArtifactWriter::create(&out_dir)?;
        let mut report = match cmd {
            Subcommand::Simulate => simulate(&cfg, opts.level, &mut w)?,
            Subcommand::FilterBayes => filter_bayes(&cfg, opts.level, &mut w)?,
            Subcommand::FilterCurve => filter_curve(&cfg, opts.level, &mut w)?,
            Subcommand::DmzCheck => dmz_check(&cfg, opts.level)?,
            Subcommand::Properties => {
                let ctx = CheckContext { config: &cfg, level: opts.level };
                RunReport::new(cmd.name(), opts.level, &cfg, property_suite(&ctx)?, Value::Null)
            }
            Subcommand::Convergence => {
                let ctx = CheckContext { config: &cfg, level: opts.level };
                RunReport::new(cmd.name(), opts.level, &cfg, convergence_suite(&ctx)?, Value::Null)
            }
        };
        report.artifacts = w.written().to_vec();
        if wants(&cfg, OutputFormat::Json) {
            w.json("summary.json", &report)?;
        }
        w.text("report.txt", &report.human())?;
        Ok(RunOutcome { report, out_dir: out_dir.clone() })
    };
    match opts.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| RunError::Numerical(format!("cannot start worker pool: {e}")))?;
            pool.install(work)
        }
        None => work(),
    }
}

/// [`execute`] plus console output; returns the process exit code.
pub fn run(cmd: Subcommand, opts: &RunOptions) -> i32 {
    let t0 = Instant::now();
    match execute(cmd, opts) {
        Ok(outcome) => {
            print!("{}", outcome.report.human());
            println!("wrote {} in {:.2} s", outcome.out_dir.display(), t0.elapsed().as_secs_f64());
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn wants(cfg: &ExperimentConfig, f: OutputFormat) -> bool {
    cfg.outputs.formats.contains(&f)
}

fn write_field(cfg: &ExperimentConfig, w: &mut ArtifactWriter, stem: &str, field: &Field2D) -> std::io::Result<()> {
    if wants(cfg, OutputFormat::Csv) {
        w.text(&format!("{stem}.csv"), &field_to_csv(field))?;
    }
    if wants(cfg, OutputFormat::Binary) {
        w.bytes(&format!("{stem}.fbsf"), &field_to_binary(field))?;
    }
    Ok(())
}

fn write_trace(cfg: &ExperimentConfig, w: &mut ArtifactWriter, name: &str, rows: &[TraceRow]) -> std::io::Result<()> {
    if wants(cfg, OutputFormat::Csv) {
        w.text(name, &trace_to_csv(rows))?;
    }
    Ok(())
}

fn stats(f: &Field2D) -> Value {
    let n = f.values.len() as f64;
    let mean = f.values.iter().sum::<f64>() / n;
    let min = f.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({"mean": mean, "min": min, "max": max})
}

fn simulate(cfg: &ExperimentConfig, level: CheckLevel, w: &mut ArtifactWriter) -> Result<RunReport, RunError> {
    let grid = cfg.grid();
    let hp = cfg.hurst();
    let cache = KernelCache::new(grid, hp);
    let fbs = FbsCholesky::new(grid, hp)?;
    let s = &cfg.seeds;
    let obs = simulate_observation(&cfg.signal_model(), &cfg.sensor.g, &cache, &fbs, &mut stream(s.master, s.signal_stream), &mut stream(s.master, s.noise_stream))?;
    let delta = delta_2d(&obs.signal.node_values(), &cfg.sensor.g, &hp, cfg.tolerances.stability_tol)?;
    let lik = likelihood(&delta.values, &obs.wy)?;
    let signal = obs.signal.corner_values();
    let fields = [
        ("signal", &signal),
        ("observation", &obs.y.cumulative),
        ("noise", &obs.noise.cumulative),
        ("wiener", &obs.wiener.cumulative),
        ("whitened_observation", &obs.wy.cumulative),
        ("delta", &delta.values),
    ];
    let mut summary = serde_json::Map::new();
    for (stem, f) in fields {
        write_field(cfg, w, stem, f)?;
        summary.insert(stem.into(), stats(f));
    }
    summary.insert("x0".into(), json!(obs.signal.at(0, 0)));
    summary.insert("delta_l2_norm".into(), json!(delta.l2_norm));
    summary.insert("delta_warnings".into(), json!(delta.warnings));
    summary.insert("log_likelihood_ratio_at_t".into(), json!(lik.log_v_inv_at(grid.n1, grid.n2)));
    Ok(RunReport::new("simulate", level, cfg, vec![], Value::Object(summary)))
}

fn row(ens_grid: crate::lattice::Grid2D, a: usize, b: usize, e: &crate::filter::FilterEstimate) -> TraceRow {
    let z = ens_grid.corner(a, b);
    TraceRow { a, b, z1: z.z1, z2: z.z2, sigma: e.sigma, pi: e.pi, se: e.se, sigma_se: e.sigma_se, n_eff: e.n_eff }
}

fn filter_bayes(cfg: &ExperimentConfig, level: CheckLevel, w: &mut ArtifactWriter) -> Result<RunReport, RunError> {
    let n = level.samples(cfg.filter.particles);
    let (obs, ens) = build_ensemble(cfg, n)?;
    let grid = cfg.grid();
    let mut per_f = Vec::new();
    for (k, f) in cfg.filter.test_functions.iter().enumerate() {
        let mut rows = Vec::with_capacity((grid.n1 + 1) * (grid.n2 + 1));
        for a in 0..=grid.n1 {
            for b in 0..=grid.n2 {
                rows.push(row(grid, a, b, &bayes_filter_at(&ens, f, a, b)?));
            }
        }
        write_trace(cfg, w, &format!("trace_bayes_f{k}.csv"), &rows)?;
        let last = rows.last().expect("grid has corners");
        per_f.push(json!({
            "test_function": f,
            "pi_at_t": last.pi,
            "se_at_t": last.se,
            "sigma_at_t": last.sigma,
            "truth_at_t": f.eval(obs.signal.at(grid.n1, grid.n2)),
        }));
    }
    let summary = json!({"particles": n, "n_eff_at_t": ens.n_eff(grid.n1, grid.n2), "test_functions": per_f});
    Ok(RunReport::new("filter-bayes", level, cfg, vec![], summary))
}

fn filter_curve(cfg: &ExperimentConfig, level: CheckLevel, w: &mut ArtifactWriter) -> Result<RunReport, RunError> {
    let n = level.samples(cfg.filter.particles);
    let (_, ens) = build_ensemble(cfg, n)?;
    let model = cfg.signal_model();
    let k = cfg.tolerances.sigma_multiplier;
    let mut consistent = true;
    let mut traces = Vec::new();
    for spec in &cfg.filter.paths {
        let path = spec.build(cfg.grid()).map_err(FilterError::from)?;
        for (fi, f) in cfg.filter.test_functions.iter().enumerate() {
            let tr = zakai_curve_integrate(&ens, &model.drift, &model.diffusion, f, &path)?;
            let name = format!("trace_curve_{}_f{fi}.csv", spec.name());
            write_trace(cfg, w, &name, &tr.rows)?;
            let mut worst = 0.0f64;
            for r in tr.rows.iter().filter(|r| r.a + r.b > 0) {
                let b = bayes_filter_at(&ens, f, r.a, r.b)?;
                let bound = k * (r.sigma_se.powi(2) + b.sigma_se.powi(2)).sqrt();
                let diff = (r.sigma - b.sigma).abs();
                let ratio = if bound > 0.0 { diff / bound } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
                worst = worst.max(ratio);
            }
            consistent &= worst <= 1.0;
            let last = tr.rows.last().expect("path has nodes");
            traces.push(json!({
                "path": spec.name(),
                "test_function": f,
                "file": name,
                "pi_at_t": last.pi,
                "se_at_t": last.se,
                "worst_gap_over_bound": worst,
            }));
        }
    }
    let summary = json!({"particles": n, "sigma_multiplier": k, "consistent_with_bayes": consistent, "traces": traces});
    let mut report = RunReport::new("filter-curve", level, cfg, vec![], summary);
    report.passed = consistent;
    Ok(report)
}

fn dmz_check(cfg: &ExperimentConfig, level: CheckLevel) -> Result<RunReport, RunError> {
    let n = level.samples(cfg.filter.particles);
    let f = cfg.filter.test_functions[0];
    let k = cfg.tolerances.sigma_multiplier;
    let case = dmz_case(cfg, &f, n, true)?;
    let r = &case.coarse;
    let bound = k * r.se + case.allowance;
    let passed = r.residual.abs() <= bound;
    let summary = json!({
        "particles": n,
        "test_function": f,
        "residual": r.residual,
        "se": r.se,
        "allowance": case.allowance,
        "bound": bound,
        "lhs": r.lhs,
        "rhs_terms": r.rhs_terms,
        "refined_residual": case.fine.map(|x| x.residual),
        "within_bound": passed,
    });
    let mut report = RunReport::new("dmz-check", level, cfg, vec![], summary);
    report.passed = passed;
    Ok(report)
}
