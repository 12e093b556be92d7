//! Experiment configuration (JSON, `schema_version` 1).

use crate::filter::MonotonePath;
use crate::gaussfield::HurstPair;
use crate::lattice::Grid2D;
use crate::model::{Func, SensorFunction, SignalModel, X0Law};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t1: f64,
    pub t2: f64,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HurstConfig {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeConfig {
    pub drift: Func,
    pub diffusion: Func,
    pub x0: X0Law,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub g: Func,
    /// Hölder order `λ` of `g`.
    pub holder_order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    LowerL,
    UpperL,
    Diagonal,
    Custom { name: String, points: Vec<[usize; 2]> },
}

impl PathSpec {
    pub fn name(&self) -> String {
        match self {
            PathSpec::LowerL => "lower_l".into(),
            PathSpec::UpperL => "upper_l".into(),
            PathSpec::Diagonal => "diagonal".into(),
            PathSpec::Custom { name, .. } => name.clone(),
        }
    }

    pub fn build(&self, grid: Grid2D) -> Result<MonotonePath, crate::filter::PathError> {
        match self {
            PathSpec::LowerL => Ok(MonotonePath::lower_l(grid)),
            PathSpec::UpperL => Ok(MonotonePath::upper_l(grid)),
            PathSpec::Diagonal => Ok(MonotonePath::diagonal(grid)),
            PathSpec::Custom { points, .. } => MonotonePath::new(grid, points.iter().map(|p| (p[0], p[1])).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub particles: usize,
    pub test_functions: Vec<Func>,
    pub paths: Vec<PathSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub master: u64,
    pub signal_stream: u64,
    pub noise_stream: u64,
    pub particle_stream_base: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Multiplier `k` in the `k·SE` statistical checks.
    pub sigma_multiplier: f64,
    /// Relative refinement gap above which a fractional derivative is
    /// reported as unstable.
    pub stability_tol: f64,
    /// Grid sizes for the refinement studies.
    pub refinement_levels: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Binary,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub grid: GridConfig,
    pub hurst: HurstConfig,
    pub sde: SdeConfig,
    pub sensor: SensorConfig,
    pub filter: FilterConfig,
    pub seeds: SeedConfig,
    pub tolerances: ToleranceConfig,
    pub outputs: OutputConfig,
}

/// One validation failure, tied to a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Invalid(Vec<FieldError>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse(e) => write!(f, "cannot parse config: {e}"),
            ConfigError::Invalid(errs) => {
                writeln!(f, "invalid config:")?;
                for e in errs {
                    writeln!(f, "  {e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl Default for ExperimentConfig {
    /// Signal with drift `−½ sin x` and diffusion `0.4`, sensor `0.3 sin x`,
    /// observed in fractional noise with `α = β = 0.6` on a 16×16 grid.
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            grid: GridConfig { t1: 1.0, t2: 1.0, n1: 16, n2: 16 },
            hurst: HurstConfig { alpha: 0.6, beta: 0.6 },
            sde: SdeConfig {
                drift: Func::Sin { amp: -0.5, freq: 1.0, phase: 0.0 },
                diffusion: Func::Const { c: 0.4 },
                x0: X0Law::Normal { mean: 0.5, sd: 0.5 },
            },
            sensor: SensorConfig { g: Func::Sin { amp: 0.3, freq: 1.0, phase: 0.0 }, holder_order: 1.0 },
            filter: FilterConfig {
                particles: 5000,
                test_functions: vec![Func::Sin { amp: 1.0, freq: 1.0, phase: 0.0 }, Func::identity()],
                paths: vec![PathSpec::LowerL, PathSpec::UpperL, PathSpec::Diagonal],
            },
            seeds: SeedConfig {
                master: 20240611,
                signal_stream: super::rng::SIGNAL_STREAM,
                noise_stream: super::rng::NOISE_STREAM,
                particle_stream_base: super::rng::PARTICLE_STREAM_BASE,
            },
            tolerances: ToleranceConfig { sigma_multiplier: 5.0, stability_tol: 0.25, refinement_levels: vec![128, 256, 512, 1024] },
            outputs: OutputConfig { directory: "out".into(), formats: vec![OutputFormat::Csv, OutputFormat::Binary, OutputFormat::Json] },
        }
    }
}

fn check_func(errs: &mut Vec<FieldError>, field: &str, f: &Func) {
    let ok = match *f {
        Func::Zero => true,
        Func::Const { c } => c.is_finite(),
        Func::Linear { slope, intercept } => slope.is_finite() && intercept.is_finite(),
        Func::Sin { amp, freq, phase } | Func::Cos { amp, freq, phase } => amp.is_finite() && freq.is_finite() && phase.is_finite(),
    };
    if !ok {
        errs.push(FieldError { field: field.into(), message: "function parameters must be finite".into() });
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// All violated constraints, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut e = Vec::new();
        let mut push = |field: &str, message: String| e.push(FieldError { field: field.into(), message });
        if self.schema_version != SCHEMA_VERSION {
            push("schema_version", format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version));
        }
        let g = &self.grid;
        for (name, t) in [("grid.t1", g.t1), ("grid.t2", g.t2)] {
            if !(t.is_finite() && t > 0.0) {
                push(name, format!("extent must be positive and finite, got {t}"));
            }
        }
        for (name, n) in [("grid.n1", g.n1), ("grid.n2", g.n2)] {
            if n < 2 {
                push(name, format!("need at least 2 cells, got {n}"));
            }
        }
        for (name, h) in [("hurst.alpha", self.hurst.alpha), ("hurst.beta", self.hurst.beta)] {
            if !(h > 0.5 && h < 1.0) {
                push(name, format!("must lie in (0.5, 1) so the noise is persistent, got {h}"));
            }
        }
        let bound = 2.0 * self.hurst.alpha.max(self.hurst.beta) - 1.0;
        let lam = self.sensor.holder_order;
        if !(lam > bound) || lam > 1.0 {
            push("sensor.holder_order", format!("Hölder order λ={lam} must satisfy 2·max(alpha, beta) − 1 = {bound:.4} < λ ≤ 1"));
        }
        if self.filter.particles < 10 {
            push("filter.particles", format!("need at least 10 particles, got {}", self.filter.particles));
        }
        if self.filter.test_functions.is_empty() {
            push("filter.test_functions", "at least one test function is required".into());
        }
        match self.sde.x0 {
            X0Law::Fixed { value } if !value.is_finite() => push("sde.x0.value", "must be finite".into()),
            X0Law::Normal { mean, sd } if !(mean.is_finite() && sd.is_finite() && sd >= 0.0) => {
                push("sde.x0", "normal law needs a finite mean and a finite sd ≥ 0".into())
            }
            _ => {}
        }
        let streams = [self.seeds.signal_stream, self.seeds.noise_stream];
        if streams[0] == streams[1] {
            push("seeds.noise_stream", "signal and noise must use distinct streams".into());
        }
        if self.seeds.particle_stream_base <= streams[0].max(streams[1]) {
            push("seeds.particle_stream_base", "particle streams must lie above the signal and noise streams".into());
        }
        let t = &self.tolerances;
        if !(t.sigma_multiplier > 0.0) {
            push("tolerances.sigma_multiplier", "must be positive".into());
        }
        if !(t.stability_tol > 0.0) {
            push("tolerances.stability_tol", "must be positive".into());
        }
        if t.refinement_levels.len() < 2 || t.refinement_levels.windows(2).any(|w| w[1] != 2 * w[0]) {
            push("tolerances.refinement_levels", "need at least two levels, each double the previous".into());
        }
        if self.outputs.formats.is_empty() {
            push("outputs.formats", "at least one output format is required".into());
        }
        if e.is_empty() {
            let mut more = Vec::new();
            check_func(&mut more, "sde.drift", &self.sde.drift);
            check_func(&mut more, "sde.diffusion", &self.sde.diffusion);
            check_func(&mut more, "sensor.g", &self.sensor.g);
            for (k, f) in self.filter.test_functions.iter().enumerate() {
                check_func(&mut more, &format!("filter.test_functions[{k}]"), f);
            }
            let grid = self.grid();
            for (k, p) in self.filter.paths.iter().enumerate() {
                if let Err(err) = p.build(grid) {
                    more.push(FieldError { field: format!("filter.paths[{k}]"), message: err.to_string() });
                }
            }
            e.extend(more);
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(e))
        }
    }

    pub fn grid(&self) -> Grid2D {
        Grid2D { t1: self.grid.t1, t2: self.grid.t2, n1: self.grid.n1, n2: self.grid.n2 }
    }

    pub fn hurst(&self) -> HurstPair {
        HurstPair { alpha: self.hurst.alpha, beta: self.hurst.beta }
    }

    pub fn signal_model(&self) -> SignalModel {
        SignalModel { drift: self.sde.drift, diffusion: self.sde.diffusion, x0: self.sde.x0 }
    }

    pub fn sensor(&self) -> SensorFunction {
        SensorFunction { g: self.sensor.g, holder_order: self.sensor.holder_order }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds.master = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn persistence_violation_is_reported() {
        let mut c = ExperimentConfig::default();
        c.hurst.alpha = 0.4;
        let ConfigError::Invalid(errs) = c.validate().unwrap_err() else { panic!() };
        assert!(errs.iter().any(|e| e.field == "hurst.alpha" && e.message.contains("persistent")));
    }

    #[test]
    fn all_errors_are_collected() {
        let mut c = ExperimentConfig::default();
        c.grid.n1 = 1;
        c.filter.particles = 3;
        c.sensor.holder_order = 0.1;
        let ConfigError::Invalid(errs) = c.validate().unwrap_err() else { panic!() };
        let fields: Vec<_> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["grid.n1", "sensor.holder_order", "filter.particles"]);
    }

    #[test]
    fn bad_custom_path_is_reported() {
        let mut c = ExperimentConfig::default();
        c.filter.paths.push(PathSpec::Custom { name: "zigzag".into(), points: vec![[0, 0], [1, 1]] });
        let ConfigError::Invalid(errs) = c.validate().unwrap_err() else { panic!() };
        assert_eq!(errs[0].field, "filter.paths[3]");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::default().to_json()).unwrap();
        v["grid"]["n3"] = 4.into();
        assert!(matches!(ExperimentConfig::from_json(&v.to_string()), Err(ConfigError::Parse(_))));
    }

    proptest! {
        #[test]
        fn round_trip_is_idempotent(alpha in 0.51f64..0.99, beta in 0.51f64..0.99, n in 2usize..40, seed in any::<u64>(), amp in -2.0f64..2.0) {
            let mut c = ExperimentConfig::default().with_seed(seed);
            c.hurst = HurstConfig { alpha, beta };
            c.grid.n1 = n;
            c.grid.n2 = n + 1;
            c.filter.paths = vec![PathSpec::Diagonal];
            c.sensor.g = Func::Cos { amp, freq: 1.5, phase: 0.2 };
            let once = ExperimentConfig::from_json(&c.to_json()).unwrap();
            prop_assert_eq!(&once, &c);
            prop_assert_eq!(once.to_json(), c.to_json());
        }
    }
}
