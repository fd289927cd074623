//! Run configuration: a TOML file merged with command-line overrides.
//!
//! The file names the task manifest, the kernel menu, solver knobs, the
//! hyperparameter grid, the split policy, and emit switches. Flags override
//! file values. The run mode is applied last because it pins lambda: `stl`
//! trains tasks independently (lambda = 0) and `mtl` drives every task onto
//! one shared weight vector (lambda large, default 1e6). `ours` leaves
//! lambda free.

use std::path::{Path, PathBuf};

use mtmkl::admm::{AdmmConfig, StoppingTolerances};
use mtmkl::kernel::KernelDef;
use mtmkl::trainer::{ThetaInit, TrainConfig};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Baseline switch. `stl` and `mtl` are the decoupled and fully shared
/// limits of the fused objective; both are realized by pinning lambda.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ours,
    Stl,
    Mtl,
}

impl Mode {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        match text {
            "ours" => Ok(Mode::Ours),
            "stl" => Ok(Mode::Stl),
            "mtl" => Ok(Mode::Mtl),
            other => Err(ConfigError::Invalid(format!(
                "unknown mode {other:?}; expected ours, stl, or mtl"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Ours => "ours",
            Mode::Stl => "stl",
            Mode::Mtl => "mtl",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    manifest: Option<String>,
    mode: Option<String>,
    seed: Option<u64>,
    output: Option<String>,
    #[serde(default)]
    kernels: KernelsSection,
    #[serde(default)]
    train: TrainSection,
    #[serde(default)]
    split: SplitSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    emit: EmitSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelsSection {
    /// Named menu; only "standard" is built in.
    menu: Option<String>,
    /// Explicit menu, mutually exclusive with `menu`.
    list: Option<Vec<KernelDef>>,
    normalize: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainSection {
    c: Option<f64>,
    lambda: Option<f64>,
    /// The "sufficiently large" lambda substituted in mtl mode.
    lambda_big: Option<f64>,
    rho: Option<f64>,
    svm_tol: Option<f64>,
    outer_tol: Option<f64>,
    outer_max_iters: Option<usize>,
    eps_abs: Option<f64>,
    eps_rel: Option<f64>,
    admm_max_iters: Option<usize>,
    projection: Option<String>,
    adaptive_rho: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitSection {
    train_frac: Option<f64>,
    balanced: Option<bool>,
    scale: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    c_values: Option<Vec<f64>>,
    lambda_values: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmitSection {
    trace: Option<bool>,
    affinity: Option<bool>,
    bound: Option<bool>,
}

/// Command-line overrides; `None` keeps the file (or default) value.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub mode: Option<String>,
    pub lambda: Option<f64>,
    pub c: Option<f64>,
    pub rho: Option<f64>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub mode: Mode,
    pub seed: u64,
    pub output: PathBuf,
    pub kernels: Vec<KernelDef>,
    pub normalize: bool,
    pub train: TrainConfig,
    pub c_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub train_frac: f64,
    pub balanced: bool,
    pub scale: bool,
    pub emit_trace: bool,
    pub emit_affinity: bool,
    pub emit_bound: bool,
}

/// Powers 2^-10 .. 2^10, the default search set for both axes.
pub fn default_grid() -> Vec<f64> {
    (-10..=10).map(|p| f64::powi(2.0, p)).collect()
}

fn require_positive(name: &str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

pub fn load_config(path: &Path, over: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let file: FileConfig = toml::from_str(&text)
        .map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })?;
    resolve(file, path, over)
}

fn resolve(file: FileConfig, path: &Path, over: &Overrides) -> Result<RunConfig, ConfigError> {
    let manifest_text = file
        .manifest
        .ok_or_else(|| ConfigError::Invalid("config must name a task manifest".into()))?;
    // Manifest location is relative to the config file, like the manifest's
    // own data paths are relative to the manifest.
    let manifest = match Path::new(&manifest_text) {
        p if p.is_absolute() => p.to_path_buf(),
        p => path.parent().unwrap_or_else(|| Path::new(".")).join(p),
    };

    let mode_text = over.mode.clone().or(file.mode).unwrap_or_else(|| "ours".into());
    let mode = Mode::parse(&mode_text)?;
    let seed = over.seed.or(file.seed).unwrap_or(0);
    let output = over
        .output
        .clone()
        .or_else(|| file.output.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let kernels = match (file.kernels.menu, file.kernels.list) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid("kernels.menu and kernels.list are mutually exclusive".into()))
        }
        (None, Some(list)) if list.is_empty() => {
            return Err(ConfigError::Invalid("kernels.list must not be empty".into()))
        }
        (None, Some(list)) => list,
        (Some(name), None) if name == "standard" => KernelDef::standard_menu(),
        (Some(name), None) => {
            return Err(ConfigError::Invalid(format!("unknown kernel menu {name:?}; only \"standard\" is built in")))
        }
        (None, None) => KernelDef::standard_menu(),
    };
    let normalize = file.kernels.normalize.unwrap_or(true);

    let defaults = TrainConfig::default();
    let admm_defaults = AdmmConfig::default();
    let t = file.train;
    let lambda_big = t.lambda_big.unwrap_or(1e6);
    require_positive("train.lambda_big", lambda_big)?;
    let mut train = TrainConfig {
        c: over.c.or(t.c).unwrap_or(defaults.c),
        lambda: over.lambda.or(t.lambda).unwrap_or(defaults.lambda),
        svm_tol: t.svm_tol.unwrap_or(defaults.svm_tol),
        outer_tol: t.outer_tol.unwrap_or(defaults.outer_tol),
        outer_max_iters: t.outer_max_iters.unwrap_or(defaults.outer_max_iters),
        admm: AdmmConfig {
            rho: over.rho.or(t.rho).unwrap_or(admm_defaults.rho),
            tolerances: StoppingTolerances {
                eps_abs: t.eps_abs.unwrap_or(admm_defaults.tolerances.eps_abs),
                eps_rel: t.eps_rel.unwrap_or(admm_defaults.tolerances.eps_rel),
            },
            max_iters: t.admm_max_iters.unwrap_or(admm_defaults.max_iters),
            adaptive_rho: t.adaptive_rho.unwrap_or(admm_defaults.adaptive_rho),
            projection: t.projection.unwrap_or(admm_defaults.projection),
            legacy_divisor: false,
            track_trace: false,
        },
        theta_init: ThetaInit::Uniform,
    };

    require_positive("train.c", train.c)?;
    require_positive("train.rho", train.admm.rho)?;
    require_positive("train.svm_tol", train.svm_tol)?;
    require_positive("train.outer_tol", train.outer_tol)?;
    require_positive("train.eps_abs", train.admm.tolerances.eps_abs)?;
    require_positive("train.eps_rel", train.admm.tolerances.eps_rel)?;
    if !(train.lambda >= 0.0 && train.lambda.is_finite()) {
        return Err(ConfigError::Invalid(format!("lambda must be nonnegative and finite, got {}", train.lambda)));
    }
    if train.outer_max_iters == 0 || train.admm.max_iters == 0 {
        return Err(ConfigError::Invalid("iteration caps must be at least 1".into()));
    }

    let c_values = file.grid.c_values.unwrap_or_else(default_grid);
    let mut lambda_values = file.grid.lambda_values.unwrap_or_else(default_grid);
    if c_values.is_empty() || lambda_values.is_empty() {
        return Err(ConfigError::Invalid("grid value lists must not be empty".into()));
    }
    for &v in &c_values {
        require_positive("grid.c_values entry", v)?;
    }
    for &v in &lambda_values {
        require_positive("grid.lambda_values entry", v)?;
    }

    // Mode enforcement happens after user values are validated so a pinned
    // lambda is never mistaken for a user choice.
    match mode {
        Mode::Ours => {}
        Mode::Stl => {
            if let Some(x) = over.lambda {
                if x != 0.0 {
                    return Err(ConfigError::Invalid(format!(
                        "mode stl pins lambda = 0; drop --lambda {x} or use --mode ours"
                    )));
                }
            }
            train.lambda = 0.0;
            lambda_values = vec![0.0];
        }
        Mode::Mtl => {
            // In mtl mode --lambda adjusts how large "large" is.
            train.lambda = over.lambda.unwrap_or(lambda_big);
            require_positive("mtl lambda", train.lambda)?;
            lambda_values = vec![train.lambda];
        }
    }

    let split = file.split;
    let train_frac = split.train_frac.unwrap_or(0.5);
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(ConfigError::Invalid(format!("split.train_frac must lie in (0,1), got {train_frac}")));
    }

    Ok(RunConfig {
        manifest,
        mode,
        seed,
        output,
        kernels,
        normalize,
        train,
        c_values,
        lambda_values,
        train_frac,
        balanced: split.balanced.unwrap_or(false),
        scale: split.scale.unwrap_or(false),
        emit_trace: file.emit.trace.unwrap_or(true),
        emit_affinity: file.emit.affinity.unwrap_or(true),
        emit_bound: file.emit.bound.unwrap_or(false),
    })
}

/// Thread cap: explicit flag first, then the MTMKL_THREADS variable.
pub fn thread_cap(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var("MTMKL_THREADS").ok().and_then(|v| v.parse().ok()))
}

/// Size the global worker pool once per process; later calls are no-ops
/// (the pool cannot be resized after first use).
pub fn init_threads(cap: Option<usize>) {
    if let Some(n) = cap {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
