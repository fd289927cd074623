//! Kernel functions, a by-name kernel registry, and precomputed Gram banks.
//!
//! A `KernelBank` holds one normalized Gram matrix per (task, kernel) pair,
//! computed once up front; training only ever reads them. Banks also keep the
//! raw self-similarities so query-time cross Grams can be normalized
//! consistently with the training Grams.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Guard for normalization: raw k(x,x) at or below this is degenerate.
pub const EPS_DIAG: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("feature dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("unknown kernel family {family:?}; known: {known:?}")]
    UnknownFamily { family: String, known: Vec<&'static str> },
    #[error("invalid parameter for kernel family {family:?}: {message}")]
    InvalidParam { family: String, message: String },
    #[error("degenerate sample: task {task}, sample {sample} has raw self-similarity {value:.3e} <= {eps:.0e} under kernel {kernel}")]
    DegenerateSample { task: usize, sample: usize, kernel: usize, value: f64, eps: f64 },
    #[error("negative kernel weight at index {index}: {value}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("kernel menu is empty")]
    EmptyMenu,
}

/// A pointwise kernel function.
pub trait Kernel: Send + Sync {
    fn family(&self) -> &'static str;
    /// Evaluate k(x, y). Callers guarantee equal dimensions.
    fn eval(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64;
}

/// Dimension-checked kernel evaluation.
pub fn eval_kernel(kernel: &dyn Kernel, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64, KernelError> {
    if x.len() != y.len() {
        return Err(KernelError::DimensionMismatch { left: x.len(), right: y.len() });
    }
    Ok(kernel.eval(x, y))
}

pub struct Linear;

impl Kernel for Linear {
    fn family(&self) -> &'static str {
        "linear"
    }
    fn eval(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        x.dot(&y)
    }
}

pub struct Polynomial {
    pub degree: u32,
    pub coef0: f64,
}

impl Kernel for Polynomial {
    fn family(&self) -> &'static str {
        "polynomial"
    }
    fn eval(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        (x.dot(&y) + self.coef0).powi(self.degree as i32)
    }
}

/// Gaussian kernel, spread convention: exp(-||x-y||^2 / (2 sigma^2)).
pub struct Gaussian {
    pub spread: f64,
}

impl Kernel for Gaussian {
    fn family(&self) -> &'static str {
        "gaussian"
    }
    fn eval(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        let d2: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2 / (2.0 * self.spread * self.spread)).exp()
    }
}

/// Gaussian kernel, inverse-bandwidth convention: exp(-gamma ||x-y||^2).
pub struct GaussianGamma {
    pub gamma: f64,
}

impl Kernel for GaussianGamma {
    fn family(&self) -> &'static str {
        "gaussian"
    }
    fn eval(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        let d2: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        (-self.gamma * d2).exp()
    }
}

/// Declarative kernel description, as written in run configuration files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelDef {
    pub family: String,
    /// Gaussian bandwidth sigma (spread convention).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    /// Gaussian inverse bandwidth; mutually exclusive with `spread`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coef0: Option<f64>,
}

impl KernelDef {
    pub fn linear() -> Self {
        KernelDef { family: "linear".into(), spread: None, gamma: None, degree: None, coef0: None }
    }

    pub fn polynomial(degree: u32, coef0: f64) -> Self {
        KernelDef { family: "polynomial".into(), spread: None, gamma: None, degree: Some(degree), coef0: Some(coef0) }
    }

    pub fn gaussian(spread: f64) -> Self {
        KernelDef { family: "gaussian".into(), spread: Some(spread), gamma: None, degree: None, coef0: None }
    }

    pub fn gaussian_gamma(gamma: f64) -> Self {
        KernelDef { family: "gaussian".into(), spread: None, gamma: Some(gamma), degree: None, coef0: None }
    }

    /// The ten-kernel default menu: linear, degree-2 polynomial, and
    /// Gaussians with spreads 2^0 .. 2^7.
    pub fn standard_menu() -> Vec<KernelDef> {
        let mut menu = vec![KernelDef::linear(), KernelDef::polynomial(2, 1.0)];
        for p in 0..8 {
            menu.push(KernelDef::gaussian(f64::powi(2.0, p)));
        }
        menu
    }
}

type KernelCtor = fn(&KernelDef) -> Result<Box<dyn Kernel>, KernelError>;

fn build_linear(_def: &KernelDef) -> Result<Box<dyn Kernel>, KernelError> {
    Ok(Box::new(Linear))
}

fn build_polynomial(def: &KernelDef) -> Result<Box<dyn Kernel>, KernelError> {
    let degree = def.degree.unwrap_or(2);
    if degree < 1 {
        return Err(KernelError::InvalidParam {
            family: def.family.clone(),
            message: format!("degree must be >= 1, got {degree}"),
        });
    }
    Ok(Box::new(Polynomial { degree, coef0: def.coef0.unwrap_or(1.0) }))
}

fn build_gaussian(def: &KernelDef) -> Result<Box<dyn Kernel>, KernelError> {
    match (def.spread, def.gamma) {
        (Some(_), Some(_)) => Err(KernelError::InvalidParam {
            family: def.family.clone(),
            message: "spread and gamma are mutually exclusive".into(),
        }),
        (Some(s), None) if s > 0.0 => Ok(Box::new(Gaussian { spread: s })),
        (None, Some(g)) if g > 0.0 => Ok(Box::new(GaussianGamma { gamma: g })),
        (None, None) => Err(KernelError::InvalidParam {
            family: def.family.clone(),
            message: "gaussian requires spread or gamma".into(),
        }),
        _ => Err(KernelError::InvalidParam {
            family: def.family.clone(),
            message: "bandwidth must be positive".into(),
        }),
    }
}

/// Registry of kernel families, selected by name at run time.
pub struct KernelRegistry {
    entries: Vec<(&'static str, KernelCtor)>,
}

impl KernelRegistry {
    /// Registry with the built-in families: linear, polynomial, gaussian.
    pub fn standard() -> Self {
        KernelRegistry {
            entries: vec![
                ("linear", build_linear as KernelCtor),
                ("polynomial", build_polynomial as KernelCtor),
                ("gaussian", build_gaussian as KernelCtor),
            ],
        }
    }

    /// Register an additional family; replaces an existing entry of the same name.
    pub fn register(&mut self, name: &'static str, ctor: KernelCtor) {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = ctor;
        } else {
            self.entries.push((name, ctor));
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, def: &KernelDef) -> Result<Box<dyn Kernel>, KernelError> {
        match self.entries.iter().find(|(n, _)| *n == def.family) {
            Some((_, ctor)) => ctor(def),
            None => Err(KernelError::UnknownFamily { family: def.family.clone(), known: self.names() }),
        }
    }
}

impl Default for KernelRegistry {
    fn default() -> Self {
        KernelRegistry::standard()
    }
}

/// Precomputed per-task, per-kernel Gram matrices plus everything needed to
/// evaluate the same (normalized) kernels on query points later.
pub struct KernelBank {
    defs: Vec<KernelDef>,
    kernels: Vec<Box<dyn Kernel>>,
    /// grams[t][m]: n_t x n_t, normalized when `normalized` is set.
    grams: Vec<Vec<Array2<f64>>>,
    /// raw_diag[t][m][i] = raw k_m(x_i, x_i) for task t's training points.
    raw_diag: Vec<Vec<Vec<f64>>>,
    features: Vec<Array2<f64>>,
    normalized: bool,
}

impl std::fmt::Debug for KernelBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelBank")
            .field("tasks", &self.features.len())
            .field("kernels", &self.defs)
            .field("normalized", &self.normalized)
            .finish()
    }
}

/// Build the bank over every (task, kernel) pair; pairs are computed in parallel.
pub fn build_bank(
    tasks: &[Array2<f64>],
    defs: &[KernelDef],
    registry: &KernelRegistry,
    normalize: bool,
) -> Result<KernelBank, KernelError> {
    if defs.is_empty() {
        return Err(KernelError::EmptyMenu);
    }
    let kernels: Vec<Box<dyn Kernel>> =
        defs.iter().map(|d| registry.build(d)).collect::<Result<_, _>>()?;

    type BuiltGram = ((usize, usize), Result<(Array2<f64>, Vec<f64>), KernelError>);
    let jobs: Vec<(usize, usize)> =
        (0..tasks.len()).flat_map(|t| (0..kernels.len()).map(move |m| (t, m))).collect();
    let built: Vec<BuiltGram> = jobs
        .par_iter()
        .map(|&(t, m)| ((t, m), gram_one(&*kernels[m], tasks[t].view(), t, m, normalize)))
        .collect();

    let mut grams: Vec<Vec<Array2<f64>>> = (0..tasks.len())
        .map(|t| {
            (0..kernels.len())
                .map(|_| Array2::zeros((tasks[t].nrows(), tasks[t].nrows())))
                .collect()
        })
        .collect();
    let mut raw_diag: Vec<Vec<Vec<f64>>> =
        (0..tasks.len()).map(|_| vec![Vec::new(); kernels.len()]).collect();
    for ((t, m), result) in built {
        let (g, d) = result?;
        grams[t][m] = g;
        raw_diag[t][m] = d;
    }

    Ok(KernelBank {
        defs: defs.to_vec(),
        kernels,
        grams,
        raw_diag,
        features: tasks.to_vec(),
        normalized: normalize,
    })
}

fn gram_one(
    kernel: &dyn Kernel,
    x: ArrayView2<f64>,
    task: usize,
    kernel_idx: usize,
    normalize: bool,
) -> Result<(Array2<f64>, Vec<f64>), KernelError> {
    let n = x.nrows();
    let mut raw = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(x.row(i), x.row(j));
            raw[(i, j)] = v;
            raw[(j, i)] = v;
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| raw[(i, i)]).collect();
    if normalize {
        for (i, &d) in diag.iter().enumerate() {
            if d <= EPS_DIAG {
                return Err(KernelError::DegenerateSample {
                    task,
                    sample: i,
                    kernel: kernel_idx,
                    value: d,
                    eps: EPS_DIAG,
                });
            }
        }
        for i in 0..n {
            for j in 0..n {
                raw[(i, j)] /= (diag[i] * diag[j]).sqrt();
            }
        }
        for i in 0..n {
            raw[(i, i)] = 1.0;
        }
    }
    Ok((raw, diag))
}

impl KernelBank {
    pub fn num_tasks(&self) -> usize {
        self.features.len()
    }

    pub fn num_kernels(&self) -> usize {
        self.kernels.len()
    }

    pub fn defs(&self) -> &[KernelDef] {
        &self.defs
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Training features for task `t` as stored in the bank.
    pub fn features(&self, t: usize) -> &Array2<f64> {
        &self.features[t]
    }

    pub fn gram(&self, t: usize, m: usize) -> &Array2<f64> {
        &self.grams[t][m]
    }

    /// Weighted Gram sum_m theta[m] * K_t^m. Weights must be nonnegative.
    pub fn combine(&self, t: usize, theta_row: &[f64]) -> Result<Array2<f64>, KernelError> {
        assert_eq!(theta_row.len(), self.num_kernels(), "theta row length must equal kernel count");
        for (m, &w) in theta_row.iter().enumerate() {
            if w < 0.0 {
                return Err(KernelError::NegativeWeight { index: m, value: w });
            }
        }
        let n = self.features[t].nrows();
        let mut out = Array2::zeros((n, n));
        for (m, &w) in theta_row.iter().enumerate() {
            if w != 0.0 {
                out.scaled_add(w, &self.grams[t][m]);
            }
        }
        Ok(out)
    }

    /// Cross Gram between query rows and task t's training rows for kernel m,
    /// normalized consistently with the bank: entry (a, i) is
    /// k(query_a, x_i) / sqrt(k(query_a, query_a) k(x_i, x_i)).
    pub fn cross_gram(&self, t: usize, m: usize, queries: ArrayView2<f64>) -> Result<Array2<f64>, KernelError> {
        let x = &self.features[t];
        if queries.ncols() != x.ncols() {
            return Err(KernelError::DimensionMismatch { left: queries.ncols(), right: x.ncols() });
        }
        let kernel = &*self.kernels[m];
        let mut out = Array2::zeros((queries.nrows(), x.nrows()));
        for a in 0..queries.nrows() {
            let qa = queries.row(a);
            let q_self = if self.normalized { kernel.eval(qa, qa) } else { 1.0 };
            if self.normalized && q_self <= EPS_DIAG {
                return Err(KernelError::DegenerateSample {
                    task: t,
                    sample: a,
                    kernel: m,
                    value: q_self,
                    eps: EPS_DIAG,
                });
            }
            for i in 0..x.nrows() {
                let v = kernel.eval(qa, x.row(i));
                out[(a, i)] = if self.normalized {
                    v / (q_self * self.raw_diag[t][m][i]).sqrt()
                } else {
                    v
                };
            }
        }
        Ok(out)
    }

    /// Theta-weighted cross Gram for prediction.
    pub fn combined_cross(
        &self,
        t: usize,
        theta_row: &[f64],
        queries: ArrayView2<f64>,
    ) -> Result<Array2<f64>, KernelError> {
        assert_eq!(theta_row.len(), self.num_kernels(), "theta row length must equal kernel count");
        for (m, &w) in theta_row.iter().enumerate() {
            if w < 0.0 {
                return Err(KernelError::NegativeWeight { index: m, value: w });
            }
        }
        let mut out = Array2::zeros((queries.nrows(), self.features[t].nrows()));
        for (m, &w) in theta_row.iter().enumerate() {
            if w != 0.0 {
                out.scaled_add(w, &self.cross_gram(t, m, queries)?);
            }
        }
        Ok(out)
    }
}
