//! Versioned on-disk model format. A saved model carries everything
//! prediction needs without the training data: the kernel menu, per-task
//! weights and bias, and the support vectors with their dual coefficients
//! plus raw self-similarities so kernel normalization reproduces exactly
//! what training used.

use crate::kernel::{Kernel, KernelBank, KernelDef, KernelError, KernelRegistry, EPS_DIAG};
use crate::trainer::TrainedModel;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model file {path} is not valid JSON: {message}")]
    Json { path: PathBuf, message: String },
    #[error("model version {found} is not supported (expected {MODEL_VERSION})")]
    Version { found: u32 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("model is inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskModel {
    pub name: String,
    /// Kernel weights for this task, length = menu size.
    pub theta: Vec<f64>,
    pub bias: f64,
    /// Support vector features, one row per retained training point.
    pub sv_features: Vec<Vec<f64>>,
    /// alpha_i * y_i for each support vector.
    pub sv_coeff: Vec<f64>,
    /// Raw self-similarity k_m(x_i, x_i) per kernel (outer) and support
    /// vector (inner); consumed by normalization at prediction time.
    pub sv_self: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub feature_dim: usize,
    pub normalize: bool,
    pub kernels: Vec<KernelDef>,
    pub c: f64,
    pub lambda: f64,
    pub tasks: Vec<TaskModel>,
}

/// Package a trained model for saving. The bank must be the one training
/// used; support features are copied out of it.
pub fn package_model(
    model: &TrainedModel,
    bank: &KernelBank,
    labels: &[Vec<f64>],
    names: &[String],
    c: f64,
    lambda: f64,
    registry: &KernelRegistry,
) -> Result<ModelFile, ModelError> {
    let t_count = bank.num_tasks();
    if model.alphas.len() != t_count || labels.len() != t_count || names.len() != t_count {
        return Err(ModelError::Inconsistent("task counts disagree".into()));
    }
    let kernels: Vec<Box<dyn Kernel>> =
        bank.defs().iter().map(|def| registry.build(def)).collect::<Result<_, _>>()?;
    let mut tasks = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let features = bank.features(t);
        let d = features.ncols();
        let mut sv_features = Vec::new();
        let mut sv_coeff = Vec::new();
        for &i in &model.support[t] {
            sv_features.push((0..d).map(|j| features[(i, j)]).collect::<Vec<f64>>());
            sv_coeff.push(model.alphas[t][i] * labels[t][i]);
        }
        let sv_self: Vec<Vec<f64>> = kernels
            .iter()
            .map(|k| {
                model.support[t]
                    .iter()
                    .map(|&i| k.eval(features.row(i), features.row(i)))
                    .collect()
            })
            .collect();
        tasks.push(TaskModel {
            name: names[t].clone(),
            theta: (0..bank.num_kernels()).map(|m| model.theta[(t, m)]).collect(),
            bias: model.biases[t],
            sv_features,
            sv_coeff,
            sv_self,
        });
    }
    Ok(ModelFile {
        version: MODEL_VERSION,
        feature_dim: bank.features(0).ncols(),
        normalize: bank.is_normalized(),
        kernels: bank.defs().to_vec(),
        c,
        lambda,
        tasks,
    })
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<(), ModelError> {
    let text = serde_json::to_string_pretty(model)
        .map_err(|e| ModelError::Json { path: path.into(), message: e.to_string() })?;
    fs::write(path, text).map_err(|source| ModelError::Io { path: path.into(), source })
}

pub fn load_model(path: &Path) -> Result<ModelFile, ModelError> {
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.into(), source })?;
    let model: ModelFile =
        serde_json::from_str(&text).map_err(|e| ModelError::Json { path: path.into(), message: e.to_string() })?;
    if model.version != MODEL_VERSION {
        return Err(ModelError::Version { found: model.version });
    }
    for (t, task) in model.tasks.iter().enumerate() {
        if task.theta.len() != model.kernels.len() {
            return Err(ModelError::Inconsistent(format!("task {t}: theta length != kernel count")));
        }
        if task.sv_coeff.len() != task.sv_features.len() {
            return Err(ModelError::Inconsistent(format!("task {t}: coefficient/feature count mismatch")));
        }
        if task.sv_self.len() != model.kernels.len()
            || task.sv_self.iter().any(|row| row.len() != task.sv_features.len())
        {
            return Err(ModelError::Inconsistent(format!("task {t}: self-similarity table misshaped")));
        }
        if task.sv_features.iter().any(|row| row.len() != model.feature_dim) {
            return Err(ModelError::Inconsistent(format!("task {t}: support vector dimension mismatch")));
        }
    }
    Ok(model)
}

/// Decision values for one task of a loaded model on query rows.
pub fn predict_decisions(
    model: &ModelFile,
    task: usize,
    queries: ArrayView2<f64>,
    registry: &KernelRegistry,
) -> Result<Vec<f64>, ModelError> {
    let tm = model
        .tasks
        .get(task)
        .ok_or_else(|| ModelError::Inconsistent(format!("task index {task} out of range")))?;
    if queries.ncols() != model.feature_dim {
        return Err(ModelError::Inconsistent(format!(
            "queries have {} features, model expects {}",
            queries.ncols(),
            model.feature_dim
        )));
    }
    let kernels: Vec<Box<dyn Kernel>> =
        model.kernels.iter().map(|def| registry.build(def)).collect::<Result<_, _>>()?;
    let n_sv = tm.sv_features.len();
    let sv_views: Vec<ndarray::Array1<f64>> =
        tm.sv_features.iter().map(|row| ndarray::Array1::from_vec(row.clone())).collect();
    let mut out = Vec::with_capacity(queries.nrows());
    for qi in 0..queries.nrows() {
        let qrow = queries.row(qi);
        let mut f = tm.bias;
        for (m, kernel) in kernels.iter().enumerate() {
            let w = tm.theta[m];
            if w == 0.0 {
                continue;
            }
            let q_self = if model.normalize {
                let v = kernel.eval(qrow, qrow);
                if v <= EPS_DIAG {
                    return Err(ModelError::Inconsistent(format!(
                        "query {qi} has degenerate self-similarity {v} under kernel {m}"
                    )));
                }
                v
            } else {
                1.0
            };
            for i in 0..n_sv {
                let raw = kernel.eval(sv_views[i].view(), qrow);
                let k = if model.normalize { raw / (q_self * tm.sv_self[m][i]).sqrt() } else { raw };
                f += w * tm.sv_coeff[i] * k;
            }
        }
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TaskDataset;
    use crate::kernel::build_bank;
    use crate::svm::decision_values;
    use crate::trainer::{train, TrainConfig};
    use ndarray::Array2;
    use rand::Rng as _;
    use rand::SeedableRng as _;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn toy_tasks() -> Vec<TaskDataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (0..2)
            .map(|t| {
                let n = 16;
                let mut x = Array2::zeros((n, 2));
                let mut y = Vec::new();
                for i in 0..n {
                    let label = if i % 2 == 0 { 1.0 } else { -1.0 };
                    x[(i, 0)] = label + 0.4 * (rng.gen::<f64>() - 0.5);
                    x[(i, 1)] = rng.gen::<f64>();
                    y.push(label);
                }
                TaskDataset::new(format!("t{t}"), x, y).unwrap()
            })
            .collect()
    }

    fn fit() -> (Vec<TaskDataset>, crate::kernel::KernelBank, TrainedModel) {
        let tasks = toy_tasks();
        let features: Vec<_> = tasks.iter().map(|t| t.train_data().0).collect();
        let menu = vec![KernelDef::gaussian(1.0), KernelDef::linear()];
        let bank = build_bank(&features, &menu, &KernelRegistry::standard(), true).unwrap();
        let cfg = TrainConfig { c: 1.0, lambda: 0.5, ..TrainConfig::default() };
        let model = train(&tasks, &bank, &cfg).unwrap();
        (tasks, bank, model)
    }

    #[test]
    fn packaged_model_reproduces_bank_decisions() {
        let (tasks, bank, trained) = fit();
        let labels: Vec<Vec<f64>> = tasks.iter().map(|t| t.train_data().1).collect();
        let names: Vec<String> = tasks.iter().map(|t| t.name.clone()).collect();
        let registry = KernelRegistry::standard();
        let packaged = package_model(&trained, &bank, &labels, &names, 1.0, 0.5, &registry).unwrap();
        for t in 0..2 {
            let queries = tasks[t].train_data().0;
            let via_model = predict_decisions(&packaged, t, queries.view(), &registry).unwrap();
            let theta_row: Vec<f64> = packaged.tasks[t].theta.clone();
            let cross = bank.combined_cross(t, &theta_row, queries.view()).unwrap();
            let via_bank =
                decision_values(cross.view(), &trained.alphas[t], &labels[t], trained.biases[t]);
            for (a, b) in via_model.iter().zip(&via_bank) {
                assert!((a - b).abs() < 1e-10, "model {a} vs bank {b}");
            }
        }
    }

    #[test]
    fn save_load_round_trip_preserves_predictions() {
        let (tasks, bank, trained) = fit();
        let labels: Vec<Vec<f64>> = tasks.iter().map(|t| t.train_data().1).collect();
        let names: Vec<String> = tasks.iter().map(|t| t.name.clone()).collect();
        let registry = KernelRegistry::standard();
        let packaged = package_model(&trained, &bank, &labels, &names, 1.0, 0.5, &registry).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &packaged).unwrap();
        let loaded = load_model(&path).unwrap();
        let queries = tasks[0].test_data().0;
        let queries = if queries.nrows() == 0 { tasks[0].train_data().0 } else { queries };
        let a = predict_decisions(&packaged, 0, queries.view(), &registry).unwrap();
        let b = predict_decisions(&loaded, 0, queries.view(), &registry).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let (tasks, bank, trained) = fit();
        let labels: Vec<Vec<f64>> = tasks.iter().map(|t| t.train_data().1).collect();
        let names: Vec<String> = tasks.iter().map(|t| t.name.clone()).collect();
        let registry = KernelRegistry::standard();
        let mut packaged = package_model(&trained, &bank, &labels, &names, 1.0, 0.5, &registry).unwrap();
        packaged.version = 99;
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &packaged).unwrap();
        assert!(matches!(load_model(&path), Err(ModelError::Version { found: 99 })));
    }

    #[test]
    fn truncated_model_is_rejected_with_a_message() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, "{\"version\": 1").unwrap();
        assert!(matches!(load_model(&path), Err(ModelError::Json { .. })));
    }
}
