//! The five batch commands. Each one ends by validating and writing
//! `report.json` into the output directory; a command exits successfully
//! exactly when that file was written.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mtmkl::bound::{bound_value, BoundError};
use mtmkl::data::{load_tasks, min_max_scale, stratified_split, DataError, TaskDataset};
use mtmkl::kernel::{build_bank, KernelBank, KernelDef, KernelError, KernelRegistry};
use mtmkl::model::{load_model, package_model, predict_decisions, save_model, ModelError};
use mtmkl::svm::decision_values;
use mtmkl::trainer::{accuracy, predict_labels, train, OuterRecord, TrainError, TrainedModel};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::RunConfig;
use crate::report::{float_array, obj, validate_report, Json};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("kernel: {0}")]
    Kernel(#[from] KernelError),
    #[error("training: {0}")]
    Train(#[from] TrainError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("bound: {0}")]
    Bound(#[from] BoundError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("every grid point failed:\n{0}")]
    GridExhausted(String),
    #[error("internal: report failed its own schema check: {0}")]
    Report(String),
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Load the manifest tasks, split each one with a per-task seed, and
/// optionally rescale features by the train-split column ranges.
fn prepare_tasks(cfg: &RunConfig) -> Result<Vec<TaskDataset>, CliError> {
    let tasks = load_tasks(&cfg.manifest)?;
    let mut out = Vec::with_capacity(tasks.len());
    for (t, ds) in tasks.iter().enumerate() {
        let split = stratified_split(ds, cfg.train_frac, cfg.seed.wrapping_add(t as u64), cfg.balanced)?;
        out.push(if cfg.scale { min_max_scale(&split) } else { split });
    }
    Ok(out)
}

fn build_training_bank(
    tasks: &[TaskDataset],
    kernels: &[KernelDef],
    normalize: bool,
    registry: &KernelRegistry,
) -> Result<(KernelBank, Vec<Vec<f64>>, Vec<String>), CliError> {
    let mut features = Vec::with_capacity(tasks.len());
    let mut labels = Vec::with_capacity(tasks.len());
    let mut names = Vec::with_capacity(tasks.len());
    for ds in tasks {
        let (x, y) = ds.train_data();
        features.push(x);
        labels.push(y);
        names.push(ds.name.clone());
    }
    let bank = build_bank(&features, kernels, registry, normalize)?;
    Ok((bank, labels, names))
}

#[derive(Clone, Copy)]
enum EvalSplit {
    Validation,
    Test,
}

impl EvalSplit {
    fn name(self) -> &'static str {
        match self {
            EvalSplit::Validation => "validation",
            EvalSplit::Test => "test",
        }
    }
}

/// Accuracy of the trained model on one held-out split of every task.
fn split_accuracies(
    bank: &KernelBank,
    tasks: &[TaskDataset],
    train_labels: &[Vec<f64>],
    model: &TrainedModel,
    which: EvalSplit,
) -> Result<Vec<f64>, CliError> {
    let mut accs = Vec::with_capacity(tasks.len());
    for (t, ds) in tasks.iter().enumerate() {
        let (x, y) = match which {
            EvalSplit::Validation => ds.validation_data(),
            EvalSplit::Test => ds.test_data(),
        };
        if y.is_empty() {
            return Err(CliError::Data(DataError::Split(format!(
                "task {:?} has an empty {} split; lower split.train_frac",
                ds.name,
                which.name()
            ))));
        }
        let row = model.theta.row(t).to_vec();
        let cross = bank.combined_cross(t, &row, x.view())?;
        let values = decision_values(cross.view(), &model.alphas[t], &train_labels[t], model.biases[t]);
        accs.push(accuracy(&predict_labels(&values), &y));
    }
    Ok(accs)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn accuracy_json(names: &[String], accs: &[f64]) -> Json {
    let per_task = names
        .iter()
        .zip(accs)
        .map(|(name, &value)| {
            obj(vec![("task", Json::Str(name.clone())), ("value", Json::Float(value))])
        })
        .collect();
    obj(vec![("per_task", Json::Array(per_task)), ("mean", Json::Float(mean(accs)))])
}

fn kernel_echo(def: &KernelDef) -> Json {
    let mut pairs = vec![("family", Json::Str(def.family.clone()))];
    if let Some(s) = def.spread {
        pairs.push(("spread", Json::Float(s)));
    }
    if let Some(g) = def.gamma {
        pairs.push(("gamma", Json::Float(g)));
    }
    if let Some(d) = def.degree {
        pairs.push(("degree", Json::UInt(d as u64)));
    }
    if let Some(c) = def.coef0 {
        pairs.push(("coef0", Json::Float(c)));
    }
    obj(pairs)
}

fn config_echo(cfg: &RunConfig) -> Json {
    obj(vec![
        ("manifest", Json::Str(cfg.manifest.display().to_string())),
        ("mode", Json::Str(cfg.mode.name().into())),
        ("seed", Json::UInt(cfg.seed)),
        ("output", Json::Str(cfg.output.display().to_string())),
        ("kernels", Json::Array(cfg.kernels.iter().map(kernel_echo).collect())),
        ("normalize", Json::Bool(cfg.normalize)),
        ("c", Json::Float(cfg.train.c)),
        ("lambda", Json::Float(cfg.train.lambda)),
        ("rho", Json::Float(cfg.train.admm.rho)),
        ("svm_tol", Json::Float(cfg.train.svm_tol)),
        ("outer_tol", Json::Float(cfg.train.outer_tol)),
        ("outer_max_iters", Json::UInt(cfg.train.outer_max_iters as u64)),
        ("eps_abs", Json::Float(cfg.train.admm.tolerances.eps_abs)),
        ("eps_rel", Json::Float(cfg.train.admm.tolerances.eps_rel)),
        ("admm_max_iters", Json::UInt(cfg.train.admm.max_iters as u64)),
        ("projection", Json::Str(cfg.train.admm.projection.clone())),
        ("adaptive_rho", Json::Bool(cfg.train.admm.adaptive_rho)),
        ("train_frac", Json::Float(cfg.train_frac)),
        ("balanced", Json::Bool(cfg.balanced)),
        ("scale", Json::Bool(cfg.scale)),
        ("c_values", float_array(&cfg.c_values)),
        ("lambda_values", float_array(&cfg.lambda_values)),
    ])
}

fn write_report(path: &Path, report: &Json) -> Result<(), CliError> {
    let text = report.render();
    validate_report(&text).map_err(CliError::Report)?;
    write_file(path, &text)
}

fn write_trace_csv(path: &Path, trace: &[OuterRecord]) -> Result<(), CliError> {
    let mut out = String::from(
        "iteration,objective,quad,hinge,fusion,step_scale,admm_iterations,\
         pair_primal,global_primal,aux_primal,pair_dual,global_dual,aux_dual,\
         pair_primal_limit,global_primal_limit,aux_primal_limit,\
         pair_dual_limit,global_dual_limit,aux_dual_limit\n",
    );
    for r in trace {
        let res = r.admm_residuals;
        let lim = r.admm_limits;
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},\
             {:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},\
             {:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.iteration,
            r.objective,
            r.quad_term,
            r.hinge_term,
            r.fusion_term,
            r.step_scale,
            r.admm_iterations,
            res.pair_primal,
            res.global_primal,
            res.aux_primal,
            res.pair_dual,
            res.global_dual,
            res.aux_dual,
            lim.pair_primal,
            lim.global_primal,
            lim.aux_primal,
            lim.pair_dual,
            lim.global_dual,
            lim.aux_dual,
        ));
    }
    write_file(path, &out)
}

/// Pairwise distances D[t][s] = ||theta_t - theta_s||_2.
pub fn pairwise_distances(theta: ArrayView2<f64>) -> Vec<Vec<f64>> {
    let t_count = theta.nrows();
    let mut d = vec![vec![0.0; t_count]; t_count];
    for t in 0..t_count {
        for s in (t + 1)..t_count {
            let dist = theta
                .row(t)
                .iter()
                .zip(theta.row(s).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[t][s] = dist;
            d[s][t] = dist;
        }
    }
    d
}

/// Group tasks whose weight rows agree within `epsilon`, transitively:
/// t and s land in one group when some chain of sub-epsilon hops joins them.
pub fn affinity_groups(distances: &[Vec<f64>], names: &[String], epsilon: f64) -> Vec<Vec<String>> {
    let n = names.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for t in 0..n {
        for s in (t + 1)..n {
            if distances[t][s] < epsilon {
                let (a, b) = (find(&mut parent, t), find(&mut parent, s));
                // Root at the smaller index so group order is stable.
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(names[i].clone());
    }
    groups
}

fn write_affinity_csv(path: &Path, names: &[String], distances: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = String::from("task");
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (t, name) in names.iter().enumerate() {
        out.push_str(name);
        for s in 0..names.len() {
            out.push_str(&format!(",{:.16e}", distances[t][s]));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

fn groups_json(groups: &[Vec<String>]) -> Json {
    Json::Array(
        groups
            .iter()
            .map(|g| Json::Array(g.iter().map(|n| Json::Str(n.clone())).collect()))
            .collect(),
    )
}

/// Worst-case complexity inputs read off the bank: unit slope, the largest
/// kernel self-similarity, and the smallest per-task train count.
fn bank_bound(bank: &KernelBank, labels: &[Vec<f64>]) -> Result<f64, CliError> {
    let mut radius = 0.0f64;
    for t in 0..bank.num_tasks() {
        for m in 0..bank.num_kernels() {
            for &d in bank.gram(t, m).diag() {
                radius = radius.max(d);
            }
        }
    }
    let samples = labels.iter().map(|y| y.len()).min().unwrap_or(0);
    Ok(bound_value(1.0, radius, bank.num_kernels(), samples, bank.num_tasks())?)
}

struct Artifacts {
    model: String,
    trace: Option<String>,
    affinity: Option<String>,
    groups: Option<Vec<Vec<String>>>,
    bound: Option<f64>,
}

fn write_artifacts(
    cfg: &RunConfig,
    bank: &KernelBank,
    labels: &[Vec<f64>],
    names: &[String],
    trained: &TrainedModel,
    registry: &KernelRegistry,
) -> Result<Artifacts, CliError> {
    let packaged = package_model(trained, bank, labels, names, cfg.train.c, cfg.train.lambda, registry)?;
    save_model(&cfg.output.join("model.json"), &packaged)?;

    let trace = if cfg.emit_trace {
        write_trace_csv(&cfg.output.join("trace.csv"), &trained.trace)?;
        Some("trace.csv".to_string())
    } else {
        None
    };

    let (affinity, groups) = if cfg.emit_affinity {
        let distances = pairwise_distances(trained.theta.view());
        write_affinity_csv(&cfg.output.join("affinity.csv"), names, &distances)?;
        (Some("affinity.csv".to_string()), Some(affinity_groups(&distances, names, 1e-3)))
    } else {
        (None, None)
    };

    let bound = if cfg.emit_bound { Some(bank_bound(bank, labels)?) } else { None };

    Ok(Artifacts { model: "model.json".to_string(), trace, affinity, groups, bound })
}

fn opt_str(v: &Option<String>) -> Json {
    match v {
        Some(s) => Json::Str(s.clone()),
        None => Json::Null,
    }
}

#[allow(clippy::too_many_arguments)]
fn run_report(
    command: &str,
    cfg: &RunConfig,
    names: &[String],
    accs: &[f64],
    trained: &TrainedModel,
    artifacts: &Artifacts,
    validation: Json,
    timing: Json,
) -> Json {
    obj(vec![
        ("command", Json::Str(command.into())),
        ("mode", Json::Str(cfg.mode.name().into())),
        ("seed", Json::UInt(cfg.seed)),
        (
            "selected",
            obj(vec![("c", Json::Float(cfg.train.c)), ("lambda", Json::Float(cfg.train.lambda))]),
        ),
        ("accuracy", accuracy_json(names, accs)),
        ("objective", Json::Float(trained.objective)),
        ("converged", Json::Bool(trained.converged)),
        ("outer_iterations", Json::UInt(trained.outer_iterations as u64)),
        ("admm_iterations_total", Json::UInt(trained.admm_iterations_total as u64)),
        ("groups", artifacts.groups.as_deref().map(groups_json).unwrap_or(Json::Null)),
        ("bound", artifacts.bound.map(Json::Float).unwrap_or(Json::Null)),
        ("validation", validation),
        (
            "paths",
            obj(vec![
                ("model", Json::Str(artifacts.model.clone())),
                ("trace", opt_str(&artifacts.trace)),
                ("affinity", opt_str(&artifacts.affinity)),
                ("predictions", Json::Null),
            ]),
        ),
        ("config", config_echo(cfg)),
        ("timing", timing),
    ])
}

/// Train once with the configured (C, lambda), evaluate the test split, and
/// write report, model, and the emitted CSVs.
pub fn cmd_train(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    fs::create_dir_all(&cfg.output).map_err(|source| CliError::Io { path: cfg.output.clone(), source })?;
    let registry = KernelRegistry::standard();
    let tasks = prepare_tasks(cfg)?;
    let (bank, labels, names) = build_training_bank(&tasks, &cfg.kernels, cfg.normalize, &registry)?;

    let trained = train(&tasks, &bank, &cfg.train)?;
    if !trained.converged {
        eprintln!("warning: outer loop hit its iteration cap before the objective stabilized");
    }
    let accs = split_accuracies(&bank, &tasks, &labels, &trained, EvalSplit::Test)?;
    let artifacts = write_artifacts(cfg, &bank, &labels, &names, &trained, &registry)?;

    let timing = obj(vec![
        ("train_seconds", Json::Float(trained.wall_seconds)),
        ("total_seconds", Json::Float(started.elapsed().as_secs_f64())),
    ]);
    let report = run_report("train", cfg, &names, &accs, &trained, &artifacts, Json::Null, timing);
    let path = cfg.output.join("report.json");
    write_report(&path, &report)?;
    Ok(path)
}

/// One grid cell's outcome: mean validation accuracy or the failure text.
struct Cell {
    c: f64,
    lambda: f64,
    result: Result<f64, String>,
}

/// Search the (C, lambda) grid by mean validation accuracy, retrain the
/// winner, and report its test accuracy. Ties prefer the smaller lambda,
/// then the smaller C, so the selection does not depend on grid order.
pub fn cmd_grid(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    fs::create_dir_all(&cfg.output).map_err(|source| CliError::Io { path: cfg.output.clone(), source })?;
    let registry = KernelRegistry::standard();
    let tasks = prepare_tasks(cfg)?;
    let (bank, labels, names) = build_training_bank(&tasks, &cfg.kernels, cfg.normalize, &registry)?;

    let mut points = Vec::with_capacity(cfg.c_values.len() * cfg.lambda_values.len());
    for &c in &cfg.c_values {
        for &lambda in &cfg.lambda_values {
            points.push((c, lambda));
        }
    }
    let cells: Vec<Cell> = points
        .par_iter()
        .map(|&(c, lambda)| {
            let mut tc = cfg.train.clone();
            tc.c = c;
            tc.lambda = lambda;
            let result = train(&tasks, &bank, &tc)
                .map_err(|e| e.to_string())
                .and_then(|model| {
                    split_accuracies(&bank, &tasks, &labels, &model, EvalSplit::Validation)
                        .map(|accs| mean(&accs))
                        .map_err(|e| e.to_string())
                });
            Cell { c, lambda, result }
        })
        .collect();
    let search_seconds = started.elapsed().as_secs_f64();

    let mut winner: Option<(f64, f64, f64)> = None;
    for cell in &cells {
        if let Ok(acc) = cell.result {
            let better = match winner {
                None => true,
                Some((bc, bl, ba)) => {
                    acc > ba
                        || (acc == ba && (cell.lambda < bl || (cell.lambda == bl && cell.c < bc)))
                }
            };
            if better {
                winner = Some((cell.c, cell.lambda, acc));
            }
        }
    }
    let (win_c, win_lambda, win_val) = winner.ok_or_else(|| {
        let causes: Vec<String> = cells
            .iter()
            .map(|cell| {
                format!(
                    "  C={:e}, lambda={:e}: {}",
                    cell.c,
                    cell.lambda,
                    cell.result.as_ref().err().map(String::as_str).unwrap_or("")
                )
            })
            .collect();
        CliError::GridExhausted(causes.join("\n"))
    })?;

    let mut win_cfg = cfg.clone();
    win_cfg.train.c = win_c;
    win_cfg.train.lambda = win_lambda;
    let trained = train(&tasks, &bank, &win_cfg.train)?;
    if !trained.converged {
        eprintln!("warning: outer loop hit its iteration cap before the objective stabilized");
    }
    let accs = split_accuracies(&bank, &tasks, &labels, &trained, EvalSplit::Test)?;
    let artifacts = write_artifacts(&win_cfg, &bank, &labels, &names, &trained, &registry)?;

    // Cells are reported in (lambda, C) order whatever order they ran in.
    let mut ordered: Vec<&Cell> = cells.iter().collect();
    ordered.sort_by(|a, b| {
        (a.lambda, a.c).partial_cmp(&(b.lambda, b.c)).expect("grid values are finite")
    });
    let mut cell_rows = Vec::new();
    let mut failed_rows = Vec::new();
    for cell in ordered {
        match &cell.result {
            Ok(acc) => cell_rows.push(obj(vec![
                ("c", Json::Float(cell.c)),
                ("lambda", Json::Float(cell.lambda)),
                ("mean_validation_accuracy", Json::Float(*acc)),
            ])),
            Err(message) => failed_rows.push(obj(vec![
                ("c", Json::Float(cell.c)),
                ("lambda", Json::Float(cell.lambda)),
                ("error", Json::Str(message.clone())),
            ])),
        }
    }
    let validation = obj(vec![
        ("winner_mean_accuracy", Json::Float(win_val)),
        ("cells", Json::Array(cell_rows)),
        ("failed", Json::Array(failed_rows)),
    ]);

    let timing = obj(vec![
        ("search_seconds", Json::Float(search_seconds)),
        ("train_seconds", Json::Float(trained.wall_seconds)),
        ("total_seconds", Json::Float(started.elapsed().as_secs_f64())),
    ]);
    let report = run_report("grid", &win_cfg, &names, &accs, &trained, &artifacts, validation, timing);
    let path = cfg.output.join("report.json");
    write_report(&path, &report)?;
    Ok(path)
}

/// Evaluate a saved model on the test split of the configured manifest and
/// write per-row predictions plus the usual report.
pub fn cmd_predict(cfg: &RunConfig, model_path: &Path) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    fs::create_dir_all(&cfg.output).map_err(|source| CliError::Io { path: cfg.output.clone(), source })?;
    let registry = KernelRegistry::standard();
    let model = load_model(model_path)?;
    let tasks = prepare_tasks(cfg)?;
    if tasks.len() != model.tasks.len() {
        return Err(CliError::Model(ModelError::Inconsistent(format!(
            "model holds {} tasks but the manifest yields {}",
            model.tasks.len(),
            tasks.len()
        ))));
    }
    for (ds, tm) in tasks.iter().zip(&model.tasks) {
        if ds.name != tm.name {
            return Err(CliError::Model(ModelError::Inconsistent(format!(
                "task name mismatch: manifest {:?} vs model {:?}",
                ds.name, tm.name
            ))));
        }
    }

    let mut rows = String::from("task,row,label,decision,predicted\n");
    let mut accs = Vec::with_capacity(tasks.len());
    let mut names = Vec::with_capacity(tasks.len());
    for (t, ds) in tasks.iter().enumerate() {
        let (x, y) = ds.test_data();
        if y.is_empty() {
            return Err(CliError::Data(DataError::Split(format!(
                "task {:?} has an empty test split; lower split.train_frac",
                ds.name
            ))));
        }
        let values = predict_decisions(&model, t, x.view(), &registry)?;
        let predicted = predict_labels(&values);
        for (i, &original_row) in ds.split.test.iter().enumerate() {
            rows.push_str(&format!(
                "{},{},{},{:.16e},{}\n",
                ds.name, original_row, y[i] as i64, values[i], predicted[i] as i64
            ));
        }
        accs.push(accuracy(&predicted, &y));
        names.push(ds.name.clone());
    }
    write_file(&cfg.output.join("predictions.csv"), &rows)?;

    let report = obj(vec![
        ("command", Json::Str("predict".into())),
        ("mode", Json::Str(cfg.mode.name().into())),
        ("seed", Json::UInt(cfg.seed)),
        (
            "selected",
            obj(vec![("c", Json::Float(model.c)), ("lambda", Json::Float(model.lambda))]),
        ),
        ("accuracy", accuracy_json(&names, &accs)),
        (
            "paths",
            obj(vec![
                ("model", Json::Str(model_path.display().to_string())),
                ("predictions", Json::Str("predictions.csv".into())),
            ]),
        ),
        ("config", config_echo(cfg)),
        ("timing", obj(vec![("total_seconds", Json::Float(started.elapsed().as_secs_f64()))])),
    ]);
    let path = cfg.output.join("report.json");
    write_report(&path, &report)?;
    Ok(path)
}

/// Export the pairwise weight-distance matrix of a saved model and the
/// epsilon grouping it induces.
pub fn cmd_affinity(model_path: &Path, output: &Path, epsilon: f64) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    fs::create_dir_all(output).map_err(|source| CliError::Io { path: output.into(), source })?;
    let model = load_model(model_path)?;
    let t_count = model.tasks.len();
    let m_count = model.kernels.len();
    let mut theta = Array2::zeros((t_count, m_count));
    let mut names = Vec::with_capacity(t_count);
    for (t, tm) in model.tasks.iter().enumerate() {
        for (m, &v) in tm.theta.iter().enumerate() {
            theta[(t, m)] = v;
        }
        names.push(tm.name.clone());
    }
    let distances = pairwise_distances(theta.view());
    write_affinity_csv(&output.join("affinity.csv"), &names, &distances)?;
    let groups = affinity_groups(&distances, &names, epsilon);

    let report = obj(vec![
        ("command", Json::Str("affinity".into())),
        ("mode", Json::Null),
        ("seed", Json::Null),
        ("groups", groups_json(&groups)),
        ("paths", obj(vec![
            ("model", Json::Str(model_path.display().to_string())),
            ("affinity", Json::Str("affinity.csv".into())),
        ])),
        ("config", obj(vec![
            ("model", Json::Str(model_path.display().to_string())),
            ("output", Json::Str(output.display().to_string())),
            ("epsilon", Json::Float(epsilon)),
        ])),
        ("timing", obj(vec![("total_seconds", Json::Float(started.elapsed().as_secs_f64()))])),
    ]);
    let path = output.join("report.json");
    write_report(&path, &report)?;
    Ok(path)
}

/// Print and record sqrt(sqrt(3) * gamma * R * M / (n * T)).
pub fn cmd_bound(
    gamma: f64,
    radius: f64,
    kernels: usize,
    samples: usize,
    tasks: usize,
    output: &Path,
) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let value = bound_value(gamma, radius, kernels, samples, tasks)?;
    println!("{value:.16e}");
    fs::create_dir_all(output).map_err(|source| CliError::Io { path: output.into(), source })?;
    let report = obj(vec![
        ("command", Json::Str("bound".into())),
        ("mode", Json::Null),
        ("seed", Json::Null),
        ("bound", Json::Float(value)),
        ("config", obj(vec![
            ("gamma", Json::Float(gamma)),
            ("radius", Json::Float(radius)),
            ("kernels", Json::UInt(kernels as u64)),
            ("samples", Json::UInt(samples as u64)),
            ("tasks", Json::UInt(tasks as u64)),
            ("output", Json::Str(output.display().to_string())),
        ])),
        ("timing", obj(vec![("total_seconds", Json::Float(started.elapsed().as_secs_f64()))])),
    ]);
    let path = output.join("report.json");
    write_report(&path, &report)?;
    Ok(path)
}
