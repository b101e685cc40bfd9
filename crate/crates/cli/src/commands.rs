use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use accessmfs::data::report::{write_json, SCHEMA_VERSION};
use accessmfs::data::{
    load_dataset, make_split, mean_rows, write_dense_csv, write_report, write_sparse, DataFormat, FitRecord,
    LoadedDataset, ReportRow, ReportSidecar, SeedKey, SplitSpec,
};
use accessmfs::pipeline::{run_cell, CellResult, CellSpec};
use accessmfs::synth::{generate, SynthParams};
use accessmfs::validate::{check_constraint, check_monotone, check_run, Issue, RunRecord};
use accessmfs::{ConvergenceTrace, Dataset, Hyperparameters, MlknnParams, SolverVariant, Tolerances};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{parse_list, AblationArgs, DataArgs, EvalArgs, FitArgs, SolverArgs, SweepArgs, SynthArgs, ValidateArgs};

/// A command that could not finish; `code` becomes the exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn usage(kind: &str, message: impl fmt::Display) -> Self {
        Failure { code: 2, kind: kind.into(), message: message.to_string() }
    }

    fn input(e: accessmfs::Error) -> Self {
        Failure::usage(e.kind(), e)
    }

    fn output(e: accessmfs::Error) -> Self {
        Failure { code: 1, kind: e.kind().into(), message: e.to_string() }
    }
}

pub type Outcome = Result<u8, Failure>;

#[derive(Debug, Serialize)]
struct ExperimentConfig {
    command: &'static str,
    dataset: PathBuf,
    format: DataFormat,
    standardize: bool,
    lambda: Vec<f64>,
    theta: Vec<f64>,
    mu: Vec<f64>,
    labeled_ratios: Vec<f64>,
    feature_counts: Vec<usize>,
    seeds: Vec<u64>,
    variants: Vec<SolverVariant>,
    k_s: usize,
    k_p: usize,
    max_iters: usize,
    max_w_iters: usize,
    tol: f64,
    mlknn_k: usize,
    mlknn_smoothing: f64,
}

struct Cell {
    index: usize,
    variant: SolverVariant,
    hp: Hyperparameters,
    labeled_ratio: f64,
}

type CellOutput = Result<CellResult, (String, String)>;

fn load(data: &DataArgs) -> Result<LoadedDataset, Failure> {
    let loaded = load_dataset(&data.dataset, data.format, data.standardize).map_err(Failure::input)?;
    log::info!("loaded {}: {}", data.dataset.display(), loaded.summary);
    Ok(loaded)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
}

fn seeds(text: &str) -> Result<Vec<u64>, Failure> {
    parse_list(text).map_err(|m| Failure::usage("argument", format!("--seeds: {m}")))
}

/// Explicit counts must lie in [1, d]. The default is 100..=200 step 10
/// within d, or 30% of d when d < 100.
fn feature_counts(text: Option<&str>, d: usize) -> Result<Vec<usize>, Failure> {
    let Some(text) = text else {
        let grid: Vec<usize> = (100..=200).step_by(10).filter(|&k| k <= d).collect();
        if grid.is_empty() {
            return Ok(vec![((0.3 * d as f64).round() as usize).max(1)]);
        }
        return Ok(grid);
    };
    let counts = parse_list(text).map_err(|m| Failure::usage("argument", format!("--features: {m}")))?;
    counts
        .into_iter()
        .map(|k| {
            if k >= 1 && k as usize <= d {
                Ok(k as usize)
            } else {
                Err(Failure::usage("argument", format!("--features: {k} outside [1, {d}]")))
            }
        })
        .collect()
}

fn mlknn(eval: &EvalArgs) -> MlknnParams {
    MlknnParams { k_neighbors: eval.mlknn_k, smoothing: eval.mlknn_smoothing }
}

#[allow(clippy::too_many_arguments)]
fn config(
    command: &'static str,
    data: &DataArgs,
    solver: &SolverArgs,
    eval: &EvalArgs,
    grid: [Vec<f64>; 3],
    labeled_ratios: Vec<f64>,
    feature_counts: Vec<usize>,
    seeds: Vec<u64>,
    variants: Vec<SolverVariant>,
    c: usize,
) -> ExperimentConfig {
    let [lambda, theta, mu] = grid;
    ExperimentConfig {
        command,
        dataset: data.dataset.clone(),
        format: data.format,
        standardize: data.standardize,
        lambda,
        theta,
        mu,
        labeled_ratios,
        feature_counts,
        seeds,
        variants,
        k_s: solver.ks,
        k_p: solver.kp.unwrap_or_else(|| 3.min(c.saturating_sub(1)).max(1)),
        max_iters: solver.max_iters,
        max_w_iters: solver.max_w_iters,
        tol: solver.tol,
        mlknn_k: eval.mlknn_k,
        mlknn_smoothing: eval.mlknn_smoothing,
    }
}

/// Expands the grid in canonical order and validates every cell before any
/// fitting starts.
fn plan(cfg: &ExperimentConfig, data: &Dataset) -> Result<Vec<Cell>, Failure> {
    for (name, list) in [("lambda", &cfg.lambda), ("theta", &cfg.theta), ("mu", &cfg.mu)] {
        if list.is_empty() {
            return Err(Failure::usage("argument", format!("--{name} is empty")));
        }
    }
    if cfg.labeled_ratios.is_empty() || cfg.seeds.is_empty() || cfg.variants.is_empty() {
        return Err(Failure::usage("argument", "ratios, seeds and variants must be non-empty"));
    }
    if cfg.mlknn_k == 0 || !(cfg.mlknn_smoothing > 0.0) {
        return Err(Failure::usage("argument", "ML-KNN needs k >= 1 and positive smoothing"));
    }
    let (n, d, c) = (data.n_instances(), data.n_features(), data.n_labels());
    let mut cells = Vec::new();
    for &variant in &cfg.variants {
        for &lambda in &cfg.lambda {
            for &theta in &cfg.theta {
                for &mu in &cfg.mu {
                    for &labeled_ratio in &cfg.labeled_ratios {
                        for &seed in &cfg.seeds {
                            let hp = Hyperparameters {
                                lambda,
                                theta,
                                mu,
                                k_s: cfg.k_s,
                                k_p: cfg.k_p,
                                max_outer_iters: cfg.max_iters,
                                max_w_iters: cfg.max_w_iters,
                                tol_rel_obj: cfg.tol,
                                seed,
                                ..Default::default()
                            };
                            hp.validate(n, d, c).map_err(Failure::input)?;
                            make_split(n, SplitSpec { labeled_ratio, seed }).map_err(Failure::input)?;
                            cells.push(Cell { index: cells.len(), variant, hp, labeled_ratio });
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let threads = match std::env::var("ACCESSMFS_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Failure::usage("argument", format!("ACCESSMFS_THREADS must be a positive integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::usage("argument", e))
}

/// Runs cells concurrently; results come back in cell order.
fn run_cells(
    data: &Dataset,
    cells: &[Cell],
    features: &[usize],
    mlknn: MlknnParams,
    fail_cell: Option<usize>,
) -> Result<Vec<CellOutput>, Failure> {
    let pool = thread_pool()?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                if fail_cell == Some(cell.index) {
                    return Err(("injected".to_string(), format!("injected fault in cell {}", cell.index)));
                }
                let spec = CellSpec {
                    hp: cell.hp.clone(),
                    variant: cell.variant,
                    labeled_ratio: cell.labeled_ratio,
                    feature_counts: features.to_vec(),
                    mlknn,
                };
                let out = run_cell(data, &spec).map_err(|e| (e.kind().to_string(), e.to_string()));
                match &out {
                    Ok(r) => log::info!(
                        "cell {} {} seed {}: {} iterations, {:.0} ms",
                        cell.index,
                        cell.variant,
                        cell.hp.seed,
                        r.fit.trace.iterations_run,
                        r.fit_ms
                    ),
                    Err((_, m)) => log::warn!("cell {} failed: {m}", cell.index),
                }
                out
            })
            .collect()
    }))
}

struct Collected {
    rows: Vec<ReportRow>,
    fits: Vec<FitRecord>,
    failures: Vec<(usize, String, String)>,
}

fn collect(name: &str, cells: &[Cell], outputs: &[CellOutput]) -> Collected {
    let mut out = Collected { rows: Vec::new(), fits: Vec::new(), failures: Vec::new() };
    for (cell, result) in cells.iter().zip(outputs) {
        let hp = &cell.hp;
        let mut record = FitRecord {
            variant: cell.variant.name().into(),
            lambda: hp.lambda,
            theta: hp.theta,
            mu: hp.mu,
            labeled_ratio: cell.labeled_ratio,
            seed: hp.seed,
            labeled: Vec::new(),
            ranking: Vec::new(),
            trace: None,
            runtime_ms: 0.0,
            error: None,
        };
        match result {
            Ok(r) => {
                record.labeled = r.split.labeled.clone();
                record.ranking = r.fit.ranking.order.clone();
                record.trace = Some(r.fit.trace.clone());
                record.runtime_ms = r.fit_ms;
                for (k, m) in &r.metrics {
                    out.rows.push(ReportRow {
                        dataset: name.into(),
                        variant: cell.variant.name().into(),
                        lambda: hp.lambda,
                        theta: hp.theta,
                        mu: hp.mu,
                        labeled_ratio: cell.labeled_ratio,
                        n_features: *k,
                        seed: SeedKey::Seed(hp.seed),
                        ap: m.ap,
                        maf: m.maf,
                        rl: m.rl,
                        oe: m.oe,
                        iterations: r.fit.trace.iterations_run as f64,
                        runtime_ms: Some(r.fit_ms),
                    });
                }
            }
            Err((kind, message)) => {
                record.error = Some(message.clone());
                out.failures.push((cell.index, kind.clone(), message.clone()));
            }
        }
        out.fits.push(record);
    }
    out
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::usage("io", format!("{}: {e}", dir.display())))
}

fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    loaded: &LoadedDataset,
    collected: &Collected,
    with_means: bool,
    timings: bool,
) -> Result<(), Failure> {
    let mut rows = collected.rows.clone();
    if with_means {
        rows.extend(mean_rows(&collected.rows));
    }
    write_report(&rows, &dir.join("report.csv"), timings).map_err(Failure::output)?;
    let sidecar = ReportSidecar {
        schema: SCHEMA_VERSION,
        config: serde_json::to_value(cfg).expect("config serializes"),
        dataset: Some(loaded.summary.clone()),
        fits: collected.fits.clone(),
    };
    write_json(&dir.join("report.json"), &sidecar).map_err(Failure::output)
}

/// Prints failed cells as error JSON lines and returns the exit code.
fn report_failures(collected: &Collected) -> u8 {
    for (index, kind, message) in &collected.failures {
        eprintln!("{}", serde_json::json!({ "kind": kind, "message": message, "cell": index }));
    }
    u8::from(!collected.failures.is_empty())
}

fn trace_csv(trace: &ConvergenceTrace) -> String {
    let mut out = String::from("iteration,objective,constraint_residual,inner_iterations\n");
    let _ = writeln!(out, "0,{},,", trace.initial_objective);
    for t in 0..trace.iterations_run {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            t + 1,
            trace.objective_values[t],
            trace.constraint_residuals[t],
            trace.inner_iterations[t]
        );
    }
    out
}

fn print_rows(rows: &[ReportRow]) {
    println!("{:<10} {:>6} {:>8} {:>10} {:>8} {:>8} {:>8} {:>8}", "variant", "ratio", "features", "seed", "AP", "MaF", "RL", "OE");
    for r in rows {
        println!(
            "{:<10} {:>6} {:>8} {:>10} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.variant, r.labeled_ratio, r.n_features, r.seed.to_string(), r.ap, r.maf, r.rl, r.oe
        );
    }
}

pub fn fit(args: FitArgs) -> Outcome {
    let loaded = load(&args.data)?;
    let data = &loaded.dataset;
    let features = feature_counts(args.eval.features.as_deref(), data.n_features())?;
    let cfg = config(
        "fit",
        &args.data,
        &args.solver,
        &args.eval,
        [vec![args.lambda], vec![args.theta], vec![args.mu]],
        vec![args.labeled_ratio],
        features.clone(),
        vec![args.seed],
        vec![args.variant],
        data.n_labels(),
    );
    let cells = plan(&cfg, data)?;
    prepare_out(&args.eval.out)?;
    let outputs = run_cells(data, &cells, &features, mlknn(&args.eval), None)?;
    let collected = collect(&dataset_name(&args.data.dataset), &cells, &outputs);
    write_outputs(&args.eval.out, &cfg, &loaded, &collected, false, args.eval.timings)?;
    if let Ok(result) = &outputs[0] {
        let run = RunRecord::new(&result.fit, &cells[0].hp, args.variant);
        write_json(&args.eval.out.join("run.json"), &run).map_err(Failure::output)?;
        let trace = args.eval.out.join("trace.csv");
        fs::write(&trace, trace_csv(&result.fit.trace))
            .map_err(|e| Failure { code: 1, kind: "io".into(), message: format!("{}: {e}", trace.display()) })?;
        print_rows(&collected.rows);
    }
    Ok(report_failures(&collected))
}

pub fn sweep(args: SweepArgs) -> Outcome {
    let loaded = load(&args.data)?;
    let data = &loaded.dataset;
    let features = feature_counts(args.eval.features.as_deref(), data.n_features())?;
    let cfg = config(
        "sweep",
        &args.data,
        &args.solver,
        &args.eval,
        [args.lambda.clone(), args.theta.clone(), args.mu.clone()],
        args.labeled_ratios.clone(),
        features.clone(),
        seeds(&args.seeds)?,
        args.variant.clone(),
        data.n_labels(),
    );
    let cells = plan(&cfg, data)?;
    prepare_out(&args.eval.out)?;
    let outputs = run_cells(data, &cells, &features, mlknn(&args.eval), args.fail_cell)?;
    let collected = collect(&dataset_name(&args.data.dataset), &cells, &outputs);
    write_outputs(&args.eval.out, &cfg, &loaded, &collected, true, args.eval.timings)?;
    println!(
        "{} cells, {} failed; wrote {}",
        cells.len(),
        collected.failures.len(),
        args.eval.out.join("report.csv").display()
    );
    Ok(report_failures(&collected))
}

#[derive(Debug, Default)]
struct Moments {
    values: Vec<f64>,
}

impl Moments {
    fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation; zero for a single value.
    fn std(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

fn comparison_table(rows: &[ReportRow]) -> String {
    let mut out = String::from("variant,runs,AP_mean,AP_std,MaF_mean,MaF_std,RL_mean,RL_std,OE_mean,OE_std\n");
    for variant in SolverVariant::ALL {
        let mine: Vec<&ReportRow> = rows.iter().filter(|r| r.variant == variant.name()).collect();
        if mine.is_empty() {
            continue;
        }
        let _ = write!(out, "{},{}", variant.name(), mine.len());
        for metric in [|r: &ReportRow| r.ap, |r: &ReportRow| r.maf, |r: &ReportRow| r.rl, |r: &ReportRow| r.oe] {
            let m = Moments { values: mine.iter().map(|r| metric(r)).collect() };
            let _ = write!(out, ",{},{}", m.mean(), m.std());
        }
        out.push('\n');
    }
    out
}

pub fn ablation(args: AblationArgs) -> Outcome {
    let loaded = load(&args.data)?;
    let data = &loaded.dataset;
    let features = feature_counts(args.eval.features.as_deref(), data.n_features())?;
    let cfg = config(
        "ablation",
        &args.data,
        &args.solver,
        &args.eval,
        [vec![args.lambda], vec![args.theta], vec![args.mu]],
        vec![args.labeled_ratio],
        features.clone(),
        seeds(&args.seeds)?,
        SolverVariant::ALL.to_vec(),
        data.n_labels(),
    );
    let cells = plan(&cfg, data)?;
    prepare_out(&args.eval.out)?;
    let outputs = run_cells(data, &cells, &features, mlknn(&args.eval), None)?;
    let collected = collect(&dataset_name(&args.data.dataset), &cells, &outputs);
    write_outputs(&args.eval.out, &cfg, &loaded, &collected, true, args.eval.timings)?;

    let mut code = report_failures(&collected);
    for seed in &cfg.seeds {
        let splits: Vec<&Vec<usize>> = collected
            .fits
            .iter()
            .filter(|f| f.seed == *seed && f.error.is_none())
            .map(|f| &f.labeled)
            .collect();
        if splits.windows(2).any(|w| w[0] != w[1]) {
            eprintln!("{}", serde_json::json!({ "kind": "split_mismatch", "message": format!("variants saw different splits for seed {seed}") }));
            code = 1;
        }
    }
    let table = comparison_table(&collected.rows);
    let path = args.eval.out.join("comparison.csv");
    fs::write(&path, &table).map_err(|e| Failure { code: 1, kind: "io".into(), message: format!("{}: {e}", path.display()) })?;
    print!("{table}");
    Ok(code)
}

pub fn synth(args: SynthArgs) -> Outcome {
    let params = SynthParams {
        n_instances: args.instances,
        n_features: args.features,
        n_informative: args.informative,
        n_labels: args.labels,
        noise: args.noise,
        quantile: args.quantile,
        latent_dim: args.latent,
        latent_noise: args.latent_noise,
        seed: args.seed,
    };
    let synthetic = generate(&params).map_err(Failure::input)?;
    prepare_out(&args.out)?;
    let data_path = match args.format {
        DataFormat::DenseCsv => {
            let p = args.out.join("data.csv");
            write_dense_csv(&p, &synthetic.dataset).map_err(Failure::output)?;
            p
        }
        DataFormat::SparseMultilabel => {
            let p = args.out.join("data.txt");
            write_sparse(&p, &synthetic.dataset).map_err(Failure::output)?;
            p
        }
    };
    write_json(&args.out.join("truth.json"), &synthetic.truth).map_err(Failure::output)?;
    println!(
        "wrote {} ({} instances, {} features, {} labels); informative features {:?}",
        data_path.display(),
        params.n_instances,
        params.n_features,
        params.n_labels,
        synthetic.truth.informative
    );
    Ok(0)
}

fn locate(path: &Path) -> PathBuf {
    if path.is_dir() {
        let run = path.join("run.json");
        if run.exists() {
            return run;
        }
        return path.join("report.json");
    }
    path.to_path_buf()
}

fn sidecar_issues(sidecar: &ReportSidecar, tol: &Tolerances) -> Vec<Issue> {
    let mut issues = Vec::new();
    for (i, fit) in sidecar.fits.iter().enumerate() {
        if let Some(error) = &fit.error {
            log::warn!("fit {i} recorded a failure and has no trace: {error}");
            continue;
        }
        let Some(trace) = &fit.trace else { continue };
        let label = format!(
            "fit {i} ({} lambda={} theta={} mu={} ratio={} seed={})",
            fit.variant, fit.lambda, fit.theta, fit.mu, fit.labeled_ratio, fit.seed
        );
        for mut issue in check_constraint(trace, tol).into_iter().chain(check_monotone(trace, tol)) {
            issue.message = format!("{label} {}", issue.message);
            issues.push(issue);
        }
    }
    issues
}

pub fn validate(args: ValidateArgs) -> Outcome {
    let path = locate(&args.path);
    let text = fs::read_to_string(&path).map_err(|e| Failure::usage("io", format!("{}: {e}", path.display())))?;
    let bad_json = |e: serde_json::Error| Failure::usage("json", format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad_json)?;
    let tol = Tolerances::default();
    let (issues, what) = if value.get("fits").is_some() {
        let sidecar: ReportSidecar = serde_json::from_value(value).map_err(bad_json)?;
        (sidecar_issues(&sidecar, &tol), format!("{} fits", sidecar.fits.len()))
    } else {
        let run: RunRecord = serde_json::from_value(value).map_err(bad_json)?;
        (check_run(&run, &tol), format!("{} iterations", run.trace.iterations_run))
    };
    for issue in &issues {
        let kind = serde_json::to_value(&issue.kind).expect("kind serializes");
        println!("{}: {}", kind.as_str().unwrap_or("issue"), issue.message);
    }
    if issues.is_empty() {
        println!("ok: {} ({what}) satisfies all checks", path.display());
        Ok(0)
    } else {
        println!("{} issue(s) in {}", issues.len(), path.display());
        Ok(1)
    }
}
