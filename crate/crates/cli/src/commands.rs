use std::io::Write;
use std::path::Path;

use actuator_core::maxmin::{cbo_sp, pgda, write_history_csv, SaddleSolution};
use actuator_core::model::{assemble_system, LtiSystem};
use actuator_core::numkit::{DenseMatrix, DenseVector};
use actuator_core::riccati::{feedback_gain, worst_case_value};
use actuator_core::rng::component_rng;
use actuator_core::simulate::{settling_metrics, simulate_closed_loop, Trajectory};
use actuator_core::surrogate::dataset::{
    build_riccati_dataset, build_value_dataset, fmt_f64, read_riccati_csv, read_value_csv, solve_at,
    write_riccati_csv, write_value_csv,
};
use actuator_core::surrogate::{
    LossHistory, StructuredSurrogate, Surrogate, SurrogateKind, UnstructuredSurrogate,
};
use serde::{Deserialize, Serialize};

use crate::config::{InitialState, Method, PipelineConfig};
use crate::error::CliError;
use crate::output::{sibling, write_atomic, write_text, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum HeatmapSource {
    Exact,
    Surrogate,
    Error,
}

/// Final answer of `optimize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub z0: Vec<f64>,
    pub r: Vec<f64>,
    pub value: f64,
    pub method: Method,
    pub iterations: usize,
}

fn snapshot(cfg: &PipelineConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

fn system(cfg: &PipelineConfig) -> Result<LtiSystem, CliError> {
    Ok(assemble_system(cfg.model()?)?)
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn cmd_data(cfg: &PipelineConfig, seed: u64, out: &Path) -> Result<RunManifest, CliError> {
    let sys = system(cfg)?;
    let r_grid = cfg.data_r_grid()?;
    let mut manifest = RunManifest::new("data", seed, snapshot(cfg));
    match cfg.kind() {
        SurrogateKind::Structured => {
            let data = manifest.timed("solve", || build_riccati_dataset(&sys, &r_grid))?;
            write_atomic(out, |w| Ok(write_riccati_csv(&data, w)?))?;
            manifest.metric("records", data.len());
        }
        SurrogateKind::Unstructured => {
            let z0_grid = cfg.data_z0_grid()?;
            let data = manifest.timed("solve", || build_value_dataset(&sys, &z0_grid, &r_grid))?;
            write_atomic(out, |w| Ok(write_value_csv(&data, w)?))?;
            manifest.metric("records", data.len());
        }
    }
    manifest.artifact(out);
    manifest.write(out)?;
    Ok(manifest)
}

fn check_dims(what: &str, n: usize, m: usize, cfg: &PipelineConfig) -> Result<(), CliError> {
    let model = cfg.model()?;
    if (n, m) != (model.n, model.m) {
        return Err(CliError::Dimension(format!(
            "{what} has n = {n}, m = {m} but the model section declares n = {}, m = {}",
            model.n, model.m
        )));
    }
    Ok(())
}

fn open(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))
}

pub fn cmd_train(cfg: &PipelineConfig, seed: u64, data_path: &Path, out: &Path) -> Result<RunManifest, CliError> {
    cfg.model()?;
    let section = cfg.train_section();
    let train_cfg = cfg.train_config(seed);
    let mut init_rng = component_rng(seed, "init");
    let mut manifest = RunManifest::new("train", seed, snapshot(cfg));

    let (surrogate, history): (Surrogate, LossHistory) = match section.kind {
        SurrogateKind::Structured => {
            let data = read_riccati_csv(open(data_path)?)?;
            check_dims("dataset", data.n, data.m, cfg)?;
            let mut s = StructuredSurrogate::init(data.n, data.m, section.hidden_width, section.activation, &mut init_rng);
            let h = manifest.timed("train", || s.train(&data, &train_cfg))?;
            (Surrogate::Structured(s), h)
        }
        SurrogateKind::Unstructured => {
            let data = read_value_csv(open(data_path)?)?;
            check_dims("dataset", data.n, data.m, cfg)?;
            let mut s = UnstructuredSurrogate::init(data.n, data.m, section.hidden_width, section.activation, &mut init_rng);
            let h = manifest.timed("train", || s.train(&data, &train_cfg))?;
            (Surrogate::Unstructured(s), h)
        }
    };

    let loss_path = sibling(out, "loss.csv");
    write_atomic(&loss_path, |w| Ok(history.write_csv(w)?))?;
    write_text(out, &surrogate.to_json()?)?;
    manifest.artifact(out);
    manifest.artifact(&loss_path);
    manifest.metric("iterations", train_cfg.iterations);
    manifest.metric("initial_loss", history.first());
    manifest.metric("final_loss", history.last());
    manifest.write(out)?;
    Ok(manifest)
}

pub fn load_bundle(path: &Path) -> Result<Surrogate, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read bundle {}: {e}", path.display())))?;
    Ok(Surrogate::from_json(&text)?)
}

pub fn cmd_optimize(cfg: &PipelineConfig, seed: u64, bundle: &Path, out: &Path) -> Result<RunManifest, CliError> {
    let surrogate = load_bundle(bundle)?;
    check_dims("bundle", surrogate.n(), surrogate.m(), cfg)?;
    let method = cfg.method()?;
    let mut manifest = RunManifest::new("optimize", seed, snapshot(cfg));
    let sol: SaddleSolution = match method {
        Method::Pgda => {
            let p = cfg.pgda_config()?;
            manifest.timed("pgda", || pgda(&surrogate, &p))?
        }
        Method::Cbo => {
            let c = cfg.cbo_config(seed)?;
            manifest.timed("cbo", || cbo_sp(&surrogate, &c))?
        }
    };
    let record = SolutionRecord {
        z0: sol.z0.to_vec(),
        r: sol.r.to_vec(),
        value: sol.value,
        method,
        iterations: sol.iterations,
    };
    let history_path = sibling(out, "history.csv");
    write_atomic(&history_path, |w| Ok(write_history_csv(&sol.history, w)?))?;
    let text = serde_json::to_string_pretty(&record).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(out, &text)?;
    manifest.artifact(out);
    manifest.artifact(&history_path);
    manifest.metric("r", &record.r);
    manifest.metric("value", record.value);
    manifest.write(out)?;
    Ok(manifest)
}

pub fn cmd_heatmap(
    cfg: &PipelineConfig,
    seed: u64,
    source: HeatmapSource,
    bundle: Option<&Path>,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let sys = system(cfg)?;
    let grid = cfg.heatmap_grid()?;
    let surrogate = match source {
        HeatmapSource::Exact => None,
        _ => {
            let path = bundle.ok_or_else(|| CliError::Config("--bundle is required for this source".into()))?;
            let s = load_bundle(path)?;
            check_dims("bundle", s.n(), s.m(), cfg)?;
            Some(s)
        }
    };
    let exact = |r: &DenseVector| -> Result<f64, CliError> { Ok(worst_case_value(&solve_at(&sys, r)?)?.0) };
    let mut manifest = RunManifest::new("heatmap", seed, snapshot(cfg));
    let values = manifest.timed("evaluate", || {
        grid.iter()
            .map(|r| match (source, &surrogate) {
                (HeatmapSource::Exact, _) => exact(r),
                (HeatmapSource::Surrogate, Some(s)) => Ok(s.worst_case_value(r)?),
                (HeatmapSource::Error, Some(s)) => Ok((exact(r)? - s.worst_case_value(r)?).abs()),
                _ => unreachable!("bundle loaded for surrogate sources"),
            })
            .collect::<Result<Vec<f64>, CliError>>()
    })?;

    let m = sys.m();
    write_atomic(out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=m).map(|l| format!("r_{l}")).collect();
        header.push("value".into());
        csv.write_record(&header).map_err(csv_io)?;
        for (r, v) in grid.iter().zip(&values) {
            let row: Vec<String> = r.iter().chain(std::iter::once(v)).map(|x| fmt_f64(*x)).collect();
            csv.write_record(&row).map_err(csv_io)?;
        }
        Ok(csv.flush()?)
    })?;
    manifest.artifact(out);
    manifest.metric("points", grid.len());
    manifest.write(out)?;
    Ok(manifest)
}

/// Where the simulated placement comes from, in order of precedence.
pub enum Placement<'a> {
    Explicit(Vec<f64>),
    Solution(&'a Path),
    FromConfig,
}

fn resolve_placement(cfg: &PipelineConfig, placement: Placement<'_>) -> Result<Vec<f64>, CliError> {
    match placement {
        Placement::Explicit(r) => Ok(r),
        Placement::Solution(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let rec: SolutionRecord = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(rec.r)
        }
        Placement::FromConfig => cfg
            .simulate_section()
            .r
            .ok_or_else(|| CliError::Config("no placement: pass --r or --solution, or set simulate.r".into())),
    }
}

/// Trajectory at placement `r` from `z0` (or the worst-case unit state).
pub fn closed_loop_run(
    sys: &LtiSystem,
    r: &[f64],
    z0: &InitialState,
    sim: &actuator_core::simulate::SimConfig,
) -> Result<(Trajectory, DenseVector), CliError> {
    if r.len() != sys.m() {
        return Err(CliError::Dimension(format!("placement has {} entries, model has m = {}", r.len(), sys.m())));
    }
    let sol = solve_at(sys, r)?;
    let b = sys.input_matrix(r)?;
    let gain: DenseMatrix = feedback_gain(&sol, &b, &sys.r)?;
    let z0 = match z0 {
        InitialState::Named(name) if name == "worst" => worst_case_value(&sol)?.1,
        InitialState::Named(name) => return Err(CliError::Config(format!("unknown initial state `{name}`"))),
        InitialState::Vector(v) if v.len() == sys.n() => DenseVector::from(v.clone()),
        InitialState::Vector(v) => {
            return Err(CliError::Dimension(format!("z0 has {} entries, model has n = {}", v.len(), sys.n())))
        }
    };
    let traj = simulate_closed_loop(&sys.a, &b, &gain, &z0, sim)?;
    Ok((traj, z0))
}

pub fn cmd_simulate(cfg: &PipelineConfig, seed: u64, placement: Placement<'_>, out: &Path) -> Result<RunManifest, CliError> {
    let sys = system(cfg)?;
    let section = cfg.simulate_section();
    if section.threshold.is_nan() || section.threshold <= 0.0 {
        return Err(CliError::Config("simulate.threshold must be positive".into()));
    }
    let r = resolve_placement(cfg, placement)?;
    let mut manifest = RunManifest::new("simulate", seed, snapshot(cfg));
    let (traj, z0) = manifest.timed("simulate", || closed_loop_run(&sys, &r, &section.z0, &section.sim))?;

    let report = |manifest: &mut RunManifest, prefix: &str, traj: &Trajectory| {
        let metrics = settling_metrics(traj, section.threshold);
        manifest.metric(&format!("{prefix}settle_time"), metrics.settle_time);
        manifest.metric(&format!("{prefix}norm_at_0.7"), traj.norm_near(0.7));
        manifest.metric(&format!("{prefix}final_norm"), metrics.norms.last().map(|x| x.1));
    };
    write_atomic(out, |w: &mut dyn Write| Ok(traj.write_csv(w)?))?;
    manifest.artifact(out);
    manifest.metric("r", &r);
    manifest.metric("z0", z0.to_vec());
    report(&mut manifest, "", &traj);

    if let Some(base) = &section.baseline_r {
        let (base_traj, _) = closed_loop_run(&sys, base, &InitialState::Vector(z0.to_vec()), &section.sim)?;
        let base_path = sibling(out, "baseline.csv");
        write_atomic(&base_path, |w| Ok(base_traj.write_csv(w)?))?;
        manifest.artifact(&base_path);
        manifest.metric("baseline_r", base);
        report(&mut manifest, "baseline_", &base_traj);
    }
    manifest.write(out)?;
    Ok(manifest)
}
