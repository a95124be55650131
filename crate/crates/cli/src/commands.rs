//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;
use urbanfno::eval::{
    accumulated_error, bench as run_bench, evaluate_scenario, rollout as run_rollout, write_vtk, MetricsReport,
    Surrogate, BENCH_CSV, COND_ERROR_CSV, HEIGHT_PROFILE_CSV, METRICS_JSON, PDF_CSV, ROLLOUT_ERROR_CSV,
};
use urbanfno::field::{read_field, read_mask, write_field, write_mask, BuildingMask, DatasetManifest, Grid3};
use urbanfno::resample::downsample;
use urbanfno::sim::{run_simulation, RunSummary, SceneSpec};
use urbanfno::train::{
    load_checkpoint, save_checkpoint, train as run_train, write_loss_csv, Checkpoint, TrainingData, BEST_CHECKPOINT,
    FINAL_CHECKPOINT, LOSS_CSV,
};
use urbanfno::{Error, Result};

use crate::config::FileConfig;
use crate::index::IndexBuilder;
use crate::{BenchArgs, EvalArgs, ExportArgs, GenerateArgs, PrepareArgs, RolloutArgs, Split, TrainArgs};

const FIELDS_DIR: &str = "fields";
const MASK_FILE: &str = "mask.umsk";
const SUMMARY_FILE: &str = "summary.json";
const MANIFEST_FILE: &str = "manifest.json";

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} {} does not exist", path.display())))
    }
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} {} is not a directory", path.display())))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn field_name(t: usize) -> String {
    format!("{FIELDS_DIR}/step_{t:05}.ufld")
}

fn effective<T: Serialize, U: Serialize>(args: &T, cfg: &U) -> serde_json::Value {
    json!({ "args": args, "config": cfg })
}

/// Written by `generate` next to the fields, also on failure.
#[derive(Debug, Serialize, Deserialize)]
struct GenerateSummary {
    status: String,
    exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    /// Seconds between consecutive stored fields.
    #[serde(default)]
    output_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run: Option<RunSummary>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

pub fn generate(a: &GenerateArgs, file: FileConfig) -> Result<()> {
    require_file(&a.scene, "scene file")?;
    let scene = SceneSpec::load(&a.scene)?;
    let mut cfg = file.solver;
    if let Some(d) = a.direction {
        cfg.direction = d;
    }
    cfg.validate()?;
    create_dir(&a.out.join(FIELDS_DIR))?;
    let out = match run_simulation(&scene, &cfg, a.steps, a.stride) {
        Ok(o) => o,
        Err(e) => {
            let summary = GenerateSummary {
                status: "error".into(),
                exit_code: e.exit_code(),
                message: Some(e.to_string()),
                output_dt: None,
                run: None,
            };
            write_json(&a.out.join(SUMMARY_FILE), &summary)?;
            return Err(e);
        }
    };
    let mut index = IndexBuilder::new(&a.out, "generate", effective(a, &cfg));
    for (t, f) in out.sequence.fields().iter().enumerate() {
        write_field(f, a.out.join(field_name(t)))?;
        index.add(field_name(t), "field", true)?;
    }
    write_mask(&out.final_state.mask, a.out.join(MASK_FILE))?;
    index.add(MASK_FILE, "mask", true)?;
    let summary = GenerateSummary {
        status: "ok".into(),
        exit_code: 0,
        message: None,
        output_dt: Some(out.sequence.dt()),
        run: Some(out.summary.clone()),
    };
    write_json(&a.out.join(SUMMARY_FILE), &summary)?;
    index.add(SUMMARY_FILE, "run-summary", false)?;
    index.summary(json!({
        "fields": out.sequence.len(),
        "dt": out.summary.dt,
        "mean_step_seconds": out.summary.mean_step_seconds(),
    }));
    info!(
        "{} fields written, {:.4} s per solver step",
        out.sequence.len(),
        out.summary.mean_step_seconds()
    );
    index.write()
}

fn list_fields(dir: &Path) -> Result<Vec<PathBuf>> {
    let fdir = dir.join(FIELDS_DIR);
    require_dir(&fdir, "field directory")?;
    let mut files: Vec<PathBuf> = fs::read_dir(&fdir)
        .map_err(|e| Error::io(&fdir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ufld"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!("no .ufld files in {}", fdir.display())));
    }
    Ok(files)
}

pub fn prepare(a: &PrepareArgs, _file: FileConfig) -> Result<()> {
    require_dir(&a.fields, "fields directory")?;
    let files = list_fields(&a.fields)?;
    if a.window > files.len() {
        return Err(Error::InvalidArgument(format!(
            "window of {} steps exceeds the {} available fields",
            a.window,
            files.len()
        )));
    }
    let dt = match a.dt {
        Some(dt) => dt,
        None => {
            let p = a.fields.join(SUMMARY_FILE);
            require_file(&p, "run summary (or pass --dt)")?;
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let s: GenerateSummary =
                serde_json::from_str(&text).map_err(|e| Error::format(&p, format!("run summary: {e}")))?;
            s.output_dt
                .ok_or_else(|| Error::InvalidArgument(format!("{} has no output_dt", p.display())))?
        }
    };
    let first = read_field(&files[0])?;
    let src = *first.grid();
    let target = match a.dims {
        Some(d) if d != src.dims() => {
            let ext = src.extent();
            let spacing = [ext[0] / d[0] as f64, ext[1] / d[1] as f64, ext[2] / d[2] as f64];
            Grid3::new(d, spacing, src.origin)?
        }
        _ => src,
    };
    let resampled = target.dims() != src.dims();
    let mask_path = a.fields.join(MASK_FILE);
    let mask: Option<BuildingMask> = if mask_path.is_file() {
        Some(read_mask(&mask_path)?.resample_nearest(&target)?)
    } else {
        None
    };
    create_dir(&a.out.join(FIELDS_DIR))?;
    let mut data = Vec::with_capacity(files.len());
    let mut names = Vec::with_capacity(files.len());
    for (t, path) in files.iter().enumerate() {
        let f = if t == 0 { first.clone() } else { read_field(path)? };
        if !f.grid().same_as(&src) {
            return Err(Error::Shape(format!(
                "{} is on a different grid than {}",
                path.display(),
                files[0].display()
            )));
        }
        let f = if resampled { downsample(&f, &target, mask.as_ref())?.round_to_f32() } else { f };
        write_field(&f, a.out.join(field_name(t)))?;
        names.push(field_name(t));
        data.push(f);
    }
    let mut manifest =
        DatasetManifest::build(names.clone(), &data, dt, a.window, a.stride, a.n_train, a.seed, mask.as_ref())?;
    manifest.normalize_inputs = !a.no_normalize;
    manifest.notes.push(if resampled {
        format!("downsampled from {:?} to {:?} with natural cubic splines", src.dims(), target.dims())
    } else {
        "downsampling skipped: target grid equals source grid".to_string()
    });
    let mut index = IndexBuilder::new(&a.out, "prepare", effective(a, &json!({})));
    for n in &names {
        index.add(n, "field", true)?;
    }
    if let Some(m) = &mask {
        write_mask(m, a.out.join(MASK_FILE))?;
        manifest.mask = Some(MASK_FILE.to_string());
        index.add(MASK_FILE, "mask", true)?;
    }
    manifest.save(a.out.join(MANIFEST_FILE))?;
    index.add(MANIFEST_FILE, "manifest", true)?;
    index.summary(json!({
        "windows": manifest.windows.len(),
        "train": manifest.train.len(),
        "test": manifest.test.len(),
        "grid": target.dims(),
    }));
    info!(
        "{} windows ({} train / {} test)",
        manifest.windows.len(),
        manifest.train.len(),
        manifest.test.len()
    );
    index.write()
}

pub fn train(a: &TrainArgs, file: FileConfig) -> Result<()> {
    require_file(&a.manifest, "manifest")?;
    let (mut tcfg, mut mcfg) = (file.train, file.model);
    if let Some(v) = a.epochs {
        tcfg.epochs = v;
    }
    if let Some(v) = a.lr {
        tcfg.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        tcfg.batch_size = v;
    }
    if let Some(v) = a.seed {
        tcfg.seed = v;
    }
    tcfg.gradient_check |= a.gradient_check;
    if let Some(v) = a.modes {
        mcfg.modes = v;
    }
    if let Some(v) = a.width {
        mcfg.width = v;
    }
    if let Some(v) = a.layers {
        mcfg.layers = v;
    }
    if let Some(v) = a.activation {
        mcfg.activation = v;
    }
    tcfg.validate()?;
    mcfg.validate()?;
    let data = TrainingData::load(&a.manifest)?;
    create_dir(&a.out)?;
    let outcome = run_train(&data, &tcfg, &mcfg)?;
    save_checkpoint(&outcome.best, a.out.join(BEST_CHECKPOINT))?;
    save_checkpoint(&outcome.last, a.out.join(FINAL_CHECKPOINT))?;
    write_loss_csv(&outcome.history, a.out.join(LOSS_CSV))?;
    let mut index = IndexBuilder::new(&a.out, "train", effective(a, &json!({ "train": tcfg, "model": mcfg })));
    index.add(BEST_CHECKPOINT, "checkpoint-best", true)?;
    index.add(FINAL_CHECKPOINT, "checkpoint-final", true)?;
    index.add(LOSS_CSV, "loss-curves", false)?;
    let last = outcome.history.last().expect("at least one epoch");
    index.summary(json!({
        "epochs": outcome.history.len(),
        "best_epoch": outcome.best.epoch,
        "final_train_loss": last.train_loss,
        "final_test_loss": if last.test_loss.is_finite() { json!(last.test_loss) } else { json!(null) },
        "parameters": outcome.last.params.len(),
    }));
    index.write()
}

/// Checkpoint plus the fields and mask of a manifest, with grid checks.
struct Loaded {
    ck: Checkpoint,
    data: TrainingData,
    mask: Option<BuildingMask>,
}

fn load_pair(checkpoint: &Path, manifest: &Path, any_resolution: bool) -> Result<Loaded> {
    require_file(checkpoint, "checkpoint")?;
    require_file(manifest, "manifest")?;
    let ck = load_checkpoint(checkpoint)?;
    let data = TrainingData::load(manifest)?;
    let grid = *data
        .grid()
        .ok_or_else(|| Error::InvalidArgument("manifest lists no fields".into()))?;
    if let (Some(trained), false) = (ck.grid_dims, any_resolution) {
        if trained != grid.dims() {
            return Err(Error::Shape(format!(
                "checkpoint was trained on a {:?} grid but the manifest fields are {:?} (pass --any-resolution to evaluate anyway)",
                trained,
                grid.dims()
            )));
        }
    }
    if let Some(w) = data.manifest().windows.first() {
        if w.inputs != ck.config().in_channels {
            return Err(Error::Shape(format!(
                "manifest windows have {} input steps, the model expects {}",
                w.inputs,
                ck.config().in_channels
            )));
        }
    }
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mask = match data.manifest().mask_path(base) {
        Some(p) => Some(read_mask(&p)?),
        None => None,
    };
    if let Some(m) = &mask {
        m.grid().check_same(&grid, "manifest mask")?;
    }
    Ok(Loaded { ck, data, mask })
}

fn add_report_files(index: &mut IndexBuilder, dir: &Path, timing: bool) -> Result<()> {
    for (name, kind) in [
        (METRICS_JSON, "metrics"),
        (PDF_CSV, "pdf"),
        (COND_ERROR_CSV, "conditional-error"),
        (HEIGHT_PROFILE_CSV, "height-profile"),
        (ROLLOUT_ERROR_CSV, "rollout-error"),
        (BENCH_CSV, "bench"),
    ] {
        if dir.join(name).is_file() {
            index.add(name, kind, !timing)?;
        }
    }
    Ok(())
}

pub fn eval(a: &EvalArgs, file: FileConfig) -> Result<()> {
    let l = load_pair(&a.checkpoint, &a.manifest, a.any_resolution)?;
    let windows = match a.split {
        Split::Train => l.data.train_windows(),
        Split::Test => l.data.test_windows(),
        Split::All => l.data.manifest().windows.clone(),
    };
    if windows.is_empty() {
        return Err(Error::InvalidArgument(format!("the {:?} split has no windows", a.split)));
    }
    let model = Surrogate::from_checkpoint(&l.ck);
    let report = evaluate_scenario(&model, l.data.fields(), &windows, l.mask.as_ref(), &a.label, &file.eval)?;
    report.write(&a.out)?;
    let mut index = IndexBuilder::new(&a.out, "eval", effective(a, &file.eval));
    add_report_files(&mut index, &a.out, false)?;
    let one = report.one_step.as_ref().expect("one-step metrics");
    info!("{}: mean one-step loss {:.5} over {} windows", a.label, one.mean_loss, windows.len());
    index.summary(json!({ "windows": windows.len(), "mean_loss": one.mean_loss, "mean_abs_error": one.mean_abs_error }));
    index.write()
}

pub fn rollout(a: &RolloutArgs, _file: FileConfig) -> Result<()> {
    let l = load_pair(&a.checkpoint, &a.manifest, a.any_resolution)?;
    let model = Surrogate::from_checkpoint(&l.ck);
    let h = model.history_len();
    let fields = l.data.fields();
    let start = match a.start {
        Some(s) => s,
        None => l.data.test_windows().first().or(l.data.manifest().windows.first()).map_or(0, |w| w.start),
    };
    if start + h > fields.len() {
        return Err(Error::InvalidArgument(format!(
            "rollout from field {start} needs {h} initial fields, only {} exist",
            fields.len()
        )));
    }
    let seq = run_rollout(&model, &fields[start..start + h], a.steps, l.mask.as_ref(), l.data.manifest().dt)?;
    let truth_end = (start + h + a.steps).min(fields.len());
    let truth = &fields[start + h..truth_end];
    let report = MetricsReport {
        scenario: format!("rollout from field {start}"),
        rollout: accumulated_error(&seq.fields()[..truth.len()], truth)?,
        ..MetricsReport::default()
    };
    report.write(&a.out)?;
    let mut index = IndexBuilder::new(&a.out, "rollout", effective(a, &json!({})));
    add_report_files(&mut index, &a.out, false)?;
    if a.save_fields {
        create_dir(&a.out.join(FIELDS_DIR))?;
        for (t, f) in seq.fields().iter().enumerate() {
            write_field(f, a.out.join(field_name(t)))?;
            index.add(field_name(t), "predicted-field", true)?;
        }
    }
    let last = report.rollout.last();
    index.summary(json!({
        "start": start,
        "steps": a.steps,
        "steps_with_reference": truth.len(),
        "final_mean_abs_error": last.map(|s| s.mean_abs_error),
    }));
    index.write()
}

pub fn bench(a: &BenchArgs, file: FileConfig) -> Result<()> {
    require_file(&a.checkpoint, "checkpoint")?;
    require_file(&a.scene, "scene file")?;
    let ck = load_checkpoint(&a.checkpoint)?;
    let scene = SceneSpec::load(&a.scene)?;
    let mut cfg = file.solver;
    if let Some(d) = a.direction {
        cfg.direction = d;
    }
    let model = Surrogate::from_checkpoint(&ck);
    let timing = run_bench(&model, &scene, &cfg, a.repeats, a.spinup)?;
    info!(
        "solver {:.4} s, surrogate {:.4} s, speedup {:.2}x",
        timing.solver_median, timing.surrogate_median, timing.speedup
    );
    let summary = json!({
        "solver_median_seconds": timing.solver_median,
        "surrogate_median_seconds": timing.surrogate_median,
        "speedup": timing.speedup,
        "threads": timing.threads,
    });
    let report = MetricsReport {
        scenario: "bench".into(),
        timing: Some(timing),
        ..MetricsReport::default()
    };
    report.write(&a.out)?;
    let mut index = IndexBuilder::new(&a.out, "bench", effective(a, &cfg));
    add_report_files(&mut index, &a.out, true)?;
    index.summary(summary);
    index.write()
}

pub fn export_vtk(a: &ExportArgs, _file: FileConfig) -> Result<()> {
    for f in &a.fields {
        require_file(f, "field file")?;
    }
    create_dir(&a.out)?;
    let mut index = IndexBuilder::new(&a.out, "export-vtk", effective(a, &json!({})));
    for path in &a.fields {
        let field = read_field(path)?;
        let stem = path.file_stem().map_or("field".into(), |s| s.to_string_lossy().into_owned());
        let name = format!("{stem}.vtk");
        write_vtk(&field, &a.name, a.out.join(&name))?;
        index.add(&name, "vtk", true)?;
    }
    index.write()
}

