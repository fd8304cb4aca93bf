//! The `raycalib` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;
use raycalib_core::calib::{calibrate_corrs, convert_model_detailed, ransac_corrs, CalibOptions, RansacOptions};
use raycalib_core::fov::{field_from_spec, log_map};
use raycalib_core::metrics::{angular_error, auc, evaluate, reproj_error, EvalReport};
use raycalib_core::synth::{add_noise, lensfun_to_eucm, DatasetKind, LensfunEntry, LensfunFit, Sampler, SamplerConfig};
use raycalib_core::{CameraSpec, Correspondences, FovField, ModelId};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{self, CliError, Result};
use crate::field_io::{encode_aff1, read_field, write_field};
use crate::json::{read_spec, to_text, write_spec, Bound, Intrinsics, ResultJson};
use crate::lensfun::{read_lensfun, LensfunInput};
use crate::manifest::{RunManifest, MANIFEST_FILE};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "RAYCALIB_THREADS";
/// AUC thresholds, degrees.
pub const AUC_THRESHOLDS: [f64; 3] = [1.0, 5.0, 10.0];

#[derive(Debug, Parser)]
#[command(name = "raycalib", version, about = "Camera intrinsics from per-pixel ray fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Fit a camera model to a FoV field (AFF1 or CSV).
    Fit(FitArgs),
    /// Generate a synthetic dataset of specs and FoV fields.
    Synth(SynthArgs),
    /// Compare estimated specs against ground truth.
    Eval(EvalArgs),
    /// Express a spec in another camera model.
    Convert(ConvertArgs),
    /// Map a LensFun entry (JSON) or database (XML) onto EUCM.
    Lensfun(LensfunArgs),
    /// Rerun the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct FitArgs {
    pub field: PathBuf,
    /// pinhole, radial:N, kb:N, ucm, eucm or division:N
    #[arg(long)]
    pub model: String,
    /// Use every N-th cell of the field.
    #[arg(long, default_value_t = 1)]
    pub stride: u32,
    #[arg(long)]
    pub ransac: bool,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    /// RANSAC inlier threshold, degrees.
    #[arg(long, default_value_t = 0.5)]
    pub thresh_deg: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result JSON path; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Write the per-cell tangent residual (fit minus observation, rad) as AFF1.
    #[arg(long, requires = "out")]
    #[serde(skip)]
    pub dump_per_pixel: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// opp, opr, opd or opg
    #[arg(long, default_value = "opg")]
    pub kind: String,
    /// Draw every spec from this model instead of the dataset mixture.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: usize,
    /// Side of the square images, pixels.
    #[arg(long)]
    pub size: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Gaussian noise on the field, degrees.
    #[arg(long, default_value_t = 0.0)]
    pub noise_deg: f64,
    /// Stretch (aspect in [0.5, 2]) and crop (at most half of each side).
    #[arg(long)]
    pub edit: bool,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Directory of estimated specs or fit results.
    pub est: PathBuf,
    /// Directory of ground-truth specs (a dataset directory works too).
    pub gt: PathBuf,
    /// Metric grid stride, pixels.
    #[arg(long, default_value_t = 1)]
    pub stride: u32,
    /// Add focal and principal point errors to the medians.
    #[arg(long)]
    pub edited: bool,
    /// Report directory (report.json, report.csv, manifest.json); stdout
    /// when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Write per-image AE (deg) / RE (px) grids as AFF1 under
    /// `<out>/per_pixel/`.
    #[arg(long, requires = "out")]
    pub dump_per_pixel: bool,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ConvertArgs {
    pub spec: PathBuf,
    #[arg(long)]
    pub model: String,
    /// Keep focal length and principal point of the source.
    #[arg(long)]
    pub fix_focal: bool,
    #[arg(long, default_value_t = 4)]
    pub stride: u32,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct LensfunArgs {
    pub entry: PathBuf,
    /// Sensor grid stride.
    #[arg(long, default_value_t = 4)]
    pub stride: u32,
    /// Only database lenses whose name contains this text.
    #[arg(long)]
    pub lens: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Output directory (synth, eval) or file (fit, convert, lensfun);
    /// defaults to the recorded outputs next to the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args`, runs the command and returns the exit code. Errors are
/// printed to stderr as `{"error": {"kind", "module", "message"}}`.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match with_pool(|| run(&cli.command)) {
        Ok(Some(text)) => {
            print!("{text}");
            0
        }
        Ok(None) => 0,
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}

fn with_pool<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            pool.install(f)
        }
        Err(_) => f(),
    }
}

/// Runs a command; returns the text for stdout, if any.
pub fn run(cmd: &Command) -> Result<Option<String>> {
    match cmd {
        Command::Fit(a) => fit(a),
        Command::Synth(a) => synth(a).map(|_| None),
        Command::Eval(a) => eval(a),
        Command::Convert(a) => convert(a),
        Command::Lensfun(a) => lensfun(a),
        Command::Rerun(a) => rerun(a),
    }
}

/// Writes `text` to `out` (plus its manifest) or hands it back for stdout.
fn emit(cmd: &Command, inputs: &[&Path], out: Option<&Path>, extra: &[&Path], text: String) -> Result<Option<String>> {
    let Some(out) = out else { return Ok(Some(text)) };
    error::write(out, text)?;
    let mut m = RunManifest::new(cmd.name(), manifest_config(cmd), cmd.seed());
    m.inputs = inputs.iter().map(|p| p.display().to_string()).collect();
    m.outputs = std::iter::once(out).chain(extra.iter().copied()).map(file_name).collect();
    m.write_to(&file_manifest_path(out))?;
    Ok(None)
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

/// `result.json` → `result.manifest.json`.
pub fn file_manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn parse_model(s: &str) -> Result<ModelId> {
    Ok(s.parse::<ModelId>()?)
}

pub fn fit(a: &FitArgs) -> Result<Option<String>> {
    let model = parse_model(&a.model)?;
    let field = read_field(&a.field)?;
    let corrs = Correspondences::from_field(&field, a.stride)?;
    let res = if a.ransac {
        let opts = RansacOptions {
            iters: a.iters,
            thresh: a.thresh_deg.to_radians(),
            seed: a.seed,
            ..RansacOptions::default()
        };
        ransac_corrs(model, &corrs, &opts)?
    } else {
        calibrate_corrs(model, &corrs, &CalibOptions::default())?
    };
    if let Some(path) = &a.dump_per_pixel {
        error::write(path, residual_grid(&res.spec, &field))?;
    }
    let extra: Vec<&Path> = a.dump_per_pixel.iter().map(PathBuf::as_path).collect();
    emit(
        &Command::Fit(a.clone()),
        &[&a.field],
        a.out.as_deref(),
        &extra,
        to_text(&ResultJson::from(&res)),
    )
}

/// AFF1 of `log(unproject(est, px)) - θ_obs` per field cell; NaN where the
/// estimate cannot unproject.
fn residual_grid(est: &CameraSpec, field: &FovField) -> Vec<u8> {
    let proj = est.projector();
    let values: Vec<[f64; 2]> = field
        .cells()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(px, t)| match proj.unproject(px).and_then(|r| log_map(&r)) {
            Ok(e) => [e[0] - t[0], e[1] - t[1]],
            Err(_) => [f64::NAN; 2],
        })
        .collect();
    encode_aff1(field.cols() as u32, field.rows() as u32, &values)
}

fn index_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(4)
}

/// Seed of the noise stream of image `i`.
fn noise_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ i as u64
}

/// Stretches the vertical axis by `a ~ U(0.5, 2)`, then crops each side to a
/// random window covering at least half of it.
pub fn edit_spec<R: Rng + ?Sized>(spec: &CameraSpec, rng: &mut R) -> Result<CameraSpec> {
    let a: f64 = rng.random_range(0.5..=2.0);
    let (w, h) = (spec.width, spec.height);
    let h1 = ((h as f64 * a).round() as u32).max(1);
    let sv = h1 as f64 / h as f64;
    let w2 = rng.random_range(w.div_ceil(2)..=w);
    let h2 = rng.random_range(h1.div_ceil(2)..=h1);
    let off_u = rng.random_range(0..=w - w2) as f64;
    let off_v = rng.random_range(0..=h1 - h2) as f64;
    Ok(CameraSpec::new(
        spec.model,
        [spec.fx, spec.fy * sv, spec.cx - off_u, spec.cy * sv - off_v],
        spec.dist.clone(),
        w2,
        h2,
    )?)
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let kind: DatasetKind = a.kind.parse()?;
    let model = a.model.as_deref().map(parse_model).transpose()?;
    if a.size == 0 {
        return Err(CliError::Usage("--size must be positive".into()));
    }
    if !(a.noise_deg >= 0.0 && a.noise_deg.is_finite()) {
        return Err(CliError::Usage("--noise-deg must be non-negative".into()));
    }
    let mut sampler = Sampler::new(SamplerConfig {
        kind,
        size: a.size,
        seed: a.seed,
    });
    let mut specs = Vec::with_capacity(a.n);
    for _ in 0..a.n {
        let spec = match model {
            Some(m) => sampler.sample_model(m)?,
            None => sampler.sample()?,
        };
        let spec = if a.edit { edit_spec(&spec, sampler.rng())? } else { spec };
        specs.push(spec);
    }
    let width = index_width(a.n);
    let (spec_dir, field_dir) = (a.out.join("specs"), a.out.join("fields"));
    specs.par_iter().enumerate().try_for_each(|(i, spec)| -> Result<()> {
        let name = format!("{i:0width$}");
        let field = field_from_spec(spec, 1)?;
        let field = add_noise(&field, a.noise_deg, noise_seed(a.seed, i))?;
        write_spec(&spec_dir.join(format!("{name}.json")), spec)?;
        write_field(&field_dir.join(format!("{name}.aff1")), &field)
    })?;
    let cmd = Command::Synth(a.clone());
    let mut m = RunManifest::new(cmd.name(), manifest_config(&cmd), cmd.seed());
    m.outputs = vec!["specs".into(), "fields".into()];
    m.write(&a.out)
}

fn manifest_config(cmd: &Command) -> serde_json::Value {
    serde_json::to_value(cmd).expect("arguments serialize")
}

/// `*.json` files of a directory (or of its `specs/` subdirectory), by name.
fn spec_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let sub = dir.join("specs");
    let dir = if sub.is_dir() { sub } else { dir.to_path_buf() };
    let rd = std::fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry.map_err(|e| CliError::io(&dir, e))?.path();
        let is_json = path.extension().is_some_and(|e| e == "json");
        let stem = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned);
        match stem {
            Some(stem) if is_json && !is_manifest(&path) => out.push((stem, path)),
            _ => {}
        }
    }
    out.sort();
    Ok(out)
}

fn is_manifest(path: &Path) -> bool {
    let name = file_name(path);
    name == MANIFEST_FILE || name.ends_with(".manifest.json")
}

#[derive(Clone, Debug, Serialize)]
struct EvalRecord {
    name: String,
    #[serde(flatten)]
    report: ReportJson,
}

#[derive(Clone, Copy, Debug, Serialize)]
struct ReportJson {
    ae_mean_deg: f64,
    re_mean_px: f64,
    hfov_err_deg: f64,
    vfov_err_deg: f64,
    ef: f64,
    ec: f64,
}

impl From<&EvalReport> for ReportJson {
    fn from(r: &EvalReport) -> Self {
        ReportJson {
            ae_mean_deg: r.ae_mean,
            re_mean_px: r.re_mean,
            hfov_err_deg: r.hfov_err,
            vfov_err_deg: r.vfov_err,
            ef: r.ef,
            ec: r.ec,
        }
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

pub fn eval(a: &EvalArgs) -> Result<Option<String>> {
    let gt = spec_files(&a.gt)?;
    let est = spec_files(&a.est)?;
    let est_names: std::collections::BTreeMap<_, _> = est.iter().cloned().collect();
    let gt_names: std::collections::BTreeSet<_> = gt.iter().map(|(n, _)| n.clone()).collect();
    let missing_est: Vec<&String> = gt.iter().map(|(n, _)| n).filter(|n| !est_names.contains_key(*n)).collect();
    let missing_gt: Vec<&String> = est.iter().map(|(n, _)| n).filter(|n| !gt_names.contains(*n)).collect();
    let pairs: Vec<(String, PathBuf, PathBuf)> = gt
        .iter()
        .filter_map(|(n, p)| est_names.get(n).map(|e| (n.clone(), p.clone(), e.clone())))
        .collect();

    type Outcome = std::result::Result<(EvalReport, Option<Vec<u8>>), CliError>;
    let outcomes: Vec<Outcome> = pairs
        .par_iter()
        .map(|(_, gp, ep)| {
            let (g, e) = (read_spec(gp)?, read_spec(ep)?);
            let report = evaluate(&g, &e, a.stride)?;
            let grid = a.dump_per_pixel.then(|| per_pixel_errors(&g, &e, a.stride));
            Ok((report, grid))
        })
        .collect();

    let mut records = Vec::new();
    let mut failed = Vec::new();
    for ((name, _, _), outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            Ok((report, grid)) => {
                if let (Some(grid), Some(out)) = (grid, &a.out) {
                    error::write(&out.join("per_pixel").join(format!("{name}.aff1")), grid)?;
                }
                records.push(EvalRecord {
                    name: name.clone(),
                    report: (&report).into(),
                });
            }
            Err(e) => failed.push(json!({"name": name, "error": e.to_json()["error"]})),
        }
    }

    let col = |f: fn(&ReportJson) -> f64| records.iter().map(|r| f(&r.report)).collect::<Vec<f64>>();
    let ae = col(|r| r.ae_mean_deg);
    let mut medians = json!({
        "ae_mean_deg": median(&ae),
        "re_mean_px": median(&col(|r| r.re_mean_px)),
        "hfov_err_deg": median(&col(|r| r.hfov_err_deg)),
        "vfov_err_deg": median(&col(|r| r.vfov_err_deg)),
    });
    if a.edited {
        medians["ef"] = json!(median(&col(|r| r.ef)));
        medians["ec"] = json!(median(&col(|r| r.ec)));
    }
    let auc_ae = if ae.is_empty() { None } else { Some(auc(&ae, &AUC_THRESHOLDS)?) };
    let report = json!({
        "n_pairs": pairs.len(),
        "n_evaluated": records.len(),
        "median": medians,
        "auc": {"thresholds_deg": AUC_THRESHOLDS, "ae": auc_ae},
        "records": records,
        "failed": failed,
        "missing_est": missing_est,
        "missing_gt": missing_gt,
    });
    let text = to_text(&report);
    let Some(out) = &a.out else { return Ok(Some(text)) };
    error::write(&out.join("report.json"), text)?;
    let mut csv = format!("name,{}\n", EvalReport::CSV_HEADER);
    for r in &records {
        let rep = &r.report;
        let er = EvalReport {
            ae_mean: rep.ae_mean_deg,
            re_mean: rep.re_mean_px,
            hfov_err: rep.hfov_err_deg,
            vfov_err: rep.vfov_err_deg,
            ef: rep.ef,
            ec: rep.ec,
        };
        csv.push_str(&format!("{},{}\n", r.name, er.csv_record()));
    }
    error::write(&out.join("report.csv"), csv)?;
    let cmd = Command::Eval(a.clone());
    let mut m = RunManifest::new(cmd.name(), manifest_config(&cmd), cmd.seed());
    m.inputs = vec![a.est.display().to_string(), a.gt.display().to_string()];
    m.outputs = vec!["report.json".into(), "report.csv".into()];
    if a.dump_per_pixel {
        m.outputs.push("per_pixel".into());
    }
    m.write(out)?;
    Ok(None)
}

/// Per-cell AE (deg) and RE (px) on the metric grid, NaN where undefined.
fn per_pixel_errors(gt: &CameraSpec, est: &CameraSpec, stride: u32) -> Vec<u8> {
    let (pg, pe) = (gt.projector(), est.projector());
    let s = stride.max(1) as usize;
    let cols = (gt.width as usize).div_ceil(s);
    let rows = (gt.height as usize).div_ceil(s);
    let values: Vec<[f64; 2]> = (0..rows * cols)
        .into_par_iter()
        .map(|k| {
            let px = raycalib_core::Pixel::center((k % cols) * s, (k / cols) * s);
            let rg = pg.unproject(&px);
            let ae = match (&rg, pe.unproject(&px)) {
                (Ok(a), Ok(b)) => a.angle_to(&b).to_degrees(),
                _ => f64::NAN,
            };
            let re = rg
                .ok()
                .and_then(|r| pe.project(&r).ok())
                .map_or(f64::NAN, |q| q.distance(&px));
            [ae, re]
        })
        .collect();
    encode_aff1(cols as u32, rows as u32, &values)
}

pub fn convert(a: &ConvertArgs) -> Result<Option<String>> {
    let model = parse_model(&a.model)?;
    let src = read_spec(&a.spec)?;
    let res = convert_model_detailed(&src, model, a.fix_focal, a.stride)?;
    let ae = angular_error(&src, &res.spec, a.stride)?;
    let re = reproj_error(&src, &res.spec, a.stride)?;
    let out = json!({
        "spec": Intrinsics::from(&res.spec),
        "source": Intrinsics::from(&src),
        "fix_focal": a.fix_focal,
        "residual": {
            "ae_mean_deg": ae.mean,
            "re_mean_px": re.mean,
            "dropped": ae.dropped.max(re.dropped),
        },
        "gn_costs": res.gn_costs,
        "active_bounds": res.active_bounds.iter().map(Bound::from).collect::<Vec<_>>(),
    });
    emit(&Command::Convert(a.clone()), &[&a.spec], a.out.as_deref(), &[], to_text(&out))
}

fn fit_json(fit: &LensfunFit, entry: &LensfunEntry) -> serde_json::Value {
    json!({
        "model": "eucm",
        "dist": [fit.alpha, fit.beta],
        "alpha": fit.alpha,
        "beta": fit.beta,
        "focal_mm": fit.focal_mm,
        "residual_deg": fit.residual_deg,
        "used": fit.used,
        "dropped": fit.dropped,
        "projection": entry.projection.name(),
        "distortion": entry.distortion.name(),
    })
}

pub fn lensfun(a: &LensfunArgs) -> Result<Option<String>> {
    let value = match read_lensfun(&a.entry)? {
        LensfunInput::Single(entry) => fit_json(&lensfun_to_eucm(&entry, a.stride)?, &entry),
        LensfunInput::Database(entries) => {
            let selected: Vec<_> = entries
                .into_iter()
                .filter(|e| {
                    let name = match e {
                        Ok(n) => &n.lens,
                        Err((n, _)) => n,
                    };
                    a.lens.as_deref().is_none_or(|f| name.contains(f))
                })
                .collect();
            let lenses: Vec<serde_json::Value> = selected
                .par_iter()
                .map(|e| match e {
                    Ok(n) => match lensfun_to_eucm(&n.entry, a.stride) {
                        Ok(fit) => {
                            let mut v = fit_json(&fit, &n.entry);
                            v["lens"] = json!(n.lens);
                            v
                        }
                        Err(err) => json!({"lens": n.lens, "error": CliError::from(err).to_json()["error"]}),
                    },
                    Err((name, err)) => json!({"lens": name, "error": err.to_json()["error"]}),
                })
                .collect();
            json!({ "lenses": lenses })
        }
    };
    emit(&Command::Lensfun(a.clone()), &[&a.entry], a.out.as_deref(), &[], to_text(&value))
}

/// Reruns a recorded command. Directory commands write to `--out` or the
/// manifest's directory; file commands to `--out` or the recorded file next
/// to the manifest, with any per-pixel dump beside it.
pub fn rerun(a: &RerunArgs) -> Result<Option<String>> {
    let m = RunManifest::read(&a.manifest)?;
    let mut cmd: Command =
        serde_json::from_value(m.config.clone()).map_err(|e| CliError::parse(&a.manifest, e))?;
    let base = a
        .manifest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let file_out = || -> Result<PathBuf> {
        if let Some(out) = &a.out {
            return Ok(out.clone());
        }
        m.outputs
            .first()
            .map(|n| base.join(n))
            .ok_or_else(|| CliError::parse(&a.manifest, "no recorded output"))
    };
    match &mut cmd {
        Command::Synth(s) => s.out = a.out.clone().unwrap_or(base),
        Command::Eval(e) => e.out = Some(a.out.clone().unwrap_or(base)),
        Command::Fit(f) => {
            let out = file_out()?;
            f.dump_per_pixel = m.outputs.get(1).map(|d| out.with_file_name(d));
            f.out = Some(out);
        }
        Command::Convert(c) => c.out = Some(file_out()?),
        Command::Lensfun(l) => l.out = Some(file_out()?),
        Command::Rerun(_) => return Err(CliError::Usage("a manifest cannot record a rerun".into())),
    }
    run(&cmd)
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Synth(_) => "synth",
            Command::Eval(_) => "eval",
            Command::Convert(_) => "convert",
            Command::Lensfun(_) => "lensfun",
            Command::Rerun(_) => "rerun",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Synth(s) => Some(s.seed),
            Command::Fit(f) if f.ransac => Some(f.seed),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn edited_specs() {
        let spec = CameraSpec::centered(ModelId::PINHOLE, 100.0, vec![], 200, 200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let e = edit_spec(&spec, &mut rng).unwrap();
            let a = e.aspect();
            assert!((0.5 - 0.01..=2.0 + 0.01).contains(&a), "{e}");
            assert!(e.width >= 100 && e.cx >= 0.0 && e.cx <= e.width as f64, "{e}");
            assert!(e.cy >= 0.0 && e.cy <= e.height as f64, "{e}");
            assert!(e.is_valid());
        }
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn zero_padded_names() {
        assert_eq!(index_width(100), 4);
        assert_eq!(index_width(10_001), 5);
    }
}
