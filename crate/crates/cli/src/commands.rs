use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use forensic_eval::cleanse::{cleanse_dataset, DEFAULT_RESIZE, DEFAULT_THRESHOLD};
use forensic_eval::corpus::{load_manifest, Label, Manifest, SampleRecord};
use forensic_eval::metrics::{
    evaluate_pixel, load_scores, AggregateMode, ImageReport, Metric, PixelOptions, PixelReport, SizePolicy,
};
use forensic_eval::robustness::{perturb_corpus, PerturbKind, PerturbSpec, RobustnessCurve};
use forensic_eval::synth::{
    build_duplicate_corpus, build_test_corpus, TamperKind, TamperSpec, DEFAULT_AREA_RANGE, PREDICTION_SETS,
};
use forensic_eval::Workers;

use crate::config::{Dims, Layer};
use crate::{Cli, CliError, Command, EvalCommand, ManifestCommand};

type CliResult<T> = Result<T, CliError>;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Provenance block embedded in every report.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub run: RunInfo,
    pub report: T,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut layer = Layer::from_option(cli.config.as_deref())?;
    match cli.command {
        Command::Manifest(ManifestCommand::Build(a)) => {
            let dir: PathBuf = layer.require("dir", a.dir)?;
            let dataset: Option<String> = layer.pick("dataset", a.dataset)?;
            layer.finish()?;
            manifest_build(&dir, dataset, &a.out)
        }
        Command::Manifest(ManifestCommand::Validate(a)) => {
            let path: PathBuf = layer.require("manifest", a.manifest)?;
            layer.finish()?;
            manifest_validate(&path)
        }
        Command::Eval(EvalCommand::Pixel(a)) => {
            let manifest: PathBuf = layer.require("manifest", a.manifest)?;
            let preds: PathBuf = layer.require("preds", a.preds)?;
            let d = PixelOptions::default();
            let aggregate = layer.pick("aggregate", a.aggregate)?;
            let size_policy = layer.pick("size_policy", a.size_policy)?;
            let variants: Vec<String> = layer.pick_or("variants", a.variants, Vec::new())?;
            let opts = PixelOptions {
                threshold: layer.pick_or("threshold", a.threshold, d.threshold)?,
                mask_threshold: layer.pick_or("mask_threshold", a.mask_threshold, d.mask_threshold)?,
                aggregate: aggregate.map_or(Ok(d.aggregate), |s: String| {
                    parse_enum::<AggregateMode>("aggregate", &s)
                })?,
                size_policy: size_policy.map_or(Ok(d.size_policy), |s: String| {
                    parse_enum::<SizePolicy>("size-policy", &s)
                })?,
                invert_gt: layer.pick_or("invert_gt", a.invert_gt.then_some(true), false)?,
                invert_pred: layer.pick_or("invert_pred", a.invert_pred.then_some(true), false)?,
                variants: parse_metrics(&variants)?,
            };
            let workers = resolve_workers(&mut layer, cli.workers)?;
            layer.finish()?;
            usage(opts.validate())?;
            eval_pixel(&manifest, &preds, &opts, &a.out, workers)
        }
        Command::Eval(EvalCommand::Image(a)) => {
            let manifest: PathBuf = layer.require("manifest", a.manifest)?;
            let scores: PathBuf = layer.require("scores", a.scores)?;
            let threshold = layer.pick_or("threshold", a.threshold, 0.5)?;
            let _ = resolve_workers(&mut layer, cli.workers)?;
            layer.finish()?;
            eval_image(&manifest, &scores, threshold, &a.out)
        }
        Command::Perturb(a) => {
            let manifest: PathBuf = layer.require("manifest", a.manifest)?;
            let kind: String = layer.require("kind", a.kind)?;
            let kind = PerturbKind::parse(&kind)
                .ok_or_else(|| CliError::Usage(format!("unknown perturbation kind {kind:?} (blur, noise, jpeg)")))?;
            let levels = layer.pick_or("levels", a.levels, kind.default_levels())?;
            let seed = layer.require("seed", a.seed)?;
            let workers = resolve_workers(&mut layer, cli.workers)?;
            layer.finish()?;
            perturb(&manifest, usage(PerturbSpec::new(kind, levels, seed))?, &a.out, workers)
        }
        Command::Cleanse(a) => {
            let manifest: PathBuf = layer.require("manifest", a.manifest)?;
            let threshold = layer.pick_or("threshold", a.threshold, DEFAULT_THRESHOLD)?;
            let resize = layer.pick_or("resize", a.resize, Dims(DEFAULT_RESIZE.0, DEFAULT_RESIZE.1))?;
            let workers = resolve_workers(&mut layer, cli.workers)?;
            layer.finish()?;
            cleanse(&manifest, threshold, resize, &a.out, workers)
        }
        Command::Synth(a) => {
            let count = layer.pick_or("count", a.count, 20usize)?;
            let size = layer.pick_or("size", a.size, Dims(256, 256))?;
            let kind: String = layer.pick_or("kind", a.kind, "copy_move".to_string())?;
            let kind = TamperKind::parse(&kind)
                .ok_or_else(|| CliError::Usage(format!("unknown tamper kind {kind:?} (copy-move, inpaint)")))?;
            let range = layer.pick_or(
                "area_range",
                a.area_range,
                vec![DEFAULT_AREA_RANGE.0, DEFAULT_AREA_RANGE.1],
            )?;
            let [lo, hi] = range[..] else {
                return Err(CliError::Usage("--area-range takes exactly two values: lo,hi".into()));
            };
            let seed = layer.require("seed", a.seed)?;
            let duplicates: Option<usize> = layer.pick("duplicates", a.duplicates)?;
            let workers = resolve_workers(&mut layer, cli.workers)?;
            layer.finish()?;
            let spec = usage(TamperSpec::new(kind, (lo, hi), seed))?;
            synth(count, size, spec, duplicates, &a.out, workers)
        }
        Command::Report(a) => {
            let reports: Vec<PathBuf> = layer.require("reports", a.reports)?;
            let kind: String = layer.require("kind", a.kind)?;
            let kind = PerturbKind::parse(&kind)
                .ok_or_else(|| CliError::Usage(format!("unknown perturbation kind {kind:?} (blur, noise, jpeg)")))?;
            let levels: Vec<f64> = layer.require("levels", a.levels)?;
            let metrics: Vec<String> = layer.pick_or("metrics", a.metrics, vec!["f1".to_string()])?;
            layer.finish()?;
            report(&reports, kind, &levels, &parse_metrics(&metrics)?, &a.out)
        }
    }
}

fn resolve_workers(layer: &mut Layer, cli: Option<usize>) -> CliResult<Workers> {
    match layer.pick::<usize>("workers", cli)? {
        Some(n) => Workers::new(n).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(Workers::available()),
    }
}

/// Option validation failures are usage errors, not data errors.
fn usage<T>(r: forensic_eval::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_enum<T: serde::de::DeserializeOwned>(flag: &str, s: &str) -> CliResult<T> {
    serde_json::from_value(Value::String(s.trim().to_ascii_lowercase().replace('-', "_")))
        .map_err(|_| CliError::Usage(format!("invalid --{flag} value {s:?}")))
}

fn parse_metrics(names: &[String]) -> CliResult<Vec<Metric>> {
    names
        .iter()
        .filter(|n| !n.trim().is_empty())
        .map(|n| Metric::parse(n).ok_or_else(|| CliError::Usage(format!("unknown metric {n:?}"))))
        .collect()
}

fn digest(path: &Path) -> CliResult<InputDigest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex(&Sha256::digest(&bytes)),
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn run_info(command: &str, config: Value, inputs: Vec<InputDigest>) -> RunInfo {
    RunInfo {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config,
        inputs,
    }
}

fn create_out(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", out.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_file(path, text)
}

fn absolute(p: &Path) -> CliResult<PathBuf> {
    std::path::absolute(p).map_err(|e| CliError::Internal(format!("cannot resolve {}: {e}", p.display())))
}

/// Path of `target` relative to directory `base`, with `/` separators.
fn relative_to(target: &Path, base: &Path) -> CliResult<PathBuf> {
    let (t, b) = (absolute(target)?, absolute(base)?);
    Ok(pathdiff::diff_paths(&t, &b).unwrap_or(t))
}

/// Rewrites every sample path so the manifest can live in `dir`.
fn relocate(manifest: &Manifest, dir: &Path) -> CliResult<Manifest> {
    let samples = manifest
        .samples
        .iter()
        .map(|s| {
            Ok(SampleRecord {
                id: s.id.clone(),
                image_path: relative_to(&manifest.resolve(&s.image_path), dir)?,
                mask_path: s
                    .mask_path
                    .as_ref()
                    .map(|m| relative_to(&manifest.resolve(m), dir))
                    .transpose()?,
                label: s.label,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Manifest::new(manifest.dataset_name.clone(), samples, dir)?)
}

/// Image files of `dir` keyed by stem; non-image entries are ignored.
fn scan_images(dir: &Path) -> CliResult<BTreeMap<String, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Data(format!("cannot read {}: {e}", dir.display())))?;
    let mut found = BTreeMap::new();
    let mut clashes = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", dir.display())))?
            .path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if !path.is_file() || !is_image {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
            continue;
        };
        if let Some(prev) = found.insert(stem.clone(), path.clone()) {
            clashes.push(format!(
                "{} and {} share the stem {stem:?}",
                prev.display(),
                path.display()
            ));
        }
    }
    if !clashes.is_empty() {
        clashes.sort();
        return Err(CliError::Data(clashes.join("; ")));
    }
    Ok(found)
}

fn manifest_build(dir: &Path, dataset: Option<String>, out: &Path) -> CliResult<()> {
    let images = scan_images(&dir.join("images"))?;
    let mask_dir = dir.join("masks");
    let masks = if mask_dir.is_dir() {
        scan_images(&mask_dir)?
    } else {
        BTreeMap::new()
    };
    let orphans: Vec<String> = masks
        .iter()
        .filter(|(stem, _)| !images.contains_key(*stem))
        .map(|(_, p)| format!("orphan mask {} has no matching image", p.display()))
        .collect();
    if !orphans.is_empty() {
        return Err(CliError::Data(orphans.join("; ")));
    }
    if images.is_empty() {
        return Err(CliError::Data(format!(
            "no images found in {}",
            dir.join("images").display()
        )));
    }
    create_out(out)?;
    let samples = images
        .iter()
        .map(|(stem, img)| {
            let mask = masks.get(stem);
            Ok(SampleRecord {
                id: stem.clone(),
                image_path: relative_to(img, out)?,
                mask_path: mask.map(|m| relative_to(m, out)).transpose()?,
                label: if mask.is_some() {
                    Label::Manipulated
                } else {
                    Label::Authentic
                },
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let name = dataset.unwrap_or_else(|| {
        absolute(dir)
            .ok()
            .and_then(|d| d.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "dataset".to_string())
    });
    let manifest = Manifest::new(name, samples, out)?;
    let path = out.join("manifest.json");
    write_file(&path, manifest.to_json())?;
    println!(
        "wrote {} samples ({} manipulated) to {}",
        manifest.len(),
        manifest.manipulated().count(),
        path.display()
    );
    Ok(())
}

fn manifest_validate(path: &Path) -> CliResult<()> {
    let manifest = load_manifest(path)?;
    let mut problems = Vec::new();
    for s in &manifest.samples {
        for p in std::iter::once(&s.image_path).chain(&s.mask_path) {
            if !manifest.resolve(p).is_file() {
                problems.push(format!("sample {:?}: missing file {}", s.id, p.display()));
            }
        }
    }
    if !problems.is_empty() {
        for p in &problems {
            eprintln!("{p}");
        }
        return Err(CliError::Data(format!(
            "{} problem(s) in {}",
            problems.len(),
            path.display()
        )));
    }
    println!(
        "ok: {} samples ({} manipulated) in {:?}",
        manifest.len(),
        manifest.manipulated().count(),
        manifest.dataset_name
    );
    Ok(())
}

fn eval_pixel(manifest_path: &Path, preds: &Path, opts: &PixelOptions, out: &Path, workers: Workers) -> CliResult<()> {
    let manifest = load_manifest(manifest_path)?;
    let report = evaluate_pixel(&manifest, preds, opts, workers)?;
    let config = json!({
        "manifest": manifest_path,
        "preds": preds,
        "options": opts,
    });
    create_out(out)?;
    let envelope = Envelope {
        run: run_info("eval pixel", config, vec![digest(manifest_path)?]),
        report,
    };
    write_json(&out.join("pixel_report.json"), &envelope)?;
    write_file(&out.join("pixel_per_sample.csv"), envelope.report.to_csv())?;
    print!("{}", envelope.report.summary_table());
    Ok(())
}

fn eval_image(manifest_path: &Path, scores: &Path, threshold: f64, out: &Path) -> CliResult<()> {
    let manifest = load_manifest(manifest_path)?;
    let records = load_scores(scores, &manifest)?;
    let report = ImageReport::new(&manifest.dataset_name, &records, threshold)?;
    let config = json!({ "manifest": manifest_path, "scores": scores, "threshold": threshold });
    create_out(out)?;
    let envelope = Envelope {
        run: run_info("eval image", config, vec![digest(manifest_path)?, digest(scores)?]),
        report,
    };
    write_json(&out.join("image_report.json"), &envelope)?;
    write_file(&out.join("image_report.csv"), envelope.report.to_csv())?;
    print!("{}", envelope.report.summary_table());
    Ok(())
}

fn perturb(manifest_path: &Path, spec: PerturbSpec, out: &Path, workers: Workers) -> CliResult<()> {
    let manifest = load_manifest(manifest_path)?;
    create_out(out)?;
    let files = perturb_corpus(&manifest, &spec, out, workers)?;

    // one manifest per level: perturbed images, original masks
    for (i, _) in spec.levels.iter().enumerate() {
        let level_dir = out.join(spec.kind.name()).join(spec.level_name(i));
        let mut moved = relocate(&manifest, &level_dir)?;
        for s in &mut moved.samples {
            s.image_path = PathBuf::from(format!("{}.png", s.id));
        }
        write_file(&level_dir.join("manifest.json"), moved.to_json())?;
    }

    let listing: Vec<Value> = files
        .iter()
        .map(|f| {
            Ok(json!({
                "id": f.id,
                "level": f.level,
                "path": relative_to(&f.path, out)?,
            }))
        })
        .collect::<CliResult<_>>()?;
    let config = json!({ "manifest": manifest_path, "spec": spec });
    let envelope = Envelope {
        run: run_info("perturb", config, vec![digest(manifest_path)?]),
        report: json!({ "kind": spec.kind, "levels": spec.levels, "files": listing }),
    };
    write_json(&out.join("perturb_report.json"), &envelope)?;
    println!(
        "wrote {} images for {} level(s) of {} under {}",
        files.len(),
        spec.levels.len(),
        spec.kind,
        out.display()
    );
    Ok(())
}

fn cleanse(manifest_path: &Path, threshold: f64, resize: Dims, out: &Path, workers: Workers) -> CliResult<()> {
    let manifest = load_manifest(manifest_path)?;
    let outcome = cleanse_dataset(&manifest, threshold, (resize.0, resize.1), workers)?;
    create_out(out)?;
    let cleansed = relocate(&outcome.manifest, out)?;
    write_file(&out.join("manifest.json"), cleansed.to_json())?;
    write_file(&out.join("similarity.csv"), outcome.matrix.to_csv())?;
    let config = json!({ "manifest": manifest_path, "threshold": threshold, "resize": resize });
    let r = &outcome.report;
    println!(
        "kept {} of {} manipulated samples ({} groups); {} authentic passed through",
        r.kept_manipulated,
        r.input_manipulated,
        r.components.len(),
        r.authentic_passed_through
    );
    let envelope = Envelope {
        run: run_info("cleanse", config, vec![digest(manifest_path)?]),
        report: outcome.report,
    };
    write_json(&out.join("groups.json"), &envelope)
}

fn synth(
    count: usize,
    size: Dims,
    spec: TamperSpec,
    duplicates: Option<usize>,
    out: &Path,
    workers: Workers,
) -> CliResult<()> {
    create_out(out)?;
    let manifest = match duplicates {
        Some(copies) => build_duplicate_corpus(copies, count, (size.0, size.1), spec.seed, out)?,
        None => build_test_corpus(count, (size.0, size.1), &spec, out, workers)?,
    };
    let config = json!({ "count": count, "size": size, "spec": spec, "duplicates": duplicates });
    let prediction_sets: &[&str] = if duplicates.is_some() { &[] } else { &PREDICTION_SETS };
    let envelope = Envelope {
        run: run_info("synth", config, Vec::new()),
        report: json!({
            "dataset": manifest.dataset_name,
            "samples": manifest.len(),
            "ids": manifest.samples.iter().map(|s| &s.id).collect::<Vec<_>>(),
            "prediction_sets": prediction_sets,
        }),
    };
    write_json(&out.join("synth_report.json"), &envelope)?;
    println!("wrote {} samples to {}", manifest.len(), out.display());
    Ok(())
}

fn report(paths: &[PathBuf], kind: PerturbKind, levels: &[f64], metrics: &[Metric], out: &Path) -> CliResult<()> {
    if paths.len() != levels.len() {
        return Err(CliError::Usage(format!(
            "{} reports but {} levels",
            paths.len(),
            levels.len()
        )));
    }
    let mut reports = Vec::with_capacity(paths.len());
    let mut inputs = Vec::with_capacity(paths.len());
    for p in paths {
        let text =
            std::fs::read_to_string(p).map_err(|e| CliError::Data(format!("cannot read {}: {e}", p.display())))?;
        let envelope: Envelope<PixelReport> = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{} is not a pixel report: {e}", p.display())))?;
        reports.push(envelope.report);
        inputs.push(digest(p)?);
    }
    let curve = RobustnessCurve::from_reports(kind, levels, &reports)?;
    let csv = curve.to_csv(metrics);
    create_out(out)?;
    write_file(&out.join("robustness_curve.csv"), &csv)?;
    let config = json!({ "reports": paths, "kind": kind, "levels": levels, "metrics": metrics });
    write_json(
        &out.join("robustness_curve.json"),
        &Envelope {
            run: run_info("report", config, inputs),
            report: curve,
        },
    )?;
    print!("{csv}");
    Ok(())
}
