use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use log::{error, info};
use rayon::prelude::*;
use serde::Serialize;

use pisa::imaging::{load_rgb, save_gray_png};
use pisa::{detect, Detection, RunConfig};

use crate::settings::{pool, Common};
use crate::Outcome;

#[derive(Serialize)]
struct ManifestEntry {
    input: PathBuf,
    output: Option<PathBuf>,
    width: usize,
    height: usize,
    millis: f64,
    stages: BTreeMap<&'static str, f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    variant: String,
    config_hash: String,
    seed: u64,
    config: &'a RunConfig,
    images: Vec<ManifestEntry>,
}

fn millis(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Output name for the `i`-th input; repeated stems get their index appended.
fn output_name(inputs: &[PathBuf], i: usize) -> String {
    let stem = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let mine = stem(&inputs[i]);
    let clash = inputs.iter().enumerate().any(|(j, p)| j != i && stem(p) == mine);
    if clash {
        format!("{mine}-{i}.png")
    } else {
        format!("{mine}.png")
    }
}

fn detect_one(path: &Path, cfg: &RunConfig) -> pisa::Result<Detection> {
    let img = load_rgb(path)?;
    detect(&img, cfg)
}

pub fn run(common: &Common, out: &Path, inputs: &[PathBuf]) -> Outcome {
    let cfg = common.resolve(None)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let results: Vec<ManifestEntry> = pool(cfg.threads)?.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, input)| {
                let target = out.join(output_name(inputs, i));
                let saved = detect_one(input, &cfg).and_then(|d| {
                    save_gray_png(&target, d.width, d.height, &d.saliency.to_gray())?;
                    Ok(d)
                });
                match saved {
                    Ok(d) => {
                        info!("{} -> {}", input.display(), target.display());
                        ManifestEntry {
                            input: input.clone(),
                            output: Some(target),
                            width: d.width,
                            height: d.height,
                            millis: millis(d.timings.total),
                            stages: d.timings.stages.iter().map(|&(s, t)| (s, millis(t))).collect(),
                            error: None,
                        }
                    }
                    Err(e) => {
                        error!("{}: {e}", input.display());
                        ManifestEntry {
                            input: input.clone(),
                            output: None,
                            width: 0,
                            height: 0,
                            millis: 0.0,
                            stages: BTreeMap::new(),
                            error: Some(e.to_string()),
                        }
                    }
                }
            })
            .collect()
    });
    let failed = results.iter().filter(|e| e.error.is_some()).count();
    let manifest = Manifest {
        variant: cfg.variant.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        config: &cfg,
        images: results,
    };
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    println!(
        "{} of {} images written to {}",
        inputs.len() - failed,
        inputs.len(),
        out.display()
    );
    Ok(if failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
