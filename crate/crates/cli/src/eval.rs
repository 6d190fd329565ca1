use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;

use pisa::eval::{evaluate_dataset, load_dataset, Aggregate, DatasetLayout};
use pisa::imaging::{load_rgb, save_gray_png};
use pisa::{detect, PisaError, RunConfig};

use crate::settings::{pool, Common};
use crate::{Failure, Outcome};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ablation {
    /// Four runs over the center and border priors.
    Priors,
    /// Full, color-only and structure-only runs.
    Features,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Dataset root.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory; each run gets its own subdirectory.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Image directory relative to the root.
    #[arg(long, default_value = ".")]
    pub image_dir: PathBuf,
    /// Mask directory relative to the root.
    #[arg(long, default_value = ".")]
    pub mask_dir: PathBuf,
    /// Appended to the image stem to find its mask.
    #[arg(long, default_value = ".png")]
    pub mask_suffix: String,
    /// Accepted image extensions.
    #[arg(long, value_delimiter = ',', default_value = "jpg,jpeg,bmp,ppm")]
    pub extensions: Vec<String>,
    #[arg(long)]
    pub ablate: Option<Ablation>,
    /// Also write every saliency map.
    #[arg(long)]
    pub save_maps: bool,
}

/// Named configurations one eval invocation runs.
fn plan(common: &Common, args: &EvalArgs, base: &RunConfig) -> Vec<(String, RunConfig)> {
    let arms: Vec<(String, RunConfig)> = match args.ablate {
        None => vec![("run".into(), base.clone())],
        Some(Ablation::Priors) => [(true, true), (true, false), (false, true), (false, false)]
            .into_iter()
            .map(|(cp, be)| {
                let name = match (cp, be) {
                    (true, true) => "cp+be",
                    (true, false) => "cp",
                    (false, true) => "be",
                    (false, false) => "none",
                };
                let cfg = RunConfig {
                    center_prior: cp,
                    boundary_prior: be,
                    ..base.clone()
                };
                (name.to_string(), cfg)
            })
            .collect(),
        Some(Ablation::Features) => [("sc+cc", true, true), ("cc", true, false), ("sc", false, true)]
            .into_iter()
            .map(|(name, cc, sc)| {
                let cfg = RunConfig {
                    color_contrast: cc,
                    structure_contrast: sc,
                    ..base.clone()
                };
                (name.to_string(), cfg)
            })
            .collect(),
    };
    let norms = common.normalizations(base);
    let mut runs = Vec::new();
    for (name, cfg) in arms {
        for &n in &norms {
            let label = if common.all_normalizations() {
                format!("{name}-{n}")
            } else {
                name.clone()
            };
            runs.push((
                label,
                RunConfig {
                    normalization: n,
                    ..cfg.clone()
                },
            ));
        }
    }
    runs
}

#[derive(Serialize)]
struct RunSummary<'a> {
    label: &'a str,
    config_hash: String,
    aggregate: &'a Aggregate,
}

pub fn run(common: &Common, args: &EvalArgs) -> Outcome {
    let base = common.resolve(None)?;
    let layout = DatasetLayout {
        image_dir: args.image_dir.clone(),
        mask_dir: args.mask_dir.clone(),
        image_extensions: args.extensions.iter().map(|e| e.to_ascii_lowercase()).collect(),
        mask_suffix: args.mask_suffix.clone(),
    };
    let entries = match load_dataset(&args.dataset, &layout) {
        Ok(e) => e,
        Err(e @ PisaError::EmptyDataset(_)) => return Err(Failure::Config(e.into())),
        Err(e) => return Err(e.into()),
    };
    let runs = plan(common, args, &base);
    let workers = pool(base.threads)?;
    let mut summaries = Vec::new();
    let mut any_failed = false;

    println!(
        "{:<16} {:>6} {:>8} {:>8} {:>8} {:>10}",
        "run", "images", "F0.3", "MAE", "AP", "ms/image"
    );
    for (label, cfg) in &runs {
        let dir = args.out.join(label);
        let maps_dir = dir.join("maps");
        fs::create_dir_all(if args.save_maps { &maps_dir } else { &dir })
            .with_context(|| format!("creating {}", dir.display()))?;
        let report = workers.install(|| {
            evaluate_dataset(label, &entries, |entry| {
                let img = load_rgb(&entry.image_path)?;
                let gray = detect(&img, cfg)?.saliency.to_gray();
                if args.save_maps {
                    save_gray_png(
                        maps_dir.join(format!("{}.png", entry.name)),
                        entry.width,
                        entry.height,
                        &gray,
                    )?;
                }
                Ok(gray)
            })
        });
        report.write_csv(dir.join("metrics.csv"))?;
        report.write_pr_csv(dir.join("pr.csv"))?;
        report.write_json(dir.join("report.json"))?;
        fs::write(dir.join("config.txt"), cfg.to_text())?;
        let a = &report.aggregate;
        println!(
            "{:<16} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>10.1}",
            label, a.images, a.mean_f_measure, a.mean_mae, a.average_precision, a.mean_millis
        );
        any_failed |= !report.failures.is_empty();
        summaries.push((label.clone(), cfg.hash(), report.aggregate));
    }
    let rows: Vec<RunSummary> = summaries
        .iter()
        .map(|(label, hash, aggregate)| RunSummary {
            label,
            config_hash: hash.clone(),
            aggregate,
        })
        .collect();
    let path = args.out.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&rows)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(if any_failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
