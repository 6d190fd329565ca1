use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use pisa::imaging::load_rgb;
use pisa::{detect, RgbImage, Variant};

use crate::settings::Common;
use crate::{Failure, Outcome};

type Partial<T> = Result<T, Failure>;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Timed runs per image and variant.
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    /// Also write the table as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Serialize, Default)]
struct VariantTiming {
    variant: String,
    runs: usize,
    mean_ms: f64,
    stages_ms: Vec<(String, f64)>,
}

#[derive(Serialize)]
struct BenchReport {
    images: usize,
    pisa: VariantTiming,
    fpisa: VariantTiming,
    ratio: f64,
}

fn time_variant(common: &Common, variant: Variant, images: &[RgbImage], repeat: usize) -> Partial<VariantTiming> {
    let cfg = common.resolve(Some(variant))?;
    let mut total = Duration::ZERO;
    let mut stages: Vec<(&'static str, Duration)> = Vec::new();
    let mut runs = 0;
    for img in images {
        // Untimed warm-up.
        detect(img, &cfg)?;
        for _ in 0..repeat {
            let d = detect(img, &cfg)?;
            total += d.timings.total;
            for &(name, t) in &d.timings.stages {
                match stages.iter_mut().find(|(s, _)| *s == name) {
                    Some((_, acc)) => *acc += t,
                    None => stages.push((name, t)),
                }
            }
            runs += 1;
        }
    }
    let per = |d: Duration| d.as_secs_f64() * 1e3 / runs.max(1) as f64;
    Ok(VariantTiming {
        variant: variant.to_string(),
        runs,
        mean_ms: per(total),
        stages_ms: stages.iter().map(|&(s, d)| (s.to_string(), per(d))).collect(),
    })
}

fn print_timing(t: &VariantTiming) {
    println!("{} ({} runs)", t.variant, t.runs);
    for (s, ms) in &t.stages_ms {
        println!("  {s:<20} {ms:>10.2} ms");
    }
    let covered: f64 = t.stages_ms.iter().map(|(_, ms)| ms).sum();
    println!(
        "  {:<20} {:>10.2} ms (stages {:.1}%)",
        "total",
        t.mean_ms,
        100.0 * covered / t.mean_ms.max(1e-12)
    );
}

pub fn run(common: &Common, args: &BenchArgs) -> Outcome {
    let images = args
        .inputs
        .iter()
        .map(|p| load_rgb(p).with_context(|| format!("loading {}", p.display())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let repeat = args.repeat.max(1);
    let pisa = time_variant(common, Variant::Pisa, &images, repeat)?;
    let fpisa = time_variant(common, Variant::Fpisa, &images, repeat)?;
    let ratio = pisa.mean_ms / fpisa.mean_ms.max(1e-12);
    print_timing(&pisa);
    print_timing(&fpisa);
    println!("pisa / fpisa = {ratio:.2}x (reference 0.620 s / 0.044 s = 14.1x)");
    if let Some(path) = &args.json {
        let report = BenchReport {
            images: images.len(),
            pisa,
            fpisa,
            ratio,
        };
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}
