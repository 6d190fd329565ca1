use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args;
use pisa::{Normalization, RunConfig, Variant};

use crate::Failure;

/// Options shared by every subcommand. Flags override the config file.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Config file of `key = value` lines.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Detector variant.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// sigmoid, max-min, log or exp; `all` makes eval run each in turn.
    #[arg(long)]
    pub normalization: Option<String>,
    /// Disable the structure (orientation/magnitude) cue.
    #[arg(long)]
    pub no_sc: bool,
    /// Disable the color cue.
    #[arg(long)]
    pub no_cc: bool,
    /// Disable the center-preference prior.
    #[arg(long)]
    pub no_center: bool,
    /// Disable the boundary-exclusion prior.
    #[arg(long)]
    pub no_boundary: bool,
    /// Seed of the clustering initialization.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads; 0 uses one per core.
    #[arg(short = 'j', long, env = "PISA_THREADS")]
    pub threads: Option<usize>,
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

impl Common {
    /// Resolves the run configuration. With `force` set, the config file is used only
    /// if it declares that variant; otherwise that variant's defaults are the base.
    pub fn resolve(&self, force: Option<Variant>) -> Result<RunConfig, Failure> {
        let file = match &self.config {
            Some(path) => Some(
                RunConfig::load(path)
                    .with_context(|| format!("reading config {}", path.display()))
                    .map_err(config_err)?,
            ),
            None => None,
        };
        let variant = force.or(self.variant);
        let mut cfg = match (file, variant) {
            (Some(f), None) => f,
            (Some(f), Some(v)) if f.variant == v => f,
            (Some(mut f), Some(v)) if force.is_none() => {
                f.variant = v;
                f
            }
            (_, Some(v)) => RunConfig::for_variant(v),
            (None, None) => RunConfig::pisa(),
        };
        if let Some(n) = &self.normalization {
            if n != "all" {
                cfg.normalization = n.parse().map_err(config_err)?;
            }
        }
        if self.no_sc {
            cfg.structure_contrast = false;
        }
        if self.no_cc {
            cfg.color_contrast = false;
        }
        if self.no_center {
            cfg.center_prior = false;
        }
        if self.no_boundary {
            cfg.boundary_prior = false;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| config_err(anyhow!("--set expects KEY=VALUE, got '{kv}'")))?;
            cfg.set(k.trim(), v.trim()).map_err(config_err)?;
        }
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }

    /// Normalization methods requested with `--normalization`, if `all`.
    pub fn all_normalizations(&self) -> bool {
        self.normalization.as_deref() == Some("all")
    }

    /// Default variant normalization list for one run.
    pub fn normalizations(&self, cfg: &RunConfig) -> Vec<Normalization> {
        if self.all_normalizations() {
            Normalization::ALL.to_vec()
        } else {
            vec![cfg.normalization]
        }
    }
}

/// Rayon pool for image-level parallelism.
pub fn pool(threads: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")
}
