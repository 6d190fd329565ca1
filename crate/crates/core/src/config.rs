//! Run configuration and its flat `key = value` text form.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PisaError, Result};
use crate::features::ClusterParams;
use crate::prior::SpatialPriorParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Full-resolution labeling.
    Pisa,
    /// Labeling on one pixel per 3x3 tile followed by upsampling.
    Fpisa,
}

/// Map from raw confidence to discrete levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Sigmoid,
    MaxMin,
    Log,
    Exp,
}

impl Normalization {
    pub const ALL: [Normalization; 4] = [
        Normalization::Sigmoid,
        Normalization::MaxMin,
        Normalization::Log,
        Normalization::Exp,
    ];
}

/// How sparse labels are spread back to full resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Upsampling {
    /// Weighted sum divided by the weight total.
    Normalized,
    /// Weighted sum divided by the number of contributors.
    Literal,
}

macro_rules! text_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = PisaError;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($name => Ok($variant),)+
                    other => Err(PisaError::Config(format!(
                        "unknown {} '{}'", stringify!($ty), other
                    ))),
                }
            }
        }
    };
}

text_enum!(Variant { Variant::Pisa => "pisa", Variant::Fpisa => "fpisa" });
text_enum!(Normalization {
    Normalization::Sigmoid => "sigmoid",
    Normalization::MaxMin => "max-min",
    Normalization::Log => "log",
    Normalization::Exp => "exp",
});
text_enum!(Upsampling { Upsampling::Normalized => "normalized", Upsampling::Literal => "literal" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub variant: Variant,
    /// Color tolerance of the cross arms, 0-255.
    pub tau: u8,
    /// Maximum arm length in pixels.
    pub max_arm: usize,
    /// Number of saliency levels.
    pub levels: usize,
    pub lambda: f64,
    pub kappa: f64,
    pub cutoff: f64,
    /// Listed with the other prior constants but not consumed by any stage.
    pub delta: f64,
    pub border_width: usize,
    /// Upsampling length scale in pixels; `None` means 0.1 x half-diagonal.
    pub sigma: Option<f64>,
    pub upsampling: Upsampling,
    /// Weight of the anchor-color term in the color clustering distance.
    pub gamma: f64,
    pub k0_color: usize,
    pub k0_om: usize,
    pub coverage: f64,
    pub normalization: Normalization,
    pub color_contrast: bool,
    pub structure_contrast: bool,
    pub center_prior: bool,
    pub boundary_prior: bool,
    pub seed: u64,
    /// Worker threads for batch commands; 0 uses the runtime default.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::pisa()
    }
}

impl RunConfig {
    pub fn pisa() -> Self {
        Self {
            variant: Variant::Pisa,
            tau: 60,
            max_arm: 10,
            levels: 24,
            lambda: 2.5e4,
            kappa: 0.006,
            cutoff: 30.0,
            delta: 0.001,
            border_width: 10,
            sigma: None,
            upsampling: Upsampling::Normalized,
            gamma: 0.5,
            k0_color: 256,
            k0_om: 64,
            coverage: 0.95,
            normalization: Normalization::Sigmoid,
            color_contrast: true,
            structure_contrast: true,
            center_prior: true,
            boundary_prior: true,
            seed: 0,
            threads: 0,
        }
    }

    pub fn fpisa() -> Self {
        Self {
            variant: Variant::Fpisa,
            tau: 50,
            max_arm: 5,
            lambda: 2e3,
            kappa: 0.035,
            ..Self::pisa()
        }
    }

    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::Pisa => Self::pisa(),
            Variant::Fpisa => Self::fpisa(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(PisaError::Config(msg));
        if self.levels < 2 || self.levels > u16::MAX as usize {
            return fail(format!("levels must be in 2..=65535, got {}", self.levels));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("kappa", self.kappa),
            ("cutoff", self.cutoff),
            ("gamma", self.gamma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return fail(format!("sigma must be positive, got {s}"));
            }
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return fail(format!("coverage must be in (0, 1], got {}", self.coverage));
        }
        if self.k0_color == 0 || self.k0_om == 0 {
            return fail("initial cluster counts must be at least 1".into());
        }
        if !self.color_contrast && !self.structure_contrast {
            return fail("at least one of color_contrast / structure_contrast must be enabled".into());
        }
        Ok(())
    }

    pub fn prior_params(&self) -> SpatialPriorParams {
        SpatialPriorParams {
            lambda: self.lambda,
            kappa: self.kappa,
            cutoff: self.cutoff,
            border_width: self.border_width,
            center_preference: self.center_prior,
            boundary_exclusion: self.boundary_prior,
        }
    }

    pub fn color_cluster_params(&self) -> ClusterParams {
        ClusterParams {
            initial_clusters: self.k0_color,
            coverage: self.coverage,
            color_weight: self.gamma,
            seed: self.seed,
            ..ClusterParams::default()
        }
    }

    pub fn om_cluster_params(&self) -> ClusterParams {
        ClusterParams {
            initial_clusters: self.k0_om,
            coverage: self.coverage,
            color_weight: 0.0,
            seed: self.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
            ..ClusterParams::default()
        }
    }

    /// Upsampling length scale for an image of the given size.
    pub fn sigma_for(&self, width: usize, height: usize) -> f64 {
        self.sigma.unwrap_or_else(|| {
            let cx = (width as f64 - 1.0) / 2.0;
            let cy = (height as f64 - 1.0) / 2.0;
            (0.1 * cx.hypot(cy)).max(f64::MIN_POSITIVE)
        })
    }

    pub fn to_text(&self) -> String {
        let sigma = self.sigma.map_or_else(|| "auto".to_string(), |s| s.to_string());
        let rows: [(&str, String); 23] = [
            ("variant", self.variant.to_string()),
            ("tau", self.tau.to_string()),
            ("max_arm", self.max_arm.to_string()),
            ("levels", self.levels.to_string()),
            ("lambda", self.lambda.to_string()),
            ("kappa", self.kappa.to_string()),
            ("cutoff", self.cutoff.to_string()),
            ("delta", self.delta.to_string()),
            ("border_width", self.border_width.to_string()),
            ("sigma", sigma),
            ("upsampling", self.upsampling.to_string()),
            ("gamma", self.gamma.to_string()),
            ("k0_color", self.k0_color.to_string()),
            ("k0_om", self.k0_om.to_string()),
            ("coverage", self.coverage.to_string()),
            ("normalization", self.normalization.to_string()),
            ("color_contrast", self.color_contrast.to_string()),
            ("structure_contrast", self.structure_contrast.to_string()),
            ("center_prior", self.center_prior.to_string()),
            ("boundary_prior", self.boundary_prior.to_string()),
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
            ("format", "1".to_string()),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Parses the text form. Keys missing from the text keep the defaults of the
    /// declared variant; unknown keys are rejected.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(PisaError::Config(format!("line {}: expected key = value", lineno + 1)));
            };
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(PisaError::Config(format!("duplicate key '{key}'")));
            }
        }
        let variant = match entries.get("variant") {
            Some(v) => v.parse()?,
            None => Variant::Pisa,
        };
        let mut cfg = Self::for_variant(variant);
        for (key, value) in &entries {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PisaError::io(path, e))?;
        Self::from_text(&text)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| PisaError::Config(format!("invalid value '{value}' for {key}")))
        }
        match key {
            "variant" => self.variant = value.parse()?,
            "tau" => self.tau = parse(key, value)?,
            "max_arm" => self.max_arm = parse(key, value)?,
            "levels" => self.levels = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "cutoff" => self.cutoff = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "border_width" => self.border_width = parse(key, value)?,
            "sigma" => {
                self.sigma = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "upsampling" => self.upsampling = value.parse()?,
            "gamma" => self.gamma = parse(key, value)?,
            "k0_color" => self.k0_color = parse(key, value)?,
            "k0_om" => self.k0_om = parse(key, value)?,
            "coverage" => self.coverage = parse(key, value)?,
            "normalization" => self.normalization = value.parse()?,
            "color_contrast" => self.color_contrast = parse(key, value)?,
            "structure_contrast" => self.structure_contrast = parse(key, value)?,
            "center_prior" => self.center_prior = parse(key, value)?,
            "boundary_prior" => self.boundary_prior = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "format" => {
                if value != "1" {
                    return Err(PisaError::Config(format!("unsupported config format {value}")));
                }
            }
            other => return Err(PisaError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Hex SHA-256 of the text form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
