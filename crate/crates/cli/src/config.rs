//! The declarative run configuration and its command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use pinpoint_core::FusionMode;
use pinpoint_pipeline::backends::{
    LabelerNoise, RemoteConfig, ENV_SAM_URL, ENV_TOKEN, ENV_VLM_URL,
};
use pinpoint_pipeline::bench::OracleProvider;
use pinpoint_pipeline::{Allowlist, PipelineConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Ground-truth oracles and the region-growing segmenter.
    #[default]
    Oracle,
    /// HTTP generation and segmentation servers.
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fusion {
    Mult,
    Msm,
    LinearDiagnostic,
}

impl From<Fusion> for FusionMode {
    fn from(f: Fusion) -> Self {
        match f {
            Fusion::Mult => FusionMode::Mult,
            Fusion::Msm => FusionMode::Msm,
            Fusion::LinearDiagnostic => FusionMode::LinearDiagnostic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteSection {
    pub vlm: RemoteConfig,
    pub sam: RemoteConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DumpFlags {
    /// Cue maps and the consensus map as grayscale PNGs.
    pub cues: bool,
    /// The input image with boxes and points drawn on it.
    pub overlays: bool,
}

/// Everything a command needs; unset keys take the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub jobs: usize,
    pub pipeline: PipelineConfig,
    pub oracle: OracleProvider,
    pub remote: RemoteSection,
    pub dump: DumpFlags,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Oracle,
            seed: 0,
            output_dir: PathBuf::from("pinpoint-out"),
            jobs: 1,
            pipeline: PipelineConfig::default(),
            oracle: OracleProvider::default(),
            remote: RemoteSection::default(),
            dump: DumpFlags::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Loads `--config` if given, applies flag overrides and environment
    /// fallbacks, and validates the result.
    pub fn resolve(flags: &ConfigFlags) -> Result<Self, CliError> {
        let mut cfg = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        flags.apply(&mut cfg);
        if cfg.remote.vlm.url.is_empty() {
            cfg.remote.vlm.url = std::env::var(ENV_VLM_URL).unwrap_or_default();
        }
        if cfg.remote.sam.url.is_empty() {
            cfg.remote.sam.url = std::env::var(ENV_SAM_URL).unwrap_or_default();
        }
        if let Ok(token) = std::env::var(ENV_TOKEN) {
            for r in [&mut cfg.remote.vlm, &mut cfg.remote.sam] {
                r.token.get_or_insert_with(|| token.clone());
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.pipeline
            .pinpoint
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.pipeline.filter.validate().map_err(CliError::Config)?;
        if self.jobs == 0 {
            return Err(CliError::Config("jobs must be >= 1".into()));
        }
        Ok(())
    }

    /// JSON form echoed into outputs. Tokens are never written out.
    pub fn echo(&self) -> serde_json::Value {
        let mut c = self.clone();
        for r in [&mut c.remote.vlm, &mut c.remote.sam] {
            if r.token.is_some() {
                r.token = Some("<redacted>".into());
            }
        }
        serde_json::to_value(&c).expect("config serializes")
    }
}

fn pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((p(a)?, p(b)?))
}

/// Flags shared by every subcommand. Names follow the hyperparameter symbols.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub backend: Option<BackendKind>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, short = 'o', global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for dataset runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Box-extension factor.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Saliency inner radius (fraction of the box diagonal).
    #[arg(long, global = true)]
    pub r_in: Option<f64>,
    /// Saliency annulus radius (fraction of the box diagonal).
    #[arg(long, global = true)]
    pub r_ann: Option<f64>,
    /// Edge-density box side (fraction of the box diagonal).
    #[arg(long, global = true)]
    pub k_box: Option<f64>,
    /// Pre-gradient Gaussian sigma in pixels.
    #[arg(long, global = true)]
    pub sigma_pre: Option<f64>,
    /// Entropy disk radius (fraction of the box diagonal).
    #[arg(long, global = true)]
    pub r_h: Option<f64>,
    /// Entropy quantization bins.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Gradient percentile clip for entropy quantization, `lo,hi`.
    #[arg(long, global = true, value_parser = pair)]
    pub h_clip: Option<(f64, f64)>,
    /// Prior bandwidth (fraction of the box diagonal); `inf` disables the prior.
    #[arg(long, global = true)]
    pub sigma_g: Option<f64>,
    /// Cue normalizer percentile clip, `lo,hi`.
    #[arg(long, global = true, value_parser = pair)]
    pub q_clip: Option<(f64, f64)>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub fusion: Option<Fusion>,
    #[arg(long, global = true)]
    pub lambda_e: Option<f64>,
    #[arg(long, global = true)]
    pub lambda_h: Option<f64>,
    /// Soft-NMS bandwidth (fraction of the box diagonal).
    #[arg(long, global = true)]
    pub sigma_nms: Option<f64>,
    /// Soft-NMS termination floor.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Point budget per box.
    #[arg(long = "n", global = true)]
    pub budget: Option<usize>,
    /// Confidence threshold of the point filter.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Labels kept by the point filter: both, positive or negative.
    #[arg(long, global = true)]
    pub allowlist: Option<Allowlist>,

    #[arg(long, global = true)]
    pub vlm_url: Option<String>,
    #[arg(long, global = true)]
    pub sam_url: Option<String>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    #[arg(long, global = true)]
    pub top_p: Option<f64>,
    #[arg(long, global = true)]
    pub max_new_tokens: Option<u32>,

    /// Noise-free oracle labeler and unjittered oracle boxes.
    #[arg(long, global = true)]
    pub clean_oracle: bool,
    /// Write cue and consensus PNGs.
    #[arg(long, global = true)]
    pub dump_cues: bool,
    /// Write overlay PNGs.
    #[arg(long, global = true)]
    pub dump_overlays: bool,
}

macro_rules! set {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src {
            $dst = v.into();
        }
    };
}

impl ConfigFlags {
    pub fn apply(&self, c: &mut RunConfig) {
        set!(self.backend => c.backend);
        set!(self.seed => c.seed);
        set!(self.output_dir.clone() => c.output_dir);
        set!(self.jobs => c.jobs);
        let p = &mut c.pipeline.pinpoint;
        set!(self.alpha => p.cues.alpha);
        set!(self.r_in => p.cues.r_in);
        set!(self.r_ann => p.cues.r_ann);
        set!(self.k_box => p.cues.box_side);
        set!(self.sigma_pre => p.cues.sigma_pre);
        set!(self.r_h => p.cues.r_h);
        set!(self.bins => p.cues.entropy_bins);
        set!(self.h_clip => p.cues.entropy_clip);
        set!(self.sigma_g => p.cues.sigma_g);
        set!(self.q_clip => p.cues.norm_clip);
        set!(self.delta => p.cues.delta);
        set!(self.fusion => p.fusion);
        set!(self.lambda_e => p.weights.lambda_e);
        set!(self.lambda_h => p.weights.lambda_h);
        set!(self.sigma_nms => p.selection.sigma_nms);
        set!(self.epsilon => p.selection.floor);
        set!(self.budget => p.selection.budget);
        set!(self.tau => c.pipeline.filter.tau);
        set!(self.allowlist => c.pipeline.filter.allowlist);
        set!(self.vlm_url.clone() => c.remote.vlm.url);
        set!(self.sam_url.clone() => c.remote.sam.url);
        for r in [&mut c.remote.vlm, &mut c.remote.sam] {
            set!(self.temperature => r.temperature);
            set!(self.top_p => r.top_p);
            set!(self.max_new_tokens => r.max_new_tokens);
        }
        if self.clean_oracle {
            c.oracle.noise = LabelerNoise::none();
            c.oracle.jitter = 0.0;
        }
        c.dump.cues |= self.dump_cues;
        c.dump.overlays |= self.dump_overlays;
        c.pipeline.seed = c.seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn nested_keys_and_flags_compose() {
        let cfg = RunConfig::from_toml(
            "seed = 9\n[pipeline.pinpoint.selection]\nbudget = 3\n[pipeline.filter]\ntau = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.pipeline.budget(), 3);
        let mut c = cfg.clone();
        ConfigFlags {
            tau: Some(0.9),
            sigma_g: Some(f64::INFINITY),
            ..Default::default()
        }
        .apply(&mut c);
        assert_eq!(c.pipeline.filter.tau, 0.9);
        assert_eq!(c.pipeline.seed, 9);
        assert!(c.pipeline.pinpoint.cues.sigma_g.is_infinite());
        assert_eq!(c.pipeline.budget(), 3);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(matches!(
            RunConfig::from_toml("sead = 1"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn pair_parses() {
        assert_eq!(pair("5, 95").unwrap(), (5.0, 95.0));
        assert!(pair("5").is_err());
    }
}
