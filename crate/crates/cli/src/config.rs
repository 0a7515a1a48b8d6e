//! Run configuration: flags override the TOML config file, which overrides
//! the library defaults.

use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fuzzytopic::embedding::EmbeddingFormat;
use fuzzytopic::membership::GloshSign;
use fuzzytopic::pipeline::{Phase2Scope, PipelineConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Binary,
}

impl From<FormatArg> for EmbeddingFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => EmbeddingFormat::Jsonl,
            FormatArg::Binary => EmbeddingFormat::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GloshSignArg {
    Inverted,
    Literal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    PerTopic,
    Global,
}

/// A parsed `--mcs-grid` value.
#[derive(Debug, Clone, PartialEq)]
pub struct McsGrid(pub Vec<usize>);

fn parse_grid_arg(s: &str) -> Result<McsGrid, String> {
    parse_grid(s).map(McsGrid)
}

/// `lo:hi:step`, inclusive of `hi` when the step lands on it.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad grid bound {p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let (lo, hi, step) = match nums[..] {
        [lo, hi] => (lo, hi, 1),
        [lo, hi, step] => (lo, hi, step),
        _ => return Err(format!("expected lo:hi or lo:hi:step, got {s:?}")),
    };
    if step == 0 {
        return Err("grid step must be positive".into());
    }
    if lo > hi {
        return Err(format!("grid lower bound {lo} exceeds upper bound {hi}"));
    }
    if lo < 2 {
        return Err(format!("minimum cluster size must be at least 2, got {lo}"));
    }
    Ok((lo..=hi).step_by(step).collect())
}

#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// TOML file with pipeline settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed phase-1 minimum cluster size (skips the grid search).
    #[arg(long, conflicts_with = "mcs_grid")]
    pub mcs: Option<usize>,
    /// Phase-1 grid as lo:hi:step.
    #[arg(long, value_parser = parse_grid_arg)]
    pub mcs_grid: Option<McsGrid>,
    #[arg(long)]
    pub phase2_mcs: Option<usize>,
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Core-distance neighbor rank (default: the minimum cluster size).
    #[arg(long)]
    pub min_samples: Option<usize>,
    /// Barnes-Hut opening angle; 0 uses the exact gradient.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub glosh_sign: Option<GloshSignArg>,
    #[arg(long, value_enum)]
    pub phase2_scope: Option<ScopeArg>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mcs) = self.mcs {
            cfg.mcs_grid = vec![mcs];
        }
        if let Some(grid) = &self.mcs_grid {
            cfg.mcs_grid = grid.0.clone();
        }
        if let Some(v) = self.phase2_mcs {
            cfg.phase2_min_cluster_size = v;
        }
        if let Some(v) = self.top_n {
            cfg.top_n = v;
        }
        if let Some(v) = self.perplexity {
            cfg.tsne.perplexity = v;
        }
        if let Some(v) = self.iterations {
            cfg.tsne.iterations = v;
        }
        if let Some(v) = self.min_samples {
            cfg.min_samples = Some(v);
        }
        if let Some(v) = self.theta {
            cfg.tsne.theta = v;
        }
        if let Some(v) = self.glosh_sign {
            cfg.glosh_sign = match v {
                GloshSignArg::Inverted => GloshSign::Inverted,
                GloshSignArg::Literal => GloshSign::Literal,
            };
        }
        if let Some(v) = self.phase2_scope {
            cfg.phase2_scope = match v {
                ScopeArg::PerTopic => Phase2Scope::PerTopic,
                ScopeArg::Global => Phase2Scope::Global,
            };
        }
        cfg.tsne.seed = cfg.seed;
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}
