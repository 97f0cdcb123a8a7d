//! Flag/config-file merging. Every setting is optional at both levels; a
//! command-line value wins over the file, and commands apply their own
//! defaults to whatever is still unset.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Cell model: vanilla, lstm, gru or pru
    #[arg(long)]
    pub model: Option<String>,
    /// Construction parameters as k=v pairs, e.g. a=4,b=1 or b1=0.5,w21=0.5,b2=-2
    #[arg(long)]
    pub construct: Option<String>,
    /// Model setup JSON (as written by `construct`)
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Sequence length
    #[arg(long)]
    pub n: Option<usize>,
    /// Fix the flag position instead of drawing it uniformly
    #[arg(long)]
    pub flag_at: Option<usize>,
    /// Force the flagged bit to +1 or -1
    #[arg(long, allow_hyphen_values = true)]
    pub label: Option<i8>,
    /// Number of paths to generate
    #[arg(long)]
    pub count: Option<u64>,
    /// Paths per class (simulate, sweep, replay-fig4) or in total (mc)
    #[arg(long)]
    pub paths: Option<usize>,
    /// Comma-separated snapshot times
    #[arg(long)]
    pub snapshots: Option<String>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gate value σ(a) of the scalar gated construction
    #[arg(long = "A")]
    #[serde(rename = "A")]
    pub gate: Option<f64>,
    /// Scale tanh(b) of the scalar gated construction
    #[arg(long = "B", allow_hyphen_values = true)]
    #[serde(rename = "B")]
    pub scale: Option<f64>,
    /// Target worst-case margin when the gate is chosen from n
    #[arg(long)]
    pub margin: Option<f64>,
    /// Sweep axis lo:hi:step shared by U, W1 and W2
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub steps_per_epoch: Option<usize>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub eval_paths: Option<usize>,
    /// Bias of the replayed model: zero, recover or b1,b2
    #[arg(long, allow_hyphen_values = true)]
    pub bias: Option<String>,
    /// Report a non-zero exact error without failing
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_errors: Option<bool>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Field-wise `self.or(file)`.
    pub fn over(self, file: Settings) -> Result<Settings> {
        let mut merged = serde_json::to_value(file)?;
        let cli = serde_json::to_value(self)?;
        if let (Some(m), Some(c)) = (merged.as_object_mut(), cli.as_object()) {
            for (k, v) in c {
                if !v.is_null() {
                    m.insert(k.clone(), v.clone());
                }
            }
        }
        Ok(serde_json::from_value(merged)?)
    }
}
