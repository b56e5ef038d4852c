//! Run-configuration plumbing: a flat `key = value` config file, per-key
//! command-line overrides, and a fully resolved echo that reproduces the run
//! when fed back in.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use pathrec::encoder::EncoderKind;
use pathrec::trainer::{DropoutSite, GateInput, TrainConfig};

/// Canonical key order for echoes and checkpoint provenance.
const KEYS: [&str; 20] = [
    "meta_path",
    "dim",
    "layers",
    "encoder",
    "gate_input",
    "dropout_site",
    "learning_rate",
    "dropout",
    "batch_size",
    "max_epochs",
    "patience",
    "n_neg",
    "eval_k",
    "seed",
    "c_plus",
    "c_minus",
    "lambda_pre",
    "lambda_con",
    "tau",
    "theta_neg",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| anyhow::anyhow!("bad value `{value}` for `{key}`: {e}"))
}

/// Applies one key to the config, accepting exactly the keys this module
/// writes back out.
pub fn set_key(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "meta_path" => cfg.meta_path = value.to_string(),
        "dim" => cfg.dim = parse_num(key, value)?,
        "layers" => cfg.layers = parse_num(key, value)?,
        "encoder" => cfg.encoder = value.parse::<EncoderKind>()?,
        "gate_input" => cfg.gate_input = value.parse::<GateInput>()?,
        "dropout_site" => cfg.dropout_site = value.parse::<DropoutSite>()?,
        "learning_rate" => cfg.learning_rate = parse_num(key, value)?,
        "dropout" => cfg.dropout = parse_num(key, value)?,
        "batch_size" => cfg.batch_size = parse_num(key, value)?,
        "max_epochs" => cfg.max_epochs = parse_num(key, value)?,
        "patience" => cfg.patience = parse_num(key, value)?,
        "n_neg" => cfg.n_neg = parse_num(key, value)?,
        "eval_k" => cfg.eval_k = parse_num(key, value)?,
        "seed" => cfg.seed = parse_num(key, value)?,
        "c_plus" => cfg.weights.c_plus = parse_num(key, value)?,
        "c_minus" => cfg.weights.c_minus = parse_num(key, value)?,
        "lambda_pre" => cfg.weights.lambda_pre = parse_num(key, value)?,
        "lambda_con" => cfg.weights.lambda_con = parse_num(key, value)?,
        "tau" => cfg.weights.tau = parse_num(key, value)?,
        "theta_neg" => cfg.weights.theta_neg = parse_num(key, value)?,
        other => bail!("unknown config key `{other}`"),
    }
    Ok(())
}

fn get_key(cfg: &TrainConfig, key: &str) -> String {
    match key {
        "meta_path" => cfg.meta_path.clone(),
        "dim" => cfg.dim.to_string(),
        "layers" => cfg.layers.to_string(),
        "encoder" => match cfg.encoder {
            EncoderKind::LightConv => "light".into(),
            EncoderKind::PlainGcn => "gcn".into(),
        },
        "gate_input" => match cfg.gate_input {
            GateInput::Shared => "shared".into(),
            GateInput::Task => "task".into(),
        },
        "dropout_site" => match cfg.dropout_site {
            DropoutSite::Fused => "fused".into(),
            DropoutSite::Initial => "initial".into(),
        },
        "learning_rate" => format!("{:?}", cfg.learning_rate),
        "dropout" => format!("{:?}", cfg.dropout),
        "batch_size" => cfg.batch_size.to_string(),
        "max_epochs" => cfg.max_epochs.to_string(),
        "patience" => cfg.patience.to_string(),
        "n_neg" => cfg.n_neg.to_string(),
        "eval_k" => cfg.eval_k.to_string(),
        "seed" => cfg.seed.to_string(),
        "c_plus" => format!("{:?}", cfg.weights.c_plus),
        "c_minus" => format!("{:?}", cfg.weights.c_minus),
        "lambda_pre" => format!("{:?}", cfg.weights.lambda_pre),
        "lambda_con" => format!("{:?}", cfg.weights.lambda_con),
        "tau" => format!("{:?}", cfg.weights.tau),
        "theta_neg" => format!("{:?}", cfg.weights.theta_neg),
        other => unreachable!("get_key covers every entry of KEYS, got `{other}`"),
    }
}

/// Parses a flat config file: one `key = value` per line, `#` comments,
/// blank lines ignored, duplicate keys rejected.
pub fn apply_config_text(cfg: &mut TrainConfig, text: &str, origin: &str) -> Result<()> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{origin}:{}: expected `key = value`", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            bail!("{origin}:{}: duplicate key `{key}`", i + 1);
        }
        set_key(cfg, key, value).with_context(|| format!("{origin}:{}", i + 1))?;
    }
    Ok(())
}

/// Every config key with its resolved value, in canonical order.
pub fn config_pairs(cfg: &TrainConfig) -> Vec<(String, String)> {
    KEYS.iter().map(|&k| (k.to_string(), get_key(cfg, k))).collect()
}

/// The resolved-config echo; feeding this text back via `--config`
/// reproduces the run.
pub fn resolved_text(cfg: &TrainConfig) -> String {
    let mut out = String::new();
    for (k, v) in config_pairs(cfg) {
        writeln!(out, "{k} = {v}").expect("string writes cannot fail");
    }
    out
}

/// Rebuilds a config from checkpointed key–value pairs.
pub fn config_from_pairs(pairs: &[(String, String)]) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    for (k, v) in pairs {
        set_key(&mut cfg, k, v).context("invalid checkpoint config")?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Training hyper-parameter flags shared by `train`, `ablate`, and `sweep`.
/// Precedence: built-in defaults, then the `--config` file, then these flags.
#[derive(Debug, clap::Args)]
pub struct ConfigFlags {
    /// Flat `key = value` config file; flags below override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Meta-path over node-type codes, e.g. UUA (required here or in the
    /// config file).
    #[arg(long)]
    pub meta_path: Option<String>,
    /// Embedding dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Propagation layers per expert.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Encoder rule: light | gcn.
    #[arg(long)]
    pub encoder: Option<String>,
    /// Gate input table: shared | task.
    #[arg(long)]
    pub gate_input: Option<String>,
    /// Dropout placement: fused | initial.
    #[arg(long)]
    pub dropout_site: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Dropout rate in [0, 1).
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Users per training batch.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Epoch ceiling (absolute; a resumed run counts its past epochs).
    #[arg(long = "epochs")]
    pub max_epochs: Option<usize>,
    /// Early-stopping patience in epochs.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Sampled negatives per contrastive anchor.
    #[arg(long)]
    pub n_neg: Option<usize>,
    /// K of the validation Recall@K early-stopping metric.
    #[arg(long)]
    pub eval_k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Positive interaction weight in the recommendation loss.
    #[arg(long)]
    pub c_plus: Option<f64>,
    /// Uniform negative weight in the recommendation loss.
    #[arg(long)]
    pub c_minus: Option<f64>,
    /// Weight of the link-score regression loss.
    #[arg(long)]
    pub lambda_pre: Option<f64>,
    /// Weight of the contrastive loss.
    #[arg(long)]
    pub lambda_con: Option<f64>,
    /// Contrastive temperature.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Link-score ceiling for contrastive negatives.
    #[arg(long)]
    pub theta_neg: Option<f64>,
}

impl ConfigFlags {
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            apply_config_text(&mut cfg, &text, &path.display().to_string())?;
        }
        if let Some(v) = &self.meta_path {
            cfg.meta_path = v.clone();
        }
        if let Some(v) = self.dim {
            cfg.dim = v;
        }
        if let Some(v) = self.layers {
            cfg.layers = v;
        }
        if let Some(v) = &self.encoder {
            cfg.encoder = v.parse::<EncoderKind>()?;
        }
        if let Some(v) = &self.gate_input {
            cfg.gate_input = v.parse::<GateInput>()?;
        }
        if let Some(v) = &self.dropout_site {
            cfg.dropout_site = v.parse::<DropoutSite>()?;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.dropout {
            cfg.dropout = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.max_epochs = v;
        }
        if let Some(v) = self.patience {
            cfg.patience = v;
        }
        if let Some(v) = self.n_neg {
            cfg.n_neg = v;
        }
        if let Some(v) = self.eval_k {
            cfg.eval_k = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.c_plus {
            cfg.weights.c_plus = v;
        }
        if let Some(v) = self.c_minus {
            cfg.weights.c_minus = v;
        }
        if let Some(v) = self.lambda_pre {
            cfg.weights.lambda_pre = v;
        }
        if let Some(v) = self.lambda_con {
            cfg.weights.lambda_con = v;
        }
        if let Some(v) = self.tau {
            cfg.weights.tau = v;
        }
        if let Some(v) = self.theta_neg {
            cfg.weights.theta_neg = v;
        }
        if cfg.meta_path.is_empty() {
            bail!("no meta-path set; pass --meta-path or a config file with `meta_path = ...`");
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
