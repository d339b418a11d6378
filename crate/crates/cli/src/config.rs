//! Run configuration: a TOML file whose every key is optional. An empty file
//! reproduces the reference setting (dropout 0.1, lr 1e-4, batch 8,
//! 15 epochs).

use std::fs;
use std::path::{Path, PathBuf};

use mwp_core::model::{ModelConfig, TrainConfig};
use mwp_core::{ClassProfile, SplitRatios};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Full dataset: written by `datagen`, read by `split`.
    pub dataset: PathBuf,
    /// Where `split` writes and where train/validation/test default to.
    pub split_dir: PathBuf,
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Vocabularies, checkpoint, history and reports.
    pub run_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            dataset: "data/dataset.jsonl".into(),
            split_dir: "data".into(),
            train: None,
            validation: None,
            test: None,
            run_dir: "run".into(),
            checkpoint: None,
            report: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenSection {
    pub n: usize,
    /// `standard` or explicit weights such as `add:1,sub:2`.
    pub profile: String,
    pub allow_fractions: bool,
}

impl Default for DatagenSection {
    fn default() -> Self {
        DatagenSection {
            n: 1000,
            profile: "standard".into(),
            allow_fractions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub dropout: f64,
    pub max_len: usize,
    pub min_freq: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = ModelConfig::desk(0, 0);
        ModelSection {
            d_model: d.d_model,
            n_heads: d.n_heads,
            d_ff: d.d_ff,
            n_enc_layers: d.n_enc_layers,
            n_dec_layers: d.n_dec_layers,
            dropout: d.dropout,
            max_len: d.max_len,
            min_freq: 1,
        }
    }
}

impl ModelSection {
    pub fn model_config(&self, src_vocab_size: usize, tgt_vocab_size: usize) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            n_heads: self.n_heads,
            d_ff: self.d_ff,
            n_enc_layers: self.n_enc_layers,
            n_dec_layers: self.n_dec_layers,
            dropout: self.dropout,
            max_len: self.max_len,
            src_vocab_size,
            tgt_vocab_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: Option<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            batch_size: t.batch_size,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            eps: t.eps,
            clip_norm: t.clip_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    /// `train,validation,test`, each a decimal or `p/q`.
    pub ratios: String,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            ratios: SplitRatios::default().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub tolerance: f64,
    /// 1 is greedy decoding.
    pub beam: usize,
    pub threads: usize,
    /// Pre-computed predictions (JSONL `{"id","equation"}`).
    pub predictions: Option<PathBuf>,
    /// External predictor command line, split on whitespace.
    pub adapter: Option<String>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            tolerance: 0.0,
            beam: 1,
            threads: 1,
            predictions: None,
            adapter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub batch_sizes: Vec<usize>,
    pub epochs: Vec<usize>,
    /// Train the batch-size rows on separate threads.
    pub parallel: bool,
    pub model_name: String,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            batch_sizes: vec![8, 16],
            epochs: vec![5, 10, 15],
            parallel: false,
            model_name: "Transformer".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: PathsSection,
    pub datagen: DatagenSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub split: SplitSection,
    pub eval: EvalSection,
    pub grid: GridSection,
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase_paths(base);
        Ok(cfg)
    }

    pub fn rebase_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        rebase(base, &mut p.dataset);
        rebase(base, &mut p.split_dir);
        rebase(base, &mut p.run_dir);
        for opt in [&mut p.train, &mut p.validation, &mut p.test, &mut p.checkpoint, &mut p.report] {
            if let Some(path) = opt {
                rebase(base, path);
            }
        }
        if let Some(path) = &mut self.eval.predictions {
            rebase(base, path);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model
            .model_config(1, 1)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.train_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.split_ratios()?;
        self.class_profile()?;
        if !self.eval.tolerance.is_finite() || self.eval.tolerance < 0.0 {
            return Err(CliError::Config("eval.tolerance must be non-negative".into()));
        }
        if self.eval.beam == 0 {
            return Err(CliError::Config("eval.beam must be at least 1".into()));
        }
        if self.grid.batch_sizes.contains(&0) {
            return Err(CliError::Config("grid.batch_sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.train.batch_size,
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            beta1: self.train.beta1,
            beta2: self.train.beta2,
            eps: self.train.eps,
            seed: self.seed,
            clip_norm: self.train.clip_norm,
        }
    }

    pub fn split_ratios(&self) -> Result<SplitRatios, CliError> {
        self.split
            .ratios
            .parse()
            .map_err(|e: mwp_core::DatasetError| CliError::Config(format!("split.ratios: {e}")))
    }

    pub fn class_profile(&self) -> Result<ClassProfile, CliError> {
        let mut profile: ClassProfile = self
            .datagen
            .profile
            .parse()
            .map_err(|e: mwp_core::DatasetError| CliError::Config(format!("datagen.profile: {e}")))?;
        profile.allow_fractions = self.datagen.allow_fractions;
        Ok(profile)
    }

    pub fn train_path(&self) -> PathBuf {
        self.paths.train.clone().unwrap_or_else(|| self.paths.split_dir.join("train.jsonl"))
    }

    pub fn validation_path(&self) -> PathBuf {
        self.paths
            .validation
            .clone()
            .unwrap_or_else(|| self.paths.split_dir.join("validation.jsonl"))
    }

    pub fn test_path(&self) -> PathBuf {
        self.paths.test.clone().unwrap_or_else(|| self.paths.split_dir.join("test.jsonl"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.paths
            .checkpoint
            .clone()
            .unwrap_or_else(|| self.paths.run_dir.join("model.ckpt"))
    }

    pub fn report_path(&self) -> PathBuf {
        self.paths
            .report
            .clone()
            .unwrap_or_else(|| self.paths.run_dir.join("report.json"))
    }

    pub fn src_vocab_path(&self) -> PathBuf {
        self.paths.run_dir.join("src_vocab.txt")
    }

    pub fn tgt_vocab_path(&self) -> PathBuf {
        self.paths.run_dir.join("tgt_vocab.txt")
    }

    pub fn history_path(&self) -> PathBuf {
        self.paths.run_dir.join("history.txt")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_reference_setting() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.model.dropout, 0.1);
        assert_eq!(cfg.train.learning_rate, 1e-4);
        assert_eq!(cfg.train.batch_size, 8);
        assert_eq!(cfg.train.epochs, 15);
        assert_eq!(cfg.grid.batch_sizes, [8, 16]);
        assert_eq!(cfg.grid.epochs, [5, 10, 15]);
        assert_eq!(cfg.eval.tolerance, 0.0);
        assert_eq!(cfg.split_ratios().unwrap(), SplitRatios::default());
    }

    #[test]
    fn dotted_keys_and_sections() {
        let cfg = RunConfig::from_toml("seed = 7\ntrain.epochs = 3\n[model]\nd_model = 16\nn_heads = 2\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.model.d_model, 16);
        assert_eq!(cfg.train_config().seed, 7);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in [
            "train.learning_rate = 0.0",
            "model.d_model = 10\nmodel.n_heads = 4",
            "split.ratios = \"0.5,0.5,0.5\"",
            "datagen.profile = \"add:x\"",
            "unknown = 1",
            "train.epochs = \"many\"",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "paths.run_dir = \"out\"\npaths.test = \"/abs/test.jsonl\"\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.paths.run_dir, dir.path().join("out"));
        assert_eq!(cfg.test_path(), PathBuf::from("/abs/test.jsonl"));
        assert_eq!(cfg.checkpoint_path(), dir.path().join("out").join("model.ckpt"));
    }
}
