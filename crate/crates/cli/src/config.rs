//! Run configuration: a TOML key-value file whose keys mirror the
//! command-line flags; every training hyperparameter defaults to the
//! reference setup (embed 256, hidden 512, dropout 0.2, lr 0.1, batch
//! 32, 100 epochs, patience 7, 3 APIs).

use std::path::{Path, PathBuf};

use comgen_core::neural::{CellKind, ModelConfig};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

/// An API-count knob: a number or `"all"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ApiCount {
    N(usize),
    All(AllMarker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AllMarker {
    #[serde(rename = "all")]
    All,
}

impl ApiCount {
    pub fn to_limit(self) -> Option<usize> {
        match self {
            ApiCount::N(n) => Some(n),
            ApiCount::All(_) => None,
        }
    }

    pub fn label(self) -> String {
        match self {
            ApiCount::N(n) => format!("{n} APIs"),
            ApiCount::All(_) => "All the APIs".to_string(),
        }
    }
}

impl std::str::FromStr for ApiCount {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(ApiCount::All(AllMarker::All))
        } else {
            s.parse::<usize>()
                .map(ApiCount::N)
                .map_err(|_| format!("expected a number or \"all\", got {s:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // paths
    pub corpus: PathBuf,
    pub catalog: PathBuf,
    pub work_dir: PathBuf,

    // preprocessing
    pub max_code_tokens: usize,
    pub max_comment_tokens: usize,
    pub ast_cap: usize,
    pub desc_cap: usize,
    pub def_cap: usize,
    pub src_vocab_size: usize,
    pub tgt_vocab_size: usize,

    // ranking
    pub n_apis: ApiCount,

    // model and training
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub cell: CellKind,
    pub dropout: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub use_api_context: bool,
    pub clip_norm: f64,
    pub max_decode_len: usize,

    // experiment harness
    pub sweep: Vec<ApiCount>,
    pub code_bin_step: usize,
    pub comment_bin_step: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::from("corpus.jsonl"),
            catalog: PathBuf::from("catalog.jsonl"),
            work_dir: PathBuf::from("work"),
            max_code_tokens: 256,
            max_comment_tokens: 64,
            ast_cap: 512,
            desc_cap: 32,
            def_cap: 16,
            src_vocab_size: 8000,
            tgt_vocab_size: 4000,
            n_apis: ApiCount::N(3),
            embed_dim: 256,
            hidden_dim: 512,
            cell: CellKind::Gru,
            dropout: 0.2,
            lr: 0.1,
            batch_size: 32,
            max_epochs: 100,
            patience: 7,
            seed: 1,
            use_api_context: true,
            clip_norm: 0.0,
            max_decode_len: 64,
            sweep: vec![
                ApiCount::N(2),
                ApiCount::N(3),
                ApiCount::N(4),
                ApiCount::All(AllMarker::All),
            ],
            code_bin_step: 20,
            comment_bin_step: 3,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// The training-core view of this configuration. Vocabulary sizes
    /// come from the built vocabularies, which may undershoot the caps.
    pub fn model_config(&self, src_vocab: usize, tgt_vocab: usize) -> ModelConfig {
        ModelConfig {
            src_vocab_size: src_vocab,
            tgt_vocab_size: tgt_vocab,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            cell: self.cell,
            dropout: self.dropout,
            n_apis: match self.n_apis {
                ApiCount::N(n) => n,
                ApiCount::All(_) => usize::MAX,
            },
            lr: self.lr,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
            use_api_context: self.use_api_context,
            clip_norm: self.clip_norm,
        }
    }

    pub fn caps(&self) -> comgen_core::textprep::ChannelCaps {
        comgen_core::textprep::ChannelCaps {
            code: self.max_code_tokens,
            ast: self.ast_cap,
            description: self.desc_cap,
            definition: self.def_cap,
            comment: self.max_comment_tokens,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_the_reference_hyperparameters() {
        let config = RunConfig::default();
        assert_eq!(config.embed_dim, 256);
        assert_eq!(config.hidden_dim, 512);
        assert_eq!(config.dropout, 0.2);
        assert_eq!(config.lr, 0.1);
        assert_eq!(config.batch_size, 32);
        assert_eq!(config.max_epochs, 100);
        assert_eq!(config.patience, 7);
        assert_eq!(config.n_apis, ApiCount::N(3));
        assert_eq!(config.max_code_tokens, 256);
        assert_eq!(config.max_comment_tokens, 64);
        assert_eq!(config.code_bin_step, 20);
        assert_eq!(config.comment_bin_step, 3);
    }

    #[test]
    fn toml_round_trip_including_all_marker() {
        let config = RunConfig::default();
        let text = toml::to_string(&config).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, back);
        assert!(text.contains("\"all\""));
    }

    #[test]
    fn api_count_parses_from_strings() {
        assert_eq!("3".parse::<ApiCount>().unwrap(), ApiCount::N(3));
        assert_eq!(
            "all".parse::<ApiCount>().unwrap(),
            ApiCount::All(AllMarker::All)
        );
        assert!("many".parse::<ApiCount>().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("not_a_key = 3");
        assert!(err.is_err());
    }
}
