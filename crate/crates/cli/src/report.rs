//! Record-level analysis: the sentence BLEU-1 score histogram, mean
//! score by code/comment length bin, and a win/tie/loss comparison
//! between two runs.

use std::collections::HashMap;
use std::path::Path;

use comgen_core::corpus::{load_corpus, Split};
use comgen_core::metrics::sentence_bleu;
use comgen_core::textprep::subtoken_split;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::stages::{Artifacts, TokenRecord};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramBin {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LengthBin {
    /// Upper edge; the bin covers (upper - step, upper].
    pub upper: usize,
    pub count: usize,
    pub mean_bleu1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub n_examples: usize,
    pub score_histogram: Vec<HistogramBin>,
    pub code_length_bins: Vec<LengthBin>,
    pub comment_length_bins: Vec<LengthBin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

/// Builds the analysis bundle from the evaluate-stage artifacts and
/// writes it as JSON plus a plain-text rendering.
pub fn run_report(config: &RunConfig, compare: Option<&Path>) -> CliResult<AnalysisBundle> {
    let art = Artifacts::new(&config.work_dir);
    for path in [art.decoded(), art.references(), art.filtered()] {
        if !path.exists() {
            return Err(CliError::Io(format!(
                "missing artifact: {} (run evaluate first)",
                path.display()
            )));
        }
    }

    let decoded: Vec<TokenRecord> = crate::stages::read_tokens(&art.decoded())?;
    let references: Vec<TokenRecord> = crate::stages::read_tokens(&art.references())?;
    if decoded.len() != references.len()
        || decoded
            .iter()
            .zip(&references)
            .any(|(d, r)| d.id != r.id)
    {
        return Err(CliError::Validation(
            "decoded outputs and references disagree on record ids".into(),
        ));
    }

    let records = load_corpus(&art.filtered())?.records;
    let code_lengths: HashMap<String, usize> = records
        .iter()
        .filter(|r| r.split == Some(Split::Test))
        .map(|r| (r.id.clone(), subtoken_split(&r.code_text).len()))
        .collect();

    let bleu1: Vec<f64> = decoded
        .iter()
        .zip(&references)
        .map(|(d, r)| sentence_bleu(&d.tokens, &r.tokens, 1))
        .collect();

    // histogram over [0,20), [20,30), [30,100]
    let mut hist = [0usize; 3];
    for &score in &bleu1 {
        if score < 20.0 {
            hist[0] += 1;
        } else if score < 30.0 {
            hist[1] += 1;
        } else {
            hist[2] += 1;
        }
    }
    let score_histogram = vec![
        HistogramBin {
            label: "[0,20)".into(),
            count: hist[0],
        },
        HistogramBin {
            label: "[20,30)".into(),
            count: hist[1],
        },
        HistogramBin {
            label: "[30,100]".into(),
            count: hist[2],
        },
    ];

    let code_length_bins = length_bins(
        decoded.iter().enumerate().map(|(i, d)| {
            let len = code_lengths.get(&d.id).copied().unwrap_or(0);
            (len, bleu1[i])
        }),
        config.code_bin_step,
    );
    let comment_length_bins = length_bins(
        references
            .iter()
            .enumerate()
            .map(|(i, r)| (r.tokens.len(), bleu1[i])),
        config.comment_bin_step,
    );

    let comparison = match compare {
        Some(path) => {
            let other: Vec<TokenRecord> = crate::stages::read_tokens(path)?;
            if other.len() != decoded.len() || other.iter().zip(&decoded).any(|(a, b)| a.id != b.id)
            {
                return Err(CliError::Validation(
                    "comparison run does not cover the same record ids".into(),
                ));
            }
            let mut result = Comparison {
                wins: 0,
                ties: 0,
                losses: 0,
            };
            for ((ours, theirs), reference) in bleu1
                .iter()
                .zip(other.iter().map(|o| &o.tokens))
                .zip(references.iter().map(|r| &r.tokens))
            {
                let their_score = sentence_bleu(theirs, reference, 1);
                if *ours > their_score {
                    result.wins += 1;
                } else if *ours < their_score {
                    result.losses += 1;
                } else {
                    result.ties += 1;
                }
            }
            Some(result)
        }
        None => None,
    };

    let bundle = AnalysisBundle {
        n_examples: decoded.len(),
        score_histogram,
        code_length_bins,
        comment_length_bins,
        comparison,
    };

    let json = serde_json::to_string_pretty(&bundle).expect("bundle serializes");
    let json_path = config.work_dir.join("report.json");
    std::fs::write(&json_path, &json)
        .map_err(|e| CliError::Io(format!("{}: {e}", json_path.display())))?;
    let text = render_bundle(&bundle);
    let text_path = config.work_dir.join("report.txt");
    std::fs::write(&text_path, &text)
        .map_err(|e| CliError::Io(format!("{}: {e}", text_path.display())))?;
    println!("{text}");
    Ok(bundle)
}

/// Mean score per length bin with upper-edge labels: a step of 3 puts
/// lengths 4..=6 in the bin labeled 6.
fn length_bins(items: impl Iterator<Item = (usize, f64)>, step: usize) -> Vec<LengthBin> {
    let mut sums: HashMap<usize, (usize, f64)> = HashMap::new();
    for (len, score) in items {
        let upper = len.max(1).div_ceil(step) * step;
        let slot = sums.entry(upper).or_insert((0, 0.0));
        slot.0 += 1;
        slot.1 += score;
    }
    let mut bins: Vec<LengthBin> = sums
        .into_iter()
        .map(|(upper, (count, total))| LengthBin {
            upper,
            count,
            mean_bleu1: total / count as f64,
        })
        .collect();
    bins.sort_by_key(|b| b.upper);
    bins
}

pub fn render_bundle(bundle: &AnalysisBundle) -> String {
    let mut out = String::new();
    out.push_str(&format!("records: {}\n\nsentence BLEU-1 histogram\n", bundle.n_examples));
    for bin in &bundle.score_histogram {
        out.push_str(&format!("{:<10} {}\n", bin.label, bin.count));
    }
    out.push_str("\nmean sentence BLEU-1 by code length\n");
    for bin in &bundle.code_length_bins {
        out.push_str(&format!(
            "<= {:<6} n={:<5} {:.2}\n",
            bin.upper, bin.count, bin.mean_bleu1
        ));
    }
    out.push_str("\nmean sentence BLEU-1 by comment length\n");
    for bin in &bundle.comment_length_bins {
        out.push_str(&format!(
            "<= {:<6} n={:<5} {:.2}\n",
            bin.upper, bin.count, bin.mean_bleu1
        ));
    }
    if let Some(c) = &bundle.comparison {
        out.push_str(&format!(
            "\nvs comparison run: {} wins / {} ties / {} losses\n",
            c.wins, c.ties, c.losses
        ));
    }
    out
}
