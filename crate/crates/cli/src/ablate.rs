//! Ablation harness: the top-n API sweep and the cell/API-context
//! variant grid, each row a full train-and-evaluate run.

use std::path::Path;

use comgen_core::metrics::ScoreReport;
use comgen_core::neural::CellKind;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::stages::{stage_evaluate, stage_prepare, stage_rank, stage_train, Artifacts};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<ScoreReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationTables {
    /// One row per top-n setting (the Table-III shape).
    pub api_sweep: Vec<AblationRow>,
    /// Cell kind crossed with API context on/off (the Table-IV shape).
    pub variants: Vec<AblationRow>,
}

/// Runs every ablation row. A failed row records its error and the
/// remaining rows continue.
pub fn run_ablate(config: &RunConfig) -> CliResult<AblationTables> {
    if config.sweep.is_empty() {
        return Err(CliError::Validation("ablation sweep list is empty".into()));
    }
    let base = Artifacts::new(&config.work_dir);
    for path in [base.filtered(), base.extract()] {
        if !path.exists() {
            return Err(CliError::Io(format!(
                "missing artifact: {} (run extract first)",
                path.display()
            )));
        }
    }

    let mut api_sweep = Vec::new();
    for &n in &config.sweep {
        let label = n.label();
        let slug = label.to_lowercase().replace(' ', "_");
        let mut sub = config.clone();
        sub.n_apis = n;
        sub.work_dir = config.work_dir.join("ablate").join(slug);
        api_sweep.push(run_row(&sub, &base, label));
    }

    let mut variants = Vec::new();
    for (cell, use_api) in [
        (CellKind::Gru, false),
        (CellKind::Gru, true),
        (CellKind::Lstm, false),
        (CellKind::Lstm, true),
    ] {
        let label = match (cell, use_api) {
            (CellKind::Gru, false) => "GRU, code+AST only".to_string(),
            (CellKind::Gru, true) => "GRU, full".to_string(),
            (CellKind::Lstm, false) => "LSTM, code+AST only".to_string(),
            (CellKind::Lstm, true) => "LSTM, full".to_string(),
        };
        let slug = format!(
            "{}_{}",
            cell,
            if use_api { "full" } else { "noapi" }
        );
        let mut sub = config.clone();
        sub.cell = cell;
        sub.use_api_context = use_api;
        sub.work_dir = config.work_dir.join("ablate").join(slug);
        variants.push(run_row(&sub, &base, label));
    }

    let tables = AblationTables { api_sweep, variants };
    let json = serde_json::to_string_pretty(&tables).expect("tables serialize");
    let json_path = config.work_dir.join("ablation.json");
    std::fs::write(&json_path, &json)
        .map_err(|e| CliError::Io(format!("{}: {e}", json_path.display())))?;
    let text = render_tables(&tables);
    let text_path = config.work_dir.join("ablation.txt");
    std::fs::write(&text_path, &text)
        .map_err(|e| CliError::Io(format!("{}: {e}", text_path.display())))?;
    println!("{text}");
    Ok(tables)
}

/// One row: seed the variant's work dir with the shared extraction
/// artifacts, then rank, prepare, train, and evaluate under its config.
fn run_row(sub: &RunConfig, base: &Artifacts, label: String) -> AblationRow {
    let result = (|| -> CliResult<ScoreReport> {
        std::fs::create_dir_all(&sub.work_dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", sub.work_dir.display())))?;
        let dst = Artifacts::new(&sub.work_dir);
        copy_if_changed(&base.filtered(), &dst.filtered())?;
        copy_if_changed(&base.extract(), &dst.extract())?;
        stage_rank(sub)?;
        stage_prepare(sub)?;
        stage_train(sub)?;
        stage_evaluate(sub)
    })();
    match result {
        Ok(scores) => AblationRow {
            label,
            scores: Some(scores),
            error: None,
        },
        Err(e) => {
            eprintln!("ablation row {label:?} failed: {e}");
            AblationRow {
                label,
                scores: None,
                error: Some(e.to_string()),
            }
        }
    }
}

fn copy_if_changed(src: &Path, dst: &Path) -> CliResult<()> {
    let fresh = std::fs::read(src).map_err(|e| CliError::Io(format!("{}: {e}", src.display())))?;
    if std::fs::read(dst).ok().as_deref() != Some(fresh.as_slice()) {
        std::fs::write(dst, fresh).map_err(|e| CliError::Io(format!("{}: {e}", dst.display())))?;
    }
    Ok(())
}

pub fn render_tables(tables: &AblationTables) -> String {
    let mut out = String::new();
    out.push_str(&render_table("Top-n API sweep", &tables.api_sweep));
    out.push('\n');
    out.push_str(&render_table("Cell and API-context variants", &tables.variants));
    out
}

fn render_table(title: &str, rows: &[AblationRow]) -> String {
    let mut out = format!("{title}\n");
    out.push_str(&format!(
        "{:<24} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "model", "BLEU1", "BLEU2", "BLEU3", "BLEU4", "METEOR", "ROUGE-L"
    ));
    for row in rows {
        match (&row.scores, &row.error) {
            (Some(s), _) => out.push_str(&format!(
                "{:<24} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2}\n",
                row.label, s.bleu1, s.bleu2, s.bleu3, s.bleu4, s.meteor, s.rouge_l
            )),
            (None, Some(e)) => out.push_str(&format!("{:<24} failed: {e}\n", row.label)),
            (None, None) => out.push_str(&format!("{:<24} (no result)\n", row.label)),
        }
    }
    out
}
