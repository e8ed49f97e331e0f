//! The pipeline stages. Each stage reads and writes declared sidecar
//! files under the work directory, all JSON lines keyed by record id,
//! and is content-addressed: a fingerprint of its configuration and
//! input digests makes an unchanged rerun a no-op.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use comgen_core::catalog::{load_catalog, match_call_indexed, Catalog, MatchTier};
use comgen_core::corpus::{assign_splits, filter_corpus, load_corpus, Split};
use comgen_core::java::{
    extract_api_calls, extract_signature, lex_java, parse_method, sbt_flatten, ApiCallSite,
    MethodSignature,
};
use comgen_core::metrics::{evaluate_corpus, ScoreReport};
use comgen_core::neural::{
    greedy_decode, load_params, save_params, train, ModelParams, TrainHistory,
};
use comgen_core::ranker::{score_apis, select_top_n, RankedApi, RankedApiSet};
use comgen_core::textprep::{
    encode_example, load_prepared, subtoken_split, write_prepared, PreparedExample, Vocabulary,
};

use crate::config::RunConfig;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractRecord {
    pub id: String,
    pub signature: MethodSignature,
    pub calls: Vec<ApiCallSite>,
    pub sbt: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankEntry {
    pub qualified_name: String,
    pub score: i64,
    pub order_index: usize,
    pub catalog_index: usize,
    pub tier: MatchTier,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankRecord {
    pub id: String,
    pub ranked: Vec<RankEntry>,
    pub n_selected: usize,
    pub unmatched_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenRecord {
    pub id: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention: Option<Vec<comgen_core::neural::StepAttention>>,
}

/// Paths of every artifact under one work directory.
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Self {
        Artifacts {
            dir: dir.to_path_buf(),
        }
    }

    pub fn filtered(&self) -> PathBuf {
        self.dir.join("filtered.jsonl")
    }
    pub fn stats(&self) -> PathBuf {
        self.dir.join("stats.json")
    }
    pub fn extract(&self) -> PathBuf {
        self.dir.join("extract.jsonl")
    }
    pub fn rank(&self) -> PathBuf {
        self.dir.join("rank.jsonl")
    }
    pub fn source_vocab(&self) -> PathBuf {
        self.dir.join("source.vocab")
    }
    pub fn target_vocab(&self) -> PathBuf {
        self.dir.join("target.vocab")
    }
    pub fn prepared(&self, split: Split) -> PathBuf {
        self.dir.join(format!("prepared.{}.jsonl", split_name(split)))
    }
    pub fn model(&self) -> PathBuf {
        self.dir.join("model.bin")
    }
    pub fn history(&self) -> PathBuf {
        self.dir.join("history.json")
    }
    pub fn decoded(&self) -> PathBuf {
        self.dir.join("decoded.test.jsonl")
    }
    pub fn references(&self) -> PathBuf {
        self.dir.join("references.test.jsonl")
    }
    pub fn score_report(&self) -> PathBuf {
        self.dir.join("score_report.json")
    }
    fn hash_file(&self, stage: &str) -> PathBuf {
        self.dir.join(format!("{stage}.hash"))
    }
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Validation => "validation",
        Split::Test => "test",
    }
}

fn require(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Io(format!(
            "missing artifact: {} (run the upstream stage first)",
            path.display()
        )))
    }
}

fn file_digest(path: &Path) -> CliResult<String> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn fingerprint(stage: &str, parts: &[String]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(stage.as_bytes());
    for part in parts {
        hasher.update([0u8]);
        hasher.update(part.as_bytes());
    }
    hex(&hasher.finalize())
}

/// True when the stage's fingerprint matches the stored one and every
/// output still exists.
fn up_to_date(art: &Artifacts, stage: &str, print: &str, fp: &str, outputs: &[PathBuf]) -> bool {
    let stored = std::fs::read_to_string(art.hash_file(stage)).ok();
    if stored.as_deref() == Some(fp) && outputs.iter().all(|p| p.exists()) {
        println!("{print}: up to date");
        true
    } else {
        false
    }
}

fn store_hash(art: &Artifacts, stage: &str, fp: &str) -> CliResult<()> {
    std::fs::write(art.hash_file(stage), fp)
        .map_err(|e| CliError::Io(format!("{}: {e}", art.hash_file(stage).display())))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    let mut file =
        std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for item in items {
        let line = serde_json::to_string(item).expect("sidecar record serializes");
        writeln!(file, "{line}").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line)
            .map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

/// Reads a decoded/reference token sidecar.
pub fn read_tokens(path: &Path) -> CliResult<Vec<TokenRecord>> {
    read_jsonl(path)
}

fn ensure_work_dir(config: &RunConfig) -> CliResult<Artifacts> {
    std::fs::create_dir_all(&config.work_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", config.work_dir.display())))?;
    Ok(Artifacts::new(&config.work_dir))
}

/// Load, filter, split, and run the frontend over every kept record.
pub fn stage_extract(config: &RunConfig) -> CliResult<()> {
    require(&config.corpus)?;
    let art = ensure_work_dir(config)?;
    let fp = fingerprint(
        "extract",
        &[
            file_digest(&config.corpus)?,
            config.max_code_tokens.to_string(),
            config.max_comment_tokens.to_string(),
            config.seed.to_string(),
        ],
    );
    let outputs = vec![art.filtered(), art.stats(), art.extract()];
    if up_to_date(&art, "extract", "extract", &fp, &outputs) {
        return Ok(());
    }

    let outcome = load_corpus(&config.corpus)?;
    for err in &outcome.errors {
        eprintln!("{}:{}: {}", config.corpus.display(), err.line, err.message);
    }
    if !outcome.errors.is_empty() {
        eprintln!("{} malformed corpus lines skipped", outcome.errors.len());
    }

    let (mut kept, mut stats) = filter_corpus(
        outcome.records,
        config.max_code_tokens,
        config.max_comment_tokens,
        true,
    );
    assign_splits(&mut kept, config.seed);
    stats.train = kept.iter().filter(|r| r.split == Some(Split::Train)).count();
    stats.validation = kept
        .iter()
        .filter(|r| r.split == Some(Split::Validation))
        .count();
    stats.test = kept.iter().filter(|r| r.split == Some(Split::Test)).count();
    stats.unsplit = 0;

    let mut extracts = Vec::with_capacity(kept.len());
    for record in &kept {
        let tokens = lex_java(&record.code_text)?;
        let tree = parse_method(&tokens)?;
        extracts.push(ExtractRecord {
            id: record.id.clone(),
            signature: extract_signature(&tree),
            calls: extract_api_calls(&tree),
            sbt: sbt_flatten(&tree),
        });
    }

    comgen_core::corpus::write_corpus(&kept, &art.filtered())?;
    let stats_json = serde_json::to_string_pretty(&stats).expect("stats serialize");
    std::fs::write(art.stats(), &stats_json)
        .map_err(|e| CliError::Io(format!("{}: {e}", art.stats().display())))?;
    println!("{stats_json}");
    write_jsonl(&art.extract(), &extracts)?;
    store_hash(&art, "extract", &fp)
}

/// Match call sites against the catalog and rank by parameter score.
pub fn stage_rank(config: &RunConfig) -> CliResult<()> {
    let art = ensure_work_dir(config)?;
    require(&art.extract())?;
    require(&config.catalog)?;
    let fp = fingerprint(
        "rank",
        &[
            file_digest(&art.extract())?,
            file_digest(&config.catalog)?,
            format!("{:?}", config.n_apis),
        ],
    );
    let outputs = vec![art.rank()];
    if up_to_date(&art, "rank", "rank", &fp, &outputs) {
        return Ok(());
    }

    let loaded = load_catalog(&config.catalog)?;
    for err in &loaded.errors {
        eprintln!("{}:{}: {}", config.catalog.display(), err.line, err.message);
    }
    let catalog = loaded.catalog;

    let extracts: Vec<ExtractRecord> = read_jsonl(&art.extract())?;
    let mut records = Vec::with_capacity(extracts.len());
    for ex in &extracts {
        let mut matched = Vec::new();
        let mut index_by_order: HashMap<usize, (usize, MatchTier)> = HashMap::new();
        let mut unmatched = 0usize;
        for call in &ex.calls {
            match match_call_indexed(call, &catalog) {
                Some((catalog_index, tier)) => {
                    index_by_order.insert(call.order_index, (catalog_index, tier));
                    matched.push((catalog.entries()[catalog_index].clone(), call.order_index));
                }
                None => unmatched += 1,
            }
        }
        let set = score_apis(&ex.signature, matched, unmatched);
        let n_selected = select_top_n(set.clone(), config.n_apis.to_limit()).n_selected;
        let ranked = set
            .ranked
            .iter()
            .map(|r| {
                let (catalog_index, tier) = index_by_order[&r.order_index];
                RankEntry {
                    qualified_name: r.entry.qualified_name.clone(),
                    score: r.score,
                    order_index: r.order_index,
                    catalog_index,
                    tier,
                }
            })
            .collect();
        records.push(RankRecord {
            id: ex.id.clone(),
            ranked,
            n_selected,
            unmatched_count: set.unmatched_count,
        });
    }
    write_jsonl(&art.rank(), &records)?;
    store_hash(&art, "rank", &fp)
}

/// Build vocabularies on the training split and encode every record.
pub fn stage_prepare(config: &RunConfig) -> CliResult<()> {
    let art = ensure_work_dir(config)?;
    require(&art.filtered())?;
    require(&art.extract())?;
    require(&art.rank())?;
    require(&config.catalog)?;
    let fp = fingerprint(
        "prepare",
        &[
            file_digest(&art.filtered())?,
            file_digest(&art.extract())?,
            file_digest(&art.rank())?,
            file_digest(&config.catalog)?,
            config.src_vocab_size.to_string(),
            config.tgt_vocab_size.to_string(),
            format!("{:?}", config.caps()),
        ],
    );
    let outputs = vec![
        art.source_vocab(),
        art.target_vocab(),
        art.prepared(Split::Train),
        art.prepared(Split::Validation),
        art.prepared(Split::Test),
    ];
    if up_to_date(&art, "prepare", "prepare", &fp, &outputs) {
        return Ok(());
    }

    let records = load_corpus(&art.filtered())?.records;
    let extracts: HashMap<String, ExtractRecord> = read_jsonl::<ExtractRecord>(&art.extract())?
        .into_iter()
        .map(|e| (e.id.clone(), e))
        .collect();
    let ranks: HashMap<String, RankRecord> = read_jsonl::<RankRecord>(&art.rank())?
        .into_iter()
        .map(|r| (r.id.clone(), r))
        .collect();
    let catalog = load_catalog(&config.catalog)?.catalog;

    let ranked_set = |id: &str| -> CliResult<RankedApiSet> {
        let rank = ranks
            .get(id)
            .ok_or_else(|| CliError::Validation(format!("record {id} missing from rank sidecar")))?;
        let ranked: Vec<RankedApi> = rank
            .ranked
            .iter()
            .map(|e| RankedApi {
                entry: catalog.entries()[e.catalog_index].clone(),
                score: e.score,
                order_index: e.order_index,
            })
            .collect();
        Ok(RankedApiSet {
            ranked,
            n_selected: rank.n_selected,
            unmatched_count: rank.unmatched_count,
        })
    };

    // source vocabulary sees code, flattened-tree, and selected API
    // text of the training split; the target side sees comments
    let mut source_stream: Vec<String> = Vec::new();
    let mut target_stream: Vec<String> = Vec::new();
    for record in records.iter().filter(|r| r.split == Some(Split::Train)) {
        let ex = &extracts[&record.id];
        source_stream.extend(subtoken_split(&record.code_text));
        source_stream.extend(ex.sbt.iter().cloned());
        let set = ranked_set(&record.id)?;
        for api in set.selected() {
            source_stream.extend(comgen_core::catalog::render_description(&api.entry));
            source_stream.extend(comgen_core::catalog::render_definition(&api.entry));
        }
        target_stream.extend(subtoken_split(&record.comment_text));
    }
    if source_stream.is_empty() || target_stream.is_empty() {
        return Err(CliError::Validation(
            "training split is empty; cannot build vocabularies".into(),
        ));
    }
    let source_vocab = Vocabulary::build(
        source_stream.iter().map(|s| s.as_str()),
        config.src_vocab_size,
        1,
    );
    let target_vocab = Vocabulary::build(
        target_stream.iter().map(|s| s.as_str()),
        config.tgt_vocab_size,
        1,
    );

    let caps = config.caps();
    let mut by_split: HashMap<Split, Vec<PreparedExample>> = HashMap::new();
    for record in &records {
        let ex = &extracts[&record.id];
        let set = ranked_set(&record.id)?;
        let prepared = encode_example(
            &record.id,
            &record.code_text,
            &record.comment_text,
            &ex.sbt,
            &set,
            &source_vocab,
            &target_vocab,
            &caps,
        );
        by_split
            .entry(record.split.expect("extract assigns splits"))
            .or_default()
            .push(prepared);
    }

    source_vocab.save(&art.source_vocab())?;
    target_vocab.save(&art.target_vocab())?;
    for split in [Split::Train, Split::Validation, Split::Test] {
        let examples = by_split.remove(&split).unwrap_or_default();
        write_prepared(&examples, &art.prepared(split))?;
    }
    store_hash(&art, "prepare", &fp)
}

fn load_vocabs(art: &Artifacts) -> CliResult<(Vocabulary, Vocabulary)> {
    Ok((
        Vocabulary::load(&art.source_vocab())?,
        Vocabulary::load(&art.target_vocab())?,
    ))
}

/// Train on the prepared train/validation splits and persist the best
/// weights plus the loss history.
pub fn stage_train(config: &RunConfig) -> CliResult<TrainHistory> {
    let art = ensure_work_dir(config)?;
    require(&art.prepared(Split::Train))?;
    require(&art.prepared(Split::Validation))?;
    require(&art.source_vocab())?;
    require(&art.target_vocab())?;

    let (source_vocab, target_vocab) = load_vocabs(&art)?;
    let model_config = config.model_config(source_vocab.len(), target_vocab.len());
    let fp = fingerprint(
        "train",
        &[
            file_digest(&art.prepared(Split::Train))?,
            file_digest(&art.prepared(Split::Validation))?,
            serde_json::to_string(&model_config).expect("config serializes"),
        ],
    );
    let outputs = vec![art.model(), art.history()];
    if up_to_date(&art, "train", "train", &fp, &outputs) {
        let history: TrainHistory = serde_json::from_str(
            &std::fs::read_to_string(art.history())
                .map_err(|e| CliError::Io(format!("{}: {e}", art.history().display())))?,
        )
        .map_err(|e| CliError::Validation(format!("history: {e}")))?;
        return Ok(history);
    }

    let train_set = load_prepared(&art.prepared(Split::Train))?;
    let val_set = load_prepared(&art.prepared(Split::Validation))?;
    let (params, history) = train(&model_config, &train_set, &val_set)?;
    save_params(&params, &art.model())?;
    std::fs::write(
        art.history(),
        serde_json::to_string_pretty(&history).expect("history serializes"),
    )
    .map_err(|e| CliError::Io(format!("{}: {e}", art.history().display())))?;
    if let (Some(first), Some(last)) = (history.epochs.first(), history.epochs.last()) {
        println!(
            "train: {} epochs, loss {:.4} -> {:.4} (best validation at epoch {})",
            history.epochs.len(),
            first.train_loss,
            last.train_loss,
            history.best_epoch
        );
    }
    store_hash(&art, "train", &fp)?;
    Ok(history)
}

/// Decode the test split and score it against the references.
pub fn stage_evaluate(config: &RunConfig) -> CliResult<ScoreReport> {
    let art = ensure_work_dir(config)?;
    require(&art.model())?;
    require(&art.prepared(Split::Test))?;
    require(&art.filtered())?;
    let fp = fingerprint(
        "evaluate",
        &[
            file_digest(&art.model())?,
            file_digest(&art.prepared(Split::Test))?,
            file_digest(&art.filtered())?,
            config.max_decode_len.to_string(),
        ],
    );
    let outputs = vec![art.decoded(), art.references(), art.score_report()];
    if up_to_date(&art, "evaluate", "evaluate", &fp, &outputs) {
        let report: ScoreReport = serde_json::from_str(
            &std::fs::read_to_string(art.score_report())
                .map_err(|e| CliError::Io(format!("{}: {e}", art.score_report().display())))?,
        )
        .map_err(|e| CliError::Validation(format!("score report: {e}")))?;
        return Ok(report);
    }

    let params = load_params(&art.model())?;
    let (_, target_vocab) = load_vocabs(&art)?;
    let test_set = load_prepared(&art.prepared(Split::Test))?;
    if test_set.is_empty() {
        return Err(CliError::Validation("test split is empty".into()));
    }

    let decoded: Vec<TokenRecord> = test_set
        .iter()
        .map(|example| {
            let out = greedy_decode(&params, example, config.max_decode_len);
            TokenRecord {
                id: example.id.clone(),
                tokens: target_vocab.decode(&out.ids),
            }
        })
        .collect();

    let records = load_corpus(&art.filtered())?.records;
    let reference_text: HashMap<String, Vec<String>> = records
        .iter()
        .filter(|r| r.split == Some(Split::Test))
        .map(|r| {
            let mut tokens = subtoken_split(&r.comment_text);
            tokens.truncate(config.max_comment_tokens);
            (r.id.clone(), tokens)
        })
        .collect();
    let references: Vec<TokenRecord> = decoded
        .iter()
        .map(|d| {
            reference_text
                .get(&d.id)
                .map(|tokens| TokenRecord {
                    id: d.id.clone(),
                    tokens: tokens.clone(),
                })
                .ok_or_else(|| {
                    CliError::Validation(format!("record {} missing from references", d.id))
                })
        })
        .collect::<CliResult<_>>()?;

    let decoded_pairs: Vec<(String, Vec<String>)> = decoded
        .iter()
        .map(|r| (r.id.clone(), r.tokens.clone()))
        .collect();
    let reference_pairs: Vec<(String, Vec<String>)> = references
        .iter()
        .map(|r| (r.id.clone(), r.tokens.clone()))
        .collect();
    let report = evaluate_corpus(&decoded_pairs, &reference_pairs)?;

    write_jsonl(&art.decoded(), &decoded)?;
    write_jsonl(&art.references(), &references)?;
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(art.score_report(), &report_json)
        .map_err(|e| CliError::Io(format!("{}: {e}", art.score_report().display())))?;
    println!("{report_json}");
    store_hash(&art, "evaluate", &fp)?;
    Ok(report)
}

#[derive(Debug, Deserialize)]
struct SummarizeInput {
    id: String,
    code: String,
}

/// Generate comments for arbitrary methods with a trained model.
pub fn run_summarize(
    config: &RunConfig,
    input: &Path,
    output: Option<&Path>,
    emit_attention: bool,
) -> CliResult<()> {
    let art = Artifacts::new(&config.work_dir);
    require(&art.model())?;
    require(&art.source_vocab())?;
    require(&art.target_vocab())?;
    require(&config.catalog)?;
    require(input)?;

    let params = load_params(&art.model())?;
    let (source_vocab, target_vocab) = load_vocabs(&art)?;
    let catalog = load_catalog(&config.catalog)?.catalog;
    let caps = config.caps();

    let inputs: Vec<SummarizeInput> = read_jsonl(input)?;
    let mut results = Vec::with_capacity(inputs.len());
    for item in &inputs {
        match summarize_one(config, &params, &source_vocab, &target_vocab, &catalog, &caps, item) {
            Ok((comment, attention)) => results.push(SummaryRecord {
                id: item.id.clone(),
                comment: Some(comment),
                error: None,
                attention: if emit_attention { Some(attention) } else { None },
            }),
            Err(e) => {
                eprintln!("{}: {e}", item.id);
                results.push(SummaryRecord {
                    id: item.id.clone(),
                    comment: None,
                    error: Some(e.to_string()),
                    attention: None,
                });
            }
        }
    }
    match output {
        Some(path) => write_jsonl(path, &results)?,
        None => {
            for record in &results {
                println!("{}", serde_json::to_string(record).expect("summary serializes"));
            }
        }
    }
    Ok(())
}

fn summarize_one(
    config: &RunConfig,
    params: &ModelParams,
    source_vocab: &Vocabulary,
    target_vocab: &Vocabulary,
    catalog: &Catalog,
    caps: &comgen_core::textprep::ChannelCaps,
    item: &SummarizeInput,
) -> comgen_core::Result<(String, Vec<comgen_core::neural::StepAttention>)> {
    let tokens = lex_java(&item.code)?;
    let tree = parse_method(&tokens)?;
    let signature = extract_signature(&tree);
    let calls = extract_api_calls(&tree);
    let sbt = sbt_flatten(&tree);

    let mut matched = Vec::new();
    let mut unmatched = 0usize;
    for call in &calls {
        match match_call_indexed(call, catalog) {
            Some((idx, _)) => matched.push((catalog.entries()[idx].clone(), call.order_index)),
            None => unmatched += 1,
        }
    }
    let set = select_top_n(
        score_apis(&signature, matched, unmatched),
        config.n_apis.to_limit(),
    );
    let prepared = encode_example(
        &item.id,
        &item.code,
        "",
        &sbt,
        &set,
        source_vocab,
        target_vocab,
        caps,
    );
    let out = greedy_decode(params, &prepared, config.max_decode_len);
    Ok((target_vocab.decode(&out.ids).join(" "), out.attention))
}

/// Schema and index check for a catalog file.
pub fn validate_catalog(path: &Path) -> CliResult<bool> {
    require(path)?;
    let loaded = load_catalog(path)?;
    for err in &loaded.errors {
        eprintln!("{}:{}: {}", path.display(), err.line, err.message);
    }
    println!(
        "{}",
        serde_json::json!({
            "entries": loaded.catalog.len(),
            "malformed_lines": loaded.errors.len(),
            "ambiguous_name_arity_keys": loaded.catalog.ambiguous_key_count(),
        })
    );
    Ok(loaded.errors.is_empty())
}
