//! Regenerates the bundled fixture corpora and catalogs under
//! crates/cli/fixtures/. The generators are seeded, so the files are
//! reproducible byte for byte.

use std::io::Write;
use std::path::Path;

use comgen_core::corpus::write_corpus;
use comgen_core::synth::{desk_catalog, generate_api_corpus, overfit_pairs};

fn write_catalog(entries: &[comgen_core::catalog::ApiEntry], path: &Path) {
    let mut file = std::fs::File::create(path).expect("create catalog file");
    for entry in entries {
        writeln!(file, "{}", serde_json::to_string(entry).unwrap()).unwrap();
    }
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).expect("create fixtures dir");

    write_catalog(&desk_catalog(), &dir.join("desk_catalog.jsonl"));
    write_corpus(&overfit_pairs(), &dir.join("overfit32.jsonl")).unwrap();

    // small corpus for pipeline smoke runs and the ablation harness
    let desk = generate_api_corpus(200, 30, 2024);
    write_catalog(&desk.catalog, &dir.join("desk_corpus_catalog.jsonl"));
    write_corpus(&desk.records, &dir.join("desk_corpus.jsonl")).unwrap();

    // larger corpus for the API-context direction experiment
    let synth = generate_api_corpus(520, 120, 4096);
    write_catalog(&synth.catalog, &dir.join("synthetic_catalog.jsonl"));
    write_corpus(&synth.records, &dir.join("synthetic_corpus.jsonl")).unwrap();

    println!("fixtures written to {}", dir.display());
}
