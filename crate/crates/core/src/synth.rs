//! Deterministic desk-scale fixtures: random syntax trees, a small
//! JDK-style catalog, a bundled overfit set, and a synthetic corpus
//! whose comments paraphrase the top-ranked API's description.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::{ApiEntry, ApiParam};
use crate::corpus::CorpusRecord;
use crate::java::parser::{SyntaxTree, ALL_KINDS};

/// Random tree over the closed node-kind set; leaves may carry labels.
pub fn random_tree(rng: &mut ChaCha8Rng, max_depth: usize, max_fanout: usize) -> SyntaxTree {
    let kind = ALL_KINDS[rng.random_range(0..ALL_KINDS.len())];
    let n_children = if max_depth == 0 {
        0
    } else {
        rng.random_range(0..=max_fanout)
    };
    if n_children == 0 {
        if rng.random_bool(0.5) {
            let label: String = (0..rng.random_range(1..=6))
                .map(|_| (b'a' + rng.random_range(0..26u8)) as char)
                .collect();
            SyntaxTree::labeled(kind, label)
        } else {
            SyntaxTree::leaf(kind)
        }
    } else {
        let children = (0..n_children)
            .map(|_| random_tree(rng, max_depth - 1, max_fanout))
            .collect();
        SyntaxTree::interior(kind, children)
    }
}

fn entry(qualified: &str, params: &[(&str, &str)], description: &str) -> ApiEntry {
    ApiEntry {
        qualified_name: qualified.to_string(),
        simple_name: qualified.rsplit('.').next().unwrap().to_string(),
        params: params
            .iter()
            .map(|(t, n)| ApiParam {
                type_text: t.to_string(),
                name_text: n.to_string(),
            })
            .collect(),
        description: description.to_string(),
    }
}

/// A small catalog in the style of JDK reference documentation.
pub fn desk_catalog() -> Vec<ApiEntry> {
    vec![
        entry("java.io.File.createNewFile", &[], "Creates a new empty file named by this pathname"),
        entry("java.io.File.setLastModified", &[("long", "time")], "Sets the last modified time of the file"),
        entry("java.io.File.exists", &[], "Tests whether the file denoted by this pathname exists"),
        entry("java.io.File.delete", &[], "Deletes the file or directory denoted by this pathname"),
        entry("java.io.File.mkdir", &[], "Creates the directory named by this pathname"),
        entry("java.io.File.getName", &[], "Returns the name of the file or directory"),
        entry("java.io.File.length", &[], "Returns the length of the file in bytes"),
        entry("java.io.Writer.write", &[("String", "str")], "Writes a portion of a string"),
        entry("java.io.Writer.flush", &[], "Flushes the stream"),
        entry("java.io.Writer.close", &[], "Closes the stream flushing it first"),
        entry("java.io.Writer.append", &[("char", "c")], "Appends the specified character to this writer"),
        entry("java.io.BufferedReader.readLine", &[], "Reads a line of text"),
        entry("java.io.Reader.read", &[], "Reads a single character"),
        entry("java.lang.String.startsWith", &[("String", "prefix")], "Tests if this string starts with the specified prefix"),
        entry("java.lang.String.endsWith", &[("String", "suffix")], "Tests if this string ends with the specified suffix"),
        entry("java.lang.String.substring", &[("int", "beginIndex")], "Returns a string that is a substring of this string"),
        entry("java.lang.String.indexOf", &[("String", "str")], "Returns the index of the first occurrence of the specified substring"),
        entry("java.lang.String.toLowerCase", &[], "Converts all of the characters in this string to lower case"),
        entry("java.lang.String.trim", &[], "Returns a string whose value is this string with leading and trailing whitespace removed"),
        entry("java.lang.String.split", &[("String", "regex")], "Splits this string around matches of the given regular expression"),
        entry("java.lang.String.isEmpty", &[], "Returns true if the length of the string is zero"),
        entry("java.lang.String.valueOf", &[("int", "i")], "Returns the string representation of the int argument"),
        entry("java.lang.StringBuilder.append", &[("String", "str")], "Appends the specified string to this character sequence"),
        entry("java.lang.Integer.parseInt", &[("String", "s")], "Parses the string argument as a signed decimal integer"),
        entry("java.util.List.add", &[("Object", "e")], "Appends the specified element to the end of this list"),
        entry("java.util.List.remove", &[("int", "index")], "Removes the element at the specified position in this list"),
        entry("java.util.List.contains", &[("Object", "o")], "Returns true if this list contains the specified element"),
        entry("java.util.List.size", &[], "Returns the number of elements in this list"),
        entry("java.util.List.get", &[("int", "index")], "Returns the element at the specified position in this list"),
        entry("java.util.List.clear", &[], "Removes all of the elements from this list"),
        entry("java.util.Map.put", &[("Object", "key"), ("Object", "value")], "Associates the specified value with the specified key in this map"),
        entry("java.util.Map.get", &[("Object", "key")], "Returns the value to which the specified key is mapped"),
        entry("java.util.Map.containsKey", &[("Object", "key")], "Returns true if this map contains a mapping for the specified key"),
        entry("java.util.Map.keySet", &[], "Returns a set view of the keys contained in this map"),
        entry("java.util.concurrent.CountDownLatch.await", &[("long", "timeout"), ("TimeUnit", "unit")], "Causes the current thread to wait until the latch has counted down to zero or the timeout elapses"),
        entry("java.util.concurrent.CountDownLatch.getCount", &[], "Returns the current count"),
        entry("java.util.concurrent.CountDownLatch.countDown", &[], "Decrements the count of the latch releasing all waiting threads if the count reaches zero"),
        entry("java.awt.Graphics.dispose", &[], "Disposes of this graphics context and releases any system resources that it is using"),
        entry("java.lang.Thread.sleep", &[("long", "millis")], "Causes the currently executing thread to sleep for the specified number of milliseconds"),
        entry("java.lang.System.currentTimeMillis", &[], "Returns the current time in milliseconds"),
        entry("java.lang.Object.equals", &[("Object", "obj")], "Indicates whether some other object is equal to this one"),
        entry("java.lang.Object.toString", &[], "Returns a string representation of the object"),
    ]
}

/// Thirty-two small method/comment pairs over [`desk_catalog`] APIs,
/// used for the memorization experiment.
pub fn overfit_pairs() -> Vec<CorpusRecord> {
    const PAIRS: [(&str, &str); 32] = [
        ("public boolean hasPrefix(String s, String prefix) { return s.startsWith(prefix); }",
         "tests if the string starts with the prefix"),
        ("public void saveText(Writer w, String text) { w.write(text); w.flush(); }",
         "writes the text and flushes the stream"),
        ("public void makeFile(File f) { f.createNewFile(); }",
         "creates a new empty file"),
        ("public void touchFile(File f, long time) { f.setLastModified(time); }",
         "sets the last modified time"),
        ("public boolean fileThere(File f) { return f.exists(); }",
         "checks whether the file exists"),
        ("public void dropFile(File f) { f.delete(); }",
         "deletes the given file"),
        ("public void makeDir(File dir) { dir.mkdir(); }",
         "creates the directory"),
        ("public String fileName(File f) { return f.getName(); }",
         "returns the name of the file"),
        ("public long fileSize(File f) { return f.length(); }",
         "returns the length of the file in bytes"),
        ("public String nextLine(BufferedReader reader) { return reader.readLine(); }",
         "reads a line of text"),
        ("public boolean hasSuffix(String s, String suffix) { return s.endsWith(suffix); }",
         "tests if the string ends with the suffix"),
        ("public String tailOf(String s, int beginIndex) { return s.substring(beginIndex); }",
         "returns a substring of the string"),
        ("public int findIn(String s, String str) { return s.indexOf(str); }",
         "returns the index of the first occurrence"),
        ("public String lowered(String s) { return s.toLowerCase(); }",
         "converts the string to lower case"),
        ("public String cleaned(String s) { return s.trim(); }",
         "removes leading and trailing whitespace"),
        ("public boolean nothing(String s) { return s.isEmpty(); }",
         "returns true if the string is empty"),
        ("public int parseNumber(String s) { return Integer.parseInt(s); }",
         "parses the string as an integer"),
        ("public void addItem(List items, Object e) { items.add(e); }",
         "appends the element to the list"),
        ("public void dropAt(List items, int index) { items.remove(index); }",
         "removes the element at the position"),
        ("public boolean holds(List items, Object o) { return items.contains(o); }",
         "returns true if the list contains the element"),
        ("public int itemCount(List items) { return items.size(); }",
         "returns the number of elements"),
        ("public Object itemAt(List items, int index) { return items.get(index); }",
         "returns the element at the position"),
        ("public void wipe(List items) { items.clear(); }",
         "removes all elements from the list"),
        ("public void storePair(Map m, Object key, Object value) { m.put(key, value); }",
         "associates the value with the key"),
        ("public Object lookup(Map m, Object key) { return m.get(key); }",
         "returns the value mapped to the key"),
        ("public boolean hasKey(Map m, Object key) { return m.containsKey(key); }",
         "returns true if the map contains the key"),
        ("public boolean waitDone(CountDownLatch latch, long timeout, TimeUnit unit) { return latch.await(timeout, unit); }",
         "waits until the latch reaches zero or times out"),
        ("public long pending(CountDownLatch latch) { return latch.getCount(); }",
         "returns the current count"),
        ("public void tick(CountDownLatch latch) { latch.countDown(); }",
         "decrements the count of the latch"),
        ("public void freeUp(Graphics g) { g.dispose(); }",
         "releases the graphics resources"),
        ("public void pauseFor(long millis) { Thread.sleep(millis); }",
         "sleeps for the given milliseconds"),
        ("public long stamp() { return System.currentTimeMillis(); }",
         "returns the current time in milliseconds"),
    ];
    PAIRS
        .iter()
        .enumerate()
        .map(|(i, (code, comment))| CorpusRecord {
            id: format!("pair-{i:02}"),
            code_text: code.to_string(),
            comment_text: comment.to_string(),
            split: None,
        })
        .collect()
}

const VERBS: [&str; 20] = [
    "reads", "writes", "updates", "removes", "returns", "computes", "clears", "copies", "counts",
    "builds", "checks", "loads", "saves", "merges", "opens", "closes", "appends", "resets",
    "fills", "moves",
];

const NOUNS: [&str; 40] = [
    "stream", "buffer", "index", "record", "cache", "token", "node", "queue", "frame", "batch",
    "slice", "page", "chunk", "field", "label", "graph", "entry", "block", "range", "shard",
    "tuple", "probe", "flag", "route", "scope", "trace", "merge", "split", "fetch", "store",
    "scan", "emit", "bind", "fold", "mapping", "filter", "join", "sort", "sync", "flush",
];

const NAME_PARTS: [&str; 24] = [
    "Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta", "Eta", "Theta", "Iota", "Kappa",
    "Lambda", "Mu", "Nu", "Xi", "Omicron", "Pi", "Rho", "Sigma", "Tau", "Upsilon", "Phi", "Chi",
    "Psi", "Omega",
];

const NAME_PREFIXES: [&str; 6] = ["apply", "handle", "probe", "touch", "visit", "mark"];
const METHOD_VERBS: [&str; 6] = ["run", "process", "execute", "perform", "invoke", "drive"];
const RECEIVERS: [&str; 5] = ["worker", "helper", "engine", "client", "service"];
const PARAM_TYPES: [(&str, &str); 8] = [
    ("int", "count"),
    ("long", "offset"),
    ("double", "ratio"),
    ("String", "label"),
    ("File", "target"),
    ("List", "items"),
    ("Map", "table"),
    ("char", "mark"),
];

/// A generated corpus plus the catalog its methods call into.
pub struct SyntheticCorpus {
    pub catalog: Vec<ApiEntry>,
    pub records: Vec<CorpusRecord>,
}

/// Synthetic methods whose comment paraphrases the description of the
/// one API whose parameters match the method's (the ranker's top pick);
/// the other calls are zero-argument decoys. API names are built from
/// letters unrelated to the description words, so the comment content
/// reaches the model only through the description channel or per-API
/// memorization.
pub fn generate_api_corpus(n_methods: usize, n_primary_apis: usize, seed: u64) -> SyntheticCorpus {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let api_name = |i: usize| -> String {
        format!(
            "{}{}{}",
            NAME_PREFIXES[(i / 576) % NAME_PREFIXES.len()],
            NAME_PARTS[i % NAME_PARTS.len()],
            NAME_PARTS[(i / 24) % NAME_PARTS.len()],
        )
    };
    let description = |rng: &mut ChaCha8Rng| -> String {
        let verb = VERBS[rng.random_range(0..VERBS.len())];
        let n1 = NOUNS[rng.random_range(0..NOUNS.len())];
        let n2 = NOUNS[rng.random_range(0..NOUNS.len())];
        let n3 = NOUNS[rng.random_range(0..NOUNS.len())];
        match rng.random_range(0..3) {
            0 => format!("{verb} the {n1} {n2} of the {n3}"),
            1 => format!("{verb} each {n1} in the {n2} {n3}"),
            _ => format!("{verb} the {n1} from the {n2} into the {n3}"),
        }
    };

    let n_decoys = (n_primary_apis / 2).max(4);
    let mut catalog = Vec::new();
    for i in 0..n_primary_apis {
        let arity = rng.random_range(1..=2);
        let params: Vec<ApiParam> = (0..arity)
            .map(|k| {
                let (t, n) = PARAM_TYPES[rng.random_range(0..PARAM_TYPES.len())];
                ApiParam {
                    type_text: t.to_string(),
                    name_text: format!("{n}{k}"),
                }
            })
            .collect();
        let name = api_name(i);
        catalog.push(ApiEntry {
            qualified_name: format!("synth.Primary.{name}"),
            simple_name: name,
            params,
            description: description(&mut rng),
        });
    }
    for i in 0..n_decoys {
        let name = api_name(n_primary_apis + i);
        catalog.push(ApiEntry {
            qualified_name: format!("synth.Decoy.{name}"),
            simple_name: name,
            params: Vec::new(),
            description: description(&mut rng),
        });
    }

    let mut records = Vec::new();
    for m in 0..n_methods {
        let primary = &catalog[rng.random_range(0..n_primary_apis)];
        let d1 = &catalog[n_primary_apis + rng.random_range(0..n_decoys)];
        let d2 = &catalog[n_primary_apis + rng.random_range(0..n_decoys)];

        let sig_params: Vec<String> = primary
            .params
            .iter()
            .enumerate()
            .map(|(k, p)| format!("{} {}{}", p.type_text, p.name_text.trim_end_matches(char::is_numeric), k))
            .collect();
        let arg_names: Vec<String> = primary
            .params
            .iter()
            .enumerate()
            .map(|(k, p)| format!("{}{}", p.name_text.trim_end_matches(char::is_numeric), k))
            .collect();

        let recv = RECEIVERS[rng.random_range(0..RECEIVERS.len())];
        let primary_call = format!("{recv}.{}({});", primary.simple_name, arg_names.join(", "));
        let decoy_call_1 = format!("{recv}.{}();", d1.simple_name);
        let decoy_call_2 = format!("{recv}.{}();", d2.simple_name);
        let mut statements = vec![primary_call, decoy_call_1, decoy_call_2];
        statements.rotate_left(m % 3);

        let method_name = format!("{}Task{m}", METHOD_VERBS[rng.random_range(0..METHOD_VERBS.len())]);
        let code = format!(
            "public void {method_name}({}) {{ {} }}",
            sig_params.join(", "),
            statements.join(" ")
        );

        // paraphrase: the verb loses its third-person 's'
        let mut comment_tokens: Vec<String> =
            primary.description.split(' ').map(|s| s.to_string()).collect();
        if let Some(first) = comment_tokens.first_mut() {
            if first.ends_with('s') {
                first.pop();
            }
        }

        records.push(CorpusRecord {
            id: format!("synth-{m:04}"),
            code_text: code,
            comment_text: comment_tokens.join(" "),
            split: None,
        });
    }

    SyntheticCorpus { catalog, records }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{match_call, Catalog};
    use crate::java::{extract_api_calls, extract_signature, parse_method_text};
    use crate::ranker::score_apis;

    #[test]
    fn overfit_pairs_parse_and_are_unique() {
        let pairs = overfit_pairs();
        assert_eq!(pairs.len(), 32);
        let mut ids: Vec<&str> = pairs.iter().map(|p| p.id.as_str()).collect();
        ids.dedup();
        assert_eq!(ids.len(), 32);
        for pair in &pairs {
            parse_method_text(&pair.code_text)
                .unwrap_or_else(|e| panic!("{}: {e}", pair.id));
        }
    }

    #[test]
    fn desk_catalog_entries_are_well_formed() {
        for e in desk_catalog() {
            assert!(!e.description.trim().is_empty());
            assert_eq!(e.simple_name, e.qualified_name.rsplit('.').next().unwrap());
        }
    }

    #[test]
    fn synthetic_methods_parse_and_rank_the_intended_api_first() {
        let synth = generate_api_corpus(60, 24, 99);
        let catalog = Catalog::from_entries(synth.catalog.clone());
        for record in &synth.records {
            let tree = parse_method_text(&record.code_text)
                .unwrap_or_else(|e| panic!("{}: {e}\n{}", record.id, record.code_text));
            let sig = extract_signature(&tree);
            let calls = extract_api_calls(&tree);
            assert_eq!(calls.len(), 3, "{}", record.code_text);
            let matched: Vec<_> = calls
                .iter()
                .filter_map(|c| {
                    match_call(c, &catalog).map(|m| (m.entry.clone(), c.order_index))
                })
                .collect();
            assert_eq!(matched.len(), 3, "unmatched call in {}", record.code_text);
            let ranked = score_apis(&sig, matched, 0);
            let top = &ranked.ranked[0];
            assert_eq!(top.score, 0, "{}", record.code_text);
            // the comment is the top API's description minus the verb 's'
            let desc = &top.entry.description;
            assert_eq!(
                record.comment_text.split(' ').skip(1).collect::<Vec<_>>(),
                desc.split(' ').skip(1).collect::<Vec<_>>(),
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_api_corpus(20, 10, 7);
        let b = generate_api_corpus(20, 10, 7);
        assert_eq!(a.records, b.records);
        assert_eq!(a.catalog, b.catalog);
    }
}
