//! Offline API-documentation catalog: load, index, and match call sites
//! to entries, and render each entry's definition and description as
//! token sources for the model.
//!
//! Catalog files are JSON lines with keys `qualified_name`, `params`
//! (array of `{type, name}`), and `description`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::LineError;
use crate::error::{Error, Result};
use crate::java::ApiCallSite;
use crate::textprep::{subtoken_split, UNK_TOKEN};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiParam {
    #[serde(rename = "type")]
    pub type_text: String,
    #[serde(rename = "name")]
    pub name_text: String,
}

/// One catalogued API with its first-sentence description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiEntry {
    pub qualified_name: String,
    #[serde(skip, default)]
    pub simple_name: String,
    pub params: Vec<ApiParam>,
    pub description: String,
}

impl ApiEntry {
    fn finish(mut self) -> Self {
        self.simple_name = self
            .qualified_name
            .rsplit('.')
            .next()
            .unwrap_or(&self.qualified_name)
            .to_string();
        self
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// How a call site resolved against the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchTier {
    NameAndArity,
    NameOnly,
}

#[derive(Debug, Clone)]
pub struct ApiMatch<'c> {
    pub entry: &'c ApiEntry,
    pub tier: MatchTier,
}

/// Entries indexed by (simple name, arity) and by simple name alone;
/// buckets preserve catalog-file order.
#[derive(Debug, Default)]
pub struct Catalog {
    entries: Vec<ApiEntry>,
    by_name_arity: HashMap<(String, usize), Vec<usize>>,
    by_name: HashMap<String, Vec<usize>>,
}

impl Catalog {
    pub fn from_entries(raw: Vec<ApiEntry>) -> Self {
        let mut catalog = Catalog::default();
        for entry in raw {
            catalog.insert(entry.finish());
        }
        catalog
    }

    fn insert(&mut self, entry: ApiEntry) {
        let idx = self.entries.len();
        self.by_name_arity
            .entry((entry.simple_name.clone(), entry.arity()))
            .or_default()
            .push(idx);
        self.by_name
            .entry(entry.simple_name.clone())
            .or_default()
            .push(idx);
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ApiEntry] {
        &self.entries
    }

    /// All entries for (simple name, arity), in catalog order.
    pub fn lookup(&self, simple_name: &str, arity: usize) -> Vec<&ApiEntry> {
        self.by_name_arity
            .get(&(simple_name.to_string(), arity))
            .map(|v| v.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    /// Count of (name, arity) keys that hold more than one overload.
    pub fn ambiguous_key_count(&self) -> usize {
        self.by_name_arity.values().filter(|v| v.len() > 1).count()
    }
}

#[derive(Debug)]
pub struct CatalogLoadOutcome {
    pub catalog: Catalog,
    pub errors: Vec<LineError>,
}

pub fn load_catalog(path: &Path) -> Result<CatalogLoadOutcome> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut catalog = Catalog::default();
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ApiEntry>(&line) {
            Ok(entry) if entry.description.trim().is_empty() => errors.push(LineError {
                line: i + 1,
                message: format!("{}: empty description", entry.qualified_name),
            }),
            Ok(entry) => catalog.insert(entry.finish()),
            Err(e) => errors.push(LineError {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok(CatalogLoadOutcome { catalog, errors })
}

/// Resolves a call site: exact (name, arity) first, then name alone,
/// first catalog-order entry in either tier.
pub fn match_call<'c>(call: &ApiCallSite, catalog: &'c Catalog) -> Option<ApiMatch<'c>> {
    match_call_indexed(call, catalog).map(|(index, tier)| ApiMatch {
        entry: &catalog.entries[index],
        tier,
    })
}

/// Like [`match_call`] but returns the catalog position, which sidecar
/// files store so overloads rejoin unambiguously.
pub fn match_call_indexed(call: &ApiCallSite, catalog: &Catalog) -> Option<(usize, MatchTier)> {
    if let Some(indices) = catalog
        .by_name_arity
        .get(&(call.simple_name.clone(), call.arg_count))
    {
        return Some((indices[0], MatchTier::NameAndArity));
    }
    if let Some(indices) = catalog.by_name.get(&call.simple_name) {
        return Some((indices[0], MatchTier::NameOnly));
    }
    None
}

/// Definition tokens: split simple name, then each parameter's type and
/// name. Never empty for a catalogued entry.
pub fn render_definition(entry: &ApiEntry) -> Vec<String> {
    let mut tokens = subtoken_split(&entry.simple_name);
    for param in &entry.params {
        tokens.extend(subtoken_split(&param.type_text));
        tokens.extend(subtoken_split(&param.name_text));
    }
    if tokens.is_empty() {
        tokens.push(UNK_TOKEN.to_string());
    }
    tokens
}

pub const DESCRIPTION_TOKEN_CAP: usize = 32;

/// Normalized description tokens, truncated to 32; a description that
/// normalizes to nothing yields a single placeholder token.
pub fn render_description(entry: &ApiEntry) -> Vec<String> {
    let mut tokens = subtoken_split(&entry.description);
    tokens.truncate(DESCRIPTION_TOKEN_CAP);
    if tokens.is_empty() {
        tokens.push(UNK_TOKEN.to_string());
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(qualified: &str, params: &[(&str, &str)], description: &str) -> ApiEntry {
        ApiEntry {
            qualified_name: qualified.to_string(),
            simple_name: String::new(),
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

    fn call(name: &str, argc: usize) -> ApiCallSite {
        ApiCallSite {
            simple_name: name.to_string(),
            arg_count: argc,
            receiver_text: None,
            order_index: 0,
        }
    }

    #[test]
    fn simple_name_is_last_segment() {
        let catalog = Catalog::from_entries(vec![entry(
            "java.io.Writer.write",
            &[("String", "str")],
            "Writes a portion of a string",
        )]);
        let found = catalog.lookup("write", 1);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].simple_name, "write");
    }

    #[test]
    fn empty_catalog_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        let out = load_catalog(&path).unwrap();
        assert!(out.catalog.is_empty());
        assert!(out.errors.is_empty());
    }

    #[test]
    fn malformed_lines_are_reported_and_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cat.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"qualified_name\":\"a.b.c\",\"params\":[],\"description\":\"does c\"}\n",
                "garbage\n",
                "{\"qualified_name\":\"a.b.d\",\"params\":[],\"description\":\"  \"}\n",
            ),
        )
        .unwrap();
        let out = load_catalog(&path).unwrap();
        assert_eq!(out.catalog.len(), 1);
        assert_eq!(out.errors.len(), 2);
        assert_eq!(out.errors[1].line, 3);
    }

    #[test]
    fn overloads_stay_retrievable_in_order() {
        let catalog = Catalog::from_entries(vec![
            entry("java.io.Writer.write", &[("String", "str")], "Writes a string"),
            entry("java.io.Writer.write", &[("char[]", "cbuf")], "Writes an array"),
        ]);
        let found = catalog.lookup("write", 1);
        assert_eq!(found.len(), 2);
        assert_eq!(found[0].description, "Writes a string");
        assert_eq!(catalog.ambiguous_key_count(), 1);
    }

    #[test]
    fn match_prefers_name_and_arity() {
        let catalog = Catalog::from_entries(vec![
            entry("a.X.get", &[], "gets with no argument"),
            entry("a.Y.get", &[("int", "index")], "gets by index"),
        ]);
        let matched = match_call(&call("get", 1), &catalog).unwrap();
        assert_eq!(matched.entry.qualified_name, "a.Y.get");
        assert_eq!(matched.tier, MatchTier::NameAndArity);
    }

    #[test]
    fn name_only_fallback_takes_first_in_catalog_order() {
        let catalog = Catalog::from_entries(vec![
            entry("a.X.put", &[("int", "k"), ("int", "v")], "puts a pair"),
            entry("a.Y.put", &[("String", "k")], "puts a key"),
        ]);
        let matched = match_call(&call("put", 5), &catalog).unwrap();
        assert_eq!(matched.entry.qualified_name, "a.X.put");
        assert_eq!(matched.tier, MatchTier::NameOnly);
    }

    #[test]
    fn unknown_name_matches_nothing() {
        let catalog = Catalog::from_entries(vec![entry("a.X.get", &[], "gets")]);
        assert!(match_call(&call("fooBarBaz", 0), &catalog).is_none());
    }

    #[test]
    fn starts_with_matches_fixture() {
        let catalog = Catalog::from_entries(vec![entry(
            "java.lang.String.startsWith",
            &[("String", "prefix")],
            "Tests if this string starts with the specified prefix",
        )]);
        let matched = match_call(&call("startsWith", 1), &catalog).unwrap();
        assert_eq!(matched.entry.simple_name, "startsWith");
    }

    #[test]
    fn definition_rendering_splits_name_and_params() {
        let e = entry("java.lang.String.startsWith", &[("String", "prefix")], "d").finish();
        assert_eq!(render_definition(&e), ["starts", "with", "string", "prefix"]);

        let e = entry(
            "java.util.concurrent.CountDownLatch.await",
            &[("long", "timeout"), ("TimeUnit", "unit")],
            "d",
        )
        .finish();
        assert_eq!(
            render_definition(&e),
            ["await", "long", "timeout", "time", "unit", "unit"]
        );

        let e = entry("a.B.getCount", &[], "d").finish();
        assert_eq!(render_definition(&e), ["get", "count"]);
    }

    #[test]
    fn description_rendering_normalizes_and_caps() {
        let e = entry("a.B.write", &[], "Writes a portion of a string").finish();
        assert_eq!(
            render_description(&e),
            ["writes", "a", "portion", "of", "a", "string"]
        );

        let e = entry("a.B.flush", &[], "flushes the stream").finish();
        assert_eq!(render_description(&e), ["flushes", "the", "stream"]);

        let long_desc = (0..50).map(|i| format!("w{i} ")).collect::<String>();
        let e = entry("a.B.x", &[], &long_desc).finish();
        assert_eq!(render_description(&e).len(), DESCRIPTION_TOKEN_CAP);

        let e = entry("a.B.y", &[], "...!").finish();
        assert_eq!(render_description(&e), [UNK_TOKEN]);
    }
}
