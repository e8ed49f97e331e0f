//! Text normalization, sub-token splitting, vocabularies, and id encoding.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{render_definition, render_description};
use crate::error::{Error, Result};
use crate::ranker::RankedApiSet;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

pub const PAD_TOKEN: &str = "<pad>";
pub const BOS_TOKEN: &str = "<bos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";

const SPECIALS: [&str; 4] = [PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN];

/// Splits text into normalized sub-tokens.
///
/// Whitespace and ASCII punctuation (underscore included) separate
/// segments and are dropped. Within a segment, boundaries fall at
/// camelCase humps, before the last capital of an acronym run
/// (`HTTPServer` -> `http server`), and between letters and digits.
/// Output is lowercased and never contains empty tokens.
pub fn subtoken_split(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut segment: Vec<char> = Vec::new();

    for ch in text.chars() {
        if ch.is_whitespace() || is_separator_punct(ch) {
            split_segment(&segment, &mut tokens);
            segment.clear();
        } else {
            segment.push(ch);
        }
    }
    split_segment(&segment, &mut tokens);
    tokens
}

/// ASCII punctuation acts as a token separator. Underscore is in the
/// class too: it marks a snake_case boundary and is then dropped.
fn is_separator_punct(ch: char) -> bool {
    ch.is_ascii_punctuation()
}

fn split_segment(segment: &[char], out: &mut Vec<String>) {
    if segment.is_empty() {
        return;
    }
    let mut start = 0;
    for i in 1..segment.len() {
        if is_boundary(segment, i) {
            push_lower(&segment[start..i], out);
            start = i;
        }
    }
    push_lower(&segment[start..], out);
}

/// True when a sub-token boundary falls immediately before index `i`.
fn is_boundary(seg: &[char], i: usize) -> bool {
    let prev = seg[i - 1];
    let cur = seg[i];
    // lower or digit followed by upper: camelCase hump
    if cur.is_uppercase() && !prev.is_uppercase() && !prev.is_ascii_digit() {
        return true;
    }
    // acronym run ending: upper followed by upper+lower (HTTPServer -> HTTP|Server)
    if cur.is_uppercase() && prev.is_uppercase() {
        if let Some(&next) = seg.get(i + 1) {
            if next.is_lowercase() {
                return true;
            }
        }
        return false;
    }
    // letter/digit transitions in both directions
    if cur.is_ascii_digit() != prev.is_ascii_digit() {
        return true;
    }
    false
}

fn push_lower(chars: &[char], out: &mut Vec<String>) {
    if chars.is_empty() {
        return;
    }
    let token: String = chars.iter().flat_map(|c| c.to_lowercase()).collect();
    if !token.is_empty() {
        out.push(token);
    }
}

/// Bijective token<->id map with fixed special ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from a token stream.
    ///
    /// Tokens are ranked by (frequency desc, first-seen asc), truncated
    /// to `max_size - 4`, and the four specials take ids 0..4.
    pub fn build<'a, I>(tokens: I, max_size: usize, min_freq: usize) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut freq: HashMap<&str, (usize, usize)> = HashMap::new(); // token -> (count, first_seen)
        for (pos, tok) in tokens.into_iter().enumerate() {
            let entry = freq.entry(tok).or_insert((0, pos));
            entry.0 += 1;
        }
        let mut ranked: Vec<(&str, usize, usize)> =
            freq.into_iter().map(|(t, (c, p))| (t, c, p)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));

        let capacity = max_size.saturating_sub(SPECIALS.len());
        let mut id_to_token: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        for (tok, count, _) in ranked {
            if count < min_freq || id_to_token.len() - SPECIALS.len() >= capacity {
                continue;
            }
            id_to_token.push(tok.to_string());
        }
        Self::from_tokens(id_to_token)
    }

    fn from_tokens(id_to_token: Vec<String>) -> Self {
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            token_to_id,
            id_to_token,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // specials are always present
    }

    /// Id for a token, UNK when out of vocabulary.
    pub fn encode_token(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.encode_token(t)).collect()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.id_to_token[id]
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.id_to_token[i].clone()).collect()
    }

    /// Writes non-special tokens, one per line; line `i` holds id `i + 4`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        for token in &self.id_to_token[SPECIALS.len()..] {
            writeln!(file, "{token}").map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut id_to_token: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
            id_to_token.push(line);
        }
        Ok(Self::from_tokens(id_to_token))
    }
}

/// Per-channel truncation limits, measured in sub-tokens before framing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChannelCaps {
    pub code: usize,
    pub ast: usize,
    pub description: usize,
    pub definition: usize,
    pub comment: usize,
}

impl Default for ChannelCaps {
    fn default() -> Self {
        ChannelCaps {
            code: 256,
            ast: 512,
            description: 32,
            definition: 16,
            comment: 64,
        }
    }
}

/// Id-encoded four-channel model input plus the framed target comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedExample {
    pub id: String,
    pub code_ids: Vec<usize>,
    pub ast_ids: Vec<usize>,
    pub desc_channels: Vec<Vec<usize>>,
    pub def_channels: Vec<Vec<usize>>,
    pub target_ids: Vec<usize>,
}

/// Encodes one record into id sequences.
///
/// The code and AST channels truncate to their caps; each selected API
/// contributes one description and one definition channel, BOS/EOS
/// framed; the target comment is BOS/EOS framed. Out-of-vocabulary
/// tokens map to UNK. A channel that normalizes to nothing becomes a
/// single UNK so every encoder input is non-empty.
pub fn encode_example(
    id: &str,
    code_text: &str,
    comment_text: &str,
    sbt_tokens: &[String],
    ranked: &RankedApiSet,
    source_vocab: &Vocabulary,
    target_vocab: &Vocabulary,
    caps: &ChannelCaps,
) -> PreparedExample {
    let code_tokens = subtoken_split(code_text);
    let code_ids = encode_capped(source_vocab, &code_tokens, caps.code);

    let mut ast_ids: Vec<usize> = sbt_tokens
        .iter()
        .take(caps.ast)
        .map(|t| source_vocab.encode_token(t))
        .collect();
    if ast_ids.is_empty() {
        ast_ids.push(UNK);
    }

    let mut desc_channels = Vec::new();
    let mut def_channels = Vec::new();
    for api in ranked.selected() {
        let desc = render_description(&api.entry);
        desc_channels.push(frame(encode_capped(
            source_vocab,
            &desc,
            caps.description,
        )));
        let def = render_definition(&api.entry);
        def_channels.push(frame(encode_capped(source_vocab, &def, caps.definition)));
    }

    let comment_tokens = subtoken_split(comment_text);
    let target_ids = frame(
        comment_tokens
            .iter()
            .take(caps.comment)
            .map(|t| target_vocab.encode_token(t))
            .collect(),
    );

    PreparedExample {
        id: id.to_string(),
        code_ids,
        ast_ids,
        desc_channels,
        def_channels,
        target_ids,
    }
}

fn encode_capped(vocab: &Vocabulary, tokens: &[String], cap: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = tokens
        .iter()
        .take(cap)
        .map(|t| vocab.encode_token(t))
        .collect();
    if ids.is_empty() {
        ids.push(UNK);
    }
    ids
}

fn frame(mut ids: Vec<usize>) -> Vec<usize> {
    ids.insert(0, BOS);
    ids.push(EOS);
    ids
}

/// Writes prepared examples as JSON lines keyed by record id.
pub fn write_prepared(examples: &[PreparedExample], path: &Path) -> Result<()> {
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    for ex in examples {
        let line = serde_json::to_string(ex).expect("prepared example serializes");
        writeln!(file, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

pub fn load_prepared(path: &Path) -> Result<Vec<PreparedExample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: PreparedExample = serde_json::from_str(&line)
            .map_err(|e| Error::Eval(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(ex);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(s: &str) -> Vec<String> {
        subtoken_split(s)
    }

    #[test]
    fn camel_case_splits() {
        assert_eq!(split("createNewFile"), ["create", "new", "file"]);
    }

    #[test]
    fn snake_case_splits() {
        assert_eq!(split("last_modified"), ["last", "modified"]);
    }

    #[test]
    fn acronym_and_digit_boundaries() {
        assert_eq!(split("HTTPServer2x"), ["http", "server", "2", "x"]);
    }

    #[test]
    fn punctuation_is_dropped() {
        assert_eq!(split("s.startsWith(prefix);"), ["s", "starts", "with", "prefix"]);
        assert_eq!(split("a;b"), ["a", "b"]);
    }

    #[test]
    fn split_is_idempotent_on_own_output() {
        for input in ["createNewFile", "HTTPServer2x", "foo_bar baz99Qux", "a.b(x)"] {
            let once = split(input);
            let twice: Vec<String> = once.iter().flat_map(|t| split(t)).collect();
            assert_eq!(once, twice, "input {input:?}");
        }
    }

    #[test]
    fn lowercasing_first_stabilizes() {
        for input in ["setCount", "x1y", "weird_Mix99"] {
            let first = split(input);
            let joined = first.join(" ");
            assert_eq!(split(&joined), first, "input {input:?}");
        }
    }

    #[test]
    fn vocab_build_ranks_by_frequency_then_first_seen() {
        let stream = ["a", "b", "a"];
        let vocab = Vocabulary::build(stream, 10, 1);
        assert_eq!(vocab.len(), 6); // 4 specials + a + b
        assert_eq!(vocab.encode_token("a"), 4);
        assert_eq!(vocab.encode_token("b"), 5);
        assert_eq!(vocab.token(PAD), PAD_TOKEN);
        assert_eq!(vocab.token(UNK), UNK_TOKEN);
    }

    #[test]
    fn vocab_tie_breaks_by_first_seen() {
        let stream = ["x", "y", "y", "x"];
        let vocab = Vocabulary::build(stream, 10, 1);
        assert_eq!(vocab.encode_token("x"), 4);
        assert_eq!(vocab.encode_token("y"), 5);
    }

    #[test]
    fn vocab_min_freq_excludes_rare_tokens() {
        let vocab = Vocabulary::build(["a", "b", "a"], 10, 2);
        assert_eq!(vocab.encode_token("a"), 4);
        assert_eq!(vocab.encode_token("b"), UNK);
    }

    #[test]
    fn vocab_truncates_to_max_size() {
        let stream = ["a", "a", "a", "b", "b", "c"];
        let vocab = Vocabulary::build(stream, 6, 1);
        assert_eq!(vocab.len(), 6);
        assert_eq!(vocab.encode_token("c"), UNK);
    }

    #[test]
    fn vocab_round_trips_through_file() {
        let vocab = Vocabulary::build(["alpha", "beta", "alpha"], 100, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.vocab");
        vocab.save(&path).unwrap();
        let loaded = Vocabulary::load(&path).unwrap();
        assert_eq!(vocab, loaded);
    }

    #[test]
    fn encode_decode_round_trip_for_in_vocab_tokens() {
        let tokens = ["sets", "the", "last", "modified", "time"];
        let vocab = Vocabulary::build(tokens, 100, 1);
        let toks: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
        let ids = vocab.encode(&toks);
        assert_eq!(vocab.decode(&ids), toks);
    }
}
