//! Structure-based traversal: a bracketed flattening of a syntax tree
//! into plain tokens, and its inverse.
//!
//! Each node emits `(`, its label, its children, `)`, its label again,
//! so the output is always balanced and exactly four tokens per node.
//! Labeled leaves emit `Kind_value`; other nodes emit their kind alone.

use super::parser::{NodeKind, SyntaxTree};
use crate::error::{Error, Result};

pub fn sbt_flatten(tree: &SyntaxTree) -> Vec<String> {
    let mut out = Vec::with_capacity(tree.node_count() * 4);
    flatten_into(tree, &mut out);
    out
}

fn flatten_into(node: &SyntaxTree, out: &mut Vec<String>) {
    let label = node_label(node);
    out.push("(".to_string());
    out.push(label.clone());
    for child in &node.children {
        flatten_into(child, out);
    }
    out.push(")".to_string());
    out.push(label);
}

fn node_label(node: &SyntaxTree) -> String {
    match &node.label {
        Some(value) => format!("{}_{}", node.kind.as_str(), value),
        None => node.kind.as_str().to_string(),
    }
}

/// Rebuilds the tree from `sbt_flatten` output.
pub fn sbt_parse(tokens: &[String]) -> Result<SyntaxTree> {
    let mut pos = 0;
    let tree = parse_node(tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(Error::Sbt {
            index: pos,
            message: "trailing tokens after root node".into(),
        });
    }
    Ok(tree)
}

fn parse_node(tokens: &[String], pos: &mut usize) -> Result<SyntaxTree> {
    expect(tokens, pos, "(")?;
    let open_label = next(tokens, pos)?.clone();
    let (kind, label) = split_label(&open_label, *pos - 1)?;

    let mut children = Vec::new();
    while tokens.get(*pos).map(String::as_str) == Some("(") {
        children.push(parse_node(tokens, pos)?);
    }

    expect(tokens, pos, ")")?;
    let close_label = next(tokens, pos)?;
    if *close_label != open_label {
        return Err(Error::Sbt {
            index: *pos - 1,
            message: format!("label mismatch: opened {open_label:?}, closed {close_label:?}"),
        });
    }
    if label.is_some() && !children.is_empty() {
        return Err(Error::Sbt {
            index: *pos - 1,
            message: format!("labeled node {open_label:?} has children"),
        });
    }

    Ok(SyntaxTree {
        kind,
        label,
        children,
    })
}

fn split_label(token: &str, index: usize) -> Result<(NodeKind, Option<String>)> {
    let (kind_str, label) = match token.split_once('_') {
        Some((kind, value)) => (kind, Some(value.to_string())),
        None => (token, None),
    };
    let kind = NodeKind::from_str(kind_str).ok_or_else(|| Error::Sbt {
        index,
        message: format!("unknown node kind {kind_str:?}"),
    })?;
    Ok((kind, label))
}

fn next<'t>(tokens: &'t [String], pos: &mut usize) -> Result<&'t String> {
    let tok = tokens.get(*pos).ok_or_else(|| Error::Sbt {
        index: *pos,
        message: "unexpected end of tokens".into(),
    })?;
    *pos += 1;
    Ok(tok)
}

fn expect(tokens: &[String], pos: &mut usize, want: &str) -> Result<()> {
    let tok = next(tokens, pos)?;
    if tok != want {
        return Err(Error::Sbt {
            index: *pos - 1,
            message: format!("expected {want:?}, found {tok:?}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::{lex_java, parse_method};
    use crate::synth::random_tree;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_node_flattens_to_four_tokens() {
        let tree = SyntaxTree::leaf(NodeKind::MethodDecl);
        assert_eq!(
            sbt_flatten(&tree),
            toks(&["(", "MethodDecl", ")", "MethodDecl"])
        );
    }

    #[test]
    fn labeled_leaf_under_interior_node() {
        let tree = SyntaxTree::interior(
            NodeKind::MethodDecl,
            vec![SyntaxTree::labeled(NodeKind::Name, "f")],
        );
        assert_eq!(
            sbt_flatten(&tree),
            toks(&["(", "MethodDecl", "(", "Name_f", ")", "Name_f", ")", "MethodDecl"])
        );
    }

    #[test]
    fn output_is_balanced_and_four_tokens_per_node() {
        let tree = parse_method(&lex_java("int f(int a) { return g(a) + 1; }").unwrap()).unwrap();
        let flat = sbt_flatten(&tree);
        assert_eq!(flat.len(), 4 * tree.node_count());
        let mut depth = 0i64;
        for tok in &flat {
            match tok.as_str() {
                "(" => depth += 1,
                ")" => depth -= 1,
                _ => {}
            }
            assert!(depth >= 0);
        }
        assert_eq!(depth, 0);
    }

    #[test]
    fn parse_inverts_flatten_on_a_real_method() {
        let src = "public boolean await(long timeout, TimeUnit unit) { \
                   latch.await(timeout, unit); return latch.getCount() == 0; }";
        let tree = parse_method(&lex_java(src).unwrap()).unwrap();
        let rebuilt = sbt_parse(&sbt_flatten(&tree)).unwrap();
        assert_eq!(tree, rebuilt);
    }

    #[test]
    fn minimal_token_sequence_parses() {
        let tree = sbt_parse(&toks(&["(", "Name_a", ")", "Name_a"])).unwrap();
        assert_eq!(tree.kind, NodeKind::Name);
        assert_eq!(tree.label.as_deref(), Some("a"));
    }

    #[test]
    fn label_mismatch_is_an_error() {
        assert!(sbt_parse(&toks(&["(", "Block", ")", "Args"])).is_err());
    }

    #[test]
    fn unbalanced_input_is_an_error() {
        assert!(sbt_parse(&toks(&["(", "Block", "(", "Args", ")", "Args"])).is_err());
        assert!(sbt_parse(&toks(&["(", "Block"])).is_err());
    }

    #[test]
    fn unknown_kind_is_an_error() {
        assert!(sbt_parse(&toks(&["(", "Nonsense", ")", "Nonsense"])).is_err());
    }

    #[test]
    fn round_trip_holds_on_random_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..300 {
            let tree = random_tree(&mut rng, 8, 5);
            let flat = sbt_flatten(&tree);
            assert_eq!(flat.len(), 4 * tree.node_count());
            let rebuilt = sbt_parse(&flat).expect("flattened tree parses");
            assert_eq!(tree, rebuilt);
        }
    }
}
