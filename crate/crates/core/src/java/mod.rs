//! A small Java frontend: lexer, subset-grammar method parser, call-site
//! and signature extraction, and structure-based tree flattening.
//!
//! The parser covers a documented subset of Java (see [`parser`]); any
//! construct outside it collapses into an `Opaque` leaf so that parsing
//! is total over lexable method bodies.

pub mod lexer;
pub mod parser;
pub mod sbt;

pub use lexer::{lex_java, JToken, TokenKind};
pub use parser::{
    extract_api_calls, extract_signature, parse_method, ApiCallSite, MethodSignature, NodeKind,
    ParamDecl, SyntaxTree,
};
pub use sbt::{sbt_flatten, sbt_parse};

use crate::error::Result;

/// Lexes and parses a method in one step.
pub fn parse_method_text(code_text: &str) -> Result<SyntaxTree> {
    let tokens = lex_java(code_text)?;
    parse_method(&tokens)
}
