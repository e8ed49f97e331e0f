//! Java lexer. Comments are skipped; everything else becomes a token
//! that carries its exact source text and byte offset.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JToken {
    pub kind: TokenKind,
    pub text: String,
    pub offset: usize,
}

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while",
];

// Longest first so multi-char operators win.
const OPERATORS: &[&str] = &[
    ">>>=", ">>>", ">>=", "<<=", "->", "::", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "+", "-", "*", "/", "%", "=", "!", "<",
    ">", "&", "|", "^", "~", "?", ":", "@",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.'];

pub fn lex_java(source: &str) -> Result<Vec<JToken>> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < bytes.len() {
        let rest = &source[i..];
        let ch = rest.chars().next().unwrap();

        if ch.is_whitespace() {
            i += ch.len_utf8();
            continue;
        }

        // line comment
        if rest.starts_with("//") {
            i += rest.find('\n').map(|p| p + 1).unwrap_or(rest.len());
            continue;
        }
        // block comment
        if rest.starts_with("/*") {
            match rest[2..].find("*/") {
                Some(p) => i += 2 + p + 2,
                None => {
                    return Err(Error::Lex {
                        offset: i,
                        message: "unterminated block comment".into(),
                    })
                }
            }
            continue;
        }

        if ch == '"' || ch == '\'' {
            let len = lex_quoted(rest, ch).ok_or_else(|| Error::Lex {
                offset: i,
                message: format!(
                    "unterminated {} literal",
                    if ch == '"' { "string" } else { "char" }
                ),
            })?;
            tokens.push(JToken {
                kind: TokenKind::Literal,
                text: rest[..len].to_string(),
                offset: i,
            });
            i += len;
            continue;
        }

        if ch.is_ascii_digit() {
            let len = lex_number(rest);
            tokens.push(JToken {
                kind: TokenKind::Literal,
                text: rest[..len].to_string(),
                offset: i,
            });
            i += len;
            continue;
        }

        if ch.is_alphabetic() || ch == '_' || ch == '$' {
            let len = rest
                .char_indices()
                .find(|(_, c)| !(c.is_alphanumeric() || *c == '_' || *c == '$'))
                .map(|(p, _)| p)
                .unwrap_or(rest.len());
            let word = &rest[..len];
            let kind = if word == "true" || word == "false" || word == "null" {
                TokenKind::Literal
            } else if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            tokens.push(JToken {
                kind,
                text: word.to_string(),
                offset: i,
            });
            i += len;
            continue;
        }

        if PUNCTUATION.contains(&ch) {
            tokens.push(JToken {
                kind: TokenKind::Punctuation,
                text: ch.to_string(),
                offset: i,
            });
            i += ch.len_utf8();
            continue;
        }

        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            tokens.push(JToken {
                kind: TokenKind::Operator,
                text: op.to_string(),
                offset: i,
            });
            i += op.len();
            continue;
        }

        return Err(Error::Lex {
            offset: i,
            message: format!("unexpected character {ch:?}"),
        });
    }
    Ok(tokens)
}

/// Length of a quoted literal including quotes, or None if unterminated.
fn lex_quoted(rest: &str, quote: char) -> Option<usize> {
    let mut chars = rest.char_indices().skip(1);
    while let Some((p, c)) = chars.next() {
        if c == '\\' {
            chars.next()?;
        } else if c == quote {
            return Some(p + c.len_utf8());
        } else if c == '\n' {
            return None;
        }
    }
    None
}

/// Integer or float literal: digits plus hex/binary prefixes, dots,
/// exponents, and type suffixes, taken greedily.
fn lex_number(rest: &str) -> usize {
    let mut len = 0;
    let mut prev = '\0';
    for (p, c) in rest.char_indices() {
        let ok = c.is_ascii_alphanumeric()
            || c == '.'
            || c == '_'
            || ((c == '+' || c == '-') && (prev == 'e' || prev == 'E'));
        if !ok {
            return p;
        }
        // a dot only continues the number if followed by a digit
        if c == '.' && !rest[p + 1..].starts_with(|d: char| d.is_ascii_digit()) {
            return p;
        }
        prev = c;
        len = p + c.len_utf8();
    }
    len
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_texts(src: &str) -> Vec<(TokenKind, String)> {
        lex_java(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn lexes_simple_declaration() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_texts("int x = 1;"),
            vec![
                (Keyword, "int".into()),
                (Identifier, "x".into()),
                (Operator, "=".into()),
                (Literal, "1".into()),
                (Punctuation, ";".into()),
            ]
        );
    }

    #[test]
    fn lexes_method_call_chain() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_texts("s.startsWith(prefix)"),
            vec![
                (Identifier, "s".into()),
                (Punctuation, ".".into()),
                (Identifier, "startsWith".into()),
                (Punctuation, "(".into()),
                (Identifier, "prefix".into()),
                (Punctuation, ")".into()),
            ]
        );
    }

    #[test]
    fn string_literal_swallows_separators() {
        let tokens = lex_java("String s = \"a;b\";").unwrap();
        let lit = tokens.iter().find(|t| t.kind == TokenKind::Literal).unwrap();
        assert_eq!(lit.text, "\"a;b\"");
        assert_eq!(tokens.iter().filter(|t| t.text == ";").count(), 1);
    }

    #[test]
    fn escaped_quote_stays_inside_literal() {
        let tokens = lex_java(r#"x = "a\"b";"#).unwrap();
        let lit = tokens.iter().find(|t| t.kind == TokenKind::Literal).unwrap();
        assert_eq!(lit.text, r#""a\"b""#);
    }

    #[test]
    fn unterminated_string_errors_with_offset() {
        let err = lex_java("f(\"abc").unwrap_err();
        match err {
            Error::Lex { offset, .. } => assert_eq!(offset, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unterminated_block_comment_errors() {
        assert!(lex_java("int x; /* oops").is_err());
    }

    #[test]
    fn comments_are_skipped() {
        let tokens = lex_java("int x; // trailing\n/* block */ int y;").unwrap();
        let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["int", "x", ";", "int", "y", ";"]);
    }

    #[test]
    fn token_texts_reconstruct_source_without_comments() {
        let src = "void f(int a) { return a + 1; }";
        let tokens = lex_java(src).unwrap();
        let mut rebuilt = String::new();
        let mut cursor = 0;
        for t in &tokens {
            rebuilt.push_str(&src[cursor..t.offset]);
            rebuilt.push_str(&t.text);
            cursor = t.offset + t.text.len();
        }
        rebuilt.push_str(&src[cursor..]);
        assert_eq!(rebuilt, src);
    }

    #[test]
    fn offsets_strictly_increase() {
        let tokens = lex_java("a.b(x).c(y, z) >= 1.5e-3f").unwrap();
        for pair in tokens.windows(2) {
            assert!(pair[0].offset < pair[1].offset);
        }
    }

    #[test]
    fn float_and_hex_literals() {
        let tokens = lex_java("0x1F 1.5e-3f 2L 3.0").unwrap();
        let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["0x1F", "1.5e-3f", "2L", "3.0"]);
        assert!(tokens.iter().all(|t| t.kind == TokenKind::Literal));
    }

    #[test]
    fn dot_after_number_is_member_access_when_not_digit() {
        let tokens = lex_java("f(1.toString())").unwrap();
        let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["f", "(", "1", ".", "toString", "(", ")", ")"]);
    }
}
