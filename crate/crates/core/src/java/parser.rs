//! Recursive-descent parser for a documented subset of Java methods.
//!
//! Supported: one method (or constructor) declaration with modifiers,
//! annotations (skipped), a throws clause, and a body built from
//! blocks, `if`/`while`/`for`/foreach, `return`/`break`/`continue`/
//! `throw`, local declarations, and expression statements. Expressions
//! cover assignment, the ternary operator, binary and unary operators,
//! calls (including `new T(...)` and chained calls), field access, and
//! indexing. Generic arguments are stripped from types.
//!
//! Unsupported constructs (lambdas, casts, anonymous classes, `try`,
//! `switch`, `do`, array creation) collapse into an `Opaque` leaf
//! covering their token span, so parsing never fails past the header.

use serde::{Deserialize, Serialize};

use super::lexer::{JToken, TokenKind};
use crate::error::{Error, Result};

/// Closed node-category set for [`SyntaxTree::kind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    MethodDecl,
    Modifier,
    Type,
    Name,
    Params,
    Param,
    Throws,
    Block,
    If,
    While,
    For,
    ForEach,
    Return,
    Break,
    Continue,
    Throw,
    LocalDecl,
    ExprStmt,
    Assign,
    Ternary,
    BinOp,
    Unary,
    Op,
    Call,
    Args,
    FieldAccess,
    Index,
    Literal,
    Opaque,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::MethodDecl => "MethodDecl",
            NodeKind::Modifier => "Modifier",
            NodeKind::Type => "Type",
            NodeKind::Name => "Name",
            NodeKind::Params => "Params",
            NodeKind::Param => "Param",
            NodeKind::Throws => "Throws",
            NodeKind::Block => "Block",
            NodeKind::If => "If",
            NodeKind::While => "While",
            NodeKind::For => "For",
            NodeKind::ForEach => "ForEach",
            NodeKind::Return => "Return",
            NodeKind::Break => "Break",
            NodeKind::Continue => "Continue",
            NodeKind::Throw => "Throw",
            NodeKind::LocalDecl => "LocalDecl",
            NodeKind::ExprStmt => "ExprStmt",
            NodeKind::Assign => "Assign",
            NodeKind::Ternary => "Ternary",
            NodeKind::BinOp => "BinOp",
            NodeKind::Unary => "Unary",
            NodeKind::Op => "Op",
            NodeKind::Call => "Call",
            NodeKind::Args => "Args",
            NodeKind::FieldAccess => "FieldAccess",
            NodeKind::Index => "Index",
            NodeKind::Literal => "Literal",
            NodeKind::Opaque => "Opaque",
        }
    }

    pub fn from_str(s: &str) -> Option<NodeKind> {
        ALL_KINDS.iter().copied().find(|k| k.as_str() == s)
    }
}

pub const ALL_KINDS: &[NodeKind] = &[
    NodeKind::MethodDecl,
    NodeKind::Modifier,
    NodeKind::Type,
    NodeKind::Name,
    NodeKind::Params,
    NodeKind::Param,
    NodeKind::Throws,
    NodeKind::Block,
    NodeKind::If,
    NodeKind::While,
    NodeKind::For,
    NodeKind::ForEach,
    NodeKind::Return,
    NodeKind::Break,
    NodeKind::Continue,
    NodeKind::Throw,
    NodeKind::LocalDecl,
    NodeKind::ExprStmt,
    NodeKind::Assign,
    NodeKind::Ternary,
    NodeKind::BinOp,
    NodeKind::Unary,
    NodeKind::Op,
    NodeKind::Call,
    NodeKind::Args,
    NodeKind::FieldAccess,
    NodeKind::Index,
    NodeKind::Literal,
    NodeKind::Opaque,
];

/// Ordered tree over [`NodeKind`]; only childless nodes carry a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxTree {
    pub kind: NodeKind,
    pub label: Option<String>,
    pub children: Vec<SyntaxTree>,
}

impl SyntaxTree {
    pub fn interior(kind: NodeKind, children: Vec<SyntaxTree>) -> Self {
        SyntaxTree {
            kind,
            label: None,
            children,
        }
    }

    pub fn leaf(kind: NodeKind) -> Self {
        SyntaxTree {
            kind,
            label: None,
            children: Vec::new(),
        }
    }

    pub fn labeled(kind: NodeKind, label: impl Into<String>) -> Self {
        SyntaxTree {
            kind,
            label: Some(label.into()),
            children: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// First direct child of the given kind.
    pub fn child(&self, kind: NodeKind) -> Option<&SyntaxTree> {
        self.children.iter().find(|c| c.kind == kind)
    }
}

/// Method name plus ordered (type, name) parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSignature {
    pub name: String,
    pub params: Vec<ParamDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDecl {
    #[serde(rename = "type")]
    pub type_text: String,
    #[serde(rename = "name")]
    pub name_text: String,
}

/// One call expression found in a method body, in source order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiCallSite {
    pub simple_name: String,
    pub arg_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receiver_text: Option<String>,
    pub order_index: usize,
}

struct Parser<'a> {
    tokens: &'a [JToken],
    pos: usize,
}

type ParseResult<T> = std::result::Result<T, Error>;

pub fn parse_method(tokens: &[JToken]) -> Result<SyntaxTree> {
    let mut parser = Parser { tokens, pos: 0 };
    let tree = parser.method_decl()?;
    if parser.pos < parser.tokens.len() {
        return Err(parser.err("trailing tokens after method declaration"));
    }
    Ok(tree)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&JToken> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, ahead: usize) -> Option<&JToken> {
        self.tokens.get(self.pos + ahead)
    }

    fn advance(&mut self) -> Option<&JToken> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn offset(&self) -> usize {
        self.peek()
            .map(|t| t.offset)
            .or_else(|| self.tokens.last().map(|t| t.offset + t.text.len()))
            .unwrap_or(0)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text)
    }

    fn is_at(&self, ahead: usize, text: &str) -> bool {
        self.peek_at(ahead).is_some_and(|t| t.text == text)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.is(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> ParseResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(self.err(format!("expected {text:?}")))
        }
    }

    fn identifier(&mut self) -> ParseResult<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let text = t.text.clone();
                self.pos += 1;
                Ok(text)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    // ---- header ----

    fn method_decl(&mut self) -> ParseResult<SyntaxTree> {
        let mut children = Vec::new();

        loop {
            if self.is("@") {
                self.skip_annotation()?;
                continue;
            }
            match self.peek() {
                Some(t) if t.kind == TokenKind::Keyword && is_modifier(&t.text) => {
                    children.push(SyntaxTree::labeled(NodeKind::Modifier, t.text.clone()));
                    self.pos += 1;
                }
                _ => break,
            }
        }

        if self.is("<") {
            self.skip_balanced_angle()?;
        }

        // constructor: identifier immediately followed by '('
        let ctor = self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.is_at(1, "(");
        let name = if ctor {
            self.identifier()?
        } else {
            let type_text = self.type_text()?;
            children.push(SyntaxTree::labeled(NodeKind::Type, type_text));
            self.identifier()?
        };
        children.push(SyntaxTree::labeled(NodeKind::Name, name));

        children.push(self.params()?);

        if self.eat("throws") {
            let mut names = vec![SyntaxTree::labeled(NodeKind::Name, self.dotted_name()?)];
            while self.eat(",") {
                names.push(SyntaxTree::labeled(NodeKind::Name, self.dotted_name()?));
            }
            children.push(SyntaxTree::interior(NodeKind::Throws, names));
        }

        if self.eat(";") {
            // abstract or interface method: no body
        } else if self.is("{") {
            children.push(self.block());
        } else {
            return Err(self.err("expected method body"));
        }

        Ok(SyntaxTree::interior(NodeKind::MethodDecl, children))
    }

    fn skip_annotation(&mut self) -> ParseResult<()> {
        self.expect("@")?;
        self.dotted_name()?;
        if self.is("(") {
            self.skip_balanced("(", ")")?;
        }
        Ok(())
    }

    fn params(&mut self) -> ParseResult<SyntaxTree> {
        self.expect("(")?;
        let mut params = Vec::new();
        let mut names_seen: Vec<String> = Vec::new();
        if !self.is(")") {
            loop {
                while self.is("@") {
                    self.skip_annotation()?;
                }
                self.eat("final");
                let mut type_text = self.type_text()?;
                // varargs lex as three dots
                if self.is(".") && self.is_at(1, ".") && self.is_at(2, ".") {
                    self.pos += 3;
                    type_text.push_str("[]");
                }
                let name = self.identifier()?;
                if names_seen.contains(&name) {
                    return Err(self.err(format!("duplicate parameter name {name:?}")));
                }
                names_seen.push(name.clone());
                params.push(SyntaxTree::interior(
                    NodeKind::Param,
                    vec![
                        SyntaxTree::labeled(NodeKind::Type, type_text),
                        SyntaxTree::labeled(NodeKind::Name, name),
                    ],
                ));
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(SyntaxTree::interior(NodeKind::Params, params))
    }

    /// Dotted type with generic arguments stripped and array suffixes
    /// kept, e.g. `java.util.Map<K,V>[]` -> `java.util.Map[]`.
    fn type_text(&mut self) -> ParseResult<String> {
        let mut text = match self.peek() {
            Some(t)
                if t.kind == TokenKind::Identifier
                    || (t.kind == TokenKind::Keyword && is_type_keyword(&t.text)) =>
            {
                let s = t.text.clone();
                self.pos += 1;
                s
            }
            _ => return Err(self.err("expected type")),
        };
        while self.is(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
            self.pos += 1;
            text.push('.');
            text.push_str(&self.identifier()?);
        }
        if self.is("<") {
            self.skip_balanced_angle()?;
        }
        while self.is("[") && self.is_at(1, "]") {
            self.pos += 2;
            text.push_str("[]");
        }
        Ok(text)
    }

    fn dotted_name(&mut self) -> ParseResult<String> {
        let mut name = self.identifier()?;
        while self.is(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
            self.pos += 1;
            name.push('.');
            name.push_str(&self.identifier()?);
        }
        Ok(name)
    }

    fn skip_balanced_angle(&mut self) -> ParseResult<()> {
        let start = self.offset();
        let mut depth = 0i32;
        loop {
            let Some(tok) = self.advance() else {
                return Err(Error::Parse {
                    offset: start,
                    message: "unbalanced generic arguments".into(),
                });
            };
            match tok.text.as_str() {
                "<" => depth += 1,
                ">" => depth -= 1,
                ">>" => depth -= 2,
                ">>>" => depth -= 3,
                _ => {}
            }
            if depth <= 0 {
                return Ok(());
            }
        }
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> ParseResult<()> {
        let start = self.offset();
        let mut depth = 0i32;
        loop {
            let Some(tok) = self.advance() else {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unbalanced {open}{close}"),
                });
            };
            if tok.text == open {
                depth += 1;
            } else if tok.text == close {
                depth -= 1;
                if depth == 0 {
                    return Ok(());
                }
            }
        }
    }

    // ---- statements (total: failures collapse to Opaque) ----

    fn block(&mut self) -> SyntaxTree {
        let start = self.pos;
        if !self.eat("{") {
            return self.opaque_from(start);
        }
        let mut stmts = Vec::new();
        loop {
            if self.eat("}") {
                return SyntaxTree::interior(NodeKind::Block, stmts);
            }
            if self.peek().is_none() {
                // unterminated block: salvage what we have
                return SyntaxTree::interior(NodeKind::Block, stmts);
            }
            stmts.push(self.statement());
        }
    }

    fn statement(&mut self) -> SyntaxTree {
        let start = self.pos;
        match self.try_statement() {
            Ok(stmt) => stmt,
            Err(_) => {
                self.pos = start;
                self.opaque_statement(start)
            }
        }
    }

    fn try_statement(&mut self) -> ParseResult<SyntaxTree> {
        let tok = self.peek().ok_or_else(|| self.err("expected statement"))?;
        match tok.text.as_str() {
            "{" => Ok(self.block()),
            "if" => self.if_statement(),
            "while" => {
                self.pos += 1;
                self.expect("(")?;
                let cond = self.expression()?;
                self.expect(")")?;
                let body = self.statement();
                Ok(SyntaxTree::interior(NodeKind::While, vec![cond, body]))
            }
            "for" => self.for_statement(),
            "return" => {
                self.pos += 1;
                if self.eat(";") {
                    Ok(SyntaxTree::interior(NodeKind::Return, vec![]))
                } else {
                    let value = self.expression()?;
                    self.expect(";")?;
                    Ok(SyntaxTree::interior(NodeKind::Return, vec![value]))
                }
            }
            "break" | "continue" => {
                let kind = if tok.text == "break" {
                    NodeKind::Break
                } else {
                    NodeKind::Continue
                };
                self.pos += 1;
                let _ = self.identifier(); // optional label
                self.expect(";")?;
                Ok(SyntaxTree::leaf(kind))
            }
            "throw" => {
                self.pos += 1;
                let value = self.expression()?;
                self.expect(";")?;
                Ok(SyntaxTree::interior(NodeKind::Throw, vec![value]))
            }
            ";" => {
                self.pos += 1;
                Ok(SyntaxTree::interior(NodeKind::ExprStmt, vec![]))
            }
            "try" | "switch" | "do" | "synchronized" | "assert" | "class" | "interface"
            | "enum" => Err(self.err("unsupported statement")),
            _ => {
                if let Some(decl) = self.try_local_decl()? {
                    return Ok(decl);
                }
                let expr = self.expression()?;
                self.expect(";")?;
                Ok(SyntaxTree::interior(NodeKind::ExprStmt, vec![expr]))
            }
        }
    }

    fn if_statement(&mut self) -> ParseResult<SyntaxTree> {
        self.expect("if")?;
        self.expect("(")?;
        let cond = self.expression()?;
        self.expect(")")?;
        let then = self.statement();
        let mut children = vec![cond, then];
        if self.eat("else") {
            children.push(self.statement());
        }
        Ok(SyntaxTree::interior(NodeKind::If, children))
    }

    fn for_statement(&mut self) -> ParseResult<SyntaxTree> {
        self.expect("for")?;
        self.expect("(")?;

        // foreach: Type name : expr
        let save = self.pos;
        if let Ok(Some(foreach)) = self.try_foreach_header() {
            let body = self.statement();
            let mut children = foreach;
            children.push(body);
            return Ok(SyntaxTree::interior(NodeKind::ForEach, children));
        }
        self.pos = save;

        let mut children = Vec::new();
        if !self.is(";") {
            if let Some(decl) = self.try_local_decl()? {
                children.push(decl); // consumes the ';'
            } else {
                children.push(self.expression()?);
                self.expect(";")?;
            }
        } else {
            self.expect(";")?;
        }
        if !self.is(";") {
            children.push(self.expression()?);
        }
        self.expect(";")?;
        if !self.is(")") {
            children.push(self.expression()?);
            while self.eat(",") {
                children.push(self.expression()?);
            }
        }
        self.expect(")")?;
        children.push(self.statement());
        Ok(SyntaxTree::interior(NodeKind::For, children))
    }

    fn try_foreach_header(&mut self) -> ParseResult<Option<Vec<SyntaxTree>>> {
        self.eat("final");
        let Ok(type_text) = self.type_text() else {
            return Ok(None);
        };
        let Ok(name) = self.identifier() else {
            return Ok(None);
        };
        if !self.eat(":") {
            return Ok(None);
        }
        let iterable = self.expression()?;
        self.expect(")")?;
        Ok(Some(vec![
            SyntaxTree::labeled(NodeKind::Type, type_text),
            SyntaxTree::labeled(NodeKind::Name, name),
            iterable,
        ]))
    }

    /// Speculative local declaration: `[final] Type name [= expr]
    /// (, name [= expr])* ;`. Returns None (position restored) when the
    /// lookahead does not commit.
    fn try_local_decl(&mut self) -> ParseResult<Option<SyntaxTree>> {
        let save = self.pos;
        self.eat("final");
        let Ok(type_text) = self.type_text() else {
            self.pos = save;
            return Ok(None);
        };
        let Ok(first_name) = self.identifier() else {
            self.pos = save;
            return Ok(None);
        };
        if !(self.is("=") || self.is(",") || self.is(";")) {
            self.pos = save;
            return Ok(None);
        }

        let mut children = vec![
            SyntaxTree::labeled(NodeKind::Type, type_text),
            SyntaxTree::labeled(NodeKind::Name, first_name),
        ];
        if self.eat("=") {
            children.push(self.expression()?);
        }
        while self.eat(",") {
            let name = self.identifier()?;
            children.push(SyntaxTree::labeled(NodeKind::Name, name));
            if self.eat("=") {
                children.push(self.expression()?);
            }
        }
        self.expect(";")?;
        Ok(Some(SyntaxTree::interior(NodeKind::LocalDecl, children)))
    }

    /// Consumes a malformed statement span: through a top-level `;`,
    /// or through the matching brace of a block it opens, stopping
    /// short of the enclosing block's `}`.
    fn opaque_statement(&mut self, start: usize) -> SyntaxTree {
        let mut depth = 0i32;
        while let Some(tok) = self.peek() {
            let text = tok.text.clone();
            if depth == 0 && text == "}" {
                break;
            }
            self.pos += 1;
            match text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" => depth -= 1,
                "}" => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                ";" if depth == 0 => break,
                _ => {}
            }
        }
        self.opaque_from(start)
    }

    /// Opaque argument: consume to the next top-level `,` or `)`.
    fn opaque_arg(&mut self, start: usize) -> SyntaxTree {
        let mut depth = 0i32;
        while let Some(tok) = self.peek() {
            match tok.text.as_str() {
                "," | ")" if depth == 0 => break,
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                _ => {}
            }
            self.pos += 1;
        }
        self.opaque_from(start)
    }

    fn opaque_from(&mut self, start: usize) -> SyntaxTree {
        if self.pos == start {
            self.pos += 1; // always make progress
        }
        let text = self.tokens[start..self.pos.min(self.tokens.len())]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        SyntaxTree::labeled(NodeKind::Opaque, text)
    }

    // ---- expressions ----

    fn expression(&mut self) -> ParseResult<SyntaxTree> {
        self.assignment()
    }

    fn assignment(&mut self) -> ParseResult<SyntaxTree> {
        let lhs = self.ternary()?;
        if let Some(tok) = self.peek() {
            if is_assign_op(&tok.text) {
                let op = SyntaxTree::labeled(NodeKind::Op, tok.text.clone());
                self.pos += 1;
                let rhs = self.assignment()?;
                return Ok(SyntaxTree::interior(NodeKind::Assign, vec![lhs, op, rhs]));
            }
        }
        Ok(lhs)
    }

    fn ternary(&mut self) -> ParseResult<SyntaxTree> {
        let cond = self.binary(0)?;
        if self.eat("?") {
            let then = self.expression()?;
            self.expect(":")?;
            let other = self.ternary()?;
            return Ok(SyntaxTree::interior(
                NodeKind::Ternary,
                vec![cond, then, other],
            ));
        }
        Ok(cond)
    }

    fn binary(&mut self, level: usize) -> ParseResult<SyntaxTree> {
        const LEVELS: &[&[&str]] = &[
            &["||"],
            &["&&"],
            &["|"],
            &["^"],
            &["&"],
            &["==", "!="],
            &["<", ">", "<=", ">=", "instanceof"],
            &["<<", ">>", ">>>"],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        if level >= LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(tok) = self.peek() {
            if !LEVELS[level].contains(&tok.text.as_str()) {
                break;
            }
            let op = SyntaxTree::labeled(NodeKind::Op, tok.text.clone());
            self.pos += 1;
            let rhs = if op.label.as_deref() == Some("instanceof") {
                SyntaxTree::labeled(NodeKind::Type, self.type_text()?)
            } else {
                self.binary(level + 1)?
            };
            lhs = SyntaxTree::interior(NodeKind::BinOp, vec![lhs, op, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> ParseResult<SyntaxTree> {
        if let Some(tok) = self.peek() {
            if matches!(tok.text.as_str(), "!" | "~" | "+" | "-" | "++" | "--") {
                let op = SyntaxTree::labeled(NodeKind::Op, tok.text.clone());
                self.pos += 1;
                let operand = self.unary()?;
                return Ok(SyntaxTree::interior(NodeKind::Unary, vec![op, operand]));
            }
        }
        self.postfix()
    }

    fn postfix(&mut self) -> ParseResult<SyntaxTree> {
        let mut expr = self.primary()?;
        loop {
            if self.is(".") {
                self.pos += 1;
                let name = match self.peek() {
                    Some(t)
                        if t.kind == TokenKind::Identifier
                            || matches!(t.text.as_str(), "this" | "class" | "super") =>
                    {
                        let s = t.text.clone();
                        self.pos += 1;
                        s
                    }
                    _ => return Err(self.err("expected member name after '.'")),
                };
                if self.is("(") {
                    let args = self.args()?;
                    expr = SyntaxTree::interior(
                        NodeKind::Call,
                        vec![expr, SyntaxTree::labeled(NodeKind::Name, name), args],
                    );
                } else {
                    expr = SyntaxTree::interior(
                        NodeKind::FieldAccess,
                        vec![expr, SyntaxTree::labeled(NodeKind::Name, name)],
                    );
                }
            } else if self.is("(") && expr.kind == NodeKind::Name && expr.children.is_empty() {
                let args = self.args()?;
                expr = SyntaxTree::interior(NodeKind::Call, vec![expr, args]);
            } else if self.is("[") {
                self.pos += 1;
                let index = self.expression()?;
                self.expect("]")?;
                expr = SyntaxTree::interior(NodeKind::Index, vec![expr, index]);
            } else if self.is("++") || self.is("--") {
                let op = SyntaxTree::labeled(NodeKind::Op, self.peek().unwrap().text.clone());
                self.pos += 1;
                expr = SyntaxTree::interior(NodeKind::Unary, vec![expr, op]);
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn args(&mut self) -> ParseResult<SyntaxTree> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.is(")") {
            loop {
                let start = self.pos;
                match self.expression() {
                    Ok(expr) if self.is(",") || self.is(")") => args.push(expr),
                    _ => {
                        // e.g. a lambda argument: swallow it, keep siblings
                        self.pos = start;
                        args.push(self.opaque_arg(start));
                    }
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(SyntaxTree::interior(NodeKind::Args, args))
    }

    fn primary(&mut self) -> ParseResult<SyntaxTree> {
        let tok = self.peek().ok_or_else(|| self.err("expected expression"))?;
        match tok.kind {
            TokenKind::Literal => {
                let text = tok.text.clone();
                self.pos += 1;
                Ok(SyntaxTree::labeled(NodeKind::Literal, text))
            }
            TokenKind::Identifier => {
                let text = tok.text.clone();
                self.pos += 1;
                Ok(SyntaxTree::labeled(NodeKind::Name, text))
            }
            TokenKind::Keyword if tok.text == "this" || tok.text == "super" => {
                let text = tok.text.clone();
                self.pos += 1;
                Ok(SyntaxTree::labeled(NodeKind::Name, text))
            }
            TokenKind::Keyword if tok.text == "new" => {
                self.pos += 1;
                let type_text = self.type_text()?;
                if !self.is("(") {
                    return Err(self.err("unsupported array creation"));
                }
                let args = self.args()?;
                let head = type_text.rsplit('.').next().unwrap_or(&type_text);
                Ok(SyntaxTree::interior(
                    NodeKind::Call,
                    vec![SyntaxTree::labeled(NodeKind::Name, head.to_string()), args],
                ))
            }
            TokenKind::Keyword if is_type_keyword(&tok.text) => {
                // e.g. `int.class`, or a primitive in an unsupported cast
                let text = tok.text.clone();
                self.pos += 1;
                Ok(SyntaxTree::labeled(NodeKind::Name, text))
            }
            TokenKind::Punctuation if tok.text == "(" => {
                self.pos += 1;
                let inner = self.expression()?;
                self.expect(")")?;
                Ok(inner)
            }
            _ => Err(self.err(format!("unexpected token {:?}", tok.text))),
        }
    }
}

fn is_modifier(text: &str) -> bool {
    matches!(
        text,
        "public"
            | "private"
            | "protected"
            | "static"
            | "final"
            | "abstract"
            | "synchronized"
            | "native"
            | "strictfp"
            | "default"
            | "transient"
            | "volatile"
    )
}

fn is_type_keyword(text: &str) -> bool {
    matches!(
        text,
        "void" | "int" | "long" | "short" | "byte" | "float" | "double" | "boolean" | "char"
    )
}

fn is_assign_op(text: &str) -> bool {
    matches!(
        text,
        "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<=" | ">>=" | ">>>="
    )
}

/// Reads the name and parameter list off a parsed method; body content
/// never affects the result.
pub fn extract_signature(tree: &SyntaxTree) -> MethodSignature {
    debug_assert_eq!(tree.kind, NodeKind::MethodDecl);
    let name = tree
        .child(NodeKind::Name)
        .and_then(|n| n.label.clone())
        .unwrap_or_default();
    let params = tree
        .child(NodeKind::Params)
        .map(|params| {
            params
                .children
                .iter()
                .filter(|c| c.kind == NodeKind::Param)
                .map(|p| ParamDecl {
                    type_text: p
                        .child(NodeKind::Type)
                        .and_then(|t| t.label.clone())
                        .unwrap_or_default(),
                    name_text: p
                        .child(NodeKind::Name)
                        .and_then(|n| n.label.clone())
                        .unwrap_or_default(),
                })
                .collect()
        })
        .unwrap_or_default();
    MethodSignature { name, params }
}

/// Collects every call in the tree, ordered by where the called name
/// appears in the source (a chain's receiver call comes before the
/// outer call).
pub fn extract_api_calls(tree: &SyntaxTree) -> Vec<ApiCallSite> {
    let mut sites = Vec::new();
    walk_calls(tree, &mut sites);
    for (i, site) in sites.iter_mut().enumerate() {
        site.order_index = i;
    }
    sites
}

fn walk_calls(node: &SyntaxTree, sites: &mut Vec<ApiCallSite>) {
    if node.kind == NodeKind::Call {
        let (receiver, name, args) = split_call(node);
        if let Some(recv) = receiver {
            walk_calls(recv, sites);
        }
        sites.push(ApiCallSite {
            simple_name: name.to_string(),
            arg_count: args.map(|a| a.children.len()).unwrap_or(0),
            receiver_text: receiver.map(render_expr_text),
            order_index: 0,
        });
        if let Some(args) = args {
            for arg in &args.children {
                walk_calls(arg, sites);
            }
        }
        return;
    }
    for child in &node.children {
        walk_calls(child, sites);
    }
}

/// Call children are either [receiver, Name, Args] or [Name, Args];
/// the call's own name is the Name directly before Args.
fn split_call(call: &SyntaxTree) -> (Option<&SyntaxTree>, &str, Option<&SyntaxTree>) {
    match call.children.as_slice() {
        [name, args] if name.kind == NodeKind::Name && args.kind == NodeKind::Args => {
            (None, name.label.as_deref().unwrap_or(""), Some(args))
        }
        [recv, name, args] if name.kind == NodeKind::Name && args.kind == NodeKind::Args => (
            Some(recv),
            name.label.as_deref().unwrap_or(""),
            Some(args),
        ),
        _ => (None, "", None),
    }
}

/// Best-effort source-like rendering of an expression subtree, used for
/// receiver text in call sites.
fn render_expr_text(node: &SyntaxTree) -> String {
    match node.kind {
        NodeKind::Name | NodeKind::Literal | NodeKind::Opaque => {
            node.label.clone().unwrap_or_default()
        }
        NodeKind::FieldAccess => {
            let parts: Vec<String> = node.children.iter().map(render_expr_text).collect();
            parts.join(".")
        }
        NodeKind::Call => {
            let (receiver, name, _) = split_call(node);
            match receiver {
                Some(r) => format!("{}.{}(...)", render_expr_text(r), name),
                None => format!("{name}(...)"),
            }
        }
        NodeKind::Index => {
            let parts: Vec<String> = node.children.iter().map(render_expr_text).collect();
            format!("{}[{}]", parts.first().cloned().unwrap_or_default(), {
                parts.get(1).cloned().unwrap_or_default()
            })
        }
        _ => node
            .children
            .iter()
            .map(render_expr_text)
            .collect::<Vec<_>>()
            .join(" "),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::lex_java;

    fn parse(src: &str) -> SyntaxTree {
        parse_method(&lex_java(src).unwrap()).unwrap()
    }

    fn has_kind(tree: &SyntaxTree, kind: NodeKind) -> bool {
        tree.kind == kind || tree.children.iter().any(|c| has_kind(c, kind))
    }

    #[test]
    fn empty_method_shape() {
        let tree = parse("void f() {}");
        assert_eq!(tree.kind, NodeKind::MethodDecl);
        assert_eq!(
            tree.child(NodeKind::Name).unwrap().label.as_deref(),
            Some("f")
        );
        assert!(tree.child(NodeKind::Params).unwrap().children.is_empty());
        assert!(tree.child(NodeKind::Block).unwrap().children.is_empty());
    }

    #[test]
    fn signature_extraction_basic() {
        let sig = extract_signature(&parse("void f(int a, String b) {}"));
        assert_eq!(sig.name, "f");
        assert_eq!(
            sig.params,
            vec![
                ParamDecl {
                    type_text: "int".into(),
                    name_text: "a".into()
                },
                ParamDecl {
                    type_text: "String".into(),
                    name_text: "b".into()
                },
            ]
        );
    }

    #[test]
    fn await_style_signature() {
        let sig = extract_signature(&parse(
            "public boolean await(long timeout, TimeUnit unit) { return true; }",
        ));
        assert_eq!(sig.name, "await");
        assert_eq!(sig.params.len(), 2);
        assert_eq!(sig.params[0].type_text, "long");
        assert_eq!(sig.params[0].name_text, "timeout");
        assert_eq!(sig.params[1].type_text, "TimeUnit");
        assert_eq!(sig.params[1].name_text, "unit");
    }

    #[test]
    fn generics_are_stripped_from_param_types() {
        let sig = extract_signature(&parse("void g(Map<K,V> m) {}"));
        assert_eq!(sig.params[0].type_text, "Map");
        assert_eq!(sig.params[0].name_text, "m");
    }

    #[test]
    fn signature_ignores_body_content() {
        let a = extract_signature(&parse("int f(int x) { return x; }"));
        let b = extract_signature(&parse("int f(int x) { int y = g(x); return y + 1; }"));
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_param_names_rejected() {
        let tokens = lex_java("void f(int a, long a) {}").unwrap();
        assert!(parse_method(&tokens).is_err());
    }

    #[test]
    fn non_method_input_is_a_parse_error() {
        let tokens = lex_java("x = y + 1;").unwrap();
        assert!(parse_method(&tokens).is_err());
    }

    #[test]
    fn simple_call_site() {
        let tree = parse("void f() { file.createNewFile(); }");
        let calls = extract_api_calls(&tree);
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].simple_name, "createNewFile");
        assert_eq!(calls[0].arg_count, 0);
        assert_eq!(calls[0].receiver_text.as_deref(), Some("file"));
        assert_eq!(calls[0].order_index, 0);
    }

    #[test]
    fn chained_calls_order_by_name_appearance() {
        let tree = parse("void f() { a.b(x).c(y, z); }");
        let calls = extract_api_calls(&tree);
        assert_eq!(calls.len(), 2);
        assert_eq!(calls[0].simple_name, "b");
        assert_eq!(calls[0].arg_count, 1);
        assert_eq!(calls[1].simple_name, "c");
        assert_eq!(calls[1].arg_count, 2);
        assert_eq!(calls[1].receiver_text.as_deref(), Some("a.b(...)"));
        assert_eq!(
            calls.iter().map(|c| c.order_index).collect::<Vec<_>>(),
            vec![0, 1]
        );
    }

    #[test]
    fn empty_body_yields_no_calls() {
        assert!(extract_api_calls(&parse("void f() {}")).is_empty());
    }

    #[test]
    fn call_count_matches_call_nodes() {
        fn count_calls(t: &SyntaxTree) -> usize {
            (t.kind == NodeKind::Call) as usize
                + t.children.iter().map(count_calls).sum::<usize>()
        }
        let tree = parse("void f() { g(h(1), k.m()); if (p()) { q.r(s()); } }");
        assert_eq!(extract_api_calls(&tree).len(), count_calls(&tree));
    }

    #[test]
    fn lambda_becomes_opaque_with_siblings_intact() {
        let tree = parse("void f() { run(x -> g(x), other); }");
        assert!(has_kind(&tree, NodeKind::Opaque), "no opaque node: {tree:?}");
        let calls = extract_api_calls(&tree);
        assert_eq!(calls[0].simple_name, "run");
        assert_eq!(calls[0].arg_count, 2);
    }

    #[test]
    fn unsupported_statement_becomes_opaque_sibling_statements_survive() {
        let tree = parse(
            "void f() { a.before(); try { x(); } finally { y(); } a.after(); }",
        );
        assert!(has_kind(&tree, NodeKind::Opaque));
        let names: Vec<String> = extract_api_calls(&tree)
            .into_iter()
            .map(|c| c.simple_name)
            .collect();
        assert!(names.contains(&"before".to_string()));
        assert!(names.contains(&"after".to_string()));
    }

    #[test]
    fn control_flow_and_locals_parse() {
        let tree = parse(
            "int f(int n) { int acc = 0; for (int i = 0; i < n; i++) { acc += i; } \
             if (acc > 10) { return acc; } else { return 0; } }",
        );
        assert!(has_kind(&tree, NodeKind::For));
        assert!(has_kind(&tree, NodeKind::If));
        assert!(has_kind(&tree, NodeKind::LocalDecl));
        assert!(!has_kind(&tree, NodeKind::Opaque));
    }

    #[test]
    fn foreach_parses() {
        let tree = parse("void f(List<String> xs) { for (String x : xs) { use(x); } }");
        assert!(has_kind(&tree, NodeKind::ForEach));
    }

    #[test]
    fn constructor_and_new_expression() {
        let tree = parse("Widget(int size) { this.size = size; helper = new Helper(size); }");
        assert_eq!(
            tree.child(NodeKind::Name).unwrap().label.as_deref(),
            Some("Widget")
        );
        let calls = extract_api_calls(&tree);
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].simple_name, "Helper");
        assert_eq!(calls[0].arg_count, 1);
    }

    #[test]
    fn throws_clause_and_annotations() {
        let tree = parse("@Override public void f() throws IOException { g(); }");
        assert!(tree.child(NodeKind::Throws).is_some());
        assert_eq!(extract_api_calls(&tree).len(), 1);
    }

    #[test]
    fn label_only_on_leaves() {
        fn check(t: &SyntaxTree) {
            if t.label.is_some() {
                assert!(t.children.is_empty(), "labeled interior node: {t:?}");
            }
            t.children.iter().for_each(check);
        }
        check(&parse(
            "public int f(int a) { while (a > 0) { a = step(a, \"x\"); } return a; }",
        ));
    }
}
