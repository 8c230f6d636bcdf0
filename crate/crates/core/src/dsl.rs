//! Text format for behavior trees.
//!
//! A tree is one s-expression node:
//!
//! ```text
//! ; comment to end of line
//! (selector :name "Do Gap?"
//!   (sequence
//!     (condition :check "random" :p 0.5)
//!     (action :do "place-pattern" :patterns ("gap")))
//!   (action :do "place-pattern" :patterns ("valley")))
//! ```
//!
//! A node is `(` kind, then `:key value` attributes, then child nodes, then
//! `)`. Values are double-quoted strings (escapes `\"`, `\\`, `\n`, `\t`),
//! decimal numbers such as `3`, `-1` or `0.25`, and parenthesised lists of
//! values. `:name` is stored as the node's name.

use std::fmt::{self, Write as _};

use crate::bt::{AttrValue, NodeKind, NodeSpec, Registry, SourcePos, TreeSpec};

/// Deepest nesting of nodes and lists the parser accepts.
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// A problem found in tree source. Line and column are 1-based; columns count
/// characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    fn error(pos: SourcePos, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn warning(pos: SourcePos, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(pos, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.column, self.severity, self.message
        )
    }
}

struct Parser {
    chars: Vec<char>,
    at: usize,
    line: usize,
    column: usize,
}

type Parsed<T> = Result<T, Diagnostic>;

impl Parser {
    fn new(src: &str) -> Self {
        Parser {
            chars: src.chars().collect(),
            at: 0,
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> SourcePos {
        SourcePos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.at += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                break;
            }
            out.push(c);
            self.bump();
        }
        out
    }

    /// Parses a node whose `(` is the next character.
    fn node(&mut self, depth: usize) -> Parsed<NodeSpec> {
        let open = self.pos();
        if depth > MAX_DEPTH {
            return Err(Diagnostic::error(
                open,
                format!("nesting deeper than {MAX_DEPTH}"),
            ));
        }
        self.bump();
        self.skip_trivia();
        if self.peek().is_none() {
            return Err(Diagnostic::error(
                open,
                "unbalanced '(': node is never closed",
            ));
        }
        let kind_pos = self.pos();
        let word = self.word();
        let kind = match NodeKind::from_keyword(&word) {
            Some(k) => k,
            None if word.is_empty() => {
                return Err(Diagnostic::error(
                    kind_pos,
                    "expected a node kind after '('",
                ))
            }
            None => {
                return Err(Diagnostic::error(
                    kind_pos,
                    format!("unknown node kind {word:?}"),
                ))
            }
        };
        let mut node = NodeSpec::new(kind);
        node.pos = Some(open);
        loop {
            self.skip_trivia();
            let here = self.pos();
            match self.peek() {
                None => {
                    return Err(Diagnostic::error(
                        open,
                        "unbalanced '(': node is never closed",
                    ))
                }
                Some(')') => {
                    self.bump();
                    return Ok(node);
                }
                Some('(') => node.children.push(self.node(depth + 1)?),
                Some(':') => {
                    if !node.children.is_empty() {
                        return Err(Diagnostic::error(
                            here,
                            "attributes must come before child nodes",
                        ));
                    }
                    self.bump();
                    let key = self.word();
                    if key.is_empty() {
                        return Err(Diagnostic::error(
                            here,
                            "expected an attribute name after ':'",
                        ));
                    }
                    self.skip_trivia();
                    let value = self.value(depth + 1)?;
                    if key == "name" {
                        let AttrValue::Str(name) = value else {
                            return Err(Diagnostic::error(here, ":name must be a string"));
                        };
                        if node.name.replace(name).is_some() {
                            return Err(Diagnostic::error(here, "duplicate attribute :name"));
                        }
                    } else if node.attrs.insert(key.clone(), value).is_some() {
                        return Err(Diagnostic::error(
                            here,
                            format!("duplicate attribute :{key}"),
                        ));
                    }
                }
                Some(_) => {
                    let word = self.word();
                    let shown = if word.is_empty() {
                        self.bump().map(String::from).unwrap_or_default()
                    } else {
                        word
                    };
                    return Err(Diagnostic::error(
                        here,
                        format!("expected an attribute, child node or ')', found {shown:?}"),
                    ));
                }
            }
        }
    }

    fn value(&mut self, depth: usize) -> Parsed<AttrValue> {
        let start = self.pos();
        if depth > MAX_DEPTH {
            return Err(Diagnostic::error(
                start,
                format!("nesting deeper than {MAX_DEPTH}"),
            ));
        }
        match self.peek() {
            None => Err(Diagnostic::error(
                start,
                "expected a value, found end of input",
            )),
            Some('"') => self.string().map(AttrValue::Str),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => {
                            return Err(Diagnostic::error(
                                start,
                                "unbalanced '(': list is never closed",
                            ))
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(AttrValue::List(items));
                        }
                        Some(_) => items.push(self.value(depth + 1)?),
                    }
                }
            }
            Some(')') => Err(Diagnostic::error(start, "expected a value, found ')'")),
            Some(_) => {
                let word = self.word();
                if is_decimal(&word) {
                    if let Ok(n) = word.parse::<f64>() {
                        if n.is_finite() {
                            return Ok(AttrValue::Num(n));
                        }
                    }
                }
                Err(Diagnostic::error(
                    start,
                    format!("unknown value type {word:?}: expected a string, number or list"),
                ))
            }
        }
    }

    fn string(&mut self) -> Parsed<String> {
        let start = self.pos();
        self.bump();
        let mut out = String::new();
        loop {
            let here = self.pos();
            match self.bump() {
                None => return Err(Diagnostic::error(start, "unterminated string")),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some(c) => {
                        return Err(Diagnostic::error(here, format!("unknown escape \\{c}")))
                    }
                    None => return Err(Diagnostic::error(start, "unterminated string")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}

/// `-?digits(.digits)?`
fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

fn structural_diagnostics(node: &NodeSpec, out: &mut Vec<Diagnostic>) {
    let pos = node.pos.unwrap_or(SourcePos { line: 1, column: 1 });
    out.extend(
        node.structural_problems()
            .into_iter()
            .map(|m| Diagnostic::error(pos, m)),
    );
    for child in &node.children {
        structural_diagnostics(child, out);
    }
}

/// Parses tree source. Every returned diagnostic on failure; at least one is
/// an error.
pub fn parse_tree(src: &str) -> Result<TreeSpec, Vec<Diagnostic>> {
    let mut p = Parser::new(src);
    p.skip_trivia();
    let root = match p.peek() {
        None => {
            return Err(vec![Diagnostic::error(
                p.pos(),
                "empty source: expected a node",
            )])
        }
        Some('(') => p.node(1).map_err(|d| vec![d])?,
        Some(_) => {
            let at = p.pos();
            return Err(vec![Diagnostic::error(at, "expected '(' to start a node")]);
        }
    };
    p.skip_trivia();
    if p.peek().is_some() {
        let at = p.pos();
        let message = if p.peek() == Some(')') {
            "unbalanced ')': no matching '('"
        } else {
            "unexpected input after the root node"
        };
        return Err(vec![Diagnostic::error(at, message)]);
    }
    let mut problems = Vec::new();
    structural_diagnostics(&root, &mut problems);
    if problems.is_empty() {
        Ok(TreeSpec::new(root))
    } else {
        Err(problems)
    }
}

fn write_value(out: &mut String, value: &AttrValue) {
    match value {
        AttrValue::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        AttrValue::Num(n) => {
            let _ = write!(out, "{n}");
        }
        AttrValue::List(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_value(out, item);
            }
            out.push(')');
        }
    }
}

fn write_node(out: &mut String, node: &NodeSpec, depth: usize) {
    out.push_str(&"  ".repeat(depth));
    out.push('(');
    out.push_str(node.kind.keyword());
    let name = node.name.clone().map(AttrValue::Str);
    let mut attrs: Vec<(&str, &AttrValue)> =
        node.attrs.iter().map(|(k, v)| (k.as_str(), v)).collect();
    if let Some(name) = &name {
        attrs.push(("name", name));
        attrs.sort_by_key(|(k, _)| *k);
    }
    for (key, value) in attrs {
        let _ = write!(out, " :{key} ");
        write_value(out, value);
    }
    for child in &node.children {
        out.push('\n');
        write_node(out, child, depth + 1);
    }
    out.push(')');
}

/// Canonical text: one node per line indented two spaces per level,
/// attributes in alphabetical order, no trailing newline.
pub fn serialize_tree(tree: &TreeSpec) -> String {
    let mut out = String::new();
    write_node(&mut out, &tree.root, 0);
    out
}

fn validate_node(node: &NodeSpec, registry: &Registry, out: &mut Vec<Diagnostic>) {
    let pos = node.pos.unwrap_or(SourcePos { line: 1, column: 1 });
    out.extend(
        node.structural_problems()
            .into_iter()
            .map(|m| Diagnostic::error(pos, m)),
    );
    let mut known: Vec<&str> = match node.kind {
        NodeKind::Parallel => vec!["threshold"],
        NodeKind::Decorator => vec!["op", "times"],
        NodeKind::Action => vec!["do"],
        NodeKind::Condition => vec!["check"],
        NodeKind::Sequence | NodeKind::Selector => vec![],
    };
    if node.kind.is_leaf() {
        if let Some(name) = node.executor() {
            match registry.lookup(node) {
                Some(exec) => {
                    for param in exec.params() {
                        known.push(param.name);
                        if let Some(problem) = param.check(node) {
                            out.push(Diagnostic::error(pos, format!("{name}: {problem}")));
                        }
                    }
                }
                None => out.push(Diagnostic::error(
                    pos,
                    format!("unknown {} executor: {name}", node.kind),
                )),
            }
        }
    }
    if !node.kind.is_leaf() || registry.lookup(node).is_some() {
        for key in node.attrs.keys().filter(|k| !known.contains(&k.as_str())) {
            out.push(Diagnostic::warning(
                pos,
                format!("unknown attribute :{key}"),
            ));
        }
    }
    for child in &node.children {
        validate_node(child, registry, out);
    }
}

/// Checks structure, executor names and executor attributes against
/// `registry`. Attributes no executor reads are reported as warnings.
pub fn validate_tree(tree: &TreeSpec, registry: &Registry) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    validate_node(&tree.root, registry, &mut out);
    out
}
