//! Behavior tree data model and engine.
//!
//! A tree is a plain [`NodeSpec`] value: a kind, optional name, attribute map
//! and ordered children. The engine walks it on each tick, dispatching
//! `action` and `condition` leaves to executors looked up by name in a
//! [`Registry`]. Nodes keep no state between ticks; anything that must
//! persist lives on the [`Blackboard`].

mod blackboard;
mod engine;
mod leaves;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::geom::{Direction, Openings};

pub use blackboard::{keys, Blackboard, Value};
pub use engine::{
    run_generation, tick, Executor, FnExecutor, Param, ParamType, Registry, RunMode, RunReport,
    TickContext, Trace, TraceRecord,
};
pub use leaves::{cond_flag, cond_random, FlagCondition, Noop, RandomCondition, SetValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Success,
    Failure,
    Running,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Success => "SUCCESS",
            Status::Failure => "FAILURE",
            Status::Running => "RUNNING",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Sequence,
    Selector,
    Parallel,
    Decorator,
    Action,
    Condition,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::Sequence,
        NodeKind::Selector,
        NodeKind::Parallel,
        NodeKind::Decorator,
        NodeKind::Action,
        NodeKind::Condition,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Sequence => "sequence",
            NodeKind::Selector => "selector",
            NodeKind::Parallel => "parallel",
            NodeKind::Decorator => "decorator",
            NodeKind::Action => "action",
            NodeKind::Condition => "condition",
        }
    }

    pub fn from_keyword(s: &str) -> Option<NodeKind> {
        NodeKind::ALL.into_iter().find(|k| k.keyword() == s)
    }

    pub fn is_leaf(self) -> bool {
        matches!(self, NodeKind::Action | NodeKind::Condition)
    }

    /// The attribute naming the executor of a leaf.
    pub fn executor_attr(self) -> Option<&'static str> {
        match self {
            NodeKind::Action => Some("do"),
            NodeKind::Condition => Some("check"),
            _ => None,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Str(String),
    Num(f64),
    List(Vec<AttrValue>),
}

impl AttrValue {
    pub fn type_name(&self) -> &'static str {
        match self {
            AttrValue::Str(_) => "string",
            AttrValue::Num(_) => "number",
            AttrValue::List(_) => "list",
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            AttrValue::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        self.as_num()
            .filter(|n| n.fract() == 0.0 && n.abs() < 9.0e15)
            .map(|n| n as i64)
    }

    /// A list whose every element is a string.
    pub fn as_str_list(&self) -> Option<Vec<&str>> {
        match self {
            AttrValue::List(items) => items.iter().map(AttrValue::as_str).collect(),
            _ => None,
        }
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Str(s.to_owned())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Str(s)
    }
}

impl From<f64> for AttrValue {
    fn from(n: f64) -> Self {
        AttrValue::Num(n)
    }
}

impl From<i64> for AttrValue {
    fn from(n: i64) -> Self {
        AttrValue::Num(n as f64)
    }
}

impl<T: Into<AttrValue>> From<Vec<T>> for AttrValue {
    fn from(items: Vec<T>) -> Self {
        AttrValue::List(items.into_iter().map(Into::into).collect())
    }
}

/// 1-based line and column of a node in its source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourcePos {
    pub line: usize,
    pub column: usize,
}

/// One node of a behavior tree.
///
/// Equality is structural: `pos` is ignored.
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub name: Option<String>,
    pub attrs: BTreeMap<String, AttrValue>,
    pub children: Vec<NodeSpec>,
    pub pos: Option<SourcePos>,
}

impl PartialEq for NodeSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.name == other.name
            && self.attrs == other.attrs
            && self.children == other.children
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoratorOp {
    Invert,
    ForceSuccess,
    Repeat(u32),
}

impl NodeSpec {
    pub fn new(kind: NodeKind) -> Self {
        NodeSpec {
            kind,
            name: None,
            attrs: BTreeMap::new(),
            children: Vec::new(),
            pos: None,
        }
    }

    pub fn sequence(children: Vec<NodeSpec>) -> Self {
        NodeSpec::new(NodeKind::Sequence).with_children(children)
    }

    pub fn selector(children: Vec<NodeSpec>) -> Self {
        NodeSpec::new(NodeKind::Selector).with_children(children)
    }

    pub fn parallel(threshold: Option<usize>, children: Vec<NodeSpec>) -> Self {
        let node = NodeSpec::new(NodeKind::Parallel).with_children(children);
        match threshold {
            Some(m) => node.with_attr("threshold", m as i64),
            None => node,
        }
    }

    pub fn decorator(op: DecoratorOp, child: NodeSpec) -> Self {
        let node = NodeSpec::new(NodeKind::Decorator).with_children(vec![child]);
        match op {
            DecoratorOp::Invert => node.with_attr("op", "invert"),
            DecoratorOp::ForceSuccess => node.with_attr("op", "force-success"),
            DecoratorOp::Repeat(n) => node
                .with_attr("op", "repeat")
                .with_attr("times", i64::from(n)),
        }
    }

    pub fn action(executor: &str) -> Self {
        NodeSpec::new(NodeKind::Action).with_attr("do", executor)
    }

    pub fn condition(executor: &str) -> Self {
        NodeSpec::new(NodeKind::Condition).with_attr("check", executor)
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_owned());
        self
    }

    pub fn with_attr(mut self, key: &str, value: impl Into<AttrValue>) -> Self {
        self.attrs.insert(key.to_owned(), value.into());
        self
    }

    pub fn with_children(mut self, children: Vec<NodeSpec>) -> Self {
        self.children = children;
        self
    }

    /// Number of nodes in this subtree, itself included.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(NodeSpec::size).sum::<usize>()
    }

    /// Executor name of a leaf (`:do` / `:check`).
    pub fn executor(&self) -> Option<&str> {
        self.kind
            .executor_attr()
            .and_then(|key| self.attrs.get(key))
            .and_then(AttrValue::as_str)
    }

    pub fn decorator_op(&self) -> Result<DecoratorOp, String> {
        match self.attrs.get("op") {
            None => Err("decorator requires :op".into()),
            Some(AttrValue::Str(op)) => match op.as_str() {
                "invert" => Ok(DecoratorOp::Invert),
                "force-success" => Ok(DecoratorOp::ForceSuccess),
                "repeat" => match self.attrs.get("times") {
                    None => Err("repeat decorator requires :times".into()),
                    Some(v) => match v.as_int() {
                        Some(n) if (1..=u32::MAX as i64).contains(&n) => {
                            Ok(DecoratorOp::Repeat(n as u32))
                        }
                        _ => Err("repeat :times must be an integer >= 1".into()),
                    },
                },
                other => Err(format!(
                    "unknown decorator op {other:?} (expected invert, force-success or repeat)"
                )),
            },
            Some(_) => Err("decorator :op must be a string".into()),
        }
    }

    /// Success threshold M of a parallel node; defaults to the child count.
    pub fn parallel_threshold(&self) -> Result<usize, String> {
        let n = self.children.len();
        match self.attrs.get("threshold") {
            None => Ok(n),
            Some(v) => match v.as_int() {
                Some(m) if m >= 1 && (m as usize) <= n => Ok(m as usize),
                _ => Err(format!("parallel threshold must be an integer in 1..={n}")),
            },
        }
    }

    /// Invariant violations of this node alone (children are not visited).
    pub fn structural_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let n = self.children.len();
        match self.kind {
            NodeKind::Sequence | NodeKind::Selector | NodeKind::Parallel if n == 0 => {
                problems.push(format!("{} requires at least 1 child", self.kind));
            }
            NodeKind::Decorator if n != 1 => {
                problems.push("decorator requires exactly 1 child".into());
            }
            NodeKind::Action | NodeKind::Condition if n != 0 => {
                problems.push(format!("{} must not have children", self.kind));
            }
            _ => {}
        }
        match self.kind {
            NodeKind::Parallel if n > 0 => {
                if let Err(e) = self.parallel_threshold() {
                    problems.push(e);
                }
            }
            NodeKind::Decorator => {
                if let Err(e) = self.decorator_op() {
                    problems.push(e);
                }
            }
            NodeKind::Action | NodeKind::Condition => {
                let key = self.kind.executor_attr().unwrap_or_default();
                match self.attrs.get(key) {
                    None => problems.push(format!("{} requires :{key}", self.kind)),
                    Some(AttrValue::Str(_)) => {}
                    Some(_) => problems.push(format!(":{key} must be a string")),
                }
            }
            _ => {}
        }
        problems
    }

    /// First invariant violation anywhere in the subtree, depth-first.
    pub fn check_structure(&self) -> Result<(), String> {
        if let Some(problem) = self.structural_problems().into_iter().next() {
            return Err(problem);
        }
        self.children.iter().try_for_each(NodeSpec::check_structure)
    }

    /// Visits every node in depth-first pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a NodeSpec)) {
        f(self);
        for child in &self.children {
            child.walk(f);
        }
    }

    fn attr_error(key: &str, message: impl Into<String>) -> crate::Error {
        crate::Error::Attribute {
            key: key.to_owned(),
            message: message.into(),
        }
    }

    pub fn str_attr(&self, key: &str) -> Result<Option<&str>, crate::Error> {
        match self.attrs.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(Some)
                .ok_or_else(|| Self::attr_error(key, "expected a string")),
        }
    }

    pub fn num_attr(&self, key: &str) -> Result<Option<f64>, crate::Error> {
        match self.attrs.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_num()
                .map(Some)
                .ok_or_else(|| Self::attr_error(key, "expected a number")),
        }
    }

    pub fn int_attr(&self, key: &str) -> Result<Option<i64>, crate::Error> {
        match self.attrs.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_int()
                .map(Some)
                .ok_or_else(|| Self::attr_error(key, "expected an integer")),
        }
    }

    pub fn bool_attr(&self, key: &str) -> Result<Option<bool>, crate::Error> {
        match self.str_attr(key)? {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(_) => Err(Self::attr_error(key, "expected \"true\" or \"false\"")),
        }
    }

    pub fn str_list_attr(&self, key: &str) -> Result<Option<Vec<&str>>, crate::Error> {
        match self.attrs.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_str_list()
                .map(Some)
                .ok_or_else(|| Self::attr_error(key, "expected a list of strings")),
        }
    }

    pub fn openings_attr(&self, key: &str) -> Result<Option<Openings>, crate::Error> {
        match self.str_attr(key)? {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e: String| Self::attr_error(key, e)),
        }
    }

    pub fn direction_attr(&self, key: &str) -> Result<Option<Direction>, crate::Error> {
        match self.str_attr(key)? {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e: String| Self::attr_error(key, e)),
        }
    }

    /// Like the typed getters, but the attribute must be present.
    pub fn required<'a, T>(
        &'a self,
        key: &str,
        get: impl FnOnce(&'a Self, &str) -> Result<Option<T>, crate::Error>,
    ) -> Result<T, crate::Error> {
        get(self, key)?.ok_or_else(|| Self::attr_error(key, "missing required attribute"))
    }
}

/// A parsed behavior tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    pub root: NodeSpec,
}

impl TreeSpec {
    pub fn new(root: NodeSpec) -> Self {
        TreeSpec { root }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity_rules() {
        assert!(NodeSpec::sequence(vec![]).check_structure().is_err());
        assert!(NodeSpec::sequence(vec![NodeSpec::action("a")])
            .check_structure()
            .is_ok());
        let two = NodeSpec::new(NodeKind::Decorator)
            .with_attr("op", "invert")
            .with_children(vec![NodeSpec::action("a"), NodeSpec::action("b")]);
        assert_eq!(
            two.check_structure().unwrap_err(),
            "decorator requires exactly 1 child"
        );
        let leaf = NodeSpec::action("a").with_children(vec![NodeSpec::action("b")]);
        assert!(leaf.check_structure().is_err());
        assert!(NodeSpec::new(NodeKind::Action).check_structure().is_err());
    }

    #[test]
    fn parallel_threshold_bounds() {
        let kids = || vec![NodeSpec::action("a"), NodeSpec::action("b")];
        assert_eq!(NodeSpec::parallel(None, kids()).parallel_threshold(), Ok(2));
        assert_eq!(
            NodeSpec::parallel(Some(1), kids()).parallel_threshold(),
            Ok(1)
        );
        assert!(NodeSpec::parallel(Some(3), kids())
            .check_structure()
            .is_err());
        assert!(NodeSpec::parallel(Some(0), kids())
            .check_structure()
            .is_err());
    }

    #[test]
    fn decorator_ops() {
        let child = NodeSpec::action("a");
        for op in [
            DecoratorOp::Invert,
            DecoratorOp::ForceSuccess,
            DecoratorOp::Repeat(3),
        ] {
            assert_eq!(
                NodeSpec::decorator(op, child.clone()).decorator_op(),
                Ok(op)
            );
        }
        let bad = NodeSpec::new(NodeKind::Decorator)
            .with_attr("op", "repeat")
            .with_attr("times", 0i64)
            .with_children(vec![child.clone()]);
        assert!(bad.check_structure().is_err());
        let unknown = NodeSpec::new(NodeKind::Decorator)
            .with_attr("op", "twice")
            .with_children(vec![child]);
        assert!(unknown.check_structure().is_err());
    }

    #[test]
    fn equality_ignores_position() {
        let mut a = NodeSpec::action("noop");
        let b = a.clone();
        a.pos = Some(SourcePos { line: 3, column: 4 });
        assert_eq!(a, b);
    }

    #[test]
    fn size_counts_all_nodes() {
        let t = NodeSpec::sequence(vec![
            NodeSpec::action("a"),
            NodeSpec::selector(vec![NodeSpec::action("b"), NodeSpec::action("c")]),
        ]);
        assert_eq!(t.size(), 5);
    }
}
