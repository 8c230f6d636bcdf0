use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;

use super::{Blackboard, DecoratorOp, NodeKind, NodeSpec, Status, TreeSpec};
use crate::rng::RandomStream;
use crate::Error;

/// Mutable state handed to leaf executors.
pub struct TickContext<'a> {
    pub bb: &'a mut Blackboard,
    pub rng: &'a mut RandomStream,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamType {
    Str,
    /// `"true"` or `"false"`.
    Bool,
    Int {
        min: i64,
    },
    /// Number in `[0, 1]`.
    Probability,
    /// Non-empty list of strings.
    StrList,
    /// Direction set such as `"UDR"`.
    Openings,
    Direction,
    /// A string or a number.
    Scalar,
    Choice(&'static [&'static str]),
}

/// An attribute an executor reads from its node.
#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub name: &'static str,
    pub ty: ParamType,
    pub required: bool,
}

impl Param {
    pub const fn required(name: &'static str, ty: ParamType) -> Self {
        Param {
            name,
            ty,
            required: true,
        }
    }

    pub const fn optional(name: &'static str, ty: ParamType) -> Self {
        Param {
            name,
            ty,
            required: false,
        }
    }

    /// Problem with this parameter on `node`, if any.
    pub fn check(&self, node: &NodeSpec) -> Option<String> {
        let Some(value) = node.attrs.get(self.name) else {
            return self
                .required
                .then(|| format!("missing required attribute :{}", self.name));
        };
        let ok = match self.ty {
            ParamType::Str => value.as_str().is_some(),
            ParamType::Bool => matches!(value.as_str(), Some("true" | "false")),
            ParamType::Int { min } => value.as_int().is_some_and(|n| n >= min),
            ParamType::Probability => value.as_num().is_some_and(|p| (0.0..=1.0).contains(&p)),
            ParamType::StrList => value.as_str_list().is_some_and(|l| !l.is_empty()),
            ParamType::Openings => value
                .as_str()
                .is_some_and(|s| s.parse::<crate::geom::Openings>().is_ok()),
            ParamType::Direction => value
                .as_str()
                .is_some_and(|s| s.parse::<crate::geom::Direction>().is_ok()),
            ParamType::Scalar => value.as_str().is_some() || value.as_num().is_some(),
            ParamType::Choice(options) => value.as_str().is_some_and(|s| options.contains(&s)),
        };
        (!ok).then(|| format!("attribute :{} must be {}", self.name, self.ty.describe()))
    }
}

impl ParamType {
    fn describe(&self) -> String {
        match self {
            ParamType::Str => "a string".into(),
            ParamType::Bool => "\"true\" or \"false\"".into(),
            ParamType::Int { min } => format!("an integer >= {min}"),
            ParamType::Probability => "a number in [0, 1]".into(),
            ParamType::StrList => "a non-empty list of strings".into(),
            ParamType::Openings => "a direction set over U, D, L, R".into(),
            ParamType::Direction => "one of \"U\", \"D\", \"L\", \"R\"".into(),
            ParamType::Scalar => "a string or number".into(),
            ParamType::Choice(options) => format!("one of {}", options.join(", ")),
        }
    }
}

/// Implements an `action` or `condition` leaf.
pub trait Executor: Send + Sync {
    /// Attributes this executor reads; used by tree validation.
    fn params(&self) -> &[Param] {
        &[]
    }

    fn execute(&self, node: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error>;
}

/// Adapts a closure into an [`Executor`].
pub struct FnExecutor<F> {
    params: Vec<Param>,
    f: F,
}

impl<F> FnExecutor<F>
where
    F: Fn(&NodeSpec, &mut TickContext<'_>) -> Result<Status, Error> + Send + Sync,
{
    pub fn new(params: Vec<Param>, f: F) -> Self {
        FnExecutor { params, f }
    }
}

impl<F> Executor for FnExecutor<F>
where
    F: Fn(&NodeSpec, &mut TickContext<'_>) -> Result<Status, Error> + Send + Sync,
{
    fn params(&self) -> &[Param] {
        &self.params
    }

    fn execute(&self, node: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error> {
        (self.f)(node, ctx)
    }
}

/// Named executors for action and condition leaves. Immutable once built;
/// share it across runs behind a reference.
#[derive(Default, Clone)]
pub struct Registry {
    actions: BTreeMap<String, Arc<dyn Executor>>,
    conditions: BTreeMap<String, Arc<dyn Executor>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the engine's generic leaves: conditions `random` and
    /// `flag`, actions `set` and `noop`.
    pub fn with_core() -> Self {
        let mut r = Registry::new();
        r.register_condition("random", super::RandomCondition);
        r.register_condition("flag", super::FlagCondition);
        r.register_action("set", super::SetValue);
        r.register_action("noop", super::Noop);
        r
    }

    pub fn register_action(&mut self, name: &str, exec: impl Executor + 'static) -> &mut Self {
        self.actions.insert(name.to_owned(), Arc::new(exec));
        self
    }

    pub fn register_condition(&mut self, name: &str, exec: impl Executor + 'static) -> &mut Self {
        self.conditions.insert(name.to_owned(), Arc::new(exec));
        self
    }

    pub fn action_fn<F>(&mut self, name: &str, f: F) -> &mut Self
    where
        F: Fn(&NodeSpec, &mut TickContext<'_>) -> Result<Status, Error> + Send + Sync + 'static,
    {
        self.register_action(name, FnExecutor::new(Vec::new(), f))
    }

    pub fn condition_fn<F>(&mut self, name: &str, f: F) -> &mut Self
    where
        F: Fn(&NodeSpec, &mut TickContext<'_>) -> Result<Status, Error> + Send + Sync + 'static,
    {
        self.register_condition(name, FnExecutor::new(Vec::new(), f))
    }

    pub fn action_names(&self) -> impl Iterator<Item = &str> {
        self.actions.keys().map(String::as_str)
    }

    pub fn condition_names(&self) -> impl Iterator<Item = &str> {
        self.conditions.keys().map(String::as_str)
    }

    /// Executor for a leaf node, or `None` for composites and unknown names.
    pub fn lookup(&self, node: &NodeSpec) -> Option<&dyn Executor> {
        let table = match node.kind {
            NodeKind::Action => &self.actions,
            NodeKind::Condition => &self.conditions,
            _ => return None,
        };
        node.executor()
            .and_then(|name| table.get(name))
            .map(|e| e.as_ref())
    }

    fn resolve(&self, node: &NodeSpec) -> Result<&dyn Executor, Error> {
        self.lookup(node).ok_or_else(|| Error::UnknownExecutor {
            kind: node.kind.keyword(),
            name: node.executor().unwrap_or_default().to_owned(),
        })
    }
}

/// One node execution, recorded after the node returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub tick: u64,
    /// Depth-first pre-order index of the node in the tree.
    pub node: usize,
    pub kind: NodeKind,
    pub name: Option<String>,
    /// Executor name for leaves.
    pub exec: Option<String>,
    pub status: Status,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes one JSON object per line.
    pub fn write_jsonl(&self, mut out: impl Write) -> io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

struct Ticker<'r, 't> {
    registry: &'r Registry,
    trace: Option<&'t mut Trace>,
    tick: u64,
}

impl Ticker<'_, '_> {
    fn tick(
        &mut self,
        node: &NodeSpec,
        index: usize,
        ctx: &mut TickContext<'_>,
    ) -> Result<Status, Error> {
        if let Some(problem) = node.structural_problems().into_iter().next() {
            return Err(Error::MalformedNode(problem));
        }
        let status = match node.kind {
            NodeKind::Sequence => self.sequence(node, index, ctx)?,
            NodeKind::Selector => self.selector(node, index, ctx)?,
            NodeKind::Parallel => self.parallel(node, index, ctx)?,
            NodeKind::Decorator => self.decorator(node, index, ctx)?,
            NodeKind::Action | NodeKind::Condition => {
                self.registry.resolve(node)?.execute(node, ctx)?
            }
        };
        if let Some(trace) = self.trace.as_deref_mut() {
            trace.records.push(TraceRecord {
                tick: self.tick,
                node: index,
                kind: node.kind,
                name: node.name.clone(),
                exec: node.executor().map(str::to_owned),
                status,
            });
        }
        Ok(status)
    }

    fn sequence(
        &mut self,
        node: &NodeSpec,
        index: usize,
        ctx: &mut TickContext<'_>,
    ) -> Result<Status, Error> {
        let mut child_index = index + 1;
        for child in &node.children {
            match self.tick(child, child_index, ctx)? {
                Status::Success => child_index += child.size(),
                other => return Ok(other),
            }
        }
        Ok(Status::Success)
    }

    fn selector(
        &mut self,
        node: &NodeSpec,
        index: usize,
        ctx: &mut TickContext<'_>,
    ) -> Result<Status, Error> {
        let mut child_index = index + 1;
        for child in &node.children {
            match self.tick(child, child_index, ctx)? {
                Status::Failure => child_index += child.size(),
                other => return Ok(other),
            }
        }
        Ok(Status::Failure)
    }

    // Children run one after another, left to right, within the tick.
    fn parallel(
        &mut self,
        node: &NodeSpec,
        index: usize,
        ctx: &mut TickContext<'_>,
    ) -> Result<Status, Error> {
        let threshold = node.parallel_threshold().map_err(Error::MalformedNode)?;
        let mut child_index = index + 1;
        let (mut successes, mut running) = (0, false);
        for child in &node.children {
            match self.tick(child, child_index, ctx)? {
                Status::Success => successes += 1,
                Status::Running => running = true,
                Status::Failure => {}
            }
            child_index += child.size();
        }
        Ok(if running {
            Status::Running
        } else if successes >= threshold {
            Status::Success
        } else {
            Status::Failure
        })
    }

    fn decorator(
        &mut self,
        node: &NodeSpec,
        index: usize,
        ctx: &mut TickContext<'_>,
    ) -> Result<Status, Error> {
        let op = node.decorator_op().map_err(Error::MalformedNode)?;
        let child = &node.children[0];
        Ok(match op {
            DecoratorOp::Invert => match self.tick(child, index + 1, ctx)? {
                Status::Success => Status::Failure,
                Status::Failure => Status::Success,
                Status::Running => Status::Running,
            },
            DecoratorOp::ForceSuccess => match self.tick(child, index + 1, ctx)? {
                Status::Running => Status::Running,
                _ => Status::Success,
            },
            DecoratorOp::Repeat(times) => {
                let mut last = Status::Success;
                for _ in 0..times {
                    last = self.tick(child, index + 1, ctx)?;
                    if last != Status::Success {
                        break;
                    }
                }
                last
            }
        })
    }
}

/// Ticks `node` once.
pub fn tick(
    node: &NodeSpec,
    ctx: &mut TickContext<'_>,
    registry: &Registry,
) -> Result<Status, Error> {
    Ticker {
        registry,
        trace: None,
        tick: 0,
    }
    .tick(node, 0, ctx)
}

pub enum RunMode<'p> {
    /// Tick the root exactly once.
    SingleTick,
    /// Tick until `stop` holds after a tick, or the budget runs out.
    Loop {
        stop: &'p dyn Fn(&Blackboard) -> bool,
        max_ticks: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunReport {
    /// Status of the last root tick.
    pub status: Status,
    pub ticks: u64,
}

/// Runs a whole generation: checks the tree, then ticks the root per `mode`.
///
/// The blackboard is mutated in place. In loop mode the root is ticked at
/// least once; the stop predicate is evaluated after every tick.
pub fn run_generation(
    tree: &TreeSpec,
    bb: &mut Blackboard,
    rng: &mut RandomStream,
    registry: &Registry,
    mode: RunMode<'_>,
    trace: Option<&mut Trace>,
) -> Result<RunReport, Error> {
    tree.root.check_structure().map_err(Error::MalformedNode)?;
    let mut missing = None;
    tree.root.walk(&mut |n| {
        if missing.is_none() && n.kind.is_leaf() && registry.lookup(n).is_none() {
            missing = Some(n);
        }
    });
    if let Some(node) = missing {
        registry.resolve(node)?;
    }

    let mut ticker = Ticker {
        registry,
        trace,
        tick: 0,
    };
    let mut ctx = TickContext { bb, rng };
    match mode {
        RunMode::SingleTick => {
            let status = ticker.tick(&tree.root, 0, &mut ctx)?;
            if status == Status::Running {
                return Err(Error::RunningAtCompletion);
            }
            Ok(RunReport { status, ticks: 1 })
        }
        RunMode::Loop { stop, max_ticks } => {
            let mut ticks = 0;
            while ticks < max_ticks {
                ticker.tick = ticks;
                let status = ticker.tick(&tree.root, 0, &mut ctx)?;
                ticks += 1;
                if stop(ctx.bb) {
                    return Ok(RunReport { status, ticks });
                }
            }
            Err(Error::TickBudgetExhausted { ticks })
        }
    }
}
