//! Game-agnostic leaves.

use super::{
    AttrValue, Blackboard, Executor, NodeSpec, Param, ParamType, Status, TickContext, Value,
};
use crate::rng::RandomStream;
use crate::Error;

/// Draws one uniform float `u` and succeeds iff `u < p`.
pub fn cond_random(p: f64, rng: &mut RandomStream) -> Result<Status, Error> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(if rng.next_f64() < p {
        Status::Success
    } else {
        Status::Failure
    })
}

/// Succeeds iff `bb[key]` is a boolean equal to `expected`. Absent keys fail.
pub fn cond_flag(bb: &Blackboard, key: &str, expected: bool) -> Status {
    match bb.get(key) {
        Some(Value::Bool(b)) if *b == expected => Status::Success,
        _ => Status::Failure,
    }
}

/// `(condition :check "random" :p 0.5)`
pub struct RandomCondition;

impl Executor for RandomCondition {
    fn params(&self) -> &[Param] {
        const P: [Param; 1] = [Param::optional("p", ParamType::Probability)];
        &P
    }

    fn execute(&self, node: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error> {
        let p = node.num_attr("p")?.unwrap_or(0.5);
        cond_random(p, ctx.rng)
    }
}

/// `(condition :check "flag" :key "start_done" :expected "false")`
pub struct FlagCondition;

impl Executor for FlagCondition {
    fn params(&self) -> &[Param] {
        const P: [Param; 2] = [
            Param::required("key", ParamType::Str),
            Param::required("expected", ParamType::Bool),
        ];
        &P
    }

    fn execute(&self, node: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error> {
        let key = node.required("key", NodeSpec::str_attr)?;
        let expected = node.required("expected", NodeSpec::bool_attr)?;
        Ok(cond_flag(ctx.bb, key, expected))
    }
}

/// `(action :do "set" :key "k" :value 1)`. Strings `"true"`/`"false"` store
/// booleans; integral numbers store integers.
pub struct SetValue;

impl Executor for SetValue {
    fn params(&self) -> &[Param] {
        const P: [Param; 2] = [
            Param::required("key", ParamType::Str),
            Param::required("value", ParamType::Scalar),
        ];
        &P
    }

    fn execute(&self, node: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error> {
        let key = node.required("key", NodeSpec::str_attr)?;
        let value = match node.attrs.get("value") {
            Some(AttrValue::Str(s)) if s == "true" => Value::Bool(true),
            Some(AttrValue::Str(s)) if s == "false" => Value::Bool(false),
            Some(AttrValue::Str(s)) => Value::Str(s.clone()),
            Some(v @ AttrValue::Num(n)) => match v.as_int() {
                Some(i) => Value::Int(i),
                None => Value::Float(*n),
            },
            Some(AttrValue::List(_)) | None => {
                return Err(Error::Attribute {
                    key: "value".into(),
                    message: "expected a string or number".into(),
                })
            }
        };
        ctx.bb.put(key, value);
        Ok(Status::Success)
    }
}

pub struct Noop;

impl Executor for Noop {
    fn execute(&self, _: &NodeSpec, _: &mut TickContext<'_>) -> Result<Status, Error> {
        Ok(Status::Success)
    }
}
