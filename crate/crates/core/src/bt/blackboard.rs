use std::collections::BTreeMap;

use crate::dungeon::DungeonLayout;
use crate::geom::Coord;
use crate::placement::{LevelMap, PrevRef};
use crate::Error;

/// Well-known blackboard keys shared by the built-in executors.
pub mod keys {
    pub const LEVEL: &str = "level";
    pub const CURSOR: &str = "cursor";
    pub const PREV: &str = "prev";
    pub const LAYOUT: &str = "layout";
    pub const ROOM_COUNT: &str = "room_count";
    pub const START_DONE: &str = "start_done";
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Coord(Coord),
    Segment(String),
    Prev(PrevRef),
    Level(LevelMap),
    Layout(DungeonLayout),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::Bool(_) => "boolean",
            Value::Str(_) => "string",
            Value::Coord(_) => "coordinate",
            Value::Segment(_) => "segment id",
            Value::Prev(_) => "previous-segment reference",
            Value::Level(_) => "level map",
            Value::Layout(_) => "dungeon layout",
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }
}

/// Run-scoped key/value store. Absent keys read as `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Blackboard {
    entries: BTreeMap<String, Value>,
}

macro_rules! typed_get {
    ($name:ident, $variant:ident, $ty:ty, $label:literal) => {
        pub fn $name(&self, key: &str) -> Result<Option<&$ty>, Error> {
            match self.entries.get(key) {
                None => Ok(None),
                Some(Value::$variant(v)) => Ok(Some(v)),
                Some(other) => Err(Error::BlackboardType {
                    key: key.to_owned(),
                    expected: $label,
                    found: other.type_name(),
                }),
            }
        }
    };
}

impl Blackboard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn put(&mut self, key: impl Into<String>, value: Value) {
        self.entries.insert(key.into(), value);
    }

    pub fn remove(&mut self, key: &str) -> Option<Value> {
        self.entries.remove(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Integer or float entry as `f64`.
    pub fn number(&self, key: &str) -> Option<f64> {
        self.entries.get(key).and_then(Value::as_number)
    }

    typed_get!(get_bool, Bool, bool, "boolean");
    typed_get!(get_int, Int, i64, "integer");
    typed_get!(get_coord, Coord, Coord, "coordinate");
    typed_get!(get_prev, Prev, PrevRef, "previous-segment reference");
    typed_get!(get_level, Level, LevelMap, "level map");
    typed_get!(get_layout, Layout, DungeonLayout, "dungeon layout");
}
