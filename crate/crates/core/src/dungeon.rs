//! Dungeon layouts grown one room per tick.
//!
//! A layout is a set of rooms on the integer plane plus the set of open
//! edges between orthogonally adjacent rooms. The `start-room` action seeds
//! it with one closed room; each `grow-step` action opens one closed side.

use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bt::{
    keys, run_generation, Blackboard, Executor, NodeSpec, Param, ParamType, Registry, RunMode,
    Status, TickContext, TreeSpec, Value,
};
use crate::geom::{Coord, Direction, Openings};
use crate::grid::TileGrid;
use crate::placement::{assemble_level, LevelMap};
use crate::rng::RandomStream;
use crate::segment::{MatchMode, SegmentLibrary};
use crate::Error;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DungeonLayout {
    rooms: BTreeSet<Coord>,
    /// Each edge is stored with its smaller endpoint first.
    edges: BTreeSet<(Coord, Coord)>,
}

fn edge(a: Coord, b: Coord) -> (Coord, Coord) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl DungeonLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single_room(at: Coord) -> Self {
        let mut layout = Self::new();
        layout.rooms.insert(at);
        layout
    }

    pub fn add_room(&mut self, at: Coord) -> bool {
        self.rooms.insert(at)
    }

    /// Opens the edge between two adjacent rooms. Returns false if either end
    /// is not a room, the cells are not adjacent, or the edge is already open.
    pub fn open_edge(&mut self, a: Coord, b: Coord) -> bool {
        if a.direction_to(b).is_none() || !self.rooms.contains(&a) || !self.rooms.contains(&b) {
            return false;
        }
        self.edges.insert(edge(a, b))
    }

    pub fn is_open(&self, a: Coord, b: Coord) -> bool {
        self.edges.contains(&edge(a, b))
    }

    /// Rooms in row-major order.
    pub fn rooms(&self) -> impl Iterator<Item = Coord> + '_ {
        self.rooms.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Coord, Coord)> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains(&self, at: Coord) -> bool {
        self.rooms.contains(&at)
    }

    pub fn room_count(&self) -> usize {
        self.rooms.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sides of `room` with an open edge.
    pub fn doors(&self, room: Coord) -> Openings {
        Direction::ALL
            .into_iter()
            .filter(|d| self.is_open(room, room.step(*d)))
            .collect()
    }

    /// Every `(room, side)` whose edge is closed, rooms row-major and sides
    /// in U, D, L, R order.
    pub fn closed_sides(&self) -> Vec<(Coord, Direction)> {
        self.rooms
            .iter()
            .flat_map(|r| Direction::ALL.into_iter().map(move |d| (*r, d)))
            .filter(|(r, d)| !self.is_open(*r, r.step(*d)))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct LayoutJson {
    rooms: Vec<Coord>,
    edges: Vec<[Coord; 2]>,
}

impl Serialize for DungeonLayout {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LayoutJson {
            rooms: self.rooms().collect(),
            edges: self.edges().map(|(a, b)| [a, b]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DungeonLayout {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = LayoutJson::deserialize(d)?;
        let mut layout = DungeonLayout::new();
        layout.rooms.extend(raw.rooms);
        for [a, b] in raw.edges {
            if !layout.open_edge(a, b) {
                return Err(serde::de::Error::custom(format!(
                    "edge {a}-{b} does not join two adjacent rooms"
                )));
            }
        }
        Ok(layout)
    }
}

/// Places the closed start room at the origin and sets `start_done`.
pub fn exec_start_room(bb: &mut Blackboard) -> Result<Status, Error> {
    if bb.get_bool(keys::START_DONE)? == Some(&true) {
        return Err(Error::StartRoomExists);
    }
    bb.put(
        keys::LAYOUT,
        Value::Layout(DungeonLayout::single_room(Coord::ORIGIN)),
    );
    bb.put(keys::ROOM_COUNT, Value::Int(1));
    bb.put(keys::START_DONE, Value::Bool(true));
    Ok(Status::Success)
}

/// Opens one randomly chosen closed side of the layout.
///
/// A side facing empty space gets a new room behind it. A side facing an
/// existing room is opened with probability `loop_prob` (one extra draw),
/// otherwise it is dropped from the candidates and another side is drawn.
pub fn exec_grow_step(
    bb: &mut Blackboard,
    rng: &mut RandomStream,
    loop_prob: f64,
) -> Result<Status, Error> {
    if !(0.0..=1.0).contains(&loop_prob) {
        return Err(Error::InvalidProbability(loop_prob));
    }
    let mut layout = bb
        .get_layout(keys::LAYOUT)?
        .cloned()
        .ok_or(Error::NoLayout)?;
    let mut candidates = layout.closed_sides();
    while !candidates.is_empty() {
        let i = rng.index(candidates.len());
        let (room, side) = candidates[i];
        let next = room.step(side);
        if !layout.contains(next) {
            layout.add_room(next);
        } else if rng.next_f64() >= loop_prob {
            candidates.remove(i);
            continue;
        }
        layout.open_edge(room, next);
        bb.put(keys::ROOM_COUNT, Value::Int(layout.room_count() as i64));
        bb.put(keys::LAYOUT, Value::Layout(layout));
        return Ok(Status::Success);
    }
    Ok(Status::Failure)
}

/// `(action :do "start-room")`
pub struct StartRoom;

impl Executor for StartRoom {
    fn execute(&self, _: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error> {
        exec_start_room(ctx.bb)
    }
}

/// `(action :do "grow-step" :loop-prob 0.3)`
pub struct GrowStep;

impl Executor for GrowStep {
    fn params(&self) -> &[Param] {
        const P: [Param; 1] = [Param::optional("loop-prob", ParamType::Probability)];
        &P
    }

    fn execute(&self, node: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error> {
        let loop_prob = node.num_attr("loop-prob")?.unwrap_or(0.0);
        exec_grow_step(ctx.bb, ctx.rng, loop_prob)
    }
}

/// Core leaves plus `start-room` and `grow-step`.
pub fn dungeon_registry() -> Registry {
    let mut r = Registry::with_core();
    r.register_action("start-room", StartRoom);
    r.register_action("grow-step", GrowStep);
    r
}

/// The start-once-then-grow tree: a selector whose first branch places the
/// start room while `start_done` is false and whose second branch grows.
pub fn dungeon_tree(loop_prob: f64) -> TreeSpec {
    let start = NodeSpec::sequence(vec![
        NodeSpec::condition("flag")
            .with_attr("key", keys::START_DONE)
            .with_attr("expected", "false"),
        NodeSpec::action("start-room"),
    ]);
    let mut grow = NodeSpec::action("grow-step");
    if loop_prob != 0.0 {
        grow = grow.with_attr("loop-prob", loop_prob);
    }
    TreeSpec::new(NodeSpec::selector(vec![start, grow]))
}

/// Grows an `n`-room layout by ticking [`dungeon_tree`] until `room_count`
/// reaches `n`, with a budget of `64 * n` ticks.
pub fn generate_layout(n: usize, seed: u64, loop_prob: f64) -> Result<DungeonLayout, Error> {
    let mut bb = Blackboard::new();
    bb.put(keys::START_DONE, Value::Bool(false));
    let mut rng = RandomStream::new(seed);
    let target = n.max(1) as f64;
    let stop = move |bb: &Blackboard| bb.number(keys::ROOM_COUNT).is_some_and(|c| c >= target);
    run_generation(
        &dungeon_tree(loop_prob),
        &mut bb,
        &mut rng,
        &dungeon_registry(),
        RunMode::Loop {
            stop: &stop,
            max_ticks: 64 * n.max(1) as u64,
        },
        None,
    )?;
    bb.remove(keys::LAYOUT)
        .and_then(|v| match v {
            Value::Layout(l) => Some(l),
            _ => None,
        })
        .ok_or(Error::NoLayout)
}

/// Picks a room segment for every room whose openings equal its doors.
///
/// Lookup order per room: exact match on the doors, exact match after the
/// game's remap, then any segment open on at least those sides.
pub fn instantiate_level(
    layout: &DungeonLayout,
    lib: &SegmentLibrary,
    game: &str,
    rng: &mut RandomStream,
) -> Result<LevelMap, Error> {
    if lib.game(game).is_none() {
        return Err(Error::UnknownGame(game.to_owned()));
    }
    let mut level = LevelMap::new();
    for room in layout.rooms() {
        let want = layout.doors(room);
        let mut candidates = lib.openings_candidates_raw(game, want, MatchMode::Exact);
        if candidates.is_empty() {
            candidates = lib.openings_candidates(game, want, MatchMode::Exact);
        }
        if candidates.is_empty() {
            candidates = lib.openings_candidates(game, want, MatchMode::Superset);
        }
        let seg = rng.choose(&candidates).ok_or_else(|| Error::NoMatch {
            game: game.to_owned(),
            want,
        })?;
        level.place(room, seg)?;
    }
    Ok(level)
}

/// [`instantiate_level`] followed by [`assemble_level`].
pub fn instantiate_layout(
    layout: &DungeonLayout,
    lib: &SegmentLibrary,
    game: &str,
    rng: &mut RandomStream,
) -> Result<TileGrid, Error> {
    assemble_level(&instantiate_level(layout, lib, game, rng)?, lib)
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, VecDeque};

    use super::*;

    fn connected(layout: &DungeonLayout) -> bool {
        let mut adj: BTreeMap<Coord, Vec<Coord>> = BTreeMap::new();
        for (a, b) in layout.edges() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let Some(start) = layout.rooms().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in adj.get(&c).into_iter().flatten() {
                if seen.insert(*n) {
                    queue.push_back(*n);
                }
            }
        }
        seen.len() == layout.room_count()
    }

    #[test]
    fn start_room_is_closed() {
        let mut bb = Blackboard::new();
        assert_eq!(exec_start_room(&mut bb), Ok(Status::Success));
        let layout = bb.get_layout(keys::LAYOUT).unwrap().unwrap();
        assert_eq!(layout.rooms().collect::<Vec<_>>(), [Coord::ORIGIN]);
        assert_eq!(layout.edge_count(), 0);
        assert_eq!(exec_start_room(&mut bb), Err(Error::StartRoomExists));
    }

    #[test]
    fn grow_without_layout_is_error() {
        let mut rng = RandomStream::new(0);
        assert_eq!(
            exec_grow_step(&mut Blackboard::new(), &mut rng, 0.0),
            Err(Error::NoLayout)
        );
    }

    #[test]
    fn first_growth_adds_neighbour() {
        for seed in 0..20 {
            let mut bb = Blackboard::new();
            let mut rng = RandomStream::new(seed);
            exec_start_room(&mut bb).unwrap();
            assert_eq!(exec_grow_step(&mut bb, &mut rng, 0.0), Ok(Status::Success));
            let layout = bb.get_layout(keys::LAYOUT).unwrap().unwrap();
            assert_eq!(layout.room_count(), 2);
            let (a, b) = layout.edges().next().unwrap();
            assert!(a.direction_to(b).is_some());
            assert!(layout.contains(Coord::ORIGIN));
            assert_eq!(bb.get_int(keys::ROOM_COUNT), Ok(Some(&2)));
        }
    }

    #[test]
    fn loop_prob_one_closes_a_cycle() {
        let square = [(0, 0), (1, 0), (0, 1), (1, 1)].map(|(x, y)| Coord::new(x, y));
        let mut layout = DungeonLayout::new();
        for c in square {
            layout.add_room(c);
        }
        layout.open_edge(square[0], square[1]);
        layout.open_edge(square[0], square[2]);
        layout.open_edge(square[1], square[3]);
        let interior = edge(square[2], square[3]);
        // find a seed whose first draw lands on the closed interior edge
        let closed = layout.closed_sides();
        let seed = (0..1000)
            .find(|s| {
                let (room, side) = closed[RandomStream::new(*s).index(closed.len())];
                edge(room, room.step(side)) == interior
            })
            .unwrap();
        let mut bb = Blackboard::new();
        bb.put(keys::LAYOUT, Value::Layout(layout));
        bb.put(keys::ROOM_COUNT, Value::Int(4));
        let mut rng = RandomStream::new(seed);
        assert_eq!(exec_grow_step(&mut bb, &mut rng, 1.0), Ok(Status::Success));
        let grown = bb.get_layout(keys::LAYOUT).unwrap().unwrap();
        assert_eq!(grown.room_count(), 4);
        assert_eq!(grown.edge_count(), 4);
        // a connected graph with as many edges as vertices has a cycle
        assert!(connected(grown) && grown.edge_count() >= grown.room_count());
    }

    #[test]
    fn layouts_have_exact_room_counts() {
        assert_eq!(
            generate_layout(1, 0, 0.0).unwrap(),
            DungeonLayout::single_room(Coord::ORIGIN)
        );
        for seed in 0..30 {
            let layout = generate_layout(10, seed, 0.0).unwrap();
            assert_eq!(layout.room_count(), 10);
            assert_eq!(layout.edge_count(), 9);
            assert!(connected(&layout));
        }
    }

    #[test]
    fn json_form() {
        let mut layout = DungeonLayout::single_room(Coord::new(0, 0));
        layout.add_room(Coord::new(0, -1));
        layout.open_edge(Coord::new(0, 0), Coord::new(0, -1));
        let json = serde_json::to_string(&layout).unwrap();
        assert_eq!(json, r#"{"rooms":[[0,-1],[0,0]],"edges":[[[0,-1],[0,0]]]}"#);
        let back: DungeonLayout = serde_json::from_str(&json).unwrap();
        assert_eq!(back, layout);
        assert!(serde_json::from_str::<DungeonLayout>(
            r#"{"rooms":[[0,0]],"edges":[[[0,0],[1,0]]]}"#
        )
        .is_err());
    }
}
